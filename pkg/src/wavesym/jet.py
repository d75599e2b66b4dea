"""Total derivatives on jet space and prolongation coefficients.

The total derivative in direction d acts as
``D_d e = de/dd + sum_J u_{J,d} * de/du_J`` over every jet coordinate J
actually present in the expression.  The first and second prolongation
coefficients of a point generator v with characteristic
``Q = phi - xi*u_x - eta*u_y - tau*u_t`` are::

    coeff_1(v, i)    = D_i Q   + xi*u_{xi}  + eta*u_{yi}  + tau*u_{ti}
    coeff_2(v, i, j) = D_i D_j Q + xi*u_{xij} + eta*u_{yij} + tau*u_{tij}

For point components every third-order jet cancels out of coeff_2 after
normalization, which the test suite checks as a structural invariant."""

from __future__ import annotations

from .expr import (
    Expr, RAT0, add, base, diff, expand, jet, jets_of, max_jet_order, mul, neg,
)
from .liealg import VectorField

__all__ = [
    "DIRECTIONS", "JetOrderError", "total_derivative", "characteristic",
    "prolong_coeff_first", "prolong_coeff_second",
]

DIRECTIONS = ("x", "y", "t")


class JetOrderError(Exception):
    pass


def _dir_name(d) -> str:
    name = d.name if hasattr(d, "name") else str(d)
    if name not in DIRECTIONS:
        raise ValueError(f"unknown total-derivative direction {name!r}")
    return name


def total_derivative(e: Expr, d) -> Expr:
    """D_d e; raises the maximal jet order by at most one (cap 4)."""
    name = _dir_name(d)
    if max_jet_order(e) > 3:
        raise JetOrderError(
            "total derivative of a 4th-order jet expression would exceed the order cap"
        )
    parts = [diff(e, base(name))]
    for j in sorted(jets_of(e), key=Expr.sort_key):
        dj = diff(e, j)
        if dj == RAT0:
            continue
        parts.append(mul(jet(j.idx + (name,)), dj))
    return add(*parts)


def characteristic(v: VectorField) -> Expr:
    """Q = phi - xi*u_x - eta*u_y - tau*u_t."""
    return add(
        v.phi,
        neg(mul(v.xi, jet("x"))),
        neg(mul(v.eta, jet("y"))),
        neg(mul(v.tau, jet("t"))),
    )


def prolong_coeff_first(v: VectorField, d) -> Expr:
    name = _dir_name(d)
    q = characteristic(v)
    return add(
        total_derivative(q, name),
        mul(v.xi, jet("x" + name)),
        mul(v.eta, jet("y" + name)),
        mul(v.tau, jet("t" + name)),
    )


def prolong_coeff_second(v: VectorField, d1, d2) -> Expr:
    n1, n2 = _dir_name(d1), _dir_name(d2)
    q = characteristic(v)
    return expand(
        add(
            total_derivative(total_derivative(q, n2), n1),
            mul(v.xi, jet("x" + n1 + n2)),
            mul(v.eta, jet("y" + n1 + n2)),
            mul(v.tau, jet("t" + n1 + n2)),
        )
    )
