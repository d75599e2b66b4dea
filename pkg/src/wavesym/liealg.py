"""Vector fields on (x, y, t, u)-space and their algebra.

A point symmetry generator is stored by its four components; brackets,
commutator tables with exact structure constants, Jacobi checks, and the
one-parameter flows of affine generators live here."""

from __future__ import annotations

from dataclasses import dataclass

from .expr import (
    Expr, RAT0, RAT1, add, atoms_of, base, diff, div, exp_, expand,
    format_expr, jet, max_jet_order, mul, neg, normalize, param,
    substitute, collect_atoms,
)
from .linalg import rank, solve_span

__all__ = [
    "VectorField", "CommutatorTable", "FlowMap", "LieAlgError",
    "FlowUnsupportedError", "COORDS", "EPS",
    "bracket", "commutator_table", "jacobi_check", "flow",
]


class LieAlgError(Exception):
    pass


class FlowUnsupportedError(LieAlgError):
    pass


X, Y, T = base("x"), base("y"), base("t")
U = jet("")
COORDS = (X, Y, T, U)
EPS = param("eps")


@dataclass(frozen=True)
class VectorField:
    """Generator xi*d/dx + eta*d/dy + tau*d/dt + phi*d/du with components
    depending on (x, y, t, u) only."""

    xi: Expr
    eta: Expr
    tau: Expr
    phi: Expr

    def __post_init__(self):
        for name, comp in self.items():
            comp = normalize(comp)
            if max_jet_order(comp) >= 1:
                raise LieAlgError(
                    f"component {name} depends on a jet coordinate of order >= 1"
                )
            object.__setattr__(self, name, comp)

    def items(self):
        return (
            ("xi", self.xi), ("eta", self.eta),
            ("tau", self.tau), ("phi", self.phi),
        )

    @property
    def components(self):
        return (self.xi, self.eta, self.tau, self.phi)

    def apply(self, g: Expr) -> Expr:
        """Directional action xi*g_x + eta*g_y + tau*g_t + phi*g_u."""
        return add(*[mul(c, diff(g, z)) for c, z in zip(self.components, COORDS)])

    def is_zero(self) -> bool:
        return all(expand(c) == RAT0 for c in self.components)

    def __str__(self):
        parts = []
        for comp, sym in zip(self.components, ("d/dx", "d/dy", "d/dt", "d/du")):
            if expand(comp) != RAT0:
                parts.append(f"({format_expr(comp)})*{sym}")
        return " + ".join(parts) if parts else "0"

    def scaled(self, k) -> "VectorField":
        return VectorField(*[mul(k, c) for c in self.components])

    def plus(self, other: "VectorField") -> "VectorField":
        return VectorField(*[add(a, b) for a, b in zip(self.components, other.components)])


def bracket(v: VectorField, w: VectorField) -> VectorField:
    """Lie bracket [v, w]: component k is v(w^k) - w(v^k)."""
    return VectorField(
        *[
            expand(add(v.apply(wk), neg(w.apply(vk))))
            for vk, wk in zip(v.components, w.components)
        ]
    )


def _component_coordinates(fields):
    """Common coordinatisation of fields by polynomial coefficients of the
    components over (x, y, t, u) monomials.  Returns (keys, vectors)."""
    collected = [
        [collect_atoms(c, COORDS) for c in f.components] for f in fields
    ]
    keys = []
    seen = set()
    for comps in collected:
        for slot, table in enumerate(comps):
            for k in table:
                if (slot, k) not in seen:
                    seen.add((slot, k))
                    keys.append((slot, k))
    keys.sort(key=lambda sk: (sk[0], tuple((a.sort_key(), p) for a, p in sk[1])))
    vectors = [
        [comps[slot].get(k, RAT0) for slot, k in keys] for comps in collected
    ]
    return keys, vectors


@dataclass
class CommutatorTable:
    """All pairwise brackets of a basis, decomposed exactly in that basis.

    entries[(i, j)] is the coefficient list of [v_i, v_j], or None when the
    bracket falls outside the span (non-closure)."""

    fields: list
    entries: dict

    @property
    def n(self) -> int:
        return len(self.fields)

    def closed(self) -> bool:
        return all(v is not None for v in self.entries.values())

    def structure_triples(self):
        """Sorted (i, j, k, coefficient) with nonzero coefficients, 0-based."""
        out = []
        for (i, j), coeffs in sorted(self.entries.items()):
            if coeffs is None:
                continue
            for k, c in enumerate(coeffs):
                if c != RAT0:
                    out.append((i, j, k, c))
        return out

    def grid_strings(self, names=None):
        names = names or [f"v{i+1}" for i in range(self.n)]
        grid = []
        for i in range(self.n):
            row = []
            for j in range(self.n):
                coeffs = self.entries[(i, j)]
                if coeffs is None:
                    row.append("<not in span>")
                    continue
                parts = []
                for k, c in enumerate(coeffs):
                    if c == RAT0:
                        continue
                    if c == RAT1:
                        parts.append(names[k])
                    elif expand(c) == expand(neg(RAT1)):
                        parts.append(f"-{names[k]}")
                    else:
                        parts.append(f"({format_expr(c)})*{names[k]}")
                row.append(" + ".join(parts) if parts else "0")
            grid.append(row)
        return grid


def commutator_table(basis) -> CommutatorTable:
    basis = list(basis)
    n = len(basis)
    keys, vectors = _component_coordinates(basis)
    m = len(keys)
    if rank([list(v) for v in vectors], m) != n:
        raise LieAlgError("basis fields are linearly dependent")
    entries = {}
    for i in range(n):
        entries[(i, i)] = [RAT0] * n
        for j in range(i + 1, n):
            br = bracket(basis[i], basis[j])
            _, brvec = _component_coordinates(basis + [br])
            target = brvec[-1]
            cols = [v + [RAT0] * (len(target) - len(v)) for v in brvec[:-1]]
            coeffs = solve_span(cols, target)
            entries[(i, j)] = coeffs
            entries[(j, i)] = None if coeffs is None else [expand(neg(c)) for c in coeffs]
    return CommutatorTable(basis, entries)


def decompose_field(basis, target: VectorField):
    """Exact coordinates of ``target`` in the span of ``basis`` (component
    polynomial coefficients are compared), or None when outside the span."""
    _, vectors = _component_coordinates(list(basis) + [target])
    return solve_span(vectors[:-1], vectors[-1])


def jacobi_check(basis) -> dict:
    """Jacobi identity residuals for every triple; components must expand
    to exactly zero."""
    basis = list(basis)
    n = len(basis)
    report = {}
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                s = bracket(basis[i], bracket(basis[j], basis[k])).plus(
                    bracket(basis[j], bracket(basis[k], basis[i]))
                ).plus(bracket(basis[k], bracket(basis[i], basis[j])))
                report[(i, j, k)] = s.is_zero()
    return report


@dataclass(frozen=True)
class FlowMap:
    """One-parameter group action: new coordinates as expressions in
    (x, y, t, u, eps).  At eps = 0 every map is the identity."""

    maps: tuple  # (x-map, y-map, t-map, u-map)

    def at(self, eps_value) -> tuple:
        return tuple(substitute(m, {EPS: eps_value}) for m in self.maps)

    def inverse(self) -> "FlowMap":
        return FlowMap(tuple(substitute(m, {EPS: neg(EPS)}) for m in self.maps))

    def __str__(self):
        names = ("x", "y", "t", "u")
        return "; ".join(f"{n} -> {format_expr(m)}" for n, m in zip(names, self.maps))


def flow(v: VectorField) -> FlowMap:
    """Exact flow of a generator whose components are affine and decoupled
    (component k depends only on coordinate k), which covers every
    generator of this equation's symmetry algebras and all their linear
    combinations.  Coupled or non-affine fields are unsupported."""
    maps = []
    coordset = set(COORDS)
    for comp, z in zip(v.components, COORDS):
        a = expand(diff(comp, z))
        b = expand(add(comp, neg(mul(a, z))))
        if atoms_of(a) & coordset or atoms_of(b) & coordset:
            raise FlowUnsupportedError(
                f"component for {format_expr(z)} is not affine-decoupled: {format_expr(comp)}"
            )
        if a == RAT0:
            maps.append(add(z, mul(EPS, b)))
        else:
            g = exp_(mul(a, EPS))
            maps.append(add(mul(g, z), mul(add(g, neg(RAT1)), div(b, a))))
    return FlowMap(tuple(maps))
