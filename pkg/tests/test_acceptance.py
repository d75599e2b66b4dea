"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with  pytest tests/test_acceptance.py -v -s  to see the per-criterion
lines.  Three criteria (1, 2, 3) assert statements of the bundled reference
classification that the engine proves wrong (see discrepancy_flags in any
report and wavesym.reference.KNOWN_DISCREPANCIES): the reference omits the
rotation generator
-y*d/dx + x*d/dy (a symmetry for every f) and, for the exponential family,
the planar conformal fields, and lists the spurious condition
tau_t = phi_u.  Those tests fail by design, with the engine's
counterexamples printed; every attainable sub-check inside them passes and
is asserted first."""

import math
import random

import pytest

from conftest import rand_parseable, rand_raw_tree
from wavesym import reference
from wavesym.detsys import (
    AnsatzSpec, ExponentialCase, Generic, PowerCase, ansatz_solve,
    extract_determining, invariance_residual, on_shell, opaque_vectorfield,
    reference_implication_report,
)
from wavesym.expr import (
    Expr, RAT0, RAT1, add, expand, format_expr, fn, jet, max_jet_order, mul,
    neg, normalize, param, pow_, rat, sub, vanishes, SingularError,
)
from wavesym.jet import prolong_coeff_second, total_derivative
from wavesym.liealg import VectorField, commutator_table, decompose_field, jacobi_check
from wavesym.numverify import (
    DEFAULT_PARAMS, default_grid, fd_residual, first_integral_drift,
    flow_transport_check, reconstruct_case_i_v4, verify_reduction_numeric,
)
from wavesym.parser import parse
from wavesym.reduction import (
    builtin_reduction, explicit_solution, explicit_solution_residual,
    proportional_mod_heads, reduce, separation_check,
)

c = param("c")
e1, e2 = param("e1"), param("e2")


def line(n, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {n:2d} {name}: {status}{'  -- ' + detail if detail else ''}")
    return ok


def test_criterion_01_determining_system_fidelity():
    ds = extract_determining(opaque_vectorfield(), Generic())
    report = reference_implication_report(ds, n_samples=50, tol=1e-9)
    not_implied = sorted(n for n, v in report.items() if not v["implied"])
    ok = not not_implied
    line(1, "determining-system fidelity", ok,
         f"{len(report) - len(not_implied)}/{len(report)} reference conditions "
         f"implied; not implied: {not_implied or 'none'}")
    assert ok, (
        "criterion as stated is unattainable: the reference conditions "
        f"{not_implied} are not consequences of the invariance condition. "
        "xi_no_y/eta_no_x exclude the rotation -y*d/dx + x*d/dy, which is an "
        "exact symmetry for every smooth f (its on-shell invariance residual "
        "normalizes to 0 and rotated exact solutions still solve the "
        "equation); tau_t_matches_phi_u is violated by the reference's own "
        "generator t*d/dt - 2*c*d/du.  See wavesym.reference.KNOWN_DISCREPANCIES."
    )


def test_criterion_02_case_i_classification():
    fam = ExponentialCase()
    space = ansatz_solve(fam, AnsatzSpec(2))
    assert space.certificate, "a basis field failed the exact residual check"
    refbasis = reference.case_i_basis(fam.c)
    coords = [decompose_field(space.basis, rb) for rb in refbasis]
    contained = all(
        cs is not None and all(type(x).__name__ == "Rat" for x in cs)
        for cs in coords
    )
    assert contained, "reference basis not contained with rational coordinates"
    ok = space.dimension == 5
    line(2, "case (i) classification", ok,
         f"dimension {space.dimension} (reference claims 5); reference basis "
         f"contained with rational coordinates: {contained}; residual "
         f"certificate: {space.certificate}")
    assert ok, (
        "criterion as stated is unattainable: the degree-2 solution space is "
        f"{space.dimension}-dimensional, not 5.  Extra generators: the "
        "rotation -y*d/dx + x*d/dy and the planar conformal fields "
        "2xy*d/dx + (y^2-x^2)*d/dy + 4cy*d/du and (x^2-y^2)*d/dx + "
        "2xy*d/dy + 4cx*d/du, each with exactly-zero on-shell invariance "
        "residual.  See wavesym.reference.KNOWN_DISCREPANCIES."
    )


def test_criterion_03_case_ii_classification():
    fam = PowerCase()
    space = ansatz_solve(fam, AnsatzSpec(2))
    assert space.certificate
    refbasis = reference.case_ii_basis(fam.e1, fam.e2)
    coords = [decompose_field(space.basis, rb) for rb in refbasis]
    contained = all(
        cs is not None and all(type(x).__name__ == "Rat" for x in cs)
        for cs in coords
    )
    assert contained
    ok = space.dimension == 5
    line(3, "case (ii) classification", ok,
         f"dimension {space.dimension} (reference claims 5); reference basis "
         f"contained: {contained}")
    assert ok, (
        "criterion as stated is unattainable: the degree-2 solution space is "
        f"{space.dimension}-dimensional (the reference's five generators "
        "plus the rotation -y*d/dx + x*d/dy, whose on-shell invariance "
        "residual is exactly 0 for the power family too).  See "
        "wavesym.reference.KNOWN_DISCREPANCIES."
    )


def test_criterion_04_commutator_tables():
    t1 = commutator_table(reference.case_i_basis(c))
    t2 = commutator_table(reference.case_ii_basis(e1, e2))
    expected = [(i, j, k, rat(v)) for i, j, k, v in reference.STRUCTURE_TRIPLES]
    got1 = [(i, j, k, x) for i, j, k, x in t1.structure_triples()]
    got2 = [(i, j, k, x) for i, j, k, x in t2.structure_triples()]
    j1 = jacobi_check(reference.case_i_basis(c))
    j2 = jacobi_check(reference.case_ii_basis(e1, e2))
    ok = got1 == expected and got2 == expected and all(j1.values()) and all(j2.values())
    line(4, "commutator tables", ok,
         "both reference bases reproduce the bundled structure constants; "
         "tables entrywise identical; all 10+10 Jacobi triples vanish")
    assert got1 == expected
    assert got2 == expected
    assert all(j1.values()) and all(j2.values())
    assert ok


def test_criterion_05_reduced_equations():
    results = {}
    for case_id, gen in (("i", "v1"), ("i", "v4"), ("ii", "v1"), ("ii", "v4")):
        eq = reduce(builtin_reduction(case_id, gen))
        matched = bool(eq.reference_verdict) or bool(eq.reference_verdict_e1_1)
        results[(case_id, gen)] = (matched, eq.flags)
    flags_present = (
        "explicit_constraint_sign" in results[("i", "v4")][1]
        and "power_case_shift_sign" in results[("ii", "v1")][1]
        and "power_case_reduced_factor" in results[("ii", "v1")][1]
    )
    ok = all(m for m, _ in results.values()) and flags_present
    line(5, "reduced equations", ok,
         "all four reductions match the reference forms up to one overall "
         "nonzero factor (power cases compared at e1=1); documented "
         "discrepancies flagged")
    for key, (matched, _) in results.items():
        assert matched, key
    assert flags_present
    assert ok


def test_criterion_06_separated_solutions():
    rep_i = separation_check("i")
    rep_ii = separation_check("ii")
    neg_i = separation_check("i", flip_constant_sign=True)
    neg_ii = separation_check("ii", flip_constant_sign=True)
    ok = (rep_i["identity"] and rep_ii["identity"]
          and not neg_i["identity"] and not neg_ii["identity"])
    line(6, "separated solutions", ok,
         "additive (case i) and multiplicative (case ii, e1=1) separations "
         "are exact identities; flipped separation constant fails")
    assert rep_i["identity"] and rep_ii["identity"]
    assert not neg_i["identity"] and not neg_ii["identity"]


def test_criterion_07_numeric_reconstruction():
    r = verify_reduction_numeric("i", "v1", params={"K": 1.0, "c": 1.0, "c1": 1.0})
    drift = first_integral_drift(K=1.0, c=1.0, c1=1.0)
    ok = (
        r.max_residual <= 1e-6
        and r.convergence_factor is not None
        and 3.5 <= r.convergence_factor <= 4.5
        and 3.5 <= drift["order_estimate"] <= 4.5
    )
    line(7, "numeric reconstruction (i, v1)", ok,
         f"max residual {r.max_residual:.3e} <= 1e-6; refinement factor "
         f"{r.convergence_factor:.2f} in [3.5, 4.5]; first-integral drift "
         f"order {drift['order_estimate']:.2f}")
    assert r.max_residual <= 1e-6
    assert 3.5 <= r.convergence_factor <= 4.5
    assert 3.5 <= drift["order_estimate"] <= 4.5


def test_criterion_08_explicit_solution():
    m, p, q = param("m"), param("p"), param("q")
    con = explicit_solution_residual(m, p, q)
    derived = expand(con["constraint"])
    expect = add(RAT1, mul(param("K"), pow_(m, 2)), mul(param("K"), pow_(p, 2)))
    sign_as_derived = expand(sub(derived, expect)) == RAT0
    sol = explicit_solution(m, p, q)
    grid = default_grid("i", "v4")
    params = dict(DEFAULT_PARAMS[("i", "v4")])
    u, f = reconstruct_case_i_v4(params, grid)
    good = fd_residual(u, grid, f)
    bad_params = dict(params)
    bad_params["K"] = -1.0 / 1.1
    u_bad, f_bad = reconstruct_case_i_v4(bad_params, grid)
    bad = fd_residual(u_bad, grid, f_bad)
    ok = (sign_as_derived and sol["residual_zero"]
          and good.max_residual <= 1e-6 and bad.max_residual >= 1e-3)
    line(8, "explicit solution", ok,
         f"derived constraint 1 + K*(m^2+p^2) = 0 (sign as derived, not as "
         f"printed); symbolic residual 0: {sol['residual_zero']}; FD residual "
         f"{good.max_residual:.3e} <= 1e-6; 10% violation gives "
         f"{bad.max_residual:.3e} >= 1e-3")
    assert sign_as_derived
    assert sol["residual_zero"]
    assert good.max_residual <= 1e-6
    assert bad.max_residual >= 1e-3


def test_criterion_09_symmetry_transport():
    grid = default_grid("i", "v4")
    params = dict(DEFAULT_PARAMS[("i", "v4")])
    u, f = reconstruct_case_i_v4(params, grid)
    base = fd_residual(u, grid, f)
    ratios = {}
    for k, v in enumerate(reference.case_i_basis(rat(1))):
        out = flow_transport_check(u, f, v, 0.3, grid, base_report=base)
        ratios[f"v{k+1}"] = out["ratio"]
    control = flow_transport_check(
        u, f, VectorField(RAT0, RAT0, RAT0, jet("")), 0.3, grid, base_report=base
    )
    ok = all(r <= 10.0 for r in ratios.values()) and control["ratio"] >= 1e3
    line(9, "symmetry transport", ok,
         f"transport ratios {({k: round(v, 2) for k, v in ratios.items()})} "
         f"all <= 10; non-symmetry control ratio {control['ratio']:.1e} >= 1e3")
    for k, r in ratios.items():
        assert r <= 10.0, k
    assert control["ratio"] >= 1e3


def test_criterion_10_engine_invariants():
    rng = random.Random(515253)
    failures = []

    # third-order cancellation in all second-prolongation coefficients
    def rand_component(depth=1):
        parts = [rat(rng.randint(-2, 2))]
        for _ in range(rng.randint(0, 2)):
            parts.append(mul(
                rat(rng.randint(-2, 2)),
                rng.choice([parse("x"), parse("y"), parse("t"), jet("")]),
                rng.choice([RAT1, rng.choice([parse("x"), jet("")])]),
            ))
        return add(*parts)

    pairs = [(a, b) for a in "xyt" for b in "xyt"]
    for i in range(200):
        v = VectorField(*[rand_component() for _ in range(4)])
        d1, d2 = pairs[i % len(pairs)]
        if max_jet_order(prolong_coeff_second(v, d1, d2)) > 2:
            failures.append(("third-order", i))

    # total-derivative commutation
    from test_jet import rand_jet_expr
    for i in range(200):
        e = rand_jet_expr(rng)
        d1, d2 = rng.choice("xyt"), rng.choice("xyt")
        ab = total_derivative(total_derivative(e, d1), d2)
        ba = total_derivative(total_derivative(e, d2), d1)
        if expand(sub(ab, ba)) != RAT0:
            failures.append(("commutation", i))

    # parse/format round trip
    for i in range(200):
        e = rand_parseable(rng, rng.randint(1, 5))
        if parse(format_expr(e)) != normalize(e):
            failures.append(("round-trip", i))

    # normalize idempotence on raw trees up to depth 8
    done = 0
    while done < 200:
        e = rand_raw_tree(rng, rng.randint(1, 8))
        try:
            n1 = normalize(e)
        except SingularError:
            continue
        if normalize(n1) != n1:
            failures.append(("idempotence", done))
        done += 1

    ok = not failures
    line(10, "engine invariants", ok,
         "third-order cancellation, D-commutation, round trip, idempotence: "
         f"4 x 200 random instances, {len(failures)} failures")
    assert ok, failures
