"""Similarity reductions, separation identities, and the explicit solution."""

import dataclasses

import pytest

from wavesym.detsys import ExponentialCase, PowerCase
from wavesym.expr import (
    RAT0, RAT1, T, U, X, Y, add, div, exp_, expand, fn, format_expr, jet,
    ln_, mul, neg, param, pow_, rat, sub, substitute, vanishes,
)
from wavesym.reduction import (
    ReductionError, TrivialInvariants, builtin_reduction, explicit_solution,
    explicit_solution_residual, invariance_check, proportional_mod_heads,
    reduce, separation_check,
)
from wavesym import reference

c = param("c")
m, p, q = param("m"), param("p"), param("q")


class TestBuiltinSpecs:
    def test_case_i_v1_invariants(self):
        spec = builtin_reduction("i", "v1")
        assert spec.invariant_coords[0][1] == div(Y, X)
        assert spec.invariant_coords[1][1] == T
        assert spec.dependent_invariant == sub(U, mul(2, c, ln_(X)))
        assert all(invariance_check(spec).values())

    def test_case_i_v4_invariants(self):
        spec = builtin_reduction("i", "v4")
        assert [name for name, _ in spec.invariant_coords] == ["x", "y"]
        assert all(invariance_check(spec).values())

    def test_case_ii_specs_pass_invariance(self):
        for gen in ("v1", "v4"):
            spec = builtin_reduction("ii", gen)
            assert all(invariance_check(spec).values())

    def test_case_ii_v1_shift_sign_is_minus(self):
        # the invariant (u + e2/e1)*x^(-2*e1) forces u = theta*x^(2*e1) - e2/e1
        spec = builtin_reduction("ii", "v1")
        e1, e2 = param("e1"), param("e2")
        grow = exp_(mul(2, e1, ln_(X)))
        th = fn("theta", [div(Y, X), T])
        assert expand(sub(spec.ansatz, sub(mul(th, grow), div(e2, e1)))) == RAT0
        # the printed plus-shift version fails the invariance check
        plus = dataclasses.replace(spec, dependent_invariant=mul(
            sub(U, div(e2, e1)), exp_(neg(mul(2, e1, ln_(X))))))
        assert not all(invariance_check(plus).values())

    def test_trivial_generators(self):
        for case_id in ("i", "ii"):
            for gen, coords in (("v2", ("y", "t", "u")),
                                ("v3", ("x", "t", "u")),
                                ("v5", ("x", "y", "u"))):
                out = builtin_reduction(case_id, gen)
                assert isinstance(out, TrivialInvariants)
                assert out.coordinates == coords

    def test_unknown_pair(self):
        with pytest.raises(ReductionError):
            builtin_reduction("iii", "v1")


class TestReduce:
    def test_case_i_v1_matches_reference(self):
        eq = reduce(builtin_reduction("i", "v1"))
        assert eq.elimination_verified
        assert eq.reference_verdict is True
        # structural comparison against the reference form as well
        ref = reference.reduced_form_case_i_v1(param("K"), c)
        assert expand(sub(eq.expr, expand(ref))) == RAT0
        # and by plain numeric sampling (same opaque-function sampler on
        # both sides)
        from wavesym.expr import equal_numeric
        assert equal_numeric(eq.expr, ref, n_points=50, tol=1e-9, box=(0.4, 1.6))

    def test_case_i_v4_matches_reference_up_to_K(self):
        eq = reduce(builtin_reduction("i", "v4"))
        assert eq.reference_verdict is True
        # engine form = K * reference form exactly
        ref = reference.reduced_form_case_i_v4(param("K"))
        assert vanishes(sub(eq.expr, expand(mul(param("K"), ref))))

    def test_case_ii_v1_reference_at_e1_1(self):
        eq = reduce(builtin_reduction("ii", "v1"))
        assert eq.elimination_verified
        assert eq.reference_verdict is False       # e1^(1/e1) factor, flagged
        assert eq.reference_verdict_e1_1 is True
        assert "power_case_reduced_factor" in eq.flags
        assert "power_case_slot_swap" in eq.flags

    def test_case_ii_v4_reference_at_e1_1(self):
        eq = reduce(builtin_reduction("ii", "v4"))
        assert eq.elimination_verified
        assert eq.reference_verdict_e1_1 is True

    def test_reduced_equations_free_of_original_coordinates(self):
        for case_id, gen, keep in (
            ("i", "v1", set()), ("ii", "v1", set()),
            ("i", "v4", {X, Y}), ("ii", "v4", {X, Y}),
        ):
            eq = reduce(builtin_reduction(case_id, gen))
            from wavesym.expr import atoms_of, Base
            bases = {a for a in atoms_of(eq.expr) if type(a) is Base}
            assert bases & {X, Y, T} <= keep
            assert T not in bases

    def test_perturbed_ansatz_rejected(self):
        spec = builtin_reduction("ii", "v1")
        e1, e2 = param("e1"), param("e2")
        bad_growth = exp_(add(mul(2, e1, ln_(X)), ln_(X)))  # x^(2*e1+1)
        bad = dataclasses.replace(
            spec,
            ansatz=sub(mul(fn("theta", [div(Y, X), T]), bad_growth), div(e2, e1)),
        )
        with pytest.raises(ReductionError):
            reduce(bad)

    def test_proportionality_sampler_detects_mismatch(self):
        w0 = fn("w", [X])
        assert proportional_mod_heads(mul(2, w0), w0, {"w"})
        assert not proportional_mod_heads(add(w0, X), w0, {"w"})


class TestSeparation:
    def test_case_i_identity(self):
        rep = separation_check("i")
        assert rep["identity"] and rep["mode"] == "additive"

    def test_case_ii_identity(self):
        rep = separation_check("ii")
        assert rep["identity"] and rep["mode"] == "multiplicative"

    def test_negative_controls(self):
        assert not separation_check("i", flip_constant_sign=True)["identity"]
        assert not separation_check("ii", flip_constant_sign=True)["identity"]


class TestExplicitSolution:
    def test_derived_constraint(self):
        out = explicit_solution_residual(m, p, q)
        # 1 + K*(m^2 + p^2) = 0, i.e. m^2 + p^2 = -1/K
        expect = add(RAT1, mul(param("K"), pow_(m, 2)), mul(param("K"), pow_(p, 2)))
        assert expand(sub(out["constraint"], expect)) == RAT0
        assert out["matches_reference"] is False
        assert out["flag"] == "explicit_constraint_sign"

    def test_constant_profile_is_not_a_solution(self):
        out = explicit_solution_residual(rat(0), rat(0), q)
        assert expand(out["constraint"]) == RAT1  # 1 = 0 is impossible

    def test_full_model_residual_vanishes_under_constraint(self):
        sol = explicit_solution(m, p, q)
        assert sol["residual_zero"]

    def test_concrete_instance(self):
        sol = explicit_solution(rat(1), rat(0), rat(0))
        assert sol["residual_zero"]
        assert format_expr(sol["k_constraint"]) == "-1"
