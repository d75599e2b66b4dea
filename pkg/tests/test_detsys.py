"""Invariance condition, on-shell rewriting, determining system, solving."""

import pytest

from wavesym.detsys import (
    AnsatzSpec, DetSysError, ExponentialCase, Generic, PowerCase, UTag,
    ansatz_solve, check_reference_system, extract_determining,
    invariance_residual, model_residual, on_shell, opaque_vectorfield,
    reference_implication_report, split_u_dependence,
)
from wavesym.expr import (
    RAT0, RAT1, T, U, X, Y, add, div, exp_, expand, fn, jet, jets_of, mul,
    neg, param, pow_, rat, sub, vanishes,
)
from wavesym.jet import total_derivative
from wavesym.liealg import VectorField, decompose_field
from wavesym import reference

c, e1, e2 = param("c"), param("e1"), param("e2")


class TestFamilies:
    def test_exponential(self):
        fam = ExponentialCase()
        assert fam.f_expr() == mul(param("K"), exp_(div(U, c)))
        # f' = f/c for this family
        assert expand(sub(fam.fu_expr(), div(fam.f_expr(), c))) == RAT0

    def test_power_ratio(self):
        fam = PowerCase()
        g = add(mul(e1, U), e2)
        # f/f' = e1*u + e2
        ratio = mul(fam.f_expr(), pow_(fam.fu_expr(), -1))
        assert vanishes(sub(ratio, g))

    def test_degenerate_parameters_refused(self):
        with pytest.raises(DetSysError):
            ExponentialCase(c=rat(0))
        with pytest.raises(DetSysError):
            PowerCase(e1=rat(0))
        with pytest.raises(DetSysError):
            ExponentialCase(K=rat(0))

    def test_power_with_integer_reciprocal_exponent_folds(self):
        # e1 = 1/3 gives f = L*(u/3 + e2)^3, a genuine polynomial
        fam = PowerCase(e1=rat(1, 3))
        f = fam.f_expr()
        assert not any(True for _ in ())  # structural: no exp/ln nodes left
        from wavesym.expr import Exp, Ln, _walk
        assert not [n for n in _walk(f) if type(n) in (Exp, Ln)]


class TestOnShell:
    def test_u_tt_replaced(self):
        assert on_shell(jet("tt")) == mul(fn("f", [U]), add(jet("xx"), jet("yy")))

    def test_untouched_jets(self):
        assert on_shell(jet("x")) == jet("x")

    def test_third_order_consequences(self):
        rhs = mul(fn("f", [U]), add(jet("xx"), jet("yy")))
        expect = expand(total_derivative(rhs, "x"))
        assert expand(on_shell(jet("ttx"))) == expect

    def test_no_double_t_jets_remain(self):
        e = add(jet("tt"), jet("ttt"), mul(jet("tty"), jet("x")))
        out = on_shell(e)
        assert all(j.idx.count("t") < 2 for j in jets_of(out))


class TestInvarianceResidual:
    def test_translations_vanish_identically(self):
        for comp in range(3):
            parts = [RAT0] * 4
            parts[comp] = RAT1
            v = VectorField(*parts)
            assert expand(on_shell(invariance_residual(v))) == RAT0

    def test_case_i_basis_vanishes_on_shell(self):
        fam = ExponentialCase()
        for v in reference.case_i_basis(c):
            assert vanishes(on_shell(invariance_residual(v, fam), fam))

    def test_case_ii_basis_vanishes_on_shell(self):
        fam = PowerCase()
        for v in reference.case_ii_basis(e1, e2):
            assert vanishes(on_shell(invariance_residual(v, fam), fam))

    def test_rotation_vanishes_for_all_families(self):
        rot = reference.rotation_field()
        for fam in (Generic(), ExponentialCase(), PowerCase()):
            assert vanishes(on_shell(invariance_residual(rot, fam), fam))

    def test_on_shell_needed_exactly_when_tau_nonzero(self):
        fam = ExponentialCase()
        basis = reference.case_i_basis(c)
        # v1 has tau = 0, so no u_tt enters: the residual vanishes raw
        assert expand(invariance_residual(basis[0], fam)) == RAT0
        # v4 scales t: its residual is -2*(u_tt - f*(u_xx+u_yy)), zero only on-shell
        raw = invariance_residual(basis[3], fam)
        assert expand(raw) != RAT0
        assert vanishes(on_shell(raw, fam))

    def test_non_symmetry_detected(self):
        w = VectorField(RAT0, RAT0, RAT0, U)
        fam = ExponentialCase()
        assert not vanishes(on_shell(invariance_residual(w, fam), fam))


class TestExtractDetermining:
    def test_generic_system_shape(self):
        ds = extract_determining(opaque_vectorfield(), Generic())
        assert len(ds) == 34
        by_key = {str(k): e for k, e in ds.entries}
        # the u_xt coefficient couples tau_x to xi_t through f
        row = by_key["u_xt"]
        vnames = {n.name for n in __import__("wavesym.expr", fromlist=["fn_nodes_of"]).fn_nodes_of(row)}
        assert vnames == {"xi", "tau", "f"}
        # the u_xy coefficient is a single equation in xi_y + eta_x
        row = by_key["u_xy"]
        vnames = {n.name for n in __import__("wavesym.expr", fromlist=["fn_nodes_of"]).fn_nodes_of(row)}
        assert vnames == {"xi", "eta", "f"}

    def test_entries_free_of_first_order_jets(self):
        ds = extract_determining(opaque_vectorfield(), Generic())
        for _, e in ds.entries:
            assert all(j.order == 0 for j in jets_of(e))

    def test_zero_field_trivial(self):
        ds = extract_determining(VectorField(RAT0, RAT0, RAT0, RAT0), Generic())
        assert len(ds) == 0

    def test_family_entries_tagged(self):
        fam = ExponentialCase()
        v = VectorField(X, Y, RAT0, mul(2, c))
        ds = extract_determining(v, fam)
        assert len(ds) == 0  # v1 is a symmetry: every piece vanishes

    def test_serializable(self):
        ds = extract_determining(opaque_vectorfield(), Generic())
        rows = ds.serializable()
        assert all(set(r) == {"origin_monomial", "expression_text"} for r in rows)

    def test_collect_reassembles_on_shell_residual(self):
        # brute-force oracle: the tagged coefficients, multiplied back onto
        # their jet monomials, reproduce the on-shell residual exactly
        from wavesym.expr import collect
        v = opaque_vectorfield()
        res = expand(on_shell(invariance_residual(v, Generic()), Generic()))
        variables = {j for j in jets_of(res) if j.order >= 1}
        table = collect(res, variables)
        back = add(*[mul(k.as_expr(), coeff) for k, coeff in table.items()])
        assert expand(sub(back, res)) == RAT0


class TestSplitU:
    def test_exponential_tags(self):
        e = add(
            mul(param("A"), U, exp_(div(U, c))),
            mul(param("B"), exp_(div(U, c))),
            param("C"),
        )
        pieces = split_u_dependence(e)
        assert len(pieces) == 3
        powers = sorted((t.u_power, t.factor is not None) for t in pieces)
        assert powers == [(0, False), (0, True), (1, True)]

    def test_denominator_clearing(self):
        g = add(mul(e1, U), e2)
        e = add(mul(param("A"), pow_(g, -1)), param("B"))
        pieces = split_u_dependence(e)
        # multiplied through by g: A + B*(e1*u + e2) splits into u^0 and u^1
        assert {t.u_power for t in pieces} == {0, 1}


class TestReferenceSystem:
    def test_case_i_fields_clean_except_known_defect(self):
        fam = ExponentialCase()
        for k, v in enumerate(reference.case_i_basis(c)):
            rep = check_reference_system(v, fam)
            bad = {n for n, (res, ok) in rep.items() if not ok}
            assert bad <= {"tau_t_matches_phi_u"}
            if k == 3:  # the t-scaling generator exposes the defect
                assert bad == {"tau_t_matches_phi_u"}

    def test_non_symmetry_flagged(self):
        rep = check_reference_system(VectorField(RAT0, RAT0, RAT0, U), Generic())
        bad = {n for n, (res, ok) in rep.items() if not ok}
        assert "phi_scale_x" in bad and "phi_scale_y" in bad

    def test_implication_report(self):
        ds = extract_determining(opaque_vectorfield(), Generic())
        rep = reference_implication_report(ds)
        not_implied = {n for n, v in rep.items() if not v["implied"]}
        # exactly the documented defects: the rotation-excluding split and
        # the tau_t = phi_u slip
        assert not_implied == {"xi_no_y", "eta_no_x", "tau_t_matches_phi_u"}


class TestAnsatzSolve:
    def test_generic_rejected(self):
        with pytest.raises(DetSysError):
            ansatz_solve(Generic())

    def test_case_i_degree_2(self):
        space = ansatz_solve(ExponentialCase(), AnsatzSpec(2))
        assert space.dimension == 8
        assert space.certificate
        for rb in reference.case_i_basis(c):
            coeffs = decompose_field(space.basis, rb)
            assert coeffs is not None
            assert all(type(x).__name__ == "Rat" for x in coeffs)
        rot = reference.rotation_field()
        assert decompose_field(space.basis, rot) is not None

    def test_case_ii_degree_2(self):
        space = ansatz_solve(PowerCase(), AnsatzSpec(2))
        assert space.dimension == 6
        assert space.certificate
        for rb in reference.case_ii_basis(e1, e2):
            assert decompose_field(space.basis, rb) is not None

    def test_degree_0_translations_only(self):
        space = ansatz_solve(ExponentialCase(), AnsatzSpec(0))
        assert space.dimension == 3
        for b in space.basis:
            assert expand(b.phi) == RAT0

    def test_monotonic_in_degree(self):
        fam = ExponentialCase()
        spaces = {d: ansatz_solve(fam, AnsatzSpec(d)) for d in (0, 1, 2)}
        for d in (0, 1):
            for b in spaces[d].basis:
                assert decompose_field(spaces[d + 1].basis, b) is not None

    def test_conformal_dimension_series(self):
        # the exponential family carries the planar conformal algebra: the
        # degree-d solution space holds the holomorphic polynomial fields of
        # degree <= d (2(d+1) real dimensions for d >= 1) plus the two
        # t-generators, giving 3, 6, 8, 10 for d = 0..3
        dims = [ansatz_solve(ExponentialCase(), AnsatzSpec(d)).dimension
                for d in (0, 1, 2, 3)]
        assert dims == [3, 6, 8, 10]

    def test_translation_floor_both_families(self):
        for fam in (ExponentialCase(), PowerCase()):
            space = ansatz_solve(fam, AnsatzSpec(1))
            for comp in range(3):
                parts = [RAT0] * 4
                parts[comp] = RAT1
                assert decompose_field(space.basis, VectorField(*parts)) is not None
