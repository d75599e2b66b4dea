"""Command-line driver: derive | classify | reduce | verify | report-all.

Every command assembles a deterministic report (text or JSON; identical
config and version give byte-identical output) and exits 0 when all checks
pass, 1 when a mathematical check fails, 2 on a usage or configuration
error.  Known disagreements with the bundled reference results are always
attached under ``discrepancy_flags``.

Note: the classify command follows the reference's expectation that the
polynomial ansatz yields a five-dimensional algebra.  The engine actually
finds more generators (rotation, and for the exponential family the
quadratic conformal fields), so classify at the default degree reports the
larger space, flags the discrepancy, and exits 1 on the dimension check by
design; the engine-level checks (exact residuals, containment of the
reference basis, its commutator table) are reported separately."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from . import __version__, reference
from .detsys import (
    AnsatzSpec, DetSysError, ExponentialCase, Generic, PowerCase,
    ansatz_solve, extract_determining,
    opaque_vectorfield, reference_implication_report,
)
from .expr import format_expr, param, rat
from .liealg import commutator_table, decompose_field, jacobi_check
from .numverify import (
    DEFAULT_PARAMS, GridSpec, NumVerifyError, ResidualReport, default_grid,
    fd_residual, first_integral_drift, flow_transport_check,
    reconstruct_case_i_v4, verify_reduction_numeric,
)
from .reduction import (
    ReductionError, TrivialInvariants, builtin_reduction,
    explicit_solution, explicit_solution_residual, invariance_check, reduce,
    separation_check,
)

SCHEMA_VERSION = 1


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    case: str = "i"
    generator: str = "v1"
    degree: int = 2
    params: dict = dc_field(default_factory=dict)   # name -> Fraction
    grid_n: tuple = (21, 21, 21)
    box: tuple | None = None
    tol: float = 1e-6
    eps: float = 0.3
    ode_step: float = 1e-5
    fmt: str = "text"
    out: str | None = None

    def echo(self) -> dict:
        return {
            "command": self.command,
            "case": self.case,
            "generator": self.generator,
            "degree": self.degree,
            "params": {k: str(v) for k, v in sorted(self.params.items())},
            "grid_n": list(self.grid_n),
            "box": [list(b) for b in self.box] if self.box else None,
            "tol": self.tol,
            "eps": self.eps,
            "ode_step": self.ode_step,
        }


def _parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as err:
        raise ConfigError(f"bad rational {text!r}: {err}") from None


def _family(config: RunConfig):
    p = config.params

    def sym(name):
        return rat(p[name]) if name in p else param(name)

    try:
        if config.case == "i":
            return ExponentialCase(sym("K"), sym("c"))
        if config.case == "ii":
            return PowerCase(sym("L"), sym("e1"), sym("e2"))
        if config.case == "generic":
            return Generic()
    except DetSysError as err:
        raise ConfigError(str(err)) from None
    raise ConfigError(f"unknown case {config.case!r}")


def _numeric_params(config: RunConfig, key) -> dict:
    out = dict(DEFAULT_PARAMS[key])
    for name, value in config.params.items():
        if name in out or name in ("K", "c", "L", "e1", "e2", "c1",
                                   "c_sep", "m", "p", "q"):
            out[name] = float(value)
    return out


def _grid(config: RunConfig, key) -> GridSpec:
    g = default_grid(*key)
    return GridSpec(
        box=config.box or g.box,
        n=config.grid_n,
        h=g.h,
    )


# ---------------------------------------------------------------------------
# stages


def stage_derive(config: RunConfig) -> dict:
    ds = extract_determining(opaque_vectorfield(), Generic())
    implication = reference_implication_report(ds)
    return {
        "determining_system": ds.serializable(),
        "n_equations": len(ds),
        "reference_conditions": {
            name: verdict for name, verdict in sorted(implication.items())
        },
        "conditions_not_implied": sorted(
            n for n, v in implication.items() if not v["implied"]
        ),
        "passed": True,  # reporting stage; disagreements live in the flags
    }


def stage_classify(config: RunConfig) -> dict:
    if config.case not in ("i", "ii"):
        raise ConfigError("classify needs --case i or ii")
    fam = _family(config)
    space = ansatz_solve(fam, AnsatzSpec(config.degree))
    refbasis = (
        reference.case_i_basis(fam.c)
        if config.case == "i"
        else reference.case_ii_basis(fam.e1, fam.e2)
    )
    containment = []
    for k, rb in enumerate(refbasis):
        coeffs = decompose_field(space.basis, rb)
        containment.append(
            {
                "field": str(rb),
                "in_span": coeffs is not None,
                "coordinates": [format_expr(x) for x in coeffs] if coeffs else None,
            }
        )
    table = commutator_table(refbasis)
    triples = [
        (i, j, k, format_expr(c)) for i, j, k, c in table.structure_triples()
    ]
    expected = [
        (i, j, k, str(v)) for i, j, k, v in reference.STRUCTURE_TRIPLES
    ]
    table_match = triples == expected
    jac = jacobi_check(refbasis)
    dimension_match = space.dimension == 5
    passed = (
        space.certificate
        and all(c["in_span"] for c in containment)
        and table_match
        and all(jac.values())
        and dimension_match
    )
    note = None
    if not dimension_match:
        if space.dimension < 5:
            note = (
                f"dimension {space.dimension} < 5: ansatz degree "
                f"{config.degree} too small to hold the reference basis"
            )
        else:
            note = (
                f"dimension {space.dimension} > 5: the reference "
                "classification omits admitted generators "
                "(see discrepancy_flags: missing_rotation, "
                "exponential_conformal_symmetries, power_case_dimension)"
            )
    return {
        "degree": config.degree,
        "dimension": space.dimension,
        "dimension_matches_reference": dimension_match,
        "dimension_note": note,
        "basis": [str(b) for b in space.basis],
        "residual_certificate": space.certificate,
        "reference_basis_containment": containment,
        "reference_table_grid": table.grid_strings(),
        "reference_table_triples": triples,
        "reference_table_matches": table_match,
        "jacobi_all_zero": all(jac.values()),
        "passed": passed,
    }


def stage_reduce(config: RunConfig) -> dict:
    if config.case not in ("i", "ii"):
        raise ConfigError("reduce needs --case i or ii")
    fam = _family(config)
    spec_or_trivial = builtin_reduction(config.case, config.generator, fam)
    if isinstance(spec_or_trivial, TrivialInvariants):
        return {
            "generator": config.generator,
            "trivial_invariants": list(spec_or_trivial.coordinates),
            "note": "invariants: arbitrary function of the listed coordinates",
            "passed": True,
        }
    spec = spec_or_trivial
    inv = invariance_check(spec)
    eq = reduce(spec, fam)
    out = {
        "generator": config.generator,
        "invariant_coordinates": {
            name: format_expr(e) for name, e in spec.invariant_coords
        },
        "dependent_invariant": format_expr(spec.dependent_invariant),
        "ansatz": format_expr(spec.ansatz),
        "invariance_check": {k: bool(v) for k, v in inv.items()},
        "reduced_equation": format_expr(eq.expr),
        "elimination_verified": eq.elimination_verified,
        "reference_match": eq.reference_verdict,
        "reference_match_e1_1": eq.reference_verdict_e1_1,
        "flags": list(eq.flags),
    }
    checks = [all(inv.values()), eq.elimination_verified]
    checks.append(bool(eq.reference_verdict or eq.reference_verdict_e1_1))
    if config.case == "i" and config.generator == "v1":
        sep = separation_check("i")
        neg_sep = separation_check("i", flip_constant_sign=True)
        out["separation_identity"] = sep["identity"]
        out["separation_negative_control_fails"] = not neg_sep["identity"]
        checks += [sep["identity"], not neg_sep["identity"]]
    if config.case == "ii" and config.generator == "v1":
        sep = separation_check("ii")
        neg_sep = separation_check("ii", flip_constant_sign=True)
        out["separation_identity"] = sep["identity"]
        out["separation_negative_control_fails"] = not neg_sep["identity"]
        checks += [sep["identity"], not neg_sep["identity"]]
    if config.case == "i" and config.generator == "v4":
        m, p, q = param("m"), param("p"), param("q")
        con = explicit_solution_residual(m, p, q, fam)
        sol = explicit_solution(m, p, q, fam if isinstance(fam, ExponentialCase) else None)
        out["explicit_constraint"] = format_expr(con["constraint"])
        out["explicit_constraint_reference"] = format_expr(con["reference_constraint"])
        out["explicit_constraint_matches_reference"] = con["matches_reference"]
        out["explicit_solution_residual_zero"] = sol["residual_zero"]
        checks.append(sol["residual_zero"])
    out["passed"] = all(checks)
    return out


def _report_residual(r: ResidualReport) -> dict:
    return r.to_dict()


def stage_verify(config: RunConfig, csv_dir: str | None) -> dict:
    import os

    out: dict = {"reductions": {}, "csv_files": []}
    ok = True
    for case_id, gen in (("i", "v1"), ("i", "v4"), ("ii", "v1"), ("ii", "v4")):
        r = verify_reduction_numeric(
            case_id, gen,
            params=_numeric_params(config, (case_id, gen)),
            grid=_grid(config, (case_id, gen)),
            tol=config.tol,
            ode_step=config.ode_step,
        )
        out["reductions"][f"{case_id}_{gen}"] = _report_residual(r)
        ok = ok and r.passed
        if r.convergence and csv_dir is not None:
            path = os.path.join(csv_dir, f"convergence_{case_id}_{gen}.csv")
            with open(path, "w") as fh:
                fh.write("h,max_residual,rms_residual\n")
                for h, mx, rms in r.convergence:
                    fh.write(f"{h!r},{mx!r},{rms!r}\n")
            out["csv_files"].append(path)
        if r.convergence_factor is not None:
            # second-order truncation: order 2.0 +/- 0.5 per halving
            ok = ok and 2.0**1.5 <= r.convergence_factor <= 2.0**2.5

    # explicit planar solution and its violated-constraint control
    grid = _grid(config, ("i", "v4"))
    p = _numeric_params(config, ("i", "v4"))
    u, f = reconstruct_case_i_v4(p, grid)
    base_rep = fd_residual(u, grid, f, tol=config.tol)
    out["explicit_solution"] = _report_residual(base_rep)
    ok = ok and base_rep.passed
    m, pp = p["m"], p["p"]
    bad = dict(p)
    bad["K"] = -1.0 / (1.1 * (m * m + pp * pp))
    u_bad, f_bad = reconstruct_case_i_v4(bad, grid)
    bad_rep = fd_residual(u_bad, grid, f_bad, tol=config.tol)
    out["violated_constraint_residual"] = bad_rep.max_residual
    out["violated_constraint_detected"] = bad_rep.max_residual >= 1e-3
    ok = ok and out["violated_constraint_detected"]

    # flow transport for the five case (i) generators plus the non-symmetry
    c_val = rat(Fraction(p.get("c", 1.0)))  # exact value so flows compile numerically
    basis = reference.case_i_basis(c_val)
    transports = {}
    for k, v in enumerate(basis):
        t = flow_transport_check(u, f, v, config.eps, grid, base_report=base_rep,
                                 tol=config.tol)
        transports[f"v{k+1}"] = {
            "transported_max": t["transported"].max_residual,
            "ratio": t["ratio"],
            "within_factor": t["within_factor"],
        }
        ok = ok and t["within_factor"]
    from .liealg import VectorField
    from .expr import RAT0, jet

    control = flow_transport_check(
        u, f, VectorField(RAT0, RAT0, RAT0, jet("")), config.eps, grid,
        base_report=base_rep, tol=config.tol,
    )
    transports["u_du_control"] = {
        "transported_max": control["transported"].max_residual,
        "ratio": control["ratio"],
        "fails_by_1000x": control["ratio"] >= 1e3,
    }
    ok = ok and transports["u_du_control"]["fails_by_1000x"]
    out["flow_transport"] = transports

    drift = first_integral_drift(
        K=p.get("K", 1.0) if p.get("K", 1.0) > 0 else 1.0,
        c=p.get("c", 1.0), c1=p.get("c1", 1.0),
    )
    out["first_integral"] = {
        "drift": {f"{h!r}": d for h, d in sorted(drift["drift"].items(), reverse=True)},
        "order_estimate": drift["order_estimate"],
        "order_in_band": 3.5 <= drift["order_estimate"] <= 4.5,
    }
    ok = ok and out["first_integral"]["order_in_band"]
    out["passed"] = ok
    return out


# ---------------------------------------------------------------------------
# report assembly and rendering


def _assemble(config: RunConfig, stages: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "wavesym", "version": __version__},
        "config": config.echo(),
        "stages": stages,
        "discrepancy_flags": dict(sorted(reference.KNOWN_DISCREPANCIES.items())),
        "overall_pass": all(s.get("passed", True) for s in stages.values()),
    }


def _render_text(report: dict) -> str:
    lines = []
    w = lines.append
    tool = report["tool"]
    w(f"{tool['name']} {tool['version']} -- schema {report['schema_version']}")
    w(f"command: {report['config']['command']}")
    w("")

    def emit(obj, indent=0):
        pad = "  " * indent
        if isinstance(obj, dict):
            for k, v in obj.items():
                if isinstance(v, (dict, list)) and v:
                    w(f"{pad}{k}:")
                    emit(v, indent + 1)
                else:
                    w(f"{pad}{k}: {v}")
        elif isinstance(obj, list):
            for item in obj:
                if isinstance(item, (dict, list)):
                    w(f"{pad}-")
                    emit(item, indent + 1)
                else:
                    w(f"{pad}- {item}")

    for name, stage in report["stages"].items():
        w(f"[{name}]")
        emit(stage, 1)
        w("")
    w("[discrepancy_flags]")
    for k, v in report["discrepancy_flags"].items():
        w(f"  {k}: {v}")
    w("")
    w(f"overall_pass: {report['overall_pass']}")
    return "\n".join(lines) + "\n"


def _emit(report: dict, config: RunConfig) -> None:
    if config.fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        text = _render_text(report)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wavesym",
        description=(
            "Symmetry engine for u_tt = f(u)*(u_xx + u_yy): determining "
            "system, exact classification, similarity reductions, numeric "
            "verification."
        ),
    )
    ap.add_argument("command", choices=["derive", "classify", "reduce", "verify", "report-all"])
    ap.add_argument("--case", default=None, choices=["i", "ii", "generic"])
    ap.add_argument("--generator", default="v1",
                    choices=["v1", "v2", "v3", "v4", "v5"])
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--param", action="append", default=[],
                    metavar="NAME=RATIONAL", help="family/solution parameter")
    ap.add_argument("--grid", default="21,21,21", metavar="NX,NY,NT")
    ap.add_argument("--box", default=None,
                    metavar="X0,X1,Y0,Y1,T0,T1")
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--eps", type=float, default=0.3)
    ap.add_argument("--ode-step", type=float, default=1e-5)
    ap.add_argument("--format", dest="fmt", default="text", choices=["text", "json"])
    ap.add_argument("--out", default=None)
    ap.add_argument("--config", default=None, help="JSON config file (flags win)")
    return ap


def _config_from_args(args) -> RunConfig:
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    params = {}
    for kv in file_cfg.get("params", []):
        name, _, value = kv.partition("=")
        params[name] = _parse_rational(value)
    for kv in args.param:
        name, _, value = kv.partition("=")
        if not _:
            raise ConfigError(f"--param needs NAME=VALUE, got {kv!r}")
        params[name] = _parse_rational(value)
    try:
        grid_n = tuple(int(x) for x in (args.grid or file_cfg.get("grid", "21,21,21")).split(","))
        if len(grid_n) != 3 or min(grid_n) < 3:
            raise ValueError("grid needs three axis counts >= 3")
    except ValueError as err:
        raise ConfigError(f"bad --grid: {err}") from None
    box = None
    box_text = args.box or file_cfg.get("box")
    if box_text:
        try:
            vals = [float(x) for x in box_text.split(",")]
            if len(vals) != 6:
                raise ValueError("need six numbers")
            box = ((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5]))
            if any(lo >= hi for lo, hi in box):
                raise ValueError("each interval needs lo < hi")
        except ValueError as err:
            raise ConfigError(f"bad --box: {err}") from None
    case = args.case or file_cfg.get("case") or ("generic" if args.command == "derive" else "i")
    return RunConfig(
        command=args.command,
        case=case,
        generator=args.generator or file_cfg.get("generator", "v1"),
        degree=args.degree if args.degree is not None else file_cfg.get("degree", 2),
        params=params,
        grid_n=grid_n,
        box=box,
        tol=args.tol,
        eps=args.eps,
        ode_step=args.ode_step,
        fmt=args.fmt,
        out=args.out,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except (ConfigError, OSError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    import os

    csv_dir = os.path.dirname(config.out) or "." if config.out else "."
    stages: dict = {}
    try:
        if config.command == "derive":
            stages["derive"] = stage_derive(config)
        elif config.command == "classify":
            stages["classify"] = stage_classify(config)
        elif config.command == "reduce":
            stages["reduce"] = stage_reduce(config)
        elif config.command == "verify":
            stages["verify"] = stage_verify(config, csv_dir)
        else:  # report-all
            stages["derive"] = stage_derive(config)
            for case in ("i", "ii"):
                cc = RunConfig(**{**config.__dict__, "case": case})
                stages[f"classify_{case}"] = stage_classify(cc)
            for case, gen in (("i", "v1"), ("i", "v4"), ("ii", "v1"), ("ii", "v4")):
                cc = RunConfig(**{**config.__dict__, "case": case, "generator": gen})
                stages[f"reduce_{case}_{gen}"] = stage_reduce(cc)
            stages["verify"] = stage_verify(config, csv_dir)
    except (ConfigError,) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (DetSysError, ReductionError, NumVerifyError) as err:
        print(f"check failed: {err}", file=sys.stderr)
        return 1

    report = _assemble(config, stages)
    _emit(report, config)
    return 0 if report["overall_pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
