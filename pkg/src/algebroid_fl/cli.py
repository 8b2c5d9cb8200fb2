"""Command-line front end.

Exit codes: 0 success, 1 linearizability conditions fail, 2 bad input,
3 algorithmic failure (heuristic, inversion, exactness, output mismatch).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

from . import example as ex
from .algebra import ContextMismatch, ParseError, Poly
from .algebroid import AlgebroidError, reduced_components
from .geometry import (
    GeometryError,
    KForm,
    PolyMap,
    VecField,
    compose,
    invert_triangular,
    jacobian_determinant,
)
from .linearizer import (
    ConditionsNotMet,
    ControlSystem,
    HeuristicExhausted,
    LinearizationTrace,
    LinearizerError,
    OmegaHints,
    algorithm_I,
    algorithm_II,
    assess_output,
    classical_check,
)
from .sysfile import InputError, SystemFile, load

EXIT_OK, EXIT_CONDITIONS, EXIT_INPUT, EXIT_ALGORITHM = 0, 1, 2, 3
METHODS = ("algebroid1", "algebroid2", "both")


@dataclass
class Report:
    command: str
    exit_code: int = EXIT_OK
    verdicts: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    error: str | None = None
    timings: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "exit_code": self.exit_code,
            "verdicts": self.verdicts,
            "traces": self.traces,
            "output": self.output,
            "warnings": self.warnings,
            "notes": self.notes,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.timings is not None:
            out["timings"] = self.timings
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# serialization helpers


def _strs(v) -> list[str]:
    return [str(c) for c in v]


def _form(w: KForm | None):
    return None if w is None else [str(c) for c in w.components()]


def _map(m: PolyMap | None):
    return None if m is None else [str(c) for c in m.components]


def trace_to_dict(trace: LinearizationTrace) -> dict:
    n = trace.system.n
    records = []
    for r in trace.records:
        if trace.method == "algebroid2":
            records.append({"i": r.i, "f": _strs(r.f), "g": _strs(r.g), "omega": _form(r.omega),
                            "nu": _form(r.nu)})
        else:
            dropped = [k for k in range(n) if k not in r.active]
            rec = {"i": r.i, "context": list(r.f.ctx.names), "active": list(r.active),
                   "f": _strs(reduced_components(r.f, dropped)),
                   "g": _strs(reduced_components(r.g, dropped)), "phi": _map(r.phi), "slot": r.slot}
            if r.phi is not None:
                rec["phi_inverse"] = _map(r.phi.inverse)
                rec["phi_target"] = list(r.phi.target.names)
            records.append(rec)
    out = {"method": trace.method, "records": records,
           "y": None if trace.y is None else str(trace.y)}
    if trace.composed is not None:
        out["composed_map"] = _map(trace.composed)
    return out


def _diag_dict(diag) -> dict:
    return {"rank": diag.rank, "n": diag.n, "accessible": diag.accessible, "involutive": diag.involutive,
            "linearizable": diag.linearizable,
            "non_involutive_pair": list(diag.non_involutive_pair) if diag.non_involutive_pair else None}


def _warning_dicts(warnings) -> list[dict]:
    return [{"message": w.message, "locus": str(w.locus)} for w in warnings]


# ---------------------------------------------------------------------------
# commands


def cmd_check(path: str) -> Report:
    report = Report("check")
    sf = load(path)
    system = sf.system()
    diag = classical_check(system)
    report.verdicts["classical"] = _diag_dict(diag)
    report.exit_code = EXIT_OK if diag.linearizable else EXIT_CONDITIONS
    report.timings = {"classical_check": diag.timing}
    return report


def _run_method(method: str, system: ControlSystem, hints: OmegaHints, map_hints,
                max_degree: int) -> LinearizationTrace:
    if method == "algebroid2":
        return algorithm_II(system, hints, max_degree)
    return algorithm_I(system, map_hints, max_degree)


def linearize_system(system: ControlSystem, method: str, hints: OmegaHints | None = None,
                     map_hints=None, max_degree: int = 4, skip_check: bool = False) -> Report:
    report = Report("linearize")
    report.timings = {}
    hints = hints or OmegaHints()
    if not skip_check:
        diag = classical_check(system)
        report.verdicts["classical"] = _diag_dict(diag)
        report.timings["classical_check"] = diag.timing
        if not diag.linearizable:
            report.exit_code = EXIT_CONDITIONS
            report.error = "classical linearizability conditions fail"
            return report
    methods = ["algebroid1", "algebroid2"] if method == "both" else [method]
    results = {}
    for m in methods:
        start = time.perf_counter()
        try:
            trace = _run_method(m, system, hints, map_hints, max_degree)
        except (LinearizerError, GeometryError, AlgebroidError) as exc:
            report.timings[m] = time.perf_counter() - start
            report.exit_code = EXIT_ALGORITHM
            where = ""
            if isinstance(exc, HeuristicExhausted) and exc.iteration is not None:
                where = f" (iteration {exc.iteration})"
            report.error = f"{m}: {type(exc).__name__}{where}: {exc}"
            report.verdicts.setdefault("exactness", False if type(exc).__name__ == "NotExact" else None)
            return report
        report.timings[m] = time.perf_counter() - start
        report.traces[m] = trace_to_dict(trace)
        report.warnings.extend(_warning_dicts(trace.warnings))
        assessment = assess_output(trace.y, system)
        report.warnings.extend(_warning_dicts(assessment.warnings))
        results[m] = assessment
        report.output[m] = {
            "y": str(assessment.y),
            "y_normalized": str(assessment.y_normalized),
            "relative_degree": assessment.relative_degree,
            "jacobian_determinant": None if assessment.jacobian_det is None else str(assessment.jacobian_det),
        }
        if m == "algebroid2":
            report.verdicts["integrability"] = True
            report.verdicts["exactness"] = True
        if assessment.relative_degree != system.n:
            report.exit_code = EXIT_ALGORITHM
            report.error = f"{m}: output has relative degree {assessment.relative_degree}, expected {system.n}"
            return report
    if method == "both":
        a, b = results["algebroid1"].y_normalized, results["algebroid2"].y_normalized
        report.verdicts["outputs_agree"] = a == b
        if a != b:
            report.exit_code = EXIT_ALGORITHM
            report.error = f"normalized outputs differ: {a} vs {b}"
            return report
    y = results[methods[-1]]
    report.output["y"] = str(y.y_normalized)
    report.output["relative_degree"] = y.relative_degree
    return report


def cmd_linearize(path: str, method: str, max_degree: int = 4, skip_check: bool = False) -> Report:
    sf = load(path)
    return linearize_system(sf.system(), method, sf.omega_hints(), sf.map_hints(), max_degree, skip_check)


def invert_polymap(phi: PolyMap) -> Report:
    report = Report("invert-map")
    start = time.perf_counter()
    det = jacobian_determinant(phi)
    report.output["jacobian_determinant"] = str(det)
    if not det.is_constant():
        report.warnings.append({"message": "Jacobian determinant is not constant", "locus": str(det)})
    try:
        inverse = invert_triangular(phi)
    except GeometryError as exc:
        report.exit_code = EXIT_ALGORITHM
        report.error = f"{type(exc).__name__}: {exc}"
        report.timings = {"invert": time.perf_counter() - start}
        return report
    report.output["inverse"] = _map(inverse)
    report.output["inverse_variables"] = list(inverse.ctx.names)
    report.verdicts["round_trip"] = compose(inverse, phi).is_identity() and compose(phi, inverse).is_identity()
    report.timings = {"invert": time.perf_counter() - start}
    return report


def cmd_invert_map(path: str) -> Report:
    return invert_polymap(load(path).polymap())


def example_file(hints: bool = True) -> SystemFile:
    """The bundled example as an input file (reconstructed drift)."""
    omega = tuple((i, tuple(w)) for i, w in enumerate(ex.OMEGA_HINTS)) if hints else ()
    phi = ((0, tuple(ex.PHI0)), (1, tuple(ex.PHI1))) if hints else ()
    return SystemFile(ex.NAMES, tuple(ex.F_RECONSTRUCTED), tuple(ex.G), omega, phi)


def _compare(rows: list, name: str, got, expected) -> None:
    rows.append({"name": name, "match": got == expected, "computed": str(got), "expected": str(expected)})


def cmd_example() -> Report:
    """Run both algorithms on the bundled example and compare with the reference values."""
    report = Report("example")
    report.notes.extend(ex.stated_drift_report())
    system = ex.system()
    X, Z = ex.X, ex.Z
    rows: list[dict] = []
    start = time.perf_counter()
    tr2 = algorithm_II(system, ex.omega_hints())
    t2 = time.perf_counter() - start
    recs = tr2.records
    _compare(rows, "algebroid2 g1", recs[1].g, ex.vec(X, ex.G1))
    _compare(rows, "algebroid2 g2", recs[2].g, ex.vec(X, ex.G2))
    _compare(rows, "algebroid2 nu2", recs[2].nu, KForm.parse_one_form(X, ex.NU2))
    _compare(rows, "algebroid2 nu1", recs[1].nu, KForm.parse_one_form(X, ex.NU1))
    _compare(rows, "algebroid2 nu0", recs[0].nu, KForm.parse_one_form(X, ex.NU0))
    _compare(rows, "algebroid2 y", tr2.y, X.parse(ex.Y))
    start = time.perf_counter()
    tr1 = algorithm_I(system, ex.map_hints())
    t1 = time.perf_counter() - start
    stage1 = tr1.records[1]
    dropped = [k for k in range(3) if k not in stage1.active]
    _compare(rows, "algebroid1 phi0 inverse", tr1.records[0].phi.inverse, PolyMap.parse(Z, ex.PHI0_INV, X))
    _compare(rows, "algebroid1 f1", _strs(reduced_components(stage1.f, dropped)),
             _strs(reduced_components(ex.vec(Z, ex.F1_Z + ("0",)), [2])))
    _compare(rows, "algebroid1 g1", _strs(reduced_components(stage1.g, dropped)),
             _strs(reduced_components(ex.vec(Z, ex.G1_Z + ("0",)), [2])))
    _compare(rows, "algebroid1 y", tr1.y, X.parse(ex.Y))
    assessment = assess_output(tr2.y, system)
    _compare(rows, "relative degree", assessment.relative_degree, ex.RELATIVE_DEGREE)
    phi_map = PolyMap.parse(X, ex.PHI_MAP)
    _compare(rows, "output row map", assessment.row_map, phi_map)
    _compare(rows, "Jacobian determinant", jacobian_determinant(phi_map), X.parse(ex.PHI_MAP_DET))
    report.verdicts["comparisons"] = rows
    report.verdicts["all_match"] = all(r["match"] for r in rows)
    report.traces = {"algebroid2": trace_to_dict(tr2), "algebroid1": trace_to_dict(tr1)}
    report.output = {"y": str(tr2.y), "y_normalized": str(assessment.y_normalized),
                     "relative_degree": assessment.relative_degree}
    report.warnings.extend(_warning_dicts(tr2.warnings))
    report.timings = {"algebroid2": t2, "algebroid1": t1}
    report.exit_code = EXIT_OK if report.verdicts["all_match"] else EXIT_ALGORITHM
    return report


# ---------------------------------------------------------------------------
# text rendering


def render_text(report: Report) -> str:
    lines = [f"== {report.command} =="]
    for note in report.notes:
        lines.append(f"note: {note}")
    classical = report.verdicts.get("classical")
    if classical:
        lines.append(f"accessibility rank {classical['rank']} of {classical['n']}, "
                     f"involutive: {'yes' if classical['involutive'] else 'no'}, "
                     f"linearizable: {'yes' if classical['linearizable'] else 'no'}")
    for name, trace in sorted(report.traces.items()):
        lines.append(f"-- {name} --")
        for rec in trace["records"]:
            lines.append(f"  i={rec['i']}  g = ({', '.join(rec['g'])})")
            if rec.get("omega"):
                lines.append(f"       omega = ({', '.join(rec['omega'])})")
            if rec.get("nu"):
                lines.append(f"       nu = ({', '.join(rec['nu'])})")
            if rec.get("phi"):
                lines.append(f"       phi = ({', '.join(rec['phi'])}) -> {', '.join(rec['phi_target'])}")
        if trace.get("y"):
            lines.append(f"  y = {trace['y']}")
    for key in sorted(report.output):
        val = report.output[key]
        if isinstance(val, dict):
            lines.append(f"{key}: " + ", ".join(f"{k} = {val[k]}" for k in sorted(val)))
        elif isinstance(val, list):
            lines.append(f"{key}: ({', '.join(map(str, val))})")
        else:
            lines.append(f"{key}: {val}")
    for row in report.verdicts.get("comparisons", []):
        lines.append(f"  [{'match' if row['match'] else 'MISMATCH'}] {row['name']}")
        if not row["match"]:
            lines.append(f"      computed: {row['computed']}")
            lines.append(f"      expected: {row['expected']}")
    for key in ("round_trip", "outputs_agree"):
        if key in report.verdicts:
            lines.append(f"{key.replace('_', ' ')}: {'ok' if report.verdicts[key] else 'FAILED'}")
    for w in report.warnings:
        lines.append(f"warning: {w['message']}: {w['locus']} = 0")
    if report.error:
        lines.append(f"error: {report.error}")
    lines.append(f"exit code {report.exit_code}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="algebroid-fl",
        description="Exact linearizing outputs for single-input affine systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="rank and involutivity test of the controllability chain")
    p.add_argument("file")
    p.add_argument("--json", metavar="OUT", help="write the machine-readable report ('-' for stdout instead of the text report)")
    p.add_argument("--timings", action="store_true", help="include timings in the JSON report")

    p = sub.add_parser("linearize", help="compute a linearizing output")
    p.add_argument("file")
    p.add_argument("--method", choices=METHODS, default="algebroid2")
    p.add_argument("--max-ansatz-degree", type=int, default=4, metavar="K",
                   help="degree bound for exact-form and first-integral searches (default 4)")
    p.add_argument("--skip-check", action="store_true", help="do not require the classical conditions")
    p.add_argument("--json", metavar="OUT", help="write the machine-readable report ('-' for stdout instead of the text report)")
    p.add_argument("--timings", action="store_true", help="include timings in the JSON report")

    p = sub.add_parser("invert-map", help="invert a polynomial map by triangular elimination")
    p.add_argument("file")
    p.add_argument("--json", metavar="OUT", help="write the machine-readable report ('-' for stdout instead of the text report)")
    p.add_argument("--timings", action="store_true", help="include timings in the JSON report")

    p = sub.add_parser("example", help="run the bundled three-state example")
    p.add_argument("--emit", metavar="FILE", help="write the example as an input file and exit")
    p.add_argument("--no-hints", action="store_true", help="with --emit, leave out the omega/phi hints")
    p.add_argument("--json", metavar="OUT", help="write the machine-readable report ('-' for stdout instead of the text report)")
    p.add_argument("--timings", action="store_true", help="include timings in the JSON report")
    return parser


def _dispatch(args) -> Report:
    if args.command == "check":
        return cmd_check(args.file)
    if args.command == "linearize":
        if args.max_ansatz_degree < 1:
            raise InputError("--max-ansatz-degree must be at least 1")
        return cmd_linearize(args.file, args.method, args.max_ansatz_degree, args.skip_check)
    if args.command == "invert-map":
        return cmd_invert_map(args.file)
    return cmd_example()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "example" and args.emit:
        text = example_file(hints=not args.no_hints).dumps()
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.emit}")
        return EXIT_OK
    try:
        report = _dispatch(args)
    except (InputError, ParseError, ContextMismatch) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConditionsNotMet as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITIONS
    except (LinearizerError, GeometryError, AlgebroidError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM
    if not args.timings:
        report.timings = None
    if args.json == "-":
        sys.stdout.write(report.to_json())
        return report.exit_code
    sys.stdout.write(render_text(report))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
