"""Command line front end: ``ncresidue {residue,verify,ft-check,cocycle,conv-check}``.

Exit codes: 0 success, 1 numerical check failure, 2 spec or usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import build_operator
from .errors import NCResidueError, SpecError
from .graded import sphere_quadrature
from .specfile import FORMATS, Settings, load_spec
from .symbols import CutoffFunction

log = logging.getLogger("ncresidue")

EXIT_OK, EXIT_FAIL, EXIT_SPEC = 0, 1, 2


def _c(z) -> dict | None:
    if z is None:
        return None
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _residue_rows(reports) -> list[dict]:
    rows = []
    for i, rep in enumerate(reports):
        point = " ".join(f"{v:g}" for v in rep["x"])
        for method in ("wodzicki", "ponge", "groupoidal", "groupoidal_symbol"):
            entry = rep.get(method)
            if entry is None:
                continue
            rows.append({"point": point, "method": method, "value": entry["value"]["re"],
                         "imag": entry["value"]["im"], "error": entry.get("error")})
    return rows


def _report_point(rep) -> dict:
    out = {"x": list(rep.x), "operator": rep.operator, "ok": rep.ok, "failures": list(rep.failures),
           "agreement": dict(rep.agreement)}
    if rep.wodzicki is not None:
        out["wodzicki"] = {"value": _c(rep.wodzicki), "error": rep.wodzicki_error}
    if rep.ponge is not None:
        out["ponge"] = {"value": _c(rep.ponge), "error": None}
    if rep.groupoidal is not None:
        gr = rep.groupoidal
        out["groupoidal"] = {
            "value": _c(gr.value),
            "error": gr.spread,
            "per_s": {f"{s:.12g}": _c(v) for s, v in gr.per_s.items()},
            "spread": gr.spread,
            "accepted": gr.accepted,
            "short_circuit": gr.short_circuit,
            "numeric_value": _c(gr.numeric_value),
        }
    if rep.equivalence is not None:
        eq = rep.equivalence
        out["groupoidal_symbol"] = {
            "value": _c(eq.groupoidal),
            "error": eq.relative_delta * max(abs(eq.ponge), 1e-300),
            "certified": eq.certified,
            "relative_delta": eq.relative_delta,
            "per_s_c0": {f"{s:.12g}": _c(v) for s, v in eq.per_s_c0.items()},
        }
    return out


def _write(report: dict, rows: list[dict], fmt: str, out: str | None) -> None:
    text = _render(report, rows, fmt)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text, encoding="utf-8")
    if fmt != "csv":
        # flat table alongside the primary report
        path.with_suffix(".csv").write_text(_render(report, rows, "csv"), encoding="utf-8")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _render(report: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, default=_json_default) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        fields = list(rows[0]) if rows else ["point", "method", "value", "imag", "error"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    lines = [f"# {report['tool']['name']} {report['tool']['version']}  command={report['command']}"]
    for row in rows:
        lines.append("  ".join(f"{k}={v}" for k, v in row.items()))
    s = report["summary"]
    lines.append(f"summary: passed={s['passed']} failed={s['failed']} elapsed={report['elapsed_s']:.2f}s")
    return "\n".join(lines) + "\n"


def _base_report(command: str, settings: dict, elapsed: float, passed: int, failed: int) -> dict:
    return {
        "tool": {"name": "ncresidue", "version": __version__},
        "command": command,
        "settings": settings,
        "summary": {"passed": passed, "failed": failed},
        "elapsed_s": elapsed,
    }


def _parse_s_set(text: str | None):
    if text is None:
        return None
    try:
        vals = [float(eval_fraction(v)) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(f"cannot parse --s-set {text!r}", field="s_set") from exc
    if not vals or any(v <= 0 or v == 1 for v in vals):
        raise SpecError("--s-set needs positive values different from 1", field="s_set")
    return vals


def eval_fraction(text: str) -> float:
    """``"1/3"`` -> 0.333..., ``"2"`` -> 2.0."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def cmd_residue(args) -> int:
    from .residue import residue_report

    overrides = {"s_set": _parse_s_set(args.s_set), "tolerance": args.tol, "seed": args.seed,
                 "format": args.format}
    settings: Settings = load_spec(args.spec, overrides)
    grading = settings.grading_obj
    cutoff = CutoffFunction(settings.cutoff["r0"], settings.cutoff["r1"], grading)
    P = build_operator(settings.operator, grading, cutoff)
    rule = sphere_quadrature(grading.dim, settings.sphere_degree)
    start = time.perf_counter()
    points = []
    for x in settings.points:
        try:
            rep = residue_report(P, np.asarray(x), settings.s_set, settings.tolerance, rule)
            points.append(_report_point(rep))
        except NCResidueError as exc:
            points.append({"x": list(x), "operator": P.name, "ok": False, "failures": [str(exc)], "agreement": {}})
    failed = sum(not p["ok"] for p in points)
    report = _base_report("residue", settings.to_dict(), time.perf_counter() - start, len(points) - failed, failed)
    report["points"] = points
    _write(report, _residue_rows(points), settings.format, args.out)
    return EXIT_FAIL if failed else EXIT_OK


def _run_checks(command: str, suite: str, args, runner=None) -> int:
    from .verify import run_suite

    if runner is None:
        checks, elapsed = run_suite(suite, tol=args.tol, seed=args.seed, threads=args.threads)
    else:
        start = time.perf_counter()
        checks = runner()
        elapsed = time.perf_counter() - start
    failed = [c for c in checks if not c.passed]
    settings = {"suite": suite, "tolerance": args.tol, "seed": args.seed, "threads": args.threads}
    report = _base_report(command, settings, elapsed, len(checks) - len(failed), len(failed))
    report["checks"] = [c.to_dict() for c in checks]
    rows = [{"point": c.suite, "method": c.name, "value": c.measured, "imag": 0.0,
             "error": abs(c.measured - c.expected)} for c in checks]
    _write(report, rows, args.format, args.out)
    for c in failed:
        print(f"FAIL {c.name}: measured {c.measured:.6g}, expected {c.expected:.6g}, tol {c.tolerance:.3g} "
              f"({c.detail})", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args) -> int:
    return _run_checks("verify", args.suite, args)


def cmd_ft_check(args) -> int:
    from .homog_dist import ft_log
    from .graded import Grading
    from .symbols import PseudoHomogeneousTerm, kernel_term_to_symbol_term, norm_power_term
    from .verify import _check

    def runner():
        out = []
        for d in args.dims:
            g = Grading.trivial(d)
            term = PseudoHomogeneousTerm(g, 0, None, norm_power_term(g, 0))
            for n in args.xi_norms:
                xi = np.zeros(d)
                xi[0] = n
                got = kernel_term_to_symbol_term(term, np.zeros(d), xi=xi).value
                want = ft_log(d, xi)
                tol = args.tol if args.tol is not None else 1e-3
                out.append(_check("ft", f"FT log|z| d={d} |xi|={n:g}", got.real, want, tol * abs(want)))
        return out

    return _run_checks("ft-check", "ft", args, runner)


def cmd_cocycle(args) -> int:
    from .homog_dist import ExtendedHomogeneousDistribution, bump, c0, dilation_cocycle
    from .specfile import parse_grading
    from .verify import _check, _graded_u

    try:
        g = parse_grading(args.grading)
    except ValueError as exc:
        raise SpecError(str(exc), field="grading") from exc
    s_set = _parse_s_set(args.s_set) or [0.5, 2.0, 3.0]

    def runner():
        u = (lambda z: np.sum(z * z, axis=-1) ** (-g.d_H / 2.0)) if g.is_trivial else _graded_u
        dist = ExtendedHomogeneousDistribution(g, u)
        phi = bump(1.0)
        c = c0(u, sphere_quadrature(g.dim, 60 if g.dim <= 3 else 16), g)
        tol = args.tol if args.tol is not None else 1e-4
        out = []
        for s in s_set:
            got = dilation_cocycle(dist, s, phi)
            want = s ** (-g.d_H) * math.log(s) * c
            out.append(_check("cocycle", f"dilation cocycle {g.label()} s={s:g}", got.real, want.real,
                              tol * (1 + abs(c)), deviation=abs(got - want)))
        return out

    return _run_checks("cocycle", "cocycle", args, runner)


def cmd_conv_check(args) -> int:
    from .verify import suite_conv

    return _run_checks("conv-check", "conv", args,
                       lambda: suite_conv(tol=args.tol, seed=args.seed, threads=args.threads, resolution=args.grid))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here (a .csv table is written alongside)")
    common.add_argument("--format", choices=FORMATS, default=None, help="report format (default json)")
    common.add_argument("--tol", type=float, default=None, help="override tolerances")
    common.add_argument("--seed", type=int, default=None, help="sampling seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for grid convolution")
    common.add_argument("--s-set", default=None, help="comma separated dilation parameters, e.g. 1/3,1/2,2,3")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ncresidue", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ncresidue {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("residue", parents=[common], help="residues of the operator in a spec file")
    p.add_argument("--spec", required=True, help="operator spec (YAML)")
    p.set_defaults(func=cmd_residue)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite over the catalog")
    p.add_argument("suite", choices=["ft", "cocycle", "conv", "equivalence", "all"])
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ft-check", parents=[common], help="Fourier transform of log|z| against its closed form")
    p.add_argument("--dims", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--xi-norms", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    p.set_defaults(func=cmd_ft_check)

    p = sub.add_parser("cocycle", parents=[common], help="dilation cocycle of a critical norm power")
    p.add_argument("--grading", default="heisenberg(1,0)")
    p.set_defaults(func=cmd_cocycle)

    p = sub.add_parser("conv-check", parents=[common], help="commutator and trace engine on H_1")
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(func=cmd_conv_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SPEC if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command != "residue":
        if args.format is None:
            args.format = "json"
        if args.seed is None:
            args.seed = 0
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except NCResidueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
