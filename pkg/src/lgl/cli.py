"""Command line front end.

Exit codes: 0 ok, 1 validation findings, 2 usage or parse error,
3 supermodularity assumptions fail (or the lattice argmax breaks),
4 internal solver error.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path

from . import email_game as eg
from . import global_game as gg
from .equilibrium import assumption_report, extremal_equilibrium, sandwich_check
from .errors import (AssumptionViolation, BrokenLatticeArgmax, EmptySurvivors, GameFormatError,
                     IllConditionedProblem)
from .game import DECISION_TOL, validate_game
from .hierarchy import MAX_DEPTH, check_coherence, extract_hierarchy
from .icr import check_self_rationalizing, icr_solve, summary_rows
from .io import dump_game, dump_report, load_game

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE, EXIT_ASSUMPTION, EXIT_SOLVER = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive(text: str) -> float:
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _emit(out: Path | None, files: dict, main: str) -> None:
    """Write every file under ``out``; without ``out`` print the main one."""
    if out is None:
        sys.stdout.write(files[main])
        return
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)


def _load(path: str):
    try:
        return load_game(path)
    except FileNotFoundError:
        raise GameFormatError(f"{path}: no such file") from None


def _validation_json(g, supermodular=False) -> dict:
    found = validate_game(g, supermodular=supermodular)
    return {"game": g.name, "usable": not found,
            "violations": [{"code": v.code, "location": v.location, "message": v.message} for v in found]}


def cmd_validate(args) -> int:
    g = _load(args.game)
    report = _validation_json(g, args.supermodular)
    _emit(args.out, {"validation.json": dump_report(report)}, "validation.json")
    return EXIT_OK if report["usable"] else EXIT_FINDINGS


def _profile_json(g, zeta) -> list:
    labels, acts = g.characteristics.labels, g.lattice.actions
    return [[labels[c], b, acts[a]] for (c, b), a in sorted(zeta.items())]


def cmd_solve(args) -> int:
    g = _load(args.game)
    report = _validation_json(g)
    if not report["usable"]:
        _emit(args.out, {"validation.json": dump_report(report)}, "validation.json")
        return EXIT_FINDINGS
    assumptions = assumption_report(g)
    if not assumptions.ok and not args.force:
        print("solve: supermodularity assumptions fail; use --force to run elimination only",
              file=sys.stderr)
        for v in assumptions.violations[:20]:
            print(f"  {v}", file=sys.stderr)
        return EXIT_ASSUMPTION
    res = icr_solve(g, tol=args.tol)
    files = {
        "icr_trace.json": dump_report({"game": g.name, "rounds": res.rounds, "approximate": res.approximate,
                                       "trace": [m.to_json(g) for m in res.trace]}),
        "icr_summary.csv": _csv_text(["characteristic", "belief", "surviving", "eliminated", "round"],
                                     summary_rows(g, res)),
    }
    icr_report = {"game": g.name, "rounds": res.rounds, "S": res.S.to_json(g),
                  "fixed_point": check_self_rationalizing(g, res.S, args.tol).is_fixed_point}
    if assumptions.ok:
        top = extremal_equilibrium(g, "top", tol=args.tol)
        bottom = extremal_equilibrium(g, "bottom", tol=args.tol)
        sw = sandwich_check(g, res.S, top.zeta, bottom.zeta)
        files["equilibrium.json"] = dump_report({
            "game": g.name,
            "top": {"profile": _profile_json(g, top.zeta), "rounds": top.rounds,
                    "verified": top.verified.is_bne, "max_slack": top.verified.max_slack},
            "bottom": {"profile": _profile_json(g, bottom.zeta), "rounds": bottom.rounds,
                       "verified": bottom.verified.is_bne, "max_slack": bottom.verified.max_slack},
            "unique": top.zeta == bottom.zeta,
        })
        files["sandwich.json"] = dump_report({"game": g.name, "ok": sw.ok,
                                              "violations": [list(map(str, v)) for v in sw.violations]})
        icr_report["sandwich_ok"] = sw.ok
    else:
        icr_report["equilibria"] = "skipped: assumptions fail and --force was given"
    files["icr.json"] = dump_report(icr_report)
    _emit(args.out, files, "icr.json")
    return EXIT_OK


def _parse_grid(text: str | None) -> dict:
    """``"alpha=0.25,0.5;L=1.5,2"`` -> {"alpha": [0.25, 0.5], "L": [1.5, 2.0]}."""
    out: dict = {}
    if not text:
        return out
    for part in text.split(";"):
        if not part.strip():
            continue
        key, _, vals = part.partition("=")
        if not vals:
            raise ValueError(f"bad grid entry {part!r}")
        out[key.strip()] = [float(v) for v in vals.split(",") if v.strip()]
    return out


def _email_params(args, **overrides) -> eg.EmailGameParams:
    fields = dict(M=args.M, L=args.L, pi=args.pi, alpha=args.alpha, n_positions=args.n_positions,
                  max_signals=args.max_signals, buckets_per_unit=args.buckets, interval=args.interval)
    fields.update(overrides)
    return eg.EmailGameParams(**fields)


def cmd_email_game(args) -> int:
    try:
        grid = _parse_grid(args.grid)
        p = _email_params(args)
    except ValueError as exc:
        print(f"email-game: {exc}", file=sys.stderr)
        return EXIT_USAGE
    unknown = set(grid) - {"alpha", "L", "M"}
    if unknown:
        print(f"email-game: unknown grid keys {sorted(unknown)}", file=sys.stderr)
        return EXIT_USAGE
    g = eg.build_email_game(p)
    res = eg.contagion_check(p, g)
    analytics = {
        "params": {k: getattr(p, k) for k in ("M", "L", "pi", "alpha", "n_positions", "max_signals",
                                               "buckets_per_unit", "interval")},
        "contagion_function": eg.contagion_function(p.alpha),
        "risk_dominance_threshold": eg.risk_dominance_threshold(p.M, p.L),
        "pi_i": [eg.pi_i(p, i) for i in eg.positions(p)],
        "all_zero_unique": res.all_zero_unique,
        "rounds": res.rounds,
        "worlds": g.n_worlds,
    }
    files = {
        "game.json": dump_game(g),
        "contagion_front.csv": _csv_text(["round", "front_time", "eliminated"], res.front),
        "analytics.json": dump_report(analytics),
    }
    alphas = grid.get("alpha", [p.alpha])
    files["alpha_sweep.csv"] = _csv_text(["alpha", "contagion_function"],
                                         [(a, eg.contagion_function(a)) for a in sorted(alphas)])
    if grid:
        rows = []
        for M in grid.get("M", [p.M]):
            for L in grid.get("L", [p.L]):
                for a in alphas:
                    try:
                        q = _email_params(args, M=M, L=L, alpha=a)
                    except ValueError as exc:
                        print(f"email-game: {exc}", file=sys.stderr)
                        return EXIT_USAGE
                    r = eg.contagion_check(q)
                    rows.append((M, L, a, eg.contagion_function(a), eg.risk_dominance_threshold(M, L),
                                 int(r.all_zero_unique), r.rounds))
        files["grid.csv"] = _csv_text(["M", "L", "alpha", "contagion_function", "threshold",
                                       "all_zero_unique", "rounds"], rows)
    _emit(args.out, files, "analytics.json")
    return EXIT_OK


def cmd_global_game(args) -> int:
    try:
        grid = _parse_grid(args.grid)
    except ValueError as exc:
        print(f"global-game: {exc}", file=sys.stderr)
        return EXIT_USAGE
    g = _load(args.game) if args.game else gg.uniform_rank_fixture()
    found = validate_game(g)
    if found:
        _emit(args.out, {"validation.json": dump_report(_validation_json(g))}, "validation.json")
        return EXIT_FINDINGS
    st = gg.compute_statistics(g)
    res = icr_solve(g, tol=args.tol)
    cert = gg.uniqueness_certificate(st, args.eps, args.tol)
    S = {b: acts for (_, b), acts in res.S.items()}
    beliefs = []
    for b, x, r, urb, core, srd, nsrd, act in gg.region_rows(st, args.eps):
        beliefs.append({"belief": b, "x": x, "rank": r, "urb": bool(urb), "core": bool(core),
                        "srd": bool(srd), "nsrd": bool(nsrd), "certified": act,
                        "icr": sorted(S[b]) if b in S else None})
    sound = all(S.get(b) == {1} for b in cert.invest) and all(S.get(b) == {0} for b in cert.noninvest)
    report = {"game": g.name, "eps": args.eps, "invest_region": cert.invest,
              "noninvest_region": cert.noninvest, "assumptions": cert.report,
              "certified_regions_verified": sound,
              "invest_possible": gg.certainty_operator(st, "one_minus_x", st.registry, args.tol).C,
              "noninvest_possible": gg.certainty_operator(st, "x", st.registry, args.tol).C,
              "beliefs": beliefs}
    files = {"regions.json": dump_report(report), "game.json": dump_game(g),
             "regions.csv": _csv_text(["belief", "x", "rank", "urb", "core", "srd", "nsrd", "certified"],
                                      gg.region_rows(st, args.eps))}
    if "eps" in grid:
        rows = []
        for e in grid["eps"]:
            c = gg.uniqueness_certificate(st, e, args.tol)
            rows.append((e, len(c.invest), len(c.noninvest), c.report["core_size"]))
        files["eps_sweep.csv"] = _csv_text(["eps", "invest", "noninvest", "core"], rows)
    _emit(args.out, files, "regions.json")
    return EXIT_OK


def cmd_hierarchy(args) -> int:
    g = _load(args.game)
    found = validate_game(g)
    if found:
        _emit(args.out, {"validation.json": dump_report(_validation_json(g))}, "validation.json")
        return EXIT_FINDINGS
    beliefs = args.belief if args.belief else list(range(g.types.n_beliefs))
    try:
        out = {}
        for b in beliefs:
            if not 0 <= b < g.types.n_beliefs:
                raise ValueError(f"belief {b} is not in the registry")
            h = extract_hierarchy(g, b, args.depth, max_depth=max(MAX_DEPTH, args.depth_cap))
            coh = check_coherence(h)
            out[str(b)] = {**h.dump(), "coherent": coh.coherent,
                           "first_violation_level": coh.first_violation_level}
    except ValueError as exc:
        print(f"hierarchy: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(args.out, {"hierarchy.json": dump_report({"game": g.name, "hierarchies": out})}, "hierarchy.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="output directory (default: print main report)")
    common.add_argument("--tol", type=_positive, default=DECISION_TOL, help="decision tolerance")

    parser = _Parser(prog="lgl", description="Rationalizability and extremal equilibria in finite large games.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check a game file")
    p.add_argument("game")
    p.add_argument("--supermodular", action="store_true", help="also require sublattice availability")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", parents=[common], help="rationalizable sets and extremal equilibria")
    p.add_argument("game")
    p.add_argument("--force", action="store_true",
                   help="run elimination even when supermodularity checks fail (equilibria skipped)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("email-game", parents=[common], help="coordinated attack on a circle")
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--n-positions", type=int, default=20)
    p.add_argument("--max-signals", type=int, default=10)
    p.add_argument("--buckets", type=int, default=4)
    p.add_argument("--interval", choices=("shifted", "literal"), default="shifted")
    p.add_argument("--grid", help='parameter sweep, e.g. "alpha=0.25,0.5,1,2;L=1.5,2,3"')
    p.set_defaults(func=cmd_email_game)

    p = sub.add_parser("global-game", parents=[common], help="belief operators and certified regions")
    p.add_argument("game", nargs="?", help="game file (default: bundled uniform-rank instance)")
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--grid", help='eps sweep, e.g. "eps=0.1,0.2,0.3"')
    p.set_defaults(func=cmd_global_game)

    p = sub.add_parser("hierarchy", parents=[common], help="belief hierarchies and coherence")
    p.add_argument("game")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--depth-cap", type=int, default=MAX_DEPTH)
    p.add_argument("--belief", type=int, action="append", help="belief id (repeatable; default all)")
    p.set_defaults(func=cmd_hierarchy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GameFormatError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AssumptionViolation, BrokenLatticeArgmax) as exc:
        print(f"{args.command}: equilibrium: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (EmptySurvivors, IllConditionedProblem) as exc:
        print(f"{args.command}: icr: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
