"""Command line front end.

Subcommands: bound (classical bound with a maximizing strategy), table
(optimized violation per dimension), curve (violation versus dimension
on a log grid), verify (check a parameter file), seesaw (alternating
state/measurement optimization).  CSV output uses the fixed header
d,Q,mode,seed with 12 significant digits; JSON artifacts embed the
configuration needed to reproduce them.  Exit codes: 0 success, 1
verification failure, 2 usage or parse error, 3 optimizer failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analytic import quantum_value_analytic
from .bell import classical_bound, make_d4_first, make_id, make_yu_oh
from .linalg import BipartiteShape, eigh, partial_transpose
from .model import (assemble_density, bell_operator, build_measurements,
                    params_from_dict, params_to_dict)
from .optimize import SimplexConfig, SimplexError, maximize_violation, violation_curve
from .seesaw import SeesawConfig, extract_chart, restricted_dimension_search, seesaw

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_OPTIMIZER = 3

CSV_HEADER = "d,Q,mode,seed"


def _default_seed() -> int:
    raw = os.environ.get("PPTBELL_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _emit_rows(path: str | None, rows: list[str]) -> None:
    text = "\n".join([CSV_HEADER, *rows]) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# bound


def cmd_bound(args: argparse.Namespace) -> int:
    if args.family == "id":
        functional = make_id(args.d)
    elif args.family == "yu-oh":
        functional = make_yu_oh(args.d)
    else:
        if args.d != 4:
            print("the d4-first functional is defined for d = 4 only", file=sys.stderr)
            return EXIT_USAGE
        functional = make_d4_first()
    try:
        bound, strategy = classical_bound(functional)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    print(f"family {args.family}, d = {args.d}")
    print(f"classical bound: {_fmt(bound)}")
    print(f"maximizing strategy: alice outcomes {list(strategy.alice)}, "
          f"bob outcomes {list(strategy.bob)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# table


def cmd_table(args: argparse.Namespace) -> int:
    if args.d_min < 3 or args.d_min > args.d_max:
        print("need 3 <= d-min <= d-max", file=sys.stderr)
        return EXIT_USAGE
    cfg = SimplexConfig(restarts=args.restarts, seed=args.seed)
    rows = []
    failed = False
    for d in range(args.d_min, args.d_max + 1):
        try:
            res = maximize_violation(d, cfg)
        except SimplexError as err:
            print(f"d={d}: optimizer failed: {err}", file=sys.stderr)
            rows.append(f"{d},nan,failed,{args.seed}")
            failed = True
            continue
        rows.append(f"{d},{_fmt(res.value)},full,{args.seed}")
        if args.params_dir is not None:
            os.makedirs(args.params_dir, exist_ok=True)
            payload = res.to_json_dict()
            payload["config"] = {"restarts": cfg.restarts, "seed": cfg.seed,
                                 "max_iters": cfg.max_iters, "init_scale": cfg.init_scale}
            _write_json(os.path.join(args.params_dir, f"params_d{d}.json"), payload)
    _emit_rows(args.out, rows)
    return EXIT_OPTIMIZER if failed else EXIT_OK


# ---------------------------------------------------------------------------
# curve


def _log_grid(d_min: int, d_max: int, points: int) -> list[int]:
    raw = np.logspace(np.log10(d_min), np.log10(d_max), points)
    return np.unique(np.round(raw).astype(int)).tolist()


def cmd_curve(args: argparse.Namespace) -> int:
    d_min = args.d_min
    if args.mode == "reduced" and d_min < 4:
        d_min = 4
    if d_min > args.d_max:
        print("need d-min <= d-max", file=sys.stderr)
        return EXIT_USAGE
    grid = _log_grid(d_min, args.d_max, args.points)
    cfg = SimplexConfig(restarts=args.restarts, seed=args.seed)
    try:
        curve = violation_curve(grid, mode=args.mode, cfg=cfg)
    except SimplexError as err:
        print(f"optimizer failed: {err}", file=sys.stderr)
        return EXIT_OPTIMIZER
    rows = [f"{d},{_fmt(q)},{args.mode},{args.seed}" for d, q in curve]
    _emit_rows(args.out, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _verify_params(payload: dict, tol: float) -> tuple[bool, list[str]]:
    d, sp, mp = params_from_dict(payload)
    lines = []
    ok = True

    norm_res = abs(sp.normalization(d) - 1.0)
    good = norm_res <= tol
    ok &= good
    lines.append(f"normalization residual: {norm_res:.3e} ({'ok' if good else 'FAIL'})")

    for i, res in enumerate(sp.constraint_residuals(d), start=1):
        good = abs(res) <= tol
        ok &= good
        lines.append(f"constraint {i} residual: {res:+.3e} ({'ok' if good else 'FAIL'})")

    if norm_res > 1e-8:
        lines.append("density checks skipped: state is not normalized")
        return False, lines

    rho = assemble_density(d, sp)
    shape = BipartiteShape(d, d)
    pt_res = float(np.max(np.abs(partial_transpose(rho, shape) - rho)))
    good = pt_res <= tol
    ok &= good
    lines.append(f"partial-transpose residual: {pt_res:.3e} ({'ok' if good else 'FAIL'})")

    spec_rho = eigh(rho)
    min_eig = float(spec_rho.values.min())
    good = min_eig >= -tol
    ok &= good
    lines.append(f"min eigenvalue of rho: {min_eig:+.3e} ({'ok' if good else 'FAIL'})")
    min_eig_pt = float(eigh(partial_transpose(rho, shape)).values.min())
    good = min_eig_pt >= -tol
    ok &= good
    lines.append(f"min eigenvalue of rho^TB: {min_eig_pt:+.3e} ({'ok' if good else 'FAIL'})")
    rank = int(np.sum(spec_rho.values > 1e-7))
    lines.append(f"rank at tol 1e-7: {rank}")

    if d <= 16:
        ms = build_measurements(d, mp)
        op = bell_operator(d, ms)
        gap = abs(quantum_value_analytic(d, sp, mp).total - float(np.trace(rho @ op)))
        good = gap <= tol
        ok &= good
        lines.append(f"analytic-vs-trace gap: {gap:.3e} ({'ok' if good else 'FAIL'})")
    else:
        lines.append("analytic-vs-trace gap skipped (d > 16)")
    return ok, lines


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        with open(args.params_file, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        print(f"cannot read parameter file: {err}", file=sys.stderr)
        return EXIT_USAGE
    if "params" in payload:
        payload = payload["params"]
    try:
        ok, lines = _verify_params(payload, args.tol)
    except (KeyError, TypeError, ValueError) as err:
        print(f"malformed parameter file: {err}", file=sys.stderr)
        return EXIT_USAGE
    for line in lines:
        print(line)
    print("verdict:", "pass" if ok else "fail")
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# seesaw


def cmd_seesaw(args: argparse.Namespace) -> int:
    cfg = SeesawConfig(restarts=args.restarts, max_cycles=args.max_cycles,
                       rel_tol=args.rel_tol, seed=args.seed)
    if args.state_dim is not None:
        if args.state_dim > args.d:
            print("state-dim must not exceed d", file=sys.stderr)
            return EXIT_USAGE
        result = restricted_dimension_search(args.d, args.state_dim, cfg)
    else:
        result = seesaw(args.d, cfg)
    best = result.best
    print(f"d = {result.d_ineq}, state dimension = {result.d_state}, "
          f"restarts = {cfg.restarts}")
    print(f"best value: {_fmt(best.value)} after {best.cycles} cycles "
          f"(converged: {best.converged})")
    values = ", ".join(_fmt(v) for v in sorted(result.restart_values, reverse=True)[:5])
    print(f"top restart values: {values}")
    if best.value <= 1e-9:
        print("no violation found above 1e-9")
    if not result.any_converged:
        print("no restart converged", file=sys.stderr)
        return EXIT_OPTIMIZER
    if args.out is not None and args.state_dim is None:
        fit = extract_chart(best, result.d_ineq)
        payload = {
            "d": fit.d,
            "value": fit.value,
            "params": params_to_dict(fit.d, fit.state_params, fit.meas_params),
            "diagnostics": {name: float(val) for name, val in fit.diagnostics.items()},
            "config": {"restarts": cfg.restarts, "max_cycles": cfg.max_cycles,
                       "rel_tol": cfg.rel_tol, "seed": cfg.seed},
        }
        _write_json(args.out, payload)
        print(f"chart parameters written to {args.out}")
    elif args.out is not None:
        print("chart extraction skipped for restricted state dimension")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pptbell",
                                     description="Bell violations from states "
                                                 "invariant under partial transposition")
    sub = parser.add_subparsers(dest="command", required=True)
    seed_default = _default_seed()

    p = sub.add_parser("bound", help="classical bound and a maximizing strategy")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--family", choices=("id", "yu-oh", "d4-first"), default="id")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("table", help="optimized violation for a range of dimensions")
    p.add_argument("--d-min", type=int, default=3)
    p.add_argument("--d-max", type=int, default=8)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--out", default="-", help="CSV path, - for stdout")
    p.add_argument("--params-dir", default=None,
                   help="directory for per-dimension parameter JSON files")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("curve", help="violation versus dimension on a log grid")
    p.add_argument("--d-min", type=int, default=3)
    p.add_argument("--d-max", type=int, default=1000)
    p.add_argument("--points", type=int, default=36)
    p.add_argument("--mode", choices=("full", "reduced", "asymptotic"), default="full")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--out", default="-", help="CSV path, - for stdout")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("verify", help="check a parameter JSON file")
    p.add_argument("params_file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("seesaw", help="alternating state/measurement optimization")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--state-dim", type=int, default=None,
                   help="restrict the search to a smaller local dimension")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-cycles", type=int, default=300)
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--out", default=None, help="write best chart parameters as JSON")
    p.set_defaults(func=cmd_seesaw)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "d", 3) < 3 and args.command in ("bound", "seesaw"):
        print("the inequality family needs d >= 3", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
