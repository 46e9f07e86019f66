"""Command-line front end.

    slicegap sample --target gaussian --dim 2 --n 1000 --seed 7 --x0 1,0
    slicegap gap --target bimodal --dim 2 --grid 512
    slicegap suite manifest.json --out reports/

Reports go to ``--out`` when given, otherwise to stdout. Usage errors exit
with status 2; a suite exits 1 when any criterion fails.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from slicegap.analysis import (
    LambdaCriterionConflict,
    classify_lambda,
    min_lambda_k,
    mixing_iterations,
    tv_bound,
)
from slicegap.analysis.kernel import MAX_GRID, MIN_GRID
from slicegap.io import chain_csv, coupled_csv, csv_text, json_text, write_atomic
from slicegap.rng import check_seed
from slicegap.sampler import DEFAULT_BURN_IN, run_chain, run_coupled, run_level_chain
from slicegap.suites import ManifestError, ExperimentManifest, gap_report, run_suites, wasserstein_report
from slicegap.targets import TARGET_NAMES, make_target


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    try:
        return check_seed(int(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be an integer in [0, 2^64): {text}") from exc


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from exc


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer: {text}")
    return v


def _global_flags(p: argparse.ArgumentParser, seed_default=0):
    p.add_argument("--seed", type=_seed, default=seed_default)
    p.add_argument("--out", type=Path, default=None, help="output directory (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def _target_flags(p: argparse.ArgumentParser):
    p.add_argument("--target", required=True, choices=TARGET_NAMES)
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)


def _build_target(args):
    try:
        return make_target(args.target, args.dim, args.alpha, args.gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _start_point(args, target) -> np.ndarray:
    if args.x0 is None:
        return np.zeros(target.d)
    if args.x0.shape != (target.d,):
        raise UsageError(f"--x0 has {args.x0.size} coordinates, target has dimension {target.d}")
    return args.x0


def _emit(args, name: str, text: str):
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_atomic(args.out / name, text)


def _emit_report(args, stem: str, report: dict):
    if args.format == "csv":
        keys = sorted(report)
        _emit(args, f"{stem}.csv", csv_text(keys, [[_flat(report[k]) for k in keys]]))
    else:
        _emit(args, f"{stem}.json", json_text(report))


def _flat(v):
    if isinstance(v, dict):
        return ";".join(f"{k}={v[k]:g}" for k in sorted(v))
    return v


def cmd_sample(args):
    target = _build_target(args)
    x0 = _start_point(args, target)
    trace = run_chain(target, x0, args.n, args.seed, burn_in=args.burn_in)
    if args.format == "json":
        _emit(args, "chain.json", json_text({
            "target": target.name, "dim": target.d, "seed": args.seed, "burn_in": args.burn_in,
            "states": trace.states.tolist(), "rho_x": trace.rho.tolist(), "t": trace.levels.tolist(),
        }))
    else:
        _emit(args, "chain.csv", chain_csv(trace))
    return 0


def cmd_levelchain(args):
    target = _build_target(args)
    ell = target.ell
    t0 = args.t0 if args.t0 is not None else 0.5 * ell.t_max
    trace = run_level_chain(ell, t0, args.n, args.seed, burn_in=args.burn_in, target_name=target.name)
    if args.format == "json":
        _emit(args, "levelchain.json", json_text({
            "target": target.name, "dim": target.d, "seed": args.seed, "t": trace.states.tolist(),
        }))
    else:
        _emit(args, "levelchain.csv", chain_csv(trace))
    return 0


def _endpoint(vec, norm, d, axis):
    if vec is not None:
        if vec.shape != (d,):
            raise UsageError(f"endpoint has {vec.size} coordinates, target has dimension {d}")
        return vec
    p = np.zeros(d)
    p[axis % d] = norm
    return p


def cmd_couple(args):
    target = _build_target(args)
    if not target.is_radial:
        raise UsageError(f"target {target.name!r} has no radial log-concave profile; the coupling needs one")
    if not target.profile.is_log_concave():
        raise UsageError(f"target {target.name!r} is not log-concave; the contraction estimate needs a log-concave profile")
    x = _endpoint(args.x0, args.x_norm, target.d, 0)
    y = _endpoint(args.y0, args.y_norm, target.d, 0)
    report = wasserstein_report(target, x, y, args.reps, args.seed)
    stats = run_coupled(target, x, y, args.steps, args.reps, args.seed)
    report["decay"] = stats.decay
    report["decay_dist"] = stats.decay_dist
    if args.out is None:
        sys.stdout.write(json_text(report) if args.format != "csv" else coupled_csv(stats))
    else:
        write_atomic(args.out / "wasserstein.json", json_text(report))
        write_atomic(args.out / "coupled_steps.csv", coupled_csv(stats))
    return 0


def cmd_classify(args):
    target = _build_target(args)
    try:
        k_min = min_lambda_k(target.ell, args.kmax, grid_size=args.grid)
        if args.k is None:
            # report the smallest member class, or the largest class tried
            k = k_min if k_min is not None else args.kmax
        else:
            k = args.k
        member = classify_lambda(target.ell, k, grid_size=args.grid).member
    except LambdaCriterionConflict as exc:
        raise UsageError(str(exc)) from exc
    _emit_report(args, "classification", {"target": target.name, "k": k, "member": member, "k_min": k_min})
    return 0


def cmd_gap(args):
    target = _build_target(args)
    if not (MIN_GRID <= args.grid <= MAX_GRID):
        raise UsageError(f"grid size must lie in [{MIN_GRID}, {MAX_GRID}], got {args.grid}")
    try:
        report = gap_report(target, args.grid, args.kmax)
    except LambdaCriterionConflict as exc:
        raise UsageError(str(exc)) from exc
    report.pop("params")
    _emit_report(args, "gap", report)
    return 0


def cmd_bounds(args):
    try:
        if args.kind == "mixing":
            value = {"dim": args.dim, "eps": args.eps, "w0": args.w0,
                     "iterations": mixing_iterations(args.dim, args.eps, args.w0)}
        else:
            value = {"gap": args.gap, "n": args.n, "chi": args.chi,
                     "tv_bound": tv_bound(args.gap, args.n, args.chi)}
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.format is None and args.out is None and args.kind == "mixing":
        sys.stdout.write(f"{value['iterations']}\n")
    else:
        _emit_report(args, f"bounds_{args.kind}", value)
    return 0


def cmd_suite(args):
    try:
        manifest = ExperimentManifest.from_file(args.manifest)
    except (ManifestError, OSError) as exc:
        raise UsageError(str(exc)) from exc
    if args.seed is not None:
        manifest = replace(manifest, seed=args.seed)
    out = args.out or Path(manifest.out or "reports")
    results = run_suites(manifest, out)
    failed = 0
    for r in results:
        for c in r.criteria:
            failed += not c.passed
            print(f"{'PASS' if c.passed else 'FAIL'} {c.suite} {c.name} value={c.value} ({c.threshold})")
    print(f"summary written to {out / 'summary.csv'}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicegap", description="Simple slice sampling experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="run the slice sampler and write its trace")
    _target_flags(p)
    _global_flags(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--x0", type=_vector, default=None)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("levelchain", help="run the auxiliary level chain from the level-set function alone")
    _target_flags(p)
    _global_flags(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.set_defaults(func=cmd_levelchain)

    p = sub.add_parser("couple", help="Wasserstein bounds and decay under the radial coupling")
    _target_flags(p)
    _global_flags(p)
    p.add_argument("--x0", type=_vector, default=None)
    p.add_argument("--y0", type=_vector, default=None)
    p.add_argument("--x-norm", type=float, default=2.0)
    p.add_argument("--y-norm", type=float, default=0.5)
    p.add_argument("--reps", type=_positive_int, default=100_000)
    p.add_argument("--steps", type=_positive_int, default=20)
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("classify", help="Lambda_k membership of the level-set function")
    _target_flags(p)
    _global_flags(p)
    p.add_argument("--kmax", type=_positive_int, default=10)
    p.add_argument("--k", type=_positive_int, default=None)
    p.add_argument("--grid", type=_positive_int, default=512)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("gap", help="spectral gap of the discretized level kernel")
    _target_flags(p)
    _global_flags(p)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--kmax", type=_positive_int, default=None)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("bounds", help="mixing-iteration count or TV bound")
    bsub = p.add_subparsers(dest="kind", required=True)
    b = bsub.add_parser("mixing")
    b.add_argument("--dim", type=_positive_int, required=True)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--w0", type=float, required=True)
    _global_flags(b)
    b = bsub.add_parser("tv")
    b.add_argument("--gap", type=float, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--chi", type=float, required=True)
    _global_flags(b)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("suite", help="run an experiment suite from a JSON manifest")
    p.add_argument("manifest", type=Path)
    _global_flags(p, seed_default=None)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.exit(2, f"slicegap: error: {exc}\n")
    except (ValueError, ArithmeticError) as exc:
        parser.exit(2, f"slicegap: error: {exc}\n")
    except OSError as exc:
        parser.exit(2, f"slicegap: error: cannot write output: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
