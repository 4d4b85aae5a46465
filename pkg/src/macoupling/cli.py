"""Command-line entry point: ``run``, ``qf`` and ``replay``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .array_model import ArrayGeometry
from .channel import PathSet
from .config import ConfigError, ExperimentConfig, SchemeSpec, SCHEME_KINDS, load_config
from .diagnostics import quality_factor
from .experiment import run_experiment, run_scheme


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.profile:
        cfg = cfg.with_profile(args.profile)
    if args.trials is not None:
        cfg = dataclasses.replace(cfg, n_trials=args.trials)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    if args.workers is not None:
        cfg = dataclasses.replace(cfg, workers=args.workers)
    summary = run_experiment(cfg, args.out)
    for pt in summary["points"]:
        mean = pt["mean_objective_bits"]
        shown = "nan" if mean is None else f"{mean:.6g}"
        where = "" if pt["sweep_value"] is None else f" {pt['sweep_var']}={pt['sweep_value']}"
        print(f"{pt['scheme']:>8}{where}: mean {shown} bits/s/Hz "
              f"({pt['n_ok']} ok, {pt['n_failed']} failed)")
    if summary["failed_schemes"]:
        print(f"schemes with no successful trial: {summary['failed_schemes']}", file=sys.stderr)
        return 1
    return 0


def _cmd_qf(args) -> int:
    if args.count < 1 or args.spacing <= 0:
        print("need spacing > 0 and count >= 1", file=sys.stderr)
        return 2
    # positions in wavelengths with k = 2 pi
    spacing = args.spacing
    geom = ArrayGeometry(np.arange(args.count) * spacing, (args.count - 1) * spacing, spacing)
    print(repr(quality_factor(geom, 2.0 * np.pi)))
    return 0


def _cmd_replay(args) -> int:
    paths = PathSet.load(args.pathset)
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.profile:
        cfg = cfg.with_profile(args.profile)
    scheme = next((s for s in cfg.schemes if s.label == args.scheme), None)
    if scheme is None:
        scheme = SchemeSpec(args.scheme)
    out = run_scheme(cfg, scheme, paths)
    lam = cfg.wavelength
    print(json.dumps({
        "scheme": scheme.label,
        "objective_bits": out.objective,
        "modeled_objective_bits": out.modeled,
        "outer_iters": out.outer_iters,
        "converged": out.converged,
        "t_lambda": (out.t.positions / lam).tolist(),
        "r_lambda": (out.r.positions / lam).tolist(),
        "outer_values": out.outer_values,
    }, indent=1))
    return 0


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="macoupling",
        description="Movable-antenna MIMO capacity under mutual coupling.",
    )
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = ap.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    run.add_argument("config", help="experiment configuration (JSON)")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--trials", type=_positive_int, help="override the trial count")
    run.add_argument("--seed", type=_u64, help="override the master seed (unsigned 64-bit)")
    run.add_argument("--profile", choices=("desk", "paper"),
                     help="scale preset applied before --trials/--seed")
    run.add_argument("--workers", type=_positive_int, help="worker processes")
    run.set_defaults(func=_cmd_run)

    qf = sub.add_parser("qf", help="quality factor of a uniform array")
    qf.add_argument("spacing", type=float, help="element spacing in wavelengths")
    qf.add_argument("count", type=int, help="number of elements")
    qf.set_defaults(func=_cmd_qf)

    rp = sub.add_parser("replay", help="run one scheme on a saved path set")
    rp.add_argument("pathset", help="path set JSON written with dump_paths")
    rp.add_argument("scheme", help=f"scheme label or one of {', '.join(SCHEME_KINDS)}")
    rp.add_argument("--config", help="experiment configuration (defaults otherwise)")
    rp.add_argument("--profile", choices=("desk", "paper"), help="scale preset")
    rp.set_defaults(func=_cmd_replay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
