"""Run a configured sweep and print mean objective per scheme and sweep value.

Usage: python3 scripts/sweep.py CONFIG [--out DIR] [--profile desk|paper] [--trials N]
"""
import argparse
import dataclasses

from macoupling.config import load_config
from macoupling.experiment import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", default="sweep_out")
    ap.add_argument("--profile", choices=["desk", "paper"])
    ap.add_argument("--trials", type=int)
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.profile:
        cfg = cfg.with_profile(args.profile)
    if args.trials:
        cfg = dataclasses.replace(cfg, n_trials=args.trials)
    summary = run_experiment(cfg, args.out)
    var = cfg.sweep_var or "point"
    print(f"{'scheme':<12}{var:>18}{'mean bits/s/Hz':>16}{'ok':>6}")
    for pt in summary["points"]:
        mean = pt["mean_objective_bits"]
        shown = f"{mean:.4f}" if mean is not None else "n/a"
        value = "-" if pt["sweep_value"] is None else str(pt["sweep_value"])
        print(f"{pt['scheme']:<12}{value:>18}{shown:>16}{pt['n_ok']:>6}")


if __name__ == "__main__":
    main()
