"""Monte Carlo sweeps over channel realisations and schemes.

Each (sweep point, trial) job draws one scenario from the master seed and
the trial index and runs every configured scheme on it, so schemes are
compared on common channels. Rows are written in a fixed order
(scheme, sweep point, trial) whatever the completion order.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .array_model import ArrayGeometry
from .channel import OfdmGrid, PathSet
from .config import ExperimentConfig, SchemeSpec
from .diagnostics import quality_factor, transmitted_power_density
from .optimizer import (
    LinkModel,
    evaluate_fixed,
    nc_ma_mode,
    narrowband_model,
    run_bca,
    wideband_model,
)
from .scenario import draw_scenario, trial_seed

log = logging.getLogger(__name__)

COLUMNS = (
    "scheme", "sweep_var", "sweep_value", "trial", "seed", "objective_bits",
    "modeled_objective_bits", "outer_iters", "qf_tx", "qf_rx", "p_trans",
    "wall_s", "error",
)


@dataclass
class SchemeOutcome:
    objective: float
    modeled: float
    outer_iters: int
    t: ArrayGeometry
    r: ArrayGeometry
    Qs: list
    outer_values: list
    converged: bool


def link_model(cfg: ExperimentConfig, paths: PathSet, coupled: bool = True) -> LinkModel:
    if cfg.mode == "narrowband":
        return narrowband_model(paths, cfg.k, cfg.sigma2, cfg.p_max, coupled)
    grid = OfdmGrid.for_paths(cfg.S, cfg.subcarrier_spacing, paths)
    return wideband_model(paths, grid, cfg.scenario.f_c, cfg.k, cfg.sigma2, cfg.p_max, coupled)


def _fixed_array(count: int, spacing: float) -> ArrayGeometry:
    return ArrayGeometry(np.arange(count) * spacing, (count - 1) * spacing, spacing)


def run_scheme(cfg: ExperimentConfig, scheme: SchemeSpec, paths: PathSet) -> SchemeOutcome:
    """Run one scheme on one path set; objectives are on the coupled channel."""
    lam = cfg.wavelength
    d_min = scheme.d_min_lambda * lam
    model = link_model(cfg, paths)
    if scheme.kind in ("ULA", "CLA"):
        st = evaluate_fixed(model, _fixed_array(cfg.M, d_min), _fixed_array(cfg.N, d_min))
        return SchemeOutcome(st.objective, st.objective, 0, st.t, st.r, st.Qs,
                             st.outer_values, True)
    t0 = ArrayGeometry.uniform(cfg.M, cfg.aperture(cfg.M), d_min)
    r0 = ArrayGeometry.uniform(cfg.N, cfg.aperture(cfg.N), d_min)
    if scheme.kind == "C-MA":
        st = run_bca(model, t0, r0, cfg.trust_region)
        return SchemeOutcome(st.objective, st.objective, st.outer_iters, st.t, st.r,
                             st.Qs, st.outer_values, st.converged)
    res = nc_ma_mode(model, t0, r0, cfg.trust_region)
    st = res.state
    return SchemeOutcome(res.physical, res.modeled, st.outer_iters, st.t, st.r,
                         st.Qs, st.outer_values, st.converged)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_job(job):
    """All schemes for one (sweep point, trial); returns rows and trace entries."""
    cfg, point_idx, value, trial = job
    pcfg = cfg.at(value)
    seed = trial_seed(cfg.master_seed, trial)
    rows, traces, paths_dict = [], [], None
    try:
        paths = draw_scenario(pcfg.scenario, seed)
        paths_dict = paths.to_dict()
    except Exception as exc:  # noqa: BLE001
        paths = None
        draw_error = f"{type(exc).__name__}: {exc}"
    for s_idx, scheme in enumerate(cfg.schemes):
        row = dict.fromkeys(COLUMNS)
        row.update(scheme=scheme.label, sweep_var=cfg.sweep_var, sweep_value=value,
                   trial=trial, seed=seed)
        trace = {"trial": trial, "seed": seed}
        start = time.perf_counter()
        try:
            if paths is None:
                raise RuntimeError(draw_error)
            out = run_scheme(pcfg, scheme, paths)
            if not math.isfinite(out.objective) or out.objective < 0:
                raise FloatingPointError(f"invalid objective {out.objective}")
            row.update(
                objective_bits=float(out.objective),
                modeled_objective_bits=float(out.modeled),
                outer_iters=out.outer_iters,
                qf_tx=float(quality_factor(out.t, pcfg.k)),
                qf_rx=float(quality_factor(out.r, pcfg.k)),
                p_trans=float(transmitted_power_density(out.t, np.stack(out.Qs),
                                                        paths.aod, pcfg.k)),
            )
            trace.update(outer_values=[float(v) for v in out.outer_values],
                         converged=bool(out.converged))
        except Exception as exc:  # noqa: BLE001
            log.warning("%s trial %d failed: %s", scheme.label, trial, exc)
            row["error"] = f"{type(exc).__name__}: {exc}"
            trace["error"] = row["error"]
        if cfg.record_wall_time:
            row["wall_s"] = time.perf_counter() - start
        rows.append(((s_idx, point_idx, trial), row))
        traces.append(((s_idx, point_idx, trial), trace))
    return rows, traces, (point_idx, trial, paths_dict)


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._=+-]+", "_", text)


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run the configured sweep and write ``results.csv``, ``summary.json``
    and ``traces/``. Returns the summary dictionary.
    """
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, i, v, trial)
            for i, v in enumerate(cfg.sweep_values) for trial in range(cfg.n_trials)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_job, jobs, chunksize=1))
    else:
        results = [_run_job(j) for j in jobs]

    rows = sorted((r for res in results for r in res[0]), key=lambda kv: kv[0])
    traces = sorted((t for res in results for t in res[1]), key=lambda kv: kv[0])

    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for _, row in rows:
            w.writerow([_fmt(row[c]) for c in COLUMNS])

    values = cfg.sweep_values
    by_key = {}
    for (s_idx, p_idx, _), tr in traces:
        by_key.setdefault((s_idx, p_idx), []).append(tr)
    for (s_idx, p_idx), items in by_key.items():
        label, value = cfg.schemes[s_idx].label, values[p_idx]
        name = _slug(label if value is None else f"{label}__{cfg.sweep_var}={value}")
        doc = {"scheme": label, "sweep_var": cfg.sweep_var, "sweep_value": value,
               "trials": items}
        with open(out / "traces" / f"{name}.json", "w") as fh:
            json.dump(doc, fh, indent=1)

    if cfg.dump_paths:
        (out / "paths").mkdir(exist_ok=True)
        for _, _, (p_idx, trial, pd) in results:
            if pd is None:
                continue
            value = values[p_idx]
            stem = f"trial{trial}" if value is None else f"{cfg.sweep_var}={value}__trial{trial}"
            with open(out / "paths" / f"{_slug(stem)}.json", "w") as fh:
                json.dump(pd, fh, indent=1)

    summary = summarise(cfg, [row for _, row in rows])
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=1)
    return summary


def _mean(xs):
    return float(sum(xs) / len(xs)) if xs else None


def summarise(cfg: ExperimentConfig, rows) -> dict:
    points = []
    failed_schemes = []
    for scheme in cfg.schemes:
        mine = [r for r in rows if r["scheme"] == scheme.label]
        if mine and all(r["error"] for r in mine):
            failed_schemes.append(scheme.label)
        for value in cfg.sweep_values:
            pts = [r for r in mine if r["sweep_value"] == value]
            ok = [r for r in pts if not r["error"]]
            points.append({
                "scheme": scheme.label,
                "sweep_var": cfg.sweep_var,
                "sweep_value": value,
                "n_ok": len(ok),
                "n_failed": len(pts) - len(ok),
                "mean_objective_bits": _mean([r["objective_bits"] for r in ok]),
                "mean_modeled_objective_bits": _mean([r["modeled_objective_bits"] for r in ok]),
                "mean_outer_iters": _mean([r["outer_iters"] for r in ok]),
                "mean_p_trans": _mean([r["p_trans"] for r in ok]),
            })
    return {"config": cfg.to_dict(), "points": points, "failed_schemes": failed_schemes}
