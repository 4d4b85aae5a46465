"""Trust-region coordinate updates and block coordinate ascent.

The narrowband problem is the single-carrier case of the wideband one, so
both run through :func:`run_bca`. One outer iteration is: water-filling on
the current channel, a trust-region sweep over the transmit coordinates,
a water-filling refresh, then a sweep over the receive coordinates.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from .array_model import ArrayGeometry, GeometryError
from .channel import (
    EffectiveChannel,
    OfdmGrid,
    PathSet,
    SideFactors,
    assemble,
    compose,
    freq_domain_prm,
    side_factors,
)
from .deriv import CoordinateProblem, Side, coordinate_problem
from .matfun import IllConditionedCouplingError
from .rate import LN2, optimal_Q_multicarrier

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrustRegionConfig:
    """Trust-region constants. Radii are given in wavelengths."""

    rho1: float = 0.25
    rho2: float = 0.75
    nu1: float = 2.0
    nu2: float = 4.0
    init_radius: float = 0.25
    min_radius: float = 1e-6
    max_inner_iters: int = 50
    inner_tol_bits: float = 1e-8
    max_outer_iters: int = 100
    outer_rtol: float = 1e-4

    def __post_init__(self):
        if not 0 < self.rho1 < self.rho2 < 1:
            raise ValueError("need 0 < rho1 < rho2 < 1")
        if self.nu1 <= 1 or self.nu2 <= 1:
            raise ValueError("radius factors must exceed 1")
        if not self.init_radius > self.min_radius > 0:
            raise ValueError("need init_radius > min_radius > 0")
        if self.max_inner_iters < 0 or self.max_outer_iters < 1:
            raise ValueError("iteration limits must be non-negative")


def feasible_interval(geom: ArrayGeometry, index: int, radius: float):
    """Trust region around ``positions[index]`` intersected with the spacing/range constraints."""
    pos, d = geom.positions, geom.d_min
    x = pos[index]
    prev = pos[index - 1] if index > 0 else -d
    nxt = pos[index + 1] if index + 1 < geom.size else geom.aperture + d
    lo = max(x - radius, prev + d)
    hi = min(x + radius, nxt - d)
    # the current point is feasible; absorb round-off in prev + d
    return min(lo, x), max(hi, x)


@dataclass(frozen=True)
class TrmResult:
    x: float
    radius: float
    accepted: bool
    value: float
    ratio: float
    predicted: float


def trm_step(
    fun, x_bar, h_bar, grad, curv, lo, hi, radius, cfg: TrustRegionConfig,
    max_radius: float = np.inf,
) -> TrmResult:
    """One trust-region step for maximising a scalar function on ``[lo, hi]``.

    The quadratic model is maximised exactly over the interval: the
    candidates are the two endpoints plus the projected Newton point when
    the model is concave.
    """
    if hi - lo <= 0.0:
        return TrmResult(x_bar, radius, False, h_bar, np.nan, 0.0)

    def model_gain(x):
        d = x - x_bar
        return 0.5 * curv * d * d + grad * d

    cands = []
    if curv < -1e-12:
        cands.append(min(max(x_bar - grad / curv, lo), hi))
    cands += [lo, hi]
    gains = [model_gain(c) for c in cands]
    best = int(np.argmax(gains))
    x_star, predicted = cands[best], gains[best]

    if predicted <= 1e-14 * (1.0 + abs(h_bar)):
        return TrmResult(x_bar, radius / cfg.nu2, False, h_bar, np.nan, predicted)
    try:
        h_new = fun(x_star)
    except (IllConditionedCouplingError, GeometryError):
        return TrmResult(x_bar, radius / cfg.nu2, False, h_bar, -np.inf, predicted)
    ratio = (h_new - h_bar) / predicted

    if ratio > cfg.rho2:
        if abs(x_star - x_bar) >= radius * (1.0 - 1e-9):
            radius = min(cfg.nu1 * radius, max_radius)
        return TrmResult(x_star, radius, True, h_new, ratio, predicted)
    if ratio > cfg.rho1:
        return TrmResult(x_star, radius, True, h_new, ratio, predicted)
    return TrmResult(x_bar, radius / cfg.nu2, False, h_bar, ratio, predicted)


@dataclass(frozen=True)
class TraceRecord:
    outer: int
    block: str  # "Q", "Q-refresh", "tx" or "rx"
    index: int
    value: float  # block objective in reported units (bits/s/Hz)
    radius: float
    accepted: bool


@dataclass(frozen=True)
class LinkModel:
    """Everything about a link except the antenna positions.

    ``path_resp`` holds one row of path responses per carrier. ``cp_factor``
    scales reported objectives (1 for narrowband).
    """

    paths: PathSet
    path_resp: np.ndarray
    k: float
    sigma2: float
    p_max: float
    cp_factor: float = 1.0
    coupled: bool = True

    @property
    def S(self) -> int:
        return self.path_resp.shape[0]

    def channel(self, t: ArrayGeometry, r: ArrayGeometry, coupled=None) -> EffectiveChannel:
        c = self.coupled if coupled is None else coupled
        return assemble(t, r, self.paths, self.k, self.path_resp, c)

    def uncoupled(self) -> "LinkModel":
        return LinkModel(self.paths, self.path_resp, self.k, self.sigma2,
                         self.p_max, self.cp_factor, False)


def narrowband_model(paths, k, sigma2, p_max, coupled=True) -> LinkModel:
    return LinkModel(paths, paths.gains[None, :], k, sigma2, p_max, 1.0, coupled)


def wideband_model(paths, grid: OfdmGrid, f_c, k, sigma2, p_max, coupled=True) -> LinkModel:
    return LinkModel(paths, freq_domain_prm(paths, grid, f_c), k, sigma2, p_max,
                     grid.cp_factor, coupled)


@dataclass(eq=False)
class OptimizerState:
    t: ArrayGeometry
    r: ArrayGeometry
    allocs: list
    channel: EffectiveChannel
    radii_t: np.ndarray
    radii_r: np.ndarray
    trace: list = field(default_factory=list)
    outer_values: list = field(default_factory=list)
    converged: bool = False
    outer_iters: int = 0
    skipped: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.outer_values[-1]

    @property
    def Qs(self):
        return [a.Q for a in self.allocs]


def _with_side(channel: EffectiveChannel, side: Side, fac: SideFactors) -> EffectiveChannel:
    tx, rx = (fac, channel.rx) if side is Side.TX else (channel.tx, fac)
    return EffectiveChannel(tx, rx, channel.sigmas, compose(tx, rx, channel.sigmas))


def _waterfill(model: LinkModel, channel: EffectiveChannel):
    allocs = optimal_Q_multicarrier(channel.Hs, model.sigma2, model.p_max)
    value = model.cp_factor * sum(a.rate_bits(model.sigma2) for a in allocs)
    return allocs, value


def optimize_coordinate(
    problem: CoordinateProblem, radius: float, cfg: TrustRegionConfig,
    lam: float, max_radius: float, scale: float = 1.0, outer: int = 0,
    trace: list | None = None,
):
    """Inner trust-region loop on one coordinate; returns ``(geometry, radius)``."""
    a_min = cfg.min_radius * lam
    for _ in range(cfg.max_inner_iters):
        lo, hi = feasible_interval(problem.geom, problem.index, radius)
        if hi - lo <= 0.0:
            break
        d = problem.derivs()
        res = trm_step(problem.value, problem.x, d.value, d.g, d.h,
                       lo, hi, radius, cfg, max_radius)
        radius = res.radius
        if trace is not None:
            trace.append(TraceRecord(outer, problem.side.value, problem.index,
                                     scale * res.value, radius, res.accepted))
        if res.accepted:
            new = copy.copy(problem)
            new.geom = problem.geom.moved(problem.index, res.x)
            problem = new
            if res.value - d.value < cfg.inner_tol_bits:
                break
        elif res.predicted < cfg.inner_tol_bits or radius < a_min:
            break
    return problem.geom, radius


def run_bca(
    model: LinkModel, t0: ArrayGeometry, r0: ArrayGeometry,
    cfg: TrustRegionConfig = TrustRegionConfig(),
) -> OptimizerState:
    """Block coordinate ascent over covariances and antenna positions."""
    lam = 2.0 * np.pi / model.k
    t, r = t0, r0
    channel = model.channel(t, r)
    st = OptimizerState(
        t, r, [], channel,
        np.full(t.size, cfg.init_radius * lam),
        np.full(r.size, cfg.init_radius * lam),
    )
    scale = model.cp_factor
    for it in range(cfg.max_outer_iters + 1):
        allocs, value = _waterfill(model, channel)
        st.allocs, st.channel = allocs, channel
        st.trace.append(TraceRecord(it, "Q", -1, value, np.nan, True))
        st.outer_values.append(value)
        if it > 0 and abs(value - st.outer_values[-2]) <= cfg.outer_rtol * abs(st.outer_values[-2]):
            st.converged = True
            break
        if it == cfg.max_outer_iters or cfg.max_inner_iters == 0:
            break
        st.outer_iters = it + 1

        for side in (Side.TX, Side.RX):
            if side is Side.RX:
                allocs, value = _waterfill(model, channel)
                st.trace.append(TraceRecord(it, "Q-refresh", -1, value, np.nan, True))
            radii = st.radii_t if side is Side.TX else st.radii_r
            geom = channel.tx.geom if side is Side.TX else channel.rx.geom
            angles = model.paths.aod if side is Side.TX else model.paths.aoa
            for idx in range(geom.size):
                problem = coordinate_problem(channel, allocs, model.sigma2, side, idx)
                try:
                    new_geom, radii[idx] = optimize_coordinate(
                        problem, radii[idx], cfg, lam, geom.aperture + lam,
                        scale, it, st.trace,
                    )
                except (IllConditionedCouplingError, ValueError) as exc:
                    log.debug("skipping %s[%d]: %s", side.value, idx, exc)
                    st.skipped.append((it, side.value, idx, str(exc)))
                    continue
                if new_geom is not geom:
                    geom = new_geom
                    fac = side_factors(geom, angles, model.k, model.coupled)
                    channel = _with_side(channel, side, fac)
        st.t, st.r = channel.tx.geom, channel.rx.geom
    st.t, st.r = st.channel.tx.geom, st.channel.rx.geom
    return st


def bca_narrowband(paths: PathSet, k, sigma2, p_max, t0, r0,
                   cfg: TrustRegionConfig = TrustRegionConfig(), coupled=True):
    return run_bca(narrowband_model(paths, k, sigma2, p_max, coupled), t0, r0, cfg)


def bca_wideband(paths: PathSet, grid: OfdmGrid, f_c, k, sigma2, p_max, t0, r0,
                 cfg: TrustRegionConfig = TrustRegionConfig(), coupled=True):
    return run_bca(wideband_model(paths, grid, f_c, k, sigma2, p_max, coupled), t0, r0, cfg)


def baseline_positions(kind: str, count: int, lam: float) -> ArrayGeometry:
    """Fixed uniform arrays: ``"ULA"`` at half-wavelength, ``"CLA"`` at 0.2 wavelength."""
    spacing = {"ULA": 0.5 * lam, "CLA": 0.2 * lam}[kind.upper()]
    if count < 1:
        raise ValueError("count must be >= 1")
    return ArrayGeometry(np.arange(count) * spacing, (count - 1) * spacing, spacing)


def evaluate_fixed(model: LinkModel, t: ArrayGeometry, r: ArrayGeometry) -> OptimizerState:
    """Water-filling only, for fixed-position arrays."""
    cfg = TrustRegionConfig(max_inner_iters=0, max_outer_iters=1)
    return run_bca(model, t, r, cfg)


@dataclass(eq=False)
class NcMaResult:
    state: OptimizerState
    modeled: float
    physical: float


def physical_objective(model: LinkModel, t, r, Qs) -> float:
    """Rate of covariances ``Qs`` on the coupled channel at positions ``(t, r)``."""
    ch = model.channel(t, r, coupled=True)
    n = ch.Hs.shape[1]
    M = np.eye(n) + ch.Hs @ np.stack(Qs) @ np.conj(np.swapaxes(ch.Hs, -1, -2)) / model.sigma2
    _, ld = np.linalg.slogdet(M)
    return float(model.cp_factor * ld.sum() / LN2)


def nc_ma_mode(model: LinkModel, t0, r0, cfg: TrustRegionConfig = TrustRegionConfig()) -> NcMaResult:
    """Optimise with identity coupling, then re-evaluate under the true coupling."""
    st = run_bca(model.uncoupled(), t0, r0, cfg)
    return NcMaResult(st, st.objective, physical_objective(model, st.t, st.r, st.Qs))
