"""Random Rician clustered channels (one LoS path plus scattering clusters)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import SPEED_OF_LIGHT
from .channel import PathSet

#: Bit generator used for every draw; part of the reproducibility contract.
RNG_ALGORITHM = "PCG64"


@dataclass(frozen=True)
class ScenarioParams:
    """Statistical channel parameters. Angles are in degrees, ``kappa_db`` in dB."""

    kappa_db: float = 0.0
    n_clusters: int = 3
    n_subpaths: int = 8
    f_c: float = 28e9
    r_min: float = 100.0
    r_max: float = 300.0
    los_spread_deg: float = 5.0
    cluster_spread_deg: float = 40.0
    subpath_spread_deg: float = 5.0
    shadowing_std_db: float = 4.0
    pdp_shadow_std_db: float = 3.0
    delay_min_factor: float = 1.0
    delay_max_factor: float = 10.0
    use_pdp_weights: bool = False

    def __post_init__(self):
        if self.n_clusters < 0 or self.n_subpaths < 1:
            raise ValueError("cluster/sub-path counts must be positive")
        if not 0 < self.r_min <= self.r_max:
            raise ValueError("need 0 < r_min <= r_max")
        if self.f_c <= 0:
            raise ValueError("carrier frequency must be positive")

    @property
    def kappa(self) -> float:
        return 10.0 ** (self.kappa_db / 10.0)

    @property
    def n_paths(self) -> int:
        return 1 + self.n_clusters * self.n_subpaths


def trial_seed(master: int, trial: int) -> int:
    """64-bit seed of one trial, derived from the master seed and trial index."""
    ss = np.random.SeedSequence([int(master), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def path_loss_db(f_c: float, r: float, shadowing_db: float = 0.0) -> float:
    if f_c <= 0 or r <= 0:
        raise ValueError("frequency and distance must be positive")
    return 32.4 + 20.0 * np.log10(f_c / 1e9) + 26.0 * np.log10(r) + shadowing_db


def power_delay_profile(delays, rng: np.random.Generator | None = None, z=None,
                        z_std_db: float = 3.0) -> np.ndarray:
    """Normalised cluster powers ``q_i`` proportional to ``10^(-tau_i/1us + z_i/10)``."""
    delays = np.asarray(delays, dtype=float)
    if (delays < 0).any():
        raise ValueError("delays must be non-negative")
    if z is None:
        z = rng.normal(0.0, z_std_db, size=delays.shape)
    expo = -delays / 1e-6 + np.asarray(z) / 10.0
    w = 10.0 ** (expo - expo.max())
    return w / w.sum()


def _cn(rng, var, size=None):
    return np.sqrt(var / 2.0) * (rng.normal(size=size) + 1j * rng.normal(size=size))


def draw_scenario(params: ScenarioParams, seed: int | np.random.Generator) -> PathSet:
    """Draw one channel realisation.

    Draw order is fixed (distance, shadowing, angles, delays, gains) so a
    seed maps to one path set.
    """
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    p = params
    n_c, n_s = p.n_clusters, p.n_subpaths
    deg = np.pi / 180.0

    r = np.sqrt(rng.uniform(p.r_min**2, p.r_max**2))
    shadow = rng.normal(0.0, p.shadowing_std_db)
    pl_db = path_loss_db(p.f_c, r, shadow)
    pl_inv = 10.0 ** (-pl_db / 10.0)

    def angles():
        los = rng.uniform(-p.los_spread_deg, p.los_spread_deg)
        clusters = rng.uniform(-p.cluster_spread_deg, p.cluster_spread_deg, size=n_c)
        subs = rng.uniform(-p.subpath_spread_deg, p.subpath_spread_deg, size=(n_c, n_s))
        nlos = los + clusters[:, None] + subs
        return deg * np.concatenate([[los], nlos.reshape(-1)])

    aod = angles()
    aoa = angles()

    los_delay = r / SPEED_OF_LIGHT
    cluster_delays = los_delay * rng.uniform(p.delay_min_factor, p.delay_max_factor, size=n_c)
    delays = np.concatenate([[los_delay], np.repeat(cluster_delays, n_s)])

    kappa = p.kappa
    g_los = _cn(rng, kappa / (1.0 + kappa) * pl_inv)
    nlos_var = pl_inv / (kappa + 1.0) / max(n_c * n_s, 1)
    g_nlos = _cn(rng, nlos_var, size=(n_c, n_s))
    # drawn unconditionally so the switch does not shift the random stream
    pdp = power_delay_profile(cluster_delays, rng, z_std_db=p.pdp_shadow_std_db) if n_c else np.ones(0)
    if p.use_pdp_weights:
        g_nlos = g_nlos * np.sqrt(pdp * n_c)[:, None]
    gains = np.concatenate([[g_los], g_nlos.reshape(-1)])

    meta = {"distance": float(r), "path_loss_db": float(pl_db),
            "los_delay": float(los_delay)}
    return PathSet(aod, aoa, delays, gains, meta)
