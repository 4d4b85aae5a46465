"""Coupling-aware effective channels.

``H = C_R^{-1/2} F^H diag(b) G C_T^{-1/2}`` for narrowband links, and one
such matrix per OFDM subcarrier for wideband links. The geometry factors
(coupling matrices and field responses) are shared by every subcarrier.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .array_model import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    field_response_matrix,
    mc_factor,
)
from .matfun import SpdFactor


@dataclass(eq=False)
class PathSet:
    """Multipath parameters: elevation AoDs/AoAs, absolute delays and complex gains."""

    aod: np.ndarray
    aoa: np.ndarray
    delays: np.ndarray
    gains: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.aod = np.atleast_1d(np.asarray(self.aod, dtype=float))
        self.aoa = np.atleast_1d(np.asarray(self.aoa, dtype=float))
        self.delays = np.atleast_1d(np.asarray(self.delays, dtype=float))
        self.gains = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        L = self.aod.size
        if L < 1:
            raise ValueError("a path set needs at least one path")
        if not (self.aoa.size == self.delays.size == self.gains.size == L):
            raise ValueError("path arrays must all have the same length")
        if (self.delays < 0).any():
            raise ValueError("delays must be non-negative")
        if not np.isfinite(self.gains).all():
            raise ValueError("gains must be finite")

    @property
    def L(self) -> int:
        return self.aod.size

    def with_gains(self, gains) -> "PathSet":
        return PathSet(self.aod, self.aoa, self.delays, gains, dict(self.meta))

    def with_delays(self, delays) -> "PathSet":
        return PathSet(self.aod, self.aoa, delays, self.gains, dict(self.meta))

    def to_dict(self) -> dict:
        paths = [
            {
                "aod": float(self.aod[i]),
                "aoa": float(self.aoa[i]),
                "delay": float(self.delays[i]),
                "gain_re": float(self.gains[i].real),
                "gain_im": float(self.gains[i].imag),
            }
            for i in range(self.L)
        ]
        return {"paths": paths, "meta": self.meta}

    @classmethod
    def from_dict(cls, data: dict) -> "PathSet":
        paths = data["paths"]
        return cls(
            aod=[p["aod"] for p in paths],
            aoa=[p["aoa"] for p in paths],
            delays=[p["delay"] for p in paths],
            gains=[complex(p["gain_re"], p["gain_im"]) for p in paths],
            meta=dict(data.get("meta", {})),
        )

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "PathSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class OfdmGrid:
    """Subcarrier count ``S``, spacing ``spacing`` (Hz) and maximum tap index ``T``.

    The cyclic prefix length equals ``T``.
    """

    S: int
    spacing: float
    T: int

    def __post_init__(self):
        if self.S < 1 or self.spacing <= 0 or self.T < 0:
            raise ValueError(f"invalid OFDM grid {self}")

    @property
    def S_cp(self) -> int:
        return self.T

    @property
    def cp_factor(self) -> float:
        return self.S / (self.S + self.S_cp)

    @classmethod
    def for_paths(cls, S: int, spacing: float, paths: PathSet) -> "OfdmGrid":
        spread = float(paths.delays.max() - paths.delays.min())
        # ceil() of a product that is an integer up to round-off
        x = S * spacing * spread
        T = int(math.ceil(x - 1e-9 * max(1.0, x)))
        return cls(S, spacing, max(T, 0))


def triangular_pulse(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, 1.0 - np.abs(x), 0.0)


def _tap_offsets(paths: PathSet, grid: OfdmGrid) -> np.ndarray:
    return grid.S * grid.spacing * (paths.delays - paths.delays.min())


def time_domain_gain(
    paths: PathSet, l: int, tap: int, grid: OfdmGrid, f_c: float
) -> complex:
    """Gain of path ``l`` at delay tap ``tap`` (triangular pulse shaping)."""
    if not 0 <= tap <= grid.T:
        raise ValueError(f"tap {tap} outside [0, {grid.T}]")
    rel = paths.delays[l] - paths.delays.min()
    phase = np.exp(-2j * np.pi * f_c * rel)
    offset = grid.S * grid.spacing * rel
    return complex(paths.gains[l] * phase * triangular_pulse(tap - offset))


def time_domain_taps(paths: PathSet, grid: OfdmGrid, f_c: float) -> np.ndarray:
    """``(T+1, L)`` array of time-domain path gains."""
    rel = paths.delays - paths.delays.min()
    phase = paths.gains * np.exp(-2j * np.pi * f_c * rel)
    taps = np.arange(grid.T + 1)[:, None]
    return phase[None, :] * triangular_pulse(taps - _tap_offsets(paths, grid)[None, :])


def freq_domain_prm(paths: PathSet, grid: OfdmGrid, f_c: float) -> np.ndarray:
    """``(S, L)`` array of per-subcarrier path responses ``b_l[nu]``."""
    td = time_domain_taps(paths, grid, f_c)
    nu = np.arange(grid.S)[:, None]
    tau = np.arange(grid.T + 1)[None, :]
    dft = np.exp(-2j * np.pi * nu * tau / grid.S)
    return dft @ td


@dataclass(frozen=True, eq=False)
class SideFactors:
    """Geometry-dependent factors of one link end.

    ``frm`` is the ``L x n`` field-response matrix and ``inv_sqrt`` is
    ``C^{-1/2}`` (the identity when coupling is ignored).
    """

    geom: ArrayGeometry
    angles: np.ndarray
    k: float
    coupled: bool
    frm: np.ndarray
    factor: SpdFactor | None
    inv_sqrt: np.ndarray


def side_factors(
    geom: ArrayGeometry, angles, k: float, coupled: bool = True
) -> SideFactors:
    frm = field_response_matrix(geom, angles, k)
    if coupled:
        fac = mc_factor(geom, k)
        W = fac.inv_sqrt
    else:
        fac, W = None, np.eye(geom.size)
    return SideFactors(geom, np.asarray(angles, float), k, coupled, frm, fac, W)


@dataclass(eq=False)
class EffectiveChannel:
    """Effective channel stack ``Hs`` of shape ``(S, N, M)`` with cached factors."""

    tx: SideFactors
    rx: SideFactors
    sigmas: np.ndarray  # (S, L) path responses per subcarrier
    Hs: np.ndarray

    @property
    def S(self) -> int:
        return self.Hs.shape[0]

    @property
    def H(self) -> np.ndarray:
        if self.S != 1:
            raise AttributeError("H is only defined for a single-carrier channel")
        return self.Hs[0]

    def reconstruct(self) -> np.ndarray:
        return compose(self.tx, self.rx, self.sigmas)


def compose(tx: SideFactors, rx: SideFactors, sigmas: np.ndarray) -> np.ndarray:
    left = rx.inv_sqrt @ rx.frm.conj().T  # (N, L)
    right = tx.frm @ tx.inv_sqrt  # (L, M)
    return np.einsum("nl,sl,lm->snm", left, sigmas, right)


def assemble(
    t: ArrayGeometry,
    r: ArrayGeometry,
    paths: PathSet,
    k: float,
    sigmas: np.ndarray,
    coupled: bool = True,
) -> EffectiveChannel:
    tx = side_factors(t, paths.aod, k, coupled)
    rx = side_factors(r, paths.aoa, k, coupled)
    sigmas = np.atleast_2d(sigmas)
    return EffectiveChannel(tx, rx, sigmas, compose(tx, rx, sigmas))


def assemble_narrowband(
    t: ArrayGeometry, r: ArrayGeometry, paths: PathSet, k: float, coupled: bool = True
) -> EffectiveChannel:
    """Narrowband channel with ``b_l = alpha_l``."""
    return assemble(t, r, paths, k, paths.gains[None, :], coupled)


def assemble_wideband(
    t: ArrayGeometry,
    r: ArrayGeometry,
    paths: PathSet,
    grid: OfdmGrid,
    k: float,
    f_c: float | None = None,
    coupled: bool = True,
) -> EffectiveChannel:
    """Per-subcarrier channels sharing one set of geometry factors."""
    if f_c is None:
        f_c = k * SPEED_OF_LIGHT / (2.0 * np.pi)
    return assemble(t, r, paths, k, freq_domain_prm(paths, grid, f_c), coupled)
