"""Linear antenna geometry, steering vectors and coupling matrices.

Angles are elevation angles measured from broadside; positions are in
meters along the array axis. The coupling matrix of isotropic elements has
entries ``sinc(k (x_i - x_j))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matfun import SpdFactor

SPEED_OF_LIGHT = 299_792_458.0

# Gap slack for float round-off when an antenna lands exactly on d_min.
_GAP_RTOL = 1e-9


@dataclass(frozen=True)
class Wavenumber:
    f_c: float

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def k(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @classmethod
    def from_wavelength(cls, lam: float) -> "Wavenumber":
        return cls(SPEED_OF_LIGHT / lam)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Ordered element positions inside ``[0, aperture]`` with spacing ``>= d_min``."""

    positions: np.ndarray
    aperture: float
    d_min: float

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        self.validate()

    def validate(self) -> None:
        pos = self.positions
        if pos.size == 0:
            raise GeometryError("geometry needs at least one element")
        if self.d_min <= 0:
            raise GeometryError("d_min must be positive")
        slack = _GAP_RTOL * max(self.d_min, self.aperture)
        if pos[0] < -slack or pos[-1] > self.aperture + slack:
            raise GeometryError(
                f"positions [{pos[0]:.6g}, {pos[-1]:.6g}] leave [0, {self.aperture:.6g}]"
            )
        gaps = np.diff(pos)
        if gaps.size and gaps.min() < self.d_min - slack:
            raise GeometryError(
                f"adjacent gap {gaps.min():.6g} is below d_min={self.d_min:.6g}"
            )

    @property
    def size(self) -> int:
        return self.positions.size

    def __len__(self) -> int:
        return self.size

    def moved(self, index: int, x: float, check: bool = True) -> "ArrayGeometry":
        """Copy with element ``index`` at ``x``; ``check=False`` skips validation."""
        pos = self.positions.copy()
        pos[index] = x
        if check:
            return ArrayGeometry(pos, self.aperture, self.d_min)
        out = object.__new__(ArrayGeometry)
        pos.setflags(write=False)
        object.__setattr__(out, "positions", pos)
        object.__setattr__(out, "aperture", self.aperture)
        object.__setattr__(out, "d_min", self.d_min)
        return out

    @classmethod
    def uniform(cls, count: int, aperture: float, d_min: float) -> "ArrayGeometry":
        """Evenly spread ``count`` elements over ``[0, aperture]``."""
        if count == 1:
            return cls([0.0], aperture, d_min)
        return cls(np.linspace(0.0, aperture, count), aperture, d_min)


def sinc(x):
    """Unnormalised sinc ``sin(x)/x`` with a series branch near zero."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = 1.0 - xs**2 / 6.0 + xs**4 / 120.0
    xl = x[~small]
    out[~small] = np.sin(xl) / xl
    return out


def steering_vector(geom: ArrayGeometry, theta: float, k: float) -> np.ndarray:
    return np.exp(1j * k * geom.positions * np.sin(theta))


def field_response_matrix(geom: ArrayGeometry, angles, k: float) -> np.ndarray:
    """``L x M`` matrix whose row ``l`` is the steering vector for ``angles[l]``."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 0:
        raise ValueError("need at least one path angle")
    return np.exp(1j * k * np.outer(np.sin(angles), geom.positions))


def steering_derivs(geom: ArrayGeometry, angles, k: float, m: int):
    """First and second derivatives of the field-response matrix w.r.t. ``positions[m]``.

    Only column ``m`` is nonzero.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    s = np.sin(angles)
    col = np.exp(1j * k * geom.positions[m] * s)
    d1 = np.zeros((angles.size, geom.size), dtype=complex)
    d2 = np.zeros_like(d1)
    d1[:, m] = 1j * k * s * col
    d2[:, m] = -(k * s) ** 2 * col
    return d1, d2


def _differences(geom: ArrayGeometry) -> np.ndarray:
    p = geom.positions
    return p[:, None] - p[None, :]


def mc_matrix(geom: ArrayGeometry, k: float) -> np.ndarray:
    """Coupling matrix with entries ``sinc(k (x_i - x_j))``."""
    C = sinc(k * _differences(geom))
    np.fill_diagonal(C, 1.0)
    return C


def mc_factor(geom: ArrayGeometry, k: float) -> SpdFactor:
    return SpdFactor.of(mc_matrix(geom, k))


def _partner_offsets(geom: ArrayGeometry, k: float, m: int) -> np.ndarray:
    delta = geom.positions[m] - geom.positions
    others = np.arange(geom.size) != m
    # Derivative formulas are only used away from the small-argument region.
    if others.any() and np.abs(k * delta[others]).min() < 1e-3:
        raise ValueError("elements too close for the closed-form coupling derivatives")
    return delta, others


def mc_matrix_d1(geom: ArrayGeometry, k: float, m: int) -> np.ndarray:
    """Derivative of :func:`mc_matrix` w.r.t. ``positions[m]``; nonzero in row/column ``m``."""
    delta, others = _partner_offsets(geom, k, m)
    d = delta[others]
    vals = np.cos(k * d) / d - np.sin(k * d) / (k * d**2)
    D = np.zeros((geom.size, geom.size))
    D[m, others] = vals
    D[others, m] = vals
    return D


def mc_matrix_d2(geom: ArrayGeometry, k: float, m: int) -> np.ndarray:
    """Second derivative of :func:`mc_matrix` w.r.t. ``positions[m]``."""
    delta, others = _partner_offsets(geom, k, m)
    d = delta[others]
    kd = k * d
    vals = (
        -k * np.sin(kd) / d
        - 2.0 * np.cos(kd) / d**2
        + 2.0 * np.sin(kd) / (k * d**3)
    )
    D = np.zeros((geom.size, geom.size))
    D[m, others] = vals
    D[others, m] = vals
    return D
