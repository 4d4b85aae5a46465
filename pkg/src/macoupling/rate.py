"""Log-det rates and water-filling power allocation (bits/s/Hz)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN2 = np.log(2.0)
#: Singular values below this fraction of the largest one are treated as zero.
RANK_RTOL = 1e-10


def capacity_bits(H, Q, sigma2: float) -> float:
    """``log2 det(I + H Q H^H / sigma2)``."""
    H = np.asarray(H)
    Q = np.asarray(Q)
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    Qh = 0.5 * (Q + Q.conj().T)
    tr = float(np.real(np.trace(Qh)))
    if np.linalg.eigvalsh(Qh).min() < -1e-10 * max(abs(tr), 1e-300):
        raise ValueError("covariance is not positive semidefinite")
    A = np.eye(H.shape[0]) + H @ Qh @ H.conj().T / sigma2
    sign, logdet = np.linalg.slogdet(A)
    return float(logdet / LN2)


def _water_level(floors: np.ndarray, p_max: float, iters: int = 300) -> float:
    """Bisection for ``mu`` with ``sum(max(0, mu - floors)) = p_max``."""
    lo, hi = 0.0, p_max + floors.min()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(mid - floors, 0.0).sum() > p_max:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


@dataclass(eq=False)
class PowerAllocation:
    """Water-filled eigenmode powers.

    ``Q = V diag(P) V^H`` is the transmit covariance and
    ``S = U diag(P) U^H`` its receive-side counterpart.
    """

    powers: np.ndarray
    mu: float
    gains: np.ndarray  # singular values of the active eigenchannels
    V: np.ndarray | None = None
    U: np.ndarray | None = None

    @property
    def Q(self) -> np.ndarray:
        return (self.V * self.powers) @ self.V.conj().T

    @property
    def S(self) -> np.ndarray:
        return (self.U * self.powers) @ self.U.conj().T

    @property
    def total(self) -> float:
        return float(self.powers.sum())

    def rate_bits(self, sigma2: float) -> float:
        return float(np.log1p(self.gains**2 * self.powers / sigma2).sum() / LN2)


def water_fill(singulars, sigma2: float, p_max: float) -> PowerAllocation:
    """Single-carrier water-filling over strictly positive singular values."""
    (alloc,) = water_fill_multicarrier([singulars], sigma2, p_max)
    return alloc


def water_fill_multicarrier(per_carrier, sigma2: float, p_max: float):
    """Water-filling with one water level shared by every (carrier, mode) pair."""
    if p_max <= 0:
        raise ValueError("power budget must be positive")
    per_carrier = [np.asarray(s, dtype=float).reshape(-1) for s in per_carrier]
    if any((s <= 0).any() for s in per_carrier):
        raise ValueError("singular values passed to water-filling must be positive")
    floors = np.concatenate([sigma2 / s**2 for s in per_carrier]) if per_carrier else []
    if len(floors) == 0:
        raise ValueError("no positive singular value to allocate power to")
    mu = _water_level(floors, p_max)
    return [
        PowerAllocation(np.maximum(mu - sigma2 / s**2, 0.0), mu, s)
        for s in per_carrier
    ]


def _svd_active(H):
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("channel matrix is all zero")
    keep = s > RANK_RTOL * s[0]
    return U[:, keep], s[keep], Vh[keep].conj().T


def optimal_Q(H, sigma2: float, p_max: float) -> PowerAllocation:
    """Capacity-achieving covariance by SVD and water-filling."""
    (alloc,) = optimal_Q_multicarrier([H], sigma2, p_max)
    return alloc


def optimal_Q_multicarrier(Hs, sigma2: float, p_max: float):
    """Per-subcarrier covariances under a total power budget across carriers."""
    svds = [_svd_active(H) for H in Hs]
    allocs = water_fill_multicarrier([s for _, s, _ in svds], sigma2, p_max)
    for alloc, (U, _, V) in zip(allocs, svds):
        alloc.U, alloc.V = U, V
    return allocs


def sum_rate(Hs, Qs, sigma2: float, S: int, S_cp: int) -> float:
    """CP-discounted sum of per-subcarrier log-det rates."""
    total = sum(capacity_bits(H, Q, sigma2) for H, Q in zip(Hs, Qs))
    return S / (S + S_cp) * total
