"""Single-coordinate objectives and their analytic first/second derivatives.

Both link ends are handled by one routine. For a transmit coordinate the
moving matrix is ``K_nu = H_nu`` with covariance ``Q_nu``; for a receive
coordinate it is ``K_nu = H_nu^H`` with covariance ``S_nu``. In both cases

    K_nu(x) = A diag(s_nu) R(x) W(x)

where ``A`` collects the frozen factors of the opposite end, ``R`` is the
field-response matrix of the moving end and ``W`` its ``C^{-1/2}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import matfun
from .array_model import (
    ArrayGeometry,
    field_response_matrix,
    mc_factor,
    mc_matrix_d1,
    mc_matrix_d2,
    steering_derivs,
)
from .channel import EffectiveChannel
from .rate import LN2


class Side(str, Enum):
    TX = "tx"
    RX = "rx"


@dataclass(frozen=True)
class DerivPair:
    value: float  # objective at the expansion point (bits)
    g: float  # first derivative (bits / m)
    h: float  # second derivative (bits / m^2)


def _hermitian_solve(M, B):
    return np.linalg.solve(M, B)


def _ct(X):
    return np.conj(np.swapaxes(X, -1, -2))


class CoordinateProblem:
    """Objective of one antenna coordinate with everything else frozen.

    ``value(x)`` evaluates the summed log-det rate (bits, without any
    cyclic-prefix factor) with the coordinate moved to ``x``; ``derivs()``
    returns the value and derivatives at the current position.
    """

    def __init__(
        self,
        side: Side,
        index: int,
        geom: ArrayGeometry,
        angles,
        k: float,
        fixed_left: np.ndarray,
        path_resp: np.ndarray,
        covs: np.ndarray,
        sigma2: float,
        coupled: bool = True,
    ):
        self.side = Side(side)
        self.index = index
        self.geom = geom
        self.angles = np.asarray(angles, dtype=float)
        self.k = k
        self.coupled = coupled
        self.sigma2 = sigma2
        self.fixed_left = fixed_left
        self.path_resp = np.atleast_2d(path_resp)
        self.covs = np.asarray(covs)
        # (S, n_out, L): frozen factor times per-carrier path responses
        self._AS = fixed_left[None, :, :] * self.path_resp[:, None, :]

    @property
    def x(self) -> float:
        return float(self.geom.positions[self.index])

    def _factors(self, geom: ArrayGeometry):
        R = field_response_matrix(geom, self.angles, self.k)
        if self.coupled:
            fac = mc_factor(geom, self.k)
            return R, fac, fac.inv_sqrt
        return R, None, np.eye(geom.size)

    def moving_matrix(self, geom: ArrayGeometry | None = None) -> np.ndarray:
        R, _, W = self._factors(self.geom if geom is None else geom)
        return self._AS @ (R @ W)

    def _logdet_bits(self, K) -> float:
        n = K.shape[1]
        M = np.eye(n) + K @ self.covs @ _ct(K) / self.sigma2
        _, ld = np.linalg.slogdet(M)
        return float(ld.sum() / LN2)

    def value(self, x: float, check: bool = True) -> float:
        geom = self.geom.moved(self.index, x, check)
        return self._logdet_bits(self.moving_matrix(geom))

    def moving_derivs(self):
        """``(K, dK/dx, d2K/dx2)`` stacks at the current position."""
        geom, m = self.geom, self.index
        R, fac, W = self._factors(geom)
        dR, d2R = steering_derivs(geom, self.angles, self.k, m)
        if self.coupled:
            dC = mc_matrix_d1(geom, self.k, m)
            d2C = mc_matrix_d2(geom, self.k, m)
            dW = matfun.d_inv_sqrt(fac, dC)
            d2W = matfun.d2_inv_sqrt(fac, dC, d2C)
            B1 = dR @ W + R @ dW
            B2 = d2R @ W + 2.0 * dR @ dW + R @ d2W
        else:
            B1, B2 = dR, d2R
        AS = self._AS
        return AS @ (R @ W), AS @ B1, AS @ B2

    def derivs(self) -> DerivPair:
        K, dK, d2K = self.moving_derivs()
        Q, s2 = self.covs, self.sigma2
        KH, dKH = _ct(K), _ct(dK)
        n = K.shape[1]
        Mmat = np.eye(n) + K @ Q @ KH / s2
        X = dK @ Q @ KH
        Y = d2K @ Q @ KH
        Z = dK @ Q @ dKH
        V = K @ Q @ dKH
        PX, PY, PZ, PV = (
            _hermitian_solve(Mmat, T) for T in (X, Y, Z, V)
        )
        tr = lambda T: np.trace(T, axis1=-2, axis2=-1)  # noqa: E731
        g = 2.0 / s2 * np.real(tr(PX)).sum()
        h = 2.0 / s2 * np.real(
            tr(PY + PZ - PX @ PX / s2 - PX @ PV / s2)
        ).sum()
        _, ld = np.linalg.slogdet(Mmat)
        return DerivPair(float(ld.sum() / LN2), float(g / LN2), float(h / LN2))


def coordinate_problem(
    channel: EffectiveChannel,
    allocs,
    sigma2: float,
    side: Side | str,
    index: int,
) -> CoordinateProblem:
    """Freeze ``channel`` and the covariances for an update of one coordinate.

    ``allocs`` is one :class:`~macoupling.rate.PowerAllocation` per carrier;
    transmit coordinates use ``Q`` and receive coordinates use ``S``.
    """
    side = Side(side)
    tx, rx = channel.tx, channel.rx
    if side is Side.TX:
        left = rx.inv_sqrt @ rx.frm.conj().T  # (N, L)
        covs = np.stack([a.Q for a in allocs])
        return CoordinateProblem(
            side, index, tx.geom, tx.angles, tx.k, left,
            channel.sigmas, covs, sigma2, tx.coupled,
        )
    left = (tx.frm @ tx.inv_sqrt).conj().T  # (M, L)
    covs = np.stack([a.S for a in allocs])
    return CoordinateProblem(
        side, index, rx.geom, rx.angles, rx.k, left,
        channel.sigmas.conj(), covs, sigma2, rx.coupled,
    )


def channel_derivs(problem: CoordinateProblem):
    """Derivatives of the effective channel stack ``H_nu`` w.r.t. the coordinate."""
    _, dK, d2K = problem.moving_derivs()
    if problem.side is Side.RX:
        return _ct(dK), _ct(d2K)
    return dK, d2K


def channel_derivs_tm(channel: EffectiveChannel, m: int):
    """``(dH/dt_m, d2H/dt_m^2)`` for a single-carrier channel."""
    p = CoordinateProblem(
        Side.TX, m, channel.tx.geom, channel.tx.angles, channel.tx.k,
        channel.rx.inv_sqrt @ channel.rx.frm.conj().T, channel.sigmas,
        np.zeros((channel.S, channel.tx.geom.size, channel.tx.geom.size)),
        1.0, channel.tx.coupled,
    )
    dH, d2H = channel_derivs(p)
    return dH[0], d2H[0]


def objective_derivs(problem: CoordinateProblem) -> DerivPair:
    return problem.derivs()


def objective_derivs_nb(channel, alloc, sigma2, side, index) -> DerivPair:
    """Narrowband derivative pair of the log-det objective along one coordinate."""
    return coordinate_problem(channel, [alloc], sigma2, side, index).derivs()


def objective_derivs_wb(channel, allocs, sigma2, side, index) -> DerivPair:
    """Wideband derivative pair: per-subcarrier terms summed over carriers."""
    return coordinate_problem(channel, allocs, sigma2, side, index).derivs()
