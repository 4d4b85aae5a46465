"""Matrix functions of symmetric positive-definite matrices.

Square roots, inverse square roots, a Sylvester solver for symmetric
coefficient matrices, and the first/second directional derivatives of
``C^{1/2}`` and ``C^{-1/2}`` obtained from Sylvester equations.

Everything is done through one symmetric eigendecomposition per matrix,
wrapped in :class:`SpdFactor` so that the derivative routines reuse it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Smallest admissible eigenvalue of a coupling matrix.
EIG_FLOOR = 1e-12
#: Relative tolerance used for the symmetry check.
SYM_RTOL = 1e-12


class IllConditionedCouplingError(ValueError):
    """Raised when a matrix that must be positive definite is not (numerically)."""

    def __init__(self, eigenvalue: float, floor: float = EIG_FLOOR):
        self.eigenvalue = float(eigenvalue)
        self.floor = floor
        super().__init__(
            f"smallest eigenvalue {self.eigenvalue:.3e} is below the floor {floor:.1e}"
        )


def _check_symmetric(C: np.ndarray, name: str = "matrix") -> np.ndarray:
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"{name} must be square, got shape {C.shape}")
    scale = max(np.abs(C).max(initial=0.0), 1.0)
    if np.abs(C - C.T).max(initial=0.0) > SYM_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")
    return C


@dataclass(frozen=True)
class SpdFactor:
    """Eigendecomposition ``C = U diag(w) U^T`` of an SPD matrix.

    Construct through :meth:`of`, which validates symmetry and the
    eigenvalue floor.
    """

    C: np.ndarray
    w: np.ndarray
    U: np.ndarray

    @classmethod
    def of(cls, C, floor: float = EIG_FLOOR) -> "SpdFactor":
        C = _check_symmetric(np.asarray(C, dtype=float), "C")
        C = 0.5 * (C + C.T)
        w, U = np.linalg.eigh(C)
        if w[0] < floor:
            raise IllConditionedCouplingError(w[0], floor)
        return cls(C=C, w=w, U=U)

    @property
    def dim(self) -> int:
        return self.w.size

    @property
    def min_eig(self) -> float:
        return float(self.w[0])

    def power(self, p: float) -> np.ndarray:
        return (self.U * self.w**p) @ self.U.T

    @property
    def sqrt(self) -> np.ndarray:
        return self.power(0.5)

    @property
    def inv_sqrt(self) -> np.ndarray:
        return self.power(-0.5)

    def sylvester_sqrt(self, Q: np.ndarray) -> np.ndarray:
        """Solve ``X C^{1/2} + C^{1/2} X = Q`` in the eigenbasis."""
        s = np.sqrt(self.w)
        Qt = self.U.T @ Q @ self.U
        return self.U @ (Qt / (s[:, None] + s[None, :])) @ self.U.T


def _factor(C) -> SpdFactor:
    return C if isinstance(C, SpdFactor) else SpdFactor.of(C)


def spd_sqrt(C) -> np.ndarray:
    """Principal square root of an SPD matrix."""
    return _factor(C).sqrt


def spd_inv_sqrt(C) -> np.ndarray:
    """Inverse principal square root ``W`` with ``W C W = I``."""
    return _factor(C).inv_sqrt


def solve_sylvester(A, B, Q) -> np.ndarray:
    """Solve ``A X + X B = Q`` for symmetric positive-definite ``A`` and ``B``.

    Both coefficient matrices are diagonalised; the transformed equation is
    then solved entrywise. ``Q`` may be complex.
    """
    fa, fb = _factor(A), _factor(B)
    Q = np.asarray(Q)
    if Q.shape != (fa.dim, fb.dim):
        raise ValueError(
            f"right-hand side has shape {Q.shape}, expected {(fa.dim, fb.dim)}"
        )
    Qt = fa.U.T @ Q @ fb.U
    Xt = Qt / (fa.w[:, None] + fb.w[None, :])
    return fa.U @ Xt @ fb.U.T


def _sym(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.T)


def d_sqrt(C, dC) -> np.ndarray:
    """Directional derivative of ``C^{1/2}`` along the symmetric direction ``dC``."""
    f = _factor(C)
    return _sym(f.sylvester_sqrt(np.asarray(dC, dtype=float)))


def d2_sqrt(C, dC, d2C) -> np.ndarray:
    """Second directional derivative of ``C^{1/2}``.

    Solves ``S X + X S = d2C - 2 D^2`` with ``S = C^{1/2}`` and ``D`` the
    first derivative.
    """
    f = _factor(C)
    Ds = d_sqrt(f, dC)
    return _sym(f.sylvester_sqrt(np.asarray(d2C, dtype=float) - 2.0 * Ds @ Ds))


def d_inv_sqrt(C, dC) -> np.ndarray:
    """Directional derivative of ``C^{-1/2}`` along ``dC``.

    Solves ``D C^{1/2} + C^{1/2} D = -C^{-1/2} dC C^{-1/2}``.
    """
    f = _factor(C)
    W = f.inv_sqrt
    return _sym(f.sylvester_sqrt(-W @ np.asarray(dC, dtype=float) @ W))


def d2_inv_sqrt(C, dC, d2C) -> np.ndarray:
    """Second directional derivative of ``C^{-1/2}``.

    ``dC`` and ``d2C`` are the first and second derivatives of ``C`` along
    the path. The first-order quantities are materialised first and the
    five right-hand-side terms are assembled before a single solve.
    """
    f = _factor(C)
    W = f.inv_sqrt
    dC = np.asarray(dC, dtype=float)
    d2C = np.asarray(d2C, dtype=float)
    D1 = d_inv_sqrt(f, dC)
    Ds = d_sqrt(f, dC)
    rhs = (
        -W @ d2C @ W
        - W @ dC @ D1
        - D1 @ dC @ W
        - Ds @ D1
        - D1 @ Ds
    )
    return _sym(f.sylvester_sqrt(rhs))
