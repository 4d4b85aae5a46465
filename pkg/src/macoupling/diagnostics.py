"""Superdirectivity diagnostics."""
from __future__ import annotations

import numpy as np

from .array_model import ArrayGeometry, field_response_matrix, mc_factor


def quality_factor(geom: ArrayGeometry, k: float) -> float:
    """Reciprocal of the smallest eigenvalue of the coupling matrix."""
    return 1.0 / mc_factor(geom, k).min_eig


def transmitted_power_density(geom: ArrayGeometry, Q, aod, k: float) -> float:
    """``tr(G C^{-1/2} Q C^{-1/2} G^H)`` over the departure directions (W/rad).

    ``Q`` may be a stack of per-subcarrier covariances; their
    contributions are summed.
    """
    G = field_response_matrix(geom, aod, k)
    B = G @ mc_factor(geom, k).inv_sqrt
    Q = np.asarray(Q)
    Qsum = Q.sum(axis=0) if Q.ndim == 3 else Q
    return float(np.real(np.trace(B @ Qsum @ B.conj().T)))
