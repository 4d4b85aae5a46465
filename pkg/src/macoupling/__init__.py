"""Capacity optimisation of movable-antenna MIMO links with mutual coupling."""
from .array_model import ArrayGeometry, Wavenumber, mc_matrix
from .channel import OfdmGrid, PathSet, assemble_narrowband, assemble_wideband
from .diagnostics import quality_factor, transmitted_power_density
from .optimizer import (
    TrustRegionConfig,
    baseline_positions,
    bca_narrowband,
    bca_wideband,
    nc_ma_mode,
)
from .rate import capacity_bits, optimal_Q, water_fill
from .scenario import ScenarioParams, draw_scenario

__all__ = [
    "ArrayGeometry", "Wavenumber", "mc_matrix", "OfdmGrid", "PathSet",
    "assemble_narrowband", "assemble_wideband", "quality_factor",
    "transmitted_power_density", "TrustRegionConfig", "baseline_positions",
    "bca_narrowband", "bca_wideband", "nc_ma_mode", "capacity_bits",
    "optimal_Q", "water_fill", "ScenarioParams", "draw_scenario",
]
