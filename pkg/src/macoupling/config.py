"""Experiment configuration: JSON loading, profiles and unit conversion.

All powers are given in dBm (or dBm per MHz / per Hz) in the file and
converted to linear watts here; the rest of the package only sees watts.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .array_model import Wavenumber
from .optimizer import TrustRegionConfig
from .scenario import ScenarioParams

SCHEMA_VERSION = 1

SCHEME_KINDS = ("C-MA", "NC-MA", "ULA", "CLA")
DEFAULT_D_MIN = {"C-MA": 0.2, "NC-MA": 0.5, "ULA": 0.5, "CLA": 0.2}

SWEEP_VARS = ("M", "p_max_dbm", "rho_dbm_per_mhz", "kappa_db", "p", "S")
_NARROWBAND_ONLY = {"p_max_dbm"}
_WIDEBAND_ONLY = {"rho_dbm_per_mhz", "S"}

PROFILES = {
    "desk": {"M": 4, "N": 4, "n_trials": 50, "S": 16},
    "paper": {"M": 8, "N": 8, "n_trials": 1000, "S": 300},
}


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeSpec:
    """One configured scheme. For ULA/CLA ``d_min_lambda`` is the element spacing."""

    kind: str
    d_min_lambda: float | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ConfigError(f"unknown scheme {self.kind!r}; expected one of {SCHEME_KINDS}")
        if self.d_min_lambda is None:
            object.__setattr__(self, "d_min_lambda", DEFAULT_D_MIN[self.kind])
        if not self.d_min_lambda > 0:
            raise ConfigError(f"{self.kind}: d_min must be positive")
        if self.label is None:
            object.__setattr__(self, "label", self.kind)


@dataclass(frozen=True)
class Sweep:
    var: str
    values: tuple

    def __post_init__(self):
        if self.var not in SWEEP_VARS:
            raise ConfigError(f"unknown sweep variable {self.var!r}; expected one of {SWEEP_VARS}")
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ConfigError("sweep grid is empty")


def _default_schemes():
    return tuple(SchemeSpec(k) for k in SCHEME_KINDS)


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte Carlo experiment description.

    ``p`` is the normalised movable range ``D / ((M - 1) lambda)``; both
    link ends use it. A sweep over ``M`` sets ``M = N``.
    """

    mode: str = "narrowband"
    M: int = 4
    N: int = 4
    p: float = 2.0
    n_trials: int = 50
    master_seed: int = 0
    sweep: Sweep | None = None
    schemes: tuple = field(default_factory=_default_schemes)
    p_max_dbm: float = 30.0
    sigma2_dbm: float = -80.0
    rho_dbm_per_mhz: float = 0.0
    n0_dbm_per_hz: float = -174.0
    noise_figure_db: float = 5.0
    S: int = 16
    subcarrier_spacing: float = 15e3
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    trust_region: TrustRegionConfig = field(default_factory=TrustRegionConfig)
    workers: int = 1
    record_wall_time: bool = False
    dump_paths: bool = False
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.mode not in ("narrowband", "wideband"):
            raise ConfigError("mode must be 'narrowband' or 'wideband'")
        if self.M < 1 or self.N < 1:
            raise ConfigError("antenna counts must be >= 1")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in an unsigned 64-bit integer")
        if self.p <= 0 or self.S < 1 or self.subcarrier_spacing <= 0:
            raise ConfigError("p, S and subcarrier spacing must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        schemes = tuple(s if isinstance(s, SchemeSpec) else SchemeSpec(**s) for s in self.schemes)
        if not schemes:
            raise ConfigError("no scheme configured")
        labels = [s.label for s in schemes]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate scheme labels {labels}")
        object.__setattr__(self, "schemes", schemes)
        if self.sweep is not None:
            var = self.sweep.var
            if self.mode == "narrowband" and var in _WIDEBAND_ONLY:
                raise ConfigError(f"sweep over {var} needs wideband mode")
            if self.mode == "wideband" and var in _NARROWBAND_ONLY:
                raise ConfigError(f"sweep over {var} needs narrowband mode")

    @property
    def sweep_var(self) -> str:
        return self.sweep.var if self.sweep else ""

    @property
    def sweep_values(self) -> tuple:
        return self.sweep.values if self.sweep else (None,)

    def at(self, value) -> "ExperimentConfig":
        """Copy with the sweep variable set to ``value``."""
        if self.sweep is None or value is None:
            return self
        var = self.sweep.var
        if var == "M":
            return dataclasses.replace(self, M=int(value), N=int(value))
        if var == "kappa_db":
            return dataclasses.replace(
                self, scenario=dataclasses.replace(self.scenario, kappa_db=float(value)))
        if var == "S":
            return dataclasses.replace(self, S=int(value))
        return dataclasses.replace(self, **{var: float(value)})

    # linear-unit views

    @property
    def wavelength(self) -> float:
        return Wavenumber(self.scenario.f_c).wavelength

    @property
    def k(self) -> float:
        return Wavenumber(self.scenario.f_c).k

    def aperture(self, count: int) -> float:
        return self.p * max(count - 1, 0) * self.wavelength

    @property
    def p_max(self) -> float:
        """Total transmit budget in watts (``rho * S * Delta`` for wideband)."""
        if self.mode == "narrowband":
            return dbm_to_watts(self.p_max_dbm)
        rho = dbm_to_watts(self.rho_dbm_per_mhz) / 1e6
        return rho * self.S * self.subcarrier_spacing

    @property
    def sigma2(self) -> float:
        """Per-carrier noise power in watts."""
        if self.mode == "narrowband":
            return dbm_to_watts(self.sigma2_dbm)
        n0 = dbm_to_watts(self.n0_dbm_per_hz)
        return n0 * self.subcarrier_spacing * db_to_linear(self.noise_figure_db)

    # serialisation

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schemes"] = [dataclasses.asdict(s) for s in self.schemes]
        d["sweep"] = None if self.sweep is None else {
            "var": self.sweep.var, "values": list(self.sweep.values)}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "schema_version" not in data:
            raise ConfigError("config lacks schema_version")
        _reject_unknown(cls, data, "config")
        if data.get("sweep") is not None:
            sw = data["sweep"]
            _reject_unknown(Sweep, sw, "sweep")
            data["sweep"] = Sweep(sw["var"], sw["values"])
        if "schemes" in data:
            for s in data["schemes"]:
                _reject_unknown(SchemeSpec, s, "scheme")
            data["schemes"] = tuple(SchemeSpec(**s) for s in data["schemes"])
        if "scenario" in data:
            _reject_unknown(ScenarioParams, data["scenario"], "scenario")
            data["scenario"] = ScenarioParams(**data["scenario"])
        if "trust_region" in data:
            _reject_unknown(TrustRegionConfig, data["trust_region"], "trust_region")
            data["trust_region"] = TrustRegionConfig(**data["trust_region"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def with_profile(self, name: str) -> "ExperimentConfig":
        """Override the scale fields (array size, trial count, subcarriers)."""
        if name not in PROFILES:
            raise ConfigError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}")
        return dataclasses.replace(self, **PROFILES[name])


def _reject_unknown(cls, data: dict, where: str) -> None:
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {unknown}")


def load_config(path) -> ExperimentConfig:
    with open(Path(path)) as fh:
        return ExperimentConfig.from_dict(json.load(fh))
