"""Experiment configuration: defaults, presets, YAML loading and validation."""

from __future__ import annotations

import copy
import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources

import yaml

from ..core import ConfigError
from ..modem import build_constellation
from ..rates import CIRCULAR

EXPERIMENTS = ("ber_sweep", "rate_sweep", "allocation", "ris_scaling", "fdsr_sweep", "oracle_suite")
DETECTORS = ("ml", "mrc", "zf", "mmse", "sic_zf", "sic_mmse")
CHANNELS = ("double_rayleigh", "rayleigh", "fixed")
RATE_METRICS = ("primary_upper", "primary_lower", "secondary")
MIN_BER_TRIALS = 1000


@dataclass(frozen=True)
class SystemSection:
    p: float = 1.0
    alpha: float = 1.0
    active_load: bool = False
    backscatter_gain_db: float = -20.0
    channel: str = "double_rayleigh"
    primary: str = "bpsk"
    secondary: str = "bpsk"


@dataclass(frozen=True)
class SweepSection:
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    K: tuple = (1,)
    M_r: tuple = (2,)
    trials: int = 10000


@dataclass(frozen=True)
class BerSection:
    detectors: tuple = ("ml", "sic_zf", "zf")
    links: tuple = ("full",)
    squared_moduli: bool = False


@dataclass(frozen=True)
class RateSection:
    metrics: tuple = RATE_METRICS
    alpha_points: int = 0


@dataclass(frozen=True)
class AllocationSection:
    mode: str = "siso"
    states: int = 4
    weights: tuple = (1.0, 1.0)
    peak_power: float = None
    avg_power: float = 1.0
    grid: int = 64
    primary_rate: str = "upper"
    M_t: int = 4
    power_budget: float = 100.0
    min_primary_rate: float = 1.0
    min_secondary_rate: float = 0.5


@dataclass(frozen=True)
class RisSection:
    M_b: tuple = (2, 4, 8, 16, 32)


@dataclass(frozen=True)
class FdsrSection:
    beta1: complex = 1.0
    beta2: complex = 0.1
    residual_factors: tuple = (0.0,)


@dataclass(frozen=True)
class OracleSection:
    ml_blocks: int = 1000
    alloc_instances: int = 100
    alloc_grid: int = 64
    oracle_grid: int = 256
    impedance_draws: int = 10000
    mmse_draws: int = 1000


SECTIONS = {
    "system": SystemSection,
    "sweep": SweepSection,
    "ber": BerSection,
    "rate": RateSection,
    "allocation": AllocationSection,
    "ris": RisSection,
    "fdsr": FdsrSection,
    "oracle": OracleSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "ber_sweep"
    seed: int = 2024
    out: str = None
    workers: int = 0
    chunk: int = 20000
    system: SystemSection = field(default_factory=SystemSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    ber: BerSection = field(default_factory=BerSection)
    rate: RateSection = field(default_factory=RateSection)
    allocation: AllocationSection = field(default_factory=AllocationSection)
    ris: RisSection = field(default_factory=RisSection)
    fdsr: FdsrSection = field(default_factory=FdsrSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    preset: str = None

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


# Presets, one per reproducible claim.
PRESETS = {
    "spreading_gain": {
        "experiment": "ber_sweep",
        "sweep": {"snr_db": [20, 22, 24, 26, 28, 30, 32, 34, 36], "K": [2, 4], "M_r": [2],
                  "trials": 200000},
        "ber": {"detectors": ["ml"]},
    },
    "primary_benefit": {
        "experiment": "ber_sweep",
        "system": {"backscatter_gain_db": -3.0},
        "sweep": {"snr_db": [10, 12, 14, 16, 18, 20], "K": [8], "M_r": [1], "trials": 200000},
        "ber": {"detectors": ["ml"], "links": ["full", "direct_only"]},
    },
    "detector_ordering": {
        "experiment": "ber_sweep",
        "sweep": {"snr_db": [10, 20, 30], "K": [2], "M_r": [2], "trials": 100000},
        "ber": {"detectors": ["ml", "sic_zf", "zf"]},
    },
    "secondary_slope": {
        "experiment": "rate_sweep",
        "system": {"channel": "rayleigh", "backscatter_gain_db": 0.0},
        "sweep": {"snr_db": [30, 40], "K": [1], "M_r": [1], "trials": 200000},
        "rate": {"metrics": ["secondary"]},
    },
    "upper_scaling": {
        "experiment": "rate_sweep",
        "system": {"channel": "rayleigh", "backscatter_gain_db": 0.0},
        "sweep": {"snr_db": [40], "K": [1, 2, 4, 8], "M_r": [1, 2, 4, 8], "trials": 20000},
        "rate": {"metrics": ["secondary"]},
    },
    "mutualism": {
        "experiment": "rate_sweep",
        "system": {"backscatter_gain_db": 0.0, "secondary": "circular"},
        "sweep": {"snr_db": [0, 10, 20, 30], "K": [1], "M_r": [1], "trials": 100},
        "rate": {"metrics": ["primary_upper", "secondary"], "alpha_points": 33},
    },
    "ris_scaling": {
        "experiment": "ris_scaling",
        "sweep": {"snr_db": [0], "K": [1], "M_r": [1], "trials": 20000},
        "ris": {"M_b": [2, 4, 8, 16, 32]},
    },
    "oracles": {
        "experiment": "oracle_suite",
        "sweep": {"snr_db": [5], "K": [1, 2, 3], "M_r": [1, 2], "trials": 1000},
    },
    "fdsr_cancellation": {
        "experiment": "fdsr_sweep",
        "sweep": {"snr_db": [14, 17, 20], "K": [4], "M_r": [1], "trials": 100000},
        "fdsr": {"beta1": [1.0, 0.0], "beta2": [0.1, 0.0],
                 "residual_factors": [0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]},
    },
}


def default_dict():
    text = resources.files("symradio.harness").joinpath("default.yaml").read_text("utf-8")
    return yaml.safe_load(text)


def _merge(base, update, where=""):
    out = copy.deepcopy(base)
    for key, value in (update or {}).items():
        if key not in out and key != "preset":
            raise ConfigError("unknown key", f"{where}{key}")
        if isinstance(out.get(key), dict):
            if not isinstance(value, dict):
                raise ConfigError("expected a mapping", f"{where}{key}")
            out[key] = _merge(out[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def _tuple(value, name, cast):
    if not isinstance(value, (list, tuple)):
        value = [value]
    try:
        return tuple(cast(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad list entry ({exc})", name) from None


def _complex(value, name):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    try:
        return complex(value)
    except (TypeError, ValueError):
        raise ConfigError("expected a number or [re, im]", name) from None


def _section(cls, data, name):
    kwargs = {}
    for f in dataclasses.fields(cls):
        value = data.get(f.name, f.default)
        full = f"{name}.{f.name}"
        if isinstance(f.default, tuple):
            if f.name in ("K", "M_r", "M_b"):
                value = _tuple(value, full, int)
            elif f.name in ("snr_db", "weights", "residual_factors"):
                value = _tuple(value, full, float)
            else:
                value = _tuple(value, full, str)
        elif f.name in ("beta1", "beta2"):
            value = _complex(value, full)
        kwargs[f.name] = value
    return cls(**kwargs)


def from_dict(data):
    """Build and validate a config from a fully merged mapping."""
    try:
        cfg = ExperimentConfig(
            experiment=str(data["experiment"]),
            seed=int(data["seed"]),
            out=data.get("out"),
            workers=int(data["workers"]),
            chunk=int(data["chunk"]),
            preset=data.get("preset"),
            **{name: _section(cls, data.get(name) or {}, name) for name, cls in SECTIONS.items()},
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def load_config(path=None, preset=None, seed=None, out=None, workers=None):
    """
    Defaults, then a preset, then the user file, then explicit overrides.

    Raises
    ------
    ConfigError
        Unknown keys, unknown preset, or any failed validation; the message
        names the offending field.
    """
    data = default_dict()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}", "preset")
        data = _merge(data, PRESETS[preset])
        data["preset"] = preset
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}", "config") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}", "config") from None
        if not isinstance(user, dict):
            raise ConfigError("top level must be a mapping", "config")
        data = _merge(data, user)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["out"] = out
    if workers is not None:
        data["workers"] = workers
    return from_dict(data)


def preset_config(name, **overrides):
    """Config of a named preset, with top-level fields replaced."""
    cfg = load_config(preset=name)
    return cfg.replace(**overrides) if overrides else cfg


def validate(cfg):
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"must be one of {EXPERIMENTS}", "experiment")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("must be an unsigned 64-bit integer", "seed")
    if cfg.workers < 0:
        raise ConfigError("must be >= 0", "workers")
    if cfg.chunk < 1:
        raise ConfigError("must be >= 1", "chunk")

    sysc, sw = cfg.system, cfg.sweep
    if not sysc.p > 0:
        raise ConfigError("must be positive", "system.p")
    if sysc.alpha < 0 or (sysc.alpha > 1 and not sysc.active_load):
        raise ConfigError("must lie in [0, 1] unless active_load is set", "system.alpha")
    if sysc.channel not in CHANNELS:
        raise ConfigError(f"must be one of {CHANNELS}", "system.channel")
    for name in ("primary", "secondary"):
        value = getattr(sysc, name)
        if name == "secondary" and value == CIRCULAR:
            if cfg.experiment not in ("rate_sweep", "allocation"):
                raise ConfigError("'circular' is only meaningful for rate and allocation runs",
                                  "system.secondary")
            continue
        try:
            build_constellation(value)
        except ValueError as exc:
            raise ConfigError(str(exc), f"system.{name}") from None

    snr = sw.snr_db
    if not snr:
        raise ConfigError("needs at least one point", "sweep.snr_db")
    if any(math.isnan(s) for s in snr) or any(b <= a for a, b in zip(snr, snr[1:])):
        raise ConfigError("must be strictly increasing", "sweep.snr_db")
    if not sw.K or any(k < 1 for k in sw.K):
        raise ConfigError("entries must be >= 1", "sweep.K")
    if not sw.M_r or any(m < 1 for m in sw.M_r):
        raise ConfigError("entries must be >= 1", "sweep.M_r")
    if sw.trials < 1:
        raise ConfigError("must be >= 1", "sweep.trials")

    if cfg.experiment == "ber_sweep":
        if sw.trials < MIN_BER_TRIALS:
            raise ConfigError(f"BER experiments need at least {MIN_BER_TRIALS} trials", "sweep.trials")
        bad = [d for d in cfg.ber.detectors if d not in DETECTORS]
        if bad or not cfg.ber.detectors:
            raise ConfigError(f"unknown detector(s) {bad}; choose from {DETECTORS}", "ber.detectors")
        if any(lk not in ("full", "direct_only") for lk in cfg.ber.links) or not cfg.ber.links:
            raise ConfigError("entries must be 'full' or 'direct_only'", "ber.links")
        if "direct_only" in cfg.ber.links and set(cfg.ber.detectors) != {"ml"}:
            raise ConfigError("the direct_only baseline is defined for the ML detector only", "ber.links")
        if {"zf", "sic_zf"} & set(cfg.ber.detectors) and min(sw.M_r) < 2:
            raise ConfigError("ZF-based detectors need M_r >= 2", "sweep.M_r")
    if cfg.experiment == "rate_sweep":
        bad = [m for m in cfg.rate.metrics if m not in RATE_METRICS]
        if bad or not cfg.rate.metrics:
            raise ConfigError(f"unknown metric(s) {bad}", "rate.metrics")
        if cfg.rate.alpha_points == 1 or cfg.rate.alpha_points < 0:
            raise ConfigError("use 0 (off) or at least 2 points", "rate.alpha_points")
        if cfg.rate.alpha_points == 0 and sw.trials < 100:
            raise ConfigError("ergodic averages need at least 100 draws", "sweep.trials")
    if cfg.experiment == "allocation":
        al = cfg.allocation
        if al.mode not in ("siso", "miso"):
            raise ConfigError("must be 'siso' or 'miso'", "allocation.mode")
        if al.grid < 32:
            raise ConfigError("must be >= 32", "allocation.grid")
        if len(al.weights) != 2 or min(al.weights) < 0 or max(al.weights) == 0:
            raise ConfigError("two non-negative weights, not both zero", "allocation.weights")
        if al.states < 1 or al.M_t < 1:
            raise ConfigError("must be >= 1", "allocation.states")
        if al.primary_rate not in ("upper", "lower"):
            raise ConfigError("must be 'upper' or 'lower'", "allocation.primary_rate")
    if cfg.experiment == "fdsr_sweep":
        if any(not 0 <= r <= 1 for r in cfg.fdsr.residual_factors) or not cfg.fdsr.residual_factors:
            raise ConfigError("entries must lie in [0, 1]", "fdsr.residual_factors")
        if cfg.system.secondary != "bpsk":
            raise ConfigError("FDSR sweeps use a BPSK secondary symbol", "system.secondary")
    if cfg.experiment == "ris_scaling" and (not cfg.ris.M_b or min(cfg.ris.M_b) < 1):
        raise ConfigError("entries must be >= 1", "ris.M_b")


def config_to_dict(cfg):
    """Plain mapping (YAML-serializable) of a config."""
    out = dataclasses.asdict(cfg)
    for section in ("fdsr",):
        for key in ("beta1", "beta2"):
            z = out[section][key]
            out[section][key] = [z.real, z.imag]
    return out
