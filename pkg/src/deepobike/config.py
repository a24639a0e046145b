"""Experiment configuration with YAML round-trip and named profiles."""
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from .deepo import DeepoConfig
from .errors import ConfigError
from .fl import FlParams, ReferenceSpec
from .plant import BicycleParams, SensorNoise

MODES = ("collect", "run_fl_only", "run_deepo")


@dataclass(frozen=True)
class Mismatch:
    """Multiplicative factors from the nominal (FL) model to the simulated plant."""

    a: float = 1.0
    h: float = 1.0
    b: float = 1.0


@dataclass
class ExperimentConfig:
    plant: BicycleParams = field(default_factory=BicycleParams)
    mismatch: Mismatch = field(default_factory=Mismatch)
    fl: FlParams = field(default_factory=FlParams)
    deepo: DeepoConfig = field(default_factory=DeepoConfig)
    noise: SensorNoise = field(default_factory=SensorNoise)
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    sigma_pe: float = 0.2
    gamma: float = 1.0
    offline_lam: float = 1.0
    horizon: float = 60.0
    offline_duration: float = 10.0
    dt: float = 0.01
    offline_T: int = 200
    seed: int = 0
    mode: str = "run_deepo"

    def __post_init__(self):
        if self.horizon <= 0 or self.dt <= 0:
            raise ConfigError("horizon and dt must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.offline_T < 1:
            raise ConfigError("offline_T must be positive")
        if self.offline_T > round(self.offline_duration / self.dt):
            raise ConfigError("offline_duration too short for offline_T samples")

    @property
    def true_plant(self):
        """Plant actually simulated: nominal parameters times the mismatch factors."""
        return self.plant.scaled(**asdict(self.mismatch))

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    def with_(self, **kw):
        return replace(self, **kw)


def _to_plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if hasattr(obj, "__dataclass_fields__"):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    return obj


def to_dict(cfg):
    return _to_plain(cfg)


def _num(v):
    if isinstance(v, str):
        return float(v)
    return v


def from_dict(d):
    d = dict(d or {})
    try:
        plant = BicycleParams(**{k: _num(v) for k, v in d.pop("plant", {}).items()})
        fl_d = dict(d.pop("fl", {}))
        model = fl_d.pop("model", None)
        fl = FlParams(model=BicycleParams(**{k: _num(v) for k, v in model.items()})
                      if model else plant, **fl_d)
        deepo = DeepoConfig(**d.pop("deepo", {}))
        noise = SensorNoise(**d.pop("noise", {}))
        reference = ReferenceSpec(**d.pop("reference", {}))
        mismatch = Mismatch(**d.pop("mismatch", {}))
        return ExperimentConfig(plant=plant, mismatch=mismatch, fl=fl, deepo=deepo,
                                noise=noise, reference=reference, **d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dump(cfg, path):
    with open(path, "w") as fh:
        yaml.safe_dump(to_dict(cfg), fh, sort_keys=False)


def load(path):
    try:
        with open(path) as fh:
            return from_dict(yaml.safe_load(fh))
    except OSError as exc:
        raise ConfigError(str(exc)) from exc


def zeta_to_lambda(zeta):
    """Forgetting factor ``1 - 10**-zeta``; ``zeta = inf`` gives exactly 1."""
    zeta = float(zeta)
    return 1.0 if math.isinf(zeta) else 1.0 - 10.0 ** (-zeta)


def profile(name="simulation"):
    """Named defaults: ``simulation`` (simulation weights) or ``hardware-like``."""
    cfg = ExperimentConfig()
    if name == "simulation":
        return cfg
    if name == "hardware-like":
        deepo = replace(cfg.deepo, Q=np.eye(2), R=np.array([[0.01]]))
        return replace(cfg, deepo=deepo, offline_T=300)
    raise ConfigError(f"unknown profile {name!r}")
