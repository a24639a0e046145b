import math

import numpy as np
import pytest

from deepobike.config import (ExperimentConfig, Mismatch, dump, from_dict, load, profile,
                              to_dict, zeta_to_lambda)
from deepobike.errors import ConfigError


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.steps == 6000 and cfg.dt == 0.01 and cfg.offline_T == 200
    assert cfg.sigma_pe == 0.2 and cfg.gamma == 1.0
    np.testing.assert_array_equal(cfg.deepo.Q, np.diag([1.0, 0.01]))
    assert cfg.deepo.R[0, 0] == 1e-4 and cfg.deepo.eta0 == 1e-3
    assert (cfg.fl.k1, cfg.fl.k2) == (1.0, 6.0)
    assert cfg.noise.sigma_phi == 0.5


def test_zeta_mapping():
    assert zeta_to_lambda(math.inf) == 1.0
    assert zeta_to_lambda(4) == 1 - 1e-4


def test_yaml_roundtrip(tmp_path):
    cfg = profile("hardware-like").with_(seed=7, mismatch=Mismatch(a=1.1))
    cfg = cfg.with_(plant=cfg.plant.__class__(actuator_pole=math.inf))
    p = tmp_path / "c.yaml"
    dump(cfg, p)
    back = load(p)
    assert to_dict(back) == to_dict(cfg)
    assert back.plant.actuator_pole == math.inf
    assert back.true_plant.a == pytest.approx(0.605)


def test_hardware_profile():
    cfg = profile("hardware-like")
    np.testing.assert_array_equal(cfg.deepo.Q, np.eye(2))
    assert cfg.deepo.R[0, 0] == 0.01 and cfg.offline_T == 300


def test_partial_dict_keeps_defaults():
    cfg = from_dict({"deepo": {"xi": 10}, "seed": 3})
    assert cfg.deepo.xi == 10 and cfg.seed == 3 and cfg.horizon == 60.0


@pytest.mark.parametrize("bad", [{"horizon": -1.0}, {"mode": "fly"}, {"offline_T": 5000},
                                 {"deepo": {"xi": 0}}, {"unknown": 1}])
def test_invalid(bad):
    with pytest.raises(ConfigError):
        from_dict(bad)


def test_unknown_profile():
    with pytest.raises(ConfigError):
        profile("track-day")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "nope.yaml")
