import json

import pytest

from deepobike.cli import main
from deepobike.config import load


def test_pipeline(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    assert main(["defaults", "--out", str(cfg)]) == 0
    text = cfg.read_text().replace("horizon: 60.0", "horizon: 1.0")
    cfg.write_text(text)
    assert load(cfg).horizon == 1.0
    log, pol = tmp_path / "off.csv", tmp_path / "pol.json"
    assert main(["collect", "--config", str(cfg), "--out", str(log)]) == 0
    assert main(["init", "--config", str(cfg), "--log", str(log), "--out", str(pol)]) == 0
    assert json.loads(pol.read_text())["stabilizing"] is True
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--log", str(log), "--policy", str(pol),
                 "--baseline", "--out-dir", str(out)]) == 0
    assert (out / "episode_deepo.csv").exists() and (out / "episode_fl_only.csv").exists()
    sw = tmp_path / "sweep"
    assert main(["sweep", "--config", str(cfg), "--zeta", "inf", "4", "--repeats", "1",
                 "--workers", "1", "--out-dir", str(sw)]) == 0
    assert len((sw / "summary.csv").read_text().strip().splitlines()) == 4
    assert main(["report", "--in-dir", str(sw), "--out-dir", str(tmp_path / "rep")]) == 0
    assert "ISE_phi" in capsys.readouterr().out


def test_exit_codes(tmp_path):
    assert main(["init", "--log", str(tmp_path / "missing.csv"),
                 "--out", str(tmp_path / "p.json")]) == 5
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 5
    assert main(["report", "--in-dir", str(tmp_path / "nowhere")]) == 5
    bad = tmp_path / "bad.yaml"
    bad.write_text("sigma_pe: 0.0\nhorizon: 1.0\nnoise: {sigma_phi: 0, sigma_phi_dot: 0, "
                   "sigma_delta: 0}\n")
    assert main(["collect", "--config", str(bad), "--out", str(tmp_path / "o.csv")]) == 3


def test_fall_exit_code(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("horizon: 20.0\nplant: {centrifugal_sign: -1.0}\n")
    assert main(["run", "--config", str(cfg), "--fl-only", "--out-dir",
                 str(tmp_path / "r")]) == 2


def test_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
