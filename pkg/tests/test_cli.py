import json

import pytest

from wavelattice.cli import main, parse_radius
from wavelattice.config import ConfigError, ModelConfig, parse_config, preset, preset_names
from wavelattice.lattice import canonical

MINIMAL = {"xi": 3, "init_C1": 30, "init_C2": 1, "init_C3": 1, "gamma": 1}
SMALL = dict(MINIMAL, rho_max=2, n_dir=2, angular_profile="random-band", seed=4,
             t_end=0.2, output_interval=0.1)


def test_minimal_document_accepted():
    cfg = parse_config(json.dumps(MINIMAL))
    assert cfg == ModelConfig()
    assert isinstance(cfg.init_C1, float)


@pytest.mark.parametrize("doc, key, fragment", [
    (dict(MINIMAL, xi=4), "xi", "Ξ must be prime ≥ 3"),
    (dict(MINIMAL, init_C1=5), "init_C1", "5 must be > 10"),
    ({"xi": 3, "init_C1": 30, "init_C2": 1, "init_C3": 1}, "gamma", "missing"),
    (dict(MINIMAL, n_dir="64"), "n_dir", "expected an integer"),
    (dict(MINIMAL, bogus=1), "bogus", "unknown key"),
    (dict(MINIMAL, r_max=[1]), "r_max", "[m, eta]"),
])
def test_config_errors_name_key_and_constraint(doc, key, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(doc))
    assert info.value.key == key
    assert fragment in str(info.value)


def test_malformed_document():
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")


def test_presets():
    assert preset_names() == ["default", "deep", "radial", "nonradial-sin",
                              "no-condensate-channel", "picard-xval"]
    d = preset("default")
    assert (d.xi, d.norm_weight, d.gamma, d.init_C1, d.init_C2, d.init_C3) == (3, 2, 1, 30, 1, 1)
    assert (d.rho_max, d.eta_max, d.r_max, d.n_dir, d.t_end) == (6, 12, (4, 0), 64, 50)
    assert preset("deep").rho_max == 8
    assert preset("radial").angular_profile == "constant"
    off = preset("no-condensate-channel")
    assert not off.condensate_channel
    assert ModelConfig(condensate_channel=False) == off
    with pytest.raises(KeyError, match="available: default, deep"):
        preset("nope")


def test_presets_command(capsys):
    assert main(["presets"]) == 0
    assert capsys.readouterr().out.split() == preset_names()
    assert main(["presets", "radial"]) == 0
    assert json.loads(capsys.readouterr().out)["angular_profile"] == "constant"
    assert main(["presets", "nope"]) == 2
    assert "available" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(dict(MINIMAL, xi=4)))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "Ξ must be prime ≥ 3" in capsys.readouterr().err


def test_simulate_verify_and_replay(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SMALL))
    out1 = tmp_path / "run1"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out1), "--quiet"]) == 0
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert [f["kind"] for f in manifest["emitted_files"]] == [
        "series_csv", "snapshot_json", "verdict_json"]
    lines = (out1 / "series.csv").read_text().splitlines()
    assert len(lines) == 1 + 3

    out2 = tmp_path / "run2"
    assert main(["simulate", "--config", str(out1 / "manifest.json"),
                 "--out", str(out2), "--quiet"]) == 0
    assert (out1 / "series.csv").read_bytes() == (out2 / "series.csv").read_bytes()
    assert (out1 / "snapshot.json").read_bytes() == (out2 / "snapshot.json").read_bytes()

    capsys.readouterr()
    code = main(["verify", str(out1), "--out", str(tmp_path / "v.json")])
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["energy_conservation"]["ok"]
    assert code == (0 if all(v["ok"] for v in verdict.values()) else 1)
    assert json.loads((tmp_path / "v.json").read_text()) == verdict


def test_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--preset", "picard-xval", "--seed", "9", "--t-end", "0.005",
                 "--out", str(out), "--quiet"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 9 and manifest["config"]["t_end"] == 0.005
    assert manifest["preset_name"] == "picard-xval"


def test_verify_needs_a_config(tmp_path, capsys):
    (tmp_path / "series.csv").write_text("t,positive_mass\n0,1\n")
    assert main(["verify", str(tmp_path / "series.csv")]) == 2
    assert "manifest" in capsys.readouterr().err


def test_resonances(capsys):
    assert main(["resonances", "1", "--support", "1/3,2/3,1,2", "--quiet"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["merge  1/3 + 2/3 = 1", "split  2 - 1 = 1"]
    assert main(["resonances", "1/2"]) == 2


def test_parse_radius():
    assert parse_radius(3, "7/3") == canonical(3, 7, 1)
    assert parse_radius(3, "2@1") == canonical(3, 2, 1)
    assert parse_radius(3, "6/9") == canonical(3, 2, 1)
    assert parse_radius(3, "9") == canonical(3, 9, 0)
