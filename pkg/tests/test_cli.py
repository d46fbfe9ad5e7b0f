import hashlib
import json
import subprocess
import sys

import pytest

from krein.cli import ConfigError, ScenarioConfig, list_presets, main, run_scenario

PRESET_NAMES = ["free_baseline", "thm1_regime", "thm2_lp_tails", "thm3_smooth_qhat", "vnw",
                "secC_example_grid", "accelerant_roundtrip"]


def _csv_bodies(out):
    return {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}


def test_presets_listing(capsys):
    names = [p[0] for p in list_presets()]
    assert names == PRESET_NAMES
    assert all(desc and anchor for _, desc, anchor in list_presets())
    assert main(["presets"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [ln.split()[0] for ln in lines] == PRESET_NAMES


def test_config_defaults_and_preset_merge():
    cfg = ScenarioConfig.from_dict({"kind": "vnw"})
    assert cfg.xmax == 200.0 and cfg.scan_band == [0.5, 1.5]
    cfg = ScenarioConfig.from_dict({"kind": "vnw", "n_scan": 11})
    assert cfg.n_scan == 11


def test_config_errors_are_collected():
    with pytest.raises(ConfigError) as ei:
        ScenarioConfig.from_dict({"kind": "nope", "tol": -1.0, "lambdas": "x", "bogus": 1})
    msgs = " | ".join(ei.value.errors)
    assert len(ei.value.errors) == 4
    for frag in ("unknown key 'bogus'", "kind 'nope'", "tol must be positive", "lambdas should be list"):
        assert frag in msgs
    with pytest.raises(ConfigError, match="coefficients"):
        ScenarioConfig.from_dict({"kind": "custom"})
    with pytest.raises(ConfigError, match="lo < hi"):
        ScenarioConfig.from_dict({"energy_band": [2.0, 1.0]})
    with pytest.raises(ConfigError, match="JSON object"):
        ScenarioConfig.from_dict([1, 2])


def test_invalid_invocations_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "free_baseline", "threads": 0, "seed": "x"}))
    assert main(["run", str(bad)]) == 3
    err = capsys.readouterr().err
    assert "threads must be at least 1" in err and "seed should be int" in err
    (tmp_path / "broken.json").write_text("{")
    assert main(["run", str(tmp_path / "broken.json")]) == 3
    assert main(["run"]) == 3
    assert main(["run", str(bad), "--preset", "vnw"]) == 3
    with pytest.raises(SystemExit) as ei:
        main(["run", "--preset", "unknown"])
    assert ei.value.code == 3


def test_free_baseline_bundle(tmp_path, capsys):
    out = tmp_path / "fb"
    assert main(["run", "--preset", "free_baseline", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "PASS  krein_closed_form" in printed and printed.strip().endswith(f"files in {out}")
    summary = json.loads((out / "summary.json").read_text())
    manifest = json.loads((out / "manifest.json").read_text())
    assert summary["verdict"] == "green" and not summary["failed"]
    assert manifest["config"]["kind"] == "free_baseline" and manifest["seed"] == 0
    assert {"numpy", "scipy", "mpmath", "krein"} <= set(manifest["versions"])
    for f in manifest["files"]:
        assert hashlib.sha256((out / f["path"]).read_bytes()).hexdigest() == f["sha256"]
    assert (out / "traj_lambda_0.5.csv").exists()


def test_free_baseline_is_deterministic(tmp_path):
    a = run_scenario(ScenarioConfig.from_dict({"kind": "free_baseline", "out": str(tmp_path / "a")}))
    b = run_scenario(ScenarioConfig.from_dict({"kind": "free_baseline", "out": str(tmp_path / "b"),
                                               "threads": 2}))
    assert a.passed and b.passed
    assert _csv_bodies(tmp_path / "a") == _csv_bodies(tmp_path / "b")


def test_custom_family_run(tmp_path):
    cfg = ScenarioConfig.from_dict({
        "kind": "custom", "coefficients": {"family": "power_tail_W", "params": {"gamma": 0.1}},
        "xmax": 60.0, "n_energies": 5, "n_scan": 8, "lambdas": [1.0], "out": str(tmp_path / "c"),
    })
    bundle = run_scenario(cfg)
    assert bundle.passed, bundle.summary["failed"]
    assert (tmp_path / "c" / "density_weyl.csv").exists()
    assert (tmp_path / "c" / "traj_lambda_1.csv").exists()


def test_failed_stage_is_reported_red(tmp_path):
    missing = str(tmp_path / "nope.csv")
    cfg = ScenarioConfig.from_dict({"kind": "accelerant_roundtrip", "kernel_file": missing,
                                    "out": str(tmp_path / "k")})
    bundle = run_scenario(cfg)
    assert not bundle.passed
    assert any("kernel_file" in name for name in bundle.summary["failed"])


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "krein.cli", "presets"], capture_output=True, text=True)
    assert r.returncode == 0 and "vnw" in r.stdout
