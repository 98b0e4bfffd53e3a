import json
import subprocess
import sys

import pytest

from wedge_fpp.cli import RunConfig, main


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_duality_check_line(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "duality-check", "--a", 1, "--p", 0.5, "--n", 30, "--replicas", 200,
                           "--out", tmp_path)
    assert code == 0 and "200/200 exact" in out
    assert json.loads((tmp_path / "duality.json").read_text())["schema"] == "wedge-fpp/1"


def test_classify_bounded(capsys):
    code, out, _ = run_cli(capsys, "classify", "--a", 2.0, "--b", 0, "--p", 0.7, "--xi", 1.0)
    assert code == 0
    assert json.loads(out.splitlines()[0])["regime"] == "Bounded"


def test_missing_required_is_validation_error(capsys):
    code, _, err = run_cli(capsys, "simulate", "--a", 1, "--n", "8,16")
    assert code == 1 and "--p" in err


def test_bad_values_exit_one(capsys):
    assert run_cli(capsys, "xi", "--p", 0.7, "--nmax", 5, "--samples", 100)[0] == 1
    assert run_cli(capsys, "classify", "--a", 1, "--p", 0.7)[0] == 1


def test_resource_error_exit_two(capsys):
    code, _, err = run_cli(capsys, "simulate", "--a", 3, "--p", 0.5, "--n", 10 ** 8, "--replicas", 2)
    assert code == 2 and "cap" in err


def test_seed_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("WEDGE_FPP_SEED", "17")
    run_cli(capsys, "crossing", "--p", 0.5, "--n", 6, "--h", 6, "--samples", 50, "--out", tmp_path)
    assert RunConfig.from_json((tmp_path / "config.json").read_text()).seed == 17
    monkeypatch.setenv("WEDGE_FPP_SEED", "x")
    assert run_cli(capsys, "crossing", "--p", 0.5, "--n", 6, "--h", 6, "--samples", 50)[0] == 1


def test_config_roundtrip():
    cfg = RunConfig("simulate", {"a": 1.0, "n": [8, 16]}, 5)
    assert RunConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ValueError):
        RunConfig.from_json(json.dumps({"schema": "other/9", "command": "x", "params": {}, "seed": 0}))


def test_simulate_outputs(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "simulate", "--a", 1, "--p", 0.5, "--n", "8,16,32", "--replicas", 40,
                         "--out", tmp_path)
    assert code == 0
    assert (tmp_path / "summary.csv").read_text().startswith("# wedge-fpp/1 summaries\n")
    rows = (tmp_path / "samples.jsonl").read_text().splitlines()
    assert len(rows) == 120 and json.loads(rows[0])["schema"] == "wedge-fpp/1"
    assert run_cli(capsys, "report", tmp_path)[0] == 0
    assert "growth" in (tmp_path / "report.md").read_text().lower()
    assert (tmp_path / "growth.csv").exists()


def test_workers_do_not_change_outputs(capsys, tmp_path):
    args = ["simulate", "--a", 1, "--p", 0.5, "--n", "8,16", "--replicas", 70]
    for w in (1, 8):
        assert run_cli(capsys, *args, "--workers", w, "--out", tmp_path / f"w{w}")[0] == 0
    for name in ("config.json", "samples.jsonl", "summary.csv", "record.json"):
        assert (tmp_path / "w1" / name).read_bytes() == (tmp_path / "w8" / name).read_bytes()


def test_report_on_empty_dir(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "report", tmp_path)
    assert code == 0 and "warning" in out


def test_strict_sponge_exit(capsys, tmp_path):
    # with a huge xi every driver is tiny and the sub scan cannot fail, but the
    # super scan cannot reach one: strict mode must flag it
    code, _, _ = run_cli(capsys, "sponge", "--p", 0.35, "--xi", 1000.0, "--n", "4,8,12", "--samples", 50,
                         "--strict")
    assert code == 3


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "wedge_fpp.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "wedge-fpp" in res.stdout
