import json
import subprocess
import sys

import pytest

from entropy_ka import commitment
from entropy_ka.cli import compute_vectors, format_vectors, parse_vectors

from conftest import ROOT

SCENARIOS = ROOT / "scenarios"
GOLDEN = ROOT / "tests" / "golden"


def test_params_reference_point(cli):
    r = cli("params", "--n", 5, "--kappa", 128, "--m", 384, "--delta", 10, "--log2-epsilon", 40)
    assert r.code == 0
    assert r.json["gamma"] == 351 and r.json["hinf_S_bits"] == 169
    assert r.json["advantage_bound"]["feasible"] is True


def test_params_bht_failure(cli):
    r = cli("params", "--m", 256, "--kappa", 128)
    verdicts = {v["name"]: v["passed"] for v in r.json["mitigations"]}
    assert r.code == 0 and verdicts["bht_collision"] is False


def test_params_infeasible(cli):
    r = cli("params", "--m", 128)
    assert r.code == 1 and "exceeds m" in r.err


def test_table_matches_golden(cli):
    r = cli("table")
    assert r.code == 0
    report = r.json
    report.pop("schema_version")
    assert report == json.loads((GOLDEN / "table.json").read_text())


def test_simulate_default_seed42_matches_golden(cli, tmp_path):
    out = tmp_path / "t.jsonl"
    r = cli("simulate", "--seed", 42, "--out", out)
    assert r.code == 0 and r.json["agreed"]
    assert out.read_text() == (GOLDEN / "transcript_n5_seed42.jsonl").read_text()
    assert "key_hex" not in r.out


def test_simulate_reveal_key(cli):
    r = cli("simulate", "--n", 3, "--seed", 42, "--reveal-key")
    keys = {p["key_hex"] for p in r.json["parties"]}
    vectors = parse_vectors((ROOT / "src" / "entropy_ka" / "data" / "golden_vectors.txt").read_text())
    assert keys == {vectors["run_n3_key"]}


@pytest.mark.parametrize("name", ["tamper_share", "tamper_reveal", "equivocate_commit", "drop_shares"])
def test_simulate_adversaries_abort(cli, name):
    r = cli("simulate", "--seed", 42, "--adversary", SCENARIOS / f"{name}.json")
    assert r.code == 2
    assert all(p["phase"] == "Aborted" for p in r.json["parties"] if not p["corrupted"])


def test_simulate_scenario_file_fills_defaults(cli):
    r = cli("simulate", "--adversary", SCENARIOS / "passive_n4.json")
    assert r.code == 0 and r.json["seed"] == 7 and r.json["params"]["n"] == 4
    r = cli("simulate", "--adversary", SCENARIOS / "passive_n4.json", "--n", 5, "--seed", 1)
    assert r.json["seed"] == 1 and r.json["params"]["n"] == 5


def test_simulate_infeasible_gamma(cli):
    r = cli("simulate", "--gamma", 100)
    assert r.code == 1
    assert "5*(100-10) - 4*384 = -1086 < 128 + 40 = 168" in r.err


def test_simulate_usage_errors(cli, tmp_path):
    assert cli("simulate", "--n", "x").code == 1
    assert cli("simulate", "--m", 100).code == 1
    assert cli("simulate", "--n", 3, "--t", 3, "--gamma", 322).code == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert cli("simulate", "--adversary", bad).code == 1
    assert cli("simulate", "--seed", -1).code == 1
    assert cli().code == 1


def test_seed_env_fallback(cli, monkeypatch):
    monkeypatch.setenv("ENTROPY_KA_SEED", "42")
    a = cli("simulate")
    assert a.json["seed"] == 42
    assert a.out == cli("simulate", "--seed", 42).out
    monkeypatch.setenv("ENTROPY_KA_SEED", "zz")
    assert cli("simulate").code == 1


def test_parallel_flag_same_output(cli):
    assert cli("simulate", "--seed", 3, "--parallel").out == cli("simulate", "--seed", 3).out


def test_entropy_uniform_alpha2(cli, tmp_path):
    f = tmp_path / "u.json"
    f.write_text("[0.25, 0.25, 0.25, 0.25]")
    r = cli("entropy", "--dist", f, "--alpha", 2)
    assert r.code == 0 and r.json["h_alpha"] == pytest.approx(2.0)
    assert r.json["min"] == pytest.approx(2.0)


def test_entropy_point_mass_zero_everywhere(cli, tmp_path):
    f = tmp_path / "p.json"
    f.write_text("[0, 1, 0, 0, 0, 0, 0, 0]")
    r = cli("entropy", "--dist", f)
    values = [r.json["shannon"], r.json["collision"], r.json["min"], *r.json["renyi"].values()]
    assert r.code == 0 and values == [0.0] * len(values)


def test_entropy_bundled_sweep(cli):
    r = cli("entropy", "--xor-sweep")
    assert r.code == 0 and r.json["violations"] == 0 and r.json["tuples"] >= 33
    uniform = [x for x in r.json["reports"] if x["source"] == "uniform_w4_n3.json"]
    assert uniform and all(x["equality"] for x in uniform)


def test_entropy_samples(cli, tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"alphabet_size": 4, "samples": [0, 1, 2, 3] * 2500}))
    r = cli("entropy", "--samples", f, "--log2-epsilon", 10)
    assert r.code == 0 and r.json["estimate"]["value_millibits"] == 2000


def test_entropy_malformed(cli, tmp_path):
    f = tmp_path / "m.json"
    for text in ("[0.5, 0.6]", "[0.5, 0.25, 0.25]", "nope", '{"a": 1}'):
        f.write_text(text)
        assert cli("entropy", "--dist", f).code == 1
    assert cli("entropy", "--dist", tmp_path / "missing.json").code == 1
    assert cli("entropy").code == 1
    f.write_text("[0.5, 0.5]")
    assert cli("entropy", "--dist", f, "--alpha", 1).code == 1


def test_attack_suite_default(cli):
    r = cli("attack-suite")
    assert r.code == 0 and r.json["passed"]
    assert r.json["matrix"]["in_model_wins"] == 0


def test_vectors_pristine(cli):
    r = cli("vectors")
    assert r.code == 0 and "14/14" in r.out


def test_vectors_detect_tag_change(cli, monkeypatch):
    monkeypatch.setattr(commitment, "TAG_COMMIT", 0x7F)
    r = cli("vectors")
    assert r.code == 3 and "MISMATCH commit" in r.out


def test_vectors_write_and_missing(cli, tmp_path):
    f = tmp_path / "v.txt"
    assert cli("vectors", "--write", "--file", f).code == 0
    assert parse_vectors(f.read_text()) == compute_vectors()
    assert cli("vectors", "--file", f).code == 0
    assert cli("vectors", "--file", tmp_path / "absent.txt").code == 3
    f.write_text(format_vectors({**compute_vectors(), "extra": "00"}))
    assert cli("vectors", "--file", f).code == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "entropy_ka", "params"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["gamma"] == 351
