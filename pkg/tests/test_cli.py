"""CLI surface: commands, exit codes, manifests, reproducibility."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

SRC = str(Path(__file__).resolve().parent.parent / "src")


def run_cli(*argv, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "regrobust.cli", *argv],
        capture_output=True,
        text=True,
        env={"PYTHONPATH": SRC, "PATH": "/usr/bin:/bin"},
        cwd=cwd,
        timeout=300,
    )


@pytest.fixture(scope="module")
def s9_file(tmp_path_factory):
    from regrobust.benchmarks import ground_truth
    from regrobust.serialize import dump

    path = tmp_path_factory.mktemp("fixtures") / "s9.json"
    dump(ground_truth("S9"), path)
    return str(path)


def test_robust_running_example_exit_zero(s9_file):
    proc = run_cli(
        "robust", "--dra", s9_file, "--metric", "last_letter",
        "--v", "0,-1,5,3,7,9,6,8", "--delta", "5",
    )
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["robust"] is True
    assert doc["min_flip_cost"] == "5/1"
    assert doc["witness"] is None
    assert doc["graph_vertices"] > 0


def test_robust_above_threshold_exit_one(s9_file):
    proc = run_cli(
        "robust", "--dra", s9_file, "--metric", "last_letter",
        "--v", "0,-1,5,3,7,9,6,8", "--delta", "5.1",
    )
    assert proc.returncode == 1
    doc = json.loads(proc.stdout)
    assert doc["robust"] is False
    assert doc["min_flip_cost"] == "5/1"
    witness = doc["witness"]
    assert witness is not None
    from regrobust.rational import parse_rational

    assert parse_rational(witness[-1]) <= 3


def test_distance_command():
    proc = run_cli("distance", "--metric", "edit", "--v", "1,2,3,7,9", "--w", "1,3,7,10")
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["distance"] == "2/1"


def test_distance_decimal_inputs_exact():
    proc = run_cli("distance", "--metric", "manhattan", "--v", "0.1,0", "--w", "0,0")
    assert json.loads(proc.stdout)["distance"] == "1/10"


def test_sample_learn_eval_round_trip(tmp_path, s9_file):
    data = tmp_path / "s1.jsonl"
    proc = run_cli(
        "sample", "--benchmark", "S1", "--pos", "60", "--neg", "60",
        "--max-len", "8", "--noise", "1/2", "--seed", "1", "--out", str(data),
    )
    assert proc.returncode == 0, proc.stderr
    assert data.exists()

    out = tmp_path / "learned.json"
    proc = run_cli(
        "learn", "--method", "localsearch", "--samples", str(data),
        "--states", "2", "--registers", "1", "--max-iter", "50000",
        "--restarts", "3", "--seed", "42", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["method"] == "localsearch"

    proc = run_cli("eval", "--dra", str(out), "--samples", str(data))
    assert proc.returncode == 0
    score = json.loads(proc.stdout)["score"]
    num, den = score.split("/")
    assert int(num) / int(den) >= 0.95


def test_eval_ground_truth_perfect(tmp_path, s9_file):
    data = tmp_path / "s9.jsonl"
    run_cli(
        "sample", "--benchmark", "S9", "--pos", "30", "--neg", "30",
        "--max-len", "8", "--seed", "3", "--out", str(data),
    )
    proc = run_cli("eval", "--dra", s9_file, "--samples", str(data))
    assert json.loads(proc.stdout)["score"] == "1/1"


def test_certify_in_process_oracle(tmp_path):
    from regrobust.benchmarks import ground_truth
    from regrobust.serialize import dump

    s2 = tmp_path / "s2.json"
    dump(ground_truth("S2"), s2)
    proc = run_cli(
        "certify", "--dra", str(s2), "--oracle", f"dra:{s2}", "--sampler", "S2",
        "--metric", "last_letter", "--delta", "1/2", "--p", "0.9",
        "--epsilon", "0.35", "--gamma", "0.1", "--seed", "7", "--max-len", "6",
    )
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["outcome"] == "accept"
    assert doc["lambda_ub"] is not None


def test_usage_error_exit_two():
    proc = run_cli("robust", "--dra", "/nonexistent.json", "--metric", "bogus",
                   "--v", "1", "--delta", "1")
    assert proc.returncode in (2, 3)
    err = json.loads(proc.stderr.splitlines()[0])
    assert err["error"] in ("usage", "internal")


def test_manifest_emitted_and_reproducible(tmp_path, s9_file):
    outs = []
    for _ in range(2):
        proc = run_cli(
            "robust", "--dra", s9_file, "--metric", "last_letter",
            "--v", "0,-1,5,3,7,9,6,8", "--delta", "5", "--seed", "11",
        )
        outs.append(proc.stdout)
        manifest_line = [l for l in proc.stderr.splitlines() if "manifest" in l][0]
        manifest = json.loads(manifest_line)["manifest"]
        assert manifest["command"] == "robust"
        assert "output_sha256" in manifest
    assert outs[0] == outs[1]  # byte-identical reruns


def test_config_file_flag_precedence(tmp_path, s9_file):
    config = tmp_path / "conf.toml"
    config.write_text('[robust]\ndelta = "5"\nmetric = "last_letter"\n')
    proc = run_cli(
        "robust", "--dra", s9_file, "--metric", "last_letter",
        "--v", "0,-1,5,3,7,9,6,8", "--delta", "5.1", "--config", str(config),
    )
    # the flag wins over the config value
    assert proc.returncode == 1
