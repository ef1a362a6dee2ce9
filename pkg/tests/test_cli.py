import subprocess
import sys

import numpy as np
import pytest

from freqadapt.cli import main
from freqadapt.config import AppConfig
from freqadapt.estimator import EstimationReport
from freqadapt.imaging import load_image, save_image

FAST = ["--set", "grid_r_steps=4", "--set", "grid_theta_steps=1"]


@pytest.fixture(scope="module")
def source_dir(tmp_path_factory, iso1_source):
    d = tmp_path_factory.mktemp("src")
    for i, img in enumerate(iso1_source[:3]):
        save_image(img, d / f"s{i}.png")
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("command", ["estimate", "generate-pairs", "benchmark", "profile", "train-fdc"])
def test_help_lists_every_key(command):
    res = subprocess.run([sys.executable, "-m", "freqadapt.cli", command, "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    for key, value in AppConfig().items():
        assert f"{key}={value}" in res.stdout
    assert "published setting" in res.stdout


def test_estimate_direct(capsys, source_dir, tmp_path):
    out = tmp_path / "rep.txt"
    code, stdout, _ = run(capsys, "estimate", "--source", source_dir, "--method", "direct",
                          "--out", out, *FAST)
    assert code == 0 and out.exists()
    assert "sigma2_mean=" in stdout and "final_distance=" in stdout
    first = out.read_bytes()
    run(capsys, "estimate", "--source", source_dir, "--method", "direct", "--out", out, *FAST)
    assert out.read_bytes() == first


def test_estimate_usage_errors(capsys, source_dir, tmp_path):
    code, _, err = run(capsys, "estimate", "--source", tmp_path / "nope", "--method", "direct")
    assert code == 2 and "--source" in err
    code, _, err = run(capsys, "estimate", "--source", source_dir, "--method", "direct",
                       "--ablation", "fdc-only")
    assert code == 2 and "--ablation" in err
    code, _, err = run(capsys, "estimate", "--source", source_dir, "--set", "kernel_side=4")
    assert code == 2 and "kernel_side" in err
    with pytest.raises(SystemExit) as info:
        main(["estimate", "--method", "direct"])
    assert info.value.code == 2


def test_estimate_failure_writes_stub(capsys, tmp_path):
    flat = tmp_path / "flat"
    flat.mkdir()
    save_image(np.full((128, 128), 0.5), flat / "f.png")
    out = tmp_path / "stub.txt"
    code, _, err = run(capsys, "estimate", "--source", flat, "--method", "direct", "--out", out, *FAST)
    assert code == 1 and "report stub" in err
    assert EstimationReport.read(out).status == "failed"


def test_generate_pairs_from_params_and_report(capsys, source_dir, tmp_path):
    code, stdout, err = run(capsys, "generate-pairs", "--source", source_dir, "--out", tmp_path / "p",
                            "--r1", 1.2, "--r2", 0.8, "--theta", 7.0)
    assert code == 0 and "wrapped" in err and "manifest:" in stdout
    hr = load_image(tmp_path / "p" / "hr" / "s0.png")
    lr = load_image(tmp_path / "p" / "lr" / "s0.png")
    assert hr.shape == (128, 128) and lr.shape == (32, 32)
    manifest = (tmp_path / "p" / "manifest.txt").read_bytes()
    run(capsys, "generate-pairs", "--source", source_dir, "--out", tmp_path / "p",
        "--r1", 1.2, "--r2", 0.8, "--theta", 7.0)
    assert (tmp_path / "p" / "manifest.txt").read_bytes() == manifest

    rep = tmp_path / "r.txt"
    run(capsys, "estimate", "--source", source_dir, "--method", "direct", "--out", rep, *FAST)
    code, _, _ = run(capsys, "generate-pairs", "--source", source_dir, "--out", tmp_path / "q",
                     "--report", rep, "--hr-policy", "source")
    assert code == 0
    assert load_image(tmp_path / "q" / "hr" / "s0.png").shape == (256, 256)


def test_generate_pairs_conflict(capsys, source_dir, tmp_path):
    code, _, err = run(capsys, "generate-pairs", "--source", source_dir, "--out", tmp_path,
                       "--report", tmp_path / "r.txt", "--r1", 1.0)
    assert code == 2 and "not both" in err


def test_benchmark_filter_and_determinism(capsys, tmp_path):
    args = ["benchmark", "--kinds", "ISO.1", "--seeds", "0", "--limit", "2",
            "--estimators", "bicubic-baseline"]
    code, stdout, _ = run(capsys, *args, "--out", tmp_path / "a")
    assert code == 0 and "0 failed" in stdout
    run(capsys, *args, "--out", tmp_path / "b")
    rows = (tmp_path / "a" / "rows.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].split(",")[2] == "bicubic-baseline"
    assert (tmp_path / "a" / "rows.csv").read_bytes() == (tmp_path / "b" / "rows.csv").read_bytes()


def test_benchmark_bad_suite_names_line(capsys, tmp_path):
    suite = tmp_path / "bad.suite"
    suite.write_text("kinds=ISO.1\nseeds=0\nestimators=direct,nope\n")
    code, _, err = run(capsys, "benchmark", "--suite", suite)
    assert code == 2 and "bad.suite:3" in err


def test_profile(capsys, source_dir, tmp_path):
    code, stdout, _ = run(capsys, "profile", "--source", source_dir, "--count", 2)
    assert code == 0 and stdout
    code, _, _ = run(capsys, "profile", "--source", source_dir, "--count", 2, "--out", tmp_path / "p.txt")
    assert code == 0 and (tmp_path / "p.txt").read_text() == stdout
    code, _, err = run(capsys, "profile", "--source", source_dir, "--patch-size", 1024)
    assert code == 2


def test_train_fdc(capsys, source_dir, tmp_path):
    code, stdout, _ = run(capsys, "train-fdc", "--source", source_dir, "--out", tmp_path / "m.fqm",
                          "--iterations", 5, "--holdout", 1)
    assert code == 0 and (tmp_path / "m.fqm").exists()
    assert "held-out scale=1.5" in stdout
    code, _, _ = run(capsys, "train-fdc", "--source", source_dir, "--out", tmp_path / "m.fqm",
                     "--holdout", 3)
    assert code == 2
