import json

import pytest

from halfsign.cli import EXIT_OK, EXIT_PRECISION, EXIT_VALIDATION, JobConfig, main


@pytest.fixture(scope="module")
def cache(tmp_path_factory):
    path = tmp_path_factory.mktemp("cache")
    assert main(["build", "--weight", "9", "--order", "2000", "--cache", str(path)]) == EXIT_OK
    return path


def test_build_is_idempotent(cache, capsys):
    form = cache / "k9_N2000" / "form0.txt"
    before = form.read_bytes()
    assert main(["build", "--weight", "9", "--order", "2000", "--cache", str(cache)]) == EXIT_OK
    assert "cache hit" in capsys.readouterr().out
    assert form.read_bytes() == before


@pytest.mark.parametrize("args", [["--weight", "4"], ["--weight", "3"], ["--order", "50"], ["--digits", "20"]])
def test_config_validation(tmp_path, args):
    assert main(["build", "--cache", str(tmp_path)] + args) == EXIT_VALIDATION


def test_unsupported_weight_exit(tmp_path, capsys):
    assert main(["build", "--weight", "25", "--order", "2000", "--cache", str(tmp_path)]) == EXIT_VALIDATION
    assert "irreducible" in capsys.readouterr().err


def test_env_overrides_cache_only(monkeypatch, tmp_path):
    monkeypatch.setenv("HALFSIGN_CACHE", str(tmp_path))
    cfg = JobConfig()
    assert cfg.cache_dir == tmp_path
    assert JobConfig(cache="elsewhere").cache_dir.name == "elsewhere"
    assert cfg.hash() == JobConfig(out="x", jobs=4).hash()
    assert cfg.hash() != JobConfig(order=20_000).hash()


def test_verify_preb(cache, tmp_path):
    out = tmp_path / "o"
    assert main(["verify", "--suite", "preb", "--order", "2000", "--cache", str(cache), "--out", str(out)]) == EXIT_OK
    doc = json.loads((out / "verify_preb.json").read_text())
    res = doc["result"]
    assert res["exact_equalities"] == res["grid_size"] > 0
    assert doc["provenance"]["version"] and doc["provenance"]["config_hash"]


def test_tampered_cache(cache, tmp_path):
    bad = tmp_path / "bad"
    src = cache / "k9_N2000"
    (bad / "k9_N2000").mkdir(parents=True)
    for f in src.iterdir():
        (bad / "k9_N2000" / f.name).write_bytes(f.read_bytes())
    form = bad / "k9_N2000" / "form0.txt"
    form.write_text(form.read_text().replace("\n3 12\n", "\n3 13\n"))
    assert main(["verify", "--suite", "preb", "--order", "2000", "--cache", str(bad), "--out", str(tmp_path)]) == EXIT_VALIDATION


def test_scan_signs_deterministic(cache, tmp_path):
    args = ["scan", "signs", "--order", "2000", "--t-max", "1000", "--cache", str(cache)]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "signs.json").read_bytes()
    assert a == (tmp_path / "b" / "signs.json").read_bytes()
    assert json.loads(a)["result"]["count"] == 252


def test_scan_smoothed_needs_coefficients(cache, tmp_path):
    args = ["scan", "smoothed", "--order", "2000", "--cache", str(cache), "--out", str(tmp_path)]
    assert main(args) == EXIT_PRECISION
    assert main(args + ["--x-grid", "10,20,50,100"]) == EXIT_OK
    text = (tmp_path / "smoothed.csv").read_text()
    assert "# config_hash:" in text and "first_moment_exponent" in text


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "halfsign", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
