import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from apollo3 import cli, quadratic_core as qc


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def test_render_is_deterministic(tmp_path):
    assert run(tmp_path / "a", "render", "--root", "-1,2,2", "--max", "200") == 0
    assert run(tmp_path / "b", "render", "--root", "-1,2,2", "--max", "200") == 0
    a = (tmp_path / "a" / "packing.svg").read_bytes()
    assert a == (tmp_path / "b" / "packing.svg").read_bytes()
    assert a.startswith(b"<svg")
    assert len(json.loads((tmp_path / "a" / "circles.json").read_text())) > 100


def test_render_rejects_bad_packings(tmp_path):
    assert run(tmp_path, "render", "--root", "1,1,1") == 2
    assert run(tmp_path, "render", "--root", "-1,2,2,4") == 2
    assert run(tmp_path, "render", "--root", "0,2,4") == 2  # not primitive


def test_enumerate_outputs(tmp_path):
    assert run(tmp_path / "one", "enumerate", "--n", "10000", "--threads", "1") == 0
    assert run(tmp_path / "many", "enumerate", "--n", "10000", "--threads", "8") == 0
    text = (tmp_path / "one" / "density.csv").read_text()
    assert text == (tmp_path / "many" / "density.csv").read_text()
    rows = list(csv.DictReader(text.splitlines()))
    assert [int(r["class"]) for r in rows] == list(range(8))
    assert {int(r["class"]) for r in rows if int(r["count_represented"])} == {2, 4, 7}
    assert all(0 <= float(r["fraction"]) <= 1 for r in rows)
    assert (tmp_path / "one" / "curvatures.bin").read_bytes()[:8] == b"APL3SET1"


def test_enumerate_budget(tmp_path):
    assert run(tmp_path, "enumerate", "--n", "1000", "--budget", "100") == 4


def test_thread_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("APOLLO3_THREADS", "3")
    assert cli.resolve_threads(None) == 3
    assert cli.resolve_threads("2") == 2
    monkeypatch.setenv("APOLLO3_THREADS", "0")
    assert run(tmp_path, "enumerate", "--n", "100") == 2


def test_config_file_with_override(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("# settings\nroot = -1,2,2\nn = 3000\nthreads=2\n")
    assert cli.read_config_file(str(cfgfile))["n"] == "3000"
    assert run(tmp_path / "o", "enumerate", "--config", str(cfgfile), "--n", "500") == 0
    rows = list(csv.DictReader((tmp_path / "o" / "density.csv").read_text().splitlines()))
    assert int(rows[2]["count_admissible"]) == 63  # n = 2 mod 8 up to 500
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(tmp_path, "enumerate", "--config", str(bad)) == 2
    assert run(tmp_path, "enumerate", "--config", str(tmp_path / "missing.cfg")) == 3


def test_spectra(tmp_path):
    assert run(tmp_path / "e", "spectra", "--q", "") == 0
    assert (tmp_path / "e" / "spectra.csv").read_text().strip() == "q,order,degree,lambda1,gap"
    assert run(tmp_path / "f", "spectra", "--q", "5,8") == 0
    rows = list(csv.DictReader((tmp_path / "f" / "spectra.csv").read_text().splitlines()))
    assert [r["q"] for r in rows] == ["5", "8"]
    assert int(rows[0]["order"]) == 15600 and float(rows[0]["gap"]) > 0
    assert run(tmp_path, "spectra", "--q", "35") == 4


@pytest.mark.parametrize("suite", ["spin", "local", "sums"])
def test_verify_suites(tmp_path, suite):
    assert run(tmp_path, "verify", "--suite", suite) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    jsonschema.validate(report, cli.load_schema())
    assert report["pass"] and report["suite"] == suite
    if suite == "spin":
        assert sum(1 for it in report["items"] if it["lemma"].startswith("rho")) == 7


def test_verify_detects_corrupted_generator(tmp_path, monkeypatch, capsys):
    bad = [list(r) for r in qc.S_MATRICES["1'23"]]
    bad[3][3] += 1
    monkeypatch.setitem(qc.S_MATRICES, "1'23", tuple(tuple(r) for r in bad))
    assert run(tmp_path, "verify", "--suite", "spin") == 1
    err = capsys.readouterr().err
    assert "witness" in err and "diff" in err
    report = json.loads((tmp_path / "report.json").read_text())
    failing = [it for it in report["items"] if not it["pass"]]
    assert failing[0]["witness"]["diff"][3][3] != 0


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(blocker, "render", "--max", "10") == 3


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "apollo3", "render", "--root", "1,1,1"],
                         capture_output=True, text=True)
    assert out.returncode == 2
    assert "no integer w" in out.stderr
