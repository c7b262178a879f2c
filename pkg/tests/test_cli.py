import json

import pytest

from corpus import four_cycle_with_pendant
from graphinv import io
from graphinv.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def path_files(tmp_path):
    g = tmp_path / "path.json"
    assert run("generate", "--lattice", "path", "--length", 2, "-o", g) == EXIT_OK
    assert run("spectrum", g, "-o", tmp_path / "data.json", "--apriori", tmp_path / "apriori.json",
               "--mu-map", tmp_path / "mu.json") == EXIT_OK
    return tmp_path


def test_path_round_trip(path_files):
    d = path_files
    assert run("check", d / "path.json", "--cert", d / "path.cert.json") == EXIT_OK
    assert run("reconstruct", "--data", d / "data.json", "--apriori", d / "apriori.json",
               "--mode", "zero-q", "-o", d / "recon.json") == EXIT_OK
    assert json.loads((d / "report.json").read_text())["status"] == "ok"
    assert run("verify", d / "path.json", d / "recon.json", "-o", d / "verify.json") == EXIT_OK
    assert json.loads((d / "verify.json").read_text())["passed"] is True


def test_known_mu_inputs(path_files):
    d = path_files
    for extra in (["--mu", d / "mu.json"], ["--mu-value", 1.0]):
        out = d / "recon-mu.json"
        assert run("reconstruct", "--data", d / "data.json", "--apriori", d / "apriori.json",
                   "--mode", "known-mu", *extra, "-o", out) == EXIT_OK
        assert run("verify", d / "path.json", out) == EXIT_OK
    assert run("reconstruct", "--data", d / "data.json", "--apriori", d / "apriori.json",
               "--mode", "known-mu", "-o", d / "x.json") == EXIT_USAGE


def test_square_lattice_end_to_end(tmp_path):
    g = tmp_path / "sq.json"
    assert run("generate", "--lattice", "square", "--rows", 3, "--cols", 3, "-o", g,
               "--apriori", tmp_path / "ap.json") == EXIT_OK
    assert run("check", g, "--cert", tmp_path / "sq.cert.json") == EXIT_OK
    cut = tmp_path / "cut.json"
    assert run("perturb", g, "--remove-edge", "x1_0", "x1_1", "-o", cut) == EXIT_OK
    assert run("spectrum", cut, "-o", tmp_path / "data.json", "--apriori", tmp_path / "ap.json") == EXIT_OK
    assert run("reconstruct", "--data", tmp_path / "data.json", "--apriori", tmp_path / "ap.json",
               "--mode", "known-mu", "--mu-value", 1.0, "-o", tmp_path / "recon.json") == EXIT_OK
    assert run("verify", cut, tmp_path / "recon.json") == EXIT_OK
    # the reconstruction is not the uncut lattice
    assert run("verify", g, tmp_path / "recon.json") == EXIT_FAIL


def test_outputs_are_deterministic(tmp_path):
    outputs = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        assert run("generate", "--lattice", "triangular", "--rows", 3, "--cols", 3, "-o", d / "g.json") == EXIT_OK
        assert run("spectrum", d / "g.json", "-o", d / "data.json", "--apriori", d / "ap.json") == EXIT_OK
        assert run("reconstruct", "--data", d / "data.json", "--apriori", d / "ap.json",
                   "--mode", "zero-q", "-o", d / "recon.json") == EXIT_OK
        outputs.append([(d / f).read_bytes() for f in ("g.json", "data.json", "ap.json", "recon.json", "report.json")])
    assert outputs[0] == outputs[1]


def test_simulate_writes_trace(path_files):
    d = path_files
    assert run("simulate", d / "path.json", "--vertex", "x2", "--horizon", 4, "-o", d / "u.csv") == EXIT_OK
    rows = (d / "u.csv").read_text().strip().splitlines()
    assert rows[0] == "vertex,t,value" and len(rows) == 1 + 4 * 5
    assert "z1,2,1" in rows and "z2,1,1" in rows
    (d / "init.json").write_text('{"x1": 1.0}')
    assert run("simulate", d / "path.json", "--init", d / "init.json", "-o", d / "v.csv") == EXIT_OK
    assert run("simulate", d / "path.json", "--vertex", "z1", "-o", d / "w.csv") == EXIT_USAGE


def test_tampered_reconstruction_fails(path_files, capsys):
    d = path_files
    run("reconstruct", "--data", d / "data.json", "--apriori", d / "apriori.json",
        "--mode", "zero-q", "-o", d / "recon.json")
    assert run("perturb", d / "recon.json", "--set-weight", "v1", "v2", 1.001, "-o", d / "bad.json") == EXIT_OK
    capsys.readouterr()
    assert run("verify", d / "path.json", d / "bad.json") == EXIT_FAIL
    assert capsys.readouterr().out.startswith("FAIL")


def test_four_cycle_is_refused(tmp_path, capsys):
    g = four_cycle_with_pendant()
    io.save_graph(g, tmp_path / "c4.json")
    assert run("check", tmp_path / "c4.json") == EXIT_FAIL
    out = capsys.readouterr().out
    assert "two-points condition (exhaustive): FAIL witness {x2, x4}" in out
    assert run("spectrum", tmp_path / "c4.json", "-o", tmp_path / "d.json", "--apriori", tmp_path / "a.json") == EXIT_OK
    assert run("reconstruct", "--data", tmp_path / "d.json", "--apriori", tmp_path / "a.json",
               "--mode", "zero-q", "-o", tmp_path / "r.json") == EXIT_FAIL
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["status"] == "refused"
    assert not (tmp_path / "r.json").exists()


def test_usage_errors(tmp_path):
    assert run() == EXIT_USAGE
    assert run("generate", "--lattice", "square", "--rows", 0, "--cols", 3, "-o", tmp_path / "g.json") == EXIT_USAGE
    assert run("check", tmp_path / "missing.json") == EXIT_USAGE
    (tmp_path / "bad.json").write_text("{not json")
    assert run("check", tmp_path / "bad.json") == EXIT_USAGE
    assert run("reconstruct", "--data", tmp_path / "bad.json", "--apriori", tmp_path / "bad.json",
               "--mode", "zero-q", "-o", tmp_path / "r.json") == EXIT_USAGE
    assert run("--help") == EXIT_OK
