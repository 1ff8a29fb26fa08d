import json
import subprocess
import sys

import pytest

from gfock import __version__
from gfock.cli import EXPERIMENTS, main

SMALL = """\
[model]
n_max = 1
N_max = 3

[ladder]
rungs = 1
count = 21

[schedule]
t = [1.0, 2.0]
lattice = 3
"""

FILES = (
    "genfunc.csv",
    "genfunc.json",
    "ccr.csv",
    "free_spectrum.csv",
    "s_matrix.csv",
    "s_matrix.json",
    "epsilon_sweep.csv",
    "epsilon_sweep.json",
    "manifest.json",
)


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "small.toml"
    p.write_text(SMALL)
    return str(p)


@pytest.fixture(scope="module")
def run_all(small_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    status = main(["-c", small_config, "-o", str(out), "all"])
    return status, out


def _record(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


class TestRunAll:
    def test_exit_status(self, run_all):
        assert run_all[0] == 0

    @pytest.mark.parametrize("name", FILES)
    def test_outputs_present(self, run_all, name):
        assert (run_all[1] / name).stat().st_size > 0

    def test_manifest(self, run_all):
        import hashlib

        man = json.loads((run_all[1] / "manifest.json").read_text())
        assert man["version"] == __version__ and man["command"] == "all"
        assert set(man["summaries"]) == set(EXPERIMENTS)
        assert len(man["fingerprint"]) == 16
        for name, digest in man["files"].items():
            assert hashlib.sha256((run_all[1] / name).read_bytes()).hexdigest() == digest

    def test_no_temporaries(self, run_all):
        assert not list(run_all[1].glob(".tmp-*"))

    def test_csv_header(self, run_all):
        head = (run_all[1] / "s_matrix.csv").read_text().splitlines()[0]
        assert head == "initial,final,t,tau,eps,g,re,im,probability"

    def test_sweep_mean_skipped_when_short(self, run_all):
        summary = json.loads((run_all[1] / "epsilon_sweep.json").read_text())
        assert summary["mean"] is None


class TestSingleCommands:
    def test_free_spectrum(self, small_config, tmp_path):
        assert main(["-c", small_config, "-o", str(tmp_path), "free-spectrum"]) == 0
        rows = (tmp_path / "free_spectrum.csv").read_text().splitlines()
        assert len(rows) == 1 + 20

    def test_s_matrix_states(self, small_config, tmp_path):
        argv = ["-c", small_config, "-o", str(tmp_path), "s-matrix",
                "--initial", "vacuum", "--final", "0 1 0", "--final", "vacuum"]
        assert main(argv) == 0
        rows = (tmp_path / "s_matrix.csv").read_text().splitlines()
        assert len(rows) == 1 + 2 * 2

    def test_set_override(self, small_config, tmp_path):
        argv = ["-c", small_config, "-o", str(tmp_path), "--set", "model.g=0.0", "s-matrix"]
        assert main(argv) == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["config"]["model"]["g"] == 0.0

    def test_ccr_flags(self, tmp_path, capsys):
        argv = ["-o", str(tmp_path), "--set", "schedule.lattice=2", "ccr-check",
                "--n-max", "1", "--N-max", "2", "--rungs", "1", "--describe"]
        assert main(argv) == 0
        described = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert described["modes"] == 3 and described["N_max"] == 2

    def test_output_dir_env(self, small_config, tmp_path, monkeypatch):
        monkeypatch.setenv("GFOCK_OUTPUT_DIR", str(tmp_path / "env"))
        assert main(["-c", small_config, "free-spectrum"]) == 0
        assert (tmp_path / "env" / "free_spectrum.csv").exists()

    def test_csv_only(self, small_config, tmp_path):
        argv = ["-c", small_config, "-o", str(tmp_path), "--set", 'output.formats=["csv"]', "s-matrix"]
        assert main(argv) == 0
        assert (tmp_path / "s_matrix.csv").exists() and not (tmp_path / "s_matrix.json").exists()


class TestValidate:
    def test_defaults(self, capsys):
        assert main(["validate"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["basis_size"] == 126 and rep["status"] == "ok"

    def test_capacity(self, capsys):
        assert main(["--set", "model.N_max=16", "validate"]) == 3
        rec = _record(capsys)
        assert rec["error"] == "capacity" and rec["status"] == 3


class TestErrors:
    def test_unknown_key(self, capsys):
        assert main(["--set", "model.bogus=1", "validate"]) == 2
        assert _record(capsys)["key"] == "model.bogus"

    def test_quadrature_invariant(self, capsys):
        assert main(["--set", "model.P=5", "validate"]) == 2
        assert "quadrature invariant" in _record(capsys)["message"]

    def test_malformed(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text("[model\n")
        assert main(["-c", str(p), "validate"]) == 2
        assert _record(capsys)["error"] == "config"

    def test_bad_override_syntax(self, capsys):
        assert main(["--set", "nodot=1", "validate"]) == 2

    def test_capacity_on_run(self, tmp_path, capsys):
        assert main(["-o", str(tmp_path), "--set", "model.N_max=16", "free-spectrum"]) == 3

    def test_bad_occupation(self, small_config, tmp_path, capsys):
        argv = ["-c", small_config, "-o", str(tmp_path), "s-matrix", "--initial", "1 x 0"]
        assert main(argv) == 2
        assert _record(capsys)["key"] == "state"

    def test_failed_check_exits_one(self, small_config, tmp_path, capsys, monkeypatch):
        from gfock import cli

        def failing(rc, out, args):
            cli._check(False, "forced failure")

        monkeypatch.setitem(cli.RUNNERS, "free-spectrum", failing)
        assert main(["-c", small_config, "-o", str(tmp_path), "free-spectrum"]) == 1
        rec = _record(capsys)
        assert rec["error"] == "assertion" and "forced failure" in rec["message"]
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert "failed" in man["summaries"]["free-spectrum"]


class TestEntryPoints:
    def test_module(self):
        out = subprocess.run([sys.executable, "-m", "gfock", "--version"],
                             capture_output=True, text=True, check=True)
        assert __version__ in out.stdout

    def test_help_lists_experiments(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        for name in EXPERIMENTS + ("all", "validate"):
            assert name in text
