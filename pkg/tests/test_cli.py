import csv
import io
from pathlib import Path

import numpy as np
import pytest

from grace import cli, sp4
from grace.io import read_trajectory

SAMPLE = Path(__file__).parent / "data" / "sample.in"

SMALL = """\
-simulation 5 40 1e-5
-rectang 6 4 2
-material 0.5 1.3e-11 800 100 0 100 0 0
-externfield -20 5 0 0 10 30
"""


@pytest.fixture
def small_input(tmp_path):
    path = tmp_path / "small.in"
    path.write_text(SMALL)
    return path


class TestRun:
    def test_small_run(self, small_input, tmp_path, capsys):
        out = tmp_path / "out"
        assert cli.main(["run", str(small_input), "-o", str(out), "--threads", "1"]) == 0
        traj = read_trajectory(out / "small.dat")
        assert traj.shape == (1 + 40 // 5, 4)
        np.testing.assert_allclose(traj[:, 0], np.arange(9) * 5 * 1e-5)
        assert np.all(np.abs(traj[:, 1:]) <= 1)
        script = (out / "small.gnuplot").read_text()
        assert script.count("plot ") == 1 and "'small.dat'" in script
        assert "wrote 9 rows" in capsys.readouterr().out

    def test_snapshots(self, small_input, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["run", str(small_input), "-o", str(out), "--snapshots"]) == 0
        snaps = sorted((out / "snapshots").glob("snapshot_*.txt"))
        assert len(snaps) == 9
        script = (out / "small.gnuplot").read_text()
        assert script.count("plot ") == 2
        assert "'snapshots/snapshot_00000040.txt'" in script

    def test_header_records_threads(self, small_input, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV, "3")
        out = tmp_path / "o"
        cli.main(["run", str(small_input), "-o", str(out)])
        assert "threads = 3" in (out / "small.dat").read_text()
        cli.main(["run", str(small_input), "-o", str(out), "--threads", "1"])
        assert "threads = 1" in (out / "small.dat").read_text()

    def test_cache_dir(self, small_input, tmp_path):
        cache = tmp_path / "cache"
        assert cli.main(["run", str(small_input), "-o", str(tmp_path / "o"), "--cache-dir", str(cache)]) == 0
        assert len(list(cache.glob("demag_*.bin"))) == 1

    def test_missing_file(self, tmp_path, capsys):
        missing = tmp_path / "nope.in"
        assert cli.main(["run", str(missing), "-o", str(tmp_path)]) == cli.EXIT_IO
        assert str(missing) in capsys.readouterr().err

    def test_bad_directive(self, tmp_path, capsys):
        bad = tmp_path / "bad.in"
        bad.write_text(SMALL.replace("-rectang", "-rectangle"))
        assert cli.main(["run", str(bad), "-o", str(tmp_path)]) == cli.EXIT_PARSE
        assert "line 2" in capsys.readouterr().err

    def test_unwritable_output(self, small_input, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert cli.main(["run", str(small_input), "-o", str(blocker / "sub")]) == cli.EXIT_IO

    def test_numerical_abort(self, tmp_path, capsys):
        # Ms so large that the torque overflows
        bad = tmp_path / "boom.in"
        bad.write_text("-simulation 1 3 1e-4\n-rectang 1 1 1\n-material 0 0 1e300 0 0 0 0 0\n"
                       "-externfield 0 1e300 0 0 5 5\n")
        assert cli.main(["run", str(bad), "-o", str(tmp_path / "o")]) == cli.EXIT_NUMERIC
        assert "numerical abort" in capsys.readouterr().err
        # the initial row was written before the abort
        assert read_trajectory(tmp_path / "o" / "boom.dat").shape[0] == 1

    @pytest.mark.slow
    def test_sample_file(self, tmp_path):
        assert cli.main(["run", str(SAMPLE), "-o", str(tmp_path)]) == 0
        assert read_trajectory(tmp_path / "sample.dat").shape == (1001, 4)


class TestBench:
    def test_csv(self, tmp_path, capsys):
        path = tmp_path / "b.csv"
        assert cli.main(["bench", "--sizes", "4,8", "--threads", "1", "--csv", str(path)]) == 0
        rows = list(csv.DictReader(io.StringIO(path.read_text())))
        assert [r["N"] for r in rows] == ["4", "8"]
        assert all(int(r["steps"]) >= 50 and r["threads"] == "1" for r in rows)
        table = capsys.readouterr().out
        assert "t(8^3)/t(4^3)" in table

    def test_needs_two_sizes(self):
        assert cli.main(["bench", "--sizes", "8"]) == cli.EXIT_PARSE


class TestValidate:
    def test_sstate_failure_exit(self, tmp_path, monkeypatch, capsys):
        quick = sp4.Setup("coarse", sp4.COARSE.grid, sp4.COARSE.dt, sp4.COARSE.relax_dt, 3,
                          sp4.COARSE.output_interval)
        monkeypatch.setattr(sp4, "COARSE", quick)
        assert cli.main(["validate", "--field", "1", "--coarse", "-o", str(tmp_path)]) == cli.EXIT_SSTATE
        assert "did not converge in 3 steps" in capsys.readouterr().err

    def test_field_choice(self):
        with pytest.raises(SystemExit):
            cli.main(["validate", "--field", "3"])


def test_version(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--version"])
    assert "grace" in capsys.readouterr().out
