from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from grace.constants import MU0
from grace.dynamics import SimState
from grace.io import (ParseError, SimConfig, SnapshotWriter, TrajectoryWriter, emit_gnuplot_script,
                      format_row, parse_input, read_input, read_snapshot, read_trajectory,
                      serialize_config, write_snapshot, write_trajectory_row)
from grace.local_fields import FieldSchedule
from grace.mesh import Grid, MaterialParams, VectorField

SAMPLE = Path(__file__).parent / "data" / "sample.in"


def sample_config() -> SimConfig:
    """The sample file written out by hand in SI units."""
    return SimConfig(
        output_interval=10, timesteps=10000, dt=1e-13, grid=Grid(500, 125, 3),
        alpha=0.02, A_exch=1.3e-11, m_init=(800e3, 0.0, 0.0), h_aniso=(0.0, 0.0, 0.0),
        schedule=FieldSchedule((-27.852e-3 / MU0, -5.013e-3 / MU0, 0.0), 0, 1000, 2000),
    )


def mutate(old, new):
    text = SAMPLE.read_text()
    assert old in text
    return text.replace(old, new, 1)


class TestParse:
    def test_sample_file(self):
        cfg = read_input(SAMPLE)
        assert cfg == sample_config()
        assert cfg.Ms == 8e5
        assert cfg.material().H_k == 0.0

    @pytest.mark.parametrize("tok, si", [("1e-4", 1e-13), ("0.3", 3e-10), ("2.5E-3", 2.5e-12)])
    def test_unit_conversion_is_correctly_rounded(self, tok, si):
        text = SAMPLE.read_text().replace("10000  1e-4", f"10000  {tok}")
        assert parse_input(text).dt == si

    def test_directive_order_free(self):
        lines = SAMPLE.read_text().splitlines()
        assert parse_input("\n".join(reversed(lines))) == sample_config()

    def test_externfield_optional(self):
        text = "\n".join(l for l in SAMPLE.read_text().splitlines() if not l.startswith("-externfield"))
        assert parse_input(text).schedule == FieldSchedule.off()

    def test_comments_and_blank_lines(self):
        assert parse_input("\n\n   # hi\n" + SAMPLE.read_text() + "\n# bye\n") == sample_config()

    def test_anisotropy_vector(self):
        cfg = parse_input(mutate("800    0    0    0    0    0", "800 0 0 0 30 40"))
        mat = cfg.material()
        assert mat.H_k == pytest.approx(50e3)
        np.testing.assert_allclose(mat.aniso_axis, (0, 0.6, 0.8))

    def test_missing_rectang(self):
        with pytest.raises(ParseError, match="missing required directive -rectang"):
            parse_input(mutate("-rectang 500 125 3", ""))

    def test_material_arity(self):
        with pytest.raises(ParseError, match=r"line 5: -material takes 8 values .*got 7"):
            parse_input(mutate("800    0    0    0    0    0", "800    0    0    0    0"))

    @pytest.mark.parametrize("old,new,pattern", [
        ("-simulation 10", "-simulate 10", r"line 1: unknown directive '-simulate'"),
        ("1e-4", "1e-4x", r"line 1: dt: expected a number"),
        ("1e-4", "nan", r"line 1: dt: expected a number"),
        ("-rectang 500", "-rectang 500.5", r"line 3: nx: expected an integer"),
        ("-rectang 500 125 3", "-rectang 500 125 3\n-rectang 1 1 1", r"line 4: duplicate directive -rectang"),
        ("-rectang 500", "-rectang 0", r"line 3: -rectang dimensions"),
        ("0.  0    1000    2000", "0.  3000    1000    2000", r"startTime <= decayTime"),
        ("-simulation 10 ", "-simulation 0 ", r"outputInterval >= 1"),
        ("-material 0.02", "-material -0.02", r"alpha >= 0"),
        ("800    0    0    0", "0    0    0    0", r"initial magnetization must be non-zero"),
    ])
    def test_diagnostics(self, old, new, pattern):
        with pytest.raises(ParseError, match=pattern):
            parse_input(mutate(old, new))

    def test_error_carries_line(self):
        with pytest.raises(ParseError) as info:
            parse_input(mutate("-rectang 500 125 3", "-rectang 500 125"))
        assert info.value.line == 3

    @given(
        st.integers(1, 100), st.integers(0, 10**6), st.floats(1e-8, 1.0),
        st.tuples(*[st.integers(1, 600)] * 3), st.floats(0, 5), st.floats(0, 1e-10),
        st.tuples(*[st.floats(-2000, 2000)] * 3), st.tuples(*[st.floats(-500, 500)] * 3),
        st.tuples(*[st.floats(-100, 100)] * 3), st.lists(st.integers(0, 10**5), min_size=3, max_size=3),
    )
    def test_serialize_round_trip(self, interval, steps, dt_ns, dims, alpha, A, m, ha, h, times):
        if not any(m):
            m = (1.0, 0.0, 0.0)
        start, decay, stop = sorted(times)
        cfg = SimConfig(interval, steps, dt_ns * 1e-9, Grid(*dims), alpha, A,
                        tuple(v * 1e3 for v in m), tuple(v * 1e3 for v in ha),
                        FieldSchedule(tuple(b * 1e-3 / MU0 for b in h), start, decay, stop))
        back = parse_input(serialize_config(cfg))
        assert back.grid == cfg.grid
        assert (back.output_interval, back.timesteps) == (cfg.output_interval, cfg.timesteps)
        np.testing.assert_allclose(
            [back.dt, back.alpha, back.A_exch, *back.m_init, *back.h_aniso, *back.schedule.H0],
            [cfg.dt, cfg.alpha, cfg.A_exch, *cfg.m_init, *cfg.h_aniso, *cfg.schedule.H0],
            rtol=1e-14, atol=1e-300)
        assert (back.schedule.start_step, back.schedule.decay_step, back.schedule.stop_step) == \
            (start, decay, stop)

    def test_serialize_sample_round_trip(self):
        cfg = read_input(SAMPLE)
        back = parse_input(serialize_config(cfg))
        assert back.grid == cfg.grid and back.schedule.start_step == 0
        np.testing.assert_allclose(back.schedule.H0, cfg.schedule.H0, rtol=1e-15)


def _state(grid, vec, Ms=1e6, t=0.0):
    s = SimState(VectorField.uniform(grid, vec), MaterialParams(Ms=Ms))
    s.t = t
    return s


class TestOutput:
    def test_initial_row(self):
        assert format_row(0.0, (1, 0, 0)) == "0.000000000 1.000000000 0.000000000 0.000000000\n"

    @given(st.floats(0, 10e-9), st.tuples(*[st.floats(-1, 1)] * 3))
    def test_row_round_trip(self, t, m):
        vals = [float(v) for v in format_row(t, m).split()]
        np.testing.assert_allclose(vals, [t * 1e9, *m], atol=1e-9)

    def test_trajectory_writer(self, tmp_path):
        g = Grid(2, 1, 1)
        w = TrajectoryWriter(tmp_path / "t.dat", header="a\nb")
        for k in range(3):
            w.emit(_state(g, (0, 1e6, 0), t=k * 1e-12))
        w.close()
        arr = read_trajectory(tmp_path / "t.dat")
        assert w.rows == 3 and arr.shape == (3, 4)
        np.testing.assert_allclose(arr[:, 0], [0, 1e-3, 2e-3])
        raw = (tmp_path / "t.dat").read_bytes()
        assert raw.startswith(b"# a\n# b\n") and raw.isascii() and b"\r" not in raw

    def test_write_row_to_sink(self, tmp_path):
        path = tmp_path / "r.dat"
        with open(path, "w") as fh:
            write_trajectory_row(fh, 1e-9, (0.5, -0.5, 0.0))
        assert path.read_text() == "1.000000000 0.500000000 -0.500000000 0.000000000\n"

    def test_single_cell_snapshot(self, tmp_path):
        path = tmp_path / "s.txt"
        with open(path, "w") as fh:
            write_snapshot(fh, _state(Grid(1, 1, 1), (0, 0, 1e6)))
        lines = path.read_text().splitlines()
        assert lines[0] == "# nx ny nz dx dy dz t"
        assert lines[-1] == "0 0 0 0 0 1"

    def test_snapshot_round_trip(self, tmp_path, rng):
        g = Grid(4, 3, 2, 1e-9, 2e-9, 3e-9)
        v = rng.standard_normal((3,) + g.shape)
        v /= np.sqrt((v * v).sum(axis=0))
        state = SimState(VectorField(g, v * 8e5), MaterialParams(Ms=8e5))
        state.t = 1.25e-10
        path = tmp_path / "s.txt"
        with open(path, "w") as fh:
            write_snapshot(fh, state)
        m, t = read_snapshot(path, 8e5)
        assert m.grid == g and t == state.t
        np.testing.assert_array_equal(m.data, (v * 8e5 / 8e5) * 8e5)
        np.testing.assert_allclose(m.data, state.m.data, rtol=1e-15)
        # x fastest in the file
        first = [l.split()[:3] for l in path.read_text().splitlines()[2:4]]
        assert first == [["0", "0", "0"], ["1", "0", "0"]]

    def test_snapshot_writer_every(self, tmp_path):
        w = SnapshotWriter(tmp_path / "snaps", every=2)
        g = Grid(1, 1, 1)
        for k in range(5):
            s = _state(g, (1e6, 0, 0))
            s.step = k
            w.emit(s)
        assert [p.name for p in w.paths] == ["snapshot_00000000.txt", "snapshot_00000002.txt",
                                             "snapshot_00000004.txt"]

    def test_gnuplot_blocks(self):
        one = emit_gnuplot_script("run.dat")
        two = emit_gnuplot_script("run.dat", "snapshots/snapshot_00000010.txt", layer=1)
        assert one.count("plot ") == 1
        assert two.count("plot ") == 2 and "$3==1" in two
        assert "/" not in one.replace("t (ns)", "").split("plot", 1)[1].split("'")[1]
        assert "'snapshots/snapshot_00000010.txt'" in two
        assert two.isascii()
