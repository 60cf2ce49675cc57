"""Input-file parsing, ASCII trajectory/snapshot output and gnuplot scripts.

Input dialect, one directive per line, ``#`` starts a comment line::

    -simulation  outputInterval timesteps dt_ns
    -rectang     nx ny nz                         (cells of 1 nm)
    -material    alpha A_J/m Mx My Mz Hax Hay Haz (M and H_aniso in kA/m)
    -externfield Hx Hy Hz start decay stop        (field in mT, times in steps)

Directive order is free; ``-externfield`` is optional.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import numpy as np

from .constants import MU0
from .local_fields import FieldSchedule, axis_from_vector
from .mesh import Grid, MaterialParams, VectorField, average_magnetization

NM = 1e-9
NS = 1e-9
KA_M = 1e3
MT = 1e-3
# the same prefixes as decimal exponents, for exact shifts of input tokens
_NS_EXP, _KA_M_EXP, _MT_EXP = -9, 3, -3

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

# name -> (token names, integer-valued token positions)
DIRECTIVES = {
    "-simulation": (("outputInterval", "timesteps", "dt"), (0, 1)),
    "-rectang": (("nx", "ny", "nz"), (0, 1, 2)),
    "-material": (("alpha", "A", "M_init.x", "M_init.y", "M_init.z",
                   "H_aniso_x", "H_aniso_y", "H_aniso_z"), ()),
    "-externfield": (("Hx", "Hy", "Hz", "startTime", "decayTime", "stopTime"), (3, 4, 5)),
}
REQUIRED = ("-simulation", "-rectang", "-material")


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass
class SimConfig:
    output_interval: int
    timesteps: int
    dt: float                   # s
    grid: Grid
    alpha: float
    A_exch: float               # J/m
    m_init: tuple               # A/m
    h_aniso: tuple = (0.0, 0.0, 0.0)   # A/m
    schedule: FieldSchedule = field(default_factory=FieldSchedule.off)

    def __post_init__(self):
        if self.timesteps < 0:
            raise ValueError("timesteps must be >= 0")
        if self.output_interval < 1:
            raise ValueError("outputInterval must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.Ms > 0:
            raise ValueError("initial magnetization must be non-zero (it sets Ms)")

    @property
    def Ms(self) -> float:
        return float(np.linalg.norm(self.m_init))

    def material(self, gamma=None) -> MaterialParams:
        axis, hk = axis_from_vector(self.h_aniso)
        kw = {} if gamma is None else {"gamma": gamma}
        return MaterialParams(Ms=self.Ms, A_exch=self.A_exch, alpha=self.alpha,
                              aniso_axis=axis, H_k=hk, **kw)

    def initial_magnetization(self) -> VectorField:
        return VectorField.uniform(self.grid, self.m_init)


def _shift(tok: str, exp: int) -> float:
    """``float(tok) * 10**exp`` without the rounding of the multiply: "1e-4" ns is exactly 1e-13 s."""
    return float(Decimal(tok).scaleb(exp))


def _unshift(x: float, exp: int) -> str:
    """Shortest decimal token that :func:`_shift` maps back to ``x``."""
    return str(Decimal(repr(x)).scaleb(-exp))


def _number(tok, name, lineno, integer):
    if not _NUMBER.match(tok):
        raise ParseError(f"{name}: expected a number, got {tok!r}", lineno)
    val = float(tok)
    if not math.isfinite(val):
        raise ParseError(f"{name}: value {tok!r} is not finite", lineno)
    if integer:
        if val != int(val):
            raise ParseError(f"{name}: expected an integer, got {tok!r}", lineno)
        return int(val)
    return val


def parse_input(text: str) -> SimConfig:
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, *tokens = line.split()
        if name not in DIRECTIVES:
            raise ParseError(
                f"unknown directive {name!r}; expected one of {', '.join(DIRECTIVES)}", lineno
            )
        names, ints = DIRECTIVES[name]
        if name in seen:
            raise ParseError(f"duplicate directive {name} (first on line {seen[name][0]})", lineno)
        if len(tokens) != len(names):
            raise ParseError(
                f"{name} takes {len(names)} values ({' '.join(names)}), got {len(tokens)}", lineno
            )
        values = [_number(t, n, lineno, i in ints) for i, (t, n) in enumerate(zip(tokens, names))]
        seen[name] = (lineno, values, tokens)
    for name in REQUIRED:
        if name not in seen:
            form = " ".join(DIRECTIVES[name][0])
            raise ParseError(f"missing required directive {name} ({name} {form})")

    ln, (interval, steps, dt_ns), tok = seen["-simulation"]
    dt = _shift(tok[2], _NS_EXP)
    if interval < 1 or steps < 0 or not dt_ns > 0:
        raise ParseError("-simulation needs outputInterval >= 1, timesteps >= 0, dt > 0", ln)
    ln, (nx, ny, nz), _ = seen["-rectang"]
    if min(nx, ny, nz) < 1:
        raise ParseError("-rectang dimensions must be >= 1", ln)
    ln, mat, tok = seen["-material"]
    alpha, A = mat[0], mat[1]
    m_init = tuple(_shift(t, _KA_M_EXP) for t in tok[2:5])
    h_aniso = tuple(_shift(t, _KA_M_EXP) for t in tok[5:8])
    if alpha < 0 or A < 0:
        raise ParseError("-material needs alpha >= 0 and A >= 0", ln)
    if not any(m_init):
        raise ParseError("-material initial magnetization must be non-zero", ln)
    schedule = FieldSchedule.off()
    if "-externfield" in seen:
        ln, (_, _, _, start, decay, stop), tok = seen["-externfield"]
        if not (0 <= start <= decay <= stop):
            raise ParseError("-externfield needs 0 <= startTime <= decayTime <= stopTime", ln)
        schedule = FieldSchedule(tuple(_shift(t, _MT_EXP) / MU0 for t in tok[:3]), start, decay, stop)
    return SimConfig(
        output_interval=interval, timesteps=steps, dt=dt,
        grid=Grid(nx, ny, nz, NM, NM, NM),
        alpha=alpha, A_exch=A, m_init=m_init, h_aniso=h_aniso, schedule=schedule,
    )


def read_input(path) -> SimConfig:
    return parse_input(Path(path).read_text(encoding="ascii"))


def serialize_config(cfg: SimConfig) -> str:
    """Inverse of :func:`parse_input` (cubic 1 nm cells only)."""
    g = cfg.grid
    if (g.dx, g.dy, g.dz) != (NM, NM, NM):
        raise ValueError("the input dialect only describes 1 nm cubic cells")
    r = repr
    lines = [
        f"-simulation {cfg.output_interval} {cfg.timesteps} {_unshift(cfg.dt, _NS_EXP)}",
        "#      outputInterval  timesteps dt (ns)",
        f"-rectang {g.nx} {g.ny} {g.nz}",
        "#shape nx  ny  nz",
        "-material " + " ".join([r(cfg.alpha), r(cfg.A_exch)]
                                + [_unshift(x, _KA_M_EXP) for x in (*cfg.m_init, *cfg.h_aniso)]),
        "#      alpha A (J/m) M_init.x M_init.y M_init.z H_aniso_x H_aniso_y H_aniso_z",
    ]
    s = cfg.schedule
    if s != FieldSchedule.off():
        lines.append("-externfield " + " ".join(_unshift(h * MU0, _MT_EXP) for h in s.H0)
                     + f" {s.start_step} {s.decay_step} {s.stop_step}")
        lines.append("#      Hx    Hy    Hz  startTime  decayTime  stopTime")
    return "\n".join(lines) + "\n"


def format_row(t: float, m_avg) -> str:
    return "%.9f %.9f %.9f %.9f\n" % (t / NS, m_avg[0], m_avg[1], m_avg[2])


def write_trajectory_row(sink, t: float, m_avg) -> None:
    sink.write(format_row(t, m_avg))


def read_trajectory(path) -> np.ndarray:
    """Rows of (t_ns, mx, my, mz)."""
    return np.loadtxt(path, comments="#", ndmin=2)


def write_snapshot(sink, state) -> None:
    g = state.grid
    ms = state.material.Ms
    sink.write("# nx ny nz dx dy dz t\n")
    sink.write(f"# {g.nx} {g.ny} {g.nz} {g.dx!r} {g.dy!r} {g.dz!r} {state.t!r}\n")
    unit = state.m.data.reshape(3, -1) / ms
    k, j, i = np.unravel_index(np.arange(g.n_cells), g.shape)
    for n in range(g.n_cells):
        sink.write("%d %d %d %.17g %.17g %.17g\n" % (i[n], j[n], k[n], unit[0, n], unit[1, n], unit[2, n]))


def read_snapshot(path, Ms: float) -> tuple[VectorField, float]:
    """Parse a snapshot back into (magnetization, t)."""
    with open(path, encoding="ascii") as fh:
        fh.readline()
        head = fh.readline().lstrip("#").split()
        nx, ny, nz = (int(v) for v in head[:3])
        dx, dy, dz, t = (float(v) for v in head[3:7])
        body = np.loadtxt(fh, ndmin=2)
    grid = Grid(nx, ny, nz, dx, dy, dz)
    data = np.zeros((3,) + grid.shape)
    idx = body[:, :3].astype(int)
    for c in range(3):
        data[c, idx[:, 2], idx[:, 1], idx[:, 0]] = body[:, 3 + c] * Ms
    return VectorField(grid, data), t


class TrajectoryWriter:
    """Sink writing one (t_ns, <mx>, <my>, <mz>) row per emit."""

    def __init__(self, path, header: str | None = None):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="ascii", newline="\n")
        if header:
            for line in header.splitlines():
                self._fh.write(f"# {line}\n")
        self.rows = 0

    def emit(self, state):
        try:
            write_trajectory_row(self._fh, state.t, average_magnetization(state.m, state.material.Ms))
        except OSError as exc:
            raise OSError(f"writing {self.path}: {exc}") from exc
        self.rows += 1

    def close(self):
        self._fh.close()


class SnapshotWriter:
    """Sink writing ``snapshot_NNNNNNNN.txt`` every ``every`` emits."""

    def __init__(self, directory, every: int = 1):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.every = every
        self._count = 0
        self.paths = []

    def emit(self, state):
        if self._count % self.every == 0:
            path = self.directory / f"snapshot_{state.step:08d}.txt"
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                write_snapshot(fh, state)
            self.paths.append(path)
        self._count += 1

    def close(self):
        pass


def emit_gnuplot_script(trajectory: str, snapshot: str | None = None, layer: int = 0,
                        title: str = "grace", stride: int = 1) -> str:
    """gnuplot script for <M>/Ms vs t and, with a snapshot, the layer's in-plane vectors.

    Paths are written as given; pass paths relative to where gnuplot runs.
    """
    out = [
        "set terminal pngcairo size 900,600",
        f"set output '{Path(trajectory).stem}.png'",
        f"set title '{title}: average magnetization'",
        "set xlabel 't (ns)'",
        "set ylabel '<M>/Ms'",
        "set yrange [-1.05:1.05]",
        "set key outside",
        f"plot '{trajectory}' using 1:2 with lines title '<Mx>/Ms', \\",
        f"     '{trajectory}' using 1:3 with lines title '<My>/Ms', \\",
        f"     '{trajectory}' using 1:4 with lines title '<Mz>/Ms'",
    ]
    if snapshot is not None:
        out += [
            "",
            "reset",
            "set terminal pngcairo size 1200,400",
            f"set output '{Path(snapshot).stem}.png'",
            f"set title 'magnetization, layer k = {layer}'",
            "set size ratio -1",
            "set xlabel 'i'",
            "set ylabel 'j'",
            "set palette defined (-1 'blue', 0 'white', 1 'red')",
            "set cbrange [-1:1]",
            f"plot '{snapshot}' using 1:2:(($3=={layer}) ? 0.8*$4 : 1/0):(0.8*$5):4 "
            f"every {stride} with vectors head size 0.3,20 filled lc palette notitle",
        ]
    return "\n".join(out) + "\n"
