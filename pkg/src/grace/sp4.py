"""muMAG standard problem #4 harness: S-state relaxation, field reversal, comparison.

Full resolution is 500x125x3 cells of 1 nm.  ``coarse`` is 100x25x1 cells of
5 x 5 x 3 nm, the usual single-layer discretization of the 3 nm film.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .constants import MU0
from .demag import build_demag_tensor
from .dynamics import SimState, euler_step, relax
from .io import NS, TrajectoryWriter, write_snapshot
from .local_fields import FieldSchedule
from .mesh import Grid, MaterialParams, VectorField, average_magnetization

log = logging.getLogger(__name__)

FIELDS_MT = {1: (-24.6, 4.3, 0.0), 2: (-35.5, -6.3, 0.0)}
MS = 8.0e5
A_EXCH = 1.3e-11
ALPHA = 0.02
DURATION = 1e-9

# acceptance tolerances: relative error of the first <Mx> zero crossing and
# max |<My> - <My>_ref| over the run
TOLERANCES = {"full": (0.10, 0.10), "coarse": (0.15, 0.20)}


@dataclass(frozen=True)
class Setup:
    name: str
    grid: Grid
    dt: float              # reversal step, s
    relax_dt: float        # relaxation step, s
    relax_max_steps: int
    output_interval: int   # steps between trajectory rows


FULL = Setup("full", Grid(500, 125, 3, 1e-9, 1e-9, 1e-9), dt=1e-13, relax_dt=2e-14,
             relax_max_steps=20000, output_interval=10)
COARSE = Setup("coarse", Grid(100, 25, 1, 5e-9, 5e-9, 3e-9), dt=1e-14, relax_dt=2e-13,
               relax_max_steps=50000, output_interval=100)


def material(alpha=ALPHA) -> MaterialParams:
    return MaterialParams(Ms=MS, A_exch=A_EXCH, alpha=alpha)


def field_A_per_m(which: int) -> tuple:
    return tuple(b * 1e-3 / MU0 for b in FIELDS_MT[which])


def initial_guess(grid: Grid) -> VectorField:
    """+x everywhere except +y in the end columns; relaxes into the S-state."""
    m = np.zeros((3,) + grid.shape)
    m[0, :, :, 1:-1] = MS
    m[1, :, :, (0, -1)] = MS
    return VectorField(grid, m)


class SStateError(RuntimeError):
    pass


def _prolong(m: VectorField, grid: Grid) -> VectorField:
    """Nearest-neighbour transfer of a magnetization onto a finer grid."""
    src = m.grid
    idx = [np.minimum((np.arange(n) + 0.5) * d / sd, sn - 1).astype(int)
           for n, d, sd, sn in zip(grid.shape, (grid.dz, grid.dy, grid.dx),
                                   (src.dz, src.dy, src.dx), src.shape)]
    data = m.data[:, idx[0]][:, :, idx[1]][:, :, :, idx[2]]
    return VectorField(grid, data)


def relax_s_state(setup: Setup, torque_tol: float = 1e-4, workers=None, kernel=None):
    """Relax the initial guess with alpha = 1.  Full resolution starts from the
    relaxed coarse state.  Returns (magnetization, RelaxResult)."""
    if setup.name == "full":
        coarse, _ = relax_s_state(COARSE, torque_tol, workers)
        m0 = _prolong(coarse, setup.grid)
    else:
        m0 = initial_guess(setup.grid)
    kernel = kernel or build_demag_tensor(setup.grid)
    state = SimState(m0, material(1.0), kernel, workers=workers)
    check = 1 if setup.grid.n_cells < 10**4 else 10
    state, res = relax(state, setup.relax_dt, alpha_relax=1.0, max_steps=setup.relax_max_steps,
                       torque_tol=torque_tol, check_every=check)
    log.info("%s S-state: converged=%s steps=%d torque=%.3g <m>=%s", setup.name, res.converged,
             res.steps, res.torque, average_magnetization(state.m, MS))
    return state.m, res


class CrossingSnapshot:
    """Sink that writes one snapshot the first time <Mx> drops to zero or below."""

    def __init__(self, path):
        self.path = Path(path)
        self.t = None

    def emit(self, state):
        if self.t is None and average_magnetization(state.m, MS)[0] <= 0.0:
            self.t = state.t
            with open(self.path, "w", encoding="ascii", newline="\n") as fh:
                write_snapshot(fh, state)

    def close(self):
        pass


def reversal(setup: Setup, which: int, m_s: VectorField, sinks=(), dt=None,
             workers=None, kernel=None) -> SimState:
    """Apply field ``which`` at alpha = 0.02 for 1 ns starting from ``m_s``."""
    dt = setup.dt if dt is None else dt
    steps = int(round(DURATION / dt))
    interval = max(1, int(round(setup.output_interval * setup.dt / dt)))
    kernel = kernel or build_demag_tensor(setup.grid)
    state = SimState(m_s.copy(), material(), kernel,
                     FieldSchedule.constant(field_A_per_m(which)), workers=workers)
    for s in sinks:
        s.emit(state)
    for _ in range(steps):
        euler_step(state, dt)
        if state.step % interval == 0:
            for s in sinks:
                s.emit(state)
    return state


def load_reference(which: int) -> np.ndarray:
    """Bundled reference curve, rows of (t_ns, mx, my, mz)."""
    ref = resources.files("grace") / "data" / f"sp4_field{which}_reference.dat"
    with resources.as_file(ref) as path:
        return np.loadtxt(path, comments="#", ndmin=2)


def first_zero_crossing(t, mx) -> float:
    """Linearly interpolated time of the first sign change of ``mx`` from > 0 to <= 0."""
    t, mx = np.asarray(t), np.asarray(mx)
    idx = np.flatnonzero((mx[:-1] > 0) & (mx[1:] <= 0))
    if idx.size == 0:
        return float("nan")
    i = idx[0]
    return float(t[i] + (t[i + 1] - t[i]) * mx[i] / (mx[i] - mx[i + 1]))


@dataclass
class Comparison:
    crossing: float
    crossing_ref: float
    max_dmy: float
    crossing_tol: float
    my_tol: float

    @property
    def crossing_error(self) -> float:
        return abs(self.crossing - self.crossing_ref) / self.crossing_ref

    @property
    def crossing_ok(self) -> bool:
        return bool(self.crossing_error <= self.crossing_tol)

    @property
    def my_ok(self) -> bool:
        return bool(self.max_dmy <= self.my_tol)

    @property
    def passed(self) -> bool:
        return self.crossing_ok and self.my_ok

    def summary(self) -> str:
        flag = lambda ok: "PASS" if ok else "FAIL"
        return (
            f"crossing time: {self.crossing:.6f} ns vs reference {self.crossing_ref:.6f} ns, "
            f"relative error {self.crossing_error:.4f} (tol {self.crossing_tol}) {flag(self.crossing_ok)}\n"
            f"max |<My> - <My>_ref|: {self.max_dmy:.4f} (tol {self.my_tol}) {flag(self.my_ok)}\n"
            f"overall: {flag(self.passed)}\n"
        )


def compare(traj: np.ndarray, ref: np.ndarray, tolerances=TOLERANCES["full"]) -> Comparison:
    """Compare a trajectory against the reference on the trajectory's time points."""
    t = traj[:, 0]
    inside = t <= ref[-1, 0] + 1e-12
    my_ref = np.interp(t[inside], ref[:, 0], ref[:, 2])
    return Comparison(
        crossing=first_zero_crossing(t, traj[:, 1]),
        crossing_ref=first_zero_crossing(ref[:, 0], ref[:, 1]),
        max_dmy=float(np.max(np.abs(traj[inside, 2] - my_ref))),
        crossing_tol=tolerances[0],
        my_tol=tolerances[1],
    )


def run_validation(which: int, outdir, coarse=False, dt=None, workers=None, m_s=None,
                   torque_tol: float = 1e-4):
    """Relax, reverse, write trajectory/snapshot/summary into ``outdir``.

    Returns the :class:`Comparison`.  Raises :class:`SStateError` if the
    relaxation does not converge.
    """
    setup = COARSE if coarse else FULL
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    kernel = build_demag_tensor(setup.grid)
    if m_s is None:
        m_s, res = relax_s_state(setup, torque_tol, workers, kernel=kernel)
        if not res.converged:
            raise SStateError(
                f"S-state relaxation did not converge in {res.steps} steps "
                f"(max torque {res.torque:.3g} > {torque_tol}); "
                f"<m> = {average_magnetization(m_s, MS).round(4).tolist()}"
            )
    dt_used = setup.dt if dt is None else dt
    header = (f"muMAG standard problem #4, field {which} = {FIELDS_MT[which]} mT, {setup.name} grid "
              f"{setup.grid.nx}x{setup.grid.ny}x{setup.grid.nz}, dt = {dt_used:g} s, alpha = {ALPHA}\n"
              "t_ns mx my mz")
    traj_path = out / f"sp4_field{which}.dat"
    writer = TrajectoryWriter(traj_path, header=header)
    snap = CrossingSnapshot(out / f"sp4_field{which}_crossing.txt")
    try:
        reversal(setup, which, m_s, [writer, snap], dt=dt, workers=workers, kernel=kernel)
    finally:
        writer.close()
    traj = np.loadtxt(traj_path, comments="#", ndmin=2)
    cmp = compare(traj, load_reference(which), TOLERANCES[setup.name])
    (out / f"sp4_field{which}_summary.txt").write_text(
        f"standard problem #4, field {which}, {setup.name} grid, dt = {dt_used:g} s\n" + cmp.summary(),
        encoding="ascii",
    )
    return cmp
