"""Effective field, LLG right-hand side, forward Euler stepping and run drivers."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .demag import DemagKernel, demag_field
from .local_fields import (FieldSchedule, anisotropy_energy, anisotropy_field,
                           exchange_energy, exchange_field, exchange_prefactor,
                           external_field)
from .mesh import Grid, MaterialParams, VectorField, average_magnetization

log = logging.getLogger(__name__)

TORQUE_EPS = 1e-30


class NumericalAbort(RuntimeError):
    """A step produced non-finite magnetization (usually dt too large)."""

    def __init__(self, step, cell, coords=None):
        self.step = step
        self.cell = cell
        where = f" {coords}" if coords is not None else ""
        super().__init__(f"non-finite magnetization at step {step}, cell {cell}{where}; reduce dt")


@dataclass
class SimState:
    """Mutable simulation state.  ``kernel=None`` switches the demag term off."""

    m: VectorField
    material: MaterialParams
    kernel: DemagKernel | None = None
    schedule: FieldSchedule = field(default_factory=FieldSchedule.off)
    step: int = 0
    t: float = 0.0
    workers: int | None = None
    _buffers: tuple | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def grid(self) -> Grid:
        return self.m.grid

    def copy(self) -> "SimState":
        return SimState(self.m.copy(), self.material, self.kernel, self.schedule,
                        self.step, self.t, self.workers)


def field_terms(state: SimState) -> dict:
    """Each contribution to H_eff (A/m) as an array of shape (3, nz, ny, nx)."""
    mat, m = state.material, state.m
    terms = {}
    terms["exchange"] = exchange_field(m, m.grid, mat.A_exch, mat.Ms).data
    terms["anisotropy"] = anisotropy_field(m, mat.aniso_axis, mat.H_k, mat.Ms).data
    if state.kernel is not None:
        terms["demag"] = demag_field(m, state.kernel, workers=state.workers).data
    else:
        terms["demag"] = np.zeros_like(m.data)
    terms["zeeman"] = np.broadcast_to(
        external_field(state.schedule, state.step).reshape(3, 1, 1, 1), m.data.shape
    )
    return terms


def effective_field(state: SimState, out: np.ndarray | None = None,
                    scratch: np.ndarray | None = None) -> VectorField:
    """H_eff = H_exch + H_anis + H_demag + H_extern.

    ``out`` receives the result and ``scratch`` holds the demag term when given.
    """
    mat, m = state.material, state.m
    if out is None:
        out = np.empty_like(m.data)
    h = out
    if mat.A_exch != 0.0:
        exchange_field(m, m.grid, mat.A_exch, mat.Ms, out=h)
    else:
        h.fill(0.0)
    if mat.H_k != 0.0:
        h += anisotropy_field(m, mat.aniso_axis, mat.H_k, mat.Ms).data
    if state.kernel is not None:
        h += demag_field(m, state.kernel, workers=state.workers, out=scratch).data
    hext = external_field(state.schedule, state.step)
    if hext.any():
        h += hext.reshape(3, 1, 1, 1)
    return VectorField(m.grid, h)


def llg_rhs(m_cell, h_eff_cell, p: MaterialParams) -> np.ndarray:
    """dM/dt for one cell, A/(m s)."""
    m = np.asarray(m_cell, dtype=float)
    b = p.mu0 * np.asarray(h_eff_cell, dtype=float)
    gp = p.gamma / (1.0 + p.alpha**2)
    mxb = np.cross(m, b)
    return -gp * mxb - (p.alpha * gp / p.Ms) * np.cross(m, mxb)


def _apply_update(state: SimState, h: np.ndarray, dt: float, alpha: float):
    mat = state.material
    bad = kernels.euler_update(state.m.data, h, dt, mat.gamma, alpha, mat.Ms, mat.mu0)
    if bad >= 0:
        raise NumericalAbort(state.step, bad, state.grid.coords(bad))
    state.step += 1
    state.t = state.step * dt


def _buffers(state: SimState):
    """Per-state (H_eff, demag) work arrays, reallocated if the grid changes."""
    bufs = state._buffers
    if bufs is None or bufs[0].shape != state.m.data.shape:
        bufs = state._buffers = (np.empty_like(state.m.data), np.empty_like(state.m.data))
    return bufs


def euler_step(state: SimState, dt: float) -> SimState:
    """One forward Euler step with H_eff taken at the pre-step state, then renormalize.

    Updates ``state`` in place and returns it.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    h = effective_field(state, *_buffers(state)).data
    _apply_update(state, h, dt, state.material.alpha)
    return state


def total_energy(state: SimState) -> tuple[float, dict]:
    """Total energy (J) and the per-term breakdown."""
    mat, m = state.material, state.m
    v = m.grid.cell_volume
    parts = {
        "exchange": exchange_energy(m, mat.A_exch, mat.Ms),
        "anisotropy": anisotropy_energy(m, mat.aniso_axis, mat.H_k, mat.Ms),
    }
    if state.kernel is not None:
        hd = demag_field(m, state.kernel, workers=state.workers).data
        parts["demag"] = -0.5 * mat.mu0 * v * float(np.sum(hd * m.data))
    else:
        parts["demag"] = 0.0
    hext = external_field(state.schedule, state.step)
    parts["zeeman"] = -mat.mu0 * v * float(hext @ m.data.reshape(3, -1).sum(axis=1))
    return sum(parts.values()), parts


def max_torque(m: np.ndarray, h: np.ndarray, Ms: float) -> float:
    """max over cells of |M x H| / (Ms |H| + eps), the sine of the misalignment."""
    c = np.cross(m, h, axis=0)
    num = np.sqrt(np.einsum("c...,c...->...", c, c))
    den = Ms * np.sqrt(np.einsum("c...,c...->...", h, h)) + TORQUE_EPS
    return float(np.max(num / den))


@dataclass
class RelaxResult:
    converged: bool
    steps: int
    torque: float

    @property
    def reason(self) -> str:
        return "torque" if self.converged else "max_steps"


def relax(state: SimState, dt: float, alpha_relax: float = 1.0, max_steps: int = 10**6,
          torque_tol: float = 1e-4, check_every: int = 1) -> tuple[SimState, RelaxResult]:
    """Damped Euler steps at ``alpha_relax`` until the torque criterion or ``max_steps``.

    The step counter and time of ``state`` are restored afterwards; only M changes.
    """
    if not alpha_relax > 0 or not torque_tol > 0:
        raise ValueError("alpha_relax and torque_tol must be positive")
    step0, t0 = state.step, state.t
    n = 0
    torque = math.inf
    try:
        while True:
            h = effective_field(state, *_buffers(state)).data
            if n % check_every == 0 or n >= max_steps:
                torque = max_torque(state.m.data, h, state.material.Ms)
                if torque < torque_tol:
                    return state, RelaxResult(True, n, torque)
            if n >= max_steps:
                return state, RelaxResult(False, n, torque)
            _apply_update(state, h, dt, alpha_relax)
            state.step = step0
            n += 1
    finally:
        state.step, state.t = step0, t0


def stable_dt_estimate(grid: Grid, material: MaterialParams, h_applied: float = 0.0,
                       alpha: float | None = None) -> float:
    """Largest dt for which forward Euler damps the stiffest spin-wave mode.

    Linearising about a uniform state, a mode of angular frequency w grows
    under Euler unless w*dt < 2*alpha.  The stiffest mode is the grid-scale
    exchange mode; demag adds at most Ms.
    """
    alpha = material.alpha if alpha is None else alpha
    if alpha <= 0:
        return 0.0
    lam = 0.0
    for n, d in zip((grid.nx, grid.ny, grid.nz), grid.cell):
        if n > 1:
            lam += (2.0 - 2.0 * math.cos(math.pi * (n - 1) / n)) / d**2
    h_max = exchange_prefactor(material.A_exch, material.Ms) * material.Ms * lam
    h_max += material.Ms + material.H_k + abs(h_applied)
    omega = material.gamma * material.mu0 * h_max
    return 2.0 * alpha / omega


def state_from_config(cfg, *, build_kernel=True, cutoff=None, cache_dir=None,
                      workers=None, gamma=None) -> SimState:
    """Initial state for a parsed ``SimConfig``."""
    from .demag import DEFAULT_CUTOFF, build_demag_tensor

    kernel = None
    if build_kernel:
        kernel = build_demag_tensor(cfg.grid, DEFAULT_CUTOFF if cutoff is None else cutoff,
                                    cache_dir=cache_dir)
    return SimState(cfg.initial_magnetization(), cfg.material(gamma), kernel, cfg.schedule,
                    workers=workers)


def run(cfg, sinks=(), state: SimState | None = None) -> SimState:
    """Integrate ``cfg.timesteps`` Euler steps, emitting to every sink at step 0
    and each ``cfg.output_interval`` steps after it.

    A :class:`NumericalAbort` propagates; rows already emitted stay valid.
    """
    if state is None:
        state = state_from_config(cfg)
    limit = stable_dt_estimate(state.grid, state.material,
                               float(np.linalg.norm(state.schedule.H0)))
    if cfg.dt > limit > 0:
        log.warning("dt = %.3g s exceeds the forward-Euler stability estimate %.3g s; "
                    "short-wavelength modes will grow", cfg.dt, limit)
    for s in sinks:
        s.emit(state)
    for _ in range(cfg.timesteps):
        euler_step(state, cfg.dt)
        if state.step % cfg.output_interval == 0:
            for s in sinks:
                s.emit(state)
    return state
