"""Exchange, uniaxial anisotropy and the scheduled external field."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .constants import MU0
from .mesh import Grid, VectorField


@dataclass(frozen=True)
class FieldSchedule:
    """Applied field H0 (A/m): off, plateau, linear ramp to zero, off.

    Amplitude is 0 for step < start, H0 on [start, decay), ramps linearly
    from H0 to 0 over [decay, stop), and is 0 from stop on.
    """

    H0: tuple = (0.0, 0.0, 0.0)
    start_step: int = 0
    decay_step: int = 0
    stop_step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "H0", tuple(float(h) for h in self.H0))
        if len(self.H0) != 3:
            raise ValueError("H0 must be a 3-vector")
        s, d, e = self.start_step, self.decay_step, self.stop_step
        if min(s, d, e) < 0 or not (s <= d <= e):
            raise ValueError(
                f"field schedule needs 0 <= start <= decay <= stop, got {s}, {d}, {e}"
            )

    @classmethod
    def constant(cls, H0) -> "FieldSchedule":
        """Field that is on for every step."""
        big = 2**62
        return cls(tuple(H0), 0, big, big)

    @classmethod
    def off(cls) -> "FieldSchedule":
        return cls((0.0, 0.0, 0.0), 0, 0, 0)

    def amplitude(self, step: int) -> float:
        if step < self.start_step or step >= self.stop_step:
            return 0.0
        if step < self.decay_step:
            return 1.0
        return (self.stop_step - step) / (self.stop_step - self.decay_step)


def external_field(schedule: FieldSchedule, step: int) -> np.ndarray:
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    return schedule.amplitude(step) * np.asarray(schedule.H0)


def _check(m: VectorField, grid: Grid):
    if m.grid.shape != grid.shape:
        raise ValueError(f"field has grid shape {m.grid.shape}, expected {grid.shape}")


def exchange_prefactor(A_exch: float, Ms: float) -> float:
    return 2.0 * A_exch / (MU0 * Ms * Ms)


def exchange_field(m: VectorField, grid: Grid, A_exch: float, Ms: float, out=None) -> VectorField:
    """Six-neighbour exchange field with mirror (Neumann) boundaries.

    H = 2A/(mu0 Ms^2) * sum over axes of (M+ - 2M + M-)/d^2, a missing
    neighbour contributing nothing.
    """
    _check(m, grid)
    c = exchange_prefactor(A_exch, Ms)
    if out is None:
        out = np.empty_like(m.data)
    kernels.exchange(m.data, out, c / grid.dx**2, c / grid.dy**2, c / grid.dz**2)
    return VectorField(m.grid, out)


def exchange_energy(m: VectorField, A_exch: float, Ms: float) -> float:
    """Bond form V*A/Ms^2 * sum over neighbour pairs |M_a - M_b|^2 / d^2 (J)."""
    g = m.grid
    total = 0.0
    for axis, d in ((3, g.dx), (2, g.dy), (1, g.dz)):
        if m.data.shape[axis] > 1:
            diff = np.diff(m.data, axis=axis)
            total += float(np.sum(diff * diff)) / d**2
    return g.cell_volume * A_exch / Ms**2 * total


def _unit_axis(axis) -> np.ndarray:
    u = np.asarray(axis, dtype=float)
    if u.shape != (3,) or abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ValueError(f"anisotropy axis must be a unit 3-vector, got {axis}")
    return u


def anisotropy_field(m: VectorField, axis, H_k: float, Ms: float) -> VectorField:
    u = _unit_axis(axis)
    if H_k == 0.0:
        return VectorField.zeros(m.grid)
    proj = np.tensordot(u, m.data, axes=1)
    return VectorField(m.grid, (H_k / Ms) * u[:, None, None, None] * proj[None])


def anisotropy_energy(m: VectorField, axis, H_k: float, Ms: float) -> float:
    """Sum of V*Ku*(1 - (M.u)^2/Ms^2); the constant term keeps E = 0 along the easy axis."""
    u = _unit_axis(axis)
    ku = 0.5 * MU0 * Ms * H_k
    proj = np.tensordot(u, m.data, axes=1)
    return m.grid.cell_volume * ku * float(np.sum(1.0 - proj * proj / Ms**2))


def axis_from_vector(h_aniso) -> tuple[tuple, float]:
    """Split an anisotropy-field vector into (unit axis, magnitude); zero disables."""
    h = np.asarray(h_aniso, dtype=float)
    mag = float(math.sqrt(h @ h))
    if mag == 0.0:
        return (1.0, 0.0, 0.0), 0.0
    return tuple(h / mag), mag
