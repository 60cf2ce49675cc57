"""Regular grid geometry, vector-field storage and reductions.

Fields are stored structure-of-arrays as ``data[c, k, j, i]`` (component,
z, y, x) in C order, so the linear cell index is ``i + nx*(j + ny*k)``:
x runs fastest, then y, then z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import GAMMA, MU0


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    nz: int
    dx: float = 1e-9
    dy: float = 1e-9
    dz: float = 1e-9

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"grid dimension {name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("dx", "dy", "dz"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"cell size {name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape of one component, (nz, ny, nx)."""
        return (self.nz, self.ny, self.nx)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def cell(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    @property
    def padded_shape(self) -> tuple[int, int, int]:
        """Zero-padded convolution domain (pz, py, px); singleton axes stay unpadded."""
        return tuple(1 if n == 1 else 2 * n for n in self.shape)

    def index(self, i: int, j: int, k: int) -> int:
        return i + self.nx * (j + self.ny * k)

    def coords(self, idx: int) -> tuple[int, int, int]:
        i = idx % self.nx
        j = (idx // self.nx) % self.ny
        k = idx // (self.nx * self.ny)
        return i, j, k


def create_grid(nx, ny, nz, dx=1e-9, dy=1e-9, dz=1e-9) -> Grid:
    return Grid(nx, ny, nz, dx, dy, dz)


@dataclass
class VectorField:
    """Per-cell 3-vector on a grid, ``data.shape == (3, nz, ny, nx)``."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        want = (3,) + self.grid.shape
        if self.data.shape != want:
            raise ValueError(f"field data has shape {self.data.shape}, expected {want}")

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((3,) + grid.shape))

    @classmethod
    def uniform(cls, grid: Grid, vec) -> "VectorField":
        data = np.empty((3,) + grid.shape)
        data[:] = np.asarray(vec, dtype=float).reshape(3, 1, 1, 1)
        return cls(grid, data)

    @classmethod
    def from_flat(cls, grid: Grid, flat) -> "VectorField":
        """Build from an ``(N, 3)`` array in linear index order."""
        flat = np.asarray(flat, dtype=float)
        return cls(grid, flat.T.reshape((3,) + grid.shape))

    def flat(self) -> np.ndarray:
        """``(N, 3)`` view-copy in linear index order."""
        return self.data.reshape(3, -1).T.copy()

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.data.copy())

    def norms(self) -> np.ndarray:
        return np.sqrt(np.einsum("c...,c...->...", self.data, self.data))

    def __add__(self, other):
        return VectorField(self.grid, self.data + other.data)

    def __mul__(self, s):
        return VectorField(self.grid, self.data * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class MaterialParams:
    """Uniform material. ``H_k`` is stored, ``Ku`` is derived.

    ``gamma`` is in rad/(s T) and enters the LLG equation as ``gamma * mu0 * H``;
    the default corresponds to gamma*mu0 = 2.211e5 m/(A s).
    """

    Ms: float
    A_exch: float = 0.0
    alpha: float = 0.0
    aniso_axis: tuple = (1.0, 0.0, 0.0)
    H_k: float = 0.0
    gamma: float = GAMMA
    mu0: float = field(default=MU0, repr=False)

    def __post_init__(self):
        if not self.Ms > 0:
            raise ValueError(f"Ms must be positive, got {self.Ms}")
        if self.A_exch < 0:
            raise ValueError(f"exchange constant must be >= 0, got {self.A_exch}")
        if self.alpha < 0:
            raise ValueError(f"damping must be >= 0, got {self.alpha}")
        if self.H_k < 0:
            raise ValueError(f"anisotropy field must be >= 0, got {self.H_k}")
        axis = tuple(float(a) for a in self.aniso_axis)
        if abs(math.sqrt(sum(a * a for a in axis)) - 1.0) > 1e-12:
            raise ValueError(f"anisotropy axis must be a unit vector, got {axis}")
        object.__setattr__(self, "aniso_axis", axis)

    @property
    def Ku(self) -> float:
        return 0.5 * self.mu0 * self.Ms * self.H_k

    @classmethod
    def from_ku(cls, Ms, Ku, **kw):
        return cls(Ms=Ms, H_k=2.0 * Ku / (MU0 * Ms), **kw)

    def with_alpha(self, alpha: float) -> "MaterialParams":
        from dataclasses import replace

        return replace(self, alpha=alpha)


def average_magnetization(m: VectorField, Ms: float) -> np.ndarray:
    """Mean of each component in units of Ms, summed in a fixed order."""
    return m.data.reshape(3, -1).sum(axis=1) / (m.grid.n_cells * Ms)


def renormalize(m: VectorField, Ms: float) -> VectorField:
    norms = m.norms()
    bad = np.flatnonzero(norms.ravel() == 0.0)
    if bad.size:
        idx = int(bad[0])
        raise ValueError(f"cannot renormalize zero-magnitude cell {idx} {m.grid.coords(idx)}")
    return VectorField(m.grid, m.data * (Ms / norms))
