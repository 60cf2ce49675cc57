"""Demagnetization tensor assembly and the zero-padded FFT convolution.

The tensor uses Newell's cell-averaged prism formulas for nearby cells and
the point-dipole form beyond ``cutoff`` cell diagonals.  Components are laid
out in circulant order on the padded domain so that a circular convolution
of the zero-padded magnetization equals the open-boundary convolution on the
physical grid.
"""
from __future__ import annotations

import logging
import math
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import kernels
from .mesh import Grid, VectorField

log = logging.getLogger(__name__)

COMPONENTS = ("xx", "xy", "xz", "yy", "yz", "zz")
DEFAULT_CUTOFF = 30.0
# Working-set targets for the blocked convolution: a group of z planes
# through the x and y transforms and a tile of ky rows through z.
_SLAB_BYTES = 1 << 20
_TILE_BYTES = 1 << 19

# Parity of each component along (x, y, z): +1 even, -1 odd.
PARITY = {
    "xx": (1, 1, 1), "yy": (1, 1, 1), "zz": (1, 1, 1),
    "xy": (-1, -1, 1), "xz": (-1, 1, -1), "yz": (1, -1, -1),
}


def _safe_div(a, b):
    out = np.zeros(np.broadcast(a, b).shape, dtype=np.result_type(a, b))
    np.divide(a, b, out=out, where=b != 0)
    return out


def newell_f(x, y, z):
    """Newell's f, even in every argument."""
    x, y, z = np.abs(x), np.abs(y), np.abs(z)
    x2, y2, z2 = x * x, y * y, z * z
    R = np.sqrt(x2 + y2 + z2)
    res = (2.0 * x2 - y2 - z2) * R / 6.0
    res += 0.5 * y * (z2 - x2) * np.arcsinh(_safe_div(y, np.sqrt(x2 + z2)))
    res += 0.5 * z * (y2 - x2) * np.arcsinh(_safe_div(z, np.sqrt(x2 + y2)))
    res -= x * y * z * np.arctan(_safe_div(y * z, x * R))
    return res


def newell_g(x, y, z):
    """Newell's g, odd in x and y, even in z."""
    z = np.abs(z)
    x2, y2, z2 = x * x, y * y, z * z
    R = np.sqrt(x2 + y2 + z2)
    res = -x * y * R / 3.0
    res += x * y * z * np.arcsinh(_safe_div(z, np.sqrt(x2 + y2)))
    res += y / 6.0 * (3.0 * z2 - y2) * np.arcsinh(_safe_div(x, np.sqrt(y2 + z2)))
    res += x / 6.0 * (3.0 * z2 - x2) * np.arcsinh(_safe_div(y, np.sqrt(x2 + z2)))
    res -= z * z2 / 6.0 * np.arctan(_safe_div(x * y, z * R))
    res -= 0.5 * z * y2 * np.arctan(_safe_div(x * z, y * R))
    res -= 0.5 * z * x2 * np.arctan(_safe_div(y * z, x * R))
    return res


def _second_difference(values, axis, parity):
    """2 F[i] - F[i-1] - F[i+1] along ``axis`` for i = 0..n-1, given F on 0..n.

    F at -1 is taken from F[1] with the function's parity on that axis.
    """
    n = values.shape[axis] - 1
    center = np.take(values, np.arange(n), axis=axis)
    right = np.take(values, np.arange(1, n + 1), axis=axis)
    left = np.take(values, np.abs(np.arange(n) - 1), axis=axis)
    if parity < 0:
        sl = [slice(None)] * values.ndim
        sl[axis] = 0
        left[tuple(sl)] *= -1.0
    return 2.0 * center - left - right


def newell_component(name: str, counts, cell):
    """Newell tensor component at non-negative cell offsets.

    ``counts`` = (nx, ny, nz) offsets 0..n-1 per axis; returns an array indexed
    [iz, iy, ix].  Sign convention: H = -N M.
    """
    nx, ny, nz = counts
    # work in units of the largest cell edge and extended precision: the
    # 27-point differences cancel ~r**6 in relative terms
    scale = max(cell)
    dx, dy, dz = (np.longdouble(c) / np.longdouble(scale) for c in cell)
    X = np.arange(nx + 1, dtype=np.longdouble) * dx
    Y = np.arange(ny + 1, dtype=np.longdouble) * dy
    Z = np.arange(nz + 1, dtype=np.longdouble) * dz
    Zg, Yg, Xg = np.meshgrid(Z, Y, X, indexing="ij")
    if name == "xx":
        F = newell_f(Xg, Yg, Zg)
    elif name == "yy":
        F = newell_f(Yg, Xg, Zg)
    elif name == "zz":
        F = newell_f(Zg, Yg, Xg)
    elif name == "xy":
        F = newell_g(Xg, Yg, Zg)
    elif name == "xz":
        F = newell_g(Xg, Zg, Yg)
    elif name == "yz":
        F = newell_g(Yg, Zg, Xg)
    else:
        raise ValueError(f"unknown tensor component {name!r}")
    px, py, pz = PARITY[name]
    F = _second_difference(F, 2, px)
    F = _second_difference(F, 1, py)
    F = _second_difference(F, 0, pz)
    return (F / (4 * np.pi * dx * dy * dz).astype(np.longdouble)).astype(np.float64)


def dipole_component(name: str, X, Y, Z, volume):
    """Point-dipole far-field form of the tensor at displacement (X, Y, Z)."""
    r2 = X * X + Y * Y + Z * Z
    r = np.sqrt(r2)
    r5 = r2 * r2 * r
    comp = {"x": X, "y": Y, "z": Z}
    a, b = comp[name[0]], comp[name[1]]
    num = 3.0 * a * b
    if name[0] == name[1]:
        num = num - r2
    return -volume / (4.0 * math.pi) * num / r5


@dataclass
class DemagKernel:
    grid: Grid
    spatial: np.ndarray   # (6, pz, py, px) circulant layout
    # (6, pz//2+1, py//2+1, px//2+1).  Every component has definite parity,
    # so its spectrum is real and mirrors in ky and kz with the same parity.
    spectral: np.ndarray
    cutoff: float = DEFAULT_CUTOFF
    # spectral work buffers reused across calls; one per concurrent caller
    _pool: list = field(default_factory=list, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False,
                                  compare=False)

    def _acquire(self) -> np.ndarray:
        with self._lock:
            if self._pool:
                return self._pool.pop()
        pz, py, px = self.grid.padded_shape
        return np.empty((3, self.grid.nz, py, px // 2 + 1), dtype=np.complex128)

    def _release(self, buf: np.ndarray):
        with self._lock:
            self._pool.append(buf)

    def component(self, name: str) -> np.ndarray:
        return self.spatial[COMPONENTS.index(name)]

    def at(self, name: str, di: int, dj: int, dk: int) -> float:
        """Tensor component at cell displacement (di, dj, dk)."""
        pz, py, px = self.grid.padded_shape
        return float(self.component(name)[dk % pz, dj % py, di % px])


def _fill_circulant(quadrant, parity, padded):
    """Expand non-negative-offset values into the circulant padded layout."""
    pz, py, px = padded
    nz, ny, nx = quadrant.shape
    out = np.zeros(padded)
    for sz in ((1,) if nz == 1 and pz == 1 else (1, -1)):
        for sy in ((1,) if py == 1 else (1, -1)):
            for sx in ((1,) if px == 1 else (1, -1)):
                sign = (parity[0] if sx < 0 else 1) * (parity[1] if sy < 0 else 1) * (parity[2] if sz < 0 else 1)
                iz = (sz * np.arange(nz)) % pz
                iy = (sy * np.arange(ny)) % py
                ix = (sx * np.arange(nx)) % px
                out[np.ix_(iz, iy, ix)] = sign * quadrant
    return out


def _spectral(spatial, padded):
    # forward transform of real data with definite parity is real up to roundoff
    pz, py, _ = padded
    full = sfft.rfftn(spatial, s=padded, axes=(1, 2, 3)).real
    return np.ascontiguousarray(full[:, : pz // 2 + 1, : py // 2 + 1])


def full_spectrum(kernel: DemagKernel) -> np.ndarray:
    """Expand the stored quarter spectrum to (6, pz, py, px//2+1)."""
    pz, py, _ = kernel.grid.padded_shape
    k = np.arange(pz)
    j = np.arange(py)
    kk, jj = np.minimum(k, pz - k), np.minimum(j, py - j)
    sz = np.where(pz - k < k, -1.0, 1.0)[:, None, None]
    sy = np.where(py - j < j, -1.0, 1.0)[None, :, None]
    out = kernel.spectral[:, kk][:, :, jj].copy()
    for c, name in enumerate(COMPONENTS):
        _, py_par, pz_par = PARITY[name]
        if py_par < 0:
            out[c] *= sy
        if pz_par < 0:
            out[c] *= sz
    return out


def build_demag_tensor(grid: Grid, cutoff: float = DEFAULT_CUTOFF, cache_dir=None) -> DemagKernel:
    """Assemble the six tensor components on the padded grid and their spectra.

    ``cutoff`` is in units of the cell diagonal; offsets farther than that use
    the dipole form.  ``cache_dir`` enables the on-disk tensor cache.
    """
    padded = grid.padded_shape
    need = 6 * np.prod(padded) * 8 * 2
    if cache_dir is not None:
        cached = load_cached_tensor(grid, cutoff, cache_dir)
        if cached is not None:
            return DemagKernel(grid, cached, _spectral(cached, padded), cutoff)
    try:
        spatial = np.empty((6,) + padded)
    except MemoryError as exc:
        raise MemoryError(f"demag tensor needs about {need / 2**20:.0f} MiB") from exc

    counts = (grid.nx, grid.ny, grid.nz)
    k, j, i = np.meshgrid(np.arange(grid.nz), np.arange(grid.ny), np.arange(grid.nx), indexing="ij")
    X, Y, Z = i * grid.dx, j * grid.dy, k * grid.dz
    r = np.sqrt(X * X + Y * Y + Z * Z)
    diag = math.sqrt(grid.dx**2 + grid.dy**2 + grid.dz**2)
    far = r > cutoff * diag
    for c, name in enumerate(COMPONENTS):
        quad = newell_component(name, counts, grid.cell)
        if far.any():
            quad[far] = dipole_component(name, X[far], Y[far], Z[far], grid.cell_volume)
        spatial[c] = _fill_circulant(quad, PARITY[name], padded)
    if cache_dir is not None:
        save_cached_tensor(grid, cutoff, spatial, cache_dir)
    return DemagKernel(grid, spatial, _spectral(spatial, padded), cutoff)


def _check_grid(m: VectorField, kernel: DemagKernel):
    if m.grid != kernel.grid:
        raise ValueError(f"magnetization grid {m.grid} does not match kernel grid {kernel.grid}")


def demag_field(m: VectorField, kernel: DemagKernel, workers: int | None = None,
                out: np.ndarray | None = None) -> VectorField:
    """H_demag by zero-padded FFT convolution.

    The x and y transforms run plane by plane in z; the z transforms and the
    spectral product run on tiles of ky rows.  Both are sized to stay cache
    resident so the full padded spectrum is swept only a few times.  Padding
    is applied one axis at a time so all-zero lines are never transformed.
    ``out`` (shape of ``m.data``) receives the result if given.
    """
    _check_grid(m, kernel)
    grid = m.grid
    pz, py, px = grid.padded_shape
    nz, ny, nx = grid.shape
    kx = px // 2 + 1
    if out is None:
        out = np.empty_like(m.data)
    buf = kernel._acquire()
    try:
        gz = max(1, _SLAB_BYTES // (3 * py * kx * 16))
        for z0 in range(0, nz, gz):
            sz = slice(z0, min(nz, z0 + gz))
            a = sfft.rfft(m.data[:, sz], n=px, axis=3, workers=workers)
            buf[:, sz] = _forward(a, py, 2, workers)
        wy = max(1, _TILE_BYTES // (3 * pz * kx * 16))
        for y0 in range(0, py, wy):
            sy = slice(y0, min(py, y0 + wy))
            c = np.ascontiguousarray(_forward(buf[:, :, sy], pz, 1, workers))
            h = kernels.spectral_apply(c, kernel.spectral, np.empty_like(c), y0, py)
            buf[:, :, sy] = _inverse(h, nz, 1, workers)
        for z0 in range(0, nz, gz):
            sz = slice(z0, min(nz, z0 + gz))
            out[:, sz] = sfft.irfft(_inverse(buf[:, sz], ny, 2, workers), n=px, axis=3,
                                    workers=workers)[..., :nx]
    finally:
        kernel._release(buf)
    return VectorField(grid, out)


# Axes padded to at most this length are transformed by a dense DFT matrix;
# strided short FFTs are slower than one matrix product over all lines.
_DENSE_DFT_MAX = 16


def _dft_matrix(n_out, n_in, p, sign):
    k = np.arange(n_out)[:, None]
    x = np.arange(n_in)[None, :]
    return np.exp(sign * 2j * np.pi * k * x / p)


def _forward(a, p, axis, workers):
    """Pruned forward DFT along ``axis``: input has n <= p entries, rest is zero padding."""
    n = a.shape[axis]
    if p == 1:
        return a
    if p > _DENSE_DFT_MAX:
        return sfft.fft(a, n=p, axis=axis, workers=workers, overwrite_x=True)
    return _dense(a, _dft_matrix(p, n, p, -1.0), axis)


def _inverse(a, n, axis, workers):
    """Inverse DFT along ``axis`` keeping only the first ``n`` outputs."""
    p = a.shape[axis]
    if p == 1:
        return a
    if p > _DENSE_DFT_MAX:
        out = sfft.ifft(a, axis=axis, workers=workers, overwrite_x=True)
        return np.take(out, np.arange(n), axis=axis)
    return _dense(a, _dft_matrix(n, p, p, 1.0) / p, axis)


def _dense(a, w, axis):
    a = np.ascontiguousarray(a)
    pre = int(np.prod(a.shape[:axis]))
    post = int(np.prod(a.shape[axis + 1:]))
    out = np.matmul(w, a.reshape(pre, a.shape[axis], post))
    return out.reshape(a.shape[:axis] + (w.shape[0],) + a.shape[axis + 1:])


def brute_force_demag(m: VectorField, kernel: DemagKernel) -> VectorField:
    """Direct double sum over observer and source cells; the testing oracle."""
    _check_grid(m, kernel)
    out = np.empty_like(m.data)
    kernels.brute_force(m.data, kernel.spatial, out)
    return VectorField(m.grid, out)


# On-disk cache.  Layout, little endian:
#   magic b"GRDEMAG1", u32 version, u32 nx, ny, nz, f64 dx, dy, dz, cutoff,
#   then 6 * pz*py*px f64 in component order xx xy xz yy yz zz, C order.
_MAGIC = b"GRDEMAG1"
_HEADER = struct.Struct("<8sI3I4d")


def cache_path(grid: Grid, cutoff: float, cache_dir) -> Path:
    key = f"{grid.nx}x{grid.ny}x{grid.nz}_{grid.dx:.6e}_{grid.dy:.6e}_{grid.dz:.6e}_{cutoff:g}"
    return Path(cache_dir) / f"demag_{key}.bin"


def save_cached_tensor(grid: Grid, cutoff: float, spatial: np.ndarray, cache_dir) -> Path:
    path = cache_path(grid, cutoff, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, grid.nx, grid.ny, grid.nz, grid.dx, grid.dy, grid.dz, cutoff))
        fh.write(np.ascontiguousarray(spatial, dtype="<f8").tobytes())
    return path


def load_cached_tensor(grid: Grid, cutoff: float, cache_dir):
    """Return cached spatial arrays or None on any miss or mismatch."""
    path = cache_path(grid, cutoff, cache_dir)
    try:
        raw = path.read_bytes()
        magic, version, nx, ny, nz, dx, dy, dz, cut = _HEADER.unpack_from(raw)
    except (OSError, struct.error):
        return None
    if magic != _MAGIC or version != 1 or (nx, ny, nz, dx, dy, dz, cut) != (
        grid.nx, grid.ny, grid.nz, grid.dx, grid.dy, grid.dz, cutoff
    ):
        log.debug("demag cache header mismatch in %s", path)
        return None
    shape = (6,) + grid.padded_shape
    body = raw[_HEADER.size:]
    if len(body) != 8 * int(np.prod(shape)):
        return None
    return np.frombuffer(body, dtype="<f8").reshape(shape).astype(np.float64)
