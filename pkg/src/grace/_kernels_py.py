"""Pure numpy versions of the hot kernels.

Same signatures and array conventions as the compiled ``_kernels`` module:
fields are float64 ``(3, nz, ny, nx)``, padded spectra are ``(3, pz, py, kx)``.
"""
import numpy as np

# (row, col) -> slot in the six stored tensor components xx, xy, xz, yy, yz, zz
_SLOT = ((0, 1, 2), (1, 3, 4), (2, 4, 5))


def set_num_threads(n):
    pass


def exchange(m, out, cx, cy, cz):
    """Six-neighbour Laplacian with mirror boundaries: out = sum_axis c*(m+ + m- - 2m)."""
    out[...] = 0.0
    for axis, c in ((3, cx), (2, cy), (1, cz)):
        n = m.shape[axis]
        if n == 1 or c == 0.0:
            continue
        d = np.diff(m, axis=axis) * c
        lo = [slice(None)] * 4
        hi = [slice(None)] * 4
        lo[axis] = slice(0, n - 1)
        hi[axis] = slice(1, n)
        out[tuple(lo)] += d
        out[tuple(hi)] -= d
    return out


def euler_update(m, h, dt, gamma, alpha, Ms, mu0):
    """In-place forward Euler LLG step followed by renormalization to Ms.

    Returns -1, or the linear index of the first cell that became non-finite.
    """
    gp = gamma / (1.0 + alpha * alpha)
    b = mu0 * h
    # a blown-up cell is reported below, not warned about
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        mxb = np.cross(m, b, axis=0)
        mxmxb = np.cross(m, mxb, axis=0)
        m += dt * (-gp * mxb - (alpha * gp / Ms) * mxmxb)
        norm = np.sqrt(np.einsum("c...,c...->...", m, m))
        m *= Ms / norm
    bad = ~np.isfinite(m).all(axis=0)
    if bad.any():
        return int(np.flatnonzero(bad.ravel())[0])
    return -1


def _mirror(n, p):
    """Stored index and mirror sign for spectral indices 0..n-1 of a length-p axis."""
    k = np.arange(n)
    return np.minimum(k, p - k), np.where(p - k < k, -1.0, 1.0)


def spectral_apply(mhat, kern, out, y0, py):
    """out_a = -sum_b N_ab * mhat_b on a tile of ky rows starting at ``y0``.

    ``kern`` holds the quarter spectrum (6, pz//2+1, py//2+1, kx); rows past
    the half are mirrored, odd components in an axis flip sign there.
    """
    _, pz, wy, _ = mhat.shape
    kk, sz = _mirror(pz, pz)
    jj, sy = _mirror(y0 + wy, py)
    jj, sy = jj[y0:], sy[y0:]
    k = kern[:, kk][:, :, jj]
    sz, sy = sz[:, None, None], sy[None, :, None]
    k[1] *= sy
    k[2] *= sz
    k[4] *= sy * sz
    for a in range(3):
        s = _SLOT[a]
        np.multiply(k[s[0]], mhat[0], out=out[a])
        out[a] += k[s[1]] * mhat[1]
        out[a] += k[s[2]] * mhat[2]
        np.negative(out[a], out=out[a])
    return out


def brute_force(m, kern, out):
    """Direct O(N^2) summation against the circulant tensor arrays."""
    _, nz, ny, nx = m.shape
    _, pz, py, px = kern.shape
    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    k, j, i = k.ravel(), j.ravel(), i.ravel()
    src = m.reshape(3, -1)
    res = np.zeros((3, k.size))
    for obs in range(k.size):
        dk = (k[obs] - k) % pz
        dj = (j[obs] - j) % py
        di = (i[obs] - i) % px
        n = kern[:, dk, dj, di]
        for a in range(3):
            s = _SLOT[a]
            res[a, obs] = -(n[s[0]] @ src[0] + n[s[1]] @ src[1] + n[s[2]] @ src[2])
    out[...] = res.reshape(out.shape)
    return out
