# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""
from libc.math cimport sqrt, isfinite
from cython.parallel cimport prange
cimport openmp


def set_num_threads(int n):
    openmp.omp_set_num_threads(n)




def exchange(double[:, :, :, ::1] m, double[:, :, :, ::1] out,
             double cx, double cy, double cz):
    cdef Py_ssize_t nz = m.shape[1], ny = m.shape[2], nx = m.shape[3]
    cdef Py_ssize_t c, i, j, k
    cdef double center, acc
    for c in range(3):
        for k in prange(nz, nogil=True, schedule="static"):
            for j in range(ny):
                for i in range(nx):
                    center = m[c, k, j, i]
                    acc = 0.0
                    if i > 0:
                        acc = acc + cx * (m[c, k, j, i - 1] - center)
                    if i < nx - 1:
                        acc = acc + cx * (m[c, k, j, i + 1] - center)
                    if j > 0:
                        acc = acc + cy * (m[c, k, j - 1, i] - center)
                    if j < ny - 1:
                        acc = acc + cy * (m[c, k, j + 1, i] - center)
                    if k > 0:
                        acc = acc + cz * (m[c, k - 1, j, i] - center)
                    if k < nz - 1:
                        acc = acc + cz * (m[c, k + 1, j, i] - center)
                    out[c, k, j, i] = acc
    return out


def euler_update(double[:, :, :, ::1] m, double[:, :, :, ::1] h, double dt,
                 double gamma, double alpha, double Ms, double mu0):
    cdef Py_ssize_t nz = m.shape[1], ny = m.shape[2], nx = m.shape[3]
    cdef Py_ssize_t i, j, k
    cdef double gp = gamma / (1.0 + alpha * alpha)
    cdef double gd = alpha * gp / Ms
    cdef double mx, my, mz, bx, by, bz, px, py, pz, qx, qy, qz, nrm
    cdef Py_ssize_t bad = -1
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                mx = m[0, k, j, i]
                my = m[1, k, j, i]
                mz = m[2, k, j, i]
                bx = mu0 * h[0, k, j, i]
                by = mu0 * h[1, k, j, i]
                bz = mu0 * h[2, k, j, i]
                px = my * bz - mz * by
                py = mz * bx - mx * bz
                pz = mx * by - my * bx
                qx = my * pz - mz * py
                qy = mz * px - mx * pz
                qz = mx * py - my * px
                mx = mx + dt * (-gp * px - gd * qx)
                my = my + dt * (-gp * py - gd * qy)
                mz = mz + dt * (-gp * pz - gd * qz)
                nrm = Ms / sqrt(mx * mx + my * my + mz * mz)
                mx = mx * nrm
                my = my * nrm
                mz = mz * nrm
                if bad < 0 and not (isfinite(mx) and isfinite(my) and isfinite(mz)):
                    bad = i + nx * (j + ny * k)
                m[0, k, j, i] = mx
                m[1, k, j, i] = my
                m[2, k, j, i] = mz
    return bad


def spectral_apply(mhat, double[:, :, :, ::1] kern, out, Py_ssize_t y0, Py_ssize_t py):
    """Complex arrays are processed through float64 views (re, im interleaved)."""
    cdef double[:, :, :, ::1] a = mhat.view("f8")
    cdef double[:, :, :, ::1] o = out.view("f8")
    cdef Py_ssize_t pz = a.shape[1], wy = a.shape[2], kx = kern.shape[3]
    cdef Py_ssize_t i, j, k, r, kk, jj
    cdef double sy, sz, kxx, kxy, kxz, kyy, kyz, kzz, ax, ay, az
    for k in prange(pz, nogil=True, schedule="static"):
        kk = k
        sz = 1.0
        if pz - k < k:
            kk = pz - k
            sz = -1.0
        for j in range(wy):
            jj = y0 + j
            sy = 1.0
            if py - jj < jj:
                jj = py - jj
                sy = -1.0
            for i in range(kx):
                kxx = kern[0, kk, jj, i]
                kxy = sy * kern[1, kk, jj, i]
                kxz = sz * kern[2, kk, jj, i]
                kyy = kern[3, kk, jj, i]
                kyz = sy * sz * kern[4, kk, jj, i]
                kzz = kern[5, kk, jj, i]
                for r in range(2):
                    ax = a[0, k, j, 2 * i + r]
                    ay = a[1, k, j, 2 * i + r]
                    az = a[2, k, j, 2 * i + r]
                    o[0, k, j, 2 * i + r] = -(kxx * ax + kxy * ay + kxz * az)
                    o[1, k, j, 2 * i + r] = -(kxy * ax + kyy * ay + kyz * az)
                    o[2, k, j, 2 * i + r] = -(kxz * ax + kyz * ay + kzz * az)
    return out


def brute_force(double[:, :, :, ::1] m, double[:, :, :, ::1] kern, double[:, :, :, ::1] out):
    cdef Py_ssize_t nz = m.shape[1], ny = m.shape[2], nx = m.shape[3]
    cdef Py_ssize_t pz = kern.shape[1], py = kern.shape[2], px = kern.shape[3]
    cdef Py_ssize_t i, j, k, i2, j2, k2, di, dj, dk
    cdef double hx, hy, hz, sx, sy, sz
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                hx = 0.0
                hy = 0.0
                hz = 0.0
                for k2 in range(nz):
                    dk = (k - k2 + pz) % pz
                    for j2 in range(ny):
                        dj = (j - j2 + py) % py
                        for i2 in range(nx):
                            di = (i - i2 + px) % px
                            sx = m[0, k2, j2, i2]
                            sy = m[1, k2, j2, i2]
                            sz = m[2, k2, j2, i2]
                            hx = hx + kern[0, dk, dj, di] * sx + kern[1, dk, dj, di] * sy + kern[2, dk, dj, di] * sz
                            hy = hy + kern[1, dk, dj, di] * sx + kern[3, dk, dj, di] * sy + kern[4, dk, dj, di] * sz
                            hz = hz + kern[2, dk, dj, di] * sx + kern[4, dk, dj, di] * sy + kern[5, dk, dj, di] * sz
                out[0, k, j, i] = -hx
                out[1, k, j, i] = -hy
                out[2, k, j, i] = -hz
    return out
