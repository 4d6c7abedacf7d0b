# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for Bell-expression evaluation.

The state enters as the interleaved vector ``v[p_1 ... p_N]`` with
``p_j = 2 * x_j + y_j`` for the row/column bits of qubit j, and each local
observable as ``b[j, k, p] = A_{j,k}[y, x]``; the correlation for setting
string k is then ``sum_p v[p] prod_j b[j, k_j, p_j]``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, atan2, sqrt, fabs, M_PI

cnp.import_array()


cdef void _fill_ops(const double[::1] ang, int n, bint full, double complex[:, :, ::1] b) noexcept nogil:
    cdef int j, k
    cdef double th, ph, c, s
    for j in range(n):
        for k in range(2):
            if full:
                th = ang[4 * j + 2 * k]
                ph = ang[4 * j + 2 * k + 1]
                c = cos(th)
                s = sin(th)
            else:
                ph = ang[2 * j + k]
                c = 0.0
                s = 1.0
            b[j, k, 0] = c
            b[j, k, 1] = s * (cos(ph) + 1j * sin(ph))
            b[j, k, 2] = s * (cos(ph) - 1j * sin(ph))
            b[j, k, 3] = -c


cdef void _contract(const double complex[::1] v, double complex[:, :, ::1] b, int n,
                    double complex[::1] buf1, double complex[::1] buf2) noexcept nogil:
    """Leaves the 2**n correlations (complex) in buf1[:2**n]."""
    cdef Py_ssize_t i, P, R, pi, k, q, r, total
    cdef int j
    cdef double complex acc
    cdef double complex* src
    cdef double complex* dst
    total = 1
    for i in range(n):
        total *= 4
    for i in range(total):
        buf1[i] = v[i]
    P = 1
    R = total // 4
    for j in range(n):
        if j % 2 == 0:
            src = &buf1[0]
            dst = &buf2[0]
        else:
            src = &buf2[0]
            dst = &buf1[0]
        for pi in range(P):
            for k in range(2):
                for r in range(R):
                    acc = 0
                    for q in range(4):
                        acc = acc + b[j, k, q] * src[(pi * 4 + q) * R + r]
                    dst[(pi * 2 + k) * R + r] = acc
        P *= 2
        R //= 4
    if n % 2 == 1:
        for i in range(P):
            buf1[i] = buf2[i]


cdef double _signed(const double complex[::1] v, const double[::1] ang, int n, bint full,
                    const double[::1] coeffs, double complex[:, :, ::1] b,
                    double complex[::1] buf1, double complex[::1] buf2) noexcept nogil:
    cdef Py_ssize_t k, m
    cdef double acc = 0.0
    _fill_ops(ang, n, full, b)
    _contract(v, b, n, buf1, buf2)
    m = 1 << n
    for k in range(m):
        acc += coeffs[k] * buf1[k].real
    return acc


def correlations(const double complex[::1] v, double complex[:, :, ::1] b, int n):
    cdef Py_ssize_t m = 1 << n
    buf1 = np.empty(1 << (2 * n), dtype=complex)
    buf2 = np.empty(1 << (2 * n), dtype=complex)
    cdef double complex[::1] b1 = buf1
    cdef double complex[::1] b2 = buf2
    _contract(v, b, n, b1, b2)
    return buf1[:m].real.copy()


def signed_value(const double complex[::1] v, const double[::1] ang, int n, bint full,
                 const double[::1] coeffs):
    b = np.empty((n, 2, 4), dtype=complex)
    buf1 = np.empty(1 << (2 * n), dtype=complex)
    buf2 = np.empty(1 << (2 * n), dtype=complex)
    return _signed(v, ang, n, full, coeffs, b, buf1, buf2)


def ascend(const double complex[::1] v, double[::1] ang0, int n, bint full,
           const double[::1] coeffs, double tol, int max_sweeps):
    """Coordinate ascent of |signed value| with exact sinusoidal line maximisation.

    Along any single angle the signed value is a*cos(x) + b*sin(x) + g, so three
    evaluations determine the coordinate-wise maximiser of its modulus.
    """
    cdef Py_ssize_t d = ang0.shape[0]
    cdef Py_ssize_t i
    cdef int sweep = 0
    cdef double dx, x, f0, f1, f2, g, a, bb, amp, best, new, step, prev
    out = np.array(ang0, dtype=float, copy=True)
    cdef double[::1] ang = out
    b = np.empty((n, 2, 4), dtype=complex)
    buf1 = np.empty(1 << (2 * n), dtype=complex)
    buf2 = np.empty(1 << (2 * n), dtype=complex)
    cdef double complex[:, :, ::1] bv = b
    cdef double complex[::1] b1 = buf1
    cdef double complex[::1] b2 = buf2
    best = fabs(_signed(v, ang, n, full, coeffs, bv, b1, b2))
    with nogil:
        while sweep < max_sweeps:
            sweep += 1
            prev = best
            step = 0.0
            for i in range(d):
                x = ang[i]
                ang[i] = 0.0
                f0 = _signed(v, ang, n, full, coeffs, bv, b1, b2)
                ang[i] = 0.5 * M_PI
                f1 = _signed(v, ang, n, full, coeffs, bv, b1, b2)
                ang[i] = M_PI
                f2 = _signed(v, ang, n, full, coeffs, bv, b1, b2)
                g = 0.5 * (f0 + f2)
                a = 0.5 * (f0 - f2)
                bb = f1 - g
                amp = sqrt(a * a + bb * bb)
                new = fabs(g) + amp
                if new > best + 1e-15 and amp > 0.0:
                    ang[i] = atan2(bb, a)
                    if g < 0.0:
                        ang[i] = ang[i] + M_PI
                    dx = fabs(atan2(sin(ang[i] - x), cos(ang[i] - x)))
                    if dx > step:
                        step = dx
                    best = new
                else:
                    ang[i] = x
            if best - prev <= 1e-14 * (1.0 + best) and step < tol:
                break
    return out, best, sweep
