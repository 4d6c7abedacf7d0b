"""NumPy twins of the compiled kernels in ``_ckernels.pyx`` (same signatures)."""
from __future__ import annotations

import numpy as np


def fill_ops(ang: np.ndarray, n: int, full: bool) -> np.ndarray:
    ang = np.asarray(ang, dtype=float)
    if full:
        th = ang.reshape(n, 2, 2)[..., 0]
        ph = ang.reshape(n, 2, 2)[..., 1]
        c, s = np.cos(th), np.sin(th)
    else:
        ph = ang.reshape(n, 2)
        c, s = np.zeros_like(ph), np.ones_like(ph)
    b = np.empty((n, 2, 4), dtype=complex)
    b[..., 0] = c
    b[..., 1] = s * np.exp(1j * ph)
    b[..., 2] = s * np.exp(-1j * ph)
    b[..., 3] = -c
    return b


def correlations(v: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    cur = np.asarray(v).reshape(1, 4, -1)
    for j in range(n):
        # (P, 4, R) x (2, 4) -> (P, 2, R)
        cur = np.einsum("kq,pqr->pkr", b[j], cur).reshape(cur.shape[0] * 2, 4, -1) if j < n - 1 else np.einsum(
            "kq,pqr->pkr", b[j], cur
        )
    return cur.reshape(-1).real.copy()


def signed_value(v, ang, n, full, coeffs) -> float:
    return float(np.dot(coeffs, correlations(v, fill_ops(ang, n, full), n)))


def ascend(v, ang0, n, full, coeffs, tol, max_sweeps):
    ang = np.array(ang0, dtype=float, copy=True)
    best = abs(signed_value(v, ang, n, full, coeffs))
    sweep = 0
    while sweep < max_sweeps:
        sweep += 1
        prev, step = best, 0.0
        for i in range(ang.size):
            x = ang[i]
            f = []
            for probe in (0.0, 0.5 * np.pi, np.pi):
                ang[i] = probe
                f.append(signed_value(v, ang, n, full, coeffs))
            g = 0.5 * (f[0] + f[2])
            a = 0.5 * (f[0] - f[2])
            bb = f[1] - g
            amp = np.hypot(a, bb)
            new = abs(g) + amp
            if new > best + 1e-15 and amp > 0.0:
                ang[i] = np.arctan2(bb, a) + (np.pi if g < 0.0 else 0.0)
                step = max(step, abs(np.angle(np.exp(1j * (ang[i] - x)))))
                best = new
            else:
                ang[i] = x
        if best - prev <= 1e-14 * (1.0 + best) and step < tol:
            break
    return ang, best, sweep
