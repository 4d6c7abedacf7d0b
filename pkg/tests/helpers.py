import numpy as np

from belldiag.quantum import SZ, SX, SY, I2, DensityMatrix, KrausChannel


def random_density(rng, n, rank=None):
    d = 2**n
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_ket(rng, n):
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return v / np.linalg.norm(v)


def random_unitary(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(rng, d, k=3):
    """Random CPTP map from a Stiefel isometry."""
    v = random_unitary(rng, d * k)[:, :d]
    return KrausChannel([v[i * d : (i + 1) * d] for i in range(k)])


def random_axis(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def assert_density(m, tol=1e-10):
    assert np.max(np.abs(m - m.conj().T)) <= tol
    assert abs(np.trace(m) - 1) <= tol
    assert np.linalg.eigvalsh(m).min() >= -1e-9


def kron_all(ops):
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return out


def bell_state():
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return v
