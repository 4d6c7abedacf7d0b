import numpy as np
import pytest

from belldiag import kernels
from belldiag.wwzb import Restriction, SettingsTable, mabk_sign_function, sign_coefficients
from helpers import kron_all, random_density

BACKENDS = ["python"]
try:
    kernels.get_backend("cython")
    BACKENDS.append("cython")
except ImportError:
    pass


def brute_correlations(rho, settings):
    n = settings.n_qubits
    out = []
    for k in np.ndindex(*(2,) * n):
        m = kron_all([settings.observables[j][k[j]].operator for j in range(n)])
        out.append(np.trace(rho @ m).real)
    return np.array(out)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_correlations_match_brute_force(backend, n):
    rng = np.random.default_rng(n)
    impl = kernels.get_backend(backend)
    for full in (False, True):
        r = Restriction.FULLSPHERE if full else Restriction.EQUATORIAL
        rho = random_density(rng, n)
        ang = rng.uniform(0, 2 * np.pi, r.angles_per_qubit * n)
        s = SettingsTable.from_angles(ang, r)
        got = impl.correlations(kernels.interleave(rho), s.operator_stack(), n)
        assert np.allclose(got, brute_correlations(rho, s), atol=1e-12)
        ops = kernels.fill_ops(ang, n, full)
        assert np.allclose(ops, s.operator_stack(), atol=1e-14)


@pytest.mark.parametrize("backend", BACKENDS)
def test_ascend_never_decreases(backend):
    rng = np.random.default_rng(9)
    impl = kernels.get_backend(backend)
    coeffs = sign_coefficients(mabk_sign_function(3)).reshape(-1)
    for full in (False, True):
        v = kernels.interleave(random_density(rng, 3, rank=1))
        a0 = rng.uniform(0, 2 * np.pi, (4 if full else 2) * 3)
        start = abs(impl.signed_value(v, a0, 3, full, coeffs))
        ang, best, sweeps = impl.ascend(v, a0, 3, full, coeffs, 1e-7, 500)
        assert best >= start - 1e-12
        assert abs(impl.signed_value(v, np.asarray(ang), 3, full, coeffs)) == pytest.approx(best, abs=1e-10)
        assert 1 <= sweeps <= 500


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree():
    rng = np.random.default_rng(1)
    py, cy = (kernels.get_backend(b) for b in BACKENDS)
    coeffs = sign_coefficients(mabk_sign_function(4)).reshape(-1)
    v = kernels.interleave(random_density(rng, 4))
    a0 = rng.uniform(0, 2 * np.pi, 16)
    assert py.signed_value(v, a0, 4, True, coeffs) == pytest.approx(cy.signed_value(v, a0, 4, True, coeffs), abs=1e-12)
    a1, b1, s1 = py.ascend(v, a0, 4, True, coeffs, 1e-7, 50)
    a2, b2, s2 = cy.ascend(v, a0, 4, True, coeffs, 1e-7, 50)
    assert b1 == pytest.approx(b2, abs=1e-9)
    assert s1 == s2


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
