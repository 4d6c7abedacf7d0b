import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from belldiag.network import Topology, build_hyperentangled_cluster, ideal_cluster
from belldiag.quantum import BlochObservable, DensityMatrix, DimensionError, Ket
from belldiag.wwzb import (
    CorrelationTensor,
    Restriction,
    SearchConfig,
    SettingsTable,
    SignFunction,
    WwzbValue,
    bell_value,
    correlation_tensor,
    lhv_max,
    mabk_sign_function,
    maximize_settings,
    optimal_sign_function,
    walsh_hadamard,
    wwzb_lhs,
)
from helpers import bell_state, kron_all, random_density

ROOT2 = np.sqrt(2)


def literal_lhs(E, S):
    """Double sum over s and k exactly as the inequality is written."""
    n = E.ndim
    total = 0.0
    for s in itertools.product((1, -1), repeat=n):
        inner = 0.0
        for k in itertools.product((1, 2), repeat=n):
            inner += np.prod([sj ** (kj - 1) for sj, kj in zip(s, k)]) * E[tuple(kj - 1 for kj in k)]
        total += S[tuple(0 if sj == 1 else 1 for sj in s)] * inner
    return abs(total)


def chsh_settings():
    x, z = BlochObservable.pauli("X"), BlochObservable.pauli("Z")
    d1 = BlochObservable(np.array([1, 0, -1]) / ROOT2)
    d2 = BlochObservable(np.array([1, 0, 1]) / ROOT2)
    return SettingsTable(((z, x), (d1, d2)))


def test_correlation_tensor_examples():
    rng = np.random.default_rng(0)
    s = SettingsTable.from_angles(rng.uniform(0, 6, 8), Restriction.FULLSPHERE)
    assert np.allclose(correlation_tensor(DensityMatrix.maximally_mixed(2), s).values, 0)
    z = BlochObservable.pauli("Z")
    bell = Ket(bell_state()).density()
    assert np.allclose(correlation_tensor(bell, SettingsTable(((z, z), (z, z)))).values, 1)
    c4 = ideal_cluster(Topology.linear_chain(4)).density()
    s4 = SettingsTable.from_angles([0, np.pi / 2, np.pi / 4, -np.pi / 4] * 2, Restriction.EQUATORIAL)
    E = correlation_tensor(c4, s4)
    for k in itertools.product((1, 2), repeat=4):
        m = kron_all([s4.observables[j][k[j] - 1].operator for j in range(4)])
        assert E[k] == pytest.approx(np.trace(c4.matrix @ m).real, abs=1e-12)
    with pytest.raises(DimensionError):
        correlation_tensor(bell, s4)


def test_value_type_validation():
    with pytest.raises(ValueError):
        CorrelationTensor(np.full(4, 1.5))
    with pytest.raises(DimensionError):
        CorrelationTensor(np.zeros(3))
    with pytest.raises(DimensionError):
        SignFunction(np.ones(6))
    with pytest.raises(ValueError):
        SettingsTable(((BlochObservable.pauli("X"),),))
    with pytest.raises(DimensionError):
        SettingsTable.from_angles([0.1, 0.2, 0.3], Restriction.EQUATORIAL)
    with pytest.raises(ValueError):
        SearchConfig(starts=0)
    assert WwzbValue(17.0, 4).classical_bound == 16 and WwzbValue(17.0, 4).violates


def test_settings_axes_roundtrip():
    rng = np.random.default_rng(12)
    s = SettingsTable.from_angles(rng.uniform(0, 6, 12), Restriction.FULLSPHERE)
    back = SettingsTable.from_axes(s.to_axes())
    assert np.allclose(back.operator_stack(), s.operator_stack(), atol=1e-11)


def test_wwzb_lhs_examples():
    S = mabk_sign_function(2)
    assert wwzb_lhs(CorrelationTensor(np.zeros(4)), S).value == 0
    bell = Ket(bell_state()).density()
    assert bell_value(bell, S, chsh_settings()).value == pytest.approx(4 * ROOT2, abs=1e-12)
    rng = np.random.default_rng(1)
    for n in (2, 3, 4):
        E = rng.uniform(-1, 1, (2,) * n)
        ones = SignFunction(np.ones((2,) * n))
        assert wwzb_lhs(CorrelationTensor(E), ones).value == pytest.approx(literal_lhs(E, ones.values), abs=1e-12)
        Sm = mabk_sign_function(n)
        assert wwzb_lhs(CorrelationTensor(E), Sm).value == pytest.approx(literal_lhs(E, Sm.values), abs=1e-12)
    with pytest.raises(DimensionError):
        wwzb_lhs(CorrelationTensor(np.zeros(8)), S)


def test_mabk_sign_function_values():
    S2 = mabk_sign_function(2)
    assert S2((1, 1)) == pytest.approx(1.0)
    for n in (2, 3, 4, 5):
        S = mabk_sign_function(n)
        assert S.is_dichotomic
        for s in itertools.product((1, -1), repeat=n):
            assert S(s) == pytest.approx(ROOT2 * np.cos(np.pi / 4 * (sum(s) - n - 1)), abs=1e-12)
    # N=4 enumeration: six +1 entries, ten -1 entries
    v = mabk_sign_function(4).values
    assert (np.sum(v > 0), np.sum(v < 0)) == (6, 10)
    with pytest.raises(DimensionError):
        mabk_sign_function(1)


def test_mabk_two_party_is_chsh():
    rng = np.random.default_rng(2)
    S = mabk_sign_function(2)
    for _ in range(200):
        E = rng.uniform(-1, 1, (2, 2))
        got = wwzb_lhs(CorrelationTensor(E), S).value
        assert got == pytest.approx(2 * abs(-E[0, 0] + E[0, 1] + E[1, 0] + E[1, 1]), abs=1e-10)


def test_lhv_max_examples():
    assert lhv_max(CorrelationTensor(np.zeros(8))).value == 0
    for n in (2, 3, 4):
        assert lhv_max(CorrelationTensor(np.ones(2**n))).value == pytest.approx(2**n)
    bell = Ket(bell_state()).density()
    assert lhv_max(correlation_tensor(bell, chsh_settings())).value == pytest.approx(4 * ROOT2)


def test_lhv_max_dominates_every_sign_function():
    rng = np.random.default_rng(3)
    for n in (2, 3):
        E = CorrelationTensor(rng.uniform(-1, 1, 2**n))
        top = lhv_max(E).value
        for _ in range(500):
            S = SignFunction(rng.choice([-1.0, 1.0], (2,) * n))
            assert wwzb_lhs(E, S).value <= top + 1e-10
        assert wwzb_lhs(E, optimal_sign_function(E)).value == pytest.approx(top, abs=1e-12)


def test_lhv_max_equals_brute_force_two_party():
    rng = np.random.default_rng(4)
    for _ in range(50):
        E = CorrelationTensor(rng.uniform(-1, 1, 4))
        brute = max(wwzb_lhs(E, SignFunction(np.array(s))).value for s in itertools.product((1.0, -1.0), repeat=4))
        assert lhv_max(E).value == brute


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_walsh_hadamard_involution(values):
    a = np.array(values).reshape(2, 2, 2)
    assert np.allclose(walsh_hadamard(walsh_hadamard(a)) / 8, a, atol=1e-12)


@pytest.mark.parametrize("restriction", list(Restriction))
def test_maximize_bell_state(restriction):
    bell = Ket(bell_state()).density()
    _, val = maximize_settings(bell, mabk_sign_function(2), restriction)
    assert val.value == pytest.approx(4 * ROOT2, abs=1e-6)


def test_maximize_mixed_state_is_zero():
    _, val = maximize_settings(DensityMatrix.maximally_mixed(3), mabk_sign_function(3), Restriction.FULLSPHERE)
    assert val.value == pytest.approx(0.0, abs=1e-8)


def test_maximize_four_qubit_cluster():
    S = mabk_sign_function(4)
    physical = build_hyperentangled_cluster().density()
    _, v = maximize_settings(physical, S, Restriction.EQUATORIAL)
    assert v.value == pytest.approx(16 * ROOT2, abs=1e-4)
    canonical = ideal_cluster(Topology.linear_chain(4)).density()
    _, v = maximize_settings(canonical, S, Restriction.FULLSPHERE)
    assert v.value == pytest.approx(16 * ROOT2, abs=1e-4)
    # the CZ-chain frame has no equatorial optimum at 16*sqrt(2)
    _, v = maximize_settings(canonical, S, Restriction.EQUATORIAL)
    assert v.value == pytest.approx(16.0, abs=1e-4)


def test_maximize_returns_settings_that_reach_value():
    rng = np.random.default_rng(6)
    rho = DensityMatrix(random_density(rng, 3, rank=2))
    S = mabk_sign_function(3)
    s, v = maximize_settings(rho, S, Restriction.FULLSPHERE, SearchConfig(starts=8))
    assert bell_value(rho, S, s).value == pytest.approx(v.value, abs=1e-9)
    s2, v2 = maximize_settings(rho, S, Restriction.FULLSPHERE, SearchConfig(starts=8))
    assert v2.value == v.value and np.array_equal(s2.operator_stack(), s.operator_stack())


def test_maximize_invariant_under_relabeling():
    rng = np.random.default_rng(7)
    S = mabk_sign_function(3)
    for _ in range(3):
        rho = random_density(rng, 3, rank=1)
        perm = list(rng.permutation(3))
        t = rho.reshape((2,) * 6).transpose(perm + [p + 3 for p in perm]).reshape(8, 8)
        _, a = maximize_settings(DensityMatrix(rho), S, Restriction.FULLSPHERE)
        _, b = maximize_settings(DensityMatrix(t), S, Restriction.FULLSPHERE)
        assert a.value == pytest.approx(b.value, abs=1e-6)


def test_two_party_maximum_against_grid():
    # 721-point grid on qubit 1's two angles; qubit 2's optimum is closed form
    rng = np.random.default_rng(10)
    rho = random_density(rng, 2, rank=2)
    paulis = [BlochObservable.pauli(a).operator for a in "XYZ"]
    T = np.array([[np.trace(rho @ np.kron(a, b)).real for b in paulis] for a in paulis])
    c = walsh_hadamard(mabk_sign_function(2).values)
    phi = np.linspace(0, 2 * np.pi, 721)
    a = np.stack([np.cos(phi), np.sin(phi), 0 * phi], 1)
    A1, A2 = np.meshgrid(np.arange(721), np.arange(721), indexing="ij")
    u = [c[0, k2] * (a[A1] @ T) + c[1, k2] * (a[A2] @ T) for k2 in (0, 1)]
    grid = np.hypot(u[0][..., 0], u[0][..., 1]) + np.hypot(u[1][..., 0], u[1][..., 1])
    _, v = maximize_settings(DensityMatrix(rho), mabk_sign_function(2), Restriction.EQUATORIAL)
    assert v.value >= grid.max() - 1e-9
    assert v.value == pytest.approx(grid.max(), abs=1e-3)
