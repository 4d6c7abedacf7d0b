import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from belldiag.network import (
    MODELS,
    GateFailure,
    Hybrid,
    QubitDephasing,
    Topology,
    WithGlobalDepolarizing,
    build_hyperentangled_cluster,
    build_network_state,
    canonical_frame_map,
    dephasing_channel,
    depolarizing_channel,
    find_local_clifford_map,
    gate_failure_map,
    ideal_cluster,
    mixture_by_patterns,
    model_from_name,
    network_state_raw,
    single_qubit_cliffords,
    to_physical_frame_raw,
)
from belldiag.quantum import CZ, I2, SZ, DensityMatrix, DimensionError, Ket, apply_channel, build_plus_state, fidelity
from helpers import assert_density, random_density

CHAIN = Topology.linear_chain(4)
probs = st.floats(0.0, 1.0)


def test_topology_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        Topology(3, ((1, 1),))
    with pytest.raises(ValueError):
        Topology(3, ((1, 2), (2, 1)))
    with pytest.raises(ValueError):
        Topology(3, ((1, 4),))
    p = tmp_path / "t.json"
    p.write_text(json.dumps(CHAIN.to_json()))
    assert Topology.load(p) == CHAIN
    assert CHAIN.edge_name((3, 4)) == "k_A-k_B"


def test_dephasing_channel_examples():
    rng = np.random.default_rng(0)
    rho = DensityMatrix(random_density(rng, 1))
    assert np.allclose(apply_channel(rho, dephasing_channel(1.0), [0]).matrix, rho.matrix)
    assert np.allclose(apply_channel(rho, dephasing_channel(0.0), [0]).matrix, SZ @ rho.matrix @ SZ)
    plus = build_plus_state(1).density()
    assert np.allclose(apply_channel(plus, dephasing_channel(0.5), [0]).matrix, I2 / 2)


def test_depolarizing_channel_examples():
    rng = np.random.default_rng(1)
    rho = DensityMatrix(random_density(rng, 1))
    assert np.allclose(apply_channel(rho, depolarizing_channel(1.0), [0]).matrix, rho.matrix)
    pure = Ket(np.array([0.6, 0.8j])).density()
    assert np.allclose(apply_channel(pure, depolarizing_channel(0.0), [0]).matrix, I2 / 2)
    zero = DensityMatrix(np.diag([1.0, 0.0]))
    assert np.allclose(apply_channel(zero, depolarizing_channel(0.5), [0]).matrix, np.diag([0.75, 0.25]))


@settings(max_examples=40, deadline=None)
@given(probs)
def test_depolarizing_is_mixing_with_white_noise(p):
    rho = DensityMatrix(random_density(np.random.default_rng(2), 1))
    out = apply_channel(rho, depolarizing_channel(p), [0]).matrix
    assert np.allclose(out, p * rho.matrix + (1 - p) * I2 / 2, atol=1e-12)


def test_gate_failure_map_examples():
    plus2 = build_plus_state(2).density()
    cl = Ket(np.array([1, 1, 1, -1]) / 2)
    assert fidelity(apply_channel(plus2, gate_failure_map(1.0), [0, 1]), cl) == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    rho = DensityMatrix(random_density(rng, 2))
    assert np.allclose(apply_channel(rho, gate_failure_map(0.0), [0, 1]).matrix, rho.matrix)
    half = apply_channel(plus2, gate_failure_map(0.5), [0, 1]).matrix
    assert np.allclose(half, 0.5 * CZ @ plus2.matrix @ CZ + 0.5 * plus2.matrix)


@pytest.mark.parametrize("make", [dephasing_channel, depolarizing_channel, gate_failure_map])
def test_channels_reject_bad_probability(make):
    for p in (-0.1, 1.1, float("nan")):
        with pytest.raises(ValueError):
            make(p)


def test_gate_failure_endpoints():
    ideal = ideal_cluster(CHAIN)
    assert fidelity(build_network_state(CHAIN, GateFailure(), (1, 1, 1)), ideal) == pytest.approx(1.0, abs=1e-12)
    product = build_network_state(CHAIN, GateFailure(), (0, 0, 0))
    assert np.allclose(product.matrix, build_plus_state(4).density().matrix, atol=0)


@pytest.mark.parametrize("dead", [0, 1, 2])
def test_dead_link_equals_cluster_without_edge(dead):
    params = [1.0, 1.0, 1.0]
    params[dead] = 0.0
    sub = Topology(4, tuple(e for i, e in enumerate(CHAIN.edges) if i != dead))
    got = build_network_state(CHAIN, GateFailure(), params).matrix
    assert np.array_equal(got, ideal_cluster(sub).density().matrix)


def test_ideal_states_are_pure():
    for name, model in MODELS.items():
        k = len(model.parameter_names(CHAIN))
        assert build_network_state(CHAIN, model, [1.0] * k).purity() == pytest.approx(1.0, abs=1e-9), name


@settings(max_examples=50, deadline=None)
@given(st.tuples(probs, probs, probs))
def test_gate_failure_is_pattern_mixture(p):
    got = build_network_state(CHAIN, GateFailure(), p).matrix
    assert np.max(np.abs(got - mixture_by_patterns(CHAIN, p))) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(sorted(MODELS)), st.lists(probs, min_size=4, max_size=4))
def test_model_states_are_valid(name, values):
    model = model_from_name(name)
    k = len(model.parameter_names(CHAIN))
    assert_density(build_network_state(CHAIN, model, values[:k]).matrix)


def test_parameter_validation():
    with pytest.raises(ValueError):
        build_network_state(CHAIN, GateFailure(), (1, 1))
    with pytest.raises(ValueError):
        build_network_state(CHAIN, GateFailure(), (1, 1, 2))
    with pytest.raises(ValueError):
        model_from_name("amplitude_damping")
    with pytest.raises(DimensionError):
        Hybrid().parameter_names(Topology.linear_chain(3))
    with pytest.raises(ValueError):
        Hybrid("amplitude")


def test_qubit_dephasing_definition():
    p = (0.9, 0.8, 0.7, 0.6)
    rho = ideal_cluster(CHAIN).density()
    for q, pq in enumerate(p):
        rho = apply_channel(rho, dephasing_channel(pq), [q])
    assert np.allclose(build_network_state(CHAIN, QubitDephasing(), p).matrix, rho.matrix, atol=1e-14)


def test_hybrid_definition():
    p1, p2, p3 = 0.9, 0.8, 0.7
    t = Topology(4, ((1, 2), (3, 4)))
    rho = ideal_cluster(t).density()
    rho = apply_channel(rho, dephasing_channel(p1), [0])
    rho = apply_channel(rho, dephasing_channel(p3), [3])
    rho = apply_channel(rho, gate_failure_map(p2), [1, 2])
    assert np.allclose(build_network_state(CHAIN, Hybrid(), (p1, p2, p3)).matrix, rho.matrix, atol=1e-14)


def test_global_depolarizing_wraps_inner_model():
    inner = build_network_state(CHAIN, Hybrid(), (0.9, 0.8, 0.7))
    rho = inner
    for q in range(4):
        rho = apply_channel(rho, depolarizing_channel(0.85), [q])
    got = build_network_state(CHAIN, WithGlobalDepolarizing(Hybrid()), (0.9, 0.8, 0.7, 0.85))
    assert np.allclose(got.matrix, rho.matrix, atol=1e-14)
    assert MODELS["hybrid_global"].parameter_names(CHAIN)[-1] == "p_g"


def test_hyperentangled_cluster_amplitudes():
    amp = build_hyperentangled_cluster().amplitudes.reshape((2,) * 4)
    H = r = 0
    V = l = 1
    expected = {(H, H, r, l): 0.5, (V, V, r, l): 0.5, (H, H, l, r): 0.5, (V, V, l, r): -0.5}
    for idx in np.ndindex(*amp.shape):
        assert amp[idx] == pytest.approx(expected.get(idx, 0.0))
    assert np.linalg.norm(amp) == pytest.approx(1.0)


def test_canonical_frame_map():
    ws = canonical_frame_map()
    for w in ws:
        assert np.allclose(w.conj().T @ w, I2, atol=1e-12)
    phys = build_hyperentangled_cluster()
    canon = ideal_cluster(CHAIN)
    assert fidelity(phys.density(), canon) < 1 - 1e-6
    back = DensityMatrix(to_physical_frame_raw(canon.density().matrix))
    assert fidelity(back, phys) == pytest.approx(1.0, abs=1e-9)


def test_clifford_group_and_search():
    cl = single_qubit_cliffords()
    assert len(cl) == 24
    # the physical register is also a chain pi_B - pi_A - k_A - k_B
    alt = Topology(4, ((2, 1), (1, 3), (3, 4)))
    assert len(find_local_clifford_map(build_hyperentangled_cluster(), ideal_cluster(alt))) == 4


def test_pi_pair_dephasing_composes_to_one_channel():
    # Z_piA Z_piB stabilises the physical state, so two dephasings merge into
    # one with p = p1 p2 + (1 - p1)(1 - p2)
    phys = build_hyperentangled_cluster().density()
    a, b = 0.7, 0.8
    two = apply_channel(apply_channel(phys, dephasing_channel(a), [0]), dephasing_channel(b), [1])
    one = apply_channel(phys, dephasing_channel(a * b + (1 - a) * (1 - b)), [0])
    assert np.allclose(two.matrix, one.matrix, atol=1e-14)


def test_raw_builder_matches_validated_builder():
    p = (0.3, 0.6, 0.9)
    assert np.array_equal(network_state_raw(CHAIN, GateFailure(), p), build_network_state(CHAIN, GateFailure(), p).matrix)
