"""Ideal and noise-corrupted cluster states on a known network topology.

Topologies and groupings use 1-based qubit labels, as in measurement files;
conversion to the 0-based indices of :mod:`belldiag.quantum` happens here.
"""
from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .quantum import (
    CZ,
    I2,
    SX,
    SY,
    SZ,
    DensityMatrix,
    DimensionError,
    Ket,
    KrausChannel,
    build_plus_state,
    channel_raw,
    conjugate_raw,
)

TABLE1_LABELS = {1: "pi_A", 2: "pi_B", 3: "k_A", 4: "k_B"}


class FrameSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class Topology:
    n: int
    edges: tuple
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        edges = tuple(tuple(int(q) for q in e) for e in self.edges)
        for e in edges:
            if len(e) != 2 or e[0] == e[1] or not all(1 <= q <= self.n for q in e):
                raise ValueError(f"invalid edge {e} for {self.n} qubits")
        if len({frozenset(e) for e in edges}) != len(edges):
            raise ValueError("duplicate edge in topology")
        labels = {int(k): str(v) for k, v in dict(self.labels).items()}
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "labels", labels)

    def label(self, q: int) -> str:
        return self.labels.get(q, str(q))

    def edge_name(self, e: Sequence[int]) -> str:
        return f"{self.label(e[0])}-{self.label(e[1])}"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in self.edges],
            "labels": {str(k): v for k, v in sorted(self.labels.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Topology":
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]), data.get("labels", {}))

    @classmethod
    def load(cls, path: str | Path) -> "Topology":
        return cls.from_json(json.loads(Path(path).read_text()))

    @classmethod
    def linear_chain(cls, n: int = 4, labels: dict | None = None) -> "Topology":
        if labels is None:
            labels = TABLE1_LABELS if n == 4 else {}
        return cls(n, tuple((i, i + 1) for i in range(1, n)), labels)


def _check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or not np.isfinite(p):
        raise ValueError(f"{name}={p} outside [0, 1]")
    return p


def dephasing_channel(p: float) -> KrausChannel:
    p = _check_probability(p)
    return KrausChannel((np.sqrt(p) * I2, np.sqrt(1 - p) * SZ))


def depolarizing_channel(p: float) -> KrausChannel:
    """rho -> p rho + (1 - p) I/2."""
    p = _check_probability(p)
    w = np.sqrt((1 - p) / 4)
    return KrausChannel((np.sqrt((1 + 3 * p) / 4) * I2, w * SX, w * SY, w * SZ))


def gate_failure_map(p: float) -> KrausChannel:
    """The C-Phase fires with probability p and acts as identity otherwise."""
    p = _check_probability(p)
    return KrausChannel((np.sqrt(p) * CZ, np.sqrt(1 - p) * np.eye(4)))


# Noise models.  Each exposes its free-parameter names for a topology, the
# polynomial degree of the state in each parameter, and an in-place builder on
# raw matrices (validation happens once, in build_network_state).


def _cz_raw(rho, e):
    return conjugate_raw(rho, CZ, (e[0] - 1, e[1] - 1))


def _gate_failure_raw(rho, p, e):
    if p == 1.0:
        return _cz_raw(rho, e)
    if p == 0.0:
        return rho
    return p * _cz_raw(rho, e) + (1 - p) * rho


def _dephase_raw(rho, p, q):
    if p == 1.0:
        return rho
    return p * rho + (1 - p) * conjugate_raw(rho, SZ, (q - 1,))


def _depolarize_raw(rho, p, q):
    if p == 1.0:
        return rho
    w = (1 - p) / 4
    twirl = sum(conjugate_raw(rho, s, (q - 1,)) for s in (SX, SY, SZ))
    return ((1 + 3 * p) / 4) * rho + w * twirl


@dataclass(frozen=True)
class GateFailure:
    name = "gate_failure"

    def parameter_names(self, top: Topology) -> list[str]:
        return [f"p_{top.edge_name(e)}" for e in top.edges]

    def degrees(self, top: Topology) -> list[int]:
        return [1] * len(top.edges)

    def edge_strength_indices(self, top: Topology) -> dict:
        return {e: i for i, e in enumerate(top.edges)}

    def apply(self, rho, top, params):
        for p, e in zip(params, top.edges):
            rho = _gate_failure_raw(rho, p, e)
        return rho


@dataclass(frozen=True)
class QubitDephasing:
    name = "qubit_dephasing"

    def parameter_names(self, top: Topology) -> list[str]:
        return [f"p_{top.label(q)}" for q in range(1, top.n + 1)]

    def degrees(self, top: Topology) -> list[int]:
        return [1] * top.n

    def edge_strength_indices(self, top: Topology) -> dict:
        return {}

    def apply(self, rho, top, params):
        for e in top.edges:
            rho = _cz_raw(rho, e)
        for q, p in enumerate(params, start=1):
            rho = _dephase_raw(rho, p, q)
        return rho


@dataclass(frozen=True)
class Hybrid:
    """Dephased links (1,2), (3,4) and a probabilistic C-Phase on (2,3) of a 4-chain.

    The dephasing for link (1,2) acts on qubit 1 and for link (3,4) on qubit 4;
    either member of a pair gives identical Bell predictions.  With
    ``link_channel="depolarizing"`` those two channels are depolarizing instead.
    """

    link_channel: str = "dephasing"
    name = "hybrid"

    def __post_init__(self):
        if self.link_channel not in ("dephasing", "depolarizing"):
            raise ValueError(f"link channel must be 'dephasing' or 'depolarizing', got {self.link_channel!r}")

    @property
    def label(self) -> str:
        return "hybrid" if self.link_channel == "dephasing" else "hybrid_depolarizing"

    def _check(self, top):
        if top.n != 4 or set(map(frozenset, top.edges)) != {frozenset(e) for e in ((1, 2), (2, 3), (3, 4))}:
            raise DimensionError("the hybrid model is defined on the 4-qubit chain only")

    def parameter_names(self, top: Topology) -> list[str]:
        self._check(top)
        return [f"p_{top.edge_name((1, 2))}", f"p_{top.edge_name((2, 3))}", f"p_{top.edge_name((3, 4))}"]

    def degrees(self, top: Topology) -> list[int]:
        return [1, 1, 1]

    def edge_strength_indices(self, top: Topology) -> dict:
        return {(1, 2): 0, (2, 3): 1, (3, 4): 2}

    def apply(self, rho, top, params):
        self._check(top)
        p1, p2, p3 = params
        rho = _cz_raw(rho, (1, 2))
        rho = _cz_raw(rho, (3, 4))
        local = _dephase_raw if self.link_channel == "dephasing" else _depolarize_raw
        rho = local(rho, p1, 1)
        rho = local(rho, p3, 4)
        return _gate_failure_raw(rho, p2, (2, 3))


@dataclass(frozen=True)
class WithGlobalDepolarizing:
    inner: object
    name = "with_global_depolarizing"

    @property
    def label(self) -> str:
        return f"{model_label(self.inner)}+global_depolarizing"

    def parameter_names(self, top: Topology) -> list[str]:
        return self.inner.parameter_names(top) + ["p_g"]

    def degrees(self, top: Topology) -> list[int]:
        return self.inner.degrees(top) + [top.n]

    def edge_strength_indices(self, top: Topology) -> dict:
        return self.inner.edge_strength_indices(top)

    def apply(self, rho, top, params):
        *inner, pg = params
        rho = self.inner.apply(rho, top, inner)
        for q in range(1, top.n + 1):
            rho = _depolarize_raw(rho, pg, q)
        return rho


MODELS = {
    "gate_failure": GateFailure(),
    "qubit_dephasing": QubitDephasing(),
    "hybrid": Hybrid(),
    "hybrid_global": WithGlobalDepolarizing(Hybrid()),
    "hybrid_depolarizing": Hybrid("depolarizing"),
    "gate_failure_global": WithGlobalDepolarizing(GateFailure()),
}


def model_label(model) -> str:
    return getattr(model, "label", model.name)


def model_from_name(name: str):
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown noise model {name!r}; choose from {sorted(MODELS)}") from None


def check_params(model, top: Topology, params: Sequence[float]) -> tuple[float, ...]:
    names = model.parameter_names(top)
    if len(params) != len(names):
        raise ValueError(f"{model_label(model)} takes {len(names)} parameters ({', '.join(names)}), got {len(params)}")
    return tuple(_check_probability(p, n) for p, n in zip(params, names))


def _plus_matrix(n: int) -> np.ndarray:
    return np.full((2**n, 2**n), 2.0**-n, dtype=complex)


def network_state_raw(top: Topology, model, params: Sequence[float]) -> np.ndarray:
    return model.apply(_plus_matrix(top.n), top, params)


def build_network_state(top: Topology, model, params: Sequence[float]) -> DensityMatrix:
    params = check_params(model, top, params)
    return DensityMatrix(network_state_raw(top, model, params))


def ideal_cluster(top: Topology) -> Ket:
    """``prod CZ |+>^n`` over the topology's edges."""
    psi = build_plus_state(top.n).amplitudes.reshape((2,) * top.n).copy()
    for a, b in top.edges:
        idx = [slice(None)] * top.n
        idx[a - 1] = 1
        idx[b - 1] = 1
        psi[tuple(idx)] *= -1
    return Ket(psi.reshape(-1))


def build_hyperentangled_cluster() -> Ket:
    """The two-photon cluster in the register (pi_A, pi_B, k_A, k_B), H,r -> 0 and V,l -> 1.

    Built from ``(|HH> + |VV>)(|lr> + |rl>)/2`` by flipping the sign where
    photon A is both V and in the left path.
    """
    amp = np.zeros((2,) * 4, dtype=complex)
    for pol, path in itertools.product(((0, 0), (1, 1)), ((1, 0), (0, 1))):
        amp[pol + path] = 0.5
    amp[1, :, 1, :] *= -1
    return Ket(amp.reshape(-1))


@functools.lru_cache(maxsize=None)
def single_qubit_cliffords() -> tuple:
    """The 24 single-qubit Clifford unitaries modulo global phase."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])

    def canon(u):
        k = np.flatnonzero(np.abs(u.reshape(-1)) > 1e-9)[0]
        u = u * np.conj(u.reshape(-1)[k]) / abs(u.reshape(-1)[k])
        return tuple(np.round(u.reshape(-1), 9))

    found = {canon(I2): I2}
    frontier = [I2]
    while frontier:
        nxt = []
        for u in frontier:
            for g in (h, s):
                w = g @ u
                key = canon(w)
                if key not in found:
                    found[key] = w
                    nxt.append(w)
        frontier = nxt
    if len(found) != 24:
        raise FrameSearchError(f"Clifford enumeration produced {len(found)} elements")
    return tuple(found[k] for k in sorted(found))


def find_local_clifford_map(source: Ket, target: Ket, tol: float = 1e-9) -> tuple:
    """Exhaustive search for ``W_1 (x) ... (x) W_n`` with ``|<target| W |source>|^2 = 1``."""
    n = source.n_qubits
    if target.n_qubits != n:
        raise DimensionError("source and target sizes differ")
    cl = np.array(single_qubit_cliffords())
    # contract one qubit at a time; axis 0 enumerates partial Clifford choices
    cur = source.amplitudes.reshape((1,) + (2,) * n)
    for q in range(n):
        cur = np.einsum("cab,mb...->mca...", cl, np.moveaxis(cur, q + 1, 1))
        cur = np.moveaxis(cur.reshape((-1,) + cur.shape[2:]), 1, q + 1)
    overlaps = np.abs(cur.reshape(cur.shape[0], -1) @ target.amplitudes.conj()) ** 2
    hit = np.flatnonzero(overlaps > 1 - tol)
    if hit.size == 0:
        raise FrameSearchError(f"no local Clifford map found (best fidelity {overlaps.max():.6f})")
    choice = np.unravel_index(hit[0], (24,) * n)
    return tuple(cl[i] for i in choice)


@functools.lru_cache(maxsize=1)
def canonical_frame_map() -> tuple:
    """Single-qubit unitaries taking the hyperentangled cluster to the canonical 4-chain."""
    return find_local_clifford_map(build_hyperentangled_cluster(), ideal_cluster(Topology.linear_chain(4)))


def to_physical_frame_raw(rho: np.ndarray) -> np.ndarray:
    """Undo :func:`canonical_frame_map` on a 4-qubit matrix."""
    for q, w in enumerate(canonical_frame_map()):
        rho = conjugate_raw(rho, w.conj().T, (q,))
    return rho


def mixture_by_patterns(top: Topology, params: Sequence[float]) -> np.ndarray:
    """Gate-failure state as the explicit mixture over success/failure patterns."""
    out = np.zeros((2**top.n,) * 2, dtype=complex)
    for pattern in itertools.product((0, 1), repeat=len(top.edges)):
        w = np.prod([p if ok else 1 - p for p, ok in zip(params, pattern)])
        sub = Topology(top.n, tuple(e for e, ok in zip(top.edges, pattern) if ok))
        v = ideal_cluster(sub).amplitudes
        out += w * np.outer(v, v.conj())
    return out


__all__ = [
    "GateFailure",
    "Hybrid",
    "QubitDephasing",
    "Topology",
    "WithGlobalDepolarizing",
    "build_hyperentangled_cluster",
    "build_network_state",
    "canonical_frame_map",
    "channel_raw",
    "dephasing_channel",
    "depolarizing_channel",
    "gate_failure_map",
    "ideal_cluster",
]
