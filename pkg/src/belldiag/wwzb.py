"""Two-setting full-correlation Bell expressions (WWZB family, MABK member).

Setting and sign strings are stored as bit arrays of shape ``(2,) * N``:
bit 0 stands for setting 1 / sign +1 and bit 1 for setting 2 / sign -1, so the
product ``prod_j s_j**(k_j - 1)`` becomes ``(-1)**(b_s . b_k)`` and the inner
sum of the inequality is a Walsh-Hadamard transform.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from ._parallel import parallel_map
from .quantum import BlochObservable, DensityMatrix, DimensionError


class Restriction(str, enum.Enum):
    EQUATORIAL = "equatorial"
    FULLSPHERE = "fullsphere"

    @property
    def angles_per_qubit(self) -> int:
        return 2 if self is Restriction.EQUATORIAL else 4


@dataclass(frozen=True)
class SettingsTable:
    """``observables[j] == (A_j(n_1), A_j(n_2))``."""

    observables: tuple

    def __post_init__(self):
        obs = tuple(tuple(pair) for pair in self.observables)
        if not obs or any(len(pair) != 2 for pair in obs):
            raise ValueError("settings need exactly two observables per qubit")
        if not all(isinstance(o, BlochObservable) for pair in obs for o in pair):
            raise TypeError("settings entries must be BlochObservable")
        object.__setattr__(self, "observables", obs)

    @property
    def n_qubits(self) -> int:
        return len(self.observables)

    def operator_stack(self) -> np.ndarray:
        """Kernel layout ``b[j, k, 2*x + y] = A_{j,k}[y, x]``."""
        b = np.empty((self.n_qubits, 2, 4), dtype=complex)
        for j, pair in enumerate(self.observables):
            for k, o in enumerate(pair):
                b[j, k] = o.operator.T.reshape(4)
        return b

    def subset(self, qubits: Sequence[int]) -> "SettingsTable":
        return SettingsTable(tuple(self.observables[q] for q in qubits))

    def to_axes(self) -> list:
        return [[[round(float(x), 12) + 0.0 for x in o.axis] for o in pair] for pair in self.observables]

    @classmethod
    def from_axes(cls, axes) -> "SettingsTable":
        return cls(tuple(tuple(BlochObservable(np.asarray(a) / np.linalg.norm(a)) for a in pair) for pair in axes))

    @classmethod
    def from_angles(cls, angles: Sequence[float], restriction: Restriction) -> "SettingsTable":
        a = np.asarray(angles, dtype=float)
        per = Restriction(restriction).angles_per_qubit
        if a.size % per:
            raise DimensionError(f"{a.size} angles do not split into {per} per qubit")
        pairs = []
        for j in range(a.size // per):
            q = a[j * per : (j + 1) * per]
            if per == 2:
                pairs.append((BlochObservable.equatorial(q[0]), BlochObservable.equatorial(q[1])))
            else:
                pairs.append((BlochObservable.sphere(q[0], q[1]), BlochObservable.sphere(q[2], q[3])))
        return cls(tuple(pairs))


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        n = int(v.size).bit_length() - 1
        if v.size < 2 or 1 << n != v.size:
            raise DimensionError("correlation tensor needs 2**N entries")
        v = v.reshape((2,) * n)
        if np.any(np.abs(v) > 1 + 1e-9):
            raise ValueError("correlation entries must lie in [-1, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_qubits(self) -> int:
        return self.values.ndim

    def __getitem__(self, settings: Sequence[int]) -> float:
        """Entry ``E(k_1, ..., k_N)`` with 1-based setting indices."""
        return float(self.values[tuple(k - 1 for k in settings)])


@dataclass(frozen=True, eq=False)
class SignFunction:
    """Real-valued weights ``S(s)`` indexed by sign bits (0 -> +1, 1 -> -1)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        n = int(v.size).bit_length() - 1
        if v.size < 2 or 1 << n != v.size:
            raise DimensionError("sign function needs 2**N entries")
        v = v.reshape((2,) * n)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_qubits(self) -> int:
        return self.values.ndim

    def __call__(self, signs: Sequence[int]) -> float:
        return float(self.values[tuple(0 if s == 1 else 1 for s in signs)])

    @property
    def is_dichotomic(self) -> bool:
        return bool(np.all(np.isclose(np.abs(self.values), 1.0, atol=1e-12)))

    @classmethod
    def from_callable(cls, n: int, fn) -> "SignFunction":
        vals = np.empty((2,) * n)
        for bits in itertools.product((0, 1), repeat=n):
            vals[bits] = fn(tuple(1 - 2 * b for b in bits))
        return cls(vals)


@dataclass(frozen=True)
class WwzbValue:
    value: float
    n_qubits: int
    classical_bound: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "classical_bound", float(2**self.n_qubits))

    @property
    def violates(self) -> bool:
        return self.value > self.classical_bound


@dataclass(frozen=True)
class SearchConfig:
    starts: int = 64
    seed: int = 0
    tol: float = 1e-7
    max_sweeps: int = 500

    def __post_init__(self):
        if self.starts < 1 or self.max_sweeps < 1:
            raise ValueError("search budget must be positive")


def walsh_hadamard(a: np.ndarray) -> np.ndarray:
    """Apply ``[[1, 1], [1, -1]]`` along every axis."""
    out = np.asarray(a, dtype=float)
    h = np.array([[1.0, 1.0], [1.0, -1.0]])
    for ax in range(out.ndim):
        out = np.moveaxis(np.tensordot(h, out, axes=([1], [ax])), 0, ax)
    # contiguous, so reductions over it sum in a fixed order
    return np.ascontiguousarray(out)


def sign_coefficients(S: SignFunction) -> np.ndarray:
    """``c(k) = sum_s S(s) prod_j s_j**(k_j - 1)``, so that the expression is ``|sum_k c(k) E(k)|``."""
    return walsh_hadamard(S.values)


def correlation_tensor(state: DensityMatrix, settings: SettingsTable) -> CorrelationTensor:
    n = state.n_qubits
    if settings.n_qubits != n:
        raise DimensionError(f"{settings.n_qubits}-qubit settings for a {n}-qubit state")
    e = kernels.correlations(kernels.interleave(state.matrix), settings.operator_stack(), n)
    return CorrelationTensor(np.clip(e, -1.0, 1.0).reshape((2,) * n))


def wwzb_lhs(E: CorrelationTensor, S: SignFunction) -> WwzbValue:
    if E.n_qubits != S.n_qubits:
        raise DimensionError(f"tensor has N={E.n_qubits}, sign function N={S.n_qubits}")
    inner = walsh_hadamard(E.values)
    return WwzbValue(abs(float(np.sum(S.values * inner))), E.n_qubits)


def mabk_sign_function(N: int) -> SignFunction:
    if N < 2:
        raise DimensionError("MABK needs at least two parties")
    return SignFunction.from_callable(N, lambda s: np.sqrt(2) * np.cos(np.pi / 4 * (sum(s) - N - 1)))


def lhv_max(E: CorrelationTensor) -> WwzbValue:
    """Largest WWZB value over all sign functions; at most ``2**N`` iff an LHV model exists."""
    return WwzbValue(float(np.sum(np.abs(walsh_hadamard(E.values)))), E.n_qubits)


def optimal_sign_function(E: CorrelationTensor) -> SignFunction:
    inner = walsh_hadamard(E.values)
    return SignFunction(np.where(inner >= 0, 1.0, -1.0))


def _start_angles(seed: int, index: int, size: int) -> np.ndarray:
    rng = np.random.default_rng([seed, index])
    return rng.uniform(0.0, 2 * np.pi, size)


def maximize_settings(
    state: DensityMatrix,
    S: SignFunction,
    restriction: Restriction = Restriction.EQUATORIAL,
    search: SearchConfig = SearchConfig(),
) -> tuple[SettingsTable, WwzbValue]:
    """Multi-start coordinate ascent of the Bell value over local setting angles.

    Equatorial axes are ``(cos phi, sin phi, 0)``; full-sphere axes are
    ``(sin t cos p, sin t sin p, cos t)``.  Each start ``i`` draws its angles
    from the stream seeded by ``(search.seed, i)``; ties go to the lowest index.
    """
    n = state.n_qubits
    if S.n_qubits != n:
        raise DimensionError(f"{S.n_qubits}-party sign function for a {n}-qubit state")
    restriction = Restriction(restriction)
    best_angles, best = _ascend_many(
        kernels.interleave(state.matrix), n, restriction, sign_coefficients(S).reshape(-1), search
    )
    return SettingsTable.from_angles(best_angles, restriction), WwzbValue(best, n)


def _ascend_many(v, n, restriction, coeffs, search, extra_starts=()):
    full = restriction is Restriction.FULLSPHERE
    size = restriction.angles_per_qubit * n
    starts = list(extra_starts) + [_start_angles(search.seed, i, size) for i in range(search.starts)]

    def run(a0):
        ang, val, _ = kernels.ascend(v, a0, n, full, coeffs, search.tol, search.max_sweeps)
        return ang, val

    results = parallel_map(run, starts)
    best_angles, best = results[0]
    for ang, val in results[1:]:
        if val > best:
            best_angles, best = ang, val
    return np.mod(best_angles, 2 * np.pi), float(best)


def bell_value(state: DensityMatrix, S: SignFunction, settings: SettingsTable) -> WwzbValue:
    return wwzb_lhs(correlation_tensor(state, settings), S)
