"""Dense n-qubit state and density-matrix algebra.

Qubit 0 is the most significant bit of a computational-basis index, so the
ket ``|q0 q1 ... q_{n-1}>`` is stored at index ``int("q0q1...", 2)``.  All
functions in this module take 0-based qubit indices; the network and
diagnostics layers translate from the 1-based labels used in files.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 12

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_FLOOR = -1e-9
NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
ZERO_PROB = 1e-12

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)


class DimensionError(ValueError):
    pass


class ZeroProbabilityError(ValueError):
    pass


class NotTracePreservingError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class Ket:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = _frozen(np.ravel(self.amplitudes))
        n = _qubits_of(amp.size)
        if not 1 <= n <= MAX_QUBITS:
            raise DimensionError(f"{n} qubits outside 1..{MAX_QUBITS}")
        if abs(np.linalg.norm(amp) - 1.0) > NORM_TOL:
            raise ValueError(f"ket norm {np.linalg.norm(amp)!r} != 1")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n_qubits(self) -> int:
        return _qubits_of(self.amplitudes.size)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density operator.  ``n_qubits == 0`` is the trivial 1x1 state
    left behind when every qubit of a register has been measured away."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        n = _qubits_of(m.shape[0])
        if n > MAX_QUBITS:
            raise DimensionError(f"{n} qubits exceeds {MAX_QUBITS}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real:.3e} != 1")
        if np.linalg.eigvalsh(m).min() < PSD_FLOOR:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self) -> int:
        return _qubits_of(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        d = 2**n
        return cls(np.eye(d, dtype=complex) / d)


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"unitary must be square, got {m.shape}")
        _qubits_of(m.shape[0])
        if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) > UNITARY_TOL:
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple

    def __post_init__(self):
        ops = tuple(_frozen(k) for k in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        _qubits_of(dim)
        if any(k.shape != (dim, dim) for k in ops):
            raise DimensionError("Kraus operators must share one square shape")
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(dim))) > TRACE_TOL:
            raise NotTracePreservingError("sum of K^dag K differs from identity")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


@dataclass(frozen=True, eq=False)
class BlochObservable:
    """Dichotomic observable n.sigma for a unit Bloch vector n."""

    axis: np.ndarray

    def __post_init__(self):
        ax = np.array(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(ax) - 1.0) > 1e-12:
            raise ValueError(f"Bloch axis {ax} is not unit length")
        ax.setflags(write=False)
        object.__setattr__(self, "axis", ax)

    @property
    def operator(self) -> np.ndarray:
        x, y, z = self.axis
        return x * SX + y * SY + z * SZ

    @property
    def projector(self) -> np.ndarray:
        """Projector onto the +1 eigenspace."""
        return (I2 + self.operator) / 2

    @classmethod
    def equatorial(cls, phi: float) -> "BlochObservable":
        return cls((np.cos(phi), np.sin(phi), 0.0))

    @classmethod
    def sphere(cls, theta: float, phi: float) -> "BlochObservable":
        st = np.sin(theta)
        return cls((st * np.cos(phi), st * np.sin(phi), np.cos(theta)))

    @classmethod
    def pauli(cls, name: str) -> "BlochObservable":
        axes = {"X": (1, 0, 0), "Y": (0, 1, 0), "Z": (0, 0, 1)}
        try:
            return cls(axes[name.upper()])
        except KeyError:
            raise ValueError(f"unknown Pauli axis {name!r}") from None


def _check_targets(targets: Sequence[int], n: int) -> tuple[int, ...]:
    t = tuple(int(q) for q in targets)
    if len(set(t)) != len(t):
        raise DimensionError(f"repeated target in {t}")
    if any(q < 0 or q >= n for q in t):
        raise DimensionError(f"target out of range for {n} qubits: {t}")
    return t


def apply_operator_left(psi: np.ndarray, op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply ``op`` to the leading ``n`` qubit axes of ``psi`` (shape ``(2,)*n + rest``)."""
    k = len(targets)
    t = op.reshape((2,) * (2 * k))
    out = np.tensordot(t, psi, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the new target axes first; move them back into place
    rest = [q for q in range(psi.ndim) if q not in targets]
    order = list(targets) + rest
    return np.moveaxis(out, list(range(psi.ndim)), order)


def conjugate_raw(rho: np.ndarray, op: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Return ``op_emb rho op_emb^dag`` without validation."""
    n = _qubits_of(rho.shape[0])
    t = rho.reshape((2,) * (2 * n))
    t = apply_operator_left(t, op, targets, 2 * n)
    t = apply_operator_left(t, op.conj(), [n + q for q in targets], 2 * n)
    return t.reshape(rho.shape)


def channel_raw(rho: np.ndarray, operators: Sequence[np.ndarray], targets: Sequence[int]) -> np.ndarray:
    out = conjugate_raw(rho, operators[0], targets)
    for k in operators[1:]:
        out = out + conjugate_raw(rho, k, targets)
    return out


def build_plus_state(n: int) -> Ket:
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"n={n} outside 1..{MAX_QUBITS}")
    return Ket(np.full(2**n, 2.0 ** (-n / 2), dtype=complex))


def apply_unitary(state: DensityMatrix, u: Unitary, targets: Sequence[int]) -> DensityMatrix:
    t = _check_targets(targets, state.n_qubits)
    if u.dim != 2 ** len(t):
        raise DimensionError(f"unitary of dim {u.dim} on {len(t)} targets")
    return DensityMatrix(conjugate_raw(state.matrix, u.matrix, t))


def apply_channel(state: DensityMatrix, ch: KrausChannel, targets: Sequence[int]) -> DensityMatrix:
    t = _check_targets(targets, state.n_qubits)
    if ch.dim != 2 ** len(t):
        raise DimensionError(f"channel of dim {ch.dim} on {len(t)} targets")
    return DensityMatrix(channel_raw(state.matrix, ch.operators, t))


def expectation_raw(rho: np.ndarray, ops: Sequence[np.ndarray]) -> float:
    n = len(ops)
    t = rho.reshape((2,) * (2 * n))
    for q, op in enumerate(ops):
        t = apply_operator_left(t, op, [q], 2 * n)
    return float(np.real(np.trace(t.reshape(rho.shape))))


def expectation(state: DensityMatrix, observables: Sequence[BlochObservable]) -> float:
    if len(observables) != state.n_qubits:
        raise DimensionError(f"{len(observables)} observables for {state.n_qubits} qubits")
    return expectation_raw(state.matrix, [o.operator for o in observables])


def trace_out_raw(rho: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    n = _qubits_of(rho.shape[0])
    t = rho.reshape((2,) * (2 * n))
    gone = sorted(set(qubits), reverse=True)
    m = n
    for q in gone:
        t = np.trace(t, axis1=q, axis2=q + m)
        m -= 1
    d = 2**m
    return t.reshape(d, d)


def project_raw(rho: np.ndarray, qubit: int, projector: np.ndarray) -> tuple[np.ndarray, float]:
    """Apply a single-qubit projector and trace that qubit out, unnormalised."""
    out = trace_out_raw(conjugate_raw(rho, projector, [qubit]), [qubit])
    return out, float(np.real(np.trace(out)))


def project_qubit(
    state: DensityMatrix, qubit: int, obs: BlochObservable, outcome: int
) -> tuple[DensityMatrix, float]:
    """Measure ``qubit`` along ``obs``, keep the branch ``outcome`` and drop the qubit.

    Returns the renormalised state of the remaining qubits and the branch
    probability.
    """
    (q,) = _check_targets([qubit], state.n_qubits)
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")
    proj = (I2 + outcome * obs.operator) / 2
    out, prob = project_raw(state.matrix, q, proj)
    if prob < ZERO_PROB:
        raise ZeroProbabilityError(f"outcome {outcome:+d} on qubit {q} has probability {prob:.2e}")
    return DensityMatrix(out / prob), prob


def partial_trace(state: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    keep = _check_targets(keep, state.n_qubits)
    if not keep:
        raise DimensionError("partial trace needs at least one kept qubit")
    if list(keep) != sorted(keep):
        raise DimensionError("kept qubits must be listed in increasing order")
    gone = [q for q in range(state.n_qubits) if q not in keep]
    return DensityMatrix(trace_out_raw(state.matrix, gone))


def fidelity(a: DensityMatrix, b: Ket) -> float:
    if a.dim != b.amplitudes.size:
        raise DimensionError(f"dimension mismatch {a.dim} vs {b.amplitudes.size}")
    v = b.amplitudes
    return float(np.real(v.conj() @ a.matrix @ v))


def embed(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``op`` acting on ``targets``."""
    t = _check_targets(targets, n)
    d = 2**n
    eye = np.eye(d, dtype=complex).reshape((2,) * n + (d,))
    return apply_operator_left(eye, op, t, n).reshape(d, d)
