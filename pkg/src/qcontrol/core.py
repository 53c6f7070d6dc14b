"""Dense state-vector simulation for few-qubit circuits.

Qubit ordering is little-endian: qubit ``i`` is bit ``i`` of the basis-state
integer label. A gate acting on ``targets`` uses the same convention locally,
so ``targets[0]`` is bit 0 of the gate's row/column index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

ATOL = 1e-12
MAX_QUBITS = 12


class ImpossibleBranchError(ValueError):
    """Conditioning on a measurement branch that has (numerically) zero probability."""


class NonUnitaryError(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def _check_indices(n_qubits: int, qubits: Sequence[int], what: str = "qubit") -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate {what} index in {qubits}")
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise ValueError(f"{what} index {q} out of range for {n_qubits} qubits")
    return qubits


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state on ``n_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        dim = amps.size
        n = dim.bit_length() - 1
        if dim < 2 or 1 << n != dim:
            raise ValueError(f"amplitude count {dim} is not a power of two >= 2")
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the dense cap of {MAX_QUBITS}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def _evolved(cls, amps: np.ndarray) -> "StateVector":
        # result of a unitary step on a valid state: skip re-validation
        obj = object.__new__(cls)
        object.__setattr__(obj, "amplitudes", _frozen(amps))
        return obj

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @classmethod
    def basis(cls, bits: Sequence[int]) -> "StateVector":
        """Computational basis state with ``bits[i]`` the value of qubit ``i``."""
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[sum(int(b) << i for i, b in enumerate(bits))] = 1.0
        return cls(amps)

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        return cls.basis([0] * n_qubits)

    @classmethod
    def from_unnormalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps / np.linalg.norm(amps))

    def tensor(self) -> np.ndarray:
        # axis k of the tensor holds qubit n-1-k (C order, most significant first)
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2

    def equal_up_to_phase(self, other: "StateVector", atol: float = ATOL) -> bool:
        if self.n_qubits != other.n_qubits:
            return False
        return abs(abs(self.overlap(other)) - 1.0) <= atol

    def kron(self, other: "StateVector") -> "StateVector":
        """Append ``other``'s qubits above this state's qubits."""
        return StateVector(np.kron(other.amplitudes, self.amplitudes))

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"gate must be square, got shape {m.shape}")
        dim = m.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"gate dimension {dim} is not a power of two")
        if not np.all(np.isfinite(m)):
            raise NonUnitaryError("gate has non-finite entries")
        err = np.max(np.abs(m @ m.conj().T - np.eye(dim)))
        if err > ATOL:
            raise NonUnitaryError(f"U U^dagger deviates from identity by {err:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def dagger(self) -> "Unitary":
        return Unitary(self.matrix.conj().T)

    def __matmul__(self, other: "Unitary") -> "Unitary":
        return Unitary(self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > ATOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > ATOL:
            raise ValueError(f"density matrix trace {np.trace(m)!r} != 1")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, state: StateVector) -> "DensityMatrix":
        a = state.amplitudes
        return cls(np.outer(a, a.conj()))

    def expectation(self, operator) -> complex:
        return complex(np.trace(self.matrix @ np.asarray(operator)))

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True)
class MeasurementOutcome:
    bit: int
    probability: float
    post_state: StateVector


# ---------------------------------------------------------------- gates

@lru_cache(maxsize=None)
def gate_h() -> Unitary:
    return Unitary(np.array([[1, 1], [1, -1]]) / np.sqrt(2))


@lru_cache(maxsize=None)
def gate_x() -> Unitary:
    return Unitary(np.array([[0, 1], [1, 0]]))


def gate_identity(n_qubits: int = 1) -> Unitary:
    return Unitary(np.eye(1 << n_qubits))


def gate_phase(phi: float) -> Unitary:
    """diag(1, e^{i phi}): phase shift on the |1> arm."""
    return Unitary(np.diag([1.0, np.exp(1j * phi)]))


def gate_ry(theta: float) -> Unitary:
    """exp(-i theta Y / 2); takes |0> to cos(theta/2)|0> + sin(theta/2)|1>."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return Unitary(np.array([[c, -s], [s, c]]))


def controlled(gate: Unitary) -> Unitary:
    """Block-diagonal ``diag(I, gate)``.

    The control is the most significant bit of the result, i.e. the *last*
    entry of the ``targets`` tuple passed to :func:`apply_gate`.
    """
    if not isinstance(gate, Unitary):
        gate = Unitary(gate)
    d = gate.dim
    m = np.zeros((2 * d, 2 * d), dtype=complex)
    m[:d, :d] = np.eye(d)
    m[d:, d:] = gate.matrix
    return Unitary(m)


def kron_gates(*gates: Unitary) -> Unitary:
    """Tensor product with ``gates[0]`` on the lowest qubits."""
    m = np.ones((1, 1), dtype=complex)
    for g in gates:
        m = np.kron(g.matrix, m)
    return Unitary(m)


# ---------------------------------------------------------------- evolution

def _axis(n_qubits: int, qubit: int) -> int:
    return n_qubits - 1 - qubit


def apply_gate(state: StateVector, gate: Unitary, targets: Sequence[int]) -> StateVector:
    n = state.n_qubits
    targets = _check_indices(n, targets, "target")
    m = len(targets)
    if gate.dim != 1 << m:
        raise ValueError(f"gate of dim {gate.dim} cannot act on {m} target(s)")
    g = gate.matrix.reshape((2,) * (2 * m))
    # gate tensor axes run from the most significant local bit down, so the
    # input axes contract against targets[m-1], ..., targets[0]
    psi_axes = [_axis(n, t) for t in reversed(targets)]
    out = np.tensordot(g, state.tensor(), axes=(list(range(m, 2 * m)), psi_axes))
    out = np.moveaxis(out, list(range(m)), psi_axes)
    return StateVector._evolved(out.reshape(-1))


def apply_circuit(state: StateVector, ops) -> StateVector:
    """Apply a sequence of ``(gate, targets)`` pairs."""
    for gate, targets in ops:
        state = apply_gate(state, gate, targets)
    return state


def probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Marginal outcome table over ``qubits``; entry index is little-endian in the given order."""
    n = state.n_qubits
    qubits = _check_indices(n, qubits)
    if not qubits:
        raise ValueError("need at least one qubit")
    p = np.abs(state.tensor()) ** 2
    keep_axes = [_axis(n, q) for q in reversed(qubits)]
    drop = tuple(ax for ax in range(n) if ax not in keep_axes)
    p = p.sum(axis=drop)
    # remaining axes are in ascending axis order; reorder to reversed(qubits)
    order = sorted(keep_axes)
    p = np.transpose(p, [order.index(ax) for ax in keep_axes])
    return p.reshape(-1)


def outcome_probability(state: StateVector, qubit: int, outcome: int) -> float:
    return float(probabilities(state, [qubit])[outcome])


def _project(state: StateVector, qubit: int, outcome: int) -> np.ndarray:
    n = state.n_qubits
    t = np.array(state.tensor())
    idx = [slice(None)] * n
    idx[_axis(n, qubit)] = 1 - outcome
    t[tuple(idx)] = 0.0
    return t.reshape(-1)


def post_select(state: StateVector, qubit: int, outcome: int) -> StateVector:
    """Project ``qubit`` onto ``|outcome>`` and renormalize."""
    (qubit,) = _check_indices(state.n_qubits, [qubit])
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    p = outcome_probability(state, qubit, outcome)
    if p < ATOL:
        raise ImpossibleBranchError(f"qubit {qubit} has probability {p:.3e} of outcome {outcome}")
    return StateVector(_project(state, qubit, outcome) / np.sqrt(p))


def default_rng(seed) -> np.random.Generator:
    """PCG64 generator; the one RNG used by every sampling path."""
    return np.random.Generator(np.random.PCG64(seed))


def measure(state: StateVector, qubit: int, rng: np.random.Generator) -> MeasurementOutcome:
    """Sample one projective Z measurement. Consumes exactly one ``rng.random()`` draw."""
    (qubit,) = _check_indices(state.n_qubits, [qubit])
    p1 = outcome_probability(state, qubit, 1)
    bit = int(rng.random() < p1)
    p = p1 if bit else 1.0 - p1
    return MeasurementOutcome(bit, p, post_select(state, qubit, bit))


def sample_bits(state: StateVector, qubit: int, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized repeat of :func:`measure` on fresh copies of ``state``.

    Draw-for-draw identical to calling ``measure`` ``shots`` times with the same rng.
    """
    (qubit,) = _check_indices(state.n_qubits, [qubit])
    p1 = outcome_probability(state, qubit, 1)
    return (rng.random(shots) < p1).astype(np.int8)


def sample_counts(state: StateVector, qubits: Sequence[int], shots: int, rng: np.random.Generator) -> np.ndarray:
    """Outcome counts of ``shots`` Born-rule samples over ``qubits``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = probabilities(state, qubits)
    return rng.multinomial(shots, p / p.sum())


def sequential_probabilities(state: StateVector, order: Sequence[int]) -> np.ndarray:
    """Joint outcome table from measuring ``order`` one qubit at a time.

    Each step branches exactly on both outcomes via :func:`post_select`, so the
    result is the probability tree of the measurement sequence. Entries are
    indexed little-endian in ``order``.
    """
    order = _check_indices(state.n_qubits, order)
    table = np.zeros(1 << len(order))

    def walk(s: StateVector, depth: int, index: int, weight: float):
        if depth == len(order):
            table[index] += weight
            return
        q = order[depth]
        p = probabilities(s, [q])
        for bit in (0, 1):
            if p[bit] < ATOL:
                continue
            walk(post_select(s, q, bit), depth + 1, index | (bit << depth), weight * p[bit])

    walk(state, 0, 0, 1.0)
    return table


def partial_trace(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (little-endian in the given order)."""
    n = state.n_qubits
    keep = _check_indices(n, keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    keep_axes = [_axis(n, q) for q in reversed(keep)]
    traced = [ax for ax in range(n) if ax not in keep_axes]
    psi = np.transpose(state.tensor(), keep_axes + traced).reshape(1 << len(keep), -1)
    rho = psi @ psi.conj().T
    return DensityMatrix((rho + rho.conj().T) / 2)
