"""Quantum-controlled delayed-choice interferometer.

Circuit conventions (qubit 0 is the photon, qubit 1 the ancilla):

    ancilla: |0> --Ry(2a)----------------------*----
    photon:  |0> --H------ phase(phi) ---------H----

Hadamards are the beamsplitters, ``phase(phi)`` puts the interferometer phase on
the |1> arm, and the second beamsplitter is controlled by the ancilla. The
interference pattern is the probability of photon outcome 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .core import (
    ATOL,
    DensityMatrix,
    ImpossibleBranchError,
    StateVector,
    Unitary,
    apply_circuit,
    controlled,
    gate_h,
    gate_phase,
    gate_ry,
    gate_x,
    partial_trace,
    post_select,
    probabilities,
    sequential_probabilities,
)

PHOTON = 0
ANCILLA = 1
TWO_PI = 2 * np.pi
DEFAULT_GRID_POINTS = 256


def canonical_phase(phi: float) -> float:
    """Reporting form of a phase angle in [0, 2pi)."""
    return float(np.mod(phi, TWO_PI))


def particle_state(phi: float) -> StateVector:
    return StateVector(np.array([1.0, np.exp(1j * phi)]) / np.sqrt(2))


def wave_state(phi: float) -> StateVector:
    return StateVector(np.exp(1j * phi / 2) * np.array([np.cos(phi / 2), -1j * np.sin(phi / 2)]))


def overlap_pw(phi: float) -> complex:
    """<p|w>; equals cos(phi)/sqrt(2)."""
    return particle_state(phi).overlap(wave_state(phi))


@lru_cache(maxsize=None)
def _controlled_h() -> Unitary:
    return controlled(gate_h())


def qdc_circuit(phi: float, alpha: float) -> list:
    return [
        (gate_ry(2 * alpha), [ANCILLA]),
        (gate_h(), [PHOTON]),
        (gate_phase(phi), [PHOTON]),
        (_controlled_h(), [PHOTON, ANCILLA]),
    ]


def qdc_state(phi: float, alpha: float) -> StateVector:
    """cos(a)|p>|0> + sin(a)|w>|1>, built by running the circuit."""
    return apply_circuit(StateVector.zeros(2), qdc_circuit(phi, alpha))


def qdc_state_closed_form(phi: float, alpha: float) -> StateVector:
    p, w = particle_state(phi), wave_state(phi)
    return StateVector(
        np.cos(alpha) * np.kron([1, 0], p.amplitudes) + np.sin(alpha) * np.kron([0, 1], w.amplitudes)
    )


def intensity(phi, alpha):
    """Photon click probability: cos^2(a)/2 + sin^2(phi/2) sin^2(a). Vectorizes over arrays."""
    return 0.5 * np.cos(alpha) ** 2 + np.sin(phi / 2) ** 2 * np.sin(alpha) ** 2


def visibility_analytic(alpha: float) -> float:
    return float(np.sin(alpha) ** 2)


def phase_grid(n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, TWO_PI, n_points, endpoint=False)


def visibility_numeric(pattern: Callable[[float], float], n_points: int = DEFAULT_GRID_POINTS) -> float:
    """(I_max - I_min) / (I_max + I_min) of ``pattern`` on an ``n_points`` phase grid."""
    if n_points < DEFAULT_GRID_POINTS:
        raise ValueError(f"need at least {DEFAULT_GRID_POINTS} grid points, got {n_points}")
    values = np.array([pattern(phi) for phi in phase_grid(n_points)], dtype=float)
    hi, lo = values.max(), values.min()
    if hi + lo < ATOL:
        raise ValueError("degenerate dark pattern: I_max + I_min vanishes")
    return float((hi - lo) / (hi + lo))


def conditional_pattern(phi: float, alpha: float, ancilla_outcome: int) -> float:
    """Photon click probability given the ancilla outcome.

    Raises ImpossibleBranchError when that ancilla branch cannot occur.
    """
    s = post_select(qdc_state(phi, alpha), ANCILLA, ancilla_outcome)
    return float(probabilities(s, [PHOTON])[1])


def photon_density(phi: float, alpha: float) -> DensityMatrix:
    return partial_trace(qdc_state(phi, alpha), [PHOTON])


@dataclass(frozen=True)
class MorphingPoint:
    phi: float
    alpha: float
    intensity: float


def morphing_sweep(phi_grid: Iterable[float], alpha_grid: Iterable[float]) -> list[MorphingPoint]:
    """One point per (alpha, phi) pair, alpha-major."""
    phis = [float(p) for p in phi_grid]
    alphas = [float(a) for a in alpha_grid]
    if not phis or not alphas:
        raise ValueError("grids must be nonempty")
    return [MorphingPoint(phi, a, float(intensity(phi, a))) for a in alphas for phi in phis]


def joint_table(state: StateVector, order=(PHOTON, ANCILLA)) -> np.ndarray:
    """p(a, b) as a 2x2 array indexed [a, b] (a = photon, b = ancilla)."""
    order = tuple(order)
    if order not in ((PHOTON, ANCILLA), (ANCILLA, PHOTON)):
        raise ValueError(f"order must list photon and ancilla, got {order}")
    # flat index is little-endian in `order`, so reshape puts order[1] on rows
    table = sequential_probabilities(state, order).reshape(2, 2)
    return table.T.copy() if order == (PHOTON, ANCILLA) else table


def classical_control_joint(phi: float, alpha: float) -> np.ndarray:
    """Measure the ancilla first, then insert BS2 only on outcome 1 (classical control)."""
    pre = apply_circuit(StateVector.zeros(2), qdc_circuit(phi, alpha)[:3])
    p_b = probabilities(pre, [ANCILLA])
    table = np.zeros((2, 2))
    for b in (0, 1):
        if p_b[b] < ATOL:
            continue
        s = post_select(pre, ANCILLA, b)
        if b == 1:
            s = apply_circuit(s, [(gate_h(), [PHOTON])])
        table[:, b] = p_b[b] * probabilities(s, [PHOTON])
    return table


@dataclass
class EquivalenceReport:
    phi: float
    alpha: float
    tables: dict
    max_deviation: float
    tolerance: float = ATOL

    @property
    def equivalent(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "alpha": self.alpha,
            "tables": {k: v.tolist() for k, v in self.tables.items()},
            "max_deviation": self.max_deviation,
            "equivalent": self.equivalent,
        }


def _max_spread(tables: dict) -> float:
    ref = next(iter(tables.values()))
    return float(max(np.max(np.abs(t - ref)) for t in tables.values()))


def deferred_measurement_check(phi: float, alpha: float) -> EquivalenceReport:
    """Compare classical control against quantum control measured in either order."""
    s = qdc_state(phi, alpha)
    tables = {
        "classical_control": classical_control_joint(phi, alpha),
        "quantum_photon_first": joint_table(s, (PHOTON, ANCILLA)),
        "quantum_ancilla_first": joint_table(s, (ANCILLA, PHOTON)),
    }
    return EquivalenceReport(phi, alpha, tables, _max_spread(tables))


# ---------------------------------------------------------------- entangled ancilla

# qubit layout for the entanglement-assisted variant
ENT_PHOTON, ENT_CONTROL, ENT_BIAS = 0, 1, 2


def entangled_circuit(phi: float, alpha: float, bias_first: bool = False) -> list:
    """Bell pair on (control, bias); control drives BS2; bias qubit gets Ry(-2a) before readout.

    Reading the bias qubit as 0 then heralds the control qubit in cos(a)|0> + sin(a)|1>.
    """
    pair = [(gate_h(), [ENT_CONTROL]), (controlled(gate_x()), [ENT_BIAS, ENT_CONTROL])]
    mzi = [
        (gate_h(), [ENT_PHOTON]),
        (gate_phase(phi), [ENT_PHOTON]),
        (_controlled_h(), [ENT_PHOTON, ENT_CONTROL]),
    ]
    bias = [(gate_ry(-2 * alpha), [ENT_BIAS])]
    return pair + (bias + mzi if bias_first else mzi + bias)


def entangled_state(phi: float, alpha: float, bias_first: bool = False) -> StateVector:
    return apply_circuit(StateVector.zeros(3), entangled_circuit(phi, alpha, bias_first))


@dataclass
class ExperimentRecord:
    label: str
    joint: np.ndarray  # p(a, b) indexed [a, b]
    conditionals: dict = field(default_factory=dict)  # b -> p(a=1 | b), None when unobservable
    visibilities: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.joint = np.asarray(self.joint, dtype=float)
        if abs(self.joint.sum() - 1.0) > ATOL:
            raise ValueError(f"joint table sums to {self.joint.sum()!r}")
        if not self.conditionals:
            self.conditionals = conditionals_from_joint(self.joint)

    def to_dict(self) -> dict:
        def plain(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, dict):
                return {str(k): plain(x) for k, x in v.items()}
            if isinstance(v, (np.floating, np.bool_)):
                return v.item()
            return v

        return {
            "label": self.label,
            "joint": self.joint.tolist(),
            "conditionals": plain(self.conditionals),
            "visibilities": plain(self.visibilities),
            "checks": plain(self.checks),
            **plain(self.extra),
        }


def conditionals_from_joint(joint: np.ndarray) -> dict:
    """p(a=1 | b) for each ancilla value; None for an unobservable branch."""
    out = {}
    for b in (0, 1):
        pb = joint[:, b].sum()
        out[b] = float(joint[1, b] / pb) if pb > ATOL else None
    return out


def heralded_joint(state: StateVector, herald_outcome: int = 0) -> tuple[np.ndarray, float]:
    """p(a, b | bias qubit = herald_outcome) with b the control qubit, plus the herald probability."""
    p_herald = float(probabilities(state, [ENT_BIAS])[herald_outcome])
    s = post_select(state, ENT_BIAS, herald_outcome)
    flat = probabilities(s, [ENT_PHOTON, ENT_CONTROL])
    return flat.reshape(2, 2).T.copy(), p_herald


def entangled_variant(phi: float, alpha: float) -> ExperimentRecord:
    """Three-qubit entanglement-assisted run compared against the two-qubit experiment.

    The ancilla's bias moves onto the far half of a Bell pair. Conditioning on the
    bias qubit reading 0 reproduces the single-ancilla joint table exactly; the
    1 outcome reproduces it at bias ``alpha + pi/2``.
    """
    s = entangled_state(phi, alpha)
    joint0, p0 = heralded_joint(s, 0)
    joint1, p1 = heralded_joint(s, 1)
    ref0 = joint_table(qdc_state(phi, alpha))
    ref1 = joint_table(qdc_state(phi, alpha + np.pi / 2))
    swapped = heralded_joint(entangled_state(phi, alpha, bias_first=True), 0)[0]
    photon_3q = probabilities(s, [ENT_PHOTON])
    photon_2q = probabilities(qdc_state(phi, alpha), [PHOTON])
    checks = {
        "herald0_matches_qdc": float(np.max(np.abs(joint0 - ref0))),
        "herald1_matches_shifted_bias": float(np.max(np.abs(joint1 - ref1))),
        "bias_order_commutes": float(np.max(np.abs(swapped - joint0))),
    }
    return ExperimentRecord(
        label="entangled",
        joint=joint0,
        checks={k: {"deviation": v, "ok": v <= ATOL} for k, v in checks.items()},
        extra={
            "herald_probabilities": [p0, p1],
            "joint_herald1": joint1,
            "photon_marginal_3q": photon_3q,
            "photon_marginal_2q": photon_2q,
        },
    )


def standard_record(phi: float, alpha: float, order=(PHOTON, ANCILLA)) -> ExperimentRecord:
    joint = joint_table(qdc_state(phi, alpha), order)
    dm = deferred_measurement_check(phi, alpha)
    return ExperimentRecord(
        label="qdc",
        joint=joint,
        checks={"deferred_measurement": {"deviation": dm.max_deviation, "ok": dm.equivalent}},
    )


def visibility_summary(alpha: float, n_points: int = DEFAULT_GRID_POINTS) -> dict:
    """Analytic and grid visibilities, unconditioned and per ancilla branch.

    A branch whose probability is below 1e-12 reports ``None``.
    """
    out = {
        "analytic": visibility_analytic(alpha),
        "unconditioned": visibility_numeric(lambda phi: intensity(phi, alpha), n_points),
    }
    for b, name in ((0, "particle_branch"), (1, "wave_branch")):
        weight = np.cos(alpha) ** 2 if b == 0 else np.sin(alpha) ** 2
        if weight < ATOL:
            out[name] = None
            continue
        try:
            out[name] = visibility_numeric(lambda phi: conditional_pattern(phi, alpha, b), n_points)
        except ImpossibleBranchError:
            out[name] = None
    return out
