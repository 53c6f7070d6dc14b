"""Exact simulation of quantum-controlled foundational experiments."""
from .core import (
    DensityMatrix,
    ImpossibleBranchError,
    MeasurementOutcome,
    NonUnitaryError,
    StateVector,
    Unitary,
    apply_gate,
    controlled,
    measure,
    partial_trace,
    post_select,
    probabilities,
)

__version__ = "0.1.0"
