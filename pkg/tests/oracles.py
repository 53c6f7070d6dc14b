"""Independent reference computations shared by the tests."""
import numpy as np


def full_operator(gate: np.ndarray, targets, n_qubits: int) -> np.ndarray:
    """Brute-force 2^n matrix of ``gate`` on ``targets`` (little-endian), built entry by entry.

    Independent of the tensordot path in ``apply_gate``; used as an oracle.
    """
    dim = 1 << n_qubits
    m = len(targets)
    op = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        local_in = sum(((col >> t) & 1) << k for k, t in enumerate(targets))
        rest = col
        for t in targets:
            rest &= ~(1 << t)
        for local_out in range(1 << m):
            row = rest
            for k, t in enumerate(targets):
                row |= ((local_out >> k) & 1) << t
            op[row, col] += gate[local_out, local_in]
    return op


def random_unitary(rng, dim):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng, n):
    a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return a / np.linalg.norm(a)
