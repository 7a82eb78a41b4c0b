"""Two-qubit projection, Wootters concurrence, and Bell-like state fidelities.

The entangled pair lives on the {|0>, |2>} levels of each mode. The two-mode
state is cut down to that 4-dimensional subspace with the projector
(|0><0| + |2><2|) ⊗ (|0><0| + |2><2|); the extracted block is NOT
renormalized by default, so the concurrence of the block is weighted by the
subspace population (concurrence is degree-1 homogeneous in the state).

Qubit basis ordering: (|0,0>, |0,2>, |2,0>, |2,2>).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import DensityMatrix, HilbertSpec

QUBIT_LEVELS = (0, 2)

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)

BELL_LABELS = ("B1", "B2", "B3")


@dataclass
class QubitPairMatrix:
    """4x4 block of the state on the {0,2}x{0,2} levels; weight = its trace."""

    entries: np.ndarray
    weight: float

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"qubit-pair matrix must be 4x4, got {m.shape}")
        self.entries = m


def qubit_indices(spec: HilbertSpec) -> list[int]:
    """Composite indices of |0,0>, |0,2>, |2,0>, |2,2> in the full space."""
    return [spec.flatten(na, nb) for na in QUBIT_LEVELS for nb in QUBIT_LEVELS]


def project_to_qubits(rho: DensityMatrix, normalize: bool = False) -> QubitPairMatrix:
    """Extract the two-qubit block of the state.

    With normalize=False (default) the block keeps its raw trace, recorded
    as `weight`; with normalize=True the block is divided by its trace when
    that trace is positive.
    """
    idx = qubit_indices(rho.spec)
    block = rho.entries[np.ix_(idx, idx)].copy()
    weight = float(np.trace(block).real)
    if normalize and weight > 0.0:
        block = block / weight
    return QubitPairMatrix(block, weight=weight)


def spin_flip(rho_c: QubitPairMatrix | np.ndarray) -> np.ndarray:
    """(sigma_y ⊗ sigma_y) rho* (sigma_y ⊗ sigma_y) in the qubit basis."""
    m = rho_c.entries if isinstance(rho_c, QubitPairMatrix) else np.asarray(rho_c, dtype=complex)
    return _YY @ m.conj() @ _YY


def _psd_sqrt(matrix: np.ndarray, psd_tol: float) -> np.ndarray:
    """Hermitian square root with small negative eigenvalues clamped to 0."""
    vals, vecs = np.linalg.eigh(matrix)
    if vals[0] < -psd_tol:
        raise ValueError(
            f"matrix is not positive semidefinite (min eigenvalue {vals[0]:.3e}); "
            "upstream state is damaged"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def concurrence(rho_c: QubitPairMatrix | np.ndarray, psd_tol: float = 1e-7) -> float:
    """Wootters concurrence of a (possibly unnormalized) two-qubit matrix.

    Works with the Hermitian equivalent sqrt(rho) rho_tilde sqrt(rho), which
    shares the spectrum of rho rho_tilde but has a real nonnegative
    eigensystem. That matrix factors as G G† with G = sqrt(rho) Y conj(sqrt(rho))
    (Y = sigma_y ⊗ sigma_y), so the required square-rooted eigenvalues are the
    singular values of G; computing them directly avoids the sqrt-of-noise
    floor of an eigenvalue route. Returns max(s1 - s2 - s3 - s4, 0) with the
    singular values in decreasing order.
    """
    m = rho_c.entries if isinstance(rho_c, QubitPairMatrix) else np.asarray(rho_c, dtype=complex)
    root = _psd_sqrt(m, psd_tol)
    g = root @ _YY @ root.conj()
    s = np.linalg.svd(g, compute_uv=False)
    return max(0.0, float(s[0] - s[1] - s[2] - s[3]))


def bell_state_qubit(which: str) -> np.ndarray:
    """B1/B2 as unit vectors in the 4-dim qubit basis (B3 leaves the subspace)."""
    if which == "B1":
        return np.array([0.0, 1.0j, 1.0, 0.0]) / np.sqrt(2.0)
    if which == "B2":
        return np.array([0.0, -1.0j, 1.0, 0.0]) / np.sqrt(2.0)
    raise ValueError(f"no qubit-subspace vector for {which!r}; use B1 or B2")


def bell_state_vector(which: str, spec: HilbertSpec) -> np.ndarray:
    """Bell-like state as a unit vector on the full two-mode space.

    B1 = (|2,0> + i|0,2>)/sqrt(2), B2 = (|2,0> - i|0,2>)/sqrt(2),
    B3 = (|2,0> + |1,2>)/sqrt(2).
    """
    vec = np.zeros(spec.total_dim, dtype=complex)
    if which == "B1":
        vec[spec.flatten(2, 0)] = 1.0
        vec[spec.flatten(0, 2)] = 1.0j
    elif which == "B2":
        vec[spec.flatten(2, 0)] = 1.0
        vec[spec.flatten(0, 2)] = -1.0j
    elif which == "B3":
        vec[spec.flatten(2, 0)] = 1.0
        vec[spec.flatten(1, 2)] = 1.0
    else:
        raise ValueError(f"unknown Bell-like state {which!r}; expected one of {BELL_LABELS}")
    return vec / np.sqrt(2.0)


def bell_fidelity(rho: DensityMatrix, which: str) -> float:
    """<B| rho |B> for B in {B1, B2, B3}."""
    v = bell_state_vector(which, rho.spec)
    return float(np.real(v.conj() @ rho.entries @ v))
