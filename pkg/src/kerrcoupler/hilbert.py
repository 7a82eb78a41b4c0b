"""Truncated two-mode Fock space: ladder operators, tensor lifting, basis states.

Basis ordering is fixed package-wide: the composite index of |n_a> ⊗ |n_b>
is k = n_a * dim_b + n_b (mode a outermost). All matrices built here and in
the downstream modules, and all file formats, inherit this convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODE_A = "A"
MODE_B = "B"


@dataclass(frozen=True)
class HilbertSpec:
    """Number of Fock levels kept per mode (levels 0 .. dim-1)."""

    dim_a: int
    dim_b: int

    def __post_init__(self):
        if self.dim_a < 3 or self.dim_b < 3:
            raise ValueError(
                f"need at least 3 Fock levels per mode so |2> exists, "
                f"got dims ({self.dim_a}, {self.dim_b})"
            )

    @property
    def total_dim(self) -> int:
        return self.dim_a * self.dim_b

    def flatten(self, n_a: int, n_b: int) -> int:
        """Composite index of |n_a, n_b>; mode-a index outermost."""
        if not (0 <= n_a < self.dim_a and 0 <= n_b < self.dim_b):
            raise ValueError(f"Fock indices ({n_a}, {n_b}) outside truncation {self}")
        return n_a * self.dim_b + n_b

    def unflatten(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.total_dim:
            raise ValueError(f"composite index {k} outside dimension {self.total_dim}")
        return divmod(k, self.dim_b)


@dataclass(frozen=True)
class OperatorMatrix:
    """A dense complex operator on the full two-mode space, with a label."""

    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> np.ndarray:
        return self.entries.conj().T


@dataclass
class DensityMatrix:
    """State of the two-mode system; Hermitian, unit-trace, PSD up to tolerance."""

    entries: np.ndarray
    spec: HilbertSpec

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.spec.total_dim, self.spec.total_dim):
            raise ValueError(
                f"density matrix shape {m.shape} does not match "
                f"Hilbert dimension {self.spec.total_dim}"
            )
        self.entries = m

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return float(np.sum(np.abs(self.entries) ** 2))

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def validate(self, trace_tol=1e-8, herm_tol=1e-9, psd_tol=1e-9) -> None:
        """Raise ValueError unless the state invariants hold to tolerance."""
        tr = np.trace(self.entries)
        if not abs(tr - 1.0) <= trace_tol:
            raise ValueError(f"trace {tr} deviates from 1 by more than {trace_tol}")
        defect = self.hermiticity_defect()
        if not defect <= herm_tol:
            raise ValueError(f"Hermiticity defect {defect} exceeds {herm_tol}")
        lo = self.min_eigenvalue()
        if not lo >= -psd_tol:
            raise ValueError(f"minimum eigenvalue {lo} below -{psd_tol}")


def annihilation(dim: int) -> np.ndarray:
    """Single-mode annihilation operator: entry (n-1, n) = sqrt(n)."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


def number(dim: int) -> np.ndarray:
    """Photon-number operator, diagonal (0, 1, ..., dim-1)."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def lift(op: np.ndarray, mode: str, spec: HilbertSpec) -> OperatorMatrix:
    """Embed a single-mode operator into the two-mode space.

    mode "A" gives op ⊗ I_b, mode "B" gives I_a ⊗ op, consistent with the
    composite indexing k = n_a * dim_b + n_b.
    """
    op = np.asarray(op, dtype=complex)
    if mode == MODE_A:
        if op.shape != (spec.dim_a, spec.dim_a):
            raise ValueError(f"mode-A operator shape {op.shape} != ({spec.dim_a}, {spec.dim_a})")
        return OperatorMatrix(np.kron(op, np.eye(spec.dim_b)), label="A-lifted")
    if mode == MODE_B:
        if op.shape != (spec.dim_b, spec.dim_b):
            raise ValueError(f"mode-B operator shape {op.shape} != ({spec.dim_b}, {spec.dim_b})")
        return OperatorMatrix(np.kron(np.eye(spec.dim_a), op), label="B-lifted")
    raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")


def basis_state(n_a: int, n_b: int, spec: HilbertSpec) -> tuple[DensityMatrix, np.ndarray]:
    """Pure Fock state |n_a, n_b> as (rank-1 projector, state vector)."""
    k = spec.flatten(n_a, n_b)
    vec = np.zeros(spec.total_dim, dtype=complex)
    vec[k] = 1.0
    return DensityMatrix(np.outer(vec, vec.conj()), spec), vec
