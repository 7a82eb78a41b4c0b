"""Kerr-coupler Hamiltonian and damping/thermal-excitation collapse channels.

Two anharmonic oscillators coupled by a two-photon exchange term and driven
in mode a (hbar = 1, all rates in the same angular-frequency units):

    H = (chi_a/2) a†²a² + (chi_b/2) b†²b² + eps a†²b² + eps* b†²a²
        + alpha a† + alpha* a

Each lossy mode contributes a decay channel sqrt(2*gamma*(nbar+1)) * a and,
for nbar > 0, a thermal excitation channel sqrt(2*gamma*nbar) * a†. This is
the standard trace-preserving Lindblad convention; at nbar = 0 it reduces to
the zero-temperature channels sqrt(2*gamma_a) a, sqrt(2*gamma_b) b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertSpec, OperatorMatrix, annihilation


@dataclass(frozen=True)
class CouplerParams:
    """Physical parameters of the damped coupler."""

    chi_a: float = 25.0
    chi_b: float = 25.0
    epsilon: complex = np.pi / 25.0
    alpha: complex = 0.0
    gamma_a: float = 0.0
    gamma_b: float = 0.0
    nbar_a: float = 0.0
    nbar_b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "chi_a", float(self.chi_a))
        object.__setattr__(self, "chi_b", float(self.chi_b))
        object.__setattr__(self, "epsilon", complex(self.epsilon))
        object.__setattr__(self, "alpha", complex(self.alpha))
        for name in ("gamma_a", "gamma_b", "nbar_a", "nbar_b"):
            v = float(getattr(self, name))
            if v < 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class ModelOperators:
    """Hamiltonian plus labelled collapse operators, ready for integration."""

    hamiltonian: OperatorMatrix
    collapse_ops: list[OperatorMatrix]
    spec: HilbertSpec
    params: CouplerParams


def build_hamiltonian(params: CouplerParams, spec: HilbertSpec) -> OperatorMatrix:
    """Assemble the coupler Hamiltonian on the full two-mode space."""
    a = annihilation(spec.dim_a)
    b = annihilation(spec.dim_b)
    ad, bd = a.conj().T, b.conj().T
    ia, ib = np.eye(spec.dim_a), np.eye(spec.dim_b)

    kerr_a = 0.5 * params.chi_a * (ad @ ad @ a @ a)
    kerr_b = 0.5 * params.chi_b * (bd @ bd @ b @ b)
    a2, b2 = a @ a, b @ b
    ad2, bd2 = ad @ ad, bd @ bd

    h = np.kron(kerr_a, ib) + np.kron(ia, kerr_b)
    h += params.epsilon * np.kron(ad2, b2) + np.conj(params.epsilon) * np.kron(a2, bd2)
    h += params.alpha * np.kron(ad, ib) + np.conj(params.alpha) * np.kron(a, ib)
    return OperatorMatrix(h, label="hamiltonian")


def build_collapse_ops(params: CouplerParams, spec: HilbertSpec) -> list[OperatorMatrix]:
    """Collapse channels with rates absorbed as prefactors; zero channels omitted.

    Order is deterministic: mode-a decay, mode-b decay, mode-a excitation,
    mode-b excitation. The label of each operator names its role.
    """
    a = annihilation(spec.dim_a)
    b = annihilation(spec.dim_b)
    ia, ib = np.eye(spec.dim_a), np.eye(spec.dim_b)
    lifted_a = np.kron(a, ib)
    lifted_b = np.kron(ia, b)

    channels = [
        (np.sqrt(2.0 * params.gamma_a * (params.nbar_a + 1.0)), lifted_a, "decay_a"),
        (np.sqrt(2.0 * params.gamma_b * (params.nbar_b + 1.0)), lifted_b, "decay_b"),
        (np.sqrt(2.0 * params.gamma_a * params.nbar_a), lifted_a.conj().T, "excite_a"),
        (np.sqrt(2.0 * params.gamma_b * params.nbar_b), lifted_b.conj().T, "excite_b"),
    ]
    return [
        OperatorMatrix(pref * op, label=role)
        for pref, op, role in channels
        if pref > 0.0
    ]


def build_model(params: CouplerParams, spec: HilbertSpec) -> ModelOperators:
    return ModelOperators(
        hamiltonian=build_hamiltonian(params, spec),
        collapse_ops=build_collapse_ops(params, spec),
        spec=spec,
        params=params,
    )
