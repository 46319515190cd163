"""Hamiltonians, density operators, observables and random ensembles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, InvalidObservable, NotPositive, NotUnitary
from .linalg import (
    HermitianMatrix,
    as_matrix,
    frobenius_norm,
    kron,
    partial_trace_environment,
    partial_trace_system,
)

TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-12
UNITARY_TOL = 1e-10
GROUPING_RTOL = 1e-8


class Hamiltonian(HermitianMatrix):
    """Hermitian energy operator. ``bandwidth`` is ``lambda_max - lambda_min``."""

    def shifted(self) -> "Hamiltonian":
        """Same operator with the ground energy moved to zero."""
        w, V = self.spectrum
        return Hamiltonian(self.data - w[0] * np.eye(self.dim), spectrum=(w - w[0], V))


class DensityOperator(HermitianMatrix):
    """Unit-trace, positive semidefinite operator (both to 1e-12)."""

    def __init__(self, data, *, spectrum=None):
        super().__init__(data, spectrum=spectrum)
        tr = float(np.trace(self.data).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr!r} differs from 1")
        if self.lambda_min < -POSITIVITY_TOL:
            raise NotPositive(f"minimum eigenvalue {self.lambda_min:.3e} is negative")

    @cached_property
    def probabilities(self) -> np.ndarray:
        """Eigenvalues clamped to ``[0, 1]``, ascending."""
        return np.clip(self.eigenvalues, 0.0, 1.0)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityOperator":
        return cls(np.eye(d) / d, spectrum=(np.full(d, 1.0 / d), np.eye(d, dtype=complex)))

    @classmethod
    def diagonal(cls, populations) -> "DensityOperator":
        p = np.asarray(populations, dtype=float)
        order = np.argsort(p, kind="stable")
        return cls(np.diag(p), spectrum=(p[order], np.eye(len(p), dtype=complex)[:, order]))


class UnitaryOperator:
    """Unitary matrix, ``||U^dagger U - I||_F <= 1e-10``."""

    def __init__(self, data):
        U = np.array(as_matrix(data))
        d = U.shape[0]
        if U.shape != (d, d):
            raise DimensionMismatch(f"unitary must be square, got {U.shape}")
        defect = frobenius_norm(U.conj().T @ U - np.eye(d))
        if defect > UNITARY_TOL:
            raise NotUnitary(f"||U^dagger U - I||_F = {defect:.3e}")
        U.setflags(write=False)
        self.data = U

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @classmethod
    def identity(cls, d: int) -> "UnitaryOperator":
        return cls(np.eye(d))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def __matmul__(self, other: "UnitaryOperator") -> "UnitaryOperator":
        return UnitaryOperator(self.data @ as_matrix(other))


@dataclass(frozen=True)
class EigenGroup:
    value: float
    multiplicity: int
    indices: tuple[int, ...]


class Observable(HermitianMatrix):
    """Measured operator with ``lambda_min(G) = 0``.

    Eigenvalues closer than ``1e-8 * max(1, ||G||_op)`` are grouped into one
    outcome; ``delta0`` is the size of the group holding zero.
    """

    def __init__(self, data, *, spectrum=None):
        super().__init__(data, spectrum=spectrum)
        if abs(self.lambda_min) > POSITIVITY_TOL:
            raise InvalidObservable(
                f"lambda_min(G) = {self.lambda_min:.3e}; shift G by -lambda_min(G) I first"
            )

    @classmethod
    def shifted(cls, G) -> "Observable":
        """Build ``G - lambda_min(G) I`` with an exactly zero bottom eigenvalue."""
        H = G if isinstance(G, HermitianMatrix) else HermitianMatrix(G)
        w, V = H.spectrum
        return cls(H.data - w[0] * np.eye(H.dim), spectrum=(w - w[0], V))

    @cached_property
    def groups(self) -> tuple[EigenGroup, ...]:
        w = self.eigenvalues
        tol = GROUPING_RTOL * max(1.0, float(np.max(np.abs(w))))
        clusters: list[list[int]] = [[0]]
        for i in range(1, len(w)):
            if w[i] - w[i - 1] <= tol:
                clusters[-1].append(i)
            else:
                clusters.append([i])
        out = []
        for n, idx in enumerate(clusters):
            value = 0.0 if n == 0 else float(np.mean(w[idx]))
            out.append(EigenGroup(value, len(idx), tuple(idx)))
        return tuple(out)

    @property
    def delta0(self) -> int:
        return self.groups[0].multiplicity

    @property
    def outcomes(self) -> np.ndarray:
        return np.array([g.value for g in self.groups])

    def projector(self, group: int) -> np.ndarray:
        V = self.eigenvectors[:, list(self.groups[group].indices)]
        return V @ V.conj().T

    @property
    def clamped_eigenvalues(self) -> np.ndarray:
        return np.maximum(self.eigenvalues, 0.0)


@dataclass(frozen=True)
class CoherentPerturbation:
    """Hermitian ``chi`` with zero diagonal in the eigenbasis of ``H_E``.

    ``chi`` is stored in the same (lab) basis as ``H_E``. ``coherence`` is
    its Frobenius norm.
    """

    chi: HermitianMatrix
    hamiltonian: Hamiltonian

    def __post_init__(self):
        if self.chi.dim != self.hamiltonian.dim:
            raise DimensionMismatch("chi and H_E dimensions differ")
        V = self.hamiltonian.eigenvectors
        diag = np.diag(V.conj().T @ self.chi.data @ V)
        if np.max(np.abs(diag), initial=0.0) > 1e-12:
            raise ValueError("chi has non-zero diagonal in the energy eigenbasis")

    @property
    def coherence(self) -> float:
        return frobenius_norm(self.chi)

    @classmethod
    def from_energy_basis(cls, X, H_E: Hamiltonian) -> "CoherentPerturbation":
        """Build from a matrix written in the energy eigenbasis; its diagonal is discarded."""
        X = np.array(as_matrix(X))
        np.fill_diagonal(X, 0.0)
        X = (X + X.conj().T) / 2
        V = H_E.eigenvectors
        chi = V @ X @ V.conj().T
        chi = (chi + chi.conj().T) / 2
        # Remove the O(eps) diagonal left by the basis change.
        residual = np.diag(np.diag(V.conj().T @ chi @ V))
        chi = chi - V @ residual @ V.conj().T
        return cls(HermitianMatrix((chi + chi.conj().T) / 2), H_E)

    @classmethod
    def zero(cls, H_E: Hamiltonian) -> "CoherentPerturbation":
        return cls(HermitianMatrix(np.zeros((H_E.dim, H_E.dim))), H_E)


def gibbs_state(H: Hamiltonian, beta: float) -> DensityOperator:
    """``exp(-beta H) / Z``, computed with the ground energy shifted to zero."""
    if not (math.isfinite(beta) and beta >= 0):
        raise ValueError(f"beta must be finite and non-negative, got {beta!r}")
    w, V = H.spectrum
    p = np.exp(-beta * (w - w[0]))
    p = p / p.sum()
    rho = (V * p) @ V.conj().T
    return DensityOperator((rho + rho.conj().T) / 2, spectrum=(p[::-1], V[:, ::-1]))


def partition_function(H: Hamiltonian, beta: float) -> float:
    return float(np.sum(np.exp(-beta * H.eigenvalues)))


def gibbs_min_eigenvalue_bound(H: Hamiltonian, beta: float) -> float:
    """Dimension/bandwidth lower bound ``e^{-beta*bandwidth} / d`` on ``lambda_min`` of the Gibbs state."""
    return math.exp(-beta * H.bandwidth) / H.dim


def evolve_joint(
    rho_S: DensityOperator, rho_E: DensityOperator, U: UnitaryOperator
) -> tuple[DensityOperator, DensityOperator, DensityOperator]:
    """Apply ``U`` to ``rho_S (x) rho_E``; return ``(rho_SE', rho_E', rho_S')``."""
    d_S, d_E = rho_S.dim, rho_E.dim
    if U.dim != d_S * d_E:
        raise DimensionMismatch(f"U has dim {U.dim}, expected {d_S} * {d_E}")
    joint = U.data @ kron(rho_S, rho_E) @ U.data.conj().T
    joint = (joint + joint.conj().T) / 2
    rho_E_p = partial_trace_system(joint, d_S, d_E)
    rho_S_p = partial_trace_environment(joint, d_S, d_E)
    return DensityOperator(joint), DensityOperator(rho_E_p), DensityOperator(rho_S_p)


def energy(rho: HermitianMatrix, H: HermitianMatrix) -> float:
    """``Tr[rho H]``."""
    if rho.dim != H.dim:
        raise DimensionMismatch("state and operator dimensions differ")
    return float(np.real(np.sum(rho.data * H.data.T)))


def _eigen_weights(rho: HermitianMatrix, G: HermitianMatrix) -> np.ndarray:
    if rho.dim != G.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs observable dim {G.dim}")
    V = G.eigenvectors
    weights = np.real(np.einsum("ij,ik,kj->j", V.conj(), rho.data, V))
    return np.maximum(weights, 0.0)


def expectation(rho: HermitianMatrix, G: HermitianMatrix, k: float = 1) -> float:
    """``Tr[rho G^k]``; ``k = inf`` returns ``lambda_max(G)`` (the ``E[G^s]^{1/s}`` limit)."""
    if rho.dim != G.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs observable dim {G.dim}")
    if k == math.inf:
        return G.lambda_max
    if k <= 0:
        raise ValueError("power must be positive")
    w = G.eigenvalues
    if float(k).is_integer():
        powered = w ** int(k)
    else:
        if w[0] < -POSITIVITY_TOL:
            raise InvalidObservable("non-integer powers need a non-negative observable")
        powered = np.maximum(w, 0.0) ** k
    return float(np.dot(_eigen_weights(rho, G), powered))


def variance(rho: HermitianMatrix, G: HermitianMatrix) -> float:
    m1 = expectation(rho, G, 1)
    m2 = expectation(rho, G, 2)
    v = m2 - m1 * m1
    if v < -1e-12 * max(1.0, m2):
        raise ArithmeticError(f"negative variance {v:.3e}")
    return max(v, 0.0)


def measurement_distribution(rho: HermitianMatrix, G: Observable) -> list[tuple[float, float]]:
    """Outcome probabilities ``Tr[rho Lambda_g]`` in ascending ``g``; the first is ``P(G=0)``."""
    weights = _eigen_weights(rho, G)
    return [(grp.value, float(np.sum(weights[list(grp.indices)]))) for grp in G.groups]


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from ``(master_seed, trial)`` only."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial),))
    return np.random.Generator(np.random.PCG64(seq))


def _ginibre(d: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)


def random_haar_unitary(d: int, rng: np.random.Generator) -> UnitaryOperator:
    """Haar-distributed unitary from the phase-corrected QR of a Ginibre matrix."""
    if d < 1:
        raise ValueError("dimension must be positive")
    Q, R = np.linalg.qr(_ginibre(d, rng))
    diag = np.diag(R)
    return UnitaryOperator(Q * (diag / np.abs(diag)))


def random_density(d: int, rng: np.random.Generator) -> DensityOperator:
    """``X X^dagger / Tr[X X^dagger]`` with ``X`` Ginibre (full rank almost surely)."""
    if d < 1:
        raise ValueError("dimension must be positive")
    X = _ginibre(d, rng)
    rho = X @ X.conj().T
    return DensityOperator(rho / np.trace(rho).real)


def random_hermitian(d: int, rng: np.random.Generator) -> HermitianMatrix:
    X = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianMatrix((X + X.conj().T) / 2)


def random_hamiltonian(d: int, rng: np.random.Generator) -> Hamiltonian:
    return Hamiltonian(random_hermitian(d, rng).data)


def random_observable(d: int, rng: np.random.Generator) -> Observable:
    return Observable.shifted(random_hermitian(d, rng))


def random_coherence(
    H_E: Hamiltonian, rng: np.random.Generator, scale: float = 1.0
) -> CoherentPerturbation:
    """Random zero-diagonal perturbation (energy basis) with Frobenius norm ``scale``."""
    X = random_hermitian(H_E.dim, rng).data.copy()
    np.fill_diagonal(X, 0.0)
    norm = frobenius_norm(X)
    if norm > 0:
        X *= scale / norm
    return CoherentPerturbation.from_energy_basis(X, H_E)


def coherent_gibbs(H_E: Hamiltonian, beta: float, chi: CoherentPerturbation) -> DensityOperator:
    """``gamma_E + chi_E``; raises :class:`NotPositive` if this is not a state."""
    gamma = gibbs_state(H_E, beta)
    if chi.chi.dim != H_E.dim:
        raise DimensionMismatch("chi and H_E dimensions differ")
    return DensityOperator(gamma.data + chi.chi.data)


def swap_unitary(d: int) -> UnitaryOperator:
    """SWAP on ``C^d (x) C^d``."""
    U = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            U[j * d + i, i * d + j] = 1.0
    return UnitaryOperator(U)


def unitary_spectrum_residual(rho: HermitianMatrix, U: UnitaryOperator) -> float:
    """Largest eigenvalue shift of ``U rho U^dagger`` relative to ``rho``."""
    moved = HermitianMatrix(U.data @ rho.data @ U.data.conj().T)
    return float(np.max(np.abs(moved.eigenvalues - rho.eigenvalues)))


__all__ = [
    "CoherentPerturbation",
    "DensityOperator",
    "EigenGroup",
    "Hamiltonian",
    "Observable",
    "UnitaryOperator",
    "coherent_gibbs",
    "energy",
    "evolve_joint",
    "expectation",
    "gibbs_min_eigenvalue_bound",
    "gibbs_state",
    "measurement_distribution",
    "partition_function",
    "random_coherence",
    "random_density",
    "random_hamiltonian",
    "random_haar_unitary",
    "random_hermitian",
    "random_observable",
    "swap_unitary",
    "trial_rng",
    "variance",
]
