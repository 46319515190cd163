"""Worked machines: battery charging, collision models, saturating strokes, Markov chains."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from .bounds import BoundContext, PetrovParams, fundamental_limit, phi, relative_variance
from .errors import (
    DegenerateObservable,
    InfeasibleSaturation,
    IrreversibleEdge,
    TooManyAncillae,
)
from .states import (
    DensityOperator,
    Hamiltonian,
    Observable,
    UnitaryOperator,
    energy,
    evolve_joint,
    gibbs_state,
    random_haar_unitary,
    variance,
)

ZERO_CHARGE_TOL = 1e-12
MAX_ANCILLAE = 12
STATIONARY_TOL = 1e-10


# -- quantum battery ----------------------------------------------------------


@dataclass(frozen=True)
class BatteryReport:
    """Charging stroke of a battery ``E`` (initially thermal) by a charger ``S``.

    ``ratio`` is ``precision / stored_energy**2``; ``relvar`` is
    ``Var[H_E] / E'[H_E]**2`` on the charged state.
    """

    stored_energy: float
    precision: float
    ratio: float
    relvar: float
    bound_rhs: float
    zero_charge: bool

    @property
    def tradeoff_holds(self) -> bool:
        if self.zero_charge or self.stored_energy <= 0:
            return True
        tol = 1e-9 * max(1.0, abs(self.bound_rhs))
        return self.ratio >= self.relvar - tol and self.relvar >= self.bound_rhs - tol


def battery_charge(
    rho_S: DensityOperator, H_E: Hamiltonian, beta: float, U: UnitaryOperator
) -> BatteryReport:
    """Charge a thermal battery with Hamiltonian ``H_E`` through the joint unitary ``U``."""
    H = H_E.shifted()
    gamma = gibbs_state(H, beta)
    _, rho_E_prime, _ = evolve_joint(rho_S, gamma, U)
    e_before = energy(gamma, H)
    e_after = energy(rho_E_prime, H)
    stored = e_after - e_before
    precision = variance(rho_E_prime, H)

    G = Observable(H.data, spectrum=H.spectrum)
    ctx = BoundContext(
        beta=beta,
        d_S=rho_S.dim,
        d_E=H.dim,
        delta_eps=H.bandwidth,
        lambda_min_S=rho_S.lambda_min,
        delta0=G.delta0,
    )
    rhs = fundamental_limit(ctx, PetrovParams(1, 2))
    zero = abs(stored) <= ZERO_CHARGE_TOL
    ratio = math.inf if zero else precision / stored**2
    try:
        relvar = relative_variance(rho_E_prime, G)
    except DegenerateObservable:
        relvar = math.inf
    return BatteryReport(stored, precision, ratio, relvar, rhs, zero)


# -- collision model ----------------------------------------------------------


def bit_count(n_ancillae: int) -> np.ndarray:
    """Number of excited ancillae for every outcome string, ancilla 1 most significant."""
    idx = np.arange(2**n_ancillae)
    return np.array([bin(i).count("1") for i in idx], dtype=float)


def partial_swap(theta: float) -> UnitaryOperator:
    """``cos(theta) I + i sin(theta) SWAP`` on two qubits."""
    swap = np.eye(4)[[0, 2, 1, 3]]
    return UnitaryOperator(math.cos(theta) * np.eye(4) + 1j * math.sin(theta) * swap)


@dataclass
class CollisionConfig:
    """``n_ancillae`` identical thermal qubits with gap ``gap``, visited in order.

    ``unitaries[n]`` acts on ``S (x) A_n``; ``weight`` lists ``g(m)`` for
    every outcome string (default: the number of excited ancillae).
    """

    n_ancillae: int
    gap: float
    beta: float
    unitaries: Sequence[UnitaryOperator]
    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.n_ancillae < 1:
            raise ValueError("need at least one ancilla")
        if self.n_ancillae > MAX_ANCILLAE:
            raise TooManyAncillae(f"{self.n_ancillae} ancillae exceeds the dense limit {MAX_ANCILLAE}")
        if not self.gap > 0 or self.beta < 0:
            raise ValueError("need gap > 0 and beta >= 0")
        if len(self.unitaries) != self.n_ancillae:
            raise ValueError("one interaction unitary per ancilla is required")
        if self.weight is None:
            self.weight = bit_count(self.n_ancillae)
        self.weight = np.asarray(self.weight, dtype=float)
        if self.weight.shape != (2**self.n_ancillae,):
            raise ValueError("weight needs one entry per outcome string")
        if self.weight[0] != 0 or np.any(self.weight < 0):
            raise ValueError("weight must be non-negative with g(0...0) = 0")

    @property
    def d_E(self) -> int:
        return 2**self.n_ancillae

    @property
    def delta_eps(self) -> float:
        return self.n_ancillae * self.gap

    @property
    def excited_population(self) -> float:
        x = math.exp(-self.beta * self.gap)
        return x / (1 + x)

    @property
    def delta0(self) -> int:
        tol = 1e-8 * max(1.0, float(np.max(self.weight)))
        return int(np.sum(self.weight <= tol))


@dataclass(frozen=True)
class CollisionResult:
    probabilities: np.ndarray
    mean: float
    variance: float
    bound_rhs: float

    @property
    def relvar(self) -> float:
        return self.variance / self.mean**2 if self.mean > 0 else math.inf


def collision_bound(
    n_ancillae: int, gap: float, beta: float, d_S: int, lambda_min_S: float, delta0: int = 1
) -> float:
    """Relative-variance floor ``(2^N e^Phi / (delta0 d_S) - 1)^{-1}`` with ``Phi(beta, N gap, lambda_min_S)``."""
    x = 2**n_ancillae * math.exp(phi(beta, n_ancillae * gap, lambda_min_S)) / (delta0 * d_S)
    return 1.0 / (x - 1.0)


def _apply_local(T: np.ndarray, U: np.ndarray, axes: tuple[int, int]) -> np.ndarray:
    # Contract a two-site operator into the given tensor legs, keeping leg order.
    a, b = axes
    d_a, d_b = T.shape[a], T.shape[b]
    U4 = U.reshape(d_a, d_b, d_a, d_b)
    out = np.tensordot(U4, T, axes=([2, 3], [a, b]))
    return np.moveaxis(out, [0, 1], [a, b])


def collision_run(cfg: CollisionConfig, rho_S: DensityOperator) -> CollisionResult:
    """Exact outcome statistics of ``C_N`` after the full sequence of collisions."""
    N, d_S = cfg.n_ancillae, rho_S.dim
    p1 = cfg.excited_population
    anc = np.array([1 - p1, p1])

    # Leg layout: (s, a_1..a_N, s', a_1'..a_N').
    T = np.asarray(rho_S.data)
    for _ in range(N):
        T = np.kron(T, np.diag(anc))
    T = T.reshape((d_S,) + (2,) * N + (d_S,) + (2,) * N)

    for n, U in enumerate(cfg.unitaries, start=1):
        if U.dim != 2 * d_S:
            raise ValueError(f"interaction {n} has dim {U.dim}, expected {2 * d_S}")
        M = U.data
        T = _apply_local(T, M, (0, n))
        T = _apply_local(T, M.conj(), (N + 1, N + 1 + n))

    D = d_S * cfg.d_E
    joint = T.reshape(D, D)
    diag = np.real(np.diagonal(joint)).reshape(d_S, cfg.d_E)
    probs = np.clip(diag.sum(axis=0), 0.0, None)
    probs = probs / probs.sum()

    g = cfg.weight
    mean = float(np.dot(probs, g))
    var = max(float(np.dot(probs, g * g)) - mean * mean, 0.0)
    rhs = collision_bound(N, cfg.gap, cfg.beta, d_S, rho_S.lambda_min, cfg.delta0)
    return CollisionResult(probs, mean, var, rhs)


def collision_trajectories(
    cfg: CollisionConfig, rho_S: DensityOperator, shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Outcome counts from measuring each ancilla right after its collision."""
    d_S = rho_S.dim
    p1 = cfg.excited_population
    anc = np.diag([1 - p1, p1]).astype(complex)
    states = np.broadcast_to(np.asarray(rho_S.data), (shots, d_S, d_S)).copy()
    outcome = np.zeros(shots, dtype=np.int64)
    for U in cfg.unitaries:
        M = U.data
        joint = np.einsum("bij,kl->bikjl", states, anc).reshape(shots, 2 * d_S, 2 * d_S)
        joint = M @ joint @ M.conj().T
        blocks = joint.reshape(shots, d_S, 2, d_S, 2)
        # Conditional system blocks for ancilla outcome 0 and 1.
        cond = np.stack([blocks[:, :, m, :, m] for m in (0, 1)], axis=1)
        p = np.clip(np.real(np.trace(cond, axis1=2, axis2=3)), 0.0, None)
        p_one = p[:, 1] / p.sum(axis=1)
        bit = (rng.random(shots) < p_one).astype(np.int64)
        chosen = cond[np.arange(shots), bit]
        states = chosen / np.real(np.trace(chosen, axis1=1, axis2=2))[:, None, None]
        outcome = 2 * outcome + bit
    return np.bincount(outcome, minlength=cfg.d_E)


def random_interactions(
    n_ancillae: int, d_S: int, rng: np.random.Generator, kind: str = "haar"
) -> list[UnitaryOperator]:
    """Per-step interactions: Haar on ``d_S * 2`` or (qubit system) random partial swaps."""
    if kind == "partial_swap":
        if d_S != 2:
            raise ValueError("partial swaps need a qubit system")
        return [partial_swap(rng.uniform(0, math.pi)) for _ in range(n_ancillae)]
    if kind != "haar":
        raise ValueError(f"unknown interaction kind {kind!r}")
    return [random_haar_unitary(2 * d_S, rng) for _ in range(n_ancillae)]


# -- saturating construction --------------------------------------------------


@dataclass(frozen=True)
class SaturationScenario:
    """Stroke on which the relative-variance limit is tight.

    The environment starts maximally mixed (``beta = 0``), ``U`` permutes
    the ``d_S`` smallest joint eigenvalues onto environment level 0 and
    ``G`` is zero on that level and one elsewhere.
    """

    rho_S: DensityOperator
    H_E: Hamiltonian
    gamma_E: DensityOperator
    U: UnitaryOperator
    G: Observable
    beta: float = 0.0

    def evaluate(
        self,
        *,
        beta: float | None = None,
        U: UnitaryOperator | None = None,
        G: Observable | None = None,
    ) -> tuple[float, float]:
        """``(Var/E^2, limit)`` for this scenario with any ingredient swapped out."""
        beta = self.beta if beta is None else beta
        U = self.U if U is None else U
        G = self.G if G is None else G
        gamma = self.gamma_E if beta == self.beta else gibbs_state(self.H_E, beta)
        _, rho_E_prime, _ = evolve_joint(self.rho_S, gamma, U)
        ctx = BoundContext(
            beta=beta,
            d_S=self.rho_S.dim,
            d_E=self.H_E.dim,
            delta_eps=self.H_E.bandwidth,
            lambda_min_S=self.rho_S.lambda_min,
            delta0=G.delta0,
        )
        return relative_variance(rho_E_prime, G), fundamental_limit(ctx, PetrovParams(1, 2))

    def ratio(self, **kw) -> float:
        lhs, rhs = self.evaluate(**kw)
        return lhs / rhs


def saturating_permutation(populations_S: np.ndarray, d_E: int, level: int = 0) -> UnitaryOperator:
    """Permutation sending the ``d_S`` smallest entries of ``p_S (x) 1/d_E`` onto ``(n, level)``."""
    p = np.asarray(populations_S, dtype=float)
    d_S = len(p)
    joint = np.kron(p, np.full(d_E, 1.0 / d_E))
    order = np.argsort(joint, kind="stable")
    targets = [n * d_E + level for n in range(d_S)]
    rest = [i for i in range(d_S * d_E) if i not in set(targets)]
    dest = targets + rest
    P = np.zeros((d_S * d_E, d_S * d_E))
    P[dest, order] = 1.0
    return UnitaryOperator(P)


def saturation_scenario(
    d_S: int, d_E: int, rho_S_spectrum: Sequence[float] | None = None
) -> SaturationScenario:
    """Build the equality case; ``rho_S`` defaults to ``I/d_S``."""
    if d_S > d_E:
        raise InfeasibleSaturation(f"d_S={d_S} exceeds d_E={d_E}")
    if rho_S_spectrum is None:
        rho_S = DensityOperator.maximally_mixed(d_S)
    else:
        rho_S = DensityOperator.diagonal(rho_S_spectrum)
        if rho_S.dim != d_S:
            raise ValueError("spectrum length must equal d_S")
    # d_E * (degeneracy of the lowest level) >= d_S holds automatically once d_S <= d_E.
    pops = np.real(np.diag(rho_S.data))
    H_E = Hamiltonian(np.diag(np.arange(d_E, dtype=float)))
    gamma = gibbs_state(H_E, 0.0)
    U = saturating_permutation(pops, d_E)
    g = np.ones(d_E)
    g[0] = 0.0
    G = Observable(np.diag(g))
    return SaturationScenario(rho_S, H_E, gamma, U, G)


# -- classical Markov chains --------------------------------------------------


def kappa(R: float) -> float:
    """``ln(R) (R - 1) / (R + 1)``."""
    if R < 1:
        raise ValueError("rate ratio cap is at least 1")
    return math.log(R) * (R - 1) / (R + 1)


@dataclass
class MarkovChain:
    """Continuous-time chain; ``rates[m, n]`` is the jump rate ``n -> m``.

    The diagonal of ``rates`` is ignored. Without an explicit distribution
    the unique stationary one is used.
    """

    rates: np.ndarray
    distribution: np.ndarray | None = None
    stationary: bool = field(default=False, init=False)

    def __post_init__(self):
        W = np.array(self.rates, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 2:
            raise ValueError("rates must be a square matrix with at least two states")
        np.fill_diagonal(W, 0.0)
        if np.any(W < 0):
            raise ValueError("off-diagonal rates must be non-negative")
        self.rates = W
        if self.distribution is None:
            self.distribution = self.steady_state()
            self.stationary = True
        else:
            P = np.asarray(self.distribution, dtype=float)
            if P.shape != (W.shape[0],) or np.any(P < 0) or abs(P.sum() - 1) > 1e-12:
                raise ValueError("distribution must be a probability vector")
            self.distribution = P
            self.stationary = float(np.max(np.abs(self.generator @ P))) <= STATIONARY_TOL

    @property
    def generator(self) -> np.ndarray:
        W = self.rates
        return W - np.diag(W.sum(axis=0))

    def steady_state(self) -> np.ndarray:
        K = null_space(self.generator)
        if K.shape[1] != 1:
            raise ValueError(f"stationary space has dimension {K.shape[1]}, expected 1")
        P = K[:, 0] / K[:, 0].sum()
        return np.clip(P, 0.0, None) / np.clip(P, 0.0, None).sum()

    def detailed_balance_defect(self) -> float:
        P, W = self.distribution, self.rates
        flux = W * P[None, :]
        return float(np.max(np.abs(flux - flux.T)))


@dataclass(frozen=True)
class MarkovReport:
    sigma_rate: float
    activity_rate: float
    ratio_cap: float
    kappa: float
    bound_ok: bool


def markov_rates_report(chain: MarkovChain) -> MarkovReport:
    """Entropy production rate, dynamical activity and the ``kappa(R)`` activity cap."""
    W, P = chain.rates, chain.distribution
    one_way = (W > 0) != (W.T > 0)
    if np.any(one_way):
        raise IrreversibleEdge("rates contain a one-way transition")
    n = W.shape[0]
    sigma = activity = 0.0
    R = 1.0
    for a in range(n):
        for b in range(a + 1, n):
            if W[a, b] == 0:
                continue
            fwd = P[b] * W[a, b]
            bwd = P[a] * W[b, a]
            activity += fwd + bwd
            if fwd > 0 and bwd > 0:
                sigma += (fwd - bwd) * math.log(fwd / bwd)
            R = max(R, W[a, b] / W[b, a], W[b, a] / W[a, b])
    k = kappa(R)
    ok = sigma <= k * activity + 1e-9 * max(1.0, k * activity)
    return MarkovReport(sigma, activity, R, k, ok)


def random_reversible_chain(n: int, rng: np.random.Generator, spread: float = 2.0) -> MarkovChain:
    """Fully connected chain with log-normal rates; every edge runs both ways."""
    W = np.exp(spread * rng.standard_normal((n, n)))
    return MarkovChain(W)


def random_biased_ring(n: int, rng: np.random.Generator) -> MarkovChain:
    """Ring with clockwise rates larger than counter-clockwise ones."""
    W = np.zeros((n, n))
    for i in range(n):
        j = (i + 1) % n
        W[j, i] = rng.uniform(1.0, 3.0)
        W[i, j] = rng.uniform(0.1, 1.0)
    return MarkovChain(W)


def detailed_balance_chain(energies: Sequence[float], rng: np.random.Generator) -> MarkovChain:
    """Random symmetric couplings with Arrhenius-ratio rates (unit temperature)."""
    E = np.asarray(energies, dtype=float)
    n = len(E)
    A = rng.uniform(0.1, 1.0, (n, n))
    A = (A + A.T) / 2
    W = A * np.exp(-(E[:, None] - E[None, :]) / 2)
    return MarkovChain(W)


__all__ = [
    "BatteryReport",
    "CollisionConfig",
    "CollisionResult",
    "MarkovChain",
    "MarkovReport",
    "SaturationScenario",
    "battery_charge",
    "bit_count",
    "collision_bound",
    "collision_run",
    "collision_trajectories",
    "detailed_balance_chain",
    "kappa",
    "markov_rates_report",
    "partial_swap",
    "random_biased_ring",
    "random_interactions",
    "random_reversible_chain",
    "saturating_permutation",
    "saturation_scenario",
]
