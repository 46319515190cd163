"""Moment inequalities, dynamics-independent precision limits and entropic functionals.

The limits here bound the statistics of an observable ``G`` (with
``lambda_min(G) = 0``) measured on an environment after an arbitrary joint
unitary. All of them share the shape ``1 / (1 - q)`` where ``q`` is a lower
bound on the probability of the outcome ``G = 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import DegenerateObservable, DimensionMismatch, Saturated, ValidityViolated
from .linalg import (
    HermitianMatrix,
    kron,
    partial_trace_environment,
    partial_trace_system,
    spectral_function,
)
from .states import (
    DensityOperator,
    Hamiltonian,
    Observable,
    energy,
    expectation,
    measurement_distribution,
    variance,
)

SLACK_RTOL = 1e-9
MOMENT_FLOOR = 1e-12
ENTROPY_CLAMP = 1e-15
SUPPORT_WEIGHT_TOL = 1e-12


class Family(str, enum.Enum):
    PHI = "phi"
    PSI = "psi"
    OMEGA = "omega"
    COHERENT = "coherent"


@dataclass(frozen=True)
class PetrovParams:
    """Moment orders ``0 < r < s`` (``s`` may be ``math.inf``) and threshold ``b = 0``."""

    r: float = 1.0
    s: float = 2.0
    b: float = 0.0

    def __post_init__(self):
        if not (self.r > 0 and self.s > self.r):
            raise ValueError(f"need 0 < r < s, got r={self.r}, s={self.s}")
        if self.b != 0:
            raise ValueError("only b = 0 is supported")

    @property
    def is_relative_variance(self) -> bool:
        return self.r == 1 and self.s == 2

    @property
    def is_expectation_cap(self) -> bool:
        return self.r == 1 and self.s == math.inf


@dataclass(frozen=True)
class BoundContext:
    """Scalar inputs of the precision limits.

    ``delta_eps`` / ``delta_sigma`` are the environment / system bandwidths,
    ``coherence`` the Frobenius norm of the environment's coherent part and
    ``delta0`` the degeneracy of the zero outcome.
    """

    beta: float
    d_S: int
    d_E: int
    delta_eps: float
    lambda_min_S: float
    delta_sigma: float = 0.0
    lambda_min_E: float | None = None
    coherence: float = 0.0
    delta0: int = 1

    def __post_init__(self):
        if self.beta < 0 or self.d_S < 1 or self.d_E < 1 or self.delta0 < 1:
            raise ValueError("beta >= 0, d_S, d_E, delta0 >= 1 required")
        if self.delta_eps < 0 or self.delta_sigma < 0 or self.coherence < 0:
            raise ValueError("bandwidths and coherence must be non-negative")
        if not (0 < self.lambda_min_S <= 1) or self.d_S * self.lambda_min_S > 1 + 1e-12:
            raise ValueError(f"lambda_min_S={self.lambda_min_S} invalid for d_S={self.d_S}")
        if self.lambda_min_E is not None and (
            not (0 < self.lambda_min_E <= 1) or self.d_E * self.lambda_min_E > 1 + 1e-12
        ):
            raise ValueError(f"lambda_min_E={self.lambda_min_E} invalid for d_E={self.d_E}")

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "d_S": self.d_S,
            "d_E": self.d_E,
            "delta_eps": self.delta_eps,
            "delta_sigma": self.delta_sigma,
            "lambda_min_S": self.lambda_min_S,
            "lambda_min_E": self.lambda_min_E,
            "coherence": self.coherence,
            "delta0": self.delta0,
        }


def is_satisfied(slack: float, rhs: float) -> bool:
    return slack >= -SLACK_RTOL * max(1.0, abs(rhs)) if math.isfinite(rhs) else slack >= 0


@dataclass(frozen=True)
class BoundReport:
    """One checked inequality.

    ``slack`` is ``lhs - rhs`` for lower bounds and ``rhs - lhs`` for upper
    bounds, so a non-negative slack always means the bound holds.
    """

    bound_id: str
    lhs: float
    rhs: float
    slack: float
    satisfied: bool
    skipped: bool = False
    invalid: bool = False
    context: BoundContext | None = None
    seed: int | None = None
    trial: int | None = None
    note: str = ""

    @property
    def status(self) -> str:
        if self.invalid:
            return "validity_violated"
        if self.skipped:
            return "skipped"
        return "satisfied" if self.satisfied else "violated"

    @property
    def violated(self) -> bool:
        return not (self.invalid or self.skipped or self.satisfied)


def check(
    bound_id: str,
    lhs: float,
    rhs: float,
    *,
    upper: bool = False,
    context: BoundContext | None = None,
    seed: int | None = None,
    trial: int | None = None,
) -> BoundReport:
    """Compare ``lhs >= rhs`` (or ``lhs <= rhs`` when ``upper``) at the standard tolerance."""
    if math.isinf(lhs) and math.isinf(rhs):
        slack = math.nan
        return BoundReport(bound_id, lhs, rhs, slack, True, skipped=True,
                           context=context, seed=seed, trial=trial, note="both sides infinite")
    slack = (rhs - lhs) if upper else (lhs - rhs)
    return BoundReport(bound_id, lhs, rhs, slack, is_satisfied(slack, rhs),
                       context=context, seed=seed, trial=trial)


def skipped(bound_id: str, note: str, **kw) -> BoundReport:
    return BoundReport(bound_id, math.nan, math.nan, math.nan, False, skipped=True, note=note, **kw)


def invalid(bound_id: str, note: str, **kw) -> BoundReport:
    return BoundReport(bound_id, math.nan, math.nan, math.nan, False, invalid=True, note=note, **kw)


# -- moment inequalities ------------------------------------------------------


def zero_probability(rho: HermitianMatrix, G: Observable) -> float:
    return measurement_distribution(rho, G)[0][1]


def petrov_ratio(rho: HermitianMatrix, G: Observable, p: PetrovParams = PetrovParams()) -> float:
    """``E[G^s]^{r/(s-r)} / E[G^r]^{s/(s-r)}``; for ``s = inf`` this is ``lambda_max^r / E[G^r]``."""
    m_r = expectation(rho, G, p.r)
    if m_r <= MOMENT_FLOOR:
        raise DegenerateObservable(f"E[G^r] = {m_r:.3e} is numerically zero")
    if p.s == math.inf:
        return G.lambda_max**p.r / m_r
    m_s = expectation(rho, G, p.s)
    k = p.s - p.r
    return math.exp((p.r / k) * math.log(m_s) - (p.s / k) * math.log(m_r))


def petrov_lower_bound(p_zero: float) -> float:
    """``1 / (1 - P(G=0))``."""
    if p_zero >= 1 - 1e-12:
        raise Saturated(f"P(G=0) = {p_zero} leaves no room for fluctuations")
    if p_zero < 0:
        raise ValueError("probability must be non-negative")
    return 1.0 / (1.0 - p_zero)


def minimize_pg0(rho_E_prime: DensityOperator, delta0: int) -> float:
    """Analytic lower bound ``delta0 * lambda_min(rho')`` on ``P(G=0)`` over all ``G``."""
    if not 1 <= delta0 <= rho_E_prime.dim:
        raise ValueError(f"delta0={delta0} outside [1, {rho_E_prime.dim}]")
    return delta0 * max(rho_E_prime.lambda_min, 0.0)


def achievable_min_lambda(rho_S: DensityOperator, rho_E: DensityOperator) -> float:
    """Sum of the ``d_S`` smallest products ``a b`` over the spectra of ``rho_S``, ``rho_E``.

    This is the smallest ``lambda_min`` of the reduced environment state
    reachable by any joint unitary.
    """
    products = np.sort(np.outer(rho_S.probabilities, rho_E.probabilities).ravel())
    return float(np.sum(products[: rho_S.dim]))


# -- exponents and limits -----------------------------------------------------


def phi(beta: float, delta_eps: float, lambda_min_S: float) -> float:
    return math.log(1.0 / lambda_min_S) + beta * delta_eps


def photon_energy_ratio(frequency_hz: float, temperature_k: float) -> float:
    """``h nu / (k_B T)``: the bandwidth term ``beta * delta_eps`` of a two-level mode."""
    return constants.h * frequency_hz / (constants.k * temperature_k)


def phi_exponent(ctx: BoundContext) -> float:
    return phi(ctx.beta, ctx.delta_eps, ctx.lambda_min_S)


def psi_exponent(ctx: BoundContext) -> float:
    """``-ln lambda_min(rho_E) + beta * delta_sigma`` (system starts thermal)."""
    if ctx.lambda_min_E is None:
        raise ValueError("psi exponent needs lambda_min_E")
    return -math.log(ctx.lambda_min_E) + ctx.beta * ctx.delta_sigma


def omega_exponent(ctx: BoundContext) -> float:
    """``ln d_E + beta (delta_sigma + delta_eps)`` (both sides start thermal)."""
    return math.log(ctx.d_E) + ctx.beta * (ctx.delta_sigma + ctx.delta_eps)


def zero_probability_floor(ctx: BoundContext, family: Family = Family.PHI) -> float:
    """Lower bound ``q`` on ``P(G=0)`` for the given family, including ``delta0``."""
    family = Family(family)
    if family is Family.PHI:
        base = (ctx.d_S / ctx.d_E) * math.exp(-phi_exponent(ctx))
    elif family is Family.PSI:
        base = math.exp(-psi_exponent(ctx))
    elif family is Family.OMEGA:
        base = math.exp(-omega_exponent(ctx))
    else:
        base = (ctx.d_S / ctx.d_E) * math.exp(-phi_exponent(ctx)) - (
            ctx.d_S * ctx.lambda_min_S * ctx.coherence
        )
        if base <= 0:
            raise ValidityViolated(
                f"coherence {ctx.coherence:.4g} too large: bound argument {base:.3e} <= 0"
            )
    return ctx.delta0 * base


def fundamental_limit(
    ctx: BoundContext,
    p: PetrovParams = PetrovParams(),
    family: Family = Family.PHI,
    lambda_max_G: float | None = None,
) -> float:
    """Right-hand side of the precision limit.

    * generic ``(r, s)``: lower bound ``1/(1-q)`` on the moment ratio;
    * ``(1, 2)``: lower bound ``(1/q - 1)^{-1}`` on ``Var[G]/E[G]^2``;
    * ``(1, inf)`` with ``lambda_max_G``: upper bound ``lambda_max (1 - q)`` on ``E[G]``.
    """
    q = zero_probability_floor(ctx, family)
    if q >= 1:
        raise Saturated(f"zero-outcome floor q = {q} >= 1")
    if p.is_relative_variance:
        return q / (1.0 - q)
    if p.is_expectation_cap and lambda_max_G is not None:
        return lambda_max_G * (1.0 - q)
    return 1.0 / (1.0 - q)


def context_from_states(
    rho_S: DensityOperator,
    H_E: Hamiltonian,
    beta: float,
    G: Observable,
    *,
    coherence: float = 0.0,
    H_S: Hamiltonian | None = None,
    rho_E: DensityOperator | None = None,
) -> BoundContext:
    return BoundContext(
        beta=beta,
        d_S=rho_S.dim,
        d_E=H_E.dim,
        delta_eps=max(H_E.bandwidth, 0.0),
        lambda_min_S=rho_S.lambda_min,
        delta_sigma=max(H_S.bandwidth, 0.0) if H_S is not None else 0.0,
        lambda_min_E=rho_E.lambda_min if rho_E is not None else None,
        coherence=coherence,
        delta0=G.delta0,
    )


def relative_variance(rho: HermitianMatrix, G: Observable) -> float:
    m1 = expectation(rho, G, 1)
    if m1 <= MOMENT_FLOOR:
        raise DegenerateObservable(f"E[G] = {m1:.3e} is numerically zero")
    return variance(rho, G) / (m1 * m1)


# -- entropic functionals -----------------------------------------------------


def _entropy_of(p: np.ndarray) -> float:
    p = p[p > ENTROPY_CLAMP]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """``-Tr[rho ln rho]`` in nats; eigenvalues at or below 1e-15 contribute zero."""
    return _entropy_of(rho.probabilities)


def quantum_relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """``Tr[rho (ln rho - ln sigma)]``; ``math.inf`` when ``supp rho`` is not inside ``supp sigma``."""
    if rho.dim != sigma.dim:
        raise DimensionMismatch("relative entropy of operators of different size")
    s, W = sigma.spectrum
    weights = np.real(np.einsum("ij,ik,kj->j", W.conj(), rho.data, W))
    inside = s > ENTROPY_CLAMP
    if np.any(weights[~inside] > SUPPORT_WEIGHT_TOL):
        return math.inf
    cross = float(np.dot(weights[inside], np.log(s[inside])))
    return -von_neumann_entropy(rho) - cross


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    if rho.dim != sigma.dim:
        raise DimensionMismatch("fidelity of operators of different size")
    root = spectral_function(rho, lambda w: np.sqrt(np.maximum(w, 0.0))).data
    inner = HermitianMatrix((root @ sigma.data @ root + (root @ sigma.data @ root).conj().T) / 2)
    return float(np.sum(np.sqrt(np.maximum(inner.eigenvalues, 0.0))) ** 2)


def hellinger_sq(P1, P2) -> float:
    """Squared Hellinger distance ``(1/2) sum (sqrt P1 - sqrt P2)^2`` of aligned distributions."""
    a = np.asarray(P1, dtype=float)
    b = np.asarray(P2, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch("distributions have different support sizes")
    return float(0.5 * np.sum((np.sqrt(np.maximum(a, 0)) - np.sqrt(np.maximum(b, 0))) ** 2))


def mutual_information(rho_SE: DensityOperator, d_S: int, d_E: int) -> float:
    rho_S = DensityOperator(partial_trace_environment(rho_SE, d_S, d_E))
    rho_E = DensityOperator(partial_trace_system(rho_SE, d_S, d_E))
    return von_neumann_entropy(rho_S) + von_neumann_entropy(rho_E) - von_neumann_entropy(rho_SE)


@dataclass(frozen=True)
class ThermoReport:
    """Entropy bookkeeping of one joint-unitary stroke (all values in nats)."""

    entropy_S_before: float
    entropy_S_after: float
    heat_term: float
    sigma: float
    sigma_star: float | None
    mutual_info: float
    rel_entropy_E: float
    sigma_joint: float | None = field(default=None)

    @property
    def decomposition_residual(self) -> float:
        return abs(self.sigma - (self.mutual_info + self.rel_entropy_E))

    @property
    def consistent(self) -> bool:
        return self.sigma >= -1e-9 and self.decomposition_residual <= 1e-9


def entropy_production(
    rho_S: DensityOperator,
    rho_S_prime: DensityOperator,
    rho_E_prime: DensityOperator,
    gamma_E: DensityOperator,
    H_E: Hamiltonian,
    beta: float,
    rho_SE_prime: DensityOperator | None = None,
) -> ThermoReport:
    """Entropy production of a stroke that started from ``rho_S (x) gamma_E``.

    ``sigma`` uses the system-entropy-plus-heat form. When the joint final
    state is given, the mutual information is taken from it directly and
    the relative-entropy forms ``sigma_joint`` and ``sigma_star`` are filled in.
    """
    d_S, d_E = rho_S.dim, gamma_E.dim
    s_before = von_neumann_entropy(rho_S)
    s_after = von_neumann_entropy(rho_S_prime)
    heat = beta * (energy(rho_E_prime, H_E) - energy(gamma_E, H_E))
    sigma = s_after - s_before + heat

    if rho_SE_prime is not None:
        s_joint = von_neumann_entropy(rho_SE_prime)
    else:
        s_joint = s_before + von_neumann_entropy(gamma_E)
    mi = s_after + von_neumann_entropy(rho_E_prime) - s_joint
    rel_E = quantum_relative_entropy(rho_E_prime, gamma_E)

    sigma_joint = sigma_star = None
    if rho_SE_prime is not None:
        reference = DensityOperator(kron(rho_S_prime, gamma_E))
        if rho_SE_prime.dim != d_S * d_E:
            raise DimensionMismatch("joint state does not match d_S * d_E")
        sigma_joint = quantum_relative_entropy(rho_SE_prime, reference)
        sigma_star = quantum_relative_entropy(reference, rho_SE_prime)
    return ThermoReport(s_before, s_after, heat, sigma, sigma_star, mi, rel_E, sigma_joint)


def sigma_cap(ctx: BoundContext) -> float:
    """``ln d_S + beta * delta_eps``: the most entropy any stroke can produce."""
    return phi(ctx.beta, ctx.delta_eps, 1.0 / ctx.d_S)


# -- uncertainty relations ----------------------------------------------------


def hellinger_tur(
    rho_E_prime: DensityOperator,
    gamma_E: DensityOperator,
    G: Observable,
    cost: float,
    mode: str = "sigma",
    **meta,
) -> BoundReport:
    """``((sd' + sd_gamma) / (E' - E_gamma))^2 >= 1 / (e^x - 1)``.

    ``mode="sigma"`` takes ``x`` as the entropy production; ``mode="phicap"``
    as its dynamics-independent cap ``ln d_S + beta * delta_eps``.
    """
    bound_id = {"sigma": "hellinger_sigma", "phicap": "hellinger_phicap"}[mode]
    shift = expectation(rho_E_prime, G) - expectation(gamma_E, G)
    rhs = math.inf if cost <= 0 else 1.0 / math.expm1(cost)
    if abs(shift) <= 1e-12:
        return BoundReport(bound_id, math.inf, rhs, math.inf, True, skipped=True,
                           note="E' == E_gamma: both sides diverge", **meta)
    spread = math.sqrt(variance(rho_E_prime, G)) + math.sqrt(variance(gamma_E, G))
    lhs = (spread / shift) ** 2
    return check(bound_id, lhs, rhs, **meta)


def _h(x: float) -> float:
    return x * math.tanh(x / 2)


def tanh_inverse(x: float) -> float:
    """Solve ``y tanh(y/2) = x`` for ``y >= 0`` by bisection on ``[0, x + 2]``."""
    if not x > 0:
        raise ValueError("need x > 0")
    lo, hi = 0.0, x + 2.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if _h(mid) < x else (lo, mid)
    return 0.5 * (lo + hi)


def salazar_f(x: float) -> float:
    """Comparison curve ``1 / sinh^2(g(x)/2)``, ``g`` inverting ``y tanh(y/2)``.

    Behaves like ``2/x`` for small ``x``.
    """
    return 1.0 / math.sinh(tanh_inverse(x) / 2) ** 2
