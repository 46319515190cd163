from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy.linalg import logm

from oracles import kl, moment
from qtm import bounds
from qtm.bounds import (
    BoundContext,
    Family,
    PetrovParams,
    achievable_min_lambda,
    check,
    entropy_production,
    fidelity,
    fundamental_limit,
    hellinger_sq,
    hellinger_tur,
    minimize_pg0,
    omega_exponent,
    petrov_lower_bound,
    petrov_ratio,
    phi,
    phi_exponent,
    psi_exponent,
    quantum_relative_entropy,
    salazar_f,
    sigma_cap,
    tanh_inverse,
    von_neumann_entropy,
)
from qtm.errors import DegenerateObservable, DimensionMismatch, Saturated, ValidityViolated
from qtm.states import (
    DensityOperator,
    Hamiltonian,
    Observable,
    UnitaryOperator,
    evolve_joint,
    gibbs_state,
    measurement_distribution,
    random_density,
    random_haar_unitary,
    random_hamiltonian,
    random_observable,
    swap_unitary,
    trial_rng,
)

PLANCK = 6.62607015e-34
BOLTZMANN = 1.380649e-23


def two_point(p0):
    return DensityOperator.diagonal([p0, 1 - p0]), Observable(np.diag([0.0, 1.0]))


# -- Petrov moments -----------------------------------------------------------


def test_petrov_ratio_bernoulli():
    rho, G = two_point(0.25)
    assert petrov_ratio(rho, G, PetrovParams(1, 2)) == pytest.approx(4 / 3, rel=1e-12)


def test_petrov_ratio_constant_observable_is_degenerate():
    G = Observable.shifted(np.eye(3))
    with pytest.raises(DegenerateObservable):
        petrov_ratio(DensityOperator.maximally_mixed(3), G)


def test_petrov_ratio_matches_moment_oracle():
    rng = trial_rng(21, 0)
    p = PetrovParams(1, 3)
    for _ in range(100):
        rho, G = random_density(3, rng), random_observable(3, rng)
        m1, m3 = moment(rho.data, G.data, 1), moment(rho.data, G.data, 3)
        assert petrov_ratio(rho, G, p) == pytest.approx(m3**0.5 / m1**1.5, rel=1e-9)


def test_petrov_ratio_infinite_order():
    rho, G = two_point(0.25)
    assert petrov_ratio(rho, G, PetrovParams(1, math.inf)) == pytest.approx(1 / 0.75)


def test_petrov_params_validation():
    with pytest.raises(ValueError):
        PetrovParams(2, 1)
    with pytest.raises(ValueError):
        PetrovParams(1, 2, b=0.5)
    assert PetrovParams(1, 2).is_relative_variance
    assert PetrovParams(1, math.inf).is_expectation_cap


def test_petrov_lower_bound_examples():
    assert petrov_lower_bound(0.0) == 1.0
    assert petrov_lower_bound(0.25) == pytest.approx(4 / 3)
    assert petrov_lower_bound(0.1) < petrov_lower_bound(0.2)
    with pytest.raises(Saturated):
        petrov_lower_bound(1.0)


def test_petrov_equality_for_two_point_measures():
    rng = trial_rng(22, 0)
    for _ in range(50):
        p0 = float(rng.uniform(0.01, 0.99))
        scale = float(rng.uniform(0.1, 10))
        rho = DensityOperator.diagonal([p0, 1 - p0])
        G = Observable(np.diag([0.0, scale]))
        for p in (PetrovParams(1, 2), PetrovParams(0.5, 3), PetrovParams(1, math.inf)):
            ratio = petrov_ratio(rho, G, p)
            assert ratio == pytest.approx(petrov_lower_bound(bounds.zero_probability(rho, G)), rel=1e-10)


def test_petrov_inequality_sampled():
    rng = trial_rng(23, 0)
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        rho, G = random_density(d, rng), random_observable(d, rng)
        p0 = bounds.zero_probability(rho, G)
        assert petrov_ratio(rho, G) >= petrov_lower_bound(p0) * (1 - 1e-9)


# -- zero-outcome floor -------------------------------------------------------


def test_minimize_pg0_examples():
    assert minimize_pg0(DensityOperator.maximally_mixed(4), 1) == pytest.approx(0.25)
    rho = DensityOperator.diagonal([0.2, 0.3, 0.5])
    assert minimize_pg0(rho, 2) == pytest.approx(0.4)
    assert minimize_pg0(rho, 1) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        minimize_pg0(rho, 4)


def test_minimize_pg0_enumeration_oracle():
    rho = DensityOperator.diagonal([0.2, 0.3, 0.5])
    attained = [
        sum(rho.data[i, i].real for i in pair) for pair in itertools.combinations(range(3), 2)
    ]
    assert min(attained) == pytest.approx(0.5)
    assert min(attained) >= minimize_pg0(rho, 2)


def test_achievable_min_lambda_examples():
    half = DensityOperator.maximally_mixed(2)
    assert achievable_min_lambda(half, half) == pytest.approx(0.5)
    val = achievable_min_lambda(DensityOperator.diagonal([0.1, 0.9]), DensityOperator.diagonal([0.3, 0.7]))
    assert val == pytest.approx(0.10)
    assert val > 2 * 0.1 * 0.3


def test_cooling_floor_under_haar_dynamics():
    rng = trial_rng(24, 0)
    for _ in range(1000):
        d_E = int(rng.integers(2, 5))
        rho_S, rho_E = random_density(2, rng), random_density(d_E, rng)
        _, out, _ = evolve_joint(rho_S, rho_E, random_haar_unitary(2 * d_E, rng))
        floor = achievable_min_lambda(rho_S, rho_E)
        assert out.lambda_min >= floor - 1e-12
        assert floor >= 2 * rho_S.lambda_min * rho_E.lambda_min - 1e-15


# -- exponents and limits -----------------------------------------------------


def test_phi_substitution():
    ctx = BoundContext(beta=math.log(2), d_S=2, d_E=2, delta_eps=1.0, lambda_min_S=0.5)
    assert phi_exponent(ctx) == pytest.approx(2 * math.log(2))


def test_transmon_bandwidth_term():
    expected = PLANCK * 5e9 / (BOLTZMANN * 15e-3)
    value = bounds.photon_energy_ratio(5e9, 15e-3)
    assert value == pytest.approx(expected, rel=1e-12)
    assert abs(value - 16.0) <= 0.1
    assert phi(1.0, value, 0.5) - math.log(2) == pytest.approx(value)


def test_zero_temperature_parameter_case():
    ctx = BoundContext(beta=0.0, d_S=3, d_E=4, delta_eps=2.0, lambda_min_S=1 / 3)
    assert phi_exponent(ctx) == pytest.approx(math.log(3))
    assert omega_exponent(ctx) == pytest.approx(math.log(4))


def test_psi_exponent():
    ctx = BoundContext(beta=2.0, d_S=2, d_E=2, delta_eps=1.0, lambda_min_S=0.5,
                       delta_sigma=0.5, lambda_min_E=0.25)
    assert psi_exponent(ctx) == pytest.approx(math.log(4) + 1.0)
    with pytest.raises(ValueError):
        psi_exponent(BoundContext(beta=1, d_S=2, d_E=2, delta_eps=1, lambda_min_S=0.5))


def test_phi_nesting():
    rng = trial_rng(25, 0)
    for _ in range(200):
        lam = float(rng.uniform(1e-3, 0.5))
        b, de = float(rng.uniform(0, 2)), float(rng.uniform(0, 3))
        assert phi(b, de, 0.5) <= phi(b, de, lam)


def test_context_validation():
    with pytest.raises(ValueError):
        BoundContext(beta=1, d_S=2, d_E=2, delta_eps=1, lambda_min_S=0.6)
    with pytest.raises(ValueError):
        BoundContext(beta=-1, d_S=2, d_E=2, delta_eps=1, lambda_min_S=0.5)


def test_relative_variance_limit_one_third():
    ctx = BoundContext(beta=math.log(2), d_S=2, d_E=2, delta_eps=1.0, lambda_min_S=0.5)
    assert fundamental_limit(ctx, PetrovParams(1, 2)) == pytest.approx(1 / 3, rel=1e-12)
    assert fundamental_limit(ctx, PetrovParams(1, 3)) == pytest.approx(1 / (1 - 0.25))


def test_expectation_cap_form():
    ctx = BoundContext(beta=math.log(2), d_S=2, d_E=2, delta_eps=1.0, lambda_min_S=0.5)
    assert fundamental_limit(ctx, PetrovParams(1, math.inf), lambda_max_G=2.0) == pytest.approx(1.5)


def test_families_and_delta0():
    ctx = BoundContext(beta=0.5, d_S=2, d_E=3, delta_eps=1.0, lambda_min_S=0.3, delta_sigma=0.7,
                       lambda_min_E=0.2, delta0=2)
    q_phi = bounds.zero_probability_floor(ctx, Family.PHI)
    assert q_phi == pytest.approx(2 * (2 / 3) * 0.3 * math.exp(-0.5))
    assert bounds.zero_probability_floor(ctx, Family.PSI) == pytest.approx(2 * 0.2 * math.exp(-0.35))
    assert bounds.zero_probability_floor(ctx, Family.OMEGA) == pytest.approx(2 / 3 * math.exp(-0.85))
    assert fundamental_limit(ctx, PetrovParams(1, 2), Family.PSI) == pytest.approx(
        1 / (math.exp(psi_exponent(ctx)) / 2 - 1)
    )


def test_coherent_family_reduces_at_zero_coherence():
    ctx = BoundContext(beta=0.8, d_S=2, d_E=3, delta_eps=1.3, lambda_min_S=0.2)
    a = fundamental_limit(ctx, PetrovParams(1, 2), Family.COHERENT)
    b = fundamental_limit(ctx, PetrovParams(1, 2), Family.PHI)
    assert abs(a - b) <= 1e-12


def test_coherent_validity_violation():
    ctx = BoundContext(beta=0.0, d_S=2, d_E=2, delta_eps=1.0, lambda_min_S=0.5, coherence=0.6)
    with pytest.raises(ValidityViolated):
        fundamental_limit(ctx, PetrovParams(1, 2), Family.COHERENT)


def test_saturated_floor():
    ctx = BoundContext(beta=0.0, d_S=2, d_E=2, delta_eps=0.0, lambda_min_S=0.5, delta0=2)
    with pytest.raises(Saturated):
        fundamental_limit(ctx)


def test_limits_hold_on_random_strokes():
    rng = trial_rng(26, 0)
    for _ in range(1000):
        d_E = int(rng.choice([2, 3, 4]))
        beta = float(rng.uniform(0, 2))
        rho_S, H = random_density(2, rng), random_hamiltonian(d_E, rng)
        G = random_observable(d_E, rng)
        _, rho_E, _ = evolve_joint(rho_S, gibbs_state(H, beta), random_haar_unitary(2 * d_E, rng))
        ctx = bounds.context_from_states(rho_S, H, beta, G)
        rhs = fundamental_limit(ctx)
        assert bounds.relative_variance(rho_E, G) >= rhs - 1e-9 * max(1, rhs)
        cap = fundamental_limit(ctx, PetrovParams(1, math.inf), lambda_max_G=G.lambda_max)
        assert bounds.expectation(rho_E, G) <= cap + 1e-9 * max(1, cap)


def test_check_direction_and_tolerance():
    assert check("x", 1.0, 1.0 + 1e-10).satisfied
    assert not check("x", 1.0, 1.0 + 1e-8).satisfied
    up = check("x", 2.0, 1.0, upper=True)
    assert up.slack == -1.0 and up.violated
    both = check("x", math.inf, math.inf)
    assert both.skipped and both.status == "skipped"


# -- entropic functionals -----------------------------------------------------


def test_entropy_and_identity_cases():
    assert von_neumann_entropy(DensityOperator.maximally_mixed(4)) == pytest.approx(math.log(4))
    assert von_neumann_entropy(DensityOperator.diagonal([1.0, 0.0])) == 0.0
    rho = random_density(3, trial_rng(27, 0))
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert quantum_relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert hellinger_sq([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert hellinger_sq([1, 0], [0, 1]) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatch):
        hellinger_sq([1.0], [0.5, 0.5])


def test_relative_entropy_commuting_pair():
    rho = DensityOperator.diagonal([2 / 3, 1 / 3])
    sigma = DensityOperator.maximally_mixed(2)
    expected = (2 / 3) * math.log(4 / 3) + (1 / 3) * math.log(2 / 3)
    D = quantum_relative_entropy(rho, sigma)
    assert D == pytest.approx(expected, rel=1e-12)
    assert D == pytest.approx(kl([2 / 3, 1 / 3], [0.5, 0.5]))
    assert abs(D - 0.0566) < 5e-4
    assert math.exp(-D) <= fidelity(rho, sigma)


def test_relative_entropy_matches_logm_oracle():
    rng = trial_rng(28, 0)
    for _ in range(30):
        rho, sigma = random_density(3, rng), random_density(3, rng)
        oracle = np.trace(rho.data @ (logm(rho.data) - logm(sigma.data))).real
        assert quantum_relative_entropy(rho, sigma) == pytest.approx(oracle, abs=1e-9)
        assert math.exp(-quantum_relative_entropy(rho, sigma)) <= fidelity(rho, sigma) + 1e-12


def test_relative_entropy_support_violation_is_infinite():
    rho = DensityOperator.maximally_mixed(2)
    sigma = DensityOperator.diagonal([1.0, 0.0])
    assert quantum_relative_entropy(rho, sigma) == math.inf
    assert quantum_relative_entropy(sigma, rho) == pytest.approx(math.log(2))


def test_fidelity_commuting_pair():
    a, b = DensityOperator.diagonal([0.3, 0.7]), DensityOperator.diagonal([0.6, 0.4])
    assert fidelity(a, b) == pytest.approx((math.sqrt(0.18) + math.sqrt(0.28)) ** 2)


# -- entropy production -------------------------------------------------------


def test_entropy_production_without_dynamics():
    rng = trial_rng(29, 0)
    rho_S, H = random_density(2, rng), random_hamiltonian(3, rng)
    g = gibbs_state(H, 0.7)
    joint, rE, rS = evolve_joint(rho_S, g, UnitaryOperator.identity(6))
    rep = entropy_production(rho_S, rS, rE, g, H, 0.7, joint)
    assert abs(rep.sigma) < 1e-12
    assert abs(rep.sigma_star) < 1e-12
    assert rep.consistent


def test_entropy_production_swap_two_ways():
    rho_S = DensityOperator.diagonal([0.9, 0.1])
    H = Hamiltonian(np.diag([0.0, 1.0]))
    g = gibbs_state(H, 1.0)
    joint, rE, rS = evolve_joint(rho_S, g, swap_unitary(2))
    rep = entropy_production(rho_S, rS, rE, g, H, 1.0, joint)
    assert rep.sigma == pytest.approx(rep.sigma_joint, abs=1e-9)
    assert rep.decomposition_residual <= 1e-9
    # Product output: no correlations, so the cost is the environment's relative entropy.
    assert rep.mutual_info == pytest.approx(0.0, abs=1e-12)
    p = math.exp(-1) / (1 + math.exp(-1))
    assert rep.rel_entropy_E == pytest.approx(kl([0.9, 0.1], [1 - p, p]), rel=1e-10)


def test_entropy_production_random_strokes():
    rng = trial_rng(30, 0)
    for _ in range(300):
        d_E = int(rng.choice([2, 3, 4]))
        beta = float(rng.uniform(0, 2))
        rho_S, H = random_density(2, rng), random_hamiltonian(d_E, rng)
        g = gibbs_state(H, beta)
        joint, rE, rS = evolve_joint(rho_S, g, random_haar_unitary(2 * d_E, rng))
        rep = entropy_production(rho_S, rS, rE, g, H, beta, joint)
        assert rep.consistent
        assert rep.sigma == pytest.approx(rep.sigma_joint, abs=1e-9)
        ctx = BoundContext(beta=beta, d_S=2, d_E=d_E, delta_eps=H.bandwidth, lambda_min_S=rho_S.lambda_min)
        assert rep.sigma <= sigma_cap(ctx) + 1e-9
        assert rep.sigma_star >= -1e-9


# -- uncertainty relations ----------------------------------------------------


def test_hellinger_without_dynamics_diverges():
    rng = trial_rng(31, 0)
    H = random_hamiltonian(3, rng)
    g = gibbs_state(H, 1.0)
    rep = hellinger_tur(g, g, random_observable(3, rng), 0.0)
    assert rep.skipped and math.isinf(rep.lhs) and math.isinf(rep.rhs)


def test_hellinger_relation_and_chain():
    rng = trial_rng(32, 0)
    for _ in range(1000):
        beta = float(rng.uniform(0, 2))
        rho_S, H = random_density(2, rng), random_hamiltonian(3, rng)
        G = random_observable(3, rng)
        g = gibbs_state(H, beta)
        joint, rE, rS = evolve_joint(rho_S, g, random_haar_unitary(6, rng))
        thermo = entropy_production(rho_S, rS, rE, g, H, beta, joint)
        ctx = BoundContext(beta=beta, d_S=2, d_E=3, delta_eps=H.bandwidth, lambda_min_S=rho_S.lambda_min)
        sig = hellinger_tur(rE, g, G, thermo.sigma, "sigma")
        cap = hellinger_tur(rE, g, G, sigma_cap(ctx), "phicap")
        assert sig.satisfied and cap.satisfied
        assert cap.rhs <= sig.rhs
        P = [p for _, p in measurement_distribution(rE, G)]
        Q = [p for _, p in measurement_distribution(g, G)]
        D = quantum_relative_entropy(rE, g)
        F = fidelity(rE, g)
        assert math.exp(-thermo.sigma) <= math.exp(-D) + 1e-12
        assert math.exp(-D) <= F + 1e-12
        assert F <= (1 - hellinger_sq(P, Q)) ** 2 + 1e-12


def test_salazar_round_trip_and_limits():
    for x in (0.1, 1.0, 10.0):
        y = tanh_inverse(x)
        assert y * math.tanh(y / 2) == pytest.approx(x, abs=1e-10)
    assert salazar_f(1e-4) * 1e-4 == pytest.approx(2.0, rel=1e-2)
    assert salazar_f(1) > salazar_f(2) > salazar_f(5)
    with pytest.raises(ValueError):
        salazar_f(0.0)
