"""Seeded verification suites and their record writers.

Every trial draws its randomness from ``trial_rng(seed, trial)`` alone, so
a single record can be replayed in isolation and parallel runs write the
same bytes as serial ones.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import bounds, machines
from .bounds import BoundReport, Family, PetrovParams, check
from .errors import ConfigError, DegenerateObservable, InfeasibleSaturation, ValidityViolated
from .states import (
    DensityOperator,
    UnitaryOperator,
    coherent_gibbs,
    evolve_joint,
    expectation,
    gibbs_state,
    random_coherence,
    random_density,
    random_haar_unitary,
    random_hamiltonian,
    random_observable,
    trial_rng,
)

EXPERIMENTS = ("verify_bounds", "hellinger", "coherence", "battery", "collision", "saturate", "markov")
DEFAULT_TRIALS = {
    "verify_bounds": 10_000,
    "hellinger": 1_000,
    "coherence": 1_000,
    "battery": 1_000,
    "collision": 100,
    "saturate": 1,
    "markov": 1_000,
}
FIELDS = ("trial", "bound_id", "d_S", "d_E", "beta", "lhs", "rhs", "slack", "satisfied", "seed")
SATURATION_RTOL = 1e-9
MAX_SEED = 2**64 - 1


@dataclass
class ExperimentConfig:
    """Parameters of one suite run.

    ``beta`` is a fixed value or a ``(lo, hi)`` range sampled per trial;
    ``petrov_s`` may be ``math.inf``. ``identity_unitary`` replaces every
    random joint unitary by the identity (debugging aid).
    """

    experiment: str = "verify_bounds"
    trials: int | None = None
    seed: int = 0
    d_S: int = 2
    d_E_choices: tuple[int, ...] = (2, 3, 4)
    beta: float | tuple[float, float] = (0.0, 2.0)
    petrov_r: float = 1.0
    petrov_s: float = 2.0
    output_path: str | None = None
    format: str = "csv"
    identity_unitary: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown value {self.experiment!r}")
        if self.trials is None:
            self.trials = DEFAULT_TRIALS[self.experiment]
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials: must be a positive integer, got {self.trials!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {self.seed!r}")
        if not isinstance(self.d_S, int) or self.d_S < 1:
            raise ConfigError(f"d_S: must be a positive integer, got {self.d_S!r}")
        self.d_E_choices = tuple(self.d_E_choices)
        if not self.d_E_choices or any(not isinstance(d, int) or d < 1 for d in self.d_E_choices):
            raise ConfigError(f"d_E_choices: need positive integers, got {self.d_E_choices!r}")
        if isinstance(self.beta, (list, tuple)):
            if len(self.beta) != 2:
                raise ConfigError("beta: a range needs exactly two endpoints")
            lo, hi = (float(x) for x in self.beta)
            if not (0 <= lo <= hi and math.isfinite(hi)):
                raise ConfigError(f"beta: need 0 <= lo <= hi < inf, got [{lo}, {hi}]")
            self.beta = (lo, hi)
        else:
            b = float(self.beta)
            if not (math.isfinite(b) and b >= 0):
                raise ConfigError(f"beta: must be finite and non-negative, got {self.beta!r}")
            self.beta = b
        try:
            PetrovParams(float(self.petrov_r), float(self.petrov_s))
        except ValueError as exc:
            raise ConfigError(f"petrov_r/petrov_s: {exc}") from exc
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format: must be 'csv' or 'json', got {self.format!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers: must be a positive integer, got {self.workers!r}")

    @property
    def petrov(self) -> PetrovParams:
        return PetrovParams(float(self.petrov_r), float(self.petrov_s))

    def draw_beta(self, rng: np.random.Generator) -> float:
        if isinstance(self.beta, tuple):
            return float(rng.uniform(*self.beta))
        return self.beta

    def metadata(self) -> dict:
        d = asdict(self)
        d["d_E_choices"] = list(self.d_E_choices)
        d["beta"] = list(self.beta) if isinstance(self.beta, tuple) else self.beta
        d["petrov_s"] = _jsonable(float(self.petrov_s))
        d["default_trials"] = DEFAULT_TRIALS[self.experiment]
        return d


@dataclass(frozen=True)
class TrialRecord:
    """One output row; ``satisfied`` is true, false, skipped or validity_violated."""

    trial: int
    bound_id: str
    d_S: int | None
    d_E: int | None
    beta: float | None
    lhs: float
    rhs: float
    slack: float
    satisfied: str
    seed: int

    @property
    def violated(self) -> bool:
        return self.satisfied == "false"


_STATUS = {"satisfied": "true", "violated": "false", "skipped": "skipped", "validity_violated": "validity_violated"}


def _record(rep: BoundReport, trial: int, seed: int, d_S, d_E, beta) -> TrialRecord:
    return TrialRecord(trial, rep.bound_id, d_S, d_E, beta, rep.lhs, rep.rhs, rep.slack,
                       _STATUS[rep.status], seed)


@dataclass
class RunSummary:
    total: int = 0
    satisfied: int = 0
    violations: int = 0
    skipped: int = 0
    invalid: int = 0
    min_slack: float = math.inf
    violating: list[tuple[int, int, str]] = field(default_factory=list)

    def add(self, rec: TrialRecord) -> None:
        self.total += 1
        if rec.satisfied == "true":
            self.satisfied += 1
        elif rec.satisfied == "false":
            self.violations += 1
            self.violating.append((rec.seed, rec.trial, rec.bound_id))
        elif rec.satisfied == "skipped":
            self.skipped += 1
        else:
            self.invalid += 1
        if rec.satisfied in ("true", "false") and math.isfinite(rec.slack):
            self.min_slack = min(self.min_slack, rec.slack)

    @property
    def violating_seeds(self) -> list[int]:
        return sorted({s for s, _, _ in self.violating})

    def by_bound(self, records: Iterable[TrialRecord]) -> dict[str, "RunSummary"]:
        out: dict[str, RunSummary] = {}
        for r in records:
            out.setdefault(r.bound_id, RunSummary()).add(r)
        return out

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "satisfied": self.satisfied,
            "violations": self.violations,
            "skipped": self.skipped,
            "validity_violated": self.invalid,
            "min_slack": _jsonable(self.min_slack),
            "violating": [list(v) for v in self.violating],
        }


# -- suites -------------------------------------------------------------------


def _draw_environment(cfg: ExperimentConfig, rng: np.random.Generator):
    d_E = int(rng.choice(cfg.d_E_choices))
    beta = cfg.draw_beta(rng)
    rho_S = random_density(cfg.d_S, rng)
    H_E = random_hamiltonian(d_E, rng)
    return d_E, beta, rho_S, H_E


def _joint_unitary(cfg: ExperimentConfig, d: int, rng: np.random.Generator) -> UnitaryOperator:
    # Always draw, so the identity debug flag leaves later draws unchanged.
    U = random_haar_unitary(d, rng)
    return UnitaryOperator.identity(d) if cfg.identity_unitary else U


def trial_verify_bounds(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    rng = trial_rng(cfg.seed, trial)
    d_E, beta, rho_S, H_E = _draw_environment(cfg, rng)
    gamma = gibbs_state(H_E, beta)
    U = _joint_unitary(cfg, cfg.d_S * d_E, rng)
    G = random_observable(d_E, rng)
    _, rho_E, _ = evolve_joint(rho_S, gamma, U)
    ctx = bounds.context_from_states(rho_S, H_E, beta, G)
    meta = dict(context=ctx, seed=cfg.seed, trial=trial)
    reps: list[BoundReport] = []

    try:
        lhs = bounds.relative_variance(rho_E, G)
        reps.append(check("relvar_limit", lhs, bounds.fundamental_limit(ctx, PetrovParams(1, 2)), **meta))
    except DegenerateObservable as exc:
        reps.append(bounds.skipped("relvar_limit", str(exc), **meta))

    cap = bounds.fundamental_limit(ctx, PetrovParams(1, math.inf), lambda_max_G=G.lambda_max)
    reps.append(check("expectation_cap", expectation(rho_E, G), cap, upper=True, **meta))

    p_zero = bounds.zero_probability(rho_E, G)
    link_pg0 = bounds.petrov_lower_bound(p_zero)
    link_lmin = bounds.petrov_lower_bound(bounds.minimize_pg0(rho_E, G.delta0))
    link_limit = 1.0 / (1.0 - bounds.zero_probability_floor(ctx))
    try:
        ratio = bounds.petrov_ratio(rho_E, G, cfg.petrov)
        reps.append(check("petrov_ratio", ratio, link_pg0, **meta))
    except DegenerateObservable as exc:
        reps.append(bounds.skipped("petrov_ratio", str(exc), **meta))
    reps.append(check("petrov_zero_mass", link_pg0, link_lmin, **meta))
    reps.append(check("petrov_min_eigenvalue", link_lmin, link_limit, **meta))
    reps.append(check("cooling_floor", rho_E.lambda_min,
                      bounds.achievable_min_lambda(rho_S, gamma), **meta))
    return [_record(r, trial, cfg.seed, cfg.d_S, d_E, beta) for r in reps]


def trial_hellinger(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    rng = trial_rng(cfg.seed, trial)
    d_E, beta, rho_S, H_E = _draw_environment(cfg, rng)
    gamma = gibbs_state(H_E, beta)
    U = _joint_unitary(cfg, cfg.d_S * d_E, rng)
    G = random_observable(d_E, rng)
    joint, rho_E, rho_S_p = evolve_joint(rho_S, gamma, U)
    ctx = bounds.context_from_states(rho_S, H_E, beta, G)
    meta = dict(context=ctx, seed=cfg.seed, trial=trial)

    thermo = bounds.entropy_production(rho_S, rho_S_p, rho_E, gamma, H_E, beta, joint)
    cap = bounds.sigma_cap(ctx)
    sig = bounds.hellinger_tur(rho_E, gamma, G, thermo.sigma, "sigma", **meta)
    phicap = bounds.hellinger_tur(rho_E, gamma, G, cap, "phicap", **meta)
    reps = [
        check("sigma_nonnegative", thermo.sigma, 0.0, **meta),
        check("sigma_decomposition", thermo.decomposition_residual, 0.0, upper=True, **meta),
        check("sigma_cap", thermo.sigma, cap, upper=True, **meta),
        sig,
        phicap,
        check("hellinger_nesting", phicap.rhs, sig.rhs, upper=True, **meta),
    ]
    return [_record(r, trial, cfg.seed, cfg.d_S, d_E, beta) for r in reps]


def trial_coherence(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    rng = trial_rng(cfg.seed, trial)
    d_E, beta, rho_S, H_E = _draw_environment(cfg, rng)
    gamma = gibbs_state(H_E, beta)
    # Frobenius norm below lambda_min(gamma) keeps gamma + chi positive; the
    # scan runs past the validity threshold e^{-beta * bandwidth} / d_E.
    scale = float(rng.uniform(0.0, 1.0)) * gamma.lambda_min * (1 - 1e-9)
    chi = random_coherence(H_E, rng, scale)
    rho_c = coherent_gibbs(H_E, beta, chi)
    U = _joint_unitary(cfg, cfg.d_S * d_E, rng)
    G = random_observable(d_E, rng)
    C = chi.coherence
    ctx = bounds.context_from_states(rho_S, H_E, beta, G, coherence=C)
    meta = dict(context=ctx, seed=cfg.seed, trial=trial)

    reps = [
        check("coherence_floor", rho_c.lambda_min, gamma.lambda_min - C, **meta),
        check("coherence_ceiling", rho_c.lambda_min, gamma.lambda_min, upper=True, **meta),
    ]
    try:
        rhs = bounds.fundamental_limit(ctx, PetrovParams(1, 2), Family.COHERENT)
        _, rho_E, _ = evolve_joint(rho_S, rho_c, U)
        reps.append(check("coherent_limit", bounds.relative_variance(rho_E, G), rhs, **meta))
    except ValidityViolated as exc:
        reps.append(bounds.invalid("coherent_limit", str(exc), **meta))
    except DegenerateObservable as exc:
        reps.append(bounds.skipped("coherent_limit", str(exc), **meta))
    return [_record(r, trial, cfg.seed, cfg.d_S, d_E, beta) for r in reps]


def _inverted_populations(d: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(rng.dirichlet(np.ones(d)))


def trial_battery(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    rng = trial_rng(cfg.seed, trial)
    d_E = int(rng.choice(cfg.d_E_choices))
    beta = cfg.draw_beta(rng)
    rho_S = DensityOperator.diagonal(_inverted_populations(cfg.d_S, rng))
    H_E = random_hamiltonian(d_E, rng)
    U = _joint_unitary(cfg, cfg.d_S * d_E, rng)
    rep = machines.battery_charge(rho_S, H_E, beta, U)
    meta = dict(seed=cfg.seed, trial=trial)
    if rep.stored_energy <= machines.ZERO_CHARGE_TOL:
        note = "no energy stored"
        reps = [bounds.skipped(b, note, **meta) for b in ("battery_tradeoff", "battery_chain")]
    else:
        reps = [
            check("battery_tradeoff", rep.ratio, rep.bound_rhs, **meta),
            check("battery_chain", rep.ratio, rep.relvar, **meta),
        ]
    return [_record(r, trial, cfg.seed, cfg.d_S, d_E, beta) for r in reps]


COLLISION_ANCILLAE = (2, 3, 4)


def trial_collision(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    rng = trial_rng(cfg.seed, trial)
    n = int(rng.choice(COLLISION_ANCILLAE))
    beta = cfg.draw_beta(rng)
    rho_S = random_density(cfg.d_S, rng)
    if cfg.identity_unitary:
        steps = [UnitaryOperator.identity(2 * cfg.d_S)] * n
    else:
        steps = machines.random_interactions(n, cfg.d_S, rng)
    res = machines.collision_run(machines.CollisionConfig(n, 1.0, beta, steps), rho_S)
    meta = dict(seed=cfg.seed, trial=trial)
    if res.mean <= bounds.MOMENT_FLOOR:
        rep = bounds.skipped("collision_limit", "E[g] vanishes", **meta)
    else:
        rep = check("collision_limit", res.relvar, res.bound_rhs, **meta)
    return [_record(rep, trial, cfg.seed, cfg.d_S, 2**n, beta)]


def trial_saturate(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    d_E = cfg.d_E_choices[trial % len(cfg.d_E_choices)]
    try:
        sc = machines.saturation_scenario(cfg.d_S, d_E)
    except InfeasibleSaturation as exc:
        rep = bounds.skipped("saturation", str(exc), seed=cfg.seed, trial=trial)
        return [_record(rep, trial, cfg.seed, cfg.d_S, d_E, 0.0)]
    lhs, rhs = sc.evaluate()
    ok = abs(lhs / rhs - 1.0) <= SATURATION_RTOL
    rep = BoundReport("saturation", lhs, rhs, lhs - rhs, ok, seed=cfg.seed, trial=trial)
    return [_record(rep, trial, cfg.seed, cfg.d_S, d_E, sc.beta)]


MARKOV_STATES = (3, 4, 5, 6)


def trial_markov(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    rng = trial_rng(cfg.seed, trial)
    n = int(rng.choice(MARKOV_STATES))
    chain = machines.random_reversible_chain(n, rng)
    rep = machines.markov_rates_report(chain)
    out = check("activity_cap", rep.sigma_rate, rep.kappa * rep.activity_rate, upper=True,
                seed=cfg.seed, trial=trial)
    return [_record(out, trial, cfg.seed, n, None, None)]


SUITES: dict[str, Callable[[ExperimentConfig, int], list[TrialRecord]]] = {
    "verify_bounds": trial_verify_bounds,
    "hellinger": trial_hellinger,
    "coherence": trial_coherence,
    "battery": trial_battery,
    "collision": trial_collision,
    "saturate": trial_saturate,
    "markov": trial_markov,
}


def _run_chunk(args: tuple[ExperimentConfig, Sequence[int]]) -> list[TrialRecord]:
    cfg, trials = args
    fn = SUITES[cfg.experiment]
    return [rec for t in trials for rec in fn(cfg, t)]


def replay(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    """Re-run a single trial of ``cfg`` in isolation."""
    return SUITES[cfg.experiment](cfg, trial)


def run_experiment(cfg: ExperimentConfig) -> tuple[RunSummary, list[TrialRecord]]:
    """Run every trial and return the summary and records in trial order."""
    trials = range(cfg.trials)
    if cfg.workers > 1 and cfg.trials > 1:
        size = math.ceil(cfg.trials / (4 * cfg.workers))
        chunks = [(cfg, trials[i : i + size]) for i in range(0, cfg.trials, size)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = [r for part in pool.map(_run_chunk, chunks) for r in part]
    else:
        records = _run_chunk((cfg, trials))
    summary = RunSummary()
    for r in records:
        summary.add(r)
    return summary, records


def run_verify_bounds(cfg: ExperimentConfig) -> tuple[RunSummary, list[TrialRecord]]:
    if cfg.experiment != "verify_bounds":
        raise ConfigError("experiment: run_verify_bounds needs experiment='verify_bounds'")
    return run_experiment(cfg)


def run_suite(cfg: ExperimentConfig) -> tuple[RunSummary, list[TrialRecord]]:
    return run_experiment(cfg)


# -- output -------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else _jsonable(x)
    return str(x)


def _plain(rec: TrialRecord) -> dict:
    out = {}
    for k in FIELDS:
        v = getattr(rec, k)
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        out[k] = v
    return out


def format_records(records: Sequence[TrialRecord], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for rec in records:
            row = _plain(rec)
            w.writerow([_cell(row[k]) for k in FIELDS])
        return buf.getvalue()
    if fmt == "json":
        lines = []
        for rec in records:
            row = {k: _jsonable(v) for k, v in _plain(rec).items()}
            lines.append(json.dumps(row, allow_nan=False))
        return "".join(line + "\n" for line in lines)
    raise ConfigError(f"format: unknown value {fmt!r}")


def summary_document(cfg: ExperimentConfig, summary: RunSummary, records: Sequence[TrialRecord]) -> dict:
    return {
        "config": cfg.metadata(),
        "summary": summary.as_dict(),
        "by_bound": {k: v.as_dict() for k, v in sorted(summary.by_bound(records).items())},
    }


def write_outputs(cfg: ExperimentConfig, summary: RunSummary, records: Sequence[TrialRecord]) -> None:
    """Write records to ``cfg.output_path`` and the summary to ``<path>.summary.json``."""
    if cfg.output_path is None:
        raise ConfigError("output_path: not set")
    with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_records(records, cfg.format))
    with open(cfg.output_path + ".summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary_document(cfg, summary, records), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


__all__ = [
    "DEFAULT_TRIALS",
    "EXPERIMENTS",
    "ExperimentConfig",
    "FIELDS",
    "RunSummary",
    "TrialRecord",
    "format_records",
    "replay",
    "run_experiment",
    "run_suite",
    "run_verify_bounds",
    "summary_document",
    "write_outputs",
]
