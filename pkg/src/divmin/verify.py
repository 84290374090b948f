"""Randomized verification of the divergence identities and bounds.

Each named check replays one exact identity, one inequality, or one
cross-implementation agreement over many seeded random instances and
records the worst error observed. A check passes when that worst error
stays within its stated tolerance. Checks are independent of each
other, so the suite fans them out over a small thread pool.

The sweep is deterministic: instances come from counter-based streams
keyed by the case index, never from global random state, so a failure
reported for one seed can be replayed in isolation.
"""

from __future__ import annotations

import math
import os
import time
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import randsys
from .decomp import (
    bayesian_future_check,
    decompose_input_side,
    decompose_latent_side,
    energy_entropy,
    expected_free_energy,
    past_future_split,
)
from .errors import ConfigError
from .objectives import FAMILY_TAGS, Objective, from_preset, make_objective
from .presets import preset
from .systems import ActualSystem, FactorSpec, MarginalMirror, TargetSpec, build_joint
from .tables import (
    Role,
    Variable,
    entropy,
    kl,
    marginalize,
    mutual_information,
    variational_mi_lower_bound,
)

__all__ = ["CheckResult", "SuiteResult", "check_names", "run_suite"]


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named check over its whole case sweep."""

    name: str
    equation: str
    passed: bool
    cases: int
    max_error: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "equation": self.equation,
            "passed": self.passed,
            "cases": self.cases,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class SuiteResult:
    """All check outcomes plus how the sweep was executed."""

    checks: tuple[CheckResult, ...]
    duration_s: float
    threads: int

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        """Only the reproducible parts; timing and thread count are
        execution details and stay off the serialized record."""
        return {
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }


def _identity_on_generic(split) -> Callable[[int, int], tuple[int, float]]:
    def run(seeds: int, draws: int) -> tuple[int, float]:
        worst = 0.0
        for seed in range(seeds):
            system, target, _ = randsys.generic_pair(seed)
            worst = max(worst, abs(split(system, target).slack))
        return seeds, worst

    return run


def _filter_split(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    for seed in range(seeds):
        system, target, horizon = randsys.filter_pair(seed)
        report = bayesian_future_check(system, target, horizon)
        worst = max(
            worst,
            abs(report.slack),
            -min(0.0, report.terms["uncontrolled_future"]),
        )
    return seeds, worst


def _maxent_identity(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    for seed in range(seeds):
        system, options, _ = randsys.control_pair(seed)
        objective = make_objective(
            "maxent_rl", system, options={"rewards": options["rewards"]}
        )
        phi = randsys.rng_for(seed, 30).normal(size=objective.parameters().shape)
        worst = max(worst, abs(objective.report(phi).slack))
    return seeds, worst


def _empowerment_bound(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    for seed in range(seeds):
        objective = make_objective("empowerment", randsys.channel_pair(seed))
        phi = randsys.rng_for(seed, 31).normal(size=objective.parameters().shape)
        report = objective.report(phi)
        bound = -objective.value(phi).total
        worst = max(
            worst,
            abs(report.slack),
            bound - report.extras["exact_mi"],
            report.extras["exact_mi"] - report.extras["mi_cap"],
        )
    return seeds, max(0.0, worst)


def _skill_identity(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    for seed in range(seeds):
        system, options, horizon = randsys.skill_pair(seed)
        objective = make_objective(
            "skill_discovery", system, horizon=horizon, options=options
        )
        phi = randsys.rng_for(seed, 32).normal(size=objective.parameters().shape)
        report = objective.report(phi)
        worst = max(worst, abs(report.slack), abs(report.terms["control"]))
    return seeds, worst


def _time_split_bound(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    for seed in range(seeds):
        system, target, horizon = randsys.generic_pair(seed)
        worst = max(worst, -past_future_split(system, target, horizon).slack)
    return seeds, max(0.0, worst)


def _time_split_tightness(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    for seed in range(seeds):
        system, _, horizon = randsys.generic_pair(seed)
        target = randsys.tight_target(seed, system, horizon)
        worst = max(worst, abs(past_future_split(system, target, horizon).slack))
    return seeds, worst


def _exploration_bound(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    for seed in range(seeds):
        system, horizon = randsys.belief_chain(seed)
        objective = make_objective("info_gain", system, horizon=horizon)
        phi = randsys.rng_for(seed, 33).normal(size=objective.parameters().shape)
        report = objective.report(phi)
        worst = max(worst, -report.extras["info_gain_gap"], -report.slack)
        matched = TargetSpec(system.names, [MarginalMirror(("w",), ("x1", "x2"))])
        tight = make_objective("info_gain", system, target=matched, horizon=horizon)
        tight_phi = randsys.rng_for(seed, 37).normal(size=tight.parameters().shape)
        worst = max(worst, abs(tight.report(tight_phi).extras["info_gain_gap"]))
    return seeds, max(0.0, worst)


def _mi_variational(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    for seed in range(seeds):
        table = randsys.mi_table(seed)
        exact = mutual_information(table, ("u",), ("v",))
        rng = randsys.rng_for(seed, 8)
        guess = np.exp(rng.normal(size=table.probs.shape))
        guess /= guess.sum(axis=1, keepdims=True)
        bound = variational_mi_lower_bound(table, guess, ("v",), ("u",))
        matched = table.probs / table.probs.sum(axis=1, keepdims=True)
        tight = variational_mi_lower_bound(table, matched, ("v",), ("u",))
        worst = max(worst, bound - exact, abs(tight - exact))
    return seeds, max(0.0, worst)


_PRESET_FOR_FAMILY = {
    "joint_kl": "hmm-filter",
    "elbo_bnn": "bnn-toy",
    "amortized_vae": "vae-toy",
    "kl_control": "chain-mdp",
    "empowerment": "dead-action",
    "skill_discovery": "two-room-skills",
    "info_gain": "bandit-infogain",
}


def _family_objective(family: str) -> Objective:
    if family in _PRESET_FOR_FAMILY:
        return from_preset(preset(_PRESET_FOR_FAMILY[family]))
    if family == "map_point_mass":
        source = preset("bnn-toy")
        return make_objective("map_point_mass", source.system, source.target)
    if family == "maxent_rl":
        system, options, _ = randsys.control_pair(0)
        return make_objective(
            "maxent_rl", system, options={"rewards": options["rewards"]}
        )
    raise ConfigError(f"no verification instance for family {family!r}")


def _certificate_error(objective: Objective, phi: np.ndarray) -> float:
    """Worst disagreement between the engine evaluation and the report.

    Term names shared by both sides must carry the same value; totals must
    agree whenever the family claims they coincide; the report's own
    relation to the joint divergence must hold as stated.
    """
    evaluation = objective.value_and_gradient(phi).evaluation
    report = objective.report(phi)
    err = 0.0
    for name, value in evaluation.terms.items():
        if name in report.terms:
            err = max(err, abs(value - report.terms[name]))
    if objective.total_matches_report:
        err = max(err, abs(evaluation.total - report.total))
    if report.relation == "equals":
        err = max(err, abs(report.slack))
    else:
        err = max(err, -report.slack)
    return max(0.0, err)


def _certificate_check(family: str) -> Callable[[int, int], tuple[int, float]]:
    def run(seeds: int, draws: int) -> tuple[int, float]:
        objective = _family_objective(family)
        shape = objective.parameters().shape
        worst = 0.0
        for index in range(draws):
            phi = randsys.rng_for(1000 + index, 9).normal(size=shape)
            worst = max(worst, _certificate_error(objective, phi))
        return draws, worst

    return run


def _score_residual(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    cases = 0
    repeats = max(1, draws // 4)
    for family in FAMILY_TAGS:
        objective = _family_objective(family)
        shape = objective.parameters().shape
        for index in range(repeats):
            phi = randsys.rng_for(2000 + index, 10).normal(size=shape)
            worst = max(worst, objective.value_and_gradient(phi).score_residual)
            cases += 1
    return cases, worst


def _maxent_reduction(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    cases = min(seeds, 20)
    for seed in range(cases):
        system, options, _ = randsys.control_pair(seed)
        rewards = {"rewards": options["rewards"]}
        maxent = make_objective("maxent_rl", system, options=rewards)
        control = make_objective(
            "kl_control", system, options=dict(rewards, mode="kl-control")
        )
        phi = randsys.rng_for(seed, 34).normal(size=maxent.parameters().shape)
        worst = max(worst, abs(maxent.value(phi).total - control.value(phi).total))
    return cases, worst


def _reward_noise_invariance(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    cases = min(seeds, 20)
    for seed in range(cases):
        system, options, _ = randsys.control_pair(seed)
        opts = {"rewards": options["rewards"], "mode": "expected-reward"}
        base = make_objective("kl_control", system, options=opts)
        rng = randsys.rng_for(seed, 35)
        noise = np.exp(rng.normal(size=(3, 2)))
        noise /= noise.sum(axis=-1, keepdims=True)
        extended = ActualSystem(
            [system.variable(name) for name in system.names]
            + [Variable("x4", 2, Role.FUTURE_INPUT)],
            [system.factors[name] for name in system.names]
            + [FactorSpec.fixed("x4", ("x3",), noise)],
        )
        bigger = make_objective("kl_control", extended, options=opts)
        phi = randsys.rng_for(seed, 36).normal(size=base.parameters().shape)
        worst = max(worst, abs(base.value(phi).total - bigger.value(phi).total))
    return cases, worst


def _probability_core(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    cases = min(seeds, 50)
    for seed in range(cases):
        system, _, _ = randsys.generic_pair(seed)
        joint = build_joint(system)
        worst = max(worst, abs(float(joint.probs.sum()) - 1.0))
        part = marginalize(joint, ("x1", "z2"))
        worst = max(worst, abs(float(part.probs.sum()) - 1.0))
        h_all = entropy(joint)
        h_a = entropy(joint, ("x1", "z1"))
        h_b = entropy(joint, ("z2", "x2"))
        worst = max(worst, h_all - h_a - h_b)
        worst = max(worst, -h_a, h_a - math.log(4.0))
        worst = max(worst, abs(kl(joint, joint).value))
        mi = mutual_information(joint, ("x1", "z1"), ("z2", "x2"))
        worst = max(worst, -mi, abs((h_a + h_b - h_all) - mi))
    return cases, max(0.0, worst)


def _belief_telescope(seeds: int, draws: int) -> tuple[int, float]:
    worst = 0.0
    cases = min(seeds, 50)
    for seed in range(cases):
        system, horizon = randsys.belief_chain(seed)
        joint = build_joint(system)
        total_gain = mutual_information(joint, ("w",), ("x1", "x2"))
        first = mutual_information(joint, ("w",), ("x1",))
        probs = joint.probs
        posterior = probs / probs.sum(axis=0, keepdims=True)
        prior_step = probs.sum(axis=2)
        prior_step = prior_step / prior_step.sum(axis=0, keepdims=True)
        second = float(
            np.sum(probs * (np.log(posterior) - np.log(prior_step)[:, :, None]))
        )
        worst = max(worst, abs(first + second - total_gain), -second)
        matched = TargetSpec(system.names, [MarginalMirror(("w",), ("x1", "x2"))])
        objective = make_objective("info_gain", system, target=matched, horizon=horizon)
        report = objective.report(objective.parameters())
        worst = max(worst, abs(report.terms["info_gain"] - total_gain))
    return cases, max(0.0, worst)


_IDENTITY_TOL = 1e-9


def _checks() -> tuple[tuple[str, str, float, Callable[[int, int], tuple[int, float]]], ...]:
    entries: list[tuple[str, str, float, Callable[[int, int], tuple[int, float]]]] = [
        ("latent_side_identity", "info_latent", _IDENTITY_TOL, _identity_on_generic(decompose_latent_side)),
        ("input_side_identity", "info_input", _IDENTITY_TOL, _identity_on_generic(decompose_input_side)),
        ("free_energy_identity", "efe", _IDENTITY_TOL, _identity_on_generic(expected_free_energy)),
        ("energy_entropy_identity", "energy_entropy", _IDENTITY_TOL, _identity_on_generic(energy_entropy)),
        ("filter_split_identity", "missing_data", _IDENTITY_TOL, _filter_split),
        ("maxent_policy_identity", "maxentrl", _IDENTITY_TOL, _maxent_identity),
        ("empowerment_bound", "empowerment", _IDENTITY_TOL, _empowerment_bound),
        ("skill_separation_identity", "skills", _IDENTITY_TOL, _skill_identity),
        ("time_split_bound", "combined", 1e-10, _time_split_bound),
        ("time_split_tightness", "combined", _IDENTITY_TOL, _time_split_tightness),
        ("exploration_bound", "infogain", 1e-10, _exploration_bound),
        ("mi_variational_bound", "varmi", 1e-10, _mi_variational),
    ]
    for family, tag in FAMILY_TAGS.items():
        entries.append((f"certificate_{family}", tag, _IDENTITY_TOL, _certificate_check(family)))
    entries.extend(
        [
            ("score_residual", "score", 1e-10, _score_residual),
            ("maxent_uniform_reduction", "maxentrl", 1e-12, _maxent_reduction),
            ("reward_noise_invariance", "control", 1e-12, _reward_noise_invariance),
            ("probability_core", "core", _IDENTITY_TOL, _probability_core),
            ("belief_update_telescope", "infogain", _IDENTITY_TOL, _belief_telescope),
        ]
    )
    return tuple(entries)


def check_names() -> tuple[str, ...]:
    """Names of every check the suite can run, in execution order."""
    return tuple(name for name, _, _, _ in _checks())


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("DIVMIN_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError("DIVMIN_THREADS must be an integer") from None
        else:
            threads = min(4, os.cpu_count() or 1)
    if threads < 1:
        raise ConfigError("threads must be a positive integer")
    return threads


def run_suite(
    seeds: int = 100,
    draws: int = 20,
    threads: int | None = None,
    corrupt: bool = False,
    only: Iterable[str] | None = None,
    tol_scale: float = 1.0,
) -> SuiteResult:
    """Run the named checks and collect their worst-case errors.

    ``seeds`` sizes the per-check instance sweeps and ``draws`` the random
    parameter draws for the certificate checks. ``corrupt`` injects a
    deliberate error into the first identity check so the failure path of
    the reporting machinery can itself be exercised. ``only`` restricts
    the run to the given check names, and ``tol_scale`` multiplies every
    check tolerance, for loosening (or tightening) the whole suite at once.
    """
    if seeds < 1:
        raise ConfigError("seeds must be a positive integer")
    if draws < 1:
        raise ConfigError("draws must be a positive integer")
    if not tol_scale > 0.0:
        raise ConfigError("tol_scale must be a positive number")
    threads = _resolve_threads(threads)

    entries = _checks()
    if only is not None:
        wanted = set(only)
        unknown = wanted - {name for name, _, _, _ in entries}
        if unknown:
            raise ConfigError(f"unknown checks: {sorted(unknown)}")
        entries = tuple(entry for entry in entries if entry[0] in wanted)

    start = time.perf_counter()

    def run_one(entry) -> CheckResult:
        name, equation, tolerance, fn = entry
        tolerance = tolerance * tol_scale
        cases, error = fn(seeds, draws)
        if corrupt and name == "latent_side_identity":
            error += 1e-3
        return CheckResult(
            name=name,
            equation=equation,
            passed=bool(error <= tolerance),
            cases=cases,
            max_error=float(error),
            tolerance=tolerance,
        )

    if threads == 1 or len(entries) == 1:
        results = [run_one(entry) for entry in entries]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, entries))
    return SuiteResult(
        checks=tuple(results),
        duration_s=time.perf_counter() - start,
        threads=threads,
    )
