"""Exact rearrangements of the divergence between a system and its target.

Every report certifies one algebraic identity or bound for the joint
divergence KL[p(omega) || q(omega)/Z]. A report stores the named terms with
the values their definitions give, a signed coefficient per term, and a
coefficient for ln Z, so a single machine check covers every form:

    sum_k combo[k] * terms[k] + lnz_coeff * ln Z  ==  joint_kl   ("equals")
    ... >= joint_kl, slack reported                ("lower-bounds-joint")

Variables split by role: input variables form the external side x, and all
internal variables (latent states, skills, parameters, actions) form z.
Conditionals such as p(z|x) or q(x_>|x_<) are exact marginal conditionals of
the materialized tables, which is what makes the identities hold to machine
precision on arbitrary systems rather than only on structured families.

Realized values enter two ways. Realized actions and skills are substituted
into the system (their factors become point masses), or treated as evidence
when ``realization="condition"``. Observed past inputs are always evidence.
Evidence keeps the full scope: the actual distribution is collapsed onto the
observed slice and renormalized, so term definitions need no special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import NullEvidenceError, ValidationError
from .systems import (
    ActualSystem,
    Horizon,
    MarginalMirror,
    TargetSpec,
    build_joint,
    build_target,
    intervene,
    target_factor_scope,
)
from .tables import (
    Assignment,
    KLResult,
    Role,
    Table,
    UnnormalizedTable,
    _expand_to_scope,
    _expectation_of_log_ratio,
    entropy,
    expectation_of_log,
    kl,
    log_conditional,
    marginalize,
    reorder,
)

BAYES_TOL = 1e-9


@dataclass(frozen=True)
class Report:
    """One certified rearrangement of the joint divergence.

    ``terms`` holds each named quantity at face value; ``combo`` holds its
    signed coefficient in the reconstruction. ``joint_kl`` is the finite
    part of KL[p || q/Z] on the target's scope. When any contribution had
    actual mass on a zero of its reference, ``divergent`` is set and the
    finite parts exclude those outcomes.
    """

    equation: str
    terms: Mapping[str, float]
    combo: Mapping[str, float]
    log_partition: float
    lnz_coeff: float
    joint_kl: float
    relation: str
    divergent: bool
    extras: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.relation not in ("equals", "lower-bounds-joint"):
            raise ValidationError(f"unknown relation {self.relation!r}")
        if set(self.terms) != set(self.combo):
            raise ValidationError("terms and combo must name the same quantities")
        object.__setattr__(self, "terms", MappingProxyType(dict(self.terms)))
        object.__setattr__(self, "combo", MappingProxyType(dict(self.combo)))
        object.__setattr__(self, "extras", MappingProxyType(dict(self.extras)))

    @property
    def total(self) -> float:
        parts = [self.combo[k] * v for k, v in self.terms.items()]
        parts.append(self.lnz_coeff * self.log_partition)
        return math.fsum(parts)

    @property
    def slack(self) -> float:
        return self.total - self.joint_kl

    def to_dict(self) -> dict:
        return {
            "equation": self.equation,
            "relation": self.relation,
            "terms": dict(self.terms),
            "combo": dict(self.combo),
            "log_partition": self.log_partition,
            "lnz_coeff": self.lnz_coeff,
            "total": self.total,
            "joint_kl": self.joint_kl,
            "slack": self.slack,
            "divergent": self.divergent,
            "extras": dict(self.extras),
        }


def observe(table: Table, evidence: Assignment) -> Table:
    """Condition on evidence while keeping the full scope.

    Off-evidence entries become zero and the remainder renormalizes, so the
    result is the conditional distribution embedded in the original shape.
    """
    keep = np.ones(table.probs.shape, dtype=bool)
    for name, value in evidence.items():
        card = table.variable(name).cardinality
        if not 0 <= value < card:
            raise ValidationError(f"evidence {name}={value} outside 0..{card - 1}")
        sel = np.zeros(card, dtype=bool)
        sel[value] = True
        keep &= _expand_to_scope(sel, (name,), table)
    masked = np.where(keep, table.probs, 0.0)
    mass = masked.sum()
    if mass <= 0.0:
        raise NullEvidenceError(f"evidence {dict(evidence)} has zero mass")
    return Table(table.scope, masked / mass)


def realize(
    system: ActualSystem,
    realized: Assignment | None,
    realization: str = "intervene",
) -> tuple[ActualSystem, dict[str, int]]:
    """Apply realized values, returning the substituted system and evidence.

    Actions and skills are substituted into the system unless
    ``realization="condition"`` demotes them to evidence; observed past
    inputs always become evidence, since observing an exogenous input never
    severs its incoming arrows.
    """
    if realization not in ("intervene", "condition"):
        raise ValidationError(
            f"realization must be 'intervene' or 'condition', got {realization!r}"
        )
    substituted: dict[str, int] = {}
    evidence: dict[str, int] = {}
    for name, value in dict(realized or {}).items():
        role = system.variable(name).role
        if not role.realizable:
            raise ValidationError(
                f"cannot realize {name!r} with role {role.value}"
            )
        if role is Role.PAST_INPUT or realization == "condition":
            evidence[name] = int(value)
        else:
            substituted[name] = int(value)
    return (intervene(system, substituted) if substituted else system), evidence


def _prepare(
    system: ActualSystem,
    target: TargetSpec,
    realized: Assignment | None = None,
    realization: str = "intervene",
) -> tuple[Table, UnnormalizedTable]:
    """Materialize (actual, target) on the target scope, applying realizations."""
    realized_system, evidence = realize(system, realized, realization)
    joint = build_joint(realized_system)
    q = build_target(target, realized_system, joint)
    p = reorder(marginalize(joint, q.names), q.names)
    for name in evidence:
        if name not in p.names:
            raise ValidationError(f"evidence variable {name!r} is outside the target scope")
    if evidence:
        p = observe(p, evidence)
    return p, q


def _split_roles(p: Table) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(input variables, internal variables) of a scope, in scope order."""
    x = tuple(v.name for v in p.scope if v.role.is_input)
    z = tuple(v.name for v in p.scope if not v.role.is_input)
    return x, z


def _log_given(
    table: Table | UnnormalizedTable,
    targets: tuple[str, ...],
    conditions: tuple[str, ...],
) -> np.ndarray:
    """ln m(targets | conditions) over the table's shape; ln 1 when empty."""
    if not targets:
        base = table.probs if isinstance(table, Table) else table.weights
        return np.zeros_like(base)
    return log_conditional(table, tuple(targets), tuple(conditions))


def _term(p: Table, log_a: np.ndarray, log_b: np.ndarray) -> tuple[float, bool]:
    r = _expectation_of_log_ratio(p, log_a, log_b)
    return r.kl_nats, r.divergent


def joint_kl(
    system: ActualSystem,
    target: TargetSpec,
    realized: Assignment | None = None,
    realization: str = "intervene",
) -> KLResult:
    """KL[p || q/Z] on the target's scope, with ln Z reported separately.

    When the target scope is a strict subset of the system's variables, the
    actual distribution is marginalized onto that scope first.
    """
    p, q = _prepare(system, target, realized, realization)
    return kl(p, q)


def fully_matched_target(system: ActualSystem) -> TargetSpec:
    """A target equal to the system's own joint; every divergence vanishes."""
    names = system.names
    return TargetSpec(names, [MarginalMirror(names, ())])


def decompose_latent_side(system: ActualSystem, target: TargetSpec) -> Report:
    """Split the joint divergence through the internal variables.

    joint_kl = E_x KL[p(z|x) || q(z)] - E[ln q(x|z) - ln p(x)]. The second
    term is a variational lower bound on the information the internal
    variables carry about the inputs; its gap to that information is an
    expected conditional divergence.
    """
    p, q = _prepare(system, target)
    x, z = _split_roles(p)
    latent_pref, d1 = _term(p, _log_given(p, z, x), _log_given(q, z, ()))
    info_bound, d2 = _term(p, _log_given(q, x, z), _log_given(p, x, ()))
    ref = kl(p, q)
    return Report(
        equation="info_latent",
        terms={"latent_pref_kl": latent_pref, "info_bound": info_bound},
        combo={"latent_pref_kl": 1.0, "info_bound": -1.0},
        log_partition=ref.log_partition,
        lnz_coeff=0.0,
        joint_kl=ref.kl_nats,
        relation="equals",
        divergent=ref.divergent or d1 or d2,
    )


def decompose_input_side(system: ActualSystem, target: TargetSpec) -> Report:
    """Mirror split through the inputs.

    joint_kl = E_z KL[p(x|z) || q(x)] - E[ln q(z|x) - ln p(z)].
    """
    p, q = _prepare(system, target)
    x, z = _split_roles(p)
    input_pref, d1 = _term(p, _log_given(p, x, z), _log_given(q, x, ()))
    info_bound_latent, d2 = _term(p, _log_given(q, z, x), _log_given(p, z, ()))
    ref = kl(p, q)
    return Report(
        equation="info_input",
        terms={"input_pref_kl": input_pref, "info_bound_latent": info_bound_latent},
        combo={"input_pref_kl": 1.0, "info_bound_latent": -1.0},
        log_partition=ref.log_partition,
        lnz_coeff=0.0,
        joint_kl=ref.kl_nats,
        relation="equals",
        divergent=ref.divergent or d1 or d2,
    )


def energy_entropy(system: ActualSystem, target: TargetSpec) -> Report:
    """joint_kl = E_p[-ln q~] - H[p] + ln Z, the physics-style reading."""
    p, q = _prepare(system, target)
    with np.errstate(divide="ignore"):
        log_raw = np.where(q.weights > 0.0, np.log(np.where(q.weights > 0.0, q.weights, 1.0)), -np.inf)
    cross, diverged = expectation_of_log(p, log_raw)
    ref = kl(p, q)
    return Report(
        equation="energy_entropy",
        terms={"energy": -cross, "entropy": entropy(p)},
        combo={"energy": 1.0, "entropy": -1.0},
        log_partition=ref.log_partition,
        lnz_coeff=1.0,
        joint_kl=ref.kl_nats,
        relation="equals",
        divergent=ref.divergent or diverged,
    )


def expected_free_energy(system: ActualSystem, target: TargetSpec) -> Report:
    """joint_kl = [E[-ln q(x|z)] + E_x KL[p(z|x) || q(z)]] - H[p(x)]."""
    p, q = _prepare(system, target)
    x, z = _split_roles(p)
    reconstruction, d1 = expectation_of_log(p, _log_given(q, x, z))
    latent_pref, d2 = _term(p, _log_given(p, z, x), _log_given(q, z, ()))
    ref = kl(p, q)
    return Report(
        equation="efe",
        terms={"efe": -reconstruction + latent_pref, "input_entropy": entropy(p, x) if x else 0.0},
        combo={"efe": 1.0, "input_entropy": -1.0},
        log_partition=ref.log_partition,
        lnz_coeff=0.0,
        joint_kl=ref.kl_nats,
        relation="equals",
        divergent=ref.divergent or d1 or d2,
    )


def past_future_split(
    system: ActualSystem,
    target: TargetSpec,
    horizon: Horizon,
    realized: Assignment | None = None,
    realization: str = "intervene",
) -> Report:
    """Four-term upper bound on the joint divergence across the time split.

    joint_kl <= E KL[p(z|x_<) || q(z)] - E[ln q(x_<|z) - ln p(x_<)]
             + E KL[p(x_>|x_<,z) || q(x_>|x_<)] - E[ln q(z|x) - ln p(z|x_<)]

    The slack equals E_{p(x_<)} KL[p(z|x_<) || q(z|x_<)], hence it is
    non-negative and vanishes exactly when the target's internal-given-past
    conditional matches the actual one.
    """
    horizon.validate_with(system)
    p, q = _prepare(system, target, realized, realization)
    in_scope = set(p.names)
    past = tuple(n for n in horizon.past_inputs(system) if n in in_scope)
    future = tuple(n for n in horizon.future_inputs(system) if n in in_scope)
    x = past + future
    z = tuple(n for n in p.names if n not in set(x))

    log_p_z_past = _log_given(p, z, past)
    past_latent_pref, d1 = _term(p, log_p_z_past, _log_given(q, z, ()))
    repr_learning, d2 = _term(p, _log_given(q, past, z), _log_given(p, past, ()))
    future_input_pref, d3 = _term(
        p, _log_given(p, future, past + z), _log_given(q, future, past)
    )
    exploration, d4 = _term(p, _log_given(q, z, x), log_p_z_past)
    ref = kl(p, q)
    return Report(
        equation="combined",
        terms={
            "past_latent_pref": past_latent_pref,
            "repr_learning": repr_learning,
            "future_input_pref": future_input_pref,
            "exploration": exploration,
        },
        combo={
            "past_latent_pref": 1.0,
            "repr_learning": -1.0,
            "future_input_pref": 1.0,
            "exploration": -1.0,
        },
        log_partition=ref.log_partition,
        lnz_coeff=0.0,
        joint_kl=ref.kl_nats,
        relation="lower-bounds-joint",
        divergent=ref.divergent or d1 or d2 or d3 or d4,
    )


def bayesian_future_check(
    system: ActualSystem,
    target: TargetSpec,
    horizon: Horizon,
    realized: Assignment | None = None,
) -> Report:
    """Split into a past inference problem and an uncontrolled future term.

    joint_kl = KL[p(x_<, z) || q(x_<, z)] + E KL[p(x_>|x_<) || q(x_>|z)].

    The second term is zero exactly when the actual future given the past
    already follows the target's latent-conditioned future, i.e. when the
    system behaves as a Bayesian filter for the target model. The identity
    needs the filtering structure, which is validated: internal factors may
    condition only on past inputs and other internal variables, the actual
    future factors may not condition on internal variables, and the
    target's future factors may touch only future inputs and internals.
    """
    horizon.validate_with(system)
    if system.by_role(Role.ACTION, Role.SKILL):
        raise ValidationError(
            "the past/future inference split is for passive systems; "
            "found action or skill variables"
        )
    past = set(horizon.past_inputs(system))
    future = set(horizon.future_inputs(system))
    internal = {v.name for v in system.variables if not v.role.is_input}
    for name in internal:
        extra = set(system.factors[name].parents) - past - internal
        if extra:
            raise ValidationError(
                f"internal factor {name!r} conditions on {sorted(extra)}; "
                "only past inputs and internal variables are allowed"
            )
    for name in future:
        bad = set(system.factors[name].parents) & internal
        if bad:
            raise ValidationError(
                f"future input {name!r} conditions on internal {sorted(bad)}; "
                "the actual future may depend on inputs only"
            )
    for f in target.factors:
        fvars = set(target_factor_scope(f, system))
        if fvars & future and not fvars <= future | internal:
            raise ValidationError(
                "target factors over future inputs may touch only future "
                f"inputs and internal variables; offending scope {sorted(fvars)}"
            )

    p, q = _prepare(system, target, realized, "condition")
    past_t = tuple(n for n in p.names if n in past or n in internal)
    fut_t = tuple(n for n in p.names if n in future)
    z = tuple(n for n in p.names if n in internal)
    past_only = tuple(n for n in p.names if n in past)

    past_vi, d1 = _term(p, _log_given(p, past_t, ()), _log_given(q, past_t, ()))
    uncontrolled, d2 = _term(
        p, _log_given(p, fut_t, past_only), _log_given(q, fut_t, z)
    )
    ref = kl(p, q)
    return Report(
        equation="missing_data",
        terms={"past_vi": past_vi, "uncontrolled_future": uncontrolled},
        combo={"past_vi": 1.0, "uncontrolled_future": 1.0},
        log_partition=ref.log_partition,
        lnz_coeff=0.0,
        joint_kl=ref.kl_nats,
        relation="equals",
        divergent=ref.divergent or d1 or d2,
        extras={"bayesian_satisfied": float(not (d2) and uncontrolled < BAYES_TOL)},
    )
