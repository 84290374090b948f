"""Exact probability tables over small discrete outcome spaces.

Everything downstream (decompositions, objectives, gradients) reduces to a
handful of operations on dense tables: marginalization, conditioning,
entropies, Kullback-Leibler divergences, and mutual information. Tables are
immutable, live in linear probability space, and enumerate at most ``2**22``
joint outcomes. All information quantities are in nats; the convention
``0 * ln 0 = 0`` applies throughout.

A :class:`Table` is a normalized distribution. An :class:`UnnormalizedTable`
carries non-negative weights and caches its log partition function ``ln Z``;
divergences against it are computed against ``weights / Z`` with ``ln Z``
reported alongside. A divergence is *divergent* when the normalized side
puts mass where the reference has none; this is reported as a flag on
:class:`KLResult` together with the finite part of the sum, never as a bare
floating-point infinity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, NullEvidenceError, ValidationError

CAPACITY_LIMIT = 2**22

NORMALIZATION_TOL = 1e-12


class Role(str, enum.Enum):
    """What a variable means to the agent; drives decompositions and realizability."""

    PAST_INPUT = "past-input"
    FUTURE_INPUT = "future-input"
    ACTION = "action"
    SKILL = "skill"
    LATENT_STATE = "latent-state"
    PARAMETER = "parameter"

    @property
    def is_input(self) -> bool:
        return self in (Role.PAST_INPUT, Role.FUTURE_INPUT)

    @property
    def is_latent(self) -> bool:
        return not self.is_input

    @property
    def realizable(self) -> bool:
        """Whether a value of this variable may be realized by intervention."""
        return self in (Role.ACTION, Role.SKILL, Role.PAST_INPUT)


@dataclass(frozen=True)
class Variable:
    """A named categorical variable with a fixed outcome count and a role."""

    name: str
    cardinality: int
    role: Role

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("variable name must be non-empty")
        if self.cardinality < 1:
            raise ValidationError(
                f"variable {self.name!r} needs cardinality >= 1, got {self.cardinality}"
            )
        if not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role(self.role))


# An assignment binds variable names to outcome indices. Plain mappings are
# accepted everywhere; validation happens against the scope of the table or
# system the assignment is used with.
Assignment = Mapping[str, int]


def _as_probs(values: np.ndarray | Sequence, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValidationError(f"array shape {arr.shape} does not match scope shape {shape}")
    if arr.size > CAPACITY_LIMIT:
        raise CapacityError(
            f"outcome space of size {arr.size} exceeds the cap of {CAPACITY_LIMIT}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError("probabilities must be finite")
    if np.any(arr < 0.0):
        raise ValidationError("probabilities must be non-negative")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _check_scope(scope: Sequence[Variable]) -> tuple[Variable, ...]:
    scope = tuple(scope)
    if not scope:
        raise ValidationError("scope must contain at least one variable")
    names = [v.name for v in scope]
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate variable names in scope: {names}")
    return scope


class Table:
    """An exact joint distribution over the product space of its scope.

    ``probs`` is indexed by one axis per scope variable, in scope order.
    """

    __slots__ = ("scope", "probs", "_index")

    def __init__(self, scope: Sequence[Variable], probs: np.ndarray | Sequence) -> None:
        self.scope = _check_scope(scope)
        shape = tuple(v.cardinality for v in self.scope)
        arr = _as_probs(probs, shape)
        total = float(arr.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        self.probs = arr
        self._index = {v.name: i for i, v in enumerate(self.scope)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.scope)

    def axis(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError(f"variable {name!r} not in scope {self.names}") from None

    def variable(self, name: str) -> Variable:
        return self.scope[self.axis(name)]

    def prob(self, assignment: Assignment) -> float:
        """Probability of a full assignment."""
        idx = _full_index(self, assignment)
        return float(self.probs[idx])

    def __repr__(self) -> str:
        return f"Table(scope={self.names}, shape={self.probs.shape})"


class UnnormalizedTable:
    """Non-negative weights over a product space, with a cached ``ln Z``."""

    __slots__ = ("scope", "weights", "log_partition", "_index")

    def __init__(self, scope: Sequence[Variable], weights: np.ndarray | Sequence) -> None:
        self.scope = _check_scope(scope)
        shape = tuple(v.cardinality for v in self.scope)
        arr = _as_probs(weights, shape)
        total = float(arr.sum())
        if total <= 0.0:
            raise ValidationError("target weights must have positive total mass")
        self.weights = arr
        self.log_partition = math.log(total)
        self._index = {v.name: i for i, v in enumerate(self.scope)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.scope)

    def axis(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError(f"variable {name!r} not in scope {self.names}") from None

    def normalized(self) -> Table:
        return Table(self.scope, self.weights / self.weights.sum())

    def __repr__(self) -> str:
        return f"UnnormalizedTable(scope={self.names}, lnZ={self.log_partition:.6g})"


@dataclass(frozen=True)
class KLResult:
    """KL divergence against a possibly unnormalized reference.

    ``kl_nats`` is KL(p || q / Z); ``log_partition`` is ln Z of the reference
    (zero for a normalized one). When ``divergent`` is set, p has support
    where the reference has none and ``kl_nats`` holds the finite part of
    the sum so identity checks can still run on it.
    """

    kl_nats: float
    log_partition: float
    divergent: bool = False

    @property
    def value(self) -> float:
        return math.inf if self.divergent else self.kl_nats


def _validate_subset(table: Table | UnnormalizedTable, names: Iterable[str]) -> tuple[str, ...]:
    names = tuple(names)
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate names in subset: {names}")
    for n in names:
        table.axis(n)
    return names


def _full_index(table: Table | UnnormalizedTable, assignment: Assignment) -> tuple[int, ...]:
    if set(assignment) != set(table.names):
        raise ValidationError(
            f"assignment keys {sorted(assignment)} must equal scope {sorted(table.names)}"
        )
    idx = []
    for v in table.scope:
        k = int(assignment[v.name])
        if not 0 <= k < v.cardinality:
            raise ValidationError(
                f"assignment {v.name}={k} out of range for cardinality {v.cardinality}"
            )
        idx.append(k)
    return tuple(idx)


def marginalize(table: Table, keep: Iterable[str]) -> Table:
    """Sum out everything except ``keep``; result scope keeps the original order."""
    keep = _validate_subset(table, keep)
    if not keep:
        raise ValidationError("keep must name at least one variable")
    drop_axes = tuple(i for i, v in enumerate(table.scope) if v.name not in keep)
    marg = table.probs.sum(axis=drop_axes) if drop_axes else table.probs
    new_scope = tuple(v for v in table.scope if v.name in keep)
    return Table(new_scope, marg)


def reorder(table: Table, names: Iterable[str]) -> Table:
    """The same distribution with its scope permuted into ``names`` order."""
    names = tuple(names)
    if sorted(names) != sorted(table.names):
        raise ValidationError(
            f"reorder needs a permutation of {table.names}, got {names}"
        )
    if names == table.names:
        return table
    perm = tuple(table.axis(n) for n in names)
    scope = tuple(table.variable(n) for n in names)
    return Table(scope, np.transpose(table.probs, perm))


def condition(table: Table, evidence: Assignment) -> Table:
    """Condition on ``evidence`` and drop the bound variables from the scope."""
    if not evidence:
        raise ValidationError("evidence must bind at least one variable")
    _validate_subset(table, evidence.keys())
    sl: list[object] = [slice(None)] * len(table.scope)
    for name, k in evidence.items():
        v = table.variable(name)
        k = int(k)
        if not 0 <= k < v.cardinality:
            raise ValidationError(
                f"evidence {name}={k} out of range for cardinality {v.cardinality}"
            )
        sl[table.axis(name)] = k
    if len(evidence) == len(table.scope):
        raise ValidationError("cannot condition on the entire scope")
    slab = table.probs[tuple(sl)]
    mass = float(slab.sum())
    if mass <= 0.0:
        raise NullEvidenceError(f"evidence {dict(evidence)} has probability zero")
    new_scope = tuple(v for v in table.scope if v.name not in evidence)
    return Table(new_scope, slab / mass)


def _xlogx_sum(p: np.ndarray) -> float:
    """sum p ln p with 0 ln 0 = 0."""
    mask = p > 0.0
    if not mask.any():
        return 0.0
    vals = p[mask]
    return float(np.dot(vals, np.log(vals)))


def entropy(table: Table, subset: Iterable[str] | None = None) -> float:
    """Shannon entropy in nats of the (marginal of the) distribution."""
    if subset is None:
        subset = table.names
    subset = _validate_subset(table, subset)
    if not subset:
        raise ValidationError("entropy needs a non-empty subset")
    marg = marginalize(table, subset) if set(subset) != set(table.names) else table
    return -_xlogx_sum(marg.probs)


def conditional_entropy(table: Table, targets: Iterable[str], conditions: Iterable[str]) -> float:
    """H[targets | conditions] = H[targets, conditions] - H[conditions]."""
    targets = _validate_subset(table, targets)
    conditions = _validate_subset(table, conditions)
    if not targets:
        raise ValidationError("targets must be non-empty")
    if set(targets) & set(conditions):
        raise ValidationError("targets and conditions must be disjoint")
    joint = entropy(table, targets + conditions)
    if not conditions:
        return joint
    return joint - entropy(table, conditions)


def kl(p: Table, q: Table | UnnormalizedTable) -> KLResult:
    """KL(p || q / Z) in nats, with ln Z reported separately.

    Requires identical scope in identical order. Outcomes with p = 0
    contribute nothing regardless of q; outcomes with p > 0 and q = 0 set
    the divergent flag and are excluded from the finite part.
    """
    if p.names != q.names:
        raise ValidationError(f"scope mismatch: {p.names} vs {q.names}")
    for vp, vq in zip(p.scope, q.scope):
        if vp.cardinality != vq.cardinality:
            raise ValidationError(
                f"cardinality mismatch on {vp.name!r}: {vp.cardinality} vs {vq.cardinality}"
            )
    if isinstance(q, UnnormalizedTable):
        q_arr = q.weights / q.weights.sum()
        lnz = q.log_partition
    else:
        q_arr = q.probs
        lnz = 0.0
    p_arr = p.probs
    support = p_arr > 0.0
    divergent = bool(np.any(support & (q_arr <= 0.0)))
    ok = support & (q_arr > 0.0)
    if ok.any():
        pv = p_arr[ok]
        val = float(np.dot(pv, np.log(pv) - np.log(q_arr[ok])))
    else:
        val = 0.0
    return KLResult(kl_nats=val, log_partition=lnz, divergent=divergent)


def expected_conditional_kl(
    p: Table,
    q: Table | UnnormalizedTable,
    targets: Iterable[str],
    conditions: Iterable[str],
) -> KLResult:
    """E_{p(conditions)} KL[ p(targets | conditions) || q(targets | conditions) ].

    Equals E_p[ln p(targets|conditions) - ln q(targets|conditions)], so the
    reference's normalization cancels and ``log_partition`` is zero.
    """
    targets = tuple(targets)
    conditions = tuple(conditions)
    if not targets:
        raise ValidationError("targets must be non-empty")
    if set(targets) & set(conditions):
        raise ValidationError("targets and conditions must be disjoint")
    log_p = log_conditional(p, targets, conditions)
    log_q = log_conditional(q, targets, conditions)
    return _expectation_of_log_ratio(p, log_p, log_q)


def mutual_information(table: Table, left: Iterable[str], right: Iterable[str]) -> float:
    """I[left; right] = H[left] + H[right] - H[left, right], in nats."""
    left = _validate_subset(table, left)
    right = _validate_subset(table, right)
    if not left or not right:
        raise ValidationError("both variable groups must be non-empty")
    if set(left) & set(right):
        raise ValidationError("variable groups must be disjoint")
    return entropy(table, left) + entropy(table, right) - entropy(table, left + right)


def variational_mi_lower_bound(
    p: Table,
    decoder: np.ndarray,
    x_vars: Iterable[str],
    z_vars: Iterable[str],
    tol: float = 1e-9,
) -> float:
    """E_p[ln decoder(x | z) - ln p(x)], a lower bound on I[x; z].

    ``decoder`` is indexed by the z variables then the x variables, in the
    given orders, and must be normalized over x within ``tol`` for every z.
    The bound's gap to I[x; z] is E_p KL[p(x|z) || decoder(x|z)] >= 0.
    Returns -inf when the decoder has no mass on a visited outcome.
    """
    x_vars = _validate_subset(p, x_vars)
    z_vars = _validate_subset(p, z_vars)
    if not x_vars or not z_vars:
        raise ValidationError("both variable groups must be non-empty")
    if set(x_vars) & set(z_vars):
        raise ValidationError("variable groups must be disjoint")
    dec = np.asarray(decoder, dtype=np.float64)
    z_shape = tuple(p.variable(n).cardinality for n in z_vars)
    x_shape = tuple(p.variable(n).cardinality for n in x_vars)
    if dec.shape != z_shape + x_shape:
        raise ValidationError(
            f"decoder shape {dec.shape} does not match (z, x) shape {z_shape + x_shape}"
        )
    if np.any(dec < 0.0):
        raise ValidationError("decoder must be non-negative")
    sums = dec.reshape(z_shape + (-1,)).sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise ValidationError("decoder slices must each be normalized over x")

    # Lay the decoder out over p's scope order and take the expectation.
    src_axes = {n: i for i, n in enumerate(z_vars + x_vars)}
    joint = marginalize(p, z_vars + x_vars) if set(p.names) != set(z_vars) | set(x_vars) else p
    perm = [src_axes[n] for n in joint.names]
    dec_t = np.transpose(dec, perm)
    full = _expand_to_scope(dec_t, tuple(joint.names), joint)
    px = marginalize(joint, x_vars)
    log_px = np.broadcast_to(
        _expand_to_scope(np.log(np.where(px.probs > 0.0, px.probs, 1.0)), px.names, joint),
        joint.probs.shape,
    )
    full = np.broadcast_to(full, joint.probs.shape)
    mask = joint.probs > 0.0
    if np.any(mask & (full <= 0.0)):
        return -math.inf
    with np.errstate(divide="ignore"):
        log_dec = np.where(full > 0.0, np.log(np.where(full > 0.0, full, 1.0)), -np.inf)
    vals = joint.probs[mask] * (log_dec[mask] - log_px[mask])
    return float(vals.sum())


def _expand_to_scope(
    arr: np.ndarray, arr_names: tuple[str, ...], ref: Table | UnnormalizedTable
) -> np.ndarray:
    """Broadcast an array over a subset of ref's scope up to ref's full shape."""
    shape = [1] * len(ref.scope)
    for i, v in enumerate(ref.scope):
        if v.name in arr_names:
            shape[i] = v.cardinality
    src = {n: i for i, n in enumerate(arr_names)}
    perm = sorted(range(len(arr_names)), key=lambda i: ref.axis(arr_names[i]))
    return np.transpose(arr, perm).reshape(shape)


def log_marginal(table: Table | UnnormalizedTable, subset: tuple[str, ...]) -> np.ndarray:
    """ln of the (normalized) marginal over ``subset``, broadcast to full shape.

    For an empty subset returns zeros (ln 1). Entries are -inf where the
    marginal has no mass; callers mask those against the actual support.
    """
    base = table.probs if isinstance(table, Table) else table.weights
    if not subset:
        return np.zeros_like(base)
    drop_axes = tuple(i for i, v in enumerate(table.scope) if v.name not in subset)
    marg = base.sum(axis=drop_axes) if drop_axes else base
    marg = marg / marg.sum()
    with np.errstate(divide="ignore"):
        logm = np.where(marg > 0.0, np.log(np.where(marg > 0.0, marg, 1.0)), -np.inf)
    names = tuple(v.name for v in table.scope if v.name in subset)
    return _expand_to_scope(logm, names, table)


def log_conditional(
    table: Table | UnnormalizedTable, targets: tuple[str, ...], conditions: tuple[str, ...]
) -> np.ndarray:
    """ln m(targets | conditions) over the full scope, -inf off support."""
    for n in targets + conditions:
        table.axis(n)
    joint = log_marginal(table, tuple(dict.fromkeys(targets + conditions)))
    if not conditions:
        return joint
    with np.errstate(invalid="ignore"):
        return joint - log_marginal(table, conditions)


def _expectation_of_log_ratio(p: Table, log_a: np.ndarray, log_b: np.ndarray) -> KLResult:
    log_a = np.broadcast_to(log_a, p.probs.shape)
    log_b = np.broadcast_to(log_b, p.probs.shape)
    mask = p.probs > 0.0
    divergent = bool(np.any(mask & ~(np.isfinite(log_a) & np.isfinite(log_b))))
    ok = mask & np.isfinite(log_b) & np.isfinite(log_a)
    val = float(np.dot(p.probs[ok].ravel(), (log_a[ok] - log_b[ok]).ravel())) if ok.any() else 0.0
    return KLResult(kl_nats=val, log_partition=0.0, divergent=divergent)


def expectation_of_log(p: Table, log_term: np.ndarray) -> tuple[float, bool]:
    """E_p[log_term] with 0-mass masking; returns (finite part, divergent flag)."""
    log_term = np.broadcast_to(log_term, p.probs.shape)
    mask = p.probs > 0.0
    divergent = bool(np.any(mask & ~np.isfinite(log_term)))
    ok = mask & np.isfinite(log_term)
    val = float(np.dot(p.probs[ok].ravel(), log_term[ok].ravel())) if ok.any() else 0.0
    return val, divergent
