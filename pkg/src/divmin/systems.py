"""Declared generative systems and target specifications.

An :class:`ActualSystem` is a factored DAG over named discrete variables:
one conditional factor per variable, each factor fixed, parameterized
(per-parent-slice softmax over logits), or a point mass (a selector table).
Materializing the system multiplies the factors into an exact joint table.

A :class:`TargetSpec` is an unnormalized product of non-negative factors
over a declared scope. Variables in scope with no factor carry an implicit
uniform weight of one. Reward factors store raw values ``r`` and enter the
product as ``exp(r)``. Parameterized target factors (auxiliary predictors
such as decoders or reverse predictors) are per-slice softmaxes and share
the flat parameter vector with system factors. Mirror factors reference the
current system: a :class:`FactorMirror` reuses a system factor's conditional
table verbatim, and a :class:`MarginalMirror` uses a marginal conditional of
the materialized joint, which is how targets that contain the controlled
dynamics are expressed.

Parameters are owned by a :class:`ParameterSpace` that flattens every
parameterized factor (system side first, then target side) into one float64
vector with an index map back to (side, factor, parent slice, outcome).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import CapacityError, ValidationError
from .tables import (
    CAPACITY_LIMIT,
    Assignment,
    Role,
    Table,
    UnnormalizedTable,
    Variable,
    _expand_to_scope,
)

SLICE_NORMALIZATION_TOL = 1e-12


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Per-slice softmax along ``axis``; strictly positive for finite logits."""
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _one_hot(selector: np.ndarray, cardinality: int) -> np.ndarray:
    out = np.zeros(selector.shape + (cardinality,), dtype=np.float64)
    np.put_along_axis(out, selector[..., None], 1.0, axis=-1)
    return out


@dataclass(frozen=True)
class FactorSpec:
    """Conditional factor for one child variable given its parents.

    Exactly one of ``table`` (fixed, normalized per parent slice), ``logits``
    (parameterized softmax) or ``selector`` (point mass, integer outcome per
    parent slice) is set; arrays are laid out parents-then-child.
    """

    child: str
    parents: tuple[str, ...]
    table: np.ndarray | None = None
    logits: np.ndarray | None = None
    selector: np.ndarray | None = None

    def __post_init__(self) -> None:
        given = [x is not None for x in (self.table, self.logits, self.selector)]
        if sum(given) != 1:
            raise ValidationError(
                f"factor for {self.child!r} must set exactly one of table/logits/selector"
            )
        object.__setattr__(self, "parents", tuple(self.parents))
        for name, arr in (("table", self.table), ("logits", self.logits)):
            if arr is not None:
                arr = np.asarray(arr, dtype=np.float64)
                if not np.all(np.isfinite(arr)):
                    raise ValidationError(f"factor {self.child!r}: {name} must be finite")
                arr = arr.copy()
                arr.flags.writeable = False
                object.__setattr__(self, name, arr)
        if self.selector is not None:
            sel = np.asarray(self.selector, dtype=np.int64).copy()
            sel.flags.writeable = False
            object.__setattr__(self, "selector", sel)

    @staticmethod
    def fixed(child: str, parents: Sequence[str], table: np.ndarray | Sequence) -> "FactorSpec":
        return FactorSpec(child=child, parents=tuple(parents), table=np.asarray(table))

    @staticmethod
    def parameterized(
        child: str, parents: Sequence[str], logits: np.ndarray | Sequence
    ) -> "FactorSpec":
        return FactorSpec(child=child, parents=tuple(parents), logits=np.asarray(logits))

    @staticmethod
    def point_mass(
        child: str, parents: Sequence[str], selector: np.ndarray | Sequence | int
    ) -> "FactorSpec":
        return FactorSpec(
            child=child, parents=tuple(parents), selector=np.asarray(selector, dtype=np.int64)
        )

    @property
    def kind(self) -> str:
        if self.table is not None:
            return "fixed"
        if self.logits is not None:
            return "parameterized"
        return "point-mass"

    def conditional(self) -> np.ndarray:
        """The conditional probability table, parents-then-child layout."""
        if self.table is not None:
            return self.table
        if self.logits is not None:
            return softmax(self.logits, axis=-1)
        raise ValidationError("point-mass factor needs cardinality context; use conditional_with")

    def conditional_with(self, child_cardinality: int) -> np.ndarray:
        if self.selector is not None:
            return _one_hot(self.selector, child_cardinality)
        return self.conditional()


class ActualSystem:
    """A factored DAG with one factor per variable, in a fixed variable order.

    The declaration order of ``variables`` is the storage order of all
    tables and, for temporal presets, the time order used by per-step terms.
    """

    __slots__ = ("variables", "factors", "topological_order", "_index")

    def __init__(
        self, variables: Sequence[Variable], factors: Iterable[FactorSpec]
    ) -> None:
        self.variables = tuple(variables)
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate variable names: {names}")
        self._index = {v.name: i for i, v in enumerate(self.variables)}
        fdict: dict[str, FactorSpec] = {}
        for f in factors:
            if f.child not in self._index:
                raise ValidationError(f"factor child {f.child!r} is not a declared variable")
            if f.child in fdict:
                raise ValidationError(f"multiple factors for variable {f.child!r}")
            fdict[f.child] = f
        missing = [n for n in names if n not in fdict]
        if missing:
            raise ValidationError(f"variables without factors: {missing}")
        self.factors = {n: fdict[n] for n in names}
        self.topological_order = self._check_acyclic()
        self._check_shapes()
        size = 1
        for v in self.variables:
            size *= v.cardinality
        if size > CAPACITY_LIMIT:
            raise CapacityError(
                f"joint outcome space of size {size} exceeds the cap of {CAPACITY_LIMIT}"
            )
        if not any(f.kind != "fixed" for f in self.factors.values()):
            raise ValidationError(
                "system has no parameterized or point-mass factor, so there is nothing to choose"
            )

    def _check_acyclic(self) -> tuple[str, ...]:
        order: list[str] = []
        state: dict[str, int] = {}

        def visit(name: str, stack: tuple[str, ...]) -> None:
            st = state.get(name, 0)
            if st == 1:
                raise ValidationError(f"cycle through {name!r}: {' -> '.join(stack + (name,))}")
            if st == 2:
                return
            state[name] = 1
            for p in self.factors[name].parents:
                if p not in self._index:
                    raise ValidationError(
                        f"factor {name!r} references unknown parent {p!r}"
                    )
                if p == name:
                    raise ValidationError(f"factor {name!r} lists itself as a parent")
                visit(p, stack + (name,))
            state[name] = 2
            order.append(name)

        for v in self.variables:
            visit(v.name, ())
        return tuple(order)

    def _check_shapes(self) -> None:
        for name, f in self.factors.items():
            shape = tuple(self.variable(p).cardinality for p in f.parents)
            child_card = self.variable(name).cardinality
            if f.selector is not None:
                if f.selector.shape != shape:
                    raise ValidationError(
                        f"selector for {name!r} has shape {f.selector.shape}, expected {shape}"
                    )
                if f.selector.size and (
                    f.selector.min() < 0 or f.selector.max() >= child_card
                ):
                    raise ValidationError(f"selector for {name!r} indexes out of range")
                continue
            arr = f.table if f.table is not None else f.logits
            if arr.shape != shape + (child_card,):
                raise ValidationError(
                    f"factor for {name!r} has shape {arr.shape}, expected {shape + (child_card,)}"
                )
            if f.table is not None:
                if np.any(f.table < 0.0):
                    raise ValidationError(f"fixed factor for {name!r} has negative entries")
                sums = f.table.sum(axis=-1)
                if np.any(np.abs(sums - 1.0) > SLICE_NORMALIZATION_TOL):
                    raise ValidationError(
                        f"fixed factor for {name!r} is not normalized per parent slice"
                    )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> Variable:
        try:
            return self.variables[self._index[name]]
        except KeyError:
            raise ValidationError(f"unknown variable {name!r}") from None

    def axis(self, name: str) -> int:
        if name not in self._index:
            raise ValidationError(f"unknown variable {name!r}")
        return self._index[name]

    def with_factor(self, factor: FactorSpec) -> "ActualSystem":
        replaced = dict(self.factors)
        replaced[factor.child] = factor
        return ActualSystem(self.variables, replaced.values())

    def inputs(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role.is_input)

    def latents(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role.is_latent)

    def by_role(self, *roles: Role) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role in roles)

    def factor_conditional(self, name: str) -> np.ndarray:
        f = self.factors[name]
        return f.conditional_with(self.variable(name).cardinality)

    def __repr__(self) -> str:
        kinds = {n: f.kind for n, f in self.factors.items()}
        return f"ActualSystem(variables={self.names}, factors={kinds})"


def factor_log_array(system: ActualSystem, name: str) -> np.ndarray:
    """ln factor(child | parents) broadcast over the full joint shape."""
    f = system.factors[name]
    cond = system.factor_conditional(name)
    with np.errstate(divide="ignore"):
        log_c = np.where(cond > 0.0, np.log(np.where(cond > 0.0, cond, 1.0)), -np.inf)
    ref = _ScopeRef(system.variables)
    return _expand_to_scope(log_c, f.parents + (name,), ref)


class _ScopeRef:
    """Duck-typed scope holder so table helpers can broadcast system arrays."""

    __slots__ = ("scope", "_index")

    def __init__(self, scope: tuple[Variable, ...]) -> None:
        self.scope = scope
        self._index = {v.name: i for i, v in enumerate(scope)}

    def axis(self, name: str) -> int:
        return self._index[name]


def build_joint(system: ActualSystem) -> Table:
    """Multiply all factors into the exact joint table over the full scope."""
    shape = tuple(v.cardinality for v in system.variables)
    probs = np.ones(shape, dtype=np.float64)
    ref = _ScopeRef(system.variables)
    for name, f in system.factors.items():
        cond = system.factor_conditional(name)
        probs = probs * _expand_to_scope(cond, f.parents + (name,), ref)
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"materialized joint sums to {total!r}; factors are inconsistent")
    return Table(system.variables, probs / total)


def intervene(system: ActualSystem, realized: Assignment) -> ActualSystem:
    """Replace each realized variable's factor with a parentless point mass.

    Only variables whose role admits realization (actions, skills, past
    inputs) may be intervened on; downstream factors are left untouched, so
    upstream marginals are unchanged, unlike conditioning.
    """
    if not realized:
        raise ValidationError("realized must bind at least one variable")
    out = system
    for name, value in realized.items():
        v = system.variable(name)
        if not v.role.realizable:
            raise ValidationError(
                f"cannot realize {name!r} with role {v.role.value}; "
                "only actions, skills, and past inputs are realizable"
            )
        value = int(value)
        if not 0 <= value < v.cardinality:
            raise ValidationError(
                f"realized {name}={value} out of range for cardinality {v.cardinality}"
            )
        out = out.with_factor(
            FactorSpec.point_mass(name, (), np.asarray(value, dtype=np.int64))
        )
    return out


# ---------------------------------------------------------------------------
# Target factors


@dataclass(frozen=True)
class TableFactor:
    """Fixed non-negative potential over ``vars`` (raw weights)."""

    vars: tuple[str, ...]
    table: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        arr = np.asarray(self.table, dtype=np.float64)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValidationError("target table factor must be finite and non-negative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "table", arr)
        object.__setattr__(self, "vars", tuple(self.vars))


@dataclass(frozen=True)
class ConditionalFactor:
    """Fixed conditional table of child given parents, normalized per slice."""

    child: str
    parents: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.table, dtype=np.float64)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValidationError("target conditional factor must be finite and non-negative")
        sums = arr.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > SLICE_NORMALIZATION_TOL):
            raise ValidationError(
                f"target conditional for {self.child!r} is not normalized per parent slice"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "table", arr)
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class RewardFactor:
    """Reward potential exp(values) over ``vars``; stores raw reward values."""

    vars: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("reward values must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "vars", tuple(self.vars))


@dataclass(frozen=True)
class ParamFactor:
    """Parameterized per-slice softmax conditional on the target side."""

    child: str
    parents: tuple[str, ...]
    logits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.logits, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("target logits must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "logits", arr)
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class FactorMirror:
    """Mirrors the current system factor of ``child`` into the target product."""

    child: str


@dataclass(frozen=True)
class MarginalMirror:
    """Mirrors the system's marginal conditional p(vars | given) into the target."""

    vars: tuple[str, ...]
    given: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "given", tuple(self.given))


TargetFactor = Union[
    TableFactor, ConditionalFactor, RewardFactor, ParamFactor, FactorMirror, MarginalMirror
]


class TargetSpec:
    """Unnormalized product of factors over a declared scope subset."""

    __slots__ = ("scope", "factors")

    def __init__(self, scope: Sequence[str], factors: Iterable[TargetFactor]) -> None:
        self.scope = tuple(scope)
        if not self.scope:
            raise ValidationError("target scope must be non-empty")
        if len(set(self.scope)) != len(self.scope):
            raise ValidationError(f"duplicate names in target scope: {self.scope}")
        self.factors = tuple(factors)
        for f in self.factors:
            for n in _factor_vars(f):
                if n not in self.scope:
                    raise ValidationError(
                        f"target factor references {n!r} outside scope {self.scope}"
                    )

    def replace_factor(self, index: int, factor: TargetFactor) -> "TargetSpec":
        factors = list(self.factors)
        factors[index] = factor
        return TargetSpec(self.scope, factors)

    def __repr__(self) -> str:
        return f"TargetSpec(scope={self.scope}, factors={[type(f).__name__ for f in self.factors]})"


def _factor_vars(f: TargetFactor) -> tuple[str, ...]:
    if isinstance(f, (TableFactor, RewardFactor)):
        return f.vars
    if isinstance(f, (ConditionalFactor, ParamFactor)):
        return f.parents + (f.child,)
    if isinstance(f, FactorMirror):
        return (f.child,)
    if isinstance(f, MarginalMirror):
        return f.given + f.vars
    raise ValidationError(f"unknown target factor type {type(f).__name__}")


def target_scope_variables(target: TargetSpec, system: ActualSystem) -> tuple[Variable, ...]:
    return tuple(system.variable(n) for n in target.scope)


def target_factor_scope(f: TargetFactor, system: ActualSystem) -> tuple[str, ...]:
    """All variables a target factor touches, mirrors resolved via the system."""
    if isinstance(f, (TableFactor, RewardFactor)):
        return tuple(f.vars)
    if isinstance(f, (ConditionalFactor, ParamFactor)):
        return (*f.parents, f.child)
    if isinstance(f, FactorMirror):
        return (*system.factors[f.child].parents, f.child)
    if isinstance(f, MarginalMirror):
        return (*f.given, *f.vars)
    raise ValidationError(f"unknown target factor type {type(f).__name__}")


def target_factor_log_array(
    f: TargetFactor, target: TargetSpec, system: ActualSystem, joint: Table | None = None
) -> np.ndarray:
    """ln factor value over the target scope shape; -inf where the factor is 0."""
    scope = target_scope_variables(target, system)
    ref = _ScopeRef(scope)

    def logify(values: np.ndarray, names: tuple[str, ...]) -> np.ndarray:
        with np.errstate(divide="ignore"):
            lv = np.where(values > 0.0, np.log(np.where(values > 0.0, values, 1.0)), -np.inf)
        return _expand_to_scope(lv, names, ref)

    if isinstance(f, TableFactor):
        return logify(f.table, f.vars)
    if isinstance(f, ConditionalFactor):
        return logify(f.table, f.parents + (f.child,))
    if isinstance(f, RewardFactor):
        return _expand_to_scope(f.values, f.vars, ref)
    if isinstance(f, ParamFactor):
        return logify(softmax(f.logits, axis=-1), f.parents + (f.child,))
    if isinstance(f, FactorMirror):
        cond = system.factor_conditional(f.child)
        names = system.factors[f.child].parents + (f.child,)
        for n in names:
            if n not in target.scope:
                raise ValidationError(
                    f"mirrored factor {f.child!r} uses {n!r} outside the target scope"
                )
        return logify(cond, names)
    if isinstance(f, MarginalMirror):
        if joint is None:
            joint = build_joint(system)
        from .tables import log_conditional

        full = log_conditional(joint, f.vars, f.given)
        # Collapse the system-shaped array onto the target scope: the values
        # only vary along vars in (given + vars), so slicing index 0 on the
        # remaining axes is exact.
        sl: list[object] = []
        keep = set(f.given) | set(f.vars)
        for v in joint.scope:
            sl.append(slice(None) if v.name in keep else 0)
        reduced = full[tuple(sl)]
        names = tuple(v.name for v in joint.scope if v.name in keep)
        return _expand_to_scope(reduced, names, ref)
    raise ValidationError(f"unknown target factor type {type(f).__name__}")


def build_target(
    target: TargetSpec, system: ActualSystem, joint: Table | None = None
) -> UnnormalizedTable:
    """Materialize the unnormalized target over its scope.

    Variables in scope without any factor contribute an implicit uniform
    weight of one. Mirror factors need the system (and, for marginal
    mirrors, its materialized joint).
    """
    scope = target_scope_variables(target, system)
    shape = tuple(v.cardinality for v in scope)
    size = 1
    for c in shape:
        size *= c
    if size > CAPACITY_LIMIT:
        raise CapacityError(f"target outcome space of size {size} exceeds {CAPACITY_LIMIT}")
    log_w = np.zeros(shape, dtype=np.float64)
    needs_joint = any(isinstance(f, MarginalMirror) for f in target.factors)
    if needs_joint and joint is None:
        joint = build_joint(system)
    for f in target.factors:
        log_w = log_w + target_factor_log_array(f, target, system, joint)
    weights = np.exp(log_w, where=np.isfinite(log_w), out=np.zeros_like(log_w))
    return UnnormalizedTable(scope, weights)


# ---------------------------------------------------------------------------
# Parameter vector


@dataclass(frozen=True)
class ParameterBlock:
    side: str  # "p" for system factors, "q" for target factors
    key: str  # child name (system) or "<index>:<child>" (target)
    shape: tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        n = 1
        for c in self.shape:
            n *= c
        return n


class ParameterSpace:
    """Flat view of every parameterized factor in a (system, target) pair."""

    def __init__(self, system: ActualSystem, target: TargetSpec | None = None) -> None:
        self.system = system
        self.target = target
        blocks: list[ParameterBlock] = []
        offset = 0
        for name, f in system.factors.items():
            if f.logits is not None:
                blocks.append(ParameterBlock("p", name, f.logits.shape, offset))
                offset += blocks[-1].size
        if target is not None:
            for i, tf in enumerate(target.factors):
                if isinstance(tf, ParamFactor):
                    blocks.append(
                        ParameterBlock("q", f"{i}:{tf.child}", tf.logits.shape, offset)
                    )
                    offset += blocks[-1].size
        self.blocks = tuple(blocks)
        self.size = offset

    def get(self) -> np.ndarray:
        """Current parameters as one flat vector (bit-exact copies)."""
        out = np.empty(self.size, dtype=np.float64)
        for b in self.blocks:
            if b.side == "p":
                arr = self.system.factors[b.key].logits
            else:
                idx = int(b.key.split(":", 1)[0])
                arr = self.target.factors[idx].logits
            out[b.offset : b.offset + b.size] = arr.ravel()
        return out

    def set(self, phi: np.ndarray) -> tuple[ActualSystem, TargetSpec | None]:
        """New system/target with logits replaced by ``phi`` (inputs unchanged)."""
        phi = np.asarray(phi, dtype=np.float64)
        if phi.shape != (self.size,):
            raise ValidationError(f"parameter vector has shape {phi.shape}, expected ({self.size},)")
        if not np.all(np.isfinite(phi)):
            raise ValidationError("parameter vector must be finite")
        system = self.system
        target = self.target
        for b in self.blocks:
            chunk = phi[b.offset : b.offset + b.size].reshape(b.shape)
            if b.side == "p":
                old = system.factors[b.key]
                system = system.with_factor(
                    FactorSpec.parameterized(b.key, old.parents, chunk)
                )
            else:
                idx = int(b.key.split(":", 1)[0])
                old = target.factors[idx]
                target = target.replace_factor(
                    idx, ParamFactor(old.child, old.parents, chunk)
                )
        return system, target

    def label(self, flat_index: int) -> tuple[str, str, tuple[int, ...], int]:
        """Map a flat coordinate to (side, factor, parent slice, outcome)."""
        if not 0 <= flat_index < self.size:
            raise ValidationError(f"index {flat_index} out of range for size {self.size}")
        for b in self.blocks:
            if b.offset <= flat_index < b.offset + b.size:
                local = np.unravel_index(flat_index - b.offset, b.shape)
                return b.side, b.key, tuple(int(i) for i in local[:-1]), int(local[-1])
        raise AssertionError("unreachable")


def get_parameters(system: ActualSystem, target: TargetSpec | None = None) -> np.ndarray:
    """Flat parameter vector of every parameterized factor (system, then target)."""
    return ParameterSpace(system, target).get()


def set_parameters(
    system: ActualSystem, phi: np.ndarray, target: TargetSpec | None = None
) -> tuple[ActualSystem, TargetSpec | None]:
    """Round-trip counterpart of :func:`get_parameters`; values are bit-exact."""
    return ParameterSpace(system, target).set(phi)


# ---------------------------------------------------------------------------
# Horizon


@dataclass(frozen=True)
class Horizon:
    """Temporal bookkeeping: ``steps`` decision steps, ``split`` past inputs.

    ``split`` counts how many of the system's input variables (declaration
    order) are observed past; it may be zero when nothing has been observed.
    ``skill_every`` is the skill duration K and must divide ``steps`` when
    skill variables are present.
    """

    steps: int
    split: int = 0
    skill_every: int | None = None

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.split < 0:
            raise ValidationError(f"split must be >= 0, got {self.split}")
        if self.skill_every is not None and self.skill_every < 1:
            raise ValidationError("skill_every must be >= 1 when set")

    def validate_with(self, system: ActualSystem) -> None:
        n_inputs = len(system.inputs())
        if self.split > n_inputs:
            raise ValidationError(
                f"split {self.split} exceeds the {n_inputs} input variables"
            )
        past = system.inputs()[: self.split]
        for name in past:
            if system.variable(name).role != Role.PAST_INPUT:
                raise ValidationError(
                    f"input {name!r} precedes the split but is not a past input"
                )
        for name in system.inputs()[self.split :]:
            if system.variable(name).role != Role.FUTURE_INPUT:
                raise ValidationError(
                    f"input {name!r} follows the split but is not a future input"
                )
        if system.by_role(Role.SKILL):
            if self.skill_every is None:
                raise ValidationError("skill variables present but skill_every is unset")
            if self.steps % self.skill_every != 0:
                raise ValidationError(
                    f"skill duration {self.skill_every} does not divide {self.steps} steps"
                )

    def past_inputs(self, system: ActualSystem) -> tuple[str, ...]:
        return system.inputs()[: self.split]

    def future_inputs(self, system: ActualSystem) -> tuple[str, ...]:
        return system.inputs()[self.split :]
