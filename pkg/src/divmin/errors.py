"""Exception taxonomy.

Contract violations raise subclasses of :class:`DivminError` so callers can
distinguish usage mistakes from genuine numerical problems. Divergent
divergences (actual mass where the target has none) are ordinarily reported
as a structured flag on results, not raised; :class:`DivergenceError` is
reserved for operations that cannot produce a finite result at all, such as
gradient evaluation at a divergent point.
"""

from __future__ import annotations


class DivminError(Exception):
    """Base class for all library errors."""


class ValidationError(DivminError, ValueError):
    """Malformed construction arguments or contract violations."""


class CapacityError(DivminError):
    """Joint outcome space exceeds the enumeration cap."""


class NullEvidenceError(DivminError):
    """Conditioning on an event of probability zero."""


class DivergenceError(DivminError):
    """An operation that requires a finite objective hit +inf."""


class ConfigError(DivminError):
    """Invalid experiment configuration (CLI exit code 2)."""
