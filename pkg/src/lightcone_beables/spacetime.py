"""Causal geometry of 1+1 dimensional Minkowski space (c = 1).

Everything lives in one fixed global frame. The final hypersurface is
``t = T`` and the conditioning region for a point ``y`` is the open set of
positions on that hypersurface that are spacelike to ``y``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

#: Width of the band around the light cone inside which separations count as
#: lightlike (and are therefore excluded from conditioning).
TOL_CAUSAL = 1e-9


@dataclass(frozen=True, slots=True)
class Event:
    """A spacetime point ``(t, x)``."""

    t: float
    x: float


class CausalRelation(enum.Enum):
    """Relation of a second event to a first one."""

    TIMELIKE_FUTURE = "timelike-future"
    LIGHTLIKE_FUTURE = "lightlike-future"
    SPACELIKE = "spacelike"
    LIGHTLIKE_PAST = "lightlike-past"
    TIMELIKE_PAST = "timelike-past"
    COINCIDENT = "coincident"

    def mirror(self) -> "CausalRelation":
        """The relation seen from the other event (future <-> past)."""
        return _MIRROR[self]


_MIRROR = {
    CausalRelation.TIMELIKE_FUTURE: CausalRelation.TIMELIKE_PAST,
    CausalRelation.TIMELIKE_PAST: CausalRelation.TIMELIKE_FUTURE,
    CausalRelation.LIGHTLIKE_FUTURE: CausalRelation.LIGHTLIKE_PAST,
    CausalRelation.LIGHTLIKE_PAST: CausalRelation.LIGHTLIKE_FUTURE,
    CausalRelation.SPACELIKE: CausalRelation.SPACELIKE,
    CausalRelation.COINCIDENT: CausalRelation.COINCIDENT,
}


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite coordinate: {v!r}")


def causal_relation(a: Event, b: Event, tol: float = TOL_CAUSAL) -> CausalRelation:
    """Classify ``b`` relative to ``a``.

    Separations within ``tol`` of the light cone are lightlike; ``b`` within
    ``tol`` of ``a`` in both coordinates is coincident.
    """
    _check_finite(a.t, a.x, b.t, b.x)
    dt = b.t - a.t
    dx = abs(b.x - a.x)
    if abs(dt) <= tol and dx <= tol:
        return CausalRelation.COINCIDENT
    gap = dx - abs(dt)
    if gap > tol:
        return CausalRelation.SPACELIKE
    if gap < -tol:
        return CausalRelation.TIMELIKE_FUTURE if dt > 0 else CausalRelation.TIMELIKE_PAST
    return CausalRelation.LIGHTLIKE_FUTURE if dt > 0 else CausalRelation.LIGHTLIKE_PAST


@dataclass(frozen=True, slots=True)
class OutsideFlcRegion:
    """Positions ``x'`` on ``t = T`` with ``|x' - center| > radius``.

    The region is open: points at lightlike separation (within ``tol``) are
    not members.
    """

    center: float
    radius: float
    tol: float = TOL_CAUSAL

    def contains(self, x: float) -> bool:
        return abs(x - self.center) - self.radius > self.tol

    __contains__ = contains


def outside_flc_region(y: Event, T: float, tol: float = TOL_CAUSAL) -> OutsideFlcRegion:
    """The part of the hypersurface ``t = T`` outside the future light cone of ``y``."""
    _check_finite(y.t, y.x, T)
    if y.t > T:
        raise ValueError(f"event time {y.t} lies beyond the final hypersurface T={T}")
    return OutsideFlcRegion(center=y.x, radius=T - y.t, tol=tol)


def contains(region: OutsideFlcRegion, x: float) -> bool:
    return region.contains(x)
