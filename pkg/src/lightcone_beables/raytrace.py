"""Per-branch photon paths: lightlike segments with instantaneous reversals.

A photon reverses direction whenever it reaches a position occupied by a
system in the current branch, and passes freely through positions that are
unoccupied in that branch. Bounce times come from exact distance arithmetic;
there is no time stepping.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .scenario import Branch, Photon, Scenario
from .spacetime import Event

MAX_BOUNCES = 10**6


class TrappedPhotonError(RuntimeError):
    """A photon is confined between two occupied positions in a branch."""

    def __init__(self, photon_id: int, branch: str, bounces: float, between: tuple[float, float]):
        self.photon_id = photon_id
        self.branch = branch
        self.bounces = bounces
        self.between = between
        n = "infinitely many" if math.isinf(bounces) else f"{int(bounces)}"
        super().__init__(
            f"photon {photon_id} is trapped between x={between[0]} and x={between[1]} "
            f"in branch {branch} ({n} reversals)"
        )


@dataclass(frozen=True)
class Segment:
    t_start: float
    x_start: float
    dir: int


@dataclass(frozen=True)
class Trajectory:
    photon_id: int
    branch: str
    T: float
    segments: tuple[Segment, ...]
    bounces: tuple[Event, ...]

    def position_at(self, t: float) -> float:
        return position_at(self, t)


def _occupied(branch: Branch, s: Scenario) -> list[float]:
    return sorted(branch.positions(s))


def _ahead(occ: list[float], x: float, d: int, tol: float) -> float | None:
    """Nearest occupied position strictly ahead of ``x`` in direction ``d``."""
    if d > 0:
        i = bisect.bisect_right(occ, x + tol)
        return occ[i] if i < len(occ) else None
    i = bisect.bisect_left(occ, x - tol)
    return occ[i - 1] if i > 0 else None


def _at_occupied(occ: list[float], x: float, tol: float) -> bool:
    i = bisect.bisect_left(occ, x - tol)
    return i < len(occ) and abs(occ[i] - x) <= tol


def trace(
    p: Photon,
    branch: Branch,
    s: Scenario,
    photon_id: int = 0,
    max_bounces: int = MAX_BOUNCES,
) -> Trajectory:
    """Follow photon ``p`` from ``t = 0`` to ``t = s.T`` in ``branch``.

    Raises :class:`TrappedPhotonError` when the photon would reverse more than
    ``max_bounces`` times before ``T``. Once a photon has reversed at an
    occupied position and sees another one ahead, its motion is periodic, so
    the total count is known in closed form and the error is raised without
    walking the bounces.
    """
    tol = s.tolerances.tol_pos
    occ = _occupied(branch, s)
    t, x, d = 0.0, float(p.x0), int(p.dir)
    bounces: list[Event] = []
    segments: list[Segment] = []
    trapped = False

    def reverse() -> None:
        nonlocal d, trapped
        d = -d
        bounces.append(Event(t, x))
        segments.append(Segment(t, x, d))
        if trapped:
            return
        nxt = _ahead(occ, x, d, tol)
        if nxt is not None:
            trapped = True
            total = len(bounces) + math.floor((s.T - t) / abs(nxt - x))
            if total > max_bounces:
                raise TrappedPhotonError(photon_id, branch.label, total, tuple(sorted((x, nxt))))

    if _at_occupied(occ, x, tol):
        reverse()
    else:
        segments.append(Segment(t, x, d))

    while True:
        target = _ahead(occ, x, d, tol)
        if target is None:
            break
        t_hit = t + abs(target - x)
        if t_hit > s.T:
            break
        t, x = t_hit, target
        reverse()

    return Trajectory(
        photon_id=photon_id,
        branch=branch.label,
        T=s.T,
        segments=tuple(segments),
        bounces=tuple(bounces),
    )


def position_at(traj: Trajectory, t: float) -> float:
    """Position on the trajectory at time ``t`` (the bounce point at a bounce time)."""
    if not 0.0 <= t <= traj.T:
        raise ValueError(f"time {t} outside [0, {traj.T}]")
    segs = traj.segments
    if len(segs) == 1:
        seg = segs[0]
    else:
        seg = segs[bisect.bisect_right([sg.t_start for sg in segs], t) - 1]
    return seg.x_start + seg.dir * (t - seg.t_start)


def interaction_horizon(p: Photon, branch: Branch, s: Scenario, photon_id: int = 0) -> float | None:
    """Time of the photon's last reversal in ``branch``, with no final-time cut-off.

    Returns ``None`` if the photon never meets an occupied position. On a line
    an escaping photon reverses at most once; a photon that sees an occupied
    position ahead right after reversing never escapes, which raises
    :class:`TrappedPhotonError`.
    """
    tol = s.tolerances.tol_pos
    occ = _occupied(branch, s)
    x, d = float(p.x0), int(p.dir)
    if _at_occupied(occ, x, tol):
        t = 0.0
    else:
        target = _ahead(occ, x, d, tol)
        if target is None:
            return None
        t, x = abs(target - x), target
    d = -d
    nxt = _ahead(occ, x, d, tol)
    if nxt is not None:
        raise TrappedPhotonError(photon_id, branch.label, math.inf, tuple(sorted((x, nxt))))
    return t
