"""Closed-form beables for the two toy models, used as ground truth.

Nothing here looks at light cones or deposits; the values are the piecewise
formulas worked out by hand for each model. At every breakpoint the
pre-collapse value holds (the datum that would trigger the collapse is then
lightlike, not spacelike, to the point).

Model 1: one system in superposition at ``x1 < x2`` and one photon from the
left reaching ``x1`` at ``t1`` (and ``x2`` at ``t2 = t1 + (x2 - x1)`` when
it passes). Model 2 adds a photon from the right reaching ``x2`` at ``t1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Breakpoint comparisons use the same band as the causal classifier.
TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    x1: float = 0.0
    x2: float = 4.0
    t1: float = 5.0
    a_sq: float = 0.3
    m: float = 1.0
    eps: float = 1.0
    T: float = 30.0
    outcome: int = 1

    def __post_init__(self):
        if not self.x2 > self.x1:
            raise ValueError("need x2 > x1")
        if not 0.0 <= self.a_sq <= 1.0:
            raise ValueError("a_sq must be a probability")
        if not self.t1 > 0:
            raise ValueError("need t1 > 0")
        if self.outcome not in (1, 2):
            raise ValueError("outcome must be 1 or 2")

    @property
    def b_sq(self) -> float:
        return 1.0 - self.a_sq

    @property
    def gap(self) -> float:
        return self.x2 - self.x1

    @property
    def t2(self) -> float:
        return self.t1 + self.gap


CANONICAL = ModelParams()


def _before(t: float, breakpoint: float) -> bool:
    return t <= breakpoint + TOL


# -- Model 1 ---------------------------------------------------------------


def model1_system_beable(p: ModelParams, t: float, at: str) -> float:
    """System beable at site ``"x1"`` or ``"x2"``.

    Each site collapses when the outcome-1 photon's final position becomes
    spacelike to it: ``x1`` at ``t1``, ``x2`` at ``2*t1 - t2``. This holds
    for either outcome.
    """
    won = (p.outcome == 1) == (at == "x1")
    if at == "x1":
        return p.a_sq * p.m if _before(t, p.t1) else (p.m if won else 0.0)
    if at == "x2":
        return p.b_sq * p.m if _before(t, 2 * p.t1 - p.t2) else (p.m if won else 0.0)
    raise ValueError(f"unknown site {at!r}")


def model1_late_time(p: ModelParams) -> float:
    """When the outcome-2 system site becomes spacelike to the first outgoing ray.

    Until then that ray sees no distinguishing final data at all; the time
    goes to infinity with ``T``.
    """
    return (p.T + p.t1 - p.gap) / 2


def model1_photon_beable(p: ModelParams, t: float, ray: str) -> float:
    """Photon beable on ``"incoming"`` (``X = x1 - t1 + t``), ``"out1"``
    (``X = x1 + t1 - t``, ``t > t1``) or ``"out2"`` (``X = x2 + t2 - t``, ``t > t2``).

    The incoming ray is continued past ``t1`` up to ``t2``, where only the
    outcome-2 photon travels.
    """
    mine = p.outcome == 1
    if ray == "incoming":
        if _before(t, p.t1):
            return p.eps
        return 0.0 if mine else p.eps
    if ray == "out1":
        if _before(t, model1_late_time(p)):
            return p.a_sq * p.eps
        return p.eps if mine else 0.0
    if ray == "out2":
        return 0.0 if mine else p.eps
    raise ValueError(f"unknown ray {ray!r}")


def model1_tracks(p: ModelParams, t: float) -> list[tuple[str, float, float]]:
    """``(source, position, value)`` for every place the model can put energy at ``t``."""
    out = [
        ("system0", p.x1, model1_system_beable(p, t, "x1")),
        ("system0", p.x2, model1_system_beable(p, t, "x2")),
    ]
    if _before(t, p.t1):
        out.append(("photon0", p.x1 - p.t1 + t, p.eps))
    else:
        out.append(("photon0", p.x1 + p.t1 - t, model1_photon_beable(p, t, "out1")))
        if _before(t, p.t2):
            out.append(("photon0", p.x1 - p.t1 + t, model1_photon_beable(p, t, "incoming")))
        else:
            out.append(("photon0", p.x2 + p.t2 - t, model1_photon_beable(p, t, "out2")))
    return out


# -- Model 2 ---------------------------------------------------------------

MODEL2_RAYS = ("L-in", "R-in", "L-out1", "L-pass", "L-out2", "R-out2", "R-pass", "R-out1")


def model2_ray_position(p: ModelParams, t: float, ray: str) -> float:
    return {
        "L-in": p.x1 - p.t1 + t,
        "R-in": p.x2 + p.t1 - t,
        "L-out1": p.x1 + p.t1 - t,
        "L-pass": p.x1 - p.t1 + t,
        "L-out2": p.x2 + p.t2 - t,
        "R-out2": p.x2 + t - p.t1,
        "R-pass": p.x2 + p.t1 - t,
        "R-out1": p.x1 + t - p.t2,
    }[ray]


def model2_beable(p: ModelParams, t: float, where: str) -> float:
    """Beable at site ``"x1"``/``"x2"`` or on one of :data:`MODEL2_RAYS`.

    Both sites collapse together at ``t1 - (x2 - x1)``. After the bounces the
    photons of the realised branch are fully present on their rays and the
    other branch's rays are empty.
    """
    collapse = p.t1 - p.gap
    if where in ("x1", "x2"):
        weight = p.a_sq if where == "x1" else p.b_sq
        if _before(t, collapse):
            return weight * p.m
        return p.m if (p.outcome == 1) == (where == "x1") else 0.0
    if where in ("L-in", "R-in"):
        return p.eps
    if where in ("L-out1", "R-pass", "R-out1"):
        return p.eps if p.outcome == 1 else 0.0
    if where in ("L-pass", "L-out2", "R-out2"):
        return p.eps if p.outcome == 2 else 0.0
    raise ValueError(f"unknown site or ray {where!r}")


def model2_tracks(p: ModelParams, t: float) -> list[tuple[str, float, float]]:
    out = [
        ("system0", p.x1, model2_beable(p, t, "x1")),
        ("system0", p.x2, model2_beable(p, t, "x2")),
    ]
    if _before(t, p.t1):
        rays = [("photon0", "L-in"), ("photon1", "R-in")]
    else:
        late = not _before(t, p.t2)
        rays = [
            ("photon0", "L-out1"),
            ("photon0", "L-out2" if late else "L-pass"),
            ("photon1", "R-out2"),
            ("photon1", "R-out1" if late else "R-pass"),
        ]
    out += [(src, model2_ray_position(p, t, r), model2_beable(p, t, r)) for src, r in rays]
    return out


# -- Grid comparison -------------------------------------------------------


def tracks(p: ModelParams, model: int, t: float):
    if model == 1:
        return model1_tracks(p, t)
    if model == 2:
        return model2_tracks(p, t)
    raise ValueError(f"unknown model {model!r}")


def grid_probes(p: ModelParams, model: int, times, xs, sources, tol: float = 1e-9):
    """Expected grid values wherever the oracle pins them down unambiguously.

    Yields ``(i, j, source, expected)``. A node is probed for a source when
    every track of that source either passes through the node or lies at
    least one cell away; the expected value is then the sum of the tracks
    through the node (zero if none). Nodes next to a track that falls between
    nodes are skipped, because their value depends on rendering.
    """
    xs = np.asarray(xs, dtype=float)
    dx = (xs[-1] - xs[0]) / (len(xs) - 1)
    for i, t in enumerate(times):
        by_source: dict[str, list[tuple[float, float]]] = {s: [] for s in sources}
        for src, pos, val in tracks(p, model, float(t)):
            by_source[src].append((pos, val))
        for src in sources:
            expected = np.zeros(len(xs))
            ok = np.ones(len(xs), dtype=bool)
            for pos, val in by_source[src]:
                d = np.abs(xs - pos)
                on = d <= tol
                expected[on] += val
                ok &= on | (d >= dx - tol)
            for j in np.flatnonzero(ok):
                yield i, int(j), src, float(expected[j])


def params_from_scenario(s, outcome_label: str) -> tuple[ModelParams, int]:
    """Read model parameters off a scenario shaped like Model 1 or Model 2."""
    if len(s.systems) != 1 or len(s.systems[0].components) != 2:
        raise ValueError("oracle needs exactly one system with two components")
    sys_ = s.systems[0]
    c1, c2 = sorted(sys_.components, key=lambda c: c.x)
    if c1 is not sys_.components[0]:
        raise ValueError("oracle expects components ordered by position")
    left = [q for q in s.photons if q.dir == 1]
    right = [q for q in s.photons if q.dir == -1]
    if len(left) != 1 or s.photons[0] is not left[0] or s.photons[0].x0 >= c1.x:
        raise ValueError("oracle expects photon 0 incoming from the left of both sites")
    t1 = c1.x - left[0].x0
    model = 1
    if right:
        if len(right) != 1 or len(s.photons) != 2 or right[0].x0 - c2.x != t1:
            raise ValueError("Model 2 needs a right photon reaching x2 at the same time t1")
        if right[0].energy != left[0].energy:
            raise ValueError("Model 2 photons must carry equal energy")
        model = 2
    params = ModelParams(
        x1=c1.x, x2=c2.x, t1=t1, a_sq=c1.probability, m=sys_.mass, eps=left[0].energy,
        T=s.T, outcome=int(outcome_label),
    )
    return params, model


def field_deviation(field, p: ModelParams, model: int) -> tuple[float, int]:
    """Max |engine - oracle| over all unambiguous probes and the number of probes."""
    worst, n = 0.0, 0
    totals: dict[tuple[int, int], list] = {}
    for i, j, src, expected in grid_probes(p, model, field.times, field.xs, field.sources):
        worst = max(worst, abs(float(field.contributions[src][i, j]) - expected))
        n += 1
        totals.setdefault((i, j), []).append(expected)
    for (i, j), vals in totals.items():
        if len(vals) == len(field.sources):
            worst = max(worst, abs(float(field.total[i, j]) - sum(vals)))
            n += 1
    return worst, n
