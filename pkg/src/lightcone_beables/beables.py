"""Beables: stress-energy expectations conditioned on final data outside the future light cone.

For a point ``y = (t, x)`` the final deposits strictly outside the future
light cone of ``y`` (``|x' - x| > T - t`` on ``t = T``) are compared across
branches. The branches that agree with the sampled outcome there form the
consistent set; their Born weights, renormalized, are the posterior. Each
source's beable at ``y`` is the posterior-weighted mean of its branch-local
energy at ``y``.

Values are reported as energy per grid cell. A point source is rendered as a
top-hat one cell wide (or a normalized Gaussian for systems with
``sigma > 0``) and the sample at ``y`` is the energy of that profile falling
in the cell centred on ``y``. Only the rendering uses the profile; the
conditioning always uses exact positions.
"""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boundary import FinalOutcome, Source, branch_outcomes, outcome_for
from .raytrace import interaction_horizon, position_at, trace, TrappedPhotonError
from .scenario import GridSpec, Scenario, enumerate_branches
from .spacetime import Event


@dataclass(frozen=True)
class BeableSample:
    y: Event
    total: float
    contributions: dict[str, float]
    posterior: dict[str, float]
    consistent: tuple[str, ...]


@dataclass
class BeableField:
    """Beables on a rectangular grid; arrays are indexed ``[t_index, x_index]``."""

    times: np.ndarray
    xs: np.ndarray
    sources: tuple[str, ...]
    branches: tuple[str, ...]
    outcome: str
    total: np.ndarray
    contributions: dict[str, np.ndarray]
    posterior: np.ndarray  # [nt, nx, n_branches]
    consistent: np.ndarray  # bool, same shape as posterior
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.total.shape

    @property
    def n_consistent(self) -> np.ndarray:
        return self.consistent.sum(axis=-1)

    def sample(self, i: int, j: int) -> BeableSample:
        cons = tuple(b for b, c in zip(self.branches, self.consistent[i, j]) if c)
        return BeableSample(
            y=Event(float(self.times[i]), float(self.xs[j])),
            total=float(self.total[i, j]),
            contributions={k: float(v[i, j]) for k, v in self.contributions.items()},
            posterior={b: float(p) for b, p, c in zip(self.branches, self.posterior[i, j], self.consistent[i, j]) if c},
            consistent=cons,
        )


def render(p: float, x: float, dx: float, sigma: float = 0.0) -> float:
    """Fraction of a unit source at ``p`` that falls in the cell of width ``dx`` centred on ``x``."""
    if sigma > 0.0:
        s = sigma * math.sqrt(2.0)
        return 0.5 * (math.erf((x + dx / 2 - p) / s) - math.erf((x - dx / 2 - p) / s))
    d = abs(p - x)
    return 1.0 - d / dx if d < dx else 0.0


class _Context:
    """Everything about (scenario, outcome) that does not depend on the query point."""

    def __init__(self, s: Scenario, outcome: FinalOutcome):
        tol = s.tolerances
        self.s = s
        self.T = s.T
        self.tol_causal = tol.tol_causal
        self.dx = s.grid.dx
        outcomes = branch_outcomes(s)
        self.labels = tuple(o.branch.label for o in outcomes)
        self.weights = tuple(o.weight for o in outcomes)
        self.outcome_index = self.labels.index(outcome.branch.label)
        self.deposits = tuple(
            tuple((d.x, (round(d.x / tol.tol_pos), round(d.energy / tol.tol_norm))) for d in o.deposits)
            for o in outcomes
        )
        self.sources: list[Source] = [Source("system", k) for k in range(len(s.systems))]
        self.sources += [Source("photon", k) for k in range(len(s.photons))]
        self.names = tuple(src.name for src in self.sources)
        self.energies = tuple(sys_.mass for sys_ in s.systems) + tuple(p.energy for p in s.photons)
        self.sigmas = tuple(sys_.sigma for sys_ in s.systems) + (0.0,) * len(s.photons)
        self.system_pos = tuple(o.branch.positions(s) for o in outcomes)
        self.trajectories = tuple(
            tuple(trace(p, o.branch, s, photon_id=k) for k, p in enumerate(s.photons))
            for o in outcomes
        )

    def key(self, b: int, t: float, x: float) -> list:
        r = self.T - t
        tol = self.tol_causal
        return sorted(q for xd, q in self.deposits[b] if abs(xd - x) - r > tol)

    def consistent(self, t: float, x: float) -> list[int]:
        if t > self.T:
            raise ValueError(f"time {t} beyond final hypersurface T={self.T}")
        want = self.key(self.outcome_index, t, x)
        out = [b for b in range(len(self.labels)) if b == self.outcome_index or self.key(b, t, x) == want]
        return out

    def posterior(self, cons: list[int]) -> list[float]:
        z = 0.0
        for b in cons:
            z += self.weights[b]
        if z <= 0.0:
            raise ValueError("consistent set has zero total weight")
        return [self.weights[b] / z for b in cons]

    def positions(self, b: int, t: float) -> tuple[float, ...]:
        return self.system_pos[b] + tuple(position_at(tr, t) for tr in self.trajectories[b])

    def evaluate(self, t: float, x: float, positions=None):
        """Return (consistent indices, posterior, contributions) at ``(t, x)``."""
        cons = self.consistent(t, x)
        post = self.posterior(cons)
        contrib = [0.0] * len(self.sources)
        for b, w in zip(cons, post):
            pos = positions[b] if positions is not None else self.positions(b, t)
            for k, p in enumerate(pos):
                f = render(p, x, self.dx, self.sigmas[k])
                if f:
                    contrib[k] += w * self.energies[k] * f
        return cons, post, contrib


@functools.lru_cache(maxsize=32)
def _context(s: Scenario, outcome: FinalOutcome) -> _Context:
    return _Context(s, outcome)


def beable_at(y: Event, outcome: FinalOutcome, s: Scenario) -> BeableSample:
    """Conditional-expectation beable at ``y`` given the final ``outcome``."""
    if not 0.0 <= y.t <= s.T:
        raise ValueError(f"event time {y.t} outside [0, T={s.T}]")
    ctx = _context(s, outcome)
    cons, post, contrib = ctx.evaluate(y.t, y.x)
    total = 0.0
    for c in contrib:
        total += c
    return BeableSample(
        y=y,
        total=total,
        contributions=dict(zip(ctx.names, contrib)),
        posterior={ctx.labels[b]: w for b, w in zip(cons, post)},
        consistent=tuple(ctx.labels[b] for b in cons),
    )


def ray_beable(photon_id: int, ray_points, outcome: FinalOutcome, s: Scenario) -> list[float]:
    """The named photon's beable at each point of a (candidate) ray."""
    name = f"photon{photon_id}"
    if photon_id < 0 or photon_id >= len(s.photons):
        raise ValueError(f"no photon with id {photon_id}")
    return [beable_at(y, outcome, s).contributions[name] for y in ray_points]


def _rows(s: Scenario, outcome: FinalOutcome, times, xs):
    ctx = _context(s, outcome)
    nb, ns = len(ctx.labels), len(ctx.sources)
    out = []
    for t in times:
        t = float(t)
        if not 0.0 <= t <= s.T:
            raise ValueError(f"grid time {t} outside [0, T={s.T}]")
        positions = [ctx.positions(b, t) for b in range(nb)]
        total = np.zeros(len(xs))
        contrib = np.zeros((ns, len(xs)))
        post = np.zeros((len(xs), nb))
        cons_mask = np.zeros((len(xs), nb), dtype=bool)
        for j, x in enumerate(xs):
            cons, p, c = ctx.evaluate(t, float(x), positions)
            acc = 0.0
            for k in range(ns):
                contrib[k, j] = c[k]
                acc += c[k]
            total[j] = acc
            post[j, cons] = p
            cons_mask[j, cons] = True
        out.append((total, contrib, post, cons_mask))
    return out


def _chunks(n: int, parts: int) -> list[range]:
    size = max(1, math.ceil(n / parts))
    return [range(i, min(n, i + size)) for i in range(0, n, size)]


def evaluate_grid(
    s: Scenario,
    outcome: FinalOutcome,
    times,
    xs,
    workers: int | None = 1,
) -> BeableField:
    """Beables at every ``(t, x)`` in ``times`` x ``xs``.

    Points are independent, so rows are farmed out to ``workers`` processes
    when ``workers > 1``; the result is identical to sequential evaluation.
    """
    times = np.asarray(times, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(times) > 1:
        chunks = _chunks(len(times), workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_rows, s, outcome, times[c.start:c.stop], xs) for c in chunks]
            rows = [r for f in futures for r in f.result()]
    else:
        rows = _rows(s, outcome, times, xs)

    ctx = _context(s, outcome)
    nt, nx, nb = len(times), len(xs), len(ctx.labels)
    total = np.zeros((nt, nx))
    contrib = np.zeros((len(ctx.sources), nt, nx))
    post = np.zeros((nt, nx, nb))
    cons = np.zeros((nt, nx, nb), dtype=bool)
    for i, (tr, cr, pr, mr) in enumerate(rows):
        total[i], contrib[:, i], post[i], cons[i] = tr, cr, pr, mr
    return BeableField(
        times=times,
        xs=xs,
        sources=ctx.names,
        branches=ctx.labels,
        outcome=outcome.branch.label,
        total=total,
        contributions={name: contrib[k] for k, name in enumerate(ctx.names)},
        posterior=post,
        consistent=cons,
    )


def compute_field(s: Scenario, outcome: FinalOutcome, workers: int | None = 1) -> BeableField:
    """Beables on the scenario's grid."""
    return evaluate_grid(s, outcome, s.grid.times, s.grid.xs, workers=workers)


def max_field_deviation(a: BeableField, b: BeableField) -> float:
    if a.shape != b.shape or a.sources != b.sources:
        raise ValueError("fields are not comparable")
    dev = float(np.max(np.abs(a.total - b.total), initial=0.0))
    for name in a.sources:
        dev = max(dev, float(np.max(np.abs(a.contributions[name] - b.contributions[name]), initial=0.0)))
    return dev


def interaction_time(s: Scenario) -> float:
    """Latest photon-system interaction over all branches (``-inf`` if none).

    Raises ``ValueError`` if some photon is trapped, since its interactions
    never end.
    """
    last = -math.inf
    for b in enumerate_branches(s):
        for k, p in enumerate(s.photons):
            try:
                h = interaction_horizon(p, b, s, photon_id=k)
            except TrappedPhotonError as exc:
                raise ValueError(str(exc)) from exc
            if h is not None:
                last = max(last, h)
    return last


def asymptotic_check(
    s: Scenario,
    branch_label: str,
    T_list,
    t_max: float | None = None,
    workers: int | None = 1,
) -> float:
    """Largest pairwise field difference over a fixed early subgrid as ``T`` varies.

    The subgrid is the scenario's grid truncated at ``t_max`` (default: the
    grid's own ``t_max``); the outcome is the named branch for every ``T``.
    """
    T_list = [float(T) for T in T_list]
    if not T_list:
        raise ValueError("T_list is empty")
    horizon = interaction_time(s)
    for T in T_list:
        if T <= horizon:
            raise ValueError(f"T={T} does not exceed the last interaction time {horizon}")
    if t_max is None:
        t_max = s.grid.t_max
    if t_max > min(T_list):
        raise ValueError(f"subgrid reaches t={t_max}, beyond the smallest T={min(T_list)}")
    times = s.grid.times
    times = times[times <= t_max + s.tolerances.tol_causal]
    xs = s.grid.xs

    fields = []
    for T in T_list:
        sT = s.with_T(T)
        fields.append(evaluate_grid(sT, outcome_for(sT, branch_label), times, xs, workers=workers))
    dev = 0.0
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            dev = max(dev, max_field_deviation(fields[i], fields[j]))
    return dev


def presence_intervals(s: Scenario, outcome: FinalOutcome, times=None, eps: float = 1e-12) -> list[dict]:
    """Runs of grid times where a source position carries a fraction strictly between 0 and 1.

    For each source and each distinct position it occupies across branches at
    time ``t``, the fraction is the posterior weight (at that exact point) of
    the consistent branches that put the source there. Before a collapse this
    is the Born weight; a fraction below one on the outcome branch's own
    photon path after divergence is the lightlike-ray artefact of the
    single-photon model.
    """
    ctx = _context(s, outcome)
    tol = s.tolerances.tol_pos
    if times is None:
        times = s.grid.times
    runs: dict[tuple, dict] = {}
    closed: list[dict] = []
    for t in map(float, times):
        pos = [ctx.positions(b, t) for b in range(len(ctx.labels))]
        seen = set()
        for k, name in enumerate(ctx.names):
            groups: dict[float, list[int]] = {}
            for b in range(len(ctx.labels)):
                for p0 in groups:
                    if abs(pos[b][k] - p0) <= tol:
                        groups[p0].append(b)
                        break
                else:
                    groups[pos[b][k]] = [b]
            if len(groups) < 2:
                continue
            for p0, members in groups.items():
                cons = ctx.consistent(t, p0)
                post = ctx.posterior(cons)
                frac = sum(w for b, w in zip(cons, post) if b in members)
                if eps < frac < 1.0 - eps:
                    rid = (name, tuple(ctx.labels[b] for b in members), round(frac, 12))
                    seen.add(rid)
                    if rid in runs:
                        runs[rid]["t_last"] = t
                    else:
                        runs[rid] = {"source": name, "branches": list(rid[1]), "fraction": frac,
                                     "t_first": t, "t_last": t}
        for rid in [r for r in runs if r not in seen]:
            closed.append(runs.pop(rid))
    closed.extend(runs.values())
    closed.sort(key=lambda r: (r["source"], r["t_first"], r["branches"]))
    return closed


def photon_artefact(s: Scenario, outcome: FinalOutcome, intervals=None) -> bool:
    """True if the outcome branch's own photon path carries less than a full photon somewhere."""
    if intervals is None:
        intervals = presence_intervals(s, outcome)
    return any(
        r["source"].startswith("photon") and outcome.branch.label in r["branches"]
        for r in intervals
    )
