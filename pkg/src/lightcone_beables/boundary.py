"""The fictitious final measurement on the hypersurface ``t = T``.

In the toy models every branch leaves a distinct, sharply localized pattern of
energy deposits on ``t = T``, so the Born distribution over final mass-energy
configurations reduces to the branch weights. Conditioning on the data in a
region is then a question of which branches leave the same deposits there.
Presence and absence are both captured by comparing multisets: a branch with
an extra (or a missing) deposit inside the region does not match.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .raytrace import position_at, trace
from .scenario import Branch, Scenario, enumerate_branches
from .spacetime import Event, OutsideFlcRegion, outside_flc_region


class Source(NamedTuple):
    kind: str  # "photon" | "system"
    id: int
    component: int | None = None  # occupied component, systems only

    @property
    def name(self) -> str:
        return f"{self.kind}{self.id}"


@dataclass(frozen=True)
class Deposit:
    x: float
    energy: float
    source: Source


@dataclass(frozen=True)
class FinalOutcome:
    branch: Branch
    deposits: tuple[Deposit, ...]
    weight: float


@dataclass(frozen=True)
class RestrictedDataKey:
    """Quantized ``(x, energy)`` pairs of the deposits inside a region, sorted."""

    entries: tuple[tuple[int, int], ...]


def final_deposits(branch: Branch, s: Scenario) -> tuple[Deposit, ...]:
    """One deposit per photon at its position at ``T``, one per system at its occupied site."""
    out = []
    for k, p in enumerate(s.photons):
        traj = trace(p, branch, s, photon_id=k)
        out.append(Deposit(position_at(traj, s.T), p.energy, Source("photon", k)))
    for k, (sys_, i) in enumerate(zip(s.systems, branch.choice)):
        out.append(Deposit(sys_.components[i].x, sys_.mass, Source("system", k, i)))
    return tuple(out)


@functools.lru_cache(maxsize=64)
def branch_outcomes(s: Scenario) -> tuple[FinalOutcome, ...]:
    """Every possible final outcome, in canonical branch order."""
    return tuple(
        FinalOutcome(branch=b, deposits=final_deposits(b, s), weight=b.weight)
        for b in enumerate_branches(s)
    )


def outcome_for(s: Scenario, label: str) -> FinalOutcome:
    for o in branch_outcomes(s):
        if o.branch.label == label:
            return o
    raise ValueError(f"no branch labelled {label!r}")


def sample_outcome(s: Scenario, seed: int | None = None) -> FinalOutcome:
    """Draw one final outcome with Born-rule probability, reproducibly per seed."""
    outcomes = branch_outcomes(s)
    rng = np.random.default_rng(s.seed if seed is None else seed)
    u = rng.random()
    cum = 0.0
    chosen = None
    for o in outcomes:
        if o.weight <= 0.0:
            continue
        chosen = o
        cum += o.weight
        if u < cum:
            break
    if chosen is None:
        raise ValueError("scenario has no branch with positive weight")
    return chosen


def _quantize(value: float, step: float) -> int:
    return int(round(value / step))


def restricted_key(
    deposits: Iterable[Deposit],
    region: OutsideFlcRegion,
    tol_pos: float = 1e-9,
    tol_norm: float = 1e-9,
) -> RestrictedDataKey:
    entries = sorted(
        (_quantize(d.x, tol_pos), _quantize(d.energy, tol_norm))
        for d in deposits
        if region.contains(d.x)
    )
    return RestrictedDataKey(tuple(entries))


def consistent_branches(outcome: FinalOutcome, y: Event, s: Scenario) -> list[Branch]:
    """Branches whose final data outside the future light cone of ``y`` match ``outcome``'s."""
    tol = s.tolerances
    region = outside_flc_region(y, s.T, tol.tol_causal)
    want = restricted_key(outcome.deposits, region, tol.tol_pos, tol.tol_norm)
    out = [
        o.branch
        for o in branch_outcomes(s)
        if restricted_key(o.deposits, region, tol.tol_pos, tol.tol_norm) == want
    ]
    if outcome.branch not in out:
        raise RuntimeError(f"outcome branch {outcome.branch.label} missing from its own consistent set at {y}")
    return out


def close_deposit_pairs(s: Scenario) -> list[tuple[Deposit, Deposit]]:
    """Cross-branch deposit pairs that are distinct but within ``10 * tol_pos``."""
    tol = s.tolerances.tol_pos
    pairs = []
    for a, b in itertools.combinations(branch_outcomes(s), 2):
        for da in a.deposits:
            for db in b.deposits:
                if 0.0 < abs(da.x - db.x) <= 10 * tol:
                    pairs.append((da, db))
    return pairs
