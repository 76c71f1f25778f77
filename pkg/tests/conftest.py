import math

import pytest
from hypothesis import strategies as st

from lightcone_beables.oracle import ModelParams
from lightcone_beables.scenario import (
    Component,
    GridSpec,
    MassiveSystem,
    Photon,
    Scenario,
    load_scenario,
)

CANON_GRID = GridSpec(0.0, 12.0, 241, -10.0, 14.0, 241)


@pytest.fixture(scope="session")
def model1():
    return load_scenario("model1")


@pytest.fixture(scope="session")
def model2():
    return load_scenario("model2")


def model_scenario(p: ModelParams, model: int, grid: GridSpec | None = None) -> Scenario:
    """A Model 1 / Model 2 scenario built from oracle parameters."""
    system = MassiveSystem(
        components=(
            Component(p.x1, complex(math.sqrt(p.a_sq), 0.0)),
            Component(p.x2, complex(math.sqrt(p.b_sq), 0.0)),
        ),
        mass=p.m,
    )
    photons = [Photon(p.x1 - p.t1, 1, p.eps)]
    if model == 2:
        photons.append(Photon(p.x2 + p.t1, -1, p.eps))
    if grid is None:
        grid = GridSpec(0.0, min(12.0, p.T), 11, p.x1 - 10.0, p.x2 + 10.0, 21)
    return Scenario(systems=(system,), photons=tuple(photons), T=p.T, grid=grid)


def mirror_scenario(s: Scenario, centre: float) -> Scenario:
    """Reflect ``x -> 2*centre - x``, keeping component and photon order."""
    systems = tuple(
        MassiveSystem(
            components=tuple(Component(2 * centre - c.x, c.amplitude) for c in sys_.components),
            mass=sys_.mass,
            sigma=sys_.sigma,
        )
        for sys_ in s.systems
    )
    photons = tuple(Photon(2 * centre - p.x0, -p.dir, p.energy) for p in s.photons)
    g = s.grid
    grid = GridSpec(g.t_min, g.t_max, g.nt, 2 * centre - g.x_max, 2 * centre - g.x_min, g.nx)
    return Scenario(systems=systems, photons=photons, T=s.T, grid=grid, seed=s.seed, tolerances=s.tolerances)


@st.composite
def model2_params(draw):
    x1 = draw(st.floats(-5.0, 5.0))
    gap = draw(st.floats(0.5, 6.0))
    t1 = draw(st.floats(0.5, 8.0))
    a_sq = draw(st.floats(0.05, 0.95))
    # keep T clear of coincidences between final deposits of different kinds
    T = t1 + 3 * gap + draw(st.floats(1.0, 60.0))
    return ModelParams(x1=x1, x2=x1 + gap, t1=t1, a_sq=a_sq, T=T, outcome=draw(st.sampled_from([1, 2])))


@st.composite
def escaping_scenarios(draw):
    """Random multi-system scenarios whose photons all start outside the systems.

    A photon entering from outside reverses at most once and then leaves, so
    these scenarios are never trapped.
    """
    n_sys = draw(st.integers(0, 3))
    slots = draw(st.lists(st.integers(-20, 20), min_size=2 * n_sys, max_size=2 * n_sys, unique=True))
    systems = []
    for k in range(n_sys):
        n_comp = draw(st.integers(1, 2))
        xs = slots[2 * k: 2 * k + n_comp]
        raw = [draw(st.floats(0.05, 1.0)) for _ in xs]
        norm = math.sqrt(sum(r * r for r in raw))
        phases = [draw(st.floats(0.0, 2 * math.pi)) for _ in xs]
        comps = tuple(
            Component(x * 0.5, complex(r / norm * math.cos(ph), r / norm * math.sin(ph)))
            for x, r, ph in zip(xs, raw, phases)
        )
        systems.append(MassiveSystem(components=comps, mass=draw(st.sampled_from([1.0, 2.0, 0.5]))))
    all_x = [c.x for sys_ in systems for c in sys_.components] or [0.0]
    lo, hi = min(all_x), max(all_x)
    photons = []
    for _ in range(draw(st.integers(0, 3))):
        if draw(st.booleans()):
            photons.append(Photon(lo - draw(st.floats(0.25, 8.0)), 1, draw(st.sampled_from([1.0, 0.5]))))
        else:
            photons.append(Photon(hi + draw(st.floats(0.25, 8.0)), -1, draw(st.sampled_from([1.0, 0.5]))))
    horizon = (hi - lo) + 8.0
    T = horizon + draw(st.floats(1.0, 30.0))
    grid = GridSpec(0.0, horizon, 9, lo - 6.0, hi + 6.0, 25)
    return Scenario(systems=tuple(systems), photons=tuple(photons), T=T, grid=grid)


# acceptance criteria report their verdicts here; printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
