import math

import numpy as np
import pytest

from lightcone_beables.beables import (
    asymptotic_check,
    beable_at,
    compute_field,
    evaluate_grid,
    photon_artefact,
    presence_intervals,
    ray_beable,
    render,
)
from lightcone_beables.boundary import outcome_for
from lightcone_beables.scenario import (
    Component,
    GridSpec,
    MassiveSystem,
    Photon,
    Scenario,
    enumerate_branches,
)
from lightcone_beables.spacetime import Event

X1, X2, T1, T = 0.0, 4.0, 5.0, 30.0
T2 = T1 + (X2 - X1)
A2, B2 = 0.3, 0.7


def system(s, o, t, x):
    return beable_at(Event(t, x), o, s).contributions["system0"]


@pytest.mark.parametrize(
    "t, x, expected",
    [
        (0.5, X2, B2),          # before 2*t1 - t2 = 1 both clouds persist
        (3.0, X2, 0.0),         # x2 emptied once the first-ray datum is spacelike
        (6.0, X1, 1.0),         # full mass at x1 after t1
        (3.0, X1, A2),          # only |a|^2 present at x1 before t1
    ],
)
def test_model1_system_beables(model1, t, x, expected):
    assert system(model1, outcome_for(model1, "1"), t, x) == pytest.approx(expected, abs=1e-12)


def test_model2_simultaneous_collapse(model2):
    o = outcome_for(model2, "1")
    assert system(model2, o, 2.0, X2) == 0.0
    assert system(model2, o, 2.0, X1) == pytest.approx(1.0, abs=1e-12)
    assert system(model2, o, 0.5, X2) == pytest.approx(B2, abs=1e-12)


@pytest.mark.parametrize(
    "model, x, before, after, t_c",
    [
        ("model1", X2, B2, 0.0, 2 * T1 - T2),
        ("model1", X1, A2, 1.0, T1),
        ("model2", X2, B2, 0.0, T1 - (X2 - X1)),
        ("model2", X1, A2, 1.0, T1 - (X2 - X1)),
    ],
)
def test_collapse_boundaries_keep_pre_collapse_value(request, model, x, before, after, t_c):
    s = request.getfixturevalue(model)
    o = outcome_for(s, "1")
    assert system(s, o, t_c - 1e-6, x) == pytest.approx(before, abs=1e-12)
    assert system(s, o, t_c, x) == pytest.approx(before, abs=1e-12)
    assert system(s, o, t_c + 1e-6, x) == pytest.approx(after, abs=1e-12)


def test_model1_first_outgoing_ray_carries_a_squared(model1):
    o = outcome_for(model1, "1")
    # with T = 30 late final data reach this ray only after (T + t1 - (x2 - x1)) / 2 = 15.5
    ts = np.linspace(5.1, 15.5, 60)
    vals = ray_beable(0, [Event(t, X1 + T1 - t) for t in ts], o, model1)
    assert vals == pytest.approx([A2] * len(ts), abs=1e-12)
    late = np.linspace(15.51, 29.0, 30)
    vals = ray_beable(0, [Event(t, X1 + T1 - t) for t in late], o, model1)
    assert vals == pytest.approx([1.0] * len(late), abs=1e-12)


def test_model1_crossover_recedes_with_T(model1):
    s = model1.with_T(300.0)
    o = outcome_for(s, "1")
    ts = np.linspace(5.1, 150.0, 50)
    assert ray_beable(0, [Event(t, X1 + T1 - t) for t in ts], o, s) == pytest.approx([A2] * 50, abs=1e-12)


def test_model1_counterfactual_ray_is_empty(model1):
    o = outcome_for(model1, "1")
    pts = [Event(t, X2 + T2 - t) for t in np.linspace(9.1, 29.0, 40)]
    assert ray_beable(0, pts, o, model1) == [0.0] * 40
    # so is the stretch of the incoming line that only branch 2 keeps using
    pts = [Event(t, X1 - T1 + t) for t in np.linspace(5.1, 9.0, 20)]
    assert ray_beable(0, pts, o, model1) == [0.0] * 20


def test_model2_rays(model2):
    o = outcome_for(model2, "1")
    # tracks closer than one cell share rendered energy, so samples start a cell past the split
    ts = np.linspace(5.1, 29.0, 40)
    assert ray_beable(0, [Event(t, X1 + T1 - t) for t in ts], o, model2) == pytest.approx([1.0] * 40)
    assert ray_beable(1, [Event(t, X1 + t - T2) for t in np.linspace(9.1, 29, 40)], o, model2) == pytest.approx([1.0] * 40)
    assert ray_beable(0, [Event(t, X2 + T2 - t) for t in np.linspace(9.1, 29, 40)], o, model2) == [0.0] * 40
    assert ray_beable(1, [Event(t, X2 + t - T1) for t in ts], o, model2) == [0.0] * 40


@pytest.mark.parametrize("model", ["model1", "model2"])
@pytest.mark.parametrize("label", ["1", "2"])
def test_incoming_rays_carry_full_photon(request, model, label):
    s = request.getfixturevalue(model)
    o = outcome_for(s, label)
    ts = np.linspace(0.0, T1, 26)
    assert ray_beable(0, [Event(t, X1 - T1 + t) for t in ts], o, s) == pytest.approx([1.0] * 26, abs=1e-12)
    if model == "model2":
        assert ray_beable(1, [Event(t, X2 + T1 - t) for t in ts], o, s) == pytest.approx([1.0] * 26, abs=1e-12)


def test_argument_errors(model1):
    o = outcome_for(model1, "1")
    with pytest.raises(ValueError):
        beable_at(Event(30.5, 0.0), o, model1)
    with pytest.raises(ValueError):
        beable_at(Event(-1.0, 0.0), o, model1)
    with pytest.raises(ValueError):
        ray_beable(3, [Event(1, 1)], o, model1)


def test_empty_scenario_field_is_zero():
    s = Scenario(systems=(), photons=(), T=20.0, grid=GridSpec(0, 10, 11, -5, 5, 21))
    (o,) = [outcome_for(s, b.label) for b in enumerate_branches(s)]
    f = compute_field(s, o)
    assert f.shape == (11, 21) and not f.total.any()
    assert (f.n_consistent == 1).all()


def test_single_branch_field_is_local_density():
    grid = GridSpec(0, 10, 21, -10, 10, 41)
    s = Scenario(
        systems=(MassiveSystem(components=(Component(2.0, 1j),), mass=2.0),),
        photons=(Photon(-8.0, 1, 0.5),),
        T=40.0, grid=grid,
    )
    f = compute_field(s, outcome_for(s, "1"))
    for i, t in enumerate(grid.times):
        photon_x = -8.0 + t if -8.0 + t <= 2.0 else 2.0 - (t - 10.0)
        for j, x in enumerate(grid.xs):
            assert f.contributions["system0"][i, j] == pytest.approx(2.0 * max(0.0, 1 - abs(x - 2.0) / 0.5), abs=1e-12)
            assert f.contributions["photon0"][i, j] == pytest.approx(0.5 * max(0.0, 1 - abs(x - photon_x) / 0.5), abs=1e-12)


def test_rendered_energy_is_conserved_per_row():
    grid = GridSpec(0, 10, 21, -20, 20, 161)
    s = Scenario(
        systems=(MassiveSystem(components=(Component(1.3, 1.0),), mass=1.0, sigma=0.7),),
        photons=(Photon(-7.77, 1, 1.0),),
        T=40.0, grid=grid,
    )
    f = compute_field(s, outcome_for(s, "1"))
    assert f.contributions["system0"].sum(axis=1) == pytest.approx([1.0] * 21, abs=1e-9)
    assert f.contributions["photon0"].sum(axis=1) == pytest.approx([1.0] * 21, abs=1e-12)


def test_render_profiles():
    assert render(0.0, 0.0, 0.1) == 1.0
    assert render(0.05, 0.0, 0.1) == pytest.approx(0.5)
    assert render(0.1, 0.0, 0.1) == 0.0
    # Gaussian cell integral
    sigma, dx = 0.4, 0.1
    expected = 0.5 * (math.erf(0.05 / (sigma * math.sqrt(2))) - math.erf(-0.05 / (sigma * math.sqrt(2))))
    assert render(0.0, 0.0, dx, sigma) == pytest.approx(expected, rel=1e-12)


def test_field_sample_matches_pointwise(model2):
    o = outcome_for(model2, "2")
    f = compute_field(model2.with_grid(nt=25, nx=49), o)
    rng = np.random.default_rng(0)
    for i, j in rng.integers(0, [25, 49], size=(40, 2)):
        sample = f.sample(i, j)
        direct = beable_at(sample.y, o, model2.with_grid(nt=25, nx=49))
        assert sample.total == direct.total
        assert sample.contributions == direct.contributions
        assert sample.consistent == direct.consistent
        assert sample.posterior == direct.posterior


def test_asymptotic_identical_T_is_exactly_zero(model1):
    assert asymptotic_check(model1, "1", [30.0, 30.0]) == 0.0


def test_asymptotic_model2_short_and_long_T(model2):
    assert asymptotic_check(model2, "1", [18.0, 60.0], t_max=12.0) < 1e-9


def test_asymptotic_model1_when_crossover_is_beyond_subgrid(model1):
    assert asymptotic_check(model1, "1", [30.0, 100.0], t_max=12.0) < 1e-9
    # T = 18 pulls the first-ray crossover down to t = 9.5, inside the subgrid
    assert asymptotic_check(model1, "1", [18.0, 30.0], t_max=9.5) < 1e-9
    assert asymptotic_check(model1, "1", [18.0, 30.0], t_max=12.0) == pytest.approx(1 - A2)


def test_asymptotic_argument_errors(model1):
    with pytest.raises(ValueError, match="last interaction"):
        asymptotic_check(model1, "1", [8.0, 30.0], t_max=5.0)
    with pytest.raises(ValueError, match="subgrid"):
        asymptotic_check(model1, "1", [10.0, 30.0], t_max=12.0)
    with pytest.raises(ValueError):
        asymptotic_check(model1, "3", [30.0])


def test_parallel_matches_sequential(model2):
    s = model2.with_grid(nt=31, nx=61)
    o = outcome_for(s, "1")
    a = compute_field(s, o, workers=1)
    b = compute_field(s, o, workers=3)
    assert a.total.tobytes() == b.total.tobytes()
    assert a.posterior.tobytes() == b.posterior.tobytes()


def test_presence_intervals_model1(model1):
    o = outcome_for(model1, "1")
    runs = {(r["source"], tuple(r["branches"])): r for r in presence_intervals(model1, o)}
    assert runs[("system0", ("1",))]["fraction"] == pytest.approx(A2)
    assert runs[("system0", ("1",))]["t_last"] == pytest.approx(T1)
    assert runs[("system0", ("2",))]["t_last"] == pytest.approx(2 * T1 - T2)
    ph = runs[("photon0", ("1",))]
    assert ph["fraction"] == pytest.approx(A2)
    assert ph["t_first"] == pytest.approx(5.05) and ph["t_last"] == pytest.approx(12.0)
    assert photon_artefact(model1, o)


def test_no_photon_artefact_in_model2(model2):
    for label in ("1", "2"):
        assert not photon_artefact(model2, outcome_for(model2, label))


def test_evaluate_grid_rejects_times_past_T(model1):
    with pytest.raises(ValueError):
        evaluate_grid(model1, outcome_for(model1, "1"), [31.0], [0.0])
