"""Toy-model scenarios: massive systems in superposition plus bouncing photons.

Systems never move (their Hamiltonian is zero). Only ``|amplitude|**2`` enters
the dynamics because every final state is branch-diagonal; phases are parsed,
stored, and otherwise ignored.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    tol_pos: float = 1e-9
    tol_norm: float = 1e-9
    tol_causal: float = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Rectangular evaluation grid, row-major in ``t`` then ``x``."""

    t_min: float
    t_max: float
    nt: int
    x_min: float
    x_max: float
    nx: int

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.nt)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nt, self.nx)


@dataclass(frozen=True)
class Component:
    x: float
    amplitude: complex

    @property
    def probability(self) -> float:
        return abs(self.amplitude) ** 2


@dataclass(frozen=True)
class MassiveSystem:
    components: tuple[Component, ...]
    mass: float = 1.0
    sigma: float = 0.0

    @property
    def positions(self) -> tuple[float, ...]:
        return tuple(c.x for c in self.components)


@dataclass(frozen=True)
class Photon:
    x0: float
    dir: int
    energy: float = 1.0


@dataclass(frozen=True)
class Scenario:
    systems: tuple[MassiveSystem, ...]
    photons: tuple[Photon, ...]
    T: float
    grid: GridSpec
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)

    def with_T(self, T: float) -> "Scenario":
        return replace(self, T=T)

    def with_grid(self, **changes) -> "Scenario":
        return replace(self, grid=replace(self.grid, **changes))


@dataclass(frozen=True)
class Branch:
    """One component choice per system (0-based indices)."""

    choice: tuple[int, ...]
    weight: float
    label: str

    def positions(self, s: Scenario) -> tuple[float, ...]:
        """Occupied position of every system in this branch."""
        return tuple(sys_.components[i].x for sys_, i in zip(s.systems, self.choice))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


EMPTY_BRANCH_LABEL = "-"


def branch_label(choice: Sequence[int]) -> str:
    """Canonical label: 1-based component indices joined by dots ("1", "2.1", ...)."""
    if not choice:
        return EMPTY_BRANCH_LABEL
    return ".".join(str(i + 1) for i in choice)


def enumerate_branches(s: Scenario) -> list[Branch]:
    """All branches in canonical (lexicographic) order with Born weights."""
    ranges = [range(len(sys_.components)) for sys_ in s.systems]
    branches = []
    for choice in itertools.product(*ranges):
        weight = 1.0
        for sys_, i in zip(s.systems, choice):
            weight *= sys_.components[i].probability
        branches.append(Branch(choice=tuple(choice), weight=weight, label=branch_label(choice)))
    return branches


def find_branch(s: Scenario, label: str) -> Branch:
    for b in enumerate_branches(s):
        if b.label == label:
            return b
    raise ValueError(f"no branch labelled {label!r}")


def validate(s: Scenario) -> list[Violation]:
    """Return every problem found with ``s``; an empty list means valid."""
    out: list[Violation] = []
    tol = s.tolerances

    for k, sys_ in enumerate(s.systems):
        if not sys_.components:
            out.append(Violation("components", f"system {k} has no components"))
            continue
        if not (sys_.mass > 0 and math.isfinite(sys_.mass)):
            out.append(Violation("mass", f"system {k} mass must be positive, got {sys_.mass}"))
        if not sys_.sigma >= 0:
            out.append(Violation("sigma", f"system {k} sigma must be >= 0, got {sys_.sigma}"))
        norm = sum(c.probability for c in sys_.components)
        if abs(norm - 1.0) > tol.tol_norm:
            out.append(Violation("norm", f"system {k} amplitudes have total probability {norm!r}"))
        min_sep = max(4 * sys_.sigma, tol.tol_pos)
        for (i, ci), (j, cj) in itertools.combinations(enumerate(sys_.components), 2):
            if abs(ci.x - cj.x) <= min_sep:
                out.append(Violation(
                    "overlap",
                    f"system {k} components {i} and {j} are closer than {min_sep}",
                ))

    for (k, a), (l, b) in itertools.combinations(enumerate(s.systems), 2):
        for ca in a.components:
            for cb in b.components:
                if abs(ca.x - cb.x) <= tol.tol_pos:
                    out.append(Violation(
                        "coincident",
                        f"systems {k} and {l} both have a component at x={ca.x}",
                    ))

    for k, p in enumerate(s.photons):
        if p.dir not in (1, -1):
            out.append(Violation("photon", f"photon {k} dir must be +1 or -1, got {p.dir}"))
        if not (p.energy > 0 and math.isfinite(p.energy)):
            out.append(Violation("photon", f"photon {k} energy must be positive, got {p.energy}"))

    g = s.grid
    if not math.isfinite(s.T) or s.T <= 0:
        out.append(Violation("T", f"T must be positive and finite, got {s.T}"))
    if g.nt < 1 or g.nx < 2:
        out.append(Violation("grid", f"grid needs nt >= 1 and nx >= 2, got nt={g.nt} nx={g.nx}"))
    if not (0 <= g.t_min <= g.t_max <= s.T):
        out.append(Violation("grid", f"grid times [{g.t_min}, {g.t_max}] not within [0, T={s.T}]"))
    if not g.x_min < g.x_max:
        out.append(Violation("grid", f"grid x range [{g.x_min}, {g.x_max}] is empty"))

    untraceable = {"components", "photon", "T", "coincident"}
    if any(v.code in untraceable for v in out):
        return out

    from .raytrace import TrappedPhotonError, interaction_horizon

    for b in enumerate_branches(s):
        for k, p in enumerate(s.photons):
            try:
                last = interaction_horizon(p, b, s, photon_id=k)
            except TrappedPhotonError as exc:
                out.append(Violation("trapped", str(exc)))
                continue
            if last is not None and last >= s.T:
                out.append(Violation(
                    "T too small",
                    f"photon {k} interacts at t={last} in branch {b.label}, not before T={s.T}",
                ))

    if not out:
        from .boundary import close_deposit_pairs

        for pair in close_deposit_pairs(s):
            log.warning("deposits %s and %s are distinct but within 10*tol_pos", *pair)
    return out


# --------------------------------------------------------------------------
# Scenario files (YAML)
# --------------------------------------------------------------------------


class ScenarioParseError(ValueError):
    """A scenario document is malformed; the message names the key and line."""


def _compose(text: str, source: str):
    import yaml

    try:
        return yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ScenarioParseError(f"{source}: YAML syntax error{where}: {exc}") from exc


class _Doc:
    """Schema walker over a composed YAML node tree, keeping line numbers."""

    def __init__(self, source: str):
        self.source = source

    def fail(self, node, path: str, msg: str):
        line = node.start_mark.line + 1 if node is not None else "?"
        raise ScenarioParseError(f"{self.source}: line {line}: {path or '<root>'}: {msg}")

    def mapping(self, node, path: str, allowed: dict[str, bool]):
        import yaml

        if not isinstance(node, yaml.MappingNode):
            self.fail(node, path, "expected a mapping")
        items = {}
        for key_node, value_node in node.value:
            key = key_node.value
            kpath = f"{path}.{key}" if path else key
            if key not in allowed:
                self.fail(key_node, kpath, "unknown key")
            if key in items:
                self.fail(key_node, kpath, "duplicate key")
            items[key] = value_node
        for key, required in allowed.items():
            if required and key not in items:
                self.fail(node, path, f"missing required key {key!r}")
        return items

    def sequence(self, node, path: str):
        import yaml

        if not isinstance(node, yaml.SequenceNode):
            self.fail(node, path, "expected a list")
        return node.value

    def scalar(self, node, path: str):
        import yaml

        if not isinstance(node, yaml.ScalarNode):
            self.fail(node, path, "expected a scalar")
        return yaml.SafeLoader(" ").construct_object(node)

    def number(self, node, path: str) -> float:
        v = self.scalar(node, path)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(node, path, f"expected a number, got {v!r}")
        return float(v)

    def integer(self, node, path: str) -> int:
        v = self.scalar(node, path)
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(node, path, f"expected an integer, got {v!r}")
        return v


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Build a :class:`Scenario` from YAML text. Unknown keys are rejected."""
    root = _compose(text, source)
    doc = _Doc(source)
    if root is None:
        raise ScenarioParseError(f"{source}: empty document")
    top = doc.mapping(root, "", {
        "systems": False, "photons": False, "T": True, "grid": True,
        "seed": False, "tolerances": False,
    })

    systems = []
    if "systems" in top:
        for i, sn in enumerate(doc.sequence(top["systems"], "systems")):
            p = f"systems[{i}]"
            sm = doc.mapping(sn, p, {"mass": False, "sigma": False, "components": True})
            comps = []
            for j, cn in enumerate(doc.sequence(sm["components"], f"{p}.components")):
                cp = f"{p}.components[{j}]"
                cm = doc.mapping(cn, cp, {"x": True, "re": True, "im": False})
                re_ = doc.number(cm["re"], f"{cp}.re")
                im_ = doc.number(cm["im"], f"{cp}.im") if "im" in cm else 0.0
                comps.append(Component(x=doc.number(cm["x"], f"{cp}.x"), amplitude=complex(re_, im_)))
            systems.append(MassiveSystem(
                components=tuple(comps),
                mass=doc.number(sm["mass"], f"{p}.mass") if "mass" in sm else 1.0,
                sigma=doc.number(sm["sigma"], f"{p}.sigma") if "sigma" in sm else 0.0,
            ))

    photons = []
    if "photons" in top:
        for i, pn in enumerate(doc.sequence(top["photons"], "photons")):
            p = f"photons[{i}]"
            pm = doc.mapping(pn, p, {"x0": True, "dir": True, "energy": False})
            photons.append(Photon(
                x0=doc.number(pm["x0"], f"{p}.x0"),
                dir=doc.integer(pm["dir"], f"{p}.dir"),
                energy=doc.number(pm["energy"], f"{p}.energy") if "energy" in pm else 1.0,
            ))

    gm = doc.mapping(top["grid"], "grid", {k: True for k in ("tMin", "tMax", "nt", "xMin", "xMax", "nx")})
    grid = GridSpec(
        t_min=doc.number(gm["tMin"], "grid.tMin"),
        t_max=doc.number(gm["tMax"], "grid.tMax"),
        nt=doc.integer(gm["nt"], "grid.nt"),
        x_min=doc.number(gm["xMin"], "grid.xMin"),
        x_max=doc.number(gm["xMax"], "grid.xMax"),
        nx=doc.integer(gm["nx"], "grid.nx"),
    )

    tols = Tolerances()
    if "tolerances" in top:
        tm = doc.mapping(top["tolerances"], "tolerances",
                         {"tol_pos": False, "tol_norm": False, "tol_causal": False})
        tols = Tolerances(**{k: doc.number(v, f"tolerances.{k}") for k, v in tm.items()})

    seed = 0
    if "seed" in top:
        seed = doc.integer(top["seed"], "seed")
        if seed < 0:
            doc.fail(top["seed"], "seed", "seed must be non-negative")

    return Scenario(
        systems=tuple(systems),
        photons=tuple(photons),
        T=doc.number(top["T"], "T"),
        grid=grid,
        seed=seed,
        tolerances=tols,
    )


CANONICAL = ("model1", "model2")


def load_scenario(path_or_name: str) -> Scenario:
    """Load a scenario file, or one of the bundled canonical models by name."""
    from pathlib import Path

    if path_or_name in CANONICAL and not Path(path_or_name).exists():
        from importlib import resources

        ref = resources.files("lightcone_beables") / "scenarios" / f"{path_or_name}.yaml"
        return parse_scenario(ref.read_text(), source=path_or_name)
    path = Path(path_or_name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"{path}: cannot read scenario file: {exc}") from exc
    return parse_scenario(text, source=str(path))


def scenario_to_dict(s: Scenario) -> dict:
    """Inverse of :func:`parse_scenario`, as plain data."""
    g = s.grid
    return {
        "systems": [
            {
                "mass": sys_.mass,
                "sigma": sys_.sigma,
                "components": [
                    {"x": c.x, "re": c.amplitude.real, "im": c.amplitude.imag}
                    for c in sys_.components
                ],
            }
            for sys_ in s.systems
        ],
        "photons": [{"x0": p.x0, "dir": p.dir, "energy": p.energy} for p in s.photons],
        "T": s.T,
        "grid": {"tMin": g.t_min, "tMax": g.t_max, "nt": g.nt,
                 "xMin": g.x_min, "xMax": g.x_max, "nx": g.nx},
        "seed": s.seed,
        "tolerances": {"tol_pos": s.tolerances.tol_pos, "tol_norm": s.tolerances.tol_norm,
                       "tol_causal": s.tolerances.tol_causal},
    }


def dump_scenario(s: Scenario) -> str:
    import yaml

    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)
