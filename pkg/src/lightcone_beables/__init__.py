"""Light-cone-conditioned beables for 1+1 dimensional toy quantum models."""

__version__ = "0.1.0"

from .spacetime import CausalRelation, Event, OutsideFlcRegion, causal_relation, outside_flc_region
from .scenario import (
    Branch,
    Component,
    GridSpec,
    MassiveSystem,
    Photon,
    Scenario,
    ScenarioParseError,
    Tolerances,
    enumerate_branches,
    load_scenario,
    parse_scenario,
    validate,
)
from .raytrace import Trajectory, TrappedPhotonError, position_at, trace
from .boundary import (
    Deposit,
    FinalOutcome,
    consistent_branches,
    final_deposits,
    outcome_for,
    restricted_key,
    sample_outcome,
)
from .beables import (
    BeableField,
    BeableSample,
    asymptotic_check,
    beable_at,
    compute_field,
    ray_beable,
)
