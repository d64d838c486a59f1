"""Antenna selection for mixed near-field/far-field XL-array downlink."""

from mixfield.channel import (
    ArrayGeometry,
    ChannelVector,
    CsiModel,
    UserSpec,
    apply_csi_error,
    far_field_steering,
    free_space_gain,
    los_channel,
    near_field_steering,
    rayleigh_distance,
    rician_channel,
)
from mixfield.metrics import (
    PowerVector,
    RateReport,
    SelectionMask,
    interference_coupling,
    mrt_weights,
    rate_full_array,
    rate_with_selection,
)
from mixfield.config import ScenarioConfig, load_config
from mixfield.estimators import (
    CommonSelection,
    ExhaustiveSelection,
    FullArray,
    GreedySelector,
    PddSelector,
    RandomSelection,
    SubarraySelection,
)
from mixfield.harness import run_experiment
from mixfield.pdd import PddConfig, pdd_solve
from mixfield.power import PowerSolverConfig, sca_power_alloc, two_user_power_search
from mixfield.presets import figure_suites
from mixfield.scenario import Scenario, SchemeResult
from mixfield.schemes import SCHEME_NAMES, run_scheme

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "ChannelVector",
    "CommonSelection",
    "CsiModel",
    "ExhaustiveSelection",
    "FullArray",
    "GreedySelector",
    "PddConfig",
    "PddSelector",
    "PowerSolverConfig",
    "PowerVector",
    "RandomSelection",
    "RateReport",
    "SCHEME_NAMES",
    "Scenario",
    "ScenarioConfig",
    "SchemeResult",
    "SelectionMask",
    "SubarraySelection",
    "UserSpec",
    "apply_csi_error",
    "far_field_steering",
    "figure_suites",
    "free_space_gain",
    "interference_coupling",
    "load_config",
    "los_channel",
    "mrt_weights",
    "near_field_steering",
    "pdd_solve",
    "rate_full_array",
    "rate_with_selection",
    "rayleigh_distance",
    "rician_channel",
    "run_experiment",
    "run_scheme",
    "sca_power_alloc",
    "two_user_power_search",
]
