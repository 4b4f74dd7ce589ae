"""Location-privacy bounds for mmWave MISO-OFDM localization under delay-angle spoofing.

The package models a two-dimensional localization scene, applies a
CSI-free delay-angle spoofing precoder, and evaluates exact
estimation-theoretic bounds: the legitimate observer's Cramer-Rao bound
and the eavesdropper's misspecified counterpart, including the pseudo-true
scene the eavesdropper converges to and the identifiability of the secret
shift pair.
"""

from .analysis import (
    CSV_HEADER,
    ExperimentConfig,
    SweepRow,
    calibrate_sigma_for_snr,
    find_sigma0,
    run_sweep,
    write_sweep_csv,
    write_sweep_json,
)
from .config import SystemConfig
from .errors import (
    ConditionWarning,
    DaisLocError,
    DegeneracyError,
    DegenerateGeometry,
    DelayOutOfRange,
    InvalidInterval,
    InvalidNoise,
    NoThresholdInBracket,
    ScenarioError,
    SingularLocalizationFim,
    SingularMcrbFim,
    SingularNuisanceBlock,
    SolverDegenerate,
    ValidationError,
    ZeroSignal,
)
from .fisher import (
    AugmentedFimReport,
    BoundMatrices,
    FimStack,
    augmented_fim_rank,
    channel_fim,
    effective_fim,
    equilibrated_singular_value_ratio,
    fim_stack,
    localization_crb,
    mcrb,
    mcrb_generalized_fims_numeric,
    position_rmse,
)
from .geometry import (
    CaseLabel,
    PathParams,
    PseudoTrueScene,
    Scene,
    SpoofShift,
    apply_dais_shift,
    classify_wrap_case,
    geometry_jacobian,
    pseudo_true_scene,
    toa_aod_from_scene,
    wrap_half_open,
)
from .scenario import load_scenario, preset_config, scenario_from_text
from .signal import (
    PilotSet,
    Precoder,
    channel_vector,
    dais_precoder,
    fpi_precoder,
    free_space_gain,
    generate_pilots,
    observation_mean,
    observation_mean_jacobian,
    sample_noisy_observations,
    scene_channel_params,
    snr_db,
    steering_vector,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedFimReport",
    "BoundMatrices",
    "CSV_HEADER",
    "CaseLabel",
    "ConditionWarning",
    "DaisLocError",
    "DegeneracyError",
    "DegenerateGeometry",
    "DelayOutOfRange",
    "ExperimentConfig",
    "FimStack",
    "InvalidInterval",
    "InvalidNoise",
    "NoThresholdInBracket",
    "PathParams",
    "PilotSet",
    "Precoder",
    "PseudoTrueScene",
    "Scene",
    "ScenarioError",
    "SingularLocalizationFim",
    "SingularMcrbFim",
    "SingularNuisanceBlock",
    "SolverDegenerate",
    "SpoofShift",
    "SweepRow",
    "SystemConfig",
    "ValidationError",
    "ZeroSignal",
    "apply_dais_shift",
    "augmented_fim_rank",
    "calibrate_sigma_for_snr",
    "channel_fim",
    "channel_vector",
    "classify_wrap_case",
    "dais_precoder",
    "effective_fim",
    "equilibrated_singular_value_ratio",
    "fim_stack",
    "find_sigma0",
    "fpi_precoder",
    "free_space_gain",
    "generate_pilots",
    "geometry_jacobian",
    "load_scenario",
    "localization_crb",
    "mcrb",
    "mcrb_generalized_fims_numeric",
    "observation_mean",
    "observation_mean_jacobian",
    "position_rmse",
    "preset_config",
    "pseudo_true_scene",
    "run_sweep",
    "sample_noisy_observations",
    "scenario_from_text",
    "scene_channel_params",
    "snr_db",
    "steering_vector",
    "toa_aod_from_scene",
    "wrap_half_open",
    "write_sweep_csv",
    "write_sweep_json",
]
