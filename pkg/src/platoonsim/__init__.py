"""SLO-aware service wrappers for vehicle platoons.

The library has three layers: interpretable fulfillment models (a
discrete Bayesian network per service type and device type), the
decision loop that wraps each running service (retrain on drift,
offload when a better host exists), and a deterministic world that
exercises the whole platoon under scripted load and membership churn.
"""

from .bayesnet import (
    DistributionSet,
    SloIModel,
    build_model,
    infer_slo,
    marginal_hw,
    model_fingerprint,
    model_from_text,
    model_to_text,
    parl_update,
    query_conditional,
)
from .bins import Binning, hardware_grid, metric_grid
from .errors import (
    InconsistentEvidenceError,
    NotLeaderError,
    PlatoonSimError,
    ScenarioError,
    SearchSpaceTooLargeError,
)
from .hwconv import conv_hw, convolve
from .offload import (
    HandoverOutcome,
    HandoverState,
    begin_handover,
    evaluate_offload,
    find_offload,
    handover_tick,
    predict_set_fulfillment,
)
from .oracle import exhaustive_assignment, single_move_argmax
from .platoon import (
    AssignmentMap,
    ModelRegistry,
    Platoon,
    PlatoonView,
    Vehicle,
    apply_model_update,
    handle_retrain_request,
)
from .slo_core import (
    MetricsBuffer,
    MetricsRecord,
    Observation,
    SlidingWindow,
    Slo,
    SloSet,
    set_fulfillment,
    slo_fulfillment,
)
from .templates import ModelCatalog, ServiceTypeDef
from .wrapper import (
    ServiceSpec,
    WrapperConfig,
    WrapperState,
    effective_slos,
    wrapper_tick,
)
from .worldsim import (
    RunResult,
    ScenarioScript,
    World,
    bundled_scenario_path,
    inject_perturbation,
    load_scenario,
    load_scenario_text,
    run_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AssignmentMap",
    "Binning",
    "DistributionSet",
    "HandoverOutcome",
    "HandoverState",
    "InconsistentEvidenceError",
    "MetricsBuffer",
    "MetricsRecord",
    "ModelCatalog",
    "ModelRegistry",
    "NotLeaderError",
    "Observation",
    "Platoon",
    "PlatoonSimError",
    "PlatoonView",
    "RunResult",
    "ScenarioError",
    "ScenarioScript",
    "SearchSpaceTooLargeError",
    "ServiceSpec",
    "ServiceTypeDef",
    "SlidingWindow",
    "Slo",
    "SloIModel",
    "SloSet",
    "Vehicle",
    "World",
    "WrapperConfig",
    "WrapperState",
    "apply_model_update",
    "begin_handover",
    "build_model",
    "bundled_scenario_path",
    "conv_hw",
    "convolve",
    "effective_slos",
    "evaluate_offload",
    "exhaustive_assignment",
    "find_offload",
    "handle_retrain_request",
    "handover_tick",
    "hardware_grid",
    "infer_slo",
    "inject_perturbation",
    "load_scenario",
    "load_scenario_text",
    "marginal_hw",
    "metric_grid",
    "model_fingerprint",
    "model_from_text",
    "model_to_text",
    "parl_update",
    "predict_set_fulfillment",
    "query_conditional",
    "run_scenario",
    "set_fulfillment",
    "single_move_argmax",
    "slo_fulfillment",
    "wrapper_tick",
]
