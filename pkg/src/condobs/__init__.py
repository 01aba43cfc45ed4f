"""Online estimation of maximal conductances in networked conductance-based
neuron models, via full and distributed adaptive observers."""

from .kinetics import (
    BellTauParams,
    GateKinetics,
    KineticsError,
    RateFn,
    SigmoidParams,
    SynapseKinetics,
)
from .model import (
    Constant,
    CurrentType,
    LogisticRamp,
    ModelError,
    NetworkModel,
    SystemState,
    hh2_initial_state,
    hh2_observer_init,
    hh_two_neuron_preset,
    model_preset,
)
from .observer import (
    DistributedObserverState,
    FullObserverState,
    GainSchedule,
    ObserverError,
    ScalarObserverState,
    gain_preset,
    init_observer,
    state_counts,
)
from .engine import (
    EngineError,
    IntegratorConfig,
    Multisine,
    NoiseConfig,
    NumericalError,
    input_preset,
    run_experiment,
)
from .trace import Trace, TraceError
from .analysis import (
    AnalysisError,
    AssumptionIIReport,
    CompareReport,
    ErrorMetrics,
    PEReport,
    assumption_ii_check,
    compare_runs,
    error_metrics,
    pe_check,
    run_metrics,
)
from .config import ConfigError, ExperimentConfig, model_from_json, model_to_json

__version__ = "1.0.0"

__all__ = [
    "BellTauParams", "GateKinetics", "KineticsError", "RateFn",
    "SigmoidParams", "SynapseKinetics",
    "Constant", "CurrentType", "LogisticRamp", "ModelError", "NetworkModel",
    "SystemState", "hh2_initial_state", "hh2_observer_init",
    "hh_two_neuron_preset", "model_preset",
    "DistributedObserverState", "FullObserverState", "GainSchedule",
    "ObserverError", "ScalarObserverState", "gain_preset", "init_observer",
    "state_counts",
    "EngineError", "IntegratorConfig", "Multisine", "NoiseConfig",
    "NumericalError", "input_preset", "run_experiment",
    "Trace", "TraceError",
    "AnalysisError", "AssumptionIIReport", "CompareReport", "ErrorMetrics",
    "PEReport", "assumption_ii_check", "compare_runs", "error_metrics",
    "pe_check", "run_metrics",
    "ConfigError", "ExperimentConfig", "model_from_json", "model_to_json",
    "__version__",
]
