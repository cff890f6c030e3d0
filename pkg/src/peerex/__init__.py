"""peerex: peer vs. external influence decomposition for activation cascades.

Given an undirected friendship network and the times at which nodes
activated, classify each activation as peer-driven (explained by
exponentially decaying influence from already-activated friends) or
externally driven (network-wide pressure such as mass media). Includes a
labeled-cascade simulator, a degree-preserving null model, a parameter
calibrator, and attribute homophily metrics.
"""

__version__ = "0.1.0"

from .calibrator import (
    CalibrationGrid,
    SweepResult,
    default_period,
    peer_fraction,
    robustness_max_l1,
    sweep,
)
from .cascade import (
    Cascade,
    Window,
    activity_histogram,
    newly_activated,
    non_activated,
)
from .errors import (
    DegenerateStateError,
    EmptyInputError,
    FormatError,
    PeerexError,
    UndefinedFractionError,
    UnknownAttributeError,
)
from .estimator import (
    InfluenceSeries,
    NodeClassification,
    PeerParams,
    WindowDecomposition,
    balanced_accuracy,
    baseline_external,
    baseline_labels,
    confusion_counts,
    decompose_window,
    influence_series,
    mean_nonactivated_probability,
    peer_probability,
)
from .graph import (
    Network,
    NodeAttributes,
    age_band,
    configuration_rewire,
    giant_component,
    load_network,
)
from .homophily import (
    AgeGapHistogram,
    HomophilyProfile,
    MixingMatrix,
    SameFractionHistogram,
    age_gap_distribution,
    homophily_profile,
    mixing_matrix,
    same_fraction_histogram,
)
from .simulator import (
    ExternalSpike,
    LabeledCascade,
    SimConfig,
    simulate,
)

__all__ = [
    "__version__",
    # graph
    "Network",
    "NodeAttributes",
    "age_band",
    "load_network",
    "giant_component",
    "configuration_rewire",
    # cascade
    "Cascade",
    "Window",
    "newly_activated",
    "non_activated",
    "activity_histogram",
    # estimator
    "PeerParams",
    "WindowDecomposition",
    "NodeClassification",
    "InfluenceSeries",
    "peer_probability",
    "mean_nonactivated_probability",
    "decompose_window",
    "influence_series",
    "baseline_external",
    "baseline_labels",
    "confusion_counts",
    "balanced_accuracy",
    # simulator
    "ExternalSpike",
    "SimConfig",
    "LabeledCascade",
    "simulate",
    # calibrator
    "CalibrationGrid",
    "SweepResult",
    "peer_fraction",
    "sweep",
    "default_period",
    "robustness_max_l1",
    # homophily
    "SameFractionHistogram",
    "MixingMatrix",
    "AgeGapHistogram",
    "HomophilyProfile",
    "same_fraction_histogram",
    "mixing_matrix",
    "age_gap_distribution",
    "homophily_profile",
    # errors
    "PeerexError",
    "EmptyInputError",
    "FormatError",
    "DegenerateStateError",
    "UndefinedFractionError",
    "UnknownAttributeError",
]
