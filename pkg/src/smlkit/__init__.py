"""smlkit: exact leakage of a chosen statistic for discrete release mechanisms."""

from .core import (
    DEFAULT_ENUM_CAP,
    CategoricalParam,
    EnumerationCapError,
    InvalidPolicyError,
    Mechanism,
    PartitionError,
    ParameterSpace,
    PolicyMatrix,
    SecretPartition,
    SecretValue,
    build_partition,
    composition_count,
    enumerate_params,
    embed_param,
    fraction_secret,
    rank_param,
    tv_distance,
    unrank_param,
)
from .flow import FlowNetwork, FlowResult, build_sml_network, min_cost_flow, to_dot
from .leakage import (
    LeakageReport,
    ldp_parameter,
    ldp_ratio,
    min_entropy_leakage,
    min_entropy_raw,
    sandwich_bounds,
    sml,
    sml_bruteforce,
    sml_deterministic,
)
from .mechanisms import (
    ComposedMechanism,
    FractionQM,
    MaxLMechanism,
    PostProcessedMechanism,
    QMMechanism,
    RRMechanism,
    compose_policies,
    maxl_build,
    mismatched_qm_policy,
    mismatched_rr_policy,
    postprocess_policy,
)
from .tradeoff import (
    MismatchBounds,
    TabularScale,
    TradeoffPoint,
    distortion_exact,
    distortion_mc,
    mechanism_comparison,
    qm_decay_threshold,
    qm_distortion,
    qm_mismatch_bounds,
    qm_privacy,
    qm_privacy_raw,
    rr_distortion,
    rr_mismatch_bounds,
    rr_privacy,
    rr_privacy_raw,
    rr_robust_epsilon_cap,
    rr_robust_weight_cap,
    solve_rr_ratio,
    tradeoff_sweep,
)

__version__ = "0.1.0"
