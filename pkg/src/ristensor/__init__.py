"""Tensor-based joint channel and imperfection estimation for RIS-assisted
MIMO links, with a seeded Monte Carlo experiment harness and CLI."""

__version__ = "0.1.0"

from .estimators import (
    DisambiguationReport,
    FactorEstimates,
    bals,
    clairvoyant,
    disambiguate,
    estimate_hosvd_sti,
    hosvd_sti,
    matched_filter,
    normalize_first_entry,
)
from .exceptions import (
    DegenerateInputError,
    IdentifiabilityError,
    PlanValidationError,
)
from .harness import (
    METHODS,
    AggregateRecord,
    ExperimentPlan,
    GridPoint,
    RunRecord,
    aggregate,
    build_grid,
    nmse,
    run_plan,
)
from .reporting import emit_results, parse_plan, plan_from_mapping
from .scenario import (
    ChannelSet,
    ImpairmentConfig,
    Scenario,
    ScenarioConfig,
    build_received,
    gen_activation,
    gen_channels,
    gen_impairments,
    generate_scenario,
)
from .tensor_ops import (
    SvdTriple,
    dominant_svd,
    hosvd3,
    identity_tensor,
    khatri_rao,
    kron_vec,
    mode_fold,
    mode_product,
    mode_unfold,
    parafac_tensor,
    vec,
)

__all__ = [
    "__version__",
    # tensor ops
    "SvdTriple", "dominant_svd", "hosvd3", "identity_tensor", "khatri_rao",
    "kron_vec", "mode_fold", "mode_product", "mode_unfold", "parafac_tensor",
    "vec",
    # scenario
    "ChannelSet", "ImpairmentConfig", "Scenario", "ScenarioConfig",
    "build_received", "gen_activation", "gen_channels", "gen_impairments",
    "generate_scenario",
    # estimators
    "DisambiguationReport", "FactorEstimates", "bals", "clairvoyant",
    "disambiguate", "estimate_hosvd_sti", "hosvd_sti", "matched_filter",
    "normalize_first_entry",
    # harness
    "METHODS", "AggregateRecord", "ExperimentPlan", "GridPoint", "RunRecord",
    "aggregate", "build_grid", "nmse", "run_plan",
    # reporting
    "emit_results", "parse_plan", "plan_from_mapping",
    # exceptions
    "DegenerateInputError", "IdentifiabilityError", "PlanValidationError",
]
