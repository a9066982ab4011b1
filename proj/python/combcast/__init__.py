"""Max-min beamforming, spectral-efficiency simulation, and popularity
threshold analysis for mixed broadcast/unicast delivery from cooperating
base stations."""

from combcast._core import (
    AlphaReport,
    BeamformingResult,
    BroadcastProblem,
    ChannelConfig,
    ChannelMatrix,
    ConfigError,
    CostParams,
    DemandProfile,
    DrawRecord,
    EfficiencyEstimate,
    ImprovementSummary,
    Mode,
    PrecoderSet,
    SimConfig,
    SolveOutcome,
    SolverBudgetError,
    ThresholdReport,
    Topology,
    UnicastProblem,
    ZipfModel,
    argmin_discrete,
    closed_form_threshold,
    cost_params,
    estimate_spectral_efficiencies,
    evaluate_draw,
    generate_channel,
    improvement_report,
    make_demand_profile,
    parse_config,
    parse_config_text,
    per_antenna_power,
    place_users,
    run_demand,
    run_simulate,
    run_sweep,
    run_threshold,
    sinr,
    solve_broadcast_maxmin,
    solve_unicast_maxmin,
    spectral_efficiency,
    time_increment,
    total_time,
    volume_broadcast,
    volume_unicast,
    zipf_normalization,
)

__all__ = [
    "AlphaReport",
    "BeamformingResult",
    "BroadcastProblem",
    "ChannelConfig",
    "ChannelMatrix",
    "ConfigError",
    "CostParams",
    "DemandProfile",
    "DrawRecord",
    "EfficiencyEstimate",
    "ImprovementSummary",
    "Mode",
    "PrecoderSet",
    "SimConfig",
    "SolveOutcome",
    "SolverBudgetError",
    "ThresholdReport",
    "Topology",
    "UnicastProblem",
    "ZipfModel",
    "argmin_discrete",
    "closed_form_threshold",
    "cost_params",
    "estimate_spectral_efficiencies",
    "evaluate_draw",
    "generate_channel",
    "improvement_report",
    "make_demand_profile",
    "parse_config",
    "parse_config_text",
    "per_antenna_power",
    "place_users",
    "run_demand",
    "run_simulate",
    "run_sweep",
    "run_threshold",
    "sinr",
    "solve_broadcast_maxmin",
    "solve_unicast_maxmin",
    "spectral_efficiency",
    "time_increment",
    "total_time",
    "volume_broadcast",
    "volume_unicast",
    "zipf_normalization",
]
