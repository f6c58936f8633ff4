"""Finite-blocklength rate-distortion-error bounds for integrated sensing and
communication over state-dependent discrete memoryless channels."""

from .bounds import (
    BoundParams,
    BoundResult,
    achievability_rate,
    converse_rate,
    optimize_delta,
    optimize_k,
    q_func,
    q_inv,
    second_order_rate,
)
from .channel import (
    ChannelError,
    InfoMoments,
    InputDist,
    StateDMC,
    binary_channel,
    info_density,
    info_moments,
    load_channel,
    marginal_channel,
    moments_for,
    output_dist,
    save_channel,
)
from .estimator import (
    EstimatorTable,
    d_min,
    d_trivial,
    estimator_table,
    expected_distortion,
    optimal_estimate,
    posterior,
)
from .simulate import CodeParams, SimReport, run_experiment
from .tradeoff import (
    BinaryChannelSpec,
    TradeoffPoint,
    basic_resource_sharing,
    binary_closed_forms,
    feasible_inputs,
    improved_resource_sharing,
    max_rate,
    sweep,
)

__version__ = "0.1.0"
