"""Monte-Carlo simulation of the primal and dual switched systems."""
from .backend import available as available_backends
from .engine import (MCEstimate, SamplePath, default_grid_steps, duality_check,
                     duality_residuals, mc_cost_dual, simulate_batch, simulate_dual,
                     simulate_dual_paths, simulate_primal, simulate_primal_paths,
                     write_paths_csv)
from .paths import ModePath, compensated_integral, path_rng, sample_mode_path, sample_mode_paths
from .policies import (BurstPolicy, DualPolicy, GramianControl, LinearDualFeedback,
                       LinearPrimalFeedback, PrimalPolicy, RiccatiFeedback, ZeroDual,
                       ZeroPrimal, burst_policy, constant_dual, gramian_control, matrix_exp,
                       pre_jump_drift, random_linear_policies, riccati_feedback_policy,
                       stationary_dual_policy)

__all__ = [
    "available_backends", "MCEstimate", "SamplePath", "default_grid_steps",
    "duality_check", "duality_residuals", "mc_cost_dual", "simulate_batch",
    "simulate_dual", "simulate_dual_paths", "simulate_primal", "simulate_primal_paths", "write_paths_csv", "ModePath",
    "compensated_integral", "path_rng", "sample_mode_path", "sample_mode_paths",
    "BurstPolicy", "DualPolicy", "GramianControl", "LinearDualFeedback",
    "LinearPrimalFeedback", "PrimalPolicy", "RiccatiFeedback", "ZeroDual", "ZeroPrimal",
    "burst_policy", "constant_dual", "gramian_control", "matrix_exp", "pre_jump_drift",
    "random_linear_policies", "riccati_feedback_policy", "stationary_dual_policy",
]
