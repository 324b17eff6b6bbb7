"""Analytical model of two-layer URT-LT decoding."""

from .engine import (
    AnalysisCurves,
    analysis_curves,
    cloud_transition_dist,
    converged_redundancy,
    expected_redundancy,
    expected_redundancy_feedback,
    expected_visits,
    feedback_state_dist,
    initial_state_dist,
    phase2_initial_dist,
    recursion_step,
    ripple_transition_dist,
    state_recursion,
)
from .ensemble import EvalBackend, ExactGuardError, StateDistribution
from .kernels import BASE, REFINEMENT, KernelPair, TwoLayerKernels, kernels_for, next_processed_dist, release_probs
from .reduced_degree import prob_next_redundant, reduced_degree_dist

__all__ = [
    "BASE",
    "REFINEMENT",
    "AnalysisCurves",
    "EvalBackend",
    "ExactGuardError",
    "KernelPair",
    "StateDistribution",
    "TwoLayerKernels",
    "analysis_curves",
    "cloud_transition_dist",
    "converged_redundancy",
    "expected_redundancy",
    "expected_redundancy_feedback",
    "expected_visits",
    "feedback_state_dist",
    "initial_state_dist",
    "kernels_for",
    "next_processed_dist",
    "phase2_initial_dist",
    "prob_next_redundant",
    "recursion_step",
    "reduced_degree_dist",
    "release_probs",
    "ripple_transition_dist",
    "state_recursion",
]
