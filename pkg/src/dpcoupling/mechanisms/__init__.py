"""Bundled mechanisms with their proofs, and the empirical DP tester."""

from .bundles import (
    BUILDERS, MechanismBundle, above_threshold, buggy_above_threshold, exp_mechanism,
    fresh_noise_above_threshold, naive_above_threshold, naive_cost, report_noisy_max,
    sparse_vector,
)
from .catalog import DATA_DIR, bundle_names, load_bundle
from .dptest import DPTestConfig, DPTestResult, empirical_dp_test

__all__ = [
    "BUILDERS", "DATA_DIR", "DPTestConfig", "DPTestResult", "MechanismBundle",
    "above_threshold", "buggy_above_threshold", "bundle_names", "empirical_dp_test",
    "exp_mechanism", "fresh_noise_above_threshold", "load_bundle",
    "naive_above_threshold", "naive_cost", "report_noisy_max", "sparse_vector",
]
