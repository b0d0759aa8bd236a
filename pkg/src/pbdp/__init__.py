"""Privacy-boosted differential privacy: mechanisms, accounting, planning.

The package reweights a standard additive-noise mechanism (the kernel) so a
preferred output region receives at least a target probability, and accounts
for the extra privacy leakage that the reweighting introduces -- as a privacy
profile delta(eps), under Renyi DP, and under T-fold composition.  A local-DP
variant boosts generalized randomized response within per-value categories.
"""

from .accounting import (
    LeakageParams,
    MCCurve,
    PrivacyPoint,
    compose_profile,
    compose_rdp,
    dominating_pair,
    invert_compose_profile,
    invert_profile,
    leakage_params,
    mc_privacy_check,
    pb_profile,
    pb_rdp,
    truncated_profile,
)
from .boost import (
    BoostParams,
    RegionSpec,
    UtilityReport,
    boost_params,
    boosted_region_mass,
    boosting_rate,
    pb_cdf,
    pb_pdf,
    pb_quantile,
    pb_sample,
    region_mass,
    verify_utility,
    worst_case_mass,
)
from .cases import CaseConfig, resolve_case
from .grr import (
    FrequencyReport,
    GRRSpec,
    confidence,
    estimate_category,
    estimate_value,
    frequency_report,
    grr_params,
    load_adult_ages,
    mse_sweep,
    perturb,
    perturb_many,
    synthetic_ages,
    transition_matrix,
    verify_ldp,
)
from .kernels import (
    KernelSpec,
    PLDRepr,
    calibrate_kernel,
    composed_kernel_profile,
    kernel_cdf,
    kernel_pdf,
    kernel_profile,
    kernel_quantile,
    kernel_rdp,
    kernel_sample,
)
from .planner import (
    PlanRequest,
    PlanResult,
    invert_region,
    invert_rho,
    kernel_only_eps,
    optimize_eps0,
    total_leakage,
    zero_boost_eps0,
    zero_boost_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "BoostParams",
    "CaseConfig",
    "FrequencyReport",
    "GRRSpec",
    "KernelSpec",
    "LeakageParams",
    "MCCurve",
    "PLDRepr",
    "PlanRequest",
    "PlanResult",
    "PrivacyPoint",
    "RegionSpec",
    "UtilityReport",
    "boost_params",
    "boosted_region_mass",
    "boosting_rate",
    "calibrate_kernel",
    "compose_profile",
    "compose_rdp",
    "composed_kernel_profile",
    "confidence",
    "dominating_pair",
    "estimate_category",
    "estimate_value",
    "frequency_report",
    "grr_params",
    "invert_compose_profile",
    "invert_profile",
    "invert_region",
    "invert_rho",
    "kernel_cdf",
    "kernel_only_eps",
    "kernel_pdf",
    "kernel_profile",
    "kernel_quantile",
    "kernel_rdp",
    "kernel_sample",
    "leakage_params",
    "load_adult_ages",
    "mc_privacy_check",
    "mse_sweep",
    "optimize_eps0",
    "pb_cdf",
    "pb_pdf",
    "pb_profile",
    "pb_quantile",
    "pb_rdp",
    "pb_sample",
    "perturb",
    "perturb_many",
    "region_mass",
    "resolve_case",
    "synthetic_ages",
    "total_leakage",
    "transition_matrix",
    "truncated_profile",
    "verify_ldp",
    "verify_utility",
    "worst_case_mass",
    "zero_boost_eps0",
    "zero_boost_kernel",
    "__version__",
]
