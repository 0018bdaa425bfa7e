"""Resampling-based inference for factorial repeated-measures designs.

Implements the Wald-type statistic (asymptotic chi-square test), the
ANOVA-type statistic (Box-approximated F test), a pooled-observation
permutation version of the Wald-type test, and nonparametric/parametric
bootstrap counterparts, for split-plot designs with possibly unequal group
covariance matrices. A Monte Carlo harness reproduces type-I error, quantile
distance, power and large-sample studies.
"""

from .design import (
    FactorialLayout,
    HypothesisMatrix,
    custom_hypothesis,
    hyp_three_factor,
    hyp_two_factor,
)
from .distributions import RngStream
from .inference import (
    Dataset,
    GroupSummary,
    ScaledCovariance,
    TestOutcome,
    ats_f_test,
    ats_f_test_from_summaries,
    ats_tilde,
    box_df,
    scaled_cov,
    summarize,
    wts,
    wts_from_summaries,
)
from .resampling import (
    ResamplePlan,
    ResampleResult,
    npbs,
    pbs,
    permutation_limit_diagnostics,
    permute_pooled,
    wtps,
)
from .simulate import (
    ScenarioConfig,
    gen_cov,
    gen_dataset,
    run_kqs,
    run_large_sample,
    run_power,
    run_type1,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FactorialLayout",
    "GroupSummary",
    "HypothesisMatrix",
    "ResamplePlan",
    "ResampleResult",
    "RngStream",
    "ScaledCovariance",
    "ScenarioConfig",
    "TestOutcome",
    "ats_f_test",
    "ats_f_test_from_summaries",
    "ats_tilde",
    "box_df",
    "custom_hypothesis",
    "gen_cov",
    "gen_dataset",
    "hyp_three_factor",
    "hyp_two_factor",
    "npbs",
    "pbs",
    "permutation_limit_diagnostics",
    "permute_pooled",
    "run_kqs",
    "run_large_sample",
    "run_power",
    "run_type1",
    "scaled_cov",
    "summarize",
    "wts",
    "wts_from_summaries",
    "wtps",
]
