from s3rr.services.evaluation.metrics import (
    TrialSummary,
    normalize_to_range,
    pearson,
    summarize_trials,
)
from s3rr.services.evaluation.reports import (
    CorrelationReport,
    PolicyReport,
    ScatterPoint,
    correlation_report,
    discounted_return,
    policy_report,
)
from s3rr.services.evaluation.test_split import TestSplitConfig, generate_test_split, off_grid_etas


__all__ = [
    "CorrelationReport",
    "PolicyReport",
    "ScatterPoint",
    "TestSplitConfig",
    "TrialSummary",
    "correlation_report",
    "discounted_return",
    "generate_test_split",
    "normalize_to_range",
    "off_grid_etas",
    "pearson",
    "policy_report",
    "summarize_trials",
]
