"""LLM-as-judge evaluation: rubric, judges, agreement statistics."""

from ecreport.evaluation.judging import (
    BiasReport,
    CorrelationStats,
    MisalignedReports,
    UnparseableJudgment,
    correlate_judges,
    correlate_per_evaluator,
    judge_characteristic,
    judge_preference,
    parse_label,
    parse_preference,
    positional_bias_study,
    summarize_preferences,
)
from ecreport.evaluation.rubric import (
    Characteristic,
    CharacteristicJudgment,
    CharacteristicLabel,
    PreferenceOutcome,
    Source,
)
from ecreport.evaluation.stats import (
    NOT_DEFINED,
    LengthMismatch,
    NotDefined,
    cohens_kappa,
    kendall,
    mean_coefficient,
    merge_labels,
    pearson,
    spearman,
)

__all__ = [
    "BiasReport", "Characteristic", "CharacteristicJudgment", "CharacteristicLabel", "CorrelationStats",
    "LengthMismatch", "MisalignedReports", "NOT_DEFINED", "NotDefined", "PreferenceOutcome", "Source",
    "UnparseableJudgment", "cohens_kappa", "correlate_judges", "correlate_per_evaluator",
    "judge_characteristic", "judge_preference", "kendall", "mean_coefficient", "merge_labels",
    "parse_label", "parse_preference", "pearson", "positional_bias_study", "spearman",
    "summarize_preferences",
]
