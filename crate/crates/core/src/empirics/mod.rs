//! From trial logs and questionnaires to measured responsibility, empirical
//! trust measures and theory comparisons.
//!
//! Rates use the log-linear correction `(k + 0.5)/(n + 1)` so every cell
//! with at least one trial has finite z-scores. The joint of responses and
//! indications uses raw frequencies. Cutoffs are reported centered, with
//! absolute values alongside.

mod log;
mod measures;
mod questionnaire;
mod stats;

pub use log::{filter_blocks, parse_log, write_log, BlockFilter, TrialRecord};
pub use measures::{
    comparison_csv, comparison_row, corrected_rate, d_eff_empirical, empirical_report,
    group_by_condition, indication_sdt, joint_counts, measured_responsibility,
    per_indication_sdt, reports_by_session, trust_deviations, ComparisonRow, EmpiricalReport,
    IndicationSdt, PerIndicationSdt, RateCounts, Triplet, TrustDeviations,
};
pub use questionnaire::{
    parse_questionnaires, questionnaire_scores, reverse_item, QuestionnaireRecord,
    SubjectiveReport,
};
pub use stats::{correlate, cronbach_alpha, normalize_scores, Correlation};
