//! The experiment harness: prediction-error study with look-ahead bias
//! test, ticker-coverage accuracy, and the function-calling versus
//! text-to-SQL benchmark, plus report emission.

pub mod report;
pub mod rq1;
pub mod rq2;
pub mod rq3;
pub mod stats;
pub mod suite;
pub mod workers;

pub use report::{emit_report, EvalResults, ReportFormat};
pub use rq1::{
    build_rq1_prompt, build_tasks, parse_prediction, run_rq1, CutoffGroup, PredictionTarget,
    PredictionTask, PriceField, Rq1Report,
};
pub use rq2::{latest_constituents, run_rq2, Rq2Report};
pub use rq3::{aggregate, run_rq3, BenchCaseResult, Rq3Report, SystemAggregates, SystemKind};
pub use stats::{
    log_mse, regularized_inc_beta, t_cdf, welch_one_sided, Alternative, LogMseResult, StatsError,
    WelchResult,
};
pub use suite::{
    function_calling_script, oracle_expected, parse_suite, text_to_sql_script, CaseSpec,
    OracleQuery, SuiteError, BUNDLED_SUITE,
};
