//! Prediction-error study: can the model recover financial series without
//! retrieval, and does accuracy differ across its knowledge cutoff?

use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stats::{log_mse, welch_one_sided, Alternative, StatsError, WelchResult};
use crate::protocol::{ChatBackend, ChatMessage, ChatRequest, TokenUsage};
use crate::store::{Store, StoreError};

/// Which series the model is asked to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionTarget {
    StockPrice,
    Revenue,
    NetIncome,
}

impl PredictionTarget {
    /// `{target}` slot of the prompt template.
    pub fn label(&self) -> &'static str {
        match self {
            PredictionTarget::StockPrice => "stock price",
            PredictionTarget::Revenue => "revenue",
            PredictionTarget::NetIncome => "net income",
        }
    }

    /// Window length: ten days for prices, eight quarters for fundamentals.
    pub fn window(&self) -> usize {
        match self {
            PredictionTarget::StockPrice => 10,
            _ => 8,
        }
    }

    pub fn metric_id(&self) -> Option<&'static str> {
        match self {
            PredictionTarget::StockPrice => None,
            PredictionTarget::Revenue => Some("revenue"),
            PredictionTarget::NetIncome => Some("net_income"),
        }
    }
}

impl FromStr for PredictionTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "price" | "stock_price" | "stock price" => Ok(PredictionTarget::StockPrice),
            "revenue" => Ok(PredictionTarget::Revenue),
            "net_income" | "net income" => Ok(PredictionTarget::NetIncome),
            other => Err(format!("unknown target `{other}`")),
        }
    }
}

/// Whether a task's truth window lies before or after the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffGroup {
    BeforeCutoff,
    AfterCutoff,
}

/// One prediction task: an input window shown to the model and a hidden
/// truth window scored afterwards.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionTask {
    pub ticker: String,
    pub company_name: String,
    pub target: PredictionTarget,
    pub group: CutoffGroup,
    pub input: Vec<(NaiveDate, String)>,
    pub truth: Vec<(NaiveDate, f64)>,
}

#[derive(Debug, Error)]
pub enum Rq1Error {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("no tickers have enough history around the cutoff")]
    NoTasks,
}

/// Which price field feeds the series; the experiments default to close.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceField {
    #[default]
    Close,
    AdjClose,
}

impl FromStr for PriceField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "close" => Ok(PriceField::Close),
            "adj_close" | "adjclose" | "adjusted_close" => Ok(PriceField::AdjClose),
            other => Err(format!("unknown price field `{other}`")),
        }
    }
}

/// Build before/after tasks for every ticker with enough history. The
/// before-group truth window ends strictly before the cutoff; the
/// after-group uses the latest data, requiring its truth window to start at
/// or after the cutoff.
pub fn build_tasks(
    store: &Store,
    cutoff: NaiveDate,
    targets: &[PredictionTarget],
    price_field: PriceField,
) -> Result<Vec<PredictionTask>, Rq1Error> {
    let mut tasks = Vec::new();
    for ticker in store.price_tickers()? {
        let company_name = store
            .company(&ticker)
            .map(|c| c.name)
            .unwrap_or_else(|_| ticker.clone());
        for &target in targets {
            let window = target.window();
            match target {
                PredictionTarget::StockPrice => {
                    let field = |bar: &crate::store::PriceBar| match price_field {
                        PriceField::Close => bar.close,
                        PriceField::AdjClose => bar.adj_close,
                    };
                    // Before: the 2×window most recent days strictly before the cutoff.
                    let before_end = cutoff - chrono::Duration::days(1);
                    if let Ok(bars) =
                        store.last_n_trading_days(&ticker, 2 * window, Some(before_end))
                    {
                        tasks.push(price_task(
                            &ticker,
                            &company_name,
                            target,
                            CutoffGroup::BeforeCutoff,
                            &bars,
                            field,
                        ));
                    }
                    // After: the latest 2×window days, if the truth half is post-cutoff.
                    if let Ok(bars) = store.last_n_trading_days(&ticker, 2 * window, None) {
                        if bars[window].date >= cutoff {
                            tasks.push(price_task(
                                &ticker,
                                &company_name,
                                target,
                                CutoffGroup::AfterCutoff,
                                &bars,
                                field,
                            ));
                        }
                    }
                }
                PredictionTarget::Revenue | PredictionTarget::NetIncome => {
                    let metric = target
                        .metric_id()
                        .expect("fundamental targets have metrics");
                    let Ok(all) = store.fundamental_history(
                        &ticker,
                        metric,
                        crate::period::Frequency::Quarterly,
                    ) else {
                        continue;
                    };
                    // After: latest 16 quarters with a post-cutoff truth half.
                    if all.len() >= 2 * window {
                        let latest = &all[all.len() - 2 * window..];
                        if latest[window].period_end_date >= cutoff {
                            tasks.push(fundamental_task(
                                &ticker,
                                &company_name,
                                target,
                                CutoffGroup::AfterCutoff,
                                latest,
                            ));
                        }
                    }
                    // Before: 16 most recent quarters ending strictly before cutoff.
                    let before: Vec<_> = all
                        .iter()
                        .filter(|r| r.period_end_date < cutoff)
                        .cloned()
                        .collect();
                    if before.len() >= 2 * window {
                        let slice = &before[before.len() - 2 * window..];
                        tasks.push(fundamental_task(
                            &ticker,
                            &company_name,
                            target,
                            CutoffGroup::BeforeCutoff,
                            slice,
                        ));
                    }
                }
            }
        }
    }
    if tasks.is_empty() {
        return Err(Rq1Error::NoTasks);
    }
    Ok(tasks)
}

fn price_task(
    ticker: &str,
    company_name: &str,
    target: PredictionTarget,
    group: CutoffGroup,
    bars: &[crate::store::PriceBar],
    field: impl Fn(&crate::store::PriceBar) -> rust_decimal::Decimal,
) -> PredictionTask {
    let window = target.window();
    let input = bars[..window]
        .iter()
        .map(|b| (b.date, field(b).to_string()))
        .collect();
    let truth = bars[window..]
        .iter()
        .map(|b| (b.date, decimal_to_f64(field(b))))
        .collect();
    PredictionTask {
        ticker: ticker.to_string(),
        company_name: company_name.to_string(),
        target,
        group,
        input,
        truth,
    }
}

fn fundamental_task(
    ticker: &str,
    company_name: &str,
    target: PredictionTarget,
    group: CutoffGroup,
    records: &[crate::store::FundamentalRecord],
) -> PredictionTask {
    let window = target.window();
    let input = records[..window]
        .iter()
        .map(|r| (r.period_end_date, r.value.to_string()))
        .collect();
    let truth = records[window..]
        .iter()
        .map(|r| (r.period_end_date, decimal_to_f64(r.value)))
        .collect();
    PredictionTask {
        ticker: ticker.to_string(),
        company_name: company_name.to_string(),
        target,
        group,
        input,
        truth,
    }
}

fn decimal_to_f64(d: rust_decimal::Decimal) -> f64 {
    d.to_string().parse().expect("decimal renders as f64")
}

/// Fill the fixed prediction prompt for one task: dates and values on
/// separate comma-separated lines, no residual template braces.
pub fn build_rq1_prompt(task: &PredictionTask) -> String {
    let dates: Vec<String> = task.input.iter().map(|(d, _)| d.to_string()).collect();
    let values: Vec<String> = task.input.iter().map(|(_, v)| v.clone()).collect();
    format!(
        "You are given the following {target} data for the company {company_name}.\n\
         Predict the next {num_output} values based on the past {num_input} values.\n\
         \n\
         Instructions:\n\
         - Do not add any explanations.\n\
         - Do not include quotation marks, backticks, or annotations.\n\
         - Return only the predicted values separated by commas (e.g., 1.0, 2.0, 3.0).\n\
         \n\
         Data:\n\
         {dates}\n\
         {values}",
        target = task.target.label(),
        company_name = task.company_name,
        num_output = task.truth.len(),
        num_input = task.input.len(),
        dates = dates.join(", "),
        values = values.join(", "),
    )
}

/// Script a deterministic noisy-oracle backend for the tasks: predictions
/// are truth plus Gaussian noise with the given absolute standard
/// deviation per cutoff group. Absolute (not truth-proportional) noise
/// keeps the two groups exchangeable when the levels are equal, which is
/// what the null-calibration checks require. Drives offline runs and the
/// bias-detection power checks.
pub fn synthetic_noise_script(
    tasks: &[PredictionTask],
    noise_before: f64,
    noise_after: f64,
    seed: u64,
) -> Vec<crate::protocol::ScriptEntry> {
    use crate::protocol::{Matcher, ScriptEntry, ScriptedResponse};
    use rand::RngExt;
    use rand::SeedableRng;

    tasks
        .iter()
        .enumerate()
        .map(|(i, task)| {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(
                seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (i as u64),
            );
            let level = match task.group {
                CutoffGroup::BeforeCutoff => noise_before,
                CutoffGroup::AfterCutoff => noise_after,
            };
            let predictions: Vec<String> = task
                .truth
                .iter()
                .map(|(_, truth)| {
                    // Box-Muller standard normal.
                    let u1: f64 = rng.random_range(1e-12..1.0);
                    let u2: f64 = rng.random_range(0.0..1.0);
                    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                    format!("{:.6}", truth + z * level)
                })
                .collect();
            ScriptEntry {
                matcher: Matcher::Equals(build_rq1_prompt(task)),
                respond: ScriptedResponse::Text(predictions.join(", ")),
                usage: None,
            }
        })
        .collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("prediction text did not parse: {0}")]
    ParseFailure(String),
    #[error("expected {expected} values, got {got}")]
    CountMismatch { expected: usize, got: usize },
}

/// Parse `1.0, 2.0, 3.0`-style output, tolerating wrapping quotes,
/// backticks, and stray whitespace.
pub fn parse_prediction(text: &str, expected: usize) -> Result<Vec<f64>, ParseError> {
    let cleaned = text
        .trim()
        .trim_matches(|c| matches!(c, '"' | '\'' | '`' | '\u{201c}' | '\u{201d}'))
        .trim();
    if cleaned.is_empty() {
        return Err(ParseError::ParseFailure("empty output".into()));
    }
    let mut values = Vec::new();
    for piece in cleaned.split(',') {
        let piece = piece.trim().trim_matches(|c| matches!(c, '"' | '\'' | '`'));
        if piece.is_empty() {
            continue;
        }
        let v: f64 = piece
            .parse()
            .map_err(|_| ParseError::ParseFailure(format!("`{piece}` is not a number")))?;
        values.push(v);
    }
    if values.len() != expected {
        return Err(ParseError::CountMismatch {
            expected,
            got: values.len(),
        });
    }
    Ok(values)
}

/// Per-(target, group) aggregate of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSummary {
    pub tasks: usize,
    pub scored: usize,
    pub parse_failures: usize,
    pub zero_mse_excluded: usize,
    pub mean_log_mse: Option<f64>,
}

/// One target's full result: both groups plus the one-sided Welch test
/// with alternative "before-cutoff error < after-cutoff error".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: PredictionTarget,
    pub before: GroupSummary,
    pub after: GroupSummary,
    pub welch_t: Option<f64>,
    pub welch_nu: Option<f64>,
    pub p_value: Option<f64>,
    pub per_task_log_mse: Vec<(String, CutoffGroup, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rq1Report {
    pub model: String,
    pub cutoff: NaiveDate,
    pub usage: TokenUsage,
    pub targets: Vec<TargetReport>,
}

enum TaskOutcome {
    Scored(f64),
    ZeroMse,
    Failed,
}

/// Run the full study: prompt the backend for every task (on up to
/// `workers` threads), score log-MSE, and test for look-ahead bias per
/// target. Aggregation is a single-threaded fold in task order, so results
/// are identical for any worker count.
pub fn run_rq1(
    backend: &dyn ChatBackend,
    model: &str,
    store: &Store,
    cutoff: NaiveDate,
    targets: &[PredictionTarget],
    price_field: PriceField,
    workers: usize,
) -> Result<Rq1Report, Rq1Error> {
    let tasks = build_tasks(store, cutoff, targets, price_field)?;

    let outcomes: Vec<(TaskOutcome, TokenUsage)> =
        super::workers::parallel_map(&tasks, workers, |task| {
            let prompt = build_rq1_prompt(task);
            let request = ChatRequest::new(model, vec![ChatMessage::user(prompt)]);
            let completion = match backend.chat_complete(&request) {
                Ok(c) => c,
                Err(_) => return (TaskOutcome::Failed, TokenUsage::default()),
            };
            let usage = completion.usage;
            let text = completion.content.unwrap_or_default();
            let outcome = match parse_prediction(&text, task.truth.len()) {
                // Excluded from aggregation, reported as a count.
                Err(_) => TaskOutcome::Failed,
                Ok(predictions) => {
                    let truths: Vec<f64> = task.truth.iter().map(|(_, v)| *v).collect();
                    match log_mse(&predictions, &truths) {
                        Ok(result) => TaskOutcome::Scored(result.log_mse),
                        Err(StatsError::ZeroMse) => TaskOutcome::ZeroMse,
                        Err(_) => TaskOutcome::Failed,
                    }
                }
            };
            (outcome, usage)
        });

    let mut usage = TokenUsage::default();
    for (_, task_usage) in &outcomes {
        usage += *task_usage;
    }

    let mut reports = Vec::new();
    for &target in targets {
        let mut before = Vec::new();
        let mut after = Vec::new();
        let mut per_task = Vec::new();
        let mut summaries = [
            GroupSummary {
                tasks: 0,
                scored: 0,
                parse_failures: 0,
                zero_mse_excluded: 0,
                mean_log_mse: None,
            },
            GroupSummary {
                tasks: 0,
                scored: 0,
                parse_failures: 0,
                zero_mse_excluded: 0,
                mean_log_mse: None,
            },
        ];

        for (task, (outcome, _)) in tasks.iter().zip(&outcomes) {
            if task.target != target {
                continue;
            }
            let slot = match task.group {
                CutoffGroup::BeforeCutoff => 0,
                CutoffGroup::AfterCutoff => 1,
            };
            summaries[slot].tasks += 1;
            match outcome {
                TaskOutcome::Scored(value) => {
                    summaries[slot].scored += 1;
                    per_task.push((task.ticker.clone(), task.group, *value));
                    match task.group {
                        CutoffGroup::BeforeCutoff => before.push(*value),
                        CutoffGroup::AfterCutoff => after.push(*value),
                    }
                }
                TaskOutcome::ZeroMse => summaries[slot].zero_mse_excluded += 1,
                TaskOutcome::Failed => summaries[slot].parse_failures += 1,
            }
        }

        let mean = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        summaries[0].mean_log_mse = mean(&before);
        summaries[1].mean_log_mse = mean(&after);

        let welch: Option<WelchResult> = welch_one_sided(&before, &after, Alternative::Less).ok();
        let [before_summary, after_summary] = summaries;
        reports.push(TargetReport {
            target,
            before: before_summary,
            after: after_summary,
            welch_t: welch.map(|w| w.t),
            welch_nu: welch.map(|w| w.nu),
            p_value: welch.map(|w| w.p),
            per_task_log_mse: per_task,
        });
    }

    Ok(Rq1Report {
        model: model.to_string(),
        cutoff,
        usage,
        targets: reports,
    })
}
