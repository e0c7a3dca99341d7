//! Report emission: JSON (canonical, reloadable), CSV (per-record), and
//! markdown summary tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rq1::Rq1Report;
use super::rq2::Rq2Report;
use super::rq3::Rq3Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// Any experiment's results, tagged for reload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum EvalResults {
    Rq1(Rq1Report),
    Rq2(Rq2Report),
    Rq3(Rq3Report),
}

impl EvalResults {
    pub fn slug(&self) -> &'static str {
        match self {
            EvalResults::Rq1(_) => "rq1",
            EvalResults::Rq2(_) => "rq2",
            EvalResults::Rq3(_) => "rq3",
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

/// Serialize results to canonical JSON (deterministic field order, trailing
/// newline). `emit_report` writes exactly these bytes.
pub fn to_json(results: &EvalResults) -> Result<String, ReportError> {
    Ok(format!("{}\n", serde_json::to_string_pretty(results)?))
}

pub fn load_json(text: &str) -> Result<EvalResults, ReportError> {
    Ok(serde_json::from_str(text.trim_end())?)
}

/// Write one file per requested format into `dir`; returns the paths.
pub fn emit_report(
    results: &EvalResults,
    formats: &[ReportFormat],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, ReportError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for format in formats {
        let (extension, payload) = match format {
            ReportFormat::Json => ("json", to_json(results)?),
            ReportFormat::Csv => ("csv", to_csv(results)),
            ReportFormat::Markdown => ("md", to_markdown(results)),
        };
        let path = dir.join(format!("{}.{extension}", results.slug()));
        std::fs::write(&path, payload)?;
        written.push(path);
    }
    Ok(written)
}

/// Per-record CSV view of one experiment.
pub fn to_csv(results: &EvalResults) -> String {
    let mut out = String::new();
    match results {
        EvalResults::Rq1(report) => {
            out.push_str("target,ticker,group,log_mse\n");
            for target in &report.targets {
                for (ticker, group, value) in &target.per_task_log_mse {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        serde_field(&target.target),
                        ticker,
                        serde_field(group),
                        value
                    )
                    .expect("string write");
                }
            }
        }
        EvalResults::Rq2(report) => {
            out.push_str("company,expected,raw,normalized,matched\n");
            for answer in &report.answers {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    csv_quote(&answer.company),
                    answer.expected,
                    csv_quote(&answer.raw),
                    answer.normalized,
                    answer.matched
                )
                .expect("string write");
            }
        }
        EvalResults::Rq3(report) => {
            out.push_str(
                "case_index,system,success,verdict,latency_ms,cost,prompt_tokens,completion_tokens,question\n",
            );
            for case in &report.cases {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    case.case_index,
                    case.system,
                    case.success,
                    serde_field(&case.verdict),
                    case.latency_ms,
                    case.cost,
                    case.usage.prompt_tokens,
                    case.usage.completion_tokens,
                    csv_quote(&case.question)
                )
                .expect("string write");
            }
        }
    }
    out
}

fn serde_field<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(v) => format!("{v:.digits$}"),
        None => "-".into(),
    }
}

/// Markdown summary: one table per headline metric group.
pub fn to_markdown(results: &EvalResults) -> String {
    let mut out = String::new();
    match results {
        EvalResults::Rq1(report) => {
            writeln!(out, "# Prediction error (RQ1)\n").unwrap();
            writeln!(
                out,
                "Model: `{}` — cutoff {}\n",
                report.model, report.cutoff
            )
            .unwrap();
            writeln!(out, "## Average log(MSE), before | after cutoff\n").unwrap();
            writeln!(out, "| Target | Before | After | Parse failures |").unwrap();
            writeln!(out, "|---|---|---|---|").unwrap();
            for t in &report.targets {
                writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    serde_field(&t.target),
                    fmt_opt(t.before.mean_log_mse, 4),
                    fmt_opt(t.after.mean_log_mse, 4),
                    t.before.parse_failures + t.after.parse_failures,
                )
                .unwrap();
            }
            writeln!(out, "\n## One-sided Welch's t-test (before < after)\n").unwrap();
            writeln!(out, "| Target | t | nu | p |").unwrap();
            writeln!(out, "|---|---|---|---|").unwrap();
            for t in &report.targets {
                writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    serde_field(&t.target),
                    fmt_opt(t.welch_t, 4),
                    fmt_opt(t.welch_nu, 2),
                    fmt_opt(t.p_value, 6),
                )
                .unwrap();
            }
        }
        EvalResults::Rq2(report) => {
            writeln!(out, "# Ticker coverage (RQ2)\n").unwrap();
            writeln!(out, "Model: `{}` — index {}\n", report.model, report.index).unwrap();
            writeln!(out, "| Subset | N | Matches | Accuracy |").unwrap();
            writeln!(out, "|---|---|---|---|").unwrap();
            writeln!(
                out,
                "| {} | {} | {} | {:.4} |",
                report.latest.label,
                report.latest.total,
                report.latest.matches,
                report.latest.accuracy
            )
            .unwrap();
            if let Some(pre) = &report.pre_cutoff {
                writeln!(
                    out,
                    "| {} | {} | {} | {:.4} |",
                    pre.label, pre.total, pre.matches, pre.accuracy
                )
                .unwrap();
            }
        }
        EvalResults::Rq3(report) => {
            writeln!(out, "# Database query performance (RQ3)\n").unwrap();
            writeln!(
                out,
                "Model: `{}` — {} suite cases\n",
                report.model, report.suite_cases
            )
            .unwrap();
            writeln!(
                out,
                "| System | Accuracy | Mean cost | Std cost | Mean latency (ms) | Std latency (ms) | Total cost |"
            )
            .unwrap();
            writeln!(out, "|---|---|---|---|---|---|---|").unwrap();
            for s in &report.systems {
                writeln!(
                    out,
                    "| {} | {:.4} | {:.6} | {:.6} | {:.3} | {:.3} | {} |",
                    s.system,
                    s.accuracy,
                    s.mean_cost,
                    s.std_cost,
                    s.mean_latency_ms,
                    s.std_latency_ms,
                    s.total_cost
                )
                .unwrap();
            }
        }
    }
    out
}
