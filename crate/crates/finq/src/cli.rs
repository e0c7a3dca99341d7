//! The `finq` command line: ingestion, interactive asking, the HTTP
//! service, the three experiments, and report re-emission.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use crate::baseline::SandboxLimits;
use crate::config::{load_cutoffs, AppConfig, BackendKind, ConfigError};
use crate::eval::{
    self, emit_report, EvalResults, PredictionTarget, PriceField, ReportFormat, SystemKind,
};
use crate::library::QueryLibrary;
use crate::protocol::{ChatBackend, HttpBackend, MockBackend, RateCard};
use crate::router::{Assistant, AssistantConfig};
use crate::store::{IndexId, IngestReport, Store};

const DEFAULT_RATE_CARD: &str = include_str!("../data/rate_card.csv");
const DEFAULT_CUTOFFS: &str = include_str!("../data/cutoffs.csv");

#[derive(Parser)]
#[command(
    name = "finq",
    version,
    about = "Natural-language financial database queries \
through vetted SQL templates, with a text-to-SQL baseline and an evaluation harness"
)]
pub struct Cli {
    /// Config file (`key = value` lines); flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// SQLite store path.
    #[arg(long, global = true)]
    db: Option<PathBuf>,
    /// Chat backend: mock or live.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Model id used for requests, rates, and cutoffs.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Mock script file (JSON).
    #[arg(long, global = true)]
    mock_script: Option<PathBuf>,
    /// Rate card CSV; defaults to the bundled card.
    #[arg(long, global = true)]
    rate_card: Option<PathBuf>,
    /// Live backend base URL (its /chat/completions is called).
    #[arg(long, global = true)]
    base_url: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, global = true)]
    api_key_env: Option<String>,
    /// Knowledge-cutoff CSV; defaults to the bundled table.
    #[arg(long, global = true)]
    cutoffs: Option<PathBuf>,
    /// Price field for experiments: close or adj_close.
    #[arg(long, global = true)]
    price_field: Option<String>,
    /// Directory for report files.
    #[arg(long, global = true)]
    report_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    max_tool_rounds: Option<usize>,
    #[arg(long, global = true)]
    timeout_secs: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load CSV files into the store.
    Ingest {
        #[arg(long)]
        prices: Option<PathBuf>,
        #[arg(long)]
        fundamentals: Option<PathBuf>,
        #[arg(long)]
        companies: Option<PathBuf>,
    },
    /// Answer one question and print the result.
    Ask { question: String },
    /// Interactive question loop on stdin.
    Repl,
    /// HTTP service: POST /ask, GET /health.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Run an experiment and write reports.
    Eval {
        #[command(subcommand)]
        experiment: EvalCommand,
    },
    /// Re-emit a saved JSON report in other formats.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated: json,csv,markdown.
        #[arg(long, default_value = "json,csv,markdown")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Prediction-error study with the look-ahead bias test.
    Rq1 {
        /// Knowledge cutoff (defaults to the cutoff table entry for the model).
        #[arg(long)]
        cutoff: Option<String>,
        #[arg(long, default_value = "price,revenue,net_income")]
        targets: String,
        /// Mock mode noise levels `before,after` (truth + noise predictor).
        #[arg(long, default_value = "1.0,3.0")]
        synthetic_noise: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Ticker-coverage accuracy over index constituents.
    Rq2 {
        #[arg(long)]
        index: String,
        #[arg(long)]
        cutoff: Option<String>,
    },
    /// Function calling vs text-to-SQL benchmark over a suite file.
    Rq3 {
        /// One natural-language query per line; defaults to the bundled suite.
        #[arg(long)]
        suite: Option<PathBuf>,
        /// function_calling, text_to_sql, or both.
        #[arg(long, alias = "system", default_value = "both")]
        systems: String,
        /// Extra text-to-SQL correction attempts (excluded from headline runs).
        #[arg(long, default_value_t = 0)]
        self_correct: usize,
    },
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn effective_config(cli: &Cli) -> anyhow::Result<AppConfig> {
    let mut config = match &cli.config {
        Some(path) => AppConfig::load(path)?,
        None => AppConfig::default(),
    };
    if let Some(v) = &cli.db {
        config.db = Some(v.clone());
    }
    if let Some(v) = &cli.backend {
        config.apply("backend", v)?;
    }
    if let Some(v) = &cli.model {
        config.model = v.clone();
    }
    if let Some(v) = &cli.mock_script {
        config.mock_script = Some(v.clone());
    }
    if let Some(v) = &cli.rate_card {
        config.rate_card = Some(v.clone());
    }
    if let Some(v) = &cli.base_url {
        config.base_url = Some(v.clone());
    }
    if let Some(v) = &cli.api_key_env {
        config.api_key_env = v.clone();
    }
    if let Some(v) = &cli.cutoffs {
        config.cutoffs = Some(v.clone());
    }
    if let Some(v) = &cli.price_field {
        config.apply("price_field", v)?;
    }
    if let Some(v) = &cli.report_dir {
        config.report_dir = v.clone();
    }
    if let Some(v) = cli.max_tool_rounds {
        config.max_tool_rounds = v;
    }
    if let Some(v) = cli.timeout_secs {
        config.timeout_secs = v;
    }
    if let Some(v) = cli.workers {
        config.workers = v;
    }
    Ok(config)
}

fn open_store(config: &AppConfig) -> anyhow::Result<Store> {
    let path = config
        .db
        .as_ref()
        .ok_or(ConfigError::Incomplete("no store: pass --db <path>".into()))?;
    Ok(Store::open(path)?)
}

fn load_rate_card(config: &AppConfig) -> anyhow::Result<RateCard> {
    match &config.rate_card {
        Some(path) => {
            let file = std::fs::File::open(path)
                .with_context(|| format!("rate card {}", path.display()))?;
            Ok(RateCard::from_csv(file)?)
        }
        None => {
            Ok(RateCard::from_csv(DEFAULT_RATE_CARD.as_bytes()).expect("bundled rate card parses"))
        }
    }
}

fn resolve_cutoff(config: &AppConfig, flag: &Option<String>) -> anyhow::Result<NaiveDate> {
    if let Some(raw) = flag {
        return NaiveDate::from_str(raw).map_err(|e| anyhow!("--cutoff: {e}"));
    }
    let table = match &config.cutoffs {
        Some(path) => load_cutoffs(path)?,
        None => {
            let mut f = tempfile_free_parse(DEFAULT_CUTOFFS)?;
            std::mem::take(&mut f)
        }
    };
    table.get(&config.model).copied().ok_or_else(|| {
        anyhow!(
            "no knowledge cutoff for model `{}`; pass --cutoff or extend the cutoff table",
            config.model
        )
    })
}

fn tempfile_free_parse(
    text: &str,
) -> anyhow::Result<std::collections::BTreeMap<String, NaiveDate>> {
    let mut out = std::collections::BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let (model, date) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("bad cutoff row"))?;
        out.insert(model.trim().to_string(), NaiveDate::from_str(date.trim())?);
    }
    Ok(out)
}

fn build_chat_backend(config: &AppConfig) -> anyhow::Result<Box<dyn ChatBackend>> {
    config.validate_for_chat()?;
    match config.backend {
        BackendKind::Mock => {
            let path = config.mock_script.as_ref().expect("validated");
            Ok(Box::new(MockBackend::from_script_file(path)?))
        }
        BackendKind::Live => {
            let base = config.base_url.as_ref().expect("validated");
            Ok(Box::new(HttpBackend::new(
                base.clone(),
                &config.api_key_env,
                Duration::from_secs(config.timeout_secs),
            )?))
        }
    }
}

fn print_ingest_report(label: &str, report: &IngestReport) {
    println!(
        "{label}: loaded {}, rejected {} (of {})",
        report.loaded,
        report.rejected,
        report.total()
    );
    for rejection in report.rejections.iter().take(10) {
        println!("  row {}: {}", rejection.row, rejection.reason);
    }
    if report.rejections.len() > 10 {
        println!("  ... {} more", report.rejections.len() - 10);
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let config = effective_config(&cli)?;
    match cli.command {
        Command::Ingest {
            prices,
            fundamentals,
            companies,
        } => {
            if prices.is_none() && fundamentals.is_none() && companies.is_none() {
                bail!(ConfigError::Incomplete(
                    "nothing to ingest: pass --prices/--fundamentals/--companies".into()
                ));
            }
            let store = open_store(&config)?;
            if let Some(path) = companies {
                let file = std::fs::File::open(&path)
                    .with_context(|| format!("companies {}", path.display()))?;
                print_ingest_report("companies", &store.ingest_companies(file)?);
            }
            if let Some(path) = prices {
                let file = std::fs::File::open(&path)
                    .with_context(|| format!("prices {}", path.display()))?;
                print_ingest_report("prices", &store.ingest_prices(file)?);
            }
            if let Some(path) = fundamentals {
                let file = std::fs::File::open(&path)
                    .with_context(|| format!("fundamentals {}", path.display()))?;
                print_ingest_report("fundamentals", &store.ingest_fundamentals(file)?);
            }
            Ok(())
        }

        Command::Ask { question } => {
            let store = open_store(&config)?;
            let backend = build_chat_backend(&config)?;
            let library = QueryLibrary::standard();
            let rate_card = load_rate_card(&config)?;
            let assistant = Assistant::new(
                backend.as_ref(),
                &store,
                &library,
                &rate_card,
                assistant_config(&config),
            )?;
            let result = assistant.answer(&question);
            println!("{}", result.final_answer);
            eprintln!(
                "[totals] prompt={} completion={} cost={} wall={:.1}ms",
                result.totals.usage.prompt_tokens,
                result.totals.usage.completion_tokens,
                result.totals.cost,
                result.totals.wall_time.as_secs_f64() * 1e3,
            );
            match result.outcome {
                crate::router::AnswerOutcome::Answered => Ok(()),
                crate::router::AnswerOutcome::Failed { class, message } => {
                    bail!("case failed ({class:?}): {message}")
                }
            }
        }

        Command::Repl => {
            let store = open_store(&config)?;
            let backend = build_chat_backend(&config)?;
            let library = QueryLibrary::standard();
            let rate_card = load_rate_card(&config)?;
            let assistant = Assistant::new(
                backend.as_ref(),
                &store,
                &library,
                &rate_card,
                assistant_config(&config),
            )?;
            let stdin = std::io::stdin();
            let mut out = std::io::stdout();
            write!(out, "finq> ")?;
            out.flush()?;
            for line in stdin.lock().lines() {
                let line = line?;
                let question = line.trim();
                if question.is_empty() {
                    write!(out, "finq> ")?;
                    out.flush()?;
                    continue;
                }
                if question == "exit" || question == "quit" {
                    break;
                }
                let result = assistant.answer(question);
                writeln!(out, "{}", result.final_answer)?;
                writeln!(
                    out,
                    "[totals] prompt={} completion={} cost={} wall={:.1}ms",
                    result.totals.usage.prompt_tokens,
                    result.totals.usage.completion_tokens,
                    result.totals.cost,
                    result.totals.wall_time.as_secs_f64() * 1e3,
                )?;
                write!(out, "finq> ")?;
                out.flush()?;
            }
            Ok(())
        }

        Command::Serve { port } => {
            let store = open_store(&config)?;
            let backend = build_chat_backend(&config)?;
            let library = QueryLibrary::standard();
            let rate_card = load_rate_card(&config)?;
            let assistant = Assistant::new(
                backend.as_ref(),
                &store,
                &library,
                &rate_card,
                assistant_config(&config),
            )?;
            serve(&assistant, port)
        }

        Command::Eval { experiment } => run_eval(&config, experiment),

        Command::Report { input, format, out } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("report {}", input.display()))?;
            let results = eval::report::load_json(&text)?;
            let formats = parse_formats(&format)?;
            let dir = out.unwrap_or_else(|| config.report_dir.clone());
            for path in emit_report(&results, &formats, &dir)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn assistant_config(config: &AppConfig) -> AssistantConfig {
    let mut assistant = AssistantConfig::new(&config.model);
    assistant.max_tool_rounds = config.max_tool_rounds;
    assistant
}

fn parse_formats(raw: &str) -> anyhow::Result<Vec<ReportFormat>> {
    raw.split(',')
        .map(|s| ReportFormat::from_str(s.trim()).map_err(|e| anyhow!(e)))
        .collect()
}

fn parse_targets(raw: &str) -> anyhow::Result<Vec<PredictionTarget>> {
    raw.split(',')
        .map(|s| PredictionTarget::from_str(s.trim()).map_err(|e| anyhow!(e)))
        .collect()
}

fn run_eval(config: &AppConfig, experiment: EvalCommand) -> anyhow::Result<()> {
    let store = open_store(config)?;
    let rate_card = load_rate_card(config)?;
    match experiment {
        EvalCommand::Rq1 {
            cutoff,
            targets,
            synthetic_noise,
            seed,
        } => {
            let cutoff = resolve_cutoff(config, &cutoff)?;
            let targets = parse_targets(&targets)?;
            let price_field: PriceField = config.price_field;
            let backend: Box<dyn ChatBackend> = match config.backend {
                BackendKind::Mock => {
                    // Offline mode: a truth-plus-noise predictor scripted from
                    // the very tasks the run will issue.
                    let (before, after) = parse_noise(&synthetic_noise)?;
                    let tasks = eval::build_tasks(&store, cutoff, &targets, price_field)?;
                    Box::new(MockBackend::new(eval::rq1::synthetic_noise_script(
                        &tasks, before, after, seed,
                    )))
                }
                BackendKind::Live => build_chat_backend(config)?,
            };
            let report = eval::run_rq1(
                backend.as_ref(),
                &config.model,
                &store,
                cutoff,
                &targets,
                price_field,
                config.workers,
            )?;
            finish_eval(config, EvalResults::Rq1(report))
        }

        EvalCommand::Rq2 { index, cutoff } => {
            let index = IndexId::from_str(&index).map_err(|e| anyhow!(e))?;
            let cutoff = match cutoff {
                Some(raw) => Some(NaiveDate::from_str(&raw)?),
                None => Some(resolve_cutoff(config, &None)?),
            };
            let backend: Box<dyn ChatBackend> = match (config.backend, &config.mock_script) {
                (BackendKind::Mock, Some(path)) => Box::new(MockBackend::from_script_file(path)?),
                (BackendKind::Mock, None) => Box::new(MockBackend::new(
                    eval::rq2::perfect_mock_script(&store, index)?,
                )),
                (BackendKind::Live, _) => build_chat_backend(config)?,
            };
            let report = eval::run_rq2(
                backend.as_ref(),
                &config.model,
                &store,
                index,
                cutoff,
                crate::resolver::RQ2_PROMPT_TEMPLATE,
                config.workers,
            )?;
            finish_eval(config, EvalResults::Rq2(report))
        }

        EvalCommand::Rq3 {
            suite,
            systems,
            self_correct,
        } => {
            let text = match &suite {
                Some(path) => std::fs::read_to_string(path)
                    .with_context(|| format!("suite {}", path.display()))?,
                None => eval::BUNDLED_SUITE.to_string(),
            };
            let cases = eval::parse_suite(&text)?;
            let systems = parse_systems(&systems)?;
            let library = QueryLibrary::standard();
            let backend: Box<dyn ChatBackend> = match (config.backend, &config.mock_script) {
                (BackendKind::Mock, Some(path)) => Box::new(MockBackend::from_script_file(path)?),
                (BackendKind::Mock, None) => {
                    let mut entries = eval::function_calling_script(&cases);
                    entries.extend(eval::text_to_sql_script(&store, &cases));
                    Box::new(MockBackend::new(entries))
                }
                (BackendKind::Live, _) => build_chat_backend(config)?,
            };
            let report = eval::rq3::run_rq3(
                &store,
                &library,
                backend.as_ref(),
                &config.model,
                &rate_card,
                &cases,
                &systems,
                SandboxLimits::default(),
                self_correct,
            )?;
            finish_eval(config, EvalResults::Rq3(report))
        }
    }
}

fn parse_noise(raw: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = raw
        .split_once(',')
        .ok_or_else(|| anyhow!("--synthetic-noise expects `before,after`"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn parse_systems(raw: &str) -> anyhow::Result<Vec<SystemKind>> {
    if raw.trim().eq_ignore_ascii_case("both") {
        return Ok(vec![SystemKind::FunctionCalling, SystemKind::TextToSql]);
    }
    raw.split(',')
        .map(|s| SystemKind::from_str(s.trim()).map_err(|e| anyhow!(e)))
        .collect()
}

fn finish_eval(config: &AppConfig, results: EvalResults) -> anyhow::Result<()> {
    let formats = [
        ReportFormat::Json,
        ReportFormat::Csv,
        ReportFormat::Markdown,
    ];
    let written = emit_report(&results, &formats, &config.report_dir)?;
    print!("{}", eval::report::to_markdown(&results));
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn serve(assistant: &Assistant<'_>, port: u16) -> anyhow::Result<()> {
    let server = tiny_http::Server::http(("0.0.0.0", port))
        .map_err(|e| anyhow!("cannot bind port {port}: {e}"))?;
    println!("listening on http://{}", server.server_addr());
    std::io::stdout().flush()?;

    for mut request in server.incoming_requests() {
        let method = request.method().clone();
        let url = request.url().to_string();
        let response = match (method.as_str(), url.as_str()) {
            ("GET", "/health") => json_response(200, &serde_json::json!({"status": "ok"})),
            ("POST", "/ask") => {
                let mut body = String::new();
                if request.as_reader().read_to_string(&mut body).is_err() {
                    json_response(400, &serde_json::json!({"error": "unreadable body"}))
                } else {
                    match serde_json::from_str::<serde_json::Value>(&body) {
                        Ok(doc) => match doc.get("question").and_then(|q| q.as_str()) {
                            Some(question) => {
                                let result = assistant.answer(question);
                                json_response(
                                    200,
                                    &serde_json::to_value(&result)
                                        .unwrap_or_else(|_| serde_json::json!({})),
                                )
                            }
                            None => json_response(
                                400,
                                &serde_json::json!({"error": "missing `question` field"}),
                            ),
                        },
                        Err(e) => json_response(400, &serde_json::json!({"error": e.to_string()})),
                    }
                }
            }
            _ => json_response(404, &serde_json::json!({"error": "not found"})),
        };
        let _ = request.respond(response);
    }
    Ok(())
}

fn json_response(
    status: u16,
    body: &serde_json::Value,
) -> tiny_http::Response<std::io::Cursor<Vec<u8>>> {
    let payload = serde_json::to_vec(body).unwrap_or_default();
    tiny_http::Response::from_data(payload)
        .with_status_code(status)
        .with_header(
            tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                .expect("static header parses"),
        )
}
