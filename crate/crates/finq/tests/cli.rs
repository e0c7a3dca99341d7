//! End-to-end checks of the `finq` binary: ingestion, asking, experiments,
//! report re-emission, the HTTP service, and exit-code behavior.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use finq::fixtures::{self, FixtureConfig};

fn finq_bin() -> &'static str {
    env!("CARGO_BIN_EXE_finq")
}

struct Workdir {
    dir: tempfile::TempDir,
}

impl Workdir {
    fn new() -> Workdir {
        let dir = tempfile::TempDir::new().expect("tempdir");
        let config = FixtureConfig {
            price_end: chrono::NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
            quarters: (2020, 1, 2024, 4),
            years: (2012, 2024),
            ..FixtureConfig::default()
        };
        fixtures::generate_for(&config, &fixtures::STANDARD_UNIVERSE[..8])
            .write_to(dir.path())
            .expect("fixture csvs");
        Workdir { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn db(&self) -> String {
        self.path("market.db").display().to_string()
    }
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = Command::new(finq_bin())
        .args(args)
        .output()
        .expect("finq runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).to_string(),
        String::from_utf8_lossy(&output.stderr).to_string(),
    )
}

fn ingest(work: &Workdir) {
    let (code, stdout, stderr) = run(&[
        "ingest",
        "--db",
        &work.db(),
        "--prices",
        &work.path("prices.csv").display().to_string(),
        "--fundamentals",
        &work.path("fundamentals.csv").display().to_string(),
        "--companies",
        &work.path("companies.csv").display().to_string(),
    ]);
    assert_eq!(code, 0, "stdout: {stdout} stderr: {stderr}");
    assert!(stdout.contains("prices: loaded"));
    assert!(stdout.contains("rejected 0"));
}

fn write_demo_script(path: &Path) {
    let script = r#"{
  "entries": [
    {
      "match": { "equals": "What are the latest 10 daily closing prices for NVIDIA?" },
      "respond": { "tool_call": { "name": "get_stock_price", "arguments": "{\"ticker\":\"NVIDIA\",\"n\":10,\"unit\":\"days\"}" } },
      "usage": { "prompt_tokens": 287, "completion_tokens": 26 }
    },
    {
      "match": { "contains": "\"columns\"" },
      "respond": { "text": "Here are the requested values." },
      "usage": { "prompt_tokens": 512, "completion_tokens": 9 }
    }
  ]
}"#;
    std::fs::write(path, script).unwrap();
}

#[test]
fn ingest_then_ask_answers_with_result_block() {
    let work = Workdir::new();
    ingest(&work);
    let script = work.path("mock.json");
    write_demo_script(&script);

    let (code, stdout, stderr) = run(&[
        "ask",
        "--db",
        &work.db(),
        "--backend",
        "mock",
        "--mock-script",
        &script.display().to_string(),
        "What are the latest 10 daily closing prices for NVIDIA?",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("```finq-result"));
    assert!(stdout.contains("\"row_count\": 10"));
    assert!(stderr.contains("[totals]"));

    // Repeated runs are byte-identical on stdout (mock determinism).
    let (_, stdout2, _) = run(&[
        "ask",
        "--db",
        &work.db(),
        "--backend",
        "mock",
        "--mock-script",
        &script.display().to_string(),
        "What are the latest 10 daily closing prices for NVIDIA?",
    ]);
    assert_eq!(stdout, stdout2);
}

#[test]
fn ask_without_mock_script_is_a_config_error() {
    let work = Workdir::new();
    ingest(&work);
    let (code, _, stderr) = run(&["ask", "--db", &work.db(), "anything?"]);
    assert_eq!(code, 2, "config errors exit 2: {stderr}");
    assert!(stderr.contains("mock_script"));
}

#[test]
fn repl_answers_lines_from_stdin() {
    let work = Workdir::new();
    ingest(&work);
    let script = work.path("mock.json");
    write_demo_script(&script);

    let mut child = Command::new(finq_bin())
        .args([
            "repl",
            "--db",
            &work.db(),
            "--backend",
            "mock",
            "--mock-script",
            &script.display().to_string(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(b"What are the latest 10 daily closing prices for NVIDIA?\nexit\n")
        .unwrap();
    let output = child.wait_with_output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("finq>"));
    assert!(stdout.contains("```finq-result"));
}

#[test]
fn eval_rq3_writes_reports_and_report_reemits() {
    let work = Workdir::new();
    ingest(&work);
    let reports = work.path("reports");

    // A trimmed suite keeps this end-to-end test quick.
    let suite = work.path("suite.txt");
    std::fs::write(
        &suite,
        "Return NVDA's stock price for the past 3 days.\n\
         Return Walmart's stock price for the past 1 days.\n\
         Return Apple's revenue for the last 4 quarters.\n\
         Return the balance sheet for MSFT for the last 1 quarter.\n",
    )
    .unwrap();

    let (code, stdout, stderr) = run(&[
        "eval",
        "rq3",
        "--db",
        &work.db(),
        "--backend",
        "mock",
        "--suite",
        &suite.display().to_string(),
        "--systems",
        "both",
        "--report-dir",
        &reports.display().to_string(),
    ]);
    assert_eq!(code, 0, "stdout: {stdout} stderr: {stderr}");
    assert!(stdout.contains("function_calling"));
    for ext in ["json", "csv", "md"] {
        assert!(reports.join(format!("rq3.{ext}")).exists(), "rq3.{ext}");
    }

    // The JSON report reloads and re-emits byte-identically.
    let json_path = reports.join("rq3.json");
    let first = std::fs::read_to_string(&json_path).unwrap();
    let re_emitted = work.path("again");
    let (code, _, stderr) = run(&[
        "report",
        "--input",
        &json_path.display().to_string(),
        "--format",
        "json,markdown",
        "--out",
        &re_emitted.display().to_string(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let second = std::fs::read_to_string(re_emitted.join("rq3.json")).unwrap();
    assert_eq!(first, second, "json round trip must be byte-identical");
    assert!(re_emitted.join("rq3.md").exists());

    // Function calling completed every case on this suite.
    let report: serde_json::Value = serde_json::from_str(&first).unwrap();
    let fc = &report["systems"][0];
    assert_eq!(fc["system"], "function_calling");
    assert_eq!(fc["accuracy"], 1.0);
}

#[test]
fn eval_rq1_and_rq2_run_offline() {
    let work = Workdir::new();
    ingest(&work);
    let reports = work.path("reports");

    let (code, stdout, stderr) = run(&[
        "eval",
        "rq1",
        "--db",
        &work.db(),
        "--backend",
        "mock",
        "--cutoff",
        "2023-06-01",
        "--targets",
        "price,revenue",
        "--report-dir",
        &reports.display().to_string(),
    ]);
    assert_eq!(code, 0, "stdout: {stdout} stderr: {stderr}");
    assert!(stdout.contains("Welch"));
    assert!(reports.join("rq1.json").exists());

    let (code, stdout, stderr) = run(&[
        "eval",
        "rq2",
        "--db",
        &work.db(),
        "--backend",
        "mock",
        "--index",
        "SP500",
        "--cutoff",
        "2023-06-01",
        "--report-dir",
        &reports.display().to_string(),
    ]);
    assert_eq!(code, 0, "stdout: {stdout} stderr: {stderr}");
    assert!(stdout.contains("latest"));
    assert!(reports.join("rq2.json").exists());
}

#[test]
fn serve_answers_health_and_ask() {
    let work = Workdir::new();
    ingest(&work);
    let script = work.path("mock.json");
    write_demo_script(&script);

    let mut child = Command::new(finq_bin())
        .args([
            "serve",
            "--db",
            &work.db(),
            "--backend",
            "mock",
            "--mock-script",
            &script.display().to_string(),
            "--port",
            "0",
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();

    // The first stdout line announces the bound address.
    let mut line = String::new();
    {
        use std::io::BufRead;
        let stdout = child.stdout.as_mut().unwrap();
        let mut reader = std::io::BufReader::new(stdout);
        reader.read_line(&mut line).unwrap();
    }
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap_or_else(|| panic!("unexpected banner: {line}"))
        .to_string();

    let http = |request: &str| -> String {
        let mut stream = TcpStream::connect(&addr).unwrap();
        stream.write_all(request.as_bytes()).unwrap();
        let mut response = String::new();
        stream.read_to_string(&mut response).unwrap();
        response
    };

    let health = http("GET /health HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n");
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.contains("\"status\":\"ok\""));

    let body = r#"{"question":"What are the latest 10 daily closing prices for NVIDIA?"}"#;
    let ask = http(&format!(
        "POST /ask HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    ));
    assert!(ask.starts_with("HTTP/1.1 200"), "{ask}");
    assert!(ask.contains("\"status\":\"answered\""));
    assert!(ask.contains("\"row_count\":10"));

    let missing = http("GET /nope HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n");
    assert!(missing.starts_with("HTTP/1.1 404"), "{missing}");

    child.kill().unwrap();
    let _ = child.wait();
}

#[test]
fn ingest_reports_rejections_without_failing() {
    let work = Workdir::new();
    let bad = work.path("bad_prices.csv");
    std::fs::write(
        &bad,
        "ticker,date,open,high,low,close,adj_close,volume\n\
         NVDA,2024-01-02,48.10,47.00,49.90,49.20,49.20,410000000\n\
         NVDA,2024-01-03,49.25,49.80,48.50,48.75,48.75,380000000\n",
    )
    .unwrap();
    let (code, stdout, _) = run(&[
        "ingest",
        "--db",
        &work.db(),
        "--prices",
        &bad.display().to_string(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("loaded 1, rejected 1"));
    assert!(stdout.contains("ohlc-order"));
}
