//! Acceptance gate: one test per release criterion, each printing a
//! PASS line with its measured evidence. Criterion 10 needs a live
//! backend and is `#[ignore]`d by default.

use std::str::FromStr;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rust_decimal::Decimal;

use finq::baseline::{sandbox_execute, sanitize_statement, SandboxLimits};
use finq::eval::rq1::synthetic_noise_script;
use finq::eval::rq3::run_rq3;
use finq::eval::{
    self, aggregate, log_mse, parse_suite, t_cdf, welch_one_sided, Alternative, PredictionTarget,
    PriceField, SystemKind, BUNDLED_SUITE,
};
use finq::fixtures::{self, FixtureConfig};
use finq::library::QueryLibrary;
use finq::protocol::{Matcher, MockBackend, RateCard, ScriptEntry, ScriptedResponse, TokenUsage};
use finq::router::{Assistant, AssistantConfig};
use finq::store::{IndexId, Store};
use finq::templates::TemplateRegistry;

mod oracles;

use oracles::{brute_force_welch, t_cdf_by_quadrature};

fn pass(criterion: &str, detail: String) {
    println!("ACCEPTANCE {criterion}: PASS — {detail}");
}

fn default_rate_card() -> RateCard {
    let mut card = RateCard::default();
    card.insert(
        "mock-model",
        Decimal::from_str("2.50").unwrap(),
        Decimal::from_str("10.00").unwrap(),
    );
    card
}

/// Shared file-backed standard-fixture store (criteria 6–8).
fn fixture_store() -> &'static Store {
    static STORE: OnceLock<(tempfile::TempDir, Store)> = OnceLock::new();
    let (_dir, store) = STORE.get_or_init(|| {
        let dir = tempfile::TempDir::new().expect("tempdir");
        let store = Store::open(dir.path().join("acceptance.db")).expect("store opens");
        let data = fixtures::generate(&FixtureConfig::default());
        let reports = data.ingest_into(&store).expect("fixture ingests");
        for report in &reports {
            assert_eq!(report.rejected, 0, "fixture data must ingest cleanly");
        }
        (dir, store)
    });
    store
}

// ---------------------------------------------------------------------------
// 1. Statistics oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_welch_matches_brute_force_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(1001);
    let mut max_dt = 0.0f64;
    let mut max_dnu = 0.0f64;
    let mut max_dp = 0.0f64;

    for _ in 0..1000 {
        let n1 = rng.random_range(2..40usize);
        let n2 = rng.random_range(2..40usize);
        let mean_x: f64 = rng.random_range(-100.0..100.0);
        let mean_y: f64 = rng.random_range(-100.0..100.0);
        let sd_x: f64 = rng.random_range(0.1..50.0);
        let sd_y: f64 = rng.random_range(0.1..50.0);
        let x: Vec<f64> = (0..n1)
            .map(|_| mean_x + sd_x * (rng.random_range(0.0..1.0f64) - 0.5) * 3.46)
            .collect();
        let y: Vec<f64> = (0..n2)
            .map(|_| mean_y + sd_y * (rng.random_range(0.0..1.0f64) - 0.5) * 3.46)
            .collect();

        let ours = match welch_one_sided(&x, &y, Alternative::Less) {
            Ok(r) => r,
            Err(_) => continue, // degenerate draw
        };
        let (t_ref, nu_ref) = brute_force_welch(&x, &y);
        let p_ref = t_cdf_by_quadrature(t_ref, nu_ref);

        max_dt = max_dt.max((ours.t - t_ref).abs());
        max_dnu = max_dnu.max((ours.nu - nu_ref).abs());
        max_dp = max_dp.max((ours.p - p_ref).abs());
    }

    assert!(max_dt <= 1e-9, "|Δt| = {max_dt}");
    assert!(max_dnu <= 1e-9, "|Δν| = {max_dnu}");
    assert!(max_dp <= 1e-8, "|Δp| = {max_dp}");

    // Worked example.
    let r = welch_one_sided(
        &[1.0, 2.0, 3.0, 4.0],
        &[5.0, 6.0, 7.0, 8.0],
        Alternative::Less,
    )
    .unwrap();
    assert!((r.t - (-4.38178)).abs() < 1e-5, "t = {}", r.t);
    assert!((r.nu - 6.0).abs() < 1e-12, "nu = {}", r.nu);
    assert!((r.p - 0.00233).abs() < 5e-6, "p = {}", r.p);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    pass(
        "criterion 1 (statistics oracle)",
        format!(
            "1000 pairs, |Δt|≤{max_dt:.2e}, |Δν|≤{max_dnu:.2e}, |Δp|≤{max_dp:.2e}, {elapsed:?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Algebraic identities
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_algebraic_identities() {
    // Identical groups: t = 0, p = 0.5 exactly.
    let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
    let same = welch_one_sided(&x, &x, Alternative::Less).unwrap();
    assert_eq!(same.t, 0.0);
    assert_eq!(same.p, 0.5);

    // Equal sizes and variances: nu = 2n - 2.
    let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let b = [21.0, 22.0, 23.0, 24.0, 25.0, 26.0];
    let r = welch_one_sided(&a, &b, Alternative::Less).unwrap();
    assert!((r.nu - 10.0).abs() <= 1e-12, "nu = {}", r.nu);

    // Antisymmetry: p(X, Y) = 1 - p(Y, X).
    let u = [3.1, 4.5, 2.2, 7.8, 5.0, 6.1];
    let v = [9.4, 8.8, 10.1, 7.7, 9.0];
    let uv = welch_one_sided(&u, &v, Alternative::Less).unwrap();
    let vu = welch_one_sided(&v, &u, Alternative::Less).unwrap();
    assert!((uv.p - (1.0 - vu.p)).abs() <= 1e-12);
    assert!((uv.t + vu.t).abs() <= 1e-12);

    // Shift invariance and positive-scale equivariance of (t, nu).
    let base = welch_one_sided(&u, &v, Alternative::Less).unwrap();
    let shift = 16.0;
    let us: Vec<f64> = u.iter().map(|w| w + shift).collect();
    let vs: Vec<f64> = v.iter().map(|w| w + shift).collect();
    let shifted = welch_one_sided(&us, &vs, Alternative::Less).unwrap();
    assert!((base.t - shifted.t).abs() <= 1e-12);
    assert!((base.nu - shifted.nu).abs() <= 1e-12);

    for c in [2.0, 0.5, 3.5] {
        let uc: Vec<f64> = u.iter().map(|w| w * c).collect();
        let vc: Vec<f64> = v.iter().map(|w| w * c).collect();
        let scaled = welch_one_sided(&uc, &vc, Alternative::Less).unwrap();
        assert!((base.t - scaled.t).abs() <= 1e-12, "c = {c}");
        assert!((base.nu - scaled.nu).abs() <= 1e-12, "c = {c}");
    }

    pass(
        "criterion 2 (algebraic identities)",
        "t=0/p=0.5, ν=2n−2, antisymmetry, shift/scale all within 1e-12".into(),
    );
}

// ---------------------------------------------------------------------------
// 3. t CDF accuracy against quadrature
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_t_cdf_accuracy() {
    let mut max_err = 0.0f64;
    let mut worst = (0.0, 0.0);
    for &nu in &[1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1000.0] {
        for i in 0..200 {
            let t = -50.0 + 100.0 * (i as f64) / 199.0;
            let ours = t_cdf(t, nu);
            let reference = t_cdf_by_quadrature(t, nu);
            let err = (ours - reference).abs();
            if err > max_err {
                max_err = err;
                worst = (t, nu);
            }
        }
    }
    assert!(
        max_err <= 1e-10,
        "max |Δ| = {max_err:.3e} at t={}, ν={}",
        worst.0,
        worst.1
    );
    pass(
        "criterion 3 (t CDF accuracy)",
        format!("1400 grid points, max |Δ| = {max_err:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// 4. log-MSE oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_log_mse_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(4004);
    for _ in 0..100 {
        let n = rng.random_range(1..64usize);
        let predictions: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
        let truths: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
        let ours = match log_mse(&predictions, &truths) {
            Ok(r) => r,
            Err(_) => continue,
        };
        // Direct evaluation with compensated summation.
        let residuals: Vec<f64> = predictions
            .iter()
            .zip(&truths)
            .map(|(p, t)| (p - t) * (p - t))
            .collect();
        let reference = (oracles::neumaier_sum(&residuals) / n as f64).ln();
        assert!(
            (ours.log_mse - reference).abs() <= 1e-12,
            "Δ = {}",
            (ours.log_mse - reference).abs()
        );
    }
    let ln10 = log_mse(&[3.0, 5.0], &[1.0, 1.0]).unwrap();
    assert_eq!(ln10.mse, 10.0);
    assert!((ln10.log_mse - 10f64.ln()).abs() <= 1e-15);
    pass(
        "criterion 4 (log-MSE oracle)",
        "100 random vectors within 1e-12; ln 10 example reproduced".into(),
    );
}

// ---------------------------------------------------------------------------
// 5. Bias-detection power and null calibration
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_bias_detection_power() {
    let started = Instant::now();

    // 30 synthetic tickers with prices spanning the cutoff.
    let universe = fixtures::synthetic_price_universe(30);
    let config = FixtureConfig {
        price_start: NaiveDate::from_ymd_opt(2023, 1, 2).unwrap(),
        price_end: NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
        quarters: (2023, 1, 2023, 1),
        years: (2023, 2023),
        ..FixtureConfig::default()
    };
    let store = Store::in_memory().unwrap();
    fixtures::generate_for(&config, &universe)
        .ingest_into(&store)
        .unwrap();
    let cutoff = NaiveDate::from_ymd_opt(2024, 6, 1).unwrap();
    let targets = [PredictionTarget::StockPrice];
    let tasks = eval::build_tasks(&store, cutoff, &targets, PriceField::Close).unwrap();
    let n_before = tasks
        .iter()
        .filter(|t| matches!(t.group, eval::CutoffGroup::BeforeCutoff))
        .count();
    let n_after = tasks.len() - n_before;
    assert_eq!(n_before, 30, "one before-task per ticker");
    assert_eq!(n_after, 30, "one after-task per ticker");

    let p_for = |noise_before: f64, noise_after: f64, seed: u64| -> f64 {
        let mock = MockBackend::new(synthetic_noise_script(
            &tasks,
            noise_before,
            noise_after,
            seed,
        ));
        let report = eval::run_rq1(
            &mock,
            "mock-model",
            &store,
            cutoff,
            &targets,
            PriceField::Close,
            2,
        )
        .unwrap();
        report.targets[0].p_value.expect("both groups scored")
    };

    let biased_rejections = (0..100)
        .filter(|&seed| p_for(1.0, 3.0, seed) < 0.05)
        .count();
    assert!(
        biased_rejections >= 95,
        "power too low: {biased_rejections}/100 rejections under 1:3 noise"
    );

    let null_rejections = (0..100)
        .filter(|&seed| p_for(1.0, 1.0, 1_000_000 + seed) < 0.05)
        .count();
    assert!(
        null_rejections <= 10,
        "null rejection rate out of band: {null_rejections}/100 (expected 5% ± 5 points)"
    );

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    pass(
        "criterion 5 (bias-detection power)",
        format!(
            "1:3 noise rejected {biased_rejections}/100, null rejected {null_rejections}/100, {elapsed:?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Routing regression over the bundled suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_routing_regression() {
    let started = Instant::now();
    let store = fixture_store();
    let cases = parse_suite(BUNDLED_SUITE).unwrap();
    assert_eq!(cases.len(), 110);
    let library = QueryLibrary::standard();

    // Every derived argument set must validate against its function.
    for case in &cases {
        library
            .validate_args(&case.function, &case.arguments)
            .unwrap_or_else(|e| panic!("case {} failed validation: {e}", case.index));
    }

    let backend = MockBackend::new(eval::function_calling_script(&cases));
    let rate_card = default_rate_card();
    let report = run_rq3(
        store,
        &library,
        &backend,
        "mock-model",
        &rate_card,
        &cases,
        &[SystemKind::FunctionCalling],
        SandboxLimits::default(),
        0,
    )
    .unwrap();

    let failures: Vec<_> = report.cases.iter().filter(|c| !c.success).collect();
    assert!(
        failures.is_empty(),
        "{} of {} cases failed; first: {:?} `{}` ({:?})",
        failures.len(),
        report.cases.len(),
        failures[0].verdict,
        failures[0].question,
        failures[0].failure_detail,
    );
    let catalog: Vec<&str> = library.catalog().iter().map(|f| f.name.as_str()).collect();
    for case in &report.cases {
        let route = case.route.as_deref().expect("successful case has a route");
        assert!(catalog.contains(&route), "route {route} not in catalog");
    }
    assert_eq!(report.systems[0].accuracy, 1.0);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    pass(
        "criterion 6 (routing regression)",
        format!("110/110 suite cases returned oracle rows, {elapsed:?}"),
    );
}

// ---------------------------------------------------------------------------
// 7. Safety under hostile fuzzing
// ---------------------------------------------------------------------------

fn hostile_tool_call(rng: &mut ChaCha12Rng, round: u64) -> (String, String) {
    const INJECTIONS: &[&str] = &[
        "NVDA'; DROP TABLE prices;--",
        "NVDA\" OR 1=1 --",
        "NVDA; DELETE FROM fundamentals",
        "'; ATTACH DATABASE '/tmp/pwn' AS p; --",
        "Robert'); DROP TABLE companies;--",
        "UNION SELECT * FROM companies",
        "`rm -rf /`",
        "NVDA\0hidden",
    ];
    let name = match rng.random_range(0..5u32) {
        0 => "get_stock_price".to_string(),
        1 => "get_fundamental_metric".to_string(),
        2 => "get_financial_statement".to_string(),
        3 => format!("made_up_function_{round}"),
        _ => "run_sql".to_string(),
    };
    let injection = INJECTIONS[rng.random_range(0..INJECTIONS.len())];
    let arguments = match rng.random_range(0..7u32) {
        0 => format!(
            r#"{{"ticker":"{}","n":10,"unit":"days"}}"#,
            injection.replace('"', "\\\"")
        ),
        1 => format!(
            r#"{{"ticker":"NVDA","n":{},"unit":"days"}}"#,
            rng.random_range(-5i64..1)
        ),
        2 => r#"{"ticker": "NVDA""#.to_string(), // truncated JSON
        3 => format!(
            r#"{{"ticker":"NVDA","metric":"{}","n_periods":1}}"#,
            injection.replace('"', "\\\"")
        ),
        4 => format!(r#"{{"sql":"DROP TABLE prices","ticker":"{injection}"}}"#),
        5 => r#"{"ticker": 42, "n": "lots"}"#.to_string(),
        _ => format!(
            r#"{{"ticker":"NVDA","start_date":"{}","end_date":"2024-01-01' OR '1'='1"}}"#,
            injection.replace('"', "\\\"")
        ),
    };
    (name, arguments)
}

#[test]
fn criterion_07_safety_under_fuzzing() {
    // Dedicated small store so the execution-log window is self-contained.
    let dir = tempfile::TempDir::new().unwrap();
    let store = Store::open(dir.path().join("fuzz.db")).unwrap();
    let config = FixtureConfig {
        price_end: NaiveDate::from_ymd_opt(2020, 3, 31).unwrap(),
        quarters: (2020, 1, 2020, 4),
        years: (2019, 2020),
        ..FixtureConfig::default()
    };
    fixtures::generate_for(&config, &fixtures::STANDARD_UNIVERSE[..3])
        .ingest_into(&store)
        .unwrap();

    let hash_before = store.content_hash().unwrap();
    let log_start = store.execution_log_len();
    let library = QueryLibrary::standard();
    let rate_card = default_rate_card();
    let registry = TemplateRegistry::bundled();

    let mut rng = ChaCha12Rng::seed_from_u64(7007);
    let rounds = 10_000u64;
    for round in 0..rounds {
        let (name, arguments) = hostile_tool_call(&mut rng, round);
        let mock = MockBackend::new(vec![ScriptEntry {
            matcher: Matcher::Contains(String::new()),
            respond: ScriptedResponse::ToolCall { name, arguments },
            usage: Some(TokenUsage::new(1, 1)),
        }]);
        let assistant = Assistant::new(
            &mock,
            &store,
            &library,
            &rate_card,
            AssistantConfig::new("mock-model"),
        )
        .unwrap();
        // Must never panic and never run unregistered SQL.
        let _ = assistant.answer(&format!("fuzz case {round}"));
    }

    let log = store.execution_log();
    let new_entries = &log[log_start..];
    assert!(!new_entries.is_empty(), "fuzzing exercised the query path");
    for entry in new_entries {
        assert!(
            registry.contains_sql(&entry.sql),
            "non-template SQL executed: {}",
            entry.sql
        );
    }
    assert_eq!(
        store.content_hash().unwrap(),
        hash_before,
        "store content changed under fuzzing"
    );

    // The sandbox side: every non-SELECT statement is rejected.
    let mut non_select_rejected = 0usize;
    let mut non_select_total = 0usize;
    let statements = [
        "DELETE FROM prices",
        "INSERT INTO prices VALUES ('X','2020-01-01','1','1','1','1','1',1)",
        "UPDATE prices SET close = '0'",
        "DROP TABLE prices",
        "ALTER TABLE prices ADD COLUMN hacked TEXT",
        "ATTACH DATABASE '/tmp/evil' AS evil",
        "PRAGMA journal_mode = DELETE",
        "CREATE TABLE pwned (id INTEGER)",
        "VACUUM",
        "REINDEX",
        "SELECT 1; DROP TABLE prices",
        "  delete from fundamentals where 1=1",
        "WITH x AS (SELECT 1) DELETE FROM prices",
    ];
    for statement in statements {
        non_select_total += 1;
        if sanitize_statement(statement).is_err()
            || sandbox_execute(statement, &store, SandboxLimits::default()).is_err()
        {
            non_select_rejected += 1;
        }
    }
    assert_eq!(
        non_select_rejected, non_select_total,
        "sandbox must reject 100% of non-SELECT statements"
    );
    assert_eq!(store.content_hash().unwrap(), hash_before);

    pass(
        "criterion 7 (safety)",
        format!(
            "{rounds} hostile tool calls: 0 non-template statements, store hash unchanged; {non_select_total}/{non_select_total} non-SELECTs rejected"
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Accounting exactness
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_accounting_exactness() {
    let store = fixture_store();
    let cases = parse_suite(BUNDLED_SUITE).unwrap();
    let library = QueryLibrary::standard();
    let rate_card = default_rate_card();
    let mut entries = eval::function_calling_script(&cases);
    entries.extend(eval::text_to_sql_script(store, &cases));
    let backend = MockBackend::new(entries);

    let report = run_rq3(
        store,
        &library,
        &backend,
        "mock-model",
        &rate_card,
        &cases,
        &[SystemKind::FunctionCalling, SystemKind::TextToSql],
        SandboxLimits::default(),
        0,
    )
    .unwrap();

    // Per-case cost equals the exact decimal tariff of its usage.
    for case in &report.cases {
        let expected = rate_card.cost("mock-model", case.usage).unwrap();
        assert_eq!(
            case.cost, expected,
            "case {} ({})",
            case.case_index, case.system
        );
    }

    // Offline recomputation from per-case records matches the streamed
    // aggregates bit for bit, including after a JSON round trip.
    let json = serde_json::to_string(&report.cases).unwrap();
    let reloaded: Vec<eval::BenchCaseResult> = serde_json::from_str(&json).unwrap();
    for (streamed, records) in [
        (&report.systems[0], &report.cases),
        (&report.systems[1], &report.cases),
        (&report.systems[0], &reloaded),
        (&report.systems[1], &reloaded),
    ] {
        let recomputed = aggregate(streamed.system, records);
        assert_eq!(recomputed.total_cost, streamed.total_cost);
        assert_eq!(recomputed.usage, streamed.usage);
        assert_eq!(recomputed.successes, streamed.successes);
        assert_eq!(recomputed.accuracy.to_bits(), streamed.accuracy.to_bits());
        assert_eq!(recomputed.mean_cost.to_bits(), streamed.mean_cost.to_bits());
        assert_eq!(recomputed.std_cost.to_bits(), streamed.std_cost.to_bits());
        assert_eq!(
            recomputed.mean_latency_ms.to_bits(),
            streamed.mean_latency_ms.to_bits()
        );
        assert_eq!(
            recomputed.std_latency_ms.to_bits(),
            streamed.std_latency_ms.to_bits()
        );
    }

    // Cross-check the total against an independent decimal summation.
    for system_report in &report.systems {
        let total: Decimal = report
            .cases
            .iter()
            .filter(|c| c.system == system_report.system)
            .map(|c| rate_card.cost("mock-model", c.usage).unwrap())
            .sum();
        assert_eq!(total, system_report.total_cost);
    }

    pass(
        "criterion 8 (accounting exactness)",
        format!(
            "{} cases priced exactly; streamed vs offline aggregates bit-identical",
            report.cases.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. RQ2 harness on the 20-company fixture
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_rq2_harness() {
    let store = Store::in_memory().unwrap();
    let mut csv = String::from("ticker,name,aliases,index_memberships\n");
    for i in 0..20 {
        // Companies 18 and 19 joined after the cutoff below.
        let start = if i >= 18 { "2024-09-23" } else { "2015-03-02" };
        csv.push_str(&format!("T{i:02},Fixture Corp {i:02},,SP500:{start}:\n"));
    }
    store.ingest_companies(csv.as_bytes()).unwrap();

    // Scripted answers: two wrong, two needing normalization, rest exact.
    let entries: Vec<ScriptEntry> = (0..20)
        .map(|i| {
            let text = match i {
                3 => "WRONGX".to_string(),
                7 => "I am not sure about that one.".to_string(),
                5 => "t05.".to_string(),   // lowercase + trailing dot
                11 => "`T11`".to_string(), // backticks
                _ => format!("T{i:02}"),
            };
            ScriptEntry {
                matcher: Matcher::Contains(format!("Fixture Corp {i:02}")),
                respond: ScriptedResponse::Text(text),
                usage: Some(TokenUsage::new(30, 2)),
            }
        })
        .collect();
    let mock = MockBackend::new(entries);

    let cutoff = NaiveDate::from_ymd_opt(2024, 6, 1).unwrap();
    let report = eval::run_rq2(
        &mock,
        "mock-model",
        &store,
        IndexId::Sp500,
        Some(cutoff),
        finq::resolver::RQ2_PROMPT_TEMPLATE,
        2,
    )
    .unwrap();

    assert_eq!(report.latest.total, 20);
    assert_eq!(report.latest.matches, 18);
    assert_eq!(report.latest.accuracy, 18.0 / 20.0);
    assert_eq!(report.latest.accuracy, 0.9);

    let pre = report.pre_cutoff.as_ref().unwrap();
    assert_eq!(
        pre.total, 18,
        "two post-cutoff additions leave the denominator"
    );
    assert_eq!(pre.matches, 16);
    assert_eq!(pre.accuracy, 16.0 / 18.0);

    // Normalization rules did the work for the two messy answers.
    let t05 = report.answers.iter().find(|a| a.expected == "T05").unwrap();
    assert!(t05.matched && t05.normalized == "T05");
    let t11 = report.answers.iter().find(|a| a.expected == "T11").unwrap();
    assert!(t11.matched && t11.normalized == "T11");

    pass(
        "criterion 9 (RQ2 harness)",
        "20-company fixture: latest 18/20 = 0.9, pre-cutoff 16/18; normalization verified".into(),
    );
}

// ---------------------------------------------------------------------------
// 10. Live directional check (optional, not CI-gated)
// ---------------------------------------------------------------------------

/// Needs `FINQ_LIVE_BASE_URL`, `FINQ_LIVE_MODEL`, and an API key in
/// `OPENAI_API_KEY`; run with `cargo test -- --ignored criterion_10`.
#[test]
#[ignore = "requires a live chat-completions backend"]
fn criterion_10_live_directional_check() {
    let base_url = std::env::var("FINQ_LIVE_BASE_URL").expect("FINQ_LIVE_BASE_URL");
    let model = std::env::var("FINQ_LIVE_MODEL").expect("FINQ_LIVE_MODEL");
    let backend =
        finq::protocol::HttpBackend::new(base_url, "OPENAI_API_KEY", Duration::from_secs(120))
            .unwrap();

    let store = fixture_store();
    let cases = parse_suite(BUNDLED_SUITE).unwrap();
    let library = QueryLibrary::standard();
    let rate_card = RateCard::from_csv(
        std::fs::File::open(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/rate_card.csv"),
        )
        .unwrap(),
    )
    .unwrap();

    let report = run_rq3(
        store,
        &library,
        &backend,
        &model,
        &rate_card,
        &cases,
        &[SystemKind::FunctionCalling, SystemKind::TextToSql],
        SandboxLimits::default(),
        0,
    )
    .unwrap();
    let fc = &report.systems[0];
    let t2s = &report.systems[1];
    assert!(
        fc.mean_latency_ms < t2s.mean_latency_ms,
        "function calling should be faster: {} vs {}",
        fc.mean_latency_ms,
        t2s.mean_latency_ms
    );
    assert!(
        fc.mean_cost < t2s.mean_cost,
        "function calling should be cheaper: {} vs {}",
        fc.mean_cost,
        t2s.mean_cost
    );
    pass(
        "criterion 10 (live directional check)",
        format!(
            "fc latency {:.1}ms < t2s {:.1}ms; fc cost {:.6} < t2s {:.6}",
            fc.mean_latency_ms, t2s.mean_latency_ms, fc.mean_cost, t2s.mean_cost
        ),
    );
}
