mod common;

use std::collections::BTreeMap;
use std::fs;
use std::time::{Duration, Instant};

use common::{toy_dataset, Behavior, MockEndpoint};
use screeneval::client::{
    chat_complete, run_campaign, CampaignConfig, CampaignOptions, ChatClient, RetryPolicy, CELL_FAILURES_FILE,
    PREDICTIONS_FILE, RAW_STORE_FILE,
};
use screeneval::ingest::{assemble_runs, load_predictions, PredictionKeys};

fn fast_retry(max_attempts: u32) -> RetryPolicy {
    RetryPolicy {
        max_attempts,
        backoff_ms: vec![1, 2],
    }
}

fn config(url: &str, models: &[&str]) -> CampaignConfig {
    let mut c = CampaignConfig::new(url, models.iter().map(|m| m.to_string()).collect());
    c.retry = fast_retry(4);
    c.timeout_secs = 5;
    c
}

#[test]
fn chat_complete_returns_text() {
    let mock = MockEndpoint::start(BTreeMap::new(), Duration::ZERO);
    let client = ChatClient::new(&mock.url, None, fast_retry(1), Duration::from_secs(5));
    let out = chat_complete(&client, "m", "hello", 0.7).unwrap();
    assert!(out.text.contains("anxiety_score"));
    assert_eq!(out.attempts.len(), 1);
}

#[test]
fn retry_then_succeed() {
    let mock = MockEndpoint::start(BTreeMap::from([("flaky".into(), Behavior::FailFirst(2))]), Duration::ZERO);
    let client = ChatClient::new(&mock.url, None, fast_retry(4), Duration::from_secs(5));
    let out = chat_complete(&client, "flaky", "hello", 0.7).unwrap();
    assert_eq!(out.attempts.len(), 3);
    assert_eq!(out.attempts[0].status, Some(503));
    assert_eq!(out.attempts[2].status, Some(200));
}

#[test]
fn exhausted_retries_fail() {
    let mock = MockEndpoint::start(BTreeMap::from([("flaky".into(), Behavior::FailFirst(5))]), Duration::ZERO);
    let client = ChatClient::new(&mock.url, None, fast_retry(2), Duration::from_secs(5));
    let err = chat_complete(&client, "flaky", "hello", 0.7).unwrap_err();
    assert_eq!(err.attempts.len(), 2);
    assert_eq!(err.status, Some(503));
}

#[test]
fn not_found_is_not_retried() {
    let mock = MockEndpoint::start(BTreeMap::from([("ghost".into(), Behavior::NotFound)]), Duration::ZERO);
    let client = ChatClient::new(&mock.url, None, fast_retry(4), Duration::from_secs(5));
    let err = chat_complete(&client, "ghost", "hello", 0.7).unwrap_err();
    assert_eq!(err.status, Some(404));
    assert_eq!(err.attempts.len(), 1);
    assert!(err.body.contains("model ghost not found"));
}

#[test]
fn transport_error_is_a_cell_failure() {
    let client = ChatClient::new("http://127.0.0.1:1/v1", None, fast_retry(2), Duration::from_secs(2));
    let err = chat_complete(&client, "m", "hello", 0.7).unwrap_err();
    assert_eq!(err.status, None);
    assert_eq!(err.attempts.len(), 2);
}

#[test]
fn toy_campaign_writes_every_cell() {
    let mock = MockEndpoint::start(BTreeMap::new(), Duration::ZERO);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&mock.url, &["m1"]);
    cfg.condition_labels = vec!["GT".into()];
    let t0 = Instant::now();
    let summary = run_campaign(&cfg, &toy_dataset(2), dir.path(), CampaignOptions::default()).unwrap();
    assert!(t0.elapsed() < Duration::from_secs(5));
    assert_eq!(summary.planned, 6);
    assert_eq!(summary.fetched, 6);

    let outcomes = load_predictions(dir.path().join(PREDICTIONS_FILE), &PredictionKeys::default()).unwrap();
    assert_eq!(outcomes.len(), 6);
    let (store, report) = assemble_runs(outcomes);
    assert!(report.is_clean());
    assert_eq!(store.len(), 6);
    let raw = fs::read_to_string(dir.path().join(RAW_STORE_FILE)).unwrap();
    assert_eq!(raw.lines().count(), 6);
    assert!(!dir.path().join(CELL_FAILURES_FILE).exists());
}

#[test]
fn resume_fetches_only_missing_cells() {
    let mock = MockEndpoint::start(BTreeMap::new(), Duration::ZERO);
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&mock.url, &["m1", "m2"]);
    let data = toy_dataset(3);
    let partial = run_campaign(&cfg, &data, dir.path(), CampaignOptions { max_new_cells: Some(7) }).unwrap();
    assert_eq!(partial.fetched, 7);
    assert_eq!(mock.requests(), 7);

    // simulate a write cut short by a kill
    let path = dir.path().join(PREDICTIONS_FILE);
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{\"model\":\"m1\",\"cond");
    fs::write(&path, text).unwrap();

    let rest = run_campaign(&cfg, &data, dir.path(), CampaignOptions::default()).unwrap();
    assert_eq!(rest.already_done, 7);
    assert_eq!(rest.fetched, 2 * 2 * 3 * 3 - 7);
    assert_eq!(mock.requests(), 36);
    let first = fs::read(&path).unwrap();

    let again = run_campaign(&cfg, &data, dir.path(), CampaignOptions::default()).unwrap();
    assert_eq!(again.fetched, 0);
    assert_eq!(mock.requests(), 36);
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn in_flight_is_bounded() {
    let mock = MockEndpoint::start(BTreeMap::new(), Duration::from_millis(15));
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&mock.url, &["m1"]);
    cfg.max_in_flight = 3;
    run_campaign(&cfg, &toy_dataset(6), dir.path(), CampaignOptions::default()).unwrap();
    assert_eq!(mock.requests(), 36);
    assert!(mock.max_in_flight() <= 3, "observed {}", mock.max_in_flight());
    assert!(mock.max_in_flight() >= 2, "workers did not overlap");
}

#[test]
fn failed_cells_are_recorded_and_campaign_continues() {
    let mock = MockEndpoint::start(BTreeMap::from([("ghost".into(), Behavior::NotFound)]), Duration::ZERO);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&mock.url, &["ghost", "m1"]);
    cfg.condition_labels = vec!["GT".into()];
    let summary = run_campaign(&cfg, &toy_dataset(2), dir.path(), CampaignOptions::default()).unwrap();
    assert_eq!(summary.failed, 6);
    assert_eq!(summary.fetched, 6);
    let failures = fs::read_to_string(dir.path().join(CELL_FAILURES_FILE)).unwrap();
    assert_eq!(failures.lines().count(), 6);
    assert!(failures.contains("not found"));

    // failed cells are retried on the next run
    let again = run_campaign(&cfg, &toy_dataset(2), dir.path(), CampaignOptions::default()).unwrap();
    assert_eq!(again.failed, 6);
    assert_eq!(again.already_done, 6);
}

#[test]
fn template_without_placeholder_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let tpl = dir.path().join("tpl.txt");
    fs::write(&tpl, "no placeholder here").unwrap();
    let mut cfg = config("http://127.0.0.1:1", &["m"]);
    cfg.prompt_template_path = Some(tpl);
    assert!(run_campaign(&cfg, &toy_dataset(1), dir.path(), CampaignOptions::default()).is_err());
}
