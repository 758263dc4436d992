use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::http::{chat_complete, CellFailed, ChatClient, Completion};
use super::prompt::{render_prompt, PromptError, DEFAULT_PROMPT_TEMPLATE};
use crate::ingest::{Dataset, PredictionLine, Provenance};

pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const RAW_STORE_FILE: &str = "raw_store.jsonl";
pub const CELL_FAILURES_FILE: &str = "cell_failures.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before retry i (1-based) is `backoff_ms[min(i, len) - 1]`.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            backoff_ms: vec![500, 2_000, 5_000],
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, failed_attempt: u32) -> Duration {
        let idx = (failed_attempt.max(1) as usize - 1).min(self.backoff_ms.len().saturating_sub(1));
        Duration::from_millis(self.backoff_ms.get(idx).copied().unwrap_or(0))
    }
}

fn default_runs() -> u32 {
    3
}
fn default_temperature() -> f64 {
    0.7
}
fn default_in_flight() -> usize {
    4
}
fn default_key_env() -> String {
    "SCREENEVAL_API_KEY".into()
}
fn default_timeout() -> u64 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub endpoint_url: String,
    pub model_ids: Vec<String>,
    /// Empty means every condition present in the dataset.
    #[serde(default)]
    pub condition_labels: Vec<String>,
    #[serde(default = "default_runs")]
    pub runs_per_cell: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub temperature_overrides: BTreeMap<String, f64>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub prompt_template_path: Option<PathBuf>,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

impl CampaignConfig {
    pub fn new(endpoint_url: impl Into<String>, model_ids: Vec<String>) -> Self {
        CampaignConfig {
            endpoint_url: endpoint_url.into(),
            model_ids,
            condition_labels: Vec::new(),
            runs_per_cell: default_runs(),
            temperature: default_temperature(),
            temperature_overrides: BTreeMap::new(),
            max_in_flight: default_in_flight(),
            retry: RetryPolicy::default(),
            prompt_template_path: None,
            api_key_env: default_key_env(),
            timeout_secs: default_timeout(),
        }
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: &str| Err(CampaignError::Config(m.to_string()));
        if self.model_ids.is_empty() {
            return bad("model_ids is empty");
        }
        if self.runs_per_cell < 1 {
            return bad("runs_per_cell must be >= 1");
        }
        if !(self.temperature >= 0.0) || self.temperature_overrides.values().any(|t| !(*t >= 0.0)) {
            return bad("temperature must be >= 0");
        }
        if self.max_in_flight < 1 {
            return bad("max_in_flight must be >= 1");
        }
        if self.retry.max_attempts < 1 {
            return bad("retry.max_attempts must be >= 1");
        }
        Ok(())
    }

    pub fn temperature_for(&self, model: &str) -> f64 {
        self.temperature_overrides.get(model).copied().unwrap_or(self.temperature)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CampaignOptions {
    /// Stop after issuing this many new cells (for batched runs).
    pub max_new_cells: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignSummary {
    /// Cells in the full design that have a transcript.
    pub planned: usize,
    pub already_done: usize,
    pub fetched: usize,
    pub failed: usize,
    /// (model, condition, subject) combinations lacking a transcript, times runs.
    pub missing_transcript: usize,
}

/// One line of the append-only raw store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawStoreEntry {
    #[serde(flatten)]
    pub cell: Provenance,
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    #[serde(flatten)]
    pub cell: Provenance,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    pub body: String,
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign config: {0}")]
    Config(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct Cell {
    prov: Provenance,
    prompt: String,
    temperature: f64,
}

/// Runs every missing (model, condition, subject, run) cell, appending
/// results under `out_dir` as they arrive. Cells already present in the
/// predictions file are skipped, so an interrupted campaign resumes where
/// it stopped. On completion the predictions file is rewritten in cell
/// order.
pub fn run_campaign(
    config: &CampaignConfig,
    dataset: &Dataset,
    out_dir: &Path,
    options: CampaignOptions,
) -> Result<CampaignSummary, CampaignError> {
    config.validate()?;
    let template = match &config.prompt_template_path {
        Some(p) => fs::read_to_string(p).map_err(io_err(p))?,
        None => DEFAULT_PROMPT_TEMPLATE.to_string(),
    };
    render_prompt(&template, "")?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let predictions_path = out_dir.join(PREDICTIONS_FILE);
    let done = existing_cells(&predictions_path)?;

    let conditions = if config.condition_labels.is_empty() {
        dataset.conditions()
    } else {
        config.condition_labels.clone()
    };
    let mut summary = CampaignSummary::default();
    let mut queue = VecDeque::new();
    for model in &config.model_ids {
        for condition in &conditions {
            for subject in dataset.subjects.values() {
                let Some(transcript) = subject.transcript(condition) else {
                    summary.missing_transcript += config.runs_per_cell as usize;
                    continue;
                };
                let prompt = render_prompt(&template, transcript)?;
                for run in 1..=config.runs_per_cell {
                    summary.planned += 1;
                    let prov = Provenance {
                        model: model.clone(),
                        condition: condition.clone(),
                        run: i64::from(run),
                        subject_id: subject.subject_id.clone(),
                    };
                    if done.contains(&prov) {
                        summary.already_done += 1;
                        continue;
                    }
                    queue.push_back(Cell {
                        prov,
                        prompt: prompt.clone(),
                        temperature: config.temperature_for(model),
                    });
                }
            }
        }
    }
    if let Some(limit) = options.max_new_cells {
        queue.truncate(limit);
    }

    let api_key = std::env::var(&config.api_key_env).ok();
    let client = ChatClient::new(
        &config.endpoint_url,
        api_key,
        config.retry.clone(),
        Duration::from_secs(config.timeout_secs),
    );

    terminate_last_line(&predictions_path)?;
    let mut predictions = append_writer(&predictions_path)?;
    let raw_path = out_dir.join(RAW_STORE_FILE);
    let mut raw_store = append_writer(&raw_path)?;
    let failures_path = out_dir.join(CELL_FAILURES_FILE);
    let mut failures: Option<BufWriter<File>> = None;

    let workers = config.max_in_flight.min(queue.len()).max(1);
    let queue = Mutex::new(queue);
    let (tx, rx) = mpsc::channel::<(Provenance, Result<Completion, CellFailed>)>();
    thread::scope(|scope| -> Result<(), CampaignError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (queue, client) = (&queue, &client);
            scope.spawn(move || loop {
                let Some(cell) = queue.lock().expect("queue lock").pop_front() else {
                    break;
                };
                let result = chat_complete(client, &cell.prov.model, &cell.prompt, cell.temperature);
                if tx.send((cell.prov, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        for (prov, result) in rx {
            let attempts = match &result {
                Ok(c) => &c.attempts,
                Err(f) => &f.attempts,
            };
            for a in attempts {
                let entry = RawStoreEntry {
                    cell: prov.clone(),
                    attempt: a.attempt,
                    status: a.status,
                    error: a.error.clone(),
                    body: a.body.clone(),
                };
                write_line(&mut raw_store, &entry).map_err(io_err(&raw_path))?;
            }
            raw_store.flush().map_err(io_err(&raw_path))?;
            match result {
                Ok(c) => {
                    summary.fetched += 1;
                    write_line(&mut predictions, &PredictionLine::raw(&prov, c.text)).map_err(io_err(&predictions_path))?;
                    predictions.flush().map_err(io_err(&predictions_path))?;
                }
                Err(f) => {
                    summary.failed += 1;
                    log::warn!("cell {prov:?} failed: {f}");
                    let w = match &mut failures {
                        Some(w) => w,
                        None => failures.insert(append_writer(&failures_path)?),
                    };
                    let entry = CellFailure {
                        cell: prov,
                        reason: f.reason,
                        status: f.status,
                        body: f.body,
                    };
                    write_line(w, &entry).map_err(io_err(&failures_path))?;
                    w.flush().map_err(io_err(&failures_path))?;
                }
            }
        }
        Ok(())
    })?;
    drop(predictions);

    canonicalize(&predictions_path)?;
    Ok(summary)
}

fn append_writer(path: &Path) -> Result<BufWriter<File>, CampaignError> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map(BufWriter::new)
        .map_err(io_err(path))
}

// A kill mid-write can leave a partial last line; new rows must not be glued onto it.
fn terminate_last_line(path: &Path) -> Result<(), CampaignError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(io_err(path)(e)),
    };
    if bytes.last().is_some_and(|b| *b != b'\n') {
        let mut f = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        f.write_all(b"\n").map_err(io_err(path))?;
    }
    Ok(())
}

fn write_line<T: Serialize>(w: &mut impl Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

/// Rows already on disk. Lines that do not parse (e.g. a write cut short by
/// a kill) are ignored and their cells fetched again.
fn read_rows(path: &Path) -> Result<Vec<PredictionLine>, CampaignError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        if let Ok(row) = serde_json::from_str::<PredictionLine>(&line) {
            rows.push(row);
        }
    }
    Ok(rows)
}

fn existing_cells(path: &Path) -> Result<BTreeSet<Provenance>, CampaignError> {
    Ok(read_rows(path)?.iter().map(PredictionLine::provenance).collect())
}

fn canonicalize(path: &Path) -> Result<(), CampaignError> {
    let rows: BTreeMap<Provenance, PredictionLine> = read_rows(path)?
        .into_iter()
        .map(|r| (r.provenance(), r))
        .collect();
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        for row in rows.values() {
            write_line(&mut w, row).map_err(io_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}
