use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::parse::{parse_line, LenientFlag, ParseFailureKind, ParseOutcome, PredictionKeys, PredictionLine, Provenance};
use super::IngestError;
use crate::domain::{sort_conditions, PredictionRecord};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub model: String,
    pub condition: String,
    pub run: u32,
    pub subject_id: String,
}

impl CellKey {
    pub fn of(r: &PredictionRecord) -> Self {
        CellKey {
            model: r.model_id.clone(),
            condition: r.condition.clone(),
            run: r.run_index,
            subject_id: r.subject_id.clone(),
        }
    }
}

/// Valid predictions indexed by (model, condition, run, subject).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CampaignStore {
    records: BTreeMap<CellKey, PredictionRecord>,
}

impl CampaignStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the record it replaced, if any.
    pub fn insert(&mut self, record: PredictionRecord) -> Option<PredictionRecord> {
        self.records.insert(CellKey::of(&record), record)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &CellKey) -> Option<&PredictionRecord> {
        self.records.get(key)
    }

    pub fn records(&self) -> impl Iterator<Item = &PredictionRecord> {
        self.records.values()
    }

    pub fn models(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.records.keys().map(|k| k.model.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn conditions(&self) -> Vec<String> {
        sort_conditions(self.records.keys().map(|k| k.condition.as_str()))
    }

    /// Highest run index present.
    pub fn max_run(&self) -> u32 {
        self.records.keys().map(|k| k.run).max().unwrap_or(0)
    }

    pub fn slice<'a>(&'a self, model: &'a str, condition: &'a str) -> impl Iterator<Item = &'a PredictionRecord> + 'a {
        self.records
            .values()
            .filter(move |r| r.model_id == model && r.condition == condition)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionEntry {
    pub model: String,
    pub condition: String,
    pub run: i64,
    pub subject_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub failure: ParseFailureKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "flag")]
pub enum WarningKind {
    Lenient(LenientFlag),
    DuplicateCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreWarning {
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub warning: WarningKind,
}

/// Everything dropped or tolerated while assembling a store. For any input,
/// `failures.len() + stored + superseded == total_inputs`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub total_inputs: usize,
    pub stored: usize,
    /// Earlier rows for a cell that a later row replaced.
    pub superseded: usize,
    pub failures: Vec<ExclusionEntry>,
    pub warnings: Vec<StoreWarning>,
}

impl ExclusionReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn count(&self, kind: ParseFailureKind) -> usize {
        self.failures.iter().filter(|f| f.failure == kind).count()
    }
}

/// Indexes successful outcomes and reports the rest. A repeated cell keeps
/// the last row and raises a warning.
pub fn assemble_runs(outcomes: impl IntoIterator<Item = ParseOutcome>) -> (CampaignStore, ExclusionReport) {
    let mut store = CampaignStore::new();
    let mut report = ExclusionReport::default();
    for outcome in outcomes {
        report.total_inputs += 1;
        for flag in &outcome.lenient {
            report.warnings.push(StoreWarning {
                provenance: outcome.provenance.clone(),
                line: outcome.line,
                warning: WarningKind::Lenient(*flag),
            });
        }
        match outcome.result {
            Ok(record) => {
                if store.insert(record).is_some() {
                    log::warn!("duplicate cell {:?}; keeping the later row", outcome.provenance);
                    report.superseded += 1;
                    report.warnings.push(StoreWarning {
                        provenance: outcome.provenance,
                        line: outcome.line,
                        warning: WarningKind::DuplicateCell,
                    });
                }
            }
            Err(f) => report.failures.push(ExclusionEntry {
                model: outcome.provenance.model,
                condition: outcome.provenance.condition,
                run: outcome.provenance.run,
                subject_id: outcome.provenance.subject_id,
                line: outcome.line,
                failure: f.kind,
                detail: f.detail,
            }),
        }
    }
    report.stored = store.len();
    (store, report)
}

pub fn read_predictions(reader: impl BufRead, keys: &PredictionKeys) -> Result<Vec<ParseOutcome>, IngestError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IngestError::io("<predictions>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, idx + 1, keys));
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>, keys: &PredictionKeys) -> Result<Vec<ParseOutcome>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_predictions(BufReader::new(file), keys).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::io(path, source),
        other => other,
    })
}

/// Writes the store as pre-parsed prediction lines in key order.
pub fn write_predictions(store: &CampaignStore, mut out: impl Write) -> std::io::Result<()> {
    for r in store.records() {
        serde_json::to_writer(&mut out, &PredictionLine::from(r))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_exclusions(report: &ExclusionReport, mut out: impl Write) -> std::io::Result<()> {
    for f in &report.failures {
        serde_json::to_writer(&mut out, f)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
