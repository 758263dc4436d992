//! Core vocabulary: subscales, transcript conditions, subjects, predictions
//! and the per-slice run matrices consumed by the agreement statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper end of each HADS subscale.
pub const HADS_MAX: f64 = 21.0;

/// Label of the human reference transcript condition.
pub const GT_CONDITION: &str = "GT";

/// The four transcript conditions in display order.
pub const CANONICAL_CONDITIONS: [&str; 4] = [GT_CONDITION, "W-Large", "W-Medium", "W-Small"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("score {0} outside the HADS range 0..=21")]
    OutOfRange(f64),
    #[error("score is not numeric: {0}")]
    NonNumeric(String),
    #[error("insufficient data for {slice}: {complete} complete rows, {runs} runs (need at least 2 of each)")]
    InsufficientData {
        slice: String,
        complete: usize,
        runs: usize,
    },
    #[error("invalid subject record {subject_id}: {reason}")]
    InvalidSubject { subject_id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HadsSubscale {
    Anxiety,
    Depression,
}

impl HadsSubscale {
    pub const ALL: [HadsSubscale; 2] = [HadsSubscale::Anxiety, HadsSubscale::Depression];

    /// Single-letter tag used in table rows.
    pub fn short(self) -> &'static str {
        match self {
            HadsSubscale::Anxiety => "A",
            HadsSubscale::Depression => "D",
        }
    }
}

impl fmt::Display for HadsSubscale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HadsSubscale::Anxiety => "HADS-A",
            HadsSubscale::Depression => "HADS-D",
        })
    }
}

/// A transcript source, e.g. the human reference or one ASR system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptCondition {
    pub id: String,
    pub nominal_wer: Option<f64>,
}

impl TranscriptCondition {
    pub fn new(id: impl Into<String>, nominal_wer: Option<f64>) -> Self {
        Self {
            id: id.into(),
            nominal_wer,
        }
    }

    /// The reference transcript plus the three Whisper variants with the
    /// word error rates measured on the study corpus.
    pub fn canonical() -> Vec<TranscriptCondition> {
        vec![
            Self::new(GT_CONDITION, Some(0.0)),
            Self::new("W-Large", Some(0.086)),
            Self::new("W-Medium", Some(0.093)),
            Self::new("W-Small", Some(0.101)),
        ]
    }
}

/// Orders condition labels with the canonical four first, then the rest
/// lexicographically.
pub fn sort_conditions<I, S>(labels: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
    let mut out: Vec<String> = CANONICAL_CONDITIONS
        .iter()
        .filter(|c| set.contains(**c))
        .map(|c| c.to_string())
        .collect();
    out.extend(
        set.into_iter()
            .filter(|c| !CANONICAL_CONDITIONS.contains(&c.as_str())),
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub hads_a: u8,
    pub hads_d: u8,
    pub transcripts: BTreeMap<String, String>,
}

impl SubjectRecord {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |reason: String| DomainError::InvalidSubject {
            subject_id: self.subject_id.clone(),
            reason,
        };
        for (name, v) in [("hads_a", self.hads_a), ("hads_d", self.hads_d)] {
            if f64::from(v) > HADS_MAX {
                return Err(bad(format!("{name} = {v} exceeds 21")));
            }
        }
        if self.transcripts.is_empty() {
            return Err(bad("no transcripts".into()));
        }
        if let Some((label, _)) = self.transcripts.iter().find(|(_, t)| t.trim().is_empty()) {
            return Err(bad(format!("transcript for {label} is empty")));
        }
        Ok(())
    }

    pub fn ground_truth(&self, subscale: HadsSubscale) -> u8 {
        match subscale {
            HadsSubscale::Anxiety => self.hads_a,
            HadsSubscale::Depression => self.hads_d,
        }
    }

    pub fn transcript(&self, condition: &str) -> Option<&str> {
        self.transcripts.get(condition).map(String::as_str)
    }
}

/// One parsed LLM output for a (model, condition, run, subject) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub model_id: String,
    pub condition: String,
    pub run_index: u32,
    pub subject_id: String,
    pub score_a: f64,
    pub score_d: f64,
    pub keywords_a: Vec<String>,
    pub keywords_d: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_completion: Option<String>,
}

impl PredictionRecord {
    pub fn score(&self, subscale: HadsSubscale) -> f64 {
        match subscale {
            HadsSubscale::Anxiety => self.score_a,
            HadsSubscale::Depression => self.score_d,
        }
    }

    pub fn keywords(&self, subscale: HadsSubscale) -> &[String] {
        match subscale {
            HadsSubscale::Anxiety => &self.keywords_a,
            HadsSubscale::Depression => &self.keywords_d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeverityTier {
    Normal,
    Borderline,
    Clinical,
}

pub fn classify_severity(score: u8) -> Result<SeverityTier, DomainError> {
    match score {
        0..=7 => Ok(SeverityTier::Normal),
        8..=10 => Ok(SeverityTier::Borderline),
        11..=21 => Ok(SeverityTier::Clinical),
        _ => Err(DomainError::OutOfRange(f64::from(score))),
    }
}

/// Accepts finite scores in `[0, 21]`. Nothing is clamped.
pub fn validate_score(x: f64) -> Result<f64, DomainError> {
    if !x.is_finite() {
        return Err(DomainError::NonNumeric(x.to_string()));
    }
    if !(0.0..=HADS_MAX).contains(&x) {
        return Err(DomainError::OutOfRange(x));
    }
    Ok(x)
}

/// Mean-of-runs per subject for one model, condition and subscale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub means: BTreeMap<String, f64>,
    /// Subjects whose mean used fewer than the expected number of runs.
    pub subjects_with_missing_runs: usize,
    /// Total number of missing runs over retained subjects.
    pub missing_runs: usize,
}

/// Averages the valid runs of each subject. `expected_runs` is the
/// configured run count; subjects with fewer runs are kept but counted.
pub fn aggregate_runs<'a, I>(records: I, subscale: HadsSubscale, expected_runs: usize) -> RunAggregate
where
    I: IntoIterator<Item = &'a PredictionRecord>,
{
    let mut per_subject: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        per_subject
            .entry(r.subject_id.as_str())
            .or_default()
            .push(r.score(subscale));
    }
    let mut agg = RunAggregate::default();
    for (subject, mut scores) in per_subject {
        // fixed summation order keeps the mean independent of run order
        scores.sort_by(f64::total_cmp);
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        if scores.len() < expected_runs {
            agg.subjects_with_missing_runs += 1;
            agg.missing_runs += expected_runs - scores.len();
        }
        agg.means.insert(subject.to_string(), mean);
    }
    agg
}

/// n subjects by k runs, rows sorted by subject id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMatrix {
    pub model_id: String,
    pub condition: String,
    pub subscale: HadsSubscale,
    pub subject_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Subjects dropped because at least one run was missing.
    pub excluded: Vec<String>,
}

impl RunMatrix {
    pub fn n_subjects(&self) -> usize {
        self.values.len()
    }

    pub fn n_runs(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Builds the complete-case matrix for one slice. Records outside the slice
/// are ignored; subjects missing any of runs `1..=runs` are excluded.
pub fn build_run_matrix<'a, I>(
    records: I,
    model_id: &str,
    condition: &str,
    subscale: HadsSubscale,
    runs: usize,
) -> Result<RunMatrix, DomainError>
where
    I: IntoIterator<Item = &'a PredictionRecord>,
{
    let mut cells: BTreeMap<&str, BTreeMap<u32, f64>> = BTreeMap::new();
    for r in records {
        if r.model_id != model_id || r.condition != condition {
            continue;
        }
        cells
            .entry(r.subject_id.as_str())
            .or_default()
            .insert(r.run_index, r.score(subscale));
    }

    let mut subject_ids = Vec::new();
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    for (subject, by_run) in cells {
        let row: Option<Vec<f64>> = (1..=runs as u32).map(|k| by_run.get(&k).copied()).collect();
        match row {
            Some(row) => {
                subject_ids.push(subject.to_string());
                values.push(row);
            }
            None => excluded.push(subject.to_string()),
        }
    }

    if values.len() < 2 || runs < 2 {
        return Err(DomainError::InsufficientData {
            slice: format!("{model_id}/{condition}/{}", subscale.short()),
            complete: values.len(),
            runs,
        });
    }
    Ok(RunMatrix {
        model_id: model_id.to_string(),
        condition: condition.to_string(),
        subscale,
        subject_ids,
        values,
        excluded,
    })
}
