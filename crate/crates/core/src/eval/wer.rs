use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ReportBundle;
use crate::domain::{sort_conditions, HadsSubscale, TranscriptCondition};
use crate::ingest::Dataset;
use crate::text::{corpus_wer, word_error_rate, WerBreakdown};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectWer {
    pub subject_id: String,
    pub condition: String,
    pub breakdown: WerBreakdown,
}

/// Corpus-level WER of one condition against the reference transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WerRow {
    pub condition: String,
    pub n_subjects: usize,
    /// Pooled counts over all subjects.
    pub corpus: WerBreakdown,
    pub mean_subject_wer: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_wer: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WerAnalysis {
    pub rows: Vec<WerRow>,
    pub subjects: Vec<SubjectWer>,
}

/// WER of every non-reference condition, per subject and pooled. Subjects
/// lacking either transcript, or with an empty reference, are left out.
pub fn wer_analysis(dataset: &Dataset, reference: &str) -> WerAnalysis {
    let nominal: BTreeMap<String, Option<f64>> =
        TranscriptCondition::canonical().into_iter().map(|c| (c.id, c.nominal_wer)).collect();
    let mut out = WerAnalysis::default();
    for condition in sort_conditions(dataset.conditions()) {
        if condition == reference {
            continue;
        }
        let mut parts = Vec::new();
        for s in dataset.subjects.values() {
            let (Some(r), Some(h)) = (s.transcript(reference), s.transcript(&condition)) else {
                continue;
            };
            let Ok(b) = word_error_rate(r, h) else { continue };
            parts.push(b);
            out.subjects.push(SubjectWer {
                subject_id: s.subject_id.clone(),
                condition: condition.clone(),
                breakdown: b,
            });
        }
        if let Some(corpus) = corpus_wer(&parts) {
            out.rows.push(WerRow {
                condition: condition.clone(),
                n_subjects: parts.len(),
                corpus,
                mean_subject_wer: parts.iter().map(|p| p.wer).sum::<f64>() / parts.len() as f64,
                nominal_wer: nominal.get(&condition).copied().flatten(),
            });
        }
    }
    out
}

/// One point of the WER-vs-validity and WER-vs-consistency plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub model: String,
    pub subscale: HadsSubscale,
    pub condition: String,
    pub wer: Option<f64>,
    pub rho: Option<f64>,
    pub icc: Option<f64>,
}

/// Joins validity and consistency cells with corpus WER. The reference
/// condition is placed at WER 0.
pub fn fig2_rows(bundle: &ReportBundle, reference: &str) -> Vec<Fig2Row> {
    let wer: BTreeMap<&str, f64> = bundle.wer.iter().map(|w| (w.condition.as_str(), w.corpus.wer)).collect();
    let mut keys: BTreeMap<(String, HadsSubscale, String), (Option<f64>, Option<f64>)> = BTreeMap::new();
    for v in &bundle.validity {
        keys.entry((v.model.clone(), v.subscale, v.condition.clone())).or_default().0 = v.rho.map(|r| r.rho);
    }
    for c in &bundle.consistency {
        keys.entry((c.model.clone(), c.subscale, c.condition.clone())).or_default().1 = Some(c.icc.icc);
    }
    let order = sort_conditions(keys.keys().map(|k| k.2.clone()));
    let mut rows: Vec<Fig2Row> = keys
        .into_iter()
        .map(|((model, subscale, condition), (rho, icc))| Fig2Row {
            wer: if condition == reference { Some(0.0) } else { wer.get(condition.as_str()).copied() },
            model,
            subscale,
            condition,
            rho,
            icc,
        })
        .collect();
    let pos = |c: &str| order.iter().position(|o| o == c);
    rows.sort_by(|a, b| (&a.model, a.subscale, pos(&a.condition)).cmp(&(&b.model, b.subscale, pos(&b.condition))));
    rows
}
