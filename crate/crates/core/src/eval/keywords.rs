use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{EvalOptions, InterJaccardMode, SkippedSlice};
use crate::domain::{HadsSubscale, PredictionRecord};
use crate::ingest::{CampaignStore, Dataset};
use crate::text::keywords::match_keyword;
use crate::text::{jaccard, normalize_keyword, MatchKind};

/// Keywords listed per model and subscale in the frequency table.
pub const TOP_KEYWORDS: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordCell {
    pub model: String,
    pub subscale: HadsSubscale,
    /// Distinct (subject, keyword) pairs pooled over runs.
    pub n_unique: usize,
    pub n_unique_grounded: usize,
    pub n_unique_fuzzy: usize,
    pub groundedness_pct: Option<f64>,
    /// Every citation counted, including repeats across runs.
    pub n_occurrences: usize,
    pub n_occurrences_grounded: usize,
    pub occurrence_groundedness_pct: Option<f64>,
    pub intra_jaccard: Option<f64>,
    pub inter_jaccard: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordFrequency {
    pub model: String,
    pub subscale: HadsSubscale,
    pub rank: usize,
    pub keyword: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeywordAnalysis {
    pub cells: Vec<KeywordCell>,
    pub frequencies: Vec<KeywordFrequency>,
    pub skipped: Vec<SkippedSlice>,
}

type RunSets = BTreeMap<u32, BTreeSet<String>>;

/// subject -> run -> normalized keyword set
fn keyword_sets<'a>(records: impl Iterator<Item = &'a PredictionRecord>, subscale: HadsSubscale) -> BTreeMap<String, RunSets> {
    let mut out: BTreeMap<String, RunSets> = BTreeMap::new();
    for r in records {
        let set = r
            .keywords(subscale)
            .iter()
            .map(|k| normalize_keyword(k))
            .filter(|k| !k.is_empty())
            .collect();
        out.entry(r.subject_id.clone()).or_default().insert(r.run_index, set);
    }
    out
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

fn intra_jaccard(sets: &BTreeMap<String, RunSets>) -> Option<f64> {
    let per_subject: Vec<f64> = sets
        .values()
        .filter(|runs| runs.len() >= 2)
        .map(|runs| {
            let v: Vec<&BTreeSet<String>> = runs.values().collect();
            let mut pairs = Vec::new();
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    pairs.push(jaccard(v[i], v[j]));
                }
            }
            mean(&pairs).unwrap_or(1.0)
        })
        .collect();
    mean(&per_subject)
}

fn inter_jaccard(
    model: &str,
    all: &BTreeMap<String, BTreeMap<String, RunSets>>,
    mode: InterJaccardMode,
) -> Option<f64> {
    let mine = &all[model];
    let mut values = Vec::new();
    for other in all.iter().filter(|(m, _)| m.as_str() != model).map(|(_, o)| o) {
        for (subject, my_runs) in mine {
            let Some(their_runs) = other.get(subject) else { continue };
            match mode {
                InterJaccardMode::UnionOfRuns => {
                    let a: BTreeSet<&String> = my_runs.values().flatten().collect();
                    let b: BTreeSet<&String> = their_runs.values().flatten().collect();
                    values.push(jaccard(&a, &b));
                }
                InterJaccardMode::PerRun => {
                    for (run, a) in my_runs {
                        if let Some(b) = their_runs.get(run) {
                            values.push(jaccard(a, b));
                        }
                    }
                }
            }
        }
    }
    mean(&values)
}

/// Groundedness, run-to-run and model-to-model keyword overlap, and the
/// most cited keywords, for the keyword condition. Each keyword is checked
/// against its own subject's transcript in that condition.
pub fn keyword_analysis(store: &CampaignStore, dataset: &Dataset, opts: &EvalOptions) -> KeywordAnalysis {
    let condition = opts.keyword_condition.as_str();
    let models = store.models();
    let mut out = KeywordAnalysis::default();
    for subscale in HadsSubscale::ALL {
        let all: BTreeMap<String, BTreeMap<String, RunSets>> = models
            .iter()
            .map(|m| (m.clone(), keyword_sets(store.slice(m, condition), subscale)))
            .filter(|(_, sets)| !sets.is_empty())
            .collect();

        for (model, sets) in &all {
            let mut matches: BTreeMap<(&str, &str), MatchKind> = BTreeMap::new();
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            let (mut occ, mut occ_grounded) = (0, 0);
            for (subject, runs) in sets {
                let text = dataset.get(subject).and_then(|s| s.transcript(condition));
                let normalized = text.map(normalize_keyword).unwrap_or_default();
                let chars: Vec<char> = normalized.chars().collect();
                for kw in runs.values().flatten() {
                    *counts.entry(kw.as_str()).or_default() += 1;
                    let kind = *matches.entry((subject.as_str(), kw.as_str())).or_insert_with(|| {
                        if normalized.is_empty() {
                            return MatchKind::None;
                        }
                        match_keyword(kw.clone(), &normalized, &chars, opts.fuzzy_threshold)
                            .map_or(MatchKind::None, |m| m.match_kind)
                    });
                    occ += 1;
                    occ_grounded += usize::from(kind != MatchKind::None);
                }
                if text.is_none() {
                    out.skipped.push(SkippedSlice::new(
                        "keywords",
                        model,
                        condition,
                        Some(subscale),
                        format!("no transcript for subject {subject}; its keywords count as ungrounded"),
                    ));
                }
            }
            let n_unique = matches.len();
            let n_unique_grounded = matches.values().filter(|k| **k != MatchKind::None).count();
            out.cells.push(KeywordCell {
                model: model.clone(),
                subscale,
                n_unique,
                n_unique_grounded,
                n_unique_fuzzy: matches.values().filter(|k| **k == MatchKind::Fuzzy).count(),
                groundedness_pct: pct(n_unique_grounded, n_unique),
                n_occurrences: occ,
                n_occurrences_grounded: occ_grounded,
                occurrence_groundedness_pct: pct(occ_grounded, occ),
                intra_jaccard: intra_jaccard(sets),
                inter_jaccard: inter_jaccard(model, &all, opts.inter_jaccard),
            });

            let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            out.frequencies.extend(ranked.into_iter().take(TOP_KEYWORDS).enumerate().map(|(i, (kw, count))| {
                KeywordFrequency {
                    model: model.clone(),
                    subscale,
                    rank: i + 1,
                    keyword: kw.to_string(),
                    count,
                }
            }));
        }
    }
    out.cells.sort_by(|a, b| (&a.model, a.subscale).cmp(&(&b.model, b.subscale)));
    out.frequencies
        .sort_by(|a, b| (&a.model, a.subscale, a.rank).cmp(&(&b.model, b.subscale, b.rank)));
    out
}
