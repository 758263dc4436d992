//! The four analyses over a campaign store (run consistency, predictive
//! validity, ASR robustness, keyword evidence), inter-model agreement, WER
//! per transcript condition, and a synthetic campaign generator.

mod consistency;
mod keywords;
mod synth;
mod validity;
mod wer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{HadsSubscale, GT_CONDITION};
use crate::ingest::{CampaignStore, Dataset, ExclusionReport};
use crate::text::DEFAULT_FUZZY_THRESHOLD;

pub use consistency::{consistency_analysis, ConsistencyCell};
pub use keywords::{keyword_analysis, KeywordAnalysis, KeywordCell, KeywordFrequency, TOP_KEYWORDS};
pub use synth::{synth_generate, SynthModel, SynthOutput, SynthSpec};
pub use validity::{
    inter_model_agreement, robustness_analysis, validity_analysis, AgreementCell, RobustnessCell, ValidityCell,
};
pub use wer::{fig2_rows, wer_analysis, Fig2Row, SubjectWer, WerAnalysis, WerRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("condition {0} has no predictions")]
    MissingCondition(String),
    #[error("fewer than two models in the store")]
    TooFewModels,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

/// How inter-model keyword sets are paired per subject.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterJaccardMode {
    /// Union over runs for each model.
    #[default]
    UnionOfRuns,
    /// Run r of one model against run r of the other.
    PerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Expected runs per cell; `None` takes the highest run index in the store.
    pub runs: Option<usize>,
    pub reference_condition: String,
    /// Condition whose keywords feed the keyword analysis.
    pub keyword_condition: String,
    pub fuzzy_threshold: f64,
    pub inter_jaccard: InterJaccardMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            runs: None,
            reference_condition: GT_CONDITION.to_string(),
            keyword_condition: GT_CONDITION.to_string(),
            fuzzy_threshold: DEFAULT_FUZZY_THRESHOLD,
            inter_jaccard: InterJaccardMode::UnionOfRuns,
        }
    }
}

impl EvalOptions {
    pub(crate) fn runs_for(&self, store: &CampaignStore) -> usize {
        self.runs.unwrap_or(store.max_run() as usize)
    }
}

/// A slice an analysis could not evaluate, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkippedSlice {
    pub analysis: String,
    pub model: String,
    pub condition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subscale: Option<HadsSubscale>,
    pub reason: String,
}

impl SkippedSlice {
    pub(crate) fn new(
        analysis: &str,
        model: &str,
        condition: &str,
        subscale: Option<HadsSubscale>,
        reason: impl ToString,
    ) -> Self {
        log::info!("{analysis}: skipping {model}/{condition}: {}", reason.to_string());
        SkippedSlice {
            analysis: analysis.to_string(),
            model: model.to_string(),
            condition: condition.to_string(),
            subscale,
            reason: reason.to_string(),
        }
    }
}

/// Every table's metrics in one serializable value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    #[serde(default)]
    pub consistency: Vec<ConsistencyCell>,
    #[serde(default)]
    pub validity: Vec<ValidityCell>,
    #[serde(default)]
    pub robustness: Vec<RobustnessCell>,
    #[serde(default)]
    pub keywords: Vec<KeywordCell>,
    #[serde(default)]
    pub keyword_frequencies: Vec<KeywordFrequency>,
    #[serde(default)]
    pub agreement: Vec<AgreementCell>,
    #[serde(default)]
    pub wer: Vec<WerRow>,
    #[serde(default)]
    pub skipped: Vec<SkippedSlice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusions: Option<ExclusionReport>,
}

impl ReportBundle {
    /// Pretty JSON with object keys sorted, so equal bundles serialize to
    /// identical bytes.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }
}

pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json::Value keeps object keys in a BTreeMap
    let v = serde_json::to_value(value).expect("report values serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

/// Runs every analysis. Robustness is skipped (and noted) when the store has
/// no reference condition; agreement when there is a single model.
pub fn evaluate_all(store: &CampaignStore, dataset: &Dataset, opts: &EvalOptions) -> ReportBundle {
    let mut bundle = ReportBundle::default();
    let (cells, skipped) = consistency_analysis(store, opts);
    bundle.consistency = cells;
    bundle.skipped.extend(skipped);

    let (cells, skipped) = validity_analysis(store, dataset, opts);
    bundle.validity = cells;
    bundle.skipped.extend(skipped);

    match robustness_analysis(store, opts) {
        Ok((cells, skipped)) => {
            bundle.robustness = cells;
            bundle.skipped.extend(skipped);
        }
        Err(e) => bundle.skipped.push(SkippedSlice::new("robustness", "*", &opts.reference_condition, None, e)),
    }

    let kw = keyword_analysis(store, dataset, opts);
    bundle.keywords = kw.cells;
    bundle.keyword_frequencies = kw.frequencies;
    bundle.skipped.extend(kw.skipped);

    match inter_model_agreement(store, opts) {
        Ok((cells, skipped)) => {
            bundle.agreement = cells;
            bundle.skipped.extend(skipped);
        }
        Err(e) => bundle.skipped.push(SkippedSlice::new("agreement", "*", "*", None, e)),
    }

    bundle.wer = wer_analysis(dataset, &opts.reference_condition).rows;
    bundle
}
