use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalOptions, SkippedSlice};
use crate::domain::{aggregate_runs, HadsSubscale, RunAggregate};
use crate::ingest::{CampaignStore, Dataset};
use crate::stats::{
    paired_agreement, spearman, wilcoxon_signed_rank, PairedAgreement, SpearmanResult, StatsError, WilcoxonResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCell {
    pub model: String,
    pub condition: String,
    pub subscale: HadsSubscale,
    pub n: usize,
    /// `None` when predictions or ground truth are constant.
    pub rho: Option<SpearmanResult>,
    pub constant_input: bool,
    /// Mean prediction against ground truth.
    pub wilcoxon: WilcoxonResult,
    pub subjects_with_missing_runs: usize,
    pub missing_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCell {
    pub model: String,
    pub asr_condition: String,
    pub per_subscale: BTreeMap<HadsSubscale, PairedAgreement>,
    /// Share of all 2n subject-subscale pairs within one point.
    pub pooled_pct_within_1: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementCell {
    pub condition: String,
    pub subscale: HadsSubscale,
    pub model_a: String,
    pub model_b: String,
    pub n: usize,
    pub rho: Option<SpearmanResult>,
    pub constant_input: bool,
}

fn means(store: &CampaignStore, model: &str, condition: &str, subscale: HadsSubscale, runs: usize) -> RunAggregate {
    aggregate_runs(store.slice(model, condition), subscale, runs)
}

fn rho_or_flag(a: &[f64], b: &[f64]) -> Result<(Option<SpearmanResult>, bool), StatsError> {
    match spearman(a, b) {
        Ok(r) => Ok((Some(r), false)),
        Err(StatsError::ConstantInput) => Ok((None, true)),
        Err(e) => Err(e),
    }
}

/// Spearman and Wilcoxon of mean-of-runs predictions against ground truth.
/// Predicted subjects absent from the dataset are ignored.
pub fn validity_analysis(
    store: &CampaignStore,
    dataset: &Dataset,
    opts: &EvalOptions,
) -> (Vec<ValidityCell>, Vec<SkippedSlice>) {
    let runs = opts.runs_for(store);
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for model in store.models() {
        for condition in store.conditions() {
            for subscale in HadsSubscale::ALL {
                let agg = means(store, &model, &condition, subscale, runs);
                let (pred, truth): (Vec<f64>, Vec<f64>) = agg
                    .means
                    .iter()
                    .filter_map(|(id, m)| Some((*m, f64::from(dataset.get(id)?.ground_truth(subscale)))))
                    .unzip();
                let result = rho_or_flag(&pred, &truth)
                    .and_then(|rho| Ok((rho, wilcoxon_signed_rank(&pred, &truth)?)));
                match result {
                    Ok(((rho, constant_input), wilcoxon)) => cells.push(ValidityCell {
                        model: model.clone(),
                        condition: condition.clone(),
                        subscale,
                        n: pred.len(),
                        rho,
                        constant_input,
                        wilcoxon,
                        subjects_with_missing_runs: agg.subjects_with_missing_runs,
                        missing_runs: agg.missing_runs,
                    }),
                    Err(e) => skipped.push(SkippedSlice::new("validity", &model, &condition, Some(subscale), e)),
                }
            }
        }
    }
    (cells, skipped)
}

/// Reference-condition means against each other condition's means, per
/// model, over subjects present in both.
pub fn robustness_analysis(
    store: &CampaignStore,
    opts: &EvalOptions,
) -> Result<(Vec<RobustnessCell>, Vec<SkippedSlice>), EvalError> {
    let reference = &opts.reference_condition;
    let conditions = store.conditions();
    if !conditions.contains(reference) {
        return Err(EvalError::MissingCondition(reference.clone()));
    }
    let runs = opts.runs_for(store);
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for model in store.models() {
        for asr in conditions.iter().filter(|c| *c != reference) {
            let mut per_subscale = BTreeMap::new();
            let mut within = 0;
            let mut n = 0;
            for subscale in HadsSubscale::ALL {
                let base = means(store, &model, reference, subscale, runs).means;
                let other = means(store, &model, asr, subscale, runs).means;
                let (a, b): (Vec<f64>, Vec<f64>) =
                    base.iter().filter_map(|(id, x)| Some((*x, *other.get(id)?))).unzip();
                match paired_agreement(&a, &b) {
                    Ok(pa) => {
                        within += pa.n_within_1;
                        n = n.max(pa.n);
                        per_subscale.insert(subscale, pa);
                    }
                    Err(e) => skipped.push(SkippedSlice::new("robustness", &model, asr, Some(subscale), e)),
                }
            }
            if per_subscale.len() == HadsSubscale::ALL.len() {
                let total: usize = per_subscale.values().map(|p| p.n).sum();
                cells.push(RobustnessCell {
                    model: model.clone(),
                    asr_condition: asr.clone(),
                    per_subscale,
                    pooled_pct_within_1: 100.0 * within as f64 / total as f64,
                    n,
                });
            }
        }
    }
    Ok((cells, skipped))
}

/// Spearman between every pair of models' mean predictions per condition
/// and subscale.
pub fn inter_model_agreement(
    store: &CampaignStore,
    opts: &EvalOptions,
) -> Result<(Vec<AgreementCell>, Vec<SkippedSlice>), EvalError> {
    let models = store.models();
    if models.len() < 2 {
        return Err(EvalError::TooFewModels);
    }
    let runs = opts.runs_for(store);
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for condition in store.conditions() {
        for subscale in HadsSubscale::ALL {
            let per_model: Vec<_> = models
                .iter()
                .map(|m| means(store, m, &condition, subscale, runs).means)
                .collect();
            for i in 0..models.len() {
                for j in i + 1..models.len() {
                    let (a, b): (Vec<f64>, Vec<f64>) = per_model[i]
                        .iter()
                        .filter_map(|(id, x)| Some((*x, *per_model[j].get(id)?)))
                        .unzip();
                    match rho_or_flag(&a, &b) {
                        Ok((rho, constant_input)) => cells.push(AgreementCell {
                            condition: condition.clone(),
                            subscale,
                            model_a: models[i].clone(),
                            model_b: models[j].clone(),
                            n: a.len(),
                            rho,
                            constant_input,
                        }),
                        Err(e) => skipped.push(SkippedSlice::new(
                            "agreement",
                            &format!("{}~{}", models[i], models[j]),
                            &condition,
                            Some(subscale),
                            e,
                        )),
                    }
                }
            }
        }
    }
    Ok((cells, skipped))
}
