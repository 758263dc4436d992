use serde::{Deserialize, Serialize};

use super::{EvalOptions, SkippedSlice};
use crate::domain::{build_run_matrix, HadsSubscale};
use crate::ingest::CampaignStore;
use crate::stats::{friedman, icc_3_1, FriedmanResult, IccResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCell {
    pub model: String,
    pub condition: String,
    pub subscale: HadsSubscale,
    pub icc: IccResult,
    pub friedman: FriedmanResult,
    pub n_subjects_used: usize,
    /// Subjects dropped for a missing run.
    pub n_excluded: usize,
}

/// ICC(3,1) and Friedman over runs for every model, condition and subscale.
pub fn consistency_analysis(store: &CampaignStore, opts: &EvalOptions) -> (Vec<ConsistencyCell>, Vec<SkippedSlice>) {
    let runs = opts.runs_for(store);
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for model in store.models() {
        for condition in store.conditions() {
            for subscale in HadsSubscale::ALL {
                let skip = |reason: String| SkippedSlice::new("consistency", &model, &condition, Some(subscale), reason);
                let matrix = match build_run_matrix(store.slice(&model, &condition), &model, &condition, subscale, runs) {
                    Ok(m) => m,
                    Err(e) => {
                        skipped.push(skip(e.to_string()));
                        continue;
                    }
                };
                let stats = icc_3_1(&matrix.values).and_then(|icc| Ok((icc, friedman(&matrix.values)?)));
                match stats {
                    Ok((icc, friedman)) => cells.push(ConsistencyCell {
                        model: model.clone(),
                        condition: condition.clone(),
                        subscale,
                        icc,
                        friedman,
                        n_subjects_used: matrix.n_subjects(),
                        n_excluded: matrix.excluded.len(),
                    }),
                    Err(e) => skipped.push(skip(e.to_string())),
                }
            }
        }
    }
    (cells, skipped)
}
