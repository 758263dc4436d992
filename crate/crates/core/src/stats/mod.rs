//! Nonparametric tests and agreement coefficients for repeated LLM runs.
//!
//! Everything here is a pure function over slices; callers can evaluate
//! independent (model, condition, subscale) slices in parallel.

mod agreement;
mod friedman;
mod icc;
mod rank;
pub mod special;
mod spearman;
mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agreement::{paired_agreement, PairedAgreement, WITHIN_ONE_TOLERANCE};
pub use friedman::{friedman, FriedmanMethod, FriedmanResult, FRIEDMAN_EXACT_LIMIT};
pub use icc::{icc_3_1, IccResult, ReliabilityBand};
pub use rank::{average_ranks, tie_group_sizes};
pub use spearman::{pearson, spearman, SpearmanResult};
pub use special::{chi_square_sf, normal_cdf, student_t_sf};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, WILCOXON_EXACT_MAX_N};

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
pub enum StatsError {
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("input is empty")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("input has zero variance")]
    ConstantInput,
    #[error("matrix has no variance (all values identical)")]
    DegenerateMatrix,
    #[error("malformed matrix: {0}")]
    Malformed(String),
    #[error("invalid degrees of freedom {0}")]
    InvalidDf(f64),
}

pub(crate) fn check_finite(x: &[f64]) -> Result<(), StatsError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Validates an n x k matrix and returns `(n, k)`.
pub(crate) fn check_matrix(rows: &[Vec<f64>]) -> Result<(usize, usize), StatsError> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(StatsError::Malformed(format!(
            "need n >= 2 and k >= 2, got {n} x {k}"
        )));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != k) {
        return Err(StatsError::Malformed(format!(
            "row {i} has {} columns, expected {k}",
            rows[i].len()
        )));
    }
    for r in rows {
        check_finite(r)?;
    }
    Ok((n, k))
}
