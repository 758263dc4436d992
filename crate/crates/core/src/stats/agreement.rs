use serde::{Deserialize, Serialize};

use super::{check_finite, spearman, SpearmanResult, StatsError};

/// Slack on the `|a - b| <= 1` test so means of three integer runs
/// (e.g. 4.333.. vs 3.333..) are not split by rounding.
pub const WITHIN_ONE_TOLERANCE: f64 = 1e-9;

/// Subject-level agreement between two prediction vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedAgreement {
    pub mae: f64,
    /// `None` when either side is constant.
    pub rho: Option<SpearmanResult>,
    pub constant_input: bool,
    pub pct_within_1: f64,
    pub n_within_1: usize,
    pub n: usize,
}

pub fn paired_agreement(a: &[f64], b: &[f64]) -> Result<PairedAgreement, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    check_finite(a)?;
    check_finite(b)?;
    let abs: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    let mae = abs.iter().sum::<f64>() / n as f64;
    let n_within_1 = abs.iter().filter(|d| **d <= 1.0 + WITHIN_ONE_TOLERANCE).count();
    let (rho, constant_input) = match spearman(a, b) {
        Ok(r) => (Some(r), false),
        Err(StatsError::ConstantInput) => (None, true),
        Err(e) => return Err(e),
    };
    Ok(PairedAgreement {
        mae,
        rho,
        constant_input,
        pct_within_1: 100.0 * n_within_1 as f64 / n as f64,
        n_within_1,
        n,
    })
}
