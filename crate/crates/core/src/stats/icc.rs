use serde::{Deserialize, Serialize};

use super::{check_matrix, StatsError};

/// Koo & Li reliability bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReliabilityBand {
    Poor,
    Moderate,
    Good,
    Excellent,
}

impl ReliabilityBand {
    /// `< 0.50` poor, `[0.50, 0.75)` moderate, `[0.75, 0.90]` good,
    /// `> 0.90` excellent.
    pub fn classify(icc: f64) -> Self {
        if icc < 0.50 {
            ReliabilityBand::Poor
        } else if icc < 0.75 {
            ReliabilityBand::Moderate
        } else if icc <= 0.90 {
            ReliabilityBand::Good
        } else {
            ReliabilityBand::Excellent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    pub icc: f64,
    pub ms_rows: f64,
    pub ms_cols: f64,
    pub ms_error: f64,
    pub n_subjects: usize,
    pub k_raters: usize,
    pub reliability_band: ReliabilityBand,
}

/// ICC(3,1): two-way mixed effects, single measures, consistency.
///
/// Rows are subjects and columns raters (here, inference runs). Additive
/// column effects are removed by the decomposition, so a run that is
/// uniformly shifted does not lower the coefficient.
pub fn icc_3_1(rows: &[Vec<f64>]) -> Result<IccResult, StatsError> {
    let (n, k) = check_matrix(rows)?;
    let (nf, kf) = (n as f64, k as f64);

    let row_means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;

    let ss_rows = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    // residuals taken directly rather than by subtraction from SS_total
    let mut ss_error = 0.0;
    let mut scale: f64 = 0.0;
    for (r, rm) in rows.iter().zip(&row_means) {
        for (x, cm) in r.iter().zip(&col_means) {
            ss_error += (x - rm - cm + grand).powi(2);
            scale = scale.max((x - grand).powi(2));
        }
    }

    let ms_rows = ss_rows / (nf - 1.0);
    let ms_cols = ss_cols / (kf - 1.0);
    let ms_error = ss_error / ((nf - 1.0) * (kf - 1.0));
    let denom = ms_rows + (kf - 1.0) * ms_error;
    if denom <= 1e-20 * scale {
        return Err(StatsError::DegenerateMatrix);
    }
    let icc = (ms_rows - ms_error) / denom;
    Ok(IccResult {
        icc,
        ms_rows,
        ms_cols,
        ms_error,
        n_subjects: n,
        k_raters: k,
        reliability_band: ReliabilityBand::classify(icc),
    })
}
