use serde::{Deserialize, Serialize};

use super::special::normal_cdf;
use super::{average_ranks, check_finite, tie_group_sizes, StatsError};

/// Largest number of non-zero differences for which the exact null
/// distribution is used (2^20 sign patterns).
pub const WILCOXON_EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub w_statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub n_zero_dropped: usize,
    pub method: WilcoxonMethod,
}

/// Two-sided Wilcoxon signed-rank test on `x - y`. Zero differences are
/// dropped before ranking.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(x)?;
    check_finite(y)?;

    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    let n_zero_dropped = x.len() - n;
    if n == 0 {
        return Ok(WilcoxonResult {
            w_statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            n_effective: 0,
            n_zero_dropped,
            method: WilcoxonMethod::Exact,
        });
    }

    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs)?;
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);
    let ties = tie_group_sizes(&abs);

    let (p_value, method) = if n <= WILCOXON_EXACT_MAX_N && ties.is_empty() {
        (exact_p(n, w as u64), WilcoxonMethod::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        ((2.0 * normal_cdf(-z)).min(1.0), WilcoxonMethod::NormalApprox)
    };

    Ok(WilcoxonResult {
        w_statistic: w,
        w_plus,
        w_minus,
        p_value,
        n_effective: n,
        n_zero_dropped,
        method,
    })
}

/// `min(1, 2 P(W+ <= w))` under the null, counting subset sums of 1..=n.
fn exact_p(n: usize, w: u64) -> f64 {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for r in 1..=n {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let lower: u64 = counts[..=(w as usize).min(max)].iter().sum();
    ((2 * lower) as f64 / (1u64 << n) as f64).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let x = [1.0, 2.0, 3.0];
        let r = wilcoxon_signed_rank(&x, &x).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.n_effective, 0);
        assert_eq!(r.method, WilcoxonMethod::Exact);
    }

    #[test]
    fn all_positive_five() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = wilcoxon_signed_rank(&x, &[0.0; 5]).unwrap();
        assert_eq!(r.w_statistic, 0.0);
        assert_eq!(r.w_plus, 15.0);
        assert_eq!(r.p_value, 2.0 / 32.0);
    }

    #[test]
    fn swap_keeps_p() {
        let x = [1.2, 3.4, 0.2, 5.5, 2.0, 7.1, 0.9];
        let y = [0.9, 3.9, 1.0, 4.1, 2.5, 6.0, 0.1];
        let a = wilcoxon_signed_rank(&x, &y).unwrap();
        let b = wilcoxon_signed_rank(&y, &x).unwrap();
        assert_eq!(a.p_value, b.p_value);
        assert_eq!(a.w_plus, b.w_minus);
    }

    #[test]
    fn ties_force_normal_approx() {
        let x = [2.0, 2.0, 3.0, 1.0, 5.0];
        let y = [1.0, 1.0, 1.0, 0.0, 2.0];
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApprox);
        assert!(r.w_statistic <= (r.n_effective * (r.n_effective + 1)) as f64 / 2.0);
    }

    #[test]
    fn exact_distribution_sums_to_one() {
        // p at the largest possible W is capped at 1
        assert_eq!(exact_p(6, 21), 1.0);
        assert_eq!(exact_p(1, 0), 1.0);
    }
}
