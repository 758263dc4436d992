use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::special::chi_square_sf;
use super::{average_ranks, check_matrix, tie_group_sizes, StatsError};

/// Designs with at most this many within-row permutation patterns,
/// `(k!)^n`, get an exact permutation p-value.
pub const FRIEDMAN_EXACT_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FriedmanMethod {
    /// Exact distribution over all within-row permutations.
    Exact,
    /// Chi-square with k - 1 degrees of freedom.
    ChiSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    /// Tie-corrected statistic.
    pub chi2: f64,
    /// Textbook statistic without the tie correction.
    pub chi2_uncorrected: f64,
    pub df: usize,
    pub p_value: f64,
    /// Whether any within-row ties changed the statistic.
    pub tie_corrected: bool,
    pub method: FriedmanMethod,
}

/// Friedman test over an n x k matrix (rows = subjects, columns = runs).
pub fn friedman(rows: &[Vec<f64>]) -> Result<FriedmanResult, StatsError> {
    let (n, k) = check_matrix(rows)?;
    let (nf, kf) = (n as f64, k as f64);

    let ranked: Vec<Vec<f64>> = rows.iter().map(|r| average_ranks(r)).collect::<Result<_, _>>()?;
    let mut col_sums = vec![0.0; k];
    for r in &ranked {
        for (s, v) in col_sums.iter_mut().zip(r) {
            *s += v;
        }
    }
    let sum_sq: f64 = col_sums.iter().map(|r| r * r).sum();
    let chi2_uncorrected = 12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0);

    let tie_sum: usize = rows
        .iter()
        .flat_map(|r| tie_group_sizes(r))
        .map(|t| t * t * t - t)
        .sum();
    let correction = 1.0 - tie_sum as f64 / (nf * kf * (kf * kf - 1.0));
    let df = k - 1;

    if correction <= 0.0 {
        // every row fully tied
        return Ok(FriedmanResult {
            chi2: 0.0,
            chi2_uncorrected: 0.0,
            df,
            p_value: 1.0,
            tie_corrected: true,
            method: FriedmanMethod::ChiSquare,
        });
    }
    let chi2 = (chi2_uncorrected / correction).max(0.0);

    let (p_value, method) = match exact_p(&ranked) {
        Some(p) => (p, FriedmanMethod::Exact),
        None => (chi_square_sf(chi2, df as f64)?, FriedmanMethod::ChiSquare),
    };
    Ok(FriedmanResult {
        chi2,
        chi2_uncorrected,
        df,
        p_value,
        tie_corrected: tie_sum > 0,
        method,
    })
}

/// Exact p-value when the design is small enough. Within-row rank multisets
/// are fixed under the null, so the statistic is monotone in the sum of
/// squared column rank sums; doubled ranks keep that sum integral.
fn exact_p(ranked: &[Vec<f64>]) -> Option<f64> {
    let k = ranked[0].len();
    let per_row: u64 = (1..=k as u64).product();
    let mut total: u64 = 1;
    for _ in ranked {
        total = total.checked_mul(per_row).filter(|t| *t <= FRIEDMAN_EXACT_LIMIT)?;
    }

    let doubled: Vec<Vec<i64>> = ranked
        .iter()
        .map(|r| r.iter().map(|v| (2.0 * v).round() as i64).collect())
        .collect();
    let observed: i64 = (0..k)
        .map(|j| doubled.iter().map(|r| r[j]).sum::<i64>())
        .map(|s| s * s)
        .sum();

    let perms = permutations(k);
    let mut states: HashMap<Vec<i64>, u64> = HashMap::from([(vec![0; k], 1)]);
    for row in &doubled {
        let mut next: HashMap<Vec<i64>, u64> = HashMap::with_capacity(states.len() * 2);
        for (sums, count) in &states {
            for p in &perms {
                let s: Vec<i64> = sums.iter().zip(p).map(|(a, &j)| a + row[j]).collect();
                *next.entry(s).or_insert(0) += count;
            }
        }
        states = next;
    }
    let extreme: u64 = states
        .iter()
        .filter(|(sums, _)| sums.iter().map(|s| s * s).sum::<i64>() >= observed)
        .map(|(_, c)| c)
        .sum();
    Some(extreme as f64 / total as f64)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}
