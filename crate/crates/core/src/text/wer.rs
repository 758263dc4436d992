use serde::{Deserialize, Serialize};

use super::{tokenize_words, TextError};

/// Error counts from one minimal-cost alignment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WerBreakdown {
    pub wer: f64,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub deletion_rate: f64,
    pub n_ref_tokens: usize,
}

impl WerBreakdown {
    fn from_counts(s: usize, d: usize, i: usize, n_ref: usize) -> Self {
        let n = n_ref as f64;
        WerBreakdown {
            wer: (s + d + i) as f64 / n,
            substitutions: s,
            deletions: d,
            insertions: i,
            deletion_rate: d as f64 / n,
            n_ref_tokens: n_ref,
        }
    }

    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Word-level alignment of `hyp_text` against `ref_text`. When several
/// alignments have minimal cost, the backtrace prefers a substitution (or
/// match), then a deletion, then an insertion.
pub fn word_error_rate(ref_text: &str, hyp_text: &str) -> Result<WerBreakdown, TextError> {
    let r = tokenize_words(ref_text);
    let h = tokenize_words(hyp_text);
    if r.is_empty() {
        return Err(TextError::EmptyReference);
    }
    let (n, m) = (r.len(), h.len());
    let mut dp = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        dp[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dp[i - 1][j - 1] + usize::from(r[i - 1] != h[j - 1]);
            dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }

    let (mut s, mut d, mut ins) = (0, 0, 0);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let cost = usize::from(r[i - 1] != h[j - 1]);
            if dp[i][j] == dp[i - 1][j - 1] + cost {
                s += cost;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[i][j] == dp[i - 1][j] + 1 {
            d += 1;
            i -= 1;
        } else {
            ins += 1;
            j -= 1;
        }
    }
    Ok(WerBreakdown::from_counts(s, d, ins, n))
}

/// Pools counts over many utterances: `Σ(S + D + I) / Σ n_ref`.
pub fn corpus_wer<'a, I>(parts: I) -> Option<WerBreakdown>
where
    I: IntoIterator<Item = &'a WerBreakdown>,
{
    let (mut s, mut d, mut i, mut n) = (0, 0, 0, 0);
    for p in parts {
        s += p.substitutions;
        d += p.deletions;
        i += p.insertions;
        n += p.n_ref_tokens;
    }
    (n > 0).then(|| WerBreakdown::from_counts(s, d, i, n))
}
