use std::collections::HashMap;

use super::{normalize_keyword, TextError};

/// Unit-cost edit distance (substitution, deletion, insertion) with two
/// rolling rows.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    let mut cur = vec![0; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `100 * (1 - indel / (|a| + |b|))`, where indel distance allows only
/// insertions and deletions. Two empty inputs score 100.
pub fn indel_similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 100.0;
    }
    200.0 * lcs_len(a, b) as f64 / total as f64
}

/// Best indel similarity between the needle and any contiguous substring
/// of the haystack, on normalized text (see [`normalize_keyword`]).
pub fn partial_ratio(needle: &str, haystack: &str) -> Result<f64, TextError> {
    let n: Vec<char> = normalize_keyword(needle).chars().collect();
    let h: Vec<char> = normalize_keyword(haystack).chars().collect();
    partial_ratio_chars(&n, &h)
}

pub(crate) fn partial_ratio_chars(needle: &[char], haystack: &[char]) -> Result<f64, TextError> {
    if needle.is_empty() {
        return Err(TextError::EmptyNeedle);
    }
    if haystack.is_empty() {
        return Ok(0.0);
    }
    if contains(haystack, needle) {
        return Ok(100.0);
    }
    let best = if needle.len() <= 64 {
        best_window_bitparallel(needle, haystack)
    } else {
        best_window_dp(needle, haystack)
    };
    Ok(best.percent())
}

/// Best window so far as an exact fraction `2 * lcs / total`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Best {
    lcs: usize,
    total: usize,
}

impl Best {
    fn offer(&mut self, lcs: usize, total: usize) {
        if self.total == 0 || lcs * self.total > self.lcs * total {
            *self = Best { lcs, total };
        }
    }

    fn ratio(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            2.0 * self.lcs as f64 / self.total as f64
        }
    }

    fn percent(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            200.0 * self.lcs as f64 / self.total as f64
        }
    }
}

fn contains(h: &[char], n: &[char]) -> bool {
    n.len() <= h.len() && h.windows(n.len()).any(|w| w == n)
}

// An optimal window starts and ends on characters matched by the LCS, so
// only starts on needle characters are tried. With L <= m, a window of
// width w scores at most 2m / (m + w); extensions stop once that bound
// cannot beat the current best.
fn width_limit(m: usize, best: f64) -> usize {
    if best <= 0.0 {
        usize::MAX
    } else {
        let w = 2.0 * m as f64 / best - m as f64;
        w.floor().max(0.0) as usize + 1
    }
}

fn best_window_bitparallel(needle: &[char], haystack: &[char]) -> Best {
    let m = needle.len();
    let mut masks: HashMap<char, u64> = HashMap::new();
    for (i, c) in needle.iter().enumerate() {
        *masks.entry(*c).or_insert(0) |= 1 << i;
    }
    let full = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let row: Vec<u64> = haystack.iter().map(|c| masks.get(c).copied().unwrap_or(0)).collect();

    let mut best = Best::default();
    for start in 0..row.len() {
        if row[start] == 0 {
            continue;
        }
        let end = start.saturating_add(width_limit(m, best.ratio())).min(row.len());
        // Hyyro's bit-vector LCS: zero bits of v count the LCS length
        let mut v = u64::MAX;
        for (w, &pm) in row[start..end].iter().enumerate() {
            let u = v & pm;
            v = v.wrapping_add(u) | (v & !pm);
            if pm != 0 {
                let lcs = m - (v & full).count_ones() as usize;
                best.offer(lcs, m + w + 1);
            }
        }
    }
    best
}

fn best_window_dp(needle: &[char], haystack: &[char]) -> Best {
    let m = needle.len();
    let mut best = Best::default();
    let mut col = vec![0usize; m + 1];
    let mut next = vec![0usize; m + 1];
    for start in 0..haystack.len() {
        if !needle.contains(&haystack[start]) {
            continue;
        }
        col.iter_mut().for_each(|v| *v = 0);
        let end = start.saturating_add(width_limit(m, best.ratio())).min(haystack.len());
        for (w, c) in haystack[start..end].iter().enumerate() {
            next[0] = 0;
            for i in 1..=m {
                next[i] = if needle[i - 1] == *c { col[i - 1] + 1 } else { next[i - 1].max(col[i]) };
            }
            std::mem::swap(&mut col, &mut next);
            best.offer(col[m], m + w + 1);
        }
    }
    best
}
