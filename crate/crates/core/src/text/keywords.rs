use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::fuzzy::partial_ratio_chars;
use super::TextError;

/// Minimum partial-ratio score for a fuzzy match.
pub const DEFAULT_FUZZY_THRESHOLD: f64 = 80.0;

/// Lowercase, strip surrounding punctuation and quotes, collapse internal
/// whitespace.
pub fn normalize_keyword(kw: &str) -> String {
    let lowered = kw.to_lowercase();
    let trimmed = lowered.trim_matches(|c: char| !c.is_alphanumeric());
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized, deduplicated keyword set; empties dropped.
pub fn keyword_set<I, S>(keywords: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    keywords
        .into_iter()
        .map(|k| normalize_keyword(k.as_ref()))
        .filter(|k| !k.is_empty())
        .collect()
}

/// `|A ∩ B| / |A ∪ B|`. Two empty sets count as identical.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    Exact,
    Fuzzy,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordMatch {
    pub keyword: String,
    pub grounded: bool,
    pub match_kind: MatchKind,
    pub best_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundednessResult {
    pub n_keywords: usize,
    pub n_grounded: usize,
    /// Sorted by keyword.
    pub per_keyword: Vec<KeywordMatch>,
}

impl GroundednessResult {
    pub fn fraction(&self) -> Option<f64> {
        (self.n_keywords > 0).then(|| self.n_grounded as f64 / self.n_keywords as f64)
    }
}

/// Checks each unique normalized keyword against the transcript: exact
/// case-insensitive substring first, then partial ratio `>= threshold`.
pub fn groundedness<I, S>(
    keywords: I,
    transcript: &str,
    fuzzy_threshold: f64,
) -> Result<GroundednessResult, TextError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let text = normalize_keyword(transcript);
    if text.is_empty() {
        return Err(TextError::EmptyTranscript);
    }
    let text_chars: Vec<char> = text.chars().collect();
    let mut per_keyword = Vec::new();
    for kw in keyword_set(keywords) {
        per_keyword.push(match_keyword(kw, &text, &text_chars, fuzzy_threshold)?);
    }
    Ok(GroundednessResult {
        n_keywords: per_keyword.len(),
        n_grounded: per_keyword.iter().filter(|m| m.grounded).count(),
        per_keyword,
    })
}

/// Matches one already-normalized keyword against a normalized transcript.
pub(crate) fn match_keyword(
    keyword: String,
    text: &str,
    text_chars: &[char],
    fuzzy_threshold: f64,
) -> Result<KeywordMatch, TextError> {
    if text.contains(keyword.as_str()) {
        return Ok(KeywordMatch {
            keyword,
            grounded: true,
            match_kind: MatchKind::Exact,
            best_score: 100.0,
        });
    }
    let needle: Vec<char> = keyword.chars().collect();
    let score = partial_ratio_chars(&needle, text_chars)?;
    let fuzzy = score >= fuzzy_threshold;
    Ok(KeywordMatch {
        keyword,
        grounded: fuzzy,
        match_kind: if fuzzy { MatchKind::Fuzzy } else { MatchKind::None },
        best_score: score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_keyword("  Erm, "), "erm");
        assert_eq!(normalize_keyword("Social   Withdrawal"), "social withdrawal");
        assert_eq!(normalize_keyword("'lack of motivation'"), "lack of motivation");
        assert_eq!(normalize_keyword("\"don't know.\""), "don't know");
        assert_eq!(normalize_keyword(" ... "), "");
    }

    #[test]
    fn jaccard_conventions() {
        assert!((jaccard(&set(&["a", "b"]), &set(&["b", "c"])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 1.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&[])), 0.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&["b"])), 0.0);
    }

    #[test]
    fn keyword_set_dedupes() {
        assert_eq!(keyword_set(["Erm", "erm.", " ERM ", "", "sad"]), set(&["erm", "sad"]));
    }

    #[test]
    fn grounded_kinds() {
        let transcript = "Well, erm, I was worried at night and I can't sleep.";
        let r = groundedness(["erm", "worryed", "social withdrawal", "Can't sleep"], transcript, 80.0)
            .unwrap();
        let kind = |k: &str| r.per_keyword.iter().find(|m| m.keyword == k).unwrap().match_kind;
        assert_eq!(kind("erm"), MatchKind::Exact);
        assert_eq!(kind("can't sleep"), MatchKind::Exact);
        assert_eq!(kind("worryed"), MatchKind::Fuzzy);
        assert_eq!(kind("social withdrawal"), MatchKind::None);
        assert_eq!(r.n_keywords, 4);
        assert_eq!(r.n_grounded, 3);
        for m in &r.per_keyword {
            assert_eq!(m.grounded, m.match_kind != MatchKind::None);
            if m.match_kind == MatchKind::Fuzzy {
                assert!(m.best_score >= 80.0);
            }
        }
    }

    #[test]
    fn empty_transcript() {
        assert_eq!(groundedness(["a"], "  ", 80.0), Err(TextError::EmptyTranscript));
    }

    proptest! {
        #[test]
        fn jaccard_symmetric_bounded(a in prop::collection::btree_set("[a-d]", 0..4), b in prop::collection::btree_set("[a-d]", 0..4)) {
            let j = jaccard(&a, &b);
            prop_assert_eq!(j, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&j));
            prop_assert_eq!(j == 1.0, a == b);
        }

        #[test]
        fn groundedness_ignores_order_and_duplicates(
            kws in prop::collection::vec("[a-z]{2,6}", 1..6),
            text in "[a-z ]{5,60}",
        ) {
            prop_assume!(!normalize_keyword(&text).is_empty());
            let base = groundedness(&kws, &text, 80.0).unwrap();
            let mut shuffled: Vec<String> = kws.iter().rev().cloned().collect();
            shuffled.extend(kws.iter().cloned());
            let other = groundedness(&shuffled, &text, 80.0).unwrap();
            prop_assert_eq!(base, other);
        }

        #[test]
        fn verbatim_keywords_fully_grounded(words in prop::collection::vec("[a-z]{1,8}", 3..30), picks in prop::collection::vec(0usize..30, 1..6)) {
            let text = words.join(" ");
            let kws: Vec<&str> = picks.iter().map(|&i| words[i % words.len()].as_str()).collect();
            let r = groundedness(&kws, &text, 80.0).unwrap();
            prop_assert_eq!(r.n_grounded, r.n_keywords);
        }
    }
}
