//! String-level metrics: tokenization, edit distances, fuzzy partial-ratio
//! matching, word error rate, keyword sets and transcript groundedness.

mod fuzzy;
pub(crate) mod keywords;
mod wer;

use thiserror::Error;

pub use fuzzy::{indel_similarity, levenshtein, partial_ratio};
pub use keywords::{
    groundedness, jaccard, keyword_set, normalize_keyword, GroundednessResult, KeywordMatch,
    MatchKind, DEFAULT_FUZZY_THRESHOLD,
};
pub use wer::{corpus_wer, word_error_rate, WerBreakdown};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("needle is empty after normalization")]
    EmptyNeedle,
    #[error("reference text has no tokens")]
    EmptyReference,
    #[error("transcript is empty")]
    EmptyTranscript,
}

/// Lowercases, splits on whitespace and trims non-alphanumeric characters
/// from both ends of every token. Internal apostrophes and hyphens stay.
pub fn tokenize_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_rules() {
        assert_eq!(tokenize_words("The cat, sat."), ["the", "cat", "sat"]);
        assert!(tokenize_words("").is_empty());
        assert!(tokenize_words("  ... -- ").is_empty());
        assert_eq!(tokenize_words("don't stop"), ["don't", "stop"]);
        assert_eq!(tokenize_words("\"Well-being\" (erm)"), ["well-being", "erm"]);
        assert_eq!(tokenize_words("ÉTÉ\tnaïve"), ["été", "naïve"]);
    }
}
