use thiserror::Error;

pub const TRANSCRIPT_PLACEHOLDER: &str = "{TRANSCRIPT}";

/// Zero-shot screening prompt. The JSON key names must match
/// [`crate::ingest::PredictionKeys::default`].
pub const DEFAULT_PROMPT_TEMPLATE: &str = r#"You are an experienced clinical psychologist and a linguist. You will read a transcript of a person talking freely about their daily life and estimate their scores on the Hospital Anxiety and Depression Scale (HADS).

Work through the following steps before answering:
1. Psychological features: identify signs of anxiety (worry, tension, restlessness, panic) and of depression (low mood, loss of interest, fatigue, hopelessness) in what the speaker says.
2. Linguistic analysis: note language cues such as first-person focus, negative emotion words, absolutist terms, hedging, hesitations and fillers.
3. Score prediction: estimate the HADS anxiety score (HADS-A) and the HADS depression score (HADS-D), each an integer from 0 to 21.
4. Keyword justification: list the words or short phrases from the transcript that support each score. Quote them exactly as they appear in the transcript.

Transcript:
"""
{TRANSCRIPT}
"""

After your reasoning, give the final answer as a single JSON object with exactly these keys:
{"anxiety_score": <integer 0-21>, "depression_score": <integer 0-21>, "anxiety_keywords": [<strings>], "depression_keywords": [<strings>]}
"#;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("template has no {TRANSCRIPT_PLACEHOLDER} placeholder")]
    MissingPlaceholder,
    #[error("template has {0} {TRANSCRIPT_PLACEHOLDER} placeholders, expected one")]
    DuplicatePlaceholder(usize),
}

/// Substitutes the transcript for the single placeholder. The transcript is
/// inserted verbatim and never re-scanned for placeholders.
pub fn render_prompt(template: &str, transcript: &str) -> Result<String, PromptError> {
    let parts: Vec<&str> = template.split(TRANSCRIPT_PLACEHOLDER).collect();
    match parts.len() {
        1 => Err(PromptError::MissingPlaceholder),
        2 => Ok([parts[0], transcript, parts[1]].concat()),
        n => Err(PromptError::DuplicatePlaceholder(n - 1)),
    }
}
