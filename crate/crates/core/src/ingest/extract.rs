use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("no JSON object found")]
    NoJsonFound,
    #[error("JSON-like block could not be parsed: {0}")]
    MalformedJson(String),
    #[error("JSON object lacks required key {0:?}")]
    MissingField(String),
}

/// Returns the first balanced top-level `{...}` block that parses as an
/// object holding every required key. Prose before and after (reasoning
/// text, code fences) is ignored; braces inside string literals do not
/// count toward nesting.
pub fn extract_json_block<'a>(raw: &'a str, required: &[&str]) -> Result<&'a str, ExtractError> {
    let mut first_missing: Option<String> = None;
    let mut first_malformed: Option<String> = None;
    let mut saw_brace = false;

    let mut from = 0;
    while let Some(rel) = raw[from..].find('{') {
        saw_brace = true;
        let start = from + rel;
        let Some(end) = balanced_end(raw, start) else {
            from = start + 1;
            continue;
        };
        let candidate = &raw[start..end];
        match parse_object(candidate) {
            Some((obj, _)) => match required.iter().find(|k| !obj.contains_key(**k)) {
                None => return Ok(candidate),
                Some(k) => {
                    first_missing.get_or_insert_with(|| (*k).to_string());
                    from = end;
                }
            },
            None => {
                // a stray brace in prose may enclose the real object
                first_malformed.get_or_insert_with(|| snippet(candidate));
                from = start + 1;
            }
        }
    }

    if let Some(k) = first_missing {
        Err(ExtractError::MissingField(k))
    } else if let Some(s) = first_malformed {
        Err(ExtractError::MalformedJson(s))
    } else if saw_brace {
        Err(ExtractError::MalformedJson("unbalanced braces".into()))
    } else {
        Err(ExtractError::NoJsonFound)
    }
}

/// Byte offset one past the brace closing the object opened at `start`.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses a JSON object, retrying once with trailing commas removed. The
/// flag reports whether that repair was needed.
pub(crate) fn parse_object(text: &str) -> Option<(Map<String, Value>, bool)> {
    if let Ok(Value::Object(m)) = serde_json::from_str(text) {
        return Some((m, false));
    }
    let repaired = strip_trailing_commas(text);
    if repaired != text {
        if let Ok(Value::Object(m)) = serde_json::from_str(&repaired) {
            return Some((m, true));
        }
    }
    None
}

fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            out.push(c);
            continue;
        }
        if c == '"' {
            in_string = true;
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn snippet(s: &str) -> String {
    let mut out: String = s.chars().take(80).collect();
    if out.len() < s.len() {
        out.push_str("...");
    }
    out
}
