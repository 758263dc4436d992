use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::extract::{extract_json_block, parse_object, ExtractError};
use crate::domain::{validate_score, DomainError, PredictionRecord};
use crate::text::normalize_keyword;

/// JSON key names the prompt asks the model to emit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictionKeys {
    pub score_a: String,
    pub score_d: String,
    pub keywords_a: String,
    pub keywords_d: String,
}

impl Default for PredictionKeys {
    fn default() -> Self {
        PredictionKeys {
            score_a: "anxiety_score".into(),
            score_d: "depression_score".into(),
            keywords_a: "anxiety_keywords".into(),
            keywords_d: "depression_keywords".into(),
        }
    }
}

impl PredictionKeys {
    pub fn required(&self) -> [&str; 4] {
        [&self.score_a, &self.score_d, &self.keywords_a, &self.keywords_d]
    }
}

/// Which cell a completion belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub condition: String,
    pub run: i64,
    pub subject_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParseFailureKind {
    NoJsonFound,
    MalformedJson,
    MissingField,
    OutOfRangeScore,
    WrongType,
    InvalidRunIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub kind: ParseFailureKind,
    pub detail: String,
}

impl ParseFailure {
    fn new(kind: ParseFailureKind, detail: impl Into<String>) -> Self {
        ParseFailure {
            kind,
            detail: detail.into(),
        }
    }
}

/// Schema violations that were tolerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LenientFlag {
    /// Keywords arrived as one comma-separated string.
    KeywordsFromString,
    /// A score arrived as a numeric string such as `"7"`.
    NumericStringScore,
    /// Trailing commas were removed before parsing.
    TrailingCommas,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub provenance: Provenance,
    /// 1-based line in the source file, when read from one.
    pub line: Option<usize>,
    pub result: Result<PredictionRecord, ParseFailure>,
    pub lenient: Vec<LenientFlag>,
}

impl ParseOutcome {
    fn failed(provenance: Provenance, failure: ParseFailure) -> Self {
        ParseOutcome {
            provenance,
            line: None,
            result: Err(failure),
            lenient: Vec::new(),
        }
    }
}

/// Extracts and validates the structured answer from a raw completion.
pub fn parse_prediction(raw: &str, provenance: Provenance, keys: &PredictionKeys) -> ParseOutcome {
    use ParseFailureKind::*;
    if provenance.run < 1 {
        let detail = format!("run index {} < 1", provenance.run);
        return ParseOutcome::failed(provenance, ParseFailure::new(InvalidRunIndex, detail));
    }
    let block = match extract_json_block(raw, &keys.required()) {
        Ok(b) => b,
        Err(e) => {
            let kind = match &e {
                ExtractError::NoJsonFound => NoJsonFound,
                ExtractError::MalformedJson(_) => MalformedJson,
                ExtractError::MissingField(_) => MissingField,
            };
            return ParseOutcome::failed(provenance, ParseFailure::new(kind, e.to_string()));
        }
    };
    let Some((obj, repaired)) = parse_object(block) else {
        return ParseOutcome::failed(provenance, ParseFailure::new(MalformedJson, "unparseable block"));
    };
    let mut lenient = Vec::new();
    if repaired {
        lenient.push(LenientFlag::TrailingCommas);
    }
    let result = build_record(&obj, keys, &provenance, &mut lenient).map(|mut r| {
        r.raw_completion = Some(raw.to_string());
        r
    });
    ParseOutcome {
        provenance,
        line: None,
        result,
        lenient,
    }
}

fn build_record(
    obj: &Map<String, Value>,
    keys: &PredictionKeys,
    prov: &Provenance,
    lenient: &mut Vec<LenientFlag>,
) -> Result<PredictionRecord, ParseFailure> {
    let score_a = read_score(obj, &keys.score_a, lenient)?;
    let score_d = read_score(obj, &keys.score_d, lenient)?;
    let keywords_a = read_keywords(obj, &keys.keywords_a, lenient)?;
    let keywords_d = read_keywords(obj, &keys.keywords_d, lenient)?;
    lenient.sort();
    lenient.dedup();
    Ok(PredictionRecord {
        model_id: prov.model.clone(),
        condition: prov.condition.clone(),
        run_index: prov.run as u32,
        subject_id: prov.subject_id.clone(),
        score_a,
        score_d,
        keywords_a,
        keywords_d,
        raw_completion: None,
    })
}

fn read_score(obj: &Map<String, Value>, key: &str, lenient: &mut Vec<LenientFlag>) -> Result<f64, ParseFailure> {
    use ParseFailureKind::*;
    let value = obj
        .get(key)
        .ok_or_else(|| ParseFailure::new(MissingField, format!("missing {key:?}")))?;
    let x = match value {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ParseFailure::new(WrongType, format!("{key:?} is not representable")))?,
        Value::String(s) => match s.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => {
                lenient.push(LenientFlag::NumericStringScore);
                x
            }
            _ => return Err(ParseFailure::new(WrongType, format!("{key:?} = {s:?} is not numeric"))),
        },
        other => return Err(ParseFailure::new(WrongType, format!("{key:?} has type {}", type_name(other)))),
    };
    validate_score(x).map_err(|e| match e {
        DomainError::OutOfRange(_) => ParseFailure::new(OutOfRangeScore, format!("{key:?}: {e}")),
        other => ParseFailure::new(WrongType, format!("{key:?}: {other}")),
    })
}

fn read_keywords(
    obj: &Map<String, Value>,
    key: &str,
    lenient: &mut Vec<LenientFlag>,
) -> Result<Vec<String>, ParseFailure> {
    use ParseFailureKind::*;
    let value = obj
        .get(key)
        .ok_or_else(|| ParseFailure::new(MissingField, format!("missing {key:?}")))?;
    let items: Vec<String> = match value {
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                other => Err(ParseFailure::new(
                    WrongType,
                    format!("{key:?} contains a {}", type_name(other)),
                )),
            })
            .collect::<Result<_, _>>()?,
        Value::String(s) => {
            lenient.push(LenientFlag::KeywordsFromString);
            s.split([',', ';']).map(str::to_string).collect()
        }
        other => return Err(ParseFailure::new(WrongType, format!("{key:?} has type {}", type_name(other)))),
    };
    Ok(normalize_list(items))
}

/// Normalizes, drops empties and removes repeats, keeping first-seen order.
fn normalize_list(items: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for item in items {
        let k = normalize_keyword(&item);
        if !k.is_empty() && !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// One line of a predictions file: either a raw completion or an already
/// parsed prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionLine {
    pub model: String,
    pub condition: String,
    pub run: i64,
    pub subject_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_a: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_d: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords_a: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords_d: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

impl PredictionLine {
    pub fn provenance(&self) -> Provenance {
        Provenance {
            model: self.model.clone(),
            condition: self.condition.clone(),
            run: self.run,
            subject_id: self.subject_id.clone(),
        }
    }

    pub fn raw(prov: &Provenance, raw: impl Into<String>) -> Self {
        PredictionLine {
            model: prov.model.clone(),
            condition: prov.condition.clone(),
            run: prov.run,
            subject_id: prov.subject_id.clone(),
            score_a: None,
            score_d: None,
            keywords_a: None,
            keywords_d: None,
            raw: Some(raw.into()),
        }
    }

    pub fn is_parsed(&self) -> bool {
        self.score_a.is_some()
            || self.score_d.is_some()
            || self.keywords_a.is_some()
            || self.keywords_d.is_some()
    }
}

impl From<&PredictionRecord> for PredictionLine {
    fn from(r: &PredictionRecord) -> Self {
        PredictionLine {
            model: r.model_id.clone(),
            condition: r.condition.clone(),
            run: i64::from(r.run_index),
            subject_id: r.subject_id.clone(),
            score_a: Some(Value::from(r.score_a)),
            score_d: Some(Value::from(r.score_d)),
            keywords_a: Some(Value::from(r.keywords_a.clone())),
            keywords_d: Some(Value::from(r.keywords_d.clone())),
            raw: r.raw_completion.clone(),
        }
    }
}

/// Validates one predictions-file row. Pre-parsed rows go through the same
/// score and keyword checks as raw completions.
pub fn parse_row(row: &PredictionLine, keys: &PredictionKeys) -> ParseOutcome {
    let prov = row.provenance();
    if !row.is_parsed() {
        return match &row.raw {
            Some(raw) => parse_prediction(raw, prov, keys),
            None => ParseOutcome::failed(
                prov,
                ParseFailure::new(ParseFailureKind::MissingField, "row has neither raw nor scores"),
            ),
        };
    }
    if prov.run < 1 {
        let detail = format!("run index {} < 1", prov.run);
        return ParseOutcome::failed(prov, ParseFailure::new(ParseFailureKind::InvalidRunIndex, detail));
    }
    let wire_keys = PredictionKeys {
        score_a: "score_a".into(),
        score_d: "score_d".into(),
        keywords_a: "keywords_a".into(),
        keywords_d: "keywords_d".into(),
    };
    let mut obj = Map::new();
    for (k, v) in [
        ("score_a", &row.score_a),
        ("score_d", &row.score_d),
        ("keywords_a", &row.keywords_a),
        ("keywords_d", &row.keywords_d),
    ] {
        if let Some(v) = v {
            obj.insert(k.to_string(), v.clone());
        }
    }
    let mut lenient = Vec::new();
    let result = build_record(&obj, &wire_keys, &prov, &mut lenient).map(|mut r| {
        r.raw_completion = row.raw.clone();
        r
    });
    ParseOutcome {
        provenance: prov,
        line: None,
        result,
        lenient,
    }
}

/// Parses one text line of a predictions file.
pub fn parse_line(line: &str, line_no: usize, keys: &PredictionKeys) -> ParseOutcome {
    let mut outcome = match serde_json::from_str::<PredictionLine>(line) {
        Ok(row) => parse_row(&row, keys),
        Err(e) => {
            // salvage whatever provenance is readable
            let v: Value = serde_json::from_str(line).unwrap_or(Value::Null);
            let field = |k: &str| v.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
            let prov = Provenance {
                model: field("model"),
                condition: field("condition"),
                run: v.get("run").and_then(Value::as_i64).unwrap_or(0),
                subject_id: field("subject_id"),
            };
            let kind = if v.is_null() {
                ParseFailureKind::MalformedJson
            } else {
                ParseFailureKind::MissingField
            };
            ParseOutcome::failed(prov, ParseFailure::new(kind, format!("bad row: {e}")))
        }
    };
    outcome.line = Some(line_no);
    outcome
}
