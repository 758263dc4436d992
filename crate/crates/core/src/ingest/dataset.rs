use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::domain::{sort_conditions, SubjectRecord};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetLine {
    subject_id: String,
    hads_a: i64,
    hads_d: i64,
    transcripts: BTreeMap<String, String>,
}

/// Subjects keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub subjects: BTreeMap<String, SubjectRecord>,
}

impl Dataset {
    pub fn from_records(records: impl IntoIterator<Item = SubjectRecord>) -> Self {
        Dataset {
            subjects: records.into_iter().map(|r| (r.subject_id.clone(), r)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn get(&self, subject_id: &str) -> Option<&SubjectRecord> {
        self.subjects.get(subject_id)
    }

    /// Every transcript label present, canonical conditions first.
    pub fn conditions(&self) -> Vec<String> {
        let labels: BTreeSet<&str> = self
            .subjects
            .values()
            .flat_map(|s| s.transcripts.keys().map(String::as_str))
            .collect();
        sort_conditions(labels)
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_dataset(BufReader::new(file)).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::io(path, source),
        other => other,
    })
}

/// One JSON object per non-blank line.
pub fn read_dataset(reader: impl BufRead) -> Result<Dataset, IngestError> {
    let mut subjects = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::io("<dataset>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: DatasetLine = serde_json::from_str(&line).map_err(|e| IngestError::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        let score = |name: &str, v: i64| {
            u8::try_from(v).map_err(|_| IngestError::Schema {
                line: line_no,
                message: format!("{name} = {v} is not a HADS score"),
            })
        };
        let record = SubjectRecord {
            hads_a: score("hads_a", raw.hads_a)?,
            hads_d: score("hads_d", raw.hads_d)?,
            subject_id: raw.subject_id,
            transcripts: raw.transcripts,
        };
        record.validate().map_err(|source| IngestError::Invalid {
            line: line_no,
            source,
        })?;
        if subjects.contains_key(&record.subject_id) {
            return Err(IngestError::DuplicateSubject {
                line: line_no,
                subject_id: record.subject_id,
            });
        }
        subjects.insert(record.subject_id.clone(), record);
    }
    Ok(Dataset { subjects })
}

pub fn write_dataset(dataset: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    for s in dataset.subjects.values() {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = r#"{"subject_id":"p1","hads_a":6,"hads_d":4,"transcripts":{"GT":"I went for a walk","W-Small":"went for walk"}}
{"subject_id":"p2","hads_a":11,"hads_d":2,"transcripts":{"GT":"erm not much really"}}

{"subject_id":"p3","hads_a":0,"hads_d":21,"transcripts":{"GT":"fine"}}
"#;

    #[test]
    fn loads_valid_lines() {
        let d = read_dataset(THREE.as_bytes()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.get("p2").unwrap().hads_a, 11);
        assert_eq!(d.conditions(), ["GT", "W-Small"]);
    }

    #[test]
    fn missing_field_names_line() {
        let text = "{\"subject_id\":\"p1\",\"hads_a\":1,\"hads_d\":1,\"transcripts\":{\"GT\":\"x\"}}\n{\"subject_id\":\"p2\",\"hads_a\":1,\"transcripts\":{\"GT\":\"x\"}}\n";
        match read_dataset(text.as_bytes()) {
            Err(IngestError::Schema { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("hads_d"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_range_and_empty_text() {
        let dup = "{\"subject_id\":\"p\",\"hads_a\":1,\"hads_d\":1,\"transcripts\":{\"GT\":\"x\"}}\n".repeat(2);
        assert!(matches!(
            read_dataset(dup.as_bytes()),
            Err(IngestError::DuplicateSubject { line: 2, .. })
        ));
        let high = r#"{"subject_id":"p","hads_a":22,"hads_d":1,"transcripts":{"GT":"x"}}"#;
        assert!(matches!(read_dataset(high.as_bytes()), Err(IngestError::Invalid { line: 1, .. })));
        let neg = r#"{"subject_id":"p","hads_a":-1,"hads_d":1,"transcripts":{"GT":"x"}}"#;
        assert!(matches!(read_dataset(neg.as_bytes()), Err(IngestError::Schema { .. })));
        let blank = r#"{"subject_id":"p","hads_a":2,"hads_d":1,"transcripts":{"GT":"   "}}"#;
        assert!(matches!(read_dataset(blank.as_bytes()), Err(IngestError::Invalid { .. })));
        let none = r#"{"subject_id":"p","hads_a":2,"hads_d":1,"transcripts":{}}"#;
        assert!(matches!(read_dataset(none.as_bytes()), Err(IngestError::Invalid { .. })));
    }

    #[test]
    fn write_then_read() {
        let d = read_dataset(THREE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), d);
    }
}
