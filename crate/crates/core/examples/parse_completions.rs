//! Extracting the structured answer from messy completions and collecting
//! failures into an exclusion report.

use screeneval::ingest::{assemble_runs, parse_prediction, PredictionKeys, Provenance};

fn main() {
    let completions = [
        "Let me think. The speaker mentions worry.\n```json\n{\"anxiety_score\": 9, \"depression_score\": 4, \"anxiety_keywords\": [\"worry\"], \"depression_keywords\": []}\n```",
        "{\"anxiety_score\": \"6\", \"depression_score\": 7, \"anxiety_keywords\": \"tense, on edge\", \"depression_keywords\": [\"{flat}\"],}",
        "{\"anxiety_score\": 25, \"depression_score\": 4, \"anxiety_keywords\": [], \"depression_keywords\": []}",
        "I am unable to provide a clinical score.",
    ];
    let keys = PredictionKeys::default();
    let outcomes: Vec<_> = completions
        .iter()
        .enumerate()
        .map(|(i, raw)| {
            let prov = Provenance {
                model: "demo".into(),
                condition: "GT".into(),
                run: 1,
                subject_id: format!("s{i}"),
            };
            parse_prediction(raw, prov, &keys)
        })
        .collect();

    for o in &outcomes {
        match &o.result {
            Ok(r) => println!(
                "{}: A={} D={} {:?} {:?} lenient={:?}",
                o.provenance.subject_id, r.score_a, r.score_d, r.keywords_a, r.keywords_d, o.lenient
            ),
            Err(f) => println!("{}: {:?} ({})", o.provenance.subject_id, f.kind, f.detail),
        }
    }

    let (store, report) = assemble_runs(outcomes);
    println!(
        "stored {} of {} completions; {} excluded, {} warnings",
        store.len(),
        report.total_inputs,
        report.failures.len(),
        report.warnings.len()
    );
}
