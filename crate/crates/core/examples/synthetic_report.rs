//! Generates a synthetic campaign with known properties, evaluates it and
//! prints the main tables as markdown.
//!
//! `cargo run --example synthetic_report -- 40` limits the run to 40 subjects.

use screeneval::cli::default_synth_spec;
use screeneval::eval::{evaluate_all, synth_generate, EvalOptions};
use screeneval::ingest::{assemble_runs, parse_row, PredictionKeys};
use screeneval::report::{render_table, Format, TableKind};

fn main() {
    let mut spec = default_synth_spec();
    if let Some(n) = std::env::args().nth(1) {
        spec.n_subjects = n.parse().expect("subject count");
    }
    let out = synth_generate(&spec, 42).expect("valid spec");

    // go through the raw completions, as a real campaign would
    let keys = PredictionKeys::default();
    let (store, exclusions) = assemble_runs(out.rows.iter().map(|row| parse_row(row, &keys)));
    println!("{} predictions, {} excluded\n", store.len(), exclusions.failures.len());

    let mut bundle = evaluate_all(&store, &out.dataset, &EvalOptions::default());
    bundle.exclusions = Some(exclusions);
    for table in [
        TableKind::Wer,
        TableKind::Consistency,
        TableKind::Validity,
        TableKind::Robustness,
        TableKind::Keywords,
    ] {
        println!("## {table}\n\n{}", render_table(&bundle, table, Format::Md));
    }
}
