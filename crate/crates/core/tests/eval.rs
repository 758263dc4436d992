use std::collections::BTreeMap;

use screeneval::domain::{HadsSubscale, PredictionRecord, SubjectRecord};
use screeneval::eval::{
    consistency_analysis, evaluate_all, inter_model_agreement, keyword_analysis, robustness_analysis, synth_generate,
    validity_analysis, wer_analysis, EvalOptions, InterJaccardMode, SynthModel, SynthSpec,
};
use screeneval::ingest::{CampaignStore, Dataset};
use screeneval::stats::FriedmanMethod;
use screeneval::domain::TranscriptCondition;

const N: usize = 10;

fn dataset() -> Dataset {
    Dataset::from_records((0..N).map(|i| SubjectRecord {
        subject_id: format!("s{i:02}"),
        hads_a: (2 * i) as u8,
        hads_d: (21 - 2 * i) as u8,
        transcripts: BTreeMap::from([
            ("GT".to_string(), format!("erm I feel worried {i} and I sleep badly most nights")),
            ("W-Small".to_string(), format!("I feel worried {i} and sleep badly nights")),
        ]),
    }))
}

struct Builder(CampaignStore);

impl Builder {
    fn new() -> Self {
        Builder(CampaignStore::new())
    }

    #[allow(clippy::too_many_arguments)]
    fn add(&mut self, model: &str, cond: &str, run: u32, i: usize, a: f64, d: f64, kw_a: &[&str], kw_d: &[&str]) {
        self.0.insert(PredictionRecord {
            model_id: model.into(),
            condition: cond.into(),
            run_index: run,
            subject_id: format!("s{i:02}"),
            score_a: a,
            score_d: d,
            keywords_a: kw_a.iter().map(|s| s.to_string()).collect(),
            keywords_d: kw_d.iter().map(|s| s.to_string()).collect(),
            raw_completion: None,
        });
    }

    /// Ground truth plus `f(run, subject)` on both subscales.
    fn truthful(mut self, model: &str, cond: &str, runs: u32, f: impl Fn(u32, usize) -> f64) -> Self {
        for i in 0..N {
            for r in 1..=runs {
                let a = (2 * i) as f64 + f(r, i);
                let d = (21 - 2 * i) as f64 - f(r, i).abs();
                self.add(model, cond, r, i, a.clamp(0.0, 21.0), d.clamp(0.0, 21.0), &["worried"], &["sleep badly"]);
            }
        }
        self
    }
}

#[test]
fn identical_runs_are_perfectly_consistent() {
    let store = Builder::new().truthful("m", "GT", 3, |_, _| 0.0).0;
    let (cells, skipped) = consistency_analysis(&store, &EvalOptions::default());
    assert!(skipped.is_empty());
    assert_eq!(cells.len(), 2);
    for c in cells {
        assert!((c.icc.icc - 1.0).abs() < 1e-12);
        assert_eq!(c.friedman.p_value, 1.0);
        assert_eq!(c.n_subjects_used, N);
    }
}

#[test]
fn run_offset_keeps_icc_but_friedman_sees_it() {
    let mut b = Builder::new();
    for i in 0..N {
        for r in 1..=3 {
            let off = if r == 3 { 5.0 } else { 0.0 };
            b.add("m", "GT", r, i, i as f64 + off, i as f64 + off, &[], &[]);
        }
    }
    let (cells, _) = consistency_analysis(&b.0, &EvalOptions::default());
    for c in cells {
        assert!((c.icc.icc - 1.0).abs() < 1e-9);
        assert!(c.friedman.p_value < 0.01, "p = {}", c.friedman.p_value);
        assert_eq!(c.friedman.method, FriedmanMethod::ChiSquare);
    }
}

#[test]
fn missing_runs_are_excluded_and_counted() {
    let mut store = Builder::new().truthful("m", "GT", 3, |r, i| (r as f64) * 0.1 + (i % 3) as f64).0;
    let mut b = Builder(CampaignStore::new());
    for rec in store.records() {
        if !(rec.subject_id == "s03" && rec.run_index == 2) {
            b.0.insert(rec.clone());
        }
    }
    store = b.0;
    let (cells, _) = consistency_analysis(&store, &EvalOptions::default());
    assert_eq!(cells[0].n_subjects_used, N - 1);
    assert_eq!(cells[0].n_excluded, 1);
    let (v, _) = validity_analysis(&store, &dataset(), &EvalOptions::default());
    assert_eq!(v[0].n, N);
    assert_eq!(v[0].subjects_with_missing_runs, 1);
}

#[test]
fn validity_of_truth_and_its_mirror() {
    let store = Builder::new().truthful("m", "GT", 3, |_, _| 0.0).0;
    let (cells, _) = validity_analysis(&store, &dataset(), &EvalOptions::default());
    for c in &cells {
        assert_eq!(c.rho.unwrap().rho, 1.0);
        assert_eq!(c.wilcoxon.p_value, 1.0);
        assert_eq!(c.wilcoxon.n_effective, 0);
    }

    let mut b = Builder::new();
    for i in 0..N {
        for r in 1..=3 {
            b.add("m", "GT", r, i, 21.0 - (2 * i) as f64, (2 * i) as f64, &[], &[]);
        }
    }
    let (cells, _) = validity_analysis(&b.0, &dataset(), &EvalOptions::default());
    for c in &cells {
        assert!((c.rho.unwrap().rho + 1.0).abs() < 1e-12);
    }
}

#[test]
fn constant_predictions_are_flagged() {
    let mut b = Builder::new();
    for i in 0..N {
        for r in 1..=2 {
            b.add("m", "GT", r, i, 5.0, (i % 4) as f64, &[], &[]);
        }
    }
    let (cells, skipped) = validity_analysis(&b.0, &dataset(), &EvalOptions::default());
    assert!(skipped.is_empty());
    let a = cells.iter().find(|c| c.subscale == HadsSubscale::Anxiety).unwrap();
    assert!(a.constant_input);
    assert!(a.rho.is_none());
}

#[test]
fn robustness_identical_and_single_shift() {
    let store = Builder::new()
        .truthful("m", "GT", 3, |_, _| 0.0)
        .truthful("m", "W-Small", 3, |_, _| 0.0)
        .0;
    let (cells, _) = robustness_analysis(&store, &EvalOptions::default()).unwrap();
    assert_eq!(cells.len(), 1);
    for pa in cells[0].per_subscale.values() {
        assert_eq!(pa.mae, 0.0);
        assert_eq!(pa.pct_within_1, 100.0);
    }

    // subject 4 anxiety +3 in every W-Small run
    let mut b = Builder::new().truthful("m", "GT", 3, |_, _| 0.0);
    for i in 0..N {
        for r in 1..=3 {
            let a = (2 * i) as f64 + if i == 4 { 3.0 } else { 0.0 };
            b.add("m", "W-Small", r, i, a, (21 - 2 * i) as f64, &[], &[]);
        }
    }
    let (cells, _) = robustness_analysis(&b.0, &EvalOptions::default()).unwrap();
    let c = &cells[0];
    let hand: f64 = [3.0].iter().sum::<f64>() / N as f64;
    assert!((c.per_subscale[&HadsSubscale::Anxiety].mae - hand).abs() < 1e-12);
    assert_eq!(c.per_subscale[&HadsSubscale::Depression].mae, 0.0);
    assert!((c.pooled_pct_within_1 - 100.0 * 19.0 / 20.0).abs() < 1e-12);
}

#[test]
fn robustness_requires_reference() {
    let store = Builder::new().truthful("m", "W-Small", 3, |_, _| 0.0).0;
    assert!(robustness_analysis(&store, &EvalOptions::default()).is_err());
}

#[test]
fn keyword_conventions() {
    let mut b = Builder::new();
    for i in 0..N {
        for r in 1..=3 {
            b.add("a", "GT", r, i, 1.0, 1.0, &["worried", "sleep badly"], &["erm"]);
            b.add("b", "GT", r, i, 1.0, 1.0, &["Most Nights"], &["lack of motivation"]);
        }
    }
    let kw = keyword_analysis(&b.0, &dataset(), &EvalOptions::default());
    let cell = |m: &str, s| kw.cells.iter().find(|c| c.model == m && c.subscale == s).unwrap();
    let a = cell("a", HadsSubscale::Anxiety);
    assert_eq!(a.groundedness_pct, Some(100.0));
    assert_eq!(a.n_unique, 2 * N);
    assert_eq!(a.n_occurrences, 2 * 3 * N);
    assert_eq!(a.intra_jaccard, Some(1.0));
    assert_eq!(a.inter_jaccard, Some(0.0));
    assert_eq!(cell("b", HadsSubscale::Anxiety).groundedness_pct, Some(100.0));
    assert_eq!(cell("b", HadsSubscale::Depression).groundedness_pct, Some(0.0));

    let top: Vec<_> = kw
        .frequencies
        .iter()
        .filter(|f| f.model == "a" && f.subscale == HadsSubscale::Anxiety)
        .collect();
    assert_eq!(top.len(), 2);
    assert_eq!((top[0].keyword.as_str(), top[0].count), ("sleep badly", 3 * N));
}

#[test]
fn intra_and_inter_jaccard_by_hand() {
    let mut b = Builder::new();
    // one subject: runs {x,y}, {x}, {x,y}; pairwise 0.5, 1, 0.5 -> 2/3
    b.add("a", "GT", 1, 0, 1.0, 1.0, &["worried", "sleep"], &[]);
    b.add("a", "GT", 2, 0, 1.0, 1.0, &["worried"], &[]);
    b.add("a", "GT", 3, 0, 1.0, 1.0, &["worried", "sleep"], &[]);
    b.add("b", "GT", 1, 0, 1.0, 1.0, &["sleep", "erm"], &[]);
    b.add("b", "GT", 2, 0, 1.0, 1.0, &["erm"], &[]);
    b.add("b", "GT", 3, 0, 1.0, 1.0, &["erm"], &[]);
    let kw = keyword_analysis(&b.0, &dataset(), &EvalOptions::default());
    let a = &kw.cells[0];
    assert_eq!(a.model, "a");
    assert!((a.intra_jaccard.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    // unions {worried, sleep} vs {sleep, erm}
    assert!((a.inter_jaccard.unwrap() - 1.0 / 3.0).abs() < 1e-12);

    let opts = EvalOptions {
        inter_jaccard: InterJaccardMode::PerRun,
        ..EvalOptions::default()
    };
    let kw = keyword_analysis(&b.0, &dataset(), &opts);
    let want = (1.0 / 3.0 + 0.0 + 0.0) / 3.0;
    assert!((kw.cells[0].inter_jaccard.unwrap() - want).abs() < 1e-12);
}

#[test]
fn agreement_of_clones() {
    let store = Builder::new()
        .truthful("a", "GT", 3, |r, i| ((r as usize + i) % 3) as f64)
        .truthful("b", "GT", 3, |r, i| ((r as usize + i) % 3) as f64)
        .0;
    let (cells, _) = inter_model_agreement(&store, &EvalOptions::default()).unwrap();
    assert_eq!(cells.len(), 2);
    for c in cells {
        assert!((c.rho.unwrap().rho - 1.0).abs() < 1e-12);
    }
    let single = Builder::new().truthful("a", "GT", 3, |_, _| 0.0).0;
    assert!(inter_model_agreement(&single, &EvalOptions::default()).is_err());
}

#[test]
fn wer_per_condition() {
    let w = wer_analysis(&dataset(), "GT");
    assert_eq!(w.rows.len(), 1);
    let row = &w.rows[0];
    assert_eq!(row.condition, "W-Small");
    assert_eq!(row.n_subjects, N);
    // "erm", the second "i" and "most" dropped from 11 reference tokens
    assert_eq!(row.corpus.deletions, 3 * N);
    assert_eq!(row.corpus.substitutions + row.corpus.insertions, 0);
    assert!((row.corpus.wer - 3.0 / 11.0).abs() < 1e-12);
    assert_eq!(w.subjects.len(), N);
}

#[test]
fn analyses_ignore_input_order() {
    let spec = SynthSpec {
        n_subjects: 12,
        ..SynthSpec::study_shape(vec![SynthModel::noisy("a", 1.0, 1.0), SynthModel::noisy("b", 2.0, 0.5)])
    };
    let out = synth_generate(&spec, 3).unwrap();
    let forward = out.store();
    let mut reversed = CampaignStore::new();
    for r in out.records.iter().rev() {
        reversed.insert(r.clone());
    }
    let a = evaluate_all(&forward, &out.dataset, &EvalOptions::default());
    let b = evaluate_all(&reversed, &out.dataset, &EvalOptions::default());
    assert_eq!(a.to_canonical_json(), b.to_canonical_json());
}

#[test]
fn synth_is_deterministic_per_seed() {
    let spec = SynthSpec {
        n_subjects: 8,
        ..SynthSpec::study_shape(vec![SynthModel::noisy("a", 1.0, 1.0)])
    };
    let x = synth_generate(&spec, 7).unwrap();
    let y = synth_generate(&spec, 7).unwrap();
    let z = synth_generate(&spec, 8).unwrap();
    assert_eq!(x, y);
    assert_ne!(x.records, z.records);
    assert_eq!(x.rows.len(), 8 * 4 * 3);
}

#[test]
fn synth_rejects_bad_specs() {
    let mut spec = SynthSpec::study_shape(vec![SynthModel::noise_free("a")]);
    spec.conditions.retain(|c| c.id != "GT");
    assert!(synth_generate(&spec, 0).is_err());
    let mut spec = SynthSpec::study_shape(vec![SynthModel::noise_free("a"), SynthModel::noise_free("a")]);
    assert!(synth_generate(&spec, 0).is_err());
    spec.models = vec![SynthModel {
        fabrication_rate: 1.5,
        ..SynthModel::noise_free("a")
    }];
    assert!(synth_generate(&spec, 0).is_err());
}

#[test]
fn noise_free_model_is_perfect() {
    let spec = SynthSpec {
        n_subjects: 30,
        ..SynthSpec::study_shape(vec![SynthModel::noise_free("clean")])
    };
    let out = synth_generate(&spec, 11).unwrap();
    let bundle = evaluate_all(&out.store(), &out.dataset, &EvalOptions::default());
    assert_eq!(bundle.consistency.len(), 8);
    assert!(bundle.consistency.iter().all(|c| (c.icc.icc - 1.0).abs() < 1e-12));
    assert!(bundle.validity.iter().all(|c| c.rho.unwrap().rho == 1.0));
    assert!(bundle.robustness.iter().all(|c| c.per_subscale.values().all(|p| p.mae == 0.0)));
    assert!(bundle.keywords.iter().all(|k| k.groundedness_pct == Some(100.0)));
    assert!(bundle.keywords.iter().all(|k| k.intra_jaccard == Some(1.0)));
}

#[test]
fn validity_band_under_gaussian_noise() {
    let spec = SynthSpec {
        conditions: vec![TranscriptCondition::new("GT", Some(0.0))],
        runs: 3,
        ..SynthSpec::study_shape(vec![SynthModel {
            subject_sd: 3.0,
            ..SynthModel::noise_free("m")
        }])
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for seed in 0..100 {
        let out = synth_generate(&spec, seed).unwrap();
        let (cells, _) = validity_analysis(&out.store(), &out.dataset, &EvalOptions::default());
        for c in cells {
            let r = c.rho.unwrap().rho;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    assert!(lo >= 0.6 && hi <= 0.95, "rho range [{lo}, {hi}]");
}

#[test]
fn asr_strength_raises_mae() {
    let mut means = Vec::new();
    for strength in [0.0, 1.0, 3.0] {
        let spec = SynthSpec {
            n_subjects: 40,
            runs: 1,
            asr_strength: strength,
            conditions: vec![TranscriptCondition::new("GT", Some(0.0)), TranscriptCondition::new("W-Small", Some(0.1))],
            ..SynthSpec::study_shape(vec![SynthModel {
                asr_sensitivity: 30.0,
                ..SynthModel::noise_free("m")
            }])
        };
        let mut total = 0.0;
        for seed in 0..50 {
            let out = synth_generate(&spec, seed).unwrap();
            let opts = EvalOptions::default();
            let (cells, _) = robustness_analysis(&out.store(), &opts).unwrap();
            total += cells[0].per_subscale.values().map(|p| p.mae).sum::<f64>();
        }
        means.push(total / 50.0);
    }
    assert_eq!(means[0], 0.0);
    assert!(means[0] < means[1] && means[1] < means[2], "{means:?}");
}
