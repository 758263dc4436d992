use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::EvalError;
use crate::domain::{HadsSubscale, PredictionRecord, SubjectRecord, TranscriptCondition, GT_CONDITION, HADS_MAX};
use crate::ingest::{CampaignStore, Dataset, PredictionLine, Provenance};
use crate::text::keywords::match_keyword;
use crate::text::{normalize_keyword, word_error_rate, DEFAULT_FUZZY_THRESHOLD};

const VOCAB: &[&str] = &[
    "erm", "um", "well", "yeah", "you", "know", "really", "just", "think", "feel", "feeling", "felt", "sleep",
    "sleeping", "night", "morning", "tired", "worried", "worry", "nervous", "tense", "relaxed", "enjoy", "enjoyed",
    "garden", "walk", "walking", "dog", "family", "daughter", "son", "grandchildren", "friends", "church", "work",
    "retired", "house", "kitchen", "cooking", "television", "news", "reading", "book", "music", "radio", "doctor",
    "hospital", "pain", "back", "knee", "heart", "breath", "chest", "stomach", "appetite", "food", "tea", "coffee",
    "weather", "rain", "sunny", "holiday", "seaside", "car", "bus", "shopping", "money", "bills", "pension",
    "lonely", "alone", "quiet", "busy", "slow", "fast", "laugh", "smile", "cry", "sad", "happy", "cheerful",
    "restless", "panic", "sudden", "frightened", "butterflies", "edge", "calm", "interest", "bother", "energy",
    "lazy", "bored", "motivated", "plans", "future", "forward", "looking", "mind", "thoughts", "head", "heavy",
    "light", "days", "weeks", "months", "years", "often", "sometimes", "never", "always", "mostly", "hardly",
    "bit", "lot", "little", "much", "more", "less", "today", "yesterday", "tomorrow", "weekend", "evening",
    "afternoon", "early", "late", "wake", "woke", "bed", "chair", "window", "outside", "inside", "neighbours",
    "phone", "call", "visit", "visited", "talk", "talking", "speak", "listen", "remember", "forget", "forgot",
    "memory", "names", "place", "town", "village", "city", "road", "park", "bench", "birds", "flowers", "trees",
];

// Abstract labels a model might cite without quoting the speaker.
const FABRICATED: &[&str] = &[
    "anhedonia", "psychomotor retardation", "hypervigilance", "social withdrawal", "lack of motivation",
    "catastrophizing", "rumination", "emotional blunting", "diminished self-worth", "excessive guilt",
    "autonomic arousal", "somatic complaints", "low mood", "irritability", "avoidance behaviour",
    "hopelessness", "apprehension", "derealisation", "insomnia symptoms", "fatigue syndrome",
    "cognitive impairment", "affective flattening", "dysphoria", "agitation", "persistent sadness",
    "fearful anticipation", "reduced libido", "concentration deficit", "worthlessness", "existential dread",
    "panic disorder", "generalised anxiety", "depressive episode", "negative self-schema", "poor self-care",
];

/// Noise model for one simulated LLM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthModel {
    pub id: String,
    /// SD of a per-subject offset shared by all runs (hurts validity only).
    #[serde(default)]
    pub subject_sd: f64,
    /// SD of independent per-run noise (hurts consistency).
    #[serde(default)]
    pub run_sd: f64,
    /// Additive offset per run; empty means none.
    #[serde(default)]
    pub run_bias: Vec<f64>,
    /// SD of the extra per-subject offset per unit of transcript WER.
    #[serde(default)]
    pub asr_sensitivity: f64,
    /// Probability that a cited keyword is replaced by one absent from the transcript.
    #[serde(default)]
    pub fabrication_rate: f64,
    /// Transcript spans each run draws its keywords from; equal to
    /// `keywords_per_run` makes keyword sets identical across runs.
    #[serde(default = "default_pool")]
    pub keyword_pool: usize,
}

fn default_pool() -> usize {
    4
}

impl SynthModel {
    /// Predicts the ground truth exactly and quotes the transcript.
    pub fn noise_free(id: impl Into<String>) -> Self {
        SynthModel {
            id: id.into(),
            subject_sd: 0.0,
            run_sd: 0.0,
            run_bias: Vec::new(),
            asr_sensitivity: 0.0,
            fabrication_rate: 0.0,
            keyword_pool: default_pool(),
        }
    }

    pub fn noisy(id: impl Into<String>, subject_sd: f64, run_sd: f64) -> Self {
        SynthModel {
            subject_sd,
            run_sd,
            keyword_pool: 8,
            ..Self::noise_free(id)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_subjects: usize,
    pub runs: u32,
    /// Must include the reference condition; others are derived from it by
    /// word deletion, substitution and insertion at `nominal_wer` scaled by
    /// `asr_strength`.
    pub conditions: Vec<TranscriptCondition>,
    pub asr_strength: f64,
    pub transcript_words: usize,
    pub keywords_per_run: usize,
    pub models: Vec<SynthModel>,
}

impl SynthSpec {
    /// 111 subjects, 3 runs, the four canonical conditions.
    pub fn study_shape(models: Vec<SynthModel>) -> Self {
        SynthSpec {
            n_subjects: 111,
            runs: 3,
            conditions: TranscriptCondition::canonical(),
            asr_strength: 1.0,
            transcript_words: 80,
            keywords_per_run: 4,
            models,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidSpec(m));
        if self.n_subjects == 0 || self.runs == 0 {
            return bad("n_subjects and runs must be positive".into());
        }
        if !self.conditions.iter().any(|c| c.id == GT_CONDITION) {
            return bad(format!("conditions must include {GT_CONDITION}"));
        }
        let ids: BTreeSet<&str> = self.conditions.iter().map(|c| c.id.as_str()).collect();
        if ids.len() != self.conditions.len() {
            return bad("duplicate condition id".into());
        }
        if self
            .conditions
            .iter()
            .any(|c| c.nominal_wer.is_some_and(|w| !(0.0..=1.0).contains(&w)))
        {
            return bad("nominal_wer must lie in [0, 1]".into());
        }
        if !(self.asr_strength >= 0.0 && self.asr_strength.is_finite()) {
            return bad("asr_strength must be finite and >= 0".into());
        }
        if self.keywords_per_run == 0 || self.transcript_words < 2 * self.keywords_per_run {
            return bad("need keywords_per_run >= 1 and transcript_words >= 2 * keywords_per_run".into());
        }
        let models: BTreeSet<&str> = self.models.iter().map(|m| m.id.as_str()).collect();
        if self.models.is_empty() || models.len() != self.models.len() {
            return bad("model ids must be non-empty and unique".into());
        }
        for m in &self.models {
            let sds = [m.subject_sd, m.run_sd, m.asr_sensitivity];
            if sds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || m.run_bias.iter().any(|b| !b.is_finite()) {
                return bad(format!("{}: noise parameters must be finite and >= 0", m.id));
            }
            if !(0.0..=1.0).contains(&m.fabrication_rate) {
                return bad(format!("{}: fabrication_rate must lie in [0, 1]", m.id));
            }
            if !m.run_bias.is_empty() && m.run_bias.len() != self.runs as usize {
                return bad(format!("{}: run_bias needs one entry per run", m.id));
            }
            if m.keyword_pool < self.keywords_per_run || m.keyword_pool > self.transcript_words {
                return bad(format!("{}: keyword_pool must lie in [keywords_per_run, transcript_words]", m.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub dataset: Dataset,
    /// The predictions as generated.
    pub records: Vec<PredictionRecord>,
    /// The same predictions as raw completion rows, ready for parsing.
    pub rows: Vec<PredictionLine>,
    /// Cited keywords that were fabricated, keyed by (model, condition, run, subject).
    pub fabricated: BTreeMap<Provenance, usize>,
}

impl SynthOutput {
    pub fn store(&self) -> CampaignStore {
        let mut s = CampaignStore::new();
        for r in &self.records {
            s.insert(r.clone());
        }
        s
    }
}

fn perturb(words: &[&'static str], rate: f64, rng: &mut ChaCha8Rng) -> Vec<&'static str> {
    let mut out = Vec::with_capacity(words.len());
    for w in words {
        let u: f64 = rng.random();
        if u < 0.55 * rate {
            // deleted
        } else if u < 0.85 * rate {
            out.push(*VOCAB.choose(rng).expect("vocab"));
        } else {
            out.push(*w);
        }
        if rng.random::<f64>() < 0.15 * rate {
            out.push(*VOCAB.choose(rng).expect("vocab"));
        }
    }
    if out.is_empty() {
        out.push(words[0]);
    }
    out
}

/// Distinct 1- or 2-word spans of the transcript.
fn sample_spans(words: &[&str], count: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut spans = BTreeSet::new();
    let mut order = Vec::new();
    let mut tries = 0;
    while order.len() < count && tries < 50 * count {
        tries += 1;
        let i = rng.random_range(0..words.len());
        let span = if i + 1 < words.len() && rng.random::<bool>() {
            format!("{} {}", words[i], words[i + 1])
        } else {
            words[i].to_string()
        };
        if spans.insert(span.clone()) {
            order.push(span);
        }
    }
    order
}

/// Fabricated labels that do not match the transcript, computed once per
/// (subject, condition).
fn absent_labels<'c>(
    cache: &'c mut BTreeMap<(String, String), Vec<&'static str>>,
    subject: &SubjectRecord,
    condition: &str,
) -> &'c [&'static str] {
    cache
        .entry((subject.subject_id.clone(), condition.to_string()))
        .or_insert_with(|| {
            let normalized = normalize_keyword(&subject.transcripts[condition]);
            let chars: Vec<char> = normalized.chars().collect();
            FABRICATED
                .iter()
                .copied()
                .filter(|f| {
                    !match_keyword(f.to_string(), &normalized, &chars, DEFAULT_FUZZY_THRESHOLD)
                        .is_ok_and(|m| m.grounded)
                })
                .collect()
        })
}

fn completion(scores: (u8, u8), kw: (&[String], &[String]), style: usize) -> String {
    let body = json!({
        "anxiety_score": scores.0,
        "depression_score": scores.1,
        "anxiety_keywords": kw.0,
        "depression_keywords": kw.1,
    });
    match style % 3 {
        0 => format!("```json\n{}\n```", serde_json::to_string_pretty(&body).expect("json")),
        1 => format!("Based on the transcript, my assessment follows.\n{body}\nThese scores are estimates."),
        _ => body.to_string(),
    }
}

/// Generates a dataset and a full campaign of predictions. The output is a
/// pure function of `(spec, seed)`.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<SynthOutput, EvalError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let width = (spec.n_subjects.max(1) as f64).log10().floor() as usize + 1;

    let mut subjects = Vec::new();
    let mut words: BTreeMap<(String, String), Vec<&'static str>> = BTreeMap::new();
    let mut actual_wer: BTreeMap<(String, String), f64> = BTreeMap::new();
    for i in 0..spec.n_subjects {
        let id = format!("S{:0width$}", i + 1, width = width.max(3));
        let gt: Vec<&'static str> = (0..spec.transcript_words)
            .map(|_| *VOCAB.choose(&mut rng).expect("vocab"))
            .collect();
        let mut transcripts = BTreeMap::new();
        for c in &spec.conditions {
            let w = if c.id == GT_CONDITION {
                gt.clone()
            } else {
                perturb(&gt, c.nominal_wer.unwrap_or(0.0) * spec.asr_strength, &mut rng)
            };
            let text = w.join(" ");
            let wer = word_error_rate(&gt.join(" "), &text).map_or(0.0, |b| b.wer);
            actual_wer.insert((id.clone(), c.id.clone()), wer);
            transcripts.insert(c.id.clone(), text);
            words.insert((id.clone(), c.id.clone()), w);
        }
        subjects.push(SubjectRecord {
            subject_id: id,
            hads_a: rng.random_range(0..=21),
            hads_d: rng.random_range(0..=21),
            transcripts,
        });
    }

    let mut out = SynthOutput {
        dataset: Dataset::from_records(Vec::new()),
        records: Vec::new(),
        rows: Vec::new(),
        fabricated: BTreeMap::new(),
    };
    let mut absent = BTreeMap::new();
    for model in &spec.models {
        for subject in &subjects {
            let subject_off: [f64; 2] = [
                model.subject_sd * std_normal.sample(&mut rng),
                model.subject_sd * std_normal.sample(&mut rng),
            ];
            for cond in &spec.conditions {
                let key = (subject.subject_id.clone(), cond.id.clone());
                let wer = actual_wer[&key];
                let asr_off = [
                    model.asr_sensitivity * wer * std_normal.sample(&mut rng),
                    model.asr_sensitivity * wer * std_normal.sample(&mut rng),
                ];
                let tw = &words[&key];
                let pools: Vec<Vec<String>> = (0..2).map(|_| sample_spans(tw, model.keyword_pool, &mut rng)).collect();

                for run in 1..=spec.runs {
                    let bias = model.run_bias.get(run as usize - 1).copied().unwrap_or(0.0);
                    let mut scores = [0u8; 2];
                    let mut keywords: [Vec<String>; 2] = Default::default();
                    let mut n_fab = 0;
                    for (s, subscale) in HadsSubscale::ALL.iter().enumerate() {
                        let truth = f64::from(subject.ground_truth(*subscale));
                        let x = truth + subject_off[s] + asr_off[s] + bias + model.run_sd * std_normal.sample(&mut rng);
                        scores[s] = x.round().clamp(0.0, HADS_MAX) as u8;

                        let mut pool = pools[s].clone();
                        pool.shuffle(&mut rng);
                        let mut unused: Option<Vec<&str>> = None;
                        for kw in pool.into_iter().take(spec.keywords_per_run) {
                            if rng.random::<f64>() < model.fabrication_rate {
                                let unused = unused.get_or_insert_with(|| {
                                    let mut v = absent_labels(&mut absent, subject, &cond.id).to_vec();
                                    v.shuffle(&mut rng);
                                    v
                                });
                                if let Some(f) = unused.pop() {
                                    keywords[s].push(f.to_string());
                                    n_fab += 1;
                                    continue;
                                }
                            }
                            keywords[s].push(kw);
                        }
                    }
                    let prov = Provenance {
                        model: model.id.clone(),
                        condition: cond.id.clone(),
                        run: i64::from(run),
                        subject_id: subject.subject_id.clone(),
                    };
                    let style = out.rows.len();
                    out.rows.push(PredictionLine::raw(
                        &prov,
                        completion((scores[0], scores[1]), (&keywords[0], &keywords[1]), style),
                    ));
                    if n_fab > 0 {
                        out.fabricated.insert(prov, n_fab);
                    }
                    let [keywords_a, keywords_d] = keywords;
                    out.records.push(PredictionRecord {
                        model_id: model.id.clone(),
                        condition: cond.id.clone(),
                        run_index: run,
                        subject_id: subject.subject_id.clone(),
                        score_a: f64::from(scores[0]),
                        score_d: f64::from(scores[1]),
                        keywords_a,
                        keywords_d,
                        raw_completion: None,
                    });
                }
            }
        }
    }
    out.dataset = Dataset::from_records(subjects);
    Ok(out)
}
