//! Command-line front end. `run` parses arguments, dispatches, and maps
//! failures to exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::client::{run_campaign, CampaignConfig, CampaignOptions};
use crate::eval::{
    canonical_json, consistency_analysis, evaluate_all, inter_model_agreement, keyword_analysis, robustness_analysis,
    synth_generate, validity_analysis, wer_analysis, EvalOptions, ReportBundle, SynthModel,
    SynthSpec,
};
use crate::ingest::{
    assemble_runs, load_dataset, load_predictions, write_dataset, write_exclusions, write_predictions, CampaignStore,
    Dataset, ExclusionReport, PredictionKeys,
};
use crate::report::{render_report, render_table, Format, TableKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "screeneval", version, about = "Reliability evaluation for LLM-based HADS screening")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Subject dataset (JSONL)
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Predictions file (JSONL, raw or parsed rows)
    #[arg(long, global = true)]
    predictions: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// RNG seed for synth (default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with defaults for any of these flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Md => Format::Md,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Collect completions from a chat-completion endpoint
    Infer(InferArgs),
    /// Parse raw completions into predictions and an exclusion report
    Parse,
    /// Run one analysis and print its table
    Eval {
        #[arg(value_enum)]
        analysis: Analysis,
    },
    /// Word error rate of each ASR condition against the reference transcripts
    Wer {
        /// Also write per-subject rates
        #[arg(long)]
        per_subject: bool,
    },
    /// Run every analysis and write all tables
    Report,
    /// Generate a synthetic dataset and campaign
    Synth {
        /// Number of subjects (default 111)
        #[arg(long)]
        subjects: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Analysis {
    Consistency,
    Validity,
    Robustness,
    Keywords,
    Agreement,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Chat-completion URL; the API key is read from SCREENEVAL_API_KEY
    #[arg(long)]
    endpoint: Option<String>,
    /// Model id; repeat for several
    #[arg(long = "model")]
    models: Vec<String>,
    /// Condition label; repeat for several (default: all in the dataset)
    #[arg(long = "condition")]
    conditions: Vec<String>,
    /// Completions per (model, condition, subject) (default 3)
    #[arg(long)]
    runs: Option<u32>,
    /// Sampling temperature (default 0.7)
    #[arg(long)]
    temperature: Option<f64>,
    /// Concurrent requests (default 4)
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Prompt file containing one {TRANSCRIPT} placeholder
    #[arg(long)]
    prompt_template: Option<PathBuf>,
    /// Stop after this many new cells
    #[arg(long)]
    max_new_cells: Option<usize>,
}

/// Contents of `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub keys: Option<PredictionKeys>,
    pub eval: Option<EvalOptions>,
    pub campaign: Option<CampaignConfig>,
    pub synth: Option<SynthSpec>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Data(format!("{context}: {e}"))
}

struct Ctx {
    dataset: Option<PathBuf>,
    predictions: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Format,
    seed: u64,
    keys: PredictionKeys,
    eval: EvalOptions,
    campaign: Option<CampaignConfig>,
    synth: Option<SynthSpec>,
}

impl Ctx {
    fn new(g: GlobalArgs) -> Result<Self, Failure> {
        let file = match &g.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(data(p.display()))?;
                serde_json::from_str::<FileConfig>(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        Ok(Ctx {
            dataset: g.dataset.or(file.dataset),
            predictions: g.predictions.or(file.predictions),
            out: g.out.or(file.out),
            format: g.format.map(Format::from).or(file.format).unwrap_or(Format::Md),
            seed: g.seed.or(file.seed).unwrap_or(0),
            keys: file.keys.unwrap_or_default(),
            eval: file.eval.unwrap_or_default(),
            campaign: file.campaign,
            synth: file.synth,
        })
    }

    fn need<'a>(opt: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
        opt.as_deref().ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
    }

    fn dataset(&self) -> Result<Dataset, Failure> {
        let p = Self::need(&self.dataset, "dataset")?;
        load_dataset(p).map_err(data(p.display()))
    }

    fn store(&self) -> Result<(CampaignStore, ExclusionReport), Failure> {
        let p = Self::need(&self.predictions, "predictions")?;
        let outcomes = load_predictions(p, &self.keys).map_err(data(p.display()))?;
        let (store, report) = assemble_runs(outcomes);
        if !report.is_clean() {
            log::warn!("{} prediction row(s) excluded", report.failures.len());
        }
        Ok((store, report))
    }

    fn out_dir(&self) -> Result<&Path, Failure> {
        let p = Self::need(&self.out, "out")?;
        fs::create_dir_all(p).map_err(data(p.display()))?;
        Ok(p)
    }

    /// Prints to stdout and, with `--out`, also writes `name`.
    fn emit(&self, name: &str, text: &str) -> Result<(), Failure> {
        print!("{text}");
        if self.out.is_some() {
            write_file(&self.out_dir()?.join(name), text)?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(data(path.display()))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let file = File::create(path).map_err(data(path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(data(path.display()))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            EXIT_DATA
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx::new(cli.global)?;
    match cli.command {
        Command::Infer(args) => infer(&ctx, args),
        Command::Parse => parse(&ctx),
        Command::Eval { analysis } => eval(&ctx, analysis),
        Command::Wer { per_subject } => wer(&ctx, per_subject),
        Command::Report => report(&ctx),
        Command::Synth { subjects } => synth(&ctx, subjects),
    }
}

fn infer(ctx: &Ctx, a: InferArgs) -> Result<(), Failure> {
    let mut cfg = match (&ctx.campaign, &a.endpoint) {
        (Some(c), _) => c.clone(),
        (None, Some(url)) => CampaignConfig::new(url.clone(), Vec::new()),
        (None, None) => return Err(Failure::Usage("--endpoint (or a campaign config) is required".into())),
    };
    if let Some(url) = a.endpoint {
        cfg.endpoint_url = url;
    }
    if !a.models.is_empty() {
        cfg.model_ids = a.models;
    }
    if !a.conditions.is_empty() {
        cfg.condition_labels = a.conditions;
    }
    if let Some(r) = a.runs {
        cfg.runs_per_cell = r;
    }
    if let Some(t) = a.temperature {
        cfg.temperature = t;
    }
    if let Some(n) = a.max_in_flight {
        cfg.max_in_flight = n;
    }
    if let Some(p) = a.prompt_template {
        cfg.prompt_template_path = Some(p);
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let dataset = ctx.dataset()?;
    let out = ctx.out_dir()?;
    let summary = run_campaign(&cfg, &dataset, out, CampaignOptions { max_new_cells: a.max_new_cells })
        .map_err(data("campaign"))?;
    print!("{}", canonical_json(&summary));
    Ok(())
}

fn parse(ctx: &Ctx) -> Result<(), Failure> {
    let (store, report) = ctx.store()?;
    let out = ctx.out_dir()?;
    write_with(&out.join("predictions.jsonl"), |w| write_predictions(&store, w))?;
    write_with(&out.join("exclusions.jsonl"), |w| write_exclusions(&report, w))?;
    write_file(&out.join("exclusion_report.json"), &canonical_json(&report))?;
    eprintln!(
        "{} rows read, {} stored, {} excluded, {} superseded",
        report.total_inputs,
        report.stored,
        report.failures.len(),
        report.superseded
    );
    Ok(())
}

fn eval(ctx: &Ctx, analysis: Analysis) -> Result<(), Failure> {
    let (store, exclusions) = ctx.store()?;
    let opts = &ctx.eval;
    let mut bundle = ReportBundle {
        exclusions: Some(exclusions),
        ..ReportBundle::default()
    };
    let table = match analysis {
        Analysis::Consistency => {
            (bundle.consistency, bundle.skipped) = consistency_analysis(&store, opts);
            TableKind::Consistency
        }
        Analysis::Validity => {
            (bundle.validity, bundle.skipped) = validity_analysis(&store, &ctx.dataset()?, opts);
            TableKind::Validity
        }
        Analysis::Robustness => {
            (bundle.robustness, bundle.skipped) = robustness_analysis(&store, opts).map_err(data("robustness"))?;
            TableKind::Robustness
        }
        Analysis::Keywords => {
            let kw = keyword_analysis(&store, &ctx.dataset()?, opts);
            bundle.keywords = kw.cells;
            bundle.keyword_frequencies = kw.frequencies;
            bundle.skipped = kw.skipped;
            TableKind::Keywords
        }
        Analysis::Agreement => {
            (bundle.agreement, bundle.skipped) = inter_model_agreement(&store, opts).map_err(data("agreement"))?;
            TableKind::Agreement
        }
    };
    for s in &bundle.skipped {
        log::warn!("{}: {}/{} skipped: {}", s.analysis, s.model, s.condition, s.reason);
    }
    let text = render_table(&bundle, table, ctx.format);
    ctx.emit(&format!("{}.{}", table.name(), ctx.format.extension()), &text)?;
    if table == TableKind::Keywords && ctx.out.is_some() {
        let freq = render_table(&bundle, TableKind::KeywordFrequency, ctx.format);
        write_file(&ctx.out_dir()?.join(format!("keyword_frequency.{}", ctx.format.extension())), &freq)?;
    }
    Ok(())
}

fn wer(ctx: &Ctx, per_subject: bool) -> Result<(), Failure> {
    let dataset = ctx.dataset()?;
    let analysis = wer_analysis(&dataset, &ctx.eval.reference_condition);
    let bundle = ReportBundle {
        wer: analysis.rows,
        ..ReportBundle::default()
    };
    ctx.emit(&format!("wer.{}", ctx.format.extension()), &render_table(&bundle, TableKind::Wer, ctx.format))?;
    if per_subject {
        let text = canonical_json(&analysis.subjects);
        match &ctx.out {
            Some(_) => write_file(&ctx.out_dir()?.join("wer_subjects.json"), &text)?,
            None => print!("{text}"),
        }
    }
    Ok(())
}

fn report(ctx: &Ctx) -> Result<(), Failure> {
    let (store, exclusions) = ctx.store()?;
    let dataset = ctx.dataset()?;
    let out = ctx.out_dir()?;
    let mut bundle = evaluate_all(&store, &dataset, &ctx.eval);
    bundle.exclusions = Some(exclusions);
    for (name, text) in render_report(&bundle, ctx.format) {
        write_file(&out.join(&name), &text)?;
        eprintln!("wrote {}", out.join(&name).display());
    }
    Ok(())
}

/// Three simulated models of decreasing reliability.
pub fn default_synth_spec() -> SynthSpec {
    SynthSpec::study_shape(vec![
        SynthModel::noise_free("oracle"),
        SynthModel {
            fabrication_rate: 0.06,
            asr_sensitivity: 8.0,
            ..SynthModel::noisy("steady", 3.0, 1.2)
        },
        SynthModel {
            fabrication_rate: 0.2,
            asr_sensitivity: 20.0,
            run_bias: vec![0.0, 0.0, 0.8],
            ..SynthModel::noisy("shaky", 3.5, 4.0)
        },
    ])
}

fn synth(ctx: &Ctx, subjects: Option<usize>) -> Result<(), Failure> {
    let mut spec = ctx.synth.clone().unwrap_or_else(default_synth_spec);
    if let Some(n) = subjects {
        spec.n_subjects = n;
    }
    let out_dir = ctx.out_dir()?;
    let out = synth_generate(&spec, ctx.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    write_with(&out_dir.join("dataset.jsonl"), |w| write_dataset(&out.dataset, w))?;
    write_with(&out_dir.join("predictions.jsonl"), |w| {
        for row in &out.rows {
            serde_json::to_writer(&mut *w, row)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    write_file(&out_dir.join("synth_spec.json"), &canonical_json(&spec))?;
    eprintln!(
        "{} subjects, {} prediction rows (seed {}) in {}",
        out.dataset.len(),
        out.rows.len(),
        ctx.seed,
        out_dir.display()
    );
    Ok(())
}
