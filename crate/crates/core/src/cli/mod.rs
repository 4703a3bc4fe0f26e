//! Command-line front end: `synth`, `train`, `crossval`, `complexity`, `eval`.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

mod config;

pub use config::RunConfig;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::complexity::{
    analyze, render_breakdown_markdown, render_csv, render_markdown, ComplexityError, ConvArchKind,
    LengthConvention, Target,
};
use crate::data::{load_csv, save_csv, synth_dataset, Dataset, Segment, ARM18_COUNTS};
use crate::evaluation::{confusion, mcc, run_loao_cv, write_report, EvalError};
use crate::model::{load_weights, save_weights, train_with_history, ClassifierParams, ModelError, ModelSpec};
use crate::numeric::RealMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Name(_) | ModelError::Spec(_) | ModelError::Nn(crate::nn::NnError::Config(_)) => {
                CliError::Usage(e.to_string())
            }
            other => runtime(other),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            other => runtime(other),
        }
    }
}

impl From<ComplexityError> for CliError {
    fn from(e: ComplexityError) -> Self {
        match e {
            ComplexityError::Usage(m) => CliError::Usage(m),
            ComplexityError::Model(m) => m.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "herdrnn",
    version,
    about = "Recurrent behavior classifiers for accelerometry segments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic labeled segment CSV.
    Synth(SynthArgs),
    /// Train one model on a whole dataset and write its weights.
    Train(TrainArgs),
    /// Leave-one-animal-out cross-validation.
    Crossval(CrossvalArgs),
    /// Multiplication, parameter and memory counts.
    Complexity(ComplexityArgs),
    /// Score a weight file on a dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    animals: Option<usize>,
    #[arg(long)]
    segments_per_animal: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Class proportions, normalized to sum to 1.
    #[arg(long, value_delimiter = ',')]
    proportions: Option<Vec<f64>>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    animal_bias: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

/// Training flags shared by `train` and `crossval`; each overrides the
/// config file.
#[derive(Debug, Args)]
struct TrainOverrides {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Model name; defaults to the single entry of the config's `models`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: TrainOverrides,
}

#[derive(Debug, Args)]
struct CrossvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Model name; defaults to every entry of the config's `models`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    parallel_folds: u64,
    /// Report directory; overrides the config's `output_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    overrides: TrainOverrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    Padded,
    Valid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Csv,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    model: Option<String>,
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 256)]
    seq_len: usize,
    #[arg(long, value_enum, default_value_t = ConventionArg::Padded)]
    conv_convention: ConventionArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Md)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    /// Also write the confusion matrix CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command, returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Crossval(a) => cmd_crossval(a, out, err),
        Command::Complexity(a) => cmd_complexity(a, out),
        Command::Eval(a) => cmd_eval(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(runtime)
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = RunConfig::load_or_default(a.config.as_deref())?.synth;
    if let Some(n) = a.animals {
        spec.n_animals = n;
    }
    if let Some(n) = a.segments_per_animal {
        spec.segments_per_animal = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(s) = a.noise {
        spec.noise_sigma = s;
    }
    if let Some(s) = a.animal_bias {
        spec.animal_bias_sigma = s;
    }
    match (a.proportions, a.classes) {
        (Some(p), classes) => {
            if classes.is_some_and(|c| c != p.len()) {
                return Err(CliError::Usage(format!(
                    "--proportions has {} entries but --classes is {}",
                    p.len(),
                    classes.unwrap_or_default()
                )));
            }
            let sum: f64 = p.iter().sum();
            if !(sum > 0.0 && sum.is_finite()) || p.iter().any(|v| *v < 0.0) {
                return Err(CliError::Usage("--proportions must be nonnegative with a positive sum".into()));
            }
            spec.class_proportions = p.iter().map(|v| v / sum).collect();
        }
        (None, Some(c)) if c != spec.class_proportions.len() => {
            spec.class_proportions = if c == ARM18_COUNTS.len() {
                crate::data::SynthSpec::default().class_proportions
            } else {
                vec![1.0 / c as f64; c]
            };
        }
        _ => {}
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let ds = synth_dataset(&spec).map_err(runtime)?;
    save_csv(&ds, &a.out).map_err(runtime)?;
    let mut text = format!("wrote {} segments to {}\n", ds.len(), a.out.display());
    for (name, n) in ds.class_names.iter().zip(ds.class_histogram()) {
        text.push_str(&format!("{name}: {n}\n"));
    }
    write_out(out, &text)
}

fn apply_overrides(cfg: &mut RunConfig, o: &TrainOverrides) -> Result<(), CliError> {
    if let Some(v) = o.iterations {
        cfg.train.iterations = v;
    }
    if let Some(v) = o.learning_rate {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = o.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = o.seed {
        cfg.train.seed = v;
    }
    cfg.train.validate().map_err(|e| CliError::Usage(e.to_string()))
}

/// Grammar check of every name before any data is read.
fn model_names(flag: Option<String>, cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let names = match flag {
        Some(m) => vec![m],
        None if !cfg.models.is_empty() => cfg.models.clone(),
        None => return Err(CliError::Usage("no model given (use --model or the config's `models`)".into())),
    };
    for n in &names {
        ModelSpec::parse_name(n, 2)?;
    }
    Ok(names)
}

fn load_data(path: &Path) -> Result<Dataset, CliError> {
    load_csv(path).map_err(runtime)
}

/// Mean cross-entropy of `params` over a whole dataset.
fn dataset_loss(params: &ClassifierParams, ds: &Dataset) -> Result<f64, CliError> {
    let mut total = 0.0;
    for chunk in ds.segments.chunks(64) {
        let seqs: Vec<&RealMatrix> = chunk.iter().map(|s| s.segment.samples()).collect();
        let labels: Vec<usize> = chunk.iter().map(|s| s.label).collect();
        total += params.loss(&seqs, &labels)? * chunk.len() as f64;
    }
    Ok(total / ds.len() as f64)
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = RunConfig::load_or_default(a.config.as_deref())?;
    apply_overrides(&mut cfg, &a.overrides)?;
    let names = model_names(a.model, &cfg)?;
    let [name] = &names[..] else {
        return Err(CliError::Usage(format!("train takes one model, config lists {}", names.len())));
    };
    let ds = load_data(&a.data)?;
    let spec = ModelSpec::parse_name(name, ds.num_classes())?;
    let outcome = train_with_history(spec, &ds, &cfg.train)?;
    save_weights(&outcome.params, &a.out)?;
    let loss = dataset_loss(&outcome.params, &ds)?;
    write_out(
        out,
        &format!(
            "trained {spec} for {} iterations on {} segments\nfinal_loss={loss:.6}\nwrote {}\n",
            cfg.train.iterations,
            ds.len(),
            a.out.display()
        ),
    )
}

fn cmd_crossval(a: CrossvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = RunConfig::load_or_default(a.config.as_deref())?;
    apply_overrides(&mut cfg, &a.overrides)?;
    let names = model_names(a.model, &cfg)?;
    let ds = load_data(&a.data)?;
    let base_dir = a
        .out_dir
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("crossval_out"));
    let nested = names.len() > 1;
    for name in &names {
        let spec = ModelSpec::parse_name(name, ds.num_classes())?;
        let report = run_loao_cv(&ds, spec, &cfg.train, a.parallel_folds as usize)?;
        let dir = if nested { base_dir.join(name) } else { base_dir.clone() };
        write_report(&report, &dir)?;
        for f in &report.folds {
            let _ = writeln!(err, "{name} fold {} ({}): {:.2} s", f.index, f.test_id, f.seconds);
        }
        let line = if nested {
            format!("{name} MCC={:.4}\n", report.pooled_mcc)
        } else {
            format!("MCC={:.4}\n", report.pooled_mcc)
        };
        write_out(out, &line)?;
    }
    Ok(())
}

fn cmd_complexity(a: ComplexityArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let convention = match a.conv_convention {
        ConventionArg::Padded => LengthConvention::Padded,
        ConventionArg::Valid => LengthConvention::Valid,
    };
    if a.classes < 2 {
        return Err(CliError::Usage("--classes must be at least 2".into()));
    }
    let targets = if a.all {
        Target::all(a.classes)
    } else {
        let name = a.model.as_deref().unwrap_or_default();
        vec![Target::parse(name, a.classes)?]
    };
    let reports = targets
        .iter()
        .map(|t| analyze(t, a.seq_len, a.classes, convention))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match a.format {
        FormatArg::Csv => render_csv(&reports),
        FormatArg::Md => {
            let mut s = render_markdown(&reports);
            if a.all {
                let other = match convention {
                    LengthConvention::Padded => LengthConvention::Valid,
                    LengthConvention::Valid => LengthConvention::Padded,
                };
                let fcn = analyze(&Target::Conv(ConvArchKind::Fcn), a.seq_len, a.classes, other)?;
                s.push_str(&format!(
                    "\nConv layers use the {convention} length convention. FCN under the {other} convention: {}M operations ({} exact).\n",
                    fcn.ops_display(),
                    fcn.mult_ops
                ));
                s.push_str("Memory is an estimate in MiB: 4 bytes x (parameters + 2 x activations + input).\n");
            } else {
                for r in &reports {
                    s.push('\n');
                    s.push_str(&render_breakdown_markdown(r));
                }
            }
            s
        }
    };
    match a.out {
        Some(path) => {
            fs::write(&path, &text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
        }
        None => write_out(out, &text),
    }
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = load_weights(&a.weights)?;
    let ds = load_data(&a.data)?;
    if ds.num_classes() != params.spec.num_classes {
        return Err(CliError::Runtime(format!(
            "weights have {} classes, dataset has {}",
            params.spec.num_classes,
            ds.num_classes()
        )));
    }
    let segs: Vec<&Segment> = ds.segments.iter().map(|s| &s.segment).collect();
    let preds = params.predict_many(&segs, 64)?;
    let cm = confusion(&ds.labels(), &preds, ds.num_classes())?;
    if let Some(path) = &a.out {
        fs::write(path, cm.to_csv(&ds.class_names))
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    write_out(
        out,
        &format!(
            "model={}\nsegments={}\naccuracy={:.4}\nMCC={:.4}\n",
            params.spec,
            ds.len(),
            cm.accuracy(),
            mcc(&cm)
        ),
    )
}
