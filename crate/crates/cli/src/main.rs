//! `tnvqc`: train, evaluate and self-check the hybrid MPS and circuit
//! classifiers.

mod settings;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tnvqc::checkpoint;
use tnvqc::dataset::{load_split, Dataset, DatasetName, Split};
use tnvqc::train::{evaluate, train, write_metrics_csv, Model, ModelConfig, ModelKind};
use tnvqc::verify::{run_all, VerifyOptions};

use settings::{Classes, Settings, TrainArgs, DEFAULT_DATA, DEFAULT_SUBSAMPLE_SEED};

#[derive(Debug, Parser)]
#[command(
    name = "tnvqc",
    version,
    about = "Hybrid tensor-network and variational-circuit classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model, writing metrics.csv and model.ckpt to --out
    Train(TrainArgs),
    /// Report test accuracy of a saved checkpoint
    Eval(EvalArgs),
    /// Run the gradient, contraction, unitarity and parameter-count checks
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Checkpoint written by `tnvqc train`
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Dataset root holding mnist/ and fashion/ [default: $TNVQC_DATA or data]
    #[arg(long, value_name = "DIR")]
    data: Option<PathBuf>,
    /// mnist or fashion
    #[arg(long, default_value = "fashion")]
    dataset: DatasetName,
    /// Classes in the order used for training
    #[arg(long, default_value = "5,7")]
    classes: Classes,
    /// Fail unless the checkpoint holds this model kind
    #[arg(long)]
    model: Option<ModelKind>,
    /// Evaluate on a random subset of this size [default: whole split]
    #[arg(long, value_parser = settings::positive)]
    test_subsample: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SUBSAMPLE_SEED)]
    subsample_seed: u64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Seed for the random test instances
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    seed: u64,
}

fn env_data() -> Option<PathBuf> {
    std::env::var_os("TNVQC_DATA").map(PathBuf::from)
}

fn load(
    root: &std::path::Path,
    name: DatasetName,
    split: Split,
    classes: &[u8],
    n: Option<usize>,
    seed: u64,
) -> Result<Dataset> {
    let set = load_split(root, name, split, classes)
        .with_context(|| format!("loading {name} {split:?} split from {}", root.display()))?;
    Ok(match n {
        Some(n) => set.subsample(n, seed),
        None => set,
    })
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let s = Settings::resolve(args, env_data())?;
    let train_set = load(
        &s.data,
        s.dataset,
        Split::Train,
        &s.classes,
        s.train_subsample,
        s.subsample_seed,
    )?;
    let test_set = load(
        &s.data,
        s.dataset,
        Split::Test,
        &s.classes,
        s.test_subsample,
        s.subsample_seed,
    )?;
    eprintln!(
        "training {} chi={} on {} {:?}: {} train / {} test, {} lr {} batch {}",
        s.model,
        s.chi,
        s.dataset,
        s.classes,
        train_set.len(),
        test_set.len(),
        s.train.optimizer.kind,
        s.train.optimizer.lr,
        s.train.batch_size
    );

    let mut cfg = ModelConfig::new(s.model, s.classes.len(), s.chi);
    cfg.n_blocks = s.n_blocks;
    cfg.pca_standardize = s.pca_standardize;
    let mut model = Model::init(&cfg, &train_set, s.train.seed)?;
    let history = train(&mut model, &train_set, &test_set, &s.train, |m| {
        eprintln!(
            "epoch {:>3}  loss {:.4}  train {:.4}  test {:.4}  {:.1}s",
            m.epoch, m.train_loss, m.train_acc, m.test_acc, m.seconds
        );
    })?;

    fs::create_dir_all(&s.out).with_context(|| format!("creating {}", s.out.display()))?;
    let mut csv = Vec::new();
    write_metrics_csv(&mut csv, &history, s.record_time)?;
    let metrics_path = s.out.join("metrics.csv");
    fs::write(&metrics_path, csv).with_context(|| format!("writing {}", metrics_path.display()))?;
    let ckpt_path = s.out.join("model.ckpt");
    checkpoint::save(&model, &ckpt_path).with_context(|| format!("writing {}", ckpt_path.display()))?;

    let last = history.last().map_or(0.0, |m| m.test_acc);
    println!("final test accuracy: {last:.4}");
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let model = checkpoint::load(&args.checkpoint)
        .with_context(|| format!("reading checkpoint {}", args.checkpoint.display()))?;
    if let Some(kind) = args.model {
        if kind != model.kind() {
            bail!("checkpoint holds a {} model, not {kind}", model.kind());
        }
    }
    let classes = &args.classes.0;
    if model.n_classes() != classes.len() {
        bail!(
            "dimension mismatch: checkpoint classifies {} classes but {} were given ({})",
            model.n_classes(),
            classes.len(),
            args.classes
        );
    }
    let root = args
        .data
        .or_else(env_data)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA));
    let test_set = load(
        &root,
        args.dataset,
        Split::Test,
        classes,
        args.test_subsample,
        args.subsample_seed,
    )?;
    let acc = evaluate(&model, &test_set)?;
    println!("test accuracy: {acc:.4}");
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let opts = VerifyOptions {
        seed: args.seed,
        ..VerifyOptions::default()
    };
    let report = run_all(&opts);
    let mut out = std::io::stdout().lock();
    writeln!(out, "{:<16} {:<6} detail", "suite", "result")?;
    for s in &report {
        writeln!(
            out,
            "{:<16} {:<6} {}",
            s.name,
            if s.passed { "pass" } else { "FAIL" },
            s.detail
        )?;
    }
    let failing: Vec<&str> = report.iter().filter(|s| !s.passed).map(|s| s.name).collect();
    if !failing.is_empty() {
        bail!("failing suites: {}", failing.join(", "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
