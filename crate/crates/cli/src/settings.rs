//! Run settings for `tnvqc train`, layered as command-line flags over a
//! `key=value` config file over per-model defaults.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use tnvqc::dataset::DatasetName;
use tnvqc::train::{ModelKind, OptimizerConfig, OptimizerKind, TrainConfig};

pub const DEFAULT_DATA: &str = "data";
pub const DEFAULT_OUT: &str = "runs/latest";
pub const DEFAULT_EPOCHS: usize = 30;
pub const DEFAULT_SUBSAMPLE_SEED: u64 = 1234;

/// Ordered list of distinct digit classes, written `5,7` or `0,3,6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classes(pub Vec<u8>);

impl FromStr for Classes {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for part in s.split(',') {
            let c: u8 = part.trim().parse().map_err(|_| format!("`{part}` is not a class id"))?;
            if c > 9 {
                return Err(format!("class {c} is outside 0..=9"));
            }
            if !seen.insert(c) {
                return Err(format!("class {c} is listed twice"));
            }
            out.push(c);
        }
        if out.len() < 2 {
            return Err("at least two classes are needed".into());
        }
        Ok(Classes(out))
    }
}

impl fmt::Display for Classes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(u8::to_string).collect();
        f.write_str(&ids.join(","))
    }
}

pub fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(_) => Err(format!("`{s}` is not a positive integer")),
    }
}

pub fn learning_rate(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive learning rate")),
    }
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

/// Every setting is optional at this level; unset ones fall through to the
/// next layer.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// key=value file with defaults for any of the flags below
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dataset root holding mnist/ and fashion/ [default: $TNVQC_DATA or data]
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// mnist or fashion [default: fashion]
    #[arg(long)]
    pub dataset: Option<DatasetName>,
    /// Comma-separated class ids; label i is the i-th listed class [default: 5,7]
    #[arg(long)]
    pub classes: Option<Classes>,
    /// mps, pca-vqc or mps-vqc [default: mps-vqc]
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// MPS bond dimension [default: 1]
    #[arg(long, value_parser = positive)]
    pub chi: Option<usize>,
    /// Variational blocks in the circuit [default: 4]
    #[arg(long, value_parser = positive)]
    pub n_blocks: Option<usize>,
    /// [default: 30]
    #[arg(long, value_parser = positive)]
    pub epochs: Option<usize>,
    /// [default: 100 for mps, 50 otherwise]
    #[arg(long, value_parser = positive)]
    pub batch_size: Option<usize>,
    /// [default: 1e-3 for mps, 0.01 for pca-vqc, 1e-4 for mps-vqc]
    #[arg(long, value_parser = learning_rate)]
    pub lr: Option<f64>,
    /// adam or rmsprop [default: rmsprop for pca-vqc, adam otherwise]
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    /// Seeds initialization and shuffling [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train on a random subset of this size [default: whole split]
    #[arg(long, value_parser = positive)]
    pub train_subsample: Option<usize>,
    /// Test on a random subset of this size [default: whole split]
    #[arg(long, value_parser = positive)]
    pub test_subsample: Option<usize>,
    /// Seed for choosing subsets [default: 1234]
    #[arg(long)]
    pub subsample_seed: Option<u64>,
    /// Output directory for metrics.csv and model.ckpt [default: runs/latest]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Write wall-clock seconds into the metrics (the column is 0 otherwise)
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = boolean)]
    pub record_time: Option<bool>,
    /// Scale PCA features to unit variance before encoding
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = boolean)]
    pub pca_standardize: Option<bool>,
}

impl TrainArgs {
    /// Fills unset fields from `lower`.
    fn or(self, lower: TrainArgs) -> TrainArgs {
        TrainArgs {
            config: self.config.or(lower.config),
            data: self.data.or(lower.data),
            dataset: self.dataset.or(lower.dataset),
            classes: self.classes.or(lower.classes),
            model: self.model.or(lower.model),
            chi: self.chi.or(lower.chi),
            n_blocks: self.n_blocks.or(lower.n_blocks),
            epochs: self.epochs.or(lower.epochs),
            batch_size: self.batch_size.or(lower.batch_size),
            lr: self.lr.or(lower.lr),
            optimizer: self.optimizer.or(lower.optimizer),
            seed: self.seed.or(lower.seed),
            train_subsample: self.train_subsample.or(lower.train_subsample),
            test_subsample: self.test_subsample.or(lower.test_subsample),
            subsample_seed: self.subsample_seed.or(lower.subsample_seed),
            out: self.out.or(lower.out),
            record_time: self.record_time.or(lower.record_time),
            pca_standardize: self.pca_standardize.or(lower.pca_standardize),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse().map_err(|e: T::Err| e.to_string())
        }
        match key.replace('_', "-").as_str() {
            "data" => self.data = Some(PathBuf::from(value)),
            "dataset" => self.dataset = Some(parse(value)?),
            "classes" => self.classes = Some(parse(value)?),
            "model" => self.model = Some(parse(value)?),
            "chi" => self.chi = Some(positive(value)?),
            "n-blocks" => self.n_blocks = Some(positive(value)?),
            "epochs" => self.epochs = Some(positive(value)?),
            "batch-size" => self.batch_size = Some(positive(value)?),
            "lr" => self.lr = Some(learning_rate(value)?),
            "optimizer" => self.optimizer = Some(parse(value)?),
            "seed" => self.seed = Some(parse(value)?),
            "train-subsample" => self.train_subsample = Some(positive(value)?),
            "test-subsample" => self.test_subsample = Some(positive(value)?),
            "subsample-seed" => self.subsample_seed = Some(parse(value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "record-time" => self.record_time = Some(boolean(value)?),
            "pca-standardize" => self.pca_standardize = Some(boolean(value)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// unknown or repeated keys are errors.
pub fn parse_config(text: &str, origin: &Path) -> Result<TrainArgs> {
    let mut args = TrainArgs::default();
    let mut seen = BTreeSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("{}:{}", origin.display(), n + 1);
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}: expected key=value, found `{line}`", at());
        };
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.replace('_', "-")) {
            bail!("{}: `{key}` is set twice", at());
        }
        if let Err(e) = args.set(key, value) {
            bail!("{}: {key}: {e}", at());
        }
    }
    Ok(args)
}

/// Fully resolved settings for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub data: PathBuf,
    pub dataset: DatasetName,
    pub classes: Vec<u8>,
    pub model: ModelKind,
    pub chi: usize,
    pub n_blocks: usize,
    pub train: TrainConfig,
    pub train_subsample: Option<usize>,
    pub test_subsample: Option<usize>,
    pub subsample_seed: u64,
    pub out: PathBuf,
    pub record_time: bool,
    pub pca_standardize: bool,
}

/// Optimizer, learning rate and batch size used when none are given.
pub fn model_defaults(model: ModelKind) -> (OptimizerKind, f64, usize) {
    match model {
        ModelKind::MpsOnly => (OptimizerKind::Adam, 1e-3, 100),
        ModelKind::PcaVqc => (OptimizerKind::RmsProp, 0.01, 50),
        ModelKind::MpsVqc => (OptimizerKind::Adam, 1e-4, 50),
    }
}

impl Settings {
    pub fn resolve(flags: TrainArgs, env_data: Option<PathBuf>) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text =
                    fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
                parse_config(&text, path)?
            }
            None => TrainArgs::default(),
        };
        let a = flags.or(file);
        let model = a.model.unwrap_or(ModelKind::MpsVqc);
        let (opt, lr, batch) = model_defaults(model);
        Ok(Self {
            data: a.data.or(env_data).unwrap_or_else(|| PathBuf::from(DEFAULT_DATA)),
            dataset: a.dataset.unwrap_or(DatasetName::Fashion),
            classes: a.classes.map(|c| c.0).unwrap_or_else(|| vec![5, 7]),
            model,
            chi: a.chi.unwrap_or(1),
            n_blocks: a.n_blocks.unwrap_or(4),
            train: TrainConfig {
                epochs: a.epochs.unwrap_or(DEFAULT_EPOCHS),
                batch_size: a.batch_size.unwrap_or(batch),
                optimizer: OptimizerConfig::with_kind(a.optimizer.unwrap_or(opt), a.lr.unwrap_or(lr)),
                seed: a.seed.unwrap_or(0),
            },
            train_subsample: a.train_subsample,
            test_subsample: a.test_subsample,
            subsample_seed: a.subsample_seed.unwrap_or(DEFAULT_SUBSAMPLE_SEED),
            out: a.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            record_time: a.record_time.unwrap_or(false),
            pca_standardize: a.pca_standardize.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(flags: TrainArgs) -> Settings {
        Settings::resolve(flags, None).unwrap()
    }

    #[test]
    fn classes_parse() {
        assert_eq!("0,3,6".parse::<Classes>().unwrap().0, vec![0, 3, 6]);
        assert_eq!(" 7 , 5".parse::<Classes>().unwrap().0, vec![7, 5]);
        for bad in ["5", "5,5", "5,10", "a,b", "5,,7", ""] {
            assert!(bad.parse::<Classes>().is_err(), "{bad}");
        }
    }

    #[test]
    fn per_model_defaults() {
        let s = resolve(TrainArgs::default());
        assert_eq!(s.model, ModelKind::MpsVqc);
        assert_eq!(s.train.optimizer, OptimizerConfig::adam(1e-4));
        assert_eq!(s.train.batch_size, 50);
        assert_eq!(s.train.epochs, 30);

        let s = resolve(TrainArgs {
            model: Some(ModelKind::PcaVqc),
            ..Default::default()
        });
        assert_eq!(s.train.optimizer, OptimizerConfig::rmsprop(0.01));
        assert_eq!(s.train.batch_size, 50);

        let s = resolve(TrainArgs {
            model: Some(ModelKind::MpsOnly),
            ..Default::default()
        });
        assert_eq!(s.train.optimizer, OptimizerConfig::adam(1e-3));
        assert_eq!(s.train.batch_size, 100);
    }

    #[test]
    fn flags_beat_config_beat_defaults() {
        let file = parse_config("chi = 3\nlr=0.5  # comment\n\nmodel=pca-vqc\n", Path::new("c")).unwrap();
        let flags = TrainArgs {
            chi: Some(2),
            ..Default::default()
        };
        let s = resolve(flags.or(file));
        assert_eq!(s.chi, 2);
        assert_eq!(s.train.optimizer, OptimizerConfig::rmsprop(0.5));
        assert_eq!(s.train.batch_size, 50);
    }

    #[test]
    fn config_errors() {
        let p = Path::new("c");
        assert!(parse_config("bogus = 1", p).is_err());
        assert!(parse_config("chi = 0", p).is_err());
        assert!(parse_config("chi", p).is_err());
        assert!(parse_config("chi=1\nchi=2", p).is_err());
        assert!(parse_config("lr=-1", p).is_err());
        assert!(parse_config("batch_size = 10\nrecord-time = yes", p).is_ok());
    }

    #[test]
    fn environment_data_root_is_a_fallback() {
        let s = Settings::resolve(TrainArgs::default(), Some("/env".into())).unwrap();
        assert_eq!(s.data, PathBuf::from("/env"));
        let flags = TrainArgs {
            data: Some("/flag".into()),
            ..Default::default()
        };
        assert_eq!(
            Settings::resolve(flags, Some("/env".into())).unwrap().data,
            PathBuf::from("/flag")
        );
    }
}
