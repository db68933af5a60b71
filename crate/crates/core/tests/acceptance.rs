//! Acceptance harness. Prints one PASS/FAIL line per criterion, followed by
//! indented detail lines, and exits nonzero if any criterion fails.
//!
//! Datasets are read from `$TNVQC_DATA`, or `data/` at the workspace root.
//! Missing data fails the affected criteria rather than skipping them.
//! Set `TNVQC_ACCEPTANCE=2,7` to run a subset.
//!
//! The full run trains 22 models and takes about 40 minutes on a single
//! core.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use tnvqc::dataset::{load_split, Dataset, DatasetName, Split};
use tnvqc::train::{train, write_metrics_csv, Model, ModelConfig, ModelKind, OptimizerConfig, TrainConfig};
use tnvqc::verify::{run_all, VerifyOptions};

const EPOCHS: usize = 30;
const SEEDS: [u64; 3] = [1, 2, 3];
/// Fixed across all runs so that every model sees the same subsample.
const SUBSAMPLE_SEED: u64 = 1234;

const BINARY: [u8; 2] = [5, 7];
const MNIST_TERNARY: [u8; 3] = [0, 3, 6];
const FASHION_TERNARY: [u8; 3] = [5, 7, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct RunKey {
    dataset: DatasetName,
    classes: &'static [u8],
    kind: ModelKind,
    chi: usize,
    /// `None` uses the whole split.
    subsample: Option<(usize, usize)>,
    seed: u64,
}

impl RunKey {
    fn mps_vqc(
        dataset: DatasetName,
        classes: &'static [u8],
        chi: usize,
        subsample: Option<(usize, usize)>,
        seed: u64,
    ) -> Self {
        Self {
            dataset,
            classes,
            kind: ModelKind::MpsVqc,
            chi,
            subsample,
            seed,
        }
    }

    fn with_kind(self, kind: ModelKind) -> Self {
        Self { kind, ..self }
    }

    /// Per-model optimizer defaults.
    fn train_config(&self) -> TrainConfig {
        let (optimizer, batch_size) = match self.kind {
            ModelKind::MpsOnly => (OptimizerConfig::adam(1e-3), 100),
            ModelKind::PcaVqc => (OptimizerConfig::rmsprop(0.01), 50),
            ModelKind::MpsVqc => (OptimizerConfig::adam(1e-4), 50),
        };
        TrainConfig {
            epochs: EPOCHS,
            batch_size,
            optimizer,
            seed: self.seed,
        }
    }

    fn label(&self) -> String {
        let classes: Vec<String> = self.classes.iter().map(u8::to_string).collect();
        let size = match self.subsample {
            Some((tr, te)) => format!("{tr}/{te}"),
            None => "full".into(),
        };
        let chi = match self.kind {
            ModelKind::PcaVqc => String::new(),
            _ => format!(" chi={}", self.chi),
        };
        format!(
            "{} {} {}{chi} {size} seed={}",
            self.dataset,
            classes.join(","),
            self.kind,
            self.seed
        )
    }
}

#[derive(Debug, Clone)]
struct Outcome {
    test_acc: f64,
    csv: Vec<u8>,
    elapsed: Duration,
}

struct Harness {
    root: PathBuf,
    splits: HashMap<(DatasetName, &'static [u8]), (Dataset, Dataset)>,
    runs: HashMap<RunKey, Outcome>,
}

impl Harness {
    fn splits(&mut self, dataset: DatasetName, classes: &'static [u8]) -> Result<&(Dataset, Dataset), String> {
        if !self.splits.contains_key(&(dataset, classes)) {
            let load = |split| {
                load_split(&self.root, dataset, split, classes)
                    .map_err(|e| format!("cannot load {dataset} from {}: {e}", self.root.display()))
            };
            let pair = (load(Split::Train)?, load(Split::Test)?);
            self.splits.insert((dataset, classes), pair);
        }
        Ok(&self.splits[&(dataset, classes)])
    }

    /// Trains once per key and caches the outcome.
    fn run(&mut self, key: RunKey) -> Result<Outcome, String> {
        if let Some(out) = self.runs.get(&key) {
            return Ok(out.clone());
        }
        let out = self.train_fresh(key)?;
        self.runs.insert(key, out.clone());
        Ok(out)
    }

    /// Trains without consulting the cache.
    fn train_fresh(&mut self, key: RunKey) -> Result<Outcome, String> {
        let (train_full, test_full) = self.splits(key.dataset, key.classes)?;
        let (train_set, test_set) = match key.subsample {
            Some((tr, te)) => (
                train_full.subsample(tr, SUBSAMPLE_SEED),
                test_full.subsample(te, SUBSAMPLE_SEED),
            ),
            None => (train_full.clone(), test_full.clone()),
        };
        let start = Instant::now();
        let cfg = ModelConfig::new(key.kind, key.classes.len(), key.chi);
        let mut model = Model::init(&cfg, &train_set, key.seed).map_err(|e| e.to_string())?;
        let history =
            train(&mut model, &train_set, &test_set, &key.train_config(), |_| {}).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let mut csv = Vec::new();
        write_metrics_csv(&mut csv, &history, false).map_err(|e| e.to_string())?;
        let last = history.last().ok_or("no epochs were run")?;
        println!(
            "    run  {:<44} test_acc {:.4}  ({:.0} s)",
            key.label(),
            last.test_acc,
            elapsed.as_secs_f64()
        );
        Ok(Outcome {
            test_acc: last.test_acc,
            csv,
            elapsed,
        })
    }

    fn mean_acc(&mut self, keys: impl IntoIterator<Item = RunKey>) -> Result<f64, String> {
        let mut accs = Vec::new();
        for key in keys {
            accs.push(self.run(key)?.test_acc);
        }
        Ok(accs.iter().sum::<f64>() / accs.len() as f64)
    }
}

/// Verdict and detail text for one criterion.
type Verdict = Result<(bool, String), String>;

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let report = run_all(&VerifyOptions::default());
    let secs = start.elapsed().as_secs_f64();
    let mut detail = String::new();
    for s in &report {
        let mark = if s.passed { "ok" } else { "FAILED" };
        let _ = write!(detail, "{} {mark} ({}); ", s.name, s.detail);
    }
    let _ = write!(detail, "runtime {secs:.2} s (limit 60 s)");
    Ok((report.iter().all(|s| s.passed) && secs < 60.0, detail))
}

fn criterion_2(h: &mut Harness) -> Verdict {
    let full = h.run(RunKey::mps_vqc(DatasetName::Fashion, &BINARY, 1, None, SEEDS[0]))?;
    let sub = h.run(RunKey::mps_vqc(
        DatasetName::Fashion,
        &BINARY,
        1,
        Some((4000, 1000)),
        SEEDS[0],
    ))?;
    let secs = sub.elapsed.as_secs_f64();
    let pass = full.test_acc >= 0.93 && sub.test_acc >= 0.92 && secs < 600.0;
    Ok((
        pass,
        format!(
            "full split {:.4} (need >= 0.93); 4000/1000 {:.4} (need >= 0.92) in {secs:.0} s (limit 600 s)",
            full.test_acc, sub.test_acc
        ),
    ))
}

fn criterion_3(h: &mut Harness) -> Verdict {
    let out = h.run(RunKey::mps_vqc(
        DatasetName::Mnist,
        &MNIST_TERNARY,
        2,
        Some((6000, 1500)),
        SEEDS[0],
    ))?;
    Ok((
        out.test_acc >= 0.95,
        format!("test_acc {:.4} (need >= 0.95)", out.test_acc),
    ))
}

fn criterion_4(h: &mut Harness) -> Verdict {
    let out = h.run(RunKey::mps_vqc(
        DatasetName::Fashion,
        &FASHION_TERNARY,
        2,
        Some((6000, 1500)),
        SEEDS[0],
    ))?;
    Ok((
        out.test_acc >= 0.88,
        format!("test_acc {:.4} (need >= 0.88)", out.test_acc),
    ))
}

fn criterion_5(h: &mut Harness) -> Verdict {
    let sub = Some((6000, 1500));
    let mut pass = true;
    let mut detail = String::new();
    let tasks: [(DatasetName, &'static [u8]); 2] = [
        (DatasetName::Mnist, &MNIST_TERNARY),
        (DatasetName::Fashion, &FASHION_TERNARY),
    ];
    for (dataset, classes) in tasks {
        let keys = SEEDS.map(|s| RunKey::mps_vqc(dataset, classes, 2, sub, s));
        let mps = h.mean_acc(keys)?;
        let pca = h.mean_acc(keys.map(|k| k.with_kind(ModelKind::PcaVqc)))?;
        pass &= mps > pca;
        let _ = write!(detail, "{dataset}: mps-vqc {mps:.4} vs pca-vqc {pca:.4} (need >); ");
    }
    let chi1 = h.mean_acc(SEEDS.map(|s| RunKey::mps_vqc(DatasetName::Fashion, &FASHION_TERNARY, 1, sub, s)))?;
    let chi3 = h.mean_acc(SEEDS.map(|s| RunKey::mps_vqc(DatasetName::Fashion, &FASHION_TERNARY, 3, sub, s)))?;
    pass &= chi3 >= chi1 + 0.01;
    let _ = write!(detail, "fashion chi=3 {chi3:.4} vs chi=1 {chi1:.4} (need >= +0.01)");
    Ok((pass, detail))
}

fn criterion_6(h: &mut Harness) -> Verdict {
    let hybrid = RunKey::mps_vqc(DatasetName::Fashion, &BINARY, 1, Some((4000, 1000)), SEEDS[0]);
    let vqc = h.run(hybrid)?.test_acc;
    let mps = h.run(hybrid.with_kind(ModelKind::MpsOnly))?.test_acc;
    Ok((
        mps <= vqc - 0.03,
        format!("mps-only {mps:.4} vs mps-vqc {vqc:.4} (need gap >= 0.03)"),
    ))
}

fn criterion_7(h: &mut Harness) -> Verdict {
    let key = RunKey::mps_vqc(DatasetName::Fashion, &BINARY, 1, Some((4000, 1000)), SEEDS[0]);
    let first = h.run(key)?;
    let second = h.train_fresh(key)?;
    let same = first.csv == second.csv;
    Ok((
        same,
        format!(
            "two runs of the 4000/1000 configuration: {} bytes vs {} bytes, {}",
            first.csv.len(),
            second.csv.len(),
            if same { "identical" } else { "DIFFERENT" }
        ),
    ))
}

fn main() {
    let root = std::env::var_os("TNVQC_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let selected: Option<BTreeSet<usize>> = std::env::var("TNVQC_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut h = Harness {
        root,
        splits: HashMap::new(),
        runs: HashMap::new(),
    };

    type Check = fn(&mut Harness) -> Verdict;
    let criteria: [(usize, &str, Check); 7] = [
        (1, "oracle suites", |_| criterion_1()),
        (2, "fashion 5v7 mps-vqc chi=1", criterion_2),
        (3, "mnist 0/3/6 mps-vqc chi=2", criterion_3),
        (4, "fashion 5/7/9 mps-vqc chi=2", criterion_4),
        (5, "orderings over 3 seeds", criterion_5),
        (6, "mps-only chi=1 falls short", criterion_6),
        (7, "deterministic metrics csv", criterion_7),
    ];

    println!("acceptance: {EPOCHS} epochs per run, subsample seed {SUBSAMPLE_SEED}");
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            println!("SKIP {id} {name}");
            continue;
        }
        let (pass, detail) = match check(&mut h) {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} {id} {name}", if pass { "PASS" } else { "FAIL" });
        println!("    {detail}");
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
