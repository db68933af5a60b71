use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{invalid, shape, Result};
use crate::rng::Rng;
use crate::train::loss::argmax;
use crate::train::model::Model;
use crate::train::optim::{Optimizer, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// Starts at 1.
    pub epoch: usize,
    /// Mean per-sample loss over the epoch's mini-batches.
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub seconds: f64,
}

/// Mean loss and mean gradient over `indices`.
pub fn batch_loss_grad(model: &Model, data: &Dataset, indices: &[usize]) -> Result<(f64, Vec<f64>)> {
    if indices.is_empty() {
        return Err(invalid("empty batch"));
    }
    let n = model.num_params();
    let per_sample: Vec<(f64, Vec<f64>)> = indices
        .par_iter()
        .map(|&i| {
            let mut g = vec![0.0; n];
            let loss = model.loss_and_grad(data.image(i), data.label(i), &mut g)?;
            Ok((loss, g))
        })
        .collect::<Result<_>>()?;
    // summed in sample order so the result is independent of thread count
    let mut loss = 0.0;
    let mut grad = vec![0.0; n];
    for (l, g) in &per_sample {
        loss += l;
        for (acc, x) in grad.iter_mut().zip(g) {
            *acc += x;
        }
    }
    let scale = 1.0 / indices.len() as f64;
    for g in &mut grad {
        *g *= scale;
    }
    Ok((loss * scale, grad))
}

/// Fraction of samples whose arg-max logit equals the label.
pub fn evaluate(model: &Model, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid("cannot evaluate on an empty dataset"));
    }
    check_compatible(model, data)?;
    let correct = (0..data.len())
        .into_par_iter()
        .map(|i| {
            model
                .logits(data.image(i))
                .map(|z| usize::from(argmax(&z) == data.label(i)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / data.len() as f64)
}

fn check_compatible(model: &Model, data: &Dataset) -> Result<()> {
    if model.n_classes() != data.n_classes() {
        return Err(shape(format!(
            "model has {} classes, data has {}",
            model.n_classes(),
            data.n_classes()
        )));
    }
    if model.input_len() != crate::dataset::IMAGE_PIXELS {
        return Err(shape(format!(
            "model expects {} pixels, images have {}",
            model.input_len(),
            crate::dataset::IMAGE_PIXELS
        )));
    }
    Ok(())
}

/// Mini-batch training. Each epoch reshuffles the training set, takes one
/// optimizer step per batch on the mean gradient, then measures train and
/// test accuracy. `on_epoch` sees each epoch's metrics as they are produced.
pub fn train(
    model: &mut Model,
    train_set: &Dataset,
    test_set: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<Vec<EpochMetrics>> {
    if train_set.is_empty() || test_set.is_empty() {
        return Err(invalid("training and test sets must be nonempty"));
    }
    if cfg.batch_size == 0 {
        return Err(invalid("batch size must be positive"));
    }
    check_compatible(model, train_set)?;
    check_compatible(model, test_set)?;
    let mut optimizer = Optimizer::new(cfg.optimizer, model.num_params())?;
    let mut shuffle = Rng::with_stream(cfg.seed, 3);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut params = model.params();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        shuffle.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = batch_loss_grad(model, train_set, batch)?;
            loss_sum += loss * batch.len() as f64;
            optimizer.step(&mut params, &grad)?;
            model.set_params(&params)?;
        }
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: evaluate(model, train_set)?,
            test_acc: evaluate(model, test_set)?,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&metrics);
        history.push(metrics);
    }
    Ok(history)
}

pub const METRICS_HEADER: &str = "epoch,train_loss,train_acc,test_acc,seconds";

/// Writes the metrics table. With `timing` off the `seconds` column is
/// written as zero so that repeated runs produce identical files.
pub fn write_metrics_csv(mut out: impl Write, metrics: &[EpochMetrics], timing: bool) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for m in metrics {
        let seconds = if timing { m.seconds } else { 0.0 };
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6}",
            m.epoch, m.train_loss, m.train_acc, m.test_acc, seconds
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::IMAGE_PIXELS;
    use crate::train::model::{ModelConfig, ModelKind};

    /// Ten images, the class decides which half of the frame is bright.
    fn toy_set(n: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let mut images = Vec::with_capacity(n * IMAGE_PIXELS);
        let mut labels = Vec::with_capacity(n);
        for s in 0..n {
            let label = s % 2;
            for p in 0..IMAGE_PIXELS {
                let bright = (p < IMAGE_PIXELS / 2) == (label == 0);
                let base = if bright { 0.8 } else { 0.1 };
                images.push(base + 0.1 * rng.uniform());
            }
            labels.push(label);
        }
        Dataset::from_parts(images, labels, vec![5, 7]).unwrap()
    }

    fn toy_model(kind: ModelKind, chi: usize, data: &Dataset) -> Model {
        Model::init(&ModelConfig::new(kind, 2, chi), data, 0).unwrap()
    }

    #[test]
    fn overfits_ten_samples() {
        let data = toy_set(10, 1);
        let mut model = toy_model(ModelKind::MpsVqc, 1, &data);
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 10,
            optimizer: OptimizerConfig::adam(3e-3),
            seed: 0,
        };
        let history = train(&mut model, &data, &data, &cfg, |_| {}).unwrap();
        assert_eq!(history.last().unwrap().train_acc, 1.0);
    }

    #[test]
    fn loss_decreases_over_first_steps() {
        let data = toy_set(10, 2);
        let mut model = toy_model(ModelKind::MpsVqc, 1, &data);
        let mut opt = Optimizer::new(OptimizerConfig::adam(1e-3), model.num_params()).unwrap();
        let all: Vec<usize> = (0..10).collect();
        let mut params = model.params();
        let mut losses = Vec::new();
        for _ in 0..20 {
            let (loss, grad) = batch_loss_grad(&model, &data, &all).unwrap();
            losses.push(loss);
            opt.step(&mut params, &grad).unwrap();
            model.set_params(&params).unwrap();
        }
        let first: f64 = losses[..10].iter().sum::<f64>() / 10.0;
        let second: f64 = losses[10..].iter().sum::<f64>() / 10.0;
        assert!(second < first, "{losses:?}");
        assert!(losses[19] < losses[0]);
    }

    #[test]
    fn zero_epochs_leaves_model_untouched() {
        let data = toy_set(10, 3);
        let mut model = toy_model(ModelKind::MpsOnly, 2, &data);
        let before = model.clone();
        let cfg = TrainConfig {
            epochs: 0,
            batch_size: 4,
            optimizer: OptimizerConfig::adam(1e-3),
            seed: 0,
        };
        assert!(train(&mut model, &data, &data, &cfg, |_| {}).unwrap().is_empty());
        assert_eq!(model, before);
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_set(12, 4);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 5,
            optimizer: OptimizerConfig::adam(1e-2),
            seed: 9,
        };
        let run = || {
            let mut model = toy_model(ModelKind::MpsVqc, 2, &data);
            let h = train(&mut model, &data, &data, &cfg, |_| {}).unwrap();
            let mut csv = Vec::new();
            write_metrics_csv(&mut csv, &h, false).unwrap();
            (csv, model.params())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn pca_vqc_trains_on_toy_set() {
        let data = toy_set(20, 5);
        let mut model = toy_model(ModelKind::PcaVqc, 1, &data);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 5,
            optimizer: OptimizerConfig::rmsprop(0.01),
            seed: 1,
        };
        let h = train(&mut model, &data, &data, &cfg, |_| {}).unwrap();
        assert!(h.last().unwrap().train_acc >= 0.9);
    }

    #[test]
    fn mps_only_trains_on_toy_set() {
        let data = toy_set(10, 6);
        let mut model = toy_model(ModelKind::MpsOnly, 2, &data);
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 10,
            optimizer: OptimizerConfig::adam(1e-3),
            seed: 1,
        };
        let h = train(&mut model, &data, &data, &cfg, |_| {}).unwrap();
        assert_eq!(h.last().unwrap().train_acc, 1.0);
    }

    #[test]
    fn evaluate_counts_matches() {
        let data = toy_set(100, 7);
        let model = toy_model(ModelKind::MpsOnly, 1, &data);
        let acc = evaluate(&model, &data).unwrap();
        assert!((acc * 100.0 - (acc * 100.0).round()).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn constant_logits_predict_class_zero() {
        // an all-zero output site gives equal logits for every sample
        let data = toy_set(9, 8);
        let mut model = toy_model(ModelKind::MpsOnly, 1, &data);
        let n = model.num_params();
        model.set_params(&vec![0.0; n]).unwrap();
        let zeros = data.labels().iter().filter(|&&l| l == 0).count();
        assert_eq!(evaluate(&model, &data).unwrap(), zeros as f64 / 9.0);
    }

    #[test]
    fn mismatched_classes_rejected() {
        let data = toy_set(10, 9);
        let mut model = Model::init(&ModelConfig::new(ModelKind::MpsOnly, 2, 1), &data, 0).unwrap();
        let three = Dataset::from_parts(data.images().to_vec(), data.labels().to_vec(), vec![1, 2, 3]).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 5,
            optimizer: OptimizerConfig::adam(1e-3),
            seed: 0,
        };
        let before = model.clone();
        assert!(train(&mut model, &data, &three, &cfg, |_| {}).is_err());
        assert_eq!(model, before);
        assert!(evaluate(&model, &three).is_err());
    }

    #[test]
    fn csv_format() {
        let m = EpochMetrics {
            epoch: 1,
            train_loss: 0.5,
            train_acc: 0.75,
            test_acc: 0.8,
            seconds: 1.25,
        };
        let mut out = Vec::new();
        write_metrics_csv(&mut out, &[m], true).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "epoch,train_loss,train_acc,test_acc,seconds\n1,0.500000,0.750000,0.800000,1.250000\n"
        );
        let mut out = Vec::new();
        write_metrics_csv(&mut out, &[m], false).unwrap();
        assert!(String::from_utf8(out).unwrap().ends_with(",0.000000\n"));
    }
}
