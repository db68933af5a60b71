use crate::error::{invalid, Result};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `softmax(logits)` against `label`, with its gradient
/// `p − onehot(label)` with respect to the logits.
pub fn softmax_xent(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(invalid(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let top = argmax(logits);
    let max = logits[top];
    // ln Σ exp(z − max) with the max term split off keeps precision when
    // one logit dominates
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, z)| (z - max).exp())
        .sum();
    let loss = rest.ln_1p() - (logits[label] - max);
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Index of the largest logit; ties go to the lowest index.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, z) in logits.iter().enumerate() {
        if *z > logits[best] {
            best = i;
        }
    }
    best
}
