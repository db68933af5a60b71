//! First-order optimizers over a flat parameter vector.
//!
//! Both follow the common deep-learning convention with `ε` added outside the
//! square root:
//!
//! - Adam: `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`,
//!   `θ ← θ − lr·m̂/(√v̂ + ε)` with bias-corrected `m̂`, `v̂`.
//! - RMSProp: `s ← αs + (1−α)g²`, `θ ← θ − lr·g/(√s + ε)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, shape, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    RmsProp,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::RmsProp => "rmsprop",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            other => Err(invalid(format!(
                "unknown optimizer `{other}` (expected adam or rmsprop)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// RMSProp smoothing constant.
    pub alpha: f64,
    pub eps: f64,
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            alpha: 0.99,
            eps: 1e-8,
        }
    }

    pub fn rmsprop(lr: f64) -> Self {
        Self {
            kind: OptimizerKind::RmsProp,
            ..Self::adam(lr)
        }
    }

    pub fn with_kind(kind: OptimizerKind, lr: f64) -> Self {
        match kind {
            OptimizerKind::Adam => Self::adam(lr),
            OptimizerKind::RmsProp => Self::rmsprop(lr),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(invalid(format!(
                "learning rate must be finite and >= 0, got {}",
                self.lr
            )));
        }
        if !unit(self.beta1) || !unit(self.beta2) || !unit(self.alpha) {
            return Err(invalid("decay rates must lie in [0, 1)"));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(invalid(format!("epsilon must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Optimizer state, one moment slot per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    config: OptimizerConfig,
    /// First moment (Adam only).
    m: Vec<f64>,
    /// Second moment for Adam, running square average for RMSProp.
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, n_params: usize) -> Result<Self> {
        config.validate()?;
        let m = match config.kind {
            OptimizerKind::Adam => vec![0.0; n_params],
            OptimizerKind::RmsProp => Vec::new(),
        };
        Ok(Self {
            config,
            m,
            v: vec![0.0; n_params],
            t: 0,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    /// Number of steps taken.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.v.len() || grads.len() != self.v.len() {
            return Err(shape(format!(
                "optimizer holds {} slots, got {} parameters and {} gradients",
                self.v.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let c = self.config;
        match c.kind {
            OptimizerKind::Adam => {
                let bc1 = 1.0 - c.beta1.powf(self.t as f64);
                let bc2 = 1.0 - c.beta2.powf(self.t as f64);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
                }
            }
            OptimizerKind::RmsProp => {
                for ((p, g), s) in params.iter_mut().zip(grads).zip(&mut self.v) {
                    *s = c.alpha * *s + (1.0 - c.alpha) * g * g;
                    *p -= c.lr * g / (s.sqrt() + c.eps);
                }
            }
        }
        Ok(())
    }
}
