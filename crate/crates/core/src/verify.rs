//! Self-check suites comparing the analytic machinery against independent
//! oracles: finite differences, brute-force contraction, unitarity and the
//! default parameter count.
//!
//! ```
//! let report = tnvqc::verify::run_all(&tnvqc::verify::VerifyOptions::default());
//! assert!(report.iter().all(|s| s.passed));
//! ```

use crate::error::Result;
use crate::mps::{feature_map, Mps, MpsInit};
use crate::qsim::{Gate1Q, StateVector};
use crate::rng::Rng;
use crate::tensor::{contract, Tensor};
use crate::train::{softmax_xent, Model};
use crate::vqc::{Vqc, VqcConfig, VqcParams};

/// Gradient of `⟨upstream, logits⟩` with respect to the circuit angles.
pub type ParamGradFn = fn(&Vqc, &[f64], &[f64]) -> Result<Vec<f64>>;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random instances per gradient suite.
    pub instances: usize,
    pub vqc_grad: ParamGradFn,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            instances: 20,
            vqc_grad: Vqc::grad_params,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &'static str, outcome: Result<String, String>) -> Self {
        match outcome {
            Ok(detail) => Self {
                name,
                passed: true,
                detail,
            },
            Err(detail) => Self {
                name,
                passed: false,
                detail,
            },
        }
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteResult> {
    vec![
        SuiteResult::new("vqc-gradient", vqc_gradient(opts)),
        SuiteResult::new("mps-gradient", mps_gradient(opts)),
        SuiteResult::new("hybrid-gradient", hybrid_gradient(opts)),
        SuiteResult::new("contraction", contraction(opts)),
        SuiteResult::new("unitarity", unitarity(opts)),
        SuiteResult::new("parameter-count", parameter_count()),
    ]
}

fn err(e: crate::Error) -> String {
    e.to_string()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vqc_gradient(opts: &VerifyOptions) -> Result<String, String> {
    const STEP: f64 = 1e-6;
    const PARAM_TOL: f64 = 1e-6;
    const INPUT_STEP: f64 = 1e-5;
    const INPUT_TOL: f64 = 1e-5;
    let mut rng = Rng::with_stream(opts.seed, 10);
    let mut worst: f64 = 0.0;
    for instance in 0..opts.instances {
        let k = 1 + instance % 4;
        let cfg = VqcConfig::with_classes(k).map_err(err)?;
        let vqc = Vqc::new(cfg, VqcParams::uniform(&cfg, std::f64::consts::PI, &mut rng)).map_err(err)?;
        let x: Vec<f64> = (0..cfg.n_qubits).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let u: Vec<f64> = (0..k).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let f = |v: &Vqc, x: &[f64]| -> Result<f64, String> { Ok(dot(&v.forward(x).map_err(err)?, &u)) };

        let analytic = (opts.vqc_grad)(&vqc, &x, &u).map_err(err)?;
        if analytic.len() != cfg.num_params() {
            return Err(format!("instance {instance}: {} gradient entries", analytic.len()));
        }
        for (i, a) in analytic.iter().enumerate() {
            let mut plus = vqc.clone();
            plus.params_mut().as_mut_slice()[i] += STEP;
            let mut minus = vqc.clone();
            minus.params_mut().as_mut_slice()[i] -= STEP;
            let fd = (f(&plus, &x)? - f(&minus, &x)?) / (2.0 * STEP);
            let diff = (a - fd).abs();
            worst = worst.max(diff);
            if diff > PARAM_TOL {
                return Err(format!(
                    "instance {instance}, angle {i}: shift rule {a:.9} vs finite difference {fd:.9}"
                ));
            }
        }

        let analytic = vqc.grad_inputs(&x, &u).map_err(err)?;
        for (i, a) in analytic.iter().enumerate() {
            let mut xp = x.clone();
            xp[i] += INPUT_STEP;
            let mut xm = x.clone();
            xm[i] -= INPUT_STEP;
            let fd = (f(&vqc, &xp)? - f(&vqc, &xm)?) / (2.0 * INPUT_STEP);
            if (a - fd).abs() > INPUT_TOL * fd.abs().max(1e-3) {
                return Err(format!(
                    "instance {instance}, input {i}: {a:.9} vs finite difference {fd:.9}"
                ));
            }
        }
    }
    Ok(format!("{} circuits, max |Δ| {worst:.1e}", opts.instances))
}

fn mps_gradient(opts: &VerifyOptions) -> Result<String, String> {
    const STEP: f64 = 1e-5;
    const TOL: f64 = 1e-5;
    let mut rng = Rng::with_stream(opts.seed, 11);
    let init = MpsInit {
        interior_noise: 0.5,
        output_noise: 0.5,
    };
    for instance in 0..opts.instances {
        let n = 2 + instance % 5;
        let chi = 1 + instance % 3;
        let d_out = 1 + instance % 4;
        let j = instance % n;
        let mut mps = Mps::init_with(n, chi, d_out, j, init, &mut rng).map_err(err)?;
        let pixels: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let phi = feature_map(&pixels).map_err(err)?;
        let u: Vec<f64> = (0..d_out).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let analytic = mps.backward(&phi, &u).map_err(err)?.flatten();
        let mut params = mps.params();
        for (i, a) in analytic.iter().enumerate() {
            let orig = params[i];
            params[i] = orig + STEP;
            mps.set_params(&params).map_err(err)?;
            let fp = dot(&mps.forward(&phi).map_err(err)?, &u);
            params[i] = orig - STEP;
            mps.set_params(&params).map_err(err)?;
            let fm = dot(&mps.forward(&phi).map_err(err)?, &u);
            params[i] = orig;
            let fd = (fp - fm) / (2.0 * STEP);
            if (a - fd).abs() > TOL * fd.abs().max(1e-3) {
                return Err(format!(
                    "chain {instance} (N={n}, χ={chi}), entry {i}: {a:.9} vs {fd:.9}"
                ));
            }
        }
        mps.set_params(&params).map_err(err)?;
    }
    Ok(format!("{} chains", opts.instances))
}

fn hybrid_gradient(opts: &VerifyOptions) -> Result<String, String> {
    const STEP: f64 = 1e-6;
    const TOL: f64 = 1e-4;
    let mut rng = Rng::with_stream(opts.seed, 12);
    let init = MpsInit {
        interior_noise: 0.3,
        output_noise: 0.5,
    };
    let mps = Mps::init_with(6, 2, 4, 3, init, &mut rng).map_err(err)?;
    let cfg = VqcConfig::with_classes(3).map_err(err)?;
    let vqc = Vqc::new(cfg, VqcParams::uniform(&cfg, std::f64::consts::PI, &mut rng)).map_err(err)?;
    let model = Model::mps_vqc(mps, vqc).map_err(err)?;
    let image: Vec<f64> = (0..6).map(|_| rng.uniform()).collect();
    let label = 1;

    let mut grad = vec![0.0; model.num_params()];
    model.loss_and_grad(&image, label, &mut grad).map_err(err)?;
    // the circuit part goes through the injectable gradient so that a broken
    // shift rule shows up here as well
    if let Model::MpsVqc { mps, vqc } = &model {
        let features = mps.forward(&feature_map(&image).map_err(err)?).map_err(err)?;
        let (_, upstream) = softmax_xent(&vqc.forward(&features).map_err(err)?, label).map_err(err)?;
        let circuit = (opts.vqc_grad)(vqc, &features, &upstream).map_err(err)?;
        let n = mps.num_params();
        grad[n..].copy_from_slice(&circuit);
    }

    let params = model.params();
    let loss = |p: &[f64]| -> Result<f64, String> {
        let mut m = model.clone();
        m.set_params(p).map_err(err)?;
        Ok(softmax_xent(&m.logits(&image).map_err(err)?, label).map_err(err)?.0)
    };
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus[i] += STEP;
        let mut minus = params.clone();
        minus[i] -= STEP;
        let fd = (loss(&plus)? - loss(&minus)?) / (2.0 * STEP);
        if (grad[i] - fd).abs() > TOL * fd.abs().max(grad[i].abs()) + 1e-8 {
            return Err(format!("parameter {i}: {:.9} vs {fd:.9}", grad[i]));
        }
    }
    Ok(format!("{} parameters on a 6-pixel chain", params.len()))
}

/// Reference contraction by enumerating every index assignment.
pub fn brute_force_contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Tensor {
    let free_a: Vec<usize> = (0..a.rank()).filter(|i| !pairs.iter().any(|p| p.0 == *i)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|i| !pairs.iter().any(|p| p.1 == *i)).collect();
    let mut out_shape: Vec<usize> = free_a.iter().map(|&i| a.shape()[i]).collect();
    out_shape.extend(free_b.iter().map(|&i| b.shape()[i]));
    let summed: Vec<usize> = pairs.iter().map(|p| a.shape()[p.0]).collect();
    Tensor::from_fn(out_shape, |out_idx| {
        let mut total = 0.0;
        let mut s = vec![0; summed.len()];
        let count: usize = summed.iter().product();
        for _ in 0..count {
            let mut ia = vec![0; a.rank()];
            let mut ib = vec![0; b.rank()];
            for (k, &ax) in free_a.iter().enumerate() {
                ia[ax] = out_idx[k];
            }
            for (k, &ax) in free_b.iter().enumerate() {
                ib[ax] = out_idx[free_a.len() + k];
            }
            for (k, &(pa, pb)) in pairs.iter().enumerate() {
                ia[pa] = s[k];
                ib[pb] = s[k];
            }
            total += a.get(&ia).expect("in range") * b.get(&ib).expect("in range");
            for k in (0..s.len()).rev() {
                s[k] += 1;
                if s[k] < summed[k] {
                    break;
                }
                s[k] = 0;
            }
        }
        total
    })
    .expect("valid shape")
}

fn contraction(opts: &VerifyOptions) -> Result<String, String> {
    let mut rng = Rng::with_stream(opts.seed, 13);
    let mut checked = 0;
    for instance in 0..opts.instances {
        let ra = 1 + instance % 4;
        let rb = 1 + (instance / 2) % 4;
        let n_pairs = instance % (ra.min(rb) + 1);
        let mut sa: Vec<usize> = (0..ra).map(|_| 1 + (rng.uniform() * 3.0) as usize).collect();
        let sb: Vec<usize> = (0..rb).map(|_| 1 + (rng.uniform() * 3.0) as usize).collect();
        let pairs: Vec<(usize, usize)> = (0..n_pairs).map(|k| (k, rb - 1 - k)).collect();
        for &(pa, pb) in &pairs {
            sa[pa] = sb[pb];
        }
        let a = Tensor::random_init(sa, 1.0, &mut rng).map_err(err)?;
        let b = Tensor::random_init(sb, 1.0, &mut rng).map_err(err)?;
        let fast = contract(&a, &b, &pairs).map_err(err)?;
        let slow = brute_force_contract(&a, &b, &pairs);
        if fast.shape() != slow.shape() || fast.max_abs_diff(&slow) > 1e-12 {
            return Err(format!("instance {instance}: contraction over {pairs:?} disagrees"));
        }
        checked += 1;
    }
    Ok(format!("{checked} random contractions"))
}

fn unitarity(opts: &VerifyOptions) -> Result<String, String> {
    const TOL: f64 = 1e-12;
    let mut rng = Rng::with_stream(opts.seed, 14);
    let mut applications = 0;
    for circuit in 0..opts.instances {
        let n = 1 + circuit % 5;
        let mut state = StateVector::init_zero(n).map_err(err)?;
        for step in 0..50 {
            let q = (rng.uniform() * n as f64) as usize % n;
            let mut angle = || rng.uniform_in(-6.3, 6.3);
            let gate = match step % 4 {
                0 => Gate1Q::h(),
                1 => Gate1Q::ry(angle()),
                2 => Gate1Q::rz(angle()),
                _ => Gate1Q::rot(angle(), angle(), angle()),
            };
            if gate.unitarity_error() > TOL {
                return Err(format!("{:?} is not unitary", gate.kind()));
            }
            state.apply_1q(&gate, q).map_err(err)?;
            if n > 1 {
                state.apply_cnot(q, (q + 1) % n).map_err(err)?;
                applications += 1;
            }
            applications += 1;
            let drift = (state.norm_sqr() - 1.0).abs();
            if drift > TOL {
                return Err(format!("norm drifted by {drift:.1e} on {n} qubits"));
            }
        }
    }
    Ok(format!("{applications} gate applications"))
}

fn parameter_count() -> Result<String, String> {
    let cfg = VqcConfig::with_classes(2).map_err(err)?;
    let vqc = Vqc::new(cfg, VqcParams::zeros(&cfg)).map_err(err)?;
    let n = vqc.config().num_params();
    if n != 48 || vqc.params().as_slice().len() != 48 {
        return Err(format!("default circuit has {n} angles, expected 48"));
    }
    Ok("4 blocks × 4 qubits × 3 = 48".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flipped_shift(vqc: &Vqc, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        // ½[f(θ − π/2) − f(θ + π/2)]: the shift rule with its sign inverted
        Ok(vqc.grad_params(x, u)?.into_iter().map(|g| -g).collect())
    }

    #[test]
    fn pristine_build_passes() {
        for suite in run_all(&VerifyOptions::default()) {
            assert!(suite.passed, "{}: {}", suite.name, suite.detail);
        }
    }

    #[test]
    fn sign_error_in_shift_rule_is_caught() {
        let opts = VerifyOptions {
            vqc_grad: flipped_shift,
            ..VerifyOptions::default()
        };
        let report = run_all(&opts);
        let failed: Vec<&str> = report.iter().filter(|s| !s.passed).map(|s| s.name).collect();
        assert!(failed.contains(&"vqc-gradient"), "{report:?}");
        assert!(failed.contains(&"hybrid-gradient"));
        assert!(!failed.contains(&"mps-gradient"));
    }
}
