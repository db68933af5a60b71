//! Variational quantum classifier.
//!
//! The circuit has three parts:
//!
//! 1. encoding: on every qubit `i`, `H`, then `Ry(arctan xᵢ)`, then
//!    `Rz(arctan xᵢ²)`;
//! 2. `n_blocks` variational blocks, each a CNOT ring `0→1, 1→2, …, (n−1)→0`
//!    followed by `Rot(α, β, γ) = Rz(γ)·Ry(β)·Rz(α)` on every qubit;
//! 3. measurement of `⟨Z⟩` on the first `k` qubits, which are the logits.
//!
//! Every angle, trainable or input-derived, drives a single Pauli rotation,
//! so its derivative is exactly `½[f(θ + π/2) − f(θ − π/2)]`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{invalid, shape, Result};
use crate::qsim::{Gate1Q, StateVector};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VqcConfig {
    pub n_qubits: usize,
    pub n_blocks: usize,
    /// Number of measured qubits, one per class.
    pub k: usize,
}

impl VqcConfig {
    pub const DEFAULT_QUBITS: usize = 4;
    pub const DEFAULT_BLOCKS: usize = 4;

    pub fn new(n_qubits: usize, n_blocks: usize, k: usize) -> Result<Self> {
        let cfg = Self { n_qubits, n_blocks, k };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Four qubits, four blocks, `k` measured qubits.
    pub fn with_classes(k: usize) -> Result<Self> {
        Self::new(Self::DEFAULT_QUBITS, Self::DEFAULT_BLOCKS, k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > crate::qsim::MAX_QUBITS {
            return Err(invalid(format!("unsupported qubit count {}", self.n_qubits)));
        }
        if self.n_blocks == 0 {
            return Err(invalid("a circuit needs at least one variational block"));
        }
        if self.k == 0 || self.k > self.n_qubits {
            return Err(invalid(format!(
                "cannot measure {} of {} qubits",
                self.k, self.n_qubits
            )));
        }
        Ok(())
    }

    /// Three angles per qubit per block.
    pub fn num_params(&self) -> usize {
        self.n_blocks * self.n_qubits * 3
    }
}

/// Trainable angles laid out `[block][qubit][α, β, γ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcParams {
    angles: Vec<f64>,
}

impl VqcParams {
    pub fn zeros(cfg: &VqcConfig) -> Self {
        Self {
            angles: vec![0.0; cfg.num_params()],
        }
    }

    pub fn from_vec(cfg: &VqcConfig, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != cfg.num_params() {
            return Err(shape(format!(
                "{} angles for a circuit with {} parameters",
                angles.len(),
                cfg.num_params()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(invalid("circuit angles must be finite"));
        }
        Ok(Self { angles })
    }

    /// Zero-mean angles with standard deviation `scale`.
    pub fn random(cfg: &VqcConfig, scale: f64, rng: &mut Rng) -> Self {
        Self {
            angles: (0..cfg.num_params()).map(|_| rng.centered(scale)).collect(),
        }
    }

    /// Angles uniform on `[−half_width, half_width)`.
    pub fn uniform(cfg: &VqcConfig, half_width: f64, rng: &mut Rng) -> Self {
        Self {
            angles: (0..cfg.num_params())
                .map(|_| rng.uniform_in(-half_width, half_width))
                .collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    pub fn index(cfg: &VqcConfig, block: usize, qubit: usize, which: usize) -> usize {
        (block * cfg.n_qubits + qubit) * 3 + which
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Angle {
    EncodeY(usize),
    EncodeZ(usize),
    Param(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    H(usize),
    Ry(usize, Angle),
    Rz(usize, Angle),
    Cnot(usize, usize),
}

/// Derivatives of `⟨upstream, logits⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcGradients {
    pub logits: Vec<f64>,
    pub params: Vec<f64>,
    pub inputs: Vec<f64>,
}

/// A configured circuit together with its trainable angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Vqc {
    cfg: VqcConfig,
    params: VqcParams,
    ops: Vec<Op>,
}

impl Vqc {
    pub fn new(cfg: VqcConfig, params: VqcParams) -> Result<Self> {
        cfg.validate()?;
        if params.angles.len() != cfg.num_params() {
            return Err(shape(format!(
                "{} angles for a circuit with {} parameters",
                params.angles.len(),
                cfg.num_params()
            )));
        }
        Ok(Self {
            ops: build_ops(&cfg),
            cfg,
            params,
        })
    }

    pub fn config(&self) -> &VqcConfig {
        &self.cfg
    }

    pub fn params(&self) -> &VqcParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut VqcParams {
        &mut self.params
    }

    fn check_inputs(&self, x: &[f64]) -> Result<Vec<[f64; 2]>> {
        if x.len() != self.cfg.n_qubits {
            return Err(shape(format!(
                "circuit takes {} inputs, got {}",
                self.cfg.n_qubits,
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("input {i} is not finite: {}", x[i])));
        }
        Ok(x.iter().map(|&v| [v.atan(), (v * v).atan()]).collect())
    }

    fn angle(&self, angle: Angle, enc: &[[f64; 2]]) -> f64 {
        match angle {
            Angle::EncodeY(q) => enc[q][0],
            Angle::EncodeZ(q) => enc[q][1],
            Angle::Param(i) => self.params.angles[i],
        }
    }

    fn gate(&self, op: Op, enc: &[[f64; 2]], shift: f64) -> Option<Gate1Q> {
        match op {
            Op::H(_) => Some(Gate1Q::h()),
            Op::Ry(_, a) => Some(Gate1Q::ry(self.angle(a, enc) + shift)),
            Op::Rz(_, a) => Some(Gate1Q::rz(self.angle(a, enc) + shift)),
            Op::Cnot(..) => None,
        }
    }

    fn apply_gate(state: &mut StateVector, op: Op, gate: Option<&Gate1Q>) {
        // indices come from build_ops and are always in range
        let r = match (op, gate) {
            (Op::Cnot(c, t), _) => state.apply_cnot(c, t),
            (Op::H(q) | Op::Ry(q, _) | Op::Rz(q, _), Some(g)) => state.apply_1q(g, q),
            _ => unreachable!("single-qubit op without a gate"),
        };
        debug_assert!(r.is_ok());
    }

    fn apply(&self, state: &mut StateVector, op: Op, enc: &[[f64; 2]], shift: f64) {
        Self::apply_gate(state, op, self.gate(op, enc, shift).as_ref());
    }

    fn run_from(&self, mut state: StateVector, ops: &[Op], enc: &[[f64; 2]]) -> StateVector {
        for &op in ops {
            self.apply(&mut state, op, enc, 0.0);
        }
        state
    }

    fn encode_angles(&self, enc: &[[f64; 2]]) -> StateVector {
        let state = StateVector::init_zero(self.cfg.n_qubits).expect("validated qubit count");
        self.run_from(state, &self.ops[..self.encoding_len()], enc)
    }

    fn encoding_len(&self) -> usize {
        3 * self.cfg.n_qubits
    }

    /// The state after the encoding layer.
    pub fn encode(&self, x: &[f64]) -> Result<StateVector> {
        let enc = self.check_inputs(x)?;
        Ok(self.encode_angles(&enc))
    }

    /// The final state before measurement.
    pub fn state(&self, x: &[f64]) -> Result<StateVector> {
        let enc = self.check_inputs(x)?;
        let state = StateVector::init_zero(self.cfg.n_qubits)?;
        Ok(self.run_from(state, &self.ops, &enc))
    }

    /// `(⟨Z₀⟩, …, ⟨Z_{k−1}⟩)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.state(x)?.expect_z_first(self.cfg.k)
    }

    fn weighted_z(&self, state: &StateVector, upstream: &[f64]) -> f64 {
        state
            .expect_z_first(self.cfg.k)
            .expect("k validated")
            .iter()
            .zip(upstream)
            .map(|(z, u)| z * u)
            .sum()
    }

    /// Shift-rule derivative of `⟨upstream, logits⟩` for every rotation in
    /// the op list (zero for `H` and CNOT), plus the unshifted logits.
    fn shift_derivatives(&self, x: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let enc = self.check_inputs(x)?;
        if upstream.len() != self.cfg.k {
            return Err(shape(format!(
                "upstream has {} entries, circuit has {} logits",
                upstream.len(),
                self.cfg.k
            )));
        }
        let gates: Vec<Option<Gate1Q>> = self.ops.iter().map(|&op| self.gate(op, &enc, 0.0)).collect();
        // prefix[i] is the state before op i
        let mut prefix = Vec::with_capacity(self.ops.len() + 1);
        let mut state = StateVector::init_zero(self.cfg.n_qubits)?;
        prefix.push(state.clone());
        for (&op, gate) in self.ops.iter().zip(&gates) {
            Self::apply_gate(&mut state, op, gate.as_ref());
            prefix.push(state.clone());
        }
        let logits = state.expect_z_first(self.cfg.k)?;

        let mut derivs = vec![0.0; self.ops.len()];
        if upstream.iter().all(|&u| u == 0.0) {
            return Ok((logits, derivs));
        }
        for (i, &op) in self.ops.iter().enumerate() {
            if !matches!(op, Op::Ry(..) | Op::Rz(..)) {
                continue;
            }
            let shifted = |shift: f64| {
                let mut s = prefix[i].clone();
                self.apply(&mut s, op, &enc, shift);
                for (&later, gate) in self.ops[i + 1..].iter().zip(&gates[i + 1..]) {
                    Self::apply_gate(&mut s, later, gate.as_ref());
                }
                self.weighted_z(&s, upstream)
            };
            derivs[i] = 0.5 * (shifted(FRAC_PI_2) - shifted(-FRAC_PI_2));
        }
        Ok((logits, derivs))
    }

    /// Gradient of `⟨upstream, logits⟩` with respect to every trainable angle.
    pub fn grad_params(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.gradients(x, upstream).map(|g| g.params)
    }

    /// Gradient of `⟨upstream, logits⟩` with respect to the circuit inputs:
    /// the shift-rule derivatives of both encoding angles of each qubit,
    /// chained through `d arctan(x)/dx = 1/(1+x²)` and
    /// `d arctan(x²)/dx = 2x/(1+x⁴)`.
    pub fn grad_inputs(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.gradients(x, upstream).map(|g| g.inputs)
    }

    /// Logits and both gradients from one set of cached prefix states.
    pub fn gradients(&self, x: &[f64], upstream: &[f64]) -> Result<VqcGradients> {
        let (logits, derivs) = self.shift_derivatives(x, upstream)?;
        let mut params = vec![0.0; self.cfg.num_params()];
        let mut g_y = vec![0.0; self.cfg.n_qubits];
        let mut g_z = vec![0.0; self.cfg.n_qubits];
        for (op, d) in self.ops.iter().zip(derivs) {
            match *op {
                Op::Ry(_, Angle::Param(i)) | Op::Rz(_, Angle::Param(i)) => params[i] += d,
                Op::Ry(_, Angle::EncodeY(q)) => g_y[q] += d,
                Op::Rz(_, Angle::EncodeZ(q)) => g_z[q] += d,
                _ => {}
            }
        }
        let inputs = x
            .iter()
            .enumerate()
            .map(|(q, &v)| g_y[q] / (1.0 + v * v) + g_z[q] * 2.0 * v / (1.0 + v.powi(4)))
            .collect();
        Ok(VqcGradients { logits, params, inputs })
    }
}

fn build_ops(cfg: &VqcConfig) -> Vec<Op> {
    let n = cfg.n_qubits;
    let mut ops = Vec::new();
    for q in 0..n {
        ops.push(Op::H(q));
        ops.push(Op::Ry(q, Angle::EncodeY(q)));
        ops.push(Op::Rz(q, Angle::EncodeZ(q)));
    }
    for block in 0..cfg.n_blocks {
        if n > 1 {
            for q in 0..n {
                ops.push(Op::Cnot(q, (q + 1) % n));
            }
        }
        for q in 0..n {
            let base = VqcParams::index(cfg, block, q, 0);
            ops.push(Op::Rz(q, Angle::Param(base)));
            ops.push(Op::Ry(q, Angle::Param(base + 1)));
            ops.push(Op::Rz(q, Angle::Param(base + 2)));
        }
    }
    ops
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn random_vqc(cfg: VqcConfig, seed: u64) -> Vqc {
        Vqc::new(cfg, VqcParams::random(&cfg, 1.5, &mut Rng::new(seed))).unwrap()
    }

    fn random_vec(n: usize, scale: f64, rng: &mut Rng) -> Vec<f64> {
        (0..n).map(|_| rng.centered(scale)).collect()
    }

    fn objective(vqc: &Vqc, x: &[f64], upstream: &[f64]) -> f64 {
        vqc.forward(x).unwrap().iter().zip(upstream).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn paper_configuration_has_48_parameters() {
        assert_eq!(VqcConfig::with_classes(2).unwrap().num_params(), 48);
        assert_eq!(VqcConfig::with_classes(3).unwrap().num_params(), 48);
    }

    #[test]
    fn config_validation() {
        assert!(VqcConfig::new(4, 4, 5).is_err());
        assert!(VqcConfig::new(4, 0, 2).is_err());
        assert!(VqcConfig::new(4, 4, 0).is_err());
    }

    #[test]
    fn zero_input_encodes_uniform_superposition() {
        let cfg = VqcConfig::with_classes(2).unwrap();
        let vqc = Vqc::new(cfg, VqcParams::zeros(&cfg)).unwrap();
        let s = vqc.encode(&[0.0; 4]).unwrap();
        for a in s.amplitudes() {
            assert!((a.re - 0.25).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
        for q in 0..4 {
            assert!(s.expect_z(q).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn encoding_one_on_first_qubit() {
        let cfg = VqcConfig::with_classes(2).unwrap();
        let vqc = Vqc::new(cfg, VqcParams::zeros(&cfg)).unwrap();
        let s = vqc.encode(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        // 2×2 oracle: Ry(π/4)·H|0⟩, then ⟨Z⟩ = |a0|² − |a1|²
        let h = Gate1Q::h();
        let ry = Gate1Q::ry(FRAC_PI_4);
        let v0 = h.matrix()[0][0];
        let v1 = h.matrix()[1][0];
        let a0 = ry.matrix()[0][0] * v0 + ry.matrix()[0][1] * v1;
        let a1 = ry.matrix()[1][0] * v0 + ry.matrix()[1][1] * v1;
        let expected = a0.norm_sqr() - a1.norm_sqr();
        assert!((expected + FRAC_PI_4.sin()).abs() < 1e-15);
        assert!((s.expect_z(0).unwrap() - expected).abs() < 1e-12);
        assert!((s.expect_z(0).unwrap() + 0.70711).abs() < 1e-5);
    }

    #[test]
    fn encoding_preserves_norm() {
        let cfg = VqcConfig::with_classes(3).unwrap();
        let vqc = random_vqc(cfg, 1);
        let mut rng = Rng::new(2);
        for _ in 0..20 {
            let x = random_vec(4, 3.0, &mut rng);
            assert!((vqc.encode(&x).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn encoding_rejects_bad_inputs() {
        let cfg = VqcConfig::with_classes(2).unwrap();
        let vqc = random_vqc(cfg, 1);
        assert!(vqc.encode(&[0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(vqc.forward(&[0.0; 3]).is_err());
        assert!(vqc.grad_params(&[0.0; 4], &[1.0]).is_err());
    }

    #[test]
    fn zero_circuit_zero_logits() {
        let cfg = VqcConfig::with_classes(3).unwrap();
        let vqc = Vqc::new(cfg, VqcParams::zeros(&cfg)).unwrap();
        for z in vqc.forward(&[0.0; 4]).unwrap() {
            assert!(z.abs() < 1e-15);
        }
    }

    #[test]
    fn logits_are_bounded() {
        let cfg = VqcConfig::with_classes(4).unwrap();
        let mut rng = Rng::new(3);
        for seed in 0..20 {
            let vqc = random_vqc(cfg, seed);
            for z in vqc.forward(&random_vec(4, 5.0, &mut rng)).unwrap() {
                assert!(z.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn single_qubit_closed_form() {
        let cfg = VqcConfig::new(1, 1, 1).unwrap();
        let params = VqcParams::from_vec(&cfg, vec![0.0, PI / 6.0, 0.0]).unwrap();
        let vqc = Vqc::new(cfg, params).unwrap();
        let z = vqc.forward(&[0.0]).unwrap()[0];
        assert!((z + 0.5).abs() < 1e-12);
    }

    #[test]
    fn shift_rule_on_single_ry() {
        // Ry(θ)|0⟩ has ⟨Z⟩ = cos θ, derivative −sin θ
        let f = |theta: f64| {
            let mut s = StateVector::init_zero(1).unwrap();
            s.apply_1q(&Gate1Q::ry(theta), 0).unwrap();
            s.expect_z(0).unwrap()
        };
        let theta = PI / 3.0;
        let shift = 0.5 * (f(theta + FRAC_PI_2) - f(theta - FRAC_PI_2));
        assert!((shift + theta.sin()).abs() < 1e-12);
        assert!((shift + 0.86603).abs() < 1e-5);
    }

    #[test]
    fn grad_params_single_qubit_closed_form() {
        // x = 0 leaves |+⟩; logit = −sin β, d/dβ = −cos β
        let cfg = VqcConfig::new(1, 1, 1).unwrap();
        let beta = 0.4;
        let vqc = Vqc::new(cfg, VqcParams::from_vec(&cfg, vec![0.0, beta, 0.0]).unwrap()).unwrap();
        let g = vqc.grad_params(&[0.0], &[1.0]).unwrap();
        assert!((g[1] + beta.cos()).abs() < 1e-12);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let cfg = VqcConfig::with_classes(3).unwrap();
        let vqc = random_vqc(cfg, 4);
        let g = vqc.gradients(&[0.3, -0.2, 1.0, 2.0], &[0.0; 3]).unwrap();
        assert!(g.params.iter().chain(&g.inputs).all(|&v| v == 0.0));
    }

    #[test]
    fn grad_params_match_finite_differences() {
        let cfg = VqcConfig::with_classes(3).unwrap();
        let mut rng = Rng::new(8);
        for seed in 0..5 {
            let vqc = random_vqc(cfg, seed);
            let x = random_vec(4, 2.0, &mut rng);
            let u = random_vec(3, 1.0, &mut rng);
            let g = vqc.grad_params(&x, &u).unwrap();
            let h = 1e-6;
            for i in 0..cfg.num_params() {
                let mut plus = vqc.clone();
                plus.params_mut().as_mut_slice()[i] += h;
                let mut minus = vqc.clone();
                minus.params_mut().as_mut_slice()[i] -= h;
                let fd = (objective(&plus, &x, &u) - objective(&minus, &x, &u)) / (2.0 * h);
                assert!((g[i] - fd).abs() < 1e-6, "param {i}: {} vs {fd}", g[i]);
            }
        }
    }

    #[test]
    fn grad_inputs_match_finite_differences() {
        let cfg = VqcConfig::with_classes(2).unwrap();
        let mut rng = Rng::new(9);
        for seed in 0..5 {
            let vqc = random_vqc(cfg, seed);
            let x = random_vec(4, 2.0, &mut rng);
            let u = random_vec(2, 1.0, &mut rng);
            let g = vqc.grad_inputs(&x, &u).unwrap();
            let h = 1e-5;
            for i in 0..4 {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let fd = (objective(&vqc, &xp, &u) - objective(&vqc, &xm, &u)) / (2.0 * h);
                assert!(
                    (g[i] - fd).abs() <= 1e-5 * fd.abs().max(1e-4),
                    "input {i}: {} vs {fd}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn input_gradient_at_zero_is_ry_term_only() {
        let cfg = VqcConfig::with_classes(2).unwrap();
        let vqc = random_vqc(cfg, 12);
        let x = [0.0, 0.5, -0.7, 1.2];
        let u = [0.3, -0.8];
        let g = vqc.grad_inputs(&x, &u).unwrap();
        // the Rz encoding angle arctan(x²) has zero slope at x = 0, so only
        // the Ry angle (slope 1) contributes
        let h = 1e-6;
        let f = |theta_y: f64| {
            let mut s = StateVector::init_zero(4).unwrap();
            let mut enc: Vec<[f64; 2]> = x.iter().map(|&v: &f64| [v.atan(), (v * v).atan()]).collect();
            enc[0][0] = theta_y;
            for op in &vqc.ops {
                vqc.apply(&mut s, *op, &enc, 0.0);
            }
            vqc.weighted_z(&s, &u)
        };
        let d_theta = (f(h) - f(-h)) / (2.0 * h);
        assert!((g[0] - d_theta).abs() < 1e-8);
    }

    #[test]
    fn forward_is_periodic_in_every_angle() {
        let cfg = VqcConfig::with_classes(2).unwrap();
        let vqc = random_vqc(cfg, 5);
        let x = [0.1, 0.9, -1.3, 0.4];
        let base = vqc.forward(&x).unwrap();
        for i in 0..cfg.num_params() {
            let mut shifted = vqc.clone();
            shifted.params_mut().as_mut_slice()[i] += 2.0 * PI;
            let out = shifted.forward(&x).unwrap();
            for (a, b) in base.iter().zip(&out) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn logits_ignore_global_phase() {
        let cfg = VqcConfig::with_classes(3).unwrap();
        let vqc = random_vqc(cfg, 6);
        let x = [0.5, -0.5, 2.0, 0.0];
        let mut s = vqc.state(&x).unwrap();
        let before = s.expect_z_first(3).unwrap();
        s.apply_global_phase(1.234);
        let after = s.expect_z_first(3).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn circuit_layout() {
        let cfg = VqcConfig::with_classes(2).unwrap();
        let ops = build_ops(&cfg);
        let cnots: Vec<(usize, usize)> = ops
            .iter()
            .filter_map(|op| match op {
                Op::Cnot(c, t) => Some((*c, *t)),
                _ => None,
            })
            .take(4)
            .collect();
        assert_eq!(cnots, vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        let rotations = ops
            .iter()
            .filter(|op| matches!(op, Op::Ry(_, Angle::Param(_)) | Op::Rz(_, Angle::Param(_))))
            .count();
        assert_eq!(rotations, 48);
    }
}
