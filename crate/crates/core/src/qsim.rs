//! Exact statevector simulation of small qubit registers.
//!
//! Amplitudes are indexed by the bitstring `q₀q₁…q_{n−1}` with qubit 0 as the
//! most significant bit. Rotations follow `Ry(θ) = exp(−iθY/2)`,
//! `Rz(θ) = exp(−iθZ/2)` and `Rot(α, β, γ) = Rz(γ)·Ry(β)·Rz(α)`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    Ry(f64),
    Rz(f64),
    Rot(f64, f64, f64),
}

/// A single-qubit gate with its 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate1Q {
    kind: GateKind,
    matrix: [[Complex64; 2]; 2],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl Gate1Q {
    pub fn new(kind: GateKind) -> Self {
        let matrix = match kind {
            GateKind::H => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            GateKind::Ry(theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                [[c.into(), (-s).into()], [s.into(), c.into()]]
            }
            GateKind::Rz(theta) => {
                let phase = Complex64::from_polar(1.0, -theta / 2.0);
                [[phase, ZERO], [ZERO, phase.conj()]]
            }
            GateKind::Rot(alpha, beta, gamma) => {
                let rz_a = Gate1Q::rz(alpha).matrix;
                let ry_b = Gate1Q::ry(beta).matrix;
                let rz_g = Gate1Q::rz(gamma).matrix;
                mat_mul(&rz_g, &mat_mul(&ry_b, &rz_a))
            }
        };
        Self { kind, matrix }
    }

    pub fn h() -> Self {
        Self::new(GateKind::H)
    }

    pub fn ry(theta: f64) -> Self {
        Self::new(GateKind::Ry(theta))
    }

    pub fn rz(theta: f64) -> Self {
        Self::new(GateKind::Rz(theta))
    }

    pub fn rot(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::new(GateKind::Rot(alpha, beta, gamma))
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.matrix
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += m[k][i].conj() * m[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn init_zero(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(invalid(format!(
                "register size must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(invalid(format!("{len} amplitudes is not a qubit register")));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `Σ |c|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn apply_global_phase(&mut self, phi: f64) {
        let phase = Complex64::from_polar(1.0, phi);
        for a in &mut self.amps {
            *a *= phase;
        }
    }

    fn check_qubit(&self, index: usize) -> Result<()> {
        if index >= self.n_qubits {
            return Err(Error::QubitIndex {
                index,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn stride(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    pub fn apply_1q(&mut self, gate: &Gate1Q, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let stride = self.stride(qubit);
        let [[m00, m01], [m10, m11]] = gate.matrix;
        for block in (0..self.amps.len()).step_by(2 * stride) {
            for i in block..block + stride {
                let a0 = self.amps[i];
                let a1 = self.amps[i + stride];
                self.amps[i] = m00 * a0 + m01 * a1;
                self.amps[i + stride] = m10 * a0 + m11 * a1;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(invalid(format!("CNOT control and target are both qubit {control}")));
        }
        let c = self.stride(control);
        let t = self.stride(target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
        Ok(())
    }

    /// `⟨Z⟩` on one qubit: `Σ ±|c|²`, positive where the qubit's bit is 0.
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let stride = self.stride(qubit);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & stride == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `⟨Z⟩` on qubits `0..k` in one pass.
    pub fn expect_z_first(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.n_qubits {
            return Err(Error::QubitIndex {
                index: k.saturating_sub(1),
                n_qubits: self.n_qubits,
            });
        }
        let mut out = vec![0.0; k];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, o) in out.iter_mut().enumerate() {
                if i & self.stride(q) == 0 {
                    *o += p;
                } else {
                    *o -= p;
                }
            }
        }
        Ok(out)
    }
}
