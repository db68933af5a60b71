//! Principal component analysis for the classical baseline extractor.
//!
//! The covariance (`ddof = 1`) is diagonalized with a cyclic Jacobi sweep,
//! which is deterministic for a given input. Each component is signed so that
//! its largest-magnitude entry is positive; ties go to the lowest index.

use crate::error::{invalid, shape, Result};

/// Sweeps stop once the off-diagonal Frobenius norm falls below this
/// fraction of the full Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    dim: usize,
    mean: Vec<f64>,
    /// `n_components × dim`, row-major.
    components: Vec<f64>,
    explained_variance: Vec<f64>,
}

/// Eigenvalues in descending order with matching unit eigenvectors as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `n × n`, row `i` is the eigenvector for `values[i]`.
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

/// Diagonalizes the symmetric `n × n` row-major matrix `a` by cyclic Jacobi
/// rotations.
pub fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> Result<SymmetricEigen> {
    if n == 0 || a.len() != n * n {
        return Err(shape(format!("{} entries is not a square matrix of side {n}", a.len())));
    }
    for i in 0..n {
        for j in 0..i {
            let (x, y) = (a[i * n + j], a[j * n + i]);
            if (x - y).abs() > 1e-12 * x.abs().max(y.abs()).max(1.0) {
                return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    // vt holds eigenvectors as rows, so both rotation updates are contiguous
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_TOLERANCE * norm;
    let skip = target / n as f64;

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS && off_diagonal_norm(&a, n) > target {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, n, p, q, c, s, t, apq);
                rotate_rows(&mut vt, n, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        vectors.extend_from_slice(&vt[i * n..(i + 1) * n]);
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    acc.sqrt()
}

#[allow(clippy::too_many_arguments)]
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64, t: f64, apq: f64) {
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[p * n + k];
        let akq = a[q * n + k];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        a[p * n + k] = new_p;
        a[k * n + p] = new_p;
        a[q * n + k] = new_q;
        a[k * n + q] = new_q;
    }
    a[p * n + p] -= t * apq;
    a[q * n + q] += t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
}

fn rotate_rows(v: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = v.split_at_mut(q * n);
    let row_p = &mut head[p * n..(p + 1) * n];
    let row_q = &mut tail[..n];
    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let (vp, vq) = (*x, *y);
        *x = c * vp - s * vq;
        *y = s * vp + c * vq;
    }
}

/// Flips `v` so its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

impl PcaModel {
    /// Fits `n_components` principal axes to `rows` samples stored
    /// row-major in `data`, each of length `dim`.
    pub fn fit(data: &[f64], dim: usize, n_components: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(shape(format!("{} values do not form rows of length {dim}", data.len())));
        }
        if n_components == 0 || n_components > dim {
            return Err(invalid(format!(
                "cannot extract {n_components} components from {dim} dimensions"
            )));
        }
        let m = data.len() / dim;
        if m <= n_components {
            return Err(invalid(format!(
                "{m} samples are too few to fit {n_components} components"
            )));
        }

        let mut mean = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for (acc, x) in mean.iter_mut().zip(row) {
                *acc += x;
            }
        }
        for x in &mut mean {
            *x /= m as f64;
        }

        // upper triangle of Σ (x − μ)(x − μ)ᵀ, then mirrored
        let mut cov = vec![0.0; dim * dim];
        let mut centered = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for ((c, x), mu) in centered.iter_mut().zip(row).zip(&mean) {
                *c = x - mu;
            }
            for i in 0..dim {
                let ci = centered[i];
                if ci == 0.0 {
                    continue;
                }
                let out = &mut cov[i * dim + i..(i + 1) * dim];
                for (o, cj) in out.iter_mut().zip(&centered[i..]) {
                    *o += ci * cj;
                }
            }
        }
        let scale = 1.0 / (m - 1) as f64;
        for i in 0..dim {
            for j in i..dim {
                let v = cov[i * dim + j] * scale;
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }

        let eigen = jacobi_eigen(cov, dim)?;
        let mut components = eigen.vectors[..n_components * dim].to_vec();
        for row in components.chunks_exact_mut(dim) {
            fix_sign(row);
        }
        let explained_variance = eigen.values[..n_components].iter().map(|v| v.max(0.0)).collect();
        Ok(Self {
            dim,
            mean,
            components,
            explained_variance,
        })
    }

    /// Rebuilds a model from stored parts.
    pub fn from_parts(mean: Vec<f64>, components: Vec<f64>, explained_variance: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        let k = explained_variance.len();
        if dim == 0 || k == 0 || components.len() != k * dim {
            return Err(shape(format!(
                "{} component entries for {k} components of dimension {dim}",
                components.len()
            )));
        }
        Ok(Self {
            dim,
            mean,
            components,
            explained_variance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_components(&self) -> usize {
        self.explained_variance.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major `n_components × dim`.
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.dim..(i + 1) * self.dim]
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// `components · (image − mean)`.
    pub fn transform(&self, image: &[f64]) -> Result<Vec<f64>> {
        if image.len() != self.dim {
            return Err(shape(format!("model expects {} values, got {}", self.dim, image.len())));
        }
        Ok(self
            .components
            .chunks_exact(self.dim)
            .map(|row| {
                row.iter()
                    .zip(image)
                    .zip(&self.mean)
                    .map(|((c, x), mu)| c * (x - mu))
                    .sum()
            })
            .collect())
    }
}
