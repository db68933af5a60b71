//! Matrix-product-state feature extractor.
//!
//! An image of `N` pixels is embedded as the product state
//! `⊗ᵢ (xᵢ, 1 − xᵢ)` and contracted against a chain of `N` site tensors. One
//! site, the *output site*, carries an extra open index of extent `d_out`;
//! the full contraction leaves that index open and yields a `d_out`-vector.
//!
//! Site tensors are stored row-major with the physical axis first:
//!
//! | site                 | shape                      |
//! |----------------------|----------------------------|
//! | first                | `[2, χ]`                   |
//! | interior             | `[2, χ, χ]`                |
//! | last                 | `[2, χ]`                   |
//! | output (interior)    | `[2, χ, χ, d_out]`         |
//! | output (first/last)  | `[2, χ, d_out]`            |
//!
//! Internally every site is treated as `[2, left, right(, d_out)]` with a
//! unit-extent left bond on the first site and a unit-extent right bond on the
//! last, which leaves the row-major offsets unchanged.

use crate::error::{invalid, shape, Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// The embedded image: site `i` holds `(xᵢ, 1 − xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    sites: Vec<[f64; 2]>,
}

impl ProductState {
    pub fn sites(&self) -> &[[f64; 2]] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Maps normalized pixels to the product state `⊗ᵢ (xᵢ, 1 − xᵢ)`.
pub fn feature_map(pixels: &[f64]) -> Result<ProductState> {
    let sites = pixels
        .iter()
        .enumerate()
        .map(|(index, &x)| {
            if (0.0..=1.0).contains(&x) {
                Ok([x, 1.0 - x])
            } else {
                Err(Error::Encoding { index, value: x })
            }
        })
        .collect::<Result<_>>()?;
    Ok(ProductState { sites })
}

/// Noise scales used by [`Mps::init_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpsInit {
    /// Standard deviation of the noise added to the identity on every
    /// non-output site.
    pub interior_noise: f64,
    /// Standard deviation of the output-site entries.
    pub output_noise: f64,
}

impl Default for MpsInit {
    fn default() -> Self {
        Self {
            interior_noise: 0.01,
            output_noise: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mps {
    sites: Vec<Tensor>,
    output_site: usize,
    chi: usize,
    d_out: usize,
}

/// Gradient of a scalar with respect to every site tensor; shapes match
/// [`Mps::sites`].
#[derive(Debug, Clone, PartialEq)]
pub struct MpsGradient {
    pub sites: Vec<Tensor>,
}

impl MpsGradient {
    pub fn flatten(&self) -> Vec<f64> {
        self.sites.iter().flat_map(|t| t.data().iter().copied()).collect()
    }
}

/// Environments left over from a forward pass: `left[i]` is the contraction
/// of sites `0..i` (for `i <= output_site`), `right[i]` the contraction of
/// sites `i..N` (for `i > output_site`).
#[derive(Debug, Clone)]
pub struct MpsCache {
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl Mps {
    /// Identity-plus-noise chain with the default [`MpsInit`].
    pub fn init(n_sites: usize, chi: usize, d_out: usize, output_site: usize, rng: &mut Rng) -> Result<Self> {
        Self::init_with(n_sites, chi, d_out, output_site, MpsInit::default(), rng)
    }

    /// Every non-output site starts as the identity on its bonds for both
    /// physical components (boundary sites select bond 0), so the transfer
    /// matrix `x·A[0] + (1−x)·A[1]` is the identity for every pixel value.
    /// The output site is pure noise.
    pub fn init_with(
        n_sites: usize,
        chi: usize,
        d_out: usize,
        output_site: usize,
        init: MpsInit,
        rng: &mut Rng,
    ) -> Result<Self> {
        validate_dims(n_sites, chi, d_out, output_site)?;
        if init.interior_noise < 0.0 || init.output_noise < 0.0 {
            return Err(invalid("initialization noise must be non-negative"));
        }
        let mut sites = Vec::with_capacity(n_sites);
        for i in 0..n_sites {
            let shape = site_shape(n_sites, chi, d_out, output_site, i);
            let (dl, dr) = bond_dims(n_sites, chi, i);
            let std = if i == output_site {
                init.output_noise
            } else {
                init.interior_noise
            };
            let mut tensor = Tensor::from_fn(shape, |_| noise(rng, std))?;
            if i != output_site {
                // a == b also covers the boundary sites, whose single bond
                // index must be 0
                let data = tensor.data_mut();
                for p in 0..2 {
                    for a in 0..dl.min(dr) {
                        data[(p * dl + a) * dr + a] += 1.0;
                    }
                }
            }
            sites.push(tensor);
        }
        Ok(Self {
            sites,
            output_site,
            chi,
            d_out,
        })
    }

    /// Assembles a chain from explicit site tensors, checking every shape.
    pub fn from_sites(sites: Vec<Tensor>, chi: usize, d_out: usize, output_site: usize) -> Result<Self> {
        validate_dims(sites.len(), chi, d_out, output_site)?;
        let n = sites.len();
        for (i, site) in sites.iter().enumerate() {
            let expected = site_shape(n, chi, d_out, output_site, i);
            if site.shape() != expected.as_slice() {
                return Err(shape(format!(
                    "site {i} has shape {:?}, expected {expected:?}",
                    site.shape()
                )));
            }
        }
        Ok(Self {
            sites,
            output_site,
            chi,
            d_out,
        })
    }

    pub fn sites(&self) -> &[Tensor] {
        &self.sites
    }

    pub fn sites_mut(&mut self) -> &mut [Tensor] {
        &mut self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn output_site(&self) -> usize {
        self.output_site
    }

    pub fn num_params(&self) -> usize {
        self.sites.iter().map(Tensor::len).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        self.sites.iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(shape(format!(
                "{} parameters for an MPS with {}",
                params.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for site in &mut self.sites {
            let n = site.len();
            site.data_mut().copy_from_slice(&params[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    fn bonds(&self, i: usize) -> (usize, usize) {
        bond_dims(self.sites.len(), self.chi, i)
    }

    fn check_phi(&self, phi: &ProductState) -> Result<()> {
        if phi.len() != self.sites.len() {
            return Err(shape(format!(
                "product state has {} sites, MPS has {}",
                phi.len(),
                self.sites.len()
            )));
        }
        Ok(())
    }

    /// `x·A[0] + (1−x)·A[1]` for a non-output site, row-major `dl × dr`.
    fn transfer(&self, i: usize, phi: [f64; 2]) -> Vec<f64> {
        let (dl, dr) = self.bonds(i);
        let block = dl * dr;
        let data = self.sites[i].data();
        (0..block)
            .map(|k| phi[0] * data[k] + phi[1] * data[block + k])
            .collect()
    }

    pub fn forward(&self, phi: &ProductState) -> Result<Vec<f64>> {
        self.forward_cached(phi).map(|(feature, _)| feature)
    }

    /// Full contraction with the product state, keeping the environments for
    /// a subsequent [`Mps::backward_cached`].
    pub fn forward_cached(&self, phi: &ProductState) -> Result<(Vec<f64>, MpsCache)> {
        self.check_phi(phi)?;
        let n = self.sites.len();
        let j = self.output_site;

        let mut left = Vec::with_capacity(j + 1);
        left.push(vec![1.0]);
        for i in 0..j {
            let (dl, dr) = self.bonds(i);
            let m = self.transfer(i, phi.sites[i]);
            let prev = &left[i];
            let mut next = vec![0.0; dr];
            for a in 0..dl {
                let la = prev[a];
                for b in 0..dr {
                    next[b] += la * m[a * dr + b];
                }
            }
            left.push(next);
        }

        // right[k] holds the environment of sites (j + 1 + k)..n
        let mut right = vec![Vec::new(); n - j];
        right[n - j - 1] = vec![1.0];
        for i in (j + 1..n).rev() {
            let (dl, dr) = self.bonds(i);
            let m = self.transfer(i, phi.sites[i]);
            let prev = &right[i - j];
            let next: Vec<f64> = (0..dl)
                .map(|a| (0..dr).map(|b| m[a * dr + b] * prev[b]).sum())
                .collect();
            right[i - j - 1] = next;
        }

        let feature = self.contract_output(phi.sites[j], &left[j], &right[0]);
        Ok((feature, MpsCache { left, right }))
    }

    fn contract_output(&self, phi: [f64; 2], left: &[f64], right: &[f64]) -> Vec<f64> {
        let (dl, dr) = self.bonds(self.output_site);
        let d = self.d_out;
        let data = self.sites[self.output_site].data();
        let mut out = vec![0.0; d];
        for (p, &weight) in phi.iter().enumerate() {
            for a in 0..dl {
                let wa = weight * left[a];
                if wa == 0.0 {
                    continue;
                }
                for b in 0..dr {
                    let wab = wa * right[b];
                    let base = ((p * dl + a) * dr + b) * d;
                    for l in 0..d {
                        out[l] += wab * data[base + l];
                    }
                }
            }
        }
        out
    }

    /// Gradient of `⟨upstream, forward(phi)⟩` with respect to every site.
    pub fn backward(&self, phi: &ProductState, upstream: &[f64]) -> Result<MpsGradient> {
        let (_, cache) = self.forward_cached(phi)?;
        let mut flat = vec![0.0; self.num_params()];
        self.backward_cached(&cache, phi, upstream, &mut flat)?;
        let mut offset = 0;
        let sites = self
            .sites
            .iter()
            .map(|s| {
                let t = Tensor::new(s.shape().to_vec(), flat[offset..offset + s.len()].to_vec());
                offset += s.len();
                t
            })
            .collect::<Result<_>>()?;
        Ok(MpsGradient { sites })
    }

    /// Adds the gradient of `⟨upstream, feature⟩` into `grad`, laid out as
    /// [`Mps::params`].
    pub fn backward_cached(
        &self,
        cache: &MpsCache,
        phi: &ProductState,
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        self.check_phi(phi)?;
        if upstream.len() != self.d_out {
            return Err(shape(format!(
                "upstream has {} entries, MPS output has {}",
                upstream.len(),
                self.d_out
            )));
        }
        if grad.len() != self.num_params() {
            return Err(shape(format!(
                "gradient buffer has {} entries, MPS has {} parameters",
                grad.len(),
                self.num_params()
            )));
        }
        let n = self.sites.len();
        let j = self.output_site;
        let d = self.d_out;
        let offsets: Vec<usize> = self
            .sites
            .iter()
            .scan(0, |acc, s| {
                let o = *acc;
                *acc += s.len();
                Some(o)
            })
            .collect();

        let (dlj, drj) = self.bonds(j);
        let left_j = &cache.left[j];
        let right_j = &cache.right[0];
        let phi_j = phi.sites[j];
        let out_data = self.sites[j].data();

        // output site
        {
            let g = &mut grad[offsets[j]..offsets[j] + self.sites[j].len()];
            for p in 0..2 {
                for a in 0..dlj {
                    for b in 0..drj {
                        let w = phi_j[p] * left_j[a] * right_j[b];
                        let base = ((p * dlj + a) * drj + b) * d;
                        for l in 0..d {
                            g[base + l] += w * upstream[l];
                        }
                    }
                }
            }
        }

        // output site contracted with upstream, phi_j and one environment
        let mut toward_left = vec![0.0; dlj];
        let mut toward_right = vec![0.0; drj];
        for p in 0..2 {
            for a in 0..dlj {
                for b in 0..drj {
                    let base = ((p * dlj + a) * drj + b) * d;
                    let ou: f64 = (0..d).map(|l| out_data[base + l] * upstream[l]).sum();
                    let w = phi_j[p] * ou;
                    toward_left[a] += w * right_j[b];
                    toward_right[b] += w * left_j[a];
                }
            }
        }

        let mut env = toward_left;
        for i in (0..j).rev() {
            let (dl, dr) = self.bonds(i);
            let left_i = &cache.left[i];
            let g = &mut grad[offsets[i]..offsets[i] + dl * dr * 2];
            for p in 0..2 {
                for a in 0..dl {
                    let w = phi.sites[i][p] * left_i[a];
                    for b in 0..dr {
                        g[(p * dl + a) * dr + b] += w * env[b];
                    }
                }
            }
            let m = self.transfer(i, phi.sites[i]);
            env = (0..dl).map(|a| (0..dr).map(|b| m[a * dr + b] * env[b]).sum()).collect();
        }

        let mut env = toward_right;
        for i in j + 1..n {
            let (dl, dr) = self.bonds(i);
            let right_i = &cache.right[i - j];
            let g = &mut grad[offsets[i]..offsets[i] + dl * dr * 2];
            for p in 0..2 {
                for a in 0..dl {
                    let w = phi.sites[i][p] * env[a];
                    for b in 0..dr {
                        g[(p * dl + a) * dr + b] += w * right_i[b];
                    }
                }
            }
            let m = self.transfer(i, phi.sites[i]);
            let mut next = vec![0.0; dr];
            for a in 0..dl {
                for b in 0..dr {
                    next[b] += env[a] * m[a * dr + b];
                }
            }
            env = next;
        }
        Ok(())
    }
}

/// Shape of site `i` in a chain with the given dimensions.
pub fn site_shape(n_sites: usize, chi: usize, d_out: usize, output_site: usize, i: usize) -> Vec<usize> {
    let mut shape = vec![2];
    if i > 0 {
        shape.push(chi);
    }
    if i + 1 < n_sites {
        shape.push(chi);
    }
    if i == output_site {
        shape.push(d_out);
    }
    shape
}

fn bond_dims(n_sites: usize, chi: usize, i: usize) -> (usize, usize) {
    let dl = if i == 0 { 1 } else { chi };
    let dr = if i + 1 == n_sites { 1 } else { chi };
    (dl, dr)
}

pub(crate) fn validate_dims(n_sites: usize, chi: usize, d_out: usize, output_site: usize) -> Result<()> {
    if n_sites < 2 {
        return Err(invalid(format!("an MPS needs at least 2 sites, got {n_sites}")));
    }
    if chi == 0 {
        return Err(invalid("bond dimension must be at least 1"));
    }
    if d_out == 0 {
        return Err(invalid("output dimension must be at least 1"));
    }
    if output_site >= n_sites {
        return Err(invalid(format!(
            "output site {output_site} out of range for {n_sites} sites"
        )));
    }
    Ok(())
}

fn noise(rng: &mut Rng, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        rng.centered(std)
    }
}
