use std::fmt;
use std::str::FromStr;

use crate::dataset::Dataset;
use crate::error::{invalid, shape, Error, Result};
use crate::mps::{feature_map, Mps, MpsInit};
use crate::pca::PcaModel;
use crate::rng::Rng;
use crate::train::loss::{argmax, softmax_xent};
use crate::vqc::{Vqc, VqcConfig, VqcParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// MPS whose output index is the class.
    MpsOnly,
    /// PCA projection to the qubit count, then the VQC.
    PcaVqc,
    /// MPS features fed to the VQC, trained end to end.
    MpsVqc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::MpsOnly, ModelKind::PcaVqc, ModelKind::MpsVqc];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::MpsOnly => "mps",
            ModelKind::PcaVqc => "pca-vqc",
            ModelKind::MpsVqc => "mps-vqc",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::MpsOnly => 1,
            ModelKind::PcaVqc => 2,
            ModelKind::MpsVqc => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown model `{s}` (expected mps, pca-vqc or mps-vqc)")))
    }
}

/// Everything needed to build a freshly initialized model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n_classes: usize,
    pub chi: usize,
    pub n_qubits: usize,
    pub n_blocks: usize,
    pub mps_init: MpsInit,
    /// Initial circuit angles are uniform on `[−r, r)`.
    pub vqc_init_range: f64,
    /// Divide each PCA feature by its standard deviation before encoding.
    pub pca_standardize: bool,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, n_classes: usize, chi: usize) -> Self {
        Self {
            kind,
            n_classes,
            chi,
            n_qubits: VqcConfig::DEFAULT_QUBITS,
            n_blocks: VqcConfig::DEFAULT_BLOCKS,
            mps_init: MpsInit::default(),
            vqc_init_range: DEFAULT_VQC_INIT_RANGE,
            pca_standardize: false,
        }
    }
}

pub const DEFAULT_VQC_INIT_RANGE: f64 = std::f64::consts::PI;

/// A classifier whose trainable parameters form one flat vector: MPS
/// entries first, then circuit angles.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    MpsOnly { mps: Mps },
    PcaVqc { pca: PcaModel, standardize: bool, vqc: Vqc },
    MpsVqc { mps: Mps, vqc: Vqc },
}

impl Model {
    pub fn mps_only(mps: Mps) -> Self {
        Model::MpsOnly { mps }
    }

    pub fn mps_vqc(mps: Mps, vqc: Vqc) -> Result<Self> {
        if mps.d_out() != vqc.config().n_qubits {
            return Err(shape(format!(
                "MPS emits {} features, circuit has {} qubits",
                mps.d_out(),
                vqc.config().n_qubits
            )));
        }
        Ok(Model::MpsVqc { mps, vqc })
    }

    pub fn pca_vqc(pca: PcaModel, standardize: bool, vqc: Vqc) -> Result<Self> {
        if pca.n_components() != vqc.config().n_qubits {
            return Err(shape(format!(
                "PCA emits {} features, circuit has {} qubits",
                pca.n_components(),
                vqc.config().n_qubits
            )));
        }
        Ok(Model::PcaVqc { pca, standardize, vqc })
    }

    /// Fresh model for `train`; the PCA variant is fitted on `train`.
    /// MPS and circuit parameters use separate streams of `seed`.
    pub fn init(cfg: &ModelConfig, train: &Dataset, seed: u64) -> Result<Self> {
        if cfg.n_classes != train.n_classes() {
            return Err(shape(format!(
                "model has {} classes, data has {}",
                cfg.n_classes,
                train.n_classes()
            )));
        }
        let n_pixels = crate::dataset::IMAGE_PIXELS;
        let vqc = || -> Result<Vqc> {
            let vcfg = VqcConfig::new(cfg.n_qubits, cfg.n_blocks, cfg.n_classes)?;
            let params = VqcParams::uniform(&vcfg, cfg.vqc_init_range, &mut Rng::with_stream(seed, 2));
            Vqc::new(vcfg, params)
        };
        let mps = |d_out: usize| -> Result<Mps> {
            Mps::init_with(
                n_pixels,
                cfg.chi,
                d_out,
                n_pixels / 2,
                cfg.mps_init,
                &mut Rng::with_stream(seed, 1),
            )
        };
        match cfg.kind {
            ModelKind::MpsOnly => Ok(Model::mps_only(mps(cfg.n_classes)?)),
            ModelKind::MpsVqc => Model::mps_vqc(mps(cfg.n_qubits)?, vqc()?),
            ModelKind::PcaVqc => {
                let pca = PcaModel::fit(train.images(), n_pixels, cfg.n_qubits)?;
                Model::pca_vqc(pca, cfg.pca_standardize, vqc()?)
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::MpsOnly { .. } => ModelKind::MpsOnly,
            Model::PcaVqc { .. } => ModelKind::PcaVqc,
            Model::MpsVqc { .. } => ModelKind::MpsVqc,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Model::MpsOnly { mps } => mps.d_out(),
            Model::PcaVqc { vqc, .. } | Model::MpsVqc { vqc, .. } => vqc.config().k,
        }
    }

    /// Length of the images this model accepts.
    pub fn input_len(&self) -> usize {
        match self {
            Model::MpsOnly { mps } | Model::MpsVqc { mps, .. } => mps.n_sites(),
            Model::PcaVqc { pca, .. } => pca.dim(),
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Model::MpsOnly { mps } => mps.num_params(),
            Model::PcaVqc { vqc, .. } => vqc.config().num_params(),
            Model::MpsVqc { mps, vqc } => mps.num_params() + vqc.config().num_params(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Model::MpsOnly { mps } => mps.params(),
            Model::PcaVqc { vqc, .. } => vqc.params().as_slice().to_vec(),
            Model::MpsVqc { mps, vqc } => {
                let mut p = mps.params();
                p.extend_from_slice(vqc.params().as_slice());
                p
            }
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(shape(format!(
                "{} parameters for a model with {}",
                params.len(),
                self.num_params()
            )));
        }
        match self {
            Model::MpsOnly { mps } => mps.set_params(params),
            Model::PcaVqc { vqc, .. } => {
                vqc.params_mut().as_mut_slice().copy_from_slice(params);
                Ok(())
            }
            Model::MpsVqc { mps, vqc } => {
                let n = mps.num_params();
                mps.set_params(&params[..n])?;
                vqc.params_mut().as_mut_slice().copy_from_slice(&params[n..]);
                Ok(())
            }
        }
    }

    fn check_image(&self, image: &[f64]) -> Result<()> {
        if image.len() != self.input_len() {
            return Err(shape(format!(
                "model expects {} pixels, got {}",
                self.input_len(),
                image.len()
            )));
        }
        Ok(())
    }

    fn pca_features(pca: &PcaModel, standardize: bool, image: &[f64]) -> Result<Vec<f64>> {
        let mut z = pca.transform(image)?;
        if standardize {
            for (v, var) in z.iter_mut().zip(pca.explained_variance()) {
                if *var > 0.0 {
                    *v /= var.sqrt();
                }
            }
        }
        Ok(z)
    }

    /// Features entering the circuit, or `None` for the MPS-only model.
    pub fn features(&self, image: &[f64]) -> Result<Option<Vec<f64>>> {
        self.check_image(image)?;
        match self {
            Model::MpsOnly { .. } => Ok(None),
            Model::PcaVqc { pca, standardize, .. } => Self::pca_features(pca, *standardize, image).map(Some),
            Model::MpsVqc { mps, .. } => mps.forward(&feature_map(image)?).map(Some),
        }
    }

    pub fn logits(&self, image: &[f64]) -> Result<Vec<f64>> {
        self.check_image(image)?;
        match self {
            Model::MpsOnly { mps } => mps.forward(&feature_map(image)?),
            Model::PcaVqc { pca, standardize, vqc } => vqc.forward(&Self::pca_features(pca, *standardize, image)?),
            Model::MpsVqc { mps, vqc } => vqc.forward(&mps.forward(&feature_map(image)?)?),
        }
    }

    pub fn predict(&self, image: &[f64]) -> Result<usize> {
        self.logits(image).map(|z| argmax(&z))
    }

    /// Cross-entropy of one sample; its gradient with respect to
    /// [`Model::params`] is added into `grad`.
    pub fn loss_and_grad(&self, image: &[f64], label: usize, grad: &mut [f64]) -> Result<f64> {
        self.check_image(image)?;
        if grad.len() != self.num_params() {
            return Err(shape(format!(
                "gradient buffer has {} entries, model has {} parameters",
                grad.len(),
                self.num_params()
            )));
        }
        match self {
            Model::MpsOnly { mps } => {
                let phi = feature_map(image)?;
                let (logits, cache) = mps.forward_cached(&phi)?;
                let (loss, upstream) = softmax_xent(&logits, label)?;
                mps.backward_cached(&cache, &phi, &upstream, grad)?;
                Ok(loss)
            }
            Model::PcaVqc { pca, standardize, vqc } => {
                let x = Self::pca_features(pca, *standardize, image)?;
                let (loss, upstream) = softmax_xent(&vqc.forward(&x)?, label)?;
                for (g, d) in grad.iter_mut().zip(vqc.grad_params(&x, &upstream)?) {
                    *g += d;
                }
                Ok(loss)
            }
            Model::MpsVqc { mps, vqc } => {
                let phi = feature_map(image)?;
                let (features, cache) = mps.forward_cached(&phi)?;
                let (loss, upstream) = softmax_xent(&vqc.forward(&features)?, label)?;
                let g = vqc.gradients(&features, &upstream)?;
                let n = mps.num_params();
                mps.backward_cached(&cache, &phi, &g.inputs, &mut grad[..n])?;
                for (acc, d) in grad[n..].iter_mut().zip(&g.params) {
                    *acc += d;
                }
                Ok(loss)
            }
        }
    }
}
