//! Hybrid tensor-network and variational-circuit image classifiers.
//!
//! A matrix product state (MPS) compresses a 784-pixel image into a few
//! features. A simulated variational quantum circuit (VQC) maps those
//! features to class logits, and both are trained jointly by gradient
//! descent. A PCA front end and a bare MPS classifier serve as baselines.
//!
//! | module | contents |
//! |---|---|
//! | [`tensor`] | dense tensors and pairwise contraction |
//! | [`mps`] | pixel feature map and the MPS feature extractor |
//! | [`qsim`] | statevector simulator |
//! | [`vqc`] | the classifier circuit with parameter-shift gradients |
//! | [`pca`] | PCA baseline extractor |
//! | [`dataset`] | IDX readers and class filtering |
//! | [`train`] | models, loss, optimizers and the training loop |
//! | [`checkpoint`] | binary model files |
//! | [`verify`] | oracle self-checks |
//!
//! ```
//! use tnvqc::mps::{feature_map, Mps};
//! use tnvqc::rng::Rng;
//! use tnvqc::vqc::{Vqc, VqcConfig, VqcParams};
//!
//! let mut rng = Rng::new(0);
//! let mps = Mps::init(16, 2, 4, 8, &mut rng)?;
//! let features = mps.forward(&feature_map(&[0.5; 16])?)?;
//!
//! let cfg = VqcConfig::with_classes(2)?;
//! let vqc = Vqc::new(cfg, VqcParams::uniform(&cfg, 0.1, &mut rng))?;
//! let logits = vqc.forward(&features)?;
//! assert_eq!(logits.len(), 2);
//! # Ok::<(), tnvqc::Error>(())
//! ```

// index loops mirror the tensor index notation in the numeric kernels
#![allow(clippy::needless_range_loop)]

pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod mps;
pub mod pca;
pub mod qsim;
pub mod rng;
pub mod tensor;
pub mod train;
pub mod verify;
pub mod vqc;

pub use error::{Error, IdxError, Result};
