//! Binary model checkpoints.
//!
//! Layout, all integers `u32` and all reals `f64`, little-endian:
//!
//! ```text
//! "HTVQ"  kind:u8  section*
//! "MPS1"  n_sites chi d_out output_site  site data in parameter order
//! "VQC1"  n_qubits n_blocks k            angles [block][qubit][α β γ]
//! "PCA1"  dim n_components standardize   mean  components  variances
//! ```
//!
//! The kind byte fixes which sections follow: `1` MPS only, `2` PCA then
//! VQC, `3` MPS then VQC.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mps::{site_shape, Mps};
use crate::pca::PcaModel;
use crate::tensor::Tensor;
use crate::train::{Model, ModelKind};
use crate::vqc::{Vqc, VqcConfig, VqcParams};

pub const MAGIC: &[u8; 4] = b"HTVQ";

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| corrupt(format!("{v} does not fit in 32 bits")))?;
        self.0.extend_from_slice(&v.to_le_bytes());
        Ok(())
    }

    fn reals(&mut self, xs: &[f64]) {
        for x in xs {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }

    fn mps(&mut self, mps: &Mps) -> Result<()> {
        self.0.extend_from_slice(b"MPS1");
        for v in [mps.n_sites(), mps.chi(), mps.d_out(), mps.output_site()] {
            self.u32(v)?;
        }
        self.reals(&mps.params());
        Ok(())
    }

    fn vqc(&mut self, vqc: &Vqc) -> Result<()> {
        let cfg = vqc.config();
        self.0.extend_from_slice(b"VQC1");
        for v in [cfg.n_qubits, cfg.n_blocks, cfg.k] {
            self.u32(v)?;
        }
        self.reals(vqc.params().as_slice());
        Ok(())
    }

    fn pca(&mut self, pca: &PcaModel, standardize: bool) -> Result<()> {
        self.0.extend_from_slice(b"PCA1");
        for v in [pca.dim(), pca.n_components(), usize::from(standardize)] {
            self.u32(v)?;
        }
        self.reals(pca.mean());
        self.reals(pca.components());
        self.reals(pca.explained_variance());
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                corrupt(format!(
                    "truncated: needed {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn tag(&mut self, expected: &[u8; 4]) -> Result<()> {
        let found = self.take(4)?;
        if found != expected {
            return Err(corrupt(format!(
                "expected section {}, found {:?}",
                String::from_utf8_lossy(expected),
                String::from_utf8_lossy(found)
            )));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn reals(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n.checked_mul(8).ok_or_else(|| corrupt("section size overflows"))?;
        let raw = self.take(len)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    fn mps(&mut self) -> Result<Mps> {
        self.tag(b"MPS1")?;
        let (n, chi, d_out, j) = (self.u32()?, self.u32()?, self.u32()?, self.u32()?);
        crate::mps::validate_dims(n, chi, d_out, j)?;
        let mut sites = Vec::with_capacity(n);
        for i in 0..n {
            let shape = site_shape(n, chi, d_out, j, i);
            let len = shape.iter().product();
            sites.push(Tensor::new(shape, self.reals(len)?)?);
        }
        Mps::from_sites(sites, chi, d_out, j)
    }

    fn vqc(&mut self) -> Result<Vqc> {
        self.tag(b"VQC1")?;
        let cfg = VqcConfig::new(self.u32()?, self.u32()?, self.u32()?)?;
        let angles = self.reals(cfg.num_params())?;
        Vqc::new(cfg, VqcParams::from_vec(&cfg, angles)?)
    }

    fn pca(&mut self) -> Result<(PcaModel, bool)> {
        self.tag(b"PCA1")?;
        let (dim, k, standardize) = (self.u32()?, self.u32()?, self.u32()?);
        if standardize > 1 {
            return Err(corrupt(format!("bad standardize flag {standardize}")));
        }
        let mean = self.reals(dim)?;
        let components = self.reals(k.checked_mul(dim).ok_or_else(|| corrupt("section size overflows"))?)?;
        let variances = self.reals(k)?;
        Ok((PcaModel::from_parts(mean, components, variances)?, standardize == 1))
    }
}

pub fn to_bytes(model: &Model) -> Result<Vec<u8>> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.push(model.kind().code());
    match model {
        Model::MpsOnly { mps } => w.mps(mps)?,
        Model::PcaVqc { pca, standardize, vqc } => {
            w.pca(pca, *standardize)?;
            w.vqc(vqc)?;
        }
        Model::MpsVqc { mps, vqc } => {
            w.mps(mps)?;
            w.vqc(vqc)?;
        }
    }
    Ok(w.0)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(corrupt("not a checkpoint (bad magic)"));
    }
    let code = r.take(1)?[0];
    let kind = ModelKind::from_code(code).ok_or_else(|| corrupt(format!("unknown model kind {code}")))?;
    let model = match kind {
        ModelKind::MpsOnly => Model::mps_only(r.mps()?),
        ModelKind::PcaVqc => {
            let (pca, standardize) = r.pca()?;
            Model::pca_vqc(pca, standardize, r.vqc()?)?
        }
        ModelKind::MpsVqc => {
            let mps = r.mps()?;
            Model::mps_vqc(mps, r.vqc()?)?
        }
    };
    if r.pos != bytes.len() {
        return Err(corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(model)
}

/// Writes through a temporary sibling and renames, so a failed write never
/// leaves a partial checkpoint at `path`.
pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(model)?;
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    from_bytes(&fs::read(path)?)
}
