//! IDX readers for MNIST-format files and class-filtered datasets.
//!
//! Files ending in `.gz` are decompressed on the fly. A dataset root is laid
//! out as `<root>/<mnist|fashion>/<train|t10k>-<images-idx3|labels-idx1>-ubyte`,
//! optionally gzipped.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::GzDecoder;

use crate::error::{invalid, shape, Error, IdxError, Result};
use crate::rng::Rng;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Undecoded image bytes, `count × 784` in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImages {
    pub count: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, IdxError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(IdxError::Truncated {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<(), IdxError> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(IdxError::BadMagic { expected, found });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages, IdxError> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)?;
    let cols = read_u32(bytes, 12)?;
    if rows as usize != IMAGE_SIDE || cols as usize != IMAGE_SIDE {
        return Err(IdxError::BadDimensions { rows, cols });
    }
    let expected = 16 + count * IMAGE_PIXELS;
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(RawImages {
        count,
        pixels: bytes[16..expected].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, IdxError> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let labels = bytes[8..expected].to_vec();
    if let Some(index) = labels.iter().position(|&l| l > 9) {
        return Err(IdxError::LabelOutOfRange {
            index,
            value: labels[index],
        });
    }
    Ok(labels)
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<RawImages> {
    Ok(parse_idx_images(&read_maybe_gz(path.as_ref())?)?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    Ok(parse_idx_labels(&read_maybe_gz(path.as_ref())?)?)
}

/// Images scaled to `[0, 1]` with labels remapped to `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Vec<f64>,
    labels: Vec<usize>,
    class_map: Vec<u8>,
}

/// Keeps the samples whose label is in `classes`, maps each to its position
/// in `classes` and scales pixels by 1/255.
pub fn prepare(images: &RawImages, labels: &[u8], classes: &[u8]) -> Result<Dataset> {
    if images.count != labels.len() {
        return Err(IdxError::CountMismatch {
            images: images.count,
            labels: labels.len(),
        }
        .into());
    }
    check_classes(classes)?;
    let mut out_images = Vec::new();
    let mut out_labels = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        if let Some(pos) = classes.iter().position(|&c| c == label) {
            let px = &images.pixels[i * IMAGE_PIXELS..(i + 1) * IMAGE_PIXELS];
            out_images.extend(px.iter().map(|&b| b as f64 / 255.0));
            out_labels.push(pos);
        }
    }
    for (pos, &c) in classes.iter().enumerate() {
        if !out_labels.contains(&pos) {
            return Err(Error::EmptyClass(c));
        }
    }
    Ok(Dataset {
        images: out_images,
        labels: out_labels,
        class_map: classes.to_vec(),
    })
}

fn check_classes(classes: &[u8]) -> Result<()> {
    if classes.is_empty() {
        return Err(invalid("at least one class is required"));
    }
    for (i, c) in classes.iter().enumerate() {
        if *c > 9 {
            return Err(invalid(format!("class {c} is not in 0..=9")));
        }
        if classes[..i].contains(c) {
            return Err(invalid(format!("class {c} listed twice")));
        }
    }
    Ok(())
}

impl Dataset {
    /// Builds a dataset from already-normalized parts.
    pub fn from_parts(images: Vec<f64>, labels: Vec<usize>, class_map: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() * IMAGE_PIXELS {
            return Err(shape(format!(
                "{} pixel values for {} samples",
                images.len(),
                labels.len()
            )));
        }
        if class_map.is_empty() {
            return Err(invalid("at least one class is required"));
        }
        if let Some(i) = labels.iter().position(|&l| l >= class_map.len()) {
            return Err(invalid(format!("label {} at {i} exceeds class count", labels[i])));
        }
        if let Some(i) = images.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Encoding {
                index: i % IMAGE_PIXELS,
                value: images[i],
            });
        }
        Ok(Self {
            images,
            labels,
            class_map,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_map.len()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i * IMAGE_PIXELS..(i + 1) * IMAGE_PIXELS]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// All images, row-major `len × 784`.
    pub fn images(&self) -> &[f64] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Original class id for each remapped label.
    pub fn class_map(&self) -> &[u8] {
        &self.class_map
    }

    /// A random subset of `n` samples drawn by `seed`, kept in original
    /// order. Returns a copy when `n` covers the whole set.
    pub fn subsample(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.len() {
            return self.clone();
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        Rng::new(seed).shuffle(&mut idx);
        idx.truncate(n);
        idx.sort_unstable();
        self.select(&idx)
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut images = Vec::with_capacity(indices.len() * IMAGE_PIXELS);
        for &i in indices {
            images.extend_from_slice(self.image(i));
        }
        Dataset {
            images,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_map: self.class_map.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetName {
    Mnist,
    Fashion,
}

impl DatasetName {
    pub fn dir(self) -> &'static str {
        match self {
            DatasetName::Mnist => "mnist",
            DatasetName::Fashion => "fashion",
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(DatasetName::Mnist),
            "fashion" | "fashion-mnist" => Ok(DatasetName::Fashion),
            other => Err(invalid(format!(
                "unknown dataset `{other}` (expected mnist or fashion)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

fn locate(dir: &Path, stem: &str) -> Result<PathBuf> {
    let plain = dir.join(stem);
    if plain.exists() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{stem}.gz"));
    if gz.exists() {
        return Ok(gz);
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{} (or .gz) not found", plain.display()),
    )))
}

/// Loads and filters one split from a dataset root.
pub fn load_split(root: &Path, name: DatasetName, split: Split, classes: &[u8]) -> Result<Dataset> {
    let dir = root.join(name.dir());
    let images = load_idx_images(locate(&dir, &format!("{}-images-idx3-ubyte", split.prefix()))?)?;
    let labels = load_idx_labels(locate(&dir, &format!("{}-labels-idx1-ubyte", split.prefix()))?)?;
    prepare(&images, &labels, classes)
}
