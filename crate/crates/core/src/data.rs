//! In-memory classification datasets and their loaders.
//!
//! Features are stored row-major as `f32` in `[0, 1]`; model arithmetic
//! widens to `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{label_distribution, LabelDistribution};
use crate::rng::{self, Domain};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
const CIFAR_RECORD: usize = 3073;
const CIFAR_PIXELS: usize = 3072;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f32>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
}

impl Dataset {
    /// Build a dataset, checking every structural invariant.
    pub fn new(
        name: impl Into<String>,
        features: Vec<f32>,
        labels: Vec<usize>,
        dim: usize,
        classes: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("feature dimension must be at least 1"));
        }
        if classes < 2 {
            return Err(Error::input("a dataset needs at least 2 classes"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::input(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::input(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        if let Some(bad) = features.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::input(format!("feature value {bad} outside [0, 1]")));
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            dim,
            classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label_distribution(&self) -> LabelDistribution {
        label_distribution(&self.labels, self.classes).expect("labels validated on construction")
    }

    /// Indices of every sample of class `c`, ascending.
    pub fn class_indices(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == c)
            .map(|(i, _)| i)
            .collect()
    }

    /// A new dataset holding the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::input(format!(
                    "index {i} out of range for {} samples",
                    self.len()
                )));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Ok(Dataset {
            name: self.name.clone(),
            features,
            labels,
            dim: self.dim,
            classes: self.classes,
        })
    }

    /// Sample count, class count and a SHA-256 over the content.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update((self.dim as u64).to_le_bytes());
        hasher.update((self.classes as u64).to_le_bytes());
        for &l in &self.labels {
            hasher.update((l as u32).to_le_bytes());
        }
        let mut buf = Vec::with_capacity(4 * self.dim);
        for row in self.features.chunks(self.dim) {
            buf.clear();
            for v in row {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            hasher.update(&buf);
        }
        Fingerprint {
            name: self.name.clone(),
            n: self.len(),
            classes: self.classes,
            sha256: hex::encode(hasher.finalize()),
        }
    }
}

/// Identity of the dataset a partition plan was built for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fingerprint {
    pub name: String,
    pub n: usize,
    #[serde(rename = "C")]
    pub classes: usize,
    pub sha256: String,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(format!("{}: truncated IDX header", path.display())))
}

/// Parse an IDX image file into `(count, rows * cols, pixels)`.
fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(format!(
            "{}: magic {magic:#010x} is not an IDX image file ({IDX_IMAGES_MAGIC:#010x})",
            path.display()
        )));
    }
    let n = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    let dim = rows * cols;
    let body = &bytes[16..];
    if dim == 0 || body.len() != n * dim {
        return Err(Error::format(format!(
            "{}: expected {n} images of {rows}x{cols} ({} bytes), found {} bytes",
            path.display(),
            n * dim,
            body.len()
        )));
    }
    let pixels = body.iter().map(|&b| f32::from(b) / 255.0).collect();
    Ok((n, dim, pixels))
}

fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(format!(
            "{}: magic {magic:#010x} is not an IDX label file ({IDX_LABELS_MAGIC:#010x})",
            path.display()
        )));
    }
    let n = be_u32(bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(Error::format(format!(
            "{}: expected {n} labels, found {} bytes",
            path.display(),
            body.len()
        )));
    }
    Ok(body.iter().map(|&b| usize::from(b)).collect())
}

/// Load an MNIST image/label IDX pair (uncompressed).
pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let (n, dim, pixels) = parse_idx_images(&read_file(images_path)?, images_path)?;
    let labels = parse_idx_labels(&read_file(labels_path)?, labels_path)?;
    if labels.len() != n {
        return Err(Error::format(format!(
            "{} images but {} labels",
            n,
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::format(format!("MNIST label {bad} is not a digit")));
    }
    Dataset::new("mnist", pixels, labels, dim, 10)
}

/// Load one or more CIFAR-10 binary batch files, concatenated in order.
pub fn load_cifar10_bin<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset> {
    if paths.is_empty() {
        return Err(Error::input("no CIFAR-10 batch files given"));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = read_file(path)?;
        if bytes.is_empty() || bytes.len() % CIFAR_RECORD != 0 {
            return Err(Error::format(format!(
                "{}: {} bytes is not a whole number of {CIFAR_RECORD}-byte records",
                path.display(),
                bytes.len()
            )));
        }
        features.reserve(bytes.len() / CIFAR_RECORD * CIFAR_PIXELS);
        for (r, record) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
            let label = usize::from(record[0]);
            if label > 9 {
                return Err(Error::format(format!(
                    "{}: record {r} has label byte {label}",
                    path.display()
                )));
            }
            labels.push(label);
            features.extend(record[1..].iter().map(|&b| f32::from(b) / 255.0));
        }
    }
    Dataset::new("cifar10", features, labels, CIFAR_PIXELS, 10)
}

/// Canonical file names of the MNIST distribution.
pub fn mnist_paths(dir: impl AsRef<Path>, train: bool) -> (PathBuf, PathBuf) {
    let dir = dir.as_ref();
    let prefix = if train { "train" } else { "t10k" };
    (
        dir.join(format!("{prefix}-images-idx3-ubyte")),
        dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

/// Canonical file names of the CIFAR-10 binary distribution.
pub fn cifar10_paths(dir: impl AsRef<Path>, train: bool) -> Vec<PathBuf> {
    let dir = dir.as_ref();
    if train {
        (1..=5)
            .map(|i| dir.join(format!("data_batch_{i}.bin")))
            .collect()
    } else {
        vec![dir.join("test_batch.bin")]
    }
}

/// Parameters of the synthetic Gaussian-blob generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub spread: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::config("synthetic data needs at least 2 classes"));
        }
        if self.per_class == 0 {
            return Err(Error::config("per_class must be at least 1"));
        }
        if self.dim == 0 {
            return Err(Error::config("dim must be at least 1"));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::config("spread must be positive"));
        }
        Ok(())
    }

    /// The same distribution with an independent draw, for held-out testing.
    pub fn held_out(&self) -> SynthConfig {
        SynthConfig {
            seed: rng::derive_seed(self.seed, Domain::SynthTest, 0, 0),
            ..*self
        }
    }
}

const BLOB_BASE: f64 = 0.25;
const BLOB_LIFT: f64 = 0.5;

/// Center of class `c`: `0.25` everywhere plus `0.5` on axis `c mod d`.
/// Classes past the first `d` add `0.25 * (c / d)` on axis `(c + c / d) mod d`
/// so every center stays distinct.
pub fn blob_mean(c: usize, dim: usize) -> Vec<f64> {
    let mut mean = vec![BLOB_BASE; dim];
    mean[c % dim] += BLOB_LIFT;
    let tier = c / dim;
    if tier > 0 {
        mean[(c + tier) % dim] += BLOB_LIFT / 2.0 * tier as f64;
    }
    mean
}

/// Isotropic Gaussian blobs, `per_class` samples per class, laid out class
/// by class. Samples are clamped into `[0, 1]`.
pub fn synth_blobs(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let noise = Normal::new(0.0, cfg.spread).map_err(|e| Error::config(e.to_string()))?;
    let n = cfg.classes * cfg.per_class;
    let mut features = Vec::with_capacity(n * cfg.dim);
    let mut labels = Vec::with_capacity(n);
    for c in 0..cfg.classes {
        let mean = blob_mean(c, cfg.dim);
        let mut rng = rng::stream(cfg.seed, Domain::Synth, c as u64, 0);
        for _ in 0..cfg.per_class {
            for &m in &mean {
                let v: f64 = m + noise.sample(&mut rng);
                features.push(v.clamp(0.0, 1.0) as f32);
            }
            labels.push(c);
        }
    }
    Dataset::new(
        format!(
            "synth-c{}-n{}-d{}-s{}-seed{}",
            cfg.classes, cfg.per_class, cfg.dim, cfg.spread, cfg.seed
        ),
        features,
        labels,
        cfg.dim,
        cfg.classes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn idx_images(n: u32, rows: u32, cols: u32, body: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend(IDX_IMAGES_MAGIC.to_be_bytes());
        v.extend(n.to_be_bytes());
        v.extend(rows.to_be_bytes());
        v.extend(cols.to_be_bytes());
        v.extend_from_slice(body);
        v
    }

    fn idx_labels(body: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend(IDX_LABELS_MAGIC.to_be_bytes());
        v.extend((body.len() as u32).to_be_bytes());
        v.extend_from_slice(body);
        v
    }

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(bytes).unwrap();
        p
    }

    #[test]
    fn reads_tiny_idx_pair() {
        let dir = tempfile::tempdir().unwrap();
        let img = write(dir.path(), "img", &idx_images(2, 2, 2, &[0, 255, 51, 102, 1, 2, 3, 4]));
        let lab = write(dir.path(), "lab", &idx_labels(&[7, 3]));
        let ds = load_mnist_idx(&img, &lab).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.classes(), 10);
        assert_eq!(ds.labels(), &[7, 3]);
        assert_eq!(ds.row(0), &[0.0, 1.0, 0.2, 0.4]);
    }

    #[test]
    fn label_file_passed_as_images_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let lab = write(dir.path(), "lab", &idx_labels(&[1, 2]));
        let err = load_mnist_idx(&lab, &lab).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn truncated_and_mismatched_idx_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let img = write(dir.path(), "img", &idx_images(2, 2, 2, &[0; 7]));
        let lab = write(dir.path(), "lab", &idx_labels(&[1, 2]));
        assert!(matches!(load_mnist_idx(&img, &lab), Err(Error::Format(_))));

        let img = write(dir.path(), "img2", &idx_images(2, 2, 2, &[0; 8]));
        let lab = write(dir.path(), "lab2", &idx_labels(&[1, 2, 3]));
        assert!(matches!(load_mnist_idx(&img, &lab), Err(Error::Format(_))));

        let short = write(dir.path(), "short", &[0, 0, 8]);
        assert!(matches!(load_mnist_idx(&short, &lab), Err(Error::Format(_))));
    }

    #[test]
    fn reads_cifar_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for label in [3u8, 9] {
            bytes.push(label);
            bytes.extend((0..CIFAR_PIXELS).map(|i| (i % 256) as u8));
        }
        let a = write(dir.path(), "a.bin", &bytes);
        let b = write(dir.path(), "b.bin", &bytes[..CIFAR_RECORD]);
        let ds = load_cifar10_bin(&[a, b]).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 3072);
        assert_eq!(ds.labels(), &[3, 9, 3]);
        assert_eq!(ds.row(1)[255], 1.0);
        // Planes stay in stored order: pixel 1024 is the first green value.
        assert_eq!(ds.row(0)[1024], 0.0);
    }

    #[test]
    fn rejects_bad_cifar_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = vec![1u8; CIFAR_RECORD];
        let truncated = write(dir.path(), "t.bin", &bytes[..CIFAR_RECORD - 1]);
        assert!(matches!(load_cifar10_bin(&[truncated]), Err(Error::Format(_))));
        bytes[0] = 10;
        let bad_label = write(dir.path(), "l.bin", &bytes);
        assert!(matches!(load_cifar10_bin(&[bad_label]), Err(Error::Format(_))));
        let missing = dir.path().join("nope.bin");
        assert!(matches!(load_cifar10_bin(&[missing]), Err(Error::Io { .. })));
    }

    #[test]
    fn blobs_are_uniform_and_deterministic() {
        let cfg = SynthConfig {
            classes: 10,
            per_class: 100,
            dim: 16,
            spread: 0.1,
            seed: 1,
        };
        let a = synth_blobs(&cfg).unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(a.label_distribution().counts(), &[100; 10]);
        assert!(a.features().iter().all(|v| (0.0..=1.0).contains(v)));
        let b = synth_blobs(&cfg).unwrap();
        assert_eq!(a, b);
        let c = synth_blobs(&cfg.held_out()).unwrap();
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn blob_means_are_distinct() {
        for dim in [1, 2, 3, 16] {
            let means: Vec<_> = (0..12).map(|c| blob_mean(c, dim)).collect();
            for i in 0..means.len() {
                for j in 0..i {
                    assert_ne!(means[i], means[j], "dim {dim}: classes {i} and {j}");
                }
            }
        }
    }

    #[test]
    fn invalid_synth_config() {
        let cfg = SynthConfig {
            classes: 1,
            per_class: 10,
            dim: 2,
            spread: 0.1,
            seed: 0,
        };
        assert!(matches!(synth_blobs(&cfg), Err(Error::Config(_))));
        let cfg = SynthConfig { classes: 2, spread: 0.0, ..cfg };
        assert!(synth_blobs(&cfg).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let ds = Dataset::new("x", vec![0.0, 0.5, 1.0, 0.25], vec![0, 1], 2, 2).unwrap();
        let other = Dataset::new("x", vec![0.0, 0.5, 1.0, 0.5], vec![0, 1], 2, 2).unwrap();
        assert_eq!(ds.fingerprint(), ds.clone().fingerprint());
        assert_ne!(ds.fingerprint().sha256, other.fingerprint().sha256);
        assert_eq!(ds.fingerprint().n, 2);
    }
}
