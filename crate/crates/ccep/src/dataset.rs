//! Data provisioning: synthetic classification generators for desk-scale
//! runs, an IDX-format image loader, and the evaluation subsampler.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad magic number in {path}: expected {expected:#010x}, got {got:#010x}")]
    BadMagic {
        path: String,
        expected: u32,
        got: u32,
    },
    #[error("image file holds {images} samples but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("truncated file {0}")]
    Truncated(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

/// Immutable labeled samples: one flat feature vector per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        if features.len() != labels.len() {
            return Err(DataError::InvalidParam(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DataError::InvalidParam(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DataError::InvalidParam("non-finite feature".into()));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// Gaussian clusters whose class means sit on a circle of radius 3 in the
/// first two dimensions (class c at angle `2πc / num_classes`); remaining
/// dimensions have zero mean. `spread` is the per-dimension noise sigma.
pub fn gen_blobs(
    num_classes: usize,
    samples_per_class: usize,
    dims: usize,
    spread: f64,
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    if num_classes == 0 || samples_per_class == 0 || dims < 2 {
        return Err(DataError::InvalidParam(
            "blobs need positive counts and at least 2 dims".into(),
        ));
    }
    const RADIUS: f64 = 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(num_classes * samples_per_class);
    let mut labels = Vec::with_capacity(num_classes * samples_per_class);
    for c in 0..num_classes {
        let angle = TAU * c as f64 / num_classes as f64;
        let mean = (RADIUS * angle.cos(), RADIUS * angle.sin());
        for _ in 0..samples_per_class {
            let mut x = vec![0.0; dims];
            x[0] = mean.0;
            x[1] = mean.1;
            for v in x.iter_mut() {
                let n: f64 = rng.sample(StandardNormal);
                *v += spread * n;
            }
            features.push(x);
            labels.push(c);
        }
    }
    LabeledDataset::new(features, labels, num_classes)
}

/// Concentric annuli in 2-D: class c has radius `c + 1`, perturbed by
/// `noise` times a standard normal, at a uniform random angle.
pub fn gen_rings(
    num_classes: usize,
    samples_per_class: usize,
    noise: f64,
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    if num_classes == 0 || samples_per_class == 0 {
        return Err(DataError::InvalidParam("rings need positive counts".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(num_classes * samples_per_class);
    let mut labels = Vec::with_capacity(num_classes * samples_per_class);
    for c in 0..num_classes {
        let base_radius = (c + 1) as f64;
        for _ in 0..samples_per_class {
            let angle: f64 = rng.gen::<f64>() * TAU;
            let n: f64 = rng.sample(StandardNormal);
            let radius = base_radius + noise * n;
            features.push(vec![radius * angle.cos(), radius * angle.sin()]);
            labels.push(c);
        }
    }
    LabeledDataset::new(features, labels, num_classes)
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    File::open(path).map(BufReader::new).map_err(|source| {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    })
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32, DataError> {
    r.read_u32::<BigEndian>().map_err(|_| {
        DataError::Truncated(path.display().to_string())
    })
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path) -> Result<(), DataError> {
    r.read_exact(buf)
        .map_err(|_| DataError::Truncated(path.display().to_string()))
}

/// Load an IDX image/label pair, taking at most `limit` samples. Pixels
/// are scaled to [0,1]; the class count is `max label + 1`.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    limit: Option<usize>,
) -> Result<LabeledDataset, DataError> {
    let mut ir = open(images_path)?;
    let magic = read_u32(&mut ir, images_path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::BadMagic {
            path: images_path.display().to_string(),
            expected: IDX_IMAGES_MAGIC,
            got: magic,
        });
    }
    let n_images = read_u32(&mut ir, images_path)? as usize;
    let rows = read_u32(&mut ir, images_path)? as usize;
    let cols = read_u32(&mut ir, images_path)? as usize;

    let mut lr = open(labels_path)?;
    let magic = read_u32(&mut lr, labels_path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DataError::BadMagic {
            path: labels_path.display().to_string(),
            expected: IDX_LABELS_MAGIC,
            got: magic,
        });
    }
    let n_labels = read_u32(&mut lr, labels_path)? as usize;
    if n_images != n_labels {
        return Err(DataError::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }

    let take = limit.map_or(n_images, |lim| lim.min(n_images));
    let mut features = Vec::with_capacity(take);
    let mut pixel_buf = vec![0u8; rows * cols];
    for _ in 0..take {
        read_exact(&mut ir, &mut pixel_buf, images_path)?;
        features.push(pixel_buf.iter().map(|&p| p as f64 / 255.0).collect());
    }
    let mut label_buf = vec![0u8; take];
    read_exact(&mut lr, &mut label_buf, labels_path)?;
    let labels: Vec<usize> = label_buf.iter().map(|&l| l as usize).collect();
    let num_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    LabeledDataset::new(features, labels, num_classes)
}

/// Write a dataset as an IDX image/label pair. Features must hold values
/// that are exact multiples of 1/255 in [0,1] for a lossless round-trip.
pub fn write_idx(
    data: &LabeledDataset,
    rows: usize,
    cols: usize,
    images_path: &Path,
    labels_path: &Path,
) -> Result<(), DataError> {
    if data.feature_dim() != rows * cols {
        return Err(DataError::InvalidParam(format!(
            "feature dim {} does not equal {rows}x{cols}",
            data.feature_dim()
        )));
    }
    fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError {
        let path = path.display().to_string();
        move |source| DataError::Io { path, source }
    }
    let mut iw = BufWriter::new(File::create(images_path).map_err(io_err(images_path))?);
    iw.write_u32::<BigEndian>(IDX_IMAGES_MAGIC)
        .map_err(io_err(images_path))?;
    iw.write_u32::<BigEndian>(data.len() as u32)
        .map_err(io_err(images_path))?;
    iw.write_u32::<BigEndian>(rows as u32)
        .map_err(io_err(images_path))?;
    iw.write_u32::<BigEndian>(cols as u32)
        .map_err(io_err(images_path))?;
    for sample in &data.features {
        let bytes: Vec<u8> = sample
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        iw.write_all(&bytes).map_err(io_err(images_path))?;
    }
    iw.flush().map_err(io_err(images_path))?;

    let mut lw = BufWriter::new(File::create(labels_path).map_err(io_err(labels_path))?);
    lw.write_u32::<BigEndian>(IDX_LABELS_MAGIC)
        .map_err(io_err(labels_path))?;
    lw.write_u32::<BigEndian>(data.len() as u32)
        .map_err(io_err(labels_path))?;
    let bytes: Vec<u8> = data.labels.iter().map(|&l| l as u8).collect();
    lw.write_all(&bytes).map_err(io_err(labels_path))?;
    lw.flush().map_err(io_err(labels_path))?;
    Ok(())
}

/// Uniform sample of `⌈fraction·N⌉` distinct samples, original order
/// preserved. Deterministic per seed.
pub fn sample_subset(
    data: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DataError::InvalidParam(format!(
            "subset fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let n = data.len();
    if n == 0 {
        return Err(DataError::InvalidParam("cannot subsample empty data".into()));
    }
    let take = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index_sample(&mut rng, n, take).into_vec();
    idx.sort_unstable();
    let features = idx.iter().map(|&i| data.features[i].clone()).collect();
    let labels = idx.iter().map(|&i| data.labels[i]).collect();
    LabeledDataset::new(features, labels, data.num_classes)
}
