//! Seeded synthetic dataset generator.
//!
//! A desk-scale stand-in for face databases: each class gets a random mean
//! image, samples scatter around it with Gaussian spread, and an optional
//! fraction of samples per class is replaced by high-variance outlier draws
//! (10x the within-class spread). Intensities live on the unit scale and are
//! clamped to `[0, 1]`.
//!
//! The generator parameters are read from a line-oriented `key = value`
//! file with keys `classes`, `per_class`, `rows`, `cols`, `separation`,
//! `spread`, `outlier_fraction`.

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, MatrixSample};
use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::pgm;

/// Outlier draws use this multiple of the within-class spread.
const OUTLIER_SPREAD_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub rows: usize,
    pub cols: usize,
    /// Class-mean separation, in units of `spread`.
    pub separation: f64,
    /// Within-class Gaussian standard deviation.
    pub spread: f64,
    /// Fraction of each class replaced by outlier draws, in `[0, 1]`.
    pub outlier_fraction: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidParameter(
                "synthetic spec needs at least 2 classes".into(),
            ));
        }
        if self.per_class < 2 {
            return Err(Error::InvalidParameter(
                "synthetic spec needs at least 2 samples per class".into(),
            ));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidParameter("zero image dimension".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidParameter(format!(
                "outlier fraction {} outside [0, 1]",
                self.outlier_fraction
            )));
        }
        if self.separation < 0.0 || self.spread < 0.0 {
            return Err(Error::InvalidParameter(
                "separation and spread must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let spec = SynthSpec {
            classes: kv.parse_or("classes", 0usize)?,
            per_class: kv.parse_or("per_class", 0usize)?,
            rows: kv.parse_or("rows", 0usize)?,
            cols: kv.parse_or("cols", 0usize)?,
            separation: kv.parse_or("separation", 1.0f64)?,
            spread: kv.parse_or("spread", 0.1f64)?,
            outlier_fraction: kv.parse_or("outlier_fraction", 0.0f64)?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A generated dataset plus the indices of the replaced outlier samples.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: Dataset,
    /// `(label, index within class)` of every outlier, in draw order.
    pub outliers: Vec<(usize, usize)>,
}

/// Generate a dataset in memory. Deterministic given `(spec, seed)`.
///
/// Class means are `0.5 + separation * spread * N(0,1)` per entry; samples
/// add `spread * N(0,1)`; outliers add `10 * spread * N(0,1)` instead.
/// Every intensity is clamped to `[0, 1]`.
pub fn generate(spec: &SynthSpec, seed: u64) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit_normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let n_outliers = (spec.outlier_fraction * spec.per_class as f64).round() as usize;

    let mut samples = Vec::with_capacity(spec.classes * spec.per_class);
    let mut outliers = Vec::new();
    for class in 1..=spec.classes {
        let mean = DMatrix::from_fn(spec.rows, spec.cols, |_, _| {
            0.5 + spec.separation * spec.spread * unit_normal.sample(&mut rng)
        });
        let outlier_set: Vec<usize> =
            rand::seq::index::sample(&mut rng, spec.per_class, n_outliers).into_vec();
        for j in 0..spec.per_class {
            let scale = if outlier_set.contains(&j) {
                outliers.push((class, j));
                OUTLIER_SPREAD_FACTOR * spec.spread
            } else {
                spec.spread
            };
            let img = DMatrix::from_fn(spec.rows, spec.cols, |r, c| {
                (mean[(r, c)] + scale * unit_normal.sample(&mut rng)).clamp(0.0, 1.0)
            });
            samples.push(MatrixSample::new(img, class));
        }
    }
    Ok(SynthData {
        dataset: Dataset::new(samples)?,
        outliers,
    })
}

/// Generate and write a PGM dataset tree under `out`, one directory per
/// class, plus an `outliers.txt` sidecar listing the outlier files.
pub fn make_synthetic(spec: &SynthSpec, seed: u64, out: &Path) -> Result<()> {
    let data = generate(spec, seed)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let class_width = spec.classes.to_string().len().max(2);
    let img_width = spec.per_class.to_string().len().max(3);

    let class_dir =
        |label: usize| out.join(format!("class_{label:0width$}", width = class_width));
    for label in 1..=spec.classes {
        std::fs::create_dir_all(class_dir(label)).map_err(|e| Error::io(out, e))?;
    }
    let mut per_class_counter = vec![0usize; spec.classes];
    for sample in data.dataset.samples() {
        let j = per_class_counter[sample.label - 1];
        per_class_counter[sample.label - 1] += 1;
        let path = class_dir(sample.label).join(format!("img_{j:0width$}.pgm", width = img_width));
        pgm::write_pgm(&path, &(&sample.values * 255.0))?;
    }

    let mut manifest = String::new();
    let mut sorted = data.outliers.clone();
    sorted.sort_unstable();
    for (label, j) in sorted {
        manifest.push_str(&format!(
            "class_{label:0cw$}/img_{j:0iw$}.pgm\n",
            cw = class_width,
            iw = img_width
        ));
    }
    let manifest_path = out.join("outliers.txt");
    std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(())
}
