//! Seeded noise injectors for recognition experiments.
//!
//! Three corruption models operate on intensity matrices with a known valid
//! range `[lo, hi]`: salt-and-pepper pixel flips, additive Gaussian noise on
//! a random rectangle, and a black occluding block. All three are pure
//! functions of their inputs: the same seed always yields bit-identical
//! output. Randomness comes from `ChaCha8Rng` (portable across platforms),
//! with draws consumed in row-major pixel order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Which corruption model to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    SaltPepper,
    GaussianRect,
    BlackBlock,
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseKind::SaltPepper => write!(f, "salt_pepper"),
            NoiseKind::GaussianRect => write!(f, "gaussian_rect"),
            NoiseKind::BlackBlock => write!(f, "black_block"),
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "salt_pepper" => Ok(NoiseKind::SaltPepper),
            "gaussian_rect" => Ok(NoiseKind::GaussianRect),
            "black_block" => Ok(NoiseKind::BlackBlock),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise kind `{other}`"
            ))),
        }
    }
}

/// Full description of one corruption; fields irrelevant to `kind` are
/// ignored when applied.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Salt-and-pepper flip probability, in `[0, 1]`.
    pub density: f64,
    /// Gaussian noise variance, nonnegative.
    pub variance: f64,
    /// Rectangle area as a fraction of the image, in `(0, 1]`.
    pub coverage: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::InvalidParameter(format!(
                "noise density {} outside [0, 1]",
                self.density
            )));
        }
        if self.variance < 0.0 || !self.variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance {} must be nonnegative",
                self.variance
            )));
        }
        match self.kind {
            NoiseKind::GaussianRect | NoiseKind::BlackBlock => {
                if !(self.coverage > 0.0 && self.coverage <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "noise coverage {} outside (0, 1]",
                        self.coverage
                    )));
                }
            }
            NoiseKind::SaltPepper => {}
        }
        Ok(())
    }

    /// Apply this corruption to `img`, whose values live in `[lo, hi]`.
    pub fn apply(&self, img: &DMatrix<f64>, lo: f64, hi: f64) -> Result<DMatrix<f64>> {
        self.validate()?;
        match self.kind {
            NoiseKind::SaltPepper => inject_salt_pepper(img, self.density, lo, hi, self.seed),
            NoiseKind::GaussianRect => {
                inject_gaussian_rect(img, self.variance, self.coverage, lo, hi, self.seed)
            }
            NoiseKind::BlackBlock => inject_black_block(img, self.coverage, lo, self.seed),
        }
    }
}

/// Replace each pixel independently with probability `density`; a replaced
/// pixel becomes `lo` or `hi` with equal probability.
pub fn inject_salt_pepper(
    img: &DMatrix<f64>,
    density: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter(format!(
            "noise density {density} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = img.clone();
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            if rng.random::<f64>() < density {
                out[(i, j)] = if rng.random::<f64>() >= 0.5 { hi } else { lo };
            }
        }
    }
    Ok(out)
}

/// Add zero-mean Gaussian noise with the given variance inside a random
/// rectangle covering `coverage` of the image, then clamp to `[lo, hi]`.
/// Pixels outside the rectangle are untouched.
pub fn inject_gaussian_rect(
    img: &DMatrix<f64>,
    variance: f64,
    coverage: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if variance < 0.0 || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise variance {variance} must be nonnegative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rect = sample_rect(img.nrows(), img.ncols(), coverage, &mut rng)?;
    let normal = Normal::new(0.0, variance.sqrt())
        .map_err(|e| Error::InvalidParameter(format!("bad gaussian parameters: {e}")))?;
    let mut out = img.clone();
    for i in rect.top..rect.top + rect.height {
        for j in rect.left..rect.left + rect.width {
            let noisy = out[(i, j)] + normal.sample(&mut rng);
            out[(i, j)] = noisy.clamp(lo, hi);
        }
    }
    Ok(out)
}

/// Set a random rectangle covering `coverage` of the image to `lo`.
pub fn inject_black_block(
    img: &DMatrix<f64>,
    coverage: f64,
    lo: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rect = sample_rect(img.nrows(), img.ncols(), coverage, &mut rng)?;
    let mut out = img.clone();
    for i in rect.top..rect.top + rect.height {
        for j in rect.left..rect.left + rect.width {
            out[(i, j)] = lo;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    #[cfg(test)]
    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

/// Sample a rectangle of area ~= `coverage * rows * cols`, fully inside the
/// image. The aspect ratio is drawn log-uniformly in `[1/4, 4]`, then the
/// side lengths are rounded (and re-derived once if clamped at an image
/// edge) so the area stays within one row/column of the target; the position
/// is uniform over feasible placements.
pub(crate) fn sample_rect(
    rows: usize,
    cols: usize,
    coverage: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Rect> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "noise coverage {coverage} outside (0, 1]"
        )));
    }
    let target = (coverage * rows as f64 * cols as f64).round().max(1.0);

    let log_ratio = rng.random_range(-(4.0f64.ln())..=4.0f64.ln());
    let ratio = log_ratio.exp();
    let mut height = (target * ratio).sqrt().round().clamp(1.0, rows as f64) as usize;
    let width = (target / height as f64).round().clamp(1.0, cols as f64) as usize;
    // If width saturated at the image edge, re-derive the height so the area
    // still tracks the target (coverage 1 must yield the whole image).
    if (width as f64) < (target / height as f64).round() {
        height = (target / width as f64).round().clamp(1.0, rows as f64) as usize;
    }

    let top = rng.random_range(0..=rows - height);
    let left = rng.random_range(0..=cols - width);
    Ok(Rect {
        top,
        left,
        height,
        width,
    })
}
