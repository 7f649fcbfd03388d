//! Matrix-valued samples, datasets and per-class statistics.
//!
//! A dataset holds N samples, each a d1 x d2 real matrix with a class label
//! in `1..=c`. Class statistics reduce a dataset to the quantities the
//! discriminant solvers consume: class means, the offsets of each class mean
//! from the global mean, and the within-class deviations of every sample.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pgm;

/// How raw 8-bit intensities are mapped to reals when loading images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelScale {
    /// Divide by the format maximum, yielding values in `[0, 1]`.
    Unit,
    /// Keep integer intensities as reals in `[0, 255]`.
    Raw,
}

impl PixelScale {
    /// The valid intensity range `[lo, hi]` under this scale.
    pub fn range(self) -> (f64, f64) {
        match self {
            PixelScale::Unit => (0.0, 1.0),
            PixelScale::Raw => (0.0, 255.0),
        }
    }
}

impl fmt::Display for PixelScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PixelScale::Unit => write!(f, "unit"),
            PixelScale::Raw => write!(f, "raw"),
        }
    }
}

impl std::str::FromStr for PixelScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(PixelScale::Unit),
            "raw" => Ok(PixelScale::Raw),
            other => Err(Error::InvalidParameter(format!(
                "unknown pixel scale `{other}` (expected unit|raw)"
            ))),
        }
    }
}

/// One d1 x d2 sample with a class label in `1..=c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    pub values: DMatrix<f64>,
    pub label: usize,
}

impl MatrixSample {
    pub fn new(values: DMatrix<f64>, label: usize) -> Self {
        MatrixSample { values, label }
    }
}

/// An ordered collection of samples sharing one shape, with contiguous
/// labels `1..=c` each appearing at least once.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<MatrixSample>,
    class_counts: Vec<usize>,
    d1: usize,
    d2: usize,
}

impl Dataset {
    /// Validate and build a dataset. Labels must cover `1..=c` with every
    /// class nonempty and `c >= 2`; all samples must share one finite shape.
    pub fn new(samples: Vec<MatrixSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("dataset has no samples".into()));
        }
        let (d1, d2) = samples[0].values.shape();
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidParameter("zero sample dimension".into()));
        }
        let c = samples.iter().map(|s| s.label).max().unwrap_or(0);
        if c < 2 {
            return Err(Error::InvalidParameter(
                "fewer than 2 classes in dataset".into(),
            ));
        }
        let mut class_counts = vec![0usize; c];
        for (idx, s) in samples.iter().enumerate() {
            if s.values.shape() != (d1, d2) {
                return Err(Error::ShapeMismatch(format!(
                    "sample {idx} has shape {:?}, expected ({d1}, {d2})",
                    s.values.shape()
                )));
            }
            if s.label == 0 || s.label > c {
                return Err(Error::InvalidParameter(format!(
                    "sample {idx} has label {} outside 1..={c}",
                    s.label
                )));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "sample {idx} contains a non-finite entry"
                )));
            }
            class_counts[s.label - 1] += 1;
        }
        if let Some(empty) = class_counts.iter().position(|&n| n == 0) {
            return Err(Error::InvalidParameter(format!(
                "class {} has no samples",
                empty + 1
            )));
        }
        Ok(Dataset {
            samples,
            class_counts,
            d1,
            d2,
        })
    }

    pub fn samples(&self) -> &[MatrixSample] {
        &self.samples
    }

    /// Number of samples per class, indexed by `label - 1`.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample shape `(d1, d2)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    /// Indices of the samples belonging to `label`, in dataset order.
    pub fn class_indices(&self, label: usize) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// A new dataset containing the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let samples = indices
            .iter()
            .map(|&i| self.samples[i].clone())
            .collect::<Vec<_>>();
        Dataset::new(samples)
    }
}

/// Load a dataset from `<root>/<class_name>/<image>.pgm`.
///
/// Labels are assigned by lexicographic order of the class subdirectory
/// names, starting at 1; files within a class are read in lexicographic
/// order. All images must share one shape and at least two classes must be
/// present.
pub fn load_dataset(root: &Path, scale: PixelScale) -> Result<Dataset> {
    if !root.is_dir() {
        return Err(Error::DatasetLayout {
            path: root.to_path_buf(),
            reason: "missing dataset directory".into(),
        });
    }
    let mut class_dirs: Vec<_> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.len() < 2 {
        return Err(Error::DatasetLayout {
            path: root.to_path_buf(),
            reason: format!("fewer than 2 classes ({} found)", class_dirs.len()),
        });
    }

    let mut samples = Vec::new();
    let mut shape: Option<(usize, usize)> = None;
    for (class_idx, dir) in class_dirs.iter().enumerate() {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "pgm"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::DatasetLayout {
                path: dir.clone(),
                reason: "class directory contains no .pgm images".into(),
            });
        }
        for file in files {
            let mut img = pgm::read_pgm(&file)?;
            match shape {
                None => shape = Some(img.shape()),
                Some(expected) if img.shape() != expected => {
                    return Err(Error::DatasetLayout {
                        path: file,
                        reason: format!(
                            "image shape {:?} does not match dataset shape {:?}",
                            img.shape(),
                            expected
                        ),
                    });
                }
                _ => {}
            }
            if scale == PixelScale::Unit {
                img /= 255.0;
            }
            samples.push(MatrixSample::new(img, class_idx + 1));
        }
    }
    Dataset::new(samples)
}

/// Per-class statistics: everything the discriminant solvers need.
#[derive(Debug, Clone)]
pub struct ClassStats {
    global_mean: DMatrix<f64>,
    class_means: Vec<DMatrix<f64>>,
    /// Offsets of each class mean from the global mean.
    offsets: Vec<DMatrix<f64>>,
    /// Within-class deviations of each sample from its class mean.
    deviations: Vec<Vec<DMatrix<f64>>>,
    class_counts: Vec<usize>,
}

impl ClassStats {
    pub(crate) fn from_parts(
        global_mean: DMatrix<f64>,
        class_means: Vec<DMatrix<f64>>,
        offsets: Vec<DMatrix<f64>>,
        deviations: Vec<Vec<DMatrix<f64>>>,
        class_counts: Vec<usize>,
    ) -> Self {
        ClassStats {
            global_mean,
            class_means,
            offsets,
            deviations,
            class_counts,
        }
    }

    pub fn global_mean(&self) -> &DMatrix<f64> {
        &self.global_mean
    }

    pub fn class_means(&self) -> &[DMatrix<f64>] {
        &self.class_means
    }

    /// `V_i`: class mean minus global mean, one matrix per class.
    pub fn offsets(&self) -> &[DMatrix<f64>] {
        &self.offsets
    }

    /// `Z_ij`: sample minus class mean, grouped per class.
    pub fn deviations(&self) -> &[Vec<DMatrix<f64>>] {
        &self.deviations
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn total(&self) -> usize {
        self.class_counts.iter().sum()
    }

    /// Row dimension of the stored matrices.
    pub fn d1(&self) -> usize {
        self.global_mean.nrows()
    }

    pub fn d2(&self) -> usize {
        self.global_mean.ncols()
    }

    /// Apply a row-space projection `M -> B^T M` to every stored matrix.
    ///
    /// Linear maps commute with the mean identities, so the projected stats
    /// satisfy the same invariants in the reduced space.
    pub fn project_rows(&self, basis_t: &DMatrix<f64>) -> ClassStats {
        let map = |m: &DMatrix<f64>| basis_t * m;
        ClassStats {
            global_mean: map(&self.global_mean),
            class_means: self.class_means.iter().map(map).collect(),
            offsets: self.offsets.iter().map(map).collect(),
            deviations: self
                .deviations
                .iter()
                .map(|zs| zs.iter().map(map).collect())
                .collect(),
            class_counts: self.class_counts.clone(),
        }
    }
}

/// Compute global/class means, class offsets and within-class deviations.
pub fn class_statistics(dataset: &Dataset) -> ClassStats {
    let (d1, d2) = dataset.dims();
    let c = dataset.num_classes();
    let n = dataset.len() as f64;

    let mut global_mean = DMatrix::zeros(d1, d2);
    let mut class_means = vec![DMatrix::zeros(d1, d2); c];
    for s in dataset.samples() {
        global_mean += &s.values;
        class_means[s.label - 1] += &s.values;
    }
    global_mean /= n;
    for (mean, &count) in class_means.iter_mut().zip(dataset.class_counts()) {
        *mean /= count as f64;
    }

    let offsets: Vec<_> = class_means.iter().map(|m| m - &global_mean).collect();
    let mut deviations = vec![Vec::new(); c];
    for s in dataset.samples() {
        deviations[s.label - 1].push(&s.values - &class_means[s.label - 1]);
    }

    ClassStats::from_parts(
        global_mean,
        class_means,
        offsets,
        deviations,
        dataset.class_counts().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(seed: u64, counts: &[usize], d1: usize, d2: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for (class, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                let m = DMatrix::from_fn(d1, d2, |_, _| rng.random_range(-1.0..1.0));
                samples.push(MatrixSample::new(m, class + 1));
            }
        }
        Dataset::new(samples).unwrap()
    }

    #[test]
    fn two_point_means_and_offsets() {
        let ds = Dataset::new(vec![
            MatrixSample::new(dmatrix![1.0], 1),
            MatrixSample::new(dmatrix![3.0], 2),
        ])
        .unwrap();
        let stats = class_statistics(&ds);
        assert_eq!(stats.global_mean()[(0, 0)], 2.0);
        assert_eq!(stats.offsets()[0][(0, 0)], -1.0);
        assert_eq!(stats.offsets()[1][(0, 0)], 1.0);
        for zs in stats.deviations() {
            for z in zs {
                assert_eq!(z[(0, 0)], 0.0);
            }
        }
    }

    #[test]
    fn centering_identities_hold() {
        // Direct summation oracle over a seeded 3-class dataset.
        let ds = random_dataset(7, &[4, 5, 3], 4, 3);
        let stats = class_statistics(&ds);

        let mut weighted_offsets = DMatrix::zeros(4, 3);
        for (v, &n) in stats.offsets().iter().zip(stats.class_counts()) {
            weighted_offsets += v * n as f64;
        }
        assert!(weighted_offsets.amax() < 1e-10);

        for zs in stats.deviations() {
            let mut sum = DMatrix::zeros(4, 3);
            for z in zs {
                sum += z;
            }
            assert!(sum.amax() < 1e-10);
        }

        let mut weighted_means = DMatrix::zeros(4, 3);
        for (m, &n) in stats.class_means().iter().zip(stats.class_counts()) {
            weighted_means += m * n as f64;
        }
        let diff = (&weighted_means - stats.global_mean() * ds.len() as f64).amax();
        assert!(diff < 1e-10 * ds.len() as f64);
    }

    #[test]
    fn rejects_single_class_and_shape_mismatch() {
        let one_class = Dataset::new(vec![
            MatrixSample::new(dmatrix![1.0], 1),
            MatrixSample::new(dmatrix![2.0], 1),
        ]);
        assert!(matches!(one_class, Err(Error::InvalidParameter(_))));

        let mismatch = Dataset::new(vec![
            MatrixSample::new(dmatrix![1.0], 1),
            MatrixSample::new(dmatrix![1.0, 2.0], 2),
        ]);
        assert!(matches!(mismatch, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn loads_class_directories_in_lexicographic_order() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        for (name, count, base) in [("b_class", 2usize, 40.0), ("a_class", 3usize, 200.0)] {
            let sub = root.join(name);
            std::fs::create_dir(&sub).unwrap();
            for i in 0..count {
                let img = DMatrix::from_element(4, 4, base + i as f64);
                pgm::write_pgm(&sub.join(format!("img_{i}.pgm")), &img).unwrap();
            }
        }
        let ds = load_dataset(root, PixelScale::Raw).unwrap();
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.len(), 5);
        // a_class sorts first, so label 1 has 3 samples near 200.
        assert_eq!(ds.class_counts(), &[3, 2]);
        assert_eq!(ds.samples()[0].label, 1);
        assert!(ds.samples()[0].values[(0, 0)] >= 200.0);

        let unit = load_dataset(root, PixelScale::Unit).unwrap();
        assert!(unit
            .samples()
            .iter()
            .all(|s| s.values.iter().all(|&v| (0.0..=1.0).contains(&v))));
    }

    #[test]
    fn load_errors_name_the_offending_path() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let only = root.join("only_class");
        std::fs::create_dir(&only).unwrap();
        pgm::write_pgm(&only.join("x.pgm"), &DMatrix::from_element(2, 2, 1.0)).unwrap();
        match load_dataset(root, PixelScale::Unit) {
            Err(Error::DatasetLayout { path, reason }) => {
                assert_eq!(path, root);
                assert!(reason.contains("fewer than 2 classes"), "{reason}");
            }
            other => panic!("expected layout error, got {other:?}"),
        }

        // Add a second class with a mismatched image shape.
        let second = root.join("second_class");
        std::fs::create_dir(&second).unwrap();
        pgm::write_pgm(&second.join("y.pgm"), &DMatrix::from_element(3, 2, 1.0)).unwrap();
        match load_dataset(root, PixelScale::Unit) {
            Err(Error::DatasetLayout { path, .. }) => {
                assert!(path.ends_with("second_class/y.pgm"));
            }
            other => panic!("expected layout error, got {other:?}"),
        }

        assert!(matches!(
            load_dataset(&root.join("nope"), PixelScale::Unit),
            Err(Error::DatasetLayout { .. })
        ));
    }
}
