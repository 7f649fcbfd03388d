//! Shared fixtures for the integration suites.

use g2dlda::{Dataset, MatrixSample};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three classes, 10 samples each, 8x6. The discriminative information is
/// concentrated on one row (class centers shift along a single-row axis)
/// and the within-class variation is impulsive: one corrupted row per
/// column plus a tiny dense jitter. This regime pins the optimal direction
/// sharply, which keeps the iterate stopping test responsive even at p = 1.
pub fn sparse_axis_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d1, d2, per_class) = (8usize, 6usize, 10usize);
    let axis_row = rng.random_range(0..d1);
    let mut axis = DMatrix::zeros(d1, d2);
    for c in 0..d2 {
        axis[(axis_row, c)] =
            rng.random_range(0.5..1.0) * if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
    }
    let axis = axis.normalize();
    let mut samples = Vec::new();
    for (class_idx, &shift) in [-1.0f64, 0.0, 1.0].iter().enumerate() {
        let offset = DMatrix::from_fn(d1, d2, |_, _| 0.02 * rng.random_range(-1.0f64..1.0));
        let center = &axis * shift + offset;
        for _ in 0..per_class {
            let mut img = center.clone();
            for c in 0..d2 {
                let r = rng.random_range(0..d1);
                img[(r, c)] += 0.3 * if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            }
            for r in 0..d1 {
                for c in 0..d2 {
                    img[(r, c)] += 0.005 * rng.random_range(-1.0f64..1.0);
                }
            }
            samples.push(MatrixSample::new(img, class_idx + 1));
        }
    }
    Dataset::new(samples).unwrap()
}

/// Three classes, 10 samples each, 8x6, dense Gaussian-like clusters with
/// well-separated random centers. Within-class scatter is full rank.
pub fn dense_cluster_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for class in 1..=3usize {
        let center = DMatrix::from_fn(8, 6, |_, _| 1.5 * rng.random_range(-1.0f64..1.0));
        for _ in 0..10 {
            let jitter = DMatrix::from_fn(8, 6, |_, _| 0.4 * rng.random_range(-1.0f64..1.0));
            samples.push(MatrixSample::new(&center + jitter, class));
        }
    }
    Dataset::new(samples).unwrap()
}
