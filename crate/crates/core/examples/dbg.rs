use g2dlda::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// criterion-1 style fixture (sparse axis + impulses)
fn sparse_fixture(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d1, d2, per_class) = (8usize, 6usize, 10usize);
    let axis_row = rng.random_range(0..d1);
    let mut axis = DMatrix::zeros(d1, d2);
    for c in 0..d2 {
        axis[(axis_row, c)] = rng.random_range(0.5..1.0) * if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
    }
    let axis = axis.normalize();
    let mut samples = Vec::new();
    for (ci, &shift) in [-1.0f64, 0.0, 1.0].iter().enumerate() {
        let off = DMatrix::from_fn(d1, d2, |_, _| 0.02 * rng.random_range(-1.0f64..1.0));
        let center = &axis * shift + off;
        for _ in 0..per_class {
            let mut img = center.clone();
            for c in 0..d2 {
                let r = rng.random_range(0..d1);
                img[(r, c)] += 0.3 * if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            }
            for r in 0..d1 { for c in 0..d2 { img[(r, c)] += 0.005 * rng.random_range(-1.0f64..1.0); } }
            samples.push(MatrixSample::new(img, ci + 1));
        }
    }
    Dataset::new(samples).unwrap()
}

// dense gaussian fixture
fn dense_fixture(seed: u64) -> Dataset {
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

fn check(name: &str, make: fn(u64) -> Dataset) {
    let mut worst_angle: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for seed in 0..20u64 {
        let ds = make(seed);
        let stats = class_statistics(&ds);
        let mut config = SolverConfig::new(LpParams::new(2.0, 0.0).unwrap());
        config.epsilon = 1e-10;
        config.itmax = 5000;
        config.seed = seed;
        let (w, _) = solve_direction(&stats, &config, None).unwrap();
        let pair = scatter_matrices(&stats);
        let mu = (w.transpose() * pair.sb() * &w)[(0, 0)] / (w.transpose() * pair.sw() * &w)[(0, 0)];
        let residual = (pair.sb() * &w - pair.sw() * &w * mu).norm() / w.norm();
        let baseline = fit_2dlda(&ds, 1, 0.0).unwrap();
        let angle = w.dot(&baseline.direction(0)).abs().clamp(0.0, 1.0).acos();
        worst_angle = worst_angle.max(angle);
        worst_residual = worst_residual.max(residual);
    }
    println!("{name}: worst angle {worst_angle:.3e} (< 1e-3?), worst residual {worst_residual:.3e} (< 1e-5?)");
}

fn main() {
    check("sparse fixture", sparse_fixture);
    check("dense fixture", dense_fixture);
}
