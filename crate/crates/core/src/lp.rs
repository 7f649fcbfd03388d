//! Lp-norm machinery for the discriminant objective.
//!
//! The entrywise matrix Lp norm, the trace-ratio objective for a single
//! direction, and the two quantities each solver iteration assembles: a
//! reweighted within-class quadratic matrix and a between-class constraint
//! vector. For `p < 1` the "norm" is only a quasi-norm; it is still valid as
//! an objective.

use nalgebra::{DMatrix, DVector};

use crate::dataset::ClassStats;
use crate::error::{Error, Result};

/// Norm exponent and regularization weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpParams {
    p: f64,
    sigma: f64,
}

impl LpParams {
    pub fn new(p: f64, sigma: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "norm exponent p = {p} must be positive"
            )));
        }
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "regularization sigma = {sigma} must be nonnegative"
            )));
        }
        Ok(LpParams { p, sigma })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Monotone descent of the iteration is guaranteed for `1 <= p <= 2`.
    pub fn convergence_guaranteed(&self) -> bool {
        (1.0..=2.0).contains(&self.p)
    }
}

/// Entrywise Lp norm of a matrix: `(sum |q_ij|^p)^(1/p)`.
///
/// For `p = 2` this is the Frobenius norm.
pub fn lp_norm(q: &DMatrix<f64>, p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "norm exponent p = {p} must be positive"
        )));
    }
    let sum: f64 = q.iter().map(|v| v.abs().powf(p)).sum();
    Ok(sum.powf(1.0 / p))
}

/// Sign function with `sign(0) = 0`.
fn sign0(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum()
    }
}

/// The single-direction objective: within-class Lp^p energy of the projected
/// deviations plus the regularization term, divided by the weighted Lp^p
/// energy of the projected class offsets.
///
/// Scale-invariant in `w`, so it can be monitored on unnormalized iterates.
/// Fails with [`Error::DegenerateDirection`] when `w` annihilates every
/// class offset (zero denominator).
pub fn objective(w: &DVector<f64>, stats: &ClassStats, params: &LpParams) -> Result<f64> {
    let p = params.p;
    let mut denom = 0.0;
    for (offset, &count) in stats.offsets().iter().zip(stats.class_counts()) {
        let projected = offset.transpose() * w;
        denom += count as f64 * projected.iter().map(|v| v.abs().powf(p)).sum::<f64>();
    }
    if denom == 0.0 {
        return Err(Error::DegenerateDirection);
    }

    let mut within = 0.0;
    for class in stats.deviations() {
        for dev in class {
            let projected = dev.transpose() * w;
            within += projected.iter().map(|v| v.abs().powf(p)).sum::<f64>();
        }
    }
    let reg = params.sigma * w.iter().map(|v| v.abs().powf(p)).sum::<f64>();
    Ok((within + reg) / denom)
}

/// Reweighted within-class quadratic matrix for one iteration.
///
/// Each deviation column `z` contributes `|w^T z|^(p-2) z z^T`; the
/// regularization adds `sigma |w_k|^(p-2)` on the diagonal. For `p < 2` any
/// weight denominator below `tau` signals [`Error::PerturbationRequired`]
/// (for `p >= 2` the weights stay finite at zero, so no guard applies).
pub fn quadratic_matrix(
    w: &DVector<f64>,
    stats: &ClassStats,
    params: &LpParams,
    tau: f64,
) -> Result<DMatrix<f64>> {
    let p = params.p;
    let d1 = w.len();
    let mut h = DMatrix::zeros(d1, d1);
    for class in stats.deviations() {
        for dev in class {
            let projected = dev.transpose() * w;
            for (k, &x) in projected.iter().enumerate() {
                let magnitude = x.abs();
                if p < 2.0 && magnitude < tau {
                    return Err(Error::PerturbationRequired);
                }
                let weight = magnitude.powf(p - 2.0);
                h.ger(weight, &dev.column(k), &dev.column(k), 1.0);
            }
        }
    }
    if params.sigma > 0.0 {
        for k in 0..d1 {
            let magnitude = w[k].abs();
            if p < 2.0 && magnitude < tau {
                return Err(Error::PerturbationRequired);
            }
            h[(k, k)] += params.sigma * magnitude.powf(p - 2.0);
        }
    }
    Ok(h)
}

/// Between-class constraint vector for one iteration:
/// `sum_i sum_k N_i |w^T v_ik|^(p-1) sign(w^T v_ik) v_ik` over the columns
/// `v_ik` of each class offset. For `p < 1` a projection magnitude below
/// `tau` signals [`Error::PerturbationRequired`].
pub fn constraint_vector(
    w: &DVector<f64>,
    stats: &ClassStats,
    p: f64,
    tau: f64,
) -> Result<DVector<f64>> {
    let mut h = DVector::zeros(w.len());
    for (offset, &count) in stats.offsets().iter().zip(stats.class_counts()) {
        let projected = offset.transpose() * w;
        for (k, &x) in projected.iter().enumerate() {
            let magnitude = x.abs();
            if p < 1.0 && magnitude < tau {
                return Err(Error::PerturbationRequired);
            }
            let coeff = count as f64 * magnitude.powf(p - 1.0) * sign0(x);
            if coeff != 0.0 {
                h.axpy(coeff, &offset.column(k), 1.0);
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{class_statistics, Dataset, MatrixSample};
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seeded_stats(seed: u64, counts: &[usize], d1: usize, d2: usize) -> ClassStats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for (class, &n) in counts.iter().enumerate() {
            let center = DMatrix::from_fn(d1, d2, |_, _| rng.random_range(-2.0..2.0));
            for _ in 0..n {
                let jitter = DMatrix::from_fn(d1, d2, |_, _| rng.random_range(-0.5..0.5));
                samples.push(MatrixSample::new(&center + jitter, class + 1));
            }
        }
        class_statistics(&Dataset::new(samples).unwrap())
    }

    fn random_unit(seed: u64, d: usize) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)).normalize()
    }

    // Naive re-implementations over plain slices, kept independent of the
    // production path on purpose.
    mod oracle {
        use super::*;

        fn col(m: &DMatrix<f64>, k: usize) -> Vec<f64> {
            (0..m.nrows()).map(|r| m[(r, k)]).collect()
        }

        fn dot(a: &[f64], b: &[f64]) -> f64 {
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        }

        pub fn objective(w: &DVector<f64>, stats: &ClassStats, p: f64, sigma: f64) -> f64 {
            let wv: Vec<f64> = w.iter().copied().collect();
            let mut num = 0.0;
            for class in stats.deviations() {
                for z in class {
                    for k in 0..z.ncols() {
                        num += dot(&wv, &col(z, k)).abs().powf(p);
                    }
                }
            }
            num += sigma * wv.iter().map(|x| x.abs().powf(p)).sum::<f64>();
            let mut den = 0.0;
            for (i, v) in stats.offsets().iter().enumerate() {
                for k in 0..v.ncols() {
                    den += stats.class_counts()[i] as f64 * dot(&wv, &col(v, k)).abs().powf(p);
                }
            }
            num / den
        }

        pub fn quadratic(w: &DVector<f64>, stats: &ClassStats, p: f64, sigma: f64) -> DMatrix<f64> {
            let wv: Vec<f64> = w.iter().copied().collect();
            let d1 = wv.len();
            let mut out = vec![vec![0.0; d1]; d1];
            for class in stats.deviations() {
                for z in class {
                    for k in 0..z.ncols() {
                        let zk = col(z, k);
                        let weight = dot(&wv, &zk).abs().powf(p - 2.0);
                        for r in 0..d1 {
                            for c in 0..d1 {
                                out[r][c] += weight * zk[r] * zk[c];
                            }
                        }
                    }
                }
            }
            for k in 0..d1 {
                out[k][k] += sigma * wv[k].abs().powf(p - 2.0);
            }
            DMatrix::from_fn(d1, d1, |r, c| out[r][c])
        }

        pub fn constraint(w: &DVector<f64>, stats: &ClassStats, p: f64) -> DVector<f64> {
            let wv: Vec<f64> = w.iter().copied().collect();
            let mut out = vec![0.0; wv.len()];
            for (i, v) in stats.offsets().iter().enumerate() {
                for k in 0..v.ncols() {
                    let vk = col(v, k);
                    let proj = dot(&wv, &vk);
                    let s = if proj == 0.0 { 0.0 } else { proj.signum() };
                    let coeff = stats.class_counts()[i] as f64 * proj.abs().powf(p - 1.0) * s;
                    for (o, x) in out.iter_mut().zip(&vk) {
                        *o += coeff * x;
                    }
                }
            }
            DVector::from_vec(out)
        }
    }

    #[test]
    fn lp_norm_hand_values() {
        let q = dmatrix![3.0, 0.0; 4.0, 0.0];
        assert_relative_eq!(lp_norm(&q, 2.0).unwrap(), 5.0, max_relative = 1e-12);

        let q = dmatrix![1.0, -2.0; 0.0, 2.0];
        assert_relative_eq!(lp_norm(&q, 1.0).unwrap(), 5.0, max_relative = 1e-12);

        let q = dmatrix![1.0, 1.0; 1.0, 1.0];
        assert_relative_eq!(lp_norm(&q, 0.5).unwrap(), 16.0, max_relative = 1e-12);
    }

    #[test]
    fn lp_norm_two_matches_frobenius() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-3.0..3.0));
            assert_relative_eq!(lp_norm(&q, 2.0).unwrap(), q.norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn lp_norm_rejects_nonpositive_p() {
        let q = dmatrix![1.0];
        assert!(lp_norm(&q, 0.0).is_err());
        assert!(lp_norm(&q, -1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn lp_norm_is_absolutely_homogeneous(
            seed in 0u64..1000,
            c in -4.0f64..4.0,
            p in prop_p(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0));
            let lhs = lp_norm(&(&q * c), p).unwrap();
            let rhs = c.abs() * lp_norm(&q, p).unwrap();
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }

    fn prop_p() -> impl proptest::strategy::Strategy<Value = f64> {
        proptest::prop_oneof![
            proptest::strategy::Just(0.5),
            proptest::strategy::Just(1.0),
            proptest::strategy::Just(1.5),
            proptest::strategy::Just(2.0),
            proptest::strategy::Just(5.0),
        ]
    }

    #[test]
    fn objective_zero_numerator() {
        // Two singleton classes: deviations are all zero.
        let ds = Dataset::new(vec![
            MatrixSample::new(dmatrix![1.0; 0.0], 1),
            MatrixSample::new(dmatrix![3.0; 0.0], 2),
        ])
        .unwrap();
        let stats = class_statistics(&ds);
        let params = LpParams::new(1.5, 0.0).unwrap();
        let w = dvector![1.0, 0.0];
        assert_eq!(objective(&w, &stats, &params).unwrap(), 0.0);
    }

    #[test]
    fn objective_is_scale_invariant() {
        let stats = seeded_stats(11, &[4, 4, 4], 5, 4);
        for &p in &[0.5, 1.0, 1.5, 2.0, 5.0] {
            let params = LpParams::new(p, 0.1).unwrap();
            let w = random_unit(p.to_bits(), 5);
            let base = objective(&w, &stats, &params).unwrap();
            for &c in &[0.5, 3.0] {
                let scaled = objective(&(&w * c), &stats, &params).unwrap();
                assert_relative_eq!(scaled, base, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn objective_signals_degenerate_direction() {
        // Offsets lie along e1 only; w = e2 kills the denominator.
        let ds = Dataset::new(vec![
            MatrixSample::new(dmatrix![1.0; 0.0], 1),
            MatrixSample::new(dmatrix![-1.0; 0.0], 2),
        ])
        .unwrap();
        let stats = class_statistics(&ds);
        let params = LpParams::new(2.0, 0.0).unwrap();
        let w = dvector![0.0, 1.0];
        assert!(matches!(
            objective(&w, &stats, &params),
            Err(Error::DegenerateDirection)
        ));
    }

    #[test]
    fn objective_matches_summation_oracle() {
        let stats = seeded_stats(23, &[4, 4, 4], 5, 4);
        let params = LpParams::new(1.5, 0.1).unwrap();
        let w = random_unit(99, 5);
        let got = objective(&w, &stats, &params).unwrap();
        let want = oracle::objective(&w, &stats, 1.5, 0.1);
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn quadratic_at_p_two_is_plain_scatter_plus_ridge() {
        let stats = seeded_stats(31, &[3, 3], 4, 3);
        let params = LpParams::new(2.0, 0.7).unwrap();
        let wa = random_unit(1, 4);
        let wb = random_unit(2, 4);
        let ha = quadratic_matrix(&wa, &stats, &params, 1e-12).unwrap();
        let hb = quadratic_matrix(&wb, &stats, &params, 1e-12).unwrap();
        // At p = 2 the weights are identically 1, so H does not depend on w.
        assert_relative_eq!(ha, hb, max_relative = 1e-14);

        let mut plain = DMatrix::zeros(4, 4);
        for class in stats.deviations() {
            for z in class {
                plain += z * z.transpose();
            }
        }
        plain += DMatrix::identity(4, 4) * 0.7;
        assert_relative_eq!(ha, plain, max_relative = 1e-12);
    }

    #[test]
    fn quadratic_single_column_hand_value() {
        // One class, one deviation column z = [1, 0]^T, p = 1, sigma = 0.
        let stats = ClassStats::from_parts(
            DMatrix::zeros(2, 1),
            vec![DMatrix::zeros(2, 1)],
            vec![DMatrix::zeros(2, 1)],
            vec![vec![dmatrix![1.0; 0.0]]],
            vec![1],
        );
        let params = LpParams::new(1.0, 0.0).unwrap();
        let w = dvector![1.0, 0.0];
        let h = quadratic_matrix(&w, &stats, &params, 1e-12).unwrap();
        assert_relative_eq!(h, dmatrix![1.0, 0.0; 0.0, 0.0], max_relative = 1e-15);
    }

    #[test]
    fn quadratic_matches_triple_loop_oracle_and_is_positive_definite() {
        let stats = seeded_stats(41, &[4, 5, 3], 5, 4);
        let params = LpParams::new(1.5, 0.01).unwrap();
        let w = random_unit(7, 5);
        let got = quadratic_matrix(&w, &stats, &params, 1e-12).unwrap();
        let want = oracle::quadratic(&w, &stats, 1.5, 0.01);
        assert_relative_eq!(got, want, max_relative = 1e-12);

        assert!((&got - got.transpose()).amax() < 1e-12);
        let min_eig = nalgebra::SymmetricEigen::new(got).eigenvalues.min();
        assert!(min_eig > 0.0, "min eigenvalue {min_eig}");
    }

    #[test]
    fn quadratic_min_eigenvalue_respects_ridge_bound() {
        let stats = seeded_stats(43, &[4, 4], 4, 3);
        for &p in &[1.0, 1.5, 2.0] {
            let params = LpParams::new(p, 0.2).unwrap();
            let w = random_unit(5, 4);
            let h = quadratic_matrix(&w, &stats, &params, 1e-12).unwrap();
            let bound = w
                .iter()
                .map(|x| 0.2 * x.abs().powf(p - 2.0))
                .fold(f64::INFINITY, f64::min);
            let min_eig = nalgebra::SymmetricEigen::new(h).eigenvalues.min();
            assert!(
                min_eig >= bound - 1e-10,
                "p = {p}: min eig {min_eig} < bound {bound}"
            );
        }
    }

    #[test]
    fn quadratic_requires_perturbation_near_zero_denominator() {
        // w annihilates the only deviation column and p < 2.
        let stats = ClassStats::from_parts(
            DMatrix::zeros(2, 1),
            vec![DMatrix::zeros(2, 1)],
            vec![DMatrix::zeros(2, 1)],
            vec![vec![dmatrix![0.0; 1.0]]],
            vec![1],
        );
        let params = LpParams::new(1.0, 0.0).unwrap();
        let w = dvector![1.0, 0.0];
        assert!(matches!(
            quadratic_matrix(&w, &stats, &params, 1e-12),
            Err(Error::PerturbationRequired)
        ));
        // At p >= 2 the same configuration is fine.
        let params2 = LpParams::new(2.0, 0.0).unwrap();
        assert!(quadratic_matrix(&w, &stats, &params2, 1e-12).is_ok());
    }

    #[test]
    fn constraint_vector_closed_forms() {
        let stats = seeded_stats(53, &[3, 4, 2], 5, 3);
        let w = random_unit(3, 5);

        // p = 1: sum of sign-weighted offset columns.
        let got = constraint_vector(&w, &stats, 1.0, 1e-12).unwrap();
        let mut want = DVector::zeros(5);
        for (v, &n) in stats.offsets().iter().zip(stats.class_counts()) {
            let proj = v.transpose() * &w;
            for k in 0..v.ncols() {
                want.axpy(n as f64 * proj[k].signum(), &v.column(k), 1.0);
            }
        }
        assert_relative_eq!(got, want, max_relative = 1e-12);

        // p = 2: the unnormalized between-class scatter applied to w.
        let got = constraint_vector(&w, &stats, 2.0, 1e-12).unwrap();
        let mut scatter = DMatrix::zeros(5, 5);
        for (v, &n) in stats.offsets().iter().zip(stats.class_counts()) {
            scatter += v * v.transpose() * n as f64;
        }
        assert_relative_eq!(got, &scatter * &w, max_relative = 1e-12);
    }

    #[test]
    fn constraint_matches_summation_oracle() {
        let stats = seeded_stats(61, &[4, 4, 4], 6, 4);
        let w = random_unit(13, 6);
        let got = constraint_vector(&w, &stats, 1.5, 1e-12).unwrap();
        let want = oracle::constraint(&w, &stats, 1.5);
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn exact_zero_offset_projection_contributes_nothing() {
        // w^T v = 0 exactly; for p >= 1 the column must contribute zero.
        let stats = ClassStats::from_parts(
            DMatrix::zeros(2, 1),
            vec![DMatrix::zeros(2, 1); 2],
            vec![dmatrix![0.0; 1.0], dmatrix![0.0; -1.0]],
            vec![vec![], vec![]],
            vec![1, 1],
        );
        let w = dvector![1.0, 0.0];
        for &p in &[1.0, 1.5, 2.0] {
            let h = constraint_vector(&w, &stats, p, 1e-12).unwrap();
            assert_eq!(h, DVector::zeros(2), "p = {p}");
        }
        // For p < 1 the zero projection demands a perturbation instead.
        assert!(matches!(
            constraint_vector(&w, &stats, 0.5, 1e-12),
            Err(Error::PerturbationRequired)
        ));
    }
}
