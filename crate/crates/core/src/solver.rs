//! Iterative solver for generalized Lp-norm 2D discriminant directions.
//!
//! One direction is found by repeatedly assembling a reweighted quadratic
//! matrix `Q` and constraint vector `b` from the current iterate, solving the
//! equality-constrained quadratic `min w^T Q w s.t. b^T w = 1` in closed form
//! (one symmetric linear solve plus a scaling), and renormalizing. Multiple
//! directions are produced by deflation: each new direction is solved in the
//! orthogonal complement of the previous ones, spanned by an explicit
//! null-space basis.
//!
//! For `1 <= p <= 2` the update never increases the objective, so the trace
//! of objective values is nonincreasing; for other `p` the solver keeps the
//! best iterate seen instead of trusting the last one.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{class_statistics, ClassStats, Dataset};
use crate::error::{Error, Result};
use crate::lp::{self, LpParams};
use crate::model::{ModelSource, ProjectionModel};

/// Maximum number of consecutive fruitless perturbations before giving up
/// on a direction.
const MAX_PERTURBATIONS: usize = 5;

/// Everything that controls a fit.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub params: LpParams,
    /// Stopping tolerance on the sign-insensitive iterate difference.
    pub epsilon: f64,
    /// Iteration cap per direction.
    pub itmax: usize,
    /// Zero threshold for the reweighting denominators.
    pub tau: f64,
    /// Magnitude of the uniform perturbation applied to degenerate iterates.
    pub delta_mag: f64,
    pub seed: u64,
    /// Number of directions to fit.
    pub r1: usize,
}

impl SolverConfig {
    pub fn new(params: LpParams) -> Self {
        SolverConfig {
            params,
            epsilon: 1e-4,
            itmax: 50,
            tau: 1e-12,
            delta_mag: 1e-6,
            seed: 0,
            r1: 1,
        }
    }

    pub fn validate(&self, d1: usize) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if self.itmax == 0 {
            return Err(Error::InvalidParameter("itmax must be at least 1".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        if !(self.delta_mag > 0.0) {
            return Err(Error::InvalidParameter(
                "delta_mag must be positive".into(),
            ));
        }
        if self.r1 == 0 || self.r1 > d1 {
            return Err(Error::InvalidParameter(format!(
                "r1 = {} outside 1..={d1}",
                self.r1
            )));
        }
        Ok(())
    }
}

/// Why a direction's iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    ItmaxReached,
}

/// Per-direction record of the iteration.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    /// Objective value after each completed iteration.
    pub objectives: Vec<f64>,
    pub termination: Termination,
    pub iterations: usize,
    /// Number of random perturbations applied to escape degeneracy.
    pub perturbations: usize,
    /// Number of times a singular quadratic matrix needed a ridge to factor.
    pub ridge_fallbacks: usize,
    /// Whether monotone descent was guaranteed for the configured `p`.
    pub convergence_guaranteed: bool,
}

/// Mix a stream index into a base seed (splitmix64 finalizer). Used to give
/// every direction, noise draw and split its own deterministic stream.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Solve for one unit discriminant direction in the space of `stats`.
///
/// `w0` overrides the default all-ones initialization. The returned vector
/// is the last iterate when descent is guaranteed (`1 <= p <= 2`), otherwise
/// the iterate with the lowest recorded objective.
pub fn solve_direction(
    stats: &ClassStats,
    config: &SolverConfig,
    w0: Option<&DVector<f64>>,
) -> Result<(DVector<f64>, SolverTrace)> {
    let d1 = stats.d1();
    if d1 == 0 || stats.num_classes() < 2 {
        return Err(Error::InvalidParameter(
            "statistics must cover at least 2 classes in a nonzero dimension".into(),
        ));
    }
    config.validate(d1.max(config.r1))?;

    let mut w = match w0 {
        Some(v) => {
            if v.len() != d1 {
                return Err(Error::ShapeMismatch(format!(
                    "w0 has length {}, expected {d1}",
                    v.len()
                )));
            }
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Error::InvalidParameter("w0 must be nonzero".into()));
            }
            v / norm
        }
        None => DVector::from_element(d1, 1.0 / (d1 as f64).sqrt()),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = SolverTrace {
        objectives: Vec::new(),
        termination: Termination::ItmaxReached,
        iterations: 0,
        perturbations: 0,
        ridge_fallbacks: 0,
        convergence_guaranteed: config.params.convergence_guaranteed(),
    };

    let mut best: Option<(f64, DVector<f64>)> = None;

    for _ in 0..config.itmax {
        let (quadratic, constraint) = assemble(&mut w, stats, config, &mut trace, &mut rng)?;
        let solution = solve_symmetric(&quadratic, &constraint, d1, &mut trace)?;
        // Scale onto the constraint plane, then renormalize to unit length;
        // the objective is scale-invariant so only the direction matters.
        let scale = constraint.dot(&solution);
        let w_next = (solution / scale).normalize();

        let objective = match lp::objective(&w_next, stats, &config.params) {
            Ok(v) => v,
            // A degenerate new iterate gets caught (and perturbed) on the
            // next pass through `assemble`.
            Err(Error::DegenerateDirection) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        trace.objectives.push(objective);
        trace.iterations += 1;
        if best.as_ref().is_none_or(|(b, _)| objective < *b) {
            best = Some((objective, w_next.clone()));
        }

        // Directions are sign-indeterminate; measure the step against both
        // orientations so convergence is not masked by a sign flip.
        let step = (&w_next - &w).norm().min((&w_next + &w).norm());
        w = w_next;
        if step < config.epsilon {
            trace.termination = Termination::Converged;
            break;
        }
    }

    let result = if trace.convergence_guaranteed {
        w
    } else {
        best.map(|(_, v)| v).unwrap_or(w)
    };
    Ok((result, trace))
}

/// Assemble the iteration's quadratic matrix and constraint vector,
/// perturbing the iterate away from degeneracies (zero reweighting
/// denominators, a vanished objective denominator, or a zero constraint
/// vector).
///
/// For `p < 2` a benign perturbation is expected now and then: the iterate
/// can ride a flat valley where one projected deviation decays through the
/// zero threshold. Only [`MAX_PERTURBATIONS`] consecutive fruitless
/// attempts — degeneracy that no perturbation escapes, e.g. identically
/// zero class offsets — abort the direction.
fn assemble(
    w: &mut DVector<f64>,
    stats: &ClassStats,
    config: &SolverConfig,
    trace: &mut SolverTrace,
    rng: &mut ChaCha8Rng,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut attempts = 0usize;
    loop {
        let attempt = (|| -> Result<(DMatrix<f64>, DVector<f64>)> {
            match lp::objective(w, stats, &config.params) {
                Ok(_) => {}
                Err(Error::DegenerateDirection) => return Err(Error::PerturbationRequired),
                Err(e) => return Err(e),
            }
            let quadratic = lp::quadratic_matrix(w, stats, &config.params, config.tau)?;
            let constraint = lp::constraint_vector(w, stats, config.params.p(), config.tau)?;
            if constraint.norm() < config.tau {
                return Err(Error::PerturbationRequired);
            }
            Ok((quadratic, constraint))
        })();
        match attempt {
            Ok(pair) => return Ok(pair),
            Err(Error::PerturbationRequired) => {
                if attempts >= MAX_PERTURBATIONS {
                    return Err(Error::NoDiscriminantDirection);
                }
                let delta = DVector::from_fn(w.len(), |_, _| {
                    rng.random_range(-config.delta_mag..=config.delta_mag)
                });
                let shifted = &*w + delta;
                let norm = shifted.norm();
                if norm > 0.0 {
                    *w = shifted / norm;
                }
                attempts += 1;
                trace.perturbations += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Solve `Q x = b` for symmetric positive (semi)definite `Q`, falling back
/// to a small ridge when the Cholesky factorization fails.
fn solve_symmetric(
    quadratic: &DMatrix<f64>,
    rhs: &DVector<f64>,
    d1: usize,
    trace: &mut SolverTrace,
) -> Result<DVector<f64>> {
    if let Some(chol) = Cholesky::new(quadratic.clone()) {
        return Ok(chol.solve(rhs));
    }
    trace.ridge_fallbacks += 1;
    let ridge = 1e-10 * quadratic.trace() / d1 as f64;
    let ridged = quadratic + DMatrix::identity(d1, d1) * ridge;
    match Cholesky::new(ridged) {
        Some(chol) => Ok(chol.solve(rhs)),
        None => Err(Error::SingularIterationMatrix),
    }
}

/// Orthonormal basis of the null space of `Ws^T`, i.e. of the orthogonal
/// complement of the fitted directions. An empty `Ws` (zero columns) yields
/// the identity.
///
/// Uses pivoted modified Gram-Schmidt on the coordinate axes: each axis is
/// projected off the fitted directions (twice, for numerical hygiene) and
/// the largest remaining residual is accepted, then removed from the rest.
pub fn null_space_basis(ws: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d1 = ws.nrows();
    let s = ws.ncols();
    if s > d1 {
        return Err(Error::ShapeMismatch(format!(
            "{s} columns cannot be orthonormal in dimension {d1}"
        )));
    }
    if s > 0 {
        let gram_err = (ws.transpose() * ws - DMatrix::identity(s, s)).amax();
        if gram_err > 1e-8 {
            return Err(Error::NotOrthonormal(gram_err));
        }
    }
    if s == 0 {
        return Ok(DMatrix::identity(d1, d1));
    }

    let mut residuals: Vec<DVector<f64>> = (0..d1)
        .map(|k| {
            let mut v = DVector::zeros(d1);
            v[k] = 1.0;
            for _ in 0..2 {
                for j in 0..s {
                    let col = ws.column(j);
                    let coeff = col.dot(&v);
                    v.axpy(-coeff, &col, 1.0);
                }
            }
            v
        })
        .collect();

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d1 - s);
    for _ in 0..d1 - s {
        let pick = (0..residuals.len())
            .max_by(|&a, &b| {
                residuals[a]
                    .norm()
                    .partial_cmp(&residuals[b].norm())
                    .expect("residual norms are finite")
            })
            .expect("residual list is nonempty");
        let accepted = residuals.swap_remove(pick).normalize();
        for r in &mut residuals {
            let coeff = accepted.dot(r);
            r.axpy(-coeff, &accepted, 1.0);
        }
        basis.push(accepted);
    }
    Ok(DMatrix::from_columns(&basis))
}

/// Fit `r1` orthonormal discriminant directions by deflation.
///
/// Round `s` projects the class statistics onto the orthogonal complement of
/// the directions found so far, solves for one direction there, and lifts it
/// back. Per-round perturbation seeds are derived from `config.seed` so the
/// whole fit is deterministic.
pub fn fit(dataset: &Dataset, config: &SolverConfig) -> Result<ProjectionModel> {
    let (d1, _) = dataset.dims();
    config.validate(d1)?;
    let stats = class_statistics(dataset);
    fit_from_stats(&stats, config)
}

/// As [`fit`], starting from precomputed class statistics.
pub fn fit_from_stats(stats: &ClassStats, config: &SolverConfig) -> Result<ProjectionModel> {
    let d1 = stats.d1();
    config.validate(d1)?;

    let mut directions: Vec<DVector<f64>> = Vec::with_capacity(config.r1);
    let mut traces = Vec::with_capacity(config.r1);
    for s in 0..config.r1 {
        let fitted = if directions.is_empty() {
            DMatrix::zeros(d1, 0)
        } else {
            DMatrix::from_columns(&directions)
        };
        let basis = null_space_basis(&fitted)?;
        let reduced = stats.project_rows(&basis.transpose());
        let mut round_config = *config;
        round_config.seed = derive_seed(config.seed, s as u64);
        let (w_reduced, trace) = solve_direction(&reduced, &round_config, None)?;
        directions.push((&basis * w_reduced).normalize());
        traces.push(trace);
    }

    Ok(ProjectionModel::new(
        DMatrix::from_columns(&directions),
        ModelSource::G2dlda(*config),
        traces,
    ))
}
