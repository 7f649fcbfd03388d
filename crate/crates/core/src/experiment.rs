//! Experiment harness: split, corrupt, fit, sweep, report.
//!
//! An experiment takes a dataset (on disk or synthesized), splits it per
//! class into train/test, applies one noise level at a time to the training
//! images only, fits every configured method once at the maximum dimension,
//! sweeps the reduced dimension by truncation, and writes plot-ready CSV
//! reports. Everything is deterministic given the config and seed: two runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baseline;
use crate::classify;
use crate::dataset::{load_dataset, Dataset, PixelScale};
use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::lp::LpParams;
use crate::model::ProjectionModel;
use crate::noise::{NoiseKind, NoiseSpec};
use crate::solver::{self, derive_seed, SolverConfig};
use crate::synth::{self, SynthSpec};

// Seed-stream tags so the split, the noise draws, the per-method solver
// seeds and the synthetic data never share a stream.
const STREAM_SPLIT: u64 = 1 << 62;
const STREAM_NOISE: u64 = 2 << 62;
const STREAM_FIT: u64 = 3 << 62;
const STREAM_SYNTH: u64 = 4 << 62;

/// One fitted competitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    G2dlda { p: f64, sigma: f64 },
    Eigen2dlda { ridge: f64 },
}

impl MethodSpec {
    /// Parse `g2dlda(p=1, sigma=0.1)` or `eigen2dlda(ridge=0)`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter(format!("method `{text}`: {reason}"));
        let (name, rest) = text
            .split_once('(')
            .ok_or_else(|| bad("expected `name(args)`".into()))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| bad("missing closing parenthesis".into()))?;
        let mut pairs = std::collections::BTreeMap::new();
        for item in args.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key=value`, got `{item}`")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| bad(format!("cannot parse `{}`", v.trim())))?;
            pairs.insert(k.trim().to_string(), value);
        }
        match name.trim() {
            "g2dlda" => {
                let p = *pairs
                    .get("p")
                    .ok_or_else(|| bad("g2dlda needs `p`".into()))?;
                let sigma = pairs.get("sigma").copied().unwrap_or(0.0);
                LpParams::new(p, sigma)?;
                Ok(MethodSpec::G2dlda { p, sigma })
            }
            "eigen2dlda" => {
                let ridge = pairs.get("ridge").copied().unwrap_or(0.0);
                Ok(MethodSpec::Eigen2dlda { ridge })
            }
            other => Err(bad(format!("unknown method `{other}`"))),
        }
    }

    /// Canonical label used in the reports.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::G2dlda { p, sigma } => format!("g2dlda(p={p},sigma={sigma})"),
            MethodSpec::Eigen2dlda { ridge } => format!("eigen2dlda(ridge={ridge})"),
        }
    }

    /// The `(p, sigma)` columns of the long-form CSV. The eigen baseline is
    /// the L2 method, so `p = 2`; its sigma column carries the ridge.
    fn csv_params(&self) -> (f64, f64) {
        match self {
            MethodSpec::G2dlda { p, sigma } => (*p, *sigma),
            MethodSpec::Eigen2dlda { ridge } => (2.0, *ridge),
        }
    }
}

/// Where the experiment's samples come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    Root(PathBuf),
    Synth(SynthSpec),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub pixel_scale: PixelScale,
    pub train_per_class: usize,
    /// Reduced dimensions swept as `1..=dims_max`.
    pub dims_max: usize,
    pub seed: u64,
    /// `None` runs a single clean pass.
    pub noise_kind: Option<NoiseKind>,
    /// One value per pass: density, variance or coverage depending on kind.
    pub noise_levels: Vec<f64>,
    /// Rectangle coverage used by `gaussian_rect` (its level is a variance).
    pub noise_coverage: f64,
    /// Also corrupt the test images (default: test stays clean).
    pub noise_test: bool,
    /// Training images listed in this manifest (paths relative to the
    /// dataset root) are exempt from noise.
    pub noise_exempt: Option<PathBuf>,
    pub methods: Vec<MethodSpec>,
    pub epsilon: f64,
    pub itmax: usize,
}

impl ExperimentConfig {
    /// Read a config file. `seed_override` wins over the file's `seed`.
    pub fn from_file(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let kv = KvFile::read(path)?;
        let source = match (kv.get("dataset_root"), kv.get("synth_spec")) {
            (Some(root), None) => DataSource::Root(resolve(path, root)),
            (None, Some(spec_path)) => {
                let spec_kv = KvFile::read(&resolve(path, spec_path))?;
                DataSource::Synth(SynthSpec::from_kv(&spec_kv)?)
            }
            (Some(_), Some(_)) => {
                return Err(kv.error("dataset_root", "give either dataset_root or synth_spec"))
            }
            (None, None) => {
                return Err(kv.error("dataset_root", "missing dataset_root or synth_spec"))
            }
        };
        let noise_kind = match kv.get("noise_kind") {
            None | Some("none") => None,
            Some(other) => Some(other.parse::<NoiseKind>()?),
        };
        let methods: Vec<MethodSpec> = kv
            .get_all("method")
            .into_iter()
            .map(MethodSpec::parse)
            .collect::<Result<_>>()?;
        let config = ExperimentConfig {
            source,
            pixel_scale: kv.get("pixel_scale").unwrap_or("unit").parse()?,
            train_per_class: kv.parse_or("train_per_class", 0usize)?,
            dims_max: kv.parse_or("dims_max", 0usize)?,
            seed: seed_override.unwrap_or(kv.parse_or("seed", 0u64)?),
            noise_kind,
            noise_levels: kv.parse_list("noise_levels")?,
            noise_coverage: kv.parse_or("noise_coverage", 0.5f64)?,
            noise_test: kv.parse_or("noise_test", false)?,
            noise_exempt: kv.get("noise_exempt").map(|p| resolve(path, p)),
            methods,
            epsilon: kv.parse_or("epsilon", 1e-4f64)?,
            itmax: kv.parse_or("itmax", 50usize)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter(
                "experiment needs at least one method".into(),
            ));
        }
        if self.train_per_class == 0 {
            return Err(Error::InvalidParameter(
                "train_per_class must be positive".into(),
            ));
        }
        if self.dims_max == 0 {
            return Err(Error::InvalidParameter("dims_max must be positive".into()));
        }
        if self.noise_kind.is_some() && self.noise_levels.is_empty() {
            return Err(Error::InvalidParameter(
                "noise_kind given but noise_levels empty".into(),
            ));
        }
        Ok(())
    }
}

/// Paths in config files are taken relative to the config file itself.
fn resolve(config_path: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// One successful accuracy measurement.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub method: String,
    pub p: f64,
    pub sigma: f64,
    pub noise_kind: String,
    pub noise_level: f64,
    pub dim: usize,
    pub accuracy: f64,
}

/// Best accuracy and its dimension for one method at one noise level.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub method: String,
    pub noise_level: f64,
    pub best_accuracy: f64,
    pub best_dim: usize,
}

/// A method that failed at one noise level; the run continues without it.
#[derive(Debug, Clone)]
pub struct ErrorRow {
    pub method: String,
    pub noise_level: f64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub errors: Vec<ErrorRow>,
}

impl ExperimentReport {
    pub fn results_csv(&self) -> String {
        let mut out = String::from("method,p,sigma,noise_kind,noise_level,dim,accuracy\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.6}",
                r.method, r.p, r.sigma, r.noise_kind, r.noise_level, r.dim, r.accuracy
            )
            .expect("write to String cannot fail");
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,noise_level,best_accuracy,best_dim\n");
        for r in &self.summary {
            writeln!(
                out,
                "{},{},{:.6},{}",
                r.method, r.noise_level, r.best_accuracy, r.best_dim
            )
            .expect("write to String cannot fail");
        }
        out
    }

    pub fn errors_csv(&self) -> String {
        let mut out = String::from("method,noise_level,error\n");
        for r in &self.errors {
            writeln!(out, "{},{},{}", r.method, r.noise_level, r.error)
                .expect("write to String cannot fail");
        }
        out
    }
}

/// Split each class into `train_per_class` training samples and the rest,
/// by a seeded shuffle of the class's indices. Returned index lists are
/// sorted, so sample order stays the dataset order.
pub fn split_per_class(
    dataset: &Dataset,
    train_per_class: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 1..=dataset.num_classes() {
        let mut indices = dataset.class_indices(class);
        if train_per_class >= indices.len() {
            return Err(Error::InvalidParameter(format!(
                "train_per_class = {train_per_class} >= class {class} size {}",
                indices.len()
            )));
        }
        indices.shuffle(&mut rng);
        train.extend_from_slice(&indices[..train_per_class]);
        test.extend_from_slice(&indices[train_per_class..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Relative `class_dir/file.pgm` paths in dataset load order; used to map
/// exemption manifests onto sample indices.
fn dataset_file_list(root: &Path) -> Result<Vec<String>> {
    let mut class_dirs: Vec<_> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    let mut out = Vec::new();
    for dir in class_dirs {
        let mut files: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "pgm"))
            .collect();
        files.sort();
        let dir_name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for f in files {
            let file_name = f
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.push(format!("{dir_name}/{file_name}"));
        }
    }
    Ok(out)
}

/// Corrupt the training samples at one noise level. `exempt[i]` marks
/// training samples kept clean (e.g. naturally occluded originals).
fn corrupt_training(
    train: &Dataset,
    exempt: &[bool],
    kind: NoiseKind,
    level: f64,
    coverage: f64,
    scale: PixelScale,
    seed_base: u64,
) -> Result<Dataset> {
    let (lo, hi) = scale.range();
    let mut samples = Vec::with_capacity(train.len());
    for (i, sample) in train.samples().iter().enumerate() {
        let mut new = sample.clone();
        if !exempt[i] {
            let spec = match kind {
                NoiseKind::SaltPepper => NoiseSpec {
                    kind,
                    density: level,
                    variance: 0.0,
                    coverage: 0.0,
                    seed: derive_seed(seed_base, i as u64),
                },
                NoiseKind::GaussianRect => NoiseSpec {
                    kind,
                    density: 0.0,
                    variance: level,
                    coverage,
                    seed: derive_seed(seed_base, i as u64),
                },
                NoiseKind::BlackBlock => NoiseSpec {
                    kind,
                    density: 0.0,
                    variance: 0.0,
                    coverage: level,
                    seed: derive_seed(seed_base, i as u64),
                },
            };
            new.values = spec.apply(&sample.values, lo, hi)?;
        }
        samples.push(new);
    }
    Dataset::new(samples)
}

fn fit_method(
    method: &MethodSpec,
    train: &Dataset,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ProjectionModel> {
    match method {
        MethodSpec::G2dlda { p, sigma } => {
            let mut solver_config = SolverConfig::new(LpParams::new(*p, *sigma)?);
            solver_config.epsilon = config.epsilon;
            solver_config.itmax = config.itmax;
            solver_config.seed = seed;
            solver_config.r1 = config.dims_max;
            solver::fit(train, &solver_config)
        }
        MethodSpec::Eigen2dlda { ridge } => baseline::fit_2dlda(train, config.dims_max, *ridge),
    }
}

/// Run the full experiment and write `results.csv`, `summary.csv` and (only
/// when something failed) `errors.csv` under `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let (dataset, file_list) = match &config.source {
        DataSource::Root(root) => (
            load_dataset(root, config.pixel_scale)?,
            dataset_file_list(root)?,
        ),
        DataSource::Synth(spec) => {
            let synth_dir = out.join("synth_data");
            synth::make_synthetic(spec, derive_seed(config.seed, STREAM_SYNTH), &synth_dir)?;
            (
                load_dataset(&synth_dir, config.pixel_scale)?,
                dataset_file_list(&synth_dir)?,
            )
        }
    };
    let (d1, _) = dataset.dims();
    if config.dims_max > d1 {
        return Err(Error::InvalidParameter(format!(
            "dims_max = {} exceeds image rows {d1}",
            config.dims_max
        )));
    }

    let exempt_set: std::collections::HashSet<String> = match &config.noise_exempt {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))?
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect(),
        None => Default::default(),
    };

    let (train_idx, test_idx) = split_per_class(
        &dataset,
        config.train_per_class,
        derive_seed(config.seed, STREAM_SPLIT),
    )?;
    let train = dataset.subset(&train_idx)?;
    let test = dataset.subset(&test_idx)?;
    let train_exempt: Vec<bool> = train_idx
        .iter()
        .map(|&i| {
            file_list
                .get(i)
                .is_some_and(|name| exempt_set.contains(name))
        })
        .collect();

    // A clean pass is modeled as one "none" level at 0.
    let passes: Vec<(Option<NoiseKind>, f64)> = match config.noise_kind {
        None => vec![(None, 0.0)],
        Some(kind) => config
            .noise_levels
            .iter()
            .map(|&level| (Some(kind), level))
            .collect(),
    };

    let mut report = ExperimentReport::default();
    for (level_idx, (kind, level)) in passes.iter().enumerate() {
        let noise_seed = derive_seed(config.seed, STREAM_NOISE | (level_idx as u64) << 32);
        let (noisy_train, noisy_test) = match kind {
            None => (train.clone(), test.clone()),
            Some(kind) => {
                let corrupted = corrupt_training(
                    &train,
                    &train_exempt,
                    *kind,
                    *level,
                    config.noise_coverage,
                    config.pixel_scale,
                    noise_seed,
                )?;
                let test_set = if config.noise_test {
                    corrupt_training(
                        &test,
                        &vec![false; test.len()],
                        *kind,
                        *level,
                        config.noise_coverage,
                        config.pixel_scale,
                        derive_seed(noise_seed, 1),
                    )?
                } else {
                    test.clone()
                };
                (corrupted, test_set)
            }
        };
        let kind_label = kind.map(|k| k.to_string()).unwrap_or_else(|| "none".into());

        for (method_idx, method) in config.methods.iter().enumerate() {
            let fit_seed = derive_seed(
                config.seed,
                STREAM_FIT | (level_idx as u64) << 32 | method_idx as u64,
            );
            let model = match fit_method(method, &noisy_train, config, fit_seed) {
                Ok(m) => m,
                Err(e) => {
                    report.errors.push(ErrorRow {
                        method: method.label(),
                        noise_level: *level,
                        error: e.to_string().replace(',', ";"),
                    });
                    continue;
                }
            };
            let (p, sigma) = method.csv_params();
            let mut best: Option<(f64, usize)> = None;
            for dim in 1..=config.dims_max {
                let accuracy = classify::accuracy(&model, &noisy_train, &noisy_test, dim)?;
                report.rows.push(ResultRow {
                    method: method.label(),
                    p,
                    sigma,
                    noise_kind: kind_label.clone(),
                    noise_level: *level,
                    dim,
                    accuracy,
                });
                if best.is_none_or(|(b, _)| accuracy > b) {
                    best = Some((accuracy, dim));
                }
            }
            if let Some((best_accuracy, best_dim)) = best {
                report.summary.push(SummaryRow {
                    method: method.label(),
                    noise_level: *level,
                    best_accuracy,
                    best_dim,
                });
            }
        }
    }

    write_report(&report, out)?;
    Ok(report)
}

fn write_report(report: &ExperimentReport, out: &Path) -> Result<()> {
    let results = out.join("results.csv");
    std::fs::write(&results, report.results_csv()).map_err(|e| Error::io(&results, e))?;
    let summary = out.join("summary.csv");
    std::fs::write(&summary, report.summary_csv()).map_err(|e| Error::io(&summary, e))?;
    if !report.errors.is_empty() {
        let errors = out.join("errors.csv");
        std::fs::write(&errors, report.errors_csv()).map_err(|e| Error::io(&errors, e))?;
    }
    Ok(())
}
