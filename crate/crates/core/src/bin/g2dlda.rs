//! Command-line harness: fit models, project and classify datasets, corrupt
//! images, synthesize fixtures, and run full experiments.
//!
//! Every verb reads a line-oriented `key = value` config file; `--seed`
//! overrides the config's seed and `--out` chooses the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use g2dlda::experiment::{DataSource, MethodSpec};
use g2dlda::kv::KvFile;
use g2dlda::solver::derive_seed;
use g2dlda::{
    classify, load_dataset, ExperimentConfig, LpParams, NoiseKind, NoiseSpec, PixelScale,
    ProjectionModel, SolverConfig, SynthSpec,
};

#[derive(Parser)]
#[command(
    name = "g2dlda",
    about = "Lp-norm 2D discriminant analysis and its experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the key=value config file for this verb.
    #[arg(long)]
    config: PathBuf,
    /// Override the config file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print progress to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a projection model and save it as a binary model file.
    Fit(CommonArgs),
    /// Project a dataset through a saved model into a features CSV.
    Project(CommonArgs),
    /// Classify a test dataset against a training dataset through a model.
    Classify(CommonArgs),
    /// Write noise-corrupted copies of a dataset.
    Noise(CommonArgs),
    /// Generate a synthetic PGM dataset.
    Synth(CommonArgs),
    /// Run a full train/corrupt/fit/sweep experiment with CSV reports.
    Experiment(CommonArgs),
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Project(args) => cmd_project(&args),
        Command::Classify(args) => cmd_classify(&args),
        Command::Noise(args) => cmd_noise(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Experiment(args) => cmd_experiment(&args),
    }
}

fn ensure_out(args: &CommonArgs) -> anyhow::Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))
}

fn resolve(config_path: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn seed_of(kv: &KvFile, args: &CommonArgs) -> anyhow::Result<u64> {
    Ok(match args.seed {
        Some(s) => s,
        None => kv.parse_or("seed", 0u64)?,
    })
}

fn load_from_key(kv: &KvFile, key: &str, args: &CommonArgs) -> anyhow::Result<g2dlda::Dataset> {
    let root = resolve(kv.path(), kv.require(key)?);
    let scale: PixelScale = kv.get("pixel_scale").unwrap_or("unit").parse()?;
    if args.verbose {
        eprintln!("loading dataset from {}", root.display());
    }
    Ok(load_dataset(&root, scale)?)
}

/// Config keys: dataset_root, pixel_scale, method, dims (=r1), epsilon,
/// itmax, tau, delta_mag, seed.
fn cmd_fit(args: &CommonArgs) -> anyhow::Result<()> {
    ensure_out(args)?;
    let kv = KvFile::read(&args.config)?;
    let dataset = load_from_key(&kv, "dataset_root", args)?;
    let method = MethodSpec::parse(kv.require("method")?)?;
    let dims = kv.parse_or("dims", dataset.dims().0.min(8))?;
    let seed = seed_of(&kv, args)?;

    let model = match method {
        MethodSpec::G2dlda { p, sigma } => {
            let mut config = SolverConfig::new(LpParams::new(p, sigma)?);
            config.epsilon = kv.parse_or("epsilon", config.epsilon)?;
            config.itmax = kv.parse_or("itmax", config.itmax)?;
            config.tau = kv.parse_or("tau", config.tau)?;
            config.delta_mag = kv.parse_or("delta_mag", config.delta_mag)?;
            config.seed = seed;
            config.r1 = dims;
            g2dlda::fit(&dataset, &config)?
        }
        MethodSpec::Eigen2dlda { ridge } => g2dlda::fit_2dlda(&dataset, dims, ridge)?,
    };

    if args.verbose {
        for (s, trace) in model.traces().iter().enumerate() {
            eprintln!(
                "direction {s}: {} iterations, {} perturbations, final objective {:?}",
                trace.iterations,
                trace.perturbations,
                trace.objectives.last()
            );
        }
        eprintln!(
            "orthonormality error: {:.3e}",
            model.orthonormality_error()
        );
    }

    let path = args.out.join("model.g2dl");
    model.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Config keys: model, dataset_root, pixel_scale, dims.
fn cmd_project(args: &CommonArgs) -> anyhow::Result<()> {
    ensure_out(args)?;
    let kv = KvFile::read(&args.config)?;
    let model = ProjectionModel::load(&resolve(kv.path(), kv.require("model")?))?;
    let dataset = load_from_key(&kv, "dataset_root", args)?;
    let dims = kv.parse_or("dims", model.num_directions())?;

    let mut csv = String::from("sample,label");
    let (_, d2) = dataset.dims();
    for r in 0..dims {
        for c in 0..d2 {
            write!(csv, ",f{}", r * d2 + c).expect("write to String cannot fail");
        }
    }
    csv.push('\n');
    for (idx, sample) in dataset.samples().iter().enumerate() {
        let features = classify::project(&sample.values, &model, dims)?;
        write!(csv, "{idx},{}", sample.label).expect("write to String cannot fail");
        for r in 0..features.nrows() {
            for c in 0..features.ncols() {
                write!(csv, ",{:.12e}", features[(r, c)]).expect("write to String cannot fail");
            }
        }
        csv.push('\n');
    }
    let path = args.out.join("projected.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Config keys: model, train_root, test_root, pixel_scale, dims.
fn cmd_classify(args: &CommonArgs) -> anyhow::Result<()> {
    ensure_out(args)?;
    let kv = KvFile::read(&args.config)?;
    let model = ProjectionModel::load(&resolve(kv.path(), kv.require("model")?))?;
    let scale: PixelScale = kv.get("pixel_scale").unwrap_or("unit").parse()?;
    let train = load_dataset(&resolve(kv.path(), kv.require("train_root")?), scale)?;
    let test = load_dataset(&resolve(kv.path(), kv.require("test_root")?), scale)?;
    let dims = kv.parse_or("dims", model.num_directions())?;

    let train_proj = classify::project_dataset(&train, &model, dims)?;
    let mut csv = String::from("sample,true_label,predicted_label\n");
    let mut correct = 0usize;
    for (idx, sample) in test.samples().iter().enumerate() {
        let features = classify::project(&sample.values, &model, dims)?;
        let predicted = classify::nn_classify(&train_proj, &features)?;
        if predicted == sample.label {
            correct += 1;
        }
        writeln!(csv, "{idx},{},{predicted}", sample.label).expect("write to String cannot fail");
    }
    let path = args.out.join("predictions.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "accuracy {:.6} ({correct}/{} correct), wrote {}",
        correct as f64 / test.len() as f64,
        test.len(),
        path.display()
    );
    Ok(())
}

/// Config keys: dataset_root, kind, level, coverage, seed. Writes a
/// mirrored class tree of corrupted PGM images.
fn cmd_noise(args: &CommonArgs) -> anyhow::Result<()> {
    ensure_out(args)?;
    let kv = KvFile::read(&args.config)?;
    let root = resolve(kv.path(), kv.require("dataset_root")?);
    let kind: NoiseKind = kv.require("kind")?.parse()?;
    let level: f64 = kv.parse_or("level", 0.1)?;
    let coverage: f64 = kv.parse_or("coverage", 0.5)?;
    let seed = seed_of(&kv, args)?;

    let mut class_dirs: Vec<_> = std::fs::read_dir(&root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        bail!("no class directories under {}", root.display());
    }

    let mut count = 0usize;
    for dir in class_dirs {
        let out_dir = args.out.join(dir.file_name().unwrap_or_default());
        std::fs::create_dir_all(&out_dir)?;
        let mut files: Vec<_> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "pgm"))
            .collect();
        files.sort();
        for file in files {
            // Noise parameters are interpreted on the unit scale.
            let img = g2dlda::pgm::read_pgm(&file)? / 255.0;
            let spec = NoiseSpec {
                kind,
                density: level,
                variance: level,
                coverage: if kind == NoiseKind::BlackBlock {
                    level
                } else {
                    coverage
                },
                seed: derive_seed(seed, count as u64),
            };
            let noisy = spec.apply(&img, 0.0, 1.0)?;
            g2dlda::pgm::write_pgm(
                &out_dir.join(file.file_name().unwrap_or_default()),
                &(noisy * 255.0),
            )?;
            count += 1;
        }
    }
    println!("wrote {count} corrupted images under {}", args.out.display());
    Ok(())
}

/// Config: a synthetic generator spec (classes, per_class, rows, cols,
/// separation, spread, outlier_fraction).
fn cmd_synth(args: &CommonArgs) -> anyhow::Result<()> {
    let kv = KvFile::read(&args.config)?;
    let spec = SynthSpec::from_kv(&kv)?;
    let seed = seed_of(&kv, args)?;
    g2dlda::make_synthetic(&spec, seed, &args.out)?;
    println!(
        "wrote {} classes x {} images under {}",
        spec.classes,
        spec.per_class,
        args.out.display()
    );
    Ok(())
}

fn cmd_experiment(args: &CommonArgs) -> anyhow::Result<()> {
    let config = ExperimentConfig::from_file(&args.config, args.seed)?;
    if args.verbose {
        let source = match &config.source {
            DataSource::Root(root) => format!("dataset {}", root.display()),
            DataSource::Synth(spec) => {
                format!("synthetic {}x{} images", spec.rows, spec.cols)
            }
        };
        eprintln!(
            "experiment: {source}, {} methods, dims 1..={}, seed {}",
            config.methods.len(),
            config.dims_max,
            config.seed
        );
    }
    let report = g2dlda::run_experiment(&config, &args.out)?;
    println!(
        "wrote {} result rows, {} summary rows{} under {}",
        report.rows.len(),
        report.summary.len(),
        if report.errors.is_empty() {
            String::new()
        } else {
            format!(", {} method errors", report.errors.len())
        },
        args.out.display()
    );
    Ok(())
}
