//! Command-line front end: train, classify, evaluate, baseline-knn,
//! pca-report, ingest, and fixture subcommands over the library pipeline.
//!
//! Every command is a pure function of (config file, flags, input files):
//! reruns produce byte-identical outputs. Exit codes are stable: 0 success,
//! 1 usage, 2 data error, 3 model error.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::anfis::{ClusteringParams, TrainingConfig};
use crate::baselines::{self, KnnConfig};
use crate::classifier::{
    self, BehaviorClass, ClassifierError, FitConfig, SoftSensor, WeightedExponents,
};
use crate::dataset::{
    self, uah, CsvData, DatasetError, FeatureMatrix, KalmanConfig, ParseOptions, Road, Variant,
};
use crate::eval::{
    self, ConfusionBlock, ConfusionMatrix, EvalError, Report, ReportFormat, ValidationBlock,
};
use crate::fixture::{self, FixtureConfig};
use crate::pca::{self, Standardizer};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Model(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Model(m) => m,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<baselines::BaselineError> for CliError {
    fn from(e: baselines::BaselineError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<pca::PcaError> for CliError {
    fn from(e: pca::PcaError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Fit-time classifier failures are data problems; failures touching the
/// model file itself are model problems.
fn data_err(e: ClassifierError) -> CliError {
    CliError::Data(e.to_string())
}

fn model_err(e: ClassifierError) -> CliError {
    CliError::Model(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "drivesense",
    version,
    about = "Driving-style soft sensor: train, classify, and evaluate neurofuzzy models over principal-component projections"
)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, env = "DRIVESENSE_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the soft sensor on labeled feature CSVs (or the synthetic fixture).
    Train(TrainArgs),
    /// Label rows of a feature CSV with a trained model.
    Classify(ClassifyArgs),
    /// Score a trained model on labeled data: error stats plus confusion.
    Evaluate(EvaluateArgs),
    /// Weighted k-nearest-neighbors baseline on PCA scores.
    BaselineKnn(BaselineKnnArgs),
    /// Eigenvalue spectrum and component selection for feature CSVs.
    PcaReport(PcaReportArgs),
    /// Convert raw delimited telemetry into the normalized feature CSV.
    Ingest(IngestArgs),
    /// Generate the deterministic synthetic train/test CSVs.
    Fixture(FixtureArgs),
}

fn parse_variant_arg(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("expected A or B, got {s:?}"))
}

fn parse_class_arg(s: &str) -> Result<BehaviorClass, String> {
    BehaviorClass::parse(s).ok_or_else(|| format!("expected drowsy, normal, or aggressive, got {s:?}"))
}

fn parse_road_arg(s: &str) -> Result<Road, String> {
    Road::parse(s).ok_or_else(|| format!("expected motorway or secondary, got {s:?}"))
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    /// Labeled or unlabeled feature CSVs holding drowsy training rows; repeatable.
    #[arg(long, value_name = "CSV")]
    pub drowsy: Vec<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub normal: Vec<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub aggressive: Vec<PathBuf>,
    /// Train on the built-in synthetic fixture instead of files.
    #[arg(long)]
    pub fixture: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixture rows per class.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Fixture noise multiplier.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_parser = parse_variant_arg)]
    pub variant: Option<Variant>,
    /// Output model path.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Explained-variance threshold for component selection reporting.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Subtractive clustering radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Subtractive clustering squash factor.
    #[arg(long)]
    pub squash: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Standardize features (true) or center only (false).
    #[arg(long, value_name = "BOOL")]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub a3: Option<f64>,
    /// Skip least-squares consequent init; learn consequents from zero.
    #[arg(long)]
    pub pure_backprop: bool,
    /// Clustering subsample cap per class (0 disables).
    #[arg(long)]
    pub cluster_cap: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Feature CSV to classify; "-" reads standard input.
    #[arg(long, value_name = "CSV")]
    pub input: PathBuf,
    /// Output CSV path; omit for standard output.
    #[arg(long, value_name = "CSV")]
    pub output: Option<PathBuf>,
    /// Trailing moving-average window (samples) over the epsilons.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Labeled feature CSV; repeatable, one validation block per file.
    #[arg(long, value_name = "CSV")]
    pub data: Vec<PathBuf>,
    /// Evaluate on the held-out split of the synthetic fixture.
    #[arg(long)]
    pub fixture: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_parser = parse_variant_arg)]
    pub variant: Option<Variant>,
    /// Report format: text, csv, or json.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Directory for per-dataset epsilon trace CSVs.
    #[arg(long, value_name = "DIR")]
    pub traces_out: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BaselineKnnArgs {
    /// Labeled training CSVs; repeatable.
    #[arg(long, value_name = "CSV")]
    pub train: Vec<PathBuf>,
    /// Labeled test CSVs; repeatable.
    #[arg(long, value_name = "CSV")]
    pub test: Vec<PathBuf>,
    /// Use the synthetic fixture for both splits.
    #[arg(long)]
    pub fixture: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_parser = parse_variant_arg)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_name = "BOOL")]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PcaReportArgs {
    /// Feature CSVs, pooled together; repeatable.
    #[arg(long, value_name = "CSV", required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_name = "BOOL")]
    pub standardize: Option<bool>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// UAH-DriveSet trip directory; label, road, and driver come from its name.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["gps", "accel", "osm", "label"])]
    pub uah_trip: Option<PathBuf>,
    /// Raw GPS file (timestamp + speed columns).
    #[arg(long, value_name = "FILE")]
    pub gps: Option<PathBuf>,
    /// Raw accelerometer file.
    #[arg(long, value_name = "FILE")]
    pub accel: Option<PathBuf>,
    /// Road speed-limit file; required for variant A.
    #[arg(long, value_name = "FILE")]
    pub osm: Option<PathBuf>,
    #[arg(long, value_parser = parse_class_arg)]
    pub label: Option<BehaviorClass>,
    #[arg(long)]
    pub driver: Option<String>,
    #[arg(long, value_parser = parse_road_arg)]
    pub road: Option<Road>,
    #[arg(long, value_parser = parse_variant_arg)]
    pub variant: Option<Variant>,
    /// Resampling rate in Hz.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub kalman_q: Option<f64>,
    #[arg(long)]
    pub kalman_r: Option<f64>,
    /// Malformed-line fraction tolerated before parsing fails.
    #[arg(long)]
    pub max_bad: Option<f64>,
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub test_rows: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_parser = parse_variant_arg)]
    pub variant: Option<Variant>,
}

/// Keys accepted in the TOML config file; any flag with the same meaning
/// wins over the file value.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub variant: Option<String>,
    pub standardize: Option<bool>,
    pub threshold: Option<f64>,
    pub radius: Option<f64>,
    pub squash: Option<f64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub rows: Option<usize>,
    pub test_rows: Option<usize>,
    pub noise: Option<f64>,
    pub rate: Option<f64>,
    pub kalman_q: Option<f64>,
    pub kalman_r: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub a3: Option<f64>,
    pub window: Option<usize>,
    pub k: Option<usize>,
    pub format: Option<String>,
    pub pure_backprop: Option<bool>,
    pub cluster_cap: Option<usize>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub drowsy: Option<Vec<PathBuf>>,
    pub normal: Option<Vec<PathBuf>>,
    pub aggressive: Option<Vec<PathBuf>>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>, default: T) -> T {
    flag.clone().or_else(|| file.clone()).unwrap_or(default)
}

fn file_variant(cfg: &FileConfig) -> Result<Option<Variant>, CliError> {
    match &cfg.variant {
        None => Ok(None),
        Some(s) => Variant::parse(s)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("config variant {s:?} is not A or B"))),
    }
}

/// Parses CLI arguments and runs the selected command; returns the process
/// exit code. Help and version requests exit 0, other parse errors 1.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Train(args) => cmd_train(&args, &file),
        Command::Classify(args) => cmd_classify(&args, &file),
        Command::Evaluate(args) => cmd_evaluate(&args, &file),
        Command::BaselineKnn(args) => cmd_baseline_knn(&args, &file),
        Command::PcaReport(args) => cmd_pca_report(&args, &file),
        Command::Ingest(args) => cmd_ingest(&args, &file),
        Command::Fixture(args) => cmd_fixture(&args, &file),
    }
}

fn fixture_config(
    seed: &Option<u64>,
    rows: &Option<usize>,
    test_rows: &Option<usize>,
    noise: &Option<f64>,
    variant: Option<Variant>,
    file: &FileConfig,
) -> FixtureConfig {
    let defaults = FixtureConfig::default();
    FixtureConfig {
        seed: pick(seed, &file.seed, defaults.seed),
        rows_per_class: pick(rows, &file.rows, defaults.rows_per_class),
        test_rows_per_class: pick(test_rows, &file.test_rows, defaults.test_rows_per_class),
        variant: variant.unwrap_or(defaults.variant),
        noise: pick(noise, &file.noise, defaults.noise),
    }
}

/// Reads one class's training files; labeled rows must carry this class,
/// unlabeled rows adopt it.
fn read_class_files(
    paths: &[PathBuf],
    class: BehaviorClass,
) -> Result<Vec<FeatureMatrix>, CliError> {
    let mut parts = Vec::new();
    for path in paths {
        let data = dataset::read_csv_file(path)?;
        let (data, dropped) = data.clean();
        if dropped > 0 {
            eprintln!(
                "note: {}: dropped {dropped} rows with non-finite values",
                path.display()
            );
        }
        let CsvData {
            variant,
            t,
            data,
            labels,
        } = data;
        if let Some(labels) = &labels {
            if let Some(bad) = labels.iter().position(|l| *l != class) {
                return Err(CliError::Data(format!(
                    "{}: row {} is labeled {} but the file was supplied as {class}",
                    path.display(),
                    bad + 1,
                    labels[bad]
                )));
            }
        }
        let n = t.len();
        parts.push(FeatureMatrix::new(variant, t, data, vec![class; n])?)
    }
    Ok(parts)
}

fn read_labeled(path: &Path) -> Result<FeatureMatrix, CliError> {
    let data = dataset::read_csv_file(path)?;
    let (data, dropped) = data.clean();
    if dropped > 0 {
        eprintln!(
            "note: {}: dropped {dropped} rows with non-finite values",
            path.display()
        );
    }
    data.require_labels()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_model(args_model: &Option<PathBuf>, file: &FileConfig) -> Result<SoftSensor, CliError> {
    let path = args_model
        .clone()
        .or_else(|| file.model.clone())
        .ok_or_else(|| CliError::Usage("--model is required".into()))?;
    SoftSensor::load(&path).map_err(|e| CliError::Model(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => {
            fs::write(p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
        }
    }
}

fn dataset_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn resolve_format(flag: &Option<String>, file: &FileConfig) -> Result<ReportFormat, CliError> {
    let name = pick(flag, &file.format, "text".to_string());
    ReportFormat::parse(&name).map_err(|e| CliError::Usage(e.to_string()))
}

fn resolve_window(flag: &Option<usize>, file: &FileConfig) -> Result<usize, CliError> {
    let window = pick(flag, &file.window, 1);
    if window == 0 {
        return Err(CliError::Usage("--window must be at least 1".into()));
    }
    Ok(window)
}

fn cmd_train(args: &TrainArgs, file: &FileConfig) -> Result<(), CliError> {
    let requested = match args.variant {
        Some(v) => Some(v),
        None => file_variant(file)?,
    };

    let train = if args.fixture {
        let cfg = fixture_config(
            &args.seed,
            &args.rows,
            &None,
            &args.noise,
            requested,
            file,
        );
        fixture::generate(&cfg).train
    } else {
        let mut parts = Vec::new();
        for (class, flag_paths, file_paths) in [
            (BehaviorClass::Drowsy, &args.drowsy, &file.drowsy),
            (BehaviorClass::Normal, &args.normal, &file.normal),
            (BehaviorClass::Aggressive, &args.aggressive, &file.aggressive),
        ] {
            let paths: &[PathBuf] = if !flag_paths.is_empty() {
                flag_paths
            } else if let Some(p) = file_paths {
                p
            } else {
                &[]
            };
            if paths.is_empty() {
                return Err(CliError::Data(format!(
                    "no training data for class {class}: pass --{class} or use --fixture"
                )));
            }
            parts.extend(read_class_files(paths, class)?);
        }
        let matrix = FeatureMatrix::concat(&parts)?;
        if let Some(v) = requested {
            if v != matrix.variant() {
                return Err(CliError::Data(format!(
                    "training data is variant {} but variant {} was requested",
                    matrix.variant().as_str(),
                    v.as_str()
                )));
            }
        }
        matrix
    };

    let defaults = FitConfig::default();
    let cfg = FitConfig {
        standardize: pick(&args.standardize, &file.standardize, defaults.standardize),
        threshold: pick(&args.threshold, &file.threshold, defaults.threshold),
        clustering: ClusteringParams {
            radius: pick(&args.radius, &file.radius, defaults.clustering.radius),
            squash: pick(&args.squash, &file.squash, defaults.clustering.squash),
            ..defaults.clustering
        },
        training: TrainingConfig {
            epochs: pick(&args.epochs, &file.epochs, defaults.training.epochs),
            learning_rate: pick(
                &args.learning_rate,
                &file.learning_rate,
                defaults.training.learning_rate,
            ),
            ..defaults.training
        },
        exponents: WeightedExponents {
            a1: pick(&args.a1, &file.a1, defaults.exponents.a1),
            a2: pick(&args.a2, &file.a2, defaults.exponents.a2),
            a3: pick(&args.a3, &file.a3, defaults.exponents.a3),
        },
        pure_backprop: args.pure_backprop || file.pure_backprop.unwrap_or(false),
        cluster_cap: pick(&args.cluster_cap, &file.cluster_cap, defaults.cluster_cap),
    };
    if let Some(warning) = cfg.exponents.duplicate_warning() {
        eprintln!("warning: {warning}");
    }

    let (sensor, report) = classifier::fit_with_report(&train, &cfg).map_err(data_err)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "== PCA (threshold {}, {}) ==",
        cfg.threshold,
        if cfg.standardize {
            "standardized"
        } else {
            "centered only"
        }
    );
    for s in &report.pca {
        let evr: Vec<String> = s.evr.iter().map(|e| format!("{:.2}%", e * 100.0)).collect();
        let _ = writeln!(
            out,
            "{:<12}{} of {} components reach the threshold; evr {}",
            s.name,
            s.selected,
            s.evr.len(),
            evr.join(" ")
        );
    }
    let _ = writeln!(out, "== Training ==");
    for t in &report.training {
        let first = t.loss_trace.first().copied().unwrap_or(f64::NAN);
        let last = t.loss_trace.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{:<12}{} rules, mse {:.6e} -> {:.6e} over {} epochs",
            t.class.as_str(),
            t.rules,
            first,
            last,
            t.loss_trace.len().saturating_sub(1)
        );
    }
    print!("{out}");

    let out_path = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("model.json"));
    sensor.save(&out_path).map_err(model_err)?;
    println!("model written to {}", out_path.display());
    Ok(())
}

fn read_csv_input(path: &Path) -> Result<CsvData, CliError> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin()
            .lock()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Data(format!("stdin: {e}")))?;
        Ok(dataset::read_csv(text.as_bytes())?)
    } else {
        Ok(dataset::read_csv_file(path)?)
    }
}

fn cmd_classify(args: &ClassifyArgs, file: &FileConfig) -> Result<(), CliError> {
    let sensor = load_model(&args.model, file)?;
    let window = resolve_window(&args.window, file)?;
    let input = read_csv_input(&args.input)?;
    if input.variant != sensor.variant {
        return Err(CliError::Data(format!(
            "input is variant {} but the model expects variant {}",
            input.variant.as_str(),
            sensor.variant.as_str()
        )));
    }
    let stream = sensor
        .classify_stream(&input.data, Some(&input.t), window)
        .map_err(data_err)?;
    if !stream.flagged.is_empty() {
        eprintln!(
            "note: skipped {} rows with non-finite values",
            stream.flagged.len()
        );
    }
    let mut buf = Vec::new();
    eval::write_epsilon_trace(&mut buf, &stream.rows)?;
    write_output(
        args.output.as_deref(),
        &String::from_utf8(buf).expect("csv is utf-8"),
    )
}

fn cmd_evaluate(args: &EvaluateArgs, file: &FileConfig) -> Result<(), CliError> {
    // reject a malformed command line before touching any files
    if !args.fixture && args.data.is_empty() {
        return Err(CliError::Usage(
            "nothing to evaluate: pass --data or --fixture".into(),
        ));
    }
    let sensor = load_model(&args.model, file)?;
    let window = resolve_window(&args.window, file)?;
    let format = resolve_format(&args.format, file)?;

    let mut datasets: Vec<(String, FeatureMatrix)> = Vec::new();
    if args.fixture {
        let cfg = fixture_config(
            &args.seed,
            &args.rows,
            &None,
            &args.noise,
            args.variant.or(file_variant(file)?).or(Some(sensor.variant)),
            file,
        );
        datasets.push(("fixture-test".to_string(), fixture::generate(&cfg).test));
    }
    for path in &args.data {
        datasets.push((dataset_stem(path), read_labeled(path)?));
    }

    let mut report = Report::default();
    let mut combined = ConfusionMatrix::default();
    let mut combined_rows = 0u64;
    for (name, matrix) in &datasets {
        if matrix.variant() != sensor.variant {
            return Err(CliError::Data(format!(
                "{name}: data is variant {} but the model expects variant {}",
                matrix.variant().as_str(),
                sensor.variant.as_str()
            )));
        }
        let stream = sensor
            .classify_stream(matrix.data(), Some(matrix.t()), window)
            .map_err(data_err)?;
        if !stream.flagged.is_empty() {
            eprintln!(
                "note: {name}: skipped {} rows with non-finite values",
                stream.flagged.len()
            );
        }
        if stream.rows.is_empty() {
            return Err(CliError::Data(format!("{name}: no valid rows")));
        }
        let eps_d: Vec<f64> = stream.rows.iter().map(|r| r.eps.eps_d).collect();
        let eps_n: Vec<f64> = stream.rows.iter().map(|r| r.eps.eps_n).collect();
        let eps_a: Vec<f64> = stream.rows.iter().map(|r| r.eps.eps_a).collect();
        report.validation.push(ValidationBlock {
            dataset: name.clone(),
            per_fis: [
                (BehaviorClass::Drowsy, eval::error_stats(&eps_d)?),
                (BehaviorClass::Normal, eval::error_stats(&eps_n)?),
                (BehaviorClass::Aggressive, eval::error_stats(&eps_a)?),
            ],
        });
        let actual: Vec<BehaviorClass> =
            stream.rows.iter().map(|r| matrix.label(r.index)).collect();
        let predicted: Vec<BehaviorClass> = stream.rows.iter().map(|r| r.label).collect();
        let matrix_counts = ConfusionMatrix::from_pairs(&actual, &predicted)?;
        combined = combined.merge(&matrix_counts);
        combined_rows += matrix_counts.total();
        report.confusion.push(ConfusionBlock {
            title: name.clone(),
            matrix: matrix_counts,
        });

        if let Some(dir) = &args.traces_out {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
            let path = dir.join(format!("{name}_trace.csv"));
            let mut buf = Vec::new();
            eval::write_epsilon_trace(&mut buf, &stream.rows)?;
            fs::write(&path, buf).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        }
    }
    if datasets.len() > 1 {
        debug_assert_eq!(combined.total(), combined_rows);
        report.confusion.push(ConfusionBlock {
            title: "combined".to_string(),
            matrix: combined,
        });
    }
    write_output(args.output.as_deref(), &report.render(format))
}

fn cmd_baseline_knn(args: &BaselineKnnArgs, file: &FileConfig) -> Result<(), CliError> {
    let format = resolve_format(&args.format, file)?;
    let (train, tests): (FeatureMatrix, Vec<(String, FeatureMatrix)>) = if args.fixture {
        let cfg = fixture_config(
            &args.seed,
            &args.rows,
            &None,
            &args.noise,
            args.variant.or(file_variant(file)?),
            file,
        );
        let fx = fixture::generate(&cfg);
        (fx.train, vec![("fixture-test".to_string(), fx.test)])
    } else {
        if args.train.is_empty() {
            return Err(CliError::Data(
                "no training data: pass --train or --fixture".into(),
            ));
        }
        let parts: Vec<FeatureMatrix> = args
            .train
            .iter()
            .map(|p| read_labeled(p))
            .collect::<Result<_, _>>()?;
        let train = FeatureMatrix::concat(&parts)?;
        let mut tests = Vec::new();
        for path in &args.test {
            tests.push((dataset_stem(path), read_labeled(path)?));
        }
        (train, tests)
    };

    let knn_defaults = KnnConfig::default();
    let cfg = KnnConfig {
        k: pick(&args.k, &file.k, knn_defaults.k),
        threshold: pick(&args.threshold, &file.threshold, knn_defaults.threshold),
        standardize: pick(&args.standardize, &file.standardize, knn_defaults.standardize),
    };
    let model = baselines::knn_fit(&train, &cfg)?;
    println!(
        "knn baseline: k={}, {} components retained, {} stored points",
        model.k(),
        model.n_components(),
        model.n_points()
    );

    if tests.is_empty() {
        let acc = model.loo_accuracy(&train)?;
        println!(
            "leave-one-out accuracy on training data: {:.2}%",
            acc * 100.0
        );
        return Ok(());
    }

    let mut report = Report::default();
    for (name, matrix) in &tests {
        if matrix.variant() != train.variant() {
            return Err(CliError::Data(format!(
                "{name}: data is variant {} but the baseline was fit on variant {}",
                matrix.variant().as_str(),
                train.variant().as_str()
            )));
        }
        let mut actual = Vec::with_capacity(matrix.n_rows());
        let mut predicted = Vec::with_capacity(matrix.n_rows());
        for i in 0..matrix.n_rows() {
            actual.push(matrix.label(i));
            predicted.push(model.predict(matrix.row(i))?);
        }
        let counts = ConfusionMatrix::from_pairs(&actual, &predicted)?;
        let hits: u64 = (0..3).map(|i| counts.counts[i][i]).sum();
        println!(
            "{name}: accuracy {}/{} rows",
            hits,
            counts.total()
        );
        report.confusion.push(ConfusionBlock {
            title: format!("knn {name}"),
            matrix: counts,
        });
    }
    write_output(args.output.as_deref(), &report.render(format))
}

fn cmd_pca_report(args: &PcaReportArgs, file: &FileConfig) -> Result<(), CliError> {
    let threshold = pick(&args.threshold, &file.threshold, 0.95);
    let standardize = pick(&args.standardize, &file.standardize, true);

    let mut pooled: Option<CsvData> = None;
    for path in &args.data {
        let data = dataset::read_csv_file(path)?;
        let (data, _) = data.clean();
        pooled = Some(match pooled {
            None => data,
            Some(mut acc) => {
                if acc.variant != data.variant {
                    return Err(CliError::Data(format!(
                        "{}: variant {} does not match earlier files' variant {}",
                        path.display(),
                        data.variant.as_str(),
                        acc.variant.as_str()
                    )));
                }
                acc.t.extend_from_slice(&data.t);
                acc.data.extend_from_slice(&data.data);
                acc.labels = match (acc.labels.take(), data.labels) {
                    (Some(mut a), Some(b)) => {
                        a.extend_from_slice(&b);
                        Some(a)
                    }
                    _ => None,
                };
                acc
            }
        });
    }
    let pooled = pooled.ok_or_else(|| CliError::Usage("pass at least one --data file".into()))?;
    let d = pooled.variant.n_features();
    if pooled.n_rows() < 2 {
        return Err(CliError::Data("need at least 2 rows".into()));
    }

    let standardizer = if standardize {
        Standardizer::fit(&pooled.data, d)?
    } else {
        Standardizer::fit_center_only(&pooled.data, d)?
    };

    let mut out = String::new();
    let mut describe = |name: &str, rows: &[f64]| -> Result<(), CliError> {
        let z = standardizer.apply_matrix(rows, d)?;
        let fit = pca::fit_pca(&z, d, threshold)?;
        let _ = writeln!(
            out,
            "== {name}: {} of {} components reach {:.0}% ==",
            fit.selected,
            d,
            threshold * 100.0
        );
        let _ = writeln!(
            out,
            "{:<6}{:>14}{:>10}{:>12}",
            "#", "eigenvalue", "evr", "cumulative"
        );
        let mut cum = 0.0;
        for (i, c) in fit.components.iter().enumerate() {
            cum += c.evr;
            let _ = writeln!(
                out,
                "{:<6}{:>14.6}{:>9.2}%{:>11.2}%",
                i + 1,
                c.eigenvalue,
                c.evr * 100.0,
                cum * 100.0
            );
        }
        Ok(())
    };

    describe("pooled", &pooled.data)?;
    if let Some(labels) = &pooled.labels {
        for class in BehaviorClass::ALL {
            let mut rows = Vec::new();
            for (i, label) in labels.iter().enumerate() {
                if *label == class {
                    rows.extend_from_slice(pooled.row(i));
                }
            }
            if rows.len() / d >= 2 {
                describe(class.as_str(), &rows)?;
            }
        }
    }
    print!("{out}");
    Ok(())
}

fn cmd_ingest(args: &IngestArgs, file: &FileConfig) -> Result<(), CliError> {
    let variant = args.variant.or(file_variant(file)?).unwrap_or(Variant::B);
    let rate = pick(&args.rate, &file.rate, 10.0);
    let kalman = KalmanConfig {
        q: pick(&args.kalman_q, &file.kalman_q, KalmanConfig::default().q),
        r: pick(&args.kalman_r, &file.kalman_r, KalmanConfig::default().r),
    };
    let opts = ParseOptions {
        max_bad_fraction: args
            .max_bad
            .unwrap_or(ParseOptions::default().max_bad_fraction),
    };
    let out_path = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("ingested.csv"));

    let series = if let Some(trip_dir) = &args.uah_trip {
        let name = trip_dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let (behavior, road) = uah::parse_trip_name(&name).ok_or_else(|| {
            CliError::Data(format!(
                "{}: directory name does not carry a behavior and road",
                trip_dir.display()
            ))
        })?;
        let driver = trip_dir
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unknown".to_string());
        let trip = uah::Trip {
            driver,
            behavior,
            road,
            name,
            path: trip_dir.clone(),
        };
        uah::load_trip(&trip, variant, rate, &kalman, &opts)?
    } else {
        let gps = args
            .gps
            .as_ref()
            .ok_or_else(|| CliError::Usage("--gps is required without --uah-trip".into()))?;
        let accel = args
            .accel
            .as_ref()
            .ok_or_else(|| CliError::Usage("--accel is required without --uah-trip".into()))?;
        let label = args
            .label
            .ok_or_else(|| CliError::Usage("--label is required without --uah-trip".into()))?;
        if variant == Variant::A && args.osm.is_none() {
            return Err(CliError::Usage("variant A needs --osm for the speed limit".into()));
        }
        let parse_cleaned = |path: &Path, profile: &str| -> Result<dataset::Stream, CliError> {
            let schema = dataset::ColumnSchema::builtin(profile).expect("builtin profile");
            let stream = dataset::parse_file(path, &schema, &opts)?;
            let (cleaned, dropped) = dataset::clean(&stream);
            if dropped > 0 {
                eprintln!(
                    "note: {}: dropped {dropped} rows with non-finite values",
                    path.display()
                );
            }
            Ok(cleaned)
        };
        let mut streams = vec![
            parse_cleaned(gps, "uah-gps")?,
            parse_cleaned(accel, "uah-accel")?,
        ];
        if let Some(osm) = &args.osm {
            streams.push(parse_cleaned(osm, "uah-osm")?);
        }
        let records = dataset::resample_merge(&streams, rate, &kalman)?;
        dataset::LabeledSeries::new(
            args.driver.clone().unwrap_or_else(|| "unknown".to_string()),
            args.road.unwrap_or(Road::Motorway),
            label,
            records,
        )?
    };

    let matrix = dataset::build_feature_matrix(&series, variant)?;
    dataset::write_csv_file(&out_path, &matrix)?;
    println!(
        "wrote {} rows ({} features, label {}) to {}",
        matrix.n_rows(),
        matrix.n_cols(),
        series.label,
        out_path.display()
    );
    Ok(())
}

fn cmd_fixture(args: &FixtureArgs, file: &FileConfig) -> Result<(), CliError> {
    let cfg = fixture_config(
        &args.seed,
        &args.rows,
        &args.test_rows,
        &args.noise,
        match args.variant {
            Some(v) => Some(v),
            None => file_variant(file)?,
        },
        file,
    );
    let fx = fixture::generate(&cfg);
    let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let train_path = dir.join("train.csv");
    let test_path = dir.join("test.csv");
    dataset::write_csv_file(&train_path, &fx.train)?;
    dataset::write_csv_file(&test_path, &fx.test)?;
    println!(
        "fixture seed {} variant {}: {} train rows -> {}, {} test rows -> {}",
        cfg.seed,
        cfg.variant.as_str(),
        fx.train.n_rows(),
        train_path.display(),
        fx.test.n_rows(),
        test_path.display()
    );
    Ok(())
}
