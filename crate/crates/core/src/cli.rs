//! `chf` command-line front end.
//!
//! Exit codes: 0 success, 1 validation failures found, 2 usage error,
//! 3 runtime error. Diagnostics go to stderr; results go to files or stdout.
//!
//! A TOML config file (`--config`, or the path in `CHF_CONFIG`) supplies
//! defaults; command-line flags override it.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channel::quality_profile_scaled;
use crate::dataset::{
    parse_dataset_collect, read_dataset, validate_case, write_profile_fragment, Envelope, Heating, ParseOptions,
    Severity, Shape, TestCase,
};
use crate::digitizer::{
    energy_balance_check, filter_outliers, resample_profile, OutlierPolicy, RawCurve, ResamplePolicy,
    DEFAULT_BALANCE_THRESHOLD,
};
use crate::eval::{build_predictor, evaluate_model, export_parity, EvalOptions, Metric, ModelResources, Target};
use crate::lut::{AxialCorrection, CriticalPowerConfig, LutTable, SearchMode, ShapeConstant};
use crate::nn::{case_features, load_model, save_model, train, NnModel, Sample, TrainConfig};

pub const CONFIG_ENV: &str = "CHF_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chf", version, about = "Critical heat flux data tools and predictors")]
pub struct Cli {
    /// TOML config file with defaults (falls back to $CHF_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-case work (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a dataset file.
    Validate(ValidateArgs),
    /// Dump enthalpy and quality profiles.
    Quality(QualityArgs),
    /// Turn a digitized flux curve into a 40-node profile.
    Digitize(DigitizeArgs),
    /// Predict CHF for every case of a dataset.
    Predict(PredictArgs),
    /// Train the neural-network regressor on uniform cases.
    Train(TrainArgs),
    /// Score a model against a dataset and write reports.
    Evaluate(EvaluateArgs),
    /// Export per-case profiles and parameters for plotting.
    PlotData(PlotDataArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset XML file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Accept any grouping element names.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Only this test ID.
    #[arg(long)]
    pub case: Option<u32>,
    /// Power multiplier.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DigitizeArgs {
    /// Raw points file, one `z, q_norm` pair per line.
    #[arg(long)]
    pub points: PathBuf,
    /// Heated length [m].
    #[arg(long)]
    pub length: f64,
    /// Heated perimeter [m].
    #[arg(long)]
    pub perimeter: f64,
    /// Average heat flux [W/m2], for the energy-balance check.
    #[arg(long)]
    pub heat_flux: Option<f64>,
    /// Declared power [W], for the energy-balance check.
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long, default_value = "uniform")]
    pub shape: String,
    /// Flux discontinuity position [m]; repeatable.
    #[arg(long = "breakpoint")]
    pub breakpoints: Vec<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub outlier_k: Option<f64>,
    #[arg(long)]
    pub balance_threshold: Option<f64>,
    /// Output directory (default: fragment to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Lut,
    Bowring,
    Biasi,
    Nn,
}

impl ModelArg {
    fn id(self) -> &'static str {
        match self {
            ModelArg::Lut => "lut",
            ModelArg::Bowring => "bowring",
            ModelArg::Biasi => "biasi",
            ModelArg::Nn => "nn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetArg {
    HeatFlux,
    CriticalPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Relative,
    LogRatio,
    RmseOverMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchArg {
    HeatBalance,
    Direct,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Lookup-table file (required for `--model lut`).
    #[arg(long)]
    pub lut_file: Option<PathBuf>,
    /// Trained model file (required for `--model nn`).
    #[arg(long)]
    pub nn_model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub target: Option<TargetArg>,
    /// Critical-power search mode for lut and biasi.
    #[arg(long, value_enum)]
    pub search_mode: Option<SearchArg>,
    /// Disable the axial-shape correction of the lookup table.
    #[arg(long)]
    pub no_axial_correction: bool,
    /// Clamp table queries onto the quality axis instead of failing.
    #[arg(long)]
    pub clamp_quality: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Per-epoch loss history CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Skip predictions outside the correlation's validity envelope.
    #[arg(long)]
    pub skip_out_of_envelope: bool,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Config-file defaults; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub threads: Option<usize>,
    pub paths: PathsConfig,
    pub model: ModelConfig,
    pub digitizer: DigitizerConfig,
    pub train: TrainSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub data: Option<PathBuf>,
    pub lut_file: Option<PathBuf>,
    pub nn_model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub model: Option<ModelArg>,
    pub target: Option<TargetArg>,
    pub metric: Option<MetricArg>,
    pub search_mode: Option<SearchArg>,
    pub axial_correction: Option<bool>,
    pub clamp_quality: Option<bool>,
    pub skip_out_of_envelope: Option<bool>,
    pub bisection_tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    /// Fixed shape constant [1/m] instead of the Tong form.
    pub shape_constant: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DigitizerConfig {
    pub nodes: Option<usize>,
    pub outlier_k: Option<f64>,
    pub balance_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub dropout: Option<f64>,
    pub batch_size: Option<usize>,
    pub validation_fraction: Option<f64>,
    pub plateau_patience: Option<usize>,
    pub plateau_factor: Option<f64>,
    pub min_learning_rate: Option<f64>,
    pub early_stop_patience: Option<usize>,
}

impl CliConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<i32, Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("run `chf --help` for usage");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let config_path = cli.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let config = match config_path {
        Some(p) if !p.exists() => return usage(format!("config file {} not found", p.display())),
        Some(p) => CliConfig::load(&p)?,
        None => CliConfig::default(),
    };
    let threads = cli.threads.or(config.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Runtime(anyhow::anyhow!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Validate(a) => cmd_validate(&a, &config),
        Command::Quality(a) => cmd_quality(&a, &config),
        Command::Digitize(a) => cmd_digitize(&a, &config),
        Command::Predict(a) => cmd_predict(&a, &config),
        Command::Train(a) => cmd_train(&a, &config),
        Command::Evaluate(a) => cmd_evaluate(&a, &config),
        Command::PlotData(a) => cmd_plot_data(&a, &config),
    })
}

fn input_path(flag: Option<&PathBuf>, fallback: Option<&PathBuf>, name: &str) -> Result<PathBuf, Failure> {
    let p = match flag.or(fallback) {
        Some(p) => p.clone(),
        None => return usage(format!("missing required flag {name}")),
    };
    if !p.exists() {
        return usage(format!("{name}: file {} not found", p.display()));
    }
    Ok(p)
}

fn load_cases(args: &DataArgs, config: &CliConfig) -> Result<Vec<TestCase>, Failure> {
    let path = input_path(args.data.as_ref(), config.paths.data.as_ref(), "--data")?;
    let cases = read_dataset(&path, &ParseOptions { permissive: args.permissive })
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(cases)
}

fn write_output(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, body).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_validate(args: &ValidateArgs, config: &CliConfig) -> Outcome {
    let path = input_path(args.data.data.as_ref(), config.paths.data.as_ref(), "--data")?;
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let opts = ParseOptions { permissive: args.data.permissive };
    let (cases, parse_errors) = match parse_dataset_collect(&text, &opts) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            println!("0 cases, 1 errors");
            return Ok(EXIT_VALIDATION);
        }
    };
    let mut errors = parse_errors.len();
    for e in &parse_errors {
        eprintln!("error: {e}");
    }
    let envelope = Envelope::default();
    let mut seen = std::collections::BTreeSet::new();
    for case in &cases {
        if !seen.insert(case.test_id) {
            eprintln!("error: test {}: duplicate TestID", case.test_id);
            errors += 1;
        }
        for f in validate_case(case, &envelope) {
            eprintln!("{}: test {}: {}: {}", f.severity.as_str(), f.test_id, f.rule, f.message);
            if f.severity == Severity::Error {
                errors += 1;
            }
        }
    }
    let total = cases.len() + parse_errors.len();
    println!("{total} cases, {errors} errors");
    Ok(if errors == 0 { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_quality(args: &QualityArgs, config: &CliConfig) -> Outcome {
    let cases = load_cases(&args.data, config)?;
    if !(args.scale > 0.0) {
        return usage("--scale must be positive");
    }
    let mut out = String::from("test_id,z_m,enthalpy_j_per_kg,quality\n");
    let mut found = false;
    for case in cases.iter().filter(|c| args.case.is_none_or(|id| c.test_id == id)) {
        found = true;
        let p = quality_profile_scaled(case, args.scale).with_context(|| format!("test {}", case.test_id))?;
        for i in 0..p.z.len() {
            let _ = writeln!(out, "{},{:?},{:?},{:?}", case.test_id, p.z[i], p.h[i], p.x[i]);
        }
    }
    if let (Some(id), false) = (args.case, found) {
        return usage(format!("--case {id}: no such test ID"));
    }
    write_output(args.out.as_deref(), &out)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BalanceReport {
    points_in: usize,
    points_kept: usize,
    nodes: usize,
    checked: bool,
    discrepancy: Option<f64>,
    threshold: f64,
    pass: Option<bool>,
}

fn cmd_digitize(args: &DigitizeArgs, config: &CliConfig) -> Outcome {
    if !args.points.exists() {
        return usage(format!("--points: file {} not found", args.points.display()));
    }
    if !(args.length > 0.0 && args.perimeter > 0.0) {
        return usage("--length and --perimeter must be positive");
    }
    let shape: Shape = match args.shape.parse() {
        Ok(s) => s,
        Err(_) => return usage(format!("--shape: unknown shape {:?}", args.shape)),
    };
    let text = std::fs::read_to_string(&args.points).with_context(|| format!("reading {}", args.points.display()))?;
    let points = RawCurve::parse_points(&text).map_err(anyhow::Error::from)?;
    let mut curve = RawCurve::new(points, args.perimeter, args.length);
    curve.shape = shape;
    curve.breakpoints = args.breakpoints.clone();
    curve.declared_power = args.power;
    let policy = OutlierPolicy { k: args.outlier_k.or(config.digitizer.outlier_k).unwrap_or(3.5), ..OutlierPolicy::default() };
    let filtered = filter_outliers(&curve, &policy).map_err(anyhow::Error::from)?;
    let resample = ResamplePolicy {
        n_nodes: args.nodes.or(config.digitizer.nodes).unwrap_or(crate::digitizer::DEFAULT_NODES),
        ..ResamplePolicy::default()
    };
    let profile = resample_profile(&filtered, &resample).map_err(anyhow::Error::from)?;
    let threshold = args.balance_threshold.or(config.digitizer.balance_threshold).unwrap_or(DEFAULT_BALANCE_THRESHOLD);
    let check = match (args.heat_flux, args.power) {
        (Some(q), Some(w)) => Some(energy_balance_check(&profile, q, args.perimeter, w, threshold)),
        (None, None) => None,
        _ => return usage("--heat-flux and --power must be given together"),
    };
    let report = BalanceReport {
        points_in: curve.points.len(),
        points_kept: filtered.points.len(),
        nodes: profile.wall_power.len(),
        checked: check.is_some(),
        discrepancy: check.map(|c| c.discrepancy),
        threshold,
        pass: check.map(|c| c.pass),
    };
    let fragment = write_profile_fragment(&profile);
    let report_json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n";
    match &args.out {
        Some(dir) => {
            let stem = args.points.file_stem().and_then(|s| s.to_str()).unwrap_or("curve");
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            std::fs::write(dir.join(format!("{stem}_profile.xml")), &fragment)?;
            std::fs::write(dir.join(format!("{stem}_balance.json")), &report_json)?;
        }
        None => {
            print!("{fragment}");
            eprint!("{report_json}");
        }
    }
    if let Some(c) = check.filter(|c| !c.pass) {
        eprintln!("energy balance failed: discrepancy {:.4} > {threshold}", c.discrepancy);
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_OK)
}

struct ModelSetup {
    id: &'static str,
    resources: ModelResources,
    target: Target,
}

fn model_setup(args: &ModelArgs, config: &CliConfig) -> Result<ModelSetup, Failure> {
    let mc = &config.model;
    let Some(model) = args.model.or(mc.model) else {
        return usage("missing required flag --model");
    };
    let mut res = ModelResources::default();
    let mode = args.search_mode.or(mc.search_mode).map(|m| match m {
        SearchArg::HeatBalance => SearchMode::HeatBalance,
        SearchArg::Direct => SearchMode::DirectSubstitution,
    });
    let mut lut_config = CriticalPowerConfig::default();
    if let Some(m) = mode {
        lut_config.mode = m;
    }
    lut_config.tolerance = mc.bisection_tolerance.unwrap_or(lut_config.tolerance);
    lut_config.max_iterations = mc.max_iterations.unwrap_or(lut_config.max_iterations);
    lut_config.axial = AxialCorrection {
        enabled: !args.no_axial_correction && mc.axial_correction.unwrap_or(true),
        constant: mc.shape_constant.map_or(ShapeConstant::Tong, ShapeConstant::Constant),
        ..AxialCorrection::default()
    };
    res.lut_config = lut_config;
    res.lut_clamp_quality = args.clamp_quality || mc.clamp_quality.unwrap_or(false);
    res.biasi_mode = mode;
    match model {
        ModelArg::Lut => {
            if args.lut_file.is_none() && config.paths.lut_file.is_none() {
                return usage("--model lut requires --lut-file");
            }
            let p = input_path(args.lut_file.as_ref(), config.paths.lut_file.as_ref(), "--lut-file")?;
            res.lut = Some(LutTable::load(&p).with_context(|| format!("loading {}", p.display()))?);
        }
        ModelArg::Nn => {
            if args.nn_model.is_none() && config.paths.nn_model.is_none() {
                return usage("--model nn requires --nn-model");
            }
            let p = input_path(args.nn_model.as_ref(), config.paths.nn_model.as_ref(), "--nn-model")?;
            res.nn = Some(load_model(&p).with_context(|| format!("loading {}", p.display()))?);
        }
        ModelArg::Bowring | ModelArg::Biasi => {}
    }
    let target = match args.target.or(mc.target) {
        Some(TargetArg::CriticalPower) => Target::CriticalPower,
        _ => Target::HeatFlux,
    };
    Ok(ModelSetup { id: model.id(), resources: res, target })
}

fn cmd_predict(args: &PredictArgs, config: &CliConfig) -> Outcome {
    let setup = model_setup(&args.model, config)?;
    let cases = load_cases(&args.data, config)?;
    let predictor = build_predictor(setup.id, setup.resources).map_err(anyhow::Error::from)?;
    let results: Vec<_> = {
        use rayon::prelude::*;
        cases.par_iter().map(|c| predictor.predict(c, setup.target)).collect()
    };
    let mut out = String::from("test_id,predicted,predicted_location,status,reason\n");
    for (case, r) in cases.iter().zip(results) {
        match r {
            Ok(p) => {
                let loc = p.location.map(|z| format!("{z:?}")).unwrap_or_default();
                let status = if p.out_of_envelope { "out_of_envelope" } else { "ok" };
                let _ = writeln!(out, "{},{:?},{loc},{status},", case.test_id, p.value);
            }
            Err(s) => {
                let _ = writeln!(out, "{},,,skipped,{}", case.test_id, s.reason);
            }
        }
    }
    write_output(args.out.as_deref(), &out)?;
    Ok(EXIT_OK)
}

/// Training samples from the uniform cases: outlet conditions and average flux.
pub fn uniform_samples(cases: &[TestCase]) -> anyhow::Result<Vec<Sample>> {
    cases
        .iter()
        .filter(|c| c.heating == Heating::Uniform)
        .map(|c| {
            let x = quality_profile_scaled(c, 1.0)
                .with_context(|| format!("test {}", c.test_id))?
                .outlet_quality()
                .expect("profile has nodes");
            Ok(Sample { features: case_features(c, x), target: c.heat_flux_avg })
        })
        .collect()
}

fn cmd_train(args: &TrainArgs, config: &CliConfig) -> Outcome {
    let cases = load_cases(&args.data, config)?;
    let t = &config.train;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        seed: args.seed.or(t.seed).unwrap_or(d.seed),
        max_epochs: args.epochs.or(t.epochs).unwrap_or(d.max_epochs),
        learning_rate: args.learning_rate.or(t.learning_rate).unwrap_or(d.learning_rate),
        dropout: args.dropout.or(t.dropout).unwrap_or(d.dropout),
        batch_size: args.batch_size.or(t.batch_size).unwrap_or(d.batch_size),
        validation_fraction: args.validation_fraction.or(t.validation_fraction).unwrap_or(d.validation_fraction),
        plateau_patience: t.plateau_patience.unwrap_or(d.plateau_patience),
        plateau_factor: t.plateau_factor.unwrap_or(d.plateau_factor),
        min_learning_rate: t.min_learning_rate.unwrap_or(d.min_learning_rate),
        early_stop_patience: t.early_stop_patience.unwrap_or(d.early_stop_patience),
        ..d
    };
    if let Err(e) = cfg.check() {
        return usage(e.to_string());
    }
    let samples = uniform_samples(&cases)?;
    let ignored = cases.len() - samples.len();
    if ignored > 0 {
        eprintln!("ignoring {ignored} non-uniform cases");
    }
    let model = NnModel::init_default(cfg.seed);
    let (model, history) = train(model, &samples, &cfg).map_err(anyhow::Error::from)?;
    save_model(&model, &args.out).map_err(anyhow::Error::from)?;
    if let Some(h) = &args.history {
        let mut s = String::from("epoch,train_loss,validation_loss,learning_rate\n");
        for i in 0..history.train_loss.len() {
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?}",
                i, history.train_loss[i], history.validation_loss[i], history.learning_rate[i]
            );
        }
        write_output(Some(h), &s)?;
    }
    let val: Vec<(f64, f64)> = history
        .validation_indices
        .iter()
        .map(|&i| (samples[i].target, model.predict_one(&samples[i].features).unwrap_or(f64::NAN)))
        .collect();
    match crate::eval::rmse_percent(&val) {
        Ok(r) => println!("trained on {} samples, validation RMSE {r:.2}%", history.train_indices.len()),
        Err(_) => println!("trained on {} samples", history.train_indices.len()),
    }
    Ok(EXIT_OK)
}

fn cmd_evaluate(args: &EvaluateArgs, config: &CliConfig) -> Outcome {
    let setup = model_setup(&args.model, config)?;
    let Some(out) = args.out.clone().or_else(|| config.paths.output_dir.clone()) else {
        return usage("missing required flag --out");
    };
    let cases = load_cases(&args.data, config)?;
    let predictor = build_predictor(setup.id, setup.resources).map_err(anyhow::Error::from)?;
    let metric = match args.metric.or(config.model.metric) {
        Some(MetricArg::LogRatio) => Metric::LogRatio,
        Some(MetricArg::RmseOverMean) => Metric::RmseOverMean,
        _ => Metric::Relative,
    };
    let options = EvalOptions {
        target: setup.target,
        metric,
        skip_out_of_envelope: args.skip_out_of_envelope || config.model.skip_out_of_envelope.unwrap_or(false),
    };
    let report = evaluate_model(setup.id, &cases, predictor.as_ref(), &options);
    if report.n_cases + report.n_skipped == 0 {
        return Err(Failure::Runtime(anyhow::anyhow!("dataset has no cases")));
    }
    export_parity(&report, &out, setup.id).map_err(anyhow::Error::from)?;
    let rmse = report.metric_value.map(|r| format!("{r:.2}%")).unwrap_or_else(|| "n/a".into());
    println!(
        "{}: {} cases, {} skipped, {} RMSE {rmse}",
        setup.id,
        report.n_cases,
        report.n_skipped,
        metric.as_str()
    );
    Ok(EXIT_OK)
}

fn cmd_plot_data(args: &PlotDataArgs, config: &CliConfig) -> Outcome {
    let cases = load_cases(&args.data, config)?;
    let mut profiles = String::from("test_id,z_m,wall_power,quality\n");
    let mut params = String::from(
        "test_id,heating,diameter_m,length_m,pressure_pa,mass_flux_kg_m2s,heat_flux_w_m2,outlet_quality,chf_location_m\n",
    );
    for c in &cases {
        let p = quality_profile_scaled(c, 1.0).with_context(|| format!("test {}", c.test_id))?;
        for i in 0..p.z.len() {
            let _ = writeln!(profiles, "{},{:?},{:?},{:?}", c.test_id, p.z[i], c.profile.wall_power[i], p.x[i]);
        }
        let _ = writeln!(
            params,
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            c.test_id,
            c.heating.as_str(),
            c.diameter,
            c.length,
            c.pressure,
            c.mass_flux,
            c.heat_flux_avg,
            p.outlet_quality().unwrap_or(f64::NAN),
            c.chf_location.map(|z| format!("{z:?}")).unwrap_or_default()
        );
    }
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    std::fs::write(args.out.join("profiles.csv"), profiles)?;
    std::fs::write(args.out.join("parameters.csv"), params)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lut_without_table_is_usage_error() {
        assert_eq!(run(["chf", "predict", "--model", "lut", "--data", "x.xml"]), EXIT_USAGE);
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(["chf", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["chf", "evaluate", "--model", "forest"]), EXIT_USAGE);
    }

    #[test]
    fn config_parses() {
        let c: CliConfig = toml::from_str(
            "threads = 2\n[paths]\nlut_file = \"t.txt\"\n[model]\nmodel = \"lut\"\nmetric = \"log-ratio\"\n[train]\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(c.threads, Some(2));
        assert_eq!(c.model.model, Some(ModelArg::Lut));
        assert_eq!(c.train.seed, Some(7));
        assert!(toml::from_str::<CliConfig>("bogus = 1").is_err());
    }
}
