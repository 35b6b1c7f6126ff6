//! Scoring CHF predictors against measured data.
//!
//! Comparison conventions:
//! * uniform cases compare average heat flux (`HeatFlux`);
//! * non-uniform cases compare local flux, measured at `CHFLocation` and
//!   predicted at the predicted location;
//! * [`Target::CriticalPower`] compares total power instead, for both.
//!
//! Cases a predictor cannot score are skipped, counted by reason and still
//! listed in exported tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::quality_profile_scaled;
use crate::correlations::{biasi_chf, bowring_chf};
use crate::dataset::{Heating, TestCase};
use crate::lut::{
    predict_critical_power_with, BiasiModel, CriticalPowerConfig, LocalChfModel, LutError, LutModel, LutTable, SearchMode,
};
use crate::nn::{case_features, NnModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no pairs to score")]
    EmptyInput,
    #[error("measured value {0} is not positive")]
    NonPositiveMeasured(f64),
    #[error("unknown model {0:?} (expected lut, bowring, biasi or nn)")]
    UnknownModel(String),
    #[error("model {model} needs {resource}")]
    MissingResource { model: String, resource: String },
    #[error("unknown metric {0:?} (expected relative, log-ratio or rmse-over-mean)")]
    UnknownMetric(String),
    #[error("report has no rows")]
    EmptyReport,
    #[error("i/o error: {0}")]
    Io(String),
}

/// Neumaier-compensated sum in slice order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn check_pairs(pairs: &[(f64, f64)]) -> Result<(), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if let Some(&(m, _)) = pairs.iter().find(|(m, _)| !(*m > 0.0)) {
        return Err(EvalError::NonPositiveMeasured(m));
    }
    Ok(())
}

/// `100 * sqrt(mean(((p - m) / m)^2))` over `(measured, predicted)` pairs.
pub fn rmse_percent(pairs: &[(f64, f64)]) -> Result<f64, EvalError> {
    check_pairs(pairs)?;
    let s = compensated_sum(pairs.iter().map(|(m, p)| ((p - m) / m).powi(2)));
    Ok(100.0 * (s / pairs.len() as f64).sqrt())
}

/// `100 * sqrt(mean(ln(p / m)^2))`; undefined for non-positive predictions.
pub fn log_ratio_rmse_percent(pairs: &[(f64, f64)]) -> Result<f64, EvalError> {
    check_pairs(pairs)?;
    let s = compensated_sum(pairs.iter().map(|(m, p)| (p / m).ln().powi(2)));
    Ok(100.0 * (s / pairs.len() as f64).sqrt())
}

/// `100 * sqrt(mean((p - m)^2)) / mean(m)`.
pub fn rmse_over_mean_percent(pairs: &[(f64, f64)]) -> Result<f64, EvalError> {
    check_pairs(pairs)?;
    let n = pairs.len() as f64;
    let sq = compensated_sum(pairs.iter().map(|(m, p)| (p - m).powi(2)));
    let mean = compensated_sum(pairs.iter().map(|(m, _)| *m)) / n;
    Ok(100.0 * (sq / n).sqrt() / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Relative,
    LogRatio,
    RmseOverMean,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Relative => "relative",
            Metric::LogRatio => "log-ratio",
            Metric::RmseOverMean => "rmse-over-mean",
        }
    }

    pub fn compute(self, pairs: &[(f64, f64)]) -> Result<f64, EvalError> {
        match self {
            Metric::Relative => rmse_percent(pairs),
            Metric::LogRatio => log_ratio_rmse_percent(pairs),
            Metric::RmseOverMean => rmse_over_mean_percent(pairs),
        }
    }
}

impl FromStr for Metric {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relative" => Ok(Metric::Relative),
            "log-ratio" => Ok(Metric::LogRatio),
            "rmse-over-mean" => Ok(Metric::RmseOverMean),
            other => Err(EvalError::UnknownMetric(other.into())),
        }
    }
}

/// Quantity compared between measurement and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Average flux for uniform cases, local flux at the CHF location for
    /// non-uniform ones.
    #[default]
    HeatFlux,
    CriticalPower,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::HeatFlux => "heat-flux",
            Target::CriticalPower => "critical-power",
        }
    }
}

/// Measured comparison value for a case.
pub fn measured_value(case: &TestCase, target: Target) -> Result<f64, Skip> {
    match (target, case.heating) {
        (Target::CriticalPower, _) => Ok(case.power),
        (Target::HeatFlux, Heating::Uniform) => Ok(case.heat_flux_avg),
        (Target::HeatFlux, Heating::NonUniform) => {
            let z = case.chf_location.ok_or_else(|| Skip::new("missing_chf_location", "no CHFLocation"))?;
            case.local_heat_flux(z).ok_or_else(|| Skip::new("invalid_profile", format!("no flux at z = {z}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// Predicted CHF location [m], when the predictor provides one.
    pub location: Option<f64>,
    pub out_of_envelope: bool,
}

/// Why a case was not scored; `reason` is a stable flag name.
#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub reason: &'static str,
    pub detail: String,
}

impl Skip {
    pub fn new(reason: &'static str, detail: impl Into<String>) -> Self {
        Self { reason, detail: detail.into() }
    }
}

impl From<LutError> for Skip {
    fn from(e: LutError) -> Self {
        let reason = match &e {
            LutError::OutOfTable { .. } => "out_of_table",
            LutError::DiameterOutOfRange(_) => "diameter_out_of_range",
            LutError::NoConvergence(_) => "no_convergence",
            LutError::SingularProfile(_) => "invalid_profile",
            LutError::NotApplicable(_) => "negative_raw_output",
            LutError::Channel(_) => "property_error",
            LutError::Format { .. } | LutError::Grid(_) | LutError::Io(_) => "table_error",
        };
        Skip::new(reason, e.to_string())
    }
}

pub trait Predictor: Sync {
    fn predict(&self, case: &TestCase, target: Target) -> Result<Prediction, Skip>;
}

impl<F> Predictor for F
where
    F: Fn(&TestCase, Target) -> Result<Prediction, Skip> + Sync,
{
    fn predict(&self, case: &TestCase, target: Target) -> Result<Prediction, Skip> {
        self(case, target)
    }
}

/// Critical-power search with any local CHF model.
fn search_prediction<M: LocalChfModel + ?Sized>(
    case: &TestCase,
    model: &M,
    config: &CriticalPowerConfig,
    target: Target,
) -> Result<(Prediction, f64), Skip> {
    let r = predict_critical_power_with(case, model, config)?;
    let value = match (target, case.heating) {
        (Target::CriticalPower, _) => r.critical_power,
        (Target::HeatFlux, Heating::Uniform) => r.critical_heat_flux,
        (Target::HeatFlux, Heating::NonUniform) => {
            r.local_critical_flux(case).ok_or_else(|| Skip::new("invalid_profile", "no flux at predicted location"))?
        }
    };
    Ok((Prediction { value, location: Some(r.chf_location), out_of_envelope: false }, r.lambda))
}

/// Lookup table with diameter and axial corrections.
pub struct LutPredictor {
    pub table: LutTable,
    pub config: CriticalPowerConfig,
    pub clamp_quality: bool,
}

impl Predictor for LutPredictor {
    fn predict(&self, case: &TestCase, target: Target) -> Result<Prediction, Skip> {
        let model = LutModel { table: &self.table, clamp_quality: self.clamp_quality };
        Ok(search_prediction(case, &model, &self.config, target)?.0)
    }
}

/// Bowring, inlet-conditions form: predicts the average critical flux.
#[derive(Debug, Clone, Copy, Default)]
pub struct BowringPredictor;

impl Predictor for BowringPredictor {
    fn predict(&self, case: &TestCase, target: Target) -> Result<Prediction, Skip> {
        let subcooling = case.inlet_subcooling().map_err(|e| Skip::new("property_error", e.to_string()))?;
        let p = bowring_chf(case.pressure, case.mass_flux, case.diameter, case.length, subcooling);
        let q = p.chf().ok_or_else(|| {
            let reason = if p.flags.negative_raw_output { "negative_raw_output" } else { "out_of_envelope" };
            Skip::new(reason, format!("raw output {}", p.raw_chf))
        })?;
        let value = match (target, case.heating) {
            (Target::CriticalPower, _) => q * case.power / case.heat_flux_avg,
            (Target::HeatFlux, Heating::Uniform) => q,
            (Target::HeatFlux, Heating::NonUniform) => {
                // shape-blind: the average prediction carried to the measured location
                let z = case.chf_location.ok_or_else(|| Skip::new("missing_chf_location", "no CHFLocation"))?;
                q * case.profile.power_at(z).ok_or_else(|| Skip::new("invalid_profile", "no flux at CHF location"))?
            }
        };
        Ok(Prediction { value, location: None, out_of_envelope: p.flags.out_of_envelope })
    }
}

/// Biasi, local-conditions form.
#[derive(Debug, Clone, Copy)]
pub struct BiasiPredictor {
    pub config: CriticalPowerConfig,
}

impl Default for BiasiPredictor {
    fn default() -> Self {
        Self { config: CriticalPowerConfig { mode: SearchMode::DirectSubstitution, ..CriticalPowerConfig::default() } }
    }
}

impl Predictor for BiasiPredictor {
    fn predict(&self, case: &TestCase, target: Target) -> Result<Prediction, Skip> {
        let (mut pred, lambda) = search_prediction(case, &BiasiModel, &self.config, target)?;
        let location = pred.location.unwrap_or(case.length);
        let x = quality_profile_scaled(case, lambda.max(1e-12))
            .ok()
            .and_then(|p| p.quality_at(location))
            .ok_or_else(|| Skip::new("property_error", "quality at predicted location"))?;
        pred.out_of_envelope = biasi_chf(case.diameter, case.mass_flux, case.pressure, x).flags.out_of_envelope;
        Ok(pred)
    }
}

/// Neural network on `[D, L, P, G, x]`, with `x` at the measured CHF
/// location (the outlet for uniform cases) at measured power.
pub struct NnPredictor {
    pub model: NnModel,
}

impl Predictor for NnPredictor {
    fn predict(&self, case: &TestCase, target: Target) -> Result<Prediction, Skip> {
        let z = match case.heating {
            Heating::Uniform => case.length,
            Heating::NonUniform => case.chf_location.ok_or_else(|| Skip::new("missing_chf_location", "no CHFLocation"))?,
        };
        let x = quality_profile_scaled(case, 1.0)
            .ok()
            .and_then(|p| p.quality_at(z))
            .ok_or_else(|| Skip::new("property_error", "quality at CHF location"))?;
        let q = self.model.predict_one(&case_features(case, x)).map_err(|e| Skip::new("model_error", e.to_string()))?;
        if !(q > 0.0 && q.is_finite()) {
            return Err(Skip::new("negative_raw_output", format!("raw output {q}")));
        }
        let value = match (target, case.heating) {
            (Target::CriticalPower, _) => {
                let w = case.profile.power_at(z).unwrap_or(1.0);
                q / w * case.power / case.heat_flux_avg
            }
            _ => q,
        };
        Ok(Prediction { value, location: None, out_of_envelope: false })
    }
}

/// Resources available for building predictors by name.
#[derive(Default)]
pub struct ModelResources {
    pub lut: Option<LutTable>,
    pub nn: Option<NnModel>,
    pub lut_config: CriticalPowerConfig,
    pub lut_clamp_quality: bool,
    pub biasi_mode: Option<SearchMode>,
}

pub const MODEL_IDS: [&str; 4] = ["lut", "bowring", "biasi", "nn"];

pub fn build_predictor(model_id: &str, res: ModelResources) -> Result<Box<dyn Predictor>, EvalError> {
    let missing = |r: &str| EvalError::MissingResource { model: model_id.into(), resource: r.into() };
    Ok(match model_id {
        "lut" => Box::new(LutPredictor {
            table: res.lut.ok_or_else(|| missing("a lookup table"))?,
            config: res.lut_config,
            clamp_quality: res.lut_clamp_quality,
        }),
        "bowring" => Box::new(BowringPredictor),
        "biasi" => {
            let mut p = BiasiPredictor::default();
            if let Some(mode) = res.biasi_mode {
                p.config.mode = mode;
            }
            Box::new(p)
        }
        "nn" => Box::new(NnPredictor { model: res.nn.ok_or_else(|| missing("a trained model"))? }),
        other => return Err(EvalError::UnknownModel(other.into())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    Uniform,
    NonUniform,
    Mixed,
    Empty,
}

impl Subset {
    pub fn of(cases: &[TestCase]) -> Self {
        let uni = cases.iter().filter(|c| c.heating == Heating::Uniform).count();
        match (cases.len(), uni) {
            (0, _) => Subset::Empty,
            (n, u) if u == n => Subset::Uniform,
            (_, 0) => Subset::NonUniform,
            _ => Subset::Mixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    /// Position in the evaluated dataset.
    pub index: usize,
    pub test_id: u32,
    pub measured: f64,
    pub predicted: f64,
    pub relative_error: f64,
    pub predicted_location: Option<f64>,
    pub measured_location: Option<f64>,
    pub out_of_envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedCase {
    pub index: usize,
    pub test_id: u32,
    pub measured: Option<f64>,
    pub reason: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    pub target: Target,
    pub metric: Metric,
    /// Skip predictions outside the correlation's validity envelope.
    pub skip_out_of_envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub model_id: String,
    pub subset: Subset,
    pub target: Target,
    pub metric: Metric,
    pub n_cases: usize,
    pub n_skipped: usize,
    pub skip_reasons: BTreeMap<String, usize>,
    /// Relative RMSE [%]; absent when nothing was scored.
    pub rmse_percent: Option<f64>,
    /// The selected metric [%].
    pub metric_value: Option<f64>,
    pub mean_relative_error: Option<f64>,
    /// Mean |predicted - measured| CHF location [m].
    pub location_mae: Option<f64>,
    pub per_case: Vec<CaseResult>,
    pub skipped: Vec<SkippedCase>,
}

impl EvalReport {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.per_case.iter().map(|c| (c.measured, c.predicted)).collect()
    }
}

/// Runs `predictor` on every case (in parallel on the current rayon pool)
/// and assembles the report in dataset order.
pub fn evaluate_model(model_id: &str, cases: &[TestCase], predictor: &dyn Predictor, options: &EvalOptions) -> EvalReport {
    let outcomes: Vec<Result<(f64, Prediction), (Option<f64>, Skip)>> = cases
        .par_iter()
        .map(|case| {
            let measured = measured_value(case, options.target).map_err(|s| (None, s))?;
            let pred = predictor.predict(case, options.target).map_err(|s| (Some(measured), s))?;
            if options.skip_out_of_envelope && pred.out_of_envelope {
                return Err((Some(measured), Skip::new("out_of_envelope", "outside validity envelope")));
            }
            if !(pred.value > 0.0 && pred.value.is_finite()) {
                return Err((Some(measured), Skip::new("negative_raw_output", format!("predicted {}", pred.value))));
            }
            Ok((measured, pred))
        })
        .collect();

    let mut per_case = Vec::new();
    let mut skipped = Vec::new();
    let mut skip_reasons = BTreeMap::new();
    for (index, (case, outcome)) in cases.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok((measured, p)) => per_case.push(CaseResult {
                index,
                test_id: case.test_id,
                measured,
                predicted: p.value,
                relative_error: (p.value - measured) / measured,
                predicted_location: p.location,
                measured_location: case.chf_location,
                out_of_envelope: p.out_of_envelope,
            }),
            Err((measured, skip)) => {
                *skip_reasons.entry(skip.reason.to_string()).or_insert(0) += 1;
                skipped.push(SkippedCase {
                    index,
                    test_id: case.test_id,
                    measured,
                    reason: skip.reason.into(),
                    detail: skip.detail,
                });
            }
        }
    }

    let pairs: Vec<(f64, f64)> = per_case.iter().map(|c| (c.measured, c.predicted)).collect();
    let n = per_case.len();
    let mean_relative_error = (n > 0).then(|| compensated_sum(per_case.iter().map(|c| c.relative_error)) / n as f64);
    let located: Vec<f64> = per_case
        .iter()
        .filter_map(|c| Some((c.predicted_location? - c.measured_location?).abs()))
        .collect();
    let location_mae = (!located.is_empty() && Subset::of(cases) != Subset::Uniform)
        .then(|| compensated_sum(located.iter().copied()) / located.len() as f64);
    EvalReport {
        model_id: model_id.into(),
        subset: Subset::of(cases),
        target: options.target,
        metric: options.metric,
        n_cases: n,
        n_skipped: skipped.len(),
        skip_reasons,
        rmse_percent: rmse_percent(&pairs).ok(),
        metric_value: options.metric.compute(&pairs).ok(),
        mean_relative_error,
        location_mae,
        per_case,
        skipped,
    }
}

/// Files written by [`export_parity`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParityFiles {
    pub table: PathBuf,
    pub plot: PathBuf,
    pub summary: PathBuf,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Per-case CSV in dataset order; skipped cases are flagged.
pub fn parity_table(report: &EvalReport) -> String {
    let mut rows: Vec<(usize, String)> = Vec::with_capacity(report.n_cases + report.n_skipped);
    for c in &report.per_case {
        rows.push((
            c.index,
            format!(
                "{},{:?},{:?},{:?},{},{},0,",
                c.test_id,
                c.measured,
                c.predicted,
                c.relative_error,
                opt(c.predicted_location),
                opt(c.measured_location)
            ),
        ));
    }
    for s in &report.skipped {
        rows.push((s.index, format!("{},{},,,,,1,{}", s.test_id, opt(s.measured), s.reason)));
    }
    rows.sort_by_key(|r| r.0);
    let mut out = String::from("test_id,measured,predicted,relative_error,predicted_location,measured_location,skipped,skip_reason\n");
    for (_, r) in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Summary without the per-case lists, as pretty JSON.
pub fn summary_json(report: &EvalReport) -> String {
    #[derive(Serialize)]
    struct Summary<'a> {
        model_id: &'a str,
        subset: Subset,
        target: Target,
        metric: Metric,
        n_cases: usize,
        n_skipped: usize,
        skip_reasons: &'a BTreeMap<String, usize>,
        rmse_percent: Option<f64>,
        metric_value: Option<f64>,
        mean_relative_error: Option<f64>,
        location_mae: Option<f64>,
    }
    let s = Summary {
        model_id: &report.model_id,
        subset: report.subset,
        target: report.target,
        metric: report.metric,
        n_cases: report.n_cases,
        n_skipped: report.n_skipped,
        skip_reasons: &report.skip_reasons,
        rmse_percent: report.rmse_percent,
        metric_value: report.metric_value,
        mean_relative_error: report.mean_relative_error,
        location_mae: report.location_mae,
    };
    serde_json::to_string_pretty(&s).expect("summary serializes") + "\n"
}

/// Predicted-vs-measured scatter with the y = x line and a +/- RMSE band.
pub fn parity_svg(report: &EvalReport) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 60.0;
    let unit = if report.target == Target::CriticalPower { ("kW", 1e3) } else { ("MW/m2", 1e6) };
    let pts: Vec<(f64, f64)> = report.per_case.iter().map(|c| (c.measured / unit.1, c.predicted / unit.1)).collect();
    let hi = pts.iter().flat_map(|&(a, b)| [a, b]).fold(0.0_f64, f64::max).max(1e-9) * 1.05;
    let plot = SIZE - 2.0 * PAD;
    let sx = |v: f64| PAD + v / hi * plot;
    let sy = |v: f64| SIZE - PAD - v / hi * plot;
    let band = report.rmse_percent.unwrap_or(0.0) / 100.0;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{plot}" height="{plot}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    // region between y = (1 - b) x and y = (1 + b) x inside the box
    let _ = writeln!(
        s,
        r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#cfe3f7" fill-opacity="0.6" stroke="none"/>"##,
        sx(0.0),
        sy(0.0),
        sx(hi / (1.0 + band)),
        sy(hi),
        sx(hi),
        sy(hi),
        sx(hi),
        sy(hi * (1.0 - band).max(0.0))
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
        sx(0.0),
        sy(0.0),
        sx(hi),
        sy(hi)
    );
    for (m, p) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f5fa8" fill-opacity="0.7"/>"##, sx(*m), sy(p.min(hi)));
    }
    for k in 0..=4 {
        let v = hi * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{v:.2}</text>"#, sx(v), SIZE - PAD + 16.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{v:.2}</text>"#, PAD - 6.0, sy(v) + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">Measured [{}]</text>"#,
        SIZE / 2.0,
        SIZE - 18.0,
        unit.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">Predicted [{}]</text>"#,
        SIZE / 2.0,
        SIZE / 2.0,
        unit.0
    );
    let title = match report.rmse_percent {
        Some(r) => format!("{} ({} cases, RMSE {r:.1}%)", report.model_id, report.n_cases),
        None => format!("{} (no scored cases)", report.model_id),
    };
    let _ = writeln!(s, r#"<text x="{:.2}" y="30" font-size="14" text-anchor="middle">{title}</text>"#, SIZE / 2.0);
    s.push_str("</svg>\n");
    s
}

/// Writes `<stem>_parity.csv`, `<stem>_parity.svg` and `<stem>_summary.json`
/// into `dir`, creating it if needed.
pub fn export_parity(report: &EvalReport, dir: impl AsRef<Path>, stem: &str) -> Result<ParityFiles, EvalError> {
    if report.n_cases + report.n_skipped == 0 {
        return Err(EvalError::EmptyReport);
    }
    let dir = dir.as_ref();
    let io = |e: std::io::Error| EvalError::Io(e.to_string());
    std::fs::create_dir_all(dir).map_err(io)?;
    let files = ParityFiles {
        table: dir.join(format!("{stem}_parity.csv")),
        plot: dir.join(format!("{stem}_parity.svg")),
        summary: dir.join(format!("{stem}_summary.json")),
    };
    std::fs::write(&files.table, parity_table(report)).map_err(io)?;
    std::fs::write(&files.plot, parity_svg(report)).map_err(io)?;
    std::fs::write(&files.summary, summary_json(report)).map_err(io)?;
    Ok(files)
}
