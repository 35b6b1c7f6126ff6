//! Classical round-tube CHF correlations.
//!
//! Bowring (1972) is an inlet-conditions correlation: it takes the inlet
//! subcooling and heated length and returns the average heat flux at the
//! critical condition. Biasi (1967) is a local-conditions correlation: it
//! takes the local equilibrium quality. The evaluation harness uses each in
//! its native form.
//!
//! Every published constant lives in `data/correlation_coefficients.csv`.
//! Results are never silently negative: a negative raw value is kept for
//! diagnostics and the prediction is marked not applicable.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

use crate::water::water;

const COEFFICIENT_FILE: &str = include_str!("../data/correlation_coefficients.csv");

/// Unit conversions for correlations published in non-SI units.
pub mod units {
    pub const PA_PER_MPA: f64 = 1.0e6;
    pub const PA_PER_BAR: f64 = 1.0e5;
    pub const M_PER_CM: f64 = 1.0e-2;
    pub const M_PER_IN: f64 = 0.0254;
    /// kg/(m2 s) per g/(cm2 s)
    pub const SI_MASS_FLUX_PER_CGS: f64 = 10.0;
    /// W/m2 per W/cm2
    pub const SI_HEAT_FLUX_PER_CGS: f64 = 1.0e4;
    /// lbm/(h ft2) per kg/(m2 s)
    pub const IMPERIAL_MASS_FLUX_PER_SI: f64 = 3600.0 * 0.3048 * 0.3048 / 0.45359237;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrelationError {
    #[error("unknown correlation {0:?} (expected \"bowring\" or \"biasi\")")]
    UnknownCorrelation(String),
    #[error("coefficient file: {0}")]
    Coefficients(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorrelationId {
    Bowring,
    Biasi,
}

impl CorrelationId {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationId::Bowring => "bowring",
            CorrelationId::Biasi => "biasi",
        }
    }
}

impl FromStr for CorrelationId {
    type Err = CorrelationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bowring" => Ok(CorrelationId::Bowring),
            "biasi" => Ok(CorrelationId::Biasi),
            _ => Err(CorrelationError::UnknownCorrelation(s.to_string())),
        }
    }
}

impl fmt::Display for CorrelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Input variable that left a correlation's published validity range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvelopeViolation {
    Pressure,
    MassFlux,
    Diameter,
    Length,
    Quality,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PredictionFlags {
    pub negative_raw_output: bool,
    pub out_of_envelope: bool,
}

impl PredictionFlags {
    pub fn any(&self) -> bool {
        self.negative_raw_output || self.out_of_envelope
    }
}

/// Which formula produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Bowring,
    BiasiLowQuality,
    BiasiHighQuality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChfPrediction {
    /// Raw correlation output [W/m2], possibly negative or NaN.
    pub raw_chf: f64,
    pub applicable: bool,
    pub flags: PredictionFlags,
    pub violations: Vec<EnvelopeViolation>,
    pub branch: Branch,
}

impl ChfPrediction {
    fn from_raw(raw_chf: f64, violations: Vec<EnvelopeViolation>, branch: Branch) -> Self {
        let flags = PredictionFlags {
            negative_raw_output: raw_chf < 0.0,
            out_of_envelope: !violations.is_empty(),
        };
        Self { raw_chf, applicable: raw_chf.is_finite() && raw_chf > 0.0, flags, violations, branch }
    }

    /// Predicted CHF [W/m2], `None` when not applicable.
    pub fn chf(&self) -> Option<f64> {
        self.applicable.then_some(self.raw_chf)
    }
}

/// Published constants, keyed `correlation.name`.
#[derive(Debug, Clone)]
pub struct Coefficients {
    values: HashMap<String, f64>,
}

impl Coefficients {
    pub fn parse(text: &str) -> Result<Self, CorrelationError> {
        let mut values = HashMap::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                continue;
            }
            let cols: Vec<&str> = line.splitn(5, ',').collect();
            if cols.len() < 3 {
                return Err(CorrelationError::Coefficients(format!("line {}: too few columns", i + 1)));
            }
            let v: f64 = cols[2]
                .trim()
                .parse()
                .map_err(|e| CorrelationError::Coefficients(format!("line {}: {e}", i + 1)))?;
            values.insert(format!("{}.{}", cols[0].trim(), cols[1].trim()), v);
        }
        Ok(Self { values })
    }

    pub fn bundled() -> &'static Coefficients {
        static C: OnceLock<Coefficients> = OnceLock::new();
        C.get_or_init(|| Coefficients::parse(COEFFICIENT_FILE).expect("bundled coefficient file parses"))
    }

    pub fn get(&self, key: &str) -> f64 {
        *self.values.get(key).unwrap_or_else(|| panic!("missing coefficient {key}"))
    }
}

fn c(key: &str) -> f64 {
    Coefficients::bundled().get(key)
}

/// Inputs for an applicability check. `length` and `quality` are optional
/// because not every correlation form uses them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnvelopeInputs {
    pub pressure: f64,
    pub mass_flux: f64,
    pub diameter: f64,
    pub length: Option<f64>,
    pub quality: Option<f64>,
}

fn within(v: f64, prefix: &str, name: &str) -> bool {
    v >= c(&format!("{prefix}.{name}_min")) && v <= c(&format!("{prefix}.{name}_max"))
}

/// Published-validity predicate by correlation name.
pub fn applicability_check(correlation: &str, inputs: &EnvelopeInputs) -> Result<Vec<EnvelopeViolation>, CorrelationError> {
    Ok(envelope_violations(correlation.parse()?, inputs))
}

pub fn envelope_violations(id: CorrelationId, inputs: &EnvelopeInputs) -> Vec<EnvelopeViolation> {
    let prefix = id.as_str();
    let mut out = Vec::new();
    if !within(inputs.pressure, prefix, "pressure") {
        out.push(EnvelopeViolation::Pressure);
    }
    if !within(inputs.mass_flux, prefix, "mass_flux") {
        out.push(EnvelopeViolation::MassFlux);
    }
    if !within(inputs.diameter, prefix, "diameter") {
        out.push(EnvelopeViolation::Diameter);
    }
    if let Some(l) = inputs.length {
        if !within(l, prefix, "length") {
            out.push(EnvelopeViolation::Length);
        }
    }
    if let (CorrelationId::Biasi, Some(x)) = (id, inputs.quality) {
        if !within(x, prefix, "quality") {
            out.push(EnvelopeViolation::Quality);
        }
    }
    out
}

/// Bowring with the latent heat taken from the bundled water properties.
/// Outside the property band the prediction is flagged, not an error.
pub fn bowring_chf(pressure: f64, mass_flux: f64, diameter: f64, length: f64, inlet_subcooling: f64) -> ChfPrediction {
    match water().saturation_state(pressure) {
        Ok(sat) => bowring_chf_with_hfg(pressure, mass_flux, diameter, length, inlet_subcooling, sat.h_fg),
        Err(_) => {
            let inputs = EnvelopeInputs { pressure, mass_flux, diameter, length: Some(length), quality: None };
            let mut violations = envelope_violations(CorrelationId::Bowring, &inputs);
            if violations.is_empty() {
                violations.push(EnvelopeViolation::Pressure);
            }
            ChfPrediction::from_raw(f64::NAN, violations, Branch::Bowring)
        }
    }
}

/// Pressure-dependent Bowring factors `(F1, F2, F3, F4)`.
pub fn bowring_factors(pressure: f64) -> (f64, f64, f64, f64) {
    let pr = c("bowring.pr_per_mpa") * pressure / units::PA_PER_MPA;
    let (f1, f2, f3) = if pr < 1.0 {
        let term = |e: &str, r: &str, o: &str| {
            let off = c(o);
            (pr.powf(c(e)) * (c(r) * (1.0 - pr)).exp() + off) / (1.0 + off)
        };
        let f1 = term("bowring.f1_low_exponent", "bowring.f1_low_rate", "bowring.f1_low_offset");
        let f2 = f1 / term("bowring.f2_low_exponent", "bowring.f2_low_rate", "bowring.f2_low_offset");
        let f3 = term("bowring.f3_low_exponent", "bowring.f3_low_rate", "bowring.f3_low_offset");
        (f1, f2, f3)
    } else {
        let f1 = pr.powf(c("bowring.f1_high_exponent")) * (c("bowring.f1_high_rate") * (1.0 - pr)).exp();
        let f2 = f1 / (pr.powf(c("bowring.f2_high_exponent")) * (c("bowring.f2_high_rate") * (1.0 - pr)).exp());
        let f3 = pr.powf(c("bowring.f3_high_exponent"));
        (f1, f2, f3)
    };
    (f1, f2, f3, f3 * pr.powf(c("bowring.f4_exponent")))
}

/// Bowring round-tube correlation, SI units. `inlet_subcooling = h_f - h_in`.
pub fn bowring_chf_with_hfg(
    pressure: f64,
    mass_flux: f64,
    diameter: f64,
    length: f64,
    inlet_subcooling: f64,
    h_fg: f64,
) -> ChfPrediction {
    let pr = c("bowring.pr_per_mpa") * pressure / units::PA_PER_MPA;
    let (f1, f2, f3, f4) = bowring_factors(pressure);
    let g = mass_flux;
    let d = diameter;
    let n = c("bowring.n_intercept") - c("bowring.n_slope") * pr;
    let a = c("bowring.a_coeff") * (h_fg * d * g / 4.0) * f1 / (1.0 + c("bowring.a_denominator") * f2 * d.sqrt() * g);
    let b = c("bowring.b_coeff") * d * g;
    let cc = c("bowring.c_coeff") * f3 * d * g / (1.0 + c("bowring.c_denominator") * f4 * (g / c("bowring.g_reference")).powf(n));
    let raw = (a + b * inlet_subcooling) / (cc + length);
    let inputs = EnvelopeInputs { pressure, mass_flux, diameter, length: Some(length), quality: None };
    ChfPrediction::from_raw(raw, envelope_violations(CorrelationId::Bowring, &inputs), Branch::Bowring)
}

/// Both Biasi branches in W/m2: `(low_quality, high_quality)`.
pub fn biasi_branches(diameter: f64, mass_flux: f64, pressure: f64, quality: f64) -> (f64, f64) {
    let d = diameter / units::M_PER_CM;
    let g = mass_flux / units::SI_MASS_FLUX_PER_CGS;
    let p = pressure / units::PA_PER_BAR;
    let n = if d >= c("biasi.diameter_switch") { c("biasi.n_large_diameter") } else { c("biasi.n_small_diameter") };
    let fp = c("biasi.f_intercept") + c("biasi.f_slope") * p * (-c("biasi.f_decay") * p).exp();
    let hp = c("biasi.h_intercept")
        + c("biasi.h_slope") * p * (-c("biasi.h_decay") * p).exp()
        + c("biasi.h_rational_coeff") * p / (c("biasi.h_rational_offset") + p * p);
    let g_low = g.powf(c("biasi.low_g_exponent"));
    let low = c("biasi.low_coeff") / (d.powf(n) * g_low) * (fp / g_low - quality);
    let high = c("biasi.high_coeff") * hp / (d.powf(n) * g.powf(c("biasi.high_g_exponent"))) * (1.0 - quality);
    (low * units::SI_HEAT_FLUX_PER_CGS, high * units::SI_HEAT_FLUX_PER_CGS)
}

/// Biasi correlation in local-conditions form, SI units.
pub fn biasi_chf(diameter: f64, mass_flux: f64, pressure: f64, quality: f64) -> ChfPrediction {
    let (low, high) = biasi_branches(diameter, mass_flux, pressure, quality);
    let (raw, branch) = if mass_flux < c("biasi.low_mass_flux_switch") || high > low {
        (high, Branch::BiasiHighQuality)
    } else {
        (low, Branch::BiasiLowQuality)
    };
    let inputs = EnvelopeInputs { pressure, mass_flux, diameter, length: None, quality: Some(quality) };
    ChfPrediction::from_raw(raw, envelope_violations(CorrelationId::Biasi, &inputs), branch)
}

/// Tong shape constant `C` [1/m] at local quality and mass flux.
pub fn tong_c(quality: f64, mass_flux: f64) -> f64 {
    let g_imp = mass_flux * units::IMPERIAL_MASS_FLUX_PER_SI;
    let per_inch = c("tong.c_coeff") * (1.0 - quality).max(0.0).powf(c("tong.quality_exponent"))
        / (g_imp / c("tong.mass_flux_scale")).powf(c("tong.mass_flux_exponent"));
    per_inch / units::M_PER_IN
}
