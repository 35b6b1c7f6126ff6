//! Lookup-table CHF prediction.
//!
//! The table gives CHF for an 8 mm tube on a (pressure, mass flux, quality)
//! grid. A prediction is `lookup * K_d / F`, where `K_d = (0.008 / D)^0.5` is
//! the diameter factor and `F` the axial-shape (memory effect) factor
//!
//! ```text
//! F(z) = C * int_0^z q''(s) exp(-C (z - s)) ds / (q''(z) (1 - exp(-C z)))
//! ```
//!
//! with `C` from local conditions (Tong form, see the coefficients file) or
//! a constant override. `F = 1` for flat profiles.
//!
//! # Table file format
//!
//! Text, `#` comments, tokens separated by commas and/or whitespace:
//!
//! ```text
//! # CHF lookup table
//! axis pressure kPa 100 500 1000
//! axis mass_flux kg/m2s 0 1000 2000
//! axis quality - -0.2 0.0 0.2
//! units chf kW/m2
//! 100 0    3000 2500 2000
//! 100 1000 4000 3500 3000
//! ...
//! ```
//!
//! One data row per (pressure, mass flux) pair: the pair itself, then one CHF
//! value per quality node. Pressure units: `Pa`, `kPa`, `MPa`; CHF units:
//! `W/m2`, `kW/m2`, `MW/m2`. Rows may appear in any order but every pair must
//! be present exactly once.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::channel::{quality_profile_with, ChannelError, QualityProfile};
use crate::correlations::{biasi_chf, tong_c};
use crate::dataset::TestCase;
use crate::water::water;

pub const REFERENCE_DIAMETER: f64 = 0.008;
pub const MIN_DIAMETER: f64 = 0.002;
pub const MAX_DIAMETER: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LutError {
    #[error("table format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("table grid error: {0}")]
    Grid(String),
    #[error("query (P = {pressure} Pa, G = {mass_flux} kg/m2s, x = {quality}) outside table")]
    OutOfTable { pressure: f64, mass_flux: f64, quality: f64 },
    #[error("diameter {0} m outside [{MIN_DIAMETER}, {MAX_DIAMETER}] m")]
    DiameterOutOfRange(f64),
    #[error("local heat flux is zero at z = {0} m")]
    SingularProfile(f64),
    #[error("critical-power search did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("prediction not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("cannot read table: {0}")]
    Io(String),
}

impl From<crate::water::PropertyError> for LutError {
    fn from(e: crate::water::PropertyError) -> Self {
        LutError::Channel(ChannelError::Property(e))
    }
}

/// CHF grid for the 8 mm reference tube. Values are stored quality-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LutTable {
    pressure_axis: Vec<f64>,
    mass_flux_axis: Vec<f64>,
    quality_axis: Vec<f64>,
    values: Vec<f64>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<(), LutError> {
    if axis.len() < 2 {
        return Err(LutError::Grid(format!("{name} axis needs at least 2 nodes")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(LutError::Grid(format!("{name} axis has non-finite entries")));
    }
    if let Some(i) = axis.windows(2).position(|w| w[1] <= w[0]) {
        return Err(LutError::Grid(format!("{name} axis not strictly increasing at index {}", i + 1)));
    }
    Ok(())
}

impl LutTable {
    pub fn new(
        pressure_axis: Vec<f64>,
        mass_flux_axis: Vec<f64>,
        quality_axis: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, LutError> {
        check_axis("pressure", &pressure_axis)?;
        check_axis("mass flux", &mass_flux_axis)?;
        check_axis("quality", &quality_axis)?;
        let n = pressure_axis.len() * mass_flux_axis.len() * quality_axis.len();
        if values.len() != n {
            return Err(LutError::Grid(format!("expected {n} values, found {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(LutError::Grid(format!("CHF values must be finite and non-negative, found {v}")));
        }
        Ok(Self { pressure_axis, mass_flux_axis, quality_axis, values })
    }

    /// Table filled from `f(pressure, mass_flux, quality)`.
    pub fn from_fn(
        pressure_axis: Vec<f64>,
        mass_flux_axis: Vec<f64>,
        quality_axis: Vec<f64>,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Self, LutError> {
        let mut values = Vec::with_capacity(pressure_axis.len() * mass_flux_axis.len() * quality_axis.len());
        for &p in &pressure_axis {
            for &g in &mass_flux_axis {
                for &x in &quality_axis {
                    values.push(f(p, g, x));
                }
            }
        }
        Self::new(pressure_axis, mass_flux_axis, quality_axis, values)
    }

    pub fn pressure_axis(&self) -> &[f64] {
        &self.pressure_axis
    }

    pub fn mass_flux_axis(&self) -> &[f64] {
        &self.mass_flux_axis
    }

    pub fn quality_axis(&self) -> &[f64] {
        &self.quality_axis
    }

    pub fn value(&self, ip: usize, ig: usize, ix: usize) -> f64 {
        self.values[self.index(ip, ig, ix)]
    }

    fn index(&self, ip: usize, ig: usize, ix: usize) -> usize {
        (ip * self.mass_flux_axis.len() + ig) * self.quality_axis.len() + ix
    }

    /// Trilinear interpolation; queries outside the grid are errors.
    pub fn lookup_base(&self, pressure: f64, mass_flux: f64, quality: f64) -> Result<f64, LutError> {
        let out = || LutError::OutOfTable { pressure, mass_flux, quality };
        let (ip, tp) = locate(&self.pressure_axis, pressure).ok_or_else(out)?;
        let (ig, tg) = locate(&self.mass_flux_axis, mass_flux).ok_or_else(out)?;
        let (ix, tx) = locate(&self.quality_axis, quality).ok_or_else(out)?;
        let lerp = |a: f64, b: f64, t: f64| (1.0 - t) * a + t * b;
        let along_x = |p: usize, g: usize| lerp(self.value(p, g, ix), self.value(p, g, ix + 1), tx);
        let lo = lerp(along_x(ip, ig), along_x(ip, ig + 1), tg);
        let hi = lerp(along_x(ip + 1, ig), along_x(ip + 1, ig + 1), tg);
        Ok(lerp(lo, hi, tp))
    }

    /// Lookup with the quality clamped onto the table's quality span.
    pub fn lookup_clamped_quality(&self, pressure: f64, mass_flux: f64, quality: f64) -> Result<f64, LutError> {
        let q = quality.clamp(self.quality_axis[0], *self.quality_axis.last().unwrap());
        self.lookup_base(pressure, mass_flux, q)
    }

    pub fn parse(text: &str) -> Result<Self, LutError> {
        let mut axes: [Option<Vec<f64>>; 3] = [None, None, None];
        let mut chf_scale = 1.0;
        let mut p_scale = 1.0;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let fmt_err = |message: String| LutError::Format { line: lineno, message };
            match tokens[0] {
                "axis" => {
                    if tokens.len() < 4 {
                        return Err(fmt_err("axis line needs a name, a unit and values".into()));
                    }
                    let (slot, scale) = match (tokens[1], tokens[2]) {
                        ("pressure", "Pa") => (0, 1.0),
                        ("pressure", "kPa") => (0, 1.0e3),
                        ("pressure", "MPa") => (0, 1.0e6),
                        ("mass_flux", "kg/m2s") | ("mass_flux", "kg/(m2s)") | ("mass_flux", "kg/m2/s") => (1, 1.0),
                        ("quality", "-") => (2, 1.0),
                        (name, unit) => return Err(fmt_err(format!("unknown axis or unit: {name} [{unit}]"))),
                    };
                    if axes[slot].is_some() {
                        return Err(fmt_err(format!("axis {} declared twice", tokens[1])));
                    }
                    if slot == 0 {
                        p_scale = scale;
                    }
                    let values = parse_numbers(&tokens[3..]).map_err(fmt_err)?;
                    axes[slot] = Some(values.into_iter().map(|v| v * scale).collect());
                }
                "units" => {
                    chf_scale = match tokens.get(1..3) {
                        Some(["chf", "W/m2"]) => 1.0,
                        Some(["chf", "kW/m2"]) => 1.0e3,
                        Some(["chf", "MW/m2"]) => 1.0e6,
                        _ => return Err(fmt_err(format!("unsupported units line: {line}"))),
                    };
                }
                _ => rows.push((lineno, parse_numbers(&tokens).map_err(fmt_err)?)),
            }
        }
        let [p_axis, g_axis, x_axis] = axes;
        let missing = |name: &str| LutError::Format { line: 0, message: format!("missing {name} axis") };
        let p_axis = p_axis.ok_or_else(|| missing("pressure"))?;
        let g_axis = g_axis.ok_or_else(|| missing("mass_flux"))?;
        let x_axis = x_axis.ok_or_else(|| missing("quality"))?;
        check_axis("pressure", &p_axis)?;
        check_axis("mass flux", &g_axis)?;
        check_axis("quality", &x_axis)?;

        let mut values = vec![f64::NAN; p_axis.len() * g_axis.len() * x_axis.len()];
        let mut seen = vec![false; p_axis.len() * g_axis.len()];
        for (lineno, row) in rows {
            if row.len() != x_axis.len() + 2 {
                return Err(LutError::Format {
                    line: lineno,
                    message: format!("expected {} numbers, found {}", x_axis.len() + 2, row.len()),
                });
            }
            let ip = find_node(&p_axis, row[0] * p_scale).ok_or_else(|| {
                LutError::Grid(format!("line {lineno}: pressure {} is not an axis node", row[0]))
            })?;
            let ig = find_node(&g_axis, row[1])
                .ok_or_else(|| LutError::Grid(format!("line {lineno}: mass flux {} is not an axis node", row[1])))?;
            let cell = ip * g_axis.len() + ig;
            if seen[cell] {
                return Err(LutError::Grid(format!("line {lineno}: duplicate row for ({}, {})", row[0], row[1])));
            }
            seen[cell] = true;
            for (ix, v) in row[2..].iter().enumerate() {
                values[cell * x_axis.len() + ix] = v * chf_scale;
            }
        }
        if let Some(cell) = seen.iter().position(|s| !s) {
            return Err(LutError::Grid(format!(
                "missing row for pressure {} Pa, mass flux {}",
                p_axis[cell / g_axis.len()],
                g_axis[cell % g_axis.len()]
            )));
        }
        Self::new(p_axis, g_axis, x_axis, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LutError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| LutError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    /// Serializes in the table file format (SI units).
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut s = String::from("# CHF lookup table\n");
        let _ = writeln!(s, "axis pressure Pa {}", join(&self.pressure_axis));
        let _ = writeln!(s, "axis mass_flux kg/m2s {}", join(&self.mass_flux_axis));
        let _ = writeln!(s, "axis quality - {}", join(&self.quality_axis));
        s.push_str("units chf W/m2\n");
        let nx = self.quality_axis.len();
        for (ip, p) in self.pressure_axis.iter().enumerate() {
            for (ig, g) in self.mass_flux_axis.iter().enumerate() {
                let start = self.index(ip, ig, 0);
                let _ = writeln!(s, "{p:?} {g:?} {}", join(&self.values[start..start + nx]));
            }
        }
        s
    }
}

fn find_node(axis: &[f64], v: f64) -> Option<usize> {
    axis.iter().position(|&a| (a - v).abs() <= 1e-9 * a.abs().max(1e-12))
}

fn parse_numbers(tokens: &[&str]) -> Result<Vec<f64>, String> {
    tokens
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")).and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite number: {t:?}"))
            }
        }))
        .collect()
}

/// Cell index and fractional position; `None` outside the axis.
fn locate(axis: &[f64], v: f64) -> Option<(usize, f64)> {
    let n = axis.len();
    if !(v >= axis[0] && v <= axis[n - 1]) {
        return None;
    }
    let i = axis.partition_point(|&a| a <= v).clamp(1, n - 1) - 1;
    Some((i, (v - axis[i]) / (axis[i + 1] - axis[i])))
}

/// Scales an 8 mm CHF value to `diameter`: `chf * (0.008 / D)^0.5`.
pub fn diameter_correction(chf_8mm: f64, diameter: f64) -> Result<f64, LutError> {
    if !(MIN_DIAMETER..=MAX_DIAMETER).contains(&diameter) {
        return Err(LutError::DiameterOutOfRange(diameter));
    }
    Ok(chf_8mm * (REFERENCE_DIAMETER / diameter).sqrt())
}

/// How the shape constant `C` of the axial factor is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeConstant {
    /// Tong form from local quality and mass flux.
    Tong,
    /// Fixed value [1/m].
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialCorrection {
    pub enabled: bool,
    pub constant: ShapeConstant,
    /// Use F = 1 wherever the local equilibrium quality is not positive.
    pub saturated_only: bool,
    /// Start the history integral at the onset of bulk boiling instead of
    /// the tube inlet.
    pub from_boiling_onset: bool,
}

impl Default for AxialCorrection {
    fn default() -> Self {
        Self { enabled: true, constant: ShapeConstant::Tong, saturated_only: true, from_boiling_onset: false }
    }
}

impl AxialCorrection {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }
}

/// Piecewise-linear heat-flux shape; repeated coordinates encode steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxShape {
    pub z: Vec<f64>,
    pub q: Vec<f64>,
}

impl FluxShape {
    pub fn from_case(case: &TestCase) -> Self {
        Self { z: case.profile.node_positions(), q: case.profile.wall_power.clone() }
    }

    /// Value at `z`; right limit at a step.
    pub fn at(&self, z: f64) -> Option<f64> {
        crate::interp::linear_within(&self.z, &self.q, z)
    }

    /// `int_origin^z q(s) exp(-c (z - s)) ds`, exact for piecewise-linear `q`.
    pub fn kernel_integral(&self, origin: f64, z: f64, c: f64) -> f64 {
        let mut total = 0.0;
        for i in 1..self.z.len() {
            let (za, zb) = (self.z[i - 1].max(origin), self.z[i].min(z));
            if zb <= za {
                continue;
            }
            let qa = self.at_segment(i, za);
            let qb = self.at_segment(i, zb);
            let delta = zb - za;
            let k = c * delta;
            let (g1, g2) = kernel_weights(k);
            total += (-c * (z - zb)).exp() * delta * (qa * g1 + (qb - qa) * g2);
        }
        total
    }

    fn at_segment(&self, i: usize, z: f64) -> f64 {
        let (z0, z1) = (self.z[i - 1], self.z[i]);
        let t = if z1 > z0 { (z - z0) / (z1 - z0) } else { 1.0 };
        self.q[i - 1] + t * (self.q[i] - self.q[i - 1])
    }
}

/// `g1 = int_0^1 e^{-k(1-s)} ds`, `g2 = int_0^1 s e^{-k(1-s)} ds`.
fn kernel_weights(k: f64) -> (f64, f64) {
    if k.abs() < 1e-3 {
        let k2 = k * k;
        let g1 = 1.0 - k / 2.0 + k2 / 6.0 - k2 * k / 24.0 + k2 * k2 / 120.0;
        let g2 = 0.5 - k / 6.0 + k2 / 24.0 - k2 * k / 120.0 + k2 * k2 / 720.0;
        (g1, g2)
    } else {
        let em = (-k).exp_m1();
        (-em / k, (k + em) / (k * k))
    }
}

/// Axial factor for a flux shape at `z` with shape constant `c` [1/m],
/// history integrated from `origin`.
pub fn axial_factor_for_shape(shape: &FluxShape, origin: f64, z: f64, c: f64) -> Result<f64, LutError> {
    let q_local = shape.at(z).ok_or(LutError::SingularProfile(z))?;
    if q_local <= 0.0 {
        return Err(LutError::SingularProfile(z));
    }
    let span = z - origin;
    if span <= 0.0 {
        return Ok(1.0);
    }
    if c <= 0.0 {
        // c -> 0 limit: plain average over the history
        return Ok(shape.kernel_integral(origin, z, 0.0) / (q_local * span));
    }
    let integral = shape.kernel_integral(origin, z, c);
    Ok(c * integral / (q_local * -(-c * span).exp_m1()))
}

fn factor_at(
    case: &TestCase,
    shape: &FluxShape,
    profile: &QualityProfile,
    z: f64,
    quality: f64,
    config: &AxialCorrection,
) -> Result<f64, LutError> {
    if !config.enabled || case.profile.is_flat() {
        return Ok(1.0);
    }
    if config.saturated_only && quality <= 0.0 {
        return Ok(1.0);
    }
    let c = match config.constant {
        ShapeConstant::Tong => tong_c(quality, case.mass_flux),
        ShapeConstant::Constant(c) => c,
    };
    let origin = if config.from_boiling_onset { profile.boiling_length_start.unwrap_or(0.0).min(z) } else { 0.0 };
    axial_factor_for_shape(shape, origin, z, c)
}

/// Axial correction factor at `z` for the case at its measured power.
pub fn axial_correction_factor(case: &TestCase, z: f64, config: &AxialCorrection) -> Result<f64, LutError> {
    let sat = water().saturation_state(case.pressure)?;
    let profile = quality_profile_with(case, 1.0, &sat)?;
    let quality = profile.quality_at(z).ok_or(LutError::SingularProfile(z))?;
    let z = z.clamp(0.0, *profile.z.last().expect("profile has nodes"));
    factor_at(case, &FluxShape::from_case(case), &profile, z, quality, config)
}

/// A local-conditions CHF model usable in the critical-power search.
pub trait LocalChfModel {
    /// CHF [W/m2] at local conditions for the case's tube diameter.
    fn local_chf(&self, pressure: f64, mass_flux: f64, quality: f64, diameter: f64) -> Result<f64, LutError>;

    /// Whether the axial shape factor applies to this model.
    fn uses_axial_correction(&self) -> bool;

    /// Upper end of the model's quality range, if bounded.
    fn max_quality(&self) -> Option<f64> {
        None
    }
}

/// Table lookup with diameter correction.
#[derive(Debug, Clone)]
pub struct LutModel<'a> {
    pub table: &'a LutTable,
    pub clamp_quality: bool,
}

impl LocalChfModel for LutModel<'_> {
    fn local_chf(&self, pressure: f64, mass_flux: f64, quality: f64, diameter: f64) -> Result<f64, LutError> {
        let base = if self.clamp_quality {
            self.table.lookup_clamped_quality(pressure, mass_flux, quality)?
        } else {
            self.table.lookup_base(pressure, mass_flux, quality)?
        };
        diameter_correction(base, diameter)
    }

    fn uses_axial_correction(&self) -> bool {
        true
    }

    fn max_quality(&self) -> Option<f64> {
        (!self.clamp_quality).then(|| *self.table.quality_axis().last().unwrap())
    }
}

/// Biasi in local-conditions form.
#[derive(Debug, Clone, Copy, Default)]
pub struct BiasiModel;

impl LocalChfModel for BiasiModel {
    fn local_chf(&self, pressure: f64, mass_flux: f64, quality: f64, diameter: f64) -> Result<f64, LutError> {
        let p = biasi_chf(diameter, mass_flux, pressure, quality);
        p.chf().ok_or_else(|| LutError::NotApplicable("negative_raw_output".into()))
    }

    fn uses_axial_correction(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Scale total power until the minimum CHF ratio reaches one.
    HeatBalance,
    /// Evaluate the CHF ratio at the measured conditions only.
    DirectSubstitution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPowerConfig {
    pub axial: AxialCorrection,
    pub mode: SearchMode,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_bracket: (f64, f64),
}

impl Default for CriticalPowerConfig {
    fn default() -> Self {
        Self {
            axial: AxialCorrection::default(),
            mode: SearchMode::HeatBalance,
            tolerance: 1e-4,
            max_iterations: 100,
            initial_bracket: (0.5, 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPowerResult {
    /// Power multiplier at the critical condition.
    pub lambda: f64,
    /// W
    pub critical_power: f64,
    /// Average heat flux at the critical condition [W/m2].
    pub critical_heat_flux: f64,
    /// m
    pub chf_location: f64,
    pub min_chfr_at_measured_power: f64,
    /// `(z, CHFR)` at the critical condition.
    pub profile_of_chfr: Vec<(f64, f64)>,
    pub iterations: usize,
}

impl CriticalPowerResult {
    /// Local heat flux at the predicted location under critical power [W/m2].
    pub fn local_critical_flux(&self, case: &TestCase) -> Option<f64> {
        case.local_heat_flux(self.chf_location).map(|q| q * self.lambda)
    }
}

struct Probe {
    min_chfr: f64,
    argmin: usize,
    chfr: Vec<(f64, f64)>,
}

struct Search<'a, M: LocalChfModel + ?Sized> {
    case: &'a TestCase,
    model: &'a M,
    config: &'a CriticalPowerConfig,
    sat: crate::water::SaturationState,
    shape: FluxShape,
}

impl<M: LocalChfModel + ?Sized> Search<'_, M> {
    fn local_ratio(&self, profile: &QualityProfile, lambda: f64, z: f64, x: f64, w: f64) -> Result<f64, LutError> {
        if w <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let c = self.case;
        let chf = match self.model.local_chf(c.pressure, c.mass_flux, x, c.diameter) {
            Ok(v) => v,
            // past the end of the quality range the channel is in dryout
            Err(LutError::OutOfTable { quality, .. }) if self.model.max_quality().is_some_and(|m| quality > m) => 0.0,
            Err(e) => return Err(e),
        };
        let f = if self.model.uses_axial_correction() {
            factor_at(c, &self.shape, profile, z, x, &self.config.axial)?
        } else {
            1.0
        };
        Ok(chf / f / (lambda * c.heat_flux_avg * w))
    }

    fn probe(&self, lambda: f64) -> Result<Probe, LutError> {
        let profile = quality_profile_with(self.case, lambda, &self.sat)?;
        let w = &self.case.profile.wall_power;
        let mut chfr = Vec::with_capacity(w.len());
        let (mut min_chfr, mut argmin) = (f64::INFINITY, 0);
        for i in 0..w.len() {
            let r = self.local_ratio(&profile, lambda, profile.z[i], profile.x[i], w[i])?;
            chfr.push((profile.z[i], r));
            if r < min_chfr {
                min_chfr = r;
                argmin = i;
            }
        }
        Ok(Probe { min_chfr, argmin, chfr })
    }

    /// Minimum CHF ratio location, refined on a linear sub-mesh of the two
    /// intervals around the minimum node.
    fn refine_location(&self, lambda: f64, argmin: usize) -> Result<f64, LutError> {
        let profile = quality_profile_with(self.case, lambda, &self.sat)?;
        let z = &profile.z;
        let w = &self.case.profile.wall_power;
        let n = z.len();
        let (lo, hi) = (argmin.saturating_sub(1), (argmin + 1).min(n - 1));
        let mut best = (z[argmin], f64::INFINITY);
        const SUB: usize = 20;
        for seg in lo..hi {
            for k in 0..=SUB {
                let t = k as f64 / SUB as f64;
                let zz = z[seg] + t * (z[seg + 1] - z[seg]);
                let x = profile.x[seg] + t * (profile.x[seg + 1] - profile.x[seg]);
                let ww = w[seg] + t * (w[seg + 1] - w[seg]);
                let r = self.local_ratio(&profile, lambda, zz, x, ww)?;
                if r < best.1 {
                    best = (zz, r);
                }
            }
        }
        Ok(best.0)
    }
}

/// Critical power for a case: scale the power (shape fixed) until the minimum
/// CHF ratio along the tube reaches one.
pub fn predict_critical_power_with<M: LocalChfModel + ?Sized>(
    case: &TestCase,
    model: &M,
    config: &CriticalPowerConfig,
) -> Result<CriticalPowerResult, LutError> {
    let search = Search {
        case,
        model,
        config,
        sat: water().saturation_state(case.pressure)?,
        shape: FluxShape::from_case(case),
    };
    let at_measured = search.probe(1.0)?;
    let g = |p: &Probe| p.min_chfr - 1.0;

    let (lambda, iterations, probe) = match config.mode {
        SearchMode::DirectSubstitution => (at_measured.min_chfr, 0, search.probe(1.0)?),
        SearchMode::HeatBalance => {
            let (mut lo, mut hi) = config.initial_bracket;
            let mut p_lo = search.probe(lo)?;
            let mut expansions = 0;
            while g(&p_lo) <= 0.0 {
                hi = lo;
                lo *= 0.5;
                p_lo = search.probe(lo)?;
                expansions += 1;
                if expansions > 60 {
                    return Err(LutError::NoConvergence(expansions));
                }
            }
            let mut p_hi = search.probe(hi)?;
            while g(&p_hi) > 0.0 {
                lo = hi;
                hi *= 2.0;
                p_hi = search.probe(hi)?;
                expansions += 1;
                if expansions > 60 {
                    return Err(LutError::NoConvergence(expansions));
                }
            }
            let mut iterations = 0;
            let mut best = None;
            while iterations < config.max_iterations {
                iterations += 1;
                let mid = 0.5 * (lo + hi);
                let p = search.probe(mid)?;
                let gm = g(&p);
                if gm > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                let converged = (hi - lo) <= 1e-12 * mid;
                if converged || gm == 0.0 {
                    best = Some((mid, p));
                    break;
                }
            }
            match best {
                Some((mid, p)) if (p.min_chfr - 1.0).abs() <= config.tolerance => (mid, iterations, p),
                _ => return Err(LutError::NoConvergence(iterations)),
            }
        }
    };

    let location_lambda = if config.mode == SearchMode::HeatBalance { lambda } else { 1.0 };
    let chf_location = search.refine_location(location_lambda, probe.argmin)?;
    Ok(CriticalPowerResult {
        lambda,
        critical_power: lambda * case.power,
        critical_heat_flux: lambda * case.heat_flux_avg,
        chf_location,
        min_chfr_at_measured_power: at_measured.min_chfr,
        profile_of_chfr: probe.chfr,
        iterations,
    })
}

/// Critical power with the lookup table.
pub fn predict_critical_power(
    case: &TestCase,
    table: &LutTable,
    config: &CriticalPowerConfig,
    clamp_quality: bool,
) -> Result<CriticalPowerResult, LutError> {
    predict_critical_power_with(case, &LutModel { table, clamp_quality }, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> LutTable {
        LutTable::from_fn(
            vec![1.0e6, 5.0e6, 10.0e6],
            vec![500.0, 2000.0, 4000.0],
            vec![-0.2, 0.1, 0.5],
            |p, g, x| 1.0e6 + 0.1 * p + 200.0 * g - 1.0e6 * x,
        )
        .unwrap()
    }

    #[test]
    fn exact_at_nodes_and_affine() {
        let t = cube();
        for (ip, p) in t.pressure_axis().iter().enumerate() {
            for (ig, g) in t.mass_flux_axis().iter().enumerate() {
                for (ix, x) in t.quality_axis().iter().enumerate() {
                    assert_eq!(t.lookup_base(*p, *g, *x).unwrap(), t.value(ip, ig, ix));
                }
            }
        }
        let v = t.lookup_base(3.3e6, 1234.5, 0.0).unwrap();
        let exact = 1.0e6 + 0.1 * 3.3e6 + 200.0 * 1234.5;
        assert!((v - exact).abs() / exact < 1e-12);
    }

    #[test]
    fn out_of_table() {
        let t = cube();
        assert!(matches!(t.lookup_base(0.5e6, 1000.0, 0.0), Err(LutError::OutOfTable { .. })));
        assert!(matches!(t.lookup_base(5.0e6, 1000.0, 0.9), Err(LutError::OutOfTable { .. })));
        let clamped = t.lookup_clamped_quality(5.0e6, 1000.0, 0.9).unwrap();
        assert_eq!(clamped, t.lookup_base(5.0e6, 1000.0, 0.5).unwrap());
    }

    #[test]
    fn text_round_trip() {
        let t = cube();
        assert_eq!(LutTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn grid_errors() {
        let text = cube().to_text();
        let mut lines: Vec<&str> = text.lines().collect();
        let dup = lines[6];
        lines[7] = dup;
        assert!(matches!(LutTable::parse(&lines.join("\n")), Err(LutError::Grid(_))));
        let bad_axis = text.replace("axis quality - -0.2 0.1 0.5", "axis quality - -0.2 0.5 0.1");
        assert!(matches!(LutTable::parse(&bad_axis), Err(LutError::Grid(_))));
        let missing: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
        assert!(matches!(LutTable::parse(&missing.join("\n")), Err(LutError::Grid(_))));
        assert!(matches!(LutTable::parse("axis pressure Pa 1 2\nfoo"), Err(LutError::Format { .. })));
    }

    #[test]
    fn unit_scaled_table() {
        let text = "axis pressure kPa 100 200\naxis mass_flux kg/m2s 0 10\naxis quality - 0 1\nunits chf kW/m2\n\
                    100 0 1 2\n100 10 3 4\n200 0 5 6\n200 10 7 8\n";
        let t = LutTable::parse(text).unwrap();
        assert_eq!(t.pressure_axis(), &[1.0e5, 2.0e5]);
        assert_eq!(t.value(1, 1, 1), 8.0e3);
    }

    #[test]
    fn diameter_factor_closed_forms() {
        assert_eq!(diameter_correction(1.0, 0.008).unwrap(), 1.0);
        assert_eq!(diameter_correction(1.0, 0.032).unwrap(), 0.5);
        assert_eq!(diameter_correction(1.0, 0.002).unwrap(), 2.0);
        assert!(matches!(diameter_correction(1.0, 0.06), Err(LutError::DiameterOutOfRange(_))));
    }

    #[test]
    fn flat_shape_factor_is_one() {
        let shape = FluxShape { z: vec![0.0, 1.0, 2.0], q: vec![1.3; 3] };
        for c in [0.0, 1e-6, 0.5, 3.0, 40.0] {
            let f = axial_factor_for_shape(&shape, 0.0, 1.7, c).unwrap();
            assert!((f - 1.0).abs() < 1e-12, "c = {c}: {f}");
        }
    }

    #[test]
    fn zero_local_flux_is_singular() {
        let shape = FluxShape { z: vec![0.0, 1.0, 2.0], q: vec![1.0, 1.0, 0.0] };
        assert!(matches!(axial_factor_for_shape(&shape, 0.0, 2.0, 1.0), Err(LutError::SingularProfile(_))));
    }

    #[test]
    fn kernel_weight_series_matches_closed_form() {
        for k in [9e-4_f64, 1.1e-3] {
            let em = (-k).exp_m1();
            let exact = (-em / k, (k + em) / (k * k));
            let series = {
                let k2 = k * k;
                (1.0 - k / 2.0 + k2 / 6.0 - k2 * k / 24.0, 0.5 - k / 6.0 + k2 / 24.0 - k2 * k / 120.0)
            };
            assert!((exact.0 - series.0).abs() < 1e-12);
            assert!((exact.1 - series.1).abs() < 1e-9);
        }
    }
}
