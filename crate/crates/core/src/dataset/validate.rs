//! Case validation against the collected-data envelope and the bookkeeping
//! identities between Table 2 fields.
//!
//! Range rules only warn: data outside the envelope is suspicious, not wrong.
//! Consistency and profile rules are errors.

use std::f64::consts::PI;
use std::fmt;

use super::{DerivedInlet, Heating, TestCase, NON_UNIFORM_NODES, UNIFORM_NODES};
use crate::water::water;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        }
    }
}

/// Closed set of validation rule identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    RangePressure,
    RangeMassFlux,
    RangeInletQuality,
    RangeDiameter,
    RangeLength,
    ConsistencyPositive,
    ConsistencyArea,
    ConsistencyMassFlow,
    ConsistencyPower,
    ConsistencyInletState,
    ProfileCardinality,
    ProfileNegativePower,
    ProfileMeshSpacing,
    ProfileMeshLength,
    ProfileNormalization,
    QualityPositions,
    ChfLocationBounds,
    ChfLocationMissing,
    DerivedInletEnthalpy,
    DerivedInletTemperature,
    PropertyUnavailable,
}

impl Rule {
    pub const ALL: [Rule; 21] = [
        Rule::RangePressure,
        Rule::RangeMassFlux,
        Rule::RangeInletQuality,
        Rule::RangeDiameter,
        Rule::RangeLength,
        Rule::ConsistencyPositive,
        Rule::ConsistencyArea,
        Rule::ConsistencyMassFlow,
        Rule::ConsistencyPower,
        Rule::ConsistencyInletState,
        Rule::ProfileCardinality,
        Rule::ProfileNegativePower,
        Rule::ProfileMeshSpacing,
        Rule::ProfileMeshLength,
        Rule::ProfileNormalization,
        Rule::QualityPositions,
        Rule::ChfLocationBounds,
        Rule::ChfLocationMissing,
        Rule::DerivedInletEnthalpy,
        Rule::DerivedInletTemperature,
        Rule::PropertyUnavailable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::RangePressure => "range.pressure",
            Rule::RangeMassFlux => "range.mass_flux",
            Rule::RangeInletQuality => "range.inlet_quality",
            Rule::RangeDiameter => "range.diameter",
            Rule::RangeLength => "range.length",
            Rule::ConsistencyPositive => "consistency.positive",
            Rule::ConsistencyArea => "consistency.area",
            Rule::ConsistencyMassFlow => "consistency.mass_flow",
            Rule::ConsistencyPower => "consistency.power",
            Rule::ConsistencyInletState => "consistency.inlet_state",
            Rule::ProfileCardinality => "profile.cardinality",
            Rule::ProfileNegativePower => "profile.negative_power",
            Rule::ProfileMeshSpacing => "profile.mesh_spacing",
            Rule::ProfileMeshLength => "profile.mesh_length",
            Rule::ProfileNormalization => "profile.normalization",
            Rule::QualityPositions => "profile.quality_positions",
            Rule::ChfLocationBounds => "chf_location.bounds",
            Rule::ChfLocationMissing => "chf_location.missing",
            Rule::DerivedInletEnthalpy => "derived.inlet_enthalpy",
            Rule::DerivedInletTemperature => "derived.inlet_temperature",
            Rule::PropertyUnavailable => "property.unavailable",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Rule::RangePressure
            | Rule::RangeMassFlux
            | Rule::RangeInletQuality
            | Rule::RangeDiameter
            | Rule::RangeLength
            | Rule::ConsistencyInletState
            | Rule::ChfLocationMissing
            | Rule::DerivedInletEnthalpy
            | Rule::DerivedInletTemperature
            | Rule::PropertyUnavailable => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFinding {
    pub test_id: u32,
    pub severity: Severity,
    pub rule: Rule,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    /// Inclusive, with a relative slack for values stored at rounded bounds.
    pub fn contains(&self, v: f64) -> bool {
        let slack = 1e-9 * self.min.abs().max(self.max.abs());
        v >= self.min - slack && v <= self.max + slack
    }
}

/// Envelope for one heating subset. Pressure in Pa, diameter and length in m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranges {
    pub pressure: Range,
    pub mass_flux: Range,
    pub inlet_quality: Range,
    pub diameter: Range,
    pub length: Range,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub uniform: Ranges,
    pub non_uniform: Ranges,
}

impl Default for Envelope {
    /// Ranges of the collected data set.
    fn default() -> Self {
        let diameter = Range::new(5.44e-3, 28.3e-3);
        let length = Range::new(0.061, 7.0);
        Self {
            uniform: Ranges {
                pressure: Range::new(0.43e6, 18.0e6),
                mass_flux: Range::new(335.0, 9561.9),
                inlet_quality: Range::new(-1.461, 0.890),
                diameter,
                length,
            },
            non_uniform: Ranges {
                pressure: Range::new(0.43e6, 18.0e6),
                mass_flux: Range::new(328.2, 8916.0),
                inlet_quality: Range::new(-1.352, 0.804),
                diameter,
                length,
            },
        }
    }
}

impl Envelope {
    pub fn for_heating(&self, heating: Heating) -> &Ranges {
        match heating {
            Heating::Uniform => &self.uniform,
            Heating::NonUniform => &self.non_uniform,
        }
    }
}

pub const AREA_TOLERANCE: f64 = 0.01;
pub const MASS_FLOW_TOLERANCE: f64 = 0.01;
pub const POWER_TOLERANCE: f64 = 0.02;
pub const MESH_LENGTH_TOLERANCE: f64 = 0.001;
pub const NORMALIZATION_TOLERANCE: f64 = 0.02;
pub const INLET_STATE_TOLERANCE: f64 = 0.01;

struct Collector {
    test_id: u32,
    findings: Vec<ValidationFinding>,
}

impl Collector {
    fn push(&mut self, rule: Rule, message: String) {
        self.findings.push(ValidationFinding { test_id: self.test_id, severity: rule.severity(), rule, message });
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Returns every violated rule; an empty list means the case is clean.
pub fn validate_case(case: &TestCase, envelope: &Envelope) -> Vec<ValidationFinding> {
    let mut out = Collector { test_id: case.test_id, findings: Vec::new() };
    let ranges = envelope.for_heating(case.heating);

    let positive = [
        ("diameter", case.diameter),
        ("perimeter", case.perimeter),
        ("area", case.area),
        ("length", case.length),
        ("power", case.power),
        ("mass_flux", case.mass_flux),
        ("mass_flow", case.mass_flow),
        ("heat_flux", case.heat_flux_avg),
        ("pressure", case.pressure),
    ];
    let mut all_positive = true;
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            all_positive = false;
            out.push(Rule::ConsistencyPositive, format!("{name} must be positive and finite, got {v}"));
        }
    }

    if all_positive {
        let circle = PI * case.diameter * case.diameter / 4.0;
        if rel(circle, case.area) > AREA_TOLERANCE {
            out.push(Rule::ConsistencyArea, format!("area {} differs from pi*D^2/4 = {circle}", case.area));
        }
        let flow = case.mass_flux * case.area;
        if rel(flow, case.mass_flow) > MASS_FLOW_TOLERANCE {
            out.push(Rule::ConsistencyMassFlow, format!("mass flow {} differs from G*A = {flow}", case.mass_flow));
        }
        let power = case.heat_flux_avg * case.perimeter * case.length;
        if rel(power, case.power) > POWER_TOLERANCE {
            out.push(Rule::ConsistencyPower, format!("power {} differs from q''*P_h*L = {power}", case.power));
        }
    }

    check_profile(case, &mut out);

    for (rule, name, range, v) in [
        (Rule::RangePressure, "pressure", ranges.pressure, case.pressure),
        (Rule::RangeMassFlux, "mass flux", ranges.mass_flux, case.mass_flux),
        (Rule::RangeDiameter, "diameter", ranges.diameter, case.diameter),
        (Rule::RangeLength, "heated length", ranges.length, case.length),
    ] {
        if !range.contains(v) {
            out.push(rule, format!("{name} {v} outside [{}, {}]", range.min, range.max));
        }
    }

    match water().saturation_state(case.pressure) {
        Ok(sat) => {
            let x_in = sat.quality(case.inlet_enthalpy);
            if !ranges.inlet_quality.contains(x_in) {
                out.push(
                    Rule::RangeInletQuality,
                    format!("inlet quality {x_in:.4} outside [{}, {}]", ranges.inlet_quality.min, ranges.inlet_quality.max),
                );
            }
            if case.derived.is_none() && case.inlet_enthalpy < sat.h_f {
                if let Ok(h) = water().subcooled_liquid_enthalpy(case.pressure, case.inlet_temperature) {
                    // compare on the subcooling scale; absolute enthalpy hides errors
                    let sub_t = sat.h_f - h;
                    let sub_h = sat.h_f - case.inlet_enthalpy;
                    if (sub_t - sub_h).abs() > INLET_STATE_TOLERANCE * sub_h.max(0.01 * sat.h_fg) {
                        out.push(
                            Rule::ConsistencyInletState,
                            format!(
                                "inlet temperature {} degC implies h = {h:.1} J/kg, stored {}",
                                case.inlet_temperature, case.inlet_enthalpy
                            ),
                        );
                    }
                }
            }
        }
        Err(e) => out.push(Rule::PropertyUnavailable, format!("inlet quality not checked: {e}")),
    }

    match case.derived {
        Some(DerivedInlet::Enthalpy) => {
            out.push(Rule::DerivedInletEnthalpy, "inlet enthalpy derived from inlet temperature".into())
        }
        Some(DerivedInlet::Temperature) => {
            out.push(Rule::DerivedInletTemperature, "inlet temperature derived from inlet enthalpy".into())
        }
        None => {}
    }

    if case.heating == Heating::NonUniform {
        match case.chf_location {
            Some(z) if !(0.0..=case.length * (1.0 + 1e-9)).contains(&z) => {
                out.push(Rule::ChfLocationBounds, format!("CHF location {z} outside [0, {}]", case.length))
            }
            Some(_) => {}
            None => out.push(Rule::ChfLocationMissing, "non-uniform case without CHF location".into()),
        }
    }

    out.findings
}

fn check_profile(case: &TestCase, out: &mut Collector) {
    let p = &case.profile;
    let (nodes, samples) = match case.heating {
        Heating::Uniform => (UNIFORM_NODES, 1),
        Heating::NonUniform => (NON_UNIFORM_NODES, NON_UNIFORM_NODES),
    };
    if p.wall_power.len() != nodes || p.wall_mesh.len() != nodes || case.quality_samples.len() != samples {
        out.push(
            Rule::ProfileCardinality,
            format!(
                "{} case needs {nodes} power/mesh values and {samples} quality samples, found {}/{}/{}",
                case.heating,
                p.wall_power.len(),
                p.wall_mesh.len(),
                case.quality_samples.len()
            ),
        );
    }
    if p.wall_power.len() != p.wall_mesh.len() || p.wall_power.len() < 2 {
        return;
    }
    if let Some(v) = p.wall_power.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        out.push(Rule::ProfileNegativePower, format!("normalized power {v} is negative or non-finite"));
    }
    if let Some(v) = p.wall_mesh.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        out.push(Rule::ProfileMeshSpacing, format!("mesh spacing {v} must be positive"));
        return;
    }
    let mesh_length = p.mesh_length();
    if case.length > 0.0 && rel(mesh_length, case.length) > MESH_LENGTH_TOLERANCE {
        out.push(
            Rule::ProfileMeshLength,
            format!("mesh spans {mesh_length} m, heated length is {} m", case.length),
        );
    }
    let mean = p.mean();
    if (mean - 1.0).abs() > NORMALIZATION_TOLERANCE {
        out.push(Rule::ProfileNormalization, format!("mesh-weighted mean of normalized power is {mean:.4}"));
    }
    let z_max = case.length * (1.0 + MESH_LENGTH_TOLERANCE);
    if let Some(s) = case.quality_samples.iter().find(|s| !(s.z >= 0.0 && s.z <= z_max)) {
        out.push(Rule::QualityPositions, format!("quality position {} outside the heated length", s.z));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{QualitySample, TestCase};

    fn clean_uniform() -> TestCase {
        let sat = water().saturation_state(0.43e6).unwrap();
        let mut c = TestCase::uniform_tube(1, 0.01, 1.0, 0.43e6, 335.0, 1.0e6, sat.h_f - 100.0e3);
        c.quality_samples = vec![QualitySample { z: 1.0, x: 0.3 }];
        c
    }

    fn rules(c: &TestCase) -> Vec<Rule> {
        validate_case(c, &Envelope::default()).into_iter().map(|f| f.rule).collect()
    }

    #[test]
    fn envelope_lower_bounds_are_clean() {
        assert_eq!(rules(&clean_uniform()), vec![]);
    }

    #[test]
    fn mass_flux_above_envelope_warns() {
        let mut c = clean_uniform();
        c.mass_flux = 12000.0;
        c.mass_flow = c.mass_flux * c.area;
        let f = validate_case(&c, &Envelope::default());
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].rule.as_str(), "range.mass_flux");
        assert_eq!(f[0].severity, Severity::Warning);
    }

    #[test]
    fn doubled_area_is_error() {
        let mut c = clean_uniform();
        c.area *= 2.0;
        c.mass_flow = c.mass_flux * c.area;
        let f = validate_case(&c, &Envelope::default());
        assert!(f.iter().any(|f| f.rule == Rule::ConsistencyArea && f.severity == Severity::Error));
    }

    #[test]
    fn power_gate_is_two_percent() {
        let mut c = clean_uniform();
        c.power *= 1.019;
        assert!(!rules(&c).contains(&Rule::ConsistencyPower));
        c.power *= 1.01;
        assert!(rules(&c).contains(&Rule::ConsistencyPower));
    }

    #[test]
    fn rule_ids_are_unique() {
        let mut ids: Vec<_> = Rule::ALL.iter().map(|r| r.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), Rule::ALL.len());
    }

    #[test]
    fn chf_location_outside_tube() {
        let mut c = clean_uniform();
        c.heating = Heating::NonUniform;
        c.chf_location = Some(1.5);
        assert!(rules(&c).contains(&Rule::ChfLocationBounds));
        assert!(rules(&c).contains(&Rule::ProfileCardinality));
    }

    #[test]
    fn negative_dimension() {
        let mut c = clean_uniform();
        c.diameter = -0.01;
        assert!(rules(&c).contains(&Rule::ConsistencyPositive));
    }
}
