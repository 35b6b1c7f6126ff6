//! CHF test-case data model and the benchmark XML file format.
//!
//! One XML document holds either uniform or non-uniform cases:
//!
//! ```xml
//! <Database>
//!   <TestCase>
//!     <TestID>1</TestID>
//!     <Diameter>0.01</Diameter>
//!     ...
//!     <WallPower>1 1</WallPower>
//!   </TestCase>
//! </Database>
//! ```
//!
//! Leaf names and units are fixed (see [`Element`]). List payloads are
//! whitespace-separated numbers. Uniform cases carry 2 profile nodes and one
//! (outlet) quality sample, non-uniform cases carry 40 of each plus
//! `CHFLocation`, `Shape` and `Continuous`.

mod validate;
mod xml;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::water::PropertyError;

pub use validate::{validate_case, Envelope, Range, Ranges, Rule, Severity, ValidationFinding};
pub use xml::{parse_dataset, parse_dataset_collect, parse_dataset_with, read_dataset, write_dataset, write_profile_fragment, ParseOptions};

/// Profile nodes carried by a non-uniform case.
pub const NON_UNIFORM_NODES: usize = 40;
/// Profile nodes carried by a uniform case (inlet, outlet).
pub const UNIFORM_NODES: usize = 2;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("XML syntax error at line {line}, column {column}: {message}")]
    Syntax { line: u32, column: u32, message: String },
    #[error("schema error{}: <{element}> {message}", case_suffix(*test_id))]
    Schema { test_id: Option<u32>, element: String, message: String },
    #[error("unit error{}: <{element}> has non-numeric payload {payload:?}", case_suffix(*test_id))]
    Unit { test_id: Option<u32>, element: String, payload: String },
    #[error("invariant violated in test {test_id}: {rule}: {message}")]
    Invariant { test_id: u32, rule: Rule, message: String },
    #[error("test {test_id}: cannot derive inlet state: {source}")]
    Property { test_id: u32, source: PropertyError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn case_suffix(id: Option<u32>) -> String {
    id.map(|i| format!(" in test {i}")).unwrap_or_default()
}

/// Table 2 leaf elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    TestId,
    Diameter,
    Perimeter,
    Area,
    Length,
    Pressure,
    Power,
    MassFlux,
    MassFlow,
    InletTemperature,
    InletEnthalpy,
    HeatFlux,
    Fluid,
    Source,
    WallPower,
    WallMesh,
    EquilibriumQuality,
    QualityPosition,
    ChfLocation,
    Shape,
    Continuous,
}

impl Element {
    pub const ALL: [Element; 21] = [
        Element::TestId,
        Element::Diameter,
        Element::Perimeter,
        Element::Area,
        Element::Length,
        Element::Pressure,
        Element::Power,
        Element::MassFlux,
        Element::MassFlow,
        Element::InletTemperature,
        Element::InletEnthalpy,
        Element::HeatFlux,
        Element::Fluid,
        Element::Source,
        Element::WallPower,
        Element::WallMesh,
        Element::EquilibriumQuality,
        Element::QualityPosition,
        Element::ChfLocation,
        Element::Shape,
        Element::Continuous,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Element::TestId => "TestID",
            Element::Diameter => "Diameter",
            Element::Perimeter => "Perimeter",
            Element::Area => "Area",
            Element::Length => "Length",
            Element::Pressure => "Pressure",
            Element::Power => "Power",
            Element::MassFlux => "MassFlux",
            Element::MassFlow => "MassFlow",
            Element::InletTemperature => "InletTemperature",
            Element::InletEnthalpy => "InletEnthalpy",
            Element::HeatFlux => "HeatFlux",
            Element::Fluid => "Fluid",
            Element::Source => "Source",
            Element::WallPower => "WallPower",
            Element::WallMesh => "WallMesh",
            Element::EquilibriumQuality => "EquilibriumQuality",
            Element::QualityPosition => "QualityPosition",
            Element::ChfLocation => "CHFLocation",
            Element::Shape => "Shape",
            Element::Continuous => "Continuous",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.tag() == tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heating {
    Uniform,
    NonUniform,
}

impl Heating {
    pub fn as_str(self) -> &'static str {
        match self {
            Heating::Uniform => "uniform",
            Heating::NonUniform => "non-uniform",
        }
    }
}

impl fmt::Display for Heating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fluid {
    Water,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Spike,
    MiddlePeaked,
    Inlet,
    Outlet,
    Uniform,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Spike => "spike",
            Shape::MiddlePeaked => "middle-peaked",
            Shape::Inlet => "inlet",
            Shape::Outlet => "outlet",
            Shape::Uniform => "uniform",
        }
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == '_' || c == ' ' { '-' } else { c })
            .collect();
        match norm.as_str() {
            "spike" => Ok(Shape::Spike),
            "middle-peaked" | "middle" | "middle-peak" => Ok(Shape::MiddlePeaked),
            "inlet" | "inlet-peaked" => Ok(Shape::Inlet),
            "outlet" | "outlet-peaked" => Ok(Shape::Outlet),
            "uniform" => Ok(Shape::Uniform),
            _ => Err(format!("unknown power shape {s:?}")),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalized axial power on the case mesh.
///
/// `wall_mesh[i]` (i >= 1) is the spacing between node `i - 1` and node `i`;
/// the inlet entry has no upstream neighbour and repeats the first spacing.
/// Node coordinates are therefore `z[0] = 0`, `z[i] = z[i-1] + wall_mesh[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialProfile {
    pub wall_power: Vec<f64>,
    pub wall_mesh: Vec<f64>,
    pub shape: Shape,
    pub continuous: bool,
}

impl AxialProfile {
    pub fn uniform(length: f64) -> Self {
        Self {
            wall_power: vec![1.0; UNIFORM_NODES],
            wall_mesh: vec![length; UNIFORM_NODES],
            shape: Shape::Uniform,
            continuous: true,
        }
    }

    /// Profile on `n` equally spaced nodes over `[0, length]`.
    pub fn on_uniform_mesh(wall_power: Vec<f64>, length: f64, shape: Shape, continuous: bool) -> Self {
        let n = wall_power.len();
        let dz = length / (n.max(2) - 1) as f64;
        Self { wall_power, wall_mesh: vec![dz; n], shape, continuous }
    }

    pub fn node_count(&self) -> usize {
        self.wall_power.len()
    }

    pub fn node_positions(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.wall_mesh.len());
        let mut acc = 0.0;
        for (i, dz) in self.wall_mesh.iter().enumerate() {
            if i > 0 {
                acc += dz;
            }
            z.push(acc);
        }
        z
    }

    /// Heated length reconstructed from the mesh spacings.
    pub fn mesh_length(&self) -> f64 {
        self.wall_mesh.iter().skip(1).sum()
    }

    /// Trapezoid integral of the normalized power over the mesh [m].
    pub fn integral(&self) -> f64 {
        crate::interp::trapezoid(&self.node_positions(), &self.wall_power)
    }

    /// Mesh-weighted mean of the normalized power.
    pub fn mean(&self) -> f64 {
        self.integral() / self.mesh_length()
    }

    pub fn is_flat(&self) -> bool {
        self.wall_power.windows(2).all(|w| w[0] == w[1])
    }

    /// Normalized power at `z`, linear between nodes.
    pub fn power_at(&self, z: f64) -> Option<f64> {
        crate::interp::linear_within(&self.node_positions(), &self.wall_power, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualitySample {
    /// m
    pub z: f64,
    pub x: f64,
}

/// Which inlet quantity the parser had to derive from the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivedInlet {
    Enthalpy,
    Temperature,
}

/// One CHF experiment. SI units throughout, except `inlet_temperature` (degC).
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub test_id: u32,
    pub diameter: f64,
    pub perimeter: f64,
    pub area: f64,
    pub length: f64,
    pub pressure: f64,
    pub power: f64,
    pub mass_flux: f64,
    pub mass_flow: f64,
    pub inlet_temperature: f64,
    pub inlet_enthalpy: f64,
    pub heat_flux_avg: f64,
    pub fluid: Fluid,
    pub source: String,
    pub profile: AxialProfile,
    pub quality_samples: Vec<QualitySample>,
    pub chf_location: Option<f64>,
    pub heating: Heating,
    pub derived: Option<DerivedInlet>,
}

impl TestCase {
    /// Round-tube uniform case with all bookkeeping fields consistent.
    /// Quality samples are left empty.
    pub fn uniform_tube(
        test_id: u32,
        diameter: f64,
        length: f64,
        pressure: f64,
        mass_flux: f64,
        heat_flux_avg: f64,
        inlet_enthalpy: f64,
    ) -> Self {
        let area = std::f64::consts::PI * diameter * diameter / 4.0;
        let perimeter = std::f64::consts::PI * diameter;
        let inlet_temperature = crate::water::water()
            .liquid_temperature(pressure, inlet_enthalpy)
            .unwrap_or(f64::NAN);
        Self {
            test_id,
            diameter,
            perimeter,
            area,
            length,
            pressure,
            power: heat_flux_avg * perimeter * length,
            mass_flux,
            mass_flow: mass_flux * area,
            inlet_temperature,
            inlet_enthalpy,
            heat_flux_avg,
            fluid: Fluid::Water,
            source: String::new(),
            profile: AxialProfile::uniform(length),
            quality_samples: Vec::new(),
            chf_location: None,
            heating: Heating::Uniform,
            derived: None,
        }
    }

    /// Same tube with a non-uniform profile; `power` follows the profile integral.
    pub fn with_profile(mut self, profile: AxialProfile) -> Self {
        self.heating = if profile.node_count() == UNIFORM_NODES && profile.is_flat() {
            Heating::Uniform
        } else {
            Heating::NonUniform
        };
        self.power = self.heat_flux_avg * self.perimeter * profile.integral();
        self.profile = profile;
        self
    }

    /// Measured local heat flux at `z` [W/m2].
    pub fn local_heat_flux(&self, z: f64) -> Option<f64> {
        self.profile.power_at(z).map(|p| p * self.heat_flux_avg)
    }

    /// Inlet subcooling `h_f - h_in` [J/kg]; negative for two-phase inlets.
    pub fn inlet_subcooling(&self) -> Result<f64, PropertyError> {
        let sat = crate::water::saturation_state(self.pressure)?;
        Ok(sat.h_f - self.inlet_enthalpy)
    }

    pub fn inlet_quality(&self) -> Result<f64, PropertyError> {
        crate::water::equilibrium_quality(self.inlet_enthalpy, self.pressure)
    }

    /// Stored outlet (last) equilibrium quality, if any.
    pub fn stored_outlet_quality(&self) -> Option<f64> {
        self.quality_samples.last().map(|s| s.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_tags_round_trip() {
        for e in Element::ALL {
            assert_eq!(Element::from_tag(e.tag()), Some(e));
        }
        assert_eq!(Element::from_tag("Diam"), None);
    }

    #[test]
    fn mesh_convention() {
        let p = AxialProfile::on_uniform_mesh(vec![1.0; 5], 2.0, Shape::Uniform, true);
        assert_eq!(p.node_positions(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(p.mesh_length(), 2.0);
        assert!((p.mean() - 1.0).abs() < 1e-15);
        let u = AxialProfile::uniform(3.0);
        assert_eq!(u.node_positions(), vec![0.0, 3.0]);
    }

    #[test]
    fn shape_parsing() {
        assert_eq!("Middle-Peaked".parse::<Shape>(), Ok(Shape::MiddlePeaked));
        assert_eq!("spike".parse::<Shape>(), Ok(Shape::Spike));
        assert!("zigzag".parse::<Shape>().is_err());
    }
}
