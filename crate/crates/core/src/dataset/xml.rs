use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{
    validate_case, AxialProfile, DatasetError, DerivedInlet, Element, Envelope, Fluid, Heating, QualitySample,
    Severity, Shape, TestCase, NON_UNIFORM_NODES, UNIFORM_NODES,
};
use crate::water::water;

pub const ROOT_TAG: &str = "Database";
pub const CASE_TAG: &str = "TestCase";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Accept any root/grouping element names: every element with a `<TestID>`
    /// child is a case, and unknown leaves are ignored.
    pub permissive: bool,
}

pub fn parse_dataset(xml: &str) -> Result<Vec<TestCase>, DatasetError> {
    parse_dataset_with(xml, &ParseOptions::default())
}

pub fn read_dataset(path: impl AsRef<Path>, options: &ParseOptions) -> Result<Vec<TestCase>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset_with(&text, options)
}

pub fn parse_dataset_with(xml: &str, options: &ParseOptions) -> Result<Vec<TestCase>, DatasetError> {
    let doc = parse_document(xml)?;
    case_nodes(&doc, options)?.into_iter().map(|n| parse_case(n, options)).collect()
}

/// Parses each case independently: per-case failures are collected rather
/// than ending the parse. Document-level problems are still errors.
pub fn parse_dataset_collect(xml: &str, options: &ParseOptions) -> Result<(Vec<TestCase>, Vec<DatasetError>), DatasetError> {
    let doc = parse_document(xml)?;
    let (mut cases, mut errors) = (Vec::new(), Vec::new());
    for node in case_nodes(&doc, options)? {
        match parse_case(node, options) {
            Ok(c) => cases.push(c),
            Err(e) => errors.push(e),
        }
    }
    Ok((cases, errors))
}

fn parse_document(xml: &str) -> Result<roxmltree::Document<'_>, DatasetError> {
    roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        DatasetError::Syntax { line: pos.row, column: pos.col, message: e.to_string() }
    })
}

fn case_nodes<'a, 'i>(doc: &'a roxmltree::Document<'i>, options: &ParseOptions) -> Result<Vec<roxmltree::Node<'a, 'i>>, DatasetError> {
    let root = doc.root_element();
    if options.permissive {
        return Ok(root
            .descendants()
            .filter(|n| n.is_element() && n.children().any(|c| c.is_element() && c.has_tag_name("TestID")))
            .collect());
    }
    if !root.has_tag_name(ROOT_TAG) {
        return Err(schema(None, root.tag_name().name(), format!("root element must be <{ROOT_TAG}>")));
    }
    let mut nodes = Vec::new();
    for child in root.children().filter(|c| c.is_element()) {
        if !child.has_tag_name(CASE_TAG) {
            return Err(schema(None, child.tag_name().name(), format!("unexpected element inside <{ROOT_TAG}>")));
        }
        nodes.push(child);
    }
    Ok(nodes)
}

fn schema(test_id: Option<u32>, element: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::Schema { test_id, element: element.to_string(), message: message.into() }
}

struct Fields<'a> {
    test_id: Option<u32>,
    map: BTreeMap<Element, &'a str>,
}

impl<'a> Fields<'a> {
    fn text(&self, e: Element) -> Result<&'a str, DatasetError> {
        self.map
            .get(&e)
            .copied()
            .ok_or_else(|| schema(self.test_id, e.tag(), "mandatory element missing"))
    }

    fn number(&self, e: Element) -> Result<f64, DatasetError> {
        let raw = self.text(e)?;
        parse_number(raw.trim()).ok_or_else(|| DatasetError::Unit {
            test_id: self.test_id,
            element: e.tag().to_string(),
            payload: raw.trim().to_string(),
        })
    }

    fn optional_number(&self, e: Element) -> Result<Option<f64>, DatasetError> {
        if self.map.contains_key(&e) {
            self.number(e).map(Some)
        } else {
            Ok(None)
        }
    }

    fn list(&self, e: Element) -> Result<Vec<f64>, DatasetError> {
        let raw = self.text(e)?;
        raw.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                parse_number(s).ok_or_else(|| DatasetError::Unit {
                    test_id: self.test_id,
                    element: e.tag().to_string(),
                    payload: s.to_string(),
                })
            })
            .collect()
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_case(node: roxmltree::Node, options: &ParseOptions) -> Result<TestCase, DatasetError> {
    let mut map = BTreeMap::new();
    let id_text = node
        .children()
        .find(|c| c.is_element() && c.has_tag_name("TestID"))
        .and_then(|c| c.text())
        .map(str::trim);
    let test_id = id_text.and_then(|t| t.parse::<u32>().ok());
    for child in node.children().filter(|c| c.is_element()) {
        let tag = child.tag_name().name();
        let Some(e) = Element::from_tag(tag) else {
            if options.permissive {
                continue;
            }
            return Err(schema(test_id, tag, "unknown element"));
        };
        if child.children().any(|c| c.is_element()) {
            return Err(schema(test_id, tag, "leaf element must not contain child elements"));
        }
        if map.insert(e, child.text().unwrap_or("")).is_some() {
            return Err(schema(test_id, tag, "element appears more than once"));
        }
    }
    let fields = Fields { test_id, map };

    let raw_id = fields.text(Element::TestId)?.trim();
    let test_id = raw_id.parse::<u32>().ok().filter(|&v| v > 0).ok_or_else(|| DatasetError::Unit {
        test_id: None,
        element: "TestID".into(),
        payload: raw_id.to_string(),
    })?;

    let fluid_text = fields.text(Element::Fluid)?.trim();
    if !fluid_text.eq_ignore_ascii_case("water") {
        return Err(schema(Some(test_id), "Fluid", format!("unsupported coolant {fluid_text:?}")));
    }

    let wall_power = fields.list(Element::WallPower)?;
    let wall_mesh = fields.list(Element::WallMesh)?;
    let heating = match wall_power.len() {
        UNIFORM_NODES => Heating::Uniform,
        NON_UNIFORM_NODES => Heating::NonUniform,
        n => {
            return Err(schema(
                Some(test_id),
                "WallPower",
                format!("expected {UNIFORM_NODES} (uniform) or {NON_UNIFORM_NODES} (non-uniform) values, found {n}"),
            ))
        }
    };
    let expected_samples = match heating {
        Heating::Uniform => 1,
        Heating::NonUniform => NON_UNIFORM_NODES,
    };
    if wall_mesh.len() != wall_power.len() {
        return Err(schema(
            Some(test_id),
            "WallMesh",
            format!("expected {} values, found {}", wall_power.len(), wall_mesh.len()),
        ));
    }
    let qualities = fields.list(Element::EquilibriumQuality)?;
    let positions = fields.list(Element::QualityPosition)?;
    for (e, v) in [(Element::EquilibriumQuality, &qualities), (Element::QualityPosition, &positions)] {
        if v.len() != expected_samples {
            return Err(schema(
                Some(test_id),
                e.tag(),
                format!("expected {expected_samples} values for a {heating} case, found {}", v.len()),
            ));
        }
    }

    let (shape, continuous) = match heating {
        Heating::NonUniform => {
            let shape = fields
                .text(Element::Shape)?
                .parse::<Shape>()
                .map_err(|m| schema(Some(test_id), "Shape", m))?;
            let continuous = parse_yes_no(fields.text(Element::Continuous)?)
                .ok_or_else(|| schema(Some(test_id), "Continuous", "expected \"yes\" or \"no\""))?;
            (shape, continuous)
        }
        Heating::Uniform => {
            let shape = match fields.map.get(&Element::Shape) {
                Some(s) => s.parse::<Shape>().map_err(|m| schema(Some(test_id), "Shape", m))?,
                None => Shape::Uniform,
            };
            let continuous = match fields.map.get(&Element::Continuous) {
                Some(s) => parse_yes_no(s)
                    .ok_or_else(|| schema(Some(test_id), "Continuous", "expected \"yes\" or \"no\""))?,
                None => true,
            };
            (shape, continuous)
        }
    };

    let pressure = fields.number(Element::Pressure)?;
    let inlet_temperature = fields.optional_number(Element::InletTemperature)?;
    let inlet_enthalpy = fields.optional_number(Element::InletEnthalpy)?;
    let (inlet_temperature, inlet_enthalpy, derived) = match (inlet_temperature, inlet_enthalpy) {
        (Some(t), Some(h)) => (t, h, None),
        (Some(t), None) => {
            let h = inlet_enthalpy_from_temperature(pressure, t)
                .map_err(|source| DatasetError::Property { test_id, source })?;
            (t, h, Some(DerivedInlet::Enthalpy))
        }
        (None, Some(h)) => {
            let t = water()
                .liquid_temperature(pressure, h)
                .map_err(|source| DatasetError::Property { test_id, source })?;
            (t, h, Some(DerivedInlet::Temperature))
        }
        (None, None) => {
            return Err(schema(
                Some(test_id),
                "InletTemperature",
                "either <InletTemperature> or <InletEnthalpy> is required",
            ))
        }
    };

    Ok(TestCase {
        test_id,
        diameter: fields.number(Element::Diameter)?,
        perimeter: fields.number(Element::Perimeter)?,
        area: fields.number(Element::Area)?,
        length: fields.number(Element::Length)?,
        pressure,
        power: fields.number(Element::Power)?,
        mass_flux: fields.number(Element::MassFlux)?,
        mass_flow: fields.number(Element::MassFlow)?,
        inlet_temperature,
        inlet_enthalpy,
        heat_flux_avg: fields.number(Element::HeatFlux)?,
        fluid: Fluid::Water,
        source: fields.text(Element::Source)?.trim().to_string(),
        profile: AxialProfile { wall_power, wall_mesh, shape, continuous },
        quality_samples: positions.into_iter().zip(qualities).map(|(z, x)| QualitySample { z, x }).collect(),
        chf_location: fields.optional_number(Element::ChfLocation)?,
        heating,
        derived,
    })
}

/// Saturated liquid enthalpy is used at or above `t_sat`.
fn inlet_enthalpy_from_temperature(pressure: f64, t: f64) -> Result<f64, crate::water::PropertyError> {
    let sat = water().saturation_state(pressure)?;
    if t >= sat.t_sat {
        Ok(sat.h_f)
    } else {
        water().subcooled_liquid_enthalpy(pressure, t)
    }
}

fn parse_yes_no(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Serializes cases; refuses cases with error-severity validation findings.
pub fn write_dataset(cases: &[TestCase]) -> Result<String, DatasetError> {
    let envelope = Envelope::default();
    for case in cases {
        if let Some(f) = validate_case(case, &envelope).into_iter().find(|f| f.severity == Severity::Error) {
            return Err(DatasetError::Invariant { test_id: case.test_id, rule: f.rule, message: f.message });
        }
    }
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<{ROOT_TAG}>");
    for case in cases {
        write_case(&mut out, case);
    }
    let _ = writeln!(out, "</{ROOT_TAG}>");
    Ok(out)
}

fn write_case(out: &mut String, c: &TestCase) {
    let _ = writeln!(out, "  <{CASE_TAG}>");
    leaf(out, Element::TestId, &c.test_id.to_string());
    for (e, v) in [
        (Element::Diameter, c.diameter),
        (Element::Perimeter, c.perimeter),
        (Element::Area, c.area),
        (Element::Length, c.length),
        (Element::Pressure, c.pressure),
        (Element::Power, c.power),
        (Element::MassFlux, c.mass_flux),
        (Element::MassFlow, c.mass_flow),
        (Element::InletTemperature, c.inlet_temperature),
        (Element::InletEnthalpy, c.inlet_enthalpy),
        (Element::HeatFlux, c.heat_flux_avg),
    ] {
        leaf(out, e, &num(v));
    }
    leaf(out, Element::Fluid, "Water");
    leaf(out, Element::Source, &escape(&c.source));
    leaf(out, Element::WallPower, &list(c.profile.wall_power.iter().copied()));
    leaf(out, Element::WallMesh, &list(c.profile.wall_mesh.iter().copied()));
    leaf(out, Element::EquilibriumQuality, &list(c.quality_samples.iter().map(|s| s.x)));
    leaf(out, Element::QualityPosition, &list(c.quality_samples.iter().map(|s| s.z)));
    if c.heating == Heating::NonUniform {
        if let Some(z) = c.chf_location {
            leaf(out, Element::ChfLocation, &num(z));
        }
        leaf(out, Element::Shape, c.profile.shape.as_str());
        leaf(out, Element::Continuous, if c.profile.continuous { "yes" } else { "no" });
    }
    let _ = writeln!(out, "  </{CASE_TAG}>");
}

/// Profile elements of one case, for pasting into a dataset file.
pub fn write_profile_fragment(profile: &AxialProfile) -> String {
    let mut out = String::new();
    leaf(&mut out, Element::WallPower, &list(profile.wall_power.iter().copied()));
    leaf(&mut out, Element::WallMesh, &list(profile.wall_mesh.iter().copied()));
    leaf(&mut out, Element::Shape, profile.shape.as_str());
    leaf(&mut out, Element::Continuous, if profile.continuous { "yes" } else { "no" });
    out
}

fn leaf(out: &mut String, e: Element, body: &str) {
    let _ = writeln!(out, "    <{0}>{1}</{0}>", e.tag(), body);
}

// Shortest representation that parses back to the same f64.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn list(values: impl Iterator<Item = f64>) -> String {
    values.map(num).collect::<Vec<_>>().join(" ")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}
