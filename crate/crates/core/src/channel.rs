//! Steady heat-balance marching along a heated tube.
//!
//! `h(z) = h_in + P_h / (G A) * integral_0^z q''_av * w(z') dz'`, with the
//! normalized wall power `w` taken as node values and integrated by the
//! trapezoid rule between adjacent nodes. Nothing is interpolated across a
//! node, so discontinuous profiles are integrated piecewise.

use thiserror::Error;

use crate::dataset::TestCase;
use crate::water::{water, PropertyError, SaturationState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("test {test_id}: degenerate mesh: {message}")]
    Mesh { test_id: u32, message: String },
    #[error(transparent)]
    Property(#[from] PropertyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityProfile {
    /// Node coordinates [m], starting at 0.
    pub z: Vec<f64>,
    /// Bulk enthalpy [J/kg].
    pub h: Vec<f64>,
    /// Equilibrium quality; empty until [`quality_profile`] fills it.
    pub x: Vec<f64>,
    /// Axial coordinate where `x` first reaches 0.
    pub boiling_length_start: Option<f64>,
}

impl QualityProfile {
    pub fn outlet_quality(&self) -> Option<f64> {
        self.x.last().copied()
    }

    pub fn outlet_enthalpy(&self) -> f64 {
        *self.h.last().expect("profile has nodes")
    }

    /// Quality at `z`, linear between nodes.
    pub fn quality_at(&self, z: f64) -> Option<f64> {
        crate::interp::linear_within(&self.z, &self.x, z)
    }
}

fn check_mesh(case: &TestCase) -> Result<(), ChannelError> {
    let p = &case.profile;
    let err = |message: String| ChannelError::Mesh { test_id: case.test_id, message };
    if p.wall_power.len() < 2 {
        return Err(err(format!("need at least 2 nodes, found {}", p.wall_power.len())));
    }
    if p.wall_mesh.len() != p.wall_power.len() {
        return Err(err("power and mesh lengths differ".into()));
    }
    if let Some(dz) = p.wall_mesh.iter().skip(1).find(|dz| !(**dz > 0.0 && dz.is_finite())) {
        return Err(err(format!("zero or invalid spacing {dz}")));
    }
    if !(case.mass_flux > 0.0 && case.area > 0.0) {
        return Err(err("mass flux and flow area must be positive".into()));
    }
    Ok(())
}

/// Enthalpy at every mesh node, with total power scaled by `power_scale`.
pub fn enthalpy_profile_scaled(case: &TestCase, power_scale: f64) -> Result<QualityProfile, ChannelError> {
    check_mesh(case)?;
    let z = case.profile.node_positions();
    let w = &case.profile.wall_power;
    let coeff = power_scale * case.heat_flux_avg * case.perimeter / (case.mass_flux * case.area);
    let mut h = Vec::with_capacity(z.len());
    h.push(case.inlet_enthalpy);
    if w.len() == 2 {
        // linear rise, closed form
        h.push(case.inlet_enthalpy + coeff * 0.5 * (w[0] + w[1]) * (z[1] - z[0]));
    } else {
        let mut acc = 0.0;
        for i in 1..z.len() {
            acc += 0.5 * (w[i - 1] + w[i]) * (z[i] - z[i - 1]);
            h.push(case.inlet_enthalpy + coeff * acc);
        }
    }
    Ok(QualityProfile { z, h, x: Vec::new(), boiling_length_start: None })
}

pub fn enthalpy_profile(case: &TestCase) -> Result<QualityProfile, ChannelError> {
    enthalpy_profile_scaled(case, 1.0)
}

pub fn quality_profile(case: &TestCase) -> Result<QualityProfile, ChannelError> {
    quality_profile_scaled(case, 1.0)
}

pub fn quality_profile_scaled(case: &TestCase, power_scale: f64) -> Result<QualityProfile, ChannelError> {
    let sat = water().saturation_state(case.pressure)?;
    quality_profile_with(case, power_scale, &sat)
}

/// As [`quality_profile_scaled`] with the saturation state supplied.
pub fn quality_profile_with(
    case: &TestCase,
    power_scale: f64,
    sat: &SaturationState,
) -> Result<QualityProfile, ChannelError> {
    let mut profile = enthalpy_profile_scaled(case, power_scale)?;
    profile.x = profile.h.iter().map(|&h| sat.quality(h)).collect();
    profile.boiling_length_start = boiling_length(&profile);
    Ok(profile)
}

/// Axial coordinate where the equilibrium quality first reaches zero
/// (linear between nodes). `Some(0.0)` for a saturated or two-phase inlet,
/// `None` when the whole tube stays subcooled.
pub fn boiling_length(profile: &QualityProfile) -> Option<f64> {
    let (z, x) = (&profile.z, &profile.x);
    if x.is_empty() {
        return None;
    }
    if x[0] >= 0.0 {
        return Some(0.0);
    }
    (1..x.len()).find(|&i| x[i] >= 0.0).map(|i| {
        let t = -x[i - 1] / (x[i] - x[i - 1]);
        z[i - 1] + t * (z[i] - z[i - 1])
    })
}
