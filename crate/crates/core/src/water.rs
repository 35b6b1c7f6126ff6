//! Water saturation and subcooled-liquid properties.
//!
//! Backed by two bundled tables generated from IAPWS-IF97
//! (`scripts/gen_steam_tables.py`):
//!
//! * `data/water_saturation.csv`: `t_sat`, `h_f`, `h_fg` every 0.05 MPa over
//!   0.1 to 20 MPa, interpolated with monotone cubics in pressure.
//! * `data/water_liquid_enthalpy.csv`: liquid enthalpy on a 0.5 MPa x 5 degC
//!   grid. Rows are interpolated with monotone cubics in temperature, then
//!   linearly in pressure. Cells above saturation carry the metastable liquid
//!   continuation so cells that straddle the saturation line stay smooth; they
//!   are never returned for a query above saturation.
//!
//! Both files are `#`-commented CSV with a header row naming the columns and
//! units. Queries outside 0.1 to 20 MPa are rejected, never extrapolated.

use std::sync::OnceLock;

use thiserror::Error;

use crate::interp::{InterpError, Pchip};

pub const MIN_PRESSURE: f64 = 0.1e6;
pub const MAX_PRESSURE: f64 = 20.0e6;
pub const CRITICAL_PRESSURE: f64 = 22.064e6;

const SATURATION_TABLE: &str = include_str!("../data/water_saturation.csv");
const LIQUID_TABLE: &str = include_str!("../data/water_liquid_enthalpy.csv");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropertyError {
    #[error("pressure {pressure} Pa outside supported band [{MIN_PRESSURE}, {MAX_PRESSURE}] Pa")]
    PressureOutOfRange { pressure: f64 },
    #[error("temperature {temperature} degC outside liquid range (0, {t_sat}] degC at {pressure} Pa")]
    TemperatureOutOfRange { pressure: f64, temperature: f64, t_sat: f64 },
    #[error("property table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// Saturation properties at one pressure. `h_g` is `h_f + h_fg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationState {
    /// Pa
    pub pressure: f64,
    /// degC
    pub t_sat: f64,
    /// J/kg
    pub h_f: f64,
    /// J/kg
    pub h_fg: f64,
    /// J/kg
    pub h_g: f64,
}

#[derive(Debug, Clone)]
pub struct WaterProperties {
    t_sat: Pchip,
    h_f: Pchip,
    h_fg: Pchip,
    liquid_pressures: Vec<f64>,
    liquid_rows: Vec<Pchip>,
}

/// Shared property tables, parsed on first use.
pub fn water() -> &'static WaterProperties {
    static TABLES: OnceLock<WaterProperties> = OnceLock::new();
    TABLES.get_or_init(|| {
        WaterProperties::from_tables(SATURATION_TABLE, LIQUID_TABLE)
            .expect("bundled water property tables are valid")
    })
}

pub fn saturation_state(pressure: f64) -> Result<SaturationState, PropertyError> {
    water().saturation_state(pressure)
}

pub fn subcooled_liquid_enthalpy(pressure: f64, temperature: f64) -> Result<f64, PropertyError> {
    water().subcooled_liquid_enthalpy(pressure, temperature)
}

pub fn equilibrium_quality(enthalpy: f64, pressure: f64) -> Result<f64, PropertyError> {
    water().equilibrium_quality(enthalpy, pressure)
}

impl WaterProperties {
    pub fn from_tables(saturation_csv: &str, liquid_csv: &str) -> Result<Self, PropertyError> {
        let (_, sat) = read_table(saturation_csv)?;
        if sat.iter().any(|r| r.len() != 4) {
            return Err(PropertyError::Table {
                line: 0,
                message: "saturation table needs 4 columns".into(),
            });
        }
        let col = |k: usize| sat.iter().map(|r| r[k]).collect::<Vec<_>>();
        let p = col(0);
        let t_sat = Pchip::new(p.clone(), col(1))?;
        let h_f = Pchip::new(p.clone(), col(2))?;
        let h_fg = Pchip::new(p, col(3))?;

        let (header, rows) = read_table(liquid_csv)?;
        let temps: Vec<f64> = header[1..]
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| PropertyError::Table { line: 0, message: format!("temperature axis: {e}") })?;
        let mut liquid_pressures = Vec::with_capacity(rows.len());
        let mut liquid_rows = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != temps.len() + 1 {
                return Err(PropertyError::Table {
                    line: 0,
                    message: "liquid table row length does not match temperature axis".into(),
                });
            }
            liquid_pressures.push(row[0]);
            liquid_rows.push(Pchip::new(temps.clone(), row[1..].to_vec())?);
        }
        if liquid_pressures.len() < 2 || liquid_pressures.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PropertyError::Table {
                line: 0,
                message: "liquid table pressures must be strictly increasing".into(),
            });
        }
        Ok(Self { t_sat, h_f, h_fg, liquid_pressures, liquid_rows })
    }

    fn check_pressure(pressure: f64) -> Result<(), PropertyError> {
        if (MIN_PRESSURE..=MAX_PRESSURE).contains(&pressure) {
            Ok(())
        } else {
            Err(PropertyError::PressureOutOfRange { pressure })
        }
    }

    pub fn saturation_state(&self, pressure: f64) -> Result<SaturationState, PropertyError> {
        Self::check_pressure(pressure)?;
        let t_sat = self.t_sat.eval(pressure)?;
        let h_f = self.h_f.eval(pressure)?;
        let h_fg = self.h_fg.eval(pressure)?;
        Ok(SaturationState { pressure, t_sat, h_f, h_fg, h_g: h_f + h_fg })
    }

    pub fn t_sat(&self, pressure: f64) -> Result<f64, PropertyError> {
        Self::check_pressure(pressure)?;
        Ok(self.t_sat.eval(pressure)?)
    }

    /// Liquid enthalpy at `temperature` (degC), 0 < T <= t_sat(P).
    pub fn subcooled_liquid_enthalpy(&self, pressure: f64, temperature: f64) -> Result<f64, PropertyError> {
        let t_sat = self.t_sat(pressure)?;
        if !(temperature > 0.0 && temperature <= t_sat) {
            return Err(PropertyError::TemperatureOutOfRange { pressure, temperature, t_sat });
        }
        let temperature = temperature.max(self.liquid_rows[0].span().0);
        let ps = &self.liquid_pressures;
        let i = ps.partition_point(|&v| v <= pressure).clamp(1, ps.len() - 1) - 1;
        let w = (pressure - ps[i]) / (ps[i + 1] - ps[i]);
        let lo = self.liquid_rows[i].eval(temperature)?;
        let hi = self.liquid_rows[i + 1].eval(temperature)?;
        Ok(lo + w * (hi - lo))
    }

    /// Temperature of liquid with enthalpy `h`; saturated or two-phase
    /// enthalpies map to `t_sat`.
    pub fn liquid_temperature(&self, pressure: f64, enthalpy: f64) -> Result<f64, PropertyError> {
        let sat = self.saturation_state(pressure)?;
        if enthalpy >= sat.h_f {
            return Ok(sat.t_sat);
        }
        let (mut lo, mut hi) = (1e-6, sat.t_sat);
        if enthalpy <= self.subcooled_liquid_enthalpy(pressure, lo)? {
            return Err(PropertyError::TemperatureOutOfRange { pressure, temperature: 0.0, t_sat: sat.t_sat });
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.subcooled_liquid_enthalpy(pressure, mid)? < enthalpy {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-10 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `(h - h_f) / h_fg`; unbounded on both sides.
    pub fn equilibrium_quality(&self, enthalpy: f64, pressure: f64) -> Result<f64, PropertyError> {
        let sat = self.saturation_state(pressure)?;
        Ok(sat.quality(enthalpy))
    }
}

impl SaturationState {
    pub fn quality(&self, enthalpy: f64) -> f64 {
        if enthalpy == self.h_g {
            return 1.0;
        }
        (enthalpy - self.h_f) / self.h_fg
    }

    pub fn enthalpy_at_quality(&self, quality: f64) -> f64 {
        self.h_f + quality * self.h_fg
    }
}

type Rows = Vec<Vec<f64>>;

fn read_table(text: &str) -> Result<(Vec<String>, Rows), PropertyError> {
    let mut header = None;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PropertyError::Table { line: idx + 1, message: e.to_string() })?;
        rows.push(row);
    }
    let header = header.ok_or(PropertyError::Table { line: 0, message: "missing header".into() })?;
    Ok((header, rows))
}
