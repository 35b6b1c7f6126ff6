//! Critical heat flux (CHF) toolkit for round-tube water experiments.
//!
//! * [`water`]: saturation and subcooled-liquid properties.
//! * [`dataset`]: test-case model, XML reader/writer, validation.
//! * [`channel`]: heat-balance enthalpy and quality profiles.
//! * [`correlations`]: Bowring and Biasi CHF correlations.
//! * [`lut`]: lookup-table CHF with diameter and axial-shape corrections.
//! * [`digitizer`]: digitized-curve cleanup, PCHIP resampling, energy gate.
//! * [`nn`]: feedforward CHF regressor trained with Adam.
//! * [`eval`]: relative RMSE, evaluation reports, parity exports.
//! * [`cli`]: the `chf` command-line front end.

pub mod channel;
pub mod cli;
pub mod correlations;
pub mod dataset;
pub mod eval;
pub mod digitizer;
pub mod interp;
pub mod lut;
pub mod nn;
pub mod water;
