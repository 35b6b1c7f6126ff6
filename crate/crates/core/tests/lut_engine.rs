mod common;

use chf_core::dataset::{AxialProfile, Shape};
use chf_core::lut::{
    axial_correction_factor, diameter_correction, predict_critical_power, AxialCorrection, CriticalPowerConfig,
    LutError, LutTable, SearchMode, ShapeConstant,
};
use common::{affine_critical_fixture, halved_power, spike_case};

#[test]
fn affine_fixture_is_critical_at_measured_power() {
    let (case, table) = affine_critical_fixture();
    let r = predict_critical_power(&case, &table, &CriticalPowerConfig::default(), false).unwrap();
    assert!((r.lambda - 1.0).abs() <= 1e-4, "lambda {}", r.lambda);
    assert!((r.critical_heat_flux - case.heat_flux_avg).abs() <= 1e-4 * case.heat_flux_avg);
    assert!((r.min_chfr_at_measured_power - 1.0).abs() <= 1e-12);
    // uniform heating with CHF falling in quality: limiting point is the outlet
    assert_eq!(r.chf_location, case.length);
}

#[test]
fn halved_power_doubles_lambda() {
    let (case, table) = affine_critical_fixture();
    let r = predict_critical_power(&halved_power(&case), &table, &CriticalPowerConfig::default(), false).unwrap();
    assert!((r.lambda - 2.0).abs() <= 1e-3, "lambda {}", r.lambda);
    assert!((r.critical_power - case.power).abs() <= 1e-3 * case.power);
}

#[test]
fn direct_substitution_reports_ratio_at_measured_power() {
    let (case, table) = affine_critical_fixture();
    let config = CriticalPowerConfig { mode: SearchMode::DirectSubstitution, ..CriticalPowerConfig::default() };
    let r = predict_critical_power(&halved_power(&case), &table, &config, false).unwrap();
    // CHF at measured conditions over the (halved) measured flux
    assert!(r.lambda > 2.0);
    assert_eq!(r.iterations, 0);
}

#[test]
fn spike_location_not_upstream_of_peak() {
    let case = spike_case();
    let table = LutTable::from_fn(vec![5.0e6, 15.0e6], vec![1000.0, 3000.0], vec![-1.0, 2.0], |_, _, _| 3.0e6).unwrap();
    let spike_z = 0.3 * case.length;
    let peak_node = case
        .profile
        .node_positions()
        .into_iter()
        .zip(&case.profile.wall_power)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!((peak_node - spike_z).abs() < case.length / 39.0);
    for axial in [AxialCorrection::default(), AxialCorrection::disabled()] {
        let config = CriticalPowerConfig { axial, ..CriticalPowerConfig::default() };
        let r = predict_critical_power(&case, &table, &config, false).unwrap();
        assert!(r.chf_location >= peak_node - case.length / 39.0, "{} upstream of {peak_node}", r.chf_location);
    }
}

#[test]
fn axial_factor_is_one_on_uniform_cases() {
    for case in common::uniform_dataset(20, 4) {
        for k in 1..=10 {
            let z = case.length * k as f64 / 10.0;
            let f = axial_correction_factor(&case, z, &AxialCorrection { saturated_only: false, ..Default::default() }).unwrap();
            assert!((f - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn flat_forty_node_profile_has_unit_factor() {
    let base = common::worked_case();
    let flat = AxialProfile::on_uniform_mesh(vec![1.0; 40], base.length, Shape::Uniform, true);
    let case = base.with_profile(flat);
    let config = AxialCorrection { constant: ShapeConstant::Constant(2.0), saturated_only: false, ..Default::default() };
    for z in [0.1, 0.7, 1.3, 2.0] {
        assert!((axial_correction_factor(&case, z, &config).unwrap() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn inlet_peaked_profile_raises_outlet_factor() {
    let base = common::worked_case();
    let w: Vec<f64> = (0..40).map(|i| 1.8 - 1.6 * i as f64 / 39.0).collect();
    let mut profile = AxialProfile::on_uniform_mesh(w, base.length, Shape::Inlet, true);
    let mean = profile.mean();
    profile.wall_power.iter_mut().for_each(|v| *v /= mean);
    let case = base.with_profile(profile);
    let f = axial_correction_factor(&case, case.length, &AxialCorrection::default()).unwrap();
    assert!(f > 1.0, "F = {f}");
}

#[test]
fn zero_local_flux_is_singular() {
    let base = common::worked_case();
    let mut w = vec![1.0; 40];
    w[39] = 0.0;
    let mut profile = AxialProfile::on_uniform_mesh(w, base.length, Shape::Inlet, true);
    let mean = profile.mean();
    profile.wall_power.iter_mut().for_each(|v| *v /= mean);
    let case = base.with_profile(profile);
    let config = AxialCorrection { saturated_only: false, ..Default::default() };
    let r = axial_correction_factor(&case, case.length, &config);
    assert!(matches!(r, Err(LutError::SingularProfile(_))), "{r:?}");
}

#[test]
fn diameter_closed_forms() {
    assert_eq!(diameter_correction(1.0e6, 0.008).unwrap(), 1.0e6);
    assert!((diameter_correction(1.0e6, 0.032).unwrap() - 0.5e6).abs() <= 1e-9);
    assert!((diameter_correction(1.0e6, 0.002).unwrap() - 2.0e6).abs() <= 1e-9);
    assert!(diameter_correction(1.0e6, 0.001).is_err());
}

#[test]
fn out_of_table_case_reports_conditions() {
    let (mut case, table) = affine_critical_fixture();
    case.pressure = 2.0e6;
    match predict_critical_power(&case, &table, &CriticalPowerConfig::default(), false) {
        Err(LutError::OutOfTable { pressure, .. }) => assert_eq!(pressure, 2.0e6),
        other => panic!("expected OutOfTable, got {other:?}"),
    }
}

#[test]
fn duplicated_pressure_row_is_grid_error() {
    let text = std::fs::read_to_string(common::fixture("lut_synthetic.txt")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let first_row = lines.iter().position(|l| l.starts_with("5.0 ")).unwrap();
    let dup = lines[first_row];
    lines[first_row + 3] = dup;
    assert!(matches!(LutTable::parse(&lines.join("\n")), Err(LutError::Grid(_))));
}
