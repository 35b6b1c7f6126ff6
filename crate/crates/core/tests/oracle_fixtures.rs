//! Comparisons against the frozen reference fixtures in `tests/fixtures`.

mod common;

use chf_core::correlations::{biasi_branches, biasi_chf, bowring_chf_with_hfg, Branch};
use chf_core::digitizer::{resample_profile, RawCurve, ResamplePolicy};
use chf_core::interp::Pchip;
use chf_core::lut::{axial_factor_for_shape, FluxShape, LutTable};
use chf_core::water::{saturation_state, subcooled_liquid_enthalpy};
use common::{rel_err, Csv};

#[test]
fn saturation_within_two_tenths_percent() {
    let f = Csv::load("saturation_reference.csv");
    let p = f.column("pressure_pa");
    assert!(p.len() >= 30);
    assert!(p[0] <= 0.43e6 && *p.last().unwrap() >= 18.0e6);
    let (t, hf, hfg) = (f.column("t_sat_c"), f.column("h_f_j_per_kg"), f.column("h_fg_j_per_kg"));
    for i in 0..p.len() {
        let s = saturation_state(p[i]).unwrap();
        assert!(rel_err(s.t_sat, t[i]) <= 2e-3, "t_sat at {}", p[i]);
        assert!(rel_err(s.h_f, hf[i]) <= 2e-3, "h_f at {}", p[i]);
        assert!(rel_err(s.h_fg, hfg[i]) <= 2e-3, "h_fg at {}", p[i]);
    }
}

#[test]
fn subcooled_liquid_within_half_percent() {
    let f = Csv::load("liquid_reference.csv");
    let (p, t, h) = (f.column("pressure_pa"), f.column("temperature_c"), f.column("h_j_per_kg"));
    for i in 0..p.len() {
        let v = subcooled_liquid_enthalpy(p[i], t[i]).unwrap();
        assert!(rel_err(v, h[i]) <= 5e-3, "({}, {}) -> {v} vs {}", p[i], t[i], h[i]);
    }
}

#[test]
fn bowring_golden() {
    let f = Csv::load("bowring_golden.csv");
    let expected = f.column("chf_w_per_m2");
    assert!(expected.len() >= 20);
    let cols = ["pressure_pa", "mass_flux", "diameter_m", "length_m", "inlet_subcooling_j_per_kg", "h_fg_j_per_kg"]
        .map(|c| f.column(c));
    for i in 0..expected.len() {
        let p = bowring_chf_with_hfg(cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i], cols[5][i]);
        assert!(rel_err(p.raw_chf, expected[i]) <= 1e-9, "row {i}: {} vs {}", p.raw_chf, expected[i]);
        if p.applicable {
            assert!(p.raw_chf > 0.0);
        }
    }
}

#[test]
fn biasi_golden() {
    let f = Csv::load("biasi_golden.csv");
    let expected = f.column("chf_w_per_m2");
    assert!(expected.len() >= 20);
    let (d, g, p, x) = (f.column("diameter_m"), f.column("mass_flux"), f.column("pressure_pa"), f.column("quality"));
    let (low, high) = (f.column("low_quality_w_per_m2"), f.column("high_quality_w_per_m2"));
    let branch = f.text_column("branch");
    for i in 0..expected.len() {
        let pred = biasi_chf(d[i], g[i], p[i], x[i]);
        assert!(rel_err(pred.raw_chf, expected[i]) <= 1e-9, "row {i}");
        let (l, h) = biasi_branches(d[i], g[i], p[i], x[i]);
        assert!(rel_err(l, low[i]) <= 1e-9 && rel_err(h, high[i]) <= 1e-9, "row {i} branches");
        let want = if branch[i] == "high" { Branch::BiasiHighQuality } else { Branch::BiasiLowQuality };
        assert_eq!(pred.branch, want, "row {i}");
        if pred.applicable {
            assert!(pred.raw_chf > 0.0);
        }
    }
}

#[test]
fn pchip_golden() {
    let f = Csv::load("pchip_golden.csv");
    let s = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 4.0, 9.0]).unwrap();
    for (q, v) in f.column("query").into_iter().zip(f.column("value")) {
        assert!(rel_err(s.eval(q).unwrap(), v) <= 1e-9, "query {q}");
    }
}

#[test]
fn spike_curve_resamples_to_golden_profile() {
    let raw = Csv::load("spike_curve.csv");
    let points: Vec<(f64, f64)> = raw.column("z_m").into_iter().zip(raw.column("q_norm")).collect();
    let curve = RawCurve::new(points, 0.0314, 2.0);
    let profile = resample_profile(&curve, &ResamplePolicy::default()).unwrap();
    let golden = Csv::load("spike_resampled.csv");
    let (z, w) = (golden.column("z_m"), golden.column("wall_power"));
    assert_eq!(profile.wall_power.len(), 40);
    for (a, b) in profile.node_positions().iter().zip(&z) {
        assert!((a - b).abs() <= 1e-12, "node {a} vs {b}");
    }
    for (i, (a, b)) in profile.wall_power.iter().zip(&w).enumerate() {
        assert!(rel_err(*a, *b) <= 1e-9, "node {i}: {a} vs {b}");
    }
}

#[test]
fn two_step_axial_factor_matches_analytic() {
    let f = Csv::load("axial_two_step.csv");
    let shape = FluxShape { z: vec![0.0, 1.0, 1.0, 2.0], q: vec![2.0, 2.0, 1.0, 1.0] };
    let (c, z, factor) = (f.column("c_per_m"), f.column("z_m"), f.column("factor"));
    for i in 0..factor.len() {
        let v = axial_factor_for_shape(&shape, 0.0, z[i], c[i]).unwrap();
        assert!((v - factor[i]).abs() <= 1e-6, "z = {}: {v} vs {}", z[i], factor[i]);
    }
}

#[test]
fn synthetic_table_axes_nodes_and_midpoints() {
    let t = LutTable::load(common::fixture("lut_synthetic.txt")).unwrap();
    assert_eq!(t.pressure_axis(), &[5.0e6, 10.0e6, 15.0e6]);
    assert_eq!(t.mass_flux_axis(), &[1000.0, 2000.0, 4000.0]);
    assert_eq!(t.quality_axis(), &[-0.2, 0.2, 0.6]);
    // first row of the file, kW/m2 -> W/m2
    assert_eq!(t.lookup_base(5.0e6, 1000.0, -0.2).unwrap(), 4.3e6);
    assert_eq!(t.lookup_base(15.0e6, 4000.0, 0.6).unwrap(), 4.5e6);
    let m = Csv::load("lut_synthetic_midpoints.csv");
    let (p, g, x, v) = (m.column("pressure_pa"), m.column("mass_flux"), m.column("quality"), m.column("chf_w_m2"));
    for i in 0..v.len() {
        let got = t.lookup_base(p[i], g[i], x[i]).unwrap();
        assert!(rel_err(got, v[i]) <= 1e-12, "midpoint {i}: {got} vs {}", v[i]);
    }
}
