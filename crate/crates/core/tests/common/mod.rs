//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use chf_core::channel::quality_profile;
use chf_core::dataset::{AxialProfile, QualitySample, Shape, TestCase};
use chf_core::lut::LutTable;
use chf_core::nn::Sample;
use chf_core::water::saturation_state;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

/// CSV fixture with a header row.
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn load(name: &str) -> Self {
        let text = std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().expect("header").split(',').map(str::to_owned).collect();
        let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
        Self { header, rows }
    }

    fn index(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.index(name);
        self.rows.iter().map(|r| r[i].parse().expect("numeric cell")).collect()
    }

    pub fn text_column(&self, name: &str) -> Vec<String> {
        let i = self.index(name);
        self.rows.iter().map(|r| r[i].clone()).collect()
    }
}

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs()
}

/// D = 10 mm, L = 2 m, G = 2000, P = 10 MPa, 200 kJ/kg subcooling, 1 MW/m2.
pub fn worked_case() -> TestCase {
    let sat = saturation_state(10.0e6).unwrap();
    TestCase::uniform_tube(1, 0.01, 2.0, 10.0e6, 2000.0, 1.0e6, sat.h_f - 200.0e3)
}

/// Fills quality samples from the computed profile (outlet only for uniform).
pub fn with_quality_samples(mut case: TestCase) -> TestCase {
    let p = quality_profile(&case).expect("quality profile");
    case.quality_samples = if case.profile.node_count() == 2 {
        vec![QualitySample { z: case.length, x: *p.x.last().unwrap() }]
    } else {
        p.z.iter().zip(&p.x).map(|(&z, &x)| QualitySample { z, x }).collect()
    };
    case
}

const SHAPES: [Shape; 5] = [Shape::MiddlePeaked, Shape::Inlet, Shape::Outlet, Shape::Spike, Shape::Uniform];

/// Random valid case inside the collected-data envelope. About half are
/// non-uniform with a random 40-node mesh and profile.
pub fn random_case(rng: &mut ChaCha8Rng, test_id: u32) -> TestCase {
    let diameter = rng.gen_range(5.5e-3..28.0e-3);
    let length = rng.gen_range(0.2..5.0);
    let pressure = rng.gen_range(0.5e6..17.5e6);
    let mass_flux = rng.gen_range(400.0..9000.0);
    let heat_flux = rng.gen_range(0.2e6..4.0e6);
    let sat = saturation_state(pressure).unwrap();
    let subcooling = rng.gen_range(10.0e3..0.6 * sat.h_f);
    let base = TestCase::uniform_tube(test_id, diameter, length, pressure, mass_flux, heat_flux, sat.h_f - subcooling);
    let mut case = if rng.gen_bool(0.5) {
        base
    } else {
        let n = 40;
        let mut mesh: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = mesh[1..].iter().sum();
        mesh.iter_mut().for_each(|m| *m *= length / total);
        mesh[0] = mesh[1];
        let peak = rng.gen_range(0.1..0.9) * length;
        let width = rng.gen_range(0.1..0.5) * length;
        let mut profile = AxialProfile {
            wall_power: vec![0.0; n],
            wall_mesh: mesh,
            shape: SHAPES[rng.gen_range(0..SHAPES.len())],
            continuous: rng.gen_bool(0.8),
        };
        let z = profile.node_positions();
        profile.wall_power = z
            .iter()
            .map(|z| 0.3 + (-((z - peak) / width).powi(2)).exp() + rng.gen_range(0.0..0.05))
            .collect();
        let mean = profile.mean();
        profile.wall_power.iter_mut().for_each(|w| *w /= mean);
        let mut c = base.with_profile(profile);
        c.chf_location = Some(rng.gen_range(0.0..=length));
        c
    };
    case.source = ["", "Becker", "Todreas & Kazimi", "<lab \"A\">", "O'Neill"][rng.gen_range(0..5)].to_owned();
    with_quality_samples(case)
}

pub fn random_dataset(n: usize, seed: u64) -> Vec<TestCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_case(&mut rng, i as u32 + 1)).collect()
}

/// Uniform-only dataset in the ranges covered by [`smooth_table`].
pub fn uniform_dataset(n: usize, seed: u64) -> Vec<TestCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let pressure = rng.gen_range(2.0e6..16.0e6);
            let sat = saturation_state(pressure).unwrap();
            let c = TestCase::uniform_tube(
                i as u32 + 1,
                rng.gen_range(6.0e-3..20.0e-3),
                rng.gen_range(0.5..4.0),
                pressure,
                rng.gen_range(1000.0..6000.0),
                rng.gen_range(0.5e6..3.0e6),
                sat.h_f - rng.gen_range(50.0e3..400.0e3),
            );
            with_quality_samples(c)
        })
        .collect()
}

/// Smooth synthetic table decreasing in quality, wide enough for
/// [`uniform_dataset`] cases at any power the search probes.
pub fn smooth_table() -> LutTable {
    let p: Vec<f64> = (0..=10).map(|i| 0.5e6 + i as f64 * 1.8e6).collect();
    let g: Vec<f64> = (0..=10).map(|i| 100.0 + i as f64 * 1000.0).collect();
    let x: Vec<f64> = (0..=20).map(|i| -1.5 + i as f64 * 0.125).collect();
    LutTable::from_fn(p, g, x, |p, g, x| {
        let v = 4.0e6 * (1.0 - x / 1.2) * (1.0 + g / 8000.0) * (1.0 - p / 4.0e7);
        v.max(1.0e3)
    })
    .unwrap()
}

pub const AFFINE_SLOPE: f64 = -1.0e6;

/// Uniform case plus a table affine in quality, built so that the CHF ratio
/// at the outlet is exactly one at the case's measured power.
pub fn affine_critical_fixture() -> (TestCase, LutTable) {
    // reference diameter, so the size correction is exactly one
    let sat = saturation_state(10.0e6).unwrap();
    let case = TestCase::uniform_tube(1, 0.008, 2.0, 10.0e6, 2000.0, 1.0e6, sat.h_f - 200.0e3);
    let x_out = *quality_profile(&case).unwrap().x.last().unwrap();
    let intercept = case.heat_flux_avg - AFFINE_SLOPE * x_out;
    let table = LutTable::from_fn(
        vec![5.0e6, 10.0e6, 15.0e6],
        vec![1000.0, 2000.0, 3000.0],
        vec![-0.5, 0.0, 0.25, 0.5, 0.75, 1.0],
        |_, _, x| intercept + AFFINE_SLOPE * x,
    )
    .unwrap();
    (with_quality_samples(case), table)
}

/// Same tube with the measured power (and average flux) halved.
pub fn halved_power(case: &TestCase) -> TestCase {
    let mut c = case.clone();
    c.power *= 0.5;
    c.heat_flux_avg *= 0.5;
    c
}

/// 40-node spike profile peaking at 0.3 L.
pub fn spike_case() -> TestCase {
    let base = worked_case();
    let l = base.length;
    let n = 40;
    let z: Vec<f64> = (0..n).map(|i| i as f64 * l / (n - 1) as f64).collect();
    let w: Vec<f64> = z.iter().map(|z| 0.5 + 3.0 * (-((z - 0.3 * l) / (0.05 * l)).powi(2)).exp()).collect();
    let mut profile = AxialProfile::on_uniform_mesh(w, l, Shape::Spike, true);
    let mean = profile.mean();
    profile.wall_power.iter_mut().for_each(|v| *v /= mean);
    let mut c = base.with_profile(profile);
    c.chf_location = Some(0.3 * l);
    with_quality_samples(c)
}

pub fn affine_target(f: &[f64]) -> f64 {
    4.0e6 + 4.0e7 * (f[0] - 0.01) + 1.0e5 * (f[1] - 2.0) + 0.08 * (f[2] - 1.0e7) + 250.0 * (f[3] - 3000.0)
        - 1.5e6 * (f[4] - 0.2)
}

/// Features spread over the collected-data ranges with an affine target.
pub fn affine_samples(n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let f = vec![
                rng.gen_range(0.005..0.028),
                rng.gen_range(0.5..5.0),
                rng.gen_range(1.0e6..1.8e7),
                rng.gen_range(500.0..8000.0),
                rng.gen_range(-0.3..0.8),
            ];
            let target = affine_target(&f);
            Sample { features: f, target }
        })
        .collect()
}

/// Relative RMSE [%] of `model` on the given samples.
pub fn relative_rmse(model: &chf_core::nn::NnModel, data: &[Sample], idx: &[usize]) -> f64 {
    let pairs: Vec<(f64, f64)> =
        idx.iter().map(|&i| (data[i].target, model.predict_one(&data[i].features).unwrap())).collect();
    chf_core::eval::rmse_percent(&pairs).unwrap()
}
