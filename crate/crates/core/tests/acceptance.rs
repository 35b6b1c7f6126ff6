//! Acceptance run: one PASS / FAIL / SKIPPED line per criterion.
//!
//! Parts that need the published data files read them from
//! `CHF_UNIFORM_XML`, `CHF_NONUNIFORM_XML` and `CHF_LUT_FILE`; without them
//! those parts are reported SKIPPED.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use chf_core::channel::{boiling_length, quality_profile};
use chf_core::cli::uniform_samples;
use chf_core::correlations::{biasi_chf, bowring_chf_with_hfg};
use chf_core::dataset::{
    parse_dataset, parse_dataset_collect, validate_case, write_dataset, AxialProfile, Envelope, Heating, ParseOptions,
    Severity, Shape, TestCase,
};
use chf_core::digitizer::{energy_balance_check, DEFAULT_BALANCE_THRESHOLD};
use chf_core::eval::{
    build_predictor, evaluate_model, parity_svg, parity_table, summary_json, EvalOptions, EvalReport, ModelResources,
    NnPredictor,
};
use chf_core::interp::Pchip;
use chf_core::lut::{
    axial_correction_factor, axial_factor_for_shape, diameter_correction, predict_critical_power, AxialCorrection,
    CriticalPowerConfig, FluxShape, LutTable,
};
use chf_core::nn::{gradient_check, parameter_count, train, NnModel, TrainConfig, DEFAULT_LAYERS};
use chf_core::water::saturation_state;
use common::{rel_err, Csv};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Status {
    Pass(String),
    Fail(String),
    Skipped(String),
}

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn env_path(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn load_published(var: &str) -> Result<(Vec<TestCase>, usize), String> {
    let path = env_path(var).ok_or_else(|| format!("{var} not set"))?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (cases, errors) = parse_dataset_collect(&text, &ParseOptions::default())
        .or_else(|_| parse_dataset_collect(&text, &ParseOptions { permissive: true }))
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((cases, errors.len()))
}

fn within_time(start: Instant, limit: f64, what: &str) -> Result<f64, String> {
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < limit, "{what} took {secs:.2} s, limit {limit} s");
    Ok(secs)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut total = 0;
    for (batch, seed) in (0..125).zip(rng.gen::<u64>()..) {
        let cases = common::random_dataset(8, seed);
        let text = write_dataset(&cases).map_err(|e| e.to_string())?;
        let back = parse_dataset(&text).map_err(|e| format!("batch {batch}: {e}"))?;
        ensure!(back == cases, "batch {batch} did not round-trip");
        total += cases.len();
    }
    ensure!(total >= 1000, "only {total} cases");
    let secs = within_time(start, 10.0, "round trip")?;
    Ok(format!("{total} random cases round-trip in {secs:.2} s"))
}

fn criterion_1_published() -> Result<Status, String> {
    let (uniform, nonuniform) = match (load_published("CHF_UNIFORM_XML"), load_published("CHF_NONUNIFORM_XML")) {
        (Ok(u), Ok(n)) => (u, n),
        (Err(e), _) | (_, Err(e)) if e.ends_with("not set") => return Ok(Status::Skipped(e)),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let start = Instant::now();
    let envelope = Envelope::default();
    let mut counts = [0usize; 2];
    let mut errors = uniform.1 + nonuniform.1;
    for case in uniform.0.iter().chain(&nonuniform.0) {
        counts[(case.heating == Heating::NonUniform) as usize] += 1;
        errors += validate_case(case, &envelope).iter().filter(|f| f.severity == Severity::Error).count();
    }
    ensure!(counts == [651, 888], "counted {} uniform and {} non-uniform", counts[0], counts[1]);
    ensure!(errors == 0, "{errors} error findings");
    within_time(start, 10.0, "published validation")?;
    Ok(Status::Pass("651 uniform and 888 non-uniform cases, 0 errors".into()))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let f = Csv::load("saturation_reference.csv");
    let p = f.column("pressure_pa");
    ensure!(p.len() >= 30, "{} pressures", p.len());
    ensure!(p[0] <= 0.43e6 && *p.last().unwrap() >= 18.0e6, "pressures do not span 0.43 to 18 MPa");
    let cols = [f.column("t_sat_c"), f.column("h_f_j_per_kg"), f.column("h_fg_j_per_kg")];
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let s = saturation_state(p[i]).map_err(|e| e.to_string())?;
        for (v, col) in [s.t_sat, s.h_f, s.h_fg].into_iter().zip(&cols) {
            worst = worst.max(rel_err(v, col[i]));
        }
    }
    ensure!(worst <= 2e-3, "worst relative error {worst:.2e}");
    let secs = within_time(start, 1.0, "property check")?;
    Ok(format!("{} pressures, worst {worst:.1e}, {secs:.3} s", p.len()))
}

fn criterion_3() -> Check {
    let case = common::worked_case();
    let profile = quality_profile(&case).map_err(|e| e.to_string())?;
    let x_out = profile.outlet_quality().unwrap();
    let boiling = boiling_length(&profile).ok_or("tube stays subcooled")?;
    ensure!((x_out - 0.152).abs() <= 0.002, "x_out = {x_out}");
    ensure!((boiling - 1.0).abs() <= 0.01, "boiling length = {boiling}");
    Ok(format!("x_out = {x_out:.4}, boiling length = {boiling:.4} m"))
}

fn criterion_3_published() -> Result<Status, String> {
    let mut cases = Vec::new();
    for var in ["CHF_UNIFORM_XML", "CHF_NONUNIFORM_XML"] {
        match load_published(var) {
            Ok((c, _)) => cases.extend(c),
            Err(e) if e.ends_with("not set") => return Ok(Status::Skipped(e)),
            Err(e) => return Err(e),
        }
    }
    let (mut compared, mut matched) = (0usize, 0usize);
    for case in &cases {
        let Some(stored) = case.stored_outlet_quality() else { continue };
        compared += 1;
        let ok = quality_profile(case)
            .ok()
            .and_then(|p| p.outlet_quality())
            .is_some_and(|x| (x - stored).abs() <= 0.02 * stored.abs());
        matched += ok as usize;
    }
    ensure!(compared > 0, "no stored outlet qualities");
    let share = matched as f64 / compared as f64;
    ensure!(share >= 0.95, "{matched}/{compared} within 2%");
    Ok(Status::Pass(format!("{matched}/{compared} outlet qualities within 2%")))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let f = Csv::load("bowring_golden.csv");
    let expected = f.column("chf_w_per_m2");
    ensure!(expected.len() >= 20, "{} Bowring tuples", expected.len());
    let c = ["pressure_pa", "mass_flux", "diameter_m", "length_m", "inlet_subcooling_j_per_kg", "h_fg_j_per_kg"]
        .map(|n| f.column(n));
    for i in 0..expected.len() {
        let p = bowring_chf_with_hfg(c[0][i], c[1][i], c[2][i], c[3][i], c[4][i], c[5][i]);
        ensure!(rel_err(p.raw_chf, expected[i]) <= 1e-9, "Bowring row {i}: {} vs {}", p.raw_chf, expected[i]);
        ensure!(!p.applicable || p.raw_chf > 0.0, "Bowring row {i} negative");
    }
    let b = Csv::load("biasi_golden.csv");
    let bx = b.column("chf_w_per_m2");
    ensure!(bx.len() >= 20, "{} Biasi tuples", bx.len());
    let (d, g, p, x) = (b.column("diameter_m"), b.column("mass_flux"), b.column("pressure_pa"), b.column("quality"));
    for i in 0..bx.len() {
        let r = biasi_chf(d[i], g[i], p[i], x[i]);
        ensure!(rel_err(r.raw_chf, bx[i]) <= 1e-9, "Biasi row {i}: {} vs {}", r.raw_chf, bx[i]);
        ensure!(!r.applicable || r.raw_chf > 0.0, "Biasi row {i} negative");
    }
    let secs = within_time(start, 1.0, "correlation check")?;
    Ok(format!("{} Bowring and {} Biasi tuples, {secs:.3} s", expected.len(), bx.len()))
}

fn criterion_5() -> Check {
    // trilinear lookup on an affine table
    let affine = |p: f64, g: f64, x: f64| 3.0e6 + 0.05 * p + 120.0 * g - 2.0e6 * x;
    let table = LutTable::from_fn(
        vec![1.0e6, 4.0e6, 9.0e6, 16.0e6],
        vec![500.0, 1500.0, 4000.0, 8000.0],
        vec![-0.4, -0.1, 0.0, 0.3, 0.7, 1.0],
        affine,
    )
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let (p, g, x) = (rng.gen_range(1.0e6..16.0e6), rng.gen_range(500.0..8000.0), rng.gen_range(-0.4..1.0));
        let v = table.lookup_base(p, g, x).map_err(|e| e.to_string())?;
        ensure!(rel_err(v, affine(p, g, x)) <= 1e-12, "lookup at ({p}, {g}, {x})");
    }

    // diameter factor closed forms
    ensure!(diameter_correction(1.0e6, 0.008).map_err(|e| e.to_string())? == 1.0e6, "8 mm factor");
    for (d, f) in [(0.032, 0.5), (0.002, 2.0)] {
        let v = diameter_correction(1.0e6, d).map_err(|e| e.to_string())?;
        ensure!((v / 1.0e6 - f).abs() <= 1e-12, "factor at {d} m = {}", v / 1.0e6);
    }

    // axial factor: unity on uniform profiles, analytic two-step fixture
    let config = AxialCorrection { saturated_only: false, ..Default::default() };
    for case in common::uniform_dataset(20, 55) {
        for k in 1..=10 {
            let f = axial_correction_factor(&case, case.length * k as f64 / 10.0, &config).map_err(|e| e.to_string())?;
            ensure!((f - 1.0).abs() <= 1e-9, "uniform factor {f}");
        }
    }
    let flat = common::worked_case().with_profile(AxialProfile::on_uniform_mesh(vec![1.0; 40], 2.0, Shape::Uniform, true));
    for z in [0.3, 1.1, 2.0] {
        let f = axial_correction_factor(&flat, z, &config).map_err(|e| e.to_string())?;
        ensure!((f - 1.0).abs() <= 1e-9, "flat 40-node factor {f}");
    }
    let fixture = Csv::load("axial_two_step.csv");
    let shape = FluxShape { z: vec![0.0, 1.0, 1.0, 2.0], q: vec![2.0, 2.0, 1.0, 1.0] };
    let (c, z, expected) = (fixture.column("c_per_m"), fixture.column("z_m"), fixture.column("factor"));
    for i in 0..expected.len() {
        let f = axial_factor_for_shape(&shape, 0.0, z[i], c[i]).map_err(|e| e.to_string())?;
        ensure!((f - expected[i]).abs() <= 1e-6, "two-step factor at {} = {f}", z[i]);
    }

    // critical-power search on the constructed fixtures
    let (case, lut) = common::affine_critical_fixture();
    let cp = CriticalPowerConfig::default();
    let one = predict_critical_power(&case, &lut, &cp, false).map_err(|e| e.to_string())?.lambda;
    let two = predict_critical_power(&common::halved_power(&case), &lut, &cp, false).map_err(|e| e.to_string())?.lambda;
    ensure!((one - 1.0).abs() <= 1e-3 && (two - 2.0).abs() <= 1e-3, "lambda {one}, {two}");
    Ok(format!("lambda = {one:.6} and {two:.6}"))
}

fn rmse_of(report: &EvalReport) -> Result<f64, String> {
    report.rmse_percent.ok_or_else(|| format!("{}: no scored cases", report.model_id))
}

fn criterion_6() -> Result<Status, String> {
    let Some(lut_path) = env_path("CHF_LUT_FILE") else { return Ok(Status::Skipped("CHF_LUT_FILE not set".into())) };
    let mut sets = Vec::new();
    for var in ["CHF_UNIFORM_XML", "CHF_NONUNIFORM_XML"] {
        match load_published(var) {
            Ok((c, _)) => sets.push(c),
            Err(e) if e.ends_with("not set") => return Ok(Status::Skipped(e)),
            Err(e) => return Err(e),
        }
    }
    let table = LutTable::load(&lut_path).map_err(|e| e.to_string())?;
    let options = EvalOptions::default();
    let run = |model: &str, cases: &[TestCase]| -> Result<f64, String> {
        let res = ModelResources { lut: Some(table.clone()), ..Default::default() };
        let predictor = build_predictor(model, res).map_err(|e| e.to_string())?;
        rmse_of(&evaluate_model(model, cases, predictor.as_ref(), &options))
    };
    let lut_u = run("lut", &sets[0])?;
    let lut_n = run("lut", &sets[1])?;
    let bowring = run("bowring", &sets[0])?;
    let biasi = run("biasi", &sets[0])?;
    let summary = format!("LUT {lut_u:.1}% / {lut_n:.1}%, Bowring {bowring:.1}%, Biasi {biasi:.1}%");
    ensure!((15.0..=25.0).contains(&lut_u), "uniform LUT RMSE out of range: {summary}");
    ensure!((28.0..=44.0).contains(&lut_n), "non-uniform LUT RMSE out of range: {summary}");
    ensure!((bowring - 27.0).abs() <= 10.0, "Bowring RMSE out of range: {summary}");
    ensure!((biasi - 62.0).abs() <= 10.0, "Biasi RMSE out of range: {summary}");
    Ok(Status::Pass(summary))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 0..1000 {
        let len = rng.gen_range(3..20);
        let mut x = vec![rng.gen_range(-5.0..5.0)];
        let mut y = vec![rng.gen_range(-5.0..5.0)];
        let increasing = rng.gen_bool(0.5);
        for _ in 1..len {
            x.push(x.last().unwrap() + rng.gen_range(0.01..2.0));
            let step = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..3.0) };
            y.push(y.last().unwrap() + if increasing { step } else { -step });
        }
        let s = Pchip::new(x.clone(), y.clone()).map_err(|e| e.to_string())?;
        let mut prev = s.eval(x[0]).unwrap();
        for k in 1..=400 {
            let q = (x[0] + (x[len - 1] - x[0]) * k as f64 / 400.0).min(x[len - 1]);
            let v = s.eval(q).unwrap();
            let tol = 1e-12 * v.abs().max(1.0);
            ensure!(if increasing { v >= prev - tol } else { v <= prev + tol }, "sequence {n} not monotone at {q}");
            prev = v;
        }
    }
    let golden = Csv::load("pchip_golden.csv");
    let s = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 4.0, 9.0]).map_err(|e| e.to_string())?;
    for (q, v) in golden.column("query").into_iter().zip(golden.column("value")) {
        ensure!(rel_err(s.eval(q).unwrap(), v) <= 1e-9, "golden query {q}");
    }

    // energy gate on a flat profile: implied power is q * perimeter * L
    let profile = AxialProfile::on_uniform_mesh(vec![1.0; 40], 2.0, Shape::Uniform, true);
    let (q, perimeter) = (1.0e6, 0.0314);
    let implied = q * perimeter * profile.integral();
    let gate = |declared: f64| energy_balance_check(&profile, q, perimeter, declared, DEFAULT_BALANCE_THRESHOLD);
    let (exact, off3, off2) = (gate(implied), gate(implied * 1.03), gate(implied / 1.02));
    ensure!(exact.pass && exact.discrepancy == 0.0, "0% case: {exact:?}");
    ensure!(!off3.pass, "3% case passed: {off3:?}");
    ensure!(off2.pass, "2% boundary failed: {off2:?}");
    let secs = within_time(start, 5.0, "digitizer checks")?;
    Ok(format!("1000 monotone sequences, golden fixture, gate 0/{:.4}/{:.4}, {secs:.2} s", off3.discrepancy, off2.discrepancy))
}

fn criterion_8() -> Check {
    ensure!(parameter_count(&DEFAULT_LAYERS) == 8471, "parameter count {}", parameter_count(&DEFAULT_LAYERS));
    ensure!(NnModel::init_default(0).parameter_count() == 8471, "initialized model size");

    let data = common::affine_samples(1000, 11);
    let mut probe = NnModel::init_default(8);
    let feats: Vec<Vec<f64>> = data.iter().map(|s| s.features.clone()).collect();
    let targets: Vec<f64> = data.iter().map(|s| s.target).collect();
    probe.fit_normalization(&feats, &targets);
    let g = gradient_check(&probe, &data[0].features, data[0].target, 250, 1).map_err(|e| e.to_string())?;
    ensure!(g.checked >= 200 && g.max_relative_error < 1e-4, "gradient check {g:?}");

    let config = TrainConfig { max_epochs: 500, ..TrainConfig::default() };
    let start = Instant::now();
    let (model, history) = train(NnModel::init_default(3), &data, &config).map_err(|e| e.to_string())?;
    let secs = within_time(start, 60.0, "affine training")?;
    ensure!(history.train_loss.len() <= 500, "{} epochs", history.train_loss.len());
    let rmse = common::relative_rmse(&model, &data, &history.validation_indices);
    ensure!(rmse < 2.0, "affine validation RMSE {rmse:.3}%");

    let short = TrainConfig { max_epochs: 15, ..TrainConfig::default() };
    let a = train(NnModel::init_default(9), &data, &short).map_err(|e| e.to_string())?;
    let b = train(NnModel::init_default(9), &data, &short).map_err(|e| e.to_string())?;
    let same = a.0.params().iter().zip(b.0.params()).all(|(x, y)| x.to_bits() == y.to_bits());
    ensure!(same && a.1 == b.1, "training not bit-reproducible");
    Ok(format!(
        "8471 parameters, gradient error {:.1e}, affine RMSE {rmse:.3}% in {} epochs / {secs:.1} s",
        g.max_relative_error,
        history.train_loss.len()
    ))
}

fn criterion_8_published() -> Result<Status, String> {
    let mut sets = Vec::new();
    for var in ["CHF_UNIFORM_XML", "CHF_NONUNIFORM_XML"] {
        match load_published(var) {
            Ok((c, _)) => sets.push(c),
            Err(e) if e.ends_with("not set") => return Ok(Status::Skipped(e)),
            Err(e) => return Err(e),
        }
    }
    let samples = uniform_samples(&sets[0]).map_err(|e| e.to_string())?;
    // frozen 80/20 split
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(2024));
    let n_test = samples.len() / 5;
    let (test_idx, train_idx) = order.split_at(n_test);
    let train_set: Vec<_> = train_idx.iter().map(|&i| samples[i].clone()).collect();
    let (model, _) = train(NnModel::init_default(42), &train_set, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let held_out = common::relative_rmse(&model, &samples, test_idx);
    let report = evaluate_model("nn", &sets[1], &NnPredictor { model }, &EvalOptions::default());
    let nonuniform = rmse_of(&report)?;
    let summary = format!("held-out uniform {held_out:.1}%, non-uniform {nonuniform:.1}%");
    ensure!(held_out < 30.0, "{summary}");
    ensure!(nonuniform > held_out, "non-uniform not worse: {summary}");
    Ok(Status::Pass(summary))
}

fn criterion_9() -> Check {
    let uniform = common::uniform_dataset(80, 91);
    let mixed = common::random_dataset(80, 92);
    let mut nn = NnModel::init_default(4);
    let samples = common::affine_samples(100, 4);
    let feats: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    let targets: Vec<f64> = samples.iter().map(|s| s.target).collect();
    nn.fit_normalization(&feats, &targets);
    let mut runs = 0;
    for model in ["lut", "bowring", "biasi", "nn"] {
        for cases in [&uniform, &mixed] {
            let body = |threads: usize| {
                let res = ModelResources { lut: Some(common::smooth_table()), nn: Some(nn.clone()), ..Default::default() };
                let predictor = build_predictor(model, res).unwrap();
                let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
                let report = pool.install(|| evaluate_model(model, cases, predictor.as_ref(), &EvalOptions::default()));
                (parity_table(&report), parity_svg(&report), summary_json(&report))
            };
            let reference = body(1);
            for threads in [1, 2, 4, 8] {
                ensure!(body(threads) == reference, "{model} report differs with {threads} threads");
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} repeated evaluations byte-identical across 1, 2, 4 and 8 threads"))
}

fn run(label: &str, f: impl FnOnce() -> Result<Status, String>) -> bool {
    let status = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(msg)) => Status::Fail(msg),
        Err(panic) => {
            let msg = panic.downcast_ref::<String>().cloned().or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()));
            Status::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        }
    };
    let (tag, detail, ok) = match status {
        Status::Pass(d) => ("PASS", d, true),
        Status::Fail(d) => ("FAIL", d, false),
        Status::Skipped(d) => ("SKIPPED", d, true),
    };
    println!("criterion {label}: {tag} ({detail})");
    ok
}

fn always(f: fn() -> Check) -> impl FnOnce() -> Result<Status, String> {
    move || f().map(Status::Pass)
}

#[test]
fn acceptance_criteria() {
    let results = [
        run("1 round trip", always(criterion_1)),
        run("1 published counts", criterion_1_published),
        run("2 water properties", always(criterion_2)),
        run("3 worked heat balance", always(criterion_3)),
        run("3 published outlet quality", criterion_3_published),
        run("4 correlations", always(criterion_4)),
        run("5 lookup table engine", always(criterion_5)),
        run("6 published RMSE", criterion_6),
        run("7 digitizer", always(criterion_7)),
        run("8 network", always(criterion_8)),
        run("8 published split", criterion_8_published),
        run("9 determinism", always(criterion_9)),
    ];
    assert!(results.iter().all(|&ok| ok), "at least one criterion FAILED");
}
