//! Python bindings for `chf_core`.

use std::fmt::Display;

use chf_core::channel::{boiling_length, quality_profile_scaled};
use chf_core::correlations::{biasi_chf, bowring_chf, ChfPrediction};
use chf_core::dataset::{self, AxialProfile, Heating, ParseOptions, Shape};
use chf_core::digitizer::{
    energy_balance_check, filter_outliers, resample_profile, OutlierPolicy, RawCurve, ResamplePolicy,
    DEFAULT_BALANCE_THRESHOLD,
};
use chf_core::eval::{self, EvalOptions, Metric, ModelResources, Target};
use chf_core::lut::{self, CriticalPowerConfig};
use chf_core::nn::{self, TrainConfig};
use chf_core::water;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Stores the computed quality: outlet only for uniform cases, every node
/// otherwise.
fn fill_quality(mut case: dataset::TestCase) -> PyResult<dataset::TestCase> {
    let p = quality_profile_scaled(&case, 1.0).map_err(value_err)?;
    let mut samples = p.z.iter().zip(&p.x).map(|(&z, &x)| dataset::QualitySample { z, x });
    case.quality_samples = match case.heating {
        Heating::Uniform => samples.next_back().into_iter().collect(),
        Heating::NonUniform => samples.collect(),
    };
    Ok(case)
}

/// One CHF experiment.
#[pyclass(name = "TestCase", from_py_object)]
#[derive(Clone)]
struct PyTestCase {
    inner: dataset::TestCase,
}

#[pymethods]
impl PyTestCase {
    /// Round-tube uniformly heated case in SI units, with the outlet quality
    /// filled in from the heat balance.
    #[staticmethod]
    fn uniform_tube(
        test_id: u32,
        diameter: f64,
        length: f64,
        pressure: f64,
        mass_flux: f64,
        heat_flux: f64,
        inlet_enthalpy: f64,
    ) -> PyResult<Self> {
        let case = dataset::TestCase::uniform_tube(test_id, diameter, length, pressure, mass_flux, heat_flux, inlet_enthalpy);
        Ok(Self { inner: fill_quality(case)? })
    }

    /// Copy with a non-uniform profile on an evenly spaced mesh. The wall
    /// power is rescaled to unit mean so the case power is unchanged.
    #[pyo3(signature = (wall_power, shape = "middle-peaked", chf_location = None))]
    fn with_profile(&self, wall_power: Vec<f64>, shape: &str, chf_location: Option<f64>) -> PyResult<Self> {
        let shape: Shape = shape.parse().map_err(value_err)?;
        let mut profile = AxialProfile::on_uniform_mesh(wall_power, self.inner.length, shape, true);
        let mean = profile.mean();
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(PyValueError::new_err("wall power must have a positive mean"));
        }
        profile.wall_power.iter_mut().for_each(|w| *w /= mean);
        let mut inner = self.inner.clone().with_profile(profile);
        inner.chf_location = chf_location;
        Ok(Self { inner: fill_quality(inner)? })
    }

    #[getter]
    fn test_id(&self) -> u32 {
        self.inner.test_id
    }
    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter
    }
    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }
    #[getter]
    fn pressure(&self) -> f64 {
        self.inner.pressure
    }
    #[getter]
    fn mass_flux(&self) -> f64 {
        self.inner.mass_flux
    }
    #[getter]
    fn heat_flux(&self) -> f64 {
        self.inner.heat_flux_avg
    }
    #[getter]
    fn power(&self) -> f64 {
        self.inner.power
    }
    #[getter]
    fn inlet_enthalpy(&self) -> f64 {
        self.inner.inlet_enthalpy
    }
    #[getter]
    fn chf_location(&self) -> Option<f64> {
        self.inner.chf_location
    }
    #[getter]
    fn uniform(&self) -> bool {
        self.inner.heating == Heating::Uniform
    }
    #[getter]
    fn wall_power(&self) -> Vec<f64> {
        self.inner.profile.wall_power.clone()
    }
    #[getter]
    fn node_positions(&self) -> Vec<f64> {
        self.inner.profile.node_positions()
    }

    /// `(severity, rule, message)` for every validation finding.
    fn validate(&self) -> Vec<(String, String, String)> {
        dataset::validate_case(&self.inner, &dataset::Envelope::default())
            .into_iter()
            .map(|f| (f.severity.as_str().to_owned(), f.rule.as_str().to_owned(), f.message))
            .collect()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "TestCase(test_id={}, heating={}, D={} m, L={} m, P={} Pa, G={} kg/m2s, q={} W/m2)",
            c.test_id,
            c.heating.as_str(),
            c.diameter,
            c.length,
            c.pressure,
            c.mass_flux,
            c.heat_flux_avg
        )
    }
}

fn wrap_cases(cases: Vec<dataset::TestCase>) -> Vec<PyTestCase> {
    cases.into_iter().map(|inner| PyTestCase { inner }).collect()
}

fn unwrap_cases(cases: &[PyTestCase]) -> Vec<dataset::TestCase> {
    cases.iter().map(|c| c.inner.clone()).collect()
}

#[pyfunction]
#[pyo3(signature = (xml, permissive = false))]
fn parse_dataset(xml: &str, permissive: bool) -> PyResult<Vec<PyTestCase>> {
    dataset::parse_dataset_with(xml, &ParseOptions { permissive }).map(wrap_cases).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (path, permissive = false))]
fn read_dataset(path: &str, permissive: bool) -> PyResult<Vec<PyTestCase>> {
    let text = std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
    parse_dataset(&text, permissive)
}

#[pyfunction]
fn write_dataset(cases: Vec<PyTestCase>) -> PyResult<String> {
    dataset::write_dataset(&unwrap_cases(&cases)).map_err(value_err)
}

/// Saturation properties at `pressure` [Pa]: `t_sat` [degC], enthalpies [J/kg].
#[pyfunction]
fn saturation_state(py: Python<'_>, pressure: f64) -> PyResult<Bound<'_, PyDict>> {
    let s = water::saturation_state(pressure).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("pressure", s.pressure)?;
    d.set_item("t_sat", s.t_sat)?;
    d.set_item("h_f", s.h_f)?;
    d.set_item("h_fg", s.h_fg)?;
    d.set_item("h_g", s.h_g)?;
    Ok(d)
}

#[pyfunction]
fn equilibrium_quality(enthalpy: f64, pressure: f64) -> PyResult<f64> {
    water::equilibrium_quality(enthalpy, pressure).map_err(value_err)
}

/// `(z, enthalpy, quality)` at every mesh node, with power scaled by `scale`.
#[pyfunction]
#[pyo3(signature = (case, scale = 1.0))]
fn quality_profile(case: &PyTestCase, scale: f64) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let p = quality_profile_scaled(&case.inner, scale).map_err(value_err)?;
    Ok((p.z, p.h, p.x))
}

/// Position where the quality first reaches zero; `None` if it never does.
#[pyfunction]
fn saturation_onset(case: &PyTestCase) -> PyResult<Option<f64>> {
    let p = quality_profile_scaled(&case.inner, 1.0).map_err(value_err)?;
    Ok(boiling_length(&p))
}

fn prediction_dict<'py>(py: Python<'py>, p: &ChfPrediction) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("chf", p.raw_chf)?;
    d.set_item("applicable", p.applicable)?;
    d.set_item("out_of_envelope", p.flags.out_of_envelope)?;
    d.set_item("branch", format!("{:?}", p.branch))?;
    Ok(d)
}

#[pyfunction]
fn bowring(
    py: Python<'_>,
    pressure: f64,
    mass_flux: f64,
    diameter: f64,
    length: f64,
    inlet_subcooling: f64,
) -> PyResult<Bound<'_, PyDict>> {
    prediction_dict(py, &bowring_chf(pressure, mass_flux, diameter, length, inlet_subcooling))
}

#[pyfunction]
fn biasi(py: Python<'_>, diameter: f64, mass_flux: f64, pressure: f64, quality: f64) -> PyResult<Bound<'_, PyDict>> {
    prediction_dict(py, &biasi_chf(diameter, mass_flux, pressure, quality))
}

/// CHF lookup table on a pressure / mass flux / quality grid.
#[pyclass(name = "LookupTable", from_py_object)]
#[derive(Clone)]
struct PyLookupTable {
    inner: lut::LutTable,
}

#[pymethods]
impl PyLookupTable {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        lut::LutTable::load(path).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        lut::LutTable::parse(text).map(|inner| Self { inner }).map_err(value_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Trilinear CHF [W/m2] at the 8 mm reference diameter.
    fn lookup(&self, pressure: f64, mass_flux: f64, quality: f64) -> PyResult<f64> {
        self.inner.lookup_base(pressure, mass_flux, quality).map_err(value_err)
    }

    /// Critical-power search for one case.
    #[pyo3(signature = (case, axial_correction = true, clamp_quality = false))]
    fn predict<'py>(
        &self,
        py: Python<'py>,
        case: &PyTestCase,
        axial_correction: bool,
        clamp_quality: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut config = CriticalPowerConfig::default();
        if !axial_correction {
            config.axial = lut::AxialCorrection::disabled();
        }
        let r = lut::predict_critical_power(&case.inner, &self.inner, &config, clamp_quality).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("ratio", r.lambda)?;
        d.set_item("critical_power", r.critical_power)?;
        d.set_item("critical_heat_flux", r.critical_heat_flux)?;
        d.set_item("chf_location", r.chf_location)?;
        d.set_item("iterations", r.iterations)?;
        Ok(d)
    }
}

/// Digitized points to a resampled profile: returns `(z, wall_power)`.
#[pyfunction]
#[pyo3(signature = (points, length, perimeter, nodes = None, shape = "uniform", breakpoints = Vec::new(), outlier_k = 3.5))]
fn digitize(
    points: Vec<(f64, f64)>,
    length: f64,
    perimeter: f64,
    nodes: Option<usize>,
    shape: &str,
    breakpoints: Vec<f64>,
    outlier_k: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let mut curve = RawCurve::new(points, perimeter, length);
    curve.shape = shape.parse().map_err(value_err)?;
    curve.breakpoints = breakpoints;
    let filtered = filter_outliers(&curve, &OutlierPolicy { k: outlier_k, ..OutlierPolicy::default() }).map_err(value_err)?;
    let mut policy = ResamplePolicy::default();
    if let Some(n) = nodes {
        policy.n_nodes = n;
    }
    let profile = resample_profile(&filtered, &policy).map_err(value_err)?;
    Ok((profile.node_positions(), profile.wall_power))
}

/// `(discrepancy, pass)` for a flux profile against a declared power.
#[pyfunction]
#[pyo3(signature = (z, wall_power, heat_flux, perimeter, power, threshold = DEFAULT_BALANCE_THRESHOLD))]
fn energy_balance(
    z: Vec<f64>,
    wall_power: Vec<f64>,
    heat_flux: f64,
    perimeter: f64,
    power: f64,
    threshold: f64,
) -> PyResult<(f64, bool)> {
    if z.len() != wall_power.len() || z.len() < 2 {
        return Err(PyValueError::new_err("z and wall_power need the same length of at least 2"));
    }
    let mut mesh: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
    mesh.insert(0, mesh[0]);
    let profile = AxialProfile { wall_power, wall_mesh: mesh, shape: Shape::Uniform, continuous: true };
    let c = energy_balance_check(&profile, heat_flux, perimeter, power, threshold);
    Ok((c.discrepancy, c.pass))
}

/// Feedforward CHF regressor on `[D, L, P, G, x]`.
#[pyclass(name = "NeuralModel", from_py_object)]
#[derive(Clone)]
struct PyNeuralModel {
    inner: nn::NnModel,
}

#[pymethods]
impl PyNeuralModel {
    #[new]
    #[pyo3(signature = (seed = 0, layers = None))]
    fn new(seed: u64, layers: Option<Vec<usize>>) -> PyResult<Self> {
        let inner = match layers {
            Some(l) => nn::NnModel::init(&l, seed).map_err(value_err)?,
            None => nn::NnModel::init_default(seed),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        nn::load_model(path).map(|inner| Self { inner }).map_err(value_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        nn::save_model(&self.inner, path).map_err(value_err)
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    #[getter]
    fn layers(&self) -> Vec<usize> {
        self.inner.layer_sizes().to_vec()
    }

    fn predict(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict(&features).map_err(value_err)
    }

    /// Trains a copy; returns `(model, validation_loss_per_epoch)`.
    #[pyo3(signature = (features, targets, epochs = 2000, seed = 42, learning_rate = 0.01, validation_fraction = 0.2))]
    fn train(
        &self,
        py: Python<'_>,
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
        epochs: usize,
        seed: u64,
        learning_rate: f64,
        validation_fraction: f64,
    ) -> PyResult<(Self, Vec<f64>)> {
        if features.len() != targets.len() {
            return Err(PyValueError::new_err("features and targets differ in length"));
        }
        let samples: Vec<nn::Sample> =
            features.into_iter().zip(targets).map(|(features, target)| nn::Sample { features, target }).collect();
        let config = TrainConfig { max_epochs: epochs, seed, learning_rate, validation_fraction, ..TrainConfig::default() };
        let model = self.inner.clone();
        let (inner, history) = py.detach(|| nn::train(model, &samples, &config)).map_err(value_err)?;
        Ok((Self { inner }, history.validation_loss))
    }
}

/// Training rows `(features, targets)` from the uniform cases, with the
/// quality taken at the outlet.
#[pyfunction]
fn training_data(cases: Vec<PyTestCase>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let samples = chf_core::cli::uniform_samples(&unwrap_cases(&cases)).map_err(value_err)?;
    Ok(samples.into_iter().map(|s| (s.features, s.target)).unzip())
}

/// Result of scoring one model on a dataset.
#[pyclass(name = "EvalReport")]
struct PyEvalReport {
    inner: eval::EvalReport,
}

#[pymethods]
impl PyEvalReport {
    #[getter]
    fn model_id(&self) -> String {
        self.inner.model_id.clone()
    }
    #[getter]
    fn n_cases(&self) -> usize {
        self.inner.n_cases
    }
    #[getter]
    fn n_skipped(&self) -> usize {
        self.inner.n_skipped
    }
    #[getter]
    fn rmse_percent(&self) -> Option<f64> {
        self.inner.rmse_percent
    }
    #[getter]
    fn metric_value(&self) -> Option<f64> {
        self.inner.metric_value
    }
    #[getter]
    fn skip_reasons(&self) -> Vec<(String, usize)> {
        self.inner.skip_reasons.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }
    /// `(test_id, measured, predicted)` for every scored case.
    #[getter]
    fn pairs(&self) -> Vec<(u32, f64, f64)> {
        self.inner.per_case.iter().map(|c| (c.test_id, c.measured, c.predicted)).collect()
    }

    fn summary_json(&self) -> String {
        eval::summary_json(&self.inner)
    }

    fn parity_table(&self) -> String {
        eval::parity_table(&self.inner)
    }

    /// Writes the table, plot and summary; returns their paths.
    fn export(&self, directory: &str, stem: &str) -> PyResult<(String, String, String)> {
        let f = eval::export_parity(&self.inner, directory, stem).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let s = |p: std::path::PathBuf| p.display().to_string();
        Ok((s(f.table), s(f.plot), s(f.summary)))
    }
}

/// Scores `model` ("lut", "bowring", "biasi" or "nn") on `cases`.
#[pyfunction]
#[pyo3(signature = (model, cases, table = None, network = None, target = "heat-flux", metric = "relative", skip_out_of_envelope = false))]
fn evaluate(
    py: Python<'_>,
    model: &str,
    cases: Vec<PyTestCase>,
    table: Option<PyLookupTable>,
    network: Option<PyNeuralModel>,
    target: &str,
    metric: &str,
    skip_out_of_envelope: bool,
) -> PyResult<PyEvalReport> {
    let target = match target {
        "heat-flux" => Target::HeatFlux,
        "critical-power" => Target::CriticalPower,
        other => return Err(PyValueError::new_err(format!("unknown target {other:?}"))),
    };
    let metric: Metric = metric.parse().map_err(value_err)?;
    let resources = ModelResources { lut: table.map(|t| t.inner), nn: network.map(|n| n.inner), ..Default::default() };
    let predictor = eval::build_predictor(model, resources).map_err(value_err)?;
    let cases = unwrap_cases(&cases);
    let options = EvalOptions { target, metric, skip_out_of_envelope };
    let inner = py.detach(|| eval::evaluate_model(model, &cases, predictor.as_ref(), &options));
    Ok(PyEvalReport { inner })
}

#[pymodule]
fn chfkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTestCase>()?;
    m.add_class::<PyLookupTable>()?;
    m.add_class::<PyNeuralModel>()?;
    m.add_class::<PyEvalReport>()?;
    m.add_function(wrap_pyfunction!(parse_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(read_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(write_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(saturation_state, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_quality, m)?)?;
    m.add_function(wrap_pyfunction!(quality_profile, m)?)?;
    m.add_function(wrap_pyfunction!(saturation_onset, m)?)?;
    m.add_function(wrap_pyfunction!(bowring, m)?)?;
    m.add_function(wrap_pyfunction!(biasi, m)?)?;
    m.add_function(wrap_pyfunction!(digitize, m)?)?;
    m.add_function(wrap_pyfunction!(energy_balance, m)?)?;
    m.add_function(wrap_pyfunction!(training_data, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add("DEFAULT_LAYERS", nn::DEFAULT_LAYERS.to_vec())?;
    Ok(())
}
