mod common;

use std::time::Instant;

use chf_core::nn::{gradient_check, load_model, save_model, train, NnModel, TrainConfig};
use common::{affine_samples, relative_rmse};

fn affine_config() -> TrainConfig {
    TrainConfig { max_epochs: 500, ..TrainConfig::default() }
}

#[test]
fn affine_target_reaches_two_percent() {
    let data = affine_samples(1000, 11);
    let start = Instant::now();
    let (model, history) = train(NnModel::init_default(3), &data, &affine_config()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rmse = relative_rmse(&model, &data, &history.validation_indices);
    assert!(history.train_loss.len() <= 500);
    assert!(rmse < 2.0, "validation RMSE {rmse}%");
    assert!(secs < 60.0, "{secs} s");
}

#[test]
fn gradient_check_on_default_network() {
    let data = affine_samples(50, 5);
    let mut model = NnModel::init_default(8);
    let feats: Vec<Vec<f64>> = data.iter().map(|s| s.features.clone()).collect();
    let targets: Vec<f64> = data.iter().map(|s| s.target).collect();
    model.fit_normalization(&feats, &targets);
    for (k, s) in data.iter().take(3).enumerate() {
        let g = gradient_check(&model, &s.features, s.target, 250, k as u64).unwrap();
        assert!(g.checked >= 200);
        assert!(g.max_relative_error < 1e-4, "{g:?}");
    }
}

#[test]
fn trained_model_survives_save_and_load() {
    let data = affine_samples(200, 2);
    let cfg = TrainConfig { max_epochs: 20, ..TrainConfig::default() };
    let (model, _) = train(NnModel::init_default(1), &data, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, model);
    let feats: Vec<Vec<f64>> = data.iter().map(|s| s.features.clone()).collect();
    assert_eq!(back.predict(&feats).unwrap(), model.predict(&feats).unwrap());
}
