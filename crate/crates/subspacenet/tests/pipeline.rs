use doa_core::signal::{generate_dataset, Coherence, Scenario};
use subspacenet::checkpoint::{load_checkpoint_for, save_checkpoint};
use subspacenet::eval::{evaluate, Estimator};
use subspacenet::model::ModelParameters;
use subspacenet::trainer::{train, Hyperparameters};

#[test]
fn train_save_load_evaluate() {
    let template = Scenario::narrowband(8, 2, 50, 10.0).unwrap().with_coherence(Coherence::FullyCoherent).with_seed(21);
    let data = generate_dataset(&template, 24).unwrap();
    let hp = Hyperparameters { max_epochs: 2, batch_size: 8, seed: 21, ..Hyperparameters::default() };
    let init = ModelParameters::init(8, hp.lags, hp.epsilon, hp.seed).unwrap();
    let (model, report) = train(&data, &hp, init).unwrap();
    assert_eq!(report.epochs.len(), 2);
    assert_eq!(model.param_count(), 41_761);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint_for(&path, 8).unwrap();
    assert_eq!(loaded, model);
    assert!(load_checkpoint_for(&path, 6).is_err());

    let test = generate_dataset(&template.clone().with_seed(22), 6).unwrap();
    for est in [Estimator::RootMusic, Estimator::Esprit, Estimator::Music] {
        let r = evaluate(&loaded, est, &test).unwrap();
        assert_eq!(r.per_sample.len(), 6);
        assert!(r.stats.mean.is_finite() && r.stats.mean <= std::f64::consts::FRAC_PI_2);
    }
}
