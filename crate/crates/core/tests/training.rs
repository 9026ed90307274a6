use graphmetric::data::{gen_two_moons, split_labels, Dataset, TwoMoons};
use graphmetric::embed::InitScheme;
use graphmetric::graph::{GraphConfig, SigmaMode};
use graphmetric::propagation::PropagationConfig;
use graphmetric::training::{train, train_from, ModelConfig, TrainConfig};
use graphmetric::Error;

fn dataset() -> Dataset {
    let ds = gen_two_moons(
        &TwoMoons {
            n: 80,
            noise_sd: 0.1,
            nuisance_dims: 2,
            nuisance_sd: 1.0,
        },
        4,
    )
    .unwrap();
    split_labels(&ds, 6, 0.5, 4).unwrap()
}

fn config(lr: f64, alpha: f64) -> TrainConfig {
    TrainConfig {
        epochs: 8,
        lr,
        graph: GraphConfig::new(6, SigmaMode::MedianHeuristic),
        propagation: PropagationConfig::new(alpha, 10),
        model: ModelConfig::linear(2, InitScheme::Gaussian { scale: 0.3 }),
        seed: 11,
    }
}

#[test]
fn zero_learning_rate_keeps_init() {
    let ds = dataset();
    let cfg = config(0.0, 0.9);
    let init = cfg.model.init(ds.dim(), cfg.seed).unwrap();
    let (params, hist) = train_from(&ds, &cfg, init.clone()).unwrap();
    assert_eq!(params, init);
    let l0 = hist.records[0].loss;
    for r in &hist.records {
        assert!((r.loss - l0).abs() <= 1e-12);
    }
    assert_eq!(hist.best_epoch, 0);
}

#[test]
fn alpha_zero_gives_constant_loss_and_zero_gradient() {
    let ds = dataset();
    let (_, hist) = train(&ds, &config(0.5, 0.0)).unwrap();
    let l0 = hist.records[0].loss;
    for r in &hist.records {
        assert_eq!(r.loss, l0);
        assert_eq!(r.grad_norm, 0.0);
    }
}

#[test]
fn huge_learning_rate_diverges() {
    let ds = dataset();
    let err = train(&ds, &config(1e300, 0.9)).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }), "{err}");
    assert!(err.is_numerical());
}

#[test]
fn training_is_bitwise_deterministic() {
    let ds = dataset();
    let cfg = config(0.1, 0.9);
    let (pa, ha) = train(&ds, &cfg).unwrap();
    let (pb, hb) = train(&ds, &cfg).unwrap();
    assert_eq!(pa, pb);
    assert_eq!(ha.to_jsonl().unwrap(), hb.to_jsonl().unwrap());
}

#[test]
fn returned_params_are_from_the_best_epoch() {
    let ds = dataset();
    let cfg = config(0.1, 0.9);
    let (_, hist) = train(&ds, &cfg).unwrap();
    let best = hist.records[hist.best_epoch].val_accuracy;
    for (e, r) in hist.records.iter().enumerate() {
        assert!(r.val_accuracy <= best);
        if e < hist.best_epoch {
            assert!(r.val_accuracy < best);
        }
    }
}
