//! Learns a linear projection that discards nuisance coordinates, given a
//! generous label budget, then saves and reloads the model.
//!
//! ```bash
//! cargo run --release --example learn_metric
//! ```

use graphmetric::data::{gen_two_moons, split_labels, TwoMoons};
use graphmetric::embed::{load_params, save_params, InitScheme};
use graphmetric::graph::{GraphConfig, SigmaMode};
use graphmetric::propagation::PropagationConfig;
use graphmetric::training::{evaluate, train, ModelConfig, TrainConfig};

fn main() -> graphmetric::Result<()> {
    let ds = gen_two_moons(
        &TwoMoons {
            n: 400,
            noise_sd: 0.1,
            nuisance_dims: 8,
            nuisance_sd: 3.0,
        },
        1,
    )?;
    let ds = split_labels(&ds, 150, 0.5, 1)?;
    let cfg = TrainConfig {
        epochs: 100,
        lr: 0.3,
        graph: GraphConfig::new(10, SigmaMode::MedianHeuristic),
        propagation: PropagationConfig::new(0.9, 30),
        model: ModelConfig::linear(2, InitScheme::Gaussian { scale: 0.1 }),
        seed: 1,
    };

    let init = cfg.model.init(ds.dim(), cfg.seed)?;
    let before = evaluate(&init, &ds, &cfg.graph, &cfg.propagation)?;
    let (params, history) = train(&ds, &cfg)?;
    let after = evaluate(&params, &ds, &cfg.graph, &cfg.propagation)?;

    for r in history.records.iter().step_by(10) {
        println!(
            "epoch {:>3}  loss {:.4}  val acc {:.3}  |grad| {:.3e}",
            r.epoch, r.loss, r.val_accuracy, r.grad_norm
        );
    }
    println!("best epoch {}", history.best_epoch);
    println!("test accuracy: init {:.3} -> trained {:.3}", before.test_accuracy, after.test_accuracy);

    let w = &params.w_out;
    let informative: f64 = w.columns(0, 2).norm_squared();
    println!("weight mass on informative coordinates: {:.3}", informative / w.norm_squared());

    let path = std::env::temp_dir().join("graphmetric_learned_model.json");
    save_params(&params, &path)?;
    assert_eq!(load_params(&path)?, params);
    println!("saved and reloaded {}", path.display());
    Ok(())
}
