//! Euclidean baseline vs learned linear metric on two moons buried in
//! high-variance noise coordinates.
//!
//! ```bash
//! cargo run --release --example nuisance_benchmark -- [lr] [epochs]
//! ```

use graphmetric::data::TwoMoons;
use graphmetric::embed::InitScheme;
use graphmetric::experiment::{run_train, DatasetSpec, ExperimentConfig, SplitConfig, TrainSettings};
use graphmetric::graph::{GraphConfig, SigmaMode};
use graphmetric::propagation::PropagationConfig;
use graphmetric::training::ModelConfig;

fn main() -> graphmetric::Result<()> {
    let mut args = std::env::args().skip(1);
    let lr: f64 = args.next().map_or(0.01, |s| s.parse().expect("lr"));
    let epochs: usize = args.next().map_or(100, |s| s.parse().expect("epochs"));

    let cfg = ExperimentConfig {
        dataset: DatasetSpec::TwoMoons(TwoMoons {
            n: 400,
            noise_sd: 0.1,
            nuisance_dims: 8,
            nuisance_sd: 3.0,
        }),
        split: SplitConfig {
            labeled_per_class: 10,
            val_fraction: 0.5,
        },
        graph: GraphConfig::new(10, SigmaMode::MedianHeuristic),
        propagation: PropagationConfig::new(0.9, 30),
        train: TrainSettings {
            epochs,
            lr,
            model: ModelConfig::linear(2, InitScheme::Gaussian { scale: 0.1 }),
        },
        seeds: (1..=10).collect(),
        out_dir: None,
    };
    let report = run_train(&cfg, None)?;
    println!("seed  baseline  learned  best_epoch");
    for row in &report.rows {
        println!(
            "{:>4}  {:>8.3}  {:>7.3}  {:>10}",
            row.seed,
            row.baseline_accuracy,
            row.learned_accuracy.unwrap_or(f64::NAN),
            row.best_epoch.unwrap_or(0)
        );
    }
    let agg = &report.aggregate;
    println!(
        "wins {}/{}  median improvement {:+.3}",
        agg.wins.unwrap_or(0),
        agg.seeds,
        agg.improvement_median.unwrap_or(f64::NAN)
    );
    Ok(())
}
