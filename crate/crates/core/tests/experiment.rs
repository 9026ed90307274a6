use graphmetric::data::{Blobs, TwoMoons};
use graphmetric::embed::InitScheme;
use graphmetric::experiment::{cmd_baseline, run_baseline, run_train, DatasetSpec, ExperimentConfig, SplitConfig, TrainSettings};
use graphmetric::graph::{GraphConfig, SigmaMode};
use graphmetric::propagation::PropagationConfig;
use graphmetric::training::ModelConfig;

fn config(dataset: DatasetSpec, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        dataset,
        split: SplitConfig {
            labeled_per_class: 6,
            val_fraction: 0.5,
        },
        graph: GraphConfig::new(8, SigmaMode::MedianHeuristic),
        propagation: PropagationConfig::default(),
        train: TrainSettings {
            epochs: 10,
            lr: 0.1,
            model: ModelConfig::linear(2, InitScheme::Gaussian { scale: 0.1 }),
        },
        seeds,
        out_dir: None,
    }
}

#[test]
fn separated_blobs_baseline_is_perfect() {
    let cfg = config(
        DatasetSpec::Blobs(Blobs {
            n_per_class: 50,
            classes: 2,
            dim: 2,
            informative_dims: 2,
            separation: 10.0,
            noise_sd: 0.1,
        }),
        vec![1, 2, 3],
    );
    let report = run_baseline(&cfg).unwrap();
    for row in &report.rows {
        assert_eq!(row.baseline_accuracy, 1.0);
        assert_eq!(row.abstain_count, 0);
    }
}

#[test]
fn baseline_report_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        DatasetSpec::TwoMoons(TwoMoons {
            n: 60,
            noise_sd: 0.1,
            nuisance_dims: 0,
            nuisance_sd: 0.0,
        }),
        vec![2, 1],
    );
    let report = cmd_baseline(&cfg, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(graphmetric::experiment::Report::from_json(&text).unwrap(), report);
    assert_eq!(report.rows[0].seed, 1);
    assert!(report.rows.iter().all(|r| r.learned_accuracy.is_none()));
}

#[test]
fn csv_dataset_is_resplit_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let ds = graphmetric::data::gen_two_moons(
        &TwoMoons {
            n: 60,
            noise_sd: 0.1,
            nuisance_dims: 1,
            nuisance_sd: 0.5,
        },
        9,
    )
    .unwrap();
    let path = dir.path().join("moons.csv");
    graphmetric::data::save_csv(&ds, &path).unwrap();
    let cfg = config(DatasetSpec::Csv(path), vec![1, 2]);
    let a = cfg.split_dataset(1).unwrap();
    let b = cfg.split_dataset(2).unwrap();
    assert_eq!(a.x, b.x);
    assert_ne!(a.roles, b.roles);
    let report = run_train(&cfg, None).unwrap();
    assert_eq!(report.rows.len(), 2);
}

#[test]
fn config_parses_from_json_and_rejects_unknown_fields() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/nuisance_moons.json")).unwrap();
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    assert_eq!(cfg.seeds, (1..=10).collect::<Vec<_>>());
    assert_eq!(cfg.graph.k, 10);
    let bad = text.replacen("\"seeds\"", "\"seedz\"", 1);
    assert!(ExperimentConfig::from_json(&bad).is_err());
    let empty = text.replace("[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]", "[]");
    assert!(ExperimentConfig::from_json(&empty).is_err());
}
