//! Seeded experiments: dataset generation, euclidean baseline, training runs
//! and gradient checks, driven by one JSON config file.
//!
//! For every seed `s` the dataset generator, the label split and the
//! parameter initialization are all seeded with `s`. A CSV dataset is loaded
//! once and only re-split per seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{self, Blobs, Dataset, TwoMoons};
use crate::embed::{init_params, save_params, InitScheme, ModelKind};
use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::propagation::PropagationConfig;
use crate::training::{self, evaluate, GradCheckReport, ModelConfig, Problem, Tolerance, TrainConfig, DEFAULT_STEP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    TwoMoons(TwoMoons),
    Blobs(Blobs),
    Csv(PathBuf),
}

impl DatasetSpec {
    /// Generated datasets depend on `seed`; CSV datasets ignore it.
    pub fn materialize(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::TwoMoons(spec) => data::gen_two_moons(spec, seed),
            DatasetSpec::Blobs(spec) => data::gen_blobs(spec, seed),
            DatasetSpec::Csv(path) => data::load_csv(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub labeled_per_class: usize,
    pub val_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub epochs: usize,
    pub lr: f64,
    pub model: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub split: SplitConfig,
    pub graph: GraphConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    pub train: TrainSettings,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks what can be checked without materializing the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list is empty".into()));
        }
        if self.graph.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        self.graph.validate(usize::MAX)?;
        self.propagation.validate()?;
        if self.train.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.train.lr.is_finite() && self.train.lr >= 0.0) {
            return Err(Error::InvalidConfig(format!("lr must be finite and >= 0, got {}", self.train.lr)));
        }
        if !(self.split.val_fraction > 0.0 && self.split.val_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "val_fraction must be in (0, 1), got {}",
                self.split.val_fraction
            )));
        }
        Ok(())
    }

    /// Seeds in increasing order without duplicates.
    pub fn sorted_seeds(&self) -> Vec<u64> {
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            lr: self.train.lr,
            graph: self.graph,
            propagation: self.propagation,
            model: self.train.model,
            seed,
        }
    }

    /// Dataset for `seed` with roles assigned.
    pub fn split_dataset(&self, seed: u64) -> Result<Dataset> {
        let ds = self.dataset.materialize(seed)?;
        self.split_loaded(&ds, seed)
    }

    fn split_loaded(&self, ds: &Dataset, seed: u64) -> Result<Dataset> {
        let split = data::split_labels(ds, self.split.labeled_per_class, self.split.val_fraction, seed)?;
        self.graph.validate(split.len())?;
        Ok(split)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRow {
    pub seed: u64,
    pub baseline_accuracy: f64,
    pub learned_accuracy: Option<f64>,
    /// Abstentions of the reported model (learned if trained, else baseline).
    pub abstain_count: usize,
    pub epochs_run: Option<usize>,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub seeds: usize,
    pub baseline_median: f64,
    pub baseline_mean: f64,
    pub learned_median: Option<f64>,
    pub learned_mean: Option<f64>,
    /// Median over seeds of `learned - baseline`.
    pub improvement_median: Option<f64>,
    pub improvement_mean: Option<f64>,
    /// Seeds where learned accuracy is strictly above baseline.
    pub wins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub command: String,
    pub rows: Vec<SeedRow>,
    pub aggregate: Aggregate,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

impl Aggregate {
    pub fn from_rows(rows: &[SeedRow]) -> Self {
        let base: Vec<f64> = rows.iter().map(|r| r.baseline_accuracy).collect();
        let learned: Option<Vec<f64>> = rows.iter().map(|r| r.learned_accuracy).collect();
        let learned = learned.filter(|l| !l.is_empty());
        let improvements = learned
            .as_ref()
            .map(|l| l.iter().zip(&base).map(|(a, b)| a - b).collect::<Vec<_>>());
        Aggregate {
            seeds: rows.len(),
            baseline_median: median(&base),
            baseline_mean: mean(&base),
            learned_median: learned.as_deref().map(median),
            learned_mean: learned.as_deref().map(mean),
            improvement_median: improvements.as_deref().map(median),
            improvement_mean: improvements.as_deref().map(mean),
            wins: improvements.as_ref().map(|v| v.iter().filter(|&&d| d > 0.0).count()),
        }
    }
}

impl Report {
    pub fn new(command: &str, mut rows: Vec<SeedRow>) -> Self {
        rows.sort_by_key(|r| r.seed);
        let aggregate = Aggregate::from_rows(&rows);
        Report {
            command: command.to_string(),
            rows,
            aggregate,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("report.json");
        fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub dataset: DatasetSpec,
    pub seed: u64,
}

/// Writes `dataset_seed{s}.csv` and its `dataset_seed{s}.json` sidecar for
/// every seed. Returns the CSV paths.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    if matches!(cfg.dataset, DatasetSpec::Csv(_)) {
        return Err(Error::InvalidConfig("generate needs a generator dataset, not a CSV path".into()));
    }
    ensure_dir(out)?;
    let mut paths = Vec::new();
    for seed in cfg.sorted_seeds() {
        let ds = cfg.dataset.materialize(seed)?;
        let csv = out.join(format!("dataset_seed{seed}.csv"));
        data::save_csv(&ds, &csv)?;
        let sidecar = Sidecar {
            dataset: cfg.dataset.clone(),
            seed,
        };
        let side = out.join(format!("dataset_seed{seed}.json"));
        let text = serde_json::to_string_pretty(&sidecar)? + "\n";
        fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
        paths.push(csv);
    }
    Ok(paths)
}

/// Rebuilds the dataset described by a sidecar file.
pub fn regenerate_from_sidecar(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let side: Sidecar = serde_json::from_str(&text)?;
    side.dataset.materialize(side.seed)
}

fn baseline_eval(cfg: &ExperimentConfig, ds: &Dataset) -> Result<training::Evaluation> {
    let identity = init_params(ModelKind::Linear, ds.dim(), ds.dim(), None, InitScheme::IdentityPad, 0)?;
    evaluate(&identity, ds, &cfg.graph, &cfg.propagation)
}

fn for_each_seed<T>(cfg: &ExperimentConfig, mut f: impl FnMut(u64, &Dataset) -> Result<T>) -> Result<Vec<T>> {
    cfg.validate()?;
    let loaded = match &cfg.dataset {
        DatasetSpec::Csv(_) => Some(cfg.dataset.materialize(0)?),
        _ => None,
    };
    cfg.sorted_seeds()
        .into_iter()
        .map(|seed| {
            let ds = match &loaded {
                Some(ds) => cfg.split_loaded(ds, seed)?,
                None => cfg.split_dataset(seed)?,
            };
            f(seed, &ds)
        })
        .collect()
}

/// Untrained euclidean graph (identity embedding) on every seed.
pub fn run_baseline(cfg: &ExperimentConfig) -> Result<Report> {
    let rows = for_each_seed(cfg, |seed, ds| {
        let eval = baseline_eval(cfg, ds)?;
        Ok(SeedRow {
            seed,
            baseline_accuracy: eval.test_accuracy,
            learned_accuracy: None,
            abstain_count: eval.abstain_count,
            epochs_run: None,
            best_epoch: None,
        })
    })?;
    Ok(Report::new("baseline", rows))
}

pub fn cmd_baseline(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let report = run_baseline(cfg)?;
    ensure_dir(out)?;
    report.write(out)?;
    Ok(report)
}

/// Trains on every seed and scores the selected model against the baseline.
/// With an output directory, writes `model_seed{s}.json` and
/// `history_seed{s}.jsonl` per seed.
pub fn run_train(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Report> {
    if let Some(dir) = out {
        ensure_dir(dir)?;
    }
    let rows = for_each_seed(cfg, |seed, ds| {
        let base = baseline_eval(cfg, ds)?;
        let tcfg = cfg.train_config(seed);
        let (params, history) = training::train(ds, &tcfg)?;
        let learned = evaluate(&params, ds, &cfg.graph, &cfg.propagation)?;
        if let Some(dir) = out {
            save_params(&params, dir.join(format!("model_seed{seed}.json")))?;
            history.write_jsonl(dir.join(format!("history_seed{seed}.jsonl")))?;
        }
        Ok(SeedRow {
            seed,
            baseline_accuracy: base.test_accuracy,
            learned_accuracy: Some(learned.test_accuracy),
            abstain_count: learned.abstain_count,
            epochs_run: Some(history.epochs_run()),
            best_epoch: Some(history.best_epoch),
        })
    })?;
    Ok(Report::new("train", rows))
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let report = run_train(cfg, Some(out))?;
    report.write(out)?;
    Ok(report)
}

/// Step sizes reported by [`cmd_gradcheck`] alongside the main check.
pub const GRADCHECK_SWEEP: [f64; 3] = [1e-4, 1e-5, 1e-6];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckRow {
    pub seed: u64,
    pub report: GradCheckReport,
}

/// Gradient check at the initial parameters of every seed.
pub fn run_gradcheck(cfg: &ExperimentConfig) -> Result<Vec<GradCheckRow>> {
    for_each_seed(cfg, |seed, ds| {
        let problem = Problem::from_dataset(ds)?;
        let params = cfg.train.model.init(ds.dim(), seed)?;
        let report = training::gradcheck(
            &params,
            &problem,
            &cfg.graph,
            &cfg.propagation,
            DEFAULT_STEP,
            &GRADCHECK_SWEEP,
            &Tolerance::default(),
        )?;
        Ok(GradCheckRow { seed, report })
    })
}

/// Writes `gradcheck.json`; fails with a numerical error if any block fails.
pub fn cmd_gradcheck(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<GradCheckRow>> {
    let rows = run_gradcheck(cfg)?;
    ensure_dir(out)?;
    let path = out.join("gradcheck.json");
    fs::write(&path, serde_json::to_string_pretty(&rows)? + "\n").map_err(|e| Error::io(&path, e))?;
    let failed: Vec<String> = rows
        .iter()
        .flat_map(|r| {
            r.report
                .blocks
                .iter()
                .filter(|b| !b.pass)
                .map(move |b| format!("seed {} block {}", r.seed, b.block))
        })
        .collect();
    if failed.is_empty() {
        Ok(rows)
    } else {
        Err(Error::GradCheck(failed.join(", ")))
    }
}
