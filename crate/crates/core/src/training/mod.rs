//! Learning the embedding: validation loss, analytic gradients, and the
//! full-batch gradient descent loop.

mod backward;
mod finite_diff;
mod pipeline;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use backward::{backward, representation_grad};
#[doc(hidden)]
pub use backward::{backward_with_fault, Fault};
pub use finite_diff::{
    central_differences, compare_gradients, finite_diff_grad, gradcheck, BlockReport, GradCheckReport, StepSweepRow,
    Tolerance, DEFAULT_STEP,
};
#[doc(hidden)]
pub use finite_diff::gradcheck_with_fault;
pub use pipeline::{forward, forward_frozen, loss_sq, loss_sq_grad, Forward, Problem};

use crate::data::Dataset;
use crate::embed::{init_params, EmbeddingParams, InitScheme, ModelKind};
use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::propagation::PropagationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub d_prime: usize,
    /// Hidden width, Mlp1 only.
    #[serde(default)]
    pub hidden: Option<usize>,
    #[serde(default)]
    pub init: InitScheme,
}

impl ModelConfig {
    pub fn linear(d_prime: usize, init: InitScheme) -> Self {
        ModelConfig {
            kind: ModelKind::Linear,
            d_prime,
            hidden: None,
            init,
        }
    }

    pub fn mlp1(d_prime: usize, hidden: usize, init: InitScheme) -> Self {
        ModelConfig {
            kind: ModelKind::Mlp1,
            d_prime,
            hidden: Some(hidden),
            init,
        }
    }

    pub fn init(&self, d: usize, seed: u64) -> Result<EmbeddingParams> {
        init_params(self.kind, d, self.d_prime, self.hidden, self.init, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub graph: GraphConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    pub model: ModelConfig,
    /// Seeds the parameter initialization.
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidConfig(format!("lr must be finite and >= 0, got {}", self.lr)));
        }
        self.graph.validate(n)?;
        self.propagation.validate()
    }
}

/// `θ - lr · grad` on every block.
pub fn sgd_step(params: &EmbeddingParams, grad: &EmbeddingParams, lr: f64) -> Result<EmbeddingParams> {
    if params.blocks() != grad.blocks() || params.w_out.shape() != grad.w_out.shape() {
        return Err(Error::Dimension("gradient shape does not match parameters".into()));
    }
    let g = grad.to_flat();
    let mut k = 0;
    Ok(params.map(|v| {
        let out = v - lr * g[k];
        k += 1;
        out
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_accuracy: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn epochs_run(&self) -> usize {
        self.records.len()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Trains from the initialization described by `cfg.model`.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(EmbeddingParams, TrainHistory)> {
    let init = cfg.model.init(dataset.dim(), cfg.seed)?;
    train_from(dataset, cfg, init)
}

/// Full-batch gradient descent from `init`. Each epoch rebuilds the graph
/// from the current embedding, so neighbor sets may change between epochs.
/// Returns the parameters with the best validation accuracy (earliest on ties).
pub fn train_from(dataset: &Dataset, cfg: &TrainConfig, init: EmbeddingParams) -> Result<(EmbeddingParams, TrainHistory)> {
    let problem = Problem::from_dataset(dataset)?;
    cfg.validate(problem.len())?;
    init.validate()?;

    let mut params = init;
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, EmbeddingParams)> = None;
    let mut last_grad_norm = 0.0;
    for epoch in 0..cfg.epochs {
        // The config was validated up front, so a forward failure after the
        // first step comes from the updated parameters (e.g. overflowing
        // distances) and is reported as divergence.
        let fwd = match forward(&params, &problem, &cfg.graph, &cfg.propagation) {
            Ok(fwd) => fwd,
            Err(_) if epoch > 0 => {
                return Err(Error::Diverged {
                    epoch,
                    grad_norm: last_grad_norm,
                })
            }
            Err(e) => return Err(e),
        };
        let grad = backward(&fwd, &problem, &params)?;
        let grad_norm = grad.norm();
        last_grad_norm = grad_norm;
        if !fwd.loss.is_finite() || !grad_norm.is_finite() {
            return Err(Error::Diverged { epoch, grad_norm });
        }
        let val_accuracy = fwd.val_accuracy(&problem);
        history.records.push(EpochRecord {
            epoch,
            loss: fwd.loss,
            val_accuracy,
            grad_norm,
        });
        if best.as_ref().is_none_or(|(acc, _)| val_accuracy > *acc) {
            best = Some((val_accuracy, params.clone()));
            history.best_epoch = epoch;
        }
        params = sgd_step(&params, &grad, cfg.lr)?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch, grad_norm });
        }
    }
    let (_, best_params) = best.expect("at least one epoch");
    Ok((best_params, history))
}

/// Scores of a fixed model on a split dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Accuracy over unlabeled points with a hidden label; abstentions are errors.
    pub test_accuracy: f64,
    /// Abstentions among the scored test points.
    pub abstain_count: usize,
    pub val_accuracy: f64,
    pub loss: f64,
}

pub fn evaluate(
    params: &EmbeddingParams,
    dataset: &Dataset,
    graph_cfg: &GraphConfig,
    prop_cfg: &PropagationConfig,
) -> Result<Evaluation> {
    let problem = Problem::from_dataset(dataset)?;
    let fwd = forward(params, &problem, graph_cfg, prop_cfg)?;
    let pred = fwd.prediction();
    let test = dataset.scored_test_indices();
    Ok(Evaluation {
        test_accuracy: pred.accuracy(&test, |i| dataset.labels[i].expect("scored points are labeled")),
        abstain_count: test.iter().filter(|&&i| pred.abstain[i]).count(),
        val_accuracy: fwd.val_accuracy(&problem),
        loss: fwd.loss,
    })
}
