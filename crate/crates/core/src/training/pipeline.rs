//! Forward evaluation of the full pipeline: embed, build graph, normalize,
//! propagate, score.

use nalgebra::DMatrix;

use crate::data::{Dataset, Role};
use crate::embed::{embed_forward, EmbedOutput, EmbeddingParams};
use crate::error::{Error, Result};
use crate::graph::{gaussian_weights, knn_edges, pairwise_sq_dists, resolve_sigma, sym_normalize, Graph, GraphConfig, NormalizedOperator};
use crate::propagation::{predict, propagate_iterative, seed_matrix, Prediction, PropagationConfig, Trajectory};

/// The supervision a pipeline run needs, extracted from a split dataset.
#[derive(Debug, Clone)]
pub struct Problem {
    pub x: DMatrix<f64>,
    pub classes: usize,
    /// One-hot seed rows, zero elsewhere.
    pub y0: DMatrix<f64>,
    /// `(index, class)` of every validation point.
    pub targets: Vec<(usize, usize)>,
}

impl Problem {
    pub fn new(x: DMatrix<f64>, classes: usize, seeds: &[(usize, usize)], targets: Vec<(usize, usize)>) -> Result<Self> {
        let y0 = seed_matrix(x.nrows(), classes, seeds.iter().copied())?;
        if targets.is_empty() {
            return Err(Error::InvalidConfig("validation set is empty".into()));
        }
        for &(i, c) in &targets {
            if i >= x.nrows() || c >= classes {
                return Err(Error::Dimension(format!("target ({i}, {c}) out of range")));
            }
            if y0.row(i).iter().any(|&v| v != 0.0) {
                return Err(Error::InvalidConfig(format!("point {i} is both a seed and a validation target")));
            }
        }
        Ok(Problem {
            x,
            classes,
            y0,
            targets,
        })
    }

    /// Requires at least one seed and one validation point per class.
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        ds.validate()?;
        let c = ds.classes();
        if c < 2 {
            return Err(Error::InvalidConfig(format!("need labeled points in at least 2 classes, got {c}")));
        }
        let seeds = ds.seeds();
        let targets: Vec<(usize, usize)> = ds
            .indices_with_role(Role::Validation)
            .into_iter()
            .map(|i| (i, ds.labels[i].expect("validated")))
            .collect();
        for class in 0..c {
            if !targets.iter().any(|&(_, t)| t == class) {
                return Err(Error::InvalidConfig(format!(
                    "class `{}` has no validation point",
                    ds.class_names[class]
                )));
            }
        }
        Problem::new(ds.x.clone(), c, &seeds, targets)
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Everything computed by one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub embedded: EmbedOutput,
    pub dists: DMatrix<f64>,
    pub graph: Graph,
    pub operator: NormalizedOperator,
    pub trajectory: Trajectory,
    pub loss: f64,
}

impl Forward {
    pub fn scores(&self) -> &DMatrix<f64> {
        self.trajectory.final_scores()
    }

    pub fn prediction(&self) -> Prediction {
        predict(self.scores())
    }

    /// Fraction of validation targets predicted correctly.
    pub fn val_accuracy(&self, problem: &Problem) -> f64 {
        let pred = self.prediction();
        let correct = problem
            .targets
            .iter()
            .filter(|&&(i, c)| !pred.abstain[i] && pred.labels[i] == c)
            .count();
        correct as f64 / problem.targets.len() as f64
    }
}

/// `(1/|V|) Σ_{i∈V} ||F_i - Y_i||²` with `Y_i` one-hot.
pub fn loss_sq(f: &DMatrix<f64>, targets: &[(usize, usize)]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::InvalidConfig("validation set is empty".into()));
    }
    let mut total = 0.0;
    for &(i, class) in targets {
        if i >= f.nrows() || class >= f.ncols() {
            return Err(Error::Dimension(format!("target ({i}, {class}) outside score matrix")));
        }
        for c in 0..f.ncols() {
            let y = if c == class { 1.0 } else { 0.0 };
            total += (f[(i, c)] - y).powi(2);
        }
    }
    Ok(total / targets.len() as f64)
}

/// `∂L/∂F` of [`loss_sq`]: `(2/|V|)(F_i - Y_i)` on validation rows, zero elsewhere.
pub fn loss_sq_grad(f: &DMatrix<f64>, targets: &[(usize, usize)]) -> DMatrix<f64> {
    let c = f.ncols();
    let scale = 2.0 / targets.len() as f64;
    let mut g = DMatrix::zeros(f.nrows(), c);
    for &(i, class) in targets {
        for col in 0..c {
            let y = if col == class { 1.0 } else { 0.0 };
            g[(i, col)] = scale * (f[(i, col)] - y);
        }
    }
    g
}

/// Forward pass that selects edges and σ² from the current embedding.
pub fn forward(
    params: &EmbeddingParams,
    problem: &Problem,
    graph_cfg: &GraphConfig,
    prop_cfg: &PropagationConfig,
) -> Result<Forward> {
    graph_cfg.validate(problem.len())?;
    let embedded = embed_forward(params, &problem.x)?;
    let dists = pairwise_sq_dists(&embedded.z)?;
    let edges = knn_edges(&dists, graph_cfg.k)?;
    let sigma_sq = resolve_sigma(&dists, &edges, graph_cfg.sigma)?;
    finish(embedded, dists, &edges, sigma_sq, problem, prop_cfg)
}

/// Forward pass with a fixed edge set and σ², as used when differentiating.
pub fn forward_frozen(
    params: &EmbeddingParams,
    problem: &Problem,
    edges: &[(usize, usize)],
    sigma_sq: f64,
    prop_cfg: &PropagationConfig,
) -> Result<Forward> {
    let embedded = embed_forward(params, &problem.x)?;
    let dists = pairwise_sq_dists(&embedded.z)?;
    finish(embedded, dists, edges, sigma_sq, problem, prop_cfg)
}

fn finish(
    embedded: EmbedOutput,
    dists: DMatrix<f64>,
    edges: &[(usize, usize)],
    sigma_sq: f64,
    problem: &Problem,
    prop_cfg: &PropagationConfig,
) -> Result<Forward> {
    let graph = gaussian_weights(&dists, edges, sigma_sq)?;
    let operator = sym_normalize(&graph);
    let trajectory = propagate_iterative(&operator, &problem.y0, prop_cfg)?;
    let loss = loss_sq(trajectory.final_scores(), &problem.targets)?;
    Ok(Forward {
        embedded,
        dists,
        graph,
        operator,
        trajectory,
        loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_examples() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(loss_sq(&f, &[(0, 0), (1, 1)]).unwrap(), 0.0);
        let f = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        assert_eq!(loss_sq(&f, &[(0, 0)]).unwrap(), 1.0);
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(loss_sq(&f, &[(0, 0), (1, 1)]).unwrap(), 0.5);
        assert!(matches!(loss_sq(&f, &[]), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn problem_rejects_overlapping_roles() {
        let x = DMatrix::zeros(3, 2);
        assert!(Problem::new(x.clone(), 2, &[(0, 0)], vec![(0, 0)]).is_err());
        assert!(Problem::new(x.clone(), 2, &[(0, 0)], vec![]).is_err());
        assert!(Problem::new(x, 2, &[(0, 0)], vec![(1, 1)]).is_ok());
    }
}
