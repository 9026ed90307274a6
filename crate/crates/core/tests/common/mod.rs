#![allow(dead_code)]

use graphmetric::embed::{init_params, EmbeddingParams, InitScheme, ModelKind};
use graphmetric::graph::{GraphConfig, SigmaMode};
use graphmetric::propagation::PropagationConfig;
use graphmetric::training::Problem;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = random_matrix(n, n, rng);
    let mut q: DMatrix<f64> = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut v = a.column(j).clone_owned();
        for k in 0..j {
            let proj = q.column(k).dot(&v);
            v -= q.column(k) * proj;
        }
        let norm = v.norm();
        q.set_column(j, &(v / norm));
    }
    q
}

/// The small gradient-check family: n = 12, d = 4, d' = 2, k = 3, T = 5,
/// α = 0.8, two classes with 2 seeds and 3 validation points each.
pub struct SmallInstance {
    pub problem: Problem,
    pub params: EmbeddingParams,
    pub graph: GraphConfig,
    pub prop: PropagationConfig,
}

pub fn small_instance(seed: u64, kind: ModelKind) -> SmallInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let n = 12;
    let x = random_matrix(n, 4, &mut rng);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    let seeds = vec![(idx[0], 0), (idx[1], 0), (idx[2], 1), (idx[3], 1)];
    let targets = vec![(idx[4], 0), (idx[5], 0), (idx[6], 0), (idx[7], 1), (idx[8], 1), (idx[9], 1)];
    let problem = Problem::new(x, 2, &seeds, targets).unwrap();
    let hidden = match kind {
        ModelKind::Linear => None,
        ModelKind::Mlp1 => Some(3),
    };
    let params = init_params(kind, 4, 2, hidden, InitScheme::Gaussian { scale: 0.7 }, seed).unwrap();
    SmallInstance {
        problem,
        params,
        graph: GraphConfig::new(3, SigmaMode::MedianHeuristic),
        prop: PropagationConfig::new(0.8, 5),
    }
}

/// Random weighted graph on `n` nodes built from random points.
pub fn random_points(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_matrix(n, d, &mut rng)
}

/// Ten uniform points in `[-1, 1]²`, one seed and two validation targets
/// per class, fixed σ = 1. For this draw the frozen-graph loss has an
/// interior minimum that plain gradient descent reaches.
pub fn stationary_instance() -> SmallInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = DMatrix::from_fn(10, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let problem = Problem::new(x, 2, &[(0, 0), (1, 1)], vec![(2, 0), (3, 1), (4, 0), (5, 1)]).unwrap();
    let params = init_params(ModelKind::Linear, 2, 2, None, InitScheme::Gaussian { scale: 0.5 }, 0).unwrap();
    SmallInstance {
        problem,
        params,
        graph: GraphConfig::new(4, SigmaMode::Fixed(1.0)),
        prop: PropagationConfig::new(0.8, 5),
    }
}
