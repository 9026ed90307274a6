//! Damped label propagation `F^t = α S F^{t-1} + (1 - α) Y0` over a
//! normalized operator, with a dense closed-form solve used as an oracle.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedOperator;

/// Default size cap for [`propagate_closed_form`].
pub const DENSE_SOLVE_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    pub alpha: f64,
    /// Number of iterations T.
    pub steps: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig { alpha: 0.9, steps: 30 }
    }
}

impl PropagationConfig {
    pub fn new(alpha: f64, steps: usize) -> Self {
        PropagationConfig { alpha, steps }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha must be in [0, 1), got {}", self.alpha)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("propagation needs at least one step".into()));
        }
        Ok(())
    }
}

/// One-hot seed matrix: row `i` is `e_{class}` for each `(i, class)` seed,
/// zero elsewhere.
pub fn seed_matrix(n: usize, classes: usize, seeds: impl IntoIterator<Item = (usize, usize)>) -> Result<DMatrix<f64>> {
    if classes < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 classes, got {classes}")));
    }
    let mut y0 = DMatrix::zeros(n, classes);
    for (i, c) in seeds {
        if i >= n || c >= classes {
            return Err(Error::Dimension(format!("seed ({i}, {c}) outside {n} x {classes}")));
        }
        y0[(i, c)] = 1.0;
    }
    Ok(y0)
}

/// All iterates `F^0 ..= F^T` of one propagation run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub alpha: f64,
    pub states: Vec<DMatrix<f64>>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_scores(&self) -> &DMatrix<f64> {
        self.states.last().expect("trajectory always holds F^0")
    }

    pub fn into_final(mut self) -> DMatrix<f64> {
        self.states.pop().expect("trajectory always holds F^0")
    }
}

/// Runs `cfg.steps` propagation iterations from `F^0 = Y0`, keeping every iterate.
pub fn propagate_iterative(s: &NormalizedOperator, y0: &DMatrix<f64>, cfg: &PropagationConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if y0.nrows() != s.n {
        return Err(Error::Dimension(format!(
            "label matrix has {} rows, operator has {} nodes",
            y0.nrows(),
            s.n
        )));
    }
    let alpha = cfg.alpha;
    let injected = y0 * (1.0 - alpha);
    let mut states = Vec::with_capacity(cfg.steps + 1);
    states.push(y0.clone());
    for _ in 0..cfg.steps {
        let prev = states.last().expect("non-empty");
        let mut next = s.apply(prev);
        next *= alpha;
        next += &injected;
        states.push(next);
    }
    Ok(Trajectory { alpha, states })
}

/// Solves `(I - αS) F = (1 - α) Y0` densely. Fails with a capacity error
/// above [`DENSE_SOLVE_CAP`] nodes.
pub fn propagate_closed_form(s: &NormalizedOperator, y0: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    propagate_closed_form_capped(s, y0, alpha, DENSE_SOLVE_CAP)
}

pub fn propagate_closed_form_capped(
    s: &NormalizedOperator,
    y0: &DMatrix<f64>,
    alpha: f64,
    cap: usize,
) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha must be in [0, 1), got {alpha}")));
    }
    if s.n > cap {
        return Err(Error::Capacity { n: s.n, cap });
    }
    if y0.nrows() != s.n {
        return Err(Error::Dimension(format!(
            "label matrix has {} rows, operator has {} nodes",
            y0.nrows(),
            s.n
        )));
    }
    let system = DMatrix::identity(s.n, s.n) - s.to_dense() * alpha;
    system
        .lu()
        .solve(&(y0 * (1.0 - alpha)))
        .ok_or_else(|| Error::Internal("propagation system is singular".into()))
}

/// Argmax readout of label scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    /// Rows with no propagated mass at all.
    pub abstain: Vec<bool>,
}

impl Prediction {
    pub fn abstain_count(&self) -> usize {
        self.abstain.iter().filter(|&&a| a).count()
    }

    /// Fraction of `indices` whose prediction equals the given truth.
    /// Abstentions count as errors.
    pub fn accuracy(&self, indices: &[usize], truth: impl Fn(usize) -> usize) -> f64 {
        if indices.is_empty() {
            return 0.0;
        }
        let correct = indices
            .iter()
            .filter(|&&i| !self.abstain[i] && self.labels[i] == truth(i))
            .count();
        correct as f64 / indices.len() as f64
    }
}

/// Per-row argmax with ties to the smaller class index. All-zero rows are
/// labeled 0 and flagged as abstaining.
pub fn predict(f: &DMatrix<f64>) -> Prediction {
    let mut labels = Vec::with_capacity(f.nrows());
    let mut abstain = Vec::with_capacity(f.nrows());
    for row in f.row_iter() {
        let mut best = 0;
        for c in 1..row.len() {
            if row[c] > row[best] {
                best = c;
            }
        }
        labels.push(best);
        abstain.push(row.iter().all(|&v| v == 0.0));
    }
    Prediction { labels, abstain }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sym_normalize, Graph};

    fn pair() -> NormalizedOperator {
        sym_normalize(&Graph {
            n: 2,
            edges: vec![(0, 1)],
            weights: vec![1.0],
            sigma_sq: 1.0,
            degrees: vec![1.0, 1.0],
        })
    }

    #[test]
    fn alpha_zero_returns_seeds() {
        let s = pair();
        let y0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let t = propagate_iterative(&s, &y0, &PropagationConfig::new(0.0, 7)).unwrap();
        assert_eq!(t.final_scores(), &y0);
        assert_eq!(t.steps(), 7);
        assert_eq!(propagate_closed_form(&s, &y0, 0.0).unwrap(), y0);
    }

    #[test]
    fn one_hand_iteration() {
        let y0 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let t = propagate_iterative(&pair(), &y0, &PropagationConfig::new(0.5, 1)).unwrap();
        assert_eq!(t.final_scores().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn long_run_reaches_closed_form() {
        let y0 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let f = propagate_iterative(&pair(), &y0, &PropagationConfig::new(0.5, 200))
            .unwrap()
            .into_final();
        assert!((f[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((f[1] - 1.0 / 3.0).abs() < 1e-14);
        let star = propagate_closed_form(&pair(), &y0, 0.5).unwrap();
        assert!((star[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((star[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_rejects_large_and_bad_alpha() {
        let y0 = DMatrix::zeros(2, 2);
        assert!(matches!(
            propagate_closed_form_capped(&pair(), &y0, 0.5, 1),
            Err(Error::Capacity { n: 2, cap: 1 })
        ));
        assert!(propagate_closed_form(&pair(), &y0, 1.0).is_err());
        assert!(PropagationConfig::new(1.0, 3).validate().is_err());
        assert!(PropagationConfig::new(0.5, 0).validate().is_err());
    }

    #[test]
    fn predict_rules() {
        let f = DMatrix::from_row_slice(3, 2, &[0.2, 0.7, 0.5, 0.5, 0.0, 0.0]);
        let p = predict(&f);
        assert_eq!(p.labels, vec![1, 0, 0]);
        assert_eq!(p.abstain, vec![false, false, true]);
        assert_eq!(p.abstain_count(), 1);
        assert_eq!(p.accuracy(&[0, 1, 2], |_| 0), 1.0 / 3.0);
    }

    #[test]
    fn seed_matrix_shape_checks() {
        let y = seed_matrix(3, 2, [(0, 1), (2, 0)]).unwrap();
        assert_eq!(y, DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]));
        assert!(seed_matrix(3, 2, [(3, 0)]).is_err());
        assert!(seed_matrix(3, 1, []).is_err());
    }
}
