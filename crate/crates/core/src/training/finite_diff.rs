//! Central finite differences and the analytic-vs-numeric gradient check.

use serde::Serialize;

use super::backward::{backward_with_fault, Fault};
use super::pipeline::{forward, forward_frozen, Problem};
use crate::embed::EmbeddingParams;
use crate::error::Result;
use crate::graph::GraphConfig;
use crate::propagation::PropagationConfig;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// `(f(θ + h e_k) - f(θ - h e_k)) / 2h` for every coordinate `k`.
pub fn central_differences(theta: &[f64], mut f: impl FnMut(&[f64]) -> f64, h: f64) -> Vec<f64> {
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            probe[k] = theta[k] + h;
            let up = f(&probe);
            probe[k] = theta[k] - h;
            let down = f(&probe);
            probe[k] = theta[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Finite-difference gradient of `loss` at `params`. The closure must be
/// deterministic; for the graph pipeline that means edges and σ² are frozen.
pub fn finite_diff_grad(
    params: &EmbeddingParams,
    mut loss: impl FnMut(&EmbeddingParams) -> Result<f64>,
    h: f64,
) -> Result<EmbeddingParams> {
    let theta = params.to_flat();
    let mut failure = None;
    let grad = central_differences(
        &theta,
        |probe| {
            let p = params.with_flat(probe).expect("same length");
            loss(&p).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        h,
    );
    match failure {
        Some(e) => Err(e),
        None => params.with_flat(&grad),
    }
}

/// Pass criterion for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    /// Maximum relative error for ordinary coordinates.
    pub rel: f64,
    /// Maximum absolute error for near-zero coordinates.
    pub abs: f64,
    /// Coordinates with `|analytic| <= tiny` are compared absolutely.
    pub tiny: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-4,
            abs: 1e-6,
            tiny: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn accepts(&self, analytic: f64, numeric: f64) -> bool {
        let err = (analytic - numeric).abs();
        if analytic.abs() <= self.tiny {
            err <= self.abs
        } else {
            err <= self.rel * analytic.abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub block: &'static str,
    pub coords: usize,
    pub failures: usize,
    pub max_abs_err: f64,
    /// Over coordinates compared relatively.
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Compares two gradients block by block.
pub fn compare_gradients(analytic: &EmbeddingParams, numeric: &EmbeddingParams, tol: &Tolerance) -> Vec<BlockReport> {
    let a = analytic.to_flat();
    let b = numeric.to_flat();
    let mut offset = 0;
    analytic
        .blocks()
        .into_iter()
        .map(|(block, size)| {
            let mut rep = BlockReport {
                block,
                coords: size,
                failures: 0,
                max_abs_err: 0.0,
                max_rel_err: 0.0,
                pass: true,
            };
            for k in offset..offset + size {
                let err = (a[k] - b[k]).abs();
                rep.max_abs_err = rep.max_abs_err.max(err);
                if a[k].abs() > tol.tiny {
                    rep.max_rel_err = rep.max_rel_err.max(err / a[k].abs());
                }
                if !tol.accepts(a[k], b[k]) {
                    rep.failures += 1;
                }
            }
            rep.pass = rep.failures == 0;
            offset += size;
            rep
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepSweepRow {
    pub h: f64,
    pub max_abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub h: f64,
    pub loss: f64,
    pub blocks: Vec<BlockReport>,
    /// Worst absolute error at each probed step size.
    pub sweep: Vec<StepSweepRow>,
    pub pass: bool,
}

/// Analytic gradient vs central differences at `params`, with edges and σ²
/// snapshotted from the unperturbed forward pass.
pub fn gradcheck(
    params: &EmbeddingParams,
    problem: &Problem,
    graph_cfg: &GraphConfig,
    prop_cfg: &PropagationConfig,
    h: f64,
    sweep: &[f64],
    tol: &Tolerance,
) -> Result<GradCheckReport> {
    gradcheck_with_fault(params, problem, graph_cfg, prop_cfg, h, sweep, tol, Fault::None)
}

#[doc(hidden)]
#[allow(clippy::too_many_arguments)]
pub fn gradcheck_with_fault(
    params: &EmbeddingParams,
    problem: &Problem,
    graph_cfg: &GraphConfig,
    prop_cfg: &PropagationConfig,
    h: f64,
    sweep: &[f64],
    tol: &Tolerance,
    fault: Fault,
) -> Result<GradCheckReport> {
    let fwd = forward(params, problem, graph_cfg, prop_cfg)?;
    let analytic = backward_with_fault(&fwd, problem, params, fault)?;
    let edges = fwd.graph.edges.clone();
    let sigma_sq = fwd.graph.sigma_sq;
    let frozen = |p: &EmbeddingParams| forward_frozen(p, problem, &edges, sigma_sq, prop_cfg).map(|f| f.loss);

    let numeric = finite_diff_grad(params, frozen, h)?;
    let blocks = compare_gradients(&analytic, &numeric, tol);
    let a = analytic.to_flat();
    let sweep = sweep
        .iter()
        .map(|&step| {
            let num = finite_diff_grad(params, frozen, step)?.to_flat();
            let max_abs_err = a.iter().zip(&num).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            Ok(StepSweepRow { h: step, max_abs_err })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = blocks.iter().all(|b| b.pass);
    Ok(GradCheckReport {
        h,
        loss: fwd.loss,
        blocks,
        sweep,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_derivative() {
        let g = central_differences(&[3.0], |t| t[0] * t[0], DEFAULT_STEP);
        assert!((g[0] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let g = central_differences(&[1.0, -2.0, 0.5], |_| 4.2, DEFAULT_STEP);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tolerance_switches_to_absolute_near_zero() {
        let tol = Tolerance::default();
        assert!(tol.accepts(1.0, 1.0 + 5e-5));
        assert!(!tol.accepts(1.0, 1.0 + 2e-4));
        assert!(tol.accepts(1e-9, 5e-7));
        assert!(!tol.accepts(1e-9, 2e-6));
    }
}
