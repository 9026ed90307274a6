//! Reverse-mode gradient of the validation loss with respect to the
//! embedding parameters.
//!
//! The chain runs propagation → normalization → kernel → distances →
//! embedding. The edge set and σ² of the forward pass are held constant;
//! gradients reach the parameters only through the weights of retained edges.

use nalgebra::DMatrix;

use super::pipeline::{loss_sq_grad, Forward, Problem};
use crate::embed::EmbeddingParams;
use crate::error::{Error, Result};

/// Deliberate defects for mutation-testing the gradient checker.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Flips the sign of the kernel derivative `∂w/∂D`.
    FlipKernelSign,
}

/// Gradient of `fwd.loss` with respect to `params`.
pub fn backward(fwd: &Forward, problem: &Problem, params: &EmbeddingParams) -> Result<EmbeddingParams> {
    backward_with_fault(fwd, problem, params, Fault::None)
}

#[doc(hidden)]
pub fn backward_with_fault(
    fwd: &Forward,
    problem: &Problem,
    params: &EmbeddingParams,
    fault: Fault,
) -> Result<EmbeddingParams> {
    let dz = representation_grad(fwd, problem, fault)?;
    param_grad(&dz, fwd, problem, params)
}

/// `∂L/∂Z`, an `n × d'` matrix.
pub fn representation_grad(fwd: &Forward, problem: &Problem, fault: Fault) -> Result<DMatrix<f64>> {
    let n = problem.len();
    let states = &fwd.trajectory.states;
    let alpha = fwd.trajectory.alpha;
    let steps = fwd.trajectory.steps();
    let graph = &fwd.graph;
    let op = &fwd.operator;
    let z = &fwd.embedded.z;
    let c = problem.classes;
    if states.iter().any(|s| s.shape() != (n, c)) || graph.n != n || op.n != n || z.nrows() != n {
        return Err(Error::Internal("forward quantities disagree on problem size".into()));
    }
    if graph.edges.len() != graph.weights.len() || graph.degrees.len() != n {
        return Err(Error::Internal("graph edge and weight arrays disagree".into()));
    }

    let mut g = loss_sq_grad(&states[steps], &problem.targets);

    // B_e = A_ij + A_ji per edge, with A = ∂L/∂S accumulated over the
    // unrolled iterations. Only stored entries of S matter.
    let live: Vec<bool> = graph
        .edges
        .iter()
        .map(|&(i, j)| !(op.isolated[i] || op.isolated[j]))
        .collect();
    let mut b = vec![0.0; graph.edges.len()];
    for t in (1..=steps).rev() {
        let prev = &states[t - 1];
        for (e, &(i, j)) in graph.edges.iter().enumerate() {
            if !live[e] {
                continue;
            }
            let mut acc = 0.0;
            for col in 0..c {
                acc += g[(i, col)] * prev[(j, col)] + g[(j, col)] * prev[(i, col)];
            }
            b[e] += alpha * acc;
        }
        let mut next = op.apply(&g);
        next *= alpha;
        g = next;
    }

    // Per-node r_i = Σ_q B_iq S_iq.
    let mut r = vec![0.0; n];
    for (e, &(i, j)) in graph.edges.iter().enumerate() {
        if live[e] {
            let s = graph.weights[e] / (graph.degrees[i] * graph.degrees[j]).sqrt();
            r[i] += b[e] * s;
            r[j] += b[e] * s;
        }
    }

    let kernel_sign = match fault {
        Fault::None => -1.0,
        Fault::FlipKernelSign => 1.0,
    };
    let d_prime = z.ncols();
    let mut dz = DMatrix::zeros(n, d_prime);
    for (e, &(i, j)) in graph.edges.iter().enumerate() {
        if !live[e] {
            continue;
        }
        let (gi, gj) = (graph.degrees[i], graph.degrees[j]);
        let dw = b[e] / (gi * gj).sqrt() - r[i] / (2.0 * gi) - r[j] / (2.0 * gj);
        let dd = kernel_sign * graph.weights[e] / graph.sigma_sq * dw;
        for k in 0..d_prime {
            let diff = 2.0 * dd * (z[(i, k)] - z[(j, k)]);
            dz[(i, k)] += diff;
            dz[(j, k)] -= diff;
        }
    }
    Ok(dz)
}

fn param_grad(dz: &DMatrix<f64>, fwd: &Forward, problem: &Problem, params: &EmbeddingParams) -> Result<EmbeddingParams> {
    let x = &problem.x;
    match (&params.hidden, &fwd.embedded.hidden) {
        (None, None) => Ok(EmbeddingParams {
            w_out: dz.transpose() * x,
            hidden: None,
        }),
        (Some(layer), Some(h)) => {
            let w_out = dz.transpose() * h;
            let mut delta = dz * &params.w_out;
            delta.zip_apply(h, |dv, hv| *dv *= 1.0 - hv * hv);
            let weights = delta.transpose() * x;
            let bias = delta.row_sum().transpose();
            debug_assert_eq!(weights.shape(), layer.weights.shape());
            Ok(EmbeddingParams {
                w_out,
                hidden: Some(crate::embed::HiddenLayer { weights, bias }),
            })
        }
        _ => Err(Error::Internal("forward activations do not match the model kind".into())),
    }
}
