//! Analytic gradient of the validation loss vs central finite differences,
//! per parameter block, with a step-size sweep.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use graphmetric::data::{gen_two_moons, split_labels, TwoMoons};
use graphmetric::embed::{init_params, InitScheme, ModelKind};
use graphmetric::graph::{GraphConfig, SigmaMode};
use graphmetric::propagation::PropagationConfig;
use graphmetric::training::{gradcheck, Problem, Tolerance, DEFAULT_STEP};

fn main() -> graphmetric::Result<()> {
    let ds = gen_two_moons(
        &TwoMoons {
            n: 16,
            noise_sd: 0.2,
            nuisance_dims: 2,
            nuisance_sd: 1.0,
        },
        5,
    )?;
    let ds = split_labels(&ds, 4, 0.5, 5)?;
    let problem = Problem::from_dataset(&ds)?;
    let graph = GraphConfig::new(3, SigmaMode::MedianHeuristic);
    let prop = PropagationConfig::new(0.8, 5);

    for (kind, hidden) in [(ModelKind::Linear, None), (ModelKind::Mlp1, Some(3))] {
        let params = init_params(kind, ds.dim(), 2, hidden, InitScheme::Gaussian { scale: 0.5 }, 5)?;
        let rep = gradcheck(&params, &problem, &graph, &prop, DEFAULT_STEP, &[1e-4, 1e-5, 1e-6], &Tolerance::default())?;
        println!("{kind:?}: loss {:.6}, {}", rep.loss, if rep.pass { "PASS" } else { "FAIL" });
        for b in &rep.blocks {
            println!(
                "  {:<9} {:>3} coords  max abs err {:.2e}  max rel err {:.2e}",
                b.block, b.coords, b.max_abs_err, b.max_rel_err
            );
        }
        for row in &rep.sweep {
            println!("  h = {:.0e}: max abs err {:.2e}", row.h, row.max_abs_err);
        }
    }
    Ok(())
}
