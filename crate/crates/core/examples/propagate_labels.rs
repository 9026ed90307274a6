//! Label propagation on a fixed Euclidean graph: iterative vs closed form.
//!
//! ```bash
//! cargo run --example propagate_labels
//! ```

use graphmetric::data::{gen_two_moons, split_labels, Role, TwoMoons};
use graphmetric::graph::{build_graph, sym_normalize, GraphConfig, SigmaMode};
use graphmetric::propagation::{predict, propagate_closed_form, propagate_iterative, seed_matrix, PropagationConfig};

fn main() -> graphmetric::Result<()> {
    let ds = gen_two_moons(
        &TwoMoons {
            n: 300,
            noise_sd: 0.08,
            nuisance_dims: 0,
            nuisance_sd: 0.0,
        },
        3,
    )?;
    let ds = split_labels(&ds, 3, 0.34, 3)?;

    let (_, graph) = build_graph(&ds.x, &GraphConfig::new(8, SigmaMode::MedianHeuristic))?;
    let s = sym_normalize(&graph);
    println!(
        "graph: {} edges, sigma² = {:.4}, isolated = {}",
        graph.edges.len(),
        graph.sigma_sq,
        s.any_isolated()
    );

    let y0 = seed_matrix(ds.len(), ds.classes(), ds.seeds())?;
    let test = ds.scored_test_indices();
    let truth = |i: usize| ds.labels[i].unwrap();
    for steps in [1, 10, 50, 200] {
        let traj = propagate_iterative(&s, &y0, &PropagationConfig::new(0.99, steps))?;
        let pred = predict(traj.final_scores());
        println!(
            "T = {steps:>3}: test accuracy {:.3}, abstentions {}",
            pred.accuracy(&test, truth),
            pred.abstain_count()
        );
    }
    let exact = propagate_closed_form(&s, &y0, 0.99)?;
    println!(
        "closed form: test accuracy {:.3} ({} seeds used)",
        predict(&exact).accuracy(&test, truth),
        ds.indices_with_role(Role::Seed).len()
    );
    Ok(())
}
