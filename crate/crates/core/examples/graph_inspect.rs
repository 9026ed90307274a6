//! Builds the kNN Gaussian graph of a small point cloud and prints its
//! edges, degrees, and the normalized operator.
//!
//! ```bash
//! cargo run --example graph_inspect
//! ```

use graphmetric::graph::{build_graph, sym_normalize, GraphConfig, SigmaMode};
use nalgebra::DMatrix;

fn main() -> graphmetric::Result<()> {
    let z = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0, 6.0, 5.0, 5.0, 6.0]);
    let (d, graph) = build_graph(&z, &GraphConfig::new(2, SigmaMode::MedianHeuristic))?;
    println!("squared distances:\n{d:.2}");
    println!("sigma² = {}", graph.sigma_sq);
    graph
        .write_edge_list(std::io::stdout().lock())
        .expect("write to stdout");
    println!("degrees: {:?}", graph.degrees);
    let s = sym_normalize(&graph);
    println!("normalized operator ({} nonzeros):\n{:.4}", s.nnz(), s.to_dense());
    Ok(())
}
