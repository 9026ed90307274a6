//! Similarity graph over embedded points: squared distances, union kNN
//! sparsification, Gaussian edge weights and the symmetric normalized
//! propagation operator.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degree below which a node counts as isolated.
pub const ISOLATION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// σ² = median squared distance over retained edges (1.0 if that is 0).
    #[default]
    MedianHeuristic,
    /// Fixed bandwidth σ (not squared).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub k: usize,
    #[serde(default)]
    pub sigma: SigmaMode,
}

impl GraphConfig {
    pub fn new(k: usize, sigma: SigmaMode) -> Self {
        GraphConfig { k, sigma }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k + 1 > n {
            return Err(Error::InvalidConfig(format!(
                "k must satisfy 1 <= k <= n - 1, got k = {} with n = {n}",
                self.k
            )));
        }
        if let SigmaMode::Fixed(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidConfig(format!("fixed sigma must be finite and > 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Weighted undirected graph. Each unordered pair is stored once with `i < j`,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    /// The σ² used for the weights.
    pub sigma_sq: f64,
    pub degrees: Vec<f64>,
}

impl Graph {
    pub fn is_isolated(&self, i: usize) -> bool {
        self.degrees[i] < ISOLATION_EPS
    }

    /// Recomputes degrees from the edge list.
    pub fn recompute_degrees(&self) -> Vec<f64> {
        degrees(self.n, &self.edges, &self.weights)
    }

    /// Writes the edge list as `i j w_ij` lines with 17 significant digits.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (&(i, j), w) in self.edges.iter().zip(&self.weights) {
            writeln!(out, "{i} {j} {w:.16e}")?;
        }
        Ok(())
    }
}

fn degrees(n: usize, edges: &[(usize, usize)], weights: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; n];
    for (&(i, j), &w) in edges.iter().zip(weights) {
        g[i] += w;
        g[j] += w;
    }
    g
}

/// `D_ij = ||z_i - z_j||²` for all pairs. Each pair is computed once, so `D`
/// is exactly symmetric.
pub fn pairwise_sq_dists(z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = z.nrows();
    if n < 2 {
        return Err(Error::Validation(format!("need at least 2 points, got {n}")));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("embedding contains non-finite values".into()));
    }
    let rows: Vec<Vec<f64>> = z.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sq_dist(&rows[i], &rows[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Union kNN edge set: `{i, j}` is kept when either endpoint has the other
/// among its `k` nearest. Distance ties go to the smaller node index.
pub fn knn_edges(d: &DMatrix<f64>, k: usize) -> Result<Vec<(usize, usize)>> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::Dimension("distance matrix must be square".into()));
    }
    if k == 0 || k + 1 > n {
        return Err(Error::InvalidConfig(format!(
            "k must satisfy 1 <= k <= n - 1, got k = {k} with n = {n}"
        )));
    }
    let mut edges = Vec::with_capacity(n * k);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| d[(i, a)].total_cmp(&d[(i, b)]).then(a.cmp(&b)));
        for &j in &order[..k] {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Kernel bandwidth σ² for the given edge set.
pub fn resolve_sigma(d: &DMatrix<f64>, edges: &[(usize, usize)], mode: SigmaMode) -> Result<f64> {
    if edges.is_empty() {
        return Err(Error::InvalidState("cannot resolve sigma on an empty edge set".into()));
    }
    match mode {
        SigmaMode::Fixed(s) => Ok(s * s),
        SigmaMode::MedianHeuristic => {
            let mut vals: Vec<f64> = edges.iter().map(|&(i, j)| d[(i, j)]).collect();
            vals.sort_by(f64::total_cmp);
            let m = vals.len();
            let median = if m % 2 == 1 {
                vals[m / 2]
            } else {
                0.5 * (vals[m / 2 - 1] + vals[m / 2])
            };
            Ok(if median > 0.0 { median } else { 1.0 })
        }
    }
}

/// `w_ij = exp(-D_ij / σ²)` on every edge.
pub fn gaussian_weights(d: &DMatrix<f64>, edges: &[(usize, usize)], sigma_sq: f64) -> Result<Graph> {
    if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma² must be finite and > 0, got {sigma_sq}")));
    }
    let n = d.nrows();
    let weights: Vec<f64> = edges.iter().map(|&(i, j)| (-d[(i, j)] / sigma_sq).exp()).collect();
    Ok(Graph {
        n,
        degrees: degrees(n, edges, &weights),
        edges: edges.to_vec(),
        weights,
        sigma_sq,
    })
}

/// Edges, σ² and weights from embedded points in one call.
pub fn build_graph(z: &DMatrix<f64>, cfg: &GraphConfig) -> Result<(DMatrix<f64>, Graph)> {
    cfg.validate(z.nrows())?;
    let d = pairwise_sq_dists(z)?;
    let edges = knn_edges(&d, cfg.k)?;
    let sigma_sq = resolve_sigma(&d, &edges, cfg.sigma)?;
    let g = gaussian_weights(&d, &edges, sigma_sq)?;
    Ok((d, g))
}

/// Symmetric normalized operator `S = G^{-1/2} W G^{-1/2}` in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedOperator {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    pub isolated: Vec<bool>,
}

impl NormalizedOperator {
    /// Neighbors and values of row `i`, in increasing column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// Entry `S_ij` (zero when not stored).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn any_isolated(&self) -> bool {
        self.isolated.iter().any(|&b| b)
    }

    /// `S · F` for an `n × c` matrix.
    pub fn apply(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        let c = f.ncols();
        let mut out = DMatrix::zeros(self.n, c);
        for i in 0..self.n {
            for (j, s) in self.row(i) {
                for col in 0..c {
                    out[(i, col)] += s * f[(j, col)];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, s) in self.row(i) {
                m[(i, j)] = s;
            }
        }
        m
    }
}

/// `S_ij = w_ij / sqrt(g_i g_j)`; isolated nodes get an empty row and column.
pub fn sym_normalize(graph: &Graph) -> NormalizedOperator {
    let n = graph.n;
    let isolated: Vec<bool> = graph.degrees.iter().map(|&g| g < ISOLATION_EPS).collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &w) in graph.edges.iter().zip(&graph.weights) {
        if isolated[i] || isolated[j] {
            continue;
        }
        let s = w / (graph.degrees[i] * graph.degrees[j]).sqrt();
        adj[i].push((j, s));
        adj[j].push((i, s));
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for mut row in adj {
        row.sort_by_key(|&(j, _)| j);
        for (j, s) in row {
            cols.push(j);
            vals.push(s);
        }
        row_ptr.push(cols.len());
    }
    NormalizedOperator {
        n,
        row_ptr,
        cols,
        vals,
        isolated,
    }
}
