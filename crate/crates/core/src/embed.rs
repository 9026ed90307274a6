//! Parametric maps from input space to the learned representation space.
//!
//! Two families are supported: a bias-free linear map `z = W x`, and a
//! one-hidden-layer network `z = W_out tanh(W_hidden x + b)`. Pairwise
//! distances are translation invariant, so neither family carries an output
//! bias.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Linear,
    Mlp1,
}

/// Hidden layer of an [`ModelKind::Mlp1`] model.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    /// `h × d`
    pub weights: DMatrix<f64>,
    /// length `h`
    pub bias: DVector<f64>,
}

/// Parameters of the embedding. Also used to hold gradients, which have the
/// same block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingParams {
    /// `d' × d` for linear models, `d' × h` for one-hidden-layer models.
    pub w_out: DMatrix<f64>,
    pub hidden: Option<HiddenLayer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// First `d'` rows of the identity. Linear only, `d' <= d`.
    IdentityPad,
    /// Every weight i.i.d. `N(0, scale²)`; hidden bias zero.
    Gaussian { scale: f64 },
}

impl Default for InitScheme {
    fn default() -> Self {
        InitScheme::Gaussian { scale: 0.1 }
    }
}

/// Activations kept from a forward pass, needed by the backward pass.
#[derive(Debug, Clone)]
pub struct EmbedOutput {
    /// `n × d'`
    pub z: DMatrix<f64>,
    /// `n × h` hidden activations (`tanh` already applied), Mlp1 only.
    pub hidden: Option<DMatrix<f64>>,
}

impl EmbeddingParams {
    pub fn linear(w_out: DMatrix<f64>) -> Result<Self> {
        let p = EmbeddingParams {
            w_out,
            hidden: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn mlp1(w_hidden: DMatrix<f64>, b_hidden: DVector<f64>, w_out: DMatrix<f64>) -> Result<Self> {
        let p = EmbeddingParams {
            w_out,
            hidden: Some(HiddenLayer {
                weights: w_hidden,
                bias: b_hidden,
            }),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn kind(&self) -> ModelKind {
        if self.hidden.is_some() {
            ModelKind::Mlp1
        } else {
            ModelKind::Linear
        }
    }

    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        match &self.hidden {
            Some(h) => h.weights.ncols(),
            None => self.w_out.ncols(),
        }
    }

    /// Output (representation) dimension.
    pub fn output_dim(&self) -> usize {
        self.w_out.nrows()
    }

    pub fn hidden_dim(&self) -> Option<usize> {
        self.hidden.as_ref().map(|h| h.weights.nrows())
    }

    /// Checks shape consistency and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.w_out.nrows() == 0 || self.w_out.ncols() == 0 {
            return Err(Error::Dimension("w_out must be non-empty".into()));
        }
        if let Some(h) = &self.hidden {
            if h.weights.nrows() == 0 || h.weights.ncols() == 0 {
                return Err(Error::Dimension("w_hidden must be non-empty".into()));
            }
            if h.weights.nrows() != self.w_out.ncols() {
                return Err(Error::Dimension(format!(
                    "w_hidden has {} rows but w_out has {} columns",
                    h.weights.nrows(),
                    self.w_out.ncols()
                )));
            }
            if h.bias.len() != h.weights.nrows() {
                return Err(Error::Dimension(format!(
                    "b_hidden has length {} but hidden width is {}",
                    h.bias.len(),
                    h.weights.nrows()
                )));
            }
        }
        if self.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        self.w_out.len()
            + self
                .hidden
                .as_ref()
                .map_or(0, |h| h.weights.len() + h.bias.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Names and sizes of the parameter blocks, in canonical order.
    pub fn blocks(&self) -> Vec<(&'static str, usize)> {
        let mut out = vec![("w_out", self.w_out.len())];
        if let Some(h) = &self.hidden {
            out.push(("w_hidden", h.weights.len()));
            out.push(("b_hidden", h.bias.len()));
        }
        out
    }

    /// Iterates over all scalars in canonical order: `w_out` row-major, then
    /// `w_hidden` row-major, then `b_hidden`.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let out = row_major(&self.w_out);
        let hid = self.hidden.iter().flat_map(|h| {
            row_major(&h.weights).chain(h.bias.iter().copied())
        });
        out.chain(hid)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Zero-valued parameters with the same block structure.
    pub fn zeros_like(&self) -> Self {
        self.map(|_| 0.0)
    }

    /// Rebuilds parameters of this shape from a flat vector in canonical order.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.len() {
            return Err(Error::Dimension(format!(
                "flat parameter vector has length {}, expected {}",
                flat.len(),
                self.len()
            )));
        }
        let mut it = flat.iter().copied();
        Ok(self.map(|_| it.next().expect("length checked")))
    }

    /// Applies `f` to every scalar, in canonical order.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let (r, c) = self.w_out.shape();
        let w_out = DMatrix::from_row_iterator(r, c, row_major(&self.w_out).map(&mut f).collect::<Vec<_>>());
        let hidden = self.hidden.as_ref().map(|h| {
            let (hr, hc) = h.weights.shape();
            let w = DMatrix::from_row_iterator(hr, hc, row_major(&h.weights).map(&mut f).collect::<Vec<_>>());
            let b = h.bias.map(&mut f);
            HiddenLayer { weights: w, bias: b }
        });
        EmbeddingParams { w_out, hidden }
    }

    /// Euclidean norm over all parameter blocks.
    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Multiplies every block by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

/// Maps the rows of `x` (`n × d`) into the representation space.
pub fn embed(params: &EmbeddingParams, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    embed_forward(params, x).map(|o| o.z)
}

/// Like [`embed`] but also keeps hidden activations.
pub fn embed_forward(params: &EmbeddingParams, x: &DMatrix<f64>) -> Result<EmbedOutput> {
    if x.ncols() != params.input_dim() {
        return Err(Error::Dimension(format!(
            "input has {} columns, model expects {}",
            x.ncols(),
            params.input_dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("input contains non-finite values".into()));
    }
    match &params.hidden {
        None => Ok(EmbedOutput {
            z: x * params.w_out.transpose(),
            hidden: None,
        }),
        Some(layer) => {
            let mut pre = x * layer.weights.transpose();
            for mut row in pre.row_iter_mut() {
                for (v, b) in row.iter_mut().zip(layer.bias.iter()) {
                    *v = (*v + b).tanh();
                }
            }
            let z = &pre * params.w_out.transpose();
            Ok(EmbedOutput { z, hidden: Some(pre) })
        }
    }
}

/// Builds initial parameters. `hidden` is required for [`ModelKind::Mlp1`]
/// and ignored for linear models.
pub fn init_params(
    kind: ModelKind,
    d: usize,
    d_prime: usize,
    hidden: Option<usize>,
    scheme: InitScheme,
    seed: u64,
) -> Result<EmbeddingParams> {
    if d == 0 || d_prime == 0 {
        return Err(Error::InvalidConfig("d and d' must be at least 1".into()));
    }
    let h = match kind {
        ModelKind::Linear => 0,
        ModelKind::Mlp1 => match hidden {
            Some(h) if h >= 1 => h,
            _ => return Err(Error::InvalidConfig("Mlp1 requires a hidden width h >= 1".into())),
        },
    };
    match scheme {
        InitScheme::IdentityPad => {
            if kind != ModelKind::Linear {
                return Err(Error::InvalidConfig("IdentityPad init is only valid for Linear models".into()));
            }
            if d_prime > d {
                return Err(Error::InvalidConfig(format!(
                    "IdentityPad init needs d' <= d, got d' = {d_prime}, d = {d}"
                )));
            }
            EmbeddingParams::linear(DMatrix::identity(d_prime, d))
        }
        InitScheme::Gaussian { scale } => {
            if !(scale.is_finite() && scale >= 0.0) {
                return Err(Error::InvalidConfig(format!("init scale must be finite and >= 0, got {scale}")));
            }
            let normal = Normal::new(0.0, scale)
                .map_err(|e| Error::InvalidConfig(format!("bad init scale: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |r: usize, c: usize| {
                let vals: Vec<f64> = (0..r * c).map(|_| normal.sample(&mut rng)).collect();
                DMatrix::from_row_slice(r, c, &vals)
            };
            match kind {
                ModelKind::Linear => EmbeddingParams::linear(draw(d_prime, d)),
                ModelKind::Mlp1 => {
                    let w_hidden = draw(h, d);
                    let w_out = draw(d_prime, h);
                    EmbeddingParams::mlp1(w_hidden, DVector::zeros(h), w_out)
                }
            }
        }
    }
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    kind: ModelKind,
    d: usize,
    d_prime: usize,
    h: Option<usize>,
    w_out: Vec<Vec<f64>>,
    w_hidden: Option<Vec<Vec<f64>>>,
    b_hidden: Option<&'a [f64]>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Serializes parameters to the JSON model document.
pub fn params_to_json(params: &EmbeddingParams) -> Result<String> {
    let doc = ModelFileOut {
        kind: params.kind(),
        d: params.input_dim(),
        d_prime: params.output_dim(),
        h: params.hidden_dim(),
        w_out: rows(&params.w_out),
        w_hidden: params.hidden.as_ref().map(|h| rows(&h.weights)),
        b_hidden: params.hidden.as_ref().map(|h| h.bias.as_slice()),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn save_params(params: &EmbeddingParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = params_to_json(params)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<EmbeddingParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    params_from_json(&text)
}

fn schema(field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.to_string(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| schema(name, "missing"))
}

fn dim_field(obj: &serde_json::Map<String, Value>, name: &str) -> Result<usize> {
    field(obj, name)?
        .as_u64()
        .filter(|&v| v >= 1)
        .map(|v| v as usize)
        .ok_or_else(|| schema(name, "expected a positive integer"))
}

fn matrix_field(obj: &serde_json::Map<String, Value>, name: &str, r: usize, c: usize) -> Result<DMatrix<f64>> {
    let arr = field(obj, name)?
        .as_array()
        .ok_or_else(|| schema(name, "expected an array of rows"))?;
    if arr.len() != r {
        return Err(schema(name, format!("expected {r} rows, found {}", arr.len())));
    }
    let mut vals = Vec::with_capacity(r * c);
    for (i, row) in arr.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| schema(name, format!("row {i} is not an array")))?;
        if row.len() != c {
            return Err(schema(name, format!("row {i} has {} entries, expected {c}", row.len())));
        }
        for v in row {
            vals.push(v.as_f64().ok_or_else(|| schema(name, format!("row {i} has a non-numeric entry")))?);
        }
    }
    Ok(DMatrix::from_row_slice(r, c, &vals))
}

/// Parses the JSON model document, naming the offending field on failure.
pub fn params_from_json(text: &str) -> Result<EmbeddingParams> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema("<root>", "expected a JSON object"))?;
    let kind: ModelKind = serde_json::from_value(field(obj, "kind")?.clone())
        .map_err(|_| schema("kind", "expected \"Linear\" or \"Mlp1\""))?;
    let d = dim_field(obj, "d")?;
    let d_prime = dim_field(obj, "d_prime")?;
    let params = match kind {
        ModelKind::Linear => {
            let w_out = matrix_field(obj, "w_out", d_prime, d)?;
            EmbeddingParams { w_out, hidden: None }
        }
        ModelKind::Mlp1 => {
            let h = dim_field(obj, "h")?;
            let w_out = matrix_field(obj, "w_out", d_prime, h)?;
            let w_hidden = matrix_field(obj, "w_hidden", h, d)?;
            let b = field(obj, "b_hidden")?
                .as_array()
                .ok_or_else(|| schema("b_hidden", "expected an array"))?;
            if b.len() != h {
                return Err(schema("b_hidden", format!("expected {h} entries, found {}", b.len())));
            }
            let bias = b
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| schema("b_hidden", "non-numeric entry")))
                .collect::<Result<Vec<_>>>()?;
            EmbeddingParams {
                w_out,
                hidden: Some(HiddenLayer {
                    weights: w_hidden,
                    bias: DVector::from_vec(bias),
                }),
            }
        }
    };
    params.validate()?;
    Ok(params)
}
