//! Datasets: synthetic generators, CSV ingestion, and seed/validation role
//! assignment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a point in the semi-supervised protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// Labeled; injected into propagation.
    Seed,
    /// Labeled; held out as a training target.
    Validation,
    /// Not used in training. May still carry a hidden label for scoring.
    TestUnlabeled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `n × d` features.
    pub x: DMatrix<f64>,
    /// Class index per point, `None` when unknown.
    pub labels: Vec<Option<usize>>,
    pub roles: Vec<Role>,
    /// Label token per class index.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn indices_with_role(&self, role: Role) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.roles[i] == role).collect()
    }

    /// `(index, class)` for every seed.
    pub fn seeds(&self) -> Vec<(usize, usize)> {
        self.indices_with_role(Role::Seed)
            .into_iter()
            .filter_map(|i| self.labels[i].map(|c| (i, c)))
            .collect()
    }

    /// Unlabeled points whose hidden label is known, i.e. the scored test set.
    pub fn scored_test_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.roles[i] == Role::TestUnlabeled && self.labels[i].is_some())
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes()];
        for c in self.labels.iter().flatten() {
            counts[*c] += 1;
        }
        counts
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.labels.len() != n || self.roles.len() != n {
            return Err(Error::Dimension(format!(
                "dataset has {n} rows but {} labels and {} roles",
                self.labels.len(),
                self.roles.len()
            )));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("features contain non-finite values".into()));
        }
        let c = self.classes();
        let mut seeds_per_class = vec![0usize; c];
        for i in 0..n {
            match (self.labels[i], self.roles[i]) {
                (Some(l), _) if l >= c => {
                    return Err(Error::Validation(format!("point {i} has label {l} but only {c} classes")));
                }
                (None, Role::Seed | Role::Validation) => {
                    return Err(Error::Validation(format!("point {i} is labeled-role but has no label")));
                }
                (Some(l), Role::Seed) => seeds_per_class[l] += 1,
                _ => {}
            }
        }
        if let Some(cls) = seeds_per_class.iter().position(|&s| s == 0) {
            return Err(Error::Validation(format!("class {cls} has no seed point")));
        }
        Ok(())
    }
}

fn index_class_names(c: usize) -> Vec<String> {
    let width = (c.max(2) - 1).to_string().len();
    (0..c).map(|i| format!("{i:0width$}")).collect()
}

fn normal(sd: f64, what: &str) -> Result<Normal<f64>> {
    if !(sd.is_finite() && sd >= 0.0) {
        return Err(Error::InvalidConfig(format!("{what} must be finite and >= 0, got {sd}")));
    }
    Normal::new(0.0, sd).map_err(|e| Error::InvalidConfig(format!("{what}: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoMoons {
    pub n: usize,
    pub noise_sd: f64,
    #[serde(default)]
    pub nuisance_dims: usize,
    #[serde(default)]
    pub nuisance_sd: f64,
}

/// Two interleaved half circles with optional noise-only extra coordinates.
/// Points `0..n/2` are the upper moon (class 0), the rest the lower moon.
pub fn gen_two_moons(spec: &TwoMoons, seed: u64) -> Result<Dataset> {
    let TwoMoons {
        n,
        noise_sd,
        nuisance_dims,
        nuisance_sd,
    } = *spec;
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidConfig(format!("two moons needs an even positive n, got {n}")));
    }
    let noise = normal(noise_sd, "noise_sd")?;
    let nuisance = normal(nuisance_sd, "nuisance_sd")?;
    let d = 2 + nuisance_dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = usize::from(i >= n / 2);
        let t = rng.random_range(0.0..=std::f64::consts::PI);
        let (x, y) = if class == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        vals.push(x + noise.sample(&mut rng));
        vals.push(y + noise.sample(&mut rng));
        for _ in 0..nuisance_dims {
            vals.push(nuisance.sample(&mut rng));
        }
        labels.push(Some(class));
    }
    Ok(Dataset {
        x: DMatrix::from_row_slice(n, d, &vals),
        labels,
        roles: vec![Role::Seed; n],
        class_names: index_class_names(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blobs {
    pub n_per_class: usize,
    pub classes: usize,
    pub dim: usize,
    pub informative_dims: usize,
    pub separation: f64,
    pub noise_sd: f64,
}

/// Isotropic Gaussian blobs. Class `c` is centred at `separation · e_c`,
/// which needs `classes <= informative_dims <= dim`.
pub fn gen_blobs(spec: &Blobs, seed: u64) -> Result<Dataset> {
    let Blobs {
        n_per_class,
        classes,
        dim,
        informative_dims,
        separation,
        noise_sd,
    } = *spec;
    if n_per_class == 0 || classes < 2 {
        return Err(Error::InvalidConfig("blobs need n_per_class >= 1 and at least 2 classes".into()));
    }
    if classes > informative_dims || informative_dims > dim {
        return Err(Error::InvalidConfig(format!(
            "blobs need classes <= informative_dims <= dim, got {classes}, {informative_dims}, {dim}"
        )));
    }
    if !separation.is_finite() {
        return Err(Error::InvalidConfig("separation must be finite".into()));
    }
    let noise = normal(noise_sd, "noise_sd")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_per_class * classes;
    let mut vals = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for class in 0..classes {
        for _ in 0..n_per_class {
            for j in 0..dim {
                let mean = if j == class { separation } else { 0.0 };
                vals.push(mean + noise.sample(&mut rng));
            }
            labels.push(Some(class));
        }
    }
    Ok(Dataset {
        x: DMatrix::from_row_slice(n, dim, &vals),
        labels,
        roles: vec![Role::Seed; n],
        class_names: index_class_names(classes),
    })
}

/// Serializes features and labels (hidden labels included; `?` when
/// unknown). Roles are not stored.
pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::new();
    for j in 0..ds.dim() {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label\n");
    for i in 0..ds.len() {
        for j in 0..ds.dim() {
            let _ = write!(out, "{},", ds.x[(i, j)]);
        }
        match ds.labels[i] {
            Some(c) => out.push_str(&ds.class_names[c]),
            None => out.push('?'),
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the CSV format written by [`save_csv`]. Known labels become
/// seeds, `?` labels become unlabeled test points.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols.last() != Some(&"label") {
        return Err(parse_err(1, "header must be `f0,...,f{d-1},label`"));
    }
    let d = cols.len() - 1;
    for (j, name) in cols[..d].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(parse_err(1, format!("expected column `f{j}`, found `{name}`")));
        }
    }
    let mut vals = Vec::new();
    let mut tokens: Vec<Option<String>> = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(parse_err(lineno, format!("expected {} fields, found {}", d + 1, fields.len())));
        }
        for f in &fields[..d] {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(lineno, format!("non-numeric feature `{f}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature `{f}`")));
            }
            vals.push(v);
        }
        let tok = fields[d];
        if tok == "?" {
            tokens.push(None);
        } else if tok.is_empty() || tok.contains(char::is_whitespace) || tok.contains('"') {
            return Err(parse_err(lineno, format!("invalid class token `{tok}`")));
        } else {
            tokens.push(Some(tok.to_string()));
        }
    }
    let mut class_names: Vec<String> = tokens.iter().flatten().cloned().collect();
    class_names.sort();
    class_names.dedup();
    let n = tokens.len();
    let labels: Vec<Option<usize>> = tokens
        .iter()
        .map(|t| t.as_ref().map(|t| class_names.binary_search(t).expect("token collected above")))
        .collect();
    let roles = labels
        .iter()
        .map(|l| if l.is_some() { Role::Seed } else { Role::TestUnlabeled })
        .collect();
    Ok(Dataset {
        x: DMatrix::from_row_slice(n, d, &vals),
        labels,
        roles,
        class_names,
    })
}

/// Reassigns roles: per class, `labeled_per_class` known-label points are
/// sampled without replacement; the first `ceil(val_fraction · labeled_per_class)`
/// of them become validation targets and the rest seeds. Everything else is
/// unlabeled test data.
pub fn split_labels(ds: &Dataset, labeled_per_class: usize, val_fraction: f64, seed: u64) -> Result<Dataset> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("val_fraction must be in (0, 1), got {val_fraction}")));
    }
    let n_val = (val_fraction * labeled_per_class as f64).ceil() as usize;
    if n_val == 0 || n_val >= labeled_per_class {
        return Err(Error::InvalidConfig(format!(
            "labeled_per_class = {labeled_per_class} with val_fraction = {val_fraction} leaves \
             {} seed and {n_val} validation points per class; need at least one of each",
            labeled_per_class.saturating_sub(n_val)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut roles = vec![Role::TestUnlabeled; ds.len()];
    for class in 0..ds.classes() {
        let members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == Some(class)).collect();
        if members.len() < labeled_per_class {
            return Err(Error::InvalidConfig(format!(
                "class `{}` has {} labeled points, need {labeled_per_class}",
                ds.class_names[class],
                members.len()
            )));
        }
        for (rank, pos) in sample(&mut rng, members.len(), labeled_per_class).into_iter().enumerate() {
            roles[members[pos]] = if rank < n_val { Role::Validation } else { Role::Seed };
        }
    }
    let out = Dataset {
        roles,
        ..ds.clone()
    };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moons(n: usize, noise: f64, nuis: usize, seed: u64) -> Dataset {
        gen_two_moons(
            &TwoMoons {
                n,
                noise_sd: noise,
                nuisance_dims: nuis,
                nuisance_sd: 3.0,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let ds = moons(4, 0.0, 0, 3);
        for i in 0..4 {
            let (x, y) = (ds.x[(i, 0)], ds.x[(i, 1)]);
            if i < 2 {
                assert!((x * x + y * y - 1.0).abs() < 1e-12 && y >= 0.0);
            } else {
                assert!(((1.0 - x).powi(2) + (0.5 - y).powi(2) - 1.0).abs() < 1e-12 && y <= 0.5);
            }
        }
    }

    #[test]
    fn moons_shape_and_determinism() {
        let ds = moons(40, 0.1, 3, 5);
        assert_eq!(ds.x.shape(), (40, 5));
        assert_eq!(ds.class_counts(), vec![20, 20]);
        assert_eq!(ds, moons(40, 0.1, 3, 5));
        assert_ne!(ds.x, moons(40, 0.1, 3, 6).x);
        assert!(gen_two_moons(&TwoMoons { n: 5, noise_sd: 0.0, nuisance_dims: 0, nuisance_sd: 0.0 }, 0).is_err());
    }

    #[test]
    fn blobs_shapes_and_collapse() {
        let spec = Blobs {
            n_per_class: 4,
            classes: 3,
            dim: 5,
            informative_dims: 3,
            separation: 2.0,
            noise_sd: 0.0,
        };
        let ds = gen_blobs(&spec, 1).unwrap();
        assert_eq!(ds.x.shape(), (12, 5));
        for i in 0..12 {
            let c = ds.labels[i].unwrap();
            for j in 0..5 {
                assert_eq!(ds.x[(i, j)], if j == c { 2.0 } else { 0.0 });
            }
        }
        let bad = Blobs { informative_dims: 2, ..spec };
        assert!(gen_blobs(&bad, 1).is_err());
    }

    #[test]
    fn csv_contract() {
        let ds = parse_csv("f0,f1,label\n1,2,a\n3,4,b\n5,6,?\n").unwrap();
        assert_eq!(ds.class_names, vec!["a", "b"]);
        assert_eq!(ds.labels, vec![Some(0), Some(1), None]);
        assert_eq!(ds.roles, vec![Role::Seed, Role::Seed, Role::TestUnlabeled]);
        assert_eq!(ds.x[(2, 1)], 6.0);
    }

    #[test]
    fn csv_errors_name_the_line() {
        match parse_csv("f0,f1,label\n1,2,a\n3,b\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_csv("f0,f1,label\n1,x,a\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_csv("f0,f1,label\n1,2,\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_csv("a,b\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = moons(30, 0.3, 2, 9);
        let back = parse_csv(&to_csv_string(&ds)).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.labels, ds.labels);
        let blobs = gen_blobs(
            &Blobs { n_per_class: 2, classes: 12, dim: 12, informative_dims: 12, separation: 1.0, noise_sd: 1.0 },
            0,
        )
        .unwrap();
        assert_eq!(parse_csv(&to_csv_string(&blobs)).unwrap().labels, blobs.labels);
    }

    #[test]
    fn split_arithmetic_and_determinism() {
        let ds = moons(40, 0.1, 0, 1);
        let s = split_labels(&ds, 2, 0.5, 4).unwrap();
        for class in 0..2 {
            let count = |role| (0..40).filter(|&i| s.labels[i] == Some(class) && s.roles[i] == role).count();
            assert_eq!(count(Role::Seed), 1);
            assert_eq!(count(Role::Validation), 1);
        }
        assert_eq!(s.scored_test_indices().len(), 36);
        assert_eq!(s.roles, split_labels(&ds, 2, 0.5, 4).unwrap().roles);
        assert!(matches!(split_labels(&ds, 2, 0.9, 4), Err(Error::InvalidConfig(_))));
        assert!(matches!(split_labels(&ds, 21, 0.5, 4), Err(Error::InvalidConfig(_))));
    }
}
