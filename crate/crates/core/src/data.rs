//! Core domain types shared by every stage of the pipeline.
//!
//! Panels are stored column-major: the estimators and the composite
//! likelihood iterate over the blocks of one or two sites at a time.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::error::{validation, Result};

/// Planar site coordinates. Site identity is the index; labels only travel
/// along for I/O.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    coords: Vec<[f64; 2]>,
    labels: Vec<String>,
}

impl SiteSet {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        let labels = (1..=coords.len()).map(|i| format!("s{i}")).collect();
        Self::with_labels(coords, labels)
    }

    pub fn with_labels(coords: Vec<[f64; 2]>, labels: Vec<String>) -> Result<Self> {
        if coords.len() < 2 {
            return validation(format!("a site set needs at least 2 sites, got {}", coords.len()));
        }
        if labels.len() != coords.len() {
            return validation("one label per site is required");
        }
        if let Some(i) = coords.iter().position(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return validation(format!("site {i} has non-finite coordinates"));
        }
        for i in 0..coords.len() {
            for j in 0..i {
                if coords[i] == coords[j] {
                    return validation(format!("sites {j} and {i} coincide"));
                }
            }
        }
        Ok(Self { coords, labels })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Displacement vector `x_i - x_j`.
    pub fn displacement(&self, i: usize, j: usize) -> [f64; 2] {
        let (a, b) = (self.coords[i], self.coords[j]);
        [a[0] - b[0], a[1] - b[1]]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let h = self.displacement(i, j);
        h[0].hypot(h[1])
    }

    /// Sub-collection of sites, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let coords = idx.iter().map(|&i| self.coords[i]).collect();
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        Self::with_labels(coords, labels)
    }
}

/// Symmetric matrix of Euclidean intersite distances, row-major `d*d`.
pub fn pairwise_distances(sites: &SiteSet) -> Vec<Vec<f64>> {
    let d = sites.len();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..i {
            let h = sites.distance(i, j);
            out[i][j] = h;
            out[j][i] = h;
        }
    }
    out
}

/// Dense column-major `n x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Panel {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Self {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == n), "ragged columns");
        Self { n, d, data: columns.concat() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == d), "ragged rows");
        let mut data = vec![0.0; n * d];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * n + i] = v;
            }
        }
        Self { n, d, data }
    }

    pub(crate) fn from_raw(n: usize, d: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * d);
        Self { n, d, data }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.d).map(|j| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { n: self.n, d: self.d, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_columns(idx.iter().map(|&j| self.column(j).to_vec()).collect())
    }

    /// Keeps the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let cols = (0..self.d)
            .map(|j| {
                let c = self.column(j);
                idx.iter().map(|&i| c[i]).collect()
            })
            .collect();
        Self::from_columns(cols)
    }
}

/// Componentwise block maxima, one row per block.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximaPanel {
    values: Panel,
}

impl MaximaPanel {
    pub fn new(values: Panel) -> Result<Self> {
        if values.nrows() < 2 {
            return validation(format!("a panel needs at least 2 blocks, got {}", values.nrows()));
        }
        if values.ncols() < 2 {
            return validation("a panel needs at least 2 sites");
        }
        if let Some(k) = values.values().iter().position(|v| !v.is_finite()) {
            let (n, j) = (values.nrows(), k / values.nrows());
            return validation(format!("non-finite entry at block {}, site {j}", k % n));
        }
        Ok(Self { values })
    }

    /// Checks the column count against a site set.
    pub fn for_sites(values: Panel, sites: &SiteSet) -> Result<Self> {
        if values.ncols() != sites.len() {
            return validation(format!(
                "panel has {} columns but there are {} sites",
                values.ncols(),
                sites.len()
            ));
        }
        Self::new(values)
    }

    pub fn values(&self) -> &Panel {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }
}

/// Rank-based pseudo-observations, every entry in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObsPanel {
    values: Panel,
}

impl PseudoObsPanel {
    pub fn new(values: Panel) -> Result<Self> {
        if values.nrows() < 1 {
            return validation("empty pseudo-observation panel");
        }
        if values.values().iter().any(|&u| !(u > 0.0 && u < 1.0)) {
            return validation("pseudo-observations must lie in the open unit interval");
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Panel {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        self.values.column(j)
    }
}

/// A point of the unit simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeight(pub(crate) Vec<f64>);

impl SimplexWeight {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return validation("empty weight vector");
        }
        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return validation("simplex weights must be finite and nonnegative");
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return validation(format!("simplex weights sum to {s}, not 1"));
        }
        Ok(Self(w))
    }

    /// The `j`-th standard basis vector of length `d`.
    pub fn basis(j: usize, d: usize) -> Result<Self> {
        if j >= d {
            return validation(format!("basis index {j} out of range for d = {d}"));
        }
        let mut w = vec![0.0; d];
        w[j] = 1.0;
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices of the strictly positive coordinates.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&j| self.0[j] > 0.0).collect()
    }
}

/// A subset `B` of site indices with `|B| >= 2`, held sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetB(Vec<usize>);

impl SubsetB {
    pub fn new(mut indices: Vec<usize>, d: usize) -> Result<Self> {
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.len() != before {
            return validation("subset indices must be distinct");
        }
        if indices.len() < 2 {
            return validation(format!("a subset needs at least 2 sites, got {}", indices.len()));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= d) {
            return validation(format!("site index {i} out of range for d = {d}"));
        }
        Ok(Self(indices))
    }

    pub fn pair(i: usize, j: usize, d: usize) -> Result<Self> {
        Self::new(vec![i, j], d)
    }

    /// `B = D`.
    pub fn full(d: usize) -> Result<Self> {
        Self::new((0..d).collect(), d)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn b(&self) -> usize {
        self.0.len()
    }
}

/// `w_B`: weight `1/b` on the members of `B`, zero elsewhere.
pub fn weight_for_subset(subset: &SubsetB, d: usize) -> Result<SimplexWeight> {
    if subset.indices().iter().any(|&i| i >= d) {
        return validation(format!("subset does not fit in {d} sites"));
    }
    let mut w = vec![0.0; d];
    let b = subset.b() as f64;
    for &i in subset.indices() {
        w[i] = 1.0 / b;
    }
    // 1/b summed b times can miss 1 by a few ulps; the tolerance absorbs it.
    SimplexWeight::new(w)
}

/// Which parametric family is hypothesized or simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Smith,
    Schlather,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Smith => f.write_str("smith"),
            ModelKind::Schlather => f.write_str("schlather"),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smith" => Ok(ModelKind::Smith),
            "schlather" => Ok(ModelKind::Schlather),
            other => validation(format!("unknown model '{other}'")),
        }
    }
}

/// Parameters of either family.
///
/// Smith: storm covariance `[[s11, s12], [s12, s22]]`.
/// Schlather: anisotropic Gaussian correlation with range `c`, angle `phi`
/// and ratio `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Smith { s11: f64, s12: f64, s22: f64 },
    Schlather { c: f64, phi: f64, r: f64 },
}

impl ModelParams {
    pub fn smith(s11: f64, s12: f64, s22: f64) -> Result<Self> {
        let p = ModelParams::Smith { s11, s12, s22 };
        p.validate()?;
        Ok(p)
    }

    pub fn schlather(c: f64, phi: f64, r: f64) -> Result<Self> {
        let p = ModelParams::Schlather { c, phi, r };
        p.validate()?;
        Ok(p)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Smith { .. } => ModelKind::Smith,
            ModelParams::Schlather { .. } => ModelKind::Schlather,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelParams::Smith { s11, s12, s22 } => {
                if ![s11, s12, s22].iter().all(|v| v.is_finite()) {
                    return validation("Smith covariance entries must be finite");
                }
                if !(s11 > 0.0 && s22 > 0.0 && s11 * s22 - s12 * s12 > 0.0) {
                    return validation(format!(
                        "Smith covariance ({s11}, {s12}, {s22}) is not positive definite"
                    ));
                }
            }
            ModelParams::Schlather { c, phi, r } => {
                if !(c > 0.0 && c.is_finite()) {
                    return validation(format!("Schlather range c = {c} must be positive"));
                }
                if !(-FRAC_PI_2..FRAC_PI_2).contains(&phi) {
                    return validation(format!("Schlather angle phi = {phi} outside [-pi/2, pi/2)"));
                }
                if !(r > 0.0 && r < 1.0) {
                    return validation(format!("Schlather ratio r = {r} outside (0, 1)"));
                }
            }
        }
        Ok(())
    }

    /// Flat parameter vector in declaration order.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            ModelParams::Smith { s11, s12, s22 } => vec![s11, s12, s22],
            ModelParams::Schlather { c, phi, r } => vec![c, phi, r],
        }
    }
}
