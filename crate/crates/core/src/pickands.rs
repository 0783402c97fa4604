//! Rank-based nonparametric estimators of the Pickands dependence function
//! and of extremal coefficients.
//!
//! Three endpoint-corrected estimators are provided: the Pickands estimator
//! (`P`), its Hall–Tajvidi ratio correction (`HT`) and the
//! Capéraà–Fougères–Genest estimator (`CFG`). All of them are functions of
//! the minima
//!
//! ```text
//! zeta_i(w) = min_j  -log(U_ij) / w_j
//! ```
//!
//! so one [`ZetaCache`] serves every kind at a given weight.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::data::{weight_for_subset, PseudoObsPanel, SimplexWeight, SubsetB};
use crate::error::{domain, validation, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    P,
    HT,
    CFG,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::P, EstimatorKind::HT, EstimatorKind::CFG];
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::P => "P",
            EstimatorKind::HT => "HT",
            EstimatorKind::CFG => "CFG",
        })
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "P" => Ok(EstimatorKind::P),
            "HT" => Ok(EstimatorKind::HT),
            "CFG" => Ok(EstimatorKind::CFG),
            other => validation(format!("unknown estimator '{other}' (expected P, HT or CFG)")),
        }
    }
}

/// The minima `zeta_i(w)`, `i = 1..n`, at one simplex weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaCache {
    values: Vec<f64>,
}

impl ZetaCache {
    fn from_neglog(columns: &[&[f64]], weights: &[f64]) -> Self {
        let n = columns[0].len();
        let mut values = vec![f64::INFINITY; n];
        for (col, &w) in columns.iter().zip(weights) {
            let inv = 1.0 / w;
            for (z, &e) in values.iter_mut().zip(col.iter()) {
                let v = e * inv;
                if v < *z {
                    *z = v;
                }
            }
        }
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn mean_log(&self) -> f64 {
        self.values.iter().map(|z| z.ln()).sum::<f64>() / self.values.len() as f64
    }

    /// Uncorrected Pickands estimate: reciprocal of the mean minimum.
    pub fn pickands(&self) -> f64 {
        1.0 / self.mean()
    }

    /// Uncorrected CFG estimate.
    pub fn cfg(&self) -> f64 {
        (-EULER_GAMMA - self.mean_log()).exp()
    }
}

/// Endpoint summaries at `e_1`, used by all three corrections.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Endpoint {
    mean: f64,
    mean_log: f64,
}

fn corrected(z_mean: f64, z_mean_log: f64, end: Endpoint, kind: EstimatorKind) -> f64 {
    match kind {
        // 1/A_c = 1/A(w) - 1/A(e1) + 1
        EstimatorKind::P => 1.0 / (z_mean - end.mean + 1.0),
        // A(w) / A(e1)
        EstimatorKind::HT => end.mean / z_mean,
        // log A_c = log A(w) - log A(e1); the Euler constant cancels
        EstimatorKind::CFG => (end.mean_log - z_mean_log).exp(),
    }
}

fn check_weight(pseudo: &PseudoObsPanel, w: &SimplexWeight) -> Result<Vec<usize>> {
    if w.len() != pseudo.d() {
        return validation(format!("weight has {} coordinates for {} sites", w.len(), pseudo.d()));
    }
    let support = w.support();
    if support.is_empty() {
        return domain("weight vector has no positive coordinate");
    }
    Ok(support)
}

/// `zeta_i(w)` for every block. Coordinates with `w_j = 0` never attain the
/// minimum and are skipped.
pub fn zeta(pseudo: &PseudoObsPanel, w: &SimplexWeight) -> Result<ZetaCache> {
    let support = check_weight(pseudo, w)?;
    let neglog: Vec<Vec<f64>> = support
        .iter()
        .map(|&j| pseudo.column(j).iter().map(|u| -u.ln()).collect())
        .collect();
    let cols: Vec<&[f64]> = neglog.iter().map(Vec::as_slice).collect();
    let ws: Vec<f64> = support.iter().map(|&j| w.as_slice()[j]).collect();
    Ok(ZetaCache::from_neglog(&cols, &ws))
}

pub fn pickands_raw(pseudo: &PseudoObsPanel, w: &SimplexWeight) -> Result<f64> {
    Ok(zeta(pseudo, w)?.pickands())
}

pub fn cfg_raw(pseudo: &PseudoObsPanel, w: &SimplexWeight) -> Result<f64> {
    Ok(zeta(pseudo, w)?.cfg())
}

/// Endpoint-corrected estimate of `A(w)`.
#[allow(non_snake_case)]
pub fn estimate_A(pseudo: &PseudoObsPanel, w: &SimplexWeight, kind: EstimatorKind) -> Result<f64> {
    NpEstimator::new(pseudo).estimate(w, kind)
}

/// `b * A_c(w_B)`, not truncated to `[1, b]`.
pub fn extremal_coefficient_np(pseudo: &PseudoObsPanel, subset: &SubsetB, kind: EstimatorKind) -> Result<f64> {
    NpEstimator::new(pseudo).xi(subset, kind)
}

/// Clamps an extremal-coefficient estimate to its admissible range `[1, b]`.
pub fn truncate_xi(xi: f64, b: usize) -> f64 {
    xi.clamp(1.0, b as f64)
}

/// Precomputed `-log U` columns of one panel, reused across many subsets.
#[derive(Debug, Clone)]
pub struct NpEstimator {
    neglog: Vec<Vec<f64>>,
    end: Endpoint,
}

impl NpEstimator {
    pub fn new(pseudo: &PseudoObsPanel) -> Self {
        let neglog: Vec<Vec<f64>> =
            (0..pseudo.d()).map(|j| pseudo.column(j).iter().map(|u| -u.ln()).collect()).collect();
        let nf = pseudo.n() as f64;
        let end = Endpoint {
            mean: neglog[0].iter().sum::<f64>() / nf,
            mean_log: neglog[0].iter().map(|e| e.ln()).sum::<f64>() / nf,
        };
        Self { neglog, end }
    }

    pub fn d(&self) -> usize {
        self.neglog.len()
    }

    pub fn zeta(&self, w: &SimplexWeight) -> Result<ZetaCache> {
        if w.len() != self.d() {
            return validation(format!("weight has {} coordinates for {} sites", w.len(), self.d()));
        }
        let support = w.support();
        if support.is_empty() {
            return domain("weight vector has no positive coordinate");
        }
        let cols: Vec<&[f64]> = support.iter().map(|&j| self.neglog[j].as_slice()).collect();
        let ws: Vec<f64> = support.iter().map(|&j| w.as_slice()[j]).collect();
        Ok(ZetaCache::from_neglog(&cols, &ws))
    }

    pub fn estimate(&self, w: &SimplexWeight, kind: EstimatorKind) -> Result<f64> {
        let z = self.zeta(w)?;
        Ok(self.from_cache(&z, kind))
    }

    /// Corrected estimate from an already computed cache.
    pub fn from_cache(&self, z: &ZetaCache, kind: EstimatorKind) -> f64 {
        let mean_log = if kind == EstimatorKind::CFG { z.mean_log() } else { 0.0 };
        corrected(z.mean(), mean_log, self.end, kind)
    }

    fn subset_cache(&self, subset: &SubsetB) -> Result<ZetaCache> {
        if subset.indices().iter().any(|&i| i >= self.d()) {
            return validation(format!("subset does not fit in {} sites", self.d()));
        }
        let b = subset.b() as f64;
        let cols: Vec<&[f64]> = subset.indices().iter().map(|&j| self.neglog[j].as_slice()).collect();
        Ok(ZetaCache::from_neglog(&cols, &vec![1.0 / b; cols.len()]))
    }

    pub fn xi(&self, subset: &SubsetB, kind: EstimatorKind) -> Result<f64> {
        let z = self.subset_cache(subset)?;
        Ok(subset.b() as f64 * self.from_cache(&z, kind))
    }

    /// Extremal-coefficient estimates for several kinds from one cache, in
    /// the order given.
    pub fn xi_many(&self, subset: &SubsetB, kinds: &[EstimatorKind]) -> Result<Vec<f64>> {
        let z = self.subset_cache(subset)?;
        let b = subset.b() as f64;
        let mean = z.mean();
        let mean_log = if kinds.contains(&EstimatorKind::CFG) { z.mean_log() } else { 0.0 };
        Ok(kinds.iter().map(|&k| b * corrected(mean, mean_log, self.end, k)).collect())
    }
}

/// Consistency helper: `weight_for_subset` composed with [`estimate_A`].
pub fn xi_via_weight(pseudo: &PseudoObsPanel, subset: &SubsetB, kind: EstimatorKind) -> Result<f64> {
    let w = weight_for_subset(subset, pseudo.d())?;
    Ok(subset.b() as f64 * estimate_A(pseudo, &w, kind)?)
}
