//! Maximum composite pairwise pseudo-likelihood estimation.

use serde::{Deserialize, Serialize};

use crate::data::{ModelKind, ModelParams, PseudoObsPanel, SiteSet, SubsetB};
use crate::error::{validation, Error, Result};
use crate::models::{schlather_correlation, schlather_log_density_x, smith_log_density_x, U_CLAMP};
use crate::mvn::phi_inv;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::pickands::{EstimatorKind, NpEstimator};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Site pairs entering the composite likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pairs: Vec<(usize, usize)>,
    cutoff: Option<f64>,
}

impl PairSet {
    pub fn all(d: usize) -> Result<Self> {
        let pairs = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
        Self::new(pairs, d, None)
    }

    /// Pairs no further apart than `cutoff`.
    pub fn within(sites: &SiteSet, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return validation("pair cutoff must be positive");
        }
        let d = sites.len();
        let pairs = (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .filter(|&(i, j)| sites.distance(i, j) <= cutoff)
            .collect();
        Self::new(pairs, d, Some(cutoff))
    }

    pub fn from_pairs(pairs: Vec<(usize, usize)>, d: usize) -> Result<Self> {
        Self::new(pairs, d, None)
    }

    fn new(mut pairs: Vec<(usize, usize)>, d: usize, cutoff: Option<f64>) -> Result<Self> {
        for p in pairs.iter_mut() {
            if p.0 == p.1 || p.0 >= d || p.1 >= d {
                return validation(format!("invalid pair {p:?} for {d} sites"));
            }
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        if pairs.len() != before {
            return validation("pair set contains duplicates");
        }
        if pairs.is_empty() {
            return validation("pair set is empty");
        }
        Ok(Self { pairs, cutoff })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn max_index(&self) -> usize {
        self.pairs.iter().map(|p| p.1).max().unwrap_or(0)
    }
}

/// Maps parameters to the unconstrained optimization space.
///
/// Smith: log-Cholesky `(log L11, L21, log L22)`. Schlather: `(log c, phi, logit r)`.
pub fn unconstrain(params: &ModelParams) -> Vec<f64> {
    match *params {
        ModelParams::Smith { s11, s12, s22 } => {
            let l11 = s11.sqrt();
            let l21 = s12 / l11;
            vec![l11.ln(), l21, 0.5 * (s22 - l21 * l21).ln()]
        }
        ModelParams::Schlather { c, phi, r } => vec![c.ln(), phi, (r / (1.0 - r)).ln()],
    }
}

/// Inverse of [`unconstrain`]; the angle is wrapped into `[-pi/2, pi/2)`.
pub fn constrain(kind: ModelKind, raw: &[f64]) -> Result<ModelParams> {
    if raw.len() != 3 || raw.iter().any(|v| !v.is_finite()) {
        return validation(format!("raw parameter vector {raw:?} is invalid"));
    }
    match kind {
        ModelKind::Smith => {
            let l11 = raw[0].exp();
            let l22 = raw[2].exp();
            ModelParams::smith(l11 * l11, l11 * raw[1], raw[1] * raw[1] + l22 * l22)
        }
        ModelKind::Schlather => {
            let phi = (raw[1] + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
            let r = 1.0 / (1.0 + (-raw[2]).exp());
            ModelParams::schlather(raw[0].exp(), phi, r)
        }
    }
}

/// Pseudo-observations and pair geometry prepared for repeated evaluation
/// of the composite log-likelihood.
#[derive(Debug, Clone)]
pub struct CompositeLikelihood {
    n: usize,
    /// `x = -log u` per column.
    x: Vec<Vec<f64>>,
    /// `log x` per column.
    lx: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize, [f64; 2])>,
}

impl CompositeLikelihood {
    pub fn new(pseudo: &PseudoObsPanel, sites: &SiteSet, pairs: &PairSet) -> Result<Self> {
        if pseudo.d() != sites.len() {
            return validation(format!("panel has {} columns for {} sites", pseudo.d(), sites.len()));
        }
        if pairs.max_index() >= sites.len() {
            return validation("pair set does not fit the site set");
        }
        let x: Vec<Vec<f64>> = (0..pseudo.d())
            .map(|j| pseudo.column(j).iter().map(|&u| -u.clamp(U_CLAMP, 1.0 - U_CLAMP).ln()).collect())
            .collect();
        let lx = x.iter().map(|c| c.iter().map(|v| v.ln()).collect()).collect();
        let pairs = pairs.pairs().iter().map(|&(i, j)| (i, j, sites.displacement(i, j))).collect();
        Ok(Self { n: pseudo.n(), x, lx, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sum over rows and pairs of the log pair copula density; `-inf` when
    /// the parameters are invalid or the density vanishes.
    pub fn loglik(&self, params: &ModelParams) -> f64 {
        if params.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        match *params {
            ModelParams::Smith { s11, s12, s22 } => {
                let det = s11 * s22 - s12 * s12;
                for &(i, j, h) in &self.pairs {
                    let q = (s22 * h[0] * h[0] - 2.0 * s12 * h[0] * h[1] + s11 * h[1] * h[1]) / det;
                    let a = q.max(0.0).sqrt();
                    if !(a > 0.0) || !a.is_finite() {
                        return f64::NEG_INFINITY;
                    }
                    let (x1, x2, l1, l2) = (&self.x[i], &self.x[j], &self.lx[i], &self.lx[j]);
                    for r in 0..self.n {
                        total += smith_log_density_x(x1[r], l1[r], x2[r], l2[r], a);
                    }
                }
            }
            ModelParams::Schlather { .. } => {
                for &(i, j, h) in &self.pairs {
                    let rho = match schlather_correlation(h, params) {
                        Ok(r) if r < 1.0 => r,
                        _ => return f64::NEG_INFINITY,
                    };
                    let (x1, x2) = (&self.x[i], &self.x[j]);
                    for r in 0..self.n {
                        total += schlather_log_density_x(x1[r], x2[r], rho);
                    }
                }
            }
        }
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }

    pub fn loglik_raw(&self, kind: ModelKind, raw: &[f64]) -> f64 {
        match constrain(kind, raw) {
            Ok(p) => self.loglik(&p),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Composite pairwise log pseudo-likelihood at unconstrained parameters.
pub fn composite_loglik(pseudo: &PseudoObsPanel, kind: ModelKind, raw: &[f64], sites: &SiteSet, pairs: &PairSet) -> f64 {
    match CompositeLikelihood::new(pseudo, sites, pairs) {
        Ok(c) => c.loglik_raw(kind, raw),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub starts: usize,
    pub max_evaluations: usize,
    pub rel_tol: f64,
    pub min_n: usize,
    /// Initial simplex edge in the unconstrained space.
    pub initial_step: f64,
    /// Simplex edge used when warm-starting from a previous estimate.
    pub warm_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { starts: 5, max_evaluations: 2000, rel_tol: 1e-8, min_n: 10, initial_step: 0.5, warm_step: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub objective: f64,
    pub converged: bool,
    pub n_evaluations: usize,
    pub start: ModelParams,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Moment-matching starting points: the median nonparametric pairwise
/// extremal coefficient is matched at the median inter-site distance, then
/// scale and orientation are perturbed.
pub fn initial_guesses(pseudo: &PseudoObsPanel, kind: ModelKind, sites: &SiteSet, pairs: &PairSet, n_starts: usize) -> Result<Vec<ModelParams>> {
    let est = NpEstimator::new(pseudo);
    let d = sites.len();
    let mut xis = Vec::with_capacity(pairs.len());
    let mut dists = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs.pairs() {
        xis.push(est.xi(&SubsetB::pair(i, j, d)?, EstimatorKind::CFG)?);
        dists.push(sites.distance(i, j));
    }
    let h = median(dists);
    let xi = median(xis);
    let mut out = match kind {
        ModelKind::Smith => {
            let xi = xi.clamp(1.02, 1.98);
            let s = h / (2.0 * phi_inv(xi / 2.0)?);
            let iso = |s: f64, rho: f64| ModelParams::smith(s * s, rho * s * s, s * s);
            vec![iso(s, 0.0)?, iso(s * 1f64.exp(), 0.0)?, iso(s / 1f64.exp(), 0.0)?, iso(s, 0.5)?, iso(s, -0.5)?]
        }
        ModelKind::Schlather => {
            let xi = xi.clamp(1.02, 1.68);
            let rho = 1.0 - 2.0 * (xi - 1.0) * (xi - 1.0);
            let c = h / (-rho.ln()).sqrt();
            vec![
                ModelParams::schlather(c, 0.0, 0.8)?,
                ModelParams::schlather(c * 1f64.exp(), 0.0, 0.8)?,
                ModelParams::schlather(c / 1f64.exp(), 0.0, 0.8)?,
                ModelParams::schlather(c, FRAC_PI_4, 0.6)?,
                ModelParams::schlather(c, -FRAC_PI_4, 0.6)?,
            ]
        }
    };
    // further starts, if requested, alternate larger scale perturbations
    let mut k: f64 = 2.0;
    while out.len() < n_starts {
        let base = out[0];
        let f = k.exp();
        out.push(match base {
            ModelParams::Smith { s11, .. } => ModelParams::smith(s11 * f * f, 0.0, s11 * f * f)?,
            ModelParams::Schlather { c, .. } => ModelParams::schlather(c * f, 0.0, 0.8)?,
        });
        k = if k > 0.0 { -k } else { -k + 1.0 };
    }
    out.truncate(n_starts.max(1));
    Ok(out)
}

fn run_from(obj: &CompositeLikelihood, kind: ModelKind, start: &ModelParams, step: f64, opts: &FitOptions) -> FitResult {
    let x0 = unconstrain(start);
    let nm = NelderMeadOptions { max_evaluations: opts.max_evaluations, rel_tol: opts.rel_tol, restarts: 1 };
    let r = nelder_mead(|x| -obj.loglik_raw(kind, x), &x0, &[step; 3], &nm);
    let params = constrain(kind, &r.x).unwrap_or(*start);
    FitResult { params, objective: -r.f, converged: r.converged, n_evaluations: r.n_evaluations, start: *start }
}

fn check_fit_inputs(pseudo: &PseudoObsPanel, opts: &FitOptions) -> Result<()> {
    if pseudo.n() < opts.min_n {
        return validation(format!("need at least {} observations to fit, got {}", opts.min_n, pseudo.n()));
    }
    if opts.starts < 1 {
        return validation("at least one start is required");
    }
    Ok(())
}

fn best_of(results: Vec<FitResult>) -> Result<FitResult> {
    let total: usize = results.iter().map(|r| r.n_evaluations).sum();
    let pick = |rs: &[FitResult], conv: bool| {
        rs.iter()
            .filter(|r| !conv || r.converged)
            .filter(|r| r.objective.is_finite())
            .max_by(|a, b| a.objective.total_cmp(&b.objective))
            .cloned()
    };
    match pick(&results, true) {
        Some(mut r) => {
            r.n_evaluations = total;
            Ok(r)
        }
        None => {
            let best = pick(&results, false).unwrap_or_else(|| results[0].clone());
            Err(Error::NoConvergence { params: best.params, objective: best.objective, n_evaluations: total })
        }
    }
}

/// Multistart fit; the best converged start wins.
pub fn fit_model(pseudo: &PseudoObsPanel, kind: ModelKind, sites: &SiteSet, pairs: &PairSet, opts: &FitOptions) -> Result<FitResult> {
    check_fit_inputs(pseudo, opts)?;
    let obj = CompositeLikelihood::new(pseudo, sites, pairs)?;
    let starts = initial_guesses(pseudo, kind, sites, pairs, opts.starts)?;
    best_of(starts.iter().map(|s| run_from(&obj, kind, s, opts.initial_step, opts)).collect())
}

/// Fit started at `warm`; falls back to [`fit_model`]'s multistart when
/// the warm run does not converge.
pub fn fit_model_from(
    pseudo: &PseudoObsPanel,
    kind: ModelKind,
    sites: &SiteSet,
    pairs: &PairSet,
    warm: &ModelParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_fit_inputs(pseudo, opts)?;
    if warm.kind() != kind {
        return validation("warm start belongs to a different model");
    }
    let obj = CompositeLikelihood::new(pseudo, sites, pairs)?;
    let first = run_from(&obj, kind, warm, opts.warm_step, opts);
    if first.converged && first.objective.is_finite() {
        return Ok(first);
    }
    let mut all = vec![first];
    for s in initial_guesses(pseudo, kind, sites, pairs, opts.starts)? {
        all.push(run_from(&obj, kind, &s, opts.initial_step, opts));
    }
    best_of(all)
}
