//! Closed-form kernels of the Smith (Gaussian storm) and Schlather
//! (extremal Gaussian) max-stable models.
//!
//! Bivariate quantities are written on the scale `x = -log u = 1/z`, where
//! the exponent measure of either model is homogeneous of order one:
//!
//! ```text
//! Smith:      V(x1, x2) = x1 Phi(w1) + x2 Phi(w2),   w1 = a/2 + log(x1/x2)/a,  w2 = a - w1
//! Schlather:  V(x1, x2) = (x1 + x2 + S) / 2,         S = sqrt(x1^2 + x2^2 - 2 rho x1 x2)
//! ```
//!
//! and the copula is `C(u1, u2) = exp(-V(x1, x2))`. The copula densities are
//! the mixed partials of `C`, derived by hand.

use crate::data::{ModelParams, SimplexWeight, SiteSet, SubsetB};
use crate::error::{domain, validation, Error, Result};
use crate::mvn::{mvn_cdf_with, phi, phi_density, CorrelationMatrix, MvnOptions, MvnResult};

/// Pseudo-observations closer than this to 0 or 1 are clamped before logs.
pub const U_CLAMP: f64 = 1e-12;

#[inline]
fn clamp_u(u: f64) -> f64 {
    u.clamp(U_CLAMP, 1.0 - U_CLAMP)
}

fn check_unit(u1: f64, u2: f64) -> Result<()> {
    if !(u1 > 0.0 && u1 < 1.0 && u2 > 0.0 && u2 < 1.0) {
        return domain(format!("copula arguments ({u1}, {u2}) must lie in the open unit square"));
    }
    Ok(())
}

fn check_positive(z1: f64, z2: f64) -> Result<()> {
    if !(z1 > 0.0 && z2 > 0.0) {
        return domain(format!("Fréchet arguments ({z1}, {z2}) must be positive"));
    }
    Ok(())
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0) || a.is_nan() {
        return domain(format!("Mahalanobis distance a = {a} must be positive"));
    }
    Ok(())
}

fn check_rho(rho: f64, allow_one: bool) -> Result<()> {
    let ok = rho > -1.0 && if allow_one { rho <= 1.0 } else { rho < 1.0 };
    if !ok {
        return domain(format!("correlation rho = {rho} out of range"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Smith
// ---------------------------------------------------------------------------

/// `a^2 = h' Sigma^{-1} h` for the Smith covariance.
pub fn mahalanobis(h: [f64; 2], params: &ModelParams) -> Result<f64> {
    let ModelParams::Smith { s11, s12, s22 } = *params else {
        return validation("Mahalanobis distance needs Smith parameters");
    };
    let det = s11 * s22 - s12 * s12;
    let q = (s22 * h[0] * h[0] - 2.0 * s12 * h[0] * h[1] + s11 * h[1] * h[1]) / det;
    Ok(q.max(0.0).sqrt())
}

/// Symmetric matrix of `a_ij` over all sites.
#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisA {
    a: Vec<Vec<f64>>,
}

impl MahalanobisA {
    pub fn new(params: &ModelParams, sites: &SiteSet) -> Result<Self> {
        params.validate()?;
        let d = sites.len();
        let mut a = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..i {
                let v = mahalanobis(sites.displacement(i, j), params)?;
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        Ok(Self { a })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn d(&self) -> usize {
        self.a.len()
    }

    /// Multiplies every distance by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { a: self.a.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect() }
    }
}

/// Hüsler–Reiss parametrization with `delta_ij = 2 / a_ij`.
///
/// `Sigma_j` has entries `(a_ij^2 + a_kj^2 - a_ik^2) / (2 a_ij a_kj)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HuslerReissDelta {
    a: MahalanobisA,
}

impl HuslerReissDelta {
    pub fn from_mahalanobis(a: MahalanobisA) -> Self {
        Self { a }
    }

    /// `delta_ij^{-1} = a_ij / 2`; zero on the diagonal.
    pub fn delta_inv(&self, i: usize, j: usize) -> f64 {
        0.5 * self.a.get(i, j)
    }

    /// `Sigma_j` restricted to `others` (which must exclude `j`).
    pub fn sigma_j(&self, j: usize, others: &[usize]) -> Result<CorrelationMatrix> {
        let k = others.len();
        let mut rows = vec![vec![0.0; k]; k];
        for (p, &i) in others.iter().enumerate() {
            let aij = self.a.get(i, j);
            if !(aij > 0.0) {
                return Err(Error::Numerical(format!("sites {i} and {j} have zero Mahalanobis distance")));
            }
            rows[p][p] = 1.0;
            for (q, &l) in others.iter().enumerate().take(p) {
                let alj = self.a.get(l, j);
                let ail = self.a.get(i, l);
                let v = ((aij * aij + alj * alj - ail * ail) / (2.0 * aij * alj)).clamp(-1.0, 1.0);
                rows[p][q] = v;
                rows[q][p] = v;
            }
        }
        CorrelationMatrix::new(rows)
    }
}

#[inline]
fn smith_v(x1: f64, x2: f64, a: f64) -> f64 {
    let w1 = 0.5 * a + (x1 / x2).ln() / a;
    x1 * phi(w1) + x2 * phi(a - w1)
}

/// Joint c.d.f. of `(Z(x1), Z(x2))` at Fréchet levels `z1`, `z2`.
pub fn smith_bivariate_cdf(z1: f64, z2: f64, a: f64) -> Result<f64> {
    check_positive(z1, z2)?;
    check_a(a)?;
    Ok((-smith_v(1.0 / z1, 1.0 / z2, a)).exp())
}

/// Bivariate Hüsler–Reiss copula `C(u1, u2)`.
pub fn smith_pair_copula_cdf(u1: f64, u2: f64, a: f64) -> Result<f64> {
    check_unit(u1, u2)?;
    check_a(a)?;
    Ok((-smith_v(-u1.ln(), -u2.ln(), a)).exp())
}

/// Log copula density on the `x` scale; `lx*` are `ln x*`.
#[inline]
pub(crate) fn smith_log_density_x(x1: f64, lx1: f64, x2: f64, lx2: f64, a: f64) -> f64 {
    let w1 = 0.5 * a + (lx1 - lx2) / a;
    let w2 = a - w1;
    let p1 = phi(w1);
    let p2 = phi(w2);
    let v = x1 * p1 + x2 * p2;
    x1 + x2 - v + (p1 * p2 + phi_density(w1) / (a * x2)).ln()
}

pub fn smith_pair_log_density(u1: f64, u2: f64, a: f64) -> Result<f64> {
    check_unit(u1, u2)?;
    check_a(a)?;
    let (x1, x2) = (-clamp_u(u1).ln(), -clamp_u(u2).ln());
    Ok(smith_log_density_x(x1, x1.ln(), x2, x2.ln(), a))
}

pub fn smith_pair_copula_density(u1: f64, u2: f64, a: f64) -> Result<f64> {
    smith_pair_log_density(u1, u2, a).map(f64::exp)
}

/// Bivariate Pickands function of the Smith model.
pub fn smith_pair_pickands(w1: f64, a: f64) -> Result<f64> {
    check_a(a)?;
    if !(0.0..=1.0).contains(&w1) {
        return domain(format!("weight {w1} outside [0, 1]"));
    }
    if w1 == 0.0 || w1 == 1.0 {
        return Ok(1.0);
    }
    let w2 = 1.0 - w1;
    Ok(w1 * phi(0.5 * a + (w1 / w2).ln() / a) + w2 * phi(0.5 * a + (w2 / w1).ln() / a))
}

/// `2 Phi(a/2)`.
pub fn smith_pair_extremal_coefficient(a: f64) -> f64 {
    2.0 * phi(0.5 * a)
}

fn mix_seed(seed: u64, j: usize) -> u64 {
    seed ^ (j as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Smith/Hüsler–Reiss Pickands function at an arbitrary simplex point.
///
/// Sites with zero weight drop out (their upper limit is `+inf`), so the
/// value only involves the support of `w`.
pub fn smith_pickands(w: &SimplexWeight, params: &ModelParams, sites: &SiteSet, opts: &MvnOptions) -> Result<MvnResult> {
    if w.len() != sites.len() {
        return validation(format!("weight has {} coordinates for {} sites", w.len(), sites.len()));
    }
    let support = w.support();
    if support.len() == 1 {
        return Ok(MvnResult { value: 1.0, error_estimate: 0.0, n_evaluations: 0 });
    }
    let sub = sites.subset(&support)?;
    let hr = HuslerReissDelta::from_mahalanobis(MahalanobisA::new(params, &sub)?);
    let ws: Vec<f64> = support.iter().map(|&j| w.as_slice()[j]).collect();
    let b = ws.len();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for j in 0..b {
        let others: Vec<usize> = (0..b).filter(|&i| i != j).collect();
        let upper: Vec<f64> = others
            .iter()
            .map(|&i| {
                let di = hr.delta_inv(i, j);
                di + (ws[j] / ws[i]).ln() / (2.0 * di)
            })
            .collect();
        let sigma = hr.sigma_j(j, &others)?;
        let r = mvn_cdf_with(&upper, &sigma, &MvnOptions { seed: mix_seed(opts.seed, j), ..*opts })?;
        total += ws[j] * r.value;
        err += ws[j] * r.error_estimate;
        evals += r.n_evaluations;
    }
    Ok(MvnResult { value: total, error_estimate: err, n_evaluations: evals })
}

/// `xi_B = sum_{j in B} Phi_{Sigma_{j,B}}(a_ij / 2 : i in B \ {j})`.
pub fn smith_extremal_coefficient(subset: &SubsetB, params: &ModelParams, sites: &SiteSet, opts: &MvnOptions) -> Result<MvnResult> {
    if subset.indices().iter().any(|&i| i >= sites.len()) {
        return validation("subset does not fit the site set");
    }
    let a = MahalanobisA::new(params, sites)?;
    smith_extremal_coefficient_from_a(subset, &a, opts)
}

pub fn smith_extremal_coefficient_from_a(subset: &SubsetB, a: &MahalanobisA, opts: &MvnOptions) -> Result<MvnResult> {
    let idx = subset.indices();
    if idx.len() == 2 {
        let v = smith_pair_extremal_coefficient(a.get(idx[0], idx[1]));
        return Ok(MvnResult { value: v, error_estimate: 0.0, n_evaluations: 0 });
    }
    let hr = HuslerReissDelta::from_mahalanobis(a.clone());
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for &j in idx {
        let others: Vec<usize> = idx.iter().copied().filter(|&i| i != j).collect();
        let upper: Vec<f64> = others.iter().map(|&i| hr.delta_inv(i, j)).collect();
        let sigma = hr.sigma_j(j, &others)?;
        let r = mvn_cdf_with(&upper, &sigma, &MvnOptions { seed: mix_seed(opts.seed, j), ..*opts })?;
        total += r.value;
        err += r.error_estimate;
        evals += r.n_evaluations;
    }
    Ok(MvnResult { value: total, error_estimate: err, n_evaluations: evals })
}

// ---------------------------------------------------------------------------
// Schlather
// ---------------------------------------------------------------------------

/// Anisotropic Gaussian correlation `rho(h) = exp(-h' B h / c^2)` with
/// `B = H'H`.
pub fn schlather_correlation(h: [f64; 2], params: &ModelParams) -> Result<f64> {
    let ModelParams::Schlather { c, phi: ang, r } = *params else {
        return validation("correlation function needs Schlather parameters");
    };
    let (s, co) = ang.sin_cos();
    // rows of H applied to h
    let u = co * h[0] + s * h[1];
    let v = (-s * h[0] + co * h[1]) / r;
    Ok((-(u * u + v * v) / (c * c)).exp())
}

fn schlather_v(x1: f64, x2: f64, rho: f64) -> f64 {
    let s = (x1 * x1 + x2 * x2 - 2.0 * rho * x1 * x2).max(0.0).sqrt();
    0.5 * (x1 + x2 + s)
}

pub fn schlather_bivariate_cdf(z1: f64, z2: f64, rho: f64) -> Result<f64> {
    check_positive(z1, z2)?;
    check_rho(rho, true)?;
    let radicand = 1.0 - 2.0 * (rho + 1.0) * z1 * z2 / ((z1 + z2) * (z1 + z2));
    if radicand < -1e-12 {
        return Err(Error::Numerical(format!("negative radicand {radicand}")));
    }
    let v = 0.5 * (1.0 / z1 + 1.0 / z2) * (1.0 + radicand.max(0.0).sqrt());
    Ok((-v).exp())
}

pub fn schlather_pair_copula_cdf(u1: f64, u2: f64, rho: f64) -> Result<f64> {
    check_unit(u1, u2)?;
    check_rho(rho, true)?;
    Ok((-schlather_v(-u1.ln(), -u2.ln(), rho)).exp())
}

#[inline]
pub(crate) fn schlather_log_density_x(x1: f64, x2: f64, rho: f64) -> f64 {
    let s2 = x1 * x1 + x2 * x2 - 2.0 * rho * x1 * x2;
    let s = s2.sqrt();
    let v = 0.5 * (x1 + x2 + s);
    let d1 = 0.5 * (1.0 + (x1 - rho * x2) / s);
    let d2 = 0.5 * (1.0 + (x2 - rho * x1) / s);
    let cross = (1.0 - rho * rho) * x1 * x2 / (2.0 * s2 * s);
    x1 + x2 - v + (d1 * d2 + cross).ln()
}

/// Log density of the bivariate Schlather copula; needs `rho < 1`
/// (the copula is singular at `rho = 1`).
pub fn schlather_pair_log_density(u1: f64, u2: f64, rho: f64) -> Result<f64> {
    check_unit(u1, u2)?;
    check_rho(rho, false)?;
    let (x1, x2) = (-clamp_u(u1).ln(), -clamp_u(u2).ln());
    Ok(schlather_log_density_x(x1, x2, rho))
}

pub fn schlather_pair_copula_density(u1: f64, u2: f64, rho: f64) -> Result<f64> {
    schlather_pair_log_density(u1, u2, rho).map(f64::exp)
}

/// Bivariate Pickands function of the Schlather model.
pub fn schlather_pair_pickands(w1: f64, rho: f64) -> Result<f64> {
    check_rho(rho, true)?;
    if !(0.0..=1.0).contains(&w1) {
        return domain(format!("weight {w1} outside [0, 1]"));
    }
    let rad = (1.0 - 2.0 * (rho + 1.0) * w1 * (1.0 - w1)).max(0.0);
    Ok(0.5 * (1.0 + rad.sqrt()))
}

/// `1 + sqrt((1 - rho) / 2)`.
pub fn schlather_pair_extremal_coefficient(rho: f64) -> f64 {
    1.0 + (0.5 * (1.0 - rho)).max(0.0).sqrt()
}

// ---------------------------------------------------------------------------
// Model-level helpers
// ---------------------------------------------------------------------------

/// Dependence of one pair of sites under a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairDependence {
    Smith { a: f64 },
    Schlather { rho: f64 },
}

impl PairDependence {
    pub fn between(params: &ModelParams, sites: &SiteSet, i: usize, j: usize) -> Result<Self> {
        let h = sites.displacement(i, j);
        Ok(match params {
            ModelParams::Smith { .. } => PairDependence::Smith { a: mahalanobis(h, params)? },
            ModelParams::Schlather { .. } => PairDependence::Schlather { rho: schlather_correlation(h, params)? },
        })
    }

    pub fn extremal_coefficient(&self) -> f64 {
        match *self {
            PairDependence::Smith { a } => smith_pair_extremal_coefficient(a),
            PairDependence::Schlather { rho } => schlather_pair_extremal_coefficient(rho),
        }
    }

    pub fn log_density(&self, u1: f64, u2: f64) -> Result<f64> {
        match *self {
            PairDependence::Smith { a } => smith_pair_log_density(u1, u2, a),
            PairDependence::Schlather { rho } => schlather_pair_log_density(u1, u2, rho),
        }
    }
}

/// Model-implied pairwise extremal coefficient of sites `i`, `j`.
pub fn pair_extremal_coefficient(params: &ModelParams, sites: &SiteSet, i: usize, j: usize) -> Result<f64> {
    Ok(PairDependence::between(params, sites, i, j)?.extremal_coefficient())
}
