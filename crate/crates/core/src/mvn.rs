//! Standard normal and multivariate normal c.d.f.s.
//!
//! The multivariate routine is the separation-of-variables transform of
//! Genz: the integration variables are reordered so that the most
//! constrained ones come first, the correlation matrix is Cholesky
//! factored along that order, and the resulting integral over the unit cube
//! is evaluated with randomly shifted rank-1 lattice rules.
//!
//! Rank-deficient matrices are handled exactly rather than through jitter
//! alone: once the remaining conditional variances vanish, each leftover
//! row is an affine function of the sampled variables and is folded into
//! the truncation interval of the last variable it depends on. The Smith
//! model produces rank-2 matrices of arbitrary size, for which this reduces
//! the integration dimension to one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, validation, Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Conditional variances at or below this are treated as exact zeros.
const SINGULAR_VAR: f64 = 1e-10;
/// Negative conditional variances beyond the jitter level mean not PSD.
const PSD_JITTER: f64 = 1e-10;
const SHIFTS: usize = 12;
const ERROR_SCALE: f64 = 3.0;

/// Standard normal c.d.f.
#[inline]
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn phi_density(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal quantile; errors outside `(0, 1)`.
pub fn phi_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile needs p in (0, 1), got {p}"));
    }
    Ok(ppnd16(p))
}

/// Alias of [`phi`].
pub fn scalar_phi(x: f64) -> f64 {
    phi(x)
}

/// Alias of [`phi_inv`].
pub fn scalar_phi_inv(p: f64) -> Result<f64> {
    phi_inv(p)
}

/// Wichura's AS 241 (PPND16), about 1e-16 relative accuracy.
#[allow(clippy::excessive_precision)]
fn ppnd16(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_5,
        133.141_667_891_784_38,
        1_971.590_950_306_551_3,
        13_731.693_765_509_461,
        45_921.953_931_549_87,
        67_265.770_927_008_7,
        33_430.575_583_588_128,
        2_509.080_928_730_122_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_91,
        687.187_007_492_057_9,
        5_394.196_021_424_751,
        21_213.794_301_586_597,
        39_307.895_800_092_71,
        28_729.085_735_721_943,
        5_226.495_278_852_545,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_5,
        4.630_337_846_156_546,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        0.241_780_725_177_450_6,
        0.022_723_844_989_269_184,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        0.689_767_334_985_1,
        0.148_103_976_427_480_08,
        0.015_198_666_563_616_457,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_9e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        0.296_560_571_828_504_9,
        0.026_532_189_526_576_124,
        0.001_242_660_947_388_078_4,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_888,
        0.136_929_880_922_735_8,
        0.014_875_361_290_850_615,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];
    fn horner(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    let r = (-(if q < 0.0 { p } else { 1.0 - p }).ln()).sqrt();
    let val = if r <= 5.0 {
        horner(&C, r - 1.6) / horner(&D, r - 1.6)
    } else {
        horner(&E, r - 5.0) / horner(&F, r - 5.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Quantile clamped away from 0 and 1; used inside the integrand where the
/// argument is a product of probabilities that can round to the boundary.
#[inline]
fn phi_inv_clamped(p: f64) -> f64 {
    ppnd16(p.clamp(1e-300, 1.0 - 1e-16))
}

/// A symmetric matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    k: usize,
    data: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return validation("empty correlation matrix");
        }
        if rows.iter().any(|r| r.len() != k) {
            return validation("correlation matrix must be square");
        }
        for i in 0..k {
            if (rows[i][i] - 1.0).abs() > 1e-12 {
                return validation(format!("diagonal entry {i} is {} instead of 1", rows[i][i]));
            }
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if !a.is_finite() || (a - b).abs() > 1e-12 {
                    return validation(format!("entries ({i},{j}) and ({j},{i}) differ"));
                }
                if a.abs() > 1.0 + 1e-12 {
                    return validation(format!("entry ({i},{j}) = {a} outside [-1, 1]"));
                }
            }
        }
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                data[i * k + j] = if i == j { 1.0 } else { 0.5 * (rows[i][j] + rows[j][i]) };
            }
        }
        Ok(Self { k, data })
    }

    /// `k x k` identity.
    pub fn identity(k: usize) -> Self {
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        Self { k, data }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    /// Principal submatrix on the given indices.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut data = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Self { k, data }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MvnResult {
    pub value: f64,
    pub error_estimate: f64,
    pub n_evaluations: usize,
}

impl MvnResult {
    fn exact(value: f64) -> Self {
        Self { value, error_estimate: 0.0, n_evaluations: 0 }
    }

    pub fn within_tolerance(&self, tol: f64) -> bool {
        self.error_estimate <= tol
    }
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MvnOptions {
    /// Target absolute error.
    pub tol: f64,
    /// Integrand evaluation budget.
    pub max_evaluations: usize,
    pub seed: u64,
}

impl Default for MvnOptions {
    fn default() -> Self {
        Self { tol: 1e-4, max_evaluations: 1_000_000, seed: 0x6d76_6e5f_7365_6564 }
    }
}

/// `P(Z <= upper)` for `Z ~ N(0, corr)`.
pub fn mvn_cdf(upper: &[f64], corr: &CorrelationMatrix, tol: f64, seed: u64) -> Result<MvnResult> {
    mvn_cdf_with(upper, corr, &MvnOptions { tol, seed, ..MvnOptions::default() })
}

pub fn mvn_cdf_with(upper: &[f64], corr: &CorrelationMatrix, opts: &MvnOptions) -> Result<MvnResult> {
    let lower = vec![f64::NEG_INFINITY; upper.len()];
    mvn_rect(&lower, upper, corr, opts)
}

/// `P(lower <= Z <= upper)` for `Z ~ N(0, corr)`.
pub fn mvn_rect(lower: &[f64], upper: &[f64], corr: &CorrelationMatrix, opts: &MvnOptions) -> Result<MvnResult> {
    let k = corr.dim();
    if lower.len() != k || upper.len() != k {
        return validation(format!("bounds have length {}/{} for a {k}-dimensional matrix", lower.len(), upper.len()));
    }
    if !(opts.tol > 0.0) {
        return validation("mvn tolerance must be positive");
    }
    if lower.iter().chain(upper).any(|v| v.is_nan()) {
        return validation("NaN integration bound");
    }
    if lower.iter().zip(upper).any(|(a, b)| a >= b) {
        return Ok(MvnResult::exact(0.0));
    }
    // Unconstrained coordinates integrate out exactly.
    let active: Vec<usize> =
        (0..k).filter(|&i| lower[i] > f64::NEG_INFINITY || upper[i] < f64::INFINITY).collect();
    match active.len() {
        0 => return Ok(MvnResult::exact(1.0)),
        1 => {
            let i = active[0];
            return Ok(MvnResult::exact(phi(upper[i]) - phi(lower[i])));
        }
        _ => {}
    }
    let sub = corr.submatrix(&active);
    let a: Vec<f64> = active.iter().map(|&i| lower[i]).collect();
    let b: Vec<f64> = active.iter().map(|&i| upper[i]).collect();
    let plan = Plan::build(&sub, &a, &b)?;
    Ok(plan.integrate(opts))
}

/// A linear constraint `lo <= sum_m coef[m] y_m + coef_last * y_t <= hi`
/// attached to variable `t`, already divided through by `coef_last`.
#[derive(Debug, Clone)]
struct Constraint {
    coef: Vec<f64>,
    lo: f64,
    hi: f64,
}

/// Factored, reordered problem ready for integration.
#[derive(Debug, Clone)]
struct Plan {
    /// `groups[t]` constrains integration variable `t`.
    groups: Vec<Vec<Constraint>>,
    /// Zero-probability shortcut for an infeasible degenerate constraint.
    infeasible: bool,
}

impl Plan {
    fn build(corr: &CorrelationMatrix, a: &[f64], b: &[f64]) -> Result<Self> {
        let k = corr.dim();
        let mut cov: Vec<f64> = (0..k * k).map(|ix| corr.get(ix / k, ix % k)).collect();
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        // l[i*k + m]: Cholesky coefficient of row i on variable m
        let mut l = vec![0.0; k * k];
        let mut y_mean = vec![0.0; k];
        let mut rank = 0;

        let swap = |cov: &mut Vec<f64>, l: &mut Vec<f64>, a: &mut Vec<f64>, b: &mut Vec<f64>, i: usize, j: usize| {
            if i == j {
                return;
            }
            a.swap(i, j);
            b.swap(i, j);
            for m in 0..k {
                cov.swap(i * k + m, j * k + m);
            }
            for m in 0..k {
                cov.swap(m * k + i, m * k + j);
            }
            for m in 0..k {
                l.swap(i * k + m, j * k + m);
            }
        };

        for i in 0..k {
            // pick the remaining row with the smallest expected interval probability
            let mut best: Option<(usize, f64, f64)> = None;
            for j in i..k {
                let s2: f64 = (0..i).map(|m| l[j * k + m] * l[j * k + m]).sum();
                let v = cov[j * k + j] - s2;
                if v < -PSD_JITTER {
                    return Err(Error::Numerical(format!(
                        "correlation matrix is not positive semidefinite (conditional variance {v:.3e})"
                    )));
                }
                if v <= SINGULAR_VAR {
                    continue;
                }
                let sd = v.sqrt();
                let mu: f64 = (0..i).map(|m| l[j * k + m] * y_mean[m]).sum();
                let p = phi((b[j] - mu) / sd) - phi((a[j] - mu) / sd);
                if best.is_none_or(|(_, bp, _)| p < bp) {
                    best = Some((j, p, v));
                }
            }
            let Some((j, _, v)) = best else { break };
            swap(&mut cov, &mut l, &mut a, &mut b, i, j);
            let sd = v.sqrt();
            l[i * k + i] = sd;
            for r in i + 1..k {
                let s: f64 = (0..i).map(|m| l[r * k + m] * l[i * k + m]).sum();
                l[r * k + i] = (cov[r * k + i] - s) / sd;
            }
            let mu: f64 = (0..i).map(|m| l[i * k + m] * y_mean[m]).sum();
            let (lo, hi) = ((a[i] - mu) / sd, (b[i] - mu) / sd);
            y_mean[i] = truncated_mean(lo, hi);
            rank = i + 1;
        }

        let mut groups: Vec<Vec<Constraint>> = vec![Vec::new(); rank];
        for (t, g) in groups.iter_mut().enumerate() {
            let d = l[t * k + t];
            g.push(Constraint { coef: (0..t).map(|m| l[t * k + m] / d).collect(), lo: a[t] / d, hi: b[t] / d });
        }
        let mut infeasible = false;
        for r in rank..k {
            let row: Vec<f64> = (0..rank).map(|m| l[r * k + m]).collect();
            let scale = row.iter().fold(0.0f64, |s, c| s.max(c.abs()));
            match (0..rank).rev().find(|&m| row[m].abs() > 1e-12 * scale.max(1e-300)) {
                None => {
                    // Z_r is identically zero
                    if !(a[r] <= 0.0 && 0.0 <= b[r]) {
                        infeasible = true;
                    }
                }
                Some(t) => {
                    let c = row[t];
                    let coef: Vec<f64> = (0..t).map(|m| row[m] / c).collect();
                    let (mut lo, mut hi) = (a[r] / c, b[r] / c);
                    if c < 0.0 {
                        std::mem::swap(&mut lo, &mut hi);
                    }
                    groups[t].push(Constraint { coef, lo, hi });
                }
            }
        }
        Ok(Self { groups, infeasible })
    }

    /// Interval of variable `t` given the earlier sampled variables.
    #[inline]
    fn interval(group: &[Constraint], y: &[f64]) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for c in group {
            let s: f64 = c.coef.iter().zip(y).map(|(c, y)| c * y).sum();
            lo = lo.max(c.lo - s);
            hi = hi.min(c.hi - s);
        }
        (lo, hi)
    }

    fn integrand(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let last = self.groups.len() - 1;
        let mut prod = 1.0;
        for (t, g) in self.groups.iter().enumerate() {
            let (lo, hi) = Self::interval(g, &y[..t]);
            if lo >= hi {
                return 0.0;
            }
            let (pl, ph) = (phi(lo), phi(hi));
            let p = ph - pl;
            if p <= 0.0 {
                return 0.0;
            }
            prod *= p;
            if t < last {
                y[t] = phi_inv_clamped(pl + w[t] * p);
            }
        }
        prod
    }

    fn integrate(&self, opts: &MvnOptions) -> MvnResult {
        if self.infeasible {
            return MvnResult::exact(0.0);
        }
        let dim = self.groups.len() - 1;
        let mut y = vec![0.0; self.groups.len()];
        if dim == 0 {
            return MvnResult::exact(self.integrand(&[], &mut y));
        }
        let gen = richtmyer(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut w = vec![0.0; dim];
        let mut shift = vec![0.0; dim];

        // inverse-variance pooling of successive lattice batches
        let mut pooled_value = 0.0;
        let mut pooled_var = f64::INFINITY;
        let mut evaluations = 0usize;
        let mut points = 64usize;
        loop {
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..SHIFTS {
                for s in shift.iter_mut() {
                    *s = rng.gen::<f64>();
                }
                let mut acc = 0.0;
                for j in 1..=points {
                    for ((wi, &g), &s) in w.iter_mut().zip(&gen).zip(&shift) {
                        let x = (j as f64 * g + s).fract();
                        *wi = (2.0 * x - 1.0).abs();
                    }
                    acc += self.integrand(&w, &mut y);
                    for wi in w.iter_mut() {
                        *wi = 1.0 - *wi;
                    }
                    acc += self.integrand(&w, &mut y);
                }
                let est = acc / (2 * points) as f64;
                sum += est;
                sum2 += est * est;
            }
            evaluations += 2 * points * SHIFTS;
            let m = SHIFTS as f64;
            let mean = sum / m;
            let var = ((sum2 / m - mean * mean).max(0.0)) / (m - 1.0);
            if pooled_var.is_infinite() {
                pooled_value = mean;
                pooled_var = var;
            } else if var == 0.0 || pooled_var == 0.0 {
                pooled_value = if var == 0.0 { mean } else { pooled_value };
                pooled_var = 0.0;
            } else {
                let wgt = pooled_var / (pooled_var + var);
                pooled_value += wgt * (mean - pooled_value);
                pooled_var *= 1.0 - wgt;
            }
            let error = ERROR_SCALE * pooled_var.sqrt();
            if error <= opts.tol || evaluations >= opts.max_evaluations {
                return MvnResult {
                    value: pooled_value.clamp(0.0, 1.0),
                    error_estimate: error,
                    n_evaluations: evaluations,
                };
            }
            points = (points * 2).min((opts.max_evaluations - evaluations).div_ceil(2 * SHIFTS).max(1));
        }
    }
}

fn truncated_mean(lo: f64, hi: f64) -> f64 {
    let p = phi(hi) - phi(lo);
    if p <= 1e-300 {
        return if lo.is_finite() { lo } else if hi.is_finite() { hi } else { 0.0 };
    }
    let dl = if lo.is_finite() { phi_density(lo) } else { 0.0 };
    let dh = if hi.is_finite() { phi_density(hi) } else { 0.0 };
    (dl - dh) / p
}

/// Richtmyer generator: fractional parts of square roots of primes.
fn richtmyer(dim: usize) -> Vec<f64> {
    let mut primes = Vec::with_capacity(dim);
    let mut c = 2u64;
    while primes.len() < dim {
        if (2..c).take_while(|p| p * p <= c).all(|p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes.into_iter().map(|p| (p as f64).sqrt().fract()).collect()
}
