//! Samplers for the Smith and Schlather processes at a finite set of sites.
//!
//! Both use the spectral representation `Z(x) = sup_j S_j W_j(x)` where
//! `S_1 > S_2 > ...` are the points of a Poisson process with intensity
//! `s^-2 ds`, generated as reciprocals of cumulative standard exponentials.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{MaximaPanel, ModelParams, Panel, PseudoObsPanel, SiteSet};
use crate::error::{validation, Error, Result};
use crate::linalg::pivoted_cholesky;
use crate::models::schlather_correlation;
use crate::rng::substream;

/// Rows that exhaust `max_points` are redrawn at most this many times.
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Bound `u_max` on the standardized Gaussian field used by the
    /// Schlather stopping rule.
    pub truncation_threshold: f64,
    pub max_points: usize,
    pub jitter: f64,
    /// Padding of the Smith storm-center window, in standard deviations.
    pub padding: f64,
    pub seed: u64,
    pub stream_id: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { truncation_threshold: 5.0, max_points: 100_000, jitter: 1e-10, padding: 6.0, seed: 0, stream_id: 0 }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.truncation_threshold > 0.0) {
            return validation("truncation threshold must be positive");
        }
        if self.max_points < 1 {
            return validation("max_points must be at least 1");
        }
        if !(self.jitter >= 0.0) {
            return validation("jitter must be non-negative");
        }
        if !(self.padding >= 0.0) {
            return validation("padding must be non-negative");
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        substream(self.seed, &[self.stream_id])
    }
}

#[derive(Debug, Clone)]
struct SmithSampler {
    coords: Vec<[f64; 2]>,
    inv: [f64; 3],
    f_max: f64,
    lo: [f64; 2],
    width: [f64; 2],
    area: f64,
    max_points: usize,
}

impl SmithSampler {
    fn new(params: &ModelParams, sites: &SiteSet, cfg: &SimConfig) -> Result<Self> {
        let ModelParams::Smith { s11, s12, s22 } = *params else {
            return validation("Smith sampler needs Smith parameters");
        };
        params.validate()?;
        let det = s11 * s22 - s12 * s12;
        let half = 0.5 * (s11 - s22);
        let lmax = 0.5 * (s11 + s22) + (half * half + s12 * s12).sqrt();
        let pad = cfg.padding * lmax.sqrt();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in sites.coords() {
            for k in 0..2 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        let lo = [lo[0] - pad, lo[1] - pad];
        let width = [hi[0] - lo[0] + pad, hi[1] - lo[1] + pad];
        Ok(Self {
            coords: sites.coords().to_vec(),
            inv: [s22 / det, -s12 / det, s11 / det],
            f_max: 1.0 / (2.0 * PI * det.sqrt()),
            lo,
            width,
            area: width[0] * width[1],
            max_points: cfg.max_points,
        })
    }

    fn draw_row(&self, rng: &mut ChaCha8Rng, z: &mut [f64]) -> bool {
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut gamma = 0.0;
        let mut zmin = 0.0;
        for _ in 0..self.max_points {
            gamma += rng.sample::<f64, _>(Exp1);
            let peak = self.area / gamma * self.f_max;
            if peak <= zmin {
                return true;
            }
            let cx = self.lo[0] + self.width[0] * rng.gen::<f64>();
            let cy = self.lo[1] + self.width[1] * rng.gen::<f64>();
            let mut changed = false;
            for (zi, c) in z.iter_mut().zip(&self.coords) {
                if peak <= *zi {
                    continue;
                }
                let (hx, hy) = (c[0] - cx, c[1] - cy);
                let q = self.inv[0] * hx * hx + 2.0 * self.inv[1] * hx * hy + self.inv[2] * hy * hy;
                let v = peak * (-0.5 * q).exp();
                if v > *zi {
                    *zi = v;
                    changed = true;
                }
            }
            if changed {
                zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
            }
        }
        false
    }
}

#[derive(Debug, Clone)]
struct SchlatherSampler {
    /// Factor of the site correlation matrix, d rows by `rank` columns.
    factor: Vec<f64>,
    rank: usize,
    bound: f64,
    max_points: usize,
}

/// `W = max(0, sqrt(2 pi) eps)` has mean one when `eps` is standard normal.
const SCHLATHER_SCALE: f64 = 2.506_628_274_631_000_7;

impl SchlatherSampler {
    fn new(params: &ModelParams, sites: &SiteSet, cfg: &SimConfig) -> Result<Self> {
        if !matches!(params, ModelParams::Schlather { .. }) {
            return validation("Schlather sampler needs Schlather parameters");
        }
        params.validate()?;
        let d = sites.len();
        let mut m = vec![vec![0.0; d]; d];
        for i in 0..d {
            m[i][i] = 1.0 + cfg.jitter;
            for j in 0..i {
                let r = schlather_correlation(sites.displacement(i, j), params)?;
                m[i][j] = r;
                m[j][i] = r;
            }
        }
        let (l, rank) = pivoted_cholesky(&m, 1e-12)
            .map_err(|e| Error::Numerical(format!("site correlation matrix could not be factorized: {e}")))?;
        Ok(Self {
            factor: l.into_iter().flatten().collect(),
            rank,
            bound: SCHLATHER_SCALE * cfg.truncation_threshold,
            max_points: cfg.max_points,
        })
    }

    fn draw_row(&self, rng: &mut ChaCha8Rng, z: &mut [f64], y: &mut [f64]) -> bool {
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut gamma = 0.0;
        let mut zmin = 0.0;
        for _ in 0..self.max_points {
            gamma += rng.sample::<f64, _>(Exp1);
            let s = 1.0 / gamma;
            if s * self.bound < zmin {
                return true;
            }
            for v in y.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let mut changed = false;
            for (i, zi) in z.iter_mut().enumerate() {
                let row = &self.factor[i * self.rank..(i + 1) * self.rank];
                let eps: f64 = row.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
                let v = s * SCHLATHER_SCALE * eps;
                if v > *zi {
                    *zi = v;
                    changed = true;
                }
            }
            if changed {
                zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
            }
        }
        false
    }
}

/// A sampler prepared for one parameter value and site set; reusable across
/// replicates.
#[derive(Debug, Clone)]
pub struct Simulator {
    inner: Inner,
    d: usize,
}

#[derive(Debug, Clone)]
enum Inner {
    Smith(SmithSampler),
    Schlather(SchlatherSampler),
}

impl Simulator {
    pub fn new(params: &ModelParams, sites: &SiteSet, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let inner = match params {
            ModelParams::Smith { .. } => Inner::Smith(SmithSampler::new(params, sites, cfg)?),
            ModelParams::Schlather { .. } => Inner::Schlather(SchlatherSampler::new(params, sites, cfg)?),
        };
        Ok(Self { inner, d: sites.len() })
    }

    /// `n` rows on the unit Fréchet scale.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Panel> {
        if n < 1 {
            return validation("number of replicates must be at least 1");
        }
        let d = self.d;
        let mut data = vec![0.0; n * d];
        let mut row = vec![0.0; d];
        let mut y = match &self.inner {
            Inner::Schlather(s) => vec![0.0; s.rank],
            Inner::Smith(_) => Vec::new(),
        };
        for i in 0..n {
            let mut tries = 0;
            loop {
                let ok = match &self.inner {
                    Inner::Smith(s) => s.draw_row(rng, &mut row),
                    Inner::Schlather(s) => s.draw_row(rng, &mut row, &mut y),
                };
                if ok && row.iter().all(|&v| v > 0.0) {
                    break;
                }
                tries += 1;
                log::warn!("simulated row {i} hit the spectral point cap; redrawing");
                if tries >= MAX_REDRAWS {
                    return Err(Error::Numerical(format!("row {i} could not be simulated within the point cap")));
                }
            }
            for (j, &v) in row.iter().enumerate() {
                data[j * n + i] = v;
            }
        }
        Ok(Panel::from_raw(n, d, data))
    }

    /// `n` rows of the copula, `U = exp(-1/Z)`.
    pub fn sample_copula(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<PseudoObsPanel> {
        let z = self.sample(n, rng)?;
        PseudoObsPanel::new(z.map(|v| (-1.0 / v).exp().clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)))
    }
}

pub fn simulate_smith(sites: &SiteSet, params: &ModelParams, n: usize, cfg: &SimConfig) -> Result<MaximaPanel> {
    if !matches!(params, ModelParams::Smith { .. }) {
        return validation("simulate_smith needs Smith parameters");
    }
    simulate(params, sites, n, cfg)
}

pub fn simulate_schlather(sites: &SiteSet, params: &ModelParams, n: usize, cfg: &SimConfig) -> Result<MaximaPanel> {
    if !matches!(params, ModelParams::Schlather { .. }) {
        return validation("simulate_schlather needs Schlather parameters");
    }
    simulate(params, sites, n, cfg)
}

pub fn simulate(params: &ModelParams, sites: &SiteSet, n: usize, cfg: &SimConfig) -> Result<MaximaPanel> {
    let sim = Simulator::new(params, sites, cfg)?;
    MaximaPanel::new(sim.sample(n, &mut cfg.rng())?)
}

pub fn sample_copula(params: &ModelParams, sites: &SiteSet, n: usize, cfg: &SimConfig) -> Result<PseudoObsPanel> {
    Simulator::new(params, sites, cfg)?.sample_copula(n, &mut cfg.rng())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sites3() -> SiteSet {
        SiteSet::new(vec![[0.0, 0.0], [1.0, 2.0], [3.0, 0.5]]).unwrap()
    }

    #[test]
    fn deterministic_and_positive() {
        let p = ModelParams::smith(4.0, 2.0, 4.0).unwrap();
        let cfg = SimConfig { seed: 3, stream_id: 9, ..SimConfig::default() };
        let a = simulate_smith(&sites3(), &p, 40, &cfg).unwrap();
        let b = simulate_smith(&sites3(), &p, 40, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.values().values().iter().all(|&v| v > 0.0));
        let c = simulate_smith(&sites3(), &p, 40, &SimConfig { stream_id: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
        let q = ModelParams::schlather(4.0, 0.3, 0.6).unwrap();
        let u = sample_copula(&q, &sites3(), 30, &cfg).unwrap();
        assert!(u.values().values().iter().all(|&v| v > 0.0 && v < 1.0));
        assert_eq!(u, sample_copula(&q, &sites3(), 30, &cfg).unwrap());
    }

    #[test]
    fn wrong_model_rejected() {
        let p = ModelParams::smith(4.0, 2.0, 4.0).unwrap();
        assert!(simulate_schlather(&sites3(), &p, 5, &SimConfig::default()).is_err());
        let bad = SimConfig { truncation_threshold: 0.0, ..SimConfig::default() };
        assert!(simulate(&p, &sites3(), 5, &bad).is_err());
    }

    #[test]
    fn coincident_gaussian_field_is_handled() {
        // two sites nearly on top of each other under a long range
        let s = SiteSet::new(vec![[0.0, 0.0], [1e-9, 0.0], [2.0, 0.0]]).unwrap();
        let p = ModelParams::schlather(1e3, 0.0, 0.5).unwrap();
        let z = simulate(&p, &s, 20, &SimConfig::default()).unwrap();
        assert_eq!(z.n(), 20);
    }
}
