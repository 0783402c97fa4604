//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use maxstable_gof::data::{ModelParams, SiteSet};
use maxstable_gof::rng::substream;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_sites(d: usize, extent: f64, seed: u64) -> SiteSet {
    let mut rng = substream(seed, &[0xfeed]);
    SiteSet::new((0..d).map(|_| [extent * rng.gen::<f64>(), extent * rng.gen::<f64>()]).collect()).unwrap()
}

pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One-sample Kolmogorov statistic against the uniform distribution.
pub fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &v)| ((i as f64 + 1.0) / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the Kolmogorov statistic.
pub fn ks_crit_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Smith Pickands function from the storm-profile geometry.
///
/// `A(w) = integral of max_i w_i f(s_i - y) dy` with `f` the N(0, Sigma)
/// density. The region where site `i` attains the maximum is an
/// intersection of half-planes, so each term is a bivariate standard normal
/// probability of a convex polygon, integrated here in polar coordinates.
pub fn smith_pickands_polygon(w: &[f64], params: &ModelParams, sites: &SiteSet, n_angles: usize) -> f64 {
    let ModelParams::Smith { s11, s12, s22 } = *params else { panic!("Smith parameters expected") };
    // Sigma = L L', whitening v = L^{-1} delta
    let l11 = s11.sqrt();
    let l21 = s12 / l11;
    let l22 = (s22 - l21 * l21).sqrt();
    let whiten = |d: [f64; 2]| {
        let v0 = d[0] / l11;
        [v0, (d[1] - l21 * v0) / l22]
    };
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let mut total = 0.0;
    for &i in &support {
        let planes: Vec<([f64; 2], f64)> = support
            .iter()
            .filter(|&&k| k != i)
            .map(|&k| {
                let v = whiten(sites.displacement(k, i));
                let a2 = v[0] * v[0] + v[1] * v[1];
                ([-v[0], -v[1]], (w[i] / w[k]).ln() + 0.5 * a2)
            })
            .collect();
        total += w[i] * polygon_probability(&planes, n_angles);
    }
    total
}

/// `P(n_k' g <= b_k for all k)` for a standard bivariate normal `g`; the
/// region must be convex (it is an intersection of half-planes).
pub fn polygon_probability(planes: &[([f64; 2], f64)], n_angles: usize) -> f64 {
    let dt = 2.0 * std::f64::consts::PI / n_angles as f64;
    let mut sum = 0.0;
    for m in 0..n_angles {
        let t = (m as f64 + 0.5) * dt;
        let (s, c) = t.sin_cos();
        let mut lo: f64 = 0.0;
        let mut hi = f64::INFINITY;
        let mut empty = false;
        for &(nv, b) in planes {
            let proj = nv[0] * c + nv[1] * s;
            if proj > 0.0 {
                hi = hi.min(b / proj);
            } else if proj < 0.0 {
                lo = lo.max(b / proj);
            } else if b < 0.0 {
                empty = true;
            }
        }
        if empty || lo >= hi {
            continue;
        }
        let tail = |r: f64| if r.is_finite() { (-0.5 * r * r).exp() } else { 0.0 };
        sum += tail(lo) - tail(hi);
    }
    sum * dt / (2.0 * std::f64::consts::PI)
}

/// Plain Monte Carlo estimate of `P(Z <= upper)` and its standard error.
pub fn mvn_plain_mc(upper: &[f64], corr: &[Vec<f64>], draws: usize, seed: u64) -> (f64, f64) {
    let k = upper.len();
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = corr[i][j] - (0..j).map(|m| l[i][m] * l[j][m]).sum::<f64>();
            l[i][j] = if i == j { s.max(0.0).sqrt() } else if l[j][j] > 0.0 { s / l[j][j] } else { 0.0 };
        }
    }
    let mut rng = substream(seed, &[0x6d63]);
    let mut g = vec![0.0; k];
    let mut hits = 0usize;
    for _ in 0..draws {
        for v in g.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let inside = (0..k).all(|i| (0..=i).map(|m| l[i][m] * g[m]).sum::<f64>() <= upper[i]);
        hits += inside as usize;
    }
    let p = hits as f64 / draws as f64;
    (p, binomial_se(p, draws))
}

/// Central finite-difference mixed partial of a copula c.d.f.
pub fn fd_mixed_partial(c: impl Fn(f64, f64) -> f64, u1: f64, u2: f64, h: f64) -> f64 {
    (c(u1 + h, u2 + h) - c(u1 + h, u2 - h) - c(u1 - h, u2 + h) + c(u1 - h, u2 - h)) / (4.0 * h * h)
}
