//! Goodness-of-fit statistics and parametric bootstrap p-values.
//!
//! The statistic for a subset `B` of sites compares a nonparametric
//! extremal-coefficient estimate with the one implied by the fitted model,
//! `S_B = sqrt(n) |xi_hat_B - xi_B(theta_hat)|`. The model value is either
//! computed directly or, when no closed form exists, estimated from an
//! independent `m`-sample of the fitted copula with the same estimator.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{MaximaPanel, ModelKind, ModelParams, PseudoObsPanel, SiteSet, SubsetB};
use crate::error::{validation, Error, Result};
use crate::fit::{fit_model, fit_model_from, FitOptions, FitResult, PairSet};
use crate::models::{pair_extremal_coefficient, smith_extremal_coefficient_from_a, MahalanobisA};
use crate::mvn::MvnOptions;
use crate::pickands::{truncate_xi, EstimatorKind, NpEstimator};
use crate::ranks::{pseudo_observations, rank_columns, tied_columns};
use crate::rng::substream;
use crate::simulate::{SimConfig, Simulator};

/// Stream tags below the master seed of a bootstrap run.
const STREAM_REPLICATE: u64 = 1;
const STREAM_SECOND_LEVEL: u64 = 2;
const STREAM_OBSERVED_SECOND_LEVEL: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StatisticKind {
    /// `B` is the whole site set.
    Global,
    /// Sum of pair statistics over pairs at least `min_dist` apart.
    PairwiseSum { min_dist: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NullXi {
    ClosedForm,
    /// Estimated from a simulated sample of size `floor(gamma n)`.
    Simulated { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticSpec {
    pub kind: StatisticKind,
    pub estimator: EstimatorKind,
    pub null_xi: NullXi,
}

impl StatisticSpec {
    pub fn global(estimator: EstimatorKind, null_xi: NullXi) -> Self {
        Self { kind: StatisticKind::Global, estimator, null_xi }
    }

    pub fn pairwise(estimator: EstimatorKind, min_dist: Option<f64>) -> Self {
        Self { kind: StatisticKind::PairwiseSum { min_dist }, estimator, null_xi: NullXi::ClosedForm }
    }

    /// Checks the spec against the hypothesized model and the number of sites.
    pub fn validate(&self, model: ModelKind, d: usize) -> Result<()> {
        if let NullXi::Simulated { gamma } = self.null_xi {
            if !(gamma > 1.0) || !gamma.is_finite() {
                return validation(format!("gamma = {gamma} must exceed 1"));
            }
        }
        match self.kind {
            StatisticKind::Global => {
                if model == ModelKind::Schlather && d >= 3 && self.null_xi == NullXi::ClosedForm {
                    return validation("the Schlather model has no closed-form extremal coefficient for three or more sites");
                }
            }
            StatisticKind::PairwiseSum { min_dist } => {
                if self.null_xi != NullXi::ClosedForm {
                    return validation("pairwise statistics use closed-form pair coefficients");
                }
                if let Some(m) = min_dist {
                    if !(m >= 0.0) {
                        return validation("minimum distance must be non-negative");
                    }
                }
            }
        }
        Ok(())
    }

    fn second_level_size(&self, n: usize, m_override: Option<usize>) -> Option<usize> {
        match self.null_xi {
            NullXi::ClosedForm => None,
            NullXi::Simulated { gamma } => Some(m_override.unwrap_or((gamma * n as f64).floor() as usize)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofOptions {
    pub fit: FitOptions,
    pub sim: SimConfig,
    pub mvn: MvnOptions,
    /// Size of every second-level sample, replacing `floor(gamma n)`.
    pub m_override: Option<usize>,
    /// Apply `min(max(xi, 1), b)` to nonparametric estimates.
    pub truncate: bool,
    /// Also report `(count + 1) / (N + 1)`.
    pub smoothed_p: bool,
    /// Worker threads for the replicate loop; `None` uses the global pool.
    pub threads: Option<usize>,
    pub max_failure_rate: f64,
}

impl Default for GofOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            sim: SimConfig::default(),
            mvn: MvnOptions::default(),
            m_override: None,
            truncate: false,
            smoothed_p: false,
            threads: None,
            max_failure_rate: 0.05,
        }
    }
}

/// Model-implied extremal coefficient for subsets that have a closed form:
/// any subset under Smith, pairs under Schlather.
pub fn model_xi(subset: &SubsetB, params: &ModelParams, sites: &SiteSet, mvn: &MvnOptions) -> Result<f64> {
    let idx = subset.indices();
    if idx.iter().any(|&i| i >= sites.len()) {
        return validation("subset does not fit the site set");
    }
    if idx.len() == 2 {
        return pair_extremal_coefficient(params, sites, idx[0], idx[1]);
    }
    match params {
        ModelParams::Smith { .. } => {
            Ok(smith_extremal_coefficient_from_a(subset, &MahalanobisA::new(params, sites)?, mvn)?.value)
        }
        ModelParams::Schlather { .. } => {
            validation("the Schlather model has no closed-form extremal coefficient for three or more sites")
        }
    }
}

fn np_xi(est: &NpEstimator, subset: &SubsetB, kind: EstimatorKind, truncate: bool) -> Result<f64> {
    let xi = est.xi(subset, kind)?;
    Ok(if truncate { truncate_xi(xi, subset.b()) } else { xi })
}

/// `S_B` for one subset. `null_sample` must be given when the spec asks for
/// a simulated null coefficient and is ignored otherwise.
pub fn statistic_sb(
    pseudo: &PseudoObsPanel,
    subset: &SubsetB,
    fit_params: &ModelParams,
    sites: &SiteSet,
    spec: &StatisticSpec,
    null_sample: Option<&PseudoObsPanel>,
    opts: &GofOptions,
) -> Result<f64> {
    fit_params.validate()?;
    if pseudo.d() != sites.len() {
        return validation(format!("panel has {} columns for {} sites", pseudo.d(), sites.len()));
    }
    let est = NpEstimator::new(pseudo);
    let xi_hat = np_xi(&est, subset, spec.estimator, opts.truncate)?;
    let xi_null = match spec.null_xi {
        NullXi::ClosedForm => model_xi(subset, fit_params, sites, &opts.mvn)?,
        NullXi::Simulated { .. } => {
            let Some(sample) = null_sample else {
                return validation("a simulated null coefficient needs a second-level sample");
            };
            if sample.d() != sites.len() {
                return validation("second-level sample does not match the site set");
            }
            np_xi(&NpEstimator::new(sample), subset, spec.estimator, opts.truncate)?
        }
    };
    Ok((pseudo.n() as f64).sqrt() * (xi_hat - xi_null).abs())
}

/// Pairs entering a pairwise statistic.
pub fn filtered_pairs(sites: &SiteSet, min_dist: Option<f64>) -> Result<Vec<(usize, usize)>> {
    let m = min_dist.unwrap_or(0.0);
    let d = sites.len();
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .filter(|&(i, j)| sites.distance(i, j) >= m)
        .collect();
    if pairs.is_empty() {
        return validation(format!("no pair of sites is at least {m} apart"));
    }
    Ok(pairs)
}

/// Sum of pair statistics with closed-form pair coefficients.
pub fn statistic_pairwise_sum(
    pseudo: &PseudoObsPanel,
    fit_params: &ModelParams,
    sites: &SiteSet,
    estimator: EstimatorKind,
    min_dist: Option<f64>,
    opts: &GofOptions,
) -> Result<f64> {
    fit_params.validate()?;
    if pseudo.d() != sites.len() {
        return validation(format!("panel has {} columns for {} sites", pseudo.d(), sites.len()));
    }
    let est = NpEstimator::new(pseudo);
    let d = sites.len();
    let mut total = 0.0;
    for (i, j) in filtered_pairs(sites, min_dist)? {
        let b = SubsetB::pair(i, j, d)?;
        let xi_hat = np_xi(&est, &b, estimator, opts.truncate)?;
        total += (xi_hat - pair_extremal_coefficient(fit_params, sites, i, j)?).abs();
    }
    Ok((pseudo.n() as f64).sqrt() * total)
}

/// The two centered terms `sqrt(n)(xi_hat - xi(theta0))` and
/// `sqrt(n)(xi(theta_hat) - xi(theta0))`, whose absolute difference is `S_B`.
pub fn decompose_statistic(
    pseudo: &PseudoObsPanel,
    subset: &SubsetB,
    theta0: &ModelParams,
    fit_params: &ModelParams,
    sites: &SiteSet,
    spec: &StatisticSpec,
    opts: &GofOptions,
) -> Result<(f64, f64)> {
    if spec.null_xi != NullXi::ClosedForm {
        return validation("the decomposition needs closed-form model coefficients");
    }
    let rn = (pseudo.n() as f64).sqrt();
    let est = NpEstimator::new(pseudo);
    let xi_hat = np_xi(&est, subset, spec.estimator, opts.truncate)?;
    let xi0 = model_xi(subset, theta0, sites, &opts.mvn)?;
    let xi_fit = model_xi(subset, fit_params, sites, &opts.mvn)?;
    Ok((rn * (xi_hat - xi0), rn * (xi_fit - xi0)))
}

/// Evaluates several statistics on one panel, sharing the estimator cache
/// and the model coefficients between them.
struct Evaluator<'a> {
    sites: &'a SiteSet,
    specs: &'a [StatisticSpec],
    pair_lists: Vec<Option<Vec<(usize, usize)>>>,
    opts: &'a GofOptions,
}

impl<'a> Evaluator<'a> {
    fn new(sites: &'a SiteSet, specs: &'a [StatisticSpec], opts: &'a GofOptions) -> Result<Self> {
        let pair_lists = specs
            .iter()
            .map(|s| match s.kind {
                StatisticKind::PairwiseSum { min_dist } => filtered_pairs(sites, min_dist).map(Some),
                StatisticKind::Global => Ok(None),
            })
            .collect::<Result<_>>()?;
        Ok(Self { sites, specs, pair_lists, opts })
    }

    fn evaluate(&self, pseudo: &PseudoObsPanel, params: &ModelParams, nulls: &BTreeMap<usize, NpEstimator>) -> Result<Vec<f64>> {
        let d = self.sites.len();
        let n = pseudo.n();
        let rn = (n as f64).sqrt();
        let est = NpEstimator::new(pseudo);
        let full = SubsetB::full(d)?;
        let mut global_closed: Option<f64> = None;
        let mut pair_model: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut out = Vec::with_capacity(self.specs.len());
        for (spec, pairs) in self.specs.iter().zip(&self.pair_lists) {
            let value = match spec.kind {
                StatisticKind::Global => {
                    let xi_hat = np_xi(&est, &full, spec.estimator, self.opts.truncate)?;
                    let xi_null = match spec.null_xi {
                        NullXi::ClosedForm => match global_closed {
                            Some(v) => v,
                            None => {
                                let v = model_xi(&full, params, self.sites, &self.opts.mvn)?;
                                global_closed = Some(v);
                                v
                            }
                        },
                        NullXi::Simulated { .. } => {
                            let m = spec.second_level_size(n, self.opts.m_override).expect("simulated spec");
                            np_xi(&nulls[&m], &full, spec.estimator, self.opts.truncate)?
                        }
                    };
                    rn * (xi_hat - xi_null).abs()
                }
                StatisticKind::PairwiseSum { .. } => {
                    let mut total = 0.0;
                    for &(i, j) in pairs.as_ref().expect("pair list") {
                        let model = match pair_model.get(&(i, j)) {
                            Some(&v) => v,
                            None => {
                                let v = pair_extremal_coefficient(params, self.sites, i, j)?;
                                pair_model.insert((i, j), v);
                                v
                            }
                        };
                        let xi_hat = np_xi(&est, &SubsetB::pair(i, j, d)?, spec.estimator, self.opts.truncate)?;
                        total += (xi_hat - model).abs();
                    }
                    rn * total
                }
            };
            if !value.is_finite() {
                return Err(Error::Numerical(format!("statistic is not finite ({value})")));
            }
            out.push(value);
        }
        Ok(out)
    }
}

/// How every random draw of a run is derived from the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMap {
    pub master: u64,
    pub generator: String,
    pub replicate_sample: String,
    pub replicate_second_level: String,
    pub observed_second_level: String,
}

impl SeedMap {
    fn new(master: u64) -> Self {
        Self {
            master,
            generator: "chacha8".into(),
            replicate_sample: format!("[{STREAM_REPLICATE}, k]"),
            replicate_second_level: format!("[{STREAM_SECOND_LEVEL}, k, m]"),
            observed_second_level: format!("[{STREAM_OBSERVED_SECOND_LEVEL}, m]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub fit_secs: f64,
    pub observed_secs: f64,
    pub bootstrap_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub model: ModelKind,
    pub spec: StatisticSpec,
    pub statistic: f64,
    /// `#{k : S_k >= S} / N_eff`.
    pub p_value: f64,
    /// `(#{k : S_k >= S} + 1) / (N_eff + 1)`, when requested.
    pub p_value_smoothed: Option<f64>,
    pub n_bootstrap: usize,
    pub n_effective: usize,
    pub n_failed: usize,
    pub failed_replicates: Vec<usize>,
    /// Statistics of the successful replicates, in replicate order.
    pub replicate_stats: Vec<f64>,
    pub fit: FitResult,
    /// Second-level sample size, for simulated null coefficients.
    pub m: Option<usize>,
    pub n: usize,
    pub seeds: SeedMap,
    pub timing: Timing,
}

impl GofReport {
    /// Copy with timings zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { timing: Timing::default(), ..self.clone() }
    }
}

/// `(#{S_k >= S} / N, (#{S_k >= S} + 1) / (N + 1))`.
pub fn p_values(statistic: f64, replicates: &[f64]) -> (f64, f64) {
    let count = replicates.iter().filter(|&&s| s >= statistic).count() as f64;
    let n = replicates.len() as f64;
    (count / n, (count + 1.0) / (n + 1.0))
}

fn second_level(
    params: &ModelParams,
    sites: &SiteSet,
    sizes: &[usize],
    cfg: &SimConfig,
    stream: impl Fn(usize) -> rand_chacha::ChaCha8Rng,
) -> Result<BTreeMap<usize, NpEstimator>> {
    let mut out = BTreeMap::new();
    if sizes.is_empty() {
        return Ok(out);
    }
    let sim = Simulator::new(params, sites, cfg)?;
    for &m in sizes {
        let u = sim.sample_copula(m, &mut stream(m))?;
        out.insert(m, NpEstimator::new(&rank_columns(u.values())?));
    }
    Ok(out)
}

/// Runs the parametric bootstrap for several statistics at once; every
/// replicate sample and refit is shared by all of them. Specs with a
/// simulated null coefficient get the two-level scheme, the others the
/// one-level scheme.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_many(
    panel: &MaximaPanel,
    model: ModelKind,
    sites: &SiteSet,
    specs: &[StatisticSpec],
    n_boot: usize,
    seed: u64,
    pairs: &PairSet,
    opts: &GofOptions,
) -> Result<Vec<GofReport>> {
    if specs.is_empty() {
        return validation("no statistic requested");
    }
    if n_boot < 1 {
        return validation("the number of bootstrap replicates must be at least 1");
    }
    if panel.d() != sites.len() {
        return validation(format!("panel has {} columns for {} sites", panel.d(), sites.len()));
    }
    if !(0.0..=1.0).contains(&opts.max_failure_rate) {
        return validation("max_failure_rate must lie in [0, 1]");
    }
    for s in specs {
        s.validate(model, sites.len())?;
    }
    let n = panel.n();
    let mut sizes: Vec<usize> = specs.iter().filter_map(|s| s.second_level_size(n, opts.m_override)).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.iter().any(|&m| m < 2) {
        return validation("second-level samples need at least two rows");
    }
    let ties = tied_columns(panel);
    if ties > 0 {
        log::warn!("{ties} column(s) contain ties; average ranks are used");
    }

    let t0 = Instant::now();
    let pseudo = pseudo_observations(panel)?;
    let fit = fit_model(&pseudo, model, sites, pairs, &opts.fit)?;
    let theta = fit.params;
    let fit_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let eval = Evaluator::new(sites, specs, opts)?;
    let nulls = second_level(&theta, sites, &sizes, &opts.sim, |m| substream(seed, &[STREAM_OBSERVED_SECOND_LEVEL, m as u64]))?;
    let observed = eval.evaluate(&pseudo, &theta, &nulls)?;
    let observed_secs = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let sim = Simulator::new(&theta, sites, &opts.sim)?;
    let replicate = |k: usize| -> Result<Vec<f64>> {
        let mut rng = substream(seed, &[STREAM_REPLICATE, k as u64]);
        let u = sim.sample_copula(n, &mut rng)?;
        let pk = rank_columns(u.values())?;
        let fk = fit_model_from(&pk, model, sites, pairs, &theta, &opts.fit)?;
        let nk = second_level(&fk.params, sites, &sizes, &opts.sim, |m| {
            substream(seed, &[STREAM_SECOND_LEVEL, k as u64, m as u64])
        })?;
        eval.evaluate(&pk, &fk.params, &nk)
    };
    let run = || (0..n_boot).into_par_iter().map(replicate).collect::<Vec<_>>();
    let results = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Validation(format!("cannot build thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let bootstrap_secs = t2.elapsed().as_secs_f64();

    let mut failed = Vec::new();
    let mut stats: Vec<Vec<f64>> = vec![Vec::with_capacity(n_boot); specs.len()];
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => {
                for (s, x) in stats.iter_mut().zip(v) {
                    s.push(x);
                }
            }
            Err(e) => {
                log::warn!("bootstrap replicate {k} dropped: {e}");
                failed.push(k);
            }
        }
    }
    if failed.len() as f64 > opts.max_failure_rate * n_boot as f64 || failed.len() == n_boot {
        return Err(Error::BootstrapAborted { failed: failed.len(), attempted: n_boot });
    }

    let timing = Timing { fit_secs, observed_secs, bootstrap_secs };
    Ok(specs
        .iter()
        .zip(observed)
        .zip(stats)
        .map(|((spec, s), reps)| {
            let (p, smoothed) = p_values(s, &reps);
            GofReport {
                model,
                spec: *spec,
                statistic: s,
                p_value: p,
                p_value_smoothed: opts.smoothed_p.then_some(smoothed),
                n_bootstrap: n_boot,
                n_effective: reps.len(),
                n_failed: failed.len(),
                failed_replicates: failed.clone(),
                replicate_stats: reps,
                fit: fit.clone(),
                m: spec.second_level_size(n, opts.m_override),
                n,
                seeds: SeedMap::new(seed),
                timing,
            }
        })
        .collect())
}

/// One-level bootstrap; the spec must use closed-form null coefficients.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_one_level(
    panel: &MaximaPanel,
    model: ModelKind,
    sites: &SiteSet,
    spec: &StatisticSpec,
    n_boot: usize,
    seed: u64,
    pairs: &PairSet,
    opts: &GofOptions,
) -> Result<GofReport> {
    if spec.null_xi != NullXi::ClosedForm {
        return validation("the one-level bootstrap needs closed-form null coefficients");
    }
    Ok(bootstrap_many(panel, model, sites, std::slice::from_ref(spec), n_boot, seed, pairs, opts)?.remove(0))
}

/// Two-level bootstrap; the spec must use simulated null coefficients.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_two_level(
    panel: &MaximaPanel,
    model: ModelKind,
    sites: &SiteSet,
    spec: &StatisticSpec,
    n_boot: usize,
    m_override: Option<usize>,
    seed: u64,
    pairs: &PairSet,
    opts: &GofOptions,
) -> Result<GofReport> {
    if !matches!(spec.null_xi, NullXi::Simulated { .. }) {
        return validation("the two-level bootstrap needs a simulated null coefficient");
    }
    let opts = GofOptions { m_override: m_override.or(opts.m_override), ..*opts };
    Ok(bootstrap_many(panel, model, sites, std::slice::from_ref(spec), n_boot, seed, pairs, &opts)?.remove(0))
}
