//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Criterion ids given on the command line
//! (`c1` .. `c8`) restrict the run; `ACCEPTANCE_CHECKPOINTS=<dir>` makes the
//! Monte Carlo cells resumable.

mod common;

use std::env;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use common::{binomial_se, fd_mixed_partial, mvn_plain_mc, random_sites, smith_pickands_polygon};
use maxstable_gof::data::{MaximaPanel, ModelKind, ModelParams, Panel, SimplexWeight, SiteSet, SubsetB};
use maxstable_gof::fit::{fit_model, FitOptions, PairSet};
use maxstable_gof::gof::{bootstrap_many, GofOptions, NullXi, StatisticSpec};
use maxstable_gof::models::{
    pair_extremal_coefficient, schlather_bivariate_cdf, schlather_correlation, schlather_pair_copula_cdf,
    schlather_pair_copula_density, schlather_pair_pickands, smith_bivariate_cdf, smith_pair_copula_cdf,
    smith_pair_copula_density, smith_pair_pickands, smith_pickands, mahalanobis, PairDependence,
};
use maxstable_gof::mvn::{mvn_cdf, phi, CorrelationMatrix, MvnOptions};
use maxstable_gof::pickands::{estimate_A, extremal_coefficient_np, EstimatorKind};
use maxstable_gof::ranks::pseudo_observations;
use maxstable_gof::rng::{derive_seed, substream};
use maxstable_gof::simulate::{simulate, SimConfig};
use maxstable_gof::study::{run_cell, scenario, study_sites, CellRow, CellSpec, CellStatistic, StudyConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;
const D: usize = 10;
const N_BOOT: usize = 200;
const BAND: (f64, f64) = (1.1, 8.9);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    ("c1", "null level, Smith one-level bootstrap", c1),
    ("c2", "null level, Schlather two-level bootstrap", c2),
    ("c3", "power, Schlather data against Smith", c3),
    ("c4", "power asymmetry, Smith data against Schlather", c4),
    ("c5", "estimator property suite", c5),
    ("c6", "numerical kernel oracles", c6),
    ("c7", "parameter recovery", c7),
    ("c8", "determinism and parallel scaling", c8),
];

fn main() -> ExitCode {
    let wanted: Vec<String> = env::args().skip(1).filter(|a| !a.starts_with('-')).map(|a| a.to_lowercase()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, title, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        ran += 1;
        failed += !o.pass as usize;
        println!("{} {id} {title}: {} [{:.0} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run_rows(cell: CellSpec, replications: usize, m: Option<usize>) -> Result<Vec<CellRow>, String> {
    let mut cfg = StudyConfig::new(SEED, replications, N_BOOT);
    cfg.gof.m_override = m;
    let dir = env::var_os("ACCEPTANCE_CHECKPOINTS").map(PathBuf::from);
    if let Some(d) = &dir {
        fs::create_dir_all(d).map_err(|e| e.to_string())?;
    }
    run_cell(&cell, &cfg, dir.as_deref()).map(|o| o.rows).map_err(|e| e.to_string())
}

fn describe(rows: &[CellRow]) -> String {
    rows.iter()
        .map(|r| format!("{} {:.1}% (se {:.1}, {} of {} failed)", r.estimator, r.rejection_pct, r.std_error_pct, r.failed, r.replications))
        .collect::<Vec<_>>()
        .join("; ")
}

fn cell(name: &str, data: &str, hypothesis: ModelKind, statistic: CellStatistic, estimators: &[EstimatorKind], n: usize) -> CellSpec {
    CellSpec {
        name: name.into(),
        data: scenario(data).unwrap(),
        hypothesis,
        statistic,
        estimators: estimators.to_vec(),
        d: D,
        n,
    }
}

fn in_band(rows: &[CellRow]) -> bool {
    rows.iter().all(|r| r.rejection_pct >= BAND.0 && r.rejection_pct <= BAND.1)
}

fn c1() -> Outcome {
    let c = cell("accept_c1", "sigma1", ModelKind::Smith, CellStatistic::Global { null_xi: NullXi::ClosedForm }, &EstimatorKind::ALL, 50);
    match run_rows(c, 200, None) {
        Ok(rows) => Outcome::new(in_band(&rows), format!("{} (band {:?})", describe(&rows), BAND)),
        Err(e) => Outcome::new(false, e),
    }
}

fn c2() -> Outcome {
    let null_xi = NullXi::Simulated { gamma: 50.0 };
    let c = cell("accept_c2", "rho2", ModelKind::Schlather, CellStatistic::Global { null_xi }, &EstimatorKind::ALL, 50);
    match run_rows(c, 200, Some(2500)) {
        Ok(rows) => Outcome::new(in_band(&rows), format!("{} (band {:?}, m = 2500)", describe(&rows), BAND)),
        Err(e) => Outcome::new(false, e),
    }
}

fn c3() -> Outcome {
    let c = cell("accept_c3", "rho1", ModelKind::Smith, CellStatistic::Global { null_xi: NullXi::ClosedForm }, &[EstimatorKind::CFG], 50);
    match run_rows(c, 100, None) {
        Ok(rows) => Outcome::new(rows[0].rejection_pct >= 90.0, format!("{} (need >= 90%)", describe(&rows))),
        Err(e) => Outcome::new(false, e),
    }
}

fn c4() -> Outcome {
    let null_xi = NullXi::Simulated { gamma: 50.0 };
    let global = cell("accept_c4_global", "sigma3", ModelKind::Schlather, CellStatistic::Global { null_xi }, &EstimatorKind::ALL, 50);
    let pairwise =
        cell("accept_c4_pairwise", "sigma3", ModelKind::Schlather, CellStatistic::Pairwise { min_dist: None }, &[EstimatorKind::CFG], 100);
    let (g, p) = match (run_rows(global, 100, Some(2500)), run_rows(pairwise, 100, None)) {
        (Ok(g), Ok(p)) => (g, p),
        (Err(e), _) | (_, Err(e)) => return Outcome::new(false, e),
    };
    let low = g.iter().all(|r| r.rejection_pct < 15.0);
    let global_p = g.iter().find(|r| r.estimator == EstimatorKind::P).unwrap().rejection_pct;
    let gap = p[0].rejection_pct - global_p;
    Outcome::new(
        low && gap >= 20.0,
        format!("global n=50: {} (need < 15%); pairwise n=100: {}; gap over global P {gap:.1} points (need >= 20)", describe(&g), describe(&p)),
    )
}

/// Random model parameters across weak to strong dependence.
fn random_params(rng: &mut ChaCha8Rng, smith: bool) -> ModelParams {
    if smith {
        let s11 = rng.gen_range(-1.0f64..4.0).exp();
        let s22 = rng.gen_range(-1.0f64..4.0).exp();
        let s12 = rng.gen_range(-0.8..0.8) * (s11 * s22).sqrt();
        ModelParams::smith(s11, s12, s22).unwrap()
    } else {
        ModelParams::schlather(rng.gen_range(0.0f64..3.5).exp(), rng.gen_range(-FRAC_PI_2..FRAC_PI_2), rng.gen_range(0.2..0.99)).unwrap()
    }
}

/// Random weight on a random support.
fn random_weight(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let k = rng.gen_range(1..=d);
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..k {
        let j = rng.gen_range(i..d);
        idx.swap(i, j);
    }
    let mut w = vec![0.0; d];
    for &i in &idx[..k] {
        w[i] = -rng.gen::<f64>().ln() + 1e-3;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

fn c5() -> Outcome {
    const CASES: usize = 1000;
    const TOL: f64 = 1e-12;
    let mvn = MvnOptions::default();
    let [mut endpoint, mut lower, mut upper, mut comonotone, mut invariance, mut model_bounds, mut model_cases] = [0usize; 7];
    let mut worst_upper: f64 = 0.0;
    for case in 0..CASES {
        let mut rng = substream(SEED, &[5, case as u64]);
        let d = rng.gen_range(2..=5);
        let n = rng.gen_range(10..=200);
        let smith = rng.gen_bool(0.5);
        let params = random_params(&mut rng, smith);
        let sites = random_sites(d, 10.0, derive_seed(SEED, &[5, 1, case as u64]));
        let sim = SimConfig { seed: derive_seed(SEED, &[5, 2]), stream_id: case as u64, ..SimConfig::default() };
        let z = simulate(&params, &sites, n, &sim).unwrap();
        let u = pseudo_observations(&z).unwrap();
        let w = random_weight(&mut rng, d);
        let sw = SimplexWeight::new(w.clone()).unwrap();
        let wmax = w.iter().cloned().fold(0.0, f64::max);

        let transformed = MaximaPanel::new(Panel::from_columns(
            (0..d).map(|j| z.values().column(j).iter().map(|v| v.ln() * (1.0 + j as f64) - j as f64).collect()).collect(),
        ))
        .unwrap();
        let ut = pseudo_observations(&transformed).unwrap();
        let first = z.values().column(0).to_vec();
        let como = pseudo_observations(&MaximaPanel::new(Panel::from_columns(vec![first; d])).unwrap()).unwrap();
        let support: Vec<usize> = (0..d).filter(|&j| w[j] > 0.0).collect();
        let subset = if support.len() >= 2 { SubsetB::new(support.clone(), d) } else { SubsetB::full(d) }.unwrap();

        let mut case_endpoint = false;
        let mut case_lower = false;
        let mut case_upper = false;
        let mut case_inv = false;
        for kind in EstimatorKind::ALL {
            for j in 0..d {
                let a = estimate_A(&u, &SimplexWeight::basis(j, d).unwrap(), kind).unwrap();
                case_endpoint |= (a - 1.0).abs() > TOL;
            }
            let a = estimate_A(&u, &sw, kind).unwrap();
            case_lower |= a < wmax - TOL;
            if a > 1.0 + TOL {
                case_upper = true;
                worst_upper = worst_upper.max(a - 1.0);
            }
            case_inv |= a.to_bits() != estimate_A(&ut, &sw, kind).unwrap().to_bits();
        }
        let xi_como = extremal_coefficient_np(&como, &subset, EstimatorKind::HT).unwrap();
        comonotone += ((xi_como - 1.0).abs() > TOL) as usize;
        endpoint += case_endpoint as usize;
        lower += case_lower as usize;
        upper += case_upper as usize;
        invariance += case_inv as usize;

        // model-side bounds where the Pickands function is available
        let model_a = if smith {
            Some((smith_pickands(&sw, &params, &sites, &mvn).unwrap().value, 2.0 * mvn.tol))
        } else if support.len() == 2 {
            let rho = schlather_correlation(sites.displacement(support[0], support[1]), &params).unwrap();
            Some((schlather_pair_pickands(w[support[0]], rho).unwrap(), TOL))
        } else if support.len() == 1 {
            Some((1.0, 0.0))
        } else {
            None
        };
        if let Some((a, tol)) = model_a {
            model_cases += 1;
            model_bounds += (a < wmax - tol || a > 1.0 + tol) as usize;
        }
    }
    let pass = endpoint + lower + upper + comonotone + invariance + model_bounds == 0;
    Outcome::new(
        pass,
        format!(
            "{CASES} cases; violating cases: endpoint {endpoint}, lower bound {lower}, upper bound {upper} (worst excess {worst_upper:.3}), \
             comonotone HT {comonotone}, rank invariance {invariance}; model Pickands bounds {model_bounds} of {model_cases}"
        ),
    )
}

fn c6() -> Outcome {
    let parts = [c6_mvn(), c6_densities(), c6_pickands(), c6_simulation()];
    let pass = parts.iter().all(|p| p.pass);
    Outcome::new(pass, parts.iter().map(|p| format!("{} {}", if p.pass { "ok" } else { "FAILED" }, p.detail)).collect::<Vec<_>>().join(" | "))
}

fn c6_mvn() -> Outcome {
    let mut bad = Vec::new();
    let tol = 1e-4;
    for x in [-3.0, -0.5, 0.0, 1.2, 2.5] {
        let r = mvn_cdf(&[x], &CorrelationMatrix::identity(1), tol, 1).unwrap();
        if (r.value - phi(x)).abs() > 1e-15 {
            bad.push(format!("k=1 at {x}"));
        }
    }
    let half = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
    let r0 = mvn_cdf(&[0.0, 0.0], &CorrelationMatrix::identity(2), tol, 1).unwrap();
    let r5 = mvn_cdf(&[0.0, 0.0], &CorrelationMatrix::new(half.clone()).unwrap(), tol, 1).unwrap();
    if (r0.value - 0.25).abs() > tol || (r5.value - 1.0 / 3.0).abs() > tol {
        bad.push("bivariate orthant".into());
    }
    let mut instances = vec![(vec![0.0, 0.0], half)];
    let mut rng = substream(SEED, &[6, 1]);
    for k in [2usize, 3, 3, 4, 4] {
        let g: Vec<Vec<f64>> = (0..k).map(|_| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let cov: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| (0..k).map(|m| g[i][m] * g[j][m]).sum::<f64>() + 0.1 * (i == j) as u8 as f64).collect()).collect();
        let corr: Vec<Vec<f64>> =
            (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { cov[i][j] / (cov[i][i] * cov[j][j]).sqrt() }).collect()).collect();
        instances.push(((0..k).map(|_| rng.gen_range(-1.0..1.5)).collect(), corr));
    }
    let mut worst: f64 = 0.0;
    for (i, (upper, corr)) in instances.iter().enumerate() {
        let r = mvn_cdf(upper, &CorrelationMatrix::new(corr.clone()).unwrap(), tol, 7).unwrap();
        let (p, se) = mvn_plain_mc(upper, corr, 10_000_000, derive_seed(SEED, &[6, 2, i as u64]));
        let combined = (se * se + (r.error_estimate / 3.0).powi(2)).sqrt();
        let z = (r.value - p).abs() / combined;
        worst = worst.max(z);
        if z > 3.0 || r.error_estimate > tol {
            bad.push(format!("instance {i} (k={}) off by {z:.2} SE", upper.len()));
        }
    }
    Outcome::new(bad.is_empty(), format!("(a) mvn: closed forms and {} plain Monte Carlo instances, worst {worst:.2} SE {bad:?}", instances.len()))
}

fn c6_densities() -> Outcome {
    let h = 1e-4;
    let grid: Vec<f64> = (1..=21).map(|i| i as f64 / 22.0).collect();
    let mut worst = [0.0f64; 2];
    let mut count = [0usize; 2];
    for a in [1.0, 1.5, 2.5, 4.0, 8.0] {
        for &u1 in &grid {
            for &u2 in &grid {
                let c = smith_pair_copula_density(u1, u2, a).unwrap();
                let fd = fd_mixed_partial(|x, y| smith_pair_copula_cdf(x, y, a).unwrap(), u1, u2, h);
                let e = (fd - c).abs() / c;
                worst[0] = worst[0].max(e);
                count[0] += (e > 1e-3) as usize;
            }
        }
    }
    for rho in [0.05, 0.3, 0.6, 0.8, 0.95] {
        for &u1 in &grid {
            for &u2 in &grid {
                let c = schlather_pair_copula_density(u1, u2, rho).unwrap();
                let fd = fd_mixed_partial(|x, y| schlather_pair_copula_cdf(x, y, rho).unwrap(), u1, u2, h);
                let e = (fd - c).abs() / c;
                worst[1] = worst[1].max(e);
                count[1] += (e > 1e-3) as usize;
            }
        }
    }
    Outcome::new(
        count == [0, 0],
        format!("(b) densities: worst relative error Smith {:.1e}, Schlather {:.1e}; points above 1e-3: {count:?} of 2205 each", worst[0], worst[1]),
    )
}

fn c6_pickands() -> Outcome {
    let mvn = MvnOptions::default();
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for case in 0..200 {
        let mut rng = substream(SEED, &[6, 3, case]);
        let params = random_params(&mut rng, true);
        let sites = SiteSet::new(vec![[rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)], [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]]).unwrap();
        let w1 = rng.gen_range(0.01..0.99);
        let got = smith_pickands(&SimplexWeight::new(vec![w1, 1.0 - w1]).unwrap(), &params, &sites, &mvn).unwrap().value;
        let a = mahalanobis(sites.displacement(0, 1), &params).unwrap();
        let e = (got - smith_pair_pickands(w1, a).unwrap()).abs();
        worst = worst.max(e);
        bad += (e > 2.0 * mvn.tol) as usize;
    }
    // three sites on an equilateral triangle against the storm-geometry integral
    let tri = SiteSet::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.75f64.sqrt()]]).unwrap();
    let fine = MvnOptions { tol: 1e-7, max_evaluations: 20_000_000, ..mvn };
    let mut tri_worst: f64 = 0.0;
    for params in [ModelParams::smith(1.0, 0.0, 1.0).unwrap(), ModelParams::smith(2.0, -0.5, 0.7).unwrap()] {
        for w in [vec![1.0 / 3.0; 3], vec![0.2, 0.5, 0.3], vec![0.7, 0.2, 0.1]] {
            let got = smith_pickands(&SimplexWeight::new(w.clone()).unwrap(), &params, &tri, &fine).unwrap().value;
            tri_worst = tri_worst.max((got - smith_pickands_polygon(&w, &params, &tri, 400_000)).abs());
        }
    }
    Outcome::new(
        bad == 0 && tri_worst <= 1e-6,
        format!("(c) pair Pickands: worst {worst:.1e} over 200 cases (limit {:.0e}); triangle worst {tri_worst:.1e} (limit 1e-6)", 2.0 * mvn.tol),
    )
}

fn c6_simulation() -> Outcome {
    const N: usize = 100_000;
    let sites = random_sites(4, 6.0, derive_seed(SEED, &[6, 4]));
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (name, params) in [("smith", scenario("sigma1").unwrap()), ("schlather", scenario("rho2").unwrap())] {
        let z = simulate(&params, &sites, N, &SimConfig { seed: derive_seed(SEED, &[6, 5]), ..SimConfig::default() }).unwrap();
        let col = |j: usize| z.values().column(j);
        let mut check = |label: String, p_hat: f64, p: f64, se: f64| {
            let s = (p_hat - p).abs() / se;
            worst = worst.max(s);
            if s > 3.0 {
                bad.push(format!("{name} {label} {s:.2} SE"));
            }
        };
        for j in 0..4 {
            let p = (-1.0f64).exp();
            let p_hat = col(j).iter().filter(|&&v| v <= 1.0).count() as f64 / N as f64;
            check(format!("margin {j}"), p_hat, p, binomial_se(p, N));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let both = |zi: f64, zj: f64| col(i).iter().zip(col(j)).filter(|&(&a, &b)| a <= zi && b <= zj).count() as f64 / N as f64;
                let p = match PairDependence::between(&params, &sites, i, j).unwrap() {
                    PairDependence::Smith { a } => smith_bivariate_cdf(1.0, 2.0, a).unwrap(),
                    PairDependence::Schlather { rho } => schlather_bivariate_cdf(1.0, 2.0, rho).unwrap(),
                };
                check(format!("cdf ({i},{j})"), both(1.0, 2.0), p, binomial_se(p, N));
                // P(Zi <= 1, Zj <= 1) = exp(-xi); delta method for -log p
                let xi = pair_extremal_coefficient(&params, &sites, i, j).unwrap();
                let p11 = (-xi).exp();
                let xi_hat = -both(1.0, 1.0).ln();
                check(format!("xi ({i},{j})"), xi_hat, xi, binomial_se(p11, N) / p11);
            }
        }
    }
    Outcome::new(bad.is_empty(), format!("(d) simulation at n = {N}: 32 comparisons, worst {worst:.2} SE {bad:?}"))
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

fn c7() -> Outcome {
    const DATASETS: usize = 20;
    let sites = study_sites(SEED, 20, 10.0).unwrap();
    let pairs = PairSet::all(20).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, kind) in [("sigma2", ModelKind::Smith), ("rho2", ModelKind::Schlather)] {
        let truth = scenario(name).unwrap().to_vec();
        let mut errors = vec![Vec::new(); 3];
        let mut failures = 0;
        for k in 0..DATASETS {
            let sim = SimConfig { seed: derive_seed(SEED, &[7, truth.len() as u64, kind as u64]), stream_id: k as u64, ..SimConfig::default() };
            let z = simulate(&scenario(name).unwrap(), &sites, 100, &sim).unwrap();
            let u = pseudo_observations(&z).unwrap();
            let Ok(fit) = fit_model(&u, kind, &sites, &pairs, &FitOptions::default()) else {
                failures += 1;
                continue;
            };
            for (c, (&est, &tru)) in fit.params.to_vec().iter().zip(&truth).enumerate() {
                let diff = if kind == ModelKind::Schlather && c == 1 {
                    // the orientation is an angle modulo pi
                    let d = (est - tru).rem_euclid(PI);
                    d.min(PI - d)
                } else {
                    (est - tru).abs()
                };
                errors[c].push(diff / tru.abs());
            }
        }
        let medians: Vec<f64> = errors.into_iter().map(median).collect();
        pass &= failures == 0 && medians.iter().all(|&m| m <= 0.3);
        lines.push(format!("{name}: median relative errors {:?} ({failures} failed fits)", medians.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>()));
    }
    Outcome::new(pass, lines.join("; "))
}

fn c8() -> Outcome {
    let sites = study_sites(SEED, D, 10.0).unwrap();
    let z = simulate(&scenario("sigma1").unwrap(), &sites, 50, &SimConfig::with_seed(derive_seed(SEED, &[8]))).unwrap();
    let pairs = PairSet::all(D).unwrap();
    let specs: Vec<StatisticSpec> = EstimatorKind::ALL.iter().map(|&e| StatisticSpec::global(e, NullXi::ClosedForm)).collect();
    let run = |threads: usize| {
        let opts = GofOptions { threads: Some(threads), ..GofOptions::default() };
        let t = Instant::now();
        let reports = bootstrap_many(&z, ModelKind::Smith, &sites, &specs, N_BOOT, SEED, &pairs, &opts).unwrap();
        (reports.iter().map(|r| r.without_timing()).collect::<Vec<_>>(), t.elapsed().as_secs_f64())
    };
    let (r1, t1) = run(1);
    let (r2, _) = run(2);
    let (r8, t8) = run(8);
    let identical = r1 == r2 && r1 == r8;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let speedup = t1 / t8;
    Outcome::new(
        identical && speedup >= 4.0,
        format!(
            "reports identical across 1/2/8 threads: {identical}; wall clock 1 thread {t1:.1} s, 8 threads {t8:.1} s, speedup {speedup:.2} (need >= 4) on {cores} available core(s)"
        ),
    )
}
