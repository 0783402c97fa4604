//! Nelder–Mead simplex minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop when the spread of objective values over the simplex falls
    /// below `rel_tol * (|f_best| + rel_tol)`.
    pub rel_tol: f64,
    /// Number of restarts from the best vertex after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evaluations: 2000, rel_tol: 1e-8, restarts: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with initial simplex edges `steps`.
/// Non-finite objective values are treated as `+inf`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut x = x0.to_vec();
    let mut fx = eval(&x, &mut evals);
    let mut converged = false;
    for round in 0..=opts.restarts {
        let budget = opts.max_evaluations.saturating_sub(evals);
        let (bx, bf, used, ok) = run(&mut eval, &x, fx, steps, budget, opts.rel_tol);
        evals += used;
        let improved = fx - bf;
        x = bx;
        fx = bf;
        if !ok {
            converged = false;
            break;
        }
        converged = true;
        if round > 0 && improved <= opts.rel_tol * (fx.abs() + opts.rel_tol) {
            break;
        }
    }
    NelderMeadResult { x, f: fx, n_evaluations: evals, converged: converged && fx.is_finite() }
}

fn run(
    eval: &mut impl FnMut(&[f64], &mut usize) -> f64,
    x0: &[f64],
    f0: f64,
    steps: &[f64],
    budget: usize,
    rel_tol: f64,
) -> (Vec<f64>, f64, usize, bool) {
    let k = x0.len();
    let mut used = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..k {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        let fv = eval(&v, &mut used);
        simplex.push((v, fv));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[k].1;
        if best.is_finite() && worst - best <= rel_tol * (best.abs() + rel_tol) {
            let (x, f) = simplex.swap_remove(0);
            return (x, f, used, true);
        }
        if used >= budget {
            let (x, f) = simplex.swap_remove(0);
            return (x, f, used, false);
        }
        let mut centroid = vec![0.0; k];
        for (v, _) in &simplex[..k] {
            for (c, &vi) in centroid.iter_mut().zip(v) {
                *c += vi / k as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[k].0).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut used);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut used);
            simplex[k] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[k - 1].1 {
            simplex[k] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[k].1 {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut used);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut used);
            (xc, fc)
        };
        if fc < fr.min(simplex[k].1) {
            simplex[k] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (vi, b) in v.iter_mut().zip(&x_best) {
                *vi = b + 0.5 * (*vi - b);
            }
            *fv = eval(v, &mut used);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions { max_evaluations: 5000, rel_tol: 1e-14, restarts: 2 };
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn quadratic_and_budget() {
        let f = |x: &[f64]| 3.0 + (x[0] - 2.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + (x[2] - 0.5).powi(2);
        let r = nelder_mead(f, &[0.0; 3], &[1.0; 3], &NelderMeadOptions::default());
        assert!(r.converged);
        assert!((r.f - 3.0).abs() < 1e-6);
        let tight = NelderMeadOptions { max_evaluations: 10, ..Default::default() };
        let r = nelder_mead(f, &[0.0; 3], &[1.0; 3], &tight);
        assert!(!r.converged);
        assert!(r.n_evaluations <= 10 + 4);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.1).powi(2) + x[1] * x[1] };
        let r = nelder_mead(f, &[1.0, 1.0], &[0.6, 0.6], &NelderMeadOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 0.1).abs() < 1e-3);
    }
}
