//! Small dense linear algebra.

use crate::error::{Error, Result};

/// Rank-revealing Cholesky with full pivoting of a symmetric PSD matrix.
///
/// Returns `L` (d rows, r columns, row-major over the original ordering)
/// with `L L' = M` up to `tol` on the pivots, where `r` is the numerical
/// rank.
pub fn pivoted_cholesky(m: &[Vec<f64>], tol: f64) -> Result<(Vec<Vec<f64>>, usize)> {
    let d = m.len();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut diag: Vec<f64> = (0..d).map(|i| m[i][i]).collect();
    // columns of L in pivot order, each indexed by original row
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        let (pos, &best) = perm[k..]
            .iter()
            .map(|&i| &diag[i])
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        if best <= tol {
            if perm[k..].iter().any(|&i| diag[i] < -tol) {
                return Err(Error::Numerical("matrix is not positive semidefinite".into()));
            }
            break;
        }
        perm.swap(k, k + pos);
        let p = perm[k];
        let lpp = best.sqrt();
        let mut col = vec![0.0; d];
        col[p] = lpp;
        for &i in &perm[k + 1..] {
            let mut s = m[i][p];
            for c in &cols {
                s -= c[i] * c[p];
            }
            col[i] = s / lpp;
            diag[i] -= col[i] * col[i];
        }
        cols.push(col);
    }
    let r = cols.len();
    let l = (0..d).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Ok((l, r))
}
