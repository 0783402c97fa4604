//! Margin-free pseudo-observations.

use crate::data::{MaximaPanel, Panel, PseudoObsPanel};
use crate::error::{domain, validation, Result};

/// Average ranks (1-based) of a column; tied values share the mean of the
/// ranks they occupy.
pub fn average_ranks(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && column[order[end]] == column[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let r = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

/// Number of columns that contain at least one tie.
pub fn tied_columns(panel: &MaximaPanel) -> usize {
    let v = panel.values();
    (0..v.ncols())
        .filter(|&j| {
            let mut c = v.column(j).to_vec();
            c.sort_by(f64::total_cmp);
            c.windows(2).any(|w| w[0] == w[1])
        })
        .count()
}

/// `U_ij = R_ij / (n + 1)` with `R_ij` the (average) rank of `X_ij` in column `j`.
pub fn pseudo_observations(panel: &MaximaPanel) -> Result<PseudoObsPanel> {
    rank_columns(panel.values())
}

/// Same transform on an arbitrary finite panel (e.g. a simulated copula sample).
pub fn rank_columns(values: &Panel) -> Result<PseudoObsPanel> {
    let n = values.nrows();
    if n < 1 {
        return validation("cannot rank an empty panel");
    }
    if values.values().iter().any(|v| !v.is_finite()) {
        return validation("cannot rank non-finite values");
    }
    let scale = 1.0 / (n as f64 + 1.0);
    let cols = (0..values.ncols())
        .map(|j| average_ranks(values.column(j)).into_iter().map(|r| r * scale).collect())
        .collect();
    PseudoObsPanel::new(Panel::from_columns(cols))
}

/// Unit Fréchet c.d.f. `exp(-1/z)`.
pub fn frechet_to_uniform(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return domain(format!("unit Fréchet value must be positive, got {z}"));
    }
    Ok((-1.0 / z).exp())
}
