//! Model parameter strings and study configuration files.

use maxstable_gof::data::{ModelKind, ModelParams};
use maxstable_gof::gof::NullXi;
use maxstable_gof::pickands::EstimatorKind;
use maxstable_gof::study::{scenario, CellSpec, CellStatistic, StudyConfig, SCENARIOS};
use serde::Deserialize;

use crate::error::{invalid, CliResult};

/// Parses a scenario preset (`sigma1`, `rho2`, ...) or an explicit
/// `smith:s11,s12,s22` / `schlather:c,phi,r`.
pub fn parse_params(text: &str) -> CliResult<ModelParams> {
    let text = text.trim();
    let Some((model, values)) = text.split_once(':') else {
        return scenario(text).or_else(|_| invalid(format!("unknown preset '{text}' (presets: {})", SCENARIOS.join(", "))));
    };
    let v: Vec<f64> = values
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .or_else(|_| invalid(format!("cannot parse parameter values '{values}'")))?;
    if v.len() != 3 {
        return invalid(format!("expected three parameter values, got {}", v.len()));
    }
    Ok(match model.parse::<ModelKind>()? {
        ModelKind::Smith => ModelParams::smith(v[0], v[1], v[2])?,
        ModelKind::Schlather => ModelParams::schlather(v[0], v[1], v[2])?,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StatisticName {
    Global,
    Pairwise,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum NullName {
    #[default]
    ClosedForm,
    Simulated,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub name: String,
    pub data: OneOrMany<String>,
    pub hypothesis: ModelKind,
    pub statistic: StatisticName,
    #[serde(default)]
    pub null: NullName,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub min_dist: Option<f64>,
    pub estimators: Vec<String>,
    pub d: OneOrMany<usize>,
    pub n: OneOrMany<usize>,
}

fn default_gamma() -> f64 {
    50.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub replications: usize,
    pub bootstrap: usize,
    pub level: Option<f64>,
    pub extent: Option<f64>,
    /// Second-level sample size for simulated null coefficients.
    pub m: Option<usize>,
    #[serde(rename = "cell")]
    pub cells: Vec<CellConfig>,
}

impl StudyFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).or_else(|e| invalid(format!("study configuration: {e}")))
    }

    /// Expands every cell over its grid of data scenarios, `d` and `n`.
    pub fn cells(&self) -> CliResult<Vec<CellSpec>> {
        let mut out = Vec::new();
        for c in &self.cells {
            let estimators = c.estimators.iter().map(|e| e.parse::<EstimatorKind>()).collect::<Result<Vec<_>, _>>()?;
            let statistic = match (c.statistic, c.null) {
                (StatisticName::Global, NullName::ClosedForm) => CellStatistic::Global { null_xi: NullXi::ClosedForm },
                (StatisticName::Global, NullName::Simulated) => CellStatistic::Global { null_xi: NullXi::Simulated { gamma: c.gamma } },
                (StatisticName::Pairwise, NullName::ClosedForm) => CellStatistic::Pairwise { min_dist: c.min_dist },
                (StatisticName::Pairwise, NullName::Simulated) => return invalid(format!("cell '{}': pairwise statistics use closed forms", c.name)),
            };
            let (data, ds, ns) = (c.data.to_vec(), c.d.to_vec(), c.n.to_vec());
            let grid = data.len() * ds.len() * ns.len() > 1;
            for label in &data {
                let params = parse_params(label)?;
                for &d in &ds {
                    for &n in &ns {
                        let name = if grid { format!("{}_{}_d{d}_n{n}", c.name, label.replace([':', ','], "-")) } else { c.name.clone() };
                        let cell = CellSpec { name, data: params, hypothesis: c.hypothesis, statistic, estimators: estimators.clone(), d, n };
                        cell.validate()?;
                        out.push(cell);
                    }
                }
            }
        }
        if out.is_empty() {
            return invalid("the study configuration defines no cell");
        }
        Ok(out)
    }

    pub fn study_config(&self, seed: u64) -> CliResult<StudyConfig> {
        let mut cfg = StudyConfig::new(seed, self.replications, self.bootstrap);
        if let Some(l) = self.level {
            cfg.level = l;
        }
        if let Some(e) = self.extent {
            cfg.extent = e;
        }
        cfg.gof.m_override = self.m;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_from_presets_and_values() {
        assert_eq!(parse_params("sigma1").unwrap(), ModelParams::Smith { s11: 4.0, s12: 2.0, s22: 4.0 });
        assert_eq!(parse_params("smith: 1, 0.5, 2").unwrap(), ModelParams::Smith { s11: 1.0, s12: 0.5, s22: 2.0 });
        assert!(matches!(parse_params("schlather:8,0.5,0.4").unwrap(), ModelParams::Schlather { .. }));
        assert!(parse_params("smith:1,2").is_err());
        assert!(parse_params("smith:1,2,1").is_err());
        assert!(parse_params("sigma7").is_err());
    }

    #[test]
    fn grid_expansion() {
        let f = StudyFile::parse(
            r#"
            replications = 3
            bootstrap = 5
            [[cell]]
            name = "null"
            data = ["sigma1", "sigma2"]
            hypothesis = "smith"
            statistic = "global"
            estimators = ["P", "cfg"]
            d = [4, 6]
            n = 30
            "#,
        )
        .unwrap();
        let cells = f.cells().unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[1].name, "null_sigma1_d6_n30");
        assert_eq!(cells[0].estimators, vec![EstimatorKind::P, EstimatorKind::CFG]);
    }

    #[test]
    fn unknown_keys_and_bad_cells_rejected() {
        let base = "replications = 1\nbootstrap = 1\n[[cell]]\nname = \"a\"\ndata = \"rho1\"\nhypothesis = \"schlather\"\nestimators = [\"P\"]\nd = 5\nn = 20\n";
        assert!(StudyFile::parse(&format!("{base}statistic = \"global\"\nbogus = 1\n")).is_err());
        // Schlather global statistics need simulated null coefficients
        assert!(StudyFile::parse(&format!("{base}statistic = \"global\"\n")).unwrap().cells().is_err());
        let ok = StudyFile::parse(&format!("{base}statistic = \"global\"\nnull = \"simulated\"\n")).unwrap();
        assert!(ok.cells().is_ok());
    }
}
