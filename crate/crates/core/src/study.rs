//! Monte Carlo studies of rejection rates.
//!
//! A cell fixes the data-generating model, the hypothesized family, the
//! statistic, the number of sites and the sample size. Each outer
//! replication simulates a data set, runs the bootstrap and records one
//! p-value per estimator. Site sets are drawn uniformly on a square once per
//! `(seed, d)` and shared by all cells.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ModelKind, ModelParams, SiteSet};
use crate::error::{validation, Error, Result};
use crate::fit::PairSet;
use crate::gof::{bootstrap_many, GofOptions, NullXi, StatisticSpec};
use crate::pickands::EstimatorKind;
use crate::rng::{derive_seed, name_hash, substream};
use crate::simulate::{simulate, SimConfig};

const STREAM_SITES: u64 = 11;
const STREAM_DATA: u64 = 12;
const STREAM_BOOT: u64 = 13;

/// Named dependence scenarios: `sigma1..3` (Smith covariances) and
/// `rho1..3` (Schlather correlation ranges with a common anisotropy).
pub fn scenario(name: &str) -> Result<ModelParams> {
    let r = 1.0 / 3f64.sqrt();
    match name.to_ascii_lowercase().as_str() {
        "sigma1" => ModelParams::smith(4.0, 2.0, 4.0),
        "sigma2" => ModelParams::smith(16.0, 8.0, 16.0),
        "sigma3" => ModelParams::smith(100.0, 50.0, 100.0),
        "rho1" => ModelParams::schlather(4.0, FRAC_PI_4, r),
        "rho2" => ModelParams::schlather(8.0, FRAC_PI_4, r),
        "rho3" => ModelParams::schlather(20.5, FRAC_PI_4, r),
        other => validation(format!("unknown scenario '{other}'")),
    }
}

pub const SCENARIOS: [&str; 6] = ["sigma1", "sigma2", "sigma3", "rho1", "rho2", "rho3"];

/// `d` sites uniform on `[0, extent]^2`, fixed by `(seed, d)`.
pub fn study_sites(seed: u64, d: usize, extent: f64) -> Result<SiteSet> {
    if !(extent > 0.0) {
        return validation("site extent must be positive");
    }
    let mut rng = substream(seed, &[STREAM_SITES, d as u64]);
    SiteSet::new((0..d).map(|_| [extent * rng.gen::<f64>(), extent * rng.gen::<f64>()]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CellStatistic {
    Global { null_xi: NullXi },
    Pairwise { min_dist: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub name: String,
    pub data: ModelParams,
    pub hypothesis: ModelKind,
    pub statistic: CellStatistic,
    pub estimators: Vec<EstimatorKind>,
    pub d: usize,
    pub n: usize,
}

impl CellSpec {
    pub fn specs(&self) -> Vec<StatisticSpec> {
        self.estimators
            .iter()
            .map(|&e| match self.statistic {
                CellStatistic::Global { null_xi } => StatisticSpec::global(e, null_xi),
                CellStatistic::Pairwise { min_dist } => StatisticSpec::pairwise(e, min_dist),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return validation(format!("invalid cell name '{}'", self.name));
        }
        if self.estimators.is_empty() {
            return validation(format!("cell '{}' has no estimator", self.name));
        }
        if self.d < 2 || self.n < 2 {
            return validation(format!("cell '{}' needs d >= 2 and n >= 2", self.name));
        }
        self.data.validate()?;
        for s in self.specs() {
            s.validate(self.hypothesis, self.d)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub seed: u64,
    pub replications: usize,
    pub bootstrap: usize,
    pub level: f64,
    pub extent: f64,
    pub gof: GofOptions,
}

impl StudyConfig {
    pub fn new(seed: u64, replications: usize, bootstrap: usize) -> Self {
        Self { seed, replications, bootstrap, level: 0.05, extent: 10.0, gof: GofOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 || self.bootstrap < 1 {
            return validation("replications and bootstrap size must be at least 1");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return validation("significance level must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Outcome of one outer replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub r: usize,
    /// One p-value per estimator of the cell, or `None` if the replication failed.
    pub p_values: Option<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub cell: String,
    pub data: ModelParams,
    pub hypothesis: ModelKind,
    pub statistic: String,
    pub estimator: EstimatorKind,
    pub d: usize,
    pub n: usize,
    pub replications: usize,
    pub failed: usize,
    pub rejections: usize,
    pub rejection_pct: f64,
    pub std_error_pct: f64,
    /// Set when some replications failed.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub cell: CellSpec,
    pub rows: Vec<CellRow>,
    pub records: Vec<ReplicationRecord>,
}

/// Rejection percentage and its binomial standard error, in percent.
pub fn rejection_rate(rejections: usize, total: usize) -> (f64, f64) {
    if total == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = rejections as f64 / total as f64;
    (100.0 * p, 100.0 * (p * (1.0 - p) / total as f64).sqrt())
}

fn params_hash(p: &ModelParams) -> u64 {
    p.to_vec().iter().fold(name_hash(&p.kind().to_string()), |h, v| h.rotate_left(17) ^ v.to_bits())
}

/// One outer replication of a cell; deterministic in `(cfg.seed, cell, r)`.
/// Data sets depend only on the generating model, `d`, `n` and `r`, so
/// cells that differ only in the hypothesis or statistic see the same data.
pub fn run_replication(cell: &CellSpec, cfg: &StudyConfig, sites: &SiteSet, r: usize) -> ReplicationRecord {
    let data_seed = derive_seed(cfg.seed, &[STREAM_DATA, cell.d as u64, cell.n as u64, params_hash(&cell.data)]);
    let boot_seed = derive_seed(cfg.seed, &[STREAM_BOOT, name_hash(&cell.name), r as u64]);
    let sim = SimConfig { seed: data_seed, stream_id: r as u64, ..cfg.gof.sim };
    let result = simulate(&cell.data, sites, cell.n, &sim).and_then(|z| {
        let pairs = PairSet::all(cell.d)?;
        bootstrap_many(&z, cell.hypothesis, sites, &cell.specs(), cfg.bootstrap, boot_seed, &pairs, &cfg.gof)
    });
    match result {
        Ok(reports) => ReplicationRecord { r, p_values: Some(reports.iter().map(|g| g.p_value).collect()), error: None },
        Err(e) => {
            log::warn!("cell {} replication {r} failed: {e}", cell.name);
            ReplicationRecord { r, p_values: None, error: Some(e.to_string()) }
        }
    }
}

fn checkpoint_path(dir: &Path, cell: &CellSpec) -> PathBuf {
    dir.join(format!("{}.jsonl", cell.name))
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Reads completed replications; an unparsable line (e.g. a write cut short
/// by an interrupt) ends the usable part of the file.
fn read_checkpoint(path: &Path, n_est: usize) -> Result<BTreeMap<usize, ReplicationRecord>> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let f = File::open(path).map_err(|e| io_error(path, e))?;
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| io_error(path, e))?;
        match serde_json::from_str::<ReplicationRecord>(&line) {
            Ok(rec) if rec.p_values.as_ref().is_none_or(|p| p.len() == n_est) => {
                out.insert(rec.r, rec);
            }
            _ => break,
        }
    }
    Ok(out)
}

/// Runs (or resumes) one cell. With a checkpoint directory, each finished
/// replication is appended to `<dir>/<cell name>.jsonl` and replications
/// already present there are not recomputed.
pub fn run_cell(cell: &CellSpec, cfg: &StudyConfig, checkpoint_dir: Option<&Path>) -> Result<CellOutcome> {
    cell.validate()?;
    cfg.validate()?;
    let sites = study_sites(cfg.seed, cell.d, cfg.extent)?;
    let n_est = cell.estimators.len();
    let (mut done, mut writer) = match checkpoint_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            let path = checkpoint_path(dir, cell);
            let done = read_checkpoint(&path, n_est)?;
            // rewrite the file with only the valid records
            let mut f = File::create(&path).map_err(|e| io_error(&path, e))?;
            for rec in done.values() {
                writeln!(f, "{}", serde_json::to_string(rec).expect("record serializes")).map_err(|e| io_error(&path, e))?;
            }
            drop(f);
            let w = OpenOptions::new().append(true).open(&path).map_err(|e| io_error(&path, e))?;
            (done, Some((w, path)))
        }
        None => (BTreeMap::new(), None),
    };
    done.retain(|&r, _| r < cfg.replications);
    for r in 0..cfg.replications {
        if done.contains_key(&r) {
            continue;
        }
        let rec = run_replication(cell, cfg, &sites, r);
        log::info!("cell {} replication {}/{} done", cell.name, r + 1, cfg.replications);
        if let Some((w, path)) = writer.as_mut() {
            writeln!(w, "{}", serde_json::to_string(&rec).expect("record serializes")).map_err(|e| io_error(path, e))?;
            w.flush().map_err(|e| io_error(path, e))?;
        }
        done.insert(r, rec);
    }
    let records: Vec<ReplicationRecord> = done.into_values().collect();
    Ok(summarize(cell, cfg, records))
}

pub fn summarize(cell: &CellSpec, cfg: &StudyConfig, records: Vec<ReplicationRecord>) -> CellOutcome {
    let ok: Vec<&Vec<f64>> = records.iter().filter_map(|r| r.p_values.as_ref()).collect();
    let failed = records.len() - ok.len();
    let statistic = match cell.statistic {
        CellStatistic::Global { null_xi: NullXi::ClosedForm } => "global".to_string(),
        CellStatistic::Global { null_xi: NullXi::Simulated { .. } } => "global-two-level".to_string(),
        CellStatistic::Pairwise { .. } => "pairwise".to_string(),
    };
    let rows = cell
        .estimators
        .iter()
        .enumerate()
        .map(|(k, &estimator)| {
            let rejections = ok.iter().filter(|p| p[k] <= cfg.level).count();
            let (pct, se) = rejection_rate(rejections, ok.len());
            CellRow {
                cell: cell.name.clone(),
                data: cell.data,
                hypothesis: cell.hypothesis,
                statistic: statistic.clone(),
                estimator,
                d: cell.d,
                n: cell.n,
                replications: ok.len(),
                failed,
                rejections,
                rejection_pct: pct,
                std_error_pct: se,
                flagged: failed > 0,
            }
        })
        .collect();
    CellOutcome { cell: cell.clone(), rows, records }
}

/// Runs several cells, sequentially unless `parallel_cells` is set.
pub fn run_study(cells: &[CellSpec], cfg: &StudyConfig, checkpoint_dir: Option<&Path>, parallel_cells: bool) -> Result<Vec<CellOutcome>> {
    let mut names: Vec<&str> = cells.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return validation("cell names must be unique");
    }
    if parallel_cells {
        cells.par_iter().map(|c| run_cell(c, cfg, checkpoint_dir)).collect()
    } else {
        cells.iter().map(|c| run_cell(c, cfg, checkpoint_dir)).collect()
    }
}
