//! Command-line front end: simulate panels, fit models, run goodness-of-fit
//! tests and Monte Carlo studies, and emit extremal-coefficient curves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use maxstable_gof::data::{ModelKind, ModelParams};
use maxstable_gof::fit::{fit_model, FitOptions, FitResult, PairSet};
use maxstable_gof::gof::{bootstrap_one_level, bootstrap_two_level, GofOptions, GofReport, NullXi, StatisticSpec};
use maxstable_gof::models::{mahalanobis, schlather_correlation, schlather_pair_extremal_coefficient, smith_pair_extremal_coefficient};
use maxstable_gof::pickands::EstimatorKind;
use maxstable_gof::ranks::{pseudo_observations, tied_columns};
use maxstable_gof::simulate::{simulate, SimConfig};
use maxstable_gof::study::{run_study, study_sites};
use serde::Serialize;

use crate::config::{parse_params, StudyFile};
use crate::error::{invalid, CliError, CliResult};
use crate::io::{csv_writer, read_panel, read_sites, write_json, write_panel, write_sites, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "msgof", version, about = "Goodness-of-fit tests for Smith and Schlather max-stable models")]
pub struct Cli {
    /// Worker threads for bootstrap loops (default: all available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatisticArg {
    Global,
    Pairwise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NullArg {
    ClosedForm,
    Simulated,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw sites uniformly on a square and write `id,x,y`.
    Sites {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 10.0)]
        extent: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a panel of annual maxima with unit Frechet margins.
    Simulate {
        /// Preset (sigma1..3, rho1..3) or `smith:s11,s12,s22` / `schlather:c,phi,r`.
        #[arg(long)]
        params: String,
        #[arg(long)]
        sites: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model by pairwise composite likelihood.
    Fit {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        sites: PathBuf,
        #[arg(long)]
        model: ModelKind,
        /// Only use pairs closer than this distance.
        #[arg(long)]
        pair_cutoff: Option<f64>,
        #[arg(long, default_value_t = 5)]
        starts: usize,
        /// JSON output (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parametric bootstrap goodness-of-fit test.
    Test {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        sites: PathBuf,
        #[arg(long)]
        model: ModelKind,
        #[arg(long, value_enum, default_value_t = StatisticArg::Global)]
        statistic: StatisticArg,
        #[arg(long, default_value = "CFG")]
        estimator: EstimatorKind,
        /// How the model extremal coefficient of the statistic is obtained;
        /// `simulated` selects the two-level bootstrap.
        #[arg(long, value_enum, default_value_t = NullArg::ClosedForm)]
        null: NullArg,
        /// Second-level size factor, `m = floor(gamma n)`.
        #[arg(long, default_value_t = 50.0)]
        gamma: f64,
        /// Fixed second-level size, overriding `gamma`.
        #[arg(long)]
        m: Option<usize>,
        /// Pairwise statistic: only pairs at least this far apart.
        #[arg(long)]
        min_dist: Option<f64>,
        #[arg(long)]
        pair_cutoff: Option<f64>,
        #[arg(long = "bootstrap", default_value_t = 200)]
        n_boot: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also report `(count + 1) / (N + 1)`.
        #[arg(long)]
        smoothed: bool,
        /// Clip nonparametric coefficients to `[1, b]`.
        #[arg(long)]
        truncate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of the replicate statistics.
        #[arg(long)]
        replicates_csv: Option<PathBuf>,
    },
    /// Monte Carlo rejection rates for a grid of cells.
    Study {
        /// TOML study configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// CSV table (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory of per-cell checkpoint files; reruns resume from them.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Run cells concurrently.
        #[arg(long)]
        parallel_cells: bool,
    },
    /// Pairwise extremal coefficient against distance, as CSV.
    Curves {
        /// Smith parameters (preset or `smith:...`).
        #[arg(long)]
        smith: Option<String>,
        /// Schlather parameters (preset or `schlather:...`).
        #[arg(long)]
        schlather: Option<String>,
        #[arg(long, default_value_t = 10.0)]
        max_distance: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Direction of the displacement, in radians from the x axis.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct SimulateMeta<'a> {
    schema_version: u32,
    command: &'static str,
    software_version: &'static str,
    params: ModelParams,
    seed: u64,
    n: usize,
    d: usize,
    sites: &'a Path,
    simulation: SimConfig,
}

#[derive(Serialize)]
struct FitDocument {
    schema_version: u32,
    command: &'static str,
    model: ModelKind,
    n: usize,
    d: usize,
    n_pairs: usize,
    pair_cutoff: Option<f64>,
    tied_columns: usize,
    result: FitResult,
}

#[derive(Serialize)]
struct TestDocument {
    schema_version: u32,
    command: &'static str,
    bootstrap: &'static str,
    software_version: &'static str,
    report: GofReport,
}

#[derive(Serialize)]
struct StudyRow {
    cell: String,
    data: String,
    hypothesis: ModelKind,
    statistic: String,
    estimator: EstimatorKind,
    d: usize,
    n: usize,
    replications: usize,
    failed: usize,
    rejections: usize,
    rejection_pct: f64,
    std_error_pct: f64,
    flagged: bool,
}

fn params_label(p: &ModelParams) -> String {
    let v = p.to_vec();
    format!("{}:{},{},{}", p.kind(), v[0], v[1], v[2])
}

fn pair_set(sites: &maxstable_gof::data::SiteSet, cutoff: Option<f64>) -> CliResult<PairSet> {
    Ok(match cutoff {
        Some(c) => PairSet::within(sites, c)?,
        None => PairSet::all(sites.len())?,
    })
}

fn check_threads(threads: Option<usize>) -> CliResult<()> {
    if threads == Some(0) {
        return invalid("--threads must be at least 1");
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    check_threads(cli.threads)?;
    match cli.command {
        Command::Sites { d, extent, seed, out } => write_sites(&out, &study_sites(seed, d, extent)?),
        Command::Simulate { params, sites: sites_path, n, seed, out } => {
            let params = parse_params(&params)?;
            let sites = read_sites(&sites_path)?;
            let cfg = SimConfig::with_seed(seed);
            let z = simulate(&params, &sites, n, &cfg)?;
            write_panel(&out, &z, &sites)?;
            let meta = SimulateMeta {
                schema_version: SCHEMA_VERSION,
                command: "simulate",
                software_version: env!("CARGO_PKG_VERSION"),
                params,
                seed,
                n,
                d: sites.len(),
                sites: &sites_path,
                simulation: cfg,
            };
            write_json(Some(&sidecar_path(&out)), &meta)
        }
        Command::Fit { panel, sites, model, pair_cutoff, starts, out } => {
            let sites = read_sites(&sites)?;
            let z = read_panel(&panel, &sites)?;
            let pairs = pair_set(&sites, pair_cutoff)?;
            let u = pseudo_observations(&z)?;
            let result = fit_model(&u, model, &sites, &pairs, &FitOptions { starts, ..FitOptions::default() })?;
            let doc = FitDocument {
                schema_version: SCHEMA_VERSION,
                command: "fit",
                model,
                n: z.n(),
                d: z.d(),
                n_pairs: pairs.len(),
                pair_cutoff,
                tied_columns: tied_columns(&z),
                result,
            };
            write_json(out.as_deref(), &doc)
        }
        Command::Test {
            panel,
            sites,
            model,
            statistic,
            estimator,
            null,
            gamma,
            m,
            min_dist,
            pair_cutoff,
            n_boot,
            seed,
            smoothed,
            truncate,
            out,
            replicates_csv,
        } => {
            let sites = read_sites(&sites)?;
            let z = read_panel(&panel, &sites)?;
            let pairs = pair_set(&sites, pair_cutoff)?;
            let spec = match (statistic, null) {
                (StatisticArg::Global, NullArg::ClosedForm) => StatisticSpec::global(estimator, NullXi::ClosedForm),
                (StatisticArg::Global, NullArg::Simulated) => StatisticSpec::global(estimator, NullXi::Simulated { gamma }),
                (StatisticArg::Pairwise, NullArg::ClosedForm) => StatisticSpec::pairwise(estimator, min_dist),
                (StatisticArg::Pairwise, NullArg::Simulated) => return invalid("pairwise statistics use closed-form coefficients"),
            };
            let opts = GofOptions { threads: cli.threads, smoothed_p: smoothed, truncate, ..GofOptions::default() };
            let (kind, report) = match null {
                NullArg::ClosedForm => ("one_level", bootstrap_one_level(&z, model, &sites, &spec, n_boot, seed, &pairs, &opts)?),
                NullArg::Simulated => ("two_level", bootstrap_two_level(&z, model, &sites, &spec, n_boot, m, seed, &pairs, &opts)?),
            };
            if let Some(path) = replicates_csv {
                let mut w = csv_writer(Some(&path))?;
                w.write_record(["replicate", "statistic"]).map_err(|e| CliError::io(&path, e))?;
                let ok = (0..report.n_bootstrap).filter(|k| !report.failed_replicates.contains(k));
                for (k, s) in ok.zip(&report.replicate_stats) {
                    w.write_record([k.to_string(), s.to_string()]).map_err(|e| CliError::io(&path, e))?;
                }
                w.flush().map_err(|e| CliError::io(&path, e))?;
            }
            let doc = TestDocument { schema_version: SCHEMA_VERSION, command: "test", bootstrap: kind, software_version: env!("CARGO_PKG_VERSION"), report };
            write_json(out.as_deref(), &doc)
        }
        Command::Study { config, seed, out, checkpoints, parallel_cells } => {
            if !config.is_file() {
                return invalid(format!("{}: file not found", config.display()));
            }
            let text = fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            let file = StudyFile::parse(&text)?;
            let cells = file.cells()?;
            let mut cfg = file.study_config(seed)?;
            cfg.gof.threads = cli.threads;
            let outcomes = run_study(&cells, &cfg, checkpoints.as_deref(), parallel_cells)?;
            let mut w = csv_writer(out.as_deref())?;
            let fail = |e: csv::Error| CliError::Io(e.to_string());
            for o in &outcomes {
                for r in &o.rows {
                    if r.flagged {
                        log::warn!("cell {}: {} of {} replications failed", r.cell, r.failed, r.replications);
                    }
                    w.serialize(StudyRow {
                        cell: r.cell.clone(),
                        data: params_label(&r.data),
                        hypothesis: r.hypothesis,
                        statistic: r.statistic.clone(),
                        estimator: r.estimator,
                        d: r.d,
                        n: r.n,
                        replications: r.replications,
                        failed: r.failed,
                        rejections: r.rejections,
                        rejection_pct: r.rejection_pct,
                        std_error_pct: r.std_error_pct,
                        flagged: r.flagged,
                    })
                    .map_err(fail)?;
                }
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))
        }
        Command::Curves { smith, schlather, max_distance, points, angle, out } => {
            if smith.is_none() && schlather.is_none() {
                return invalid("give --smith and/or --schlather parameters");
            }
            if !(max_distance > 0.0) || points < 2 {
                return invalid("need a positive --max-distance and at least 2 points");
            }
            let mut models = Vec::new();
            for (text, kind) in [(smith, ModelKind::Smith), (schlather, ModelKind::Schlather)] {
                if let Some(t) = text {
                    let p = parse_params(&t)?;
                    if p.kind() != kind {
                        return invalid(format!("'{t}' is not a {kind} parameter set"));
                    }
                    models.push(p);
                }
            }
            let mut w = csv_writer(out.as_deref())?;
            let fail = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(["model", "distance", "xi"]).map_err(fail)?;
            let (s, c) = angle.sin_cos();
            for p in &models {
                for k in 0..points {
                    let t = max_distance * k as f64 / (points - 1) as f64;
                    let h = [t * c, t * s];
                    let xi = match p.kind() {
                        ModelKind::Smith => smith_pair_extremal_coefficient(mahalanobis(h, p)?),
                        ModelKind::Schlather => schlather_pair_extremal_coefficient(schlather_correlation(h, p)?),
                    };
                    w.write_record([p.kind().to_string(), t.to_string(), xi.to_string()]).map_err(fail)?;
                }
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// `<panel>.meta.json` next to a simulated panel.
pub fn sidecar_path(panel: &Path) -> PathBuf {
    let mut name = panel.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}
