//! Grid sweeps: cells × seeds run in parallel, aggregated into `report.csv`
//! and `summary.json`.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use varbandit_core::algorithms::{build_env, run_on};
use varbandit_core::types::{
    ActionSetSpec, Algorithm, Construction, CovarianceSpec, Diagnostics, EnvSpec, ExperimentConfig, SamplerKind,
    ThetaSpec, TraceMeta,
};

use crate::config::{config_hash, seed_override};
use crate::error::CliError;
use crate::output::{csv_writer, fmt_f64, write_trace};
use crate::run::exploit_reached;

/// How a grid point's `sigma_sq` becomes a covariance on a ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallCovariance {
    /// `sigma_sq` is `σ_q²` of an isotropic `Σ`.
    #[default]
    SigmaQ,
    /// `Σ = sigma_sq · I`.
    Isotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepEnv {
    Ball {
        theta_star: ThetaSpec,
        #[serde(default)]
        covariance: BallCovariance,
        #[serde(default = "default_sampler")]
        sampler: SamplerKind,
    },
    RandomFinite {
        k: usize,
        action_seed: u64,
        theta_star: ThetaSpec,
        #[serde(default = "default_sampler")]
        sampler: SamplerKind,
    },
    LowerBound {
        construction: Construction,
    },
}

fn default_sampler() -> SamplerKind {
    SamplerKind::GaussianRejection
}

fn default_p() -> Vec<f64> {
    vec![2.0]
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub algorithms: Vec<Algorithm>,
    pub d: Vec<usize>,
    pub horizons: Vec<u64>,
    pub sigma_sq: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    pub seeds_per_cell: u64,
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub known_covariance: bool,
    #[serde(default)]
    pub baseline_m: Option<u64>,
    pub environment: SweepEnv,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub jobs: Option<usize>,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub id: usize,
    pub algorithm: Algorithm,
    pub d: usize,
    pub p: f64,
    pub sigma_sq: f64,
    pub horizon: u64,
}

impl Cell {
    /// Cells sharing everything but the horizon.
    fn group(&self) -> (Algorithm, usize, u64, u64) {
        (self.algorithm, self.d, self.p.to_bits(), self.sigma_sq.to_bits())
    }
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: Self = serde_json::from_str(text).map_err(CliError::config)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let empty = [
            ("algorithms", self.algorithms.is_empty()),
            ("d", self.d.is_empty()),
            ("horizons", self.horizons.is_empty()),
            ("sigma_sq", self.sigma_sq.is_empty()),
            ("p", self.p.is_empty()),
        ];
        if let Some((field, _)) = empty.iter().find(|e| e.1) {
            return Err(CliError::config(format!("field `{field}`: grid must not be empty")));
        }
        if self.seeds_per_cell < 1 {
            return Err(CliError::config("field `seeds_per_cell`: must be >= 1"));
        }
        if self.jobs == Some(0) {
            return Err(CliError::config("field `jobs`: must be >= 1"));
        }
        if matches!(self.environment, SweepEnv::RandomFinite { .. }) && self.p.len() > 1 {
            return Err(CliError::config("field `p`: finite action sets take no p grid"));
        }
        for cell in self.cells() {
            self.cell_config(&cell).validate().map_err(|e| {
                CliError::config(format!(
                    "cell {} ({}, d={}, T={}): {e}",
                    cell.id, cell.algorithm, cell.d, cell.horizon
                ))
            })?;
        }
        Ok(())
    }

    /// Grid points in id order: algorithm, d, p, sigma_sq, then horizon.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for &d in &self.d {
                for &p in &self.p {
                    for &sigma_sq in &self.sigma_sq {
                        for &horizon in &self.horizons {
                            out.push(Cell {
                                id: out.len(),
                                algorithm,
                                d,
                                p,
                                sigma_sq,
                                horizon,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn cell_config(&self, cell: &Cell) -> ExperimentConfig {
        let environment = match &self.environment {
            SweepEnv::Ball {
                theta_star,
                covariance,
                sampler,
            } => EnvSpec::Custom {
                action_set: ActionSetSpec::LpBall { d: cell.d, p: cell.p },
                theta_star: theta_star.clone(),
                covariance: match covariance {
                    BallCovariance::SigmaQ => CovarianceSpec::IsotropicSigmaQ {
                        sigma_q_sq: cell.sigma_sq,
                    },
                    BallCovariance::Isotropic => CovarianceSpec::Isotropic {
                        sigma_sq: cell.sigma_sq,
                    },
                },
                sampler: *sampler,
            },
            SweepEnv::RandomFinite {
                k,
                action_seed,
                theta_star,
                sampler,
            } => EnvSpec::Custom {
                action_set: ActionSetSpec::RandomUnit {
                    k: *k,
                    d: cell.d,
                    seed: *action_seed,
                },
                theta_star: theta_star.clone(),
                covariance: CovarianceSpec::Isotropic {
                    sigma_sq: cell.sigma_sq,
                },
                sampler: *sampler,
            },
            SweepEnv::LowerBound { construction } => EnvSpec::LowerBound {
                construction: *construction,
                d: cell.d,
                sigma_sq: cell.sigma_sq,
                q: cell.p / (cell.p - 1.0),
            },
        };
        ExperimentConfig {
            algorithm: cell.algorithm,
            horizon: cell.horizon,
            delta: self.delta,
            known_covariance: self.known_covariance,
            tau: None,
            seed: self.seed,
            environment,
            baseline_m: self.baseline_m,
            gamma: None,
        }
    }
}

/// Ordinary least squares slope of `ln y` on `ln x`, ignoring points with
/// non-positive `y`. `None` with fewer than 4 usable points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0 && y.is_finite())
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub final_regret: f64,
    pub steps: u64,
    pub exploit_reached: Option<bool>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub cell: Cell,
    pub runs: u64,
    pub failed_runs: u64,
    pub error: Option<String>,
    pub mean_regret: Option<f64>,
    pub std_regret: Option<f64>,
    pub slope: Option<f64>,
    pub total_steps: u64,
    pub sigma_q_sq: Option<f64>,
    pub m_sigma: Option<f64>,
    pub theta_star_norm: Option<f64>,
    pub exploit_reached_rate: Option<f64>,
}

impl ReportRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

pub const REPORT_HEADER: [&str; 17] = [
    "cell_id",
    "status",
    "algorithm",
    "d",
    "p",
    "sigma_sq",
    "horizon",
    "runs",
    "failed_runs",
    "mean_regret",
    "std_regret",
    "slope",
    "total_steps",
    "sigma_q_sq",
    "m_sigma",
    "theta_star_norm",
    "exploit_reached_rate",
];

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_report<W: std::io::Write>(w: W, rows: &[ReportRow]) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in rows {
        out.write_record([
            r.cell.id.to_string(),
            if r.ok() { "ok" } else { "failed" }.to_string(),
            r.cell.algorithm.name().to_string(),
            r.cell.d.to_string(),
            fmt_f64(r.cell.p),
            fmt_f64(r.cell.sigma_sq),
            r.cell.horizon.to_string(),
            r.runs.to_string(),
            r.failed_runs.to_string(),
            opt(r.mean_regret),
            opt(r.std_regret),
            opt(r.slope),
            r.total_steps.to_string(),
            opt(r.sigma_q_sq),
            opt(r.m_sigma),
            opt(r.theta_star_norm),
            opt(r.exploit_reached_rate),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStatus {
    pub cell_id: usize,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub check: &'static str,
    pub algorithm: Option<&'static str>,
    pub d: usize,
    pub p: f64,
    pub sigma_sq: f64,
    pub horizon: Option<u64>,
    pub value: Option<f64>,
    pub baseline_value: Option<f64>,
    pub expected: &'static str,
    pub verdict: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub seeds_per_cell: u64,
    pub cells_ok: usize,
    pub cells_failed: usize,
    pub cells: Vec<CellStatus>,
    pub theorem_checks: Vec<TheoremCheck>,
}

fn verdict(pass: Option<bool>) -> &'static str {
    match pass {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "not_applicable",
    }
}

/// Regret-slope windows per algorithm, and the variance-aware-beats-fixed-M
/// comparison at the largest common horizon.
pub fn theorem_checks(rows: &[ReportRow]) -> Vec<TheoremCheck> {
    let mut checks = Vec::new();
    let mut seen = Vec::new();
    for r in rows {
        let g = r.cell.group();
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let (expected, test): (&'static str, fn(f64) -> bool) = match r.cell.algorithm {
            Algorithm::Vase | Algorithm::Valee => ("slope in [0.35, 0.65]", |s| (0.35..=0.65).contains(&s)),
            Algorithm::BaselineEe => ("slope >= 0.55", |s| s >= 0.55),
            Algorithm::BaselineSe => continue,
        };
        checks.push(TheoremCheck {
            check: "regret_slope",
            algorithm: Some(r.cell.algorithm.name()),
            d: r.cell.d,
            p: r.cell.p,
            sigma_sq: r.cell.sigma_sq,
            horizon: None,
            value: r.slope,
            baseline_value: None,
            expected,
            verdict: verdict(r.slope.map(test)),
        });
    }
    for r in rows.iter().filter(|r| r.cell.algorithm == Algorithm::Valee) {
        let max_t = rows
            .iter()
            .filter(|x| x.cell.group() == r.cell.group())
            .map(|x| x.cell.horizon)
            .max();
        if Some(r.cell.horizon) != max_t {
            continue;
        }
        let Some(base) = rows.iter().find(|b| {
            b.cell.algorithm == Algorithm::BaselineEe
                && b.cell.d == r.cell.d
                && b.cell.p == r.cell.p
                && b.cell.sigma_sq == r.cell.sigma_sq
                && b.cell.horizon == r.cell.horizon
        }) else {
            continue;
        };
        let pass = match (r.mean_regret, base.mean_regret) {
            (Some(v), Some(b)) => Some(v < b),
            _ => None,
        };
        checks.push(TheoremCheck {
            check: "valee_beats_explore_exploit",
            algorithm: Some(Algorithm::Valee.name()),
            d: r.cell.d,
            p: r.cell.p,
            sigma_sq: r.cell.sigma_sq,
            horizon: Some(r.cell.horizon),
            value: r.mean_regret,
            baseline_value: base.mean_regret,
            expected: "valee mean regret < baseline_ee mean regret",
            verdict: verdict(pass),
        });
    }
    checks
}

fn run_one(spec: &SweepSpec, cell: &Cell, seed_idx: u64, traces: Option<&Path>) -> Result<RunStats, String> {
    let cfg = spec.cell_config(cell);
    let (mut env, _) = build_env(&cfg, seed_idx).map_err(|e| e.to_string())?;
    let diagnostics = env.diagnostics().map_err(|e| e.to_string())?;
    let meta = TraceMeta {
        algorithm: cfg.algorithm.name().into(),
        seed: cfg.seed,
        run_index: seed_idx,
        config_hash: config_hash(&cfg),
    };
    let (trace, report) = run_on(&cfg, &mut env, meta).map_err(|e| e.to_string())?;
    if let Some(dir) = traces {
        let path = dir.join(format!("cell{:04}_seed{:04}.csv", cell.id, seed_idx));
        let file = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        write_trace(std::io::BufWriter::new(file), &trace).map_err(|e| e.to_string())?;
    }
    Ok(RunStats {
        final_regret: trace.final_regret(),
        steps: trace.len() as u64,
        exploit_reached: exploit_reached(&report),
        diagnostics,
    })
}

fn aggregate(cell: Cell, results: &[Result<RunStats, String>]) -> ReportRow {
    let ok: Vec<&RunStats> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let error = results.iter().find_map(|r| r.as_ref().err()).cloned();
    let mut row = ReportRow {
        cell,
        runs: results.len() as u64,
        failed_runs: (results.len() - ok.len()) as u64,
        error: error.clone(),
        mean_regret: None,
        std_regret: None,
        slope: None,
        total_steps: ok.iter().map(|s| s.steps).sum(),
        sigma_q_sq: None,
        m_sigma: None,
        theta_star_norm: None,
        exploit_reached_rate: None,
    };
    if error.is_some() || ok.is_empty() {
        return row;
    }
    let n = ok.len() as f64;
    let mean = ok.iter().map(|s| s.final_regret).sum::<f64>() / n;
    let var = if ok.len() > 1 {
        ok.iter().map(|s| (s.final_regret - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    row.mean_regret = Some(mean);
    row.std_regret = Some(var.sqrt());
    let avg = |f: fn(&Diagnostics) -> f64| ok.iter().map(|s| f(&s.diagnostics)).sum::<f64>() / n;
    row.sigma_q_sq = Some(avg(|d| d.sigma_q_sq));
    row.m_sigma = Some(avg(|d| d.m_sigma));
    row.theta_star_norm = Some(avg(|d| d.theta_star_dual_norm));
    let reached: Vec<bool> = ok.iter().filter_map(|s| s.exploit_reached).collect();
    if !reached.is_empty() {
        row.exploit_reached_rate = Some(reached.iter().filter(|&&b| b).count() as f64 / reached.len() as f64);
    }
    row
}

/// Fills the slope column of every successful row from its horizon group.
fn attach_slopes(rows: &mut [ReportRow]) {
    let slopes: Vec<Option<f64>> = rows
        .iter()
        .map(|r| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|x| x.cell.group() == r.cell.group())
                .filter_map(|x| x.mean_regret.map(|m| (x.cell.horizon as f64, m)))
                .collect();
            fit_loglog_slope(&pts)
        })
        .collect();
    for (r, s) in rows.iter_mut().zip(slopes) {
        if r.ok() {
            r.slope = s;
        }
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

/// Runs every cell × seed. A panicking or failing run marks its cell failed
/// without affecting the others.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>, traces: Option<&Path>) -> Result<SweepOutcome, CliError> {
    let cells = spec.cells();
    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..spec.seeds_per_cell).map(move |s| (c, s)))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs.or(spec.jobs) {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(CliError::runtime)?;
    let results: Vec<Result<RunStats, String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, s)| {
                catch_unwind(AssertUnwindSafe(|| run_one(spec, &cells[c], s, traces)))
                    .unwrap_or_else(|_| Err("run panicked".to_string()))
            })
            .collect()
    });
    let per = spec.seeds_per_cell as usize;
    let mut rows: Vec<ReportRow> = cells
        .iter()
        .enumerate()
        .map(|(i, cell)| aggregate(*cell, &results[i * per..(i + 1) * per]))
        .collect();
    attach_slopes(&mut rows);
    let cells_status: Vec<CellStatus> = rows
        .iter()
        .map(|r| CellStatus {
            cell_id: r.cell.id,
            status: if r.ok() { "ok" } else { "failed" },
            error: r.error.clone(),
        })
        .collect();
    let cells_ok = rows.iter().filter(|r| r.ok()).count();
    let summary = Summary {
        seed: spec.seed,
        seeds_per_cell: spec.seeds_per_cell,
        cells_ok,
        cells_failed: rows.len() - cells_ok,
        cells: cells_status,
        theorem_checks: theorem_checks(&rows),
    };
    Ok(SweepOutcome { rows, summary })
}

/// Loads a sweep spec, runs it and writes `report.csv` and `summary.json`
/// (plus `traces/` when asked). Fails only if no cell succeeded.
pub fn sweep_to_dir(spec_path: &Path, out: &Path, traces: bool, jobs: Option<usize>) -> Result<SweepOutcome, CliError> {
    let text = crate::config::read_file(spec_path)?;
    let mut spec = SweepSpec::parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", spec_path.display())),
        other => other,
    })?;
    if let Some(seed) = seed_override()? {
        spec.seed = seed;
    }
    if jobs == Some(0) {
        return Err(CliError::config("--jobs must be >= 1"));
    }
    let io = |e: std::io::Error| CliError::runtime(format!("{}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    let trace_dir = out.join("traces");
    if traces {
        fs::create_dir_all(&trace_dir).map_err(io)?;
    }
    let outcome = run_sweep(&spec, jobs, traces.then_some(trace_dir.as_path()))?;
    let file = fs::File::create(out.join("report.csv")).map_err(io)?;
    write_report(std::io::BufWriter::new(file), &outcome.rows).map_err(CliError::runtime)?;
    let json = serde_json::to_string_pretty(&outcome.summary).map_err(CliError::runtime)?;
    fs::write(out.join("summary.json"), json + "\n").map_err(io)?;
    if outcome.summary.cells_ok == 0 {
        return Err(CliError::runtime("every cell failed; see summary.json"));
    }
    Ok(outcome)
}
