//! The `solve` command and the artifacts it writes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use pxlap::grid::Grid;
use pxlap::solver::{
    solve_dirichlet, uniqueness_probe, variational_certificate, Init, SolverReport, Termination,
    VariationalCertificate,
};

use crate::config::{load, RunConfig};
use crate::{ensure_dir, exit, write_json, CliError, VERSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub termination: Termination,
    pub iterations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_grad_norm: f64,
    pub node_count: usize,
    pub p_minus: f64,
    pub p_max_sampled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessSummary {
    pub seed: u64,
    pub sup_diff: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variational: Option<VariationalCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessSummary>,
}

/// Everything that depends only on the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub config: RunConfig,
    pub report: ReportSummary,
    pub certificates: Certificates,
}

/// Wall-clock data, kept apart so payloads can be compared byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub payload: Payload,
    pub envelope: Envelope,
}

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// `x[,y],value` per node, x fastest.
pub fn solution_csv(grid: &Grid, values: &[f64]) -> String {
    let mut out = String::from(if grid.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
    for (n, v) in values.iter().enumerate() {
        let [x, y] = grid.node_coords(n);
        if grid.dim() == 1 {
            let _ = writeln!(out, "{x},{v}");
        } else {
            let _ = writeln!(out, "{x},{y},{v}");
        }
    }
    out
}

pub fn trace_csv(r: &SolverReport) -> String {
    let mut out = String::from("iteration,energy,grad_norm\n");
    for (i, (e, g)) in r.energy_trace.iter().zip(&r.grad_norm_trace).enumerate() {
        let _ = writeln!(out, "{i},{e},{g}");
    }
    out
}

pub struct SolveOutcome {
    pub record: RunRecord,
    pub dir: PathBuf,
    pub code: u8,
}

pub fn cmd_solve(path: &Path, out_override: Option<&Path>) -> Result<SolveOutcome, CliError> {
    let started = unix_ms();
    let clock = Instant::now();
    let cfg: RunConfig = load(path)?;
    let data = cfg.problem()?;
    let kind = cfg.energy_kind;
    let solver_cfg = cfg.solver.to_config();
    let report = solve_dirichlet(kind, &data, &solver_cfg).map_err(CliError::from_core)?;
    let converged = report.termination == Termination::Converged;

    let mut certificates = Certificates::default();
    if converged && cfg.certificates.variational_dirs > 0 {
        let c = variational_certificate(
            kind,
            &data,
            &report.solution,
            cfg.certificates.variational_dirs,
            cfg.certificates.seed,
        )
        .map_err(CliError::from_core)?;
        certificates.variational = Some(c);
    }
    if let (true, Some(seed)) = (converged, cfg.certificates.uniqueness_seed) {
        let other = pxlap::solver::SolverConfig {
            init: Init::Random { seed },
            ..solver_cfg.clone()
        };
        let zeros = pxlap::solver::SolverConfig { init: Init::Zeros, ..solver_cfg.clone() };
        let probe = uniqueness_probe(kind, &data, &zeros, &other).map_err(CliError::from_core)?;
        certificates.uniqueness = Some(UniquenessSummary { seed, sup_diff: probe.sup_diff });
    }

    let grid = data.grid();
    let summary = ReportSummary {
        termination: report.termination,
        iterations: report.iterations,
        initial_energy: report.energy_trace[0],
        final_energy: report.final_energy,
        final_grad_norm: report.final_grad_norm(),
        node_count: grid.node_count(),
        p_minus: data.exponent().p_minus(),
        p_max_sampled: data.exponent().p_max_sampled(),
    };
    let dir = out_override.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    ensure_dir(&dir)?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(e, &p))
    };
    write("solution.csv", solution_csv(grid, report.solution.values()))?;
    write("trace.csv", trace_csv(&report))?;
    let record = RunRecord {
        version: VERSION.into(),
        payload: Payload {
            config: cfg,
            report: summary,
            certificates,
        },
        envelope: Envelope {
            started_unix_ms: started,
            finished_unix_ms: unix_ms(),
            elapsed_ms: clock.elapsed().as_millis() as u64,
        },
    };
    write_json(&dir.join("run.json"), &record)?;
    Ok(SolveOutcome {
        record,
        dir,
        code: if converged { exit::OK } else { exit::INCOMPLETE },
    })
}
