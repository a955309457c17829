//! JSON run configurations and their translation into problem data.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pxlap::energy::{EnergyKind, ProblemData};
use pxlap::exponent::ExponentField;
use pxlap::expr::{parse, Expr};
use pxlap::grid::{build_grid, Domain, Grid, GridFunction};
use pxlap::modular::ModularKind;
use pxlap::solver::{Init, Method, SolverConfig};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per axis, x first.
    pub nodes: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `1/x`
    InverseX,
    /// `2 + 1/(1 - 0.99 x)`
    BlowupAtOne,
}

impl Preset {
    fn source(self) -> &'static str {
        match self {
            Preset::InverseX => "1/x",
            Preset::BlowupAtOne => "2 + 1/(1 - 0.99*x)",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentSpec {
    Expr(String),
    Preset(Preset),
}

impl ExponentSpec {
    fn source(&self) -> &str {
        match self {
            ExponentSpec::Expr(s) => s,
            ExponentSpec::Preset(p) => p.source(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprSpec {
    pub expr: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    Zeros,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Lbfgs,
    SteepestDescent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub init: InitSpec,
    pub seed: u64,
    pub method: MethodSpec,
    pub lbfgs_memory: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            grad_tol: d.grad_tol,
            max_iters: d.max_iters,
            init: InitSpec::Zeros,
            seed: 0,
            method: MethodSpec::Lbfgs,
            lbfgs_memory: 10,
            armijo_c: d.armijo_c,
            backtrack_factor: d.backtrack_factor,
        }
    }
}

impl SolverSpec {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            armijo_c: self.armijo_c,
            backtrack_factor: self.backtrack_factor,
            init: match self.init {
                InitSpec::Zeros => Init::Zeros,
                InitSpec::Random => Init::Random { seed: self.seed },
            },
            method: match self.method {
                MethodSpec::Lbfgs => Method::Lbfgs { memory: self.lbfgs_memory },
                MethodSpec::SteepestDescent => Method::SteepestDescent,
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificateSpec {
    /// Random competitors for the variational check; 0 disables it.
    pub variational_dirs: usize,
    /// Seed of the second, randomly started solve; absent disables it.
    pub uniqueness_seed: Option<u64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub grid: GridSpec,
    pub exponent: ExponentSpec,
    pub phi: ExprSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<ExprSpec>,
    pub energy_kind: EnergyKind,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub certificates: CertificateSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    pub domain: DomainSpec,
    pub grid: GridSpec,
    pub exponent: ExponentSpec,
    pub field: ExprSpec,
    pub kind: ModularKind,
    #[serde(default = "default_norm_tol")]
    pub tol: f64,
}

fn default_norm_tol() -> f64 {
    1e-15
}

/// A configuration problem tied to a field path.
#[derive(Debug)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for FieldError {}

fn field_error(field: &str, message: impl fmt::Display) -> CliError {
    CliError::config(FieldError {
        field: field.into(),
        message: message.to_string(),
    })
}

/// Reads a JSON document, reporting the line, column and field path of the
/// first problem.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = (inner.line(), inner.column());
        let full = inner.to_string();
        let message = full
            .strip_suffix(&format!(" at line {line} column {column}"))
            .unwrap_or(&full);
        CliError::config(anyhow::anyhow!("{}:{line}:{column}: field `{field}`: {message}", path.display()))
    })
}

fn parse_field(field: &str, src: &str) -> Result<Expr, CliError> {
    parse(src).map_err(|e| field_error(field, e))
}

fn grid_from(domain: &DomainSpec, grid: &GridSpec) -> Result<Arc<Grid>, CliError> {
    if !(1..=2).contains(&domain.dim) {
        return Err(field_error("domain.dim", format!("must be 1 or 2, got {}", domain.dim)));
    }
    if domain.bounds.len() != domain.dim {
        return Err(field_error(
            "domain.bounds",
            format!("expected {} intervals, got {}", domain.dim, domain.bounds.len()),
        ));
    }
    if grid.nodes.len() != domain.dim {
        return Err(field_error(
            "grid.nodes",
            format!("expected {} node counts, got {}", domain.dim, grid.nodes.len()),
        ));
    }
    let d = Domain::new(domain.bounds.clone()).map_err(|e| field_error("domain.bounds", e))?;
    build_grid(d, &grid.nodes).map_err(|e| field_error("grid.nodes", e))
}

fn cell_samples(field: &str, e: &Expr, grid: &Grid) -> Result<Vec<f64>, CliError> {
    (0..grid.cell_count())
        .map(|c| {
            let m = grid.cell_midpoint(c);
            e.eval(m).map_err(|err| field_error(field, format!("at cell midpoint {m:?}: {err}")))
        })
        .collect()
}

fn node_samples(field: &str, e: &Expr, grid: &Grid) -> Result<Vec<f64>, CliError> {
    (0..grid.node_count())
        .map(|n| {
            let x = grid.node_coords(n);
            e.eval(x).map_err(|err| field_error(field, format!("at node {x:?}: {err}")))
        })
        .collect()
}

fn exponent_from(spec: &ExponentSpec, grid: &Arc<Grid>) -> Result<ExponentField, CliError> {
    let field = match spec {
        ExponentSpec::Expr(_) => "exponent.expr",
        ExponentSpec::Preset(_) => "exponent.preset",
    };
    let e = parse_field(field, spec.source())?;
    let values = cell_samples(field, &e, grid)?;
    ExponentField::from_cell_values(grid.clone(), values).map_err(CliError::from_core)
}

impl RunConfig {
    /// Checks everything that does not need the grid.
    pub fn validate(&self) -> Result<(), CliError> {
        parse_field("phi.expr", &self.phi.expr)?;
        if let ExponentSpec::Expr(s) = &self.exponent {
            parse_field("exponent.expr", s)?;
        }
        match &self.q {
            Some(q) => {
                parse_field("q.expr", &q.expr)?;
            }
            None if self.energy_kind == EnergyKind::JWeighted => {
                return Err(field_error("q", "energy_kind J_WEIGHTED requires a weight q"));
            }
            None => {}
        }
        self.solver
            .to_config()
            .validate()
            .map_err(|e| field_error("solver", e))?;
        if self.output.dir.is_empty() {
            return Err(field_error("output.dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<ProblemData, CliError> {
        self.validate()?;
        let grid = grid_from(&self.domain, &self.grid)?;
        let p = exponent_from(&self.exponent, &grid)?;
        let phi = node_samples("phi.expr", &parse_field("phi.expr", &self.phi.expr)?, &grid)?;
        let phi = GridFunction::new(grid.clone(), phi).map_err(|e| field_error("phi.expr", e))?;
        let q = match &self.q {
            Some(q) => Some(cell_samples("q.expr", &parse_field("q.expr", &q.expr)?, &grid)?),
            None => None,
        };
        ProblemData::new(p, phi, q).map_err(CliError::from_core)
    }
}

impl NormConfig {
    pub fn inputs(&self) -> Result<(GridFunction, ExponentField), CliError> {
        if !(self.tol > 0.0) {
            return Err(field_error("tol", format!("must be > 0, got {}", self.tol)));
        }
        let grid = grid_from(&self.domain, &self.grid)?;
        let p = exponent_from(&self.exponent, &grid)?;
        let u = node_samples("field.expr", &parse_field("field.expr", &self.field.expr)?, &grid)?;
        let u = GridFunction::new(grid, u).map_err(|e| field_error("field.expr", e))?;
        Ok((u, p))
    }
}
