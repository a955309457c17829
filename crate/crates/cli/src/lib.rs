//! Command implementations behind the `pxlap` binary.

use std::fmt;
use std::path::Path;

pub mod config;
pub mod record;
pub mod reproduce;
pub mod suites;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 1;
    /// Solver stopped before converging, or a check failed.
    pub const INCOMPLETE: u8 = 2;
    /// The data admit no finite-energy solve.
    pub const MIS_POSED: u8 = 3;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        Self { code: exit::CONFIG, error: e.into() }
    }

    pub fn mis_posed(e: impl Into<anyhow::Error>) -> Self {
        Self { code: exit::MIS_POSED, error: e.into() }
    }

    pub fn io(e: std::io::Error, path: &Path) -> Self {
        Self::config(anyhow::anyhow!("{}: {e}", path.display()))
    }

    /// Data errors that make the problem unsolvable map to exit 3, the rest to 1.
    pub fn from_core(e: pxlap::Error) -> Self {
        use pxlap::Error as E;
        match e {
            E::IllPosed(_) | E::SaturatedEnergy | E::InvalidExponent(_) | E::InvalidWeight(_) => Self::mis_posed(e),
            E::Unresolved(ref msg) => Self::config(anyhow::anyhow!(
                "{msg}; raise --resolution to at least {}",
                pxlap::reproduce::MIN_CELLS + 1
            )),
            other => Self::config(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::config)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(e, path))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(e, dir))
}

/// `v` with 12 significant digits, without exponent notation for moderate
/// magnitudes.
pub fn format_significant(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = 11 - exp;
    if (0..=20).contains(&decimals) {
        format!("{v:.*}", decimals as usize)
    } else {
        format!("{v:.11e}")
    }
}

pub fn cmd_norm(path: &Path) -> Result<String, CliError> {
    let cfg: config::NormConfig = config::load(path)?;
    let (u, p) = cfg.inputs()?;
    let n = pxlap::modular::luxemburg_norm(cfg.kind, &u, &p, cfg.tol).map_err(CliError::from_core)?;
    Ok(format_significant(n))
}
