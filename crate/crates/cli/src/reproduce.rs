//! The `reproduce` command.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use pxlap::reproduce::{example_construction, pimpliesq_demo, remark_sequence, ExampleReport};

use crate::{CliError, VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Example {
    #[serde(rename = "remark")]
    Remark,
    #[serde(rename = "v0-example")]
    V0Example,
    #[serde(rename = "pimpliesq")]
    Pimpliesq,
}

impl FromStr for Example {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "remark" => Ok(Example::Remark),
            "v0-example" => Ok(Example::V0Example),
            "pimpliesq" => Ok(Example::Pimpliesq),
            _ => Err(format!("unknown example `{s}`; expected remark, v0-example or pimpliesq")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReproduceOptions {
    pub k: u64,
    pub s_max: u64,
    pub j_max: u64,
    pub resolution: Option<usize>,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self { k: 3, s_max: 12, j_max: 200, resolution: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub version: String,
    pub example: Example,
    pub reports: Vec<ExampleReport>,
    pub pass: bool,
}

pub fn cmd_reproduce(example: Example, opts: &ReproduceOptions) -> Result<ReproduceReport, CliError> {
    let reports = match example {
        Example::Remark => {
            let res = opts.resolution.unwrap_or(129);
            if opts.j_max < 2 {
                return Err(CliError::config(anyhow::anyhow!("--jmax must be at least 2")));
            }
            (2..=opts.j_max)
                .map(|j| remark_sequence(j, res))
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::from_core)?
        }
        Example::V0Example => {
            vec![example_construction(opts.k, opts.s_max, opts.resolution.unwrap_or(33)).map_err(CliError::from_core)?]
        }
        Example::Pimpliesq => {
            vec![pimpliesq_demo(opts.j_max, opts.resolution.unwrap_or(65)).map_err(CliError::from_core)?]
        }
    };
    let pass = reports.iter().all(|r| r.pass);
    Ok(ReproduceReport {
        version: VERSION.into(),
        example,
        reports,
        pass,
    })
}
