//! Randomized verification suites behind `pxlap verify`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pxlap::energy::{gradient_check, weight_from_fn, EnergyKind, ProblemData};
use pxlap::exponent::{make_exponent, ExponentField};
use pxlap::grid::{build_grid, Domain, GridFunction};
use pxlap::inequalities::{clarkson_sweep, lemma_stupid_check, log_ratio, monotonicity_sweep, uc_star_probe};
use pxlap::modular::ModularKind;

use crate::{CliError, VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Clarkson,
    Ucstar,
    Lemmas,
    Gradientcheck,
    Monotonicity,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Clarkson,
        Suite::Ucstar,
        Suite::Lemmas,
        Suite::Gradientcheck,
        Suite::Monotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Clarkson => "clarkson",
            Suite::Ucstar => "ucstar",
            Suite::Lemmas => "lemmas",
            Suite::Gradientcheck => "gradientcheck",
            Suite::Monotonicity => "monotonicity",
        }
    }

    fn default_n(self) -> usize {
        match self {
            Suite::Clarkson => 100_000,
            Suite::Ucstar => 20_000,
            Suite::Lemmas => 10_000,
            Suite::Gradientcheck => 20,
            Suite::Monotonicity => 100_000,
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
                format!("unknown suite `{s}`; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Worst observed value of the checked quantity.
    pub extremum: f64,
    /// What the extremum is compared against.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub suite: Suite,
    pub seed: u64,
    pub n: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub struct VerifyOptions {
    pub seed: u64,
    pub n: Option<usize>,
    pub eps: Vec<f64>,
}

fn clarkson(n: usize, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for dim in 1..=4 {
        for high in [false, true] {
            let s = clarkson_sweep(dim, high, n, seed.wrapping_add(dim as u64));
            out.push(Check {
                name: s.name,
                extremum: s.extremum,
                bound: s.tolerance,
                pass: s.pass,
            });
        }
    }
    out
}

fn ucstar(n: usize, seed: u64, eps: &[f64]) -> Result<Vec<Check>, CliError> {
    let unit = |n| build_grid(Domain::interval(0.0, 1.0).unwrap(), &[n]).unwrap();
    let half = build_grid(Domain::interval(0.0, 0.5).unwrap(), &[9]).unwrap();
    let exps: Vec<(&str, ExponentField)> = vec![
        ("p=2", ExponentField::constant(unit(9), 2.0).unwrap()),
        ("p=4", ExponentField::constant(unit(9), 4.0).unwrap()),
        ("p=2+x", make_exponent(unit(9), |[x, _]| 2.0 + x).unwrap()),
        ("p=1/x", make_exponent(half, |[x, _]| 1.0 / x).unwrap()),
    ];
    let mut out = Vec::new();
    for (label, p) in &exps {
        for kind in [ModularKind::RhoP, ModularKind::RhoGrad, ModularKind::Rho1P] {
            for &e in eps {
                let est = uc_star_probe(kind, p, e, n, seed).map_err(CliError::from_core)?;
                out.push(Check {
                    name: format!("{kind} {label} eps={e} ({} admissible)", est.n_admissible),
                    extremum: est.delta_empirical,
                    bound: est.delta_formula,
                    pass: est.holds(),
                });
            }
        }
    }
    Ok(out)
}

fn lemmas(n: usize, seed: u64) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // log-uniform on (1, 1e6), sorted and deduplicated
    let mut t: Vec<f64> = (0..n.max(2)).map(|_| 1.0 + 10f64.powf(rng.gen_range(-8.0..6.0))).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    let c = lemma_stupid_check(&t).map_err(CliError::from_core)?;
    let max_f = t.iter().map(|&x| log_ratio(x)).fold(f64::NEG_INFINITY, f64::max);
    let max_pow = t
        .iter()
        .map(|&x| x.powf(1.0 / (x - 1.0)))
        .fold(f64::NEG_INFINITY, f64::max);
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    Ok(vec![
        Check {
            name: "ln t/(t-1) strictly decreasing".into(),
            extremum: flag(c.strictly_decreasing),
            bound: 1.0,
            pass: c.strictly_decreasing,
        },
        Check {
            name: "ln t/(t-1) < 1".into(),
            extremum: max_f,
            bound: 1.0,
            pass: c.below_one,
        },
        Check {
            name: "t^(1/(t-1)) < e".into(),
            extremum: max_pow,
            bound: std::f64::consts::E,
            pass: c.power_below_e,
        },
        Check {
            name: "ln t/(t-1) -> 1 as t -> 1+".into(),
            extremum: log_ratio(1.0 + 1e-8),
            bound: 1.0 - 1e-6,
            pass: c.limit_at_one,
        },
    ])
}

fn gradientcheck(n: usize, seed: u64) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grids = [
        build_grid(Domain::interval(0.0, 1.0).unwrap(), &[17]).unwrap(),
        build_grid(Domain::rectangle([0.0, 1.0], [0.0, 1.0]).unwrap(), &[7, 7]).unwrap(),
    ];
    let mut out = Vec::new();
    for kind in EnergyKind::ALL {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let g = &grids[i % 2];
            let data = ProblemData::new(
                make_exponent(g.clone(), |[x, y]| 1.6 + 2.0 * x + y).map_err(CliError::from_core)?,
                GridFunction::from_fn(g.clone(), |[x, y]| x * x - 0.5 * y + 0.2).map_err(CliError::from_core)?,
                Some(weight_from_fn(g, |[x, y]| 1.0 + x * y)),
            )
            .map_err(CliError::from_core)?;
            let w: Vec<f64> = (0..g.node_count())
                .map(|k| if g.is_boundary(k) { 0.0 } else { rng.gen_range(-0.2..0.2) })
                .collect();
            let w = GridFunction::new(g.clone(), w).map_err(CliError::from_core)?;
            worst = worst.max(gradient_check(kind, &data, &w, 1e-6).map_err(CliError::from_core)?);
        }
        out.push(Check {
            name: format!("{kind} relative gradient error"),
            extremum: worst,
            bound: 1e-6,
            pass: worst < 1e-6,
        });
    }
    Ok(out)
}

fn monotonicity(n: usize, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for p in [2.0, 3.0, 4.0, 8.0] {
        for dim in 1..=3 {
            let s = monotonicity_sweep(dim, p, n, seed);
            out.push(Check {
                name: s.name,
                extremum: s.extremum,
                bound: -s.tolerance,
                pass: s.pass,
            });
        }
    }
    out
}

pub fn cmd_verify(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport, CliError> {
    let n = opts.n.unwrap_or(suite.default_n());
    if n == 0 {
        return Err(CliError::config(anyhow::anyhow!("--n must be positive")));
    }
    if let Some(e) = opts.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(CliError::config(anyhow::anyhow!("--eps values must lie in (0, 1), got {e}")));
    }
    let checks = match suite {
        Suite::Clarkson => clarkson(n, opts.seed),
        Suite::Ucstar => ucstar(n, opts.seed, &opts.eps)?,
        Suite::Lemmas => lemmas(n, opts.seed)?,
        Suite::Gradientcheck => gradientcheck(n, opts.seed)?,
        Suite::Monotonicity => monotonicity(n, opts.seed),
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        version: VERSION.into(),
        suite,
        seed: opts.seed,
        n,
        checks,
        pass,
    })
}
