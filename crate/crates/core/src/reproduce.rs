//! Explicit one-dimensional constructions with `p(x) = 1/x`, evaluated by
//! midpoint quadrature on grids fitted to the pieces of each function.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::make_exponent;
use crate::grid::{build_grid, Domain};
use crate::modular::{cell_modular, ExtendedReal};

/// Fewest cells allowed on any piece of a construction.
pub const MIN_CELLS: usize = 8;

/// Upper bound of `j^{2/j}` over `j ≥ 1`, attained near `j = e`.
pub fn remark_constant() -> f64 {
    (2.0 / std::f64::consts::E).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub relation: Relation,
    pub value: f64,
}

impl Bound {
    pub fn at_most(value: f64) -> Self {
        Self { relation: Relation::AtMost, value }
    }

    pub fn at_least(value: f64) -> Self {
        Self { relation: Relation::AtLeast, value }
    }

    pub fn holds(&self, x: ExtendedReal) -> bool {
        match (self.relation, x) {
            (Relation::AtMost, ExtendedReal::Finite(v)) => v <= self.value,
            (Relation::AtMost, ExtendedReal::Infinite) => false,
            (Relation::AtLeast, ExtendedReal::Finite(v)) => v >= self.value,
            (Relation::AtLeast, ExtendedReal::Infinite) => true,
        }
    }
}

/// Computed quantities of one construction and the bounds some of them must
/// satisfy. `pass` is true iff every bounded quantity meets its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub example: String,
    pub index: u64,
    pub computed: BTreeMap<String, ExtendedReal>,
    pub bounds: BTreeMap<String, Bound>,
    pub pass: bool,
}

impl ExampleReport {
    fn new(example: &str, index: u64) -> Self {
        Self {
            example: example.into(),
            index,
            computed: BTreeMap::new(),
            bounds: BTreeMap::new(),
            pass: true,
        }
    }

    fn record(&mut self, name: &str, value: impl Into<ExtendedReal>) {
        self.computed.insert(name.into(), value.into());
    }

    fn require(&mut self, name: &str, value: impl Into<ExtendedReal>, bound: Bound) {
        let value = value.into();
        self.pass &= bound.holds(value);
        self.computed.insert(name.into(), value);
        self.bounds.insert(name.into(), bound);
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.computed.get(name).map(|v| v.to_f64())
    }

    /// Names of bounded quantities that miss their bound.
    pub fn failures(&self) -> Vec<&str> {
        self.bounds
            .iter()
            .filter(|(k, b)| !b.holds(self.computed[*k]))
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// `ρ_p`, `η_p` and `ρ_q` of a function that equals `f` on `(a, b)` and
/// vanishes elsewhere, with `p = 1/x` and a constant `q`. `f` is sampled at
/// cell midpoints, where the exponent is sampled too.
struct Piece {
    rho_p: ExtendedReal,
    eta_p: ExtendedReal,
    rho_q: ExtendedReal,
    integral: f64,
}

fn piece(a: f64, b: f64, resolution: usize, q: f64, f: impl Fn(f64) -> f64) -> Result<Piece> {
    if resolution < MIN_CELLS + 1 {
        return Err(Error::Unresolved(format!(
            "({a}, {b}) needs at least {} nodes, got {resolution}",
            MIN_CELLS + 1
        )));
    }
    let grid = build_grid(Domain::interval(a, b)?, &[resolution])?;
    let p = make_exponent(grid.clone(), |[x, _]| 1.0 / x)?;
    let vals: Vec<f64> = (0..grid.cell_count()).map(|c| f(grid.cell_midpoint(c)[0])).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("integrand on ({a}, {b})")));
    }
    let mags: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    let qs = vec![q; grid.cell_count()];
    Ok(Piece {
        rho_p: cell_modular(&grid, &mags, p.values(), true),
        eta_p: cell_modular(&grid, &mags, p.values(), false),
        rho_q: cell_modular(&grid, &mags, &qs, true),
        integral: grid.integrate(&vals),
    })
}

/// `u_j = j^{2/j}` on `(1/(j+1), 1/j)`, zero elsewhere in `(0, 1/2)`.
pub fn remark_sequence(j: u64, resolution: usize) -> Result<ExampleReport> {
    if j < 2 {
        return Err(Error::InvalidArgument(format!("j must be at least 2, got {j}")));
    }
    let jf = j as f64;
    let height = jf.powf(2.0 / jf);
    let pc = piece(1.0 / (jf + 1.0), 1.0 / jf, resolution, 2.0, |_| height)?;
    let (rho, eta) = (pc.rho_p.to_f64(), pc.eta_p.to_f64());
    let mut r = ExampleReport::new("remark", j);
    r.record("height", height);
    r.record("rho_p", pc.rho_p);
    r.record("constant_c", remark_constant());
    r.require("rho_p_times_j", rho * jf, Bound::at_most(remark_constant()));
    r.require("rho_p_over_eta_p", rho / eta, Bound::at_most(1.0 / jf));
    r.require("eta_p", pc.eta_p, Bound::at_least(2.0 / 3.0));
    Ok(r)
}

/// `|I_s|^{-1} 2^{-s}`: the value of `|w_s|^{p}` on `I_s`.
fn piece_level(s: u64) -> f64 {
    (s as f64 * (s as f64 + 1.0)) * 0.5f64.powi(s as i32)
}

/// `scale · w_s` on `I_s`, with `w_s = (|I_s|^{-1} 2^{-s})^{x}`.
fn w_piece(s: u64, resolution: usize, scale: f64) -> Result<Piece> {
    let sf = s as f64;
    let level = piece_level(s);
    piece(1.0 / (sf + 1.0), 1.0 / sf, resolution, 2.0, |x| scale * level.powf(x))
}

/// `∫ 2^{p} |u_K|^{p} / p` over `(1/(K+1), 1/(k+1))`: the modular of `2 v_K'`
/// on the pieces `k < s ≤ K`.
pub fn divergence_witness(k: u64, big_k: u64, resolution: usize) -> Result<ExtendedReal> {
    let mut total = ExtendedReal::ZERO;
    for s in k + 1..=big_k {
        let pc = w_piece(s, resolution, 2.0)?;
        total = total + pc.rho_p;
    }
    Ok(total)
}

/// `Σ_{s=k+1}^{K} 1/(s+1)`.
pub fn harmonic_partial_sum(k: u64, big_k: u64) -> f64 {
    (k + 1..=big_k).map(|s| 1.0 / (s as f64 + 1.0)).sum()
}

/// `Σ_{s=1}^{K} (1/s²)^{1-1/s}`.
pub fn integrability_head(big_k: u64) -> f64 {
    (1..=big_k)
        .map(|s| {
            let s = s as f64;
            (1.0 / (s * s)).powf(1.0 - 1.0 / s)
        })
        .sum()
}

/// `Σ_{s>K} s^{-3/2} ≤ ∫_K^∞ t^{-3/2} dt = 2/√K`.
pub fn p_series_tail(big_k: u64) -> f64 {
    2.0 / (big_k as f64).sqrt()
}

/// Truncations of `u = Σ w_s` on `(0, 1)` with `p = 1/x`, compared at levels
/// `k` and `s_max`. Each `I_s` gets its own grid so the pieces are resolved
/// exactly.
pub fn example_construction(k: u64, s_max: u64, resolution: usize) -> Result<ExampleReport> {
    if k == 0 || k >= s_max {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k < s_max, got k = {k}, s_max = {s_max}")));
    }
    if s_max > 1000 {
        return Err(Error::InvalidArgument(format!("s_max = {s_max} is too large to resolve")));
    }
    let mut r = ExampleReport::new("v0-example", k);
    r.record("s_max", s_max as f64);

    // v_k' - v_{s_max}' = -Σ_{k<s≤s_max} w_s
    let mut eta_tail = ExtendedReal::ZERO;
    let mut rho_tail = ExtendedReal::ZERO;
    for s in k + 1..=s_max {
        let pc = w_piece(s, resolution, -1.0)?;
        eta_tail = eta_tail + pc.eta_p;
        rho_tail = rho_tail + pc.rho_p;
    }
    let geometric: f64 = (k + 1..=s_max).map(|s| 0.5f64.powi(s as i32)).sum();
    r.record("geometric_tail_sum", geometric);
    r.record("eta_p_tail", eta_tail);
    r.require(
        "eta_p_tail_relative_error",
        (eta_tail.to_f64() - geometric).abs() / geometric,
        Bound::at_most(1e-10),
    );
    r.require("rho_p_tail", rho_tail, Bound::at_most(geometric));
    r.require("rho_p_tail_vs_two_pow_minus_k", rho_tail, Bound::at_most(0.5f64.powi(k as i32)));

    // ∫ u_{s_max} = sup v_{s_max}
    let mut integral = 0.0;
    for s in 1..=s_max {
        integral += w_piece(s, resolution, 1.0)?.integral;
    }
    let head = integrability_head(s_max);
    r.record("integrability_head", head);
    r.record("p_series_tail", p_series_tail(s_max));
    r.require("integral_u", integral, Bound::at_most(head));
    r.require("sup_v", integral, Bound::at_most(head + p_series_tail(s_max)));

    let harmonic = harmonic_partial_sum(k, s_max);
    r.record("harmonic_partial_sum", harmonic);
    r.require("divergence_witness", divergence_witness(k, s_max, resolution)?, Bound::at_least(harmonic));
    Ok(r)
}

/// Remark sequence with `q ≡ 2`: wherever `ρ_p(u_j) < 1e-3` on `2 ≤ j ≤ j_max`,
/// `ρ_q(u_j) < 1e-2` must follow.
pub fn pimpliesq_demo(j_max: u64, resolution: usize) -> Result<ExampleReport> {
    if j_max < 2 {
        return Err(Error::InvalidArgument(format!("j_max must be at least 2, got {j_max}")));
    }
    let mut r = ExampleReport::new("pimpliesq", j_max);
    let mut rho_q = Vec::with_capacity(j_max as usize + 1);
    rho_q.extend([f64::NAN, f64::NAN]);
    let (mut premise, mut violations) = (0u64, 0u64);
    let mut first_premise = None;
    for j in 2..=j_max {
        let jf = j as f64;
        let height = jf.powf(2.0 / jf);
        let pc = piece(1.0 / (jf + 1.0), 1.0 / jf, resolution, 2.0, |_| height)?;
        let (rp, rq) = (pc.rho_p.to_f64(), pc.rho_q.to_f64());
        rho_q.push(rq);
        if rp < 1e-3 {
            premise += 1;
            first_premise.get_or_insert(j);
            if rq >= 1e-2 {
                violations += 1;
            }
        }
        if j == 50 {
            r.record("rho_p_j50", rp);
            r.record("rho_q_j50", rq);
        }
    }
    // ∫_{(0,1/2)} e^q / q with q ≡ 2
    r.record("q_integrability", 2f64.exp() / 4.0);
    r.record("premise_count", premise as f64);
    if let Some(j) = first_premise {
        r.record("first_j_rho_p_below_1e-3", j as f64);
    }
    r.require("implication_violations", violations as f64, Bound::at_most(0.0));
    if j_max >= 200 {
        let max_over = |lo: usize, hi: usize| rho_q[lo..=hi].iter().copied().fold(0.0, f64::max);
        let early = max_over(50, 100);
        r.record("max_rho_q_50_100", early);
        r.require("max_rho_q_100_200", max_over(100, 200), Bound::at_most(early * (1.0 - f64::EPSILON)));
    }
    Ok(r)
}
