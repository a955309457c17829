//! Numerical certificates for the vector Clarkson inequalities, the `(UC*)`
//! behaviour of the modulars, the `ln t / (t - 1)` lemma, and the monotonicity
//! inequality behind uniqueness for `p ≥ 2`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::GridFunction;
use crate::modular::{modular_eval, ExtendedReal, ModularKind};

/// Both sides of an inequality `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sides {
    /// `(lhs - rhs) / rhs`, or `lhs - rhs` when `rhs` is zero.
    pub fn relative_excess(&self) -> f64 {
        if self.rhs > 0.0 {
            (self.lhs - self.rhs) / self.rhs
        } else {
            self.lhs - self.rhs
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "vectors must have the same positive length, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(())
}

/// Clarkson-type inequality for `1 ≤ p ≤ 2`:
///
/// `‖(u+v)/2‖^p + p(p-1)/2^{p+1} · ‖u-v‖² / (‖u‖+‖v‖)^{2-p} ≤ (‖u‖^p + ‖v‖^p)/2`
pub fn clarkson_low(u: &[f64], v: &[f64], p: f64) -> Result<Sides> {
    check_dims(u, v)?;
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("need 1 ≤ p ≤ 2, got {p}")));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu + nv == 0.0 {
        return Err(Error::InvalidArgument("‖u‖ + ‖v‖ must be non-zero".into()));
    }
    let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
    let diff2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    let lhs = norm(&sum).powf(p)
        + p * (p - 1.0) / 2f64.powf(p + 1.0) * diff2 / (nu + nv).powf(2.0 - p);
    let rhs = 0.5 * (nu.powf(p) + nv.powf(p));
    Ok(Sides { lhs, rhs })
}

/// Clarkson inequality for `p ≥ 2`:
/// `‖(u+v)/2‖^p + ‖(u-v)/2‖^p ≤ (‖u‖^p + ‖v‖^p)/2`.
pub fn clarkson_high(u: &[f64], v: &[f64], p: f64) -> Result<Sides> {
    check_dims(u, v)?;
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!("need p ≥ 2, got {p}")));
    }
    let half_sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
    let half_diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a - b)).collect();
    let lhs = norm(&half_sum).powf(p) + norm(&half_diff).powf(p);
    let rhs = 0.5 * (norm(u).powf(p) + norm(v).powf(p));
    Ok(Sides { lhs, rhs })
}

/// `f(t) = ln t / (t - 1)`, accurate near `t = 1`.
pub fn log_ratio(t: f64) -> f64 {
    let h = t - 1.0;
    h.ln_1p() / h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRatioCheck {
    pub strictly_decreasing: bool,
    pub below_one: bool,
    pub power_below_e: bool,
    /// `f(1 + 1e-8) ∈ (1 - 1e-6, 1)`
    pub limit_at_one: bool,
    pub pass: bool,
}

/// Checks along increasing samples `t > 1` that `f(t) = ln t/(t-1)` is
/// strictly decreasing, `f(t) < 1`, `t^{1/(t-1)} < e`, and that `f → 1` as
/// `t → 1+`.
pub fn lemma_stupid_check(samples: &[f64]) -> Result<LogRatioCheck> {
    if samples.iter().any(|&t| !(t > 1.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite and > 1".into()));
    }
    let f: Vec<f64> = samples.iter().map(|&t| log_ratio(t)).collect();
    let strictly_decreasing = samples
        .windows(2)
        .zip(f.windows(2))
        .all(|(t, f)| t[1] > t[0] && f[1] < f[0]);
    let below_one = f.iter().all(|&v| v < 1.0);
    let power_below_e = samples
        .iter()
        .zip(&f)
        .all(|(&t, &ft)| ft.exp() < std::f64::consts::E && t.powf(1.0 / (t - 1.0)) < std::f64::consts::E);
    let near = log_ratio(1.0 + 1e-8);
    let limit_at_one = near > 1.0 - 1e-6 && near < 1.0;
    Ok(LogRatioCheck {
        strictly_decreasing,
        below_one,
        power_below_e,
        limit_at_one,
        pass: strictly_decreasing && below_one && power_below_e && limit_at_one,
    })
}

/// Empirical `(UC*)` gap of a modular at a given `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcStarEstimate {
    pub epsilon: f64,
    /// `min{ε/2, (p_- - 1) ε² / 32}`
    pub delta_formula: f64,
    /// `1 - max ρ((u+v)/2) / ((ρ(u)+ρ(v))/2)` over admissible pairs
    pub delta_empirical: f64,
    pub n_samples: usize,
    pub n_admissible: usize,
}

impl UcStarEstimate {
    pub fn holds(&self) -> bool {
        self.delta_empirical >= self.delta_formula - 1e-9
    }
}

/// The convexity gap guaranteed for far-apart pairs: `min{ε/2, (p_- - 1)ε²/32}`.
pub fn uc_delta(p_minus: f64, epsilon: f64) -> f64 {
    (epsilon / 2.0).min((p_minus - 1.0) * epsilon * epsilon / 32.0)
}

/// Draws a random pair of node functions. Three regimes: independent
/// uniform values in `[-2, 2]`, nearly opposed pairs `v ≈ -αu`, and small
/// backgrounds with sparse spikes. The mix covers both `|g| < 1` and
/// `|g| > 1`, which scale differently under a variable exponent.
pub fn sample_pair(values: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    match rng.gen_range(0..3) {
        0 => (
            (0..values).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            (0..values).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        ),
        1 => {
            let u: Vec<f64> = (0..values).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let alpha = rng.gen_range(0.3..1.5);
            let v = u.iter().map(|x| -alpha * x + rng.gen_range(-0.3..0.3)).collect();
            (u, v)
        }
        _ => {
            let mut spiky = || {
                let mut w: Vec<f64> = (0..values).map(|_| rng.gen_range(-0.5..0.5)).collect();
                for _ in 0..rng.gen_range(1..=3) {
                    let i = rng.gen_range(0..values);
                    let s: f64 = rng.gen_range(1.0..4.0);
                    w[i] = if rng.gen_bool(0.5) { s } else { -s };
                }
                w
            };
            (spiky(), spiky())
        }
    }
}

/// Samples `n_samples` random pairs on the exponent's grid and measures the
/// midpoint convexity gap over the pairs with
/// `ρ((u-v)/2) ≥ ε (ρ(u)+ρ(v))/2`. Pairs with an infinite modular, or with
/// `ρ(u) + ρ(v) = 0`, are skipped.
pub fn uc_star_probe(
    kind: ModularKind,
    p: &ExponentField,
    epsilon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<UcStarEstimate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let grid = p.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut n_admissible = 0;
    for _ in 0..n_samples {
        let (u, v) = sample_pair(grid.node_count(), &mut rng);
        let u = GridFunction::new(grid.clone(), u)?;
        let v = GridFunction::new(grid.clone(), v)?;
        let eval = |w: &GridFunction| modular_eval(kind, w, p).map(ExtendedReal::finite);
        let (Some(ru), Some(rv)) = (eval(&u)?, eval(&v)?) else {
            continue;
        };
        let avg = 0.5 * (ru + rv);
        if avg == 0.0 {
            continue;
        }
        let (Some(rd), Some(rm)) = (
            eval(&u.lin_comb(0.5, &v, -0.5)?)?,
            eval(&u.lin_comb(0.5, &v, 0.5)?)?,
        ) else {
            continue;
        };
        if rd >= epsilon * avg {
            n_admissible += 1;
            max_ratio = max_ratio.max(rm / avg);
        }
    }
    if n_admissible == 0 {
        return Err(Error::NoAdmissiblePairs(n_samples));
    }
    Ok(UcStarEstimate {
        epsilon,
        delta_formula: uc_delta(p.p_minus(), epsilon),
        delta_empirical: (1.0 - max_ratio).clamp(0.0, 1.0),
        n_samples,
        n_admissible,
    })
}

/// Quotient `⟨|A|^{p-2}A - |B|^{p-2}B, A-B⟩ / |A-B|^p` and the lower bound
/// `2^{2-p}` it must respect for `p ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityGap {
    pub lhs: f64,
    pub gamma_bound: f64,
}

pub fn monotonicity_gap(a: &[f64], b: &[f64], p: f64) -> Result<MonotonicityGap> {
    check_dims(a, b)?;
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!("need p ≥ 2, got {p}")));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nd = norm(&diff);
    if nd == 0.0 {
        return Err(Error::InvalidArgument("A and B must differ".into()));
    }
    let (sa, sb) = (norm(a).powf(p - 2.0), norm(b).powf(p - 2.0));
    let pairing: f64 = a
        .iter()
        .zip(b)
        .zip(&diff)
        .map(|((x, y), d)| (sa * x - sb * y) * d)
        .sum();
    Ok(MonotonicityGap {
        lhs: pairing / nd.powf(p),
        gamma_bound: 2f64.powf(2.0 - p),
    })
}

/// Extremum of a randomized sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub name: String,
    pub n: usize,
    /// Largest relative excess `(lhs - rhs)/rhs` (Clarkson) or smallest
    /// `lhs - bound` (monotonicity).
    pub extremum: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn random_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    (0..dim).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

fn unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Randomized check of [`clarkson_low`] (`high = false`, `p ∈ [1, 2]`) or
/// [`clarkson_high`] (`p ∈ [2, 50]`) in dimension `dim`.
pub fn clarkson_sweep(dim: usize, high: bool, n: usize, seed: u64) -> SweepSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n {
        let u = random_vector(dim, &mut rng);
        // occasionally a nearby or identical partner, where the inequality is tight
        let v = match rng.gen_range(0..4) {
            0 => u.iter().map(|x| x * (1.0 + 1e-3 * rng.gen_range(-1.0..1.0))).collect(),
            1 => u.clone(),
            _ => random_vector(dim, &mut rng),
        };
        let sides = if high {
            clarkson_high(&u, &v, rng.gen_range(2.0..=50.0))
        } else {
            clarkson_low(&u, &v, rng.gen_range(1.0..=2.0))
        }
        .expect("sampled vectors are non-zero");
        worst = worst.max(sides.relative_excess());
    }
    let tolerance = 1e-12;
    SweepSummary {
        name: format!("clarkson_{}_dim{dim}", if high { "high" } else { "low" }),
        n,
        extremum: worst,
        tolerance,
        pass: worst <= tolerance,
    }
}

/// Brute-force infimum of the monotonicity quotient over `n` pairs with `A`
/// on the unit sphere and `B` either on the sphere or at a random radius.
/// The quotient is homogeneous of degree zero, so this covers all pairs.
pub fn monotonicity_sweep(dim: usize, p: f64, n: usize, seed: u64) -> SweepSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_gap = f64::INFINITY;
    let bound = 2f64.powf(2.0 - p);
    for i in 0..n {
        let a = unit_vector(dim, &mut rng);
        let r = if i % 2 == 0 { 1.0 } else { rng.gen_range(0.0..2.0) };
        let b: Vec<f64> = unit_vector(dim, &mut rng).into_iter().map(|x| r * x).collect();
        if let Ok(g) = monotonicity_gap(&a, &b, p) {
            min_gap = min_gap.min(g.lhs - bound);
        }
    }
    let tolerance = 1e-12;
    SweepSummary {
        name: format!("monotonicity_p{p}_dim{dim}"),
        n,
        extremum: min_gap,
        tolerance,
        pass: min_gap >= -tolerance,
    }
}
