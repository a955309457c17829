//! Modulars `ρ_p`, `η_p`, `ρ_{1,p}`, their Luxemburg norms, and the `Δ₂` and
//! modular-convergence diagnostics.
//!
//! Cell terms `|g|^p` are computed with `powf`; a term that overflows the
//! finite `f64` range makes the whole modular `+INF`. Variable exponents make
//! this a genuine value of the modular rather than a numerical accident.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{gradient, Grid, GridFunction};

/// A value in `[0, +INF]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    /// Maps `+inf` (and overflowed sums) to `Infinite`. Panics on NaN or
    /// negative input, which no modular can produce.
    pub fn from_f64(v: f64) -> Self {
        assert!(!v.is_nan() && v >= 0.0, "extended real out of range: {v}");
        if v.is_finite() {
            ExtendedReal::Finite(v)
        } else {
            ExtendedReal::Infinite
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Multiplication by a finite non-negative scalar; `0 · INF = 0`.
    pub fn scale(self, a: f64) -> Self {
        debug_assert!(a >= 0.0 && a.is_finite());
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::from_f64(a * v),
            ExtendedReal::Infinite if a == 0.0 => ExtendedReal::ZERO,
            ExtendedReal::Infinite => ExtendedReal::Infinite,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        ExtendedReal::from_f64(v)
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: ExtendedReal) -> ExtendedReal {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::from_f64(a + b),
            _ => ExtendedReal::Infinite,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => f.write_str("+INF"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinite => s.serialize_str("+INF"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if v >= 0.0 && v.is_finite() => Ok(ExtendedReal::Finite(v)),
            Repr::Text(s) if s == "+INF" => Ok(ExtendedReal::Infinite),
            _ => Err(serde::de::Error::custom("expected a non-negative number or \"+INF\"")),
        }
    }
}

/// Which modular to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModularKind {
    /// `∫ |u|^p / p`
    #[serde(rename = "RHO_P")]
    RhoP,
    /// `∫ |u|^p`
    #[serde(rename = "ETA_P")]
    EtaP,
    /// `∫ |∇u|^p / p`
    #[serde(rename = "RHO_GRAD")]
    RhoGrad,
    /// `ρ_p(u) + ρ_p(|∇u|)`
    #[serde(rename = "RHO_1P")]
    Rho1P,
    /// `∫ |∇u|^p`
    #[serde(rename = "ETA_GRAD")]
    EtaGrad,
}

impl ModularKind {
    pub const ALL: [ModularKind; 5] = [
        ModularKind::RhoP,
        ModularKind::EtaP,
        ModularKind::RhoGrad,
        ModularKind::Rho1P,
        ModularKind::EtaGrad,
    ];

    /// `Some(weighted)` when the kind has a term in `|u|`.
    fn value_part(self) -> Option<bool> {
        match self {
            ModularKind::RhoP | ModularKind::Rho1P => Some(true),
            ModularKind::EtaP => Some(false),
            _ => None,
        }
    }

    /// `Some(weighted)` when the kind has a term in `|∇u|`.
    fn grad_part(self) -> Option<bool> {
        match self {
            ModularKind::RhoGrad | ModularKind::Rho1P => Some(true),
            ModularKind::EtaGrad => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for ModularKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModularKind::RhoP => "RHO_P",
            ModularKind::EtaP => "ETA_P",
            ModularKind::RhoGrad => "RHO_GRAD",
            ModularKind::Rho1P => "RHO_1P",
            ModularKind::EtaGrad => "ETA_GRAD",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ModularKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModularKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown modular kind `{s}`")))
    }
}

/// `m^p` for `m ≥ 0`, or `None` when the result leaves the finite range.
#[inline]
pub(crate) fn saturating_pow(m: f64, p: f64) -> Option<f64> {
    if m == 0.0 {
        return Some(0.0);
    }
    let r = m.powf(p);
    r.is_finite().then_some(r)
}

/// Modular of per-cell magnitudes: `Σ |m_c|^{p_c} (/ p_c) · |cell|`.
pub fn cell_modular(grid: &Grid, magnitudes: &[f64], p: &[f64], weighted: bool) -> ExtendedReal {
    debug_assert_eq!(magnitudes.len(), p.len());
    let mut sum = 0.0;
    for (&m, &pc) in magnitudes.iter().zip(p) {
        match saturating_pow(m.abs(), pc) {
            Some(t) if weighted => sum += t / pc,
            Some(t) => sum += t,
            None => return ExtendedReal::Infinite,
        }
    }
    ExtendedReal::from_f64(sum * grid.cell_measure())
}

fn check_same_grid(u: &GridFunction, p: &ExponentField) -> Result<()> {
    if **u.grid() == **p.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Evaluates the modular of `u`. The value term uses the cell average of `u`,
/// the gradient term the cell gradient; both pair with the cell's exponent.
pub fn modular_eval(kind: ModularKind, u: &GridFunction, p: &ExponentField) -> Result<ExtendedReal> {
    check_same_grid(u, p)?;
    let grid = u.grid();
    let mut total = ExtendedReal::ZERO;
    if let Some(weighted) = kind.value_part() {
        total = total + cell_modular(grid, &u.cell_averages(), p.values(), weighted);
    }
    if let Some(weighted) = kind.grad_part() {
        total = total + cell_modular(grid, &gradient(u).magnitudes(), p.values(), weighted);
    }
    Ok(total)
}

/// `ρ(u − v)`: the distance whose vanishing along a sequence is modular
/// convergence.
pub fn modular_distance(
    kind: ModularKind,
    u: &GridFunction,
    v: &GridFunction,
    p: &ExponentField,
) -> Result<ExtendedReal> {
    modular_eval(kind, &u.sub(v)?, p)
}

/// `ρ(2u) / ρ(u)`. Unbounded ratios along a family of `u` witness the failure
/// of the `Δ₂` condition.
pub fn delta2_ratio(u: &GridFunction, p: &ExponentField, kind: ModularKind) -> Result<ExtendedReal> {
    let base = modular_eval(kind, u, p)?;
    let base = match base {
        ExtendedReal::Finite(v) if v > 0.0 => v,
        ExtendedReal::Finite(_) => return Err(Error::ZeroModular),
        ExtendedReal::Infinite => return Err(Error::InfiniteModular),
    };
    Ok(match modular_eval(kind, &u.scaled(2.0), p)? {
        ExtendedReal::Finite(v) => ExtendedReal::from_f64(v / base),
        ExtendedReal::Infinite => ExtendedReal::Infinite,
    })
}

/// Cell magnitudes and exponents of every term of a modular, so that
/// `λ ↦ ρ(u/λ)` can be evaluated without rebuilding grid functions.
struct ScaledModular {
    terms: Vec<(f64, f64, bool)>,
    measure: f64,
}

impl ScaledModular {
    fn new(kind: ModularKind, u: &GridFunction, p: &ExponentField) -> Self {
        let mut terms = Vec::new();
        if let Some(w) = kind.value_part() {
            terms.extend(u.cell_averages().into_iter().zip(p.values()).map(|(m, &pc)| (m.abs(), pc, w)));
        }
        if let Some(w) = kind.grad_part() {
            terms.extend(gradient(u).magnitudes().into_iter().zip(p.values()).map(|(m, &pc)| (m, pc, w)));
        }
        Self {
            terms,
            measure: u.grid().cell_measure(),
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.iter().all(|&(m, _, _)| m == 0.0)
    }

    /// Whether `ρ(u/λ) ≤ 1`.
    fn in_unit_ball(&self, lambda: f64) -> bool {
        let mut sum = 0.0;
        for &(m, p, weighted) in &self.terms {
            match saturating_pow(m / lambda, p) {
                Some(t) => sum += if weighted { t / p } else { t },
                None => return false,
            }
        }
        sum * self.measure <= 1.0
    }
}

/// Luxemburg norm `inf{λ > 0 : ρ(u/λ) ≤ 1}`.
///
/// Brackets by doubling or halving from `λ = 1`, then bisects until the
/// bracket's relative width is below `tol`. Returns the upper end, so
/// `ρ(u/λ) ≤ 1` holds at the returned value.
pub fn luxemburg_norm(kind: ModularKind, u: &GridFunction, p: &ExponentField, tol: f64) -> Result<f64> {
    check_same_grid(u, p)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let m = ScaledModular::new(kind, u, p);
    if m.is_zero() {
        return Ok(0.0);
    }
    let (mut lo, mut hi);
    if m.in_unit_ball(1.0) {
        hi = 1.0;
        lo = 0.5;
        while m.in_unit_ball(lo) {
            hi = lo;
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return Ok(hi);
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while !m.in_unit_ball(hi) {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NonFinite("Luxemburg norm exceeds the f64 range".into()));
            }
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m.in_unit_ball(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
