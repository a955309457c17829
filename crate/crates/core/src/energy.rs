//! Dirichlet-type energies on interior degrees of freedom and their exact
//! discrete derivatives.
//!
//! Every energy is a sum of cell terms in `d = w - φ`, where `w` vanishes on
//! the boundary: a gradient term `c_g |∇d|^p` and, for the full and weighted
//! functionals, a value term `c_v |d̄|^p` with `d̄` the cell average. The
//! gradient returned here is the exact derivative of that sum with respect to
//! the interior node values.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{CellCorners, Grid, GridFunction};
use crate::modular::{modular_eval, saturating_pow, ExtendedReal, ModularKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnergyKind {
    /// `ρ_{1,p}(w - φ) = ∫ |w-φ|^p/p + |∇(w-φ)|^p/p`
    #[serde(rename = "F_FULL")]
    FFull,
    /// `∫ |∇(w-φ)|^p / p`
    #[serde(rename = "F_GRAD")]
    FGrad,
    /// `∫ |∇(w-φ)|^p / p + q |w-φ|^p / p`
    #[serde(rename = "J_WEIGHTED")]
    JWeighted,
    /// `∫ |∇(w-φ)|^p`
    #[serde(rename = "G_UNWEIGHTED")]
    GUnweighted,
}

impl EnergyKind {
    pub const ALL: [EnergyKind; 4] = [
        EnergyKind::FFull,
        EnergyKind::FGrad,
        EnergyKind::JWeighted,
        EnergyKind::GUnweighted,
    ];
}

impl fmt::Display for EnergyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EnergyKind::FFull => "F_FULL",
            EnergyKind::FGrad => "F_GRAD",
            EnergyKind::JWeighted => "J_WEIGHTED",
            EnergyKind::GUnweighted => "G_UNWEIGHTED",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for EnergyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnergyKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown energy kind `{s}`")))
    }
}

/// Exponent, boundary datum and optional weight of a Dirichlet problem.
#[derive(Clone, Debug)]
pub struct ProblemData {
    p: ExponentField,
    phi: GridFunction,
    q: Option<Vec<f64>>,
}

impl ProblemData {
    /// Validates that everything lives on one grid, that the weight is
    /// finite and non-negative, and that `ρ_{1,p}(φ) < ∞`.
    pub fn new(p: ExponentField, phi: GridFunction, q: Option<Vec<f64>>) -> Result<Self> {
        if **p.grid() != **phi.grid() {
            return Err(Error::GridMismatch);
        }
        if let Some(q) = &q {
            if q.len() != p.grid().cell_count() {
                return Err(Error::InvalidWeight(format!(
                    "expected {} cell samples, got {}",
                    p.grid().cell_count(),
                    q.len()
                )));
            }
            if let Some((c, v)) = q.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidWeight(format!(
                    "q = {v} at cell {c}; need finite q ≥ 0"
                )));
            }
        }
        if !modular_eval(ModularKind::Rho1P, &phi, &p)?.is_finite() {
            return Err(Error::IllPosed(
                "ρ_{1,p}(φ) is +INF on this grid".into(),
            ));
        }
        Ok(Self { p, phi, q })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.p.grid()
    }

    pub fn exponent(&self) -> &ExponentField {
        &self.p
    }

    pub fn phi(&self) -> &GridFunction {
        &self.phi
    }

    pub fn weight(&self) -> Option<&[f64]> {
        self.q.as_deref()
    }
}

/// Samples a weight at cell midpoints.
pub fn weight_from_fn(grid: &Grid, q: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    (0..grid.cell_count()).map(|c| q(grid.cell_midpoint(c))).collect()
}

/// Per-cell term coefficients. `*_energy` multiplies `|·|^p` in the energy,
/// `*_flux` multiplies `|·|^{p-2}·` in its derivative.
struct Coeffs {
    grad_energy: f64,
    grad_flux: f64,
    value_energy: f64,
    value_flux: f64,
}

fn coeffs(kind: EnergyKind, data: &ProblemData, cell: usize) -> Result<Coeffs> {
    let p = data.p.values()[cell];
    Ok(match kind {
        EnergyKind::FGrad => Coeffs {
            grad_energy: 1.0 / p,
            grad_flux: 1.0,
            value_energy: 0.0,
            value_flux: 0.0,
        },
        EnergyKind::FFull => Coeffs {
            grad_energy: 1.0 / p,
            grad_flux: 1.0,
            value_energy: 1.0 / p,
            value_flux: 1.0,
        },
        EnergyKind::JWeighted => {
            let q = data
                .q
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("J_WEIGHTED needs a weight q".into()))?[cell];
            Coeffs {
                grad_energy: 1.0 / p,
                grad_flux: 1.0,
                value_energy: q / p,
                value_flux: q,
            }
        }
        EnergyKind::GUnweighted => Coeffs {
            grad_energy: 1.0,
            grad_flux: p,
            value_energy: 0.0,
            value_flux: 0.0,
        },
    })
}

/// Cell gradient and cell average of a node vector, plus the stencil weights
/// that produced them.
struct CellStencil {
    nodes: [usize; 4],
    len: usize,
    // d g_x / d u_node, d g_y / d u_node, d avg / d u_node
    gx: [f64; 4],
    gy: [f64; 4],
    avg: f64,
}

impl CellStencil {
    fn new(grid: &Grid, cell: usize) -> Self {
        let h = grid.spacing();
        match grid.cell_corners(cell) {
            CellCorners::Segment([a, b]) => CellStencil {
                nodes: [a, b, 0, 0],
                len: 2,
                gx: [-1.0 / h[0], 1.0 / h[0], 0.0, 0.0],
                gy: [0.0; 4],
                avg: 0.5,
            },
            CellCorners::Square(n) => {
                let (ax, ay) = (0.5 / h[0], 0.5 / h[1]);
                CellStencil {
                    nodes: n,
                    len: 4,
                    gx: [-ax, ax, -ax, ax],
                    gy: [-ay, -ay, ay, ay],
                    avg: 0.25,
                }
            }
        }
    }

    /// `([g_x, g_y], average)` of node values `v`.
    fn apply(&self, v: &[f64]) -> ([f64; 2], f64) {
        let c = &self.nodes[..self.len];
        if self.len == 2 {
            let (a, b) = (v[c[0]], v[c[1]]);
            ([(b - a) * self.gx[1], 0.0], 0.5 * (a + b))
        } else {
            let (v00, v10, v01, v11) = (v[c[0]], v[c[1]], v[c[2]], v[c[3]]);
            (
                [
                    ((v10 - v00) + (v11 - v01)) * self.gx[1],
                    ((v01 - v00) + (v11 - v10)) * self.gy[2],
                ],
                0.25 * (v00 + v10 + v01 + v11),
            )
        }
    }
}

fn check_argument(data: &ProblemData, w: &GridFunction) -> Result<()> {
    if **w.grid() != **data.grid() {
        return Err(Error::GridMismatch);
    }
    if !w.vanishes_on_boundary() {
        return Err(Error::NonzeroBoundary);
    }
    Ok(())
}

fn offset(data: &ProblemData, w: &GridFunction) -> Vec<f64> {
    w.values().iter().zip(data.phi.values()).map(|(w, f)| w - f).collect()
}

/// Energy and (optionally) its full-length node gradient; `None` when the
/// energy saturates.
fn evaluate(kind: EnergyKind, data: &ProblemData, w: &GridFunction, with_grad: bool) -> Result<Option<(f64, Vec<f64>)>> {
    let grid = data.grid();
    let d = offset(data, w);
    let mu = grid.cell_measure();
    let mut sum = 0.0;
    let mut grad = if with_grad { vec![0.0; grid.node_count()] } else { Vec::new() };
    for cell in 0..grid.cell_count() {
        let p = data.p.values()[cell];
        let k = coeffs(kind, data, cell)?;
        let st = CellStencil::new(grid, cell);
        let (g, m) = st.apply(&d);
        let ng = g[0].hypot(g[1]);
        let Some(tg) = saturating_pow(ng, p) else { return Ok(None) };
        sum += k.grad_energy * tg;
        let mut value_flux = 0.0;
        if k.value_energy != 0.0 || k.value_flux != 0.0 {
            let Some(tv) = saturating_pow(m.abs(), p) else { return Ok(None) };
            sum += k.value_energy * tv;
            if with_grad && m != 0.0 {
                value_flux = k.value_flux * m.abs().powf(p - 1.0) * m.signum();
            }
        }
        if with_grad {
            let (fx, fy) = if ng > 0.0 {
                let s = ng.powf(p - 1.0) / ng;
                (k.grad_flux * (s * g[0]), k.grad_flux * (s * g[1]))
            } else {
                (0.0, 0.0)
            };
            for i in 0..st.len {
                grad[st.nodes[i]] += mu * (fx * st.gx[i] + fy * st.gy[i] + value_flux * st.avg);
            }
        }
    }
    let e = sum * mu;
    if !e.is_finite() {
        return Ok(None);
    }
    if with_grad {
        for n in grid.boundary_nodes() {
            grad[n] = 0.0;
        }
        if grad.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
    }
    Ok(Some((e, grad)))
}

/// Energy of `w`, which must vanish on the boundary.
pub fn energy(kind: EnergyKind, data: &ProblemData, w: &GridFunction) -> Result<ExtendedReal> {
    check_argument(data, w)?;
    Ok(match evaluate(kind, data, w, false)? {
        Some((e, _)) => ExtendedReal::Finite(e),
        None => ExtendedReal::Infinite,
    })
}

/// Energy and gradient together; errors when the energy is +INF.
pub fn energy_and_gradient(kind: EnergyKind, data: &ProblemData, w: &GridFunction) -> Result<(f64, GridFunction)> {
    check_argument(data, w)?;
    match evaluate(kind, data, w, true)? {
        Some((e, g)) => Ok((e, GridFunction::new(data.grid().clone(), g)?)),
        None => Err(Error::SaturatedEnergy),
    }
}

/// Exact derivative of the discrete energy with respect to each interior node
/// value. Boundary entries are zero.
pub fn gateaux_gradient(kind: EnergyKind, data: &ProblemData, w: &GridFunction) -> Result<GridFunction> {
    energy_and_gradient(kind, data, w).map(|(_, g)| g)
}

/// `Σ a_i b_i` over interior nodes, in node order.
pub fn interior_dot(grid: &Grid, a: &GridFunction, b: &GridFunction) -> f64 {
    let (a, b) = (a.values(), b.values());
    (0..grid.node_count())
        .filter(|&n| !grid.is_boundary(n))
        .map(|n| a[n] * b[n])
        .sum()
}

/// `⟨gradient, h⟩`: the derivative of the energy at `w` in direction `h`.
pub fn directional_derivative(kind: EnergyKind, data: &ProblemData, w: &GridFunction, h: &GridFunction) -> Result<f64> {
    check_argument(data, h)?;
    let g = gateaux_gradient(kind, data, w)?;
    Ok(interior_dot(data.grid(), &g, h))
}

/// Change of `c·|x|^p` from `x = base` to `x = base + step`, computed from
/// the step so that tiny changes are not lost to cancellation. `None` when
/// the new term overflows.
fn term_change(base: &[f64], step: &[f64], p: f64, c: f64) -> Option<f64> {
    if c == 0.0 {
        return Some(0.0);
    }
    let nb = base.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nn = base
        .iter()
        .zip(step)
        .map(|(b, s)| (b + s) * (b + s))
        .sum::<f64>()
        .sqrt();
    if nb == 0.0 {
        return saturating_pow(nn, p).map(|t| c * t);
    }
    saturating_pow(nn, p)?;
    if nn == 0.0 {
        return Some(-c * nb.powf(p));
    }
    // |b+s|² - |b|² = Σ s (2b + s)
    let dsq: f64 = base.iter().zip(step).map(|(b, s)| s * (2.0 * b + s)).sum();
    let rel = dsq / (nb * (nn + nb));
    Some(c * nb.powf(p) * (p * rel.ln_1p()).exp_m1())
}

/// `E(w + step) - E(w)`, accurate even when the difference is far below
/// the rounding level of `E(w)`. `None` when `E(w + step)` is +INF.
pub fn energy_change(kind: EnergyKind, data: &ProblemData, w: &GridFunction, step: &GridFunction) -> Result<Option<f64>> {
    check_argument(data, w)?;
    check_argument(data, step)?;
    let grid = data.grid();
    let d = offset(data, w);
    let mut sum = 0.0;
    for cell in 0..grid.cell_count() {
        let p = data.p.values()[cell];
        let k = coeffs(kind, data, cell)?;
        let st = CellStencil::new(grid, cell);
        let (g, m) = st.apply(&d);
        let (dg, dm) = st.apply(step.values());
        let Some(tg) = term_change(&g, &dg, p, k.grad_energy) else { return Ok(None) };
        let Some(tv) = term_change(&[m], &[dm], p, k.value_energy) else { return Ok(None) };
        sum += tg + tv;
    }
    let change = sum * grid.cell_measure();
    Ok(change.is_finite().then_some(change))
}

/// Largest deviation between the gradient and fourth-order central
/// differences of the energy with step `step` in each interior coordinate,
/// relative to the gradient's sup-norm. The differences are formed from
/// [`energy_change`], so small steps do not lose digits to cancellation.
pub fn gradient_check(kind: EnergyKind, data: &ProblemData, w: &GridFunction, step: f64) -> Result<f64> {
    let grad = gateaux_gradient(kind, data, w)?;
    let grid = data.grid();
    let mut e = GridFunction::zeros(grid.clone());
    let mut change = |node: usize, t: f64| -> Result<f64> {
        e.values_mut()[node] = t;
        let c = energy_change(kind, data, w, &e)?;
        e.values_mut()[node] = 0.0;
        c.ok_or(Error::SaturatedEnergy)
    };
    let mut worst: f64 = 0.0;
    for node in grid.interior_nodes() {
        let d1 = change(node, step)? - change(node, -step)?;
        let d2 = change(node, 2.0 * step)? - change(node, -2.0 * step)?;
        let fd = (8.0 * d1 - d2) / (12.0 * step);
        worst = worst.max((fd - grad.values()[node]).abs());
    }
    let scale = grad.max_abs();
    Ok(if scale > 0.0 { worst / scale } else { worst })
}
