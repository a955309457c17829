//! Variable exponents sampled at cell midpoints.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::modular::ExtendedReal;

/// Exponent `p(x)` sampled once per cell, at the cell midpoint.
///
/// An unbounded exponent has finite samples on any grid; its growth shows up
/// as `p_max_sampled` increasing under refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    p_minus: f64,
    p_max_sampled: f64,
}

/// Samples `p` at every cell midpoint. Every sample must be finite and > 1.
pub fn make_exponent(grid: Arc<Grid>, p: impl Fn([f64; 2]) -> f64) -> Result<ExponentField> {
    let values = (0..grid.cell_count())
        .map(|c| p(grid.cell_midpoint(c)))
        .collect();
    ExponentField::from_cell_values(grid, values)
}

impl ExponentField {
    pub fn from_cell_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidExponent(format!(
                "expected {} cell samples, got {}",
                grid.cell_count(),
                values.len()
            )));
        }
        for (c, &p) in values.iter().enumerate() {
            if !p.is_finite() || p <= 1.0 {
                let [x, y] = grid.cell_midpoint(c);
                return Err(Error::InvalidExponent(format!(
                    "p = {p} at cell {c} (midpoint ({x}, {y})); need finite p > 1"
                )));
            }
        }
        let p_minus = values.iter().copied().fold(f64::INFINITY, f64::min);
        let p_max_sampled = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            grid,
            values,
            p_minus,
            p_max_sampled,
        })
    }

    pub fn constant(grid: Arc<Grid>, p: f64) -> Result<Self> {
        let n = grid.cell_count();
        Self::from_cell_values(grid, vec![p; n])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_max_sampled(&self) -> f64 {
        self.p_max_sampled
    }

    /// `p_minus > n`, the hypothesis of the Dirichlet theory in dimension `n`.
    pub fn admissible_for_dirichlet(&self, n: usize) -> bool {
        self.p_minus > n as f64
    }

    /// Midpoint quadrature of `∫ e^q / q`. Saturates to +INF once a cell term
    /// overflows.
    pub fn exp_integrability_check(&self) -> ExtendedReal {
        let mut terms = Vec::with_capacity(self.values.len());
        for &q in &self.values {
            let t = q.exp() / q;
            if !t.is_finite() {
                return ExtendedReal::Infinite;
            }
            terms.push(t);
        }
        ExtendedReal::from_f64(self.grid.integrate(&terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Domain};

    fn interval(a: f64, b: f64, n: usize) -> Arc<Grid> {
        build_grid(Domain::interval(a, b).unwrap(), &[n]).unwrap()
    }

    #[test]
    fn constant_exponent() {
        let p = make_exponent(interval(0.0, 1.0, 9), |_| 2.0).unwrap();
        assert_eq!(p.p_minus(), 2.0);
        assert_eq!(p.p_max_sampled(), 2.0);
    }

    #[test]
    fn inverse_x_samples_midpoints() {
        let p = make_exponent(interval(0.0, 1.0, 11), |[x, _]| 1.0 / x).unwrap();
        assert!((p.p_minus() - 1.0 / 0.95).abs() < 1e-12);
        assert!((p.p_max_sampled() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_p_at_most_one() {
        let r = make_exponent(interval(0.0, 1.0, 11), |[x, _]| 1.0 - x);
        assert!(matches!(r, Err(Error::InvalidExponent(_))));
        let r = make_exponent(interval(-1.0, 1.0, 3), |[x, _]| 1.0 / (x + 0.5));
        assert!(r.is_err());
    }

    #[test]
    fn singular_midpoint_errors() {
        // midpoints are 0.25 and 0.75; 1/(x - 0.25) blows up at the first one
        let r = make_exponent(interval(0.0, 1.0, 3), |[x, _]| 2.0 + 1.0 / (x - 0.25));
        assert!(r.is_err());
    }

    #[test]
    fn dirichlet_gate() {
        let sq = build_grid(Domain::rectangle([0.0, 1.0], [0.0, 1.0]).unwrap(), &[5, 5]).unwrap();
        assert!(ExponentField::constant(sq.clone(), 3.0).unwrap().admissible_for_dirichlet(2));
        assert!(!ExponentField::constant(sq, 1.5).unwrap().admissible_for_dirichlet(2));
        let p = make_exponent(interval(0.0, 1.0, 33), |[x, _]| 2.0 + 1.0 / (1.0 - x)).unwrap();
        assert!(p.p_minus() > 3.0);
        assert!(p.admissible_for_dirichlet(1));
    }

    #[test]
    fn exp_integrability_constant() {
        let g = interval(0.0, 1.0, 17);
        let q = ExponentField::constant(g.clone(), 2.0).unwrap();
        let v = q.exp_integrability_check().finite().unwrap();
        assert!((v - 2f64.exp() / 2.0).abs() < 1e-12);
        let q = ExponentField::constant(g, 1.0001).unwrap();
        let v = q.exp_integrability_check().finite().unwrap();
        assert!((v - 1.0001f64.exp() / 1.0001).abs() < 1e-12);
        assert!((v - std::f64::consts::E).abs() < 1e-4);
    }

    #[test]
    fn exp_integrability_blows_up_for_inverse_x() {
        let mut last = 0.0;
        for n in [9, 17, 33, 65, 129] {
            let q = make_exponent(interval(0.0, 1.0, n), |[x, _]| 1.0 / x).unwrap();
            let v = q.exp_integrability_check();
            let val = v.to_f64();
            assert!(val > last);
            last = val;
        }
        let q = make_exponent(interval(0.0, 1.0, 2049), |[x, _]| 1.0 / x).unwrap();
        assert_eq!(q.exp_integrability_check(), ExtendedReal::Infinite);
    }

    #[test]
    fn p_minus_non_increasing_under_dyadic_refinement() {
        let mut prev = f64::INFINITY;
        for k in 1..12 {
            let n = (1usize << k) + 1;
            let p = make_exponent(interval(0.0, 1.0, n), |[x, _]| 1.0 / x).unwrap();
            assert!(p.p_minus() <= prev);
            assert!(p.p_minus() > 1.0);
            prev = p.p_minus();
        }
    }

    #[test]
    fn integrability_monotone_in_q() {
        let g = interval(0.0, 1.0, 21);
        let q1 = make_exponent(g.clone(), |[x, _]| 1.0 + x).unwrap();
        let q2 = make_exponent(g, |[x, _]| 1.5 + x * x + x).unwrap();
        assert!(q1.exp_integrability_check() <= q2.exp_integrability_check());
    }
}
