//! Discrete Dirichlet solver: descent on interior node values with an Armijo
//! line search, plus the checks that go with it.
//!
//! The minimization runs over `w` (zero on the boundary) of `E(w)`, whose
//! integrands depend on `w - φ` only. The reported solution is `v = φ - w`,
//! which carries the boundary values of `φ` and has the same gradient
//! magnitudes as `w - φ`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, energy_and_gradient, energy_change, interior_dot, EnergyKind, ProblemData};
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{Grid, GridFunction};
use crate::modular::ExtendedReal;

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Zeros,
    /// Uniform noise of amplitude `h_min` on interior nodes.
    Random { seed: u64 },
    /// Starting guess for the solution; its boundary values are replaced by `φ`'s.
    Provided(GridFunction),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Method {
    SteepestDescent,
    Lbfgs { memory: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop once the interior gradient sup-norm is at most this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub init: Init,
    pub method: Method,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iters: 20_000,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            init: Init::Zeros,
            method: Method::Lbfgs { memory: 10 },
        }
    }
}

impl SolverConfig {
    pub fn with_tol(grad_tol: f64) -> Self {
        Self { grad_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("grad_tol must be > 0, got {}", self.grad_tol)));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::InvalidArgument(format!("armijo_c must lie in (0,1), got {}", self.armijo_c)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "backtrack_factor must lie in (0,1), got {}",
                self.backtrack_factor
            )));
        }
        if let Method::Lbfgs { memory: 0 } = self.method {
            return Err(Error::InvalidArgument("L-BFGS memory must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    /// The line search could no longer find a decrease.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct SolverReport {
    /// Full-grid solution carrying `φ` on the boundary.
    pub solution: GridFunction,
    pub final_energy: f64,
    pub iterations: usize,
    /// Energy at the start and after every accepted step; non-increasing.
    pub energy_trace: Vec<f64>,
    pub grad_norm_trace: Vec<f64>,
    pub termination: Termination,
}

impl SolverReport {
    pub fn final_grad_norm(&self) -> f64 {
        *self.grad_norm_trace.last().unwrap_or(&f64::NAN)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn interior_mask(grid: &Grid) -> Vec<bool> {
    (0..grid.node_count()).map(|n| !grid.is_boundary(n)).collect()
}

/// Interior noise of amplitude `amp`, halved until `E` is finite.
fn finite_perturbation(
    kind: EnergyKind,
    data: &ProblemData,
    base: &GridFunction,
    rng: &mut ChaCha8Rng,
    amp: f64,
) -> Result<GridFunction> {
    let grid = data.grid();
    let noise: Vec<f64> = (0..grid.node_count())
        .map(|n| if grid.is_boundary(n) { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect();
    let noise = GridFunction::new(grid.clone(), noise)?;
    let mut a = amp;
    for _ in 0..64 {
        let w = base.lin_comb(1.0, &noise, a)?;
        if energy(kind, data, &w)?.is_finite() {
            return Ok(w);
        }
        a *= 0.5;
    }
    Ok(base.clone())
}

fn initial_iterate(kind: EnergyKind, data: &ProblemData, init: &Init) -> Result<GridFunction> {
    let grid = data.grid();
    match init {
        Init::Zeros => Ok(GridFunction::zeros(grid.clone())),
        Init::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            finite_perturbation(kind, data, &GridFunction::zeros(grid.clone()), &mut rng, grid.min_spacing())
        }
        Init::Provided(v) => {
            if **v.grid() != **grid {
                return Err(Error::GridMismatch);
            }
            let w = (0..grid.node_count())
                .map(|n| if grid.is_boundary(n) { 0.0 } else { data.phi().values()[n] - v.values()[n] })
                .collect();
            GridFunction::new(grid.clone(), w)
        }
    }
}

struct Lbfgs {
    memory: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl Lbfgs {
    fn new(memory: usize) -> Self {
        Self { memory, pairs: VecDeque::new() }
    }

    fn update(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        // skip pairs without usable curvature
        if !(sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt()) {
            return;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Two-loop recursion: `-H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

struct Accepted {
    w: GridFunction,
    step: Vec<f64>,
    decrease: f64,
}

/// Backtracking Armijo search along `dir` from `w`. Saturated trial points
/// count as rejections.
fn line_search(
    kind: EnergyKind,
    data: &ProblemData,
    cfg: &SolverConfig,
    w: &GridFunction,
    grad: &[f64],
    dir: &[f64],
    alpha0: f64,
) -> Result<Option<Accepted>> {
    let grid = data.grid();
    let mut alpha = alpha0;
    for _ in 0..200 {
        let trial: Vec<f64> = w.values().iter().zip(dir).map(|(x, d)| x + alpha * d).collect();
        let step: Vec<f64> = trial.iter().zip(w.values()).map(|(t, x)| t - x).collect();
        if step.iter().all(|s| *s == 0.0) {
            return Ok(None);
        }
        let slope = dot(grad, &step);
        if slope >= 0.0 {
            return Ok(None);
        }
        let step_fn = GridFunction::new(grid.clone(), step)?;
        if let Some(change) = energy_change(kind, data, w, &step_fn)? {
            if change <= cfg.armijo_c * slope && change <= 0.0 {
                return Ok(Some(Accepted {
                    w: GridFunction::new(grid.clone(), trial)?,
                    step: step_fn.into_values(),
                    decrease: change,
                }));
            }
        }
        alpha *= cfg.backtrack_factor;
    }
    Ok(None)
}

/// Minimizes the energy over interior node values and returns `v = φ - w*`.
pub fn solve_dirichlet(kind: EnergyKind, data: &ProblemData, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let grid = data.grid().clone();
    let mask = interior_mask(&grid);
    let mut w = initial_iterate(kind, data, &cfg.init)?;
    let (mut e, g) = match energy_and_gradient(kind, data, &w) {
        Ok(r) => r,
        Err(Error::SaturatedEnergy) => return Err(Error::SaturatedEnergy),
        Err(err) => return Err(err),
    };
    let mut grad = g.into_values();
    let mut gnorm = sup_norm(&grad);
    let mut energy_trace = vec![e];
    let mut grad_norm_trace = vec![gnorm];
    let mut lbfgs = match cfg.method {
        Method::Lbfgs { memory } => Some(Lbfgs::new(memory)),
        Method::SteepestDescent => None,
    };
    let mut sd_alpha = grid.min_spacing() / gnorm.max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    let termination = loop {
        if gnorm <= cfg.grad_tol {
            break Termination::Converged;
        }
        if iterations >= cfg.max_iters {
            break Termination::MaxIters;
        }
        let steepest: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut accepted = None;
        if let Some(lb) = &lbfgs {
            if !lb.pairs.is_empty() {
                let mut dir = lb.direction(&grad);
                for (d, m) in dir.iter_mut().zip(&mask) {
                    if !m {
                        *d = 0.0;
                    }
                }
                if dot(&dir, &grad) < 0.0 {
                    accepted = line_search(kind, data, cfg, &w, &grad, &dir, 1.0)?;
                }
            }
        }
        if accepted.is_none() {
            if let Some(lb) = &mut lbfgs {
                lb.clear();
            }
            accepted = line_search(kind, data, cfg, &w, &grad, &steepest, sd_alpha)?;
            if let Some(a) = &accepted {
                // let the next steepest step start a little longer than this one
                let used = sup_norm(&a.step) / gnorm;
                sd_alpha = used / cfg.backtrack_factor;
            }
        }
        let Some(step) = accepted else {
            break Termination::Stalled;
        };
        let (_, g_new) = energy_and_gradient(kind, data, &step.w)?;
        let g_new = g_new.into_values();
        if let Some(lb) = &mut lbfgs {
            let y = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
            lb.update(step.step, y);
        }
        w = step.w;
        grad = g_new;
        gnorm = sup_norm(&grad);
        e += step.decrease;
        energy_trace.push(e);
        grad_norm_trace.push(gnorm);
        iterations += 1;
    };
    let solution = data.phi().sub(&w)?;
    Ok(SolverReport {
        solution,
        final_energy: e,
        iterations,
        energy_trace,
        grad_norm_trace,
        termination,
    })
}

/// Exact 1D solution through constant flux: `|v'|^{p-2} v' = c` on every
/// cell, with `c` chosen by bisection so that the cell slopes integrate to
/// `b_val - a_val`.
pub fn oracle_1d_flux(p: &ExponentField, a_val: f64, b_val: f64) -> Result<GridFunction> {
    let grid = p.grid();
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("the flux oracle needs a 1D grid".into()));
    }
    if !(a_val.is_finite() && b_val.is_finite()) {
        return Err(Error::NonFinite("boundary values".into()));
    }
    let h = grid.spacing()[0];
    let slope = |c: f64, p: f64| c.signum() * c.abs().powf(1.0 / (p - 1.0));
    let rise = |c: f64| p.values().iter().map(|&pc| h * slope(c, pc)).sum::<f64>();
    let target = b_val - a_val;
    let c = if target == 0.0 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while rise(hi.copysign(target)).abs() < target.abs() {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Unresolved("flux bracket overflowed".into()));
            }
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if rise(mid.copysign(target)).abs() < target.abs() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).copysign(target)
    };
    let n = grid.node_count();
    let mut v = Vec::with_capacity(n);
    let mut acc = a_val;
    v.push(acc);
    for &pc in &p.values()[..n - 2] {
        acc += h * slope(c, pc);
        v.push(acc);
    }
    v.push(b_val);
    GridFunction::new(grid.clone(), v)
}

#[derive(Clone, Debug)]
pub struct UniquenessProbe {
    pub sup_diff: f64,
    pub first: SolverReport,
    pub second: SolverReport,
}

/// Solves twice from different starts and compares the solutions.
pub fn uniqueness_probe(
    kind: EnergyKind,
    data: &ProblemData,
    cfg_a: &SolverConfig,
    cfg_b: &SolverConfig,
) -> Result<UniquenessProbe> {
    let mut runs = Vec::with_capacity(2);
    for cfg in [cfg_a, cfg_b] {
        let r = solve_dirichlet(kind, data, cfg)?;
        if r.termination != Termination::Converged {
            return Err(Error::NotConverged(format!(
                "{:?} after {} iterations, gradient {:e}",
                r.termination,
                r.iterations,
                r.final_grad_norm()
            )));
        }
        runs.push(r);
    }
    let second = runs.pop().unwrap();
    let first = runs.pop().unwrap();
    Ok(UniquenessProbe {
        sup_diff: first.solution.sup_distance(&second.solution)?,
        first,
        second,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalCertificate {
    pub min_value: f64,
    pub n_dirs: usize,
}

/// Minimum over random admissible competitors of `⟨S(w*), w - w*⟩`, where
/// `w* = φ - v_star` and each competitor differs from `w*` by interior noise
/// of amplitude at most `h_min` with finite energy.
pub fn variational_certificate(
    kind: EnergyKind,
    data: &ProblemData,
    v_star: &GridFunction,
    n_dirs: usize,
    seed: u64,
) -> Result<VariationalCertificate> {
    let grid = data.grid();
    let w_star = initial_iterate(kind, data, &Init::Provided(v_star.clone()))?;
    let (_, s) = energy_and_gradient(kind, data, &w_star)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_value = ExtendedReal::Infinite.to_f64();
    for _ in 0..n_dirs {
        let competitor = finite_perturbation(kind, data, &w_star, &mut rng, grid.min_spacing())?;
        let pairing = interior_dot(grid, &s, &competitor.sub(&w_star)?);
        min_value = min_value.min(pairing);
    }
    Ok(VariationalCertificate { min_value, n_dirs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::make_exponent;
    use crate::grid::{build_grid, Domain};
    use std::sync::Arc;

    fn interval(n: usize) -> Arc<Grid> {
        build_grid(Domain::interval(0.0, 1.0).unwrap(), &[n]).unwrap()
    }

    fn square(n: usize) -> Arc<Grid> {
        build_grid(Domain::rectangle([0.0, 1.0], [0.0, 1.0]).unwrap(), &[n, n]).unwrap()
    }

    fn problem(grid: &Arc<Grid>, p: impl Fn([f64; 2]) -> f64, phi: impl Fn([f64; 2]) -> f64) -> ProblemData {
        ProblemData::new(
            make_exponent(grid.clone(), p).unwrap(),
            GridFunction::from_fn(grid.clone(), phi).unwrap(),
            None,
        )
        .unwrap()
    }

    fn assert_report_invariants(r: &SolverReport, tol: f64) {
        assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        if r.termination == Termination::Converged {
            assert!(r.final_grad_norm() <= tol);
        }
        assert_eq!(r.energy_trace.len(), r.iterations + 1);
    }

    #[test]
    fn oracle_closed_forms() {
        let g = interval(33);
        let two = ExponentField::constant(g.clone(), 2.0).unwrap();
        let v = oracle_1d_flux(&two, 0.0, 1.0).unwrap();
        for n in 0..33 {
            assert!((v.values()[n] - g.node_coords(n)[0]).abs() < 1e-14);
        }
        let v = oracle_1d_flux(&two, 0.7, 0.7).unwrap();
        assert!(v.values().iter().all(|x| *x == 0.7));
        // ∫ c^{1/(2+x)} = 1 at c = 1, so the solution is x again
        let p = make_exponent(g.clone(), |[x, _]| 3.0 + x).unwrap();
        let v = oracle_1d_flux(&p, 0.0, 1.0).unwrap();
        for n in 0..33 {
            assert!((v.values()[n] - g.node_coords(n)[0]).abs() < 1e-14);
        }
        let v = oracle_1d_flux(&two, 1.0, -2.0).unwrap();
        assert!((v.values()[16] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn quadratic_1d_gives_linear_interpolant() {
        let g = interval(65);
        let d = problem(&g, |_| 2.0, |[x, _]| x * x);
        let r = solve_dirichlet(EnergyKind::FGrad, &d, &SolverConfig::with_tol(1e-12)).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert_report_invariants(&r, 1e-12);
        for n in 0..65 {
            assert!((r.solution.values()[n] - g.node_coords(n)[0]).abs() <= 1e-8);
        }
    }

    #[test]
    fn constant_exponents_give_lines() {
        let g = interval(65);
        for p in [1.5, 3.0, 7.0] {
            let d = problem(&g, move |_| p, |[x, _]| x * x);
            let r = solve_dirichlet(EnergyKind::FGrad, &d, &SolverConfig::with_tol(1e-11)).unwrap();
            assert_eq!(r.termination, Termination::Converged, "p = {p}");
            assert_report_invariants(&r, 1e-11);
            for n in 0..65 {
                assert!((r.solution.values()[n] - g.node_coords(n)[0]).abs() <= 1e-6, "p = {p}");
            }
        }
    }

    #[test]
    fn variable_exponent_matches_oracle() {
        let g = interval(129);
        let d = problem(&g, |[x, _]| 2.0 + 1.0 / (1.0 - 0.99 * x), |[x, _]| x);
        let r = solve_dirichlet(EnergyKind::FGrad, &d, &SolverConfig::with_tol(1e-10)).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        let oracle = oracle_1d_flux(d.exponent(), 0.0, 1.0).unwrap();
        assert!(r.solution.sup_distance(&oracle).unwrap() <= 1e-4);
    }

    #[test]
    fn steepest_descent_is_monotone_and_agrees() {
        let g = interval(17);
        let d = problem(&g, |[x, _]| 2.0 + x, |[x, _]| x * x);
        let cfg = SolverConfig {
            method: Method::SteepestDescent,
            ..SolverConfig::with_tol(1e-9)
        };
        let r = solve_dirichlet(EnergyKind::FGrad, &d, &cfg).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert_report_invariants(&r, 1e-9);
        let oracle = oracle_1d_flux(d.exponent(), 0.0, 1.0).unwrap();
        assert!(r.solution.sup_distance(&oracle).unwrap() <= 1e-6);
    }

    #[test]
    fn max_iters_is_reported() {
        let g = interval(33);
        let d = problem(&g, |_| 3.0, |[x, _]| x * x);
        let cfg = SolverConfig { max_iters: 2, ..SolverConfig::with_tol(1e-14) };
        let r = solve_dirichlet(EnergyKind::FGrad, &d, &cfg).unwrap();
        assert_eq!(r.termination, Termination::MaxIters);
        assert_eq!(r.iterations, 2);
        assert_report_invariants(&r, 1e-14);
    }

    #[test]
    fn solution_carries_boundary_data() {
        let g = square(9);
        let d = problem(&g, |[x, _]| 2.0 + x, |[x, y]| x * y);
        let r = solve_dirichlet(EnergyKind::FGrad, &d, &SolverConfig::default()).unwrap();
        for n in g.boundary_nodes() {
            assert_eq!(r.solution.values()[n], d.phi().values()[n]);
        }
    }

    #[test]
    fn uniqueness_and_certificate() {
        let g = square(9);
        let d = problem(&g, |[x, _]| 2.0 + x, |[x, y]| x * y);
        let a = SolverConfig::with_tol(1e-10);
        let b = SolverConfig { init: Init::Random { seed: 7 }, ..a.clone() };
        let probe = uniqueness_probe(EnergyKind::FGrad, &d, &a, &b).unwrap();
        assert!(probe.sup_diff <= 1e-5);
        let cert = variational_certificate(EnergyKind::FGrad, &d, &probe.first.solution, 100, 3).unwrap();
        assert!(cert.min_value >= -1e-6);
        let same = variational_certificate(EnergyKind::FGrad, &d, &probe.first.solution, 0, 3).unwrap();
        assert_eq!(same.min_value, f64::INFINITY);
    }

    #[test]
    fn weighted_and_full_energies_converge() {
        let g = interval(33);
        let q = crate::energy::weight_from_fn(&g, |[x, _]| 1.0 + x);
        let d = ProblemData::new(
            make_exponent(g.clone(), |[x, _]| 2.5 + x).unwrap(),
            GridFunction::from_fn(g.clone(), |[x, _]| x * x).unwrap(),
            Some(q),
        )
        .unwrap();
        for kind in EnergyKind::ALL {
            let r = solve_dirichlet(kind, &d, &SolverConfig::with_tol(1e-10)).unwrap();
            assert_eq!(r.termination, Termination::Converged, "{kind}");
            assert_report_invariants(&r, 1e-10);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let g = interval(9);
        let d = problem(&g, |_| 2.0, |[x, _]| x);
        for cfg in [
            SolverConfig::with_tol(0.0),
            SolverConfig { armijo_c: 1.0, ..SolverConfig::default() },
            SolverConfig { backtrack_factor: 0.0, ..SolverConfig::default() },
            SolverConfig { method: Method::Lbfgs { memory: 0 }, ..SolverConfig::default() },
        ] {
            assert!(matches!(solve_dirichlet(EnergyKind::FGrad, &d, &cfg), Err(Error::InvalidArgument(_))));
        }
    }
}
