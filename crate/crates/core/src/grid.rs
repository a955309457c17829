//! Uniform grids on intervals and rectangles.
//!
//! Nodes are numbered with the x index running fastest. Cells are the
//! intervals (1D) or squares (2D) between adjacent nodes and are numbered the
//! same way. Every integral in the crate is a midpoint rule over cells, and
//! every cell quantity (field average, gradient, exponent sample) lives at the
//! cell midpoint, so discrete energies are finite sums of cell terms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned domain: an interval (`dim = 1`) or a rectangle (`dim = 2`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    bounds: Vec<[f64; 2]>,
}

impl Domain {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {}",
                bounds.len()
            )));
        }
        for (axis, [a, b]) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidDomain(format!(
                    "axis {axis}: need finite a < b, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![[a, b]])
    }

    pub fn rectangle(x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        Self::new(vec![x, y])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn measure(&self) -> f64 {
        self.bounds.iter().map(|[a, b]| b - a).product()
    }
}

/// Uniform node lattice over a [`Domain`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: Domain,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
}

/// Builds a uniform grid with `n_nodes[axis]` nodes per axis.
///
/// Each axis needs at least three nodes so that there is an interior degree
/// of freedom.
pub fn build_grid(domain: Domain, n_nodes: &[usize]) -> Result<Arc<Grid>> {
    if n_nodes.len() != domain.dim() {
        return Err(Error::InvalidGrid(format!(
            "{} node counts for a {}-dimensional domain",
            n_nodes.len(),
            domain.dim()
        )));
    }
    if let Some(&n) = n_nodes.iter().find(|&&n| n < 3) {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 nodes per axis, got {n}"
        )));
    }
    let spacing = domain
        .bounds()
        .iter()
        .zip(n_nodes)
        .map(|([a, b], &n)| (b - a) / (n - 1) as f64)
        .collect();
    Ok(Arc::new(Grid {
        domain,
        nodes: n_nodes.to_vec(),
        spacing,
    }))
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.nodes.iter().map(|n| n - 1).product()
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing.iter().product()
    }

    fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let [a, b] = self.domain.bounds()[axis];
        if i + 1 == self.nodes[axis] {
            b
        } else {
            a + i as f64 * self.spacing[axis]
        }
    }

    /// Multi-index of a node; the y index is zero in 1D.
    pub fn node_index(&self, node: usize) -> [usize; 2] {
        [node % self.nodes[0], node / self.nodes[0]]
    }

    /// Node coordinates; the y coordinate is zero in 1D.
    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.node_index(node);
        let x = self.axis_coord(0, i);
        let y = if self.dim() == 2 { self.axis_coord(1, j) } else { 0.0 };
        [x, y]
    }

    /// Midpoint of a cell; the y coordinate is zero in 1D.
    pub fn cell_midpoint(&self, cell: usize) -> [f64; 2] {
        let cx = self.nodes[0] - 1;
        let (i, j) = (cell % cx, cell / cx);
        let [a, _] = self.domain.bounds()[0];
        let x = a + (i as f64 + 0.5) * self.spacing[0];
        let y = if self.dim() == 2 {
            let [c, _] = self.domain.bounds()[1];
            c + (j as f64 + 0.5) * self.spacing[1]
        } else {
            0.0
        };
        [x, y]
    }

    /// Corner nodes of a cell: `[left, right]` in 1D,
    /// `[(0,0), (1,0), (0,1), (1,1)]` in 2D.
    pub fn cell_corners(&self, cell: usize) -> CellCorners {
        let nx = self.nodes[0];
        let cx = nx - 1;
        let (i, j) = (cell % cx, cell / cx);
        let n00 = j * nx + i;
        if self.dim() == 1 {
            CellCorners::Segment([n00, n00 + 1])
        } else {
            CellCorners::Square([n00, n00 + 1, n00 + nx, n00 + nx + 1])
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let [i, j] = self.node_index(node);
        if i == 0 || i + 1 == self.nodes[0] {
            return true;
        }
        self.dim() == 2 && (j == 0 || j + 1 == self.nodes[1])
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&n| !self.is_boundary(n)).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&n| self.is_boundary(n)).collect()
    }

    /// Midpoint rule: `Σ f(cell) · |cell|`, summed in cell order.
    pub fn integrate(&self, cell_values: &[f64]) -> f64 {
        debug_assert_eq!(cell_values.len(), self.cell_count());
        cell_values.iter().sum::<f64>() * self.cell_measure()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellCorners {
    Segment([usize; 2]),
    Square([usize; 4]),
}

/// Midpoint-rule integral of per-cell values.
pub fn integrate(grid: &Grid, cell_values: &[f64]) -> f64 {
    grid.integrate(cell_values)
}

/// A real value at every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidGrid(format!(
                "expected {} node values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "node {i} has value {}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let n = grid.node_count();
        Self::new(grid, vec![c; n])
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.node_count())
            .map(|n| f(grid.node_coords(n)))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `a · self + b · other`
    pub fn lin_comb(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (u, v)| m.max((u - v).abs())))
    }

    /// Value at each cell midpoint: the average of the cell's corner values.
    pub fn cell_averages(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.cell_count())
            .map(|c| match g.cell_corners(c) {
                CellCorners::Segment([a, b]) => 0.5 * (self.values[a] + self.values[b]),
                CellCorners::Square([a, b, c, d]) => {
                    0.25 * (self.values[a] + self.values[b] + self.values[c] + self.values[d])
                }
            })
            .collect()
    }

    /// True iff every boundary node value is exactly zero.
    pub fn vanishes_on_boundary(&self) -> bool {
        self.grid
            .boundary_nodes()
            .into_iter()
            .all(|n| self.values[n] == 0.0)
    }
}

/// One gradient vector per cell. The second component is zero in 1D.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    grid: Arc<Grid>,
    vectors: Vec<[f64; 2]>,
}

impl GradientField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    /// Euclidean norm of each cell vector.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.vectors.iter().map(|[gx, gy]| gx.hypot(*gy)).collect()
    }
}

/// Cell gradient from the corner values of each cell.
///
/// 1D: `(u[i+1] - u[i]) / h`. 2D: per axis, the average of the two edge
/// differences parallel to that axis. Both are exact for affine functions.
pub fn gradient(u: &GridFunction) -> GradientField {
    let g = u.grid();
    let h = g.spacing();
    let v = u.values();
    let vectors = (0..g.cell_count())
        .map(|c| match g.cell_corners(c) {
            CellCorners::Segment([a, b]) => [(v[b] - v[a]) / h[0], 0.0],
            CellCorners::Square([n00, n10, n01, n11]) => [
                ((v[n10] - v[n00]) + (v[n11] - v[n01])) / (2.0 * h[0]),
                ((v[n01] - v[n00]) + (v[n11] - v[n10])) / (2.0 * h[1]),
            ],
        })
        .collect();
    GradientField {
        grid: g.clone(),
        vectors,
    }
}
