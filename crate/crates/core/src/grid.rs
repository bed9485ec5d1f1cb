//! Space-time grids on the unit torus and the staggered difference operators.
//!
//! Layout conventions used throughout the crate:
//!
//! * spatial points are flattened as `i = i0 + n_x * i1` (`d = 2`) and sit at
//!   `x = (i0 * h_x, i1 * h_x)`;
//! * time nodes `k = 0..=n_t` sit at `t = k * h_t`; time cell `k = 0..n_t`
//!   spans nodes `k` and `k + 1`;
//! * a vector field stores, per time cell, `d` blocks of `n_x^d` face values;
//!   component `a` at point `i` lives on the face between `i` and `i + e_a`.
//!
//! The gradient is a forward difference and the divergence a backward
//! difference, so `<grad u, w> = -<u, div w>` holds exactly on the torus.

use serde::{Deserialize, Serialize};

use crate::error::{MfgError, Result};

/// Uniform space-time grid on `[0, T] x T^d` with torus side 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n_x: usize,
    n_t: usize,
    horizon: f64,
}

impl Grid {
    pub fn new(dim: usize, n_x: usize, n_t: usize, horizon: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(MfgError::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n_x < 2 {
            return Err(MfgError::InvalidGrid(format!("n_x must be >= 2, got {n_x}")));
        }
        if n_t < 1 {
            return Err(MfgError::InvalidGrid("n_t must be >= 1".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(MfgError::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self { dim, n_x, n_t, horizon })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn h_x(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn h_t(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    /// Number of spatial points, `n_x^d`.
    pub fn n_space(&self) -> usize {
        self.n_x.pow(self.dim as u32)
    }

    /// Spatial quadrature weight `h_x^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h_x().powi(self.dim as i32)
    }

    /// Space-time quadrature weight `h_t * h_x^d`.
    pub fn space_time_volume(&self) -> f64 {
        self.h_t() * self.cell_volume()
    }

    /// Same spatial discretization, different time partition.
    pub fn with_time(&self, n_t: usize, horizon: f64) -> Result<Self> {
        Self::new(self.dim, self.n_x, n_t, horizon)
    }

    /// Physical coordinates of spatial point `i`.
    pub fn coords(&self, i: usize) -> [f64; 2] {
        let h = self.h_x();
        match self.dim {
            1 => [i as f64 * h, 0.0],
            _ => [(i % self.n_x) as f64 * h, (i / self.n_x) as f64 * h],
        }
    }

    /// Index of the periodic neighbour of `i` one step along `axis` in direction `step` (+1 or -1).
    pub fn neighbor(&self, i: usize, axis: usize, step: isize) -> usize {
        let n = self.n_x;
        let stride = n.pow(axis as u32);
        let along = (i / stride) % n;
        let moved = (along as isize + step).rem_euclid(n as isize) as usize;
        i - along * stride + moved * stride
    }

    pub fn stencil(&self) -> Stencil {
        Stencil::new(self)
    }

    pub fn time_node(&self, k: usize) -> f64 {
        k as f64 * self.h_t()
    }

    pub fn time_cell_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h_t()
    }
}

/// Precomputed periodic neighbour tables for the hot loops.
#[derive(Debug, Clone)]
pub struct Stencil {
    dim: usize,
    inv_h: f64,
    forward: Vec<Vec<usize>>,
    backward: Vec<Vec<usize>>,
}

impl Stencil {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n_space();
        let forward = (0..grid.dim())
            .map(|a| (0..n).map(|i| grid.neighbor(i, a, 1)).collect())
            .collect();
        let backward = (0..grid.dim())
            .map(|a| (0..n).map(|i| grid.neighbor(i, a, -1)).collect())
            .collect();
        Self {
            dim: grid.dim(),
            inv_h: grid.n_x() as f64,
            forward,
            backward,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_space(&self) -> usize {
        self.forward[0].len()
    }

    /// Forward-difference gradient; `out` holds `d` blocks of `n_space` values.
    pub fn gradient(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n_space();
        debug_assert_eq!(u.len(), n);
        debug_assert_eq!(out.len(), n * self.dim);
        for (a, fwd) in self.forward.iter().enumerate() {
            let block = &mut out[a * n..(a + 1) * n];
            for ((o, &j), &ui) in block.iter_mut().zip(fwd).zip(u) {
                *o = (u[j] - ui) * self.inv_h;
            }
        }
    }

    /// Backward-difference divergence, the negative adjoint of [`Stencil::gradient`].
    pub fn divergence(&self, w: &[f64], out: &mut [f64]) {
        let n = self.n_space();
        debug_assert_eq!(w.len(), n * self.dim);
        debug_assert_eq!(out.len(), n);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (a, bwd) in self.backward.iter().enumerate() {
            let block = &w[a * n..(a + 1) * n];
            for ((o, &j), &wi) in out.iter_mut().zip(bwd).zip(block) {
                *o += (wi - block[j]) * self.inv_h;
            }
        }
    }
}

/// Where a scalar field lives in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    /// `n_t + 1` slices, one per time node (value function).
    TimeNode,
    /// `n_t` slices, one per time cell (density, relaxed control).
    TimeCell,
}

impl Placement {
    pub fn name(self) -> &'static str {
        match self {
            Placement::TimeNode => "time-node",
            Placement::TimeCell => "time-cell",
        }
    }

    pub fn slices(self, grid: &Grid) -> usize {
        match self {
            Placement::TimeNode => grid.n_t() + 1,
            Placement::TimeCell => grid.n_t(),
        }
    }
}

/// How node values of a value function are sampled on a time cell before spatial differencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeSampling {
    /// Use the earlier bounding node. This is the sampling whose exact
    /// transpose is the continuity equation checked by [`continuity_residual`],
    /// and the one the solvers use.
    Lagged,
    /// Arithmetic mean of the two bounding nodes.
    Averaged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    placement: Placement,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid, placement: Placement) -> Self {
        Self::constant(grid, placement, 0.0)
    }

    pub fn constant(grid: Grid, placement: Placement, value: f64) -> Self {
        let len = placement.slices(&grid) * grid.n_space();
        Self {
            grid,
            placement,
            values: vec![value; len],
        }
    }

    pub fn from_values(grid: Grid, placement: Placement, values: Vec<f64>) -> Result<Self> {
        let len = placement.slices(&grid) * grid.n_space();
        if values.len() != len {
            return Err(MfgError::ShapeMismatch(format!(
                "{} field needs {len} values, got {}",
                placement.name(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            placement,
            values,
        })
    }

    /// Builds a field from `f(t, x)` evaluated at node times or cell centers.
    pub fn from_fn(grid: Grid, placement: Placement, f: impl Fn(f64, [f64; 2]) -> f64) -> Self {
        let n = grid.n_space();
        let mut values = Vec::with_capacity(placement.slices(&grid) * n);
        for k in 0..placement.slices(&grid) {
            let t = match placement {
                Placement::TimeNode => grid.time_node(k),
                Placement::TimeCell => grid.time_cell_center(k),
            };
            values.extend((0..n).map(|i| f(t, grid.coords(i))));
        }
        Self {
            grid,
            placement,
            values,
        }
    }

    /// Replicates a spatial profile on every time slice.
    pub fn replicate(grid: Grid, placement: Placement, profile: &[f64]) -> Result<Self> {
        if profile.len() != grid.n_space() {
            return Err(MfgError::ShapeMismatch(format!(
                "spatial profile needs {} values, got {}",
                grid.n_space(),
                profile.len()
            )));
        }
        let values = profile.repeat(placement.slices(&grid));
        Ok(Self {
            grid,
            placement,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n_slices(&self) -> usize {
        self.placement.slices(&self.grid)
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.grid.n_space();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.grid.n_space();
        &mut self.values[k * n..(k + 1) * n]
    }

    /// Space-time weighted inner product `h_t h_x^d sum u v`.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.expect_same(other)?;
        Ok(self.grid.space_time_volume() * plain_dot(&self.values, &other.values))
    }

    pub fn expect_placement(&self, placement: Placement) -> Result<()> {
        if self.placement != placement {
            return Err(MfgError::PlacementMismatch {
                expected: placement.name(),
                found: self.placement.name(),
            });
        }
        Ok(())
    }

    fn expect_same(&self, other: &ScalarField) -> Result<()> {
        other.expect_placement(self.placement)?;
        if self.grid != other.grid {
            return Err(MfgError::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_t() * grid.dim() * grid.n_space()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let len = grid.n_t() * grid.dim() * grid.n_space();
        if values.len() != len {
            return Err(MfgError::ShapeMismatch(format!(
                "vector field needs {len} values, got {}",
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Builds a field from `f(t, x_face, axis)` evaluated at cell centers and face midpoints.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, [f64; 2], usize) -> f64) -> Self {
        let n = grid.n_space();
        let half = 0.5 * grid.h_x();
        let mut values = Vec::with_capacity(grid.n_t() * grid.dim() * n);
        for k in 0..grid.n_t() {
            let t = grid.time_cell_center(k);
            for a in 0..grid.dim() {
                values.extend((0..n).map(|i| {
                    let mut x = grid.coords(i);
                    x[a] += half;
                    f(t, x, a)
                }));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// All `d` components of time cell `k`.
    pub fn cell(&self, k: usize) -> &[f64] {
        let len = self.grid.dim() * self.grid.n_space();
        &self.values[k * len..(k + 1) * len]
    }

    pub fn cell_mut(&mut self, k: usize) -> &mut [f64] {
        let len = self.grid.dim() * self.grid.n_space();
        &mut self.values[k * len..(k + 1) * len]
    }

    /// Face-pairing `h_t h_x^d sum <v, w>`.
    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(MfgError::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(self.grid.space_time_volume() * plain_dot(&self.values, &other.values))
    }
}

pub(crate) fn plain_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Staggered spatial gradient of a node-placed field, one value per time cell.
pub fn discrete_gradient(phi: &ScalarField, sampling: TimeSampling) -> Result<VectorField> {
    phi.expect_placement(Placement::TimeNode)?;
    let grid = *phi.grid();
    let stencil = grid.stencil();
    let n = grid.n_space();
    let mut out = VectorField::zeros(grid);
    let mut sampled = vec![0.0; n];
    for k in 0..grid.n_t() {
        match sampling {
            TimeSampling::Lagged => sampled.copy_from_slice(phi.slice(k)),
            TimeSampling::Averaged => {
                for ((s, a), b) in sampled.iter_mut().zip(phi.slice(k)).zip(phi.slice(k + 1)) {
                    *s = 0.5 * (a + b);
                }
            }
        }
        stencil.gradient(&sampled, out.cell_mut(k));
    }
    Ok(out)
}

/// Backward-difference divergence of a face field, one slice per time cell.
pub fn discrete_divergence(w: &VectorField) -> ScalarField {
    let grid = *w.grid();
    let stencil = grid.stencil();
    let mut out = ScalarField::zeros(grid, Placement::TimeCell);
    for k in 0..grid.n_t() {
        stencil.divergence(w.cell(k), out.slice_mut(k));
    }
    out
}

/// Discrete continuity-equation defect of a density/flux pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityResidual {
    /// `max_k h_x^d sum_i |(m_k - m_{k-1}) / h_t + div w_k|`, with `m_{-1} = m0`.
    pub max_l1: f64,
    /// `|h_x^d sum_i m_k - 1|` per time cell.
    pub mass_drift: Vec<f64>,
}

impl ContinuityResidual {
    pub fn max_mass_drift(&self) -> f64 {
        self.mass_drift.iter().copied().fold(0.0, f64::max)
    }
}

pub fn continuity_residual(m: &ScalarField, w: &VectorField, m0: &[f64]) -> Result<ContinuityResidual> {
    m.expect_placement(Placement::TimeCell)?;
    let grid = *m.grid();
    if *w.grid() != grid {
        return Err(MfgError::ShapeMismatch("m and w live on different grids".into()));
    }
    let n = grid.n_space();
    if m0.len() != n {
        return Err(MfgError::ShapeMismatch(format!(
            "m0 needs {n} values, got {}",
            m0.len()
        )));
    }
    let stencil = grid.stencil();
    let vol = grid.cell_volume();
    let inv_ht = 1.0 / grid.h_t();
    let mut div = vec![0.0; n];
    let mut max_l1: f64 = 0.0;
    let mut mass_drift = Vec::with_capacity(grid.n_t());
    for k in 0..grid.n_t() {
        let prev = if k == 0 { m0 } else { m.slice(k - 1) };
        let cur = m.slice(k);
        stencil.divergence(w.cell(k), &mut div);
        let l1: f64 = cur
            .iter()
            .zip(prev)
            .zip(&div)
            .map(|((c, p), d)| ((c - p) * inv_ht + d).abs())
            .sum::<f64>()
            * vol;
        max_l1 = max_l1.max(l1);
        mass_drift.push((cur.iter().sum::<f64>() * vol - 1.0).abs());
    }
    Ok(ContinuityResidual { max_l1, mass_drift })
}
