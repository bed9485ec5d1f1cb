//! Discrete objectives of the two pairs of problems in duality.
//!
//! All integrals are midpoint sums on the staggered grid. The discrete
//! Hamilton-Jacobi operator on time cell `k` is
//! `-(phi_{k+1} - phi_k) / h_t + H(x, D phi_k)`, which is paired with the
//! cell density `m_k` and the face flux `w_k`; its exact transpose is the
//! continuity equation of [`crate::grid::continuity_residual`].

use crate::error::{MfgError, Result};
use crate::grid::{discrete_gradient, Grid, Placement, ScalarField, TimeSampling, VectorField};
use crate::model::ModelSpec;

/// Relaxed primal unknown `(phi, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalState {
    pub phi: ScalarField,
    pub alpha: ScalarField,
}

impl PrimalState {
    /// `(phi, alpha)` with `alpha` the HJ operator of `phi`, the tightest admissible choice.
    pub fn tight(phi: ScalarField, model: &ModelSpec) -> Result<Self> {
        let alpha = hj_operator(&phi, model)?;
        Ok(Self { phi, alpha })
    }

    /// `max (HJ(phi) - alpha)_+`: how far the pair is from the relaxed set.
    pub fn constraint_violation(&self, model: &ModelSpec) -> Result<f64> {
        let hj = hj_operator(&self.phi, model)?;
        Ok(hj
            .values()
            .iter()
            .zip(self.alpha.values())
            .map(|(h, a)| (h - a).max(0.0))
            .fold(0.0, f64::max))
    }
}

/// Dual unknown `(m, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub m: ScalarField,
    pub w: VectorField,
}

/// Stationary unknowns `(lambda, phi, m, w)` on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicState {
    pub lambda: f64,
    pub phi: Vec<f64>,
    pub m: Vec<f64>,
    /// `d` blocks of `n_x^d` face values.
    pub w: Vec<f64>,
}

/// `m L(x, w / m)` with the conventions at `m = 0`.
pub fn perspective_kinetic(model: &ModelSpec, i: usize, m: f64, w: &[f64]) -> f64 {
    model.hamiltonian.perspective(i, m, w)
}

/// Gathers the `d` face components of point `i` from a block-laid-out face array.
#[inline]
pub(crate) fn gather(faces: &[f64], n: usize, i: usize, out: &mut [f64]) {
    for (a, o) in out.iter_mut().enumerate() {
        *o = faces[a * n + i];
    }
}

/// Discrete `-d_t phi + H(x, D phi)` on time cells.
pub fn hj_operator(phi: &ScalarField, model: &ModelSpec) -> Result<ScalarField> {
    phi.expect_placement(Placement::TimeNode)?;
    let grid = *phi.grid();
    let grad = discrete_gradient(phi, TimeSampling::Lagged)?;
    let n = grid.n_space();
    let inv_ht = 1.0 / grid.h_t();
    let mut out = ScalarField::zeros(grid, Placement::TimeCell);
    let mut p = vec![0.0; grid.dim()];
    for k in 0..grid.n_t() {
        let (now, next) = (phi.slice(k), phi.slice(k + 1));
        let faces = grad.cell(k);
        for (i, o) in out.slice_mut(k).iter_mut().enumerate() {
            gather(faces, n, i, &mut p);
            *o = -(next[i] - now[i]) * inv_ht + model.hamiltonian.value(i, &p);
        }
    }
    Ok(out)
}

fn check_terminal(phi: &ScalarField, model: &ModelSpec) -> Result<()> {
    let last = phi.slice(phi.grid().n_t());
    let worst = last
        .iter()
        .zip(&model.phi_terminal)
        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(MfgError::TerminalMismatch(worst));
    }
    Ok(())
}

fn initial_pairing(phi: &ScalarField, model: &ModelSpec) -> f64 {
    let grid = phi.grid();
    phi.slice(0).iter().zip(&model.m0).map(|(p, m)| p * m).sum::<f64>() * grid.cell_volume()
}

fn relaxed_value(phi: &ScalarField, alpha: &ScalarField, model: &ModelSpec) -> f64 {
    let grid = phi.grid();
    let n = grid.n_space();
    let running: f64 = alpha
        .values()
        .iter()
        .enumerate()
        .map(|(c, &a)| model.coupling.conjugate(c % n, a))
        .sum();
    running * grid.space_time_volume() - initial_pairing(phi, model)
}

/// Primal objective `A(phi)`; `phi` must match `phi_T` on the last node.
pub fn eval_primal_a(phi: &ScalarField, model: &ModelSpec) -> Result<f64> {
    check_terminal(phi, model)?;
    let alpha = hj_operator(phi, model)?;
    Ok(relaxed_value(phi, &alpha, model))
}

/// Relaxed objective `A(phi, alpha)`.
pub fn eval_relaxed_a(state: &PrimalState, model: &ModelSpec) -> Result<f64> {
    state.phi.expect_placement(Placement::TimeNode)?;
    state.alpha.expect_placement(Placement::TimeCell)?;
    if state.phi.grid() != state.alpha.grid() {
        return Err(MfgError::ShapeMismatch("phi and alpha live on different grids".into()));
    }
    check_terminal(&state.phi, model)?;
    Ok(relaxed_value(&state.phi, &state.alpha, model))
}

fn check_dual_shapes(m: &ScalarField, w: &VectorField) -> Result<()> {
    m.expect_placement(Placement::TimeCell)?;
    if m.grid() != w.grid() {
        return Err(MfgError::ShapeMismatch("m and w live on different grids".into()));
    }
    Ok(())
}

/// Dual objective `B(m, w)`, `+inf` if any cell carries flux without mass.
pub fn eval_dual_b(state: &DualState, model: &ModelSpec) -> Result<f64> {
    check_dual_shapes(&state.m, &state.w)?;
    let grid = *state.m.grid();
    let n = grid.n_space();
    let mut w = vec![0.0; grid.dim()];
    let mut running = 0.0;
    for k in 0..grid.n_t() {
        let faces = state.w.cell(k);
        for (i, &m) in state.m.slice(k).iter().enumerate() {
            gather(faces, n, i, &mut w);
            running += perspective_kinetic(model, i, m, &w) + model.coupling.primitive(i, m);
        }
    }
    if running == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let terminal: f64 = state
        .m
        .slice(grid.n_t() - 1)
        .iter()
        .zip(&model.phi_terminal)
        .map(|(m, p)| m * p)
        .sum();
    Ok(terminal * grid.cell_volume() + running * grid.space_time_volume())
}

/// Number of cells where the dual integrand is `+inf`.
pub fn count_infinite_cells(state: &DualState, model: &ModelSpec) -> Result<usize> {
    check_dual_shapes(&state.m, &state.w)?;
    let grid = *state.m.grid();
    let n = grid.n_space();
    let mut w = vec![0.0; grid.dim()];
    let mut count = 0;
    for k in 0..grid.n_t() {
        for (i, &m) in state.m.slice(k).iter().enumerate() {
            gather(state.w.cell(k), n, i, &mut w);
            let v = perspective_kinetic(model, i, m, &w) + model.coupling.primitive(i, m);
            count += usize::from(v == f64::INFINITY);
        }
    }
    Ok(count)
}

/// `A(phi, alpha) + B(m, w)`; nonnegative for feasible pairs.
pub fn duality_gap(primal: &PrimalState, dual: &DualState, model: &ModelSpec) -> Result<f64> {
    Ok(eval_relaxed_a(primal, model)? + eval_dual_b(dual, model)?)
}

fn check_spatial(grid: &Grid, len: usize, what: &str, per_point: usize) -> Result<()> {
    let want = grid.n_space() * per_point;
    if len != want {
        return Err(MfgError::ShapeMismatch(format!(
            "{what} needs {want} values, got {len}"
        )));
    }
    Ok(())
}

/// Ergodic primal objective `sum F*(x, lambda + H(x, D phi)) h^d - lambda`.
pub fn eval_ergodic_a(lambda: f64, phi: &[f64], model: &ModelSpec, grid: &Grid) -> Result<f64> {
    check_spatial(grid, phi.len(), "phi", 1)?;
    let n = grid.n_space();
    let mut grad = vec![0.0; n * grid.dim()];
    grid.stencil().gradient(phi, &mut grad);
    let mut p = vec![0.0; grid.dim()];
    let total: f64 = (0..n)
        .map(|i| {
            gather(&grad, n, i, &mut p);
            model.coupling.conjugate(i, lambda + model.hamiltonian.value(i, &p))
        })
        .sum();
    Ok(total * grid.cell_volume() - lambda)
}

/// Ergodic dual objective `sum m H*(x, -w/m) + F(x, m) h^d`.
pub fn eval_ergodic_b(m: &[f64], w: &[f64], model: &ModelSpec, grid: &Grid) -> Result<f64> {
    check_spatial(grid, m.len(), "m", 1)?;
    check_spatial(grid, w.len(), "w", grid.dim())?;
    let n = grid.n_space();
    let mut wi = vec![0.0; grid.dim()];
    let total: f64 = (0..n)
        .map(|i| {
            gather(w, n, i, &mut wi);
            perspective_kinetic(model, i, m[i], &wi) + model.coupling.primitive(i, m[i])
        })
        .sum();
    Ok(total * grid.cell_volume())
}
