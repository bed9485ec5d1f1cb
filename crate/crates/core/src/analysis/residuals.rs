use serde::Serialize;

use crate::error::{MfgError, Result};
use crate::functionals::{gather, hj_operator};
use crate::grid::{continuity_residual, discrete_gradient, TimeSampling};
use crate::model::ModelSpec;
use crate::solver::SolutionBundle;

/// Relative threshold defining the support `{m > 1e-10 max m}`.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

/// How far a bundle is from being a discrete weak solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `max (-d_t phi + H(x, D phi) - f(x, m))_+` over cells with `m > eps_m`.
    pub hj_violation_support: f64,
    /// Same positive part over all cells.
    pub hj_violation_global: f64,
    /// Absolute error in the integral identity.
    pub identity_gap: f64,
    /// Max over time cells of the L1 continuity residual.
    pub continuity_residual: f64,
    /// `max (phi(T) - phi_T)_+`.
    pub terminal_violation: f64,
    /// `h_t h^d sum |alpha - f(x, m)|` over cells with `m > eps_m`.
    pub complementarity: f64,
    pub support_threshold: f64,
}

impl ResidualReport {
    pub fn max_entry(&self) -> f64 {
        [
            self.hj_violation_support,
            self.hj_violation_global,
            self.identity_gap,
            self.continuity_residual,
            self.terminal_violation,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates the weak-solution conditions on `bundle`.
///
/// The identity compares
/// `sum m (H - <D phi, D_pH> - f(m)) h_t h^d` with `sum (phi_T m(T) - phi(0) m0) h^d`,
/// where `m(T)` is the last time cell.
pub fn weak_solution_residuals(bundle: &SolutionBundle, model: &ModelSpec) -> Result<ResidualReport> {
    let grid = bundle.grid;
    model.validate(&grid)?;
    if bundle.phi.grid() != &grid || bundle.m.grid() != &grid {
        return Err(MfgError::ShapeMismatch("bundle fields live on different grids".into()));
    }
    let n = grid.n_space();
    let d = grid.dim();
    let m = bundle.m.values();
    let eps = SUPPORT_THRESHOLD * m.iter().copied().fold(0.0, f64::max);
    let hj = hj_operator(&bundle.phi, model)?;
    let grad = discrete_gradient(&bundle.phi, TimeSampling::Lagged)?;

    let mut support = 0.0_f64;
    let mut global = 0.0_f64;
    let mut compl = 0.0;
    let mut running = 0.0;
    let mut p = vec![0.0; d];
    let mut dp = vec![0.0; d];
    for k in 0..grid.n_t() {
        let faces = grad.cell(k);
        for i in 0..n {
            let c = k * n + i;
            let f = model.coupling.f(i, m[c]);
            let excess = hj.values()[c] - f;
            global = global.max(excess.max(0.0));
            if m[c] > eps {
                support = support.max(excess.max(0.0));
                compl += (bundle.alpha.values()[c] - f).abs();
            }
            if m[c] != 0.0 {
                gather(faces, n, i, &mut p);
                model.hamiltonian.gradient(i, &p, &mut dp);
                let pairing: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
                running += m[c] * (model.hamiltonian.value(i, &p) - pairing - f);
            }
        }
    }
    let last = bundle.m.slice(grid.n_t() - 1);
    let boundary: f64 = (0..n)
        .map(|i| model.phi_terminal[i] * last[i] - bundle.phi.slice(0)[i] * bundle.m0[i])
        .sum();
    let identity_gap = (running * grid.space_time_volume() - boundary * grid.cell_volume()).abs();

    let terminal_violation = bundle
        .phi
        .slice(grid.n_t())
        .iter()
        .zip(&model.phi_terminal)
        .map(|(a, b)| (a - b).max(0.0))
        .fold(0.0, f64::max);
    let cont = continuity_residual(&bundle.m, &bundle.w, &bundle.m0)?;

    Ok(ResidualReport {
        hj_violation_support: support,
        hj_violation_global: global,
        identity_gap,
        continuity_residual: cont.max_l1,
        terminal_violation,
        complementarity: compl * grid.space_time_volume(),
        support_threshold: eps,
    })
}
