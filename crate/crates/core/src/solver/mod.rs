//! Primal-dual solvers for the time-dependent and the ergodic problem.
//!
//! The iteration is Chambolle-Pock on `min_phi G(K phi) + l(phi)`; each step
//! yields a primal `phi` (hence `alpha = -d_t phi + H(x, D phi)`) and a dual
//! `(m, w)`, so the duality gap `A + B` is available as a live certificate.

mod engine;
mod ergodic;
pub mod prox;
mod time_dependent;

use serde::{Deserialize, Serialize};

use crate::error::{MfgError, Result};
use crate::functionals::hj_operator;
use crate::grid::{Grid, Placement, ScalarField, VectorField};
use crate::model::{check_assumptions, AssumptionReport, ModelSpec};

pub use ergodic::solve_ergodic;
pub use prox::{prox_primal_point, InnerTolerance};
pub use time_dependent::{estimate_operator_norm, solve_time_dependent, solve_time_dependent_from, InitialGuess};

/// Knobs of the primal-dual iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Relative gap target: `|A + B| <= tol_gap (1 + |A| + |B|)`.
    pub tol_gap: f64,
    /// Bound on the L1 continuity residual (time-dependent) or `||div w||_1` (ergodic).
    pub tol_feas: f64,
    /// Primal step; `None` means `0.9 / ||K||`.
    pub primal_step: Option<f64>,
    /// Dual step; `None` means `0.9 / ||K||`.
    pub dual_step: Option<f64>,
    /// Over-relaxation in `[0, 1]`.
    pub theta: f64,
    pub prox_inner_tol: f64,
    pub prox_inner_max_iters: usize,
    pub rng_seed: u64,
    /// Amplitude of the seeded perturbation applied to the initial iterate.
    pub init_noise: f64,
    /// Gap and residuals are evaluated every `check_every` iterations.
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol_gap: 1e-4,
            tol_feas: 1e-3,
            primal_step: None,
            dual_step: None,
            theta: 1.0,
            prox_inner_tol: 1e-12,
            prox_inner_max_iters: 200,
            rng_seed: 0,
            init_noise: 1e-3,
            check_every: 50,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MfgError::InvalidModel(msg));
        if self.max_iters == 0 || self.check_every == 0 || self.prox_inner_max_iters == 0 {
            return bad("iteration counts must be positive".into());
        }
        for (name, v) in [
            ("tol_gap", self.tol_gap),
            ("tol_feas", self.tol_feas),
            ("prox_inner_tol", self.prox_inner_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !(self.init_noise.is_finite() && self.init_noise >= 0.0) {
            return bad("init_noise must be nonnegative".into());
        }
        for step in [self.primal_step, self.dual_step].into_iter().flatten() {
            if !(step.is_finite() && step > 0.0) {
                return bad(format!("step sizes must be positive, got {step}"));
            }
        }
        Ok(())
    }

    pub(crate) fn inner(&self) -> InnerTolerance {
        InnerTolerance {
            tol: self.prox_inner_tol,
            max_iters: self.prox_inner_max_iters,
        }
    }

    /// Resolves default steps and enforces `primal * dual * ||K||^2 <= 1`.
    pub(crate) fn steps(&self, norm: f64) -> Result<(f64, f64)> {
        let tau = self.primal_step.unwrap_or(0.9 / norm);
        let sigma = self.dual_step.unwrap_or(0.9 / norm);
        if tau * sigma * norm * norm > 1.0 + 1e-12 {
            return Err(MfgError::InvalidModel(format!(
                "step sizes violate primal * dual * ||K||^2 <= 1 ({tau:e} * {sigma:e} * {norm:e}^2)"
            )));
        }
        Ok((tau, sigma))
    }
}

/// One row of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRecord {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    /// `A + B`.
    pub gap: f64,
    /// `|A + B| / (1 + |A| + |B|)`.
    pub relative_gap: f64,
    /// Continuity residual (time-dependent) or `||div w||_1` (ergodic).
    pub feasibility: f64,
    pub mass_drift: f64,
}

impl GapRecord {
    pub(crate) fn new(iteration: usize, primal: f64, dual: f64, feasibility: f64, mass_drift: f64) -> Self {
        let gap = primal + dual;
        Self {
            iteration,
            primal,
            dual,
            gap,
            relative_gap: gap.abs() / (1.0 + primal.abs() + dual.abs()),
            feasibility,
            mass_drift,
        }
    }

    pub fn meets(&self, opts: &SolverOptions) -> bool {
        self.relative_gap <= opts.tol_gap && self.feasibility <= opts.tol_feas
    }
}

/// Output of [`solve_time_dependent`].
#[derive(Debug, Clone)]
pub struct SolutionBundle {
    pub grid: Grid,
    pub phi: ScalarField,
    /// `-d_t phi + H(x, D phi)`, the relaxed control paired with `phi`.
    pub alpha: ScalarField,
    pub m: ScalarField,
    pub w: VectorField,
    /// Initial density the solve was run with.
    pub m0: Vec<f64>,
    pub history: Vec<GapRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub operator_norm: f64,
    pub assumptions: AssumptionReport,
}

impl SolutionBundle {
    /// Wraps externally produced fields (a fixture or an exact solution) into a
    /// bundle whose single history row is evaluated on those fields.
    pub fn from_fields(model: &ModelSpec, phi: ScalarField, m: ScalarField, w: VectorField) -> Result<Self> {
        let grid = *phi.grid();
        model.validate(&grid)?;
        phi.expect_placement(Placement::TimeNode)?;
        m.expect_placement(Placement::TimeCell)?;
        if m.grid() != &grid || w.grid() != &grid {
            return Err(MfgError::ShapeMismatch("phi, m and w live on different grids".into()));
        }
        let assumptions = check_assumptions(model, grid.dim())?;
        let record = time_dependent::evaluate(&grid, model, 0, phi.values(), m.values(), w.values())?;
        Ok(Self {
            grid,
            alpha: hj_operator(&phi, model)?,
            phi,
            m,
            w,
            m0: model.m0.clone(),
            history: vec![record],
            iterations: 0,
            converged: record.meets(&SolverOptions::default()),
            operator_norm: estimate_operator_norm(&grid),
            assumptions,
        })
    }

    /// The record evaluated on the returned fields.
    pub fn last(&self) -> &GapRecord {
        self.history.last().expect("history holds the final evaluation")
    }

    /// Turns a non-converged bundle into [`MfgError::NonConvergence`].
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            let last = *self.last();
            Err(MfgError::NonConvergence {
                iterations: self.iterations,
                relative_gap: last.relative_gap,
                feasibility: last.feasibility,
            })
        }
    }
}

/// Output of [`solve_ergodic`].
#[derive(Debug, Clone)]
pub struct ErgodicSolution {
    pub grid: Grid,
    pub lambda: f64,
    pub phi: Vec<f64>,
    pub m: Vec<f64>,
    pub w: Vec<f64>,
    pub history: Vec<GapRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub operator_norm: f64,
    pub assumptions: AssumptionReport,
}

impl ErgodicSolution {
    pub fn last(&self) -> &GapRecord {
        self.history.last().expect("history holds the final evaluation")
    }

    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            let last = *self.last();
            Err(MfgError::NonConvergence {
                iterations: self.iterations,
                relative_gap: last.relative_gap,
                feasibility: last.feasibility,
            })
        }
    }
}
