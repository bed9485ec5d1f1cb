use std::time::Instant;

use serde::Serialize;

use super::oracle::ErgodicReference;
use crate::error::{MfgError, Result};
use crate::grid::{Grid, Placement, ScalarField};
use crate::model::ModelSpec;
use crate::solver::{estimate_operator_norm, solve_time_dependent, SolverOptions};

/// The `psi` comparison skips `s <= PSI_CUTOFF`.
pub const PSI_CUTOFF: f64 = 0.1;

/// Reindexes a field on `(0, T)` onto `(0, 1)`: `psi(s, x) = phi(sT, x)`.
pub fn rescale_to_unit_time(field: &ScalarField) -> Result<ScalarField> {
    let grid = field.grid().with_time(field.grid().n_t(), 1.0)?;
    ScalarField::from_values(grid, field.placement(), field.values().to_vec())
}

/// Linear interpolation of `field` onto `n_t` uniform time slices over the same horizon.
pub fn resample_time(field: &ScalarField, n_t: usize) -> Result<ScalarField> {
    let src = *field.grid();
    let grid = src.with_time(n_t, src.horizon())?;
    let placement = field.placement();
    let (from, to) = (placement.slices(&src), placement.slices(&grid));
    if from == to {
        return ScalarField::from_values(grid, placement, field.values().to_vec());
    }
    let at = |g: &Grid, k: usize| match placement {
        Placement::TimeNode => g.time_node(k),
        Placement::TimeCell => g.time_cell_center(k),
    };
    let mut out = ScalarField::zeros(grid, placement);
    for k in 0..to {
        let t = at(&grid, k);
        let pos = ((t - at(&src, 0)) / src.h_t()).clamp(0.0, (from - 1) as f64);
        let j = (pos.floor() as usize).min(from.saturating_sub(2));
        let frac = if from > 1 { pos - j as f64 } else { 0.0 };
        let lo = field.slice(j);
        let hi = field.slice((j + 1).min(from - 1));
        for (o, (a, b)) in out.slice_mut(k).iter_mut().zip(lo.iter().zip(hi)) {
            *o = a + frac * (b - a);
        }
    }
    Ok(out)
}

/// Errors of one horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonRow {
    pub horizon: f64,
    pub n_t: usize,
    pub mu_error: f64,
    pub psi_error: f64,
    pub mu_error_l2: f64,
    pub psi_error_l2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub relative_gap: f64,
    pub seconds: f64,
}

/// Long-time behaviour of `mu^T(s) = m(sT)` and `psi^T(s) = phi(sT)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongTimeReport {
    pub horizons: Vec<f64>,
    /// `||mu^T - m_bar||` in `L1((0,1) x torus)`.
    pub mu_errors: Vec<f64>,
    /// `||psi^T / T - lambda_bar (1 - s)||` in `L1((PSI_CUTOFF,1) x torus)`.
    pub psi_errors: Vec<f64>,
    pub rows: Vec<HorizonRow>,
    /// Least-squares slope of `ln error` against `ln T`.
    pub mu_slope: Option<f64>,
    pub psi_slope: Option<f64>,
    pub lambda_bar: f64,
    pub psi_cutoff: f64,
    /// False if any horizon stopped at `max_iters`.
    pub all_converged: bool,
}

/// Least-squares slope of `ln y` against `ln x`; `None` unless all values are positive and finite.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solves the time-dependent problem for every horizon at the fixed time step
/// `template.h_t()` and compares the rescaled solutions with `reference`.
///
/// When `opts` leaves both steps unset, each horizon uses steps balanced for
/// the expected sizes of `phi` and `m`; the product bound is unchanged.
///
/// Horizons must be positive, increasing and multiples of `h_t`.
pub fn long_time_experiment(
    model: &ModelSpec,
    template: &Grid,
    horizons: &[f64],
    reference: &ErgodicReference,
    opts: &SolverOptions,
) -> Result<LongTimeReport> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] <= 0.0 {
        return Err(MfgError::InvalidModel(
            "horizons must be positive and increasing".into(),
        ));
    }
    if reference.m.len() != template.n_space() {
        return Err(MfgError::ShapeMismatch(
            "ergodic reference does not match the grid".into(),
        ));
    }
    let h_t = template.h_t();
    let mut rows = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let steps = horizon / h_t;
        let n_t = steps.round() as usize;
        if n_t == 0 || (steps - n_t as f64).abs() > 1e-9 * steps {
            return Err(MfgError::InvalidGrid(format!(
                "horizon {horizon} is not a multiple of h_t = {h_t}"
            )));
        }
        let grid = template.with_time(n_t, horizon)?;
        let start = Instant::now();
        let bundle = solve_time_dependent(model, &grid, &balanced_steps(opts, &grid, reference))?;
        let seconds = start.elapsed().as_secs_f64();
        let mu = rescale_to_unit_time(&bundle.m)?;
        let psi = rescale_to_unit_time(&bundle.phi)?;
        let (mu_error, mu_error_l2) = mu_distance(&mu, &reference.m);
        let (psi_error, psi_error_l2) = psi_distance(&psi, horizon, reference.lambda);
        rows.push(HorizonRow {
            horizon,
            n_t,
            mu_error,
            psi_error,
            mu_error_l2,
            psi_error_l2,
            iterations: bundle.iterations,
            converged: bundle.converged,
            relative_gap: bundle.last().relative_gap,
            seconds,
        });
    }
    let mu_errors: Vec<f64> = rows.iter().map(|r| r.mu_error).collect();
    let psi_errors: Vec<f64> = rows.iter().map(|r| r.psi_error).collect();
    Ok(LongTimeReport {
        horizons: horizons.to_vec(),
        mu_slope: log_log_slope(horizons, &mu_errors),
        psi_slope: log_log_slope(horizons, &psi_errors),
        all_converged: rows.iter().all(|r| r.converged),
        mu_errors,
        psi_errors,
        rows,
        lambda_bar: reference.lambda,
        psi_cutoff: PSI_CUTOFF,
    })
}

/// Unless the caller fixed the steps, picks `primal / dual = gamma^2` with
/// `gamma = ||phi|| / ||m||` estimated from the stationary profile
/// (`phi ~ lambda (T - t)`, `m ~ m_bar`) and `primal * dual = (0.9 / ||K||)^2`.
fn balanced_steps(opts: &SolverOptions, grid: &Grid, reference: &ErgodicReference) -> SolverOptions {
    let mut opts = opts.clone();
    if opts.primal_step.is_some() || opts.dual_step.is_some() {
        return opts;
    }
    let m_norm = (reference.m.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume()).sqrt();
    let gamma = (reference.lambda.abs() * grid.horizon() / (3f64.sqrt() * m_norm)).max(1.0);
    let base = 0.9 / estimate_operator_norm(grid);
    opts.primal_step = Some(base * gamma);
    opts.dual_step = Some(base / gamma);
    opts
}

/// L1 and L2 distances of a unit-time cell field from a stationary profile.
fn mu_distance(mu: &ScalarField, m_bar: &[f64]) -> (f64, f64) {
    let vol = mu.grid().space_time_volume();
    let (mut l1, mut l2) = (0.0, 0.0);
    for k in 0..mu.n_slices() {
        for (a, b) in mu.slice(k).iter().zip(m_bar) {
            l1 += (a - b).abs();
            l2 += (a - b) * (a - b);
        }
    }
    (l1 * vol, (l2 * vol).sqrt())
}

/// L1 and L2 distances of `psi / T` from `lambda (1 - s)` over nodes with `s` in `(PSI_CUTOFF, 1)`.
fn psi_distance(psi: &ScalarField, horizon: f64, lambda: f64) -> (f64, f64) {
    let grid = psi.grid();
    let vol = grid.space_time_volume();
    let (mut l1, mut l2) = (0.0, 0.0);
    for j in 1..grid.n_t() {
        let s = grid.time_node(j);
        if s <= PSI_CUTOFF {
            continue;
        }
        let target = lambda * (1.0 - s);
        for v in psi.slice(j) {
            let e = v / horizon - target;
            l1 += e.abs();
            l2 += e * e;
        }
    }
    (l1 * vol, (l2 * vol).sqrt())
}
