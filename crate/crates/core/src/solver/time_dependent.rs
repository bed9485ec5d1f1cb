use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::engine::{self, Iterate, SaddleProblem, Steps};
use super::{GapRecord, SolutionBundle, SolverOptions};
use crate::error::{MfgError, Result};
use crate::functionals::{eval_dual_b, eval_primal_a, hj_operator, DualState};
use crate::grid::{continuity_residual, Grid, Placement, ScalarField, Stencil, VectorField};
use crate::model::{check_assumptions, ModelSpec};

/// `K phi = ((phi_{k+1} - phi_k) / h_t, D phi_k)` on every time cell, with
/// `l(phi) = -h^d sum phi_0 m0` and `phi_{n_t} = phi_T` enforced by the prox.
struct TimeProblem<'a> {
    grid: Grid,
    stencil: Stencil,
    m0: &'a [f64],
    phi_terminal: &'a [f64],
}

impl<'a> TimeProblem<'a> {
    fn new(grid: Grid, m0: &'a [f64], phi_terminal: &'a [f64]) -> Self {
        Self {
            stencil: grid.stencil(),
            grid,
            m0,
            phi_terminal,
        }
    }
}

impl SaddleProblem for TimeProblem<'_> {
    fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    fn n_slices(&self) -> usize {
        self.grid.n_t()
    }

    fn primal_len(&self) -> usize {
        (self.grid.n_t() + 1) * self.grid.n_space()
    }

    fn primal_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.grid.space_time_volume() * crate::grid::plain_dot(x, y)
    }

    fn apply(&self, x: &[f64], a: &mut [f64], b: &mut [f64]) {
        let n = self.grid.n_space();
        let dn = n * self.grid.dim();
        let inv_ht = 1.0 / self.grid.h_t();
        for k in 0..self.grid.n_t() {
            let now = &x[k * n..(k + 1) * n];
            let next = &x[(k + 1) * n..(k + 2) * n];
            for ((o, p), q) in a[k * n..(k + 1) * n].iter_mut().zip(now).zip(next) {
                *o = (q - p) * inv_ht;
            }
            self.stencil.gradient(now, &mut b[k * dn..(k + 1) * dn]);
        }
    }

    fn apply_adjoint(&self, m: &[f64], w: &[f64], out: &mut [f64]) {
        let n = self.grid.n_space();
        let dn = n * self.grid.dim();
        let n_t = self.grid.n_t();
        let inv_ht = 1.0 / self.grid.h_t();
        let mut div = vec![0.0; n];
        for j in 0..=n_t {
            let slot = &mut out[j * n..(j + 1) * n];
            if j < n_t {
                self.stencil.divergence(&w[j * dn..(j + 1) * dn], &mut div);
                let cur = &m[j * n..(j + 1) * n];
                if j > 0 {
                    let prev = &m[(j - 1) * n..j * n];
                    for (((o, p), c), dv) in slot.iter_mut().zip(prev).zip(cur).zip(&div) {
                        *o = (p - c) * inv_ht - dv;
                    }
                } else {
                    for ((o, c), dv) in slot.iter_mut().zip(cur).zip(&div) {
                        *o = -c * inv_ht - dv;
                    }
                }
            } else {
                let prev = &m[(j - 1) * n..j * n];
                for (o, p) in slot.iter_mut().zip(prev) {
                    *o = p * inv_ht;
                }
            }
        }
    }

    fn prox_primal(&self, x: &mut [f64], tau: f64) {
        let n = self.grid.n_space();
        let push = tau / self.grid.h_t();
        for (v, m) in x[..n].iter_mut().zip(self.m0) {
            *v += push * m;
        }
        let last = self.grid.n_t() * n;
        x[last..].copy_from_slice(self.phi_terminal);
    }
}

/// Power-method estimate of the norm of the space-time operator `(d_t, D)`.
pub fn estimate_operator_norm(grid: &Grid) -> f64 {
    let n = grid.n_space();
    let zeros = vec![0.0; n];
    let problem = TimeProblem::new(*grid, &zeros, &zeros);
    engine::operator_norm(&problem, 0x5eed)
}

pub(super) fn evaluate(
    grid: &Grid,
    model: &ModelSpec,
    iteration: usize,
    x: &[f64],
    m: &[f64],
    w: &[f64],
) -> Result<GapRecord> {
    let phi = ScalarField::from_values(*grid, Placement::TimeNode, x.to_vec())?;
    let dual = DualState {
        m: ScalarField::from_values(*grid, Placement::TimeCell, m.to_vec())?,
        w: VectorField::from_values(*grid, w.to_vec())?,
    };
    let primal = eval_primal_a(&phi, model)?;
    let dual_value = eval_dual_b(&dual, model)?;
    let res = continuity_residual(&dual.m, &dual.w, &model.m0)?;
    Ok(GapRecord::new(
        iteration,
        primal,
        dual_value,
        res.max_l1,
        res.max_mass_drift(),
    ))
}

/// Starting point of the iteration; missing parts take the default
/// initialization (seeded noise around `phi = 0`, `m = m0`, `w = 0`).
#[derive(Debug, Clone, Default)]
pub struct InitialGuess {
    pub phi: Option<ScalarField>,
    pub m: Option<ScalarField>,
    pub w: Option<VectorField>,
}

/// Solves the time-dependent pair `inf A = -min B` on `grid`.
///
/// The returned density is rescaled to unit mass on every time cell; the
/// final history row is evaluated on the returned fields.
pub fn solve_time_dependent(model: &ModelSpec, grid: &Grid, opts: &SolverOptions) -> Result<SolutionBundle> {
    solve_time_dependent_from(model, grid, opts, &InitialGuess::default())
}

/// [`solve_time_dependent`] started from `guess`; the terminal node of a
/// supplied `phi` is overwritten with `phi_T`.
pub fn solve_time_dependent_from(
    model: &ModelSpec,
    grid: &Grid,
    opts: &SolverOptions,
    guess: &InitialGuess,
) -> Result<SolutionBundle> {
    opts.validate()?;
    model.validate(grid)?;
    let assumptions = check_assumptions(model, grid.dim())?;
    let n = grid.n_space();
    let n_t = grid.n_t();
    let problem = TimeProblem::new(*grid, &model.m0, &model.phi_terminal);
    let norm = engine::operator_norm(&problem, opts.rng_seed ^ 0x5eed);
    let (tau, sigma) = opts.steps(norm)?;
    let steps = Steps {
        primal: tau,
        dual: sigma,
        theta: opts.theta,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut x = vec![0.0; (n_t + 1) * n];
    for v in &mut x[..n_t * n] {
        *v = engine::noise(&mut rng, opts.init_noise);
    }
    let mut m = Vec::with_capacity(n_t * n);
    for _ in 0..n_t {
        m.extend(
            model
                .m0
                .iter()
                .map(|&v| v * (1.0 + engine::noise(&mut rng, opts.init_noise))),
        );
    }
    let mut w = vec![0.0; n_t * n * grid.dim()];
    if let Some(phi) = &guess.phi {
        check_guess(grid, phi.grid(), "phi")?;
        phi.expect_placement(Placement::TimeNode)?;
        x.copy_from_slice(phi.values());
    }
    if let Some(m_guess) = &guess.m {
        check_guess(grid, m_guess.grid(), "m")?;
        m_guess.expect_placement(Placement::TimeCell)?;
        m.copy_from_slice(m_guess.values());
    }
    if let Some(w_guess) = &guess.w {
        check_guess(grid, w_guess.grid(), "w")?;
        w.copy_from_slice(w_guess.values());
    }
    x[n_t * n..].copy_from_slice(&model.phi_terminal);
    let mut it = Iterate::new(x, m, w);

    let inner = opts.inner();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        engine::step(&problem, model, &mut it, steps, inner)?;
        iterations += 1;
        if iterations % opts.check_every == 0 || iterations == opts.max_iters {
            let rec = evaluate(grid, model, iterations, &it.x, &it.m, &it.w)?;
            history.push(rec);
            if rec.meets(opts) {
                converged = true;
                break;
            }
        }
    }

    normalize_mass(grid, &mut it.m);
    let last = evaluate(grid, model, iterations, &it.x, &it.m, &it.w)?;
    converged = converged && last.meets(opts);
    history.push(last);

    let phi = ScalarField::from_values(*grid, Placement::TimeNode, it.x)?;
    let alpha = hj_operator(&phi, model)?;
    Ok(SolutionBundle {
        grid: *grid,
        phi,
        alpha,
        m: ScalarField::from_values(*grid, Placement::TimeCell, it.m)?,
        w: VectorField::from_values(*grid, it.w)?,
        m0: model.m0.clone(),
        history,
        iterations,
        converged,
        operator_norm: norm,
        assumptions,
    })
}

fn check_guess(grid: &Grid, found: &Grid, name: &str) -> Result<()> {
    if grid != found {
        return Err(MfgError::ShapeMismatch(format!(
            "initial {name} lives on a different grid"
        )));
    }
    Ok(())
}

/// Rescales every time slice of `m` to unit mass.
fn normalize_mass(grid: &Grid, m: &mut [f64]) {
    let vol = grid.cell_volume();
    for slice in m.chunks_mut(grid.n_space()) {
        let mass = slice.iter().sum::<f64>() * vol;
        if mass > 0.0 {
            slice.iter_mut().for_each(|v| *v /= mass);
        }
    }
}
