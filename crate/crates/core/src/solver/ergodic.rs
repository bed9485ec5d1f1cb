use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::engine::{self, Iterate, SaddleProblem, Steps};
use super::{ErgodicSolution, GapRecord, SolverOptions};
use crate::error::Result;
use crate::functionals::{eval_ergodic_a, eval_ergodic_b};
use crate::grid::{Grid, Stencil};
use crate::model::{check_assumptions, ModelSpec};

/// Primal unknown `x = (lambda, phi)`, `K x = (-lambda, D phi)` per point and
/// `l(x) = -lambda`. The metric weighs `lambda` by 1 and `phi` by `h^d`.
struct ErgodicProblem {
    grid: Grid,
    stencil: Stencil,
}

impl SaddleProblem for ErgodicProblem {
    fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    fn n_slices(&self) -> usize {
        1
    }

    fn primal_len(&self) -> usize {
        1 + self.grid.n_space()
    }

    fn primal_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        x[0] * y[0] + self.grid.cell_volume() * crate::grid::plain_dot(&x[1..], &y[1..])
    }

    fn apply(&self, x: &[f64], a: &mut [f64], b: &mut [f64]) {
        a.iter_mut().for_each(|v| *v = -x[0]);
        self.stencil.gradient(&x[1..], b);
    }

    fn apply_adjoint(&self, m: &[f64], w: &[f64], out: &mut [f64]) {
        out[0] = -self.grid.cell_volume() * m.iter().sum::<f64>();
        self.stencil.divergence(w, &mut out[1..]);
        out[1..].iter_mut().for_each(|v| *v = -*v);
    }

    fn prox_primal(&self, x: &mut [f64], tau: f64) {
        x[0] += tau;
    }
}

fn evaluate(
    grid: &Grid,
    stencil: &Stencil,
    model: &ModelSpec,
    iteration: usize,
    x: &[f64],
    m: &[f64],
    w: &[f64],
) -> Result<GapRecord> {
    let primal = eval_ergodic_a(x[0], &x[1..], model, grid)?;
    let dual = eval_ergodic_b(m, w, model, grid)?;
    let mut div = vec![0.0; grid.n_space()];
    stencil.divergence(w, &mut div);
    let vol = grid.cell_volume();
    let div_l1 = div.iter().map(|v| v.abs()).sum::<f64>() * vol;
    let drift = (m.iter().sum::<f64>() * vol - 1.0).abs();
    Ok(GapRecord::new(iteration, primal, dual, div_l1, drift))
}

/// Solves the ergodic pair `min A(lambda, phi) = -min B(m, w)` on the spatial part of `grid`.
///
/// The returned density is rescaled to unit mass; `phi` is normalized to zero mean.
pub fn solve_ergodic(model: &ModelSpec, grid: &Grid, opts: &SolverOptions) -> Result<ErgodicSolution> {
    opts.validate()?;
    model.validate(grid)?;
    let assumptions = check_assumptions(model, grid.dim())?;
    let n = grid.n_space();
    let problem = ErgodicProblem {
        grid: *grid,
        stencil: grid.stencil(),
    };
    let norm = engine::operator_norm(&problem, opts.rng_seed ^ 0x5eed);
    let (tau, sigma) = opts.steps(norm)?;
    let steps = Steps {
        primal: tau,
        dual: sigma,
        theta: opts.theta,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut x = vec![0.0; 1 + n];
    for v in &mut x[1..] {
        *v = engine::noise(&mut rng, opts.init_noise);
    }
    let m = (0..n).map(|_| 1.0 + engine::noise(&mut rng, opts.init_noise)).collect();
    let mut it = Iterate::new(x, m, vec![0.0; n * grid.dim()]);

    let inner = opts.inner();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        engine::step(&problem, model, &mut it, steps, inner)?;
        iterations += 1;
        if iterations % opts.check_every == 0 || iterations == opts.max_iters {
            let rec = evaluate(grid, &problem.stencil, model, iterations, &it.x, &it.m, &it.w)?;
            history.push(rec);
            if rec.meets(opts) {
                converged = true;
                break;
            }
        }
    }

    let vol = grid.cell_volume();
    let mass = it.m.iter().sum::<f64>() * vol;
    if mass > 0.0 {
        it.m.iter_mut().for_each(|v| *v /= mass);
    }
    let mean = it.x[1..].iter().sum::<f64>() / n as f64;
    it.x[1..].iter_mut().for_each(|v| *v -= mean);
    let last = evaluate(grid, &problem.stencil, model, iterations, &it.x, &it.m, &it.w)?;
    converged = converged && last.meets(opts);
    history.push(last);

    Ok(ErgodicSolution {
        grid: *grid,
        lambda: it.x[0],
        phi: it.x[1..].to_vec(),
        m: it.m,
        w: it.w,
        history,
        iterations,
        converged,
        operator_norm: norm,
        assumptions,
    })
}
