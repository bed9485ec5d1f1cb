//! Chambolle-Pock iteration shared by the time-dependent and ergodic solvers.
//!
//! Both problems read `min_x G(Kx) + l(x)` where `K` maps the primal unknown
//! to per-cell pairs `(a, b)`, `G` sums `F*(x, -a + H(x, b))` over cells and
//! `l` is linear plus a terminal constraint. The dual variable of the pair
//! `(a, b)` is `(-m, -w)`, so the iterates carry the density and flux directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::Stencil;
use crate::model::ModelSpec;
use crate::solver::prox::{solve_cell, InnerTolerance};

pub(crate) trait SaddleProblem {
    fn stencil(&self) -> &Stencil;
    /// Number of time slices of dual cells (1 for the ergodic problem).
    fn n_slices(&self) -> usize;
    fn primal_len(&self) -> usize;
    fn primal_dot(&self, x: &[f64], y: &[f64]) -> f64;
    /// `(a, b) = K x`; `b` is laid out like `w`.
    fn apply(&self, x: &[f64], a: &mut [f64], b: &mut [f64]);
    /// `K^T (m, w)` in the primal metric.
    fn apply_adjoint(&self, m: &[f64], w: &[f64], out: &mut [f64]);
    /// In-place `prox_{tau l}`.
    fn prox_primal(&self, x: &mut [f64], tau: f64);
}

/// Power-method estimate of `||K||` in the weighted metrics.
pub(crate) fn operator_norm<P: SaddleProblem>(problem: &P, seed: u64) -> f64 {
    let n_cells = problem.n_slices() * problem.stencil().n_space();
    let d = problem.stencil().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..problem.primal_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut a = vec![0.0; n_cells];
    let mut b = vec![0.0; n_cells * d];
    let mut y = vec![0.0; x.len()];
    let mut estimate = 0.0;
    for it in 0..2000 {
        let nx = problem.primal_dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        problem.apply(&x, &mut a, &mut b);
        problem.apply_adjoint(&a, &b, &mut y);
        let next = problem.primal_dot(&x, &y).max(0.0).sqrt();
        let change = (next - estimate).abs() / next.max(f64::MIN_POSITIVE);
        estimate = next;
        std::mem::swap(&mut x, &mut y);
        if it >= 49 && change < 1e-6 {
            break;
        }
    }
    estimate
}

/// Mutable iterate of the primal-dual loop.
pub(crate) struct Iterate {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub w: Vec<f64>,
    x_bar: Vec<f64>,
    x_prev: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    kt: Vec<f64>,
}

impl Iterate {
    pub fn new(x: Vec<f64>, m: Vec<f64>, w: Vec<f64>) -> Self {
        let n = x.len();
        Self {
            x_bar: x.clone(),
            x_prev: vec![0.0; n],
            a: vec![0.0; m.len()],
            b: vec![0.0; w.len()],
            kt: vec![0.0; n],
            x,
            m,
            w,
        }
    }
}

/// Seeded uniform noise in `[-amplitude, amplitude]`.
pub(crate) fn noise(rng: &mut ChaCha8Rng, amplitude: f64) -> f64 {
    if amplitude == 0.0 {
        0.0
    } else {
        amplitude * rng.gen_range(-1.0..1.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Steps {
    pub primal: f64,
    pub dual: f64,
    pub theta: f64,
}

/// One Chambolle-Pock step: dual prox on the extrapolated point, then primal prox.
pub(crate) fn step<P: SaddleProblem>(
    problem: &P,
    model: &ModelSpec,
    it: &mut Iterate,
    steps: Steps,
    tol: InnerTolerance,
) -> Result<()> {
    let sigma = steps.dual;
    let stencil = problem.stencil();
    let n = stencil.n_space();
    let d = stencil.dim();
    problem.apply(&it.x_bar, &mut it.a, &mut it.b);
    let inv_sigma = 1.0 / sigma;
    let mut b0 = [0.0; 2];
    for k in 0..problem.n_slices() {
        let faces = k * d * n;
        for i in 0..n {
            let c = k * n + i;
            let a0 = it.a[c] - it.m[c] * inv_sigma;
            let mut beta2 = 0.0;
            for (ax, bv) in b0.iter_mut().enumerate().take(d) {
                let f = faces + ax * n + i;
                *bv = it.b[f] - it.w[f] * inv_sigma;
                beta2 += *bv * *bv;
            }
            let beta = beta2.sqrt();
            let root = solve_cell(
                &model.hamiltonian,
                &model.coupling,
                i,
                a0,
                beta,
                inv_sigma,
                it.m[c],
                tol,
            )?;
            let mu = root.multiplier;
            it.m[c] = mu;
            let scale = if beta > 0.0 && mu > 0.0 {
                -mu * model.hamiltonian.slope_factor(i, root.radius) * root.radius / beta
            } else {
                0.0
            };
            for (ax, bv) in b0.iter().enumerate().take(d) {
                it.w[faces + ax * n + i] = scale * bv;
            }
        }
    }
    problem.apply_adjoint(&it.m, &it.w, &mut it.kt);
    it.x_prev.copy_from_slice(&it.x);
    let tau = steps.primal;
    for (x, g) in it.x.iter_mut().zip(&it.kt) {
        *x += tau * g;
    }
    problem.prox_primal(&mut it.x, tau);
    for ((xb, x), xp) in it.x_bar.iter_mut().zip(&it.x).zip(&it.x_prev) {
        *xb = x + steps.theta * (x - xp);
    }
    Ok(())
}
