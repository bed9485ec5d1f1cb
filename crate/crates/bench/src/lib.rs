//! Shared inputs for the criterion benches.

use torus_mfg::{Grid, ModelSpec, SolverOptions};

/// The cosine-potential model on a `d = 1` grid with `n_x = n_t = n`.
pub fn cosine_problem(n: usize) -> (Grid, ModelSpec) {
    let grid = Grid::new(1, n, n, 1.0).expect("valid grid");
    let model = ModelSpec::cosine_potential(&grid, 1.0);
    (grid, model)
}

/// Exactly `iterations` primal-dual steps with a single gap evaluation at the end.
pub fn fixed_iterations(iterations: usize) -> SolverOptions {
    SolverOptions {
        max_iters: iterations,
        check_every: iterations,
        tol_gap: f64::MIN_POSITIVE,
        ..SolverOptions::default()
    }
}
