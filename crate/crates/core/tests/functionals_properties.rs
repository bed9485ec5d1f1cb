use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torus_mfg::functionals::{duality_gap, eval_dual_b};
use torus_mfg::grid::discrete_divergence;
use torus_mfg::solver::{prox_primal_point, InnerTolerance};
use torus_mfg::{Coupling, DualState, Grid, Hamiltonian, ModelSpec, Placement, PrimalState, ScalarField, VectorField};

fn model(grid: &Grid, r: f64, q: Option<f64>, seed: u64) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_space();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let coupling = match q {
        Some(q) => Coupling::power(q, (0..n).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap(),
        None => Coupling::Log,
    };
    let mut m0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mass: f64 = m0.iter().sum::<f64>() * grid.cell_volume();
    m0.iter_mut().for_each(|m| *m /= mass);
    ModelSpec {
        hamiltonian: Hamiltonian::new(r, c, v).unwrap(),
        coupling,
        m0,
        phi_terminal: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

fn random_phi(grid: &Grid, model: &ModelSpec, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi = ScalarField::zeros(*grid, Placement::TimeNode);
    phi.values_mut().iter_mut().for_each(|v| *v = rng.gen_range(-2.0..2.0));
    phi.slice_mut(grid.n_t()).copy_from_slice(&model.phi_terminal);
    phi
}

/// A density and flux solving the continuity equation from `m0`, or `None` if the density turns negative.
fn feasible_dual(grid: &Grid, m0: &[f64], amplitude: f64, seed: u64) -> Option<DualState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = VectorField::zeros(*grid);
    w.values_mut()
        .iter_mut()
        .for_each(|v| *v = rng.gen_range(-amplitude..amplitude));
    let div = discrete_divergence(&w);
    let mut m = ScalarField::zeros(*grid, Placement::TimeCell);
    let mut prev = m0.to_vec();
    for k in 0..grid.n_t() {
        let next: Vec<f64> = prev.iter().zip(div.slice(k)).map(|(p, d)| p - grid.h_t() * d).collect();
        if next.iter().any(|&v| v <= 0.0) {
            return None;
        }
        m.slice_mut(k).copy_from_slice(&next);
        prev = next;
    }
    Some(DualState { m, w })
}

fn setting() -> impl Strategy<Value = (Grid, f64, Option<f64>)> {
    (
        1usize..=2,
        prop_oneof![Just(4usize), Just(8)],
        1usize..6,
        0.5f64..2.0,
        1.3f64..3.0,
        prop_oneof![Just(None), (1.2f64..3.0).prop_map(Some)],
    )
        .prop_map(|(d, n, nt, t, r, q)| (Grid::new(d, n, nt, t).unwrap(), r, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn weak_duality_on_feasible_pairs((grid, r, q) in setting(), seed in any::<u64>(), amp in 0.0f64..0.05) {
        let model = model(&grid, r, q, seed);
        let primal = PrimalState::tight(random_phi(&grid, &model, seed ^ 11), &model).unwrap();
        let dual = feasible_dual(&grid, &model.m0, amp, seed ^ 13);
        prop_assume!(dual.is_some());
        let dual = dual.unwrap();
        let gap = duality_gap(&primal, &dual, &model).unwrap();
        prop_assert!(gap >= -1e-9, "gap {gap}");
    }

    #[test]
    fn relaxing_alpha_upward_keeps_weak_duality((grid, r, q) in setting(), seed in any::<u64>(), lift in 0.0f64..3.0) {
        let model = model(&grid, r, q, seed);
        let mut primal = PrimalState::tight(random_phi(&grid, &model, seed ^ 5), &model).unwrap();
        primal.alpha.values_mut().iter_mut().for_each(|a| *a += lift);
        let dual = feasible_dual(&grid, &model.m0, 0.01, seed ^ 7);
        prop_assume!(dual.is_some());
        let gap = duality_gap(&primal, &dual.unwrap(), &model).unwrap();
        prop_assert!(gap >= -1e-9, "gap {gap}");
    }

    #[test]
    fn dual_objective_is_convex((grid, r, q) in setting(), seed in any::<u64>()) {
        let model = model(&grid, r, q, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let mut draw = || {
            let mut m = ScalarField::zeros(grid, Placement::TimeCell);
            m.values_mut().iter_mut().for_each(|v| *v = rng.gen_range(0.01..3.0));
            let mut w = VectorField::zeros(grid);
            w.values_mut().iter_mut().for_each(|v| *v = rng.gen_range(-2.0..2.0));
            DualState { m, w }
        };
        let (x, y) = (draw(), draw());
        let t = 0.3;
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (1.0 - t) * u + t * v).collect::<Vec<_>>();
        let z = DualState {
            m: ScalarField::from_values(grid, Placement::TimeCell, mix(x.m.values(), y.m.values())).unwrap(),
            w: VectorField::from_values(grid, mix(x.w.values(), y.w.values())).unwrap(),
        };
        let (bx, by, bz) = (
            eval_dual_b(&x, &model).unwrap(),
            eval_dual_b(&y, &model).unwrap(),
            eval_dual_b(&z, &model).unwrap(),
        );
        let bound = (1.0 - t) * bx + t * by;
        prop_assert!(bz <= bound + 1e-10 * (1.0 + bound.abs()), "{bz} > {bound}");
    }

    #[test]
    fn cell_prox_is_firmly_nonexpansive(
        r in 1.3f64..3.0,
        q in prop_oneof![Just(None), (1.2f64..3.0).prop_map(Some)],
        x in [-3.0f64..3.0, -3.0..3.0, -3.0..3.0],
        y in [-3.0f64..3.0, -3.0..3.0, -3.0..3.0],
        step in 0.05f64..2.0,
    ) {
        let h = Hamiltonian::new(r, vec![1.3], vec![0.4]).unwrap();
        let c = match q {
            Some(q) => Coupling::power(q, vec![0.8]).unwrap(),
            None => Coupling::Log,
        };
        let tol = InnerTolerance::default();
        let px = prox_primal_point(&h, &c, 0, x[0], &x[1..], step, tol).unwrap();
        let py = prox_primal_point(&h, &c, 0, y[0], &y[1..], step, tol).unwrap();
        let out = [px.a - py.a, px.b[0] - py.b[0], px.b[1] - py.b[1]];
        let inp = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        let sq = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
        let inner: f64 = out.iter().zip(&inp).map(|(a, b)| a * b).sum();
        prop_assert!(sq(&out) <= sq(&inp) + 1e-9, "{} > {}", sq(&out), sq(&inp));
        prop_assert!(sq(&out) <= inner + 1e-9, "{} > {inner}", sq(&out));
    }
}
