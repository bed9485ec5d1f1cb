use serde::Serialize;

use crate::error::{MfgError, Result};
use crate::functionals::gather;
use crate::grid::{discrete_gradient, TimeSampling};
use crate::model::ModelSpec;
use crate::solver::SolutionBundle;

/// Both sides of the energy inequality between two solutions on `[t1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `int m2 (H(D phi1) - H(D phi2) - <D_pH(D phi2), D phi1 - D phi2>)`.
    pub bregman_second: f64,
    /// `int m1 (H(D phi2) - H(D phi1) - <D_pH(D phi1), D phi2 - D phi1>)`.
    pub bregman_first: f64,
    /// `int (f(m2) - f(m1)) (m2 - m1)`.
    pub coupling: f64,
    pub lhs: f64,
    /// `-[int (m2 - m1)(phi2 - phi1)]` between `t1` and `t2`.
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

fn bregman(model: &ModelSpec, i: usize, from: &[f64], at: &[f64], scratch: &mut [f64]) -> f64 {
    model.hamiltonian.gradient(i, at, scratch);
    let lin: f64 = scratch
        .iter()
        .zip(from.iter().zip(at))
        .map(|(g, (a, b))| g * (a - b))
        .sum();
    model.hamiltonian.value(i, from) - model.hamiltonian.value(i, at) - lin
}

/// Energy inequality between `first = (phi1, m1)` and `second = (phi2, m2)`
/// on the node interval `[t1, t2]`.
///
/// Cells `t1..t2` are integrated; at node `j` the density paired with `phi_j`
/// is the cell ending at `j` (the initial density for `j = 0`).
pub fn energy_inequality_check(
    first: &SolutionBundle,
    second: &SolutionBundle,
    model: &ModelSpec,
    t1: usize,
    t2: usize,
    tol: f64,
) -> Result<EnergyReport> {
    let grid = first.grid;
    if second.grid != grid {
        return Err(MfgError::ShapeMismatch(
            "energy check needs both solutions on one grid".into(),
        ));
    }
    model.validate(&grid)?;
    if !(t1 < t2 && t2 <= grid.n_t()) {
        return Err(MfgError::ShapeMismatch(format!(
            "need t1 < t2 <= {}, got t1 = {t1}, t2 = {t2}",
            grid.n_t()
        )));
    }
    let n = grid.n_space();
    let d = grid.dim();
    let g1 = discrete_gradient(&first.phi, TimeSampling::Lagged)?;
    let g2 = discrete_gradient(&second.phi, TimeSampling::Lagged)?;
    let (mut p1, mut p2, mut scratch) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let (mut b2, mut b1, mut cpl) = (0.0, 0.0, 0.0);
    for k in t1..t2 {
        let (m1, m2) = (first.m.slice(k), second.m.slice(k));
        for i in 0..n {
            gather(g1.cell(k), n, i, &mut p1);
            gather(g2.cell(k), n, i, &mut p2);
            b2 += m2[i] * bregman(model, i, &p1, &p2, &mut scratch);
            b1 += m1[i] * bregman(model, i, &p2, &p1, &mut scratch);
            cpl += (model.coupling.f(i, m2[i]) - model.coupling.f(i, m1[i])) * (m2[i] - m1[i]);
        }
    }
    let vol = grid.space_time_volume();
    let (b2, b1, cpl) = (b2 * vol, b1 * vol, cpl * vol);

    let pairing = |j: usize| -> f64 {
        let (m1, m2) = if j == 0 {
            (&first.m0[..], &second.m0[..])
        } else {
            (first.m.slice(j - 1), second.m.slice(j - 1))
        };
        let (f1, f2) = (first.phi.slice(j), second.phi.slice(j));
        (0..n).map(|i| (m2[i] - m1[i]) * (f2[i] - f1[i])).sum::<f64>() * grid.cell_volume()
    };
    let rhs = -(pairing(t2) - pairing(t1));
    let lhs = b2 + b1 + cpl;
    let pass = lhs <= rhs + tol && [b2, b1, cpl].iter().all(|&v| v >= -tol);
    Ok(EnergyReport {
        bregman_second: b2,
        bregman_first: b1,
        coupling: cpl,
        lhs,
        rhs,
        tol,
        pass,
    })
}
