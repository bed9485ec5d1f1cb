use serde::Serialize;

use crate::error::{MfgError, Result};
use crate::grid::Grid;
use crate::model::{Coupling, ModelSpec};

/// Stationary pair `(lambda, m)`; `D phi = 0` is implied for the explicit family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicReference {
    pub lambda: f64,
    pub m: Vec<f64>,
}

/// `sum xi(x, lambda) h^d` with `xi = f^{-1}((lambda - V)_+)`.
fn mass(model: &ModelSpec, grid: &Grid, lambda: f64) -> f64 {
    density(model, lambda).iter().sum::<f64>() * grid.cell_volume()
}

fn density(model: &ModelSpec, lambda: f64) -> Vec<f64> {
    let Coupling::Power { exponent, weight } = &model.coupling else {
        unreachable!("checked by the caller")
    };
    model
        .hamiltonian
        .potential()
        .iter()
        .zip(weight)
        .map(|(v, a)| ((lambda - v).max(0.0) / a).powf(1.0 / (exponent - 1.0)))
        .collect()
}

/// Explicit stationary solution for `H = |p|^2/2 - V` and a power coupling.
///
/// With `D phi = 0` the system reduces to `lambda - V = f(x, m)` on the
/// support, so `m = f^{-1}((lambda - V)_+)` and `lambda` is fixed by unit mass.
pub fn explicit_ergodic_oracle(model: &ModelSpec, grid: &Grid) -> Result<ErgodicReference> {
    model.validate(grid)?;
    let ham = &model.hamiltonian;
    if ham.exponent() != 2.0 || ham.weight().iter().any(|&c| c != 1.0) {
        return Err(MfgError::WrongFamily(
            "the explicit oracle needs H = |p|^2/2 - V".into(),
        ));
    }
    let Coupling::Power { weight, .. } = &model.coupling else {
        return Err(MfgError::WrongFamily(
            "the explicit oracle needs a power coupling with f(x, 0) = 0".into(),
        ));
    };
    let v = ham.potential();
    let mut lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + weight.iter().copied().fold(0.0, f64::max);
    while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(model, grid, mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    Ok(ErgodicReference {
        lambda,
        m: density(model, lambda),
    })
}

/// The normalization map `lambda -> sum xi(x, lambda) h^d` used by the oracle.
pub fn oracle_mass(model: &ModelSpec, grid: &Grid, lambda: f64) -> Result<f64> {
    if !matches!(model.coupling, Coupling::Power { .. }) {
        return Err(MfgError::WrongFamily("power coupling required".into()));
    }
    Ok(mass(model, grid, lambda))
}
