//! Proximal map of the composite cell cost `(a, b) -> F*(x, -a + H(x, b))`.
//!
//! With step `s`, the minimizer of
//! `F*(x, -a' + H(x, b')) + (|a' - a|^2 + |b' - b|^2) / (2s)` satisfies
//!
//! ```text
//! a' = a + s mu,   b' + s mu D_pH(x, b') = b,   mu = (F*)'(x, -a' + H(x, b'))
//! ```
//!
//! so `b'` is parallel to `b` and everything reduces to one monotone scalar
//! equation in the multiplier `mu >= 0`, which is the density `m` of the
//! dual problem. Moreau's identity then gives the dual prox for free:
//! `m = mu`, `w = -mu D_pH(x, b')`.

use crate::error::{MfgError, Result};
use crate::model::{Coupling, Hamiltonian};

/// Tolerances of the scalar root-find.
#[derive(Debug, Clone, Copy)]
pub struct InnerTolerance {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for InnerTolerance {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iters: 200,
        }
    }
}

/// Root of the cell equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRoot {
    /// Multiplier `mu = (F*)'(-a' + H(b'))`, the dual density.
    pub multiplier: f64,
    /// `|b'|`.
    pub radius: f64,
}

/// `|b'|` solving `rho + s mu c rho^(r-1) = beta` on `[0, beta]`.
fn shrink_radius(ham: &Hamiltonian, i: usize, beta: f64, s_mu: f64) -> f64 {
    if beta == 0.0 || s_mu == 0.0 {
        return beta;
    }
    let r = ham.exponent();
    let c = ham.weight()[i];
    if r == 2.0 {
        return beta / (1.0 + s_mu * c);
    }
    let (mut lo, mut hi) = (0.0, beta);
    let mut rho = beta;
    for _ in 0..200 {
        let resid = rho + s_mu * c * rho.powf(r - 1.0) - beta;
        if resid > 0.0 {
            hi = rho;
        } else {
            lo = rho;
        }
        if resid.abs() <= 1e-15 * beta || hi - lo <= 1e-15 * beta {
            break;
        }
        let slope = 1.0 + s_mu * c * (r - 1.0) * rho.powf(r - 2.0);
        let next = rho - resid / slope;
        rho = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    rho
}

/// Solves for the multiplier of the cell prox at spatial point `i`.
///
/// `a` and `beta = |b|` are the prox center, `step` the prox parameter and
/// `guess` a warm start for the multiplier.
#[allow(clippy::too_many_arguments)]
pub fn solve_cell(
    ham: &Hamiltonian,
    coupling: &Coupling,
    i: usize,
    a: f64,
    beta: f64,
    step: f64,
    guess: f64,
    tol: InnerTolerance,
) -> Result<CellRoot> {
    let upper = coupling.conjugate_derivative(i, -a + ham.radial(i, beta));
    if upper <= 0.0 {
        return Ok(CellRoot {
            multiplier: 0.0,
            radius: beta,
        });
    }
    let r = ham.exponent();
    let (mut lo, mut hi) = (0.0, upper.min(f64::MAX));
    let mut mu = if guess > lo && guess < hi { guess } else { 0.5 * hi };
    let mut last = f64::INFINITY;
    for _ in 0..tol.max_iters {
        let rho = shrink_radius(ham, i, beta, step * mu);
        let arg = -a - step * mu + ham.radial(i, rho);
        let resid = mu - coupling.conjugate_derivative(i, arg);
        last = resid.abs();
        // g' >= 1, so |resid| bounds the distance to the root.
        if last <= tol.tol * (1.0 + mu) {
            return Ok(CellRoot {
                multiplier: mu,
                radius: rho,
            });
        }
        if resid > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        if hi - lo <= tol.tol * (1.0 + mu) {
            let mu = 0.5 * (lo + hi);
            return Ok(CellRoot {
                multiplier: mu,
                radius: shrink_radius(ham, i, beta, step * mu),
            });
        }
        let sf = ham.slope_factor(i, rho);
        let kappa = sf * rho;
        let drho = -step * kappa / (1.0 + step * mu * (r - 1.0) * sf);
        let darg = -step + kappa * drho;
        let slope = 1.0 - coupling.conjugate_second_derivative(i, arg) * darg;
        let next = mu - resid / slope;
        mu = if next > lo && next < hi && slope.is_finite() {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(MfgError::InnerProxFailure {
        iters: tol.max_iters,
        residual: last,
    })
}

/// Result of [`prox_primal_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalProx {
    pub a: f64,
    pub b: Vec<f64>,
    pub multiplier: f64,
}

/// Prox of `(a, b) -> F*(x, -a + H(x, b))` with parameter `step` at point `i`.
pub fn prox_primal_point(
    ham: &Hamiltonian,
    coupling: &Coupling,
    i: usize,
    a: f64,
    b: &[f64],
    step: f64,
    tol: InnerTolerance,
) -> Result<PrimalProx> {
    if step.is_nan() || step <= 0.0 {
        return Err(MfgError::InvalidModel(format!(
            "prox step must be positive, got {step}"
        )));
    }
    let beta = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let root = solve_cell(ham, coupling, i, a, beta, step, 0.0, tol)?;
    let scale = if beta > 0.0 { root.radius / beta } else { 0.0 };
    Ok(PrimalProx {
        a: a + step * root.multiplier,
        b: b.iter().map(|x| x * scale).collect(),
        multiplier: root.multiplier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (Hamiltonian, Coupling) {
        (Hamiltonian::quadratic(vec![0.0]), Coupling::linear(1))
    }

    #[test]
    fn flat_region_is_fixed() {
        let (h, c) = reference();
        // -a + H(b) = -5.5 < 0: F* is locally constant.
        let out = prox_primal_point(&h, &c, 0, 6.0, &[1.0], 0.3, InnerTolerance::default()).unwrap();
        assert_eq!(out.a, 6.0);
        assert_eq!(out.b, vec![1.0]);
        assert_eq!(out.multiplier, 0.0);
    }

    #[test]
    fn first_order_condition_at_b_zero() {
        let (h, c) = reference();
        let s = 0.7;
        let a = -40.0;
        let out = prox_primal_point(&h, &c, 0, a, &[0.0], s, InnerTolerance::default()).unwrap();
        let kkt = (out.a - a) / s - c.conjugate_derivative(0, -out.a + h.value(0, &out.b));
        assert!(kkt.abs() <= 1e-8, "kkt = {kkt}");
        // closed form for q = r = 2, b = 0: mu = -a / (1 + s)
        assert!((out.multiplier - 40.0 / 1.7).abs() < 1e-9);
    }

    #[test]
    fn stationarity_for_general_exponents() {
        let h = Hamiltonian::new(1.5, vec![0.8], vec![0.3]).unwrap();
        for coupling in [Coupling::power(3.0, vec![1.3]).unwrap(), Coupling::Log] {
            let (a, b, s) = (-1.2, [0.9, -2.0], 0.4);
            let out = prox_primal_point(&h, &coupling, 0, a, &b, s, InnerTolerance::default()).unwrap();
            let mu = out.multiplier;
            let arg = -out.a + h.value(0, &out.b);
            assert!((mu - coupling.conjugate_derivative(0, arg)).abs() < 1e-9);
            let mut g = [0.0; 2];
            h.gradient(0, &out.b, &mut g);
            for k in 0..2 {
                assert!((out.b[k] - b[k] + s * mu * g[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_step() {
        let (h, c) = reference();
        assert!(prox_primal_point(&h, &c, 0, 0.0, &[0.0], 0.0, InnerTolerance::default()).is_err());
    }
}
