//! Hamiltonian and coupling families with closed-form Fenchel conjugates.
//!
//! * `H(x, p) = c(x) |p|^r / r - V(x)` with `r > 1`, `c > 0`;
//! * `f(x, m) = a(x) m^(q-1)` (power) or `f(x, m) = ln m` (log), with
//!   primitive `F(x, m) = int_1^m f(x, s) ds` and `F = +inf` for `m < 0`.
//!
//! Every function takes the spatial index `i` of the grid point `x`.

use serde::Serialize;

use crate::error::{MfgError, Result};
use crate::grid::Grid;

fn norm(v: &[f64]) -> f64 {
    let s = v.iter().map(|x| x * x).sum::<f64>();
    if s > 0.0 || v.iter().all(|&x| x == 0.0) {
        s.sqrt()
    } else {
        v.iter().fold(0.0, |a: f64, &x| a.hypot(x))
    }
}

/// Power-law Hamiltonian `c(x)|p|^r / r - V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    exponent: f64,
    conjugate_exponent: f64,
    weight: Vec<f64>,
    potential: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(exponent: f64, weight: Vec<f64>, potential: Vec<f64>) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 1.0) {
            return Err(MfgError::InvalidModel(format!(
                "Hamiltonian exponent r must exceed 1, got {exponent}"
            )));
        }
        if weight.len() != potential.len() {
            return Err(MfgError::ShapeMismatch("c and V must have the same length".into()));
        }
        if weight.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
            return Err(MfgError::InvalidModel("weight c(x) must be positive and finite".into()));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(MfgError::InvalidModel("potential V(x) must be finite".into()));
        }
        Ok(Self {
            exponent,
            conjugate_exponent: exponent / (exponent - 1.0),
            weight,
            potential,
        })
    }

    /// `c = 1`, quadratic (`r = 2`) Hamiltonian with potential `V`.
    pub fn quadratic(potential: Vec<f64>) -> Self {
        let weight = vec![1.0; potential.len()];
        Self::new(2.0, weight, potential).expect("quadratic Hamiltonian is valid")
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn conjugate_exponent(&self) -> f64 {
        self.conjugate_exponent
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    /// `H` as a function of `|p|`.
    #[inline]
    pub fn radial(&self, i: usize, rho: f64) -> f64 {
        if self.exponent == 2.0 {
            return 0.5 * self.weight[i] * rho * rho - self.potential[i];
        }
        self.weight[i] * rho.powf(self.exponent) / self.exponent - self.potential[i]
    }

    pub fn value(&self, i: usize, p: &[f64]) -> f64 {
        self.radial(i, norm(p))
    }

    /// `H*(x, q) = c^(1-r') |q|^r' / r' + V`.
    pub fn conjugate(&self, i: usize, q: &[f64]) -> f64 {
        let rc = self.conjugate_exponent;
        self.weight[i].powf(1.0 - rc) * norm(q).powf(rc) / rc + self.potential[i]
    }

    /// `L(x, v) = H*(x, -v)`.
    pub fn lagrangian(&self, i: usize, v: &[f64]) -> f64 {
        // H* only depends on |q|.
        self.conjugate(i, v)
    }

    /// `D_p H(x, p) = c |p|^(r-2) p`, zero at `p = 0`.
    pub fn gradient(&self, i: usize, p: &[f64], out: &mut [f64]) {
        let s = self.slope_factor(i, norm(p));
        for (o, &pi) in out.iter_mut().zip(p) {
            *o = s * pi;
        }
    }

    /// `c |p|^(r-2)`, i.e. `D_p H = factor * p`; zero at `p = 0`.
    #[inline]
    pub fn slope_factor(&self, i: usize, rho: f64) -> f64 {
        if rho == 0.0 {
            0.0
        } else if self.exponent == 2.0 {
            self.weight[i]
        } else {
            self.weight[i] * rho.powf(self.exponent - 2.0)
        }
    }

    /// Perspective of the Lagrangian, `m L(x, w/m)`, with `0` at `(0, 0)` and
    /// `+inf` at `(0, w != 0)`.
    pub fn perspective(&self, i: usize, m: f64, w: &[f64]) -> f64 {
        let wn = norm(w);
        if m < 0.0 {
            return f64::INFINITY;
        }
        if m == 0.0 {
            return if wn == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let rc = self.conjugate_exponent;
        let kinetic = if wn == 0.0 {
            0.0
        } else {
            self.weight[i].powf(1.0 - rc) * wn.powf(rc) / (rc * m.powf(rc - 1.0))
        };
        kinetic + m * self.potential[i]
    }

    pub fn c_min(&self) -> f64 {
        self.weight.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn c_max(&self) -> f64 {
        self.weight.iter().copied().fold(0.0, f64::max)
    }

    pub fn v_sup(&self) -> f64 {
        self.potential.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Constant `C` with `|p|^r/(rC) - C <= H <= C|p|^r/r + C` for `|p| >= 1`.
    pub fn growth_constant(&self) -> f64 {
        self.c_max().max(1.0 / self.c_min()).max(self.v_sup()).max(1.0)
    }
}

/// Local coupling `f(x, m)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// `f(x, m) = a(x) m^(q-1)`, `F(x, m) = a(x)(m^q - 1)/q`.
    Power { exponent: f64, weight: Vec<f64> },
    /// `f(x, m) = ln m`, `F(x, m) = m ln m - m + 1`.
    Log,
}

impl Coupling {
    pub fn power(exponent: f64, weight: Vec<f64>) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 1.0) {
            return Err(MfgError::InvalidModel(format!(
                "coupling exponent q must exceed 1, got {exponent}"
            )));
        }
        if weight.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
            return Err(MfgError::InvalidModel("weight a(x) must be positive and finite".into()));
        }
        Ok(Coupling::Power { exponent, weight })
    }

    /// `f(m) = m`.
    pub fn linear(n: usize) -> Self {
        Coupling::Power {
            exponent: 2.0,
            weight: vec![1.0; n],
        }
    }

    /// `q` for the power family; `None` for the log family.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Coupling::Power { exponent, .. } => Some(*exponent),
            Coupling::Log => None,
        }
    }

    pub fn f(&self, i: usize, m: f64) -> f64 {
        match self {
            Coupling::Power { exponent, weight } => {
                if m <= 0.0 {
                    0.0
                } else {
                    weight[i] * m.powf(exponent - 1.0)
                }
            }
            Coupling::Log => m.ln(),
        }
    }

    /// Primitive `F(x, m)`; `+inf` for `m < 0`.
    pub fn primitive(&self, i: usize, m: f64) -> f64 {
        if m < 0.0 {
            return f64::INFINITY;
        }
        match self {
            Coupling::Power { exponent, weight } => weight[i] * (m.powf(*exponent) - 1.0) / exponent,
            Coupling::Log => {
                if m == 0.0 {
                    1.0
                } else {
                    m * m.ln() - m + 1.0
                }
            }
        }
    }

    /// `F*(x, alpha) = sup_{m >= 0} m alpha - F(x, m)`.
    pub fn conjugate(&self, i: usize, alpha: f64) -> f64 {
        match self {
            Coupling::Power { exponent, weight } => {
                let a = weight[i];
                if alpha <= 0.0 {
                    a / exponent
                } else {
                    let p = exponent / (exponent - 1.0);
                    alpha.powf(p) / (p * a.powf(p - 1.0)) + a / exponent
                }
            }
            Coupling::Log => alpha.exp() - 1.0,
        }
    }

    /// The maximizer `m(alpha) = argmax_{m >= 0} m alpha - F(x, m)`, i.e. `(F*)'(alpha)`.
    pub fn conjugate_derivative(&self, i: usize, alpha: f64) -> f64 {
        match self {
            Coupling::Power { exponent, weight } => {
                if alpha <= 0.0 {
                    0.0
                } else if *exponent == 2.0 {
                    alpha / weight[i]
                } else {
                    (alpha / weight[i]).powf(1.0 / (exponent - 1.0))
                }
            }
            Coupling::Log => alpha.exp(),
        }
    }

    /// `(F*)''(alpha)`; `+inf` at the kink for `q > 2`.
    pub fn conjugate_second_derivative(&self, i: usize, alpha: f64) -> f64 {
        match self {
            Coupling::Power { exponent, weight } => {
                if alpha <= 0.0 {
                    0.0
                } else if *exponent == 2.0 {
                    1.0 / weight[i]
                } else {
                    let e = 1.0 / (exponent - 1.0);
                    e / weight[i] * (alpha / weight[i]).powf(e - 1.0)
                }
            }
            Coupling::Log => alpha.exp(),
        }
    }

    pub fn a_min(&self) -> Option<f64> {
        match self {
            Coupling::Power { weight, .. } => Some(weight.iter().copied().fold(f64::INFINITY, f64::min)),
            Coupling::Log => None,
        }
    }

    pub fn a_max(&self) -> Option<f64> {
        match self {
            Coupling::Power { weight, .. } => Some(weight.iter().copied().fold(0.0, f64::max)),
            Coupling::Log => None,
        }
    }

    /// Constant `C` with `m^q/(qC) - C <= F <= C m^q / q + C` for `m >= 1`
    /// (power family only).
    pub fn growth_constant(&self) -> Option<f64> {
        Some(self.a_max()?.max(1.0 / self.a_min()?).max(1.0))
    }

    fn len(&self) -> Option<usize> {
        match self {
            Coupling::Power { weight, .. } => Some(weight.len()),
            Coupling::Log => None,
        }
    }
}

/// Full problem data on a fixed spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub hamiltonian: Hamiltonian,
    pub coupling: Coupling,
    /// Initial density (probability density w.r.t. `h_x^d` quadrature).
    pub m0: Vec<f64>,
    /// Terminal value `phi_T`.
    pub phi_terminal: Vec<f64>,
}

impl ModelSpec {
    /// Reference model: `r = q = 2`, `c = a = 1`, `V = 0`, `m0 = 1`, `phi_T = 0`.
    pub fn reference(grid: &Grid) -> Self {
        let n = grid.n_space();
        Self {
            hamiltonian: Hamiltonian::quadratic(vec![0.0; n]),
            coupling: Coupling::linear(n),
            m0: vec![1.0; n],
            phi_terminal: vec![0.0; n],
        }
    }

    /// Reference model with potential `V(x) = amplitude * cos(2 pi x_0)`.
    pub fn cosine_potential(grid: &Grid, amplitude: f64) -> Self {
        let mut model = Self::reference(grid);
        let tau = std::f64::consts::TAU;
        let v = (0..grid.n_space())
            .map(|i| amplitude * (tau * grid.coords(i)[0]).cos())
            .collect();
        model.hamiltonian = Hamiltonian::quadratic(v);
        model
    }

    /// Checks array sizes, positivity and unit mass of `m0` against `grid`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let n = grid.n_space();
        if self.hamiltonian.len() != n {
            return Err(MfgError::ShapeMismatch(format!("Hamiltonian arrays need {n} entries")));
        }
        if let Some(len) = self.coupling.len() {
            if len != n {
                return Err(MfgError::ShapeMismatch(format!("coupling weight needs {n} entries")));
            }
        }
        if self.m0.len() != n || self.phi_terminal.len() != n {
            return Err(MfgError::ShapeMismatch(format!("m0 and phi_T need {n} entries")));
        }
        if self.phi_terminal.iter().any(|v| !v.is_finite()) {
            return Err(MfgError::InvalidModel("phi_T must be finite".into()));
        }
        if self.m0.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
            return Err(MfgError::InfeasibleInput("m0 must be positive everywhere".into()));
        }
        let mass = self.m0.iter().sum::<f64>() * grid.cell_volume();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(MfgError::InfeasibleInput(format!("m0 has mass {mass}, expected 1")));
        }
        Ok(())
    }
}

/// Exponents and growth constants of a model, with the Hölder exponent `nu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub dim: usize,
    pub r: f64,
    pub r_conjugate: f64,
    /// `None` for the log family (treated as `q -> 1+`).
    pub q: Option<f64>,
    pub p: Option<f64>,
    /// `r > max{d(q-1), 1}`.
    pub exponent_relation_holds: bool,
    /// `nu = (r - d(q-1)) / (d(q-1)(r-1) + rq)`.
    pub nu: f64,
    pub hamiltonian_growth_constant: f64,
    pub coupling_growth_constant: Option<f64>,
}

/// Hölder exponent `(r - d(q-1)) / (d(q-1)(r-1) + rq)`.
pub fn holder_exponent(dim: usize, r: f64, q: f64) -> f64 {
    let d = dim as f64;
    (r - d * (q - 1.0)) / (d * (q - 1.0) * (r - 1.0) + r * q)
}

/// Builds the assumption report, failing when `r > max{d(q-1), 1}` is violated.
pub fn check_assumptions(model: &ModelSpec, dim: usize) -> Result<AssumptionReport> {
    let r = model.hamiltonian.exponent();
    let q = model.coupling.exponent();
    // log coupling: q - 1 may be taken arbitrarily small.
    let q_eff = q.unwrap_or(1.0);
    let bound = (dim as f64 * (q_eff - 1.0)).max(1.0);
    let holds = r > bound;
    if !holds {
        return Err(MfgError::AssumptionViolation(format!(
            "r > max{{d(q-1),1}} fails: r = {r}, d = {dim}, q = {q_eff}, so {r} <= {bound}"
        )));
    }
    Ok(AssumptionReport {
        dim,
        r,
        r_conjugate: model.hamiltonian.conjugate_exponent(),
        q,
        p: q.map(|q| q / (q - 1.0)),
        exponent_relation_holds: holds,
        nu: holder_exponent(dim, r, q_eff),
        hamiltonian_growth_constant: model.hamiltonian.growth_constant(),
        coupling_growth_constant: model.coupling.growth_constant(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ham(r: f64, c: f64, v: f64) -> Hamiltonian {
        Hamiltonian::new(r, vec![c], vec![v]).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(ham(2.0, 1.0, 0.0).value(0, &[2.0]), 2.0);
        // V(0) = cos(0) = 1
        assert_eq!(ham(2.0, 1.0, 1.0).value(0, &[0.0]), -1.0);
        assert!((ham(3.0, 2.0, 0.0).value(0, &[1.0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn conjugate_examples() {
        assert!((ham(2.0, 1.0, 0.0).conjugate(0, &[2.0]) - 2.0).abs() < 1e-15);
        assert_eq!(ham(2.0, 1.0, 1.0).conjugate(0, &[0.0]), 1.0);
        assert!((ham(2.0, 1.0, 0.0).lagrangian(0, &[1.0]) - 0.5).abs() < 1e-15);
        assert!((ham(3.0, 1.0, 0.0).lagrangian(0, &[1.0]) - 2.0 / 3.0).abs() < 1e-15);
        let h = ham(3.0, 1.7, 0.3);
        assert_eq!(h.lagrangian(0, &[0.4, -1.1]), h.conjugate(0, &[-0.4, 1.1]));
    }

    #[test]
    fn gradient_examples() {
        let mut out = [9.0; 2];
        ham(2.0, 1.0, 0.0).gradient(0, &[0.0, 0.0], &mut out);
        assert_eq!(out, [0.0, 0.0]);
        ham(2.0, 1.0, 0.0).gradient(0, &[3.0, 4.0], &mut out);
        assert_eq!(out, [3.0, 4.0]);
        let mut one = [0.0];
        ham(3.0, 1.0, 0.0).gradient(0, &[2.0], &mut one);
        assert!((one[0] - 4.0).abs() < 1e-14);
        ham(1.5, 1.0, 0.0).gradient(0, &[0.0], &mut one);
        assert_eq!(one[0], 0.0);
    }

    #[test]
    fn coupling_examples() {
        let lin = Coupling::linear(1);
        let cubic = Coupling::power(3.0, vec![2.0]).unwrap();
        assert_eq!(lin.f(0, 1.0), 1.0);
        assert_eq!(Coupling::Log.f(0, 1.0), 0.0);
        assert!((cubic.f(0, 2.0) - 8.0).abs() < 1e-14);
        assert_eq!(Coupling::Log.f(0, 0.0), f64::NEG_INFINITY);

        for c in [&lin, &cubic, &Coupling::Log] {
            assert_eq!(c.primitive(0, 1.0), 0.0);
            assert_eq!(c.primitive(0, -1.0), f64::INFINITY);
        }
        assert_eq!(lin.primitive(0, 0.0), -0.5);
        assert_eq!(Coupling::Log.primitive(0, 0.0), 1.0);
    }

    #[test]
    fn coupling_conjugate_examples() {
        let lin = Coupling::linear(1);
        assert_eq!(lin.conjugate(0, 0.0), 0.5);
        assert_eq!(lin.conjugate(0, -3.0), 0.5);
        assert_eq!(lin.conjugate(0, 1.0), 1.0);
        assert_eq!(Coupling::Log.conjugate(0, 0.0), 0.0);
        assert_eq!(lin.conjugate_derivative(0, 1.0), 1.0);
        assert_eq!(
            Coupling::power(3.0, vec![1.5]).unwrap().conjugate_derivative(0, -5.0),
            0.0
        );
        assert_eq!(Coupling::Log.conjugate_derivative(0, 0.0), 1.0);
    }

    #[test]
    fn perspective_conventions() {
        let h = ham(2.0, 1.0, 0.0);
        assert_eq!(h.perspective(0, 0.0, &[0.0]), 0.0);
        assert_eq!(h.perspective(0, 0.0, &[1e-300]), f64::INFINITY);
        assert!((h.perspective(0, 2.0, &[2.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn assumption_examples() {
        let g1 = Grid::new(1, 4, 1, 1.0).unwrap();
        let model = ModelSpec::reference(&g1);
        let rep = check_assumptions(&model, 1).unwrap();
        assert!((rep.nu - 0.2).abs() < 1e-15);
        assert_eq!(rep.p, Some(2.0));

        let g2 = Grid::new(2, 4, 1, 1.0).unwrap();
        let mut model = ModelSpec::reference(&g2);
        model.coupling = Coupling::power(3.0, vec![1.0; 16]).unwrap();
        match check_assumptions(&model, 2) {
            Err(MfgError::AssumptionViolation(msg)) => assert!(msg.contains("r > max{d(q-1),1}")),
            other => panic!("expected violation, got {other:?}"),
        }

        let mut model = ModelSpec::reference(&g1);
        model.hamiltonian = Hamiltonian::new(3.0, vec![1.0; 4], vec![0.0; 4]).unwrap();
        assert!((check_assumptions(&model, 1).unwrap().nu - 0.25).abs() < 1e-15);

        model.coupling = Coupling::Log;
        let rep = check_assumptions(&model, 2).unwrap();
        assert!(rep.exponent_relation_holds);
        assert_eq!(rep.q, None);
    }

    #[test]
    fn validate_catches_bad_data() {
        let g = Grid::new(1, 4, 1, 1.0).unwrap();
        let mut model = ModelSpec::reference(&g);
        assert!(model.validate(&g).is_ok());
        model.m0 = vec![2.0; 4];
        assert!(matches!(model.validate(&g), Err(MfgError::InfeasibleInput(_))));
        model.m0 = vec![0.0, 2.0, 1.0, 1.0];
        assert!(model.validate(&g).is_err());
        assert!(Hamiltonian::new(1.0, vec![1.0], vec![0.0]).is_err());
        assert!(Hamiltonian::new(2.0, vec![0.0], vec![0.0]).is_err());
        assert!(Coupling::power(1.0, vec![1.0]).is_err());
    }
}
