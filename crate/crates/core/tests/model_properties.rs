use proptest::prelude::*;
use torus_mfg::{Coupling, Hamiltonian};

fn hamiltonian() -> impl Strategy<Value = Hamiltonian> {
    (1.2f64..4.0, 0.2f64..3.0, -2.0f64..2.0).prop_map(|(r, c, v)| Hamiltonian::new(r, vec![c], vec![v]).unwrap())
}

fn coupling() -> impl Strategy<Value = Coupling> {
    prop_oneof![
        (1.2f64..4.0, 0.2f64..3.0).prop_map(|(q, a)| Coupling::power(q, vec![a]).unwrap()),
        Just(Coupling::Log),
    ]
}

fn vec2() -> impl Strategy<Value = [f64; 2]> {
    [-3.0f64..3.0, -3.0f64..3.0]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fenchel_young(h in hamiltonian(), p in vec2(), q in vec2()) {
        let gap = h.value(0, &p) + h.conjugate(0, &q) - dot(&p, &q);
        prop_assert!(gap >= -1e-12 * (1.0 + dot(&p, &p) + dot(&q, &q)), "gap {gap}");
    }

    #[test]
    fn fenchel_young_equality_at_gradient(h in hamiltonian(), p in vec2()) {
        let mut q = [0.0; 2];
        h.gradient(0, &p, &mut q);
        let gap = h.value(0, &p) + h.conjugate(0, &q) - dot(&p, &q);
        prop_assert!(gap.abs() <= 1e-10 * (1.0 + h.value(0, &p).abs()), "gap {gap}");
    }

    #[test]
    fn double_conjugate_in_one_dimension(h in hamiltonian(), p in -2.0f64..2.0) {
        // sup_q (p q - H*(q)) on a fine grid around the maximizer.
        let mut g = [0.0];
        h.gradient(0, &[p], &mut g);
        let width = 1.0 + 2.0 * g[0].abs();
        let n = 20_000;
        let best = (0..=n)
            .map(|k| g[0] - width + 2.0 * width * k as f64 / n as f64)
            .map(|q| p * q - h.conjugate(0, &[q]))
            .fold(f64::NEG_INFINITY, f64::max);
        let exact = h.value(0, &[p]);
        prop_assert!(best <= exact + 1e-10);
        prop_assert!(exact - best <= 1e-4 * (1.0 + exact.abs()), "{exact} vs {best}");
    }

    #[test]
    fn coupling_conjugate_is_monotone(c in coupling(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(c.conjugate(0, lo) <= c.conjugate(0, hi) + 1e-14);
        prop_assert!(c.conjugate_derivative(0, lo) <= c.conjugate_derivative(0, hi) + 1e-14);
    }

    #[test]
    fn coupling_conjugate_derivative_is_argmax(c in coupling(), alpha in -3.0f64..3.0) {
        let m_star = c.conjugate_derivative(0, alpha);
        let value = |m: f64| m * alpha - c.primitive(0, m);
        let top = value(m_star);
        prop_assert!((top - c.conjugate(0, alpha)).abs() <= 1e-10 * (1.0 + top.abs()));
        // Brute-force maximization over [0, 10].
        let n = 20_000;
        let brute = (0..=n).map(|k| value(10.0 * k as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(brute <= top + 1e-10 * (1.0 + top.abs()));
        if m_star < 10.0 {
            prop_assert!(top - brute <= 1e-6 * (1.0 + top.abs()), "{top} vs {brute}");
        }
    }

    #[test]
    fn coupling_f_is_inverse_of_conjugate_derivative(c in coupling(), m in 0.01f64..5.0) {
        let back = c.conjugate_derivative(0, c.f(0, m));
        prop_assert!((back - m).abs() <= 1e-10 * m);
    }

    #[test]
    fn hamiltonian_growth_sandwich(h in hamiltonian(), p in vec2()) {
        let norm = dot(&p, &p).sqrt();
        prop_assume!(norm >= 1.0);
        let r = h.exponent();
        let c = h.growth_constant();
        let value = h.value(0, &p);
        prop_assert!(value >= norm.powf(r) / (r * c) - c - 1e-12);
        prop_assert!(value <= c * norm.powf(r) / r + c + 1e-12);
    }

    #[test]
    fn coupling_growth_sandwich(q in 1.2f64..4.0, a in 0.2f64..3.0, m in 1.0f64..50.0) {
        let c = Coupling::power(q, vec![a]).unwrap();
        let k = c.growth_constant().unwrap();
        let big_f = c.primitive(0, m);
        prop_assert!(big_f >= m.powf(q) / (q * k) - k - 1e-12);
        prop_assert!(big_f <= k * m.powf(q) / q + k + 1e-12);
    }
}
