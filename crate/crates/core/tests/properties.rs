use num_complex::Complex64;
use proptest::prelude::*;

use halfint::forms::{yoshida_g, HalfIntegralForm};
use halfint::lfunc::{i_f, lambda_completed, r_f};
use halfint::qseries::QExpansion;
use halfint::special::{gamma, lower_incomplete_gamma, shimura_jacobi, upper_incomplete_gamma};
use std::sync::OnceLock;

fn g() -> &'static HalfIntegralForm {
    static G: OnceLock<HalfIntegralForm> = OnceLock::new();
    G.get_or_init(|| yoshida_g(6000))
}

fn series(c: &[i64]) -> QExpansion {
    QExpansion::from_i64(1, 0, c).unwrap()
}

const LEN: usize = 12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_ring_axioms(a in prop::collection::vec(-50i64..50, LEN), b in prop::collection::vec(-50i64..50, LEN), c in prop::collection::vec(-50i64..50, LEN)) {
        let (a, b, c) = (series(&a), series(&b), series(&c));
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b.add(&c).unwrap()).unwrap(), a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap());
    }

    #[test]
    fn unit_series_invert(mut a in prop::collection::vec(-50i64..50, LEN), sign in prop::bool::ANY) {
        a[0] = if sign { 1 } else { -1 };
        let a = series(&a);
        let prod = a.mul(&a.invert().unwrap()).unwrap();
        prop_assert_eq!(prod, QExpansion::one(LEN - 1));
    }

    #[test]
    fn shimura_symbol_multiplicative(c1 in -200i64..200, c2 in -200i64..200, d in -100i64..100) {
        prop_assume!(d % 2 != 0);
        prop_assume!(c1 != 0 && c2 != 0);
        if let (Ok(x), Ok(y)) = (shimura_jacobi(c1, d), shimura_jacobi(c2, d)) {
            prop_assert_eq!(shimura_jacobi(c1 * c2, d).unwrap(), x * y);
        }
    }

    #[test]
    fn gamma_recurrence(re in -4.5f64..8.0, im in -30.0f64..30.0) {
        let s = Complex64::new(re, im);
        prop_assume!(im.abs() > 1e-3 || (re - re.round()).abs() > 1e-3);
        let lhs = gamma(s + 1.0).unwrap();
        let rhs = s * gamma(s).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm());
    }

    #[test]
    fn incomplete_gamma_halves_sum(re in 0.1f64..8.0, im in -30.0f64..30.0, x in 0.05f64..40.0) {
        let s = Complex64::new(re, im);
        let up = upper_incomplete_gamma(s, x).unwrap();
        let low = lower_incomplete_gamma(s, x).unwrap();
        let full = gamma(s).unwrap();
        let err = up.abs_err + low.abs_err + 1e-12 * full.norm();
        prop_assert!((up.value + low.value - full).norm() <= 10.0 * err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn functional_equation_random_point(re in -1.0f64..5.5, im in -40.0f64..40.0) {
        let s = Complex64::new(re, im);
        let a = lambda_completed(g(), s).unwrap();
        let b = lambda_completed(g(), Complex64::new(4.5, 0.0) - s).unwrap();
        prop_assert!((a.value - b.value).norm() <= 2.0 * (a.abs_err + b.abs_err));
    }

    #[test]
    fn signatures_have_parity(t in 0.0f64..40.0) {
        let (p, m) = (r_f(g(), t).unwrap(), r_f(g(), -t).unwrap());
        prop_assert!((p.value - m.value).abs() <= 2.0 * (p.abs_err + m.abs_err));
        let (p, m) = (i_f(g(), t).unwrap(), i_f(g(), -t).unwrap());
        prop_assert!((p.value + m.value).abs() <= 2.0 * (p.abs_err + m.abs_err));
    }
}

#[test]
fn shimura_symbol_rejects_common_factors() {
    assert!(shimura_jacobi(3, 9).is_err());
    assert!(shimura_jacobi(5, 4).is_err());
    assert_eq!(shimura_jacobi(0, -1).unwrap(), 1);
    assert_eq!(shimura_jacobi(-1, -3).unwrap(), -shimura_jacobi(-1, 3).unwrap());
}
