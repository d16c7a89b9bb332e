use std::sync::Arc;

use flipqh_series::{binomial, q, qi, QMatrix, Rational, Series, SeriesError, SeriesMatrix, VarTable, NO_CAP};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn qtable() -> Arc<VarTable> {
    VarTable::of(&[("q1", 1, false), ("q2", 3, false), ("z", 1, true)])
}

fn xtable() -> Arc<VarTable> {
    VarTable::of(&[("x", -1, true), ("y", 4, false), ("z", 1, false)])
}

fn v(t: &Arc<VarTable>, n: &str) -> Series {
    Series::var(t, n).unwrap()
}

fn c(t: &Arc<VarTable>, x: i64) -> Series {
    Series::constant(t, qi(x))
}

/// Lambert coefficients computed directly from the twisted binomial formula.
fn lambert_direct(s: i64, l: i64, n_terms: i32) -> Series {
    let t = VarTable::of(&[("t", 1, false)]);
    let mut terms = Vec::new();
    for n in 0..=n_terms {
        let top = qi(s * n as i64 + l);
        let coef = binomial(&top, n as u64) * qi(l) / top;
        terms.push((vec![n], coef));
    }
    Series::from_terms(&t, &[n_terms], terms).unwrap()
}

#[test]
fn difference_of_squares() {
    let t = qtable();
    let a = &c(&t, 1) + &v(&t, "q1");
    let b = &c(&t, 1) - &v(&t, "q1");
    let expect = &c(&t, 1) - &v(&t, "q1").pow(2).unwrap();
    assert_eq!(&a * &b, expect);
}

#[test]
fn zero_absorbs_and_keeps_caps() {
    let t = qtable();
    let z = Series::zero(&t, &[3, 2, NO_CAP]);
    let s = (&c(&t, 1) + &v(&t, "q2")).truncate(&[5, 5, NO_CAP]);
    let p = &z * &s;
    assert!(p.is_zero());
    assert_eq!(p.caps(), &[3, 2, NO_CAP]);
}

#[test]
fn lambert_power_twist_at_first_order() {
    let b = lambert_direct(9, 1, 4);
    let lhs = &b * &b.pow(5).unwrap();
    let rhs = lambert_direct(9, 6, 4);
    assert_eq!(lhs.coeff(&[1]), qi(6));
    assert!(lhs.agrees_with(&rhs));
}

#[test]
fn geometric_series_inverse() {
    let t = VarTable::of(&[("s", 1, false)]);
    let a = (&c(&t, 1) - &v(&t, "s")).truncate(&[6]);
    let inv = a.invert().unwrap();
    for k in 0..=6 {
        assert_eq!(inv.coeff(&[k]), Rational::one());
    }
    assert_eq!(inv.caps(), &[6]);
}

#[test]
fn laurent_monomial_inverse() {
    let t = xtable();
    let x2 = v(&t, "x").pow(2).unwrap();
    let inv = x2.invert().unwrap();
    assert_eq!(inv, Series::mono(&t, qi(1), &[("x", -2)]).unwrap());
}

#[test]
fn cube_inverse_scalar_analogue() {
    let t = VarTable::of(&[("w", 1, false)]);
    let a = (&c(&t, 1) + &v(&t, "w")).pow(3).unwrap().truncate(&[2]);
    let inv = a.invert().unwrap();
    assert_eq!(inv.coeff(&[0]), qi(1));
    assert_eq!(inv.coeff(&[1]), qi(-3));
    assert_eq!(inv.coeff(&[2]), qi(6));
    let one = &a * &inv;
    assert_eq!(one, Series::one(&t).truncate(&[2]));
}

#[test]
fn inverse_errors() {
    let t = qtable();
    assert!(matches!(Series::zero_exact(&t).invert(), Err(SeriesError::Inversion(_))));
    // 1 + z with z uncapped cannot be inverted in finitely many steps
    let a = &c(&t, 1) + &v(&t, "z");
    assert!(matches!(a.invert(), Err(SeriesError::Inversion(_))));
    // q1 is a power-series variable, so q1^-1 does not exist
    assert!(v(&t, "q1").invert().is_err());
}

#[test]
fn log_derivative_examples() {
    let t = qtable();
    let q13 = v(&t, "q1").pow(3).unwrap();
    assert_eq!(q13.log_deriv("q1").unwrap(), q13.scale(&qi(3)));
    assert!(c(&t, 7).log_deriv("q2").unwrap().is_zero());
    let xt = xtable();
    let xi = Series::mono(&xt, qi(1), &[("x", -1)]).unwrap();
    assert_eq!(xi.log_deriv("x").unwrap(), -&xi);
    assert!(matches!(c(&t, 1).log_deriv("nope"), Err(SeriesError::UnknownVariable(_))));
}

#[test]
fn substitution_examples() {
    let qt = VarTable::of(&[("q1", 1, false), ("q2", 3, false)]);
    let xt = VarTable::of(&[("x", -1, true), ("y", 4, false)]);
    let prod = &v(&qt, "q1") * &v(&qt, "q2");
    let xinv = Series::mono(&xt, qi(1), &[("x", -1)]).unwrap();
    let xy = Series::mono(&xt, qi(1), &[("x", 1), ("y", 1)]).unwrap();
    let out = prod.substitute(&[("q1", xinv), ("q2", xy)], &xt).unwrap();
    assert_eq!(out, v(&xt, "y"));

    let ut = VarTable::of(&[("u", -1, true), ("y", 4, false)]);
    let x_as = Series::mono(&ut, qi(1), &[("u", 3)]).unwrap();
    let xs = Series::var(&xt, "x").unwrap();
    assert_eq!(xs.substitute(&[("x", x_as.clone())], &ut).unwrap(), x_as);

    let t4 = Series::mono(&xt, qi(1), &[("x", 4), ("y", 1)]).unwrap();
    assert_eq!(t4.homogeneous_weight(), Some(0));
}

#[test]
fn truncation_is_carried_through_monomial_substitution() {
    let xt = VarTable::of(&[("x", 1, false)]);
    let ut = VarTable::of(&[("u", 1, false)]);
    let a = (&c(&xt, 1) + &v(&xt, "x")).truncate(&[2]);
    let b = a.substitute(&[("x", v(&ut, "u").pow(2).unwrap())], &ut).unwrap();
    assert_eq!(b.caps(), &[5]);
    let bad = a.substitute(&[("x", &c(&ut, 1) + &v(&ut, "u"))], &ut);
    assert!(matches!(bad, Err(SeriesError::Substitution(_))));
}

#[test]
fn laurent_product_caps_account_for_poles() {
    let t = xtable();
    let a = Series::mono(&t, qi(1), &[("x", -1)]).unwrap();
    let b = (&c(&t, 1) + &v(&t, "x")).truncate(&[3, NO_CAP, NO_CAP]);
    let p = &a * &b;
    assert_eq!(p.cap("x").unwrap(), 2);
}

#[test]
fn json_round_trip() {
    let t = qtable();
    let a = (&c(&t, 2) + &v(&t, "q1").scale(&q(-3, 7))).truncate(&[4, NO_CAP, 2]);
    let j = a.to_json();
    assert_eq!(j["terms"][0]["num"], "2");
    assert_eq!(Series::from_json(&j).unwrap(), a);
}

#[test]
fn table_mismatch_is_structural() {
    let a = c(&qtable(), 1);
    let b = c(&xtable(), 1);
    assert!(matches!(a.checked_add(&b), Err(SeriesError::TableMismatch(_))));
}

#[test]
fn exp_of_log_like_series() {
    let t = VarTable::of(&[("t", 1, false)]);
    let e = v(&t, "t").truncate(&[6]).exp().unwrap();
    for k in 0..=6u64 {
        let f = flipqh_series::factorial(k);
        assert_eq!(e.coeff(&[k as i32]), Rational::new(1.into(), f));
    }
}

#[test]
fn matrix_inverse_and_charpoly() {
    let t = VarTable::of(&[("s", 1, false)]);
    let s = v(&t, "s").truncate(&[5]);
    let m =
        SeriesMatrix::from_sparse(&t, 2, &[(0, 0, c(&t, 1)), (0, 1, s.clone()), (1, 0, s.clone()), (1, 1, c(&t, 2))]);
    let inv = m.inverse().unwrap();
    let id = m.mul(&inv).unwrap();
    assert!(id.truncate(&[5]).is_identity());
    let a = QMatrix::from_rows(&[vec![qi(0), qi(1)], vec![qi(-2), qi(3)]]);
    assert_eq!(a.charpoly(), vec![qi(2), qi(-3), qi(1)]);
    assert!(a.inverse().unwrap().mul(&a) == QMatrix::identity(2));
}

fn small_series(t: Arc<VarTable>) -> impl Strategy<Value = Series> {
    prop::collection::vec(((0i32..3, 0i32..3, -1i32..2), -4i64..5), 0..5).prop_map(move |terms| {
        let mut s = Series::zero(&t, &[4, 3, NO_CAP]);
        for ((a, b, z), k) in terms {
            s = &s + &Series::monomial(&t, &[a, b, z], qi(k)).unwrap();
        }
        s
    })
}

fn homogeneous_series(t: Arc<VarTable>, w: i32) -> impl Strategy<Value = Series> {
    prop::collection::vec((0i32..3, 0i32..2, -3i64..4), 0..4).prop_map(move |terms| {
        let mut s = Series::zero_exact(&t);
        for (a, b, k) in terms {
            // weight(q1^a q2^b z^e) = a + 3b + e
            let e = w - a - 3 * b;
            s = &s + &Series::monomial(&t, &[a, b, e], qi(k)).unwrap();
        }
        s
    })
}

proptest! {
    #[test]
    fn ring_axioms(a in small_series(qtable()), b in small_series(qtable()), c in small_series(qtable())) {
        prop_assert!((&(&a * &b) * &c).agrees_with(&(&a * &(&b * &c))));
        prop_assert!((&a * &(&b + &c)).agrees_with(&(&(&a * &b) + &(&a * &c))));
        prop_assert!((&a * &b).agrees_with(&(&b * &a)));
    }

    #[test]
    fn leibniz(a in small_series(qtable()), b in small_series(qtable())) {
        for var in ["q1", "q2", "z"] {
            let lhs = (&a * &b).log_deriv(var).unwrap();
            let rhs = &(&a.log_deriv(var).unwrap() * &b) + &(&a * &b.log_deriv(var).unwrap());
            prop_assert!(lhs.agrees_with(&rhs));
        }
    }

    #[test]
    fn inverse_is_two_sided(a in small_series(qtable()), k in 1i64..4) {
        let t = qtable();
        let unit = &Series::constant(&t, qi(k)) + &(&a * &Series::var(&t, "q1").unwrap());
        let inv = unit.invert().unwrap();
        let one = Series::one(&t);
        prop_assert!((&unit * &inv).agrees_with(&one));
        prop_assert!((&inv * &unit).agrees_with(&one));
    }

    #[test]
    fn weights_add(a in homogeneous_series(qtable(), 2), b in homogeneous_series(qtable(), -1)) {
        let p = &a * &b;
        if !p.is_zero() {
            prop_assert_eq!(p.homogeneous_weight(), Some(1));
        }
    }
}

#[test]
fn zero_coefficients_never_stored() {
    let t = qtable();
    let a = &v(&t, "q1") - &v(&t, "q1");
    assert!(a.is_zero());
    assert_eq!(a.len(), 0);
    assert!(a.coeff(&[1, 0, 0]).is_zero());
}
