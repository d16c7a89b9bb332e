use flipqh::blockdiag::{borderline_solve_21, z0_forms};
use flipqh::extremal::*;
use flipqh::pfsys::connection_matrices;
use flipqh::FlipGeometry;
use flipqh_series::{binomial, q, qi, Rational, Series};
use num_bigint::BigInt;
use proptest::prelude::*;

#[test]
fn lambert_twist_coefficient_and_constant_term() {
    let b6 = lambert(&qi(9), &qi(6), 5).unwrap();
    assert_eq!(b6.coeff(&[1]), qi(6));
    // 2/(3n+2)·C(9n+6, n)
    for n in 0..5i64 {
        assert_eq!(b6.coeff(&[n as i32]), q(2, 3 * n + 2) * binomial(&qi(9 * n + 6), n as u64));
    }
    for s in 0..6 {
        assert_eq!(lambert(&qi(s), &qi(1), 4).unwrap().constant_term(), qi(1));
    }
}

#[test]
fn lambert_algebraic_equation() {
    assert!(lambert_equation_residual(9, 21).unwrap().is_zero());
    for s in 1..6 {
        assert!(lambert_equation_residual(s, 12).unwrap().is_zero(), "s = {s}");
    }
}

#[test]
fn lambert_rejects_vanishing_denominator() {
    assert!(lambert(&qi(1), &qi(-2), 4).is_err());
}

#[test]
fn h1_is_a_root_of_the_key_polynomial() {
    let h = h_closed_forms(21).unwrap();
    assert_eq!(h[0].coeff(&[0]), qi(-1));
    assert_eq!(h[0].coeff(&[1]), qi(-6));
    assert!(key_polynomial(&h[0]).unwrap().is_zero());
}

#[test]
fn closed_forms_solve_the_nonlinear_system() {
    let h = h_closed_forms(15).unwrap();
    for (i, r) in nl_residuals(&h).iter().enumerate() {
        assert!(r.is_zero(), "equation {}", i + 1);
    }
}

#[test]
fn nonlinear_solve_matches_closed_forms() {
    let closed = h_closed_forms(12).unwrap();
    let solved = nl_system_solve(12).unwrap();
    for i in 0..8 {
        assert_eq!(closed[i].first_difference(&solved[i]), None, "h{}", i + 1);
    }
    // degree 0: h₃ = 1, h₂ = −½, the rest vanish apart from h₁ = −1
    let c0: Vec<Rational> = solved.iter().map(Series::constant_term).collect();
    assert_eq!(c0, vec![qi(-1), q(-1, 2), qi(1), qi(0), qi(0), qi(0), qi(0), qi(0)]);
}

#[test]
fn consistency_determinant_is_t_times_key_polynomial() {
    let det = consistency_determinant().unwrap();
    let tf = t_key_polynomial_tx().unwrap();
    assert!(det.agrees_with(&tf));
}

#[test]
fn three_paths_to_the_frame_series_agree() {
    let g = FlipGeometry::new(2, 1).unwrap();
    // z = 0 only needs z⁰ terms, so trade z-cap for y-cap: t-cap 6
    let sol = borderline_solve_21(&connection_matrices(&g, 0).unwrap(), [26, 6, 2]).unwrap();
    let bd = z0_forms(&sol).unwrap();
    assert!(bd.iter().all(|h| h.caps()[0] == 6));
    let report = z0_agreement(10, Some(&bd)).unwrap();
    assert!(report.passed(), "{}", report.detail);
}

#[test]
fn cayley_numbers() {
    let t = cayley(10).unwrap();
    let vals: Vec<i64> = (1..=5).map(|d| t.get(d).unwrap().try_into().unwrap()).collect();
    assert_eq!(vals, vec![1, 1, 3, 16, 125]);
    assert!(t.matches_closed_form());
    assert_eq!(t.get(10).unwrap(), BigInt::from(100_000_000));
    assert_eq!(t.get(-1).unwrap(), BigInt::from(-1));
}

#[test]
fn cayley_needs_positive_degree() {
    assert!(cayley(0).is_err());
}

#[test]
fn invariance_relation_determines_the_same_numbers() {
    let t = cayley(11).unwrap();
    assert_eq!(cayley_from_invariance(11).unwrap(), t);
    assert!(cayley_relation_check(&t, 12).unwrap().passed());
    assert_eq!(cayley_relation_sum(&t, 3).unwrap(), BigInt::from(-3));
    assert!(cayley_relation_sum(&t, 13).is_err());
}

#[test]
fn euler_functional_equation() {
    let t = cayley(13).unwrap();
    assert!(euler_residual(&t, 13).unwrap().is_zero());
    assert!(euler_residual(&t, 14).is_err());
}

#[test]
fn stirling_identities() {
    let r = stirling_checks(12);
    assert!(r.passed(), "{}", r.detail);
    assert_eq!(stirling2_table(3)[3][2], BigInt::from(3));
    assert_eq!(first_kind_closed(2), qi(11));
    assert_eq!(stirling_vanishing_sum(4), BigInt::from(0));
}

#[test]
fn extremal_invariance() {
    let t = cayley(11).unwrap();
    assert_eq!(invariance_sum(&t, 3).unwrap(), BigInt::from(1));
    assert_eq!(invariance_sum(&t, 4).unwrap(), BigInt::from(1));
    assert_eq!(one_point_prime().unwrap(), (1, qi(1)));
    assert!(extremal_invariance_check(&t, 12).unwrap().passed());
}

#[test]
fn wrong_cayley_value_breaks_invariance() {
    let mut vals = cayley(6).unwrap().values().to_vec();
    vals[4] = BigInt::from(15);
    let t = CayleyTable::from_values(vals).unwrap();
    assert!(!cayley_relation_check(&t, 7).unwrap().passed());
    assert!(!extremal_invariance_check(&t, 7).unwrap().passed());
    assert!(!t.matches_closed_form());
}

proptest! {
    #[test]
    fn twists_are_additive(l1 in -4i64..5, l2 in -4i64..5, s in 1i64..6) {
        prop_assume!(l1 != 0 && l2 != 0 && l1 + l2 != 0);
        let n = 8;
        let a = lambert(&qi(s), &qi(l1), n);
        let b = lambert(&qi(s), &qi(l2), n);
        let c = lambert(&qi(s), &qi(l1 + l2), n);
        if let (Ok(a), Ok(b), Ok(c)) = (a, b, c) {
            prop_assert!((&a * &b).agrees_with(&c));
        }
    }
}
