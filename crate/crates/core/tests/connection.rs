use flipqh::pfsys::{
    box_operators, box_operators_prime, charpoly_identity_check, connection_matrices, eigenvalue_check,
    entry_shape_check, first_column_check, flatness_check, homogeneity_check, kernel_block_check, q_table,
    qde_oracle_check, singular_eigenvalue_check, sublinearity_check, up_rule_factor, IFunction, PFOperator,
};
use flipqh::FlipGeometry;
use flipqh_series::{q, qi, Series, SeriesMatrix};
use proptest::prelude::*;

/// Matrix from 1-based `(row, col, coef, q1-power, q2-power)` entries.
fn grid(g: &FlipGeometry, entries: &[(usize, usize, i64, i32, i32)]) -> SeriesMatrix {
    let t = q_table(g);
    let n = g.big_r();
    let mut m = SeriesMatrix::zeros(&t, n, n);
    for &(i, j, c, a, b) in entries {
        let s = Series::mono(&t, qi(c), &[("q1", a), ("q2", b)]).unwrap();
        let cur = m.get(i - 1, j - 1).clone();
        m.set(i - 1, j - 1, &cur + &s);
    }
    m
}

#[test]
fn flip_21_matches_printed_matrices() {
    let g = FlipGeometry::new(2, 1).unwrap();
    let cm = connection_matrices(&g, 0).unwrap();
    let a1 = grid(
        &g,
        &[
            (1, 6, 1, 1, 1),
            (2, 1, 1, 0, 0),
            (3, 8, 1, 1, 1),
            (4, 2, 1, 0, 0),
            (5, 3, 1, 0, 0),
            (6, 4, 1, 0, 0),
            (6, 9, -1, 0, 0),
            (7, 5, 1, 0, 0),
            (8, 6, -1, 0, 0),
            (8, 7, 1, 0, 0),
            (9, 2, 1, 0, 0),
            (9, 3, -1, 0, 0),
            (9, 9, 1, 1, 0),
        ],
    );
    let a2 = grid(
        &g,
        &[
            (1, 4, -1, 0, 1),
            (1, 5, 1, 0, 1),
            (1, 6, 1, 1, 1),
            (1, 9, 1, 0, 1),
            (2, 1, 1, 0, 0),
            (2, 6, -1, 0, 1),
            (2, 7, 1, 0, 1),
            (3, 1, 1, 0, 0),
            (3, 8, 1, 1, 1),
            (4, 2, 1, 0, 0),
            (4, 8, 1, 0, 1),
            (5, 2, 1, 0, 0),
            (5, 3, 1, 0, 0),
            (6, 4, 1, 0, 0),
            (7, 4, 1, 0, 0),
            (7, 5, 1, 0, 0),
            (8, 7, 1, 0, 0),
            (9, 8, 1, 0, 1),
        ],
    );
    assert_eq!(cm.c1, a1, "C1 differs:\n{}", cm.c1.to_grid());
    assert_eq!(cm.c2, a2, "C2 differs:\n{}", cm.c2.to_grid());
}

#[test]
fn atiyah_flop_matches_printed_matrices() {
    let g = FlipGeometry::new(1, 1).unwrap();
    let cap = 6;
    let cm = connection_matrices(&g, cap).unwrap();
    let t = q_table(&g);
    let mut f = Series::zero(&t, &[cap, flipqh_series::NO_CAP]);
    for k in 1..=cap {
        f = &f + &Series::mono(&t, qi(1), &[("q1", k)]).unwrap();
    }
    // q1^{-1} f = 1/(1 - q1)
    let mut finv = Series::zero(&t, &[cap, flipqh_series::NO_CAP]);
    for k in 0..=cap {
        finv = &finv + &Series::mono(&t, qi(1), &[("q1", k)]).unwrap();
    }
    let mut a1 = grid(
        &g,
        &[(1, 4, 1, 1, 1), (2, 1, 1, 0, 0), (3, 6, 1, 1, 1), (5, 3, 1, 0, 0), (6, 4, -1, 0, 0), (6, 5, 1, 0, 0)],
    );
    a1.set(3, 1, -&f);
    a1.set(3, 2, finv);
    let a2 = grid(
        &g,
        &[
            (1, 4, -1, 0, 1),
            (1, 4, 1, 1, 1),
            (1, 5, 1, 0, 1),
            (2, 1, 1, 0, 0),
            (2, 6, 1, 0, 1),
            (3, 1, 1, 0, 0),
            (3, 6, 1, 1, 1),
            (4, 2, 1, 0, 0),
            (5, 2, 1, 0, 0),
            (5, 3, 1, 0, 0),
            (6, 5, 1, 0, 0),
        ],
    );
    assert!(cm.c1.agrees_with(&a1), "C1:\n{}", cm.c1.to_grid());
    assert!(cm.c2.agrees_with(&a2), "C2: {:?}", cm.c2.first_difference(&a2));
    assert_eq!(cm.caps()[0], cap);

    // the displayed q2(1 - q1) at (1,4) of the z∂2 matrix has the opposite sign;
    // with that sign the oracle and flatness both fail
    let mut printed = a2.clone();
    printed.set(0, 3, -a2.get(0, 3));
    let alt = flipqh::pfsys::ConnectionMatrices::from_matrices(&g, cm.c1.clone(), printed).unwrap();
    assert!(!qde_oracle_check(&alt, (2, 2)).unwrap().residuals.is_empty());
    assert!(!flatness_check(&alt).unwrap());
}

#[test]
fn f1_blowup_matches_printed_matrices() {
    let g = FlipGeometry::new(1, 0).unwrap();
    let cm = connection_matrices(&g, 0).unwrap();
    let a1 = grid(
        &g,
        &[(1, 3, 1, 1, 1), (2, 1, 1, 0, 0), (3, 2, 1, 0, 0), (3, 4, 1, 0, 0), (4, 1, -1, 0, 0), (4, 4, -1, 1, 0)],
    );
    let a2 = grid(
        &g,
        &[
            (1, 2, 1, 0, 1),
            (1, 3, 1, 1, 1),
            (1, 4, 1, 0, 1),
            (2, 1, 1, 0, 0),
            (2, 3, 1, 0, 1),
            (3, 2, 1, 0, 0),
            (4, 3, -1, 0, 1),
        ],
    );
    assert_eq!(cm.c1, a1, "C1:\n{}", cm.c1.to_grid());
    assert_eq!(cm.c2, a2, "C2:\n{}", cm.c2.to_grid());
}

const CASES: &[(usize, usize)] = &[(1, 0), (2, 0), (1, 1), (2, 1), (3, 1), (2, 2), (3, 2), (4, 1)];

#[test]
fn oracle_confirms_connection_matrices() {
    for &(r, rp) in &[(1, 0), (2, 0), (1, 1), (2, 1), (3, 1), (3, 2)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let cm = connection_matrices(&g, 6).unwrap();
        let out = qde_oracle_check(&cm, (4, 3)).unwrap();
        assert!(out.residuals.is_empty(), "({r},{rp}): {:?}", out.residuals);
        assert_eq!(out.degrees_checked, 20);
    }
}

#[test]
fn oracle_detects_a_corrupted_entry() {
    let g = FlipGeometry::new(2, 1).unwrap();
    let mut cm = connection_matrices(&g, 0).unwrap();
    let t = cm.c1.table().clone();
    let bumped = cm.c1.get(0, 5) + &Series::mono(&t, qi(1), &[("q1", 1), ("q2", 1)]).unwrap();
    cm.c1.set(0, 5, bumped);
    let out = qde_oracle_check(&cm, (2, 2)).unwrap();
    assert!(!out.residuals.is_empty());
}

#[test]
fn oracle_refuses_caps_beyond_flop_truncation() {
    let g = FlipGeometry::new(1, 1).unwrap();
    let cm = connection_matrices(&g, 2).unwrap();
    assert!(matches!(qde_oracle_check(&cm, (3, 1)), Err(flipqh::FlipError::Truncation(_))));
}

#[test]
fn structural_properties() {
    for &(r, rp) in CASES {
        let g = FlipGeometry::new(r, rp).unwrap();
        let cm = connection_matrices(&g, 8).unwrap();
        assert!(flatness_check(&cm).unwrap(), "flat ({r},{rp})");
        assert!(sublinearity_check(&g), "sub-linear ({r},{rp})");
        assert!(homogeneity_check(&cm).passed(), "homogeneous ({r},{rp})");
        assert!(kernel_block_check(&cm).unwrap(), "kernel ({r},{rp})");
        assert!(first_column_check(&cm).unwrap(), "first column ({r},{rp})");
        assert!(entry_shape_check(&cm), "entry shapes ({r},{rp})");
        assert!(charpoly_identity_check(&cm).unwrap(), "charpoly ({r},{rp})");
    }
}

#[test]
fn power_identities() {
    for &(r, rp) in &[(1, 0), (2, 1), (3, 1), (3, 2)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let cm = connection_matrices(&g, 0).unwrap();
        let t = cm.c1.table().clone();
        let pow =
            |m: &SeriesMatrix, k: usize| (0..k).fold(SeriesMatrix::identity(&t, m.rows()), |a, _| a.mul(m).unwrap());
        let b = cm.b();
        let q1 = Series::var(&t, "q1").unwrap();
        let q2 = Series::var(&t, "q2").unwrap();
        assert_eq!(pow(&cm.c1, r + 1), pow(&b, rp + 1).scale_series(&q1));
        assert_eq!(cm.c2.mul(&pow(&b, rp + 1)).unwrap(), SeriesMatrix::identity(&t, g.big_r()).scale_series(&q2));
    }
}

#[test]
fn i_function_is_annihilated_by_box_operators() {
    for &(r, rp) in &[(1, 0), (1, 1), (2, 1), (3, 1)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let ifn = IFunction::new(&g.ring(), (4, 4));
        let (l, gm) = box_operators(&g);
        for d1 in 0..=4 {
            for d2 in 0..=4 {
                for op in [&l, &gm] {
                    let v = op.apply_to_i(&ifn, (d1, d2)).unwrap();
                    assert!(v.iter().all(|s| s.is_zero()), "({r},{rp}) at {d1},{d2}");
                }
            }
        }
    }
}

#[test]
fn i_function_is_homogeneous_with_explicit_z_order() {
    for &(r, rp) in &[(1, 0), (1, 1), (2, 1), (3, 2)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let ifn = IFunction::new(&g.ring(), (3, 3));
        let w = (g.d() as i64, rp as i64 + 2);
        for d1 in 0..=3 {
            for d2 in 0..=3 {
                assert!(ifn.is_homogeneous((d1, d2), w).unwrap());
                if (d1, d2) == (0, 0) {
                    continue;
                }
                let want = -(w.0 * d1 as i64 + w.1 * d2 as i64) - if d2 < d1 { rp as i64 + 1 } else { 0 };
                assert_eq!(ifn.max_z_exponent((d1, d2)).unwrap().map(i64::from), Some(want), "({r},{rp}) {d1},{d2}");
            }
        }
    }
}

#[test]
fn backward_degrees_agree_with_up_rule() {
    use flipqh::pfsys::{lin_inv, Gen};
    for &(r, rp) in &[(1, 0), (2, 1), (3, 1)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let ring = g.ring();
        let ifn = IFunction::new(&ring, (4, 3));
        for d1 in 1..=4 {
            for d2 in 0..d1.min(4) {
                let mut x = up_rule_factor(&ring, d1, d2);
                for m in 1..=d1 as i64 {
                    for _ in 0..=r {
                        x = lin_inv(&ring, &x, Gen::H, m);
                    }
                }
                for m in 1..=d2 as i64 {
                    x = lin_inv(&ring, &x, Gen::Xi, m);
                }
                if d2 <= 3 {
                    assert_eq!(&x, ifn.coefficient((d1, d2)).unwrap(), "({r},{rp}) {d1},{d2}");
                }
            }
        }
    }
}

#[test]
fn primed_box_operators_in_unprimed_variables() {
    for &(r, rp) in &[(1, 0), (2, 1), (3, 1)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let (l, gm) = box_operators(&g);
        let (lp, gp) = box_operators_prime(&g).unwrap();
        let t = l.table().clone();
        let q1inv = Series::mono(&t, qi(1), &[("q1", -1)]).unwrap();
        let q1 = Series::var(&t, "q1").unwrap();
        assert_eq!(lp, l.left_mul(&-&q1inv));
        assert_eq!(gp, PFOperator::d2(&t).mul(&l).add(&gm.left_mul(&q1)));
    }
}

#[test]
fn primed_i_function_diverges_along_the_flipped_ray() {
    let g = FlipGeometry::new(2, 1).unwrap();
    let ifn = IFunction::new(&g.ring_prime(), (6, 0));
    let sizes: Vec<_> = (0..=6).map(|n| flipqh::pfsys::max_abs_coefficient(ifn.coefficient((n, 0)).unwrap())).collect();
    // growth like (n!)^{r-r'} forces unbounded ratios
    let ratios: Vec<f64> =
        sizes.windows(2).map(|w| num_traits::ToPrimitive::to_f64(&(&w[1] / &w[0])).unwrap()).collect();
    assert!(ratios[2..].windows(2).all(|w| w[1] > w[0]) && ratios[5] > 4.0, "{ratios:?}");
}

#[test]
fn eigenvalues_at_rational_points() {
    for &(r, rp) in CASES {
        let g = FlipGeometry::new(r, rp).unwrap();
        for (a, b) in [(q(1, 2), q(3, 4)), (q(5, 3), q(2, 3)), (q(7, 4), q(3, 2))] {
            let rep = eigenvalue_check(&g, &a, &b, 1e-9).unwrap();
            assert!(rep.passed(), "{}", rep.detail);
        }
    }
}

#[test]
fn singular_eigenvalues_near_the_flipped_limit() {
    for &(r, rp) in &[(1, 0), (2, 0), (2, 1), (3, 1), (4, 1)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let rep = singular_eigenvalue_check(&g, &q(1, 10000), &qi(1), 0.01).unwrap();
        assert!(rep.passed(), "({r},{rp}) {}", rep.detail);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn charpoly_holds_at_random_points(r in 1usize..5, rp in 0usize..3, a in 1i64..40, b in 1i64..40) {
        prop_assume!(rp <= r && !(rp == r && r % 2 == 1 && a == 20));
        let g = FlipGeometry::new(r, rp).unwrap();
        let q1 = q(a + 20, 40);
        let q2 = q(b + 20, 40);
        let (c1, _) = flipqh::pfsys::connection_at(&g, &q1, &q2).unwrap();
        prop_assert!(flipqh::pfsys::exact_charpoly_at(&g, &c1, &q1, &q2));
    }
}
