use flipqh::bfgmt::{
    bf_mod_y, blowup_reduction_check, delta, gauge_transform, generic_bf_step, gmt_extract, is_z_free, mod_y,
    mod_y_matrix, mod_y_three_point_check, pseudo_inverse, pseudo_inverse_pow, reduced_connection_2_mod_y,
    reduced_connection_mod_y, w_frame_prime_classes,
};
use flipqh::blockdiag::{borderline_solve_21, shear, to_xy, wasow_blockdiag, xy_table, BorderSolution};
use flipqh::pfsys::connection_matrices;
use flipqh::{FlipError, FlipGeometry};
use flipqh_series::{q, qi, Rational, Series, SeriesMatrix, NO_CAP};
use proptest::prelude::*;
use std::sync::OnceLock;

fn g21() -> FlipGeometry {
    FlipGeometry::new(2, 1).unwrap()
}

fn border() -> &'static BorderSolution {
    static SOL: OnceLock<BorderSolution> = OnceLock::new();
    SOL.get_or_init(|| borderline_solve_21(&connection_matrices(&g21(), 0).unwrap(), [9, 2, 8]).unwrap())
}

fn mono(g: &FlipGeometry, c: Rational, x: i32, y: i32, z: i32) -> Series {
    Series::mono(&xy_table(g), c, &[("x", x), ("y", y), ("z", z)]).unwrap()
}

/// Matrix from 1-based `(row, col, coef, x-power, y-power)` entries.
fn grid(g: &FlipGeometry, n: usize, entries: &[(usize, usize, Rational, i32, i32)]) -> SeriesMatrix {
    let mut m = SeriesMatrix::zeros(&xy_table(g), n, n);
    for (i, j, c, a, b) in entries {
        m.set(i - 1, j - 1, mono(g, c.clone(), *a, *b, 0));
    }
    m
}

fn printed_c1_bar() -> SeriesMatrix {
    grid(
        &g21(),
        8,
        &[
            (3, 1, qi(1), 0, 0),
            (5, 2, qi(1), 0, 0),
            (6, 1, q(-3, 2), 2, 0),
            (6, 2, q(-1, 2), 1, 0),
            (6, 3, qi(1), 1, 0),
            (7, 1, q(3, 4), 2, 0),
            (7, 2, q(1, 4), 1, 0),
            (7, 3, q(-1, 2), 1, 0),
            (7, 4, qi(1), 0, 0),
            (8, 1, q(-13, 9), 3, 0),
            (8, 2, q(-1, 4), 2, 0),
            (8, 3, q(1, 2), 2, 0),
            (8, 6, qi(1), 0, 0),
        ],
    )
}

#[test]
fn pseudo_inverse_examples() {
    let f1 = mod_y(&border().f[0]);
    let i1 = pseudo_inverse(&f1, "x").unwrap();
    assert_eq!(i1.coeff(&[3, 0, 0]), q(3, 3));
    assert_eq!(i1.coeff(&[4, 0, 1]), q(-11, 4));
    assert_eq!(i1.coeff(&[5, 0, 2]), q(50, 5));
    let i1x = pseudo_inverse(&f1.shift(&[-1, 0, 0]).unwrap(), "x").unwrap();
    assert_eq!(i1x.coeff(&[2, 0, 0]), q(3, 2));
    assert_eq!(i1x.coeff(&[3, 0, 1]), q(-11, 3));
    assert_eq!(i1x.coeff(&[4, 0, 2]), q(50, 4));
}

#[test]
fn pseudo_inverse_kills_z_free_series() {
    let g = g21();
    let s = &mono(&g, qi(3), 2, 1, 0) + &mono(&g, qi(-1), 0, 0, 0);
    assert!(pseudo_inverse(&s, "x").unwrap().is_zero());
}

#[test]
fn pseudo_inverse_refuses_logarithms() {
    let s = mono(&g21(), qi(1), 0, 0, 2);
    assert!(matches!(pseudo_inverse(&s, "x"), Err(FlipError::Integration(_))));
}

#[test]
fn second_row_identity_from_stirling_recursion() {
    // 𝓘²f₃ + 𝓘f₁ = −𝓘²(f₁/x) modulo y
    let f: Vec<Series> = border().f.iter().map(mod_y).collect();
    let lhs = &pseudo_inverse_pow(&f[2], "x", 2).unwrap() + &pseudo_inverse(&f[0], "x").unwrap();
    let rhs = -pseudo_inverse_pow(&f[0].shift(&[-1, 0, 0]).unwrap(), "x", 2).unwrap();
    assert!(lhs.agrees_with(&rhs));
}

#[test]
fn birkhoff_factor_mod_y_reduces_to_printed_grid() {
    let sol = border();
    let bf = bf_mod_y(sol).unwrap();
    assert!(bf.n_squared_vanishes().unwrap());
    let c1 = reduced_connection_mod_y(sol, &bf).unwrap();
    assert_eq!(c1.first_difference(&printed_c1_bar()), None);
}

#[test]
fn generic_solver_agrees_with_closed_form_factor() {
    let sol = border();
    let e = mod_y_matrix(&sol.e11[0]);
    let gen = generic_bf_step(&e, "x", 8).unwrap();
    let bf = bf_mod_y(sol).unwrap();
    assert_eq!(gen.b.first_difference(&bf.b), None);
    assert!(gen.residual(&e, "x").unwrap().is_zero());
    assert!(is_z_free(&gen.reduced));
    assert_eq!(gen.reduced.first_difference(&printed_c1_bar()), None);
}

#[test]
fn generic_solver_order_zero_is_identity() {
    let e = mod_y_matrix(&border().e11[0]);
    let gen = generic_bf_step(&e, "x", 0).unwrap();
    assert!(gen.b.is_identity());
}

#[test]
fn second_direction_is_unchanged_mod_y() {
    let sol = border();
    let cm = connection_matrices(&g21(), 0).unwrap();
    let bf = bf_mod_y(sol).unwrap();
    let e2 = mod_y_matrix(&sol.e11[1]);
    let c2 = mod_y_matrix(&gauge_transform(&bf.b, &bf.inverse().unwrap(), &e2, "y").unwrap());
    let a2 = reduced_connection_2_mod_y(&cm).unwrap();
    assert!(is_z_free(&c2));
    assert_eq!(c2.first_difference(&a2), None);
    let c1 = printed_c1_bar();
    assert!(c1.commutator(&a2).unwrap().is_zero());
}

#[test]
fn gmt_from_first_columns() {
    let cm = connection_matrices(&g21(), 0).unwrap();
    let c2 = reduced_connection_2_mod_y(&cm).unwrap();
    let p = gmt_extract(&printed_c1_bar(), &c2).unwrap();
    let frame = w_frame_prime_classes(&g21()).unwrap();
    let ring = g21().ring_prime();
    // σ ≡ s¹h′ + s²ξ′
    assert_eq!(p.linear_class(1, &frame), ring.h());
    assert_eq!(p.linear_class(2, &frame), ring.xi());
    let corr = p.correction_classes(&frame);
    assert_eq!(corr.len(), 2);
    let e3 = ring.pow(&ring.e(), 3);
    // x²: −¾(ξ′−h′)³; x³: −13/27 ξ′³h′
    assert_eq!(corr[0].0, vec![2, 0, 0]);
    assert_eq!(corr[0].1, e3.scale(&q(-3, 4)));
    assert_eq!(corr[1].0, vec![3, 0, 0]);
    let xi3h = ring.mul(&ring.pow(&ring.xi(), 3), &ring.h());
    assert_eq!(corr[1].1, xi3h.scale(&q(-13, 27)));
}

#[test]
fn printed_quadratic_gmt_term_differs_from_grid() {
    let ring = g21().ring_prime();
    let e3 = ring.pow(&ring.e(), 3);
    let xi2h = ring.mul(&ring.pow(&ring.xi(), 2), &ring.h());
    assert_ne!(e3.scale(&q(-3, 4)), xi2h.scale(&q(3, 4)));
}

#[test]
fn three_point_invariant_mod_x2_y() {
    let cm = connection_matrices(&g21(), 0).unwrap();
    let report = mod_y_three_point_check(&cm).unwrap();
    assert!(report.passed(), "{}", report.detail);
}

#[test]
fn blowups_reduce_to_projective_space() {
    for r in 1..=3 {
        let report = blowup_reduction_check(&FlipGeometry::new(r, 0).unwrap(), 5).unwrap();
        assert!(report.passed(), "{}", report.detail);
    }
}

#[test]
fn f1_matrices_in_x_y() {
    let g = FlipGeometry::new(1, 0).unwrap();
    let (ax, ay) = to_xy(&connection_matrices(&g, 0).unwrap()).unwrap();
    let px = grid(
        &g,
        4,
        &[
            (1, 2, qi(1), 1, 1),
            (1, 4, qi(1), 1, 1),
            (2, 3, qi(1), 1, 1),
            (3, 4, qi(-1), 0, 0),
            (4, 1, qi(1), 0, 0),
            (4, 3, qi(-1), 1, 1),
            (4, 4, qi(1), -1, 0),
        ],
    );
    let py = grid(
        &g,
        4,
        &[
            (1, 2, qi(1), 1, 1),
            (1, 3, qi(1), 0, 1),
            (1, 4, qi(1), 1, 1),
            (2, 1, qi(1), 0, 0),
            (2, 3, qi(1), 1, 1),
            (3, 2, qi(1), 0, 0),
            (4, 3, qi(-1), 1, 1),
        ],
    );
    assert_eq!(ax.first_difference(&px), None);
    assert_eq!(ay.first_difference(&py), None);
    // the kernel entry is +1/x = −ω/x with ω = −1
    assert_eq!(ax.get(3, 3).coeff(&[-1, 0, 0]), qi(1));
}

#[test]
fn f1_reduced_matrices_recover_projective_plane() {
    let g = FlipGeometry::new(1, 0).unwrap();
    let sys = shear(&connection_matrices(&g, 0).unwrap()).unwrap();
    let dec = wasow_blockdiag(&sys, 6, true).unwrap();
    let ey = dec.image_in_x(2).unwrap();
    let ex = dec.image_in_x(1).unwrap();
    let at0 = |m: &SeriesMatrix| m.map(|s| s.filter(|e| e[0] == 0));
    assert!(at0(&ex).is_zero());
    let a_xi = grid(&g, 3, &[(1, 3, qi(1), 0, 1), (2, 1, qi(1), 0, 0), (3, 2, qi(1), 0, 0)]);
    assert_eq!(at0(&ey).first_difference(&a_xi), None);
    let bf = generic_bf_step(&ex, "x", 5).unwrap();
    assert!(at0(&bf.b).is_identity());
}

#[test]
fn truncation_too_small_is_reported() {
    let sol = border();
    assert!(matches!(generic_bf_step(&sol.e11[0], "x", 9), Err(FlipError::Truncation(_))));
}

proptest! {
    #[test]
    fn pseudo_inverse_is_right_inverse_of_delta(
        terms in proptest::collection::vec((1i32..6, 1i32..5, -20i64..20), 1..6)
    ) {
        let g = g21();
        let t = xy_table(&g);
        let s = Series::from_terms(&t, &[NO_CAP; 3], terms.iter().map(|&(a, c, v)| (vec![a, 0, c], qi(v)))).unwrap();
        let back = delta(&pseudo_inverse(&s, "x").unwrap(), "x").unwrap();
        prop_assert!(back.agrees_with(&s));
    }
}
