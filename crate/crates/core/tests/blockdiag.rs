use flipqh::blockdiag::{
    borderline_solve_21, decompose, kernel_diagonalizable_over_q, polarized_pairing_check, shear, u_coefficients,
    w_frame_gram, w_frame_matrices, w_frame_sheared, wasow_blockdiag, weight_zero_forms, weight_zero_reduction_check,
    xy_table, yz_table, z0_forms, z0_kernel_eigenvalue_check, BorderSolution, KernelEigenFrame,
};
use flipqh::pfsys::connection_matrices;
use flipqh::{FlipError, FlipGeometry};
use flipqh_series::{factorial, harmonic, q, qi, QMatrix, Rational, Series, SeriesMatrix, NO_CAP};
use proptest::prelude::*;
use std::sync::OnceLock;

const CAPS: [i32; 3] = [9, 2, 8];

fn g21() -> FlipGeometry {
    FlipGeometry::new(2, 1).unwrap()
}

fn border() -> &'static BorderSolution {
    static SOL: OnceLock<BorderSolution> = OnceLock::new();
    SOL.get_or_init(|| borderline_solve_21(&connection_matrices(&g21(), 0).unwrap(), CAPS).unwrap())
}

fn fact(n: u64) -> Rational {
    Rational::from_integer(factorial(n))
}

/// Matrix over `{x, y, z}` from 1-based `(row, col, coef, x-power, y-power)` entries.
fn xy_grid(entries: &[(usize, usize, Rational, i32, i32)]) -> SeriesMatrix {
    let t = xy_table(&g21());
    let mut m = SeriesMatrix::zeros(&t, 9, 9);
    for (i, j, c, a, b) in entries {
        m.set(i - 1, j - 1, Series::mono(&t, c.clone(), &[("x", *a), ("y", *b)]).unwrap());
    }
    m
}

/// `c x^a y^b (Σ_k zs[k] (zx)^k + y x⁴ Σ_k ys[k] (zx)^k)`.
fn g_series(c: Rational, a: i32, b: i32, zs: &[i64], ys: &[i64]) -> Series {
    let t = xy_table(&g21());
    let mut terms = Vec::new();
    for (k, &v) in zs.iter().enumerate() {
        terms.push((vec![a + k as i32, b, k as i32], &c * qi(v)));
    }
    for (k, &v) in ys.iter().enumerate() {
        terms.push((vec![a + 4 + k as i32, b + 1, k as i32], &c * qi(v)));
    }
    Series::from_terms(&t, &[NO_CAP; 3], terms).unwrap()
}

/// Terms of `s` with `x`-power at most `xmax`.
fn upto(s: &Series, xmax: i32) -> Series {
    s.filter(|e| e[0] <= xmax)
}

#[test]
fn w_frame_reproduces_printed_systems() {
    let cm = connection_matrices(&g21(), 0).unwrap();
    let (a1, a2) = w_frame_matrices(&cm).unwrap();
    let h = q(1, 2);
    let sym = xy_grid(&[
        (1, 4, -h.clone(), 1, 1),
        (1, 5, qi(1), 1, 1),
        (1, 9, qi(1), 1, 1),
        (2, 6, -h.clone(), 1, 1),
        (2, 7, qi(1), 1, 1),
        (3, 1, qi(1), 0, 0),
        (3, 6, q(1, 4), 1, 1),
        (3, 7, -h.clone(), 1, 1),
        (4, 8, qi(1), 1, 1),
        (5, 2, qi(1), 0, 0),
        (5, 8, -h.clone(), 1, 1),
        (6, 9, qi(1), 0, 0),
        (7, 4, qi(1), 0, 0),
        (7, 9, -h.clone(), 0, 0),
        (8, 6, qi(1), 0, 0),
        (9, 2, -h.clone(), 0, 0),
        (9, 3, qi(1), 0, 0),
        (9, 8, qi(1), 1, 1),
        (9, 9, qi(-1), -1, 0),
    ]);
    let qde2 = xy_grid(&[
        (1, 4, -h.clone(), 1, 1),
        (1, 5, qi(1), 1, 1),
        (1, 6, qi(1), 0, 1),
        (1, 9, qi(1), 1, 1),
        (2, 1, qi(1), 0, 0),
        (2, 6, -h.clone(), 1, 1),
        (2, 7, qi(1), 1, 1),
        (3, 1, h.clone(), 0, 0),
        (3, 6, q(1, 4), 1, 1),
        (3, 7, -h.clone(), 1, 1),
        (3, 8, qi(1), 0, 1),
        (4, 2, qi(1), 0, 0),
        (4, 8, qi(1), 1, 1),
        (5, 2, qi(1), 0, 0),
        (5, 3, qi(1), 0, 0),
        (5, 8, -h.clone(), 1, 1),
        (6, 4, qi(1), 0, 0),
        (7, 4, qi(1), 0, 0),
        (7, 5, qi(1), 0, 0),
        (8, 6, h, 0, 0),
        (8, 7, qi(1), 0, 0),
        (9, 8, qi(1), 1, 1),
    ]);
    assert_eq!(a1.first_difference(&sym), None);
    assert_eq!(a2.first_difference(&qde2), None);
}

#[test]
fn g_series_match_printed_table() {
    let sol = border();
    let h = q(1, 2);
    let printed = [
        g_series(qi(-1), 2, 1, &[1, 2, 6, 24, 120, 720, 5040], &[5, 63, 642]),
        g_series(qi(-1), 3, 1, &[1, 4, 18, 96, 600, 4320, 35280], &[7, 115, 1448]),
        g_series(h.clone(), 3, 1, &[3, 14, 70, 404, 2688, 20376, 173808], &[23, 407, 5454]),
        g_series(qi(-1), 4, 1, &[1, 7, 46, 326, 2556, 22212], &[9, 192]),
        g_series(h.clone(), 4, 1, &[3, 23, 162, 1214, 9972, 90180], &[29, 654]),
        g_series(qi(-1), 1, 0, &[1, 1, 2, 6, 24, 120, 720, 5040], &[3, 30, 253, 2168]),
        g_series(h, 1, 0, &[1, 1, 2, 6, 24, 120, 720, 5040], &[5, 54, 489, 4472]),
        g_series(qi(1), 2, 0, &[1, 3, 11, 50, 274, 1764, 13068, 109584], &[6, 87, 986, 10803]),
    ];
    let xmax = [8, 9, 9, 9, 9, 8, 8, 9];
    for i in 0..8 {
        let got = upto(&sol.g[i], xmax[i]);
        assert_eq!(got.first_difference(&printed[i]), None, "g{}", i + 1);
    }
}

#[test]
fn printed_g2_z5_coefficient_is_a_digit_swap() {
    // The table prints 4230; n·n! at n = 6 and the g₃ + ½g₂ series both require 4320.
    let g2 = &border().g[1];
    assert_eq!(g2.coeff(&[8, 1, 5]), qi(-4320));
    let sum = &border().g[2] + &g2.scale(&q(1, 2));
    assert_eq!(sum.coeff(&[8, 1, 5]), qi(8028));
}

#[test]
fn main_subseries_follow_closed_forms() {
    let sol = border();
    let main = |i: usize, x0: i32, y0: i32, k: i32| sol.g[i].coeff(&[x0 + k, y0, k]);
    for n in 0..=6u64 {
        let k = n as i32;
        assert_eq!(main(0, 2, 1, k), -fact(n + 1), "g1 factorial");
        assert_eq!(main(5, 1, 0, k), -fact(n), "g6 factorial");
        assert_eq!(main(6, 1, 0, k), fact(n) / qi(2), "g7 factorial");
        assert_eq!(main(1, 3, 1, k), -(fact(n + 1) * qi(n as i64 + 1)), "g2 derivative");
        assert_eq!(main(7, 2, 0, k), fact(n + 1) * harmonic(n + 1), "g8 Stirling");
    }
    for n in 2..=7u64 {
        let k = n as i32 - 2;
        assert_eq!(main(3, 4, 1, k), -(fact(n) * (qi(n as i64) - harmonic(n))), "g4");
    }
    let s3 = &sol.g[2] + &sol.g[1].scale(&q(1, 2));
    let s5 = &sol.g[4] + &sol.g[3].scale(&q(1, 2));
    for n in 1..=6u64 {
        let k = n as i32 - 1;
        assert_eq!(s3.coeff(&[3 + k, 1, k]), fact(n + 1) * (harmonic(n + 1) - qi(1)), "g3 + g2/2");
        let a5 = fact(n + 2) * (harmonic(n + 2) - qi(2)) + fact(n + 1);
        assert_eq!(s5.coeff(&[4 + k, 1, k]), a5, "g5 + g4/2");
    }
}

#[test]
fn second_order_sums_use_unit_weight() {
    // The y² parts 9, 177, 2558 and 11, 270 belong to g₃ + g₂ and g₅ + g₄.
    let sol = border();
    let s3 = &sol.g[2] + &sol.g[1];
    let s5 = &sol.g[4] + &sol.g[3];
    assert_eq!([0, 1, 2].map(|k| s3.coeff(&[7 + k, 2, k])), [q(9, 2), q(177, 2), qi(1279)]);
    assert_eq!([0, 1].map(|k| s5.coeff(&[8 + k, 2, k])), [q(11, 2), qi(135)]);
}

#[test]
fn kernel_entries_match_printed_values() {
    let sol = border();
    let t = xy_table(&g21());
    let e1 = g_series(qi(1), 3, 1, &[3, 12, 55, 300, 1918, 14112], &[21, 348])
        + Series::mono(&t, qi(-1), &[("x", -1)]).unwrap();
    assert_eq!(upto(&sol.e1_22, 8).first_difference(&e1), None);
    let x = Series::var(&t, "x").unwrap();
    let y = Series::var(&t, "y").unwrap();
    assert!(sol.e2_22.agrees_with(&(&(&x * &y) * &sol.g[7])));
    // E₁²² = −1/x − ½g₂ + g₃ + xy g₈
    let alt = &(&(&Series::mono(&t, qi(-1), &[("x", -1)]).unwrap() - &sol.g[1].scale(&q(1, 2))) + &sol.g[2])
        + &(&(&x * &y) * &sol.g[7]);
    assert!(sol.e1_22.agrees_with(&alt));
}

#[test]
fn border_gauge_residuals_vanish() {
    let cm = connection_matrices(&g21(), 0).unwrap();
    for r in border().gauge_residuals(&cm).unwrap() {
        assert!(r.is_zero());
        assert!(r.min_caps()[0] >= 7, "{:?}", r.min_caps());
    }
}

#[test]
fn antisymmetry_and_z0_normalization() {
    let sol = border();
    assert!(sol.antisymmetry().unwrap());
    let h = z0_forms(sol).unwrap();
    assert_eq!(h[0].coeff(&[0]), qi(-1));
    assert_eq!(h[0].coeff(&[1]), qi(-6));
}

#[test]
fn polarized_pairing_is_orthogonal() {
    let report = polarized_pairing_check(border(), &w_frame_gram().unwrap()).unwrap();
    assert!(report.passed(), "{}", report.detail);
}

#[test]
fn w_frame_gram_is_antidiagonal() {
    let g = w_frame_gram().unwrap();
    let want =
        QMatrix::from_fn(9, 9, |i, j| if (i < 8 && j < 8 && i + j == 7) || (i == 8 && j == 8) { qi(1) } else { qi(0) });
    assert_eq!(g, want);
}

#[test]
fn wasow_agrees_with_border_solve() {
    let cm = connection_matrices(&g21(), 0).unwrap();
    let sys = w_frame_sheared(&cm).unwrap();
    let dec = decompose(&sys, &[8, 1], 9, QMatrix::identity(1)).unwrap();
    let sol = border();
    let to_u = |s: &Series| s.substitute(&[("x", Series::var(dec.p.table(), "u").unwrap())], dec.p.table()).unwrap();
    for i in 0..8 {
        assert!(dec.p.get(i, 8).agrees_with(&to_u(&sol.g[i]).truncate(&[9, 2, 8])), "g{}", i + 1);
        assert!(dec.p.get(8, i).agrees_with(&to_u(&sol.f[i]).truncate(&[9, 2, 8])), "f{}", i + 1);
    }
    assert!(dec.e1.get(8, 8).agrees_with(&to_u(&sol.e1_22)));
    assert!(dec.e2.get(8, 8).agrees_with(&to_u(&sol.e2_22)));
    for i in 0..8 {
        for j in 0..8 {
            assert!(dec.e1.get(i, j).agrees_with(&to_u(sol.e11[0].get(i, j))));
            assert!(dec.e2.get(i, j).agrees_with(&to_u(sol.e11[1].get(i, j))));
        }
    }
}

#[test]
fn weight_zero_systems_hold() {
    let report = weight_zero_reduction_check(border()).unwrap();
    assert!(report.passed(), "{}", report.detail);
    let h = weight_zero_forms(border()).unwrap();
    // at t = 0, h̃₆ = −Σ (−s)^n n!
    for n in 0..=8u64 {
        let sign = if n % 2 == 0 { qi(1) } else { qi(-1) };
        assert_eq!(h[2].coeff(&[n as i32, 0]), sign * fact(n));
    }
}

#[test]
fn sheared_leading_kernel_block_is_cyclic() {
    let g = FlipGeometry::new(3, 1).unwrap();
    let sys = shear(&connection_matrices(&g, 0).unwrap()).unwrap();
    let lead = sys.leading().unwrap();
    let rp = g.big_rp();
    let k = QMatrix::from_fn(2, 2, |i, j| lead.get(rp + i, rp + j).clone());
    assert_eq!(k, QMatrix::from_rows(&[vec![qi(0), qi(-2)], vec![qi(-2), qi(0)]]));
    let m = QMatrix::from_fn(2, 2, |i, j| k.get(i, j) / qi(2));
    assert_eq!(m.charpoly(), vec![qi(-1), qi(0), qi(1)]);
    assert!(lead.rank() == 2);
}

#[test]
fn kernel_eigenframe_diagonalizes_leading_block() {
    for (r, rp) in [(1, 0), (2, 0), (3, 0), (3, 1), (4, 1), (4, 0), (5, 2)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let sys = shear(&connection_matrices(&g, 0).unwrap()).unwrap();
        let lead = sys.leading().unwrap();
        let d = g.d();
        let m = QMatrix::from_fn(d, d, |i, j| lead.get(g.big_rp() + i, g.big_rp() + j) / qi(d as i64));
        let frame = KernelEigenFrame::new(&g);
        assert!(frame.residual(&m) < 1e-12, "({r},{rp})");
        for w in &frame.omegas {
            let wd = w.powi(d as i32);
            assert!((wd.re - if rp % 2 == 0 { -1.0 } else { 1.0 }).abs() < 1e-12 && wd.im.abs() < 1e-12);
        }
    }
}

#[test]
fn decomposition_residuals_vanish() {
    for (r, rp) in [(1, 0), (2, 1), (2, 0), (3, 1), (3, 0), (3, 2), (4, 1)] {
        let g = FlipGeometry::new(r, rp).unwrap();
        let sys = shear(&connection_matrices(&g, 0).unwrap()).unwrap();
        for diag in [false, true] {
            let dec = wasow_blockdiag(&sys, 6, diag).unwrap();
            let r1 = dec.residual_1(&sys).unwrap();
            let r2 = dec.residual_2(&sys).unwrap();
            assert!(r1.min_caps()[0] >= 5 && r1.is_zero(), "({r},{rp}) residual 1");
            assert!(r2.min_caps()[0] >= 6 && r2.is_zero(), "({r},{rp}) residual 2");
            assert!(dec.e1.is_block_diagonal(&dec.blocks));
            assert!(dec.image_block_in_x(), "({r},{rp}) image block in x");
            assert!(dec.lower_gauge_factorizes(), "({r},{rp}) P21 structure");
            assert!(z0_kernel_eigenvalue_check(&dec).passed());
            if diag && kernel_diagonalizable_over_q(&g) {
                assert_eq!(dec.blocks.len(), 1 + g.d());
            }
        }
    }
}

#[test]
fn order_zero_gauge_is_identity() {
    let g = FlipGeometry::new(3, 1).unwrap();
    let sys = shear(&connection_matrices(&g, 0).unwrap()).unwrap();
    let dec = wasow_blockdiag(&sys, 0, false).unwrap();
    assert!(dec.p.constant_part() == QMatrix::identity(g.big_r()));
    let yz = yz_table(&g);
    let d0 = &u_coefficients(&sys.d1, 1, 0, &yz).unwrap()[0];
    assert_eq!(dec.ebar[0].first_difference(d0), None);
}

#[test]
fn flops_cannot_be_sheared() {
    let g = FlipGeometry::new(1, 1).unwrap();
    let cm = connection_matrices(&g, 3).unwrap();
    assert!(matches!(shear(&cm), Err(FlipError::Geometry(_))));
    assert!(matches!(
        borderline_solve_21(&connection_matrices(&FlipGeometry::new(3, 1).unwrap(), 0).unwrap(), CAPS),
        Err(FlipError::Geometry(_))
    ));
}

#[test]
fn blowup_kernel_leading_term() {
    // d = 1 blow-up: ω = −1, so the kernel eigenvalue starts with +1/x.
    let g = FlipGeometry::new(1, 0).unwrap();
    let sys = shear(&connection_matrices(&g, 0).unwrap()).unwrap();
    let dec = wasow_blockdiag(&sys, 4, true).unwrap();
    let k = dec.kernel_block(1);
    assert_eq!(k.get(0, 0).coeff(&[-1, 0, 0]), qi(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn residuals_vanish_for_random_geometries(r in 1usize..5, dd in 1usize..4, order in 1usize..6) {
        prop_assume!(dd <= r);
        let g = FlipGeometry::new(r, r - dd).unwrap();
        let sys = shear(&connection_matrices(&g, 0).unwrap()).unwrap();
        let dec = wasow_blockdiag(&sys, order, true).unwrap();
        prop_assert!(dec.residual_1(&sys).unwrap().is_zero());
        prop_assert!(dec.residual_2(&sys).unwrap().is_zero());
        prop_assert!(dec.image_block_in_x());
    }
}
