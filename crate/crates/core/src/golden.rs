//! Printed reference tables used by the verification suite.
//!
//! Every table is transcribed as printed, typos included. Known misprints are
//! listed separately in [`ERRATA`] together with the value the computation
//! gives, so a check can distinguish an erratum from a regression.

use std::sync::Arc;

use flipqh_series::{q, Series, SeriesMatrix, VarTable, NO_CAP};

use crate::blockdiag::xy_table;
use crate::pfsys::q_table;
use crate::{FlipGeometry, Result};

/// Sparse entry `(row, col, numerator, denominator, p₁, p₂)`, 1-based, meaning
/// `num/den · v₁^{p₁} v₂^{p₂}` in a two-variable table.
pub type Entry = (usize, usize, i64, i64, i32, i32);

/// Matrix from sparse entries over `{v₁, v₂}` (`q1, q2` or `x, y`); repeated
/// positions add up.
pub fn grid(table: &Arc<VarTable>, n: usize, vars: [&str; 2], entries: &[Entry]) -> Result<SeriesMatrix> {
    let mut m = SeriesMatrix::zeros(table, n, n);
    for &(i, j, num, den, a, b) in entries {
        let s = Series::mono(table, q(num, den), &[(vars[0], a), (vars[1], b)])?;
        let cur = m.get(i - 1, j - 1).clone();
        m.set(i - 1, j - 1, &cur + &s);
    }
    Ok(m)
}

/// `z∂₁` matrix of the `(2,1)` flip.
pub const FLIP21_C1: &[Entry] = &[
    (1, 6, 1, 1, 1, 1),
    (2, 1, 1, 1, 0, 0),
    (3, 8, 1, 1, 1, 1),
    (4, 2, 1, 1, 0, 0),
    (5, 3, 1, 1, 0, 0),
    (6, 4, 1, 1, 0, 0),
    (6, 9, -1, 1, 0, 0),
    (7, 5, 1, 1, 0, 0),
    (8, 6, -1, 1, 0, 0),
    (8, 7, 1, 1, 0, 0),
    (9, 2, 1, 1, 0, 0),
    (9, 3, -1, 1, 0, 0),
    (9, 9, 1, 1, 1, 0),
];

/// `z∂₂` matrix of the `(2,1)` flip.
pub const FLIP21_C2: &[Entry] = &[
    (1, 4, -1, 1, 0, 1),
    (1, 5, 1, 1, 0, 1),
    (1, 6, 1, 1, 1, 1),
    (1, 9, 1, 1, 0, 1),
    (2, 1, 1, 1, 0, 0),
    (2, 6, -1, 1, 0, 1),
    (2, 7, 1, 1, 0, 1),
    (3, 1, 1, 1, 0, 0),
    (3, 8, 1, 1, 1, 1),
    (4, 2, 1, 1, 0, 0),
    (4, 8, 1, 1, 0, 1),
    (5, 2, 1, 1, 0, 0),
    (5, 3, 1, 1, 0, 0),
    (6, 4, 1, 1, 0, 0),
    (7, 4, 1, 1, 0, 0),
    (7, 5, 1, 1, 0, 0),
    (8, 7, 1, 1, 0, 0),
    (9, 8, 1, 1, 0, 1),
];

/// `z∂₁` of the Atiyah flop without the `𝐟`-entries at `(4,2)` and `(4,3)`.
pub const ATIYAH_C1: &[Entry] = &[
    (1, 4, 1, 1, 1, 1),
    (2, 1, 1, 1, 0, 0),
    (3, 6, 1, 1, 1, 1),
    (5, 3, 1, 1, 0, 0),
    (6, 4, -1, 1, 0, 0),
    (6, 5, 1, 1, 0, 0),
];

/// `z∂₂` of the Atiyah flop as printed, including `q₂(1 − q₁)` at `(1,4)`.
pub const ATIYAH_C2_PRINTED: &[Entry] = &[
    (1, 4, 1, 1, 0, 1),
    (1, 4, -1, 1, 1, 1),
    (1, 5, 1, 1, 0, 1),
    (2, 1, 1, 1, 0, 0),
    (2, 6, 1, 1, 0, 1),
    (3, 1, 1, 1, 0, 0),
    (3, 6, 1, 1, 1, 1),
    (4, 2, 1, 1, 0, 0),
    (5, 2, 1, 1, 0, 0),
    (5, 3, 1, 1, 0, 0),
    (6, 5, 1, 1, 0, 0),
];

/// `z∂₁` of the `F₁` blow-up.
pub const F1_C1: &[Entry] = &[
    (1, 3, 1, 1, 1, 1),
    (2, 1, 1, 1, 0, 0),
    (3, 2, 1, 1, 0, 0),
    (3, 4, 1, 1, 0, 0),
    (4, 1, -1, 1, 0, 0),
    (4, 4, -1, 1, 1, 0),
];

/// `z∂₂` of the `F₁` blow-up.
pub const F1_C2: &[Entry] = &[
    (1, 2, 1, 1, 0, 1),
    (1, 3, 1, 1, 1, 1),
    (1, 4, 1, 1, 0, 1),
    (2, 1, 1, 1, 0, 0),
    (2, 3, 1, 1, 0, 1),
    (3, 2, 1, 1, 0, 0),
    (4, 3, -1, 1, 0, 1),
];

/// Atiyah-flop matrices with `𝐟 = Σ_{k≥1} q₁^k` expanded to `q₁`-cap `cap`.
///
/// The printed `(1,4)` entry of `z∂₂` is kept as printed.
pub fn atiyah_printed(cap: i32) -> Result<(SeriesMatrix, SeriesMatrix)> {
    let g = FlipGeometry::new(1, 1)?;
    let t = q_table(&g);
    let vars = ["q1", "q2"];
    let mut c1 = grid(&t, 6, vars, ATIYAH_C1)?;
    let geometric = |start: i32| -> Result<Series> {
        let mut s = Series::zero(&t, &[cap, NO_CAP]);
        for k in start..=cap {
            s = &s + &Series::mono(&t, q(1, 1), &[("q1", k)])?;
        }
        Ok(s)
    };
    // −𝐟 and q₁⁻¹𝐟 = 1/(1 − q₁)
    c1.set(3, 1, -geometric(1)?);
    c1.set(3, 2, geometric(0)?);
    Ok((c1, grid(&t, 6, vars, ATIYAH_C2_PRINTED)?))
}

/// One row of the `g`-table:
/// `c · x^a y^b (Σ_k zs[k](zx)^k + y x⁴ Σ_k ys[k](zx)^k + …)`.
#[derive(Debug, Clone, Copy)]
pub struct GRow {
    pub c: (i64, i64),
    pub a: i32,
    pub b: i32,
    pub zs: &'static [i64],
    pub ys: &'static [i64],
}

impl GRow {
    /// Printed monomials `(x, y, z)` with their coefficients.
    pub fn terms(&self) -> Vec<([i32; 3], flipqh_series::Rational)> {
        let c = q(self.c.0, self.c.1);
        let main = self.zs.iter().enumerate().map(|(k, &v)| ([self.a + k as i32, self.b, k as i32], &c * q(v, 1)));
        let sub =
            self.ys.iter().enumerate().map(|(k, &v)| ([self.a + 4 + k as i32, self.b + 1, k as i32], &c * q(v, 1)));
        main.chain(sub).collect()
    }
}

/// The printed `g₁ … g₈` of the `(2,1)` block diagonalization.
pub const G_TABLE: [GRow; 8] = [
    GRow { c: (-1, 1), a: 2, b: 1, zs: &[1, 2, 6, 24, 120, 720, 5040], ys: &[5, 63, 642] },
    GRow { c: (-1, 1), a: 3, b: 1, zs: &[1, 4, 18, 96, 600, 4230, 35280], ys: &[7, 115, 1448] },
    GRow { c: (1, 2), a: 3, b: 1, zs: &[3, 14, 70, 404, 2688, 20376, 173808], ys: &[23, 407, 5454] },
    GRow { c: (-1, 1), a: 4, b: 1, zs: &[1, 7, 46, 326, 2556, 22212], ys: &[9, 192] },
    GRow { c: (1, 2), a: 4, b: 1, zs: &[3, 23, 162, 1214, 9972, 90180], ys: &[29, 654] },
    GRow { c: (-1, 1), a: 1, b: 0, zs: &[1, 1, 2, 6, 24, 120, 720, 5040], ys: &[3, 30, 253, 2168] },
    GRow { c: (1, 2), a: 1, b: 0, zs: &[1, 1, 2, 6, 24, 120, 720, 5040], ys: &[5, 54, 489, 4472] },
    GRow { c: (1, 1), a: 2, b: 0, zs: &[1, 3, 11, 50, 274, 1764, 13068, 109584], ys: &[6, 87, 986, 10803] },
];

/// A printed coefficient that the computation contradicts, with the value
/// that independent identities force.
#[derive(Debug, Clone, Copy)]
pub struct Erratum {
    /// Index into [`G_TABLE`] (0-based).
    pub series: usize,
    pub monomial: [i32; 3],
    pub printed: (i64, i64),
    pub corrected: (i64, i64),
    pub reason: &'static str,
}

/// `g₂` at `x⁸yz⁵`: printed 4230, while `n·n!` at `n = 6` and the printed
/// `g₃ + ½g₂` coefficient 8028 both force 4320.
pub const ERRATA: &[Erratum] = &[Erratum {
    series: 1,
    monomial: [8, 1, 5],
    printed: (-4230, 1),
    corrected: (-4320, 1),
    reason: "digit swap: n·n! at n = 6 and g₃ + ½g₂ = 8028 x⁸yz⁵ require 4320",
}];

/// Coefficients of `E₁²² + 1/x`: `x³y(zx)^n` main part and `x⁷y²(zx)^n` part.
pub const E1_22_MAIN: &[i64] = &[3, 12, 55, 300, 1918, 14112];
pub const E1_22_Y2: &[i64] = &[21, 348];

/// Reduced `C̄′₁` of the `(2,1)` flip modulo `y`, in the `(x, y)` table.
pub const C1_BAR_PRIME: &[Entry] = &[
    (3, 1, 1, 1, 0, 0),
    (5, 2, 1, 1, 0, 0),
    (6, 1, -3, 2, 2, 0),
    (6, 2, -1, 2, 1, 0),
    (6, 3, 1, 1, 1, 0),
    (7, 1, 3, 4, 2, 0),
    (7, 2, 1, 4, 1, 0),
    (7, 3, -1, 2, 1, 0),
    (7, 4, 1, 1, 0, 0),
    (8, 1, -13, 9, 3, 0),
    (8, 2, -1, 4, 2, 0),
    (8, 3, 1, 2, 2, 0),
    (8, 6, 1, 1, 0, 0),
];

/// `C̄′₁` as an `8 × 8` matrix over `xy_table`.
pub fn c1_bar_prime() -> Result<SeriesMatrix> {
    grid(&xy_table(&FlipGeometry::new(2, 1)?), 8, ["x", "y"], C1_BAR_PRIME)
}

/// Printed `𝓘f₁ = x³ − 11/4 zx⁴ + 10 z²x⁵ + …` as `(x, z, coefficient)`.
pub const I_F1: &[(i32, i32, i64, i64)] = &[(3, 0, 1, 1), (4, 1, -11, 4), (5, 2, 10, 1)];

/// Printed `𝓘(f₁/x) = 3/2 x² − 11/3 zx³ + 25/2 z²x⁴ + …`.
pub const I_F1_OVER_X: &[(i32, i32, i64, i64)] = &[(2, 0, 3, 2), (3, 1, -11, 3), (4, 2, 25, 2)];

/// GMT coefficients of `σ` modulo `q^{γ′}`: `x²` and `x³` corrections.
pub const SIGMA_COEFFICIENTS: [(i64, i64); 2] = [(3, 4), (-13, 27)];
