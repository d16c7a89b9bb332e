//! Birkhoff factorization of the image block, the reduced connection and the
//! generalized mirror transform along the extremal ray.
//!
//! The gauge acts as `C′ = −z(x∂_xB)B⁻¹ + B E B⁻¹`; the target is a `z`-free `C′`.

use std::sync::Arc;

use flipqh_series::{qi, QMatrix, Rational, Series, SeriesMatrix, VarTable, NO_CAP};
use num_traits::{One, Zero};
use serde_json::json;

use crate::blockdiag::{shear, wasow_blockdiag, xy_table, BorderSolution};
use crate::cohring::{CohClass, FlipGeometry, Label};
use crate::error::{FlipError, Result};
use crate::pfsys::ConnectionMatrices;
use crate::report::CheckReport;

/// `𝓘φ = ∫ (φ − φ|_{z=0}) / (zx) dx`: `c z^a x^b ↦ c z^{a−1} x^b / b` for `a ≥ 1`.
pub fn pseudo_inverse(phi: &Series, xvar: &str) -> Result<Series> {
    let t = phi.table().clone();
    let xi = t.index(xvar)?;
    let zi = t.index("z")?;
    let mut caps = phi.caps().to_vec();
    if caps[zi] != NO_CAP {
        caps[zi] -= 1;
    }
    let mut terms = Vec::new();
    for (e, c) in phi.terms() {
        if e[zi] == 0 {
            continue;
        }
        if e[xi] == 0 {
            return Err(FlipError::Integration(format!("term {e:?} needs a logarithm")));
        }
        let mut m = e.clone();
        m[zi] -= 1;
        terms.push((m, c / qi(e[xi] as i64)));
    }
    Ok(Series::from_terms(&t, &caps, terms)?)
}

/// Apply [`pseudo_inverse`] `n` times.
pub fn pseudo_inverse_pow(phi: &Series, xvar: &str, n: usize) -> Result<Series> {
    (0..n).try_fold(phi.clone(), |acc, _| pseudo_inverse(&acc, xvar))
}

/// `δ = z x∂_x`.
pub fn delta(phi: &Series, xvar: &str) -> Result<Series> {
    let z = Series::var(phi.table(), "z")?;
    Ok(&phi.log_deriv(xvar)? * &z)
}

/// Drop all positive `y`-powers.
pub fn mod_y(s: &Series) -> Series {
    let yi = s.table().index("y").expect("y");
    let mut caps = vec![NO_CAP; s.table().len()];
    caps[yi] = 0;
    s.truncate(&caps)
}

/// Drop all positive `y`-powers entrywise.
pub fn mod_y_matrix(m: &SeriesMatrix) -> SeriesMatrix {
    m.map(mod_y)
}

/// Whether no entry involves `z`.
pub fn is_z_free(m: &SeriesMatrix) -> bool {
    let zi = m.table().index("z").expect("z");
    m.entries().all(|(_, _, s)| s.terms().all(|(e, _)| e[zi] == 0))
}

/// `B = I + N` modulo `y` for the `(2,1)` image block.
#[derive(Debug, Clone)]
pub struct BFMatrix {
    pub n: SeriesMatrix,
    pub b: SeriesMatrix,
}

impl BFMatrix {
    /// `N² = 0`.
    pub fn n_squared_vanishes(&self) -> Result<bool> {
        Ok(self.n.mul(&self.n)?.is_zero())
    }

    /// `I − N`.
    pub fn inverse(&self) -> Result<SeriesMatrix> {
        let t = self.n.table().clone();
        Ok(SeriesMatrix::identity(&t, self.n.rows()).sub(&self.n)?)
    }
}

/// Closed-form Birkhoff factor modulo `y` built from `f₁, f₂, f₃`, 1-based
/// positions: `N₆₁ = −𝓘²(f₁/x)`, `N₆₂ = 𝓘f₂`, `N₆₃ = 𝓘f₃`, `N₇• = −½N₆•`,
/// `N₈₁ = 𝓘³(f₁/x − f₃)`, `N₈₂ = −𝓘²f₂`, `N₈₃ = −𝓘²f₃`.
pub fn bf_mod_y(sol: &BorderSolution) -> Result<BFMatrix> {
    let f: Vec<Series> = sol.f.iter().map(mod_y).collect();
    let t = f[0].table().clone();
    let f1x = f[0].shift(&[-1, 0, 0])?;
    let i = |s: &Series, n: usize| pseudo_inverse_pow(s, "x", n);
    let half = -(Rational::one() / qi(2));
    let row6 = [i(&f1x, 2)?.scale(&qi(-1)), i(&f[1], 1)?, i(&f[2], 1)?];
    let row8 = [i(&(&f1x - &f[2]), 3)?, i(&f[1], 2)?.scale(&qi(-1)), i(&f[2], 2)?.scale(&qi(-1))];
    let mut n = SeriesMatrix::zeros(&t, 8, 8);
    for j in 0..3 {
        n.set(5, j, row6[j].clone());
        n.set(6, j, row6[j].scale(&half));
        n.set(7, j, row8[j].clone());
    }
    let b = SeriesMatrix::identity(&t, 8).add(&n)?;
    Ok(BFMatrix { n, b })
}

/// `−z(x∂_xB)B⁻¹ + B E B⁻¹`.
pub fn gauge_transform(b: &SeriesMatrix, b_inv: &SeriesMatrix, e: &SeriesMatrix, xvar: &str) -> Result<SeriesMatrix> {
    let z = Series::var(b.table(), "z")?;
    let lhs = b.log_deriv(xvar)?.scale_series(&z).mul(b_inv)?;
    Ok(b.mul(e)?.mul(b_inv)?.sub(&lhs)?)
}

/// The reduced connection `C̄′₁` modulo `y`, or an obstruction if `z` survives.
pub fn reduced_connection_mod_y(sol: &BorderSolution, bf: &BFMatrix) -> Result<SeriesMatrix> {
    let e = mod_y_matrix(&sol.e11[0]);
    let c = mod_y_matrix(&gauge_transform(&bf.b, &bf.inverse()?, &e, "x")?);
    if !is_z_free(&c) {
        return Err(FlipError::Obstruction("reduced connection still depends on z".into()));
    }
    Ok(c)
}

/// `C̄′₂ = A₂¹¹` modulo `y`.
pub fn reduced_connection_2_mod_y(cm: &ConnectionMatrices) -> Result<SeriesMatrix> {
    let (_, a2) = crate::blockdiag::w_frame_matrices(cm)?;
    Ok(mod_y_matrix(&a2.block(0, 8, 0, 8)))
}

/// Output of [`generic_bf_step`].
#[derive(Debug, Clone)]
pub struct BirkhoffGauge {
    pub b: SeriesMatrix,
    pub reduced: SeriesMatrix,
    pub order: usize,
}

/// Coefficient of `v^n` as a matrix with `v`-exponent zero.
fn var_coeff(m: &SeriesMatrix, vi: usize, n: i32) -> SeriesMatrix {
    m.map(|s| {
        let terms: Vec<(Vec<i32>, Rational)> = s
            .terms()
            .filter(|(e, _)| e[vi] == n)
            .map(|(e, c)| {
                let mut e = e.clone();
                e[vi] = 0;
                (e, c.clone())
            })
            .collect();
        let mut caps = s.caps().to_vec();
        caps[vi] = 0;
        Series::from_terms(s.table(), &caps, terms).expect("coefficient")
    })
}

fn shift_var(m: &SeriesMatrix, vi: usize, n: i32, cap: i32) -> SeriesMatrix {
    m.map(|s| {
        let terms: Vec<(Vec<i32>, Rational)> = s
            .terms()
            .map(|(e, c)| {
                let mut e = e.clone();
                e[vi] += n;
                (e, c.clone())
            })
            .collect();
        let mut caps = s.caps().to_vec();
        caps[vi] = cap;
        Series::from_terms(s.table(), &caps, terms).expect("shift")
    })
}

/// Lift the `z`-cap of a weighted-homogeneous matrix when truncation in `z` cannot
/// have removed anything at `x`-order `≤ order`.
fn lift_z_cap(e: &SeriesMatrix, xvar: &str, order: usize) -> Result<SeriesMatrix> {
    let t = e.table().clone();
    let xi = t.index(xvar)?;
    let zi = t.index("z")?;
    let wx = t.vars()[xi].weight;
    let wz = t.vars()[zi].weight;
    if wx >= 0 || wz <= 0 {
        return Err(FlipError::Invariant("expected negative weight on x and positive on z".into()));
    }
    e.try_map(|s| {
        let mut caps = s.caps().to_vec();
        if s.is_zero() {
            caps[zi] = NO_CAP;
            caps[xi] = caps[xi].min(order as i32);
            return Ok(Series::zero(&t, &caps));
        }
        let w = s
            .homogeneous_weight()
            .ok_or_else(|| flipqh_series::SeriesError::Inconsistent("entry is not weighted homogeneous".into()))?;
        // largest z-power reachable at x-order `order` with all other exponents zero
        let zmax = (w - wx * order as i64) / wz;
        if caps[zi] != NO_CAP && zmax > caps[zi] as i64 {
            return Err(flipqh_series::SeriesError::Inconsistent(format!(
                "insufficient truncation: z-cap {} below {zmax}",
                caps[zi]
            )));
        }
        caps[zi] = NO_CAP;
        caps[xi] = caps[xi].min(order as i32);
        Series::from_terms(&t, &caps, s.terms().map(|(e, c)| (e.clone(), c.clone())))
    })
    .map_err(|e| match e {
        flipqh_series::SeriesError::Inconsistent(m) if m.starts_with("insufficient") => FlipError::Truncation(m),
        other => FlipError::Series(other),
    })
}

/// Degree-by-degree Birkhoff factorization in `x`.
///
/// With `B = I + Σ_{n≥1} B_n x^n` and `C′ = Σ C′_n x^n`, order `n` reads
/// `(zn + ad_{E₀})B_n = R_n − C′_n`, solved by `C′_n = Σ_k (−ad_{E₀}/n)^k R_n^{(k)}`
/// and `B_n^{(m)} = Σ_k (−ad_{E₀})^k R_n^{(m+k+1)} / n^{k+1}`.
pub fn generic_bf_step(e: &SeriesMatrix, xvar: &str, order: usize) -> Result<BirkhoffGauge> {
    let t = e.table().clone();
    let xi = t.index(xvar)?;
    let zi = t.index("z")?;
    if e.entries().any(|(_, _, s)| s.min_exp(xvar).is_some_and(|m| m < 0)) {
        return Err(FlipError::Invariant("Birkhoff step needs a power series in x".into()));
    }
    let e = lift_z_cap(e, xvar, order)?;
    let n = e.rows();
    let parts: Vec<SeriesMatrix> = (0..=order as i32).map(|k| var_coeff(&e, xi, k)).collect();
    let e0 = &parts[0];
    if !is_z_free(e0) {
        return Err(FlipError::Obstruction("leading term depends on z".into()));
    }
    let ad = |m: &SeriesMatrix| -> Result<SeriesMatrix> { Ok(e0.mul(m)?.sub(&m.mul(e0)?)?) };
    // `R` is exact in `z`, so its `z`-coefficients keep an open `z`-cap
    let zcoeff = |m: &SeriesMatrix, k: i32| {
        var_coeff(m, zi, k).map(|s| {
            let mut caps = s.caps().to_vec();
            caps[zi] = NO_CAP;
            Series::from_terms(s.table(), &caps, s.terms().map(|(e, c)| (e.clone(), c.clone()))).expect("coefficient")
        })
    };
    let zdeg = |m: &SeriesMatrix| m.entries().filter_map(|(_, _, s)| s.max_exp("z")).max().unwrap_or(0);
    let ident = SeriesMatrix::identity(&t, n);
    let mut bs = vec![ident.clone()];
    let mut cs = vec![e0.clone()];
    for l in 1..=order {
        let mut r = parts[l].clone();
        for b in 1..l {
            r = r.add(&bs[b].mul(&parts[l - b])?)?.sub(&cs[l - b].mul(&bs[b])?)?;
        }
        let top = zdeg(&r);
        let nl = qi(l as i64);
        let mut c = SeriesMatrix::zeros(&t, n, n);
        for k in 0..=top {
            let mut term = zcoeff(&r, k);
            for _ in 0..k {
                term = ad(&term)?.scale(&(-Rational::one() / &nl));
            }
            c = c.add(&term)?;
        }
        let z = Series::var(&t, "z")?;
        let mut bl = SeriesMatrix::zeros(&t, n, n);
        for m in 0..top {
            let mut acc = SeriesMatrix::zeros(&t, n, n);
            for k in 0..(top - m) {
                let mut term = zcoeff(&r, m + k + 1);
                for _ in 0..k {
                    term = ad(&term)?.scale(&qi(-1));
                }
                acc = acc.add(&term.scale(&(Rational::one() / nl.pow(k + 1))))?;
            }
            bl = bl.add(&acc.scale_series(&z.pow(m as i64)?))?;
        }
        bs.push(bl);
        cs.push(c);
    }
    let assemble = |ms: &[SeriesMatrix]| -> Result<SeriesMatrix> {
        let mut out = SeriesMatrix::zeros(&t, n, n);
        for (k, m) in ms.iter().enumerate() {
            out = out.add(&shift_var(m, xi, k as i32, order as i32))?;
        }
        Ok(out.truncate(&cap_vec(&t, xi, order as i32)))
    };
    let b = assemble(&bs)?;
    let reduced = assemble(&cs)?;
    Ok(BirkhoffGauge { b, reduced, order })
}

fn cap_vec(t: &Arc<VarTable>, xi: usize, cap: i32) -> Vec<i32> {
    let mut caps = vec![NO_CAP; t.len()];
    caps[xi] = cap;
    caps
}

impl BirkhoffGauge {
    /// `C′B − BE + z x∂_xB`, which must vanish.
    pub fn residual(&self, e: &SeriesMatrix, xvar: &str) -> Result<SeriesMatrix> {
        let z = Series::var(self.b.table(), "z")?;
        let e = e.truncate(&cap_vec(e.table(), e.table().index(xvar)?, self.order as i32));
        Ok(self.reduced.mul(&self.b)?.sub(&self.b.mul(&e)?)?.add(&self.b.log_deriv(xvar)?.scale_series(&z))?)
    }
}

/// Generalized mirror point along `ŝ = s¹h′ + s²ξ′`.
///
/// `sigma[μ]` is the coordinate on the `μ`-th image frame vector, written as
/// `linear₁[μ] s¹ + linear₂[μ] s² + corrections[μ](x, y)` with `x = q^{ℓ′}e^{s¹}`.
#[derive(Debug, Clone)]
pub struct GMTPoint {
    pub linear1: Vec<Rational>,
    pub linear2: Vec<Rational>,
    pub corrections: Vec<Series>,
}

/// Integrate `∂σ^μ/∂s^a = (C̄′_a)^μ_0` with `σ ≡ ŝ` modulo the Novikov variables.
pub fn gmt_extract(c1: &SeriesMatrix, c2: &SeriesMatrix) -> Result<GMTPoint> {
    if !is_z_free(c1) || !is_z_free(c2) {
        return Err(FlipError::Invariant("GMT extraction needs z-free matrices".into()));
    }
    let t = c1.table().clone();
    let xi = t.index("x")?;
    let yi = t.index("y")?;
    let n = c1.rows();
    let mut linear1 = Vec::new();
    let mut linear2 = Vec::new();
    let mut corrections = Vec::new();
    for mu in 0..n {
        let col1 = c1.get(mu, 0);
        let col2 = c2.get(mu, 0);
        let mut terms = Vec::new();
        let mut lin1 = Rational::zero();
        for (e, c) in col1.terms() {
            match (e[xi], e[yi]) {
                (0, 0) => lin1 = c.clone(),
                (0, _) => return Err(FlipError::Invariant("x-independent Novikov term in the x-direction".into())),
                (a, _) => terms.push((e.clone(), c / qi(a as i64))),
            }
        }
        let sigma = Series::from_terms(&t, col1.caps(), terms)?;
        // the y-direction must agree with y∂_y σ
        let from_y = sigma.log_deriv("y")?;
        let mut lin2 = Rational::zero();
        let mut rest = col2.clone();
        for (e, c) in col2.terms() {
            if e[xi] == 0 && e[yi] == 0 {
                lin2 = c.clone();
            }
        }
        rest = &rest - &Series::constant(&t, lin2.clone());
        if !rest.agrees_with(&from_y) {
            return Err(FlipError::Invariant(format!("first columns are not integrable at row {}", mu + 1)));
        }
        linear1.push(lin1);
        linear2.push(lin2);
        corrections.push(sigma);
    }
    Ok(GMTPoint { linear1, linear2, corrections })
}

/// Flipped-side classes of the `(2,1)` w-frame image vectors.
pub fn w_frame_prime_classes(geom: &FlipGeometry) -> Result<Vec<CohClass>> {
    let t = geom.w_change()?;
    let labels = geom.labels();
    let rp = geom.big_rp();
    let v: Vec<CohClass> = labels[..rp]
        .iter()
        .map(|l| match l {
            Label::Image(e1, e2) => geom.t_prime_class(*e1, *e2),
            Label::Kernel(_) => unreachable!("image labels come first"),
        })
        .collect();
    let dim = geom.ring_prime().dim();
    Ok((0..rp).map(|j| (0..rp).fold(CohClass::zero(dim), |acc, i| acc.add(&v[i].scale(t.get(i, j))))).collect())
}

impl GMTPoint {
    /// `σ − ŝ` in flipped-side classes: one `(monomial, class)` pair per `x^a y^b`.
    pub fn correction_classes(&self, frame: &[CohClass]) -> Vec<(Vec<i32>, CohClass)> {
        let dim = frame[0].coeffs.len();
        let mut out: std::collections::BTreeMap<Vec<i32>, CohClass> = Default::default();
        for (mu, s) in self.corrections.iter().enumerate() {
            for (e, c) in s.terms() {
                let acc = out.entry(e.clone()).or_insert_with(|| CohClass::zero(dim));
                *acc = acc.add(&frame[mu].scale(c));
            }
        }
        out.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    /// Linear part `∂σ/∂s^a` at the origin as a class.
    pub fn linear_class(&self, a: usize, frame: &[CohClass]) -> CohClass {
        let lin = if a == 1 { &self.linear1 } else { &self.linear2 };
        let dim = frame[0].coeffs.len();
        lin.iter().zip(frame).fold(CohClass::zero(dim), |acc, (c, f)| acc.add(&f.scale(c)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "linear_s1": self.linear1.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "linear_s2": self.linear2.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "corrections": self.corrections.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// `⟨ξ−h, ξ−h, (ξ−h) + xκ₀⟩ ≡ x` modulo `(x², y)` for the `(2,1)` flip.
pub fn mod_y_three_point_check(cm: &ConnectionMatrices) -> Result<CheckReport> {
    let geom = &cm.geom;
    let (mx, _) = crate::blockdiag::to_xy(cm)?;
    let t = mx.table().clone();
    let n = geom.big_r();
    let e = geom.position(Label::Image(0, 1));
    let k0 = geom.position(Label::Kernel(0));
    let g = geom.frame_pairing();
    let x = Series::var(&t, "x")?;
    let mut bracket = vec![Series::zero_exact(&t); n];
    bracket[e] = Series::one(&t);
    bracket[k0] = x.clone();
    let mut acc = Series::zero_exact(&t);
    for i in 0..n {
        for j in 0..n {
            let gij = g.get(i, j);
            if gij.is_zero() {
                continue;
            }
            acc = &acc + &(&mx.get(i, e).scale(gij) * &bracket[j]);
        }
    }
    let reduced = mod_y(&acc).filter(|m| m[0] < 2);
    Ok(CheckReport::new(
        "three-point invariant mod (x^2, y)",
        "<xi-h, xi-h, [xi-h]> = x with [xi-h] = (xi-h) + x k0",
        reduced.terms().count() == 1 && reduced.terms().all(|(m, c)| m == &vec![1, 0, 0] && c.is_one()),
        json!({"value": reduced.to_string()}),
    ))
}

/// Blow-up reduction: the image block is `z`-free and vanishes modulo `x`, the
/// Birkhoff factor is `I` modulo `x`, and at `x = 0` the `y`-direction block is
/// the small connection of `P^{r+1}`.
pub fn blowup_reduction_check(geom: &FlipGeometry, order: usize) -> Result<CheckReport> {
    if geom.rp != 0 {
        return Err(FlipError::Geometry("blow-up reduction needs r' = 0".into()));
    }
    let cm = crate::pfsys::connection_matrices(geom, 0)?;
    let sys = shear(&cm)?;
    let dec = wasow_blockdiag(&sys, order * geom.d(), false)?;
    let ex = dec.image_in_x(1)?;
    let ey = dec.image_in_x(2)?;
    let t = xy_table(geom);
    let xi = 0;
    let ex0 = var_coeff(&ex, xi, 0);
    let ey0 = var_coeff(&ey, xi, 0);
    let m = geom.big_rp();
    let y = Series::var(&t, "y")?;
    let mut companion = SeriesMatrix::zeros(&t, m, m);
    for i in 1..m {
        companion.set(i, i - 1, Series::one(&t));
    }
    companion.set(0, m - 1, y);
    let bf = generic_bf_step(&ex, "x", order)?;
    let b0 = var_coeff(&bf.b, xi, 0);
    let ex0_zero = ex0.is_zero();
    let b_is_identity_mod_x = b0.constant_part() == QMatrix::identity(m) && is_z_free(&b0);
    let ey0_ok = ey0.first_difference(&companion).is_none();
    Ok(CheckReport::new(
        &format!("blow-up reduction ({}, 0)", geom.r),
        "E^11 vanishes mod x, B = I mod x, E_y^11(x = 0) is the companion matrix of P^(r+1)",
        ex0_zero && b_is_identity_mod_x && ey0_ok,
        json!({"ex_mod_x_zero": ex0_zero, "b_identity_mod_x": b_is_identity_mod_x, "ey_at_x0_companion": ey0_ok}),
    ))
}
