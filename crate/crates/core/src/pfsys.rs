//! Picard–Fuchs operators, the I-function, the Ψ-corrected frame and the
//! z-free connection matrices `C₁`, `C₂` of `X`.
//!
//! Throughout, `a = z∂₁` (quantized `h`) and `b = z∂₂ − z∂₁` (quantized
//! `ξ − h`). On the degree `(d₁, d₂)` part of `I` they act as
//! multiplication by `h + d₁z` and `(ξ−h) + (d₂−d₁)z`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use flipqh_series::{qi, QMatrix, Rational, Series, SeriesMatrix, VarTable, NO_CAP};
use nalgebra::{Complex, DMatrix};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::cohring::{CaseTag, CohRing, FlipGeometry, Label};
use crate::error::{FlipError, Result};
use crate::report::CheckReport;

fn sign(n: usize) -> i64 {
    if n.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `{q₁, q₂}` with weights `d` and `r′+2`.
pub fn q_table(geom: &FlipGeometry) -> Arc<VarTable> {
    VarTable::of(&[("q1", geom.d() as i64, false), ("q2", geom.rp as i64 + 2, false)])
}

/// `{q₁ (Laurent), q₂, z (Laurent)}`, the coefficient table of [`PFOperator`].
pub fn qz_table(geom: &FlipGeometry) -> Arc<VarTable> {
    VarTable::of(&[("q1", geom.d() as i64, true), ("q2", geom.rp as i64 + 2, false), ("z", 1, true)])
}

/// `{z (Laurent)}`, the coefficient table of I-function components.
pub fn z_table() -> Arc<VarTable> {
    VarTable::of(&[("z", 1, true)])
}

// ---------------------------------------------------------------------------
// Differential operators

/// Polynomial in `D₁ = z∂₁`, `D₂ = z∂₂` with coefficients to the left.
///
/// `D_i q^m = q^m (D_i + m_i z)`, and `D₁`, `D₂` commute with `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PFOperator {
    table: Arc<VarTable>,
    terms: BTreeMap<(u32, u32), Series>,
}

impl PFOperator {
    pub fn zero(table: &Arc<VarTable>) -> Self {
        PFOperator { table: table.clone(), terms: BTreeMap::new() }
    }

    /// `c · D₁^a D₂^b`.
    pub fn term(c: Series, a: u32, b: u32) -> Self {
        let mut op = Self::zero(c.table());
        if !c.is_zero() {
            op.terms.insert((a, b), c);
        }
        op
    }

    pub fn coeff(table: &Arc<VarTable>, c: Series) -> Self {
        debug_assert!(c.table() == table || **c.table() == **table);
        Self::term(c, 0, 0)
    }

    pub fn scalar(table: &Arc<VarTable>, c: i64) -> Self {
        Self::term(Series::constant(table, qi(c)), 0, 0)
    }

    pub fn d1(table: &Arc<VarTable>) -> Self {
        Self::term(Series::one(table), 1, 0)
    }

    pub fn d2(table: &Arc<VarTable>) -> Self {
        Self::term(Series::one(table), 0, 1)
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Series)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, k: (u32, u32), c: Series) {
        let s = match self.terms.remove(&k) {
            Some(old) => &old + &c,
            None => c,
        };
        if !s.is_zero() {
            self.terms.insert(k, s);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.insert(*k, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        PFOperator { table: self.table.clone(), terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Left multiplication by a coefficient series.
    pub fn left_mul(&self, c: &Series) -> Self {
        let mut out = Self::zero(&self.table);
        for (k, s) in &self.terms {
            out.insert(*k, c * s);
        }
        out
    }

    /// `θ₁^i θ₂^j c` with `θ_k = q_k ∂/∂q_k`.
    fn theta(c: &Series, i: u32, j: u32) -> Series {
        let mut s = c.clone();
        for _ in 0..i {
            s = s.log_deriv("q1").expect("q1 in table");
        }
        for _ in 0..j {
            s = s.log_deriv("q2").expect("q2 in table");
        }
        s
    }

    /// Operator composition `self ∘ o`.
    pub fn mul(&self, o: &Self) -> Self {
        let z = Series::var(&self.table, "z").expect("z in table");
        let mut out = Self::zero(&self.table);
        for (&(a, b), c) in &self.terms {
            for (&(e, f), c2) in &o.terms {
                // D₁^a D₂^b c₂ = Σ C(a,k) C(b,l) z^{k+l} θ₁^k θ₂^l(c₂) D₁^{a−k} D₂^{b−l}
                for k in 0..=a {
                    for l in 0..=b {
                        let th = Self::theta(c2, k, l);
                        if th.is_zero() {
                            continue;
                        }
                        let binom = binom_u(a, k) * binom_u(b, l);
                        let coef = (c * &th).scale(&qi(binom)) * z.pow((k + l) as i64).expect("z power");
                        out.insert((a - k + e, b - l + f), coef);
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::scalar(&self.table, 1), |acc, _| acc.mul(self))
    }

    /// Rewrite the coefficients through a monomial map on `(q₁, q₂, z)` exponents.
    pub fn map_coefficients<F: Fn(&[i32]) -> Vec<i32>>(&self, f: F) -> Result<Self> {
        let mut out = Self::zero(&self.table);
        for (k, c) in &self.terms {
            let terms: Vec<(Vec<i32>, Rational)> = c.terms().map(|(e, v)| (f(e), v.clone())).collect();
            let s = Series::from_terms(&self.table, &vec![NO_CAP; self.table.len()], terms)?;
            out.insert(*k, s);
        }
        Ok(out)
    }

    /// Substitute `D₁ ↦ p1`, `D₂ ↦ p2` where the images commute with the
    /// coefficients in the same way (used for the `X′` dictionary).
    pub fn substitute_derivations(&self, p1: &Self, p2: &Self) -> Self {
        let mut out = Self::zero(&self.table);
        for (&(a, b), c) in &self.terms {
            let t = Self::coeff(&self.table, c.clone()).mul(&p1.pow(a)).mul(&p2.pow(b));
            out = out.add(&t);
        }
        out
    }

    /// Coefficient of `q^{d}` of `self · I`, using `I` at lower degrees.
    pub fn apply_to_i(&self, ifn: &IFunction, d: (i32, i32)) -> Result<Vec<Series>> {
        let ring = &ifn.ring;
        let mut acc = vec![Series::zero_exact(&ifn.ztab); ring.dim()];
        for (&(a, b), c) in &self.terms {
            for (e, v) in c.terms() {
                let (m1, m2, s) = (e[0], e[1], e[2]);
                let dd = (d.0 - m1, d.1 - m2);
                if dd.0 < 0 || dd.1 < 0 {
                    continue;
                }
                let base = ifn.coefficient(dd)?;
                let mut x = base.clone();
                for _ in 0..a {
                    x = lin(ring, &x, Gen::H, dd.0 as i64);
                }
                for _ in 0..b {
                    x = lin(ring, &x, Gen::Xi, dd.1 as i64);
                }
                let zs = Series::mono(&ifn.ztab, v.clone(), &[("z", s)])?;
                for (t, y) in acc.iter_mut().zip(&x) {
                    *t = &*t + &(y * &zs);
                }
            }
        }
        Ok(acc)
    }
}

fn binom_u(n: u32, k: u32) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k as i64 {
        r = r * (n as i64 - i) / (i + 1);
    }
    r
}

/// `(□_ℓ, □_γ)`: `D₁^{r+1} − q₁(D₂−D₁)^{r′+1}` and `D₂(D₂−D₁)^{r′+1} − q₂`.
pub fn box_operators(geom: &FlipGeometry) -> (PFOperator, PFOperator) {
    let t = qz_table(geom);
    let d1 = PFOperator::d1(&t);
    let d2 = PFOperator::d2(&t);
    let e = d2.sub(&d1);
    let q1 = Series::var(&t, "q1").expect("q1");
    let q2 = Series::var(&t, "q2").expect("q2");
    let ell = d1.pow(geom.r as u32 + 1).sub(&e.pow(geom.rp as u32 + 1).left_mul(&q1));
    let gamma = d2.mul(&e.pow(geom.rp as u32 + 1)).sub(&PFOperator::coeff(&t, q2));
    (ell, gamma)
}

/// Box operators of `X′`, written in the variables of `X` through
/// `q₁′ = q₁⁻¹`, `q₂′ = q₁q₂`, `z∂₁′ = z∂₂ − z∂₁`, `z∂₂′ = z∂₂`.
pub fn box_operators_prime(geom: &FlipGeometry) -> Result<(PFOperator, PFOperator)> {
    let swapped = FlipGeometry { r: geom.rp, rp: geom.r };
    let t = qz_table(geom);
    // the primed operators are built on the same variable names, then translated
    let (l, g) = {
        let d1 = PFOperator::d1(&t);
        let d2 = PFOperator::d2(&t);
        let e = d2.sub(&d1);
        let q1 = Series::var(&t, "q1")?;
        let q2 = Series::var(&t, "q2")?;
        let ell = d1.pow(swapped.r as u32 + 1).sub(&e.pow(swapped.rp as u32 + 1).left_mul(&q1));
        let gamma = d2.mul(&e.pow(swapped.rp as u32 + 1)).sub(&PFOperator::coeff(&t, q2));
        (ell, gamma)
    };
    let dict = |e: &[i32]| vec![-e[0] + e[1], e[1], e[2]];
    let p1 = PFOperator::d2(&t).sub(&PFOperator::d1(&t));
    let p2 = PFOperator::d2(&t);
    let l = l.map_coefficients(dict)?.substitute_derivations(&p1, &p2);
    let g = g.map_coefficients(dict)?.substitute_derivations(&p1, &p2);
    Ok((l, g))
}

// ---------------------------------------------------------------------------
// I-function

/// Generators acting on `H ⊗ Q[z, z⁻¹]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gen {
    H,
    E,
    Xi,
}

fn times_gen(ring: &CohRing, x: &[Series], g: Gen) -> Vec<Series> {
    let zt = x[0].table().clone();
    let mut out = vec![Series::zero_exact(&zt); ring.dim()];
    for (idx, c) in x.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let (i, j) = ring.label(idx);
        let targets: Vec<(usize, usize)> = match g {
            Gen::H => vec![(i + 1, j)],
            Gen::E => vec![(i, j + 1)],
            Gen::Xi => vec![(i + 1, j), (i, j + 1)],
        };
        for (a, b) in targets {
            if let Some((k, s)) = ring.reduce_he(a, b) {
                out[k] = &out[k] + &c.scale(&qi(s));
            }
        }
    }
    out
}

/// `(g + c z) · x`.
pub fn lin(ring: &CohRing, x: &[Series], g: Gen, c: i64) -> Vec<Series> {
    let gx = times_gen(ring, x, g);
    if c == 0 {
        return gx;
    }
    let zc = Series::mono(x[0].table(), qi(c), &[("z", 1)]).expect("z");
    gx.iter().zip(x).map(|(a, b)| a + &(b * &zc)).collect()
}

/// `(g + m z)⁻¹ · x = Σ_k (−g)^k x / (m z)^{k+1}`, finite since `g` is nilpotent.
pub fn lin_inv(ring: &CohRing, x: &[Series], g: Gen, m: i64) -> Vec<Series> {
    assert!(m != 0);
    let zt = x[0].table().clone();
    let mut out = vec![Series::zero_exact(&zt); ring.dim()];
    let mut term = x.to_vec();
    let mut k = 0i32;
    while term.iter().any(|s| !s.is_zero()) {
        let c = Rational::one() / qi(m).pow(k + 1) * qi(if k % 2 == 0 { 1 } else { -1 });
        let zf = Series::mono(&zt, c, &[("z", -(k + 1))]).expect("z");
        for (o, t) in out.iter_mut().zip(&term) {
            *o = &*o + &(t * &zf);
        }
        term = times_gen(ring, &term, g);
        k += 1;
    }
    out
}

/// `I = Σ q₁^{d₁} q₂^{d₂} I_d` with the divisor exponential absorbed into `q`.
#[derive(Debug, Clone)]
pub struct IFunction {
    pub ring: CohRing,
    pub ztab: Arc<VarTable>,
    /// Largest degrees computed.
    pub caps: (i32, i32),
    coeffs: HashMap<(i32, i32), Vec<Series>>,
}

impl IFunction {
    /// Evaluate every `I_d` with `d₁ ≤ caps.0`, `d₂ ≤ caps.1`.
    ///
    /// For `d₂ < d₁` the middle factor is continued as the product of
    /// `(ξ−h+mz)^{r′+1}` over `m ∈ [d₂−d₁+1, 0]`.
    pub fn new(ring: &CohRing, caps: (i32, i32)) -> Self {
        let ztab = z_table();
        let degrees: Vec<(i32, i32)> = (0..=caps.0).flat_map(|a| (0..=caps.1).map(move |b| (a, b))).collect();
        let coeffs = degrees.par_iter().map(|&d| (d, Self::degree_coefficient(ring, &ztab, d))).collect();
        IFunction { ring: ring.clone(), ztab, caps, coeffs }
    }

    fn degree_coefficient(ring: &CohRing, ztab: &Arc<VarTable>, (d1, d2): (i32, i32)) -> Vec<Series> {
        let (r, rp) = (ring.r as i64, ring.rp as i64);
        let mut x = vec![Series::zero_exact(ztab); ring.dim()];
        x[0] = Series::one(ztab);
        for m in 1..=d1 as i64 {
            for _ in 0..=r {
                x = lin_inv(ring, &x, Gen::H, m);
            }
        }
        let diff = (d2 - d1) as i64;
        if diff >= 0 {
            for m in 1..=diff {
                for _ in 0..=rp {
                    x = lin_inv(ring, &x, Gen::E, m);
                }
            }
        } else {
            for m in (diff + 1)..=0 {
                for _ in 0..=rp {
                    x = lin(ring, &x, Gen::E, m);
                }
            }
        }
        for m in 1..=d2 as i64 {
            x = lin_inv(ring, &x, Gen::Xi, m);
        }
        x
    }

    /// `I_d` as canonical coordinates with z-Laurent coefficients.
    pub fn coefficient(&self, d: (i32, i32)) -> Result<&Vec<Series>> {
        self.coeffs
            .get(&d)
            .ok_or_else(|| FlipError::Truncation(format!("I-function degree {d:?} beyond caps {:?}", self.caps)))
    }

    /// Highest z-exponent occurring in `I_d`, if nonzero.
    pub fn max_z_exponent(&self, d: (i32, i32)) -> Result<Option<i32>> {
        Ok(self.coefficient(d)?.iter().filter_map(|s| s.max_exp("z")).max())
    }

    /// Every term of `I_d` has `deg(class) + z-exponent = −weight(q^d)`.
    pub fn is_homogeneous(&self, d: (i32, i32), weights: (i64, i64)) -> Result<bool> {
        let w = weights.0 * d.0 as i64 + weights.1 * d.1 as i64;
        let x = self.coefficient(d)?;
        Ok(x.iter()
            .enumerate()
            .all(|(idx, s)| s.terms().all(|(e, _)| self.ring.degree(idx) as i64 + e[0] as i64 == -w)))
    }
}

/// The middle factor for `d₂ < d₁` in its closed "goes up" form:
/// `(−1)^{(r′+1)(d₁−d₂−1)} k₀ Π_{m=1}^{d₁−d₂−1} (h+mz)^{r′+1}`.
pub fn up_rule_factor(ring: &CohRing, d1: i32, d2: i32) -> Vec<Series> {
    assert!(d2 < d1);
    let ztab = z_table();
    let n = (d1 - d2 - 1) as usize;
    let mut x = vec![Series::zero_exact(&ztab); ring.dim()];
    let s = sign((ring.rp + 1) * n);
    x[ring.index(0, ring.rp + 1)] = Series::constant(&ztab, qi(s));
    for m in 1..=n as i64 {
        for _ in 0..=ring.rp {
            x = lin(ring, &x, Gen::H, m);
        }
    }
    x
}

/// Largest absolute coefficient in `I_d`.
pub fn max_abs_coefficient(x: &[Series]) -> Rational {
    x.iter().flat_map(|s| s.terms().map(|(_, c)| c.abs())).max().unwrap_or_else(Rational::zero)
}

// ---------------------------------------------------------------------------
// Frame and connection matrices

/// Monomial contribution `coef · q₁^{e1} q₂^{e2} · label`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTerm {
    pub coef: i64,
    pub q1: u32,
    pub q2: u32,
    pub label: Label,
}

fn ft(coef: i64, q1: u32, q2: u32, label: Label) -> FrameTerm {
    FrameTerm { coef, q1, q2, label }
}

/// `v(n, 0)` for `n ≤ r′`, else `v(n, 0) − (−1)^{r′} κ_{n−r′−1}`.
fn m_terms(geom: &FlipGeometry, n: usize) -> Vec<FrameTerm> {
    let mut out = vec![ft(1, 0, 0, Label::Image(n, 0))];
    if n > geom.rp {
        out.push(ft(-sign(geom.rp), 0, 0, Label::Kernel(n - geom.rp - 1)));
    }
    out
}

fn with_q(ts: Vec<FrameTerm>, c: i64, q1: u32, q2: u32) -> Vec<FrameTerm> {
    ts.into_iter().map(|t| ft(t.coef * c, t.q1 + q1, t.q2 + q2, t.label)).collect()
}

/// Expansion of `z∂₁ v` in the frame (with `κ₀` kept symbolic for flops).
pub fn a_action(geom: &FlipGeometry, l: Label) -> Vec<FrameTerm> {
    let (r, rp, d) = (geom.r, geom.rp, geom.d());
    match l {
        Label::Image(e1, e2) if e1 == r + 1 => {
            if e2 < rp {
                vec![ft(1, 1, 1, Label::Image(0, e2)), ft(-1, 0, 0, Label::Image(r + 1, e2 + 1))]
            } else {
                vec![ft(1, 1, 1, Label::Image(0, rp))]
            }
        }
        Label::Image(e1, e2) if e1 + e2 == rp => {
            vec![ft(1, 0, 0, Label::Image(e1 + 1, e2)), ft(-sign(rp - e2), 0, 0, Label::Kernel(0))]
        }
        Label::Image(e1, e2) => vec![ft(1, 0, 0, Label::Image(e1 + 1, e2))],
        Label::Kernel(i) if i + 1 < d => vec![ft(1, 0, 0, Label::Kernel(i + 1))],
        Label::Kernel(_) => {
            vec![ft(sign(rp), 0, 0, Label::Image(r + 1, 0)), ft(-sign(rp), 1, 0, Label::Kernel(0))]
        }
    }
}

/// Expansion of `(z∂₂ − z∂₁) v` in the frame.
pub fn b_action(geom: &FlipGeometry, l: Label) -> Vec<FrameTerm> {
    let (r, rp, d) = (geom.r, geom.rp, geom.d());
    match l {
        Label::Image(e1, e2) if e1 + e2 < rp => vec![ft(1, 0, 0, Label::Image(e1, e2 + 1))],
        Label::Image(e1, e2) if e1 + e2 == rp => {
            if e2 < rp {
                vec![ft(1, 0, 0, Label::Image(e1, e2 + 1)), ft(-sign(rp - e2 - 1), 0, 0, Label::Kernel(0))]
            } else {
                vec![ft(1, 0, 0, Label::Kernel(0))]
            }
        }
        Label::Image(e1, e2) if e2 < rp => {
            let mut out = vec![ft(1, 0, 0, Label::Image(e1, e2 + 1))];
            out.extend(with_q(m_terms(geom, e1 + e2 - rp - 1), sign(rp - e2), 0, 1));
            out
        }
        Label::Image(e1, _) => with_q(m_terms(geom, e1 - 1), 1, 0, 1),
        Label::Kernel(i) => {
            let mut out = with_q(m_terms(geom, i), 1, 0, 1);
            if i + 1 < d {
                out.push(ft(-1, 0, 0, Label::Kernel(i + 1)));
            } else {
                let _ = r;
                out.push(ft(-sign(rp), 0, 0, Label::Image(r + 1, 0)));
                out.push(ft(sign(rp), 1, 0, Label::Kernel(0)));
            }
            out
        }
    }
}

/// Frame polynomial `P(h, ξ−h)` of a label as `(coef, h-power, e-power)` terms.
pub fn frame_polynomial(geom: &FlipGeometry, l: Label) -> Vec<(i64, usize, usize)> {
    match l {
        Label::Image(e1, e2) => {
            let mut out = vec![(1, e1, e2)];
            if e1 + e2 > geom.rp {
                out.push((sign(geom.rp - e2), e1 + e2 - geom.rp - 1, geom.rp + 1));
            }
            out
        }
        Label::Kernel(i) => vec![(1, i, geom.rp + 1)],
    }
}

/// The Ψ-corrected frame as differential operators acting on `I`.
#[derive(Debug, Clone)]
pub struct QuantFrame {
    pub labels: Vec<Label>,
    pub ops: Vec<PFOperator>,
}

impl QuantFrame {
    pub fn new(geom: &FlipGeometry) -> Self {
        let t = qz_table(geom);
        let a = PFOperator::d1(&t);
        let b = PFOperator::d2(&t).sub(&a);
        let labels = geom.labels();
        let ops = labels
            .iter()
            .map(|&l| {
                frame_polynomial(geom, l).into_iter().fold(PFOperator::zero(&t), |acc, (c, i, j)| {
                    acc.add(&a.pow(i as u32).mul(&b.pow(j as u32)).left_mul(&Series::constant(&t, qi(c))))
                })
            })
            .collect();
        QuantFrame { labels, ops }
    }
}

/// `C₁`, `C₂` with `z∂_k V = V C_k` for the frame row vector `V`.
#[derive(Debug, Clone)]
pub struct ConnectionMatrices {
    pub geom: FlipGeometry,
    pub labels: Vec<Label>,
    pub c1: SeriesMatrix,
    pub c2: SeriesMatrix,
}

impl ConnectionMatrices {
    /// Wrap matrices after checking that they are free of `z`.
    pub fn from_matrices(geom: &FlipGeometry, c1: SeriesMatrix, c2: SeriesMatrix) -> Result<Self> {
        for m in [&c1, &c2] {
            if m.table().vars().iter().any(|v| v.name != "q1" && v.name != "q2") {
                return Err(FlipError::Invariant("connection matrices must be z-free".into()));
            }
            if m.rows() != geom.big_r() || m.cols() != geom.big_r() {
                return Err(FlipError::Invariant("connection matrix has the wrong rank".into()));
            }
        }
        Ok(ConnectionMatrices { geom: geom.clone(), labels: geom.labels(), c1, c2 })
    }

    pub fn image_rank(&self) -> usize {
        self.geom.big_rp()
    }

    /// Block `(i, j)` with 1 = image part, 2 = kernel part.
    pub fn block(&self, k: usize, i: usize, j: usize) -> SeriesMatrix {
        let m = if k == 1 { &self.c1 } else { &self.c2 };
        let n = self.image_rank();
        let rr = self.geom.big_r();
        let (r0, r1) = if i == 1 { (0, n) } else { (n, rr) };
        let (c0, c1) = if j == 1 { (0, n) } else { (n, rr) };
        m.block(r0, r1, c0, c1)
    }

    /// `B = C₂ − C₁`, the matrix of `z∂₂ − z∂₁`.
    pub fn b(&self) -> SeriesMatrix {
        self.c2.sub(&self.c1).expect("same shape")
    }

    /// q-caps of the entries (only flops carry finite caps).
    pub fn caps(&self) -> Vec<i32> {
        let a = self.c1.min_caps();
        let b = self.c2.min_caps();
        a.iter().zip(&b).map(|(x, y)| *x.min(y)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "r": self.geom.r,
            "rp": self.geom.rp,
            "case": self.geom.case_tag(),
            "labels": self.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "C1": self.c1.to_json(),
            "C2": self.c2.to_json(),
        })
    }
}

/// Columns of `C₁` and `B` as frame-term lists, before any flop substitution.
pub fn augmented_columns(geom: &FlipGeometry) -> (Vec<Vec<FrameTerm>>, Vec<Vec<FrameTerm>>) {
    let labels = geom.labels();
    let a = labels.iter().map(|&l| a_action(geom, l)).collect();
    let b = labels.iter().map(|&l| b_action(geom, l)).collect();
    (a, b)
}

fn terms_to_series(t: &Arc<VarTable>, terms: &[&FrameTerm]) -> Series {
    terms.iter().fold(Series::zero_exact(t), |acc, x| {
        &acc + &Series::mono(t, qi(x.coef), &[("q1", x.q1 as i32), ("q2", x.q2 as i32)]).expect("q monomial")
    })
}

/// Exact connection matrices.
///
/// For flops `κ₀` is eliminated by `κ₀ = (−1)^r (1 + (−1)^r q₁)⁻¹ v_{(r+1,0)}`,
/// expanded to `q1cap`; otherwise `q1cap` is ignored.
pub fn connection_matrices(geom: &FlipGeometry, q1cap: i32) -> Result<ConnectionMatrices> {
    let t = q_table(geom);
    let labels = geom.labels();
    let n = labels.len();
    let pos: HashMap<Label, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let flop = geom.case_tag() == CaseTag::Flop;
    let kappa_coef = if flop {
        let denom = &Series::one(&t) + &Series::var(&t, "q1")?.scale(&qi(sign(geom.r)));
        Some(denom.truncate(&[q1cap, NO_CAP]).invert()?.scale(&qi(sign(geom.r))))
    } else {
        None
    };
    let top = pos[&Label::Image(geom.r + 1, 0)];
    let build = |cols: &[Vec<FrameTerm>]| -> Result<SeriesMatrix> {
        let mut m = SeriesMatrix::zeros(&t, n, n);
        for (j, col) in cols.iter().enumerate() {
            for tm in col {
                let s = terms_to_series(&t, &[tm]);
                match pos.get(&tm.label) {
                    Some(&i) => m.set(i, j, m.get(i, j) + &s),
                    None => {
                        let c = kappa_coef
                            .as_ref()
                            .ok_or_else(|| FlipError::Invariant(format!("label {} outside the frame", tm.label)))?;
                        m.set(top, j, m.get(top, j) + &(&s * c));
                    }
                }
            }
        }
        Ok(m)
    };
    let (ac, bc) = augmented_columns(geom);
    let c1 = build(&ac)?;
    let b = build(&bc)?;
    let c2 = c1.add(&b)?;
    ConnectionMatrices::from_matrices(geom, c1, c2)
}

/// Exact matrices at a rational point (flops use the closed rational form of `κ₀`).
pub fn connection_at(geom: &FlipGeometry, q1: &Rational, q2: &Rational) -> Result<(QMatrix, QMatrix)> {
    let labels = geom.labels();
    let n = labels.len();
    let pos: HashMap<Label, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let top = pos[&Label::Image(geom.r + 1, 0)];
    let kappa = if geom.case_tag() == CaseTag::Flop {
        let den = Rational::one() + q1 * qi(sign(geom.r));
        if den.is_zero() {
            return Err(FlipError::Invariant("flop matrices have a pole at this point".into()));
        }
        Some(qi(sign(geom.r)) / den)
    } else {
        None
    };
    let eval = |tm: &FrameTerm| qi(tm.coef) * q1.pow(tm.q1 as i32) * q2.pow(tm.q2 as i32);
    let build = |cols: &[Vec<FrameTerm>]| -> QMatrix {
        let mut m = QMatrix::zeros(n, n);
        for (j, col) in cols.iter().enumerate() {
            for tm in col {
                let (i, v) = match pos.get(&tm.label) {
                    Some(&i) => (i, eval(tm)),
                    None => (top, eval(tm) * kappa.clone().expect("flop")),
                };
                let cur = m.get(i, j).clone();
                m.set(i, j, cur + v);
            }
        }
        m
    };
    let (ac, bc) = augmented_columns(geom);
    let c1 = build(&ac);
    let c2 = c1.add(&build(&bc));
    Ok((c1, c2))
}

// ---------------------------------------------------------------------------
// Checks

/// Frame components `F_j(d) = P_j(h + d₁z, ξ−h + (d₂−d₁)z) I_d`.
/// Frame vector values keyed by `(label index, degree)`.
type FrameKey = (usize, (i32, i32));

struct FrameValues {
    values: HashMap<FrameKey, Vec<Series>>,
}

impl FrameValues {
    fn new(geom: &FlipGeometry, ifn: &IFunction, degrees: &[(i32, i32)]) -> Result<Self> {
        let ring = &ifn.ring;
        let labels = geom.labels();
        let per_degree: Vec<Vec<(FrameKey, Vec<Series>)>> = degrees
            .par_iter()
            .map(|&d| -> Result<Vec<_>> {
                let base = ifn.coefficient(d)?;
                let mut powers: HashMap<(usize, usize), Vec<Series>> = HashMap::new();
                for j in 0..=geom.rp + 1 {
                    let mut x = base.clone();
                    for _ in 0..j {
                        x = lin(ring, &x, Gen::E, (d.1 - d.0) as i64);
                    }
                    for i in 0..=geom.r + 1 {
                        powers.insert((i, j), x.clone());
                        x = lin(ring, &x, Gen::H, d.0 as i64);
                    }
                }
                let mut out = Vec::new();
                for (k, &l) in labels.iter().enumerate() {
                    let mut acc = vec![Series::zero_exact(&ifn.ztab); ring.dim()];
                    for (c, i, j) in frame_polynomial(geom, l) {
                        for (a, b) in acc.iter_mut().zip(&powers[&(i, j)]) {
                            *a = &*a + &b.scale(&qi(c));
                        }
                    }
                    out.push(((k, d), acc));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(FrameValues { values: per_degree.into_iter().flatten().collect() })
    }
}

/// Outcome of the I-function oracle.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub degrees_checked: usize,
    pub residuals: Vec<String>,
}

/// Verify `z∂_k (frame·I) = (frame·I) C_k` degree by degree up to `caps`.
pub fn qde_oracle_check(cm: &ConnectionMatrices, caps: (i32, i32)) -> Result<OracleOutcome> {
    let geom = &cm.geom;
    let qc = cm.caps();
    if (qc[0] != NO_CAP && qc[0] < caps.0) || (qc[1] != NO_CAP && qc[1] < caps.1) {
        return Err(FlipError::Truncation(format!("connection caps {qc:?} below oracle caps {caps:?}")));
    }
    let ring = geom.ring();
    let ifn = IFunction::new(&ring, caps);
    let degrees: Vec<(i32, i32)> = (0..=caps.0).flat_map(|a| (0..=caps.1).map(move |b| (a, b))).collect();
    let fv = FrameValues::new(geom, &ifn, &degrees)?;
    let n = cm.labels.len();
    let mut jobs: Vec<(usize, usize, (i32, i32))> = Vec::new();
    for k in 1..=2 {
        for j in 0..n {
            jobs.extend(degrees.iter().map(|&d| (k, j, d)));
        }
    }
    let residuals: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(k, j, d)| {
            let lhs = match k {
                1 => lin(&ring, &fv.values[&(j, d)], Gen::H, d.0 as i64),
                _ => lin(&ring, &fv.values[&(j, d)], Gen::Xi, d.1 as i64),
            };
            let m = if k == 1 { &cm.c1 } else { &cm.c2 };
            let mut rhs = vec![Series::zero_exact(&ifn.ztab); ring.dim()];
            for i in 0..n {
                for (e, c) in m.get(i, j).terms() {
                    let dd = (d.0 - e[0], d.1 - e[1]);
                    if dd.0 < 0 || dd.1 < 0 {
                        continue;
                    }
                    for (a, b) in rhs.iter_mut().zip(&fv.values[&(i, dd)]) {
                        *a = &*a + &b.scale(c);
                    }
                }
            }
            if lhs == rhs {
                None
            } else {
                Some(format!("C{k} column {} at degree {d:?}", cm.labels[j]))
            }
        })
        .collect();
    Ok(OracleOutcome { degrees_checked: degrees.len(), residuals })
}

/// `∂₂C₁ = ∂₁C₂` and `[C₁, C₂] = 0` with `∂_k = q_k ∂/∂q_k`.
pub fn flatness_check(cm: &ConnectionMatrices) -> Result<bool> {
    let lhs = cm.c1.log_deriv("q2")?;
    let rhs = cm.c2.log_deriv("q1")?;
    let comm = cm.c1.commutator(&cm.c2)?;
    Ok(lhs.agrees_with(&rhs) && comm.entries().all(|(_, _, s)| s.is_zero()))
}

/// Every entry is a rational multiple of `1`, `q₁`, `q₂` or `q₁q₂`.
///
/// Flops are checked before `κ₀` is eliminated.
pub fn sublinearity_check(geom: &FlipGeometry) -> bool {
    let (a, b) = augmented_columns(geom);
    let ok = |cols: &[Vec<FrameTerm>]| cols.iter().flatten().all(|t| t.q1 <= 1 && t.q2 <= 1);
    ok(&a) && ok(&b)
}

/// Weighted homogeneity: `(C_k)_{ij}` has weight `deg v_j − deg v_i + 1`.
pub fn homogeneity_check(cm: &ConnectionMatrices) -> CheckReport {
    let geom = &cm.geom;
    let degs: Vec<i64> = cm.labels.iter().map(|&l| geom.label_degree(l) as i64).collect();
    let mut bad = Vec::new();
    let mut top = Vec::new();
    let max_w = (geom.r + geom.rp + 2) as i64;
    for (k, m) in [(1, &cm.c1), (2, &cm.c2)] {
        for (i, j, s) in m.entries() {
            let want = degs[j] - degs[i] + 1;
            for (e, _) in s.terms() {
                let w = m.table().weight_of(e);
                if w != want {
                    bad.push(format!("C{k}[{i},{j}]"));
                }
                if w == max_w {
                    top.push(format!("C{k}[{},{}]", cm.labels[i], cm.labels[j]));
                }
            }
        }
    }
    // the top weight can only sit in the row of v_(0,0)
    let top_ok = top.iter().all(|s| s.contains("[T(0,0),"));
    CheckReport::new(
        "homogeneity",
        "weighted degree deg v_j - deg v_i + 1",
        bad.is_empty() && top_ok,
        json!({"violations": bad, "top_weight_entries": top}),
    )
}

/// The kernel block of `C₁` has characteristic polynomial `λ^d − (−1)^{r′+1} q₁`.
pub fn kernel_block_check(cm: &ConnectionMatrices) -> Result<bool> {
    let d = cm.geom.d();
    if d == 0 {
        return Ok(true);
    }
    let k = cm.block(1, 2, 2);
    let cp = k.charpoly()?;
    let t = cm.c1.table();
    let mut want = vec![Series::zero_exact(t); d + 1];
    want[d] = Series::one(t);
    want[0] = Series::var(t, "q1")?.scale(&qi(-sign(cm.geom.rp + 1)));
    Ok(cp.iter().zip(&want).all(|(a, b)| a.agrees_with(b)))
}

/// `charpoly(C₁) = λ^R − q₁(q₁q₂ − λ^{r+2})^{r′+1}` as an identity over the series ring,
/// divided by the leading coefficient `1 − (−1)^{r′+1}q₁` for flops.
pub fn charpoly_identity_check(cm: &ConnectionMatrices) -> Result<bool> {
    let g = &cm.geom;
    let t = cm.c1.table();
    let cp = cm.c1.charpoly()?;
    let q1 = Series::var(t, "q1")?;
    let q1q2 = &q1 * &Series::var(t, "q2")?;
    let mut want = vec![Series::zero_exact(t); g.big_r() + 1];
    want[g.big_r()] = Series::one(t);
    let n = g.rp + 1;
    for j in 0..=n {
        // C(n,j) (q1q2)^{n−j} (−λ^{r+2})^j, times −q₁
        let c = qi(-(binom_u(n as u32, j as u32) * sign(j)));
        let idx = (g.r + 2) * j;
        want[idx] = &want[idx] + &(&q1 * &q1q2.pow((n - j) as i64)?).scale(&c);
    }
    // for flops the relation is not monic in λ
    let lead = want[g.big_r()].clone();
    Ok(cp.iter().zip(&want).all(|(a, b)| (a * &lead).agrees_with(b)))
}

/// First columns equal the classical products `h·1` and `ξ·1` in frame coordinates.
pub fn first_column_check(cm: &ConnectionMatrices) -> Result<bool> {
    let g = &cm.geom;
    let ring = g.ring();
    let inv = g.frame_matrix().inverse()?;
    let coords = |c: &crate::CohClass| -> Vec<Rational> {
        (0..g.big_r()).map(|i| (0..g.big_r()).map(|j| inv.get(i, j) * &c.coeffs[j]).sum()).collect()
    };
    let want1 = coords(&ring.h());
    let want2 = coords(&ring.xi());
    let col_ok = |m: &SeriesMatrix, w: &[Rational]| {
        (0..g.big_r()).all(|i| m.get(i, 0) == &Series::constant(m.table(), w[i].clone()).truncate(m.get(i, 0).caps()))
    };
    Ok(col_ok(&cm.c1, &want1) && col_ok(&cm.c2, &want2))
}

/// Entry shapes: `C₁` uses only `±1, ±q₁q₂` and `±q₁` at the kernel-cycle slot;
/// `C₂` uses `±1, ±q₂, ±q₁q₂, ±q₁`.
pub fn entry_shape_check(cm: &ConnectionMatrices) -> bool {
    let g = &cm.geom;
    if g.case_tag() == CaseTag::Flop {
        return true;
    }
    let rp = g.big_rp();
    let n = g.big_r();
    let c1_ok = cm.c1.entries().all(|(i, j, s)| {
        s.terms().all(|(e, c)| {
            c.abs().is_one()
                && match (e[0], e[1]) {
                    (0, 0) | (1, 1) => true,
                    (1, 0) => i == rp && j == n - 1,
                    _ => false,
                }
        })
    });
    let c2_ok = cm.c2.entries().all(|(_, _, s)| {
        s.terms().all(|(e, c)| c.abs().is_one() && matches!((e[0], e[1]), (0, 0) | (0, 1) | (1, 1) | (1, 0)))
    });
    c1_ok && c2_ok
}

// ---------------------------------------------------------------------------
// Eigenvalues

fn to_complex(m: &QMatrix) -> DMatrix<Complex<f64>> {
    let f = m.to_f64();
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| Complex::new(f[i * m.cols() + j], 0.0))
}

/// Eigenpairs `(λ, μ)` of `C₁`, `C₂` at a point, paired through shared eigenvectors.
pub fn eigen_pairs(geom: &FlipGeometry, q1: &Rational, q2: &Rational) -> Result<Vec<(Complex<f64>, Complex<f64>)>> {
    let (c1, c2) = connection_at(geom, q1, q2)?;
    let f = c1.to_f64();
    let real = DMatrix::from_fn(c1.rows(), c1.cols(), |i, j| f[i * c1.cols() + j]);
    let lambdas = real.complex_eigenvalues();
    let a = to_complex(&c1);
    let b = to_complex(&c2);
    let n = c1.rows();
    let mut out = Vec::with_capacity(n);
    for lam in lambdas.iter() {
        let shifted = &a - DMatrix::<Complex<f64>>::identity(n, n) * *lam;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| FlipError::Invariant("svd failed".into()))?;
        let (k, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.partial_cmp(y.1).unwrap_or(std::cmp::Ordering::Equal))
            .ok_or_else(|| FlipError::Invariant("empty spectrum".into()))?;
        let v: Vec<Complex<f64>> = (0..n).map(|j| vt[(k, j)].conj()).collect();
        let vv: Complex<f64> = v.iter().map(|x| x.norm_sqr()).sum::<f64>().into();
        let bv: Vec<Complex<f64>> = (0..n).map(|i| (0..n).map(|j| b[(i, j)] * v[j]).sum()).collect();
        let mu = v.iter().zip(&bv).map(|(x, y)| x.conj() * y).sum::<Complex<f64>>() / vv;
        out.push((*lam, mu));
    }
    Ok(out)
}

fn rel(a: Complex<f64>, b: Complex<f64>) -> f64 {
    let scale = a.norm().max(b.norm()).max(1e-300);
    (a - b).norm() / scale
}

/// Residuals of `μλ^{r+1} = q₁q₂` and `λ^R = q₁(q₁q₂ − λ^{r+2})^{r′+1}`.
pub fn eigenvalue_check(geom: &FlipGeometry, q1: &Rational, q2: &Rational, tol: f64) -> Result<CheckReport> {
    let pairs = eigen_pairs(geom, q1, q2)?;
    let (q1f, q2f) = (q1.to_f64().unwrap_or(f64::NAN), q2.to_f64().unwrap_or(f64::NAN));
    let p = Complex::new(q1f * q2f, 0.0);
    let mut worst_mu = 0.0f64;
    let mut worst_lambda = 0.0f64;
    for (lam, mu) in &pairs {
        worst_mu = worst_mu.max(rel(mu * lam.powu(geom.r as u32 + 1), p));
        let lhs = lam.powu(geom.big_r() as u32);
        let rhs = (p - lam.powu(geom.r as u32 + 2)).powu(geom.rp as u32 + 1) * q1f;
        worst_lambda = worst_lambda.max(rel(lhs, rhs));
    }
    let (c1, _) = connection_at(geom, q1, q2)?;
    let exact = exact_charpoly_at(geom, &c1, q1, q2);
    Ok(CheckReport::new(
        &format!("eigen ({}, {}) at q1={q1}, q2={q2}", geom.r, geom.rp),
        "mu*lambda^(r+1) = q1 q2; lambda^R = q1 (q1 q2 - lambda^(r+2))^(r'+1)",
        worst_mu < tol && worst_lambda < tol && exact,
        json!({"pairs": pairs.len(), "max_rel_mu": worst_mu, "max_rel_lambda": worst_lambda, "exact_charpoly": exact}),
    ))
}

/// Exact fallback: the characteristic polynomial of `C₁` at the point.
pub fn exact_charpoly_at(geom: &FlipGeometry, c1: &QMatrix, q1: &Rational, q2: &Rational) -> bool {
    let cp = c1.charpoly();
    let mut want = vec![Rational::zero(); geom.big_r() + 1];
    want[geom.big_r()] = Rational::one();
    let n = geom.rp + 1;
    let q1q2 = q1 * q2;
    for j in 0..=n {
        let c = qi(-(binom_u(n as u32, j as u32) * sign(j)));
        want[(geom.r + 2) * j] += c * q1 * q1q2.pow((n - j) as i32);
    }
    let lead = want[geom.big_r()].clone();
    !lead.is_zero() && cp.iter().zip(&want).all(|(a, b)| a * &lead == *b)
}

/// Near `x = 1/q₁ → 0` with `y = q₁q₂` fixed, the `d` largest eigenvalues of
/// `C₁` approach `ω x^{−1/d}` with `ω^d = (−1)^{r′+1}`.
pub fn singular_eigenvalue_check(geom: &FlipGeometry, x: &Rational, y: &Rational, tol: f64) -> Result<CheckReport> {
    let d = geom.d();
    let q1 = Rational::one() / x;
    let q2 = y * x;
    let pairs = eigen_pairs(geom, &q1, &q2)?;
    let mut lams: Vec<Complex<f64>> = pairs.iter().map(|p| p.0).collect();
    lams.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(std::cmp::Ordering::Equal));
    let xf = x.to_f64().unwrap_or(f64::NAN);
    let scale = xf.powf(-1.0 / d.max(1) as f64);
    let target_arg = if geom.rp.is_multiple_of(2) { std::f64::consts::PI } else { 0.0 };
    let omegas: Vec<Complex<f64>> = (0..d)
        .map(|j| Complex::from_polar(1.0, (target_arg + 2.0 * std::f64::consts::PI * j as f64) / d as f64))
        .collect();
    let mut worst = 0.0f64;
    for lam in lams.iter().take(d) {
        let best = omegas.iter().map(|w| rel(*lam, w * scale)).fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    // the remaining eigenvalues stay bounded relative to the singular ones
    let separated = d == 0 || lams.get(d).is_none_or(|l| l.norm() < 0.5 * scale);
    Ok(CheckReport::new(
        &format!("singular eigenvalues ({}, {}) at x={x}", geom.r, geom.rp),
        "lambda ~ omega x^(-1/d), omega^d = (-1)^(r'+1)",
        worst < tol && separated,
        json!({"d": d, "max_rel": worst, "scale": scale}),
    ))
}
