//! Cohomology rings of the local models, the Poincaré pairing and the
//! correspondences between the two sides of a flip.
//!
//! `H(X) = Q[h, ξ]/(h^{r+1}, ξ(ξ−h)^{r′+1})` with canonical basis
//! `h^i (ξ−h)^j`, `i ≤ r`, `j ≤ r′+1`. The flipped side is the same ring
//! with the roles of `r` and `r′` exchanged.

use std::fmt;

use flipqh_series::{binomial, qi, QMatrix, Rational};
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::json;

use crate::error::FlipError;

/// Cup-product ring of `P_{P^r}(O(−1)^{r′+1} ⊕ O)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CohRing {
    /// Dimension of the base projective space.
    pub r: usize,
    /// The fibre projective space has dimension `rp + 1`.
    pub rp: usize,
}

/// Element of a [`CohRing`] in the canonical basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohClass {
    pub coeffs: Vec<Rational>,
}

impl CohClass {
    pub fn zero(dim: usize) -> Self {
        CohClass { coeffs: vec![Rational::zero(); dim] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, o: &CohClass) -> CohClass {
        CohClass { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &CohClass) -> CohClass {
        self.add(&o.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> CohClass {
        CohClass { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// `{basis: "canonical", coeffs: [...]}` with decimal-string rationals.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "basis": "canonical",
            "coeffs": self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })
    }
}

impl CohRing {
    pub fn new(r: usize, rp: usize) -> Self {
        CohRing { r, rp }
    }

    pub fn dim(&self) -> usize {
        (self.r + 1) * (self.rp + 2)
    }

    /// Complex dimension of the variety.
    pub fn top_degree(&self) -> usize {
        self.r + self.rp + 1
    }

    /// Position of `h^i (ξ−h)^j` in the canonical basis.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.r && j <= self.rp + 1);
        i * (self.rp + 2) + j
    }

    /// Exponents `(i, j)` of a canonical basis element.
    pub fn label(&self, idx: usize) -> (usize, usize) {
        (idx / (self.rp + 2), idx % (self.rp + 2))
    }

    pub fn degree(&self, idx: usize) -> usize {
        let (i, j) = self.label(idx);
        i + j
    }

    /// Reduce `h^a (ξ−h)^b` to `±` a basis element, or zero.
    ///
    /// Uses `(ξ−h)^{r′+2} = −h (ξ−h)^{r′+1}` and `h^{r+1} = 0`.
    pub fn reduce_he(&self, a: usize, b: usize) -> Option<(usize, i64)> {
        let (mut a, mut b, mut sign) = (a, b, 1i64);
        if b > self.rp + 1 {
            let m = b - (self.rp + 1);
            a += m;
            b = self.rp + 1;
            if m % 2 == 1 {
                sign = -1;
            }
        }
        if a > self.r {
            None
        } else {
            Some((self.index(a, b), sign))
        }
    }

    /// Class of `h^a (ξ−h)^b`.
    pub fn he(&self, a: usize, b: usize) -> CohClass {
        let mut c = CohClass::zero(self.dim());
        if let Some((k, s)) = self.reduce_he(a, b) {
            c.coeffs[k] = qi(s);
        }
        c
    }

    pub fn one(&self) -> CohClass {
        self.he(0, 0)
    }

    pub fn h(&self) -> CohClass {
        self.he(1, 0)
    }

    /// `ξ − h`.
    pub fn e(&self) -> CohClass {
        self.he(0, 1)
    }

    pub fn xi(&self) -> CohClass {
        self.h().add(&self.e())
    }

    /// `k_i = h^i (ξ−h)^{r′+1}`.
    pub fn k(&self, i: usize) -> CohClass {
        self.he(i, self.rp + 1)
    }

    /// Product of basis elements as `(index, sign)`.
    pub fn basis_product(&self, x: usize, y: usize) -> Option<(usize, i64)> {
        let (a, b) = self.label(x);
        let (c, d) = self.label(y);
        self.reduce_he(a + c, b + d)
    }

    pub fn mul(&self, x: &CohClass, y: &CohClass) -> CohClass {
        let mut out = CohClass::zero(self.dim());
        for (i, a) in x.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                if let Some((k, s)) = self.basis_product(i, j) {
                    out.coeffs[k] += a * b * qi(s);
                }
            }
        }
        out
    }

    pub fn pow(&self, x: &CohClass, n: usize) -> CohClass {
        (0..n).fold(self.one(), |acc, _| self.mul(&acc, x))
    }

    /// Reduce an integer combination of monomials `h^a ξ^b`.
    pub fn reduce(&self, terms: &[(usize, usize, Rational)]) -> CohClass {
        let mut out = CohClass::zero(self.dim());
        for (a, b, c) in terms {
            // ξ^b = Σ C(b,k) h^k (ξ−h)^{b−k}
            for k in 0..=*b {
                if let Some((idx, s)) = self.reduce_he(a + k, b - k) {
                    out.coeffs[idx] += c * binomial(&qi(*b as i64), k as u64) * qi(s);
                }
            }
        }
        out
    }

    /// `∫ x`, normalized by `∫ h^r ξ^{r′+1} = 1`.
    pub fn integrate(&self, x: &CohClass) -> Rational {
        // h^r ξ^{r′+1} reduces to h^r (ξ−h)^{r′+1}, the unique top basis element.
        x.coeffs[self.index(self.r, self.rp + 1)].clone()
    }

    pub fn pair(&self, x: &CohClass, y: &CohClass) -> Rational {
        self.integrate(&self.mul(x, y))
    }
}

/// Which kind of birational surgery `(r, r′)` describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseTag {
    Flip,
    Flop,
    Blowup,
}

/// Label of a frame or basis element: an image class `T_e` or a kernel class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// `T_{(e1,e2)}` with `e1 ≤ r+1`, `e2 ≤ r′`.
    Image(usize, usize),
    /// `k_i`, `0 ≤ i < d`.
    Kernel(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Image(a, b) => write!(f, "T({a},{b})"),
            Label::Kernel(i) => write!(f, "k{i}"),
        }
    }
}

/// The pair `(r, r′)` with its derived data.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlipGeometry {
    pub r: usize,
    pub rp: usize,
}

impl FlipGeometry {
    pub fn new(r: usize, rp: usize) -> Result<Self, FlipError> {
        if r == 0 || rp > r {
            return Err(FlipError::Geometry(format!("need r ≥ 1 and 0 ≤ r′ ≤ r, got ({r}, {rp})")));
        }
        Ok(FlipGeometry { r, rp })
    }

    /// `R = (r+1)(r′+2)`, the rank of `H(X)`.
    pub fn big_r(&self) -> usize {
        (self.r + 1) * (self.rp + 2)
    }

    /// `R′ = (r′+1)(r+2)`, the rank of `H(X′)`.
    pub fn big_rp(&self) -> usize {
        (self.rp + 1) * (self.r + 2)
    }

    /// `d = r − r′`, the rank of the kernel of `Φ`.
    pub fn d(&self) -> usize {
        self.r - self.rp
    }

    pub fn dim(&self) -> usize {
        self.r + self.rp + 1
    }

    pub fn case_tag(&self) -> CaseTag {
        if self.rp == 0 {
            CaseTag::Blowup
        } else if self.r == self.rp {
            CaseTag::Flop
        } else {
            CaseTag::Flip
        }
    }

    pub fn ring(&self) -> CohRing {
        CohRing::new(self.r, self.rp)
    }

    /// Ring of the flipped side.
    pub fn ring_prime(&self) -> CohRing {
        CohRing::new(self.rp, self.r)
    }

    /// Frame labels: image classes by total degree then `e2`, kernel last.
    pub fn labels(&self) -> Vec<Label> {
        let mut img: Vec<(usize, usize)> = (0..=self.r + 1).flat_map(|a| (0..=self.rp).map(move |b| (a, b))).collect();
        img.sort_by_key(|&(a, b)| (a + b, b));
        img.into_iter().map(|(a, b)| Label::Image(a, b)).chain((0..self.d()).map(Label::Kernel)).collect()
    }

    pub fn position(&self, l: Label) -> usize {
        self.labels().iter().position(|&m| m == l).expect("label outside the frame")
    }

    /// Cohomological degree of a label.
    pub fn label_degree(&self, l: Label) -> usize {
        match l {
            Label::Image(a, b) => a + b,
            Label::Kernel(i) => self.rp + 1 + i,
        }
    }

    /// `T_e = h^{e1}(ξ−h)^{e2} + δ (−1)^{r′−e2} k_{e1+e2−r′−1}`.
    pub fn t_class(&self, e1: usize, e2: usize) -> CohClass {
        let ring = self.ring();
        let mut c = ring.he(e1, e2);
        if e1 + e2 > self.rp {
            let s = if (self.rp - e2).is_multiple_of(2) { 1 } else { -1 };
            c = c.add(&ring.k(e1 + e2 - self.rp - 1).scale(&qi(s)));
        }
        c
    }

    /// `T′_e = (ξ′−h′)^{e1} h′^{e2}` on the flipped side.
    pub fn t_prime_class(&self, e1: usize, e2: usize) -> CohClass {
        self.ring_prime().he(e2, e1)
    }

    pub fn label_class(&self, l: Label) -> CohClass {
        match l {
            Label::Image(a, b) => self.t_class(a, b),
            Label::Kernel(i) => self.ring().k(i),
        }
    }

    /// Columns are the frame classes in canonical coordinates.
    pub fn frame_matrix(&self) -> QMatrix {
        let cols: Vec<CohClass> = self.labels().into_iter().map(|l| self.label_class(l)).collect();
        let n = self.big_r();
        QMatrix::from_fn(n, n, |i, j| cols[j].coeffs[i].clone())
    }

    /// `Ψ : H(X′) → H(X)`.
    pub fn psi(&self, b: &CohClass) -> CohClass {
        let ring_p = self.ring_prime();
        let mut out = CohClass::zero(self.big_r());
        for (idx, c) in b.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (i, j) = ring_p.label(idx);
            // basis element h′^i (ξ′−h′)^j is T′_{(j,i)}
            out = out.add(&self.t_class(j, i).scale(c));
        }
        out
    }

    /// `Φ : H(X) → H(X′)`, the left inverse of `Ψ` killing the kernel.
    pub fn phi(&self, a: &CohClass) -> CohClass {
        let inv = self.frame_matrix().inverse().expect("frame classes form a basis");
        let coords: Vec<Rational> =
            (0..self.big_r()).map(|i| (0..self.big_r()).map(|j| inv.get(i, j) * &a.coeffs[j]).sum()).collect();
        let mut out = CohClass::zero(self.big_rp());
        for (l, c) in self.labels().into_iter().zip(coords) {
            if let Label::Image(e1, e2) = l {
                out = out.add(&self.t_prime_class(e1, e2).scale(&c));
            }
        }
        out
    }

    /// Gram matrix of the constant frame.
    pub fn frame_pairing(&self) -> QMatrix {
        let ring = self.ring();
        let cls: Vec<CohClass> = self.labels().into_iter().map(|l| self.label_class(l)).collect();
        QMatrix::from_fn(cls.len(), cls.len(), |i, j| ring.pair(&cls[i], &cls[j]))
    }

    /// The orthogonalizing change `w_i = Σ_j v_j T_{ji}` used for `(2,1)`.
    pub fn w_change(&self) -> Result<QMatrix, FlipError> {
        if (self.r, self.rp) != (2, 1) {
            return Err(FlipError::Geometry("the w-frame is defined for (2,1) only".into()));
        }
        let mut t = QMatrix::identity(9);
        for (i, j) in [(2, 1), (4, 3), (6, 5)] {
            t.set(i, j, flipqh_series::q(1, 2));
        }
        Ok(t)
    }
}

/// Pairing facts for one geometry.
///
/// Checks `(Ψa, Ψb) = (a, b)′` on basis pairs, `K ⊥ Ψ H(X′)`, `Φ∘Ψ = id`,
/// `Φ(k_i) = 0`, `Φh = ξ′ − h′`, `Φξ = ξ′`, nondegeneracy of the pairing
/// and the rank count `R − R′ = d`.
pub fn pairing_report(geom: &FlipGeometry) -> crate::report::CheckReport {
    let ring = geom.ring();
    let ring_p = geom.ring_prime();
    let basis_p: Vec<CohClass> = (0..ring_p.dim())
        .map(|i| {
            let mut c = CohClass::zero(ring_p.dim());
            c.coeffs[i] = Rational::one();
            c
        })
        .collect();
    let images: Vec<CohClass> = basis_p.iter().map(|b| geom.psi(b)).collect();
    let kernel: Vec<CohClass> = (0..geom.d()).map(|i| ring.k(i)).collect();
    let mut failures = Vec::new();
    for (i, a) in basis_p.iter().enumerate() {
        if geom.phi(&images[i]) != *a {
            failures.push(format!("Φ∘Ψ ≠ id on basis {i}"));
        }
        for (j, b) in basis_p.iter().enumerate() {
            if ring.pair(&images[i], &images[j]) != ring_p.pair(a, b) {
                failures.push(format!("Ψ does not preserve ({i}, {j})"));
            }
        }
        for (k, kc) in kernel.iter().enumerate() {
            if !ring.pair(&images[i], kc).is_zero() {
                failures.push(format!("k{k} not orthogonal to Ψ basis {i}"));
            }
        }
    }
    for (k, kc) in kernel.iter().enumerate() {
        if !geom.phi(kc).is_zero() {
            failures.push(format!("Φ(k{k}) ≠ 0"));
        }
    }
    if geom.phi(&ring.h()) != ring_p.e() {
        failures.push("Φh ≠ ξ′ − h′".into());
    }
    if geom.phi(&ring.xi()) != ring_p.xi() {
        failures.push("Φξ ≠ ξ′".into());
    }
    let n = ring.dim();
    let gram = QMatrix::from_fn(n, n, |i, j| {
        ring.pair(&ring.he(ring.label(i).0, ring.label(i).1), &ring.he(ring.label(j).0, ring.label(j).1))
    });
    if gram.rank() != n {
        failures.push("Poincaré pairing is degenerate".into());
    }
    if geom.big_r() - geom.big_rp() != geom.d() || geom.labels().len() != geom.big_r() {
        failures.push("rank count".into());
    }
    crate::report::CheckReport::new(
        &format!("pairing and correspondence ({}, {})", geom.r, geom.rp),
        "Ψ preserves the pairing; kernel orthogonal to its image",
        failures.is_empty(),
        json!({"failures": failures}),
    )
}
