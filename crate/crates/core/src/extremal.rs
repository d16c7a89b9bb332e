//! Closed-form series and combinatorial identities of the `(2,1)` flip along
//! the extremal ray.
//!
//! Contents: Lambert's generalized binomial series `𝓑_s(t)^l`, the `z = 0`
//! frame series `h₁ … h₈` (closed forms in `b = 𝓑₉` and an independent
//! degree-by-degree solve of the nonlinear system), the degree-9 polynomial
//! satisfied by `h₁`, Cayley numbers from divisorial reconstruction, Stirling
//! identities, and the linear invariance of extremal invariants.
//!
//! Everything is exact. The convergence radius `|t| < 8⁸/9⁹` of the `t`-series
//! plays no role because all identities are checked up to a truncation.

use std::sync::Arc;

use flipqh_series::{binomial, factorial, harmonic, q, qi, QMatrix, Rational, Series, VarTable};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::json;

use crate::report::CheckReport;
use crate::{FlipError, FlipGeometry, Result};

/// Univariate table in the Calabi–Yau variable `t = x⁴y`.
pub fn t_table() -> Arc<VarTable> {
    VarTable::of(&[("t", 0, false)])
}

fn t_series(coeffs: impl IntoIterator<Item = Rational>, cap: i32) -> Result<Series> {
    let terms = coeffs.into_iter().enumerate().map(|(n, c)| (vec![n as i32], c));
    Ok(Series::from_terms(&t_table(), &[cap], terms)?)
}

fn t_mono(c: Rational, k: i32) -> Series {
    Series::mono(&t_table(), c, &[("t", k)]).expect("t is in the table")
}

/// `𝓑_s(t)^l = Σ C(sn+l, n)·l/(sn+l)·tⁿ` through `t^{n_terms−1}`.
pub fn lambert(s: &Rational, l: &Rational, n_terms: usize) -> Result<Series> {
    if n_terms == 0 {
        return Err(FlipError::Truncation("lambert needs at least one term".into()));
    }
    let cap = n_terms as i32 - 1;
    if l.is_zero() {
        return Ok(Series::one(&t_table()).truncate(&[cap]));
    }
    let mut coeffs = Vec::with_capacity(n_terms);
    for n in 0..n_terms {
        let top = s * qi(n as i64) + l;
        if top.is_zero() {
            return Err(FlipError::Invariant(format!("s·n + l vanishes at n = {n}")));
        }
        coeffs.push(binomial(&top, n as u64) * l / &top);
    }
    t_series(coeffs, cap)
}

/// `b = 𝓑₉(t)` through `t^{n_terms−1}`.
pub fn b9(n_terms: usize) -> Result<Series> {
    lambert(&qi(9), &qi(1), n_terms)
}

/// Residual of `t·𝓑_s^s = 𝓑_s − 1` for integer `s ≥ 1`.
pub fn lambert_equation_residual(s: u32, n_terms: usize) -> Result<Series> {
    let b = lambert(&qi(s as i64), &qi(1), n_terms)?;
    let lhs = &t_mono(qi(1), 1) * &b.pow(s as i64)?;
    Ok(&(&lhs - &b) + &Series::one(&t_table()))
}

/// `F(X) = 1 + X + 6tX² + 3t²X³ − 2t³X⁵ + 3t⁴X⁶ + t⁶X⁹`.
pub fn key_polynomial(x: &Series) -> Result<Series> {
    let coeffs: [(i64, i32, i64); 7] = [(1, 0, 0), (1, 0, 1), (6, 1, 2), (3, 2, 3), (-2, 3, 5), (3, 4, 6), (1, 6, 9)];
    let mut out = Series::zero_exact(x.table());
    for (c, k, p) in coeffs {
        out = &out + &(&t_mono(qi(c), k) * &x.pow(p)?);
    }
    Ok(out)
}

/// `h₁ … h₈` as polynomials in `b = 𝓑₉(t)`.
pub fn h_closed_forms(n_terms: usize) -> Result<Vec<Series>> {
    let b = b9(n_terms)?;
    let p = |k: i64| b.pow(k);
    let t = t_mono(qi(1), 1);
    let one = Series::one(&t_table());
    let half = q(1, 2);
    Ok(vec![
        -p(6)?,
        &p(3)?.scale(&half) - &p(4)?,
        p(3)?,
        &(&one + &b).scale(&half) - &p(2)?,
        &b - &one,
        &t * &(&p(7)?.scale(&(-half)) - &p(8)?),
        &t * &p(7)?,
        &t * &p(5)?,
    ])
}

/// One term `c · t^k · Π h_idx` of a polynomial in `t` and `h₁ … h₈`
/// (0-based indices).
type Term = (Rational, u32, Vec<usize>);

/// The nonlinear `z = 0` system, one polynomial per equation.
pub fn nl_equations() -> Vec<Vec<Term>> {
    let t = |c: Rational, k: u32, idx: &[usize]| (c, k, idx.to_vec());
    let h = q(1, 2);
    vec![
        vec![t(qi(1), 0, &[1]), t(h.clone(), 0, &[2]), t(qi(1), 1, &[0, 0])],
        vec![t(qi(1), 0, &[3]), t(qi(1), 0, &[4]), t(qi(1), 1, &[0, 1])],
        vec![t(qi(1), 0, &[4]), t(qi(1), 1, &[0, 2])],
        vec![t(qi(1), 0, &[5]), t(qi(1), 0, &[6]), t(-h.clone(), 1, &[0]), t(qi(1), 1, &[0, 3])],
        vec![t(qi(1), 0, &[6]), t(qi(1), 1, &[0]), t(qi(1), 1, &[0, 4])],
        vec![
            t(h.clone(), 0, &[7]),
            t(qi(1), 1, &[0]),
            t(-h.clone(), 1, &[1]),
            t(q(1, 4), 1, &[2]),
            t(qi(1), 1, &[0, 5]),
        ],
        vec![t(qi(1), 0, &[7]), t(qi(1), 1, &[1]), t(-h.clone(), 1, &[2]), t(qi(1), 1, &[0, 6])],
        vec![t(qi(-1), 0, &[]), t(qi(1), 0, &[2]), t(qi(1), 0, &[3]), t(-h, 0, &[4]), t(qi(1), 0, &[0, 7])],
    ]
}

/// Evaluate the system on `t`-series, one residual per equation.
pub fn nl_residuals(h: &[Series]) -> Vec<Series> {
    nl_equations()
        .iter()
        .map(|eq| {
            eq.iter().fold(Series::zero_exact(&t_table()), |acc, (c, k, idx)| {
                let m = idx.iter().fold(t_mono(c.clone(), *k as i32), |m, &i| &m * &h[i]);
                &acc + &m
            })
        })
        .collect()
}

/// Coefficient of `tⁿ` in `eq` for coefficient arrays `h` (missing entries are 0).
fn eq_coeff(eq: &[Term], h: &[Vec<Rational>], n: usize) -> Rational {
    let get = |i: usize, k: usize| h[i].get(k).cloned().unwrap_or_else(Rational::zero);
    let mut total = Rational::zero();
    for (c, k, idx) in eq {
        let k = *k as usize;
        if k > n {
            continue;
        }
        let m = n - k;
        // coefficient of t^m in Π h_idx
        let mut prod = vec![Rational::zero(); m + 1];
        prod[0] = Rational::one();
        for &i in idx {
            let mut next = vec![Rational::zero(); m + 1];
            for (a, pa) in prod.iter().enumerate() {
                if pa.is_zero() {
                    continue;
                }
                for (b, nb) in next.iter_mut().enumerate().skip(a) {
                    let hb = get(i, b - a);
                    if !hb.is_zero() {
                        *nb += pa * hb;
                    }
                }
            }
            prod = next;
        }
        total += c * &prod[m];
    }
    total
}

/// Affine solution set `v₀ + N·s` of `A v = b`, or `None` if inconsistent.
fn affine_solve(a: &[Vec<Rational>], b: &[Rational], n: usize) -> Option<(Vec<Rational>, Vec<Vec<Rational>>)> {
    let rows: Vec<Vec<Rational>> =
        a.iter().zip(b).map(|(r, bi)| r.iter().cloned().chain([bi.clone()]).collect()).collect();
    if rows.is_empty() {
        return Some((vec![Rational::zero(); n], (0..n).map(|i| unit(n, i)).collect()));
    }
    let (r, pivots) = QMatrix::from_rows(&rows).rref();
    if pivots.contains(&n) {
        return None;
    }
    let mut v0 = vec![Rational::zero(); n];
    for (row, &p) in pivots.iter().enumerate() {
        v0[p] = r.get(row, n).clone();
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let null = free
        .iter()
        .map(|&f| {
            let mut v = unit(n, f);
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row, f).clone();
            }
            v
        })
        .collect();
    Some((v0, null))
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()
}

/// Solve `R(v) = 0` where every component of `R` is a polynomial of degree
/// at most 2 in `v` and the solution is unique.
///
/// Affine components are solved first; the solution set is substituted into
/// the rest and the process repeats until the unknowns are exhausted.
fn solve_quadratic_system<F: Fn(&[Rational]) -> Vec<Rational>>(r: F, n: usize) -> Result<Vec<Rational>> {
    let mut base = vec![Rational::zero(); n];
    let mut dirs: Vec<Vec<Rational>> = (0..n).map(|i| unit(n, i)).collect();
    loop {
        let m = dirs.len();
        let at = |s: &[Rational]| {
            let v: Vec<Rational> =
                (0..n).map(|k| dirs.iter().zip(s).fold(base[k].clone(), |acc, (d, si)| acc + &d[k] * si)).collect();
            r(&v)
        };
        let zero = vec![Rational::zero(); m];
        let r0 = at(&zero);
        if m == 0 {
            return if r0.iter().all(Zero::is_zero) {
                Ok(base)
            } else {
                Err(FlipError::Obstruction("nonlinear system is inconsistent".into()))
            };
        }
        let r1: Vec<Vec<Rational>> = (0..m).map(|i| at(&unit(m, i))).collect();
        let r2: Vec<Vec<Rational>> =
            (0..m).map(|i| at(&unit(m, i).iter().map(|x| x * qi(2)).collect::<Vec<_>>())).collect();
        let affine: Vec<usize> = (0..r0.len())
            .filter(|&k| {
                (0..m).all(|i| &r2[i][k] - &r1[i][k] * qi(2) + &r0[k] == Rational::zero())
                    && (0..m).all(|i| {
                        (i + 1..m).all(|j| {
                            let mut s = unit(m, i);
                            s[j] = Rational::one();
                            at(&s)[k].clone() - &r1[i][k] - &r1[j][k] + &r0[k] == Rational::zero()
                        })
                    })
            })
            .collect();
        if affine.is_empty() {
            return Err(FlipError::Obstruction("no affine equation left in the nonlinear solve".into()));
        }
        let a: Vec<Vec<Rational>> = affine.iter().map(|&k| (0..m).map(|i| &r1[i][k] - &r0[k]).collect()).collect();
        let b: Vec<Rational> = affine.iter().map(|&k| -r0[k].clone()).collect();
        let (s0, null) =
            affine_solve(&a, &b, m).ok_or_else(|| FlipError::Obstruction("nonlinear system is inconsistent".into()))?;
        if null.len() == m {
            return Err(FlipError::Obstruction("nonlinear solve made no progress".into()));
        }
        let lift = |s: &[Rational], with_base: bool| -> Vec<Rational> {
            (0..n)
                .map(|k| {
                    let start = if with_base { base[k].clone() } else { Rational::zero() };
                    dirs.iter().zip(s).fold(start, |acc, (d, si)| acc + &d[k] * si)
                })
                .collect()
        };
        let new_base = lift(&s0, true);
        let new_dirs: Vec<Vec<Rational>> = null.iter().map(|v| lift(v, false)).collect();
        base = new_base;
        dirs = new_dirs;
    }
}

/// Solve the nonlinear system degree by degree in `t`, independently of the
/// closed forms.
///
/// Step 0 fixes `h₂ … h₈` at `t⁰`. Step `n ≥ 1` fixes `h₁` at `t^{n−1}` together
/// with `h₂ … h₈` at `tⁿ`: `h₁` only enters the `t`-free part through `h₁h₈`,
/// and `h₈` has no constant term, so its coefficients lag by one degree.
pub fn nl_system_solve(n_terms: usize) -> Result<Vec<Series>> {
    if n_terms == 0 {
        return Err(FlipError::Truncation("nl_system_solve needs at least one term".into()));
    }
    let eqs = nl_equations();
    let mut h: Vec<Vec<Rational>> = vec![Vec::new(); 8];
    for n in 0..=n_terms {
        let with = |v: &[Rational]| -> Vec<Vec<Rational>> {
            let mut hh = h.clone();
            let (h1, rest) = if n == 0 { (None, v) } else { (Some(&v[0]), &v[1..]) };
            if let Some(c) = h1 {
                hh[0].push(c.clone());
            }
            for (i, c) in rest.iter().enumerate() {
                hh[i + 1].push(c.clone());
            }
            hh
        };
        let dim = if n == 0 { 7 } else { 8 };
        let sol = solve_quadratic_system(|v| eqs.iter().map(|eq| eq_coeff(eq, &with(v), n)).collect(), dim)?;
        h = with(&sol);
        if n == 0 && !h[7][0].is_zero() {
            return Err(FlipError::Invariant("h₈ has a constant term".into()));
        }
    }
    let cap = n_terms as i32 - 1;
    h.into_iter().map(|c| t_series(c.into_iter().take(n_terms), cap)).collect()
}

/// Determinant of the linear system in `h₂ … h₈` (constants in the first
/// column) as a polynomial in `t` and `X = h₁`.
pub fn consistency_determinant() -> Result<Series> {
    let table = VarTable::of(&[("t", 0, false), ("X", 0, false)]);
    let mut m: Vec<Vec<Series>> = vec![vec![Series::zero_exact(&table); 8]; 8];
    for (row, eq) in nl_equations().iter().enumerate() {
        for (c, k, idx) in eq {
            let unknowns: Vec<usize> = idx.iter().copied().filter(|&i| i != 0).collect();
            let xpow = (idx.len() - unknowns.len()) as i32;
            let col = match unknowns.as_slice() {
                [] => 0,
                [j] => *j,
                _ => return Err(FlipError::Invariant("system is not linear in h₂ … h₈".into())),
            };
            let mono = Series::mono(&table, c.clone(), &[("t", *k as i32), ("X", xpow)])?;
            m[row][col] = &m[row][col] + &mono;
        }
    }
    Ok(laplace_det(&m, &table))
}

fn laplace_det(m: &[Vec<Series>], table: &Arc<VarTable>) -> Series {
    let n = m.len();
    if n == 0 {
        return Series::one(table);
    }
    let mut total = Series::zero_exact(table);
    for (j, entry) in m[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<Series>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, s)| s.clone()).collect())
            .collect();
        let term = entry * &laplace_det(&minor, table);
        total = if j % 2 == 0 { &total + &term } else { &total - &term };
    }
    total
}

/// `t·F(X)` as a polynomial in `t` and `X`.
pub fn t_key_polynomial_tx() -> Result<Series> {
    let table = VarTable::of(&[("t", 0, false), ("X", 0, false)]);
    let coeffs: [(i64, i32, i32); 7] = [(1, 0, 0), (1, 0, 1), (6, 1, 2), (3, 2, 3), (-2, 3, 5), (3, 4, 6), (1, 6, 9)];
    let mut out = Series::zero_exact(&table);
    for (c, k, p) in coeffs {
        out = &out + &Series::mono(&table, qi(c), &[("t", k + 1), ("X", p)])?;
    }
    Ok(out)
}

/// Cayley numbers `a_d = ⟨κ₀^{⊗(d+1)}⟩_{dℓ}` from divisorial reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyTable {
    /// `a[d]` for `0 ≤ d ≤ d_max`; `a₀ = 0` always enters with coefficient zero.
    a: Vec<BigInt>,
}

impl CayleyTable {
    /// Table from explicit values `a₀, a₁, …`.
    pub fn from_values(a: Vec<BigInt>) -> Result<Self> {
        if a.len() < 2 {
            return Err(FlipError::Truncation("a Cayley table needs a₀ and a₁".into()));
        }
        Ok(CayleyTable { a })
    }

    pub fn d_max(&self) -> usize {
        self.a.len() - 1
    }

    /// `a_d` with the convention `a₋₁ = −1`.
    pub fn get(&self, d: i64) -> Option<BigInt> {
        match d {
            -1 => Some(BigInt::from(-1)),
            d if d >= 0 => self.a.get(d as usize).cloned(),
            _ => None,
        }
    }

    pub fn values(&self) -> &[BigInt] {
        &self.a
    }

    /// `a_d = d^{d−2}` for `1 ≤ d ≤ d_max`.
    pub fn matches_closed_form(&self) -> bool {
        (1..=self.d_max()).all(|d| self.a[d] == cayley_closed(d))
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!(self.a.iter().enumerate().skip(1).map(|(d, a)| json!({"d": d, "a": a.to_string()})).collect::<Vec<_>>())
    }
}

/// `d^{d−2}` for `d ≥ 1`.
pub fn cayley_closed(d: usize) -> BigInt {
    if d == 1 {
        BigInt::one()
    } else {
        num_traits::pow(BigInt::from(d), d - 2)
    }
}

fn binom_int(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n as u64) / (factorial(k as u64) * factorial((n - k) as u64))
}

fn sign(k: usize) -> BigInt {
    if k.is_multiple_of(2) {
        BigInt::one()
    } else {
        BigInt::from(-1)
    }
}

/// `a_d = Σ_{d′=1}^{d−1} d′·a_{d′}·a_{d−d′}·C(d−2, d′−1)` seeded with `a₁ = 1`.
pub fn cayley(d_max: usize) -> Result<CayleyTable> {
    if d_max == 0 {
        return Err(FlipError::Truncation("cayley needs d_max ≥ 1".into()));
    }
    let mut a = vec![BigInt::zero(), BigInt::one()];
    for d in 2..=d_max {
        let s = (1..d)
            .fold(BigInt::zero(), |acc, dp| acc + BigInt::from(dp) * &a[dp] * &a[d - dp] * binom_int(d - 2, dp - 1));
        a.push(s);
    }
    Ok(CayleyTable { a })
}

/// `(j−1)^{e}` with `0⁰ = 1`.
fn pow_shift(j: usize, e: usize) -> BigInt {
    num_traits::pow(BigInt::from(j as i64 - 1), e)
}

/// Left side of the invariance relation
/// `Σ_{j=0}^{n} (−1)^{n−j} C(n,j) (j−1)^{n−j} a_{j−1}`.
pub fn cayley_relation_sum(table: &CayleyTable, n: usize) -> Result<BigInt> {
    if n > table.d_max() + 1 {
        return Err(FlipError::Truncation(format!(
            "n = {n} needs a_{} but the table stops at {}",
            n - 1,
            table.d_max()
        )));
    }
    Ok((0..=n).fold(BigInt::zero(), |acc, j| {
        let a = table.get(j as i64 - 1).expect("index checked");
        acc + sign(n - j) * binom_int(n, j) * pow_shift(j, n - j) * a
    }))
}

/// The same relation solved for `a_{n−1}`: the table it produces without
/// divisorial reconstruction (`a₁` from `n = 2` onwards).
pub fn cayley_from_invariance(d_max: usize) -> Result<CayleyTable> {
    if d_max == 0 {
        return Err(FlipError::Truncation("cayley_from_invariance needs d_max ≥ 1".into()));
    }
    let mut table = CayleyTable { a: vec![BigInt::zero()] };
    for n in 2..=d_max + 1 {
        // a_{n−1} enters with coefficient C(n,n)(n−1)⁰ = 1
        table.a.push(BigInt::zero());
        let rhs = if n == 3 { BigInt::from(-3) } else { BigInt::zero() };
        let partial = cayley_relation_sum(&table, n)?;
        table.a[n - 1] = rhs - partial;
    }
    Ok(table)
}

/// Invariance relation `= −3δ_{n,3}` for `2 ≤ n ≤ n_max`.
pub fn cayley_relation_check(table: &CayleyTable, n_max: usize) -> Result<CheckReport> {
    let mut bad = Vec::new();
    for n in 2..=n_max {
        let s = cayley_relation_sum(table, n)?;
        let want = if n == 3 { BigInt::from(-3) } else { BigInt::zero() };
        if s != want {
            bad.push(json!({"n": n, "sum": s.to_string(), "expected": want.to_string()}));
        }
    }
    Ok(CheckReport::new(
        "extremal invariance relation on Cayley numbers",
        "invariance relation with a₋₁ = −1",
        bad.is_empty(),
        json!({"n_max": n_max, "failures": bad}),
    ))
}

/// `x`-coefficient of `⟨[ξ−h]^{⊗n}⟩^X` expanded through the divisor axiom,
/// including the classical `3x·δ_{n,3}`.
pub fn invariance_sum(table: &CayleyTable, n: usize) -> Result<BigInt> {
    if n < 2 || n > table.d_max() + 1 {
        return Err(FlipError::Truncation(format!("invariance sum at n = {n} is outside the table")));
    }
    let quantum = (2..=n)
        .fold(BigInt::zero(), |acc, j| acc + sign(n - j) * binom_int(n, j) * pow_shift(j, n - j) * &table.a[j - 1]);
    Ok(quantum + if n == 3 { BigInt::from(3) } else { BigInt::zero() })
}

/// Virtual-dimension selection and value of the one-point invariant `⟨h′⟩`
/// on the `(2,1)` flipped side, from the `q^{d′ℓ′}` term of its I-function
/// `(−1)^{3(d′−1)} (ξ′−h′)³ Π_{m<d′}(h′+mz) / (h′+d′z)²`.
///
/// Returns `(d′, ⟨h′⟩_{d′ℓ′})`.
pub fn one_point_prime() -> Result<(usize, Rational)> {
    let ring = FlipGeometry::new(2, 1)?.ring_prime();
    // virtual dimension 2 − d′ must equal deg h′ = 1
    let dp = (1..=4usize).find(|&d| 2 - d as i64 == 1).expect("d′ = 1");
    // for d′ = 1 the I-function is (ξ′−h′)³/z² + O(z⁻³); the z⁻² part is Σ ⟨T_a⟩ T^a
    let sgn = if (3 * (dp - 1)) % 2 == 0 { qi(1) } else { qi(-1) };
    let class = ring.pow(&ring.e(), 3).scale(&sgn);
    Ok((dp, ring.pair(&class, &ring.h())))
}

/// `⟨[ξ−h]^{⊗n}⟩^X = x = ⟨(h′)^{⊗n}⟩^{X′}` for `3 ≤ n ≤ n_max`.
pub fn extremal_invariance_check(table: &CayleyTable, n_max: usize) -> Result<CheckReport> {
    let (dp, prime) = one_point_prime()?;
    let mut rows = Vec::new();
    let mut ok = dp == 1 && prime == qi(1);
    for n in 3..=n_max {
        let s = invariance_sum(table, n)?;
        ok &= s == BigInt::one();
        rows.push(json!({"n": n, "x_coefficient": s.to_string()}));
    }
    Ok(CheckReport::new(
        "linear invariance along the extremal ray",
        "homogeneous expansion of ⟨[ξ−h]^n⟩ against ⟨h′⟩ = q^ℓ′",
        ok,
        json!({"d_prime": dp, "one_point_prime": prime.to_string(), "rows": rows}),
    ))
}

/// `𝓔 = Σ_{d≥1} a_d t^{d−1}/(d−1)!` through `t^{n_terms−1}`.
pub fn euler_series(table: &CayleyTable, n_terms: usize) -> Result<Series> {
    if n_terms == 0 || n_terms > table.d_max() {
        return Err(FlipError::Truncation(format!("𝓔 to {n_terms} terms needs a_d up to d = {n_terms}")));
    }
    let coeffs = (1..=n_terms).map(|d| Rational::from(table.a[d].clone()) / Rational::from(factorial(d as u64 - 1)));
    t_series(coeffs, n_terms as i32 - 1)
}

/// Residual of Euler's functional equation `𝓔 − e^{t𝓔}`.
pub fn euler_residual(table: &CayleyTable, n_terms: usize) -> Result<Series> {
    let e = euler_series(table, n_terms)?;
    let te = &t_mono(qi(1), 1) * &e;
    Ok(&e - &te.exp()?)
}

/// Stirling numbers of the second kind `S(m, n)` for `m, n ≤ n_max` by the
/// recurrence `S(m,n) = n·S(m−1,n) + S(m−1,n−1)`.
pub fn stirling2_table(n_max: usize) -> Vec<Vec<BigInt>> {
    let mut s = vec![vec![BigInt::zero(); n_max + 1]; n_max + 1];
    s[0][0] = BigInt::one();
    for m in 1..=n_max {
        for n in 1..=m {
            s[m][n] = BigInt::from(n) * &s[m - 1][n] + &s[m - 1][n - 1];
        }
    }
    s
}

/// Unsigned Stirling numbers of the first kind `c(m, k)`.
pub fn stirling1_table(m_max: usize) -> Vec<Vec<BigInt>> {
    let mut c = vec![vec![BigInt::zero(); m_max + 1]; m_max + 1];
    c[0][0] = BigInt::one();
    for m in 1..=m_max {
        for k in 1..=m {
            c[m][k] = BigInt::from(m - 1) * &c[m - 1][k] + &c[m - 1][k - 1];
        }
    }
    c
}

/// `Σ_j (−1)^{n−j} C(n,j) (j−1)^{n−3}` for `n ≥ 3`.
pub fn stirling_vanishing_sum(n: usize) -> BigInt {
    (0..=n).fold(BigInt::zero(), |acc, j| acc + sign(n - j) * binom_int(n, j) * pow_shift(j, n - 3))
}

/// First-kind row `a_n = (n+1)!·H_{n+1}`, the coefficients of `g₈` at `y⁰`.
pub fn first_kind_closed(n: usize) -> Rational {
    Rational::from(factorial(n as u64 + 1)) * harmonic(n as u64 + 1)
}

/// Stirling identities through `n_max`.
///
/// Checks `n!·S(m,n) = Σ_j (−1)^{n−j} C(n,j) j^m`, the vanishing sum for
/// `4 ≤ n`, its termwise agreement with the invariance relation once
/// `a_d = d^{d−2}`, and the first-kind row against `a_n = (n+1)a_{n−1} + n!`
/// and the count of permutations of `n+2` letters with two cycles.
pub fn stirling_checks(n_max: usize) -> CheckReport {
    let s2 = stirling2_table(n_max);
    let mut failures = Vec::new();
    for m in 0..=n_max {
        for n in 0..=n_max {
            let rhs = (0..=n).fold(BigInt::zero(), |acc, j| {
                acc + sign(n - j) * binom_int(n, j) * num_traits::pow(BigInt::from(j), m)
            });
            if factorial(n as u64) * &s2[m][n] != rhs {
                failures.push(json!({"identity": "second kind", "m": m, "n": n}));
            }
        }
    }
    for n in 4..=n_max {
        if !stirling_vanishing_sum(n).is_zero() {
            failures.push(json!({"identity": "vanishing sum", "n": n}));
        }
        // with a_{j−1} = (j−1)^{j−3} each term of the invariance relation is (j−1)^{n−3}
        let termwise = (0..=n).all(|j| {
            let a = if j == 0 {
                BigInt::from(-1)
            } else if j == 1 {
                BigInt::zero()
            } else {
                cayley_closed(j - 1)
            };
            pow_shift(j, n - j) * a == if j == 1 { BigInt::zero() } else { pow_shift(j, n - 3) }
        });
        if !termwise {
            failures.push(json!({"identity": "invariance vs vanishing sum", "n": n}));
        }
    }
    let c1 = stirling1_table(n_max + 2);
    let mut prev = Rational::one();
    for n in 0..=n_max {
        let closed = first_kind_closed(n);
        let recursive =
            if n == 0 { Rational::one() } else { qi(n as i64 + 1) * &prev + Rational::from(factorial(n as u64)) };
        if closed != recursive || closed != Rational::from(c1[n + 2][2].clone()) {
            failures.push(json!({"identity": "first kind", "n": n}));
        }
        prev = recursive;
    }
    CheckReport::new(
        "Stirling identities",
        "second-kind inclusion–exclusion, vanishing sum, first-kind harmonic closed form",
        failures.is_empty(),
        json!({"n_max": n_max, "failures": failures}),
    )
}

/// The three `z = 0` paths for `h₁ … h₈`: closed forms, nonlinear solve and
/// (optionally) the block-diagonalization series.
pub fn z0_agreement(n_terms: usize, from_blockdiag: Option<&[Series]>) -> Result<CheckReport> {
    let closed = h_closed_forms(n_terms)?;
    let solved = nl_system_solve(n_terms)?;
    let cap = n_terms as i32 - 1;
    let mut mismatches = Vec::new();
    for i in 0..8 {
        if closed[i].first_difference(&solved[i]).is_some() {
            mismatches.push(json!({"h": i + 1, "path": "nonlinear solve"}));
        }
        if let Some(bd) = from_blockdiag {
            let common = bd[i].cap("t")?.min(cap);
            if closed[i].truncate(&[common]).first_difference(&bd[i].truncate(&[common])).is_some() {
                mismatches.push(json!({"h": i + 1, "path": "block diagonalization", "t_cap": common}));
            }
        }
    }
    let f = key_polynomial(&closed[0])?;
    let residual_zero = nl_residuals(&closed).iter().all(Series::is_zero);
    let ok = mismatches.is_empty() && f.is_zero() && residual_zero;
    Ok(CheckReport::new(
        "z = 0 frame series",
        "closed forms in b = 𝓑₉, nonlinear system, degree-9 polynomial",
        ok,
        json!({
            "t_cap": cap,
            "h1": closed[0].to_json(),
            "key_polynomial_vanishes": f.is_zero(),
            "nonlinear_residual_vanishes": residual_zero,
            "mismatches": mismatches,
        }),
    ))
}
