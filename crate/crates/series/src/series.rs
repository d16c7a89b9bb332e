use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{parse_rational, qi};
use crate::{Rational, SeriesError, Var, VarTable};

/// Exponent vector indexed by table position.
pub type Monomial = Vec<i32>;

/// Sentinel cap meaning "no truncation in this variable".
pub const NO_CAP: i32 = i32::MAX;

fn cap_shift(cap: i32, by: i64) -> i32 {
    if cap == NO_CAP {
        NO_CAP
    } else {
        (cap as i64 + by).clamp(i32::MIN as i64, (NO_CAP - 1) as i64) as i32
    }
}

/// Truncated multivariate series with rational coefficients.
///
/// Terms beyond any per-variable cap are unknown and never stored. Binary
/// operations keep only what both operands determine.
#[derive(Clone, Debug)]
pub struct Series {
    table: Arc<VarTable>,
    caps: Vec<i32>,
    terms: BTreeMap<Monomial, Rational>,
}

impl PartialEq for Series {
    fn eq(&self, other: &Self) -> bool {
        self.same_table(other) && self.caps == other.caps && self.terms == other.terms
    }
}

impl Series {
    /// Zero series with the given caps.
    pub fn zero(table: &Arc<VarTable>, caps: &[i32]) -> Self {
        assert_eq!(caps.len(), table.len(), "cap vector length");
        Series { table: table.clone(), caps: caps.to_vec(), terms: BTreeMap::new() }
    }

    /// Zero series with no truncation.
    pub fn zero_exact(table: &Arc<VarTable>) -> Self {
        Self::zero(table, &vec![NO_CAP; table.len()])
    }

    /// Constant series with no truncation.
    pub fn constant(table: &Arc<VarTable>, c: Rational) -> Self {
        let mut s = Self::zero_exact(table);
        if !c.is_zero() {
            s.terms.insert(vec![0; table.len()], c);
        }
        s
    }

    pub fn one(table: &Arc<VarTable>) -> Self {
        Self::constant(table, Rational::one())
    }

    /// `c * prod v^exp[v]` with no truncation.
    pub fn monomial(table: &Arc<VarTable>, exp: &[i32], c: Rational) -> Result<Self, SeriesError> {
        if exp.len() != table.len() {
            return Err(SeriesError::Shape(format!("exponent length {} for {} variables", exp.len(), table.len())));
        }
        for (i, &e) in exp.iter().enumerate() {
            if e < 0 && !table.var(i).laurent {
                return Err(SeriesError::NegativeExponent(table.var(i).name.clone()));
            }
        }
        let mut s = Self::zero_exact(table);
        if !c.is_zero() {
            s.terms.insert(exp.to_vec(), c);
        }
        Ok(s)
    }

    /// The variable `name` itself.
    pub fn var(table: &Arc<VarTable>, name: &str) -> Result<Self, SeriesError> {
        let i = table.index(name)?;
        let mut e = vec![0; table.len()];
        e[i] = 1;
        Self::monomial(table, &e, Rational::one())
    }

    /// Monomial built from `(name, exponent)` pairs.
    pub fn mono(table: &Arc<VarTable>, c: Rational, powers: &[(&str, i32)]) -> Result<Self, SeriesError> {
        let mut e = vec![0; table.len()];
        for &(n, k) in powers {
            e[table.index(n)?] += k;
        }
        Self::monomial(table, &e, c)
    }

    /// Build from explicit terms; terms beyond the caps are dropped.
    pub fn from_terms<I>(table: &Arc<VarTable>, caps: &[i32], terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut s = Self::zero(table, caps);
        for (e, c) in terms {
            let m = Self::monomial(table, &e, c)?;
            s = s.checked_add(&m)?;
        }
        Ok(s)
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn caps(&self) -> &[i32] {
        &self.caps
    }

    pub fn cap(&self, name: &str) -> Result<i32, SeriesError> {
        Ok(self.caps[self.table.index(name)?])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Number of nonzero terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True when no term is stored; same as [`Series::is_zero`].
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: &[i32]) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_else(Rational::zero)
    }

    /// Coefficient addressed by `(name, exponent)` pairs.
    pub fn coeff_of(&self, powers: &[(&str, i32)]) -> Rational {
        let mut e = vec![0; self.table.len()];
        for &(n, k) in powers {
            e[self.table.index(n).expect("unknown variable")] += k;
        }
        self.coeff(&e)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&vec![0; self.table.len()])
    }

    /// Whether `exp` lies inside the known region.
    pub fn within_caps(&self, exp: &[i32]) -> bool {
        exp.iter().zip(&self.caps).all(|(&e, &c)| e <= c)
    }

    pub fn same_table(&self, other: &Series) -> bool {
        Arc::ptr_eq(&self.table, &other.table) || *self.table == *other.table
    }

    fn check_table(&self, other: &Series) -> Result<(), SeriesError> {
        if self.same_table(other) {
            Ok(())
        } else {
            Err(SeriesError::TableMismatch(format!(
                "{:?} vs {:?}",
                self.table.vars().iter().map(|v| &v.name).collect::<Vec<_>>(),
                other.table.vars().iter().map(|v| &v.name).collect::<Vec<_>>()
            )))
        }
    }

    fn insert_add(terms: &mut BTreeMap<Monomial, Rational>, e: Monomial, c: Rational) {
        use std::collections::btree_map::Entry;
        match terms.entry(e) {
            Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Lower the caps (never raises them) and drop terms beyond.
    pub fn truncate(&self, caps: &[i32]) -> Series {
        let caps: Vec<i32> = self.caps.iter().zip(caps).map(|(&a, &b)| a.min(b)).collect();
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e.iter().zip(&caps).all(|(&x, &c)| x <= c))
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect();
        Series { table: self.table.clone(), caps, terms }
    }

    /// Lower the cap of a single variable.
    pub fn truncate_var(&self, name: &str, cap: i32) -> Series {
        let mut caps = vec![NO_CAP; self.table.len()];
        caps[self.table.index(name).expect("unknown variable")] = cap;
        self.truncate(&caps)
    }

    pub fn checked_add(&self, other: &Series) -> Result<Series, SeriesError> {
        self.check_table(other)?;
        let caps: Vec<i32> = self.caps.iter().zip(&other.caps).map(|(&a, &b)| a.min(b)).collect();
        let mut out = self.truncate(&caps);
        for (e, c) in &other.terms {
            if e.iter().zip(&caps).all(|(&x, &k)| x <= k) {
                Self::insert_add(&mut out.terms, e.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Series) -> Result<Series, SeriesError> {
        self.checked_add(&-other)
    }

    pub fn scale(&self, c: &Rational) -> Series {
        let mut out = Series::zero(&self.table, &self.caps);
        if !c.is_zero() {
            out.terms = self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect();
        }
        out
    }

    /// Effective lower exponent bound used for truncation bookkeeping.
    fn low(&self, v: usize) -> i64 {
        if !self.table.var(v).laurent {
            return 0;
        }
        self.terms.keys().map(|e| e[v] as i64).min().unwrap_or(0).min(0)
    }

    pub fn checked_mul(&self, other: &Series) -> Result<Series, SeriesError> {
        self.check_table(other)?;
        let n = self.table.len();
        let caps: Vec<i32> =
            (0..n).map(|v| cap_shift(self.caps[v], other.low(v)).min(cap_shift(other.caps[v], self.low(v)))).collect();
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = Vec::with_capacity(n);
                let mut inside = true;
                for v in 0..n {
                    let x = ea[v] + eb[v];
                    if x > caps[v] {
                        inside = false;
                        break;
                    }
                    e.push(x);
                }
                if inside {
                    Self::insert_add(&mut terms, e, ca * cb);
                }
            }
        }
        Ok(Series { table: self.table.clone(), caps, terms })
    }

    /// Integer power; negative exponents go through [`Series::invert`].
    pub fn pow(&self, k: i64) -> Result<Series, SeriesError> {
        if k < 0 {
            return self.invert()?.pow(-k);
        }
        let mut result = Series::one(&self.table).truncate(&self.caps);
        let mut base = self.clone();
        let mut k = k as u64;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// Componentwise minimum exponent over stored terms.
    pub fn min_exps(&self) -> Option<Monomial> {
        let mut it = self.terms.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, e| acc.iter().zip(e).map(|(&a, &b)| a.min(b)).collect()))
    }

    pub fn min_exp(&self, name: &str) -> Option<i32> {
        let v = self.table.index(name).ok()?;
        self.terms.keys().map(|e| e[v]).min()
    }

    pub fn max_exp(&self, name: &str) -> Option<i32> {
        let v = self.table.index(name).ok()?;
        self.terms.keys().map(|e| e[v]).max()
    }

    /// Multiply by the monomial with exponent `shift`, moving caps along.
    pub fn shift(&self, shift: &[i32]) -> Result<Series, SeriesError> {
        let mut out = Series::zero(
            &self.table,
            &self.caps.iter().zip(shift).map(|(&c, &s)| cap_shift(c, s as i64)).collect::<Vec<_>>(),
        );
        for (e, c) in &self.terms {
            let ne: Monomial = e.iter().zip(shift).map(|(&a, &b)| a + b).collect();
            for (i, &x) in ne.iter().enumerate() {
                if x < 0 && !self.table.var(i).laurent {
                    return Err(SeriesError::NegativeExponent(self.table.var(i).name.clone()));
                }
            }
            out.terms.insert(ne, c.clone());
        }
        Ok(out)
    }

    /// Multiplicative inverse of `m * (c + higher)` with `m` a monomial.
    ///
    /// The leading monomial is the unique term whose exponents in the capped
    /// variables are minimal; every other term must be strictly higher there.
    pub fn invert(&self) -> Result<Series, SeriesError> {
        if self.terms.is_empty() {
            return Err(SeriesError::Inversion("zero series".into()));
        }
        let capped: Vec<usize> = (0..self.table.len()).filter(|&v| self.caps[v] != NO_CAP).collect();
        let mut low: Vec<i32> = capped.iter().map(|_| i32::MAX).collect();
        for e in self.terms.keys() {
            for (k, &v) in capped.iter().enumerate() {
                low[k] = low[k].min(e[v]);
            }
        }
        let leading: Vec<&Monomial> =
            self.terms.keys().filter(|e| capped.iter().zip(&low).all(|(&v, &l)| e[v] == l)).collect();
        if leading.len() != 1 {
            return Err(SeriesError::Inversion("no leading monomial".into()));
        }
        let m = leading[0].clone();
        let c = self.coeff(&m);
        let neg_m: Vec<i32> = m.iter().map(|&x| -x).collect();
        let unit = self
            .shift(&neg_m)
            .map_err(|e| SeriesError::Inversion(format!("leading monomial not invertible: {e}")))?
            .scale(&(Rational::one() / &c));
        let mut w = unit.clone();
        w.terms.remove(&vec![0; self.table.len()]);
        let minus_w = -&w;
        let mut result = Series::one(&self.table).truncate(&unit.caps);
        let mut power = result.clone();
        loop {
            power = &power * &minus_w;
            if power.is_zero() {
                break;
            }
            result = &result + &power;
        }
        result.shift(&neg_m).map(|s| s.scale(&(Rational::one() / c))).map_err(|e| SeriesError::Inversion(e.to_string()))
    }

    /// `exp(a)` for a series without constant term.
    pub fn exp(&self) -> Result<Series, SeriesError> {
        if !self.constant_term().is_zero() {
            return Err(SeriesError::Inversion("exp needs zero constant term".into()));
        }
        let mut result = Series::one(&self.table).truncate(&self.caps);
        let mut power = result.clone();
        let mut k = 0i64;
        loop {
            k += 1;
            power = (&power * self).scale(&(Rational::one() / qi(k)));
            if power.is_zero() {
                break;
            }
            if k > 100_000 {
                return Err(SeriesError::Inversion("exp did not terminate under the caps".into()));
            }
            result = &result + &power;
        }
        Ok(result)
    }

    /// `v * d/dv` applied termwise.
    pub fn log_deriv(&self, name: &str) -> Result<Series, SeriesError> {
        let v = self.table.index(name)?;
        let mut out = Series::zero(&self.table, &self.caps);
        for (e, c) in &self.terms {
            if e[v] != 0 {
                out.terms.insert(e.clone(), c * qi(e[v] as i64));
            }
        }
        Ok(out)
    }

    /// Apply `f` to every coefficient, keeping caps.
    pub fn map_coeffs<F: Fn(&Monomial, &Rational) -> Rational>(&self, f: F) -> Series {
        let mut out = Series::zero(&self.table, &self.caps);
        for (e, c) in &self.terms {
            let x = f(e, c);
            if !x.is_zero() {
                out.terms.insert(e.clone(), x);
            }
        }
        out
    }

    /// Keep the terms selected by `keep`.
    pub fn filter<F: Fn(&Monomial) -> bool>(&self, keep: F) -> Series {
        let mut out = Series::zero(&self.table, &self.caps);
        out.terms = self.terms.iter().filter(|(e, _)| keep(e)).map(|(e, c)| (e.clone(), c.clone())).collect();
        out
    }

    /// Re-express over another table that contains every variable used.
    pub fn embed(&self, target: &Arc<VarTable>) -> Result<Series, SeriesError> {
        let map: Vec<usize> = self.table.vars().iter().map(|v| target.index(&v.name)).collect::<Result<_, _>>()?;
        let mut caps = vec![NO_CAP; target.len()];
        for (i, &j) in map.iter().enumerate() {
            caps[j] = self.caps[i];
        }
        let mut out = Series::zero(target, &caps);
        for (e, c) in &self.terms {
            let mut ne = vec![0; target.len()];
            for (i, &j) in map.iter().enumerate() {
                ne[j] = e[i];
            }
            out.terms.insert(ne, c.clone());
        }
        Ok(out)
    }

    /// Drop variables that do not occur in any term, mapping into `target`.
    ///
    /// Fails if a dropped variable actually occurs.
    pub fn restrict(&self, target: &Arc<VarTable>) -> Result<Series, SeriesError> {
        let map: Vec<Option<usize>> = self.table.vars().iter().map(|v| target.index(&v.name).ok()).collect();
        let mut caps = vec![NO_CAP; target.len()];
        for (i, j) in map.iter().enumerate() {
            if let Some(j) = j {
                caps[*j] = self.caps[i];
            }
        }
        let mut out = Series::zero(target, &caps);
        for (e, c) in &self.terms {
            let mut ne = vec![0; target.len()];
            for (i, j) in map.iter().enumerate() {
                match j {
                    Some(j) => ne[*j] = e[i],
                    None if e[i] != 0 => {
                        return Err(SeriesError::TableMismatch(format!(
                            "variable `{}` occurs but is absent from the target",
                            self.table.var(i).name
                        )))
                    }
                    None => {}
                }
            }
            out.terms.insert(ne, c.clone());
        }
        Ok(out)
    }

    /// Compose with `bindings` (source variable name to series over `target`).
    ///
    /// Unbound variables map to the same-named target variable. Truncation of a
    /// capped source variable is carried into every target variable in which
    /// its binding has positive order; if there is none the substitution is
    /// rejected as unsound.
    pub fn substitute(&self, bindings: &[(&str, Series)], target: &Arc<VarTable>) -> Result<Series, SeriesError> {
        let n = self.table.len();
        let mut bind: Vec<Series> = Vec::with_capacity(n);
        for v in self.table.vars() {
            match bindings.iter().find(|(name, _)| *name == v.name) {
                Some((_, b)) => {
                    if !(Arc::ptr_eq(b.table(), target) || **b.table() == **target) {
                        return Err(SeriesError::TableMismatch(format!("binding for `{}`", v.name)));
                    }
                    bind.push(b.clone());
                }
                None => bind.push(Series::var(target, &v.name)?),
            }
        }
        for (name, _) in bindings {
            self.table.index(name)?;
        }
        let mut extra = vec![NO_CAP; target.len()];
        for v in 0..n {
            if self.caps[v] == NO_CAP {
                continue;
            }
            let b = &bind[v];
            if b.is_zero() {
                continue;
            }
            if !b.constant_term().is_zero() {
                return Err(SeriesError::Substitution(format!(
                    "binding for capped `{}` has a nonzero constant term",
                    self.table.var(v).name
                )));
            }
            let mut found = false;
            for w in 0..target.len() {
                let ord = b.terms.keys().map(|e| e[w] as i64).min().unwrap_or(0);
                if ord <= 0 {
                    continue;
                }
                let mut bound = (self.caps[v] as i64 + 1) * ord;
                let mut ok = true;
                for (u, bu) in bind.iter().enumerate() {
                    if u == v || bu.is_zero() {
                        continue;
                    }
                    if bu.terms.keys().any(|e| e[w] < 0) {
                        ok = false;
                        break;
                    }
                    let lo = self.low(u);
                    if lo < 0 {
                        if bu.len() != 1 {
                            ok = false;
                            break;
                        }
                        bound += lo * bu.terms.keys().next().unwrap()[w] as i64;
                    }
                }
                if ok {
                    extra[w] = extra[w].min(cap_shift(bound.min((NO_CAP - 1) as i64) as i32, -1));
                    found = true;
                }
            }
            if !found {
                return Err(SeriesError::Substitution(format!(
                    "truncation in `{}` cannot be tracked through its binding",
                    self.table.var(v).name
                )));
            }
        }
        let mut cache: HashMap<(usize, i32), Series> = HashMap::new();
        let mut result = Series::zero(target, &extra);
        for (e, c) in &self.terms {
            let mut term = Series::constant(target, c.clone()).truncate(&extra);
            for v in 0..n {
                if e[v] == 0 {
                    continue;
                }
                let p = match cache.get(&(v, e[v])) {
                    Some(p) => p.clone(),
                    None => {
                        let p = bind[v].pow(e[v] as i64)?;
                        cache.insert((v, e[v]), p.clone());
                        p
                    }
                };
                term = term.checked_mul(&p)?;
            }
            result = result.checked_add(&term)?;
        }
        Ok(result.truncate(&extra))
    }

    /// Set of weighted degrees of the stored terms.
    pub fn weights(&self) -> BTreeSet<i64> {
        self.terms.keys().map(|e| self.table.weight_of(e)).collect()
    }

    /// The weight if the series is homogeneous and nonzero.
    pub fn homogeneous_weight(&self) -> Option<i64> {
        let w = self.weights();
        if w.len() == 1 {
            w.into_iter().next()
        } else {
            None
        }
    }

    /// Exact evaluation at a rational point (values indexed by table position).
    pub fn eval(&self, values: &[Rational]) -> Result<Rational, SeriesError> {
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                if values[v].is_zero() {
                    if k < 0 {
                        return Err(SeriesError::Inversion(format!("pole at {} = 0", self.table.var(v).name)));
                    }
                    t = Rational::zero();
                    break;
                }
                t *= num_traits::pow::Pow::pow(&values[v], k);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Compare with `other` on the region both determine.
    ///
    /// Returns the first monomial where they differ, with both coefficients.
    pub fn first_difference(&self, other: &Series) -> Option<(Monomial, Rational, Rational)> {
        let caps: Vec<i32> = self.caps.iter().zip(&other.caps).map(|(&a, &b)| a.min(b)).collect();
        let a = self.truncate(&caps);
        let b = other.truncate(&caps);
        let keys: BTreeSet<&Monomial> = a.terms.keys().chain(b.terms.keys()).collect();
        for k in keys {
            let x = a.coeff(k);
            let y = b.coeff(k);
            if x != y {
                return Some((k.clone(), x, y));
            }
        }
        None
    }

    /// Equality on the commonly determined region.
    pub fn agrees_with(&self, other: &Series) -> bool {
        self.same_table(other) && self.first_difference(other).is_none()
    }

    /// Human-readable rendering of a monomial.
    pub fn format_monomial(table: &VarTable, e: &[i32]) -> String {
        let parts: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &k)| k != 0)
            .map(|(i, &k)| {
                let n = &table.var(i).name;
                if k == 1 {
                    n.clone()
                } else {
                    format!("{n}^{k}")
                }
            })
            .collect();
        parts.join("*")
    }

    /// JSON value `{vars, caps, terms: [{exp, num, den}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let repr = SeriesRepr {
            vars: self.table.vars().to_vec(),
            caps: self.caps.iter().map(|&c| if c == NO_CAP { None } else { Some(c) }).collect(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermRepr { exp: e.clone(), num: c.numer().to_string(), den: c.denom().to_string() })
                .collect(),
        };
        serde_json::to_value(repr).expect("series serialization")
    }

    /// Inverse of [`Series::to_json`].
    pub fn from_json(v: &serde_json::Value) -> Result<Series, SeriesError> {
        let repr: SeriesRepr = serde_json::from_value(v.clone()).map_err(|e| SeriesError::Parse(e.to_string()))?;
        let table = VarTable::new(repr.vars)?;
        let caps: Vec<i32> = repr.caps.iter().map(|c| c.unwrap_or(NO_CAP)).collect();
        if caps.len() != table.len() {
            return Err(SeriesError::Parse("cap vector length".into()));
        }
        let mut terms = Vec::new();
        for t in repr.terms {
            let c = parse_rational(&format!("{}/{}", t.num, t.den))?;
            terms.push((t.exp, c));
        }
        Series::from_terms(&table, &caps, terms)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Vec<i32>,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    vars: Vec<Var>,
    caps: Vec<Option<i32>>,
    terms: Vec<TermRepr>,
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            let m = Series::format_monomial(&self.table, e);
            let neg = c.is_negative();
            let a = c.abs();
            let body = if m.is_empty() {
                a.to_string()
            } else if a.is_one() {
                m
            } else {
                format!("{a}*{m}")
            };
            if first {
                write!(f, "{}{}", if neg { "-" } else { "" }, body)?;
                first = false;
            } else {
                write!(f, " {} {}", if neg { "-" } else { "+" }, body)?;
            }
        }
        Ok(())
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(&-Rational::one())
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        -&self
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&Series> for &Series {
            type Output = Series;
            fn $m(self, rhs: &Series) -> Series {
                self.$checked(rhs).expect(concat!("series ", stringify!($m)))
            }
        }
        impl $tr<Series> for Series {
            type Output = Series;
            fn $m(self, rhs: Series) -> Series {
                (&self).$checked(&rhs).expect(concat!("series ", stringify!($m)))
            }
        }
        impl $tr<&Series> for Series {
            type Output = Series;
            fn $m(self, rhs: &Series) -> Series {
                (&self).$checked(rhs).expect(concat!("series ", stringify!($m)))
            }
        }
        impl $tr<Series> for &Series {
            type Output = Series;
            fn $m(self, rhs: Series) -> Series {
                self.$checked(&rhs).expect(concat!("series ", stringify!($m)))
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
