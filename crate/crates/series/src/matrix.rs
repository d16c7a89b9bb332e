use std::sync::Arc;

use num_traits::{One, Zero};

use crate::{QMatrix, Rational, Series, SeriesError, VarTable, NO_CAP};

/// Dense matrix whose entries are series over one variable table.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    table: Arc<VarTable>,
    data: Vec<Series>,
}

impl SeriesMatrix {
    pub fn zeros(table: &Arc<VarTable>, rows: usize, cols: usize) -> Self {
        SeriesMatrix { rows, cols, table: table.clone(), data: vec![Series::zero_exact(table); rows * cols] }
    }

    pub fn identity(table: &Arc<VarTable>, n: usize) -> Self {
        let mut m = Self::zeros(table, n, n);
        for i in 0..n {
            m.set(i, i, Series::one(table));
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Series>(
        table: &Arc<VarTable>,
        rows: usize,
        cols: usize,
        mut f: F,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let s = f(i, j);
                assert!(s.table() == table || **s.table() == **table, "entry table mismatch");
                data.push(s);
            }
        }
        SeriesMatrix { rows, cols, table: table.clone(), data }
    }

    /// Constant matrix from rationals.
    pub fn from_q(table: &Arc<VarTable>, m: &QMatrix) -> Self {
        Self::from_fn(table, m.rows(), m.cols(), |i, j| Series::constant(table, m.get(i, j).clone()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: Series) {
        self.data[i * self.cols + j] = s;
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Series)> {
        self.data.iter().enumerate().map(move |(k, s)| (k / self.cols, k % self.cols, s))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|s| s.is_zero())
    }

    pub fn map<F: Fn(&Series) -> Series>(&self, f: F) -> Self {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            table: self.table.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map<F: Fn(&Series) -> Result<Series, SeriesError>>(&self, f: F) -> Result<Self, SeriesError> {
        let data = self.data.iter().map(f).collect::<Result<Vec<_>, _>>()?;
        let table = data.first().map_or(self.table.clone(), |s| s.table().clone());
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, table, data })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(&self.table, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn truncate(&self, caps: &[i32]) -> Self {
        self.map(|s| s.truncate(caps))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|s| s.scale(c))
    }

    pub fn scale_series(&self, c: &Series) -> Self {
        self.map(|s| s * c)
    }

    pub fn log_deriv(&self, name: &str) -> Result<Self, SeriesError> {
        self.try_map(|s| s.log_deriv(name))
    }

    fn check_shape(&self, o: &Self, what: &str) -> Result<(), SeriesError> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return Err(SeriesError::Shape(format!("{what}: {}x{} vs {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check_shape(o, "add")?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a.checked_add(b)).collect::<Result<_, _>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, table: self.table.clone(), data })
    }

    pub fn sub(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check_shape(o, "sub")?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a.checked_sub(b)).collect::<Result<_, _>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, table: self.table.clone(), data })
    }

    pub fn mul(&self, o: &Self) -> Result<Self, SeriesError> {
        if self.cols != o.rows {
            return Err(SeriesError::Shape(format!("mul: {}x{} by {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut data = Vec::with_capacity(self.rows * o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc: Option<Series> = None;
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = o.get(k, j);
                    let p = a.checked_mul(b)?;
                    acc = Some(match acc {
                        None => p,
                        Some(s) => s.checked_add(&p)?,
                    });
                }
                data.push(acc.unwrap_or_else(|| Series::zero_exact(&self.table)));
            }
        }
        Ok(SeriesMatrix { rows: self.rows, cols: o.cols, table: self.table.clone(), data })
    }

    /// Commutator `self*o - o*self`.
    pub fn commutator(&self, o: &Self) -> Result<Self, SeriesError> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    /// Sub-matrix with rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(&self.table, r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    /// Overwrite the block whose top-left corner is `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    /// Entrywise constant terms.
    pub fn constant_part(&self) -> QMatrix {
        QMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).constant_term())
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, values: &[Rational]) -> Result<QMatrix, SeriesError> {
        let mut m = QMatrix::zeros(self.rows, self.cols);
        for (i, j, s) in self.entries() {
            m.set(i, j, s.eval(values)?);
        }
        Ok(m)
    }

    /// Minimum cap over all entries, per variable.
    pub fn min_caps(&self) -> Vec<i32> {
        let mut caps = vec![NO_CAP; self.table.len()];
        for s in &self.data {
            for (c, &x) in caps.iter_mut().zip(s.caps()) {
                *c = (*c).min(x);
            }
        }
        caps
    }

    /// Inverse of a matrix whose constant part is invertible and whose
    /// remaining terms are nilpotent under the caps.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        if self.rows != self.cols {
            return Err(SeriesError::Shape("inverse of non-square matrix".into()));
        }
        let caps = self.min_caps();
        let m0 = self.constant_part();
        let m0inv = m0.inverse()?;
        let zero = vec![0; self.table.len()];
        let n_part = self.map(|s| s.filter(|e| *e != zero));
        for s in &n_part.data {
            for (e, _) in s.terms() {
                let ok = e.iter().all(|&x| x >= 0) && e.iter().zip(&caps).any(|(&x, &c)| x > 0 && c != NO_CAP);
                if !ok {
                    return Err(SeriesError::Inversion("non-constant part is not nilpotent under the caps".into()));
                }
            }
        }
        let m0inv_s = Self::from_q(&self.table, &m0inv).truncate(&caps);
        let step = m0inv_s.mul(&n_part)?.scale(&-Rational::one());
        let mut term = m0inv_s.clone();
        let mut result = m0inv_s.clone();
        for _ in 0..100_000 {
            term = step.mul(&term)?;
            if term.is_zero() {
                return Ok(result);
            }
            result = result.add(&term)?;
        }
        Err(SeriesError::Inversion("Neumann series did not terminate".into()))
    }

    pub fn substitute(&self, bindings: &[(&str, Series)], target: &Arc<VarTable>) -> Result<Self, SeriesError> {
        let data = self.data.iter().map(|s| s.substitute(bindings, target)).collect::<Result<Vec<_>, _>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, table: target.clone(), data })
    }

    pub fn embed(&self, target: &Arc<VarTable>) -> Result<Self, SeriesError> {
        let data = self.data.iter().map(|s| s.embed(target)).collect::<Result<Vec<_>, _>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, table: target.clone(), data })
    }

    /// First entry and monomial where the two matrices disagree on their
    /// common region.
    pub fn first_difference(&self, o: &Self) -> Option<(usize, usize, Vec<i32>, Rational, Rational)> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return Some((usize::MAX, usize::MAX, vec![], Rational::zero(), Rational::zero()));
        }
        for (k, (a, b)) in self.data.iter().zip(&o.data).enumerate() {
            if let Some((e, x, y)) = a.first_difference(b) {
                return Some((k / self.cols, k % self.cols, e, x, y));
            }
        }
        None
    }

    pub fn agrees_with(&self, o: &Self) -> bool {
        self.first_difference(o).is_none()
    }

    /// Whether every off-diagonal entry of the given block partition vanishes.
    pub fn is_block_diagonal(&self, sizes: &[usize]) -> bool {
        let mut block_of = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            block_of.extend(std::iter::repeat_n(b, s));
        }
        self.entries().all(|(i, j, s)| block_of[i] == block_of[j] || s.is_zero())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            (0..self.rows)
                .map(|i| serde_json::Value::Array((0..self.cols).map(|j| self.get(i, j).to_json()).collect()))
                .collect(),
        )
    }

    /// Aligned text grid with `.` for zero entries.
    pub fn to_grid(&self) -> String {
        let cells: Vec<Vec<String>> = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        let s = self.get(i, j);
                        if s.is_zero() {
                            ".".to_string()
                        } else {
                            s.to_string()
                        }
                    })
                    .collect()
            })
            .collect();
        let widths: Vec<usize> =
            (0..self.cols).map(|j| cells.iter().map(|r| r[j].chars().count()).max().unwrap_or(1)).collect();
        let mut out = String::new();
        for r in &cells {
            let line: Vec<String> = r.iter().zip(&widths).map(|(c, &w)| format!("{c:>w$}")).collect();
            out.push_str(&format!("[ {} ]\n", line.join("  ")));
        }
        out
    }
}

/// Convenience for building a square matrix from sparse `(row, col, entry)` data.
pub fn sparse(table: &Arc<VarTable>, n: usize, entries: &[(usize, usize, Series)]) -> SeriesMatrix {
    let mut m = SeriesMatrix::zeros(table, n, n);
    for (i, j, s) in entries {
        let cur = m.get(*i, *j).clone();
        m.set(*i, *j, &cur + s);
    }
    m
}

impl SeriesMatrix {
    /// Build from sparse entries (0-based indices).
    pub fn from_sparse(table: &Arc<VarTable>, n: usize, entries: &[(usize, usize, Series)]) -> Self {
        sparse(table, n, entries)
    }

    /// Whether every entry is zero or one (used for identity tests).
    pub fn is_identity(&self) -> bool {
        self.entries().all(|(i, j, s)| if i == j { s.len() == 1 && s.constant_term().is_one() } else { s.is_zero() })
    }
}

impl SeriesMatrix {
    /// Characteristic polynomial `det(t I - A)` over the series ring,
    /// coefficients from `t^0` up.
    pub fn charpoly(&self) -> Result<Vec<Series>, SeriesError> {
        if self.rows != self.cols {
            return Err(SeriesError::Shape("charpoly of non-square matrix".into()));
        }
        let n = self.rows;
        let mut c = vec![Series::zero_exact(&self.table); n + 1];
        c[n] = Series::one(&self.table);
        let mut m = Self::zeros(&self.table, n, n);
        for k in 1..=n {
            let id = Self::identity(&self.table, n).scale_series(&c[n - k + 1]);
            m = self.mul(&m)?.add(&id)?;
            let am = self.mul(&m)?;
            let mut tr = Series::zero_exact(&self.table);
            for i in 0..n {
                tr = tr.checked_add(am.get(i, i))?;
            }
            c[n - k] = tr.scale(&-(Rational::one() / Rational::from_integer((k as i64).into())));
        }
        Ok(c)
    }
}
