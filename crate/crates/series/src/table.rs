use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::SeriesError;

/// A named variable with an integer grading weight.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub weight: i64,
    /// Whether negative exponents are permitted.
    pub laurent: bool,
}

impl Var {
    pub fn new(name: &str, weight: i64, laurent: bool) -> Self {
        Var { name: name.to_string(), weight, laurent }
    }
}

/// Ordered list of variables shared by a family of series.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarTable {
    vars: Vec<Var>,
}

impl VarTable {
    /// Build a table; names must be unique.
    pub fn new(vars: Vec<Var>) -> Result<Arc<Self>, SeriesError> {
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(SeriesError::DuplicateVariable(v.name.clone()));
            }
        }
        Ok(Arc::new(VarTable { vars }))
    }

    /// Shorthand: `(name, weight, laurent)` triples.
    pub fn of(spec: &[(&str, i64, bool)]) -> Arc<Self> {
        Self::new(spec.iter().map(|&(n, w, l)| Var::new(n, w, l)).collect())
            .expect("duplicate variable in table literal")
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn var(&self, i: usize) -> &Var {
        &self.vars[i]
    }

    pub fn index(&self, name: &str) -> Result<usize, SeriesError> {
        self.vars.iter().position(|v| v.name == name).ok_or_else(|| SeriesError::UnknownVariable(name.to_string()))
    }

    /// Weighted degree of an exponent vector.
    pub fn weight_of(&self, exp: &[i32]) -> i64 {
        exp.iter().zip(&self.vars).map(|(&e, v)| e as i64 * v.weight).sum()
    }
}
