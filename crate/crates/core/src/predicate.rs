//! Predicates binding proposition names to conditions on state variables.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rewrite::AtomValues;
use crate::trace::{TimedState, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredicateError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` is {found}, but the predicate compares it as {expected}")]
    TypeMismatch {
        variable: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("range lower bound {lo} exceeds upper bound {hi}")]
    InvertedRange { lo: f64, hi: f64 },
    #[error("proposition `{0}` has no bound predicate")]
    Unbound(String),
}

/// Inclusive or exclusive bounds of an `in` predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl Range {
    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Result<Self, PredicateError> {
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(PredicateError::InvertedRange { lo, hi });
        }
        Ok(Range {
            lo,
            lo_closed,
            hi,
            hi_closed,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    Lt(f64),
    Le(f64),
    Gt(f64),
    Ge(f64),
    Eq(f64),
    Ne(f64),
    In(Range),
    Is(bool),
    IsNot(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub variable: String,
    pub relation: Relation,
}

impl Predicate {
    pub fn new(variable: impl Into<String>, relation: Relation) -> Self {
        Predicate {
            variable: variable.into(),
            relation,
        }
    }

    pub fn eval(&self, state: &TimedState) -> Result<bool, PredicateError> {
        let value = state
            .get(&self.variable)
            .ok_or_else(|| PredicateError::UnknownVariable(self.variable.clone()))?;
        self.eval_value(value)
    }

    pub fn eval_value(&self, value: Value) -> Result<bool, PredicateError> {
        let mismatch = |expected, found| PredicateError::TypeMismatch {
            variable: self.variable.clone(),
            expected,
            found,
        };
        match (self.relation, value) {
            (Relation::Is(b), Value::Bool(v)) => Ok(v == b),
            (Relation::IsNot(b), Value::Bool(v)) => Ok(v != b),
            (Relation::Is(_) | Relation::IsNot(_), Value::Num(_)) => {
                Err(mismatch("boolean", "number"))
            }
            (_, Value::Bool(_)) => Err(mismatch("number", "boolean")),
            (Relation::Lt(c), Value::Num(x)) => Ok(x < c),
            (Relation::Le(c), Value::Num(x)) => Ok(x <= c),
            (Relation::Gt(c), Value::Num(x)) => Ok(x > c),
            (Relation::Ge(c), Value::Num(x)) => Ok(x >= c),
            (Relation::Eq(c), Value::Num(x)) => Ok(x == c),
            (Relation::Ne(c), Value::Num(x)) => Ok(x != c),
            (Relation::In(r), Value::Num(x)) => Ok(r.contains(x)),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = &self.variable;
        match self.relation {
            Relation::Lt(c) => write!(f, "{v} < {c}"),
            Relation::Le(c) => write!(f, "{v} <= {c}"),
            Relation::Gt(c) => write!(f, "{v} > {c}"),
            Relation::Ge(c) => write!(f, "{v} >= {c}"),
            Relation::Eq(c) => write!(f, "{v} == {c}"),
            Relation::Ne(c) => write!(f, "{v} != {c}"),
            Relation::Is(b) => write!(f, "{v} = {b}"),
            Relation::IsNot(b) => write!(f, "{v} != {b}"),
            Relation::In(r) => {
                let open = if r.lo_closed { '[' } else { '(' };
                let close = if r.hi_closed { ']' } else { ')' };
                let hi = if r.hi.is_infinite() {
                    "inf".to_string()
                } else {
                    r.hi.to_string()
                };
                write!(f, "{v} in {open}{}, {hi}{close}", r.lo)
            }
        }
    }
}

/// Proposition name to predicate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<Arc<str>, Predicate>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds each name to the boolean variable of the same name being true.
    pub fn boolean_identity<'a, I: IntoIterator<Item = &'a str>>(names: I) -> Self {
        Bindings(
            names
                .into_iter()
                .map(|n| (Arc::from(n), Predicate::new(n, Relation::Is(true))))
                .collect(),
        )
    }

    pub fn insert(&mut self, name: impl Into<Arc<str>>, predicate: Predicate) -> Option<Predicate> {
        self.0.insert(name.into(), predicate)
    }

    pub fn get(&self, name: &str) -> Option<&Predicate> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, &Predicate)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keeps only the named propositions.
    pub fn restrict<'a, I: IntoIterator<Item = &'a Arc<str>>>(&self, names: I) -> Bindings {
        Bindings(
            names
                .into_iter()
                .filter_map(|n| self.0.get_key_value(n).map(|(k, p)| (k.clone(), p.clone())))
                .collect(),
        )
    }

    pub fn eval(&self, name: &str, state: &TimedState) -> Result<bool, PredicateError> {
        self.get(name)
            .ok_or_else(|| PredicateError::Unbound(name.to_string()))?
            .eval(state)
    }

    /// Evaluates every bound proposition on one state.
    pub fn valuate(&self, state: &TimedState) -> Result<AtomValues, PredicateError> {
        let values = self
            .0
            .iter()
            .map(|(name, p)| p.eval(state).map(|v| (name.clone(), v)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AtomValues::new(values))
    }
}
