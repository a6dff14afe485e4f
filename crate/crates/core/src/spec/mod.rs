//! Requirement specification files.
//!
//! A file is a sequence of `prop` definitions, which bind proposition names
//! to conditions on trace variables, and `req` definitions, which name a
//! formula over those propositions:
//!
//! ```text
//! # pressure band of the first compartment
//! prop p_ok := pressure in [27.9, 28.1];
//! prop dp_low := steam_dp < 0.1;
//! prop closed := steam_valve_closed = true;
//! req r1 := G p_ok;
//! req r2 := timedTrigger[0,60](dp_low, closed);
//! ```
//!
//! Formula operators, tightest first: `!`, `X`, `F`, `G` (prefix), `U`, `&`,
//! `xor`, `|`, `->`. Binary operators associate to the right. Temporal
//! operators take an optional interval such as `[0,60]`, `(30,60]` or
//! `[5,inf)`; without one they range over `[0,inf)`.

pub mod ast;
mod lexer;
mod parser;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{self, Formula};
use crate::interval::{Interval, IntervalError};
use crate::predicate::{Bindings, PredicateError};
use crate::rewrite::canonicalize;
use ast::Expr;
use parser::{Item, Parser};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("proposition `{name}` is not defined by any `prop`")]
    Unbound { name: String },
    #[error("`{name}` is defined twice")]
    Duplicate { name: String },
    #[error("malformed interval: {0}")]
    Interval(IntervalError),
    #[error("malformed range: {0}")]
    Range(PredicateError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct SpecError {
    pub line: usize,
    pub column: usize,
    pub kind: SpecErrorKind,
}

impl SpecError {
    fn new(line: usize, column: usize, kind: SpecErrorKind) -> Self {
        SpecError { line, column, kind }
    }

    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self::new(line, column, SpecErrorKind::Syntax(message.into()))
    }

    pub(crate) fn interval(line: usize, column: usize, e: IntervalError) -> Self {
        Self::new(line, column, SpecErrorKind::Interval(e))
    }

    pub(crate) fn range(line: usize, column: usize, e: PredicateError) -> Self {
        Self::new(line, column, SpecErrorKind::Range(e))
    }
}

/// Shape of a requirement, recognized from its surface formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementClass {
    /// `G p`
    Limit,
    /// `timedTrigger[0,t](p1, p2)`
    TimedOrder,
    /// `!timedTrigger[0,t1](p1, p2) & timedTrigger(t1,t2](p1, p2)`
    DelayedOrder,
    General,
}

impl RequirementClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RequirementClass::Limit => "limit",
            RequirementClass::TimedOrder => "timed_order",
            RequirementClass::DelayedOrder => "delayed_order",
            RequirementClass::General => "general",
        }
    }
}

impl fmt::Display for RequirementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Requirement {
    pub name: String,
    /// Canonical, primitives only.
    pub formula: Formula,
    pub expr: Expr,
    pub source_text: String,
    pub class: RequirementClass,
    /// Predicates of the propositions the formula mentions.
    pub bindings: Bindings,
}

impl Requirement {
    /// Builds a requirement from a surface formula. Every atom must be bound.
    pub fn new(name: impl Into<String>, expr: Expr, bindings: &Bindings) -> Result<Self, String> {
        let formula = canonicalize(&expr.to_formula());
        let raw_atoms = expr.to_formula().atoms();
        if let Some(unbound) = raw_atoms.iter().find(|a| !bindings.contains(a)) {
            return Err(unbound.to_string());
        }
        Ok(Requirement {
            name: name.into(),
            class: classify(&expr),
            source_text: expr.to_string(),
            bindings: bindings.restrict(&raw_atoms),
            formula,
            expr,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RequirementSet {
    pub predicates: Bindings,
    pub requirements: Vec<Arc<Requirement>>,
}

impl RequirementSet {
    pub fn get(&self, name: &str) -> Option<&Arc<Requirement>> {
        self.requirements.iter().find(|r| r.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.requirements.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.requirements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requirements.is_empty()
    }
}

/// Parses a whole specification file.
pub fn parse_spec(text: &str) -> Result<RequirementSet, SpecError> {
    let chars: Vec<char> = text.chars().collect();
    let tokens = lexer::tokenize(text)?;
    let items = Parser::new(tokens, &chars).items()?;

    let mut seen = HashSet::new();
    let mut predicates = Bindings::new();
    for item in &items {
        let (name, at) = match item {
            Item::Prop { name, at, .. } | Item::Req { name, at, .. } => (name, at),
        };
        if !seen.insert(name.clone()) {
            return Err(SpecError::new(
                at.0,
                at.1,
                SpecErrorKind::Duplicate { name: name.clone() },
            ));
        }
        if let Item::Prop { predicate, .. } = item {
            predicates.insert(name.as_str(), predicate.clone());
        }
    }

    let mut requirements = Vec::new();
    for item in items {
        if let Item::Req {
            name,
            expr,
            source,
            at,
        } = item
        {
            let mut req = Requirement::new(name, expr, &predicates).map_err(|atom| {
                SpecError::new(at.0, at.1, SpecErrorKind::Unbound { name: atom })
            })?;
            req.source_text = source;
            requirements.push(Arc::new(req));
        }
    }
    Ok(RequirementSet {
        predicates,
        requirements,
    })
}

/// Parses a surface formula without desugaring it.
pub fn parse_expr(text: &str) -> Result<Expr, SpecError> {
    let chars: Vec<char> = text.chars().collect();
    let mut parser = Parser::new(lexer::tokenize(text)?, &chars);
    let expr = parser.formula()?;
    parser.expect_end()?;
    Ok(expr)
}

/// Parses a formula and desugars it into primitives.
pub fn parse_formula(text: &str) -> Result<Formula, SpecError> {
    parse_expr(text).map(|e| e.to_formula())
}

fn is_atom(e: &Expr) -> bool {
    matches!(e, Expr::Atom(_))
}

fn closed_from_zero(i: &Interval) -> bool {
    i.lower() == 0.0 && i.lower_closed() && i.is_bounded() && i.upper_closed()
}

fn classify(e: &Expr) -> RequirementClass {
    match e {
        Expr::Globally(i, p) if *i == Interval::UNBOUNDED && is_atom(p) => RequirementClass::Limit,
        Expr::TimedTrigger(i, a, b) if closed_from_zero(i) && is_atom(a) && is_atom(b) => {
            RequirementClass::TimedOrder
        }
        Expr::And(parts) if parts.len() == 2 => {
            let delayed = |early: &Expr, late: &Expr| match (early, late) {
                (Expr::Not(inner), Expr::TimedTrigger(late_i, a2, b2)) => match &**inner {
                    Expr::TimedTrigger(early_i, a1, b1) => {
                        closed_from_zero(early_i)
                            && is_atom(a1)
                            && is_atom(b1)
                            && a1 == a2
                            && b1 == b2
                            && late_i.lower() == early_i.upper()
                            && late_i.is_bounded()
                            && late_i.upper() > late_i.lower()
                    }
                    _ => false,
                },
                _ => false,
            };
            if delayed(&parts[0], &parts[1]) || delayed(&parts[1], &parts[0]) {
                RequirementClass::DelayedOrder
            } else {
                RequirementClass::General
            }
        }
        _ => RequirementClass::General,
    }
}

/// The canonical formula a requirement of the given class must equal,
/// reconstructed from its surface parts; `None` for `General`.
pub fn class_template(class: RequirementClass, e: &Expr) -> Option<Formula> {
    let atom = |e: &Expr| e.to_formula();
    let template = match (class, e) {
        (RequirementClass::Limit, Expr::Globally(_, p)) => {
            formula::globally(Interval::UNBOUNDED, atom(p))
        }
        (RequirementClass::TimedOrder, Expr::TimedTrigger(i, a, b)) => {
            formula::timed_trigger(*i, atom(a), atom(b))
        }
        (RequirementClass::DelayedOrder, Expr::And(parts)) => {
            let (early, late) = match (&parts[0], &parts[1]) {
                (Expr::Not(early), late) if matches!(**early, Expr::TimedTrigger(..)) => {
                    (&**early, late)
                }
                (late, Expr::Not(early)) => (&**early, late),
                _ => return None,
            };
            match (early, late) {
                (Expr::TimedTrigger(i1, a, b), Expr::TimedTrigger(i2, ..)) => Formula::and([
                    formula::not(formula::timed_trigger(*i1, atom(a), atom(b))),
                    formula::timed_trigger(*i2, atom(a), atom(b)),
                ]),
                _ => return None,
            }
        }
        _ => return None,
    };
    Some(canonicalize(&template))
}
