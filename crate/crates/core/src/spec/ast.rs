//! Surface syntax of requirement formulas, before desugaring.

use std::fmt;
use std::sync::Arc;

use crate::formula::{self, Formula};
use crate::interval::Interval;

/// A formula as written, with derived operators and patterns kept intact.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(bool),
    Atom(Arc<str>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Xor(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Next(Interval, Box<Expr>),
    Until(Interval, Box<Expr>, Box<Expr>),
    Finally(Interval, Box<Expr>),
    Globally(Interval, Box<Expr>),
    TimedTrigger(Interval, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn atom(name: impl Into<Arc<str>>) -> Self {
        Expr::Atom(name.into())
    }

    /// Desugars into primitives. The result is not canonicalized.
    pub fn to_formula(&self) -> Formula {
        match self {
            Expr::Const(b) => Formula::constant(*b),
            Expr::Atom(name) => Formula::Atom(name.clone()),
            Expr::Not(e) => formula::not(e.to_formula()),
            Expr::And(es) => Formula::and(es.iter().map(Expr::to_formula)),
            Expr::Xor(es) => Formula::xor(es.iter().map(Expr::to_formula)),
            Expr::Or(es) => formula::or(es.iter().map(Expr::to_formula)),
            Expr::Implies(a, b) => formula::implies(a.to_formula(), b.to_formula()),
            Expr::Next(i, e) => Formula::next(*i, e.to_formula()),
            Expr::Until(i, a, b) => Formula::until(*i, a.to_formula(), b.to_formula()),
            Expr::Finally(i, e) => formula::finally(*i, e.to_formula()),
            Expr::Globally(i, e) => formula::globally(*i, e.to_formula()),
            Expr::TimedTrigger(i, a, b) => {
                formula::timed_trigger(*i, a.to_formula(), b.to_formula())
            }
        }
    }

    /// Operator nesting depth; leaves have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Atom(_) => 0,
            Expr::Not(e) | Expr::Next(_, e) | Expr::Finally(_, e) | Expr::Globally(_, e) => {
                1 + e.depth()
            }
            Expr::And(es) | Expr::Xor(es) | Expr::Or(es) => {
                1 + es.iter().map(Expr::depth).max().unwrap_or(0)
            }
            Expr::Implies(a, b) | Expr::Until(_, a, b) | Expr::TimedTrigger(_, a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    pub fn is_temporal_free(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Atom(_) => true,
            Expr::Not(e) => e.is_temporal_free(),
            Expr::And(es) | Expr::Xor(es) | Expr::Or(es) => es.iter().all(Expr::is_temporal_free),
            Expr::Implies(a, b) => a.is_temporal_free() && b.is_temporal_free(),
            _ => false,
        }
    }
}

fn interval_suffix(i: &Interval) -> String {
    if *i == Interval::UNBOUNDED {
        String::new()
    } else {
        i.to_string()
    }
}

impl fmt::Display for Expr {
    /// Prints in the requirement-file syntax, parenthesizing every compound.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, es: &[Expr], sep: &str, empty: &str| {
            if es.is_empty() {
                return f.write_str(empty);
            }
            f.write_str("(")?;
            for (k, e) in es.iter().enumerate() {
                if k > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{e}")?;
            }
            f.write_str(")")
        };
        match self {
            Expr::Const(b) => write!(f, "{b}"),
            Expr::Atom(name) => f.write_str(name),
            Expr::Not(e) => write!(f, "!{e}"),
            Expr::And(es) => join(f, es, " & ", "true"),
            Expr::Xor(es) => join(f, es, " xor ", "false"),
            Expr::Or(es) => join(f, es, " | ", "false"),
            Expr::Implies(a, b) => write!(f, "({a} -> {b})"),
            Expr::Next(i, e) => write!(f, "X{} {e}", interval_suffix(i)),
            Expr::Until(i, a, b) => write!(f, "({a} U{} {b})", interval_suffix(i)),
            Expr::Finally(i, e) => write!(f, "F{} {e}", interval_suffix(i)),
            Expr::Globally(i, e) => write!(f, "G{} {e}", interval_suffix(i)),
            Expr::TimedTrigger(i, a, b) => {
                write!(f, "timedTrigger{}({a}, {b})", interval_suffix(i))
            }
        }
    }
}
