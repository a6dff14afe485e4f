//! Brute-force evaluation of the satisfaction relation `(ρ, i) ⊨ φ`, and
//! seeded generators of random formulas and traces.
//!
//! The evaluator follows the satisfaction clauses directly by enumerating
//! trace positions. It shares no code with the rewrite engine and serves as
//! the reference the engine is checked against. Indices are 1-based.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::Formula;
use crate::interval::Interval;
use crate::predicate::{Bindings, PredicateError};
use crate::spec::ast::Expr;
use crate::trace::{Schema, TimedState, TimedStateSequence, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("index {index} is out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Predicate(#[from] PredicateError),
}

struct Oracle<'a> {
    trace: &'a TimedStateSequence,
    bindings: &'a Bindings,
}

impl Oracle<'_> {
    fn n(&self) -> usize {
        self.trace.len()
    }

    fn time(&self, k: usize) -> f64 {
        self.trace.events()[k].tau
    }

    fn atom(&self, k: usize, name: &str) -> Result<bool, OracleError> {
        Ok(self.bindings.eval(name, &self.trace.events()[k])?)
    }

    /// Some `j ≥ i` in the window satisfies `right`, with `left` holding on
    /// every position from `i` up to (excluding) `j`.
    fn until(
        &self,
        i: usize,
        window: &Interval,
        left: impl Fn(usize) -> Result<bool, OracleError>,
        right: impl Fn(usize) -> Result<bool, OracleError>,
    ) -> Result<bool, OracleError> {
        for j in i..self.n() {
            let offset = self.time(j) - self.time(i);
            if offset > window.upper() {
                break;
            }
            if window.contains(offset) && right(j)? {
                return Ok(true);
            }
            if !left(j)? {
                break;
            }
        }
        Ok(false)
    }

    fn next(&self, i: usize, window: &Interval) -> bool {
        i + 1 < self.n() && window.contains(self.time(i + 1) - self.time(i))
    }

    fn holds(&self, i: usize, f: &Formula) -> Result<bool, OracleError> {
        match f {
            Formula::Atom(name) => self.atom(i, name),
            Formula::And(children) => {
                for c in children {
                    if !self.holds(i, c)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Xor(children) => {
                let mut odd = false;
                for c in children {
                    odd ^= self.holds(i, c)?;
                }
                Ok(odd)
            }
            Formula::Next(window, body) => Ok(self.next(i, window) && self.holds(i + 1, body)?),
            Formula::Until(window, left, right) => {
                self.until(i, window, |k| self.holds(k, left), |j| self.holds(j, right))
            }
        }
    }

    /// Direct clauses for the surface operators, without desugaring.
    fn holds_expr(&self, i: usize, e: &Expr) -> Result<bool, OracleError> {
        match e {
            Expr::Const(b) => Ok(*b),
            Expr::Atom(name) => self.atom(i, name),
            Expr::Not(e) => Ok(!self.holds_expr(i, e)?),
            Expr::And(es) => {
                for e in es {
                    if !self.holds_expr(i, e)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Expr::Xor(es) => {
                let mut odd = false;
                for e in es {
                    odd ^= self.holds_expr(i, e)?;
                }
                Ok(odd)
            }
            Expr::Or(es) => {
                for e in es {
                    if self.holds_expr(i, e)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Expr::Implies(a, b) => Ok(!(self.holds_expr(i, a)? && !self.holds_expr(i, b)?)),
            Expr::Next(window, e) => Ok(self.next(i, window) && self.holds_expr(i + 1, e)?),
            Expr::Until(window, a, b) => self.until(
                i,
                window,
                |k| self.holds_expr(k, a),
                |j| self.holds_expr(j, b),
            ),
            Expr::Finally(window, e) => {
                for j in i..self.n() {
                    if window.contains(self.time(j) - self.time(i)) && self.holds_expr(j, e)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Expr::Globally(window, e) => {
                for j in i..self.n() {
                    if window.contains(self.time(j) - self.time(i)) && !self.holds_expr(j, e)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Expr::TimedTrigger(window, trigger, response) => {
                // Every rise of the trigger (false at k, true at k+1) must be
                // answered within the window measured from k+1.
                for k in i..self.n().saturating_sub(1) {
                    let rises = !self.holds_expr(k, trigger)? && self.holds_expr(k + 1, trigger)?;
                    if !rises {
                        continue;
                    }
                    let mut answered = false;
                    for j in k + 1..self.n() {
                        if window.contains(self.time(j) - self.time(k + 1))
                            && self.holds_expr(j, response)?
                        {
                            answered = true;
                            break;
                        }
                    }
                    if !answered {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

fn check_index(trace: &TimedStateSequence, i: usize) -> Result<usize, OracleError> {
    if i == 0 || i > trace.len() {
        return Err(OracleError::IndexOutOfRange {
            index: i,
            len: trace.len(),
        });
    }
    Ok(i - 1)
}

/// Decides `(trace, i) ⊨ f` for the 1-based index `i`.
pub fn evaluate(
    trace: &TimedStateSequence,
    i: usize,
    f: &Formula,
    bindings: &Bindings,
) -> Result<bool, OracleError> {
    let k = check_index(trace, i)?;
    Oracle { trace, bindings }.holds(k, f)
}

/// Like [`evaluate`] but applies the satisfaction clauses of the derived
/// operators directly instead of desugaring them.
pub fn evaluate_expr(
    trace: &TimedStateSequence,
    i: usize,
    e: &Expr,
    bindings: &Bindings,
) -> Result<bool, OracleError> {
    let k = check_index(trace, i)?;
    Oracle { trace, bindings }.holds_expr(k, e)
}

#[derive(Clone, Copy)]
enum Shape {
    Atom,
    And,
    Xor,
    Not,
    Or,
    Implies,
    Next,
    Until,
    Finally,
    Globally,
}

const ALL_SHAPES: [Shape; 10] = [
    Shape::Atom,
    Shape::And,
    Shape::Xor,
    Shape::Not,
    Shape::Or,
    Shape::Implies,
    Shape::Next,
    Shape::Until,
    Shape::Finally,
    Shape::Globally,
];

const PROPOSITIONAL_SHAPES: [Shape; 6] = [
    Shape::Atom,
    Shape::And,
    Shape::Xor,
    Shape::Not,
    Shape::Or,
    Shape::Implies,
];

/// Seeded generator of random surface formulas.
pub struct FormulaGen<'a> {
    rng: ChaCha8Rng,
    atoms: &'a [&'a str],
    shapes: &'static [Shape],
}

impl<'a> FormulaGen<'a> {
    /// Draws over all operators, temporal ones included.
    pub fn new(seed: u64, atoms: &'a [&'a str]) -> Self {
        assert!(!atoms.is_empty(), "need at least one atom name");
        FormulaGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            atoms,
            shapes: &ALL_SHAPES,
        }
    }

    /// Draws over `atom`, `&`, `xor`, `!`, `|` and `->` only.
    pub fn propositional(seed: u64, atoms: &'a [&'a str]) -> Self {
        FormulaGen {
            shapes: &PROPOSITIONAL_SHAPES,
            ..Self::new(seed, atoms)
        }
    }

    fn leaf(&mut self) -> Expr {
        // One draw in eight is a constant.
        if self.rng.gen_ratio(1, 8) {
            Expr::Const(self.rng.gen())
        } else {
            Expr::atom(*self.atoms.choose(&mut self.rng).unwrap())
        }
    }

    fn interval(&mut self) -> Interval {
        let lower = self.rng.gen_range(0..4) as f64;
        let upper = lower + self.rng.gen_range(1..4) as f64;
        match self.rng.gen_range(0..4) {
            0 => Ok(Interval::UNBOUNDED),
            1 => Interval::closed(0.0, upper),
            2 => Interval::left_open(lower, upper),
            _ => Interval::right_open(lower, upper),
        }
        .expect("generated bounds are ordered")
    }

    fn operands(&mut self, depth: usize) -> Vec<Expr> {
        let n = self.rng.gen_range(1..=3);
        (0..n).map(|_| self.expr(depth)).collect()
    }

    /// A random formula of operator depth at most `max_depth`.
    pub fn expr(&mut self, max_depth: usize) -> Expr {
        if max_depth == 0 {
            return self.leaf();
        }
        let d = max_depth - 1;
        let boxed = |g: &mut Self| Box::new(g.expr(d));
        match *self.shapes.choose(&mut self.rng).unwrap() {
            Shape::Atom => self.leaf(),
            Shape::And => Expr::And(self.operands(d)),
            Shape::Xor => Expr::Xor(self.operands(d)),
            Shape::Or => Expr::Or(self.operands(d)),
            Shape::Not => Expr::Not(boxed(self)),
            Shape::Implies => Expr::Implies(boxed(self), boxed(self)),
            Shape::Next => Expr::Next(self.interval(), boxed(self)),
            Shape::Until => Expr::Until(self.interval(), boxed(self), boxed(self)),
            Shape::Finally => Expr::Finally(self.interval(), boxed(self)),
            Shape::Globally => Expr::Globally(self.interval(), boxed(self)),
        }
    }
}

/// A random primitive formula; deterministic in `seed`.
pub fn random_formula(seed: u64, max_depth: usize, atoms: &[&str]) -> Formula {
    FormulaGen::new(seed, atoms).expr(max_depth).to_formula()
}

/// Timestamp increments drawn by [`random_trace`]. Zero gaps and the dyadic
/// steps hit interval bounds exactly.
pub const TIME_STEPS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];

/// A random trace over boolean variables named after `atoms`, starting at
/// time 0; deterministic in `seed`.
pub fn random_trace(seed: u64, length: usize, atoms: &[&str]) -> TimedStateSequence {
    assert!(length >= 1, "a trace has at least one event");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Arc::new(
        Schema::new(atoms.iter().map(|a| a.to_string()).collect()).expect("distinct atom names"),
    );
    let mut tau = 0.0;
    let events = (0..length)
        .map(|k| {
            if k > 0 {
                tau += TIME_STEPS.choose(&mut rng).unwrap();
            }
            let values = atoms.iter().map(|_| Value::Bool(rng.gen())).collect();
            TimedState::new(tau, schema.clone(), values)
        })
        .collect();
    TimedStateSequence::new(events).expect("generated trace is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{finally, globally};

    fn bools(rows: &[(f64, bool)]) -> TimedStateSequence {
        let schema = Arc::new(Schema::new(vec!["q".into()]).unwrap());
        TimedStateSequence::new(
            rows.iter()
                .map(|(t, q)| TimedState::new(*t, schema.clone(), vec![Value::Bool(*q)]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn globally_on_constant_trace() {
        let rho = bools(&[(0.0, true), (1.0, true), (2.0, true)]);
        let b = Bindings::boolean_identity(["q"]);
        let g = globally(Interval::UNBOUNDED, Formula::atom("q"));
        assert!(evaluate(&rho, 1, &g, &b).unwrap());
    }

    #[test]
    fn false_never_holds() {
        let rho = bools(&[(0.0, true)]);
        let b = Bindings::boolean_identity(["q"]);
        assert!(!evaluate(&rho, 1, &Formula::constant(false), &b).unwrap());
    }

    #[test]
    fn finally_window() {
        let rho = bools(&[(0.0, false), (1.5, true)]);
        let b = Bindings::boolean_identity(["q"]);
        let wide = finally(Interval::closed(0.0, 2.0).unwrap(), Formula::atom("q"));
        let narrow = finally(Interval::closed(0.0, 1.0).unwrap(), Formula::atom("q"));
        assert!(evaluate(&rho, 1, &wide, &b).unwrap());
        assert!(!evaluate(&rho, 1, &narrow, &b).unwrap());
    }

    #[test]
    fn index_bounds() {
        let rho = bools(&[(0.0, false)]);
        let b = Bindings::boolean_identity(["q"]);
        let f = Formula::atom("q");
        assert_eq!(
            evaluate(&rho, 0, &f, &b),
            Err(OracleError::IndexOutOfRange { index: 0, len: 1 })
        );
        assert!(evaluate(&rho, 2, &f, &b).is_err());
    }

    #[test]
    fn unbound_atom() {
        let rho = bools(&[(0.0, false)]);
        assert!(matches!(
            evaluate(&rho, 1, &Formula::atom("zz"), &Bindings::new()),
            Err(OracleError::Predicate(PredicateError::Unbound(_)))
        ));
    }

    #[test]
    fn generators_are_deterministic() {
        let atoms = ["p", "q"];
        assert_eq!(random_formula(7, 3, &atoms), random_formula(7, 3, &atoms));
        assert_eq!(random_trace(7, 6, &atoms), random_trace(7, 6, &atoms));
    }

    #[test]
    fn depth_zero_is_a_leaf() {
        for seed in 0..50 {
            let f = random_formula(seed, 0, &["p"]);
            assert!(
                matches!(f, Formula::Atom(_)) || f.as_constant().is_some(),
                "{f}"
            );
        }
    }

    #[test]
    fn depth_bound_is_respected() {
        for seed in 0..200 {
            assert!(FormulaGen::new(seed, &["p", "q"]).expr(3).depth() <= 3);
        }
    }

    #[test]
    fn traces_start_at_zero_and_never_go_back() {
        for seed in 0..50 {
            let t = random_trace(seed, 8, &["a", "b"]);
            assert_eq!(t.at(1).unwrap().tau, 0.0);
            assert!(t.events().windows(2).all(|w| w[0].tau <= w[1].tau));
        }
        assert_eq!(random_trace(3, 1, &["a"]).len(), 1);
    }
}
