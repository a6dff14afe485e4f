//! MTL formulas over five primitives: atoms, set-valued conjunction and
//! exclusive-or, and interval-annotated next and until.
//!
//! `true` is the empty conjunction and `false` the empty exclusive-or. Every
//! derived operator (`not`, `or`, `implies`, `finally`, `globally`, and the
//! `timedTrigger` pattern) is desugared into primitives when it is built, so
//! the rewrite engine only ever sees the five primitive shapes.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("unknown derived operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{op}` expects {expected} operand(s), got {got}")]
    Arity {
        op: &'static str,
        expected: &'static str,
        got: usize,
    },
}

/// Unordered children of a conjunction or exclusive-or.
///
/// Children are kept sorted, so two sets holding the same children in a
/// different order compare and hash equal. Duplicates are kept; removing them
/// is the job of canonicalization.
#[allow(clippy::derived_hash_with_manual_eq)]
#[derive(Clone, Eq, Hash)]
pub struct FormulaSet(Arc<[Formula]>);

impl PartialEq for FormulaSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl PartialOrd for FormulaSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FormulaSet {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

impl FormulaSet {
    pub fn new<I: IntoIterator<Item = Formula>>(children: I) -> Self {
        let mut children: Vec<Formula> = children.into_iter().collect();
        children.sort_unstable();
        FormulaSet(children.into())
    }

    pub fn empty() -> Self {
        FormulaSet(Arc::from(Vec::new()))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Formula> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Formula] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a FormulaSet {
    type Item = &'a Formula;
    type IntoIter = std::slice::Iter<'a, Formula>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

/// A formula built from the five primitives.
///
/// Values are immutable and cheap to clone; subformulas are shared.
/// Equality is structural up to reordering of set children.
#[allow(clippy::derived_hash_with_manual_eq)]
#[derive(Clone, Eq, Hash)]
pub enum Formula {
    Atom(Arc<str>),
    And(FormulaSet),
    Xor(FormulaSet),
    Next(Interval, Arc<Formula>),
    Until(Interval, Arc<Formula>, Arc<Formula>),
}

/// Compares shared subformulas, skipping the walk when both are the same
/// allocation.
fn cmp_shared(a: &Arc<Formula>, b: &Arc<Formula>) -> Ordering {
    if Arc::ptr_eq(a, b) {
        Ordering::Equal
    } else {
        a.cmp(b)
    }
}

impl Formula {
    fn rank(&self) -> u8 {
        match self {
            Formula::Atom(_) => 0,
            Formula::And(_) => 1,
            Formula::Xor(_) => 2,
            Formula::Next(..) => 3,
            Formula::Until(..) => 4,
        }
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl PartialOrd for Formula {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Formula {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Formula::Atom(a), Formula::Atom(b)) => a.cmp(b),
            (Formula::And(a), Formula::And(b)) | (Formula::Xor(a), Formula::Xor(b)) => a.cmp(b),
            (Formula::Next(i, a), Formula::Next(j, b)) => i.cmp(j).then_with(|| cmp_shared(a, b)),
            (Formula::Until(i, a, c), Formula::Until(j, b, d)) => i
                .cmp(j)
                .then_with(|| cmp_shared(a, b))
                .then_with(|| cmp_shared(c, d)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Formula {
    pub fn atom(name: impl Into<Arc<str>>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn and<I: IntoIterator<Item = Formula>>(children: I) -> Self {
        Formula::And(FormulaSet::new(children))
    }

    pub fn xor<I: IntoIterator<Item = Formula>>(children: I) -> Self {
        Formula::Xor(FormulaSet::new(children))
    }

    pub fn next(interval: Interval, body: Formula) -> Self {
        Formula::Next(interval, Arc::new(body))
    }

    pub fn until(interval: Interval, left: Formula, right: Formula) -> Self {
        Formula::Until(interval, Arc::new(left), Arc::new(right))
    }

    /// `true` is `And{}` and `false` is `Xor{}`.
    pub fn constant(value: bool) -> Self {
        if value {
            Formula::And(FormulaSet::empty())
        } else {
            Formula::Xor(FormulaSet::empty())
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::And(c) if c.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Xor(c) if c.is_empty())
    }

    /// The truth value if this formula is one of the two constants.
    pub fn as_constant(&self) -> Option<bool> {
        if self.is_true() {
            Some(true)
        } else if self.is_false() {
            Some(false)
        } else {
            None
        }
    }

    /// Number of nodes in the tree, counting shared subterms once per occurrence.
    pub fn node_count(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::And(c) | Formula::Xor(c) => {
                1 + c.iter().map(Formula::node_count).sum::<usize>()
            }
            Formula::Next(_, body) => 1 + body.node_count(),
            Formula::Until(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    /// Number of nodes as stored: a subformula reached through an allocation
    /// that was already visited is not counted again.
    pub fn shared_size(&self) -> usize {
        self.count_shared(&mut HashSet::new())
    }

    fn count_shared(&self, seen: &mut HashSet<usize>) -> usize {
        fn child(f: &Formula, addr: usize, seen: &mut HashSet<usize>) -> usize {
            if seen.insert(addr) {
                f.count_shared(seen)
            } else {
                0
            }
        }
        1 + match self {
            Formula::Atom(_) => 0,
            Formula::And(c) | Formula::Xor(c) => {
                if !c.is_empty() && seen.insert(c.0.as_ptr() as usize) {
                    c.iter().map(|f| f.count_shared(seen)).sum()
                } else {
                    0
                }
            }
            Formula::Next(_, body) => child(body, Arc::as_ptr(body) as usize, seen),
            Formula::Until(_, l, r) => {
                child(l, Arc::as_ptr(l) as usize, seen) + child(r, Arc::as_ptr(r) as usize, seen)
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Formula::Atom(name) => {
                out.insert(name.clone());
            }
            Formula::And(c) | Formula::Xor(c) => c.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Next(_, body) => body.collect_atoms(out),
            Formula::Until(_, l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }
}

/// Structural equality modulo reordering of conjunction and exclusive-or
/// children. Not semantic equivalence: `p` and `!!p` differ until canonicalized.
pub fn structural_equal(a: &Formula, b: &Formula) -> bool {
    a == b
}

/// `true ⊕ φ`
pub fn not(f: Formula) -> Formula {
    Formula::xor([Formula::constant(true), f])
}

/// `¬(¬φ1 ∧ … ∧ ¬φn)`
pub fn or<I: IntoIterator<Item = Formula>>(children: I) -> Formula {
    not(Formula::and(children.into_iter().map(not)))
}

/// `¬(φ1 ∧ ¬φ2)`
pub fn implies(antecedent: Formula, consequent: Formula) -> Formula {
    not(Formula::and([antecedent, not(consequent)]))
}

/// `true U_I φ`
pub fn finally(interval: Interval, f: Formula) -> Formula {
    Formula::until(interval, Formula::constant(true), f)
}

/// `¬ F_I ¬φ`
pub fn globally(interval: Interval, f: Formula) -> Formula {
    not(finally(interval, not(f)))
}

/// When `trigger` becomes true, `response` must hold within `window`:
/// `G((¬φ1 ∧ X φ1) → X F_I φ2)` with `G` and both `X` over `[0,inf)`.
pub fn timed_trigger(window: Interval, trigger: Formula, response: Formula) -> Formula {
    let rising = Formula::and([
        not(trigger.clone()),
        Formula::next(Interval::UNBOUNDED, trigger),
    ]);
    let answered = Formula::next(Interval::UNBOUNDED, finally(window, response));
    globally(Interval::UNBOUNDED, implies(rising, answered))
}

/// Operators defined on top of the primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derived {
    Not,
    Or,
    Implies,
    Finally(Interval),
    Globally(Interval),
}

impl Derived {
    pub fn name(&self) -> &'static str {
        match self {
            Derived::Not => "not",
            Derived::Or => "or",
            Derived::Implies => "implies",
            Derived::Finally(_) => "finally",
            Derived::Globally(_) => "globally",
        }
    }
}

impl FromStr for Derived {
    type Err = FormulaError;

    /// Parses an operator name; temporal operators get the default interval.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "not" => Ok(Derived::Not),
            "or" => Ok(Derived::Or),
            "implies" => Ok(Derived::Implies),
            "finally" => Ok(Derived::Finally(Interval::UNBOUNDED)),
            "globally" => Ok(Derived::Globally(Interval::UNBOUNDED)),
            other => Err(FormulaError::UnknownOperator(other.to_string())),
        }
    }
}

/// Builds a derived operator application out of primitives.
pub fn build_derived(op: Derived, args: Vec<Formula>) -> Result<Formula, FormulaError> {
    let arity = |expected: &'static str| FormulaError::Arity {
        op: op.name(),
        expected,
        got: args.len(),
    };
    match op {
        Derived::Or => Ok(or(args)),
        Derived::Not | Derived::Finally(_) | Derived::Globally(_) => {
            let err = arity("1");
            let [f]: [Formula; 1] = args.try_into().map_err(|_| err)?;
            Ok(match op {
                Derived::Not => not(f),
                Derived::Finally(i) => finally(i, f),
                Derived::Globally(i) => globally(i, f),
                _ => unreachable!(),
            })
        }
        Derived::Implies => {
            let err = arity("2");
            let [a, b]: [Formula; 2] = args.try_into().map_err(|_| err)?;
            Ok(implies(a, b))
        }
    }
}

impl fmt::Display for Formula {
    /// Prints in the requirement-file formula syntax, fully parenthesized.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(name) => f.write_str(name),
            Formula::And(c) if c.is_empty() => f.write_str("true"),
            Formula::Xor(c) if c.is_empty() => f.write_str("false"),
            Formula::And(c) => write_joined(f, c, " & "),
            Formula::Xor(c) => write_joined(f, c, " xor "),
            Formula::Next(i, body) => write!(f, "(X{i} {body})"),
            Formula::Until(i, l, r) => write!(f, "({l} U{i} {r})"),
        }
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, children: &FormulaSet, sep: &str) -> fmt::Result {
    f.write_str("(")?;
    for (k, child) in children.iter().enumerate() {
        if k > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{child}")?;
    }
    f.write_str(")")
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for FormulaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    fn p() -> Formula {
        Formula::atom("p")
    }

    fn q() -> Formula {
        Formula::atom("q")
    }

    fn hash_of(f: &Formula) -> u64 {
        let mut h = DefaultHasher::new();
        f.hash(&mut h);
        h.finish()
    }

    #[test]
    fn empty_sets_are_constants() {
        assert!(Formula::and([]).is_true());
        assert!(Formula::xor([]).is_false());
        assert_eq!(Formula::constant(true).as_constant(), Some(true));
        assert_eq!(p().as_constant(), None);
    }

    #[test]
    fn until_is_built_verbatim() {
        let i = Interval::closed(0.0, 10.0).unwrap();
        match Formula::until(i, p(), q()) {
            Formula::Until(j, l, r) => {
                assert_eq!(j, i);
                assert_eq!(*l, p());
                assert_eq!(*r, q());
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn derived_operators_desugar() {
        assert_eq!(
            build_derived(Derived::Not, vec![p()]).unwrap(),
            Formula::xor([Formula::and([]), p()])
        );
        assert_eq!(
            build_derived(Derived::Finally(Interval::UNBOUNDED), vec![q()]).unwrap(),
            Formula::until(Interval::UNBOUNDED, Formula::constant(true), q())
        );
        let g = build_derived(Derived::Globally(Interval::UNBOUNDED), vec![p()]).unwrap();
        let expected = Formula::xor([
            Formula::constant(true),
            Formula::until(
                Interval::UNBOUNDED,
                Formula::constant(true),
                Formula::xor([Formula::constant(true), p()]),
            ),
        ]);
        assert_eq!(g, expected);
    }

    #[test]
    fn derived_arity_and_names() {
        assert!(matches!(
            build_derived(Derived::Implies, vec![p()]),
            Err(FormulaError::Arity { op: "implies", .. })
        ));
        assert!(matches!(
            "eventually".parse::<Derived>(),
            Err(FormulaError::UnknownOperator(_))
        ));
        assert_eq!("or".parse::<Derived>().unwrap(), Derived::Or);
    }

    #[test]
    fn structural_equality_ignores_set_order() {
        let a = Formula::and([p(), q()]);
        let b = Formula::and([q(), p()]);
        assert!(structural_equal(&a, &b));
        assert_eq!(hash_of(&a), hash_of(&b));

        let closed = Formula::until(Interval::closed(0.0, 10.0).unwrap(), p(), q());
        let open = Formula::until(Interval::right_open(0.0, 10.0).unwrap(), p(), q());
        assert!(!structural_equal(&closed, &open));

        let double_neg = not(not(p()));
        assert!(!structural_equal(&p(), &double_neg));
    }

    #[test]
    fn display_uses_grammar_syntax() {
        let f = Formula::until(Interval::closed(0.0, 10.0).unwrap(), p(), not(q()));
        assert_eq!(f.to_string(), "(p U[0,10] (q xor true))");
    }

    #[test]
    fn node_count_and_atoms() {
        let f = timed_trigger(Interval::closed(0.0, 60.0).unwrap(), p(), q());
        assert!(f.node_count() > 10);
        let atoms: Vec<_> = f.atoms().into_iter().map(|a| a.to_string()).collect();
        assert_eq!(atoms, ["p", "q"]);
    }
}
