//! Canonicalization to algebraic normal form and one-event progression.
//!
//! A canonical formula is an exclusive-or of conjunctions whose members are
//! irreducible terms: atoms, `Next` and `Until` with canonical bodies. Inside
//! the engine that shape is held as a `Poly`, a set of monomials over terms,
//! where addition is exclusive-or (equal monomials cancel in pairs) and
//! multiplication is conjunction (equal terms collapse). Both operations keep
//! the representation normalized, so the rewrite rules
//!
//! ```text
//! φ ∧ false ⇒ false    φ ∧ φ ⇒ φ    φ ∧ true ⇒ φ
//! φ ⊕ false ⇒ φ        φ ⊕ φ ⇒ false
//! φ1 ∧ (φ2 ⊕ φ3) ⇒ (φ1 ∧ φ2) ⊕ (φ1 ∧ φ3)
//! ```
//!
//! are applied bottom-up in a single pass. Temporal terms are opaque to the
//! Boolean algebra.

use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::formula::Formula;
use crate::interval::{Interval, IntervalError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewriteError {
    #[error("proposition `{0}` has no bound predicate")]
    UnboundProposition(Arc<str>),
    #[error("successor timestamp {next} precedes current timestamp {current}")]
    NonMonotonic { current: f64, next: f64 },
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// Truth values of the propositions at one event.
pub trait Valuation {
    fn truth(&self, atom: &str) -> Option<bool>;
}

impl<F: Fn(&str) -> Option<bool>> Valuation for F {
    fn truth(&self, atom: &str) -> Option<bool> {
        self(atom)
    }
}

/// Proposition values of one event, sorted by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomValues(Vec<(Arc<str>, bool)>);

impl AtomValues {
    pub fn new<I: IntoIterator<Item = (Arc<str>, bool)>>(values: I) -> Self {
        let mut v: Vec<_> = values.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v.dedup_by(|a, b| a.0 == b.0);
        AtomValues(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (&**k, *v))
    }
}

impl Valuation for AtomValues {
    fn truth(&self, atom: &str) -> Option<bool> {
        self.0
            .binary_search_by(|(name, _)| (**name).cmp(atom))
            .ok()
            .map(|k| self.0[k].1)
    }
}

/// What follows the event being derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Successor {
    NextTimestamp(f64),
    EndOfTrace,
}

/// Everything progression needs to know about event `i`.
pub struct StepContext<'a> {
    pub valuation: &'a dyn Valuation,
    pub tau: f64,
    pub successor: Successor,
}

impl<'a> StepContext<'a> {
    pub fn new(valuation: &'a dyn Valuation, tau: f64, successor: Successor) -> Self {
        StepContext {
            valuation,
            tau,
            successor,
        }
    }

    fn delta(&self) -> Result<Option<f64>, RewriteError> {
        match self.successor {
            Successor::EndOfTrace => Ok(None),
            Successor::NextTimestamp(next) if next >= self.tau => Ok(Some(next - self.tau)),
            Successor::NextTimestamp(next) => Err(RewriteError::NonMonotonic {
                current: self.tau,
                next,
            }),
        }
    }
}

/// A product of distinct irreducible terms, sorted. Empty means `true`.
type Monomial = Vec<Formula>;

/// An exclusive-or of distinct monomials, sorted. Empty means `false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Poly(Vec<Monomial>);

impl Poly {
    fn zero() -> Self {
        Poly(Vec::new())
    }

    fn one() -> Self {
        Poly(vec![Vec::new()])
    }

    fn constant(value: bool) -> Self {
        if value {
            Self::one()
        } else {
            Self::zero()
        }
    }

    fn term(f: Formula) -> Self {
        Poly(vec![vec![f]])
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Sorts and cancels equal monomials in pairs.
    fn from_monomials(mut monomials: Vec<Monomial>) -> Self {
        monomials.sort_unstable();
        let mut out: Vec<Monomial> = Vec::with_capacity(monomials.len());
        for m in monomials {
            if out.last() == Some(&m) {
                out.pop();
            } else {
                out.push(m);
            }
        }
        Poly(out)
    }

    fn add(self, other: Poly) -> Poly {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let mut a = self.0.into_iter().peekable();
        let mut b = other.0.into_iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => match x.cmp(y) {
                    std::cmp::Ordering::Less => out.push(a.next().unwrap()),
                    std::cmp::Ordering::Greater => out.push(b.next().unwrap()),
                    std::cmp::Ordering::Equal => {
                        a.next();
                        b.next();
                    }
                },
                (Some(_), None) => out.push(a.next().unwrap()),
                (None, Some(_)) => out.push(b.next().unwrap()),
                (None, None) => break,
            }
        }
        Poly(out)
    }

    fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if self.is_one() {
            return other.clone();
        }
        if other.is_one() {
            return self.clone();
        }
        let mut products = Vec::with_capacity(self.0.len() * other.0.len());
        for x in &self.0 {
            for y in &other.0 {
                products.push(union(x, y));
            }
        }
        Poly::from_monomials(products)
    }

    fn is_one(&self) -> bool {
        self.0.len() == 1 && self.0[0].is_empty()
    }

    /// Adds `true`: the empty monomial sorts first, so it is toggled there.
    fn not(mut self) -> Poly {
        if self.0.first().is_some_and(Vec::is_empty) {
            self.0.remove(0);
        } else {
            self.0.insert(0, Vec::new());
        }
        self
    }

    /// `¬(¬a ∧ ¬b)`
    fn or(self, other: Poly) -> Poly {
        if self.is_zero() || other.is_one() {
            return other;
        }
        if other.is_zero() || self.is_one() {
            return self;
        }
        self.not().mul(&other.not()).not()
    }

    fn into_formula(self) -> Formula {
        let mut monomials: Vec<Formula> = self.0.into_iter().map(monomial_formula).collect();
        if monomials.len() == 1 {
            monomials.pop().unwrap()
        } else {
            Formula::xor(monomials)
        }
    }
}

fn monomial_formula(mut terms: Monomial) -> Formula {
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        Formula::and(terms)
    }
}

fn union(x: &[Formula], y: &[Formula]) -> Monomial {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => {
                out.push(x[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(y[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(x[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&x[i..]);
    out.extend_from_slice(&y[j..]);
    out
}

fn poly_of(f: &Formula) -> Poly {
    match f {
        Formula::Atom(_) => Poly::term(f.clone()),
        Formula::And(children) => children
            .iter()
            .fold(Poly::one(), |acc, c| acc.mul(&poly_of(c))),
        Formula::Xor(children) => children
            .iter()
            .fold(Poly::zero(), |acc, c| acc.add(poly_of(c))),
        // A temporal term whose obligation can never be met is false.
        Formula::Next(i, body) => match canonicalize(body) {
            b if b.is_false() => Poly::zero(),
            b => Poly::term(Formula::next(*i, b)),
        },
        Formula::Until(i, l, r) => match canonicalize(r) {
            r if r.is_false() => Poly::zero(),
            r => Poly::term(Formula::until(*i, canonicalize(l), r)),
        },
    }
}

/// Reads an already canonical formula back into a polynomial without
/// touching the bodies of temporal terms.
fn poly_of_canonical(f: &Formula) -> Poly {
    match f {
        Formula::Xor(children) => {
            Poly::from_monomials(children.iter().map(monomial_of_canonical).collect())
        }
        other => Poly(vec![monomial_of_canonical(other)]),
    }
}

fn monomial_of_canonical(f: &Formula) -> Monomial {
    match f {
        Formula::And(terms) => terms.as_slice().to_vec(),
        term => vec![term.clone()],
    }
}

/// Rewrites `f` into algebraic normal form.
///
/// Propositionally equivalent formulas over the same terms have structurally
/// equal canonical forms.
pub fn canonicalize(f: &Formula) -> Formula {
    poly_of(f).into_formula()
}

/// Progresses a canonical formula over one event: the result, interpreted at
/// the next event, holds exactly when `f` holds at this one.
pub fn derive_step(f: &Formula, ctx: &StepContext<'_>) -> Result<Formula, RewriteError> {
    let delta = ctx.delta()?;
    Ok(Deriver::new(ctx, delta).derive(f)?.into_formula())
}

/// Progresses the last event of a trace. Every temporal obligation grounds
/// to `false`, so the result is always a truth constant.
pub fn derive_final(
    f: &Formula,
    valuation: &dyn Valuation,
    tau: f64,
) -> Result<bool, RewriteError> {
    let ctx = StepContext::new(valuation, tau, Successor::EndOfTrace);
    let grounded = Deriver::new(&ctx, None).derive(f)?;
    match grounded.0.as_slice() {
        [] => Ok(false),
        [m] if m.is_empty() => Ok(true),
        _ => unreachable!("end-of-trace derivative left residual terms: {grounded:?}"),
    }
}

/// Identity of a temporal term by the addresses of its shared operands.
#[derive(PartialEq, Eq, Hash)]
enum TermKey {
    Next(Interval, usize),
    Until(Interval, usize, usize),
}

/// One event's derivation. Temporal terms recur across the monomials of a
/// residual, so each is derived once.
struct Deriver<'a, 'b> {
    ctx: &'a StepContext<'b>,
    delta: Option<f64>,
    memo: Memo,
}

/// Derived terms of the current step. Most residuals hold a handful of
/// terms, which a linear scan finds faster than hashing.
enum Memo {
    Few(Vec<(TermKey, Rc<Poly>)>),
    Many(HashMap<TermKey, Rc<Poly>>),
}

impl Memo {
    const FEW: usize = 32;

    fn get(&self, key: &TermKey) -> Option<Rc<Poly>> {
        match self {
            Memo::Few(entries) => entries
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, p)| p.clone()),
            Memo::Many(map) => map.get(key).cloned(),
        }
    }

    fn insert(&mut self, key: TermKey, poly: Rc<Poly>) {
        match self {
            Memo::Few(entries) if entries.len() < Self::FEW => entries.push((key, poly)),
            Memo::Few(entries) => {
                let mut map: HashMap<_, _> = entries.drain(..).collect();
                map.insert(key, poly);
                *self = Memo::Many(map);
            }
            Memo::Many(map) => {
                map.insert(key, poly);
            }
        }
    }
}

impl<'a, 'b> Deriver<'a, 'b> {
    fn new(ctx: &'a StepContext<'b>, delta: Option<f64>) -> Self {
        Deriver {
            ctx,
            delta,
            memo: Memo::Few(Vec::new()),
        }
    }

    fn derive(&mut self, f: &Formula) -> Result<Poly, RewriteError> {
        match f {
            Formula::Atom(name) => self
                .ctx
                .valuation
                .truth(name)
                .map(Poly::constant)
                .ok_or_else(|| RewriteError::UnboundProposition(name.clone())),
            Formula::And(children) => {
                let mut acc = Poly::one();
                for c in children {
                    acc = acc.mul(&*self.derive_shared(c)?);
                    if acc.is_zero() {
                        break;
                    }
                }
                Ok(acc)
            }
            Formula::Xor(children) => {
                let mut acc = Poly::zero();
                for c in children {
                    acc = acc.add((*self.derive_shared(c)?).clone());
                }
                Ok(acc)
            }
            Formula::Next(..) | Formula::Until(..) => Ok((*self.derive_shared(f)?).clone()),
        }
    }

    fn derive_shared(&mut self, f: &Formula) -> Result<Rc<Poly>, RewriteError> {
        let key = match f {
            Formula::Next(i, body) => TermKey::Next(*i, Arc::as_ptr(body) as usize),
            Formula::Until(i, l, r) => {
                TermKey::Until(*i, Arc::as_ptr(l) as usize, Arc::as_ptr(r) as usize)
            }
            other => return self.derive(other).map(Rc::new),
        };
        if let Some(p) = self.memo.get(&key) {
            return Ok(p);
        }
        let p = Rc::new(self.derive_term(f)?);
        self.memo.insert(key, p.clone());
        Ok(p)
    }

    fn derive_term(&mut self, f: &Formula) -> Result<Poly, RewriteError> {
        match f {
            Formula::Next(interval, body) => Ok(match self.delta {
                Some(d) if interval.contains(d) => poly_of_canonical(body),
                _ => Poly::zero(),
            }),
            Formula::Until(interval, left, right) => {
                let now = if interval.contains_zero() {
                    self.derive(right)?
                } else {
                    Poly::zero()
                };
                let later = match self.delta {
                    Some(d) => {
                        let shifted = interval.shift(d)?;
                        if shifted.is_expired() {
                            Poly::zero()
                        } else {
                            let residual = Formula::Until(
                                shifted.clamp_to_future(),
                                left.clone(),
                                right.clone(),
                            );
                            self.derive(left)?.mul(&Poly::term(residual))
                        }
                    }
                    None => Poly::zero(),
                };
                Ok(now.or(later))
            }
            other => self.derive(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{finally, globally, not, or, Formula};
    use crate::interval::Interval;

    fn atom(s: &str) -> Formula {
        Formula::atom(s)
    }

    fn tt() -> Formula {
        Formula::constant(true)
    }

    fn ff() -> Formula {
        Formula::constant(false)
    }

    #[test]
    fn and_with_false_is_false() {
        assert!(canonicalize(&Formula::and([atom("p"), ff()])).is_false());
    }

    #[test]
    fn and_idempotent() {
        assert_eq!(
            canonicalize(&Formula::and([atom("p"), atom("p")])),
            atom("p")
        );
    }

    #[test]
    fn and_with_true_is_identity() {
        assert_eq!(canonicalize(&Formula::and([atom("p"), tt()])), atom("p"));
    }

    #[test]
    fn xor_with_false_is_identity() {
        assert_eq!(canonicalize(&Formula::xor([atom("p"), ff()])), atom("p"));
    }

    #[test]
    fn xor_self_cancels() {
        assert!(canonicalize(&Formula::xor([atom("p"), atom("p")])).is_false());
    }

    #[test]
    fn and_distributes_over_xor() {
        let f = Formula::and([atom("p"), Formula::xor([atom("q"), atom("r")])]);
        let expected = Formula::xor([
            Formula::and([atom("p"), atom("q")]),
            Formula::and([atom("p"), atom("r")]),
        ]);
        assert_eq!(canonicalize(&f), expected);
    }

    #[test]
    fn double_negation_cancels() {
        let f = Formula::xor([tt(), Formula::xor([tt(), atom("p")])]);
        assert_eq!(canonicalize(&f), atom("p"));
        assert_eq!(canonicalize(&not(not(atom("q")))), atom("q"));
    }

    #[test]
    fn temporal_bodies_are_canonicalized() {
        let i = Interval::closed(0.0, 5.0).unwrap();
        let f = Formula::next(i, Formula::and([atom("p"), tt()]));
        assert_eq!(canonicalize(&f), Formula::next(i, atom("p")));
    }

    #[test]
    fn or_canonical_form() {
        // a ∨ b = a ⊕ b ⊕ ab
        let expected = Formula::xor([atom("a"), atom("b"), Formula::and([atom("a"), atom("b")])]);
        assert_eq!(canonicalize(&or([atom("a"), atom("b")])), expected);
    }

    fn values(pairs: &[(&str, bool)]) -> AtomValues {
        AtomValues::new(pairs.iter().map(|(k, v)| (Arc::from(*k), *v)))
    }

    #[test]
    fn atom_derives_to_its_value() {
        let v = values(&[("p", true)]);
        let ctx = StepContext::new(&v, 0.0, Successor::NextTimestamp(1.0));
        assert!(derive_step(&atom("p"), &ctx).unwrap().is_true());
    }

    #[test]
    fn next_outside_window_is_false() {
        let v = values(&[("q", true)]);
        let ctx = StepContext::new(&v, 0.0, Successor::NextTimestamp(7.0));
        let f = Formula::next(Interval::right_open(0.0, 5.0).unwrap(), atom("q"));
        assert!(derive_step(&f, &ctx).unwrap().is_false());

        let ctx = StepContext::new(&v, 0.0, Successor::NextTimestamp(4.0));
        assert_eq!(derive_step(&f, &ctx).unwrap(), atom("q"));
    }

    #[test]
    fn until_keeps_shifted_residual() {
        let v = values(&[("p", true), ("q", false)]);
        let ctx = StepContext::new(&v, 0.0, Successor::NextTimestamp(3.0));
        let f = Formula::until(Interval::closed(0.0, 10.0).unwrap(), atom("p"), atom("q"));
        // [-3,7] and [0,7] admit the same non-negative offsets.
        let shifted = Interval::unchecked_sign(-3.0, true, 7.0, true).unwrap();
        assert_eq!(
            shifted.clamp_to_future(),
            Interval::closed(0.0, 7.0).unwrap()
        );
        let expected = Formula::until(shifted.clamp_to_future(), atom("p"), atom("q"));
        assert_eq!(derive_step(&f, &ctx).unwrap(), expected);
    }

    #[test]
    fn repeated_shifts_of_an_unbounded_until_coincide() {
        let v = values(&[("p", true), ("q", false)]);
        let f = Formula::until(Interval::UNBOUNDED, atom("p"), atom("q"));
        let ctx = StepContext::new(&v, 0.0, Successor::NextTimestamp(1.5));
        assert_eq!(derive_step(&f, &ctx).unwrap(), f);
    }

    #[test]
    fn unsatisfiable_temporal_terms_fold_to_false() {
        let i = Interval::closed(0.0, 3.0).unwrap();
        assert!(canonicalize(&Formula::until(i, atom("p"), ff())).is_false());
        assert!(canonicalize(&Formula::next(i, Formula::xor([atom("p"), atom("p")]))).is_false());
        assert_eq!(canonicalize(&globally(i, tt())), tt());
    }

    #[test]
    fn until_fires_when_right_holds() {
        let v = values(&[("p", false), ("q", true)]);
        let ctx = StepContext::new(&v, 0.0, Successor::NextTimestamp(3.0));
        let f = Formula::until(Interval::closed(0.0, 10.0).unwrap(), atom("p"), atom("q"));
        assert!(derive_step(&f, &ctx).unwrap().is_true());
    }

    #[test]
    fn until_past_its_window_is_false() {
        let v = values(&[("q", false)]);
        let ctx = StepContext::new(&v, 0.0, Successor::NextTimestamp(3.0));
        let f = finally(Interval::closed(0.0, 2.0).unwrap(), atom("q"));
        assert!(derive_step(&f, &ctx).unwrap().is_false());
    }

    #[test]
    fn unbound_atom_is_reported() {
        let v = values(&[]);
        let ctx = StepContext::new(&v, 0.0, Successor::EndOfTrace);
        assert_eq!(
            derive_step(&atom("ghost"), &ctx),
            Err(RewriteError::UnboundProposition(Arc::from("ghost")))
        );
    }

    #[test]
    fn decreasing_successor_is_rejected() {
        let v = values(&[("p", true)]);
        let ctx = StepContext::new(&v, 5.0, Successor::NextTimestamp(4.0));
        assert!(matches!(
            derive_step(&atom("p"), &ctx),
            Err(RewriteError::NonMonotonic { .. })
        ));
    }

    #[test]
    fn final_step_grounds_obligations() {
        let v = values(&[("p", true)]);
        let g = canonicalize(&globally(Interval::UNBOUNDED, atom("p")));
        assert!(derive_final(&g, &v, 0.0).unwrap());
        let x = Formula::next(Interval::UNBOUNDED, atom("p"));
        assert!(!derive_final(&x, &v, 0.0).unwrap());
        assert!(derive_final(&tt(), &v, 0.0).unwrap());
    }

    #[test]
    fn zero_delta_is_allowed() {
        let v = values(&[("p", false)]);
        let ctx = StepContext::new(&v, 2.0, Successor::NextTimestamp(2.0));
        let f = Formula::next(Interval::closed(0.0, 1.0).unwrap(), atom("p"));
        assert_eq!(derive_step(&f, &ctx).unwrap(), atom("p"));
    }
}
