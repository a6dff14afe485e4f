#![allow(dead_code)]

use std::sync::Arc;

use mtlmon::monitor::{Monitor, Verdict};
use mtlmon::predicate::Bindings;
use mtlmon::spec::ast::Expr;
use mtlmon::spec::Requirement;
use mtlmon::trace::TimedStateSequence;

pub const ATOMS: [&str; 3] = ["a", "b", "c"];

pub fn bindings() -> Bindings {
    Bindings::boolean_identity(ATOMS)
}

pub fn requirement(expr: Expr) -> Arc<Requirement> {
    Arc::new(Requirement::new("r", expr, &bindings()).expect("atoms are bound"))
}

/// Live status after each feed, then the final verdict and violation time.
pub struct Run {
    pub live: Vec<Verdict>,
    pub times: Vec<Option<f64>>,
    pub verdict: Verdict,
    pub violation_time: Option<f64>,
}

pub fn monitor(expr: Expr, trace: &TimedStateSequence) -> Run {
    let mut m = Monitor::new(requirement(expr));
    let mut live = Vec::new();
    let mut times = Vec::new();
    for e in trace.events() {
        live.push(m.feed(e).expect("feed"));
        times.push(m.violation_time());
    }
    let verdict = m.finish().expect("finish");
    Run {
        live,
        times,
        verdict,
        violation_time: m.violation_time(),
    }
}
