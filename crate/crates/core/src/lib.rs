pub mod fixtures;
pub mod formula;
pub mod interval;
pub mod monitor;
pub mod oracle;
pub mod predicate;
pub mod rewrite;
pub mod spec;
pub mod trace;
