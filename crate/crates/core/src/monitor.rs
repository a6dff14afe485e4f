//! Monitors: one requirement's residual obligation, advanced event by event.
//!
//! Progressing event `i` needs the timestamp of event `i + 1`, so a monitor
//! holds the latest event back until the next one (or the end of the trace)
//! arrives. Once the residual collapses to a truth constant the verdict is
//! latched and later events are absorbed without rewriting.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::formula::Formula;
use crate::predicate::PredicateError;
use crate::rewrite::{derive_final, derive_step, AtomValues, RewriteError, StepContext, Successor};
use crate::spec::{Requirement, RequirementClass, RequirementSet};
use crate::trace::{TimedState, TimedStateSequence, TraceError};

/// Default bound on residual size, in formula nodes.
pub const DEFAULT_RESIDUAL_CEILING: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NotViolated,
    Violated,
    NotEvaluated,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::NotViolated => "not_violated",
            Verdict::Violated => "violated",
            Verdict::NotEvaluated => "not_evaluated",
        }
    }

    pub fn is_conclusive(&self) -> bool {
        *self != Verdict::NotEvaluated
    }

    fn of_constant(value: bool) -> Self {
        if value {
            Verdict::NotViolated
        } else {
            Verdict::Violated
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("timestamp {time} precedes the previous timestamp {previous}")]
    NonMonotonic { previous: f64, time: f64 },
    #[error("no events were fed before the end of the trace")]
    EmptyTrace,
    #[error("the monitor was already finished")]
    Finished,
    #[error("residual grew to {size} nodes, above the ceiling of {ceiling}")]
    ResidualCeiling { size: usize, ceiling: usize },
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

struct Pending {
    tau: f64,
    values: AtomValues,
}

/// Tracks one requirement over a stream of events.
pub struct Monitor {
    requirement: Arc<Requirement>,
    residual: Formula,
    status: Verdict,
    violation_time: Option<f64>,
    events_consumed: usize,
    last_tau: Option<f64>,
    pending: Option<Pending>,
    finished: bool,
    peak_residual: usize,
    ceiling: Option<usize>,
}

impl Monitor {
    pub fn new(requirement: Arc<Requirement>) -> Self {
        let residual = requirement.formula.clone();
        let status = residual
            .as_constant()
            .map_or(Verdict::NotEvaluated, Verdict::of_constant);
        Monitor {
            peak_residual: residual.shared_size(),
            requirement,
            residual,
            status,
            violation_time: None,
            events_consumed: 0,
            last_tau: None,
            pending: None,
            finished: false,
            ceiling: None,
        }
    }

    /// Fails the monitor when its residual exceeds `ceiling` nodes.
    pub fn with_ceiling(mut self, ceiling: Option<usize>) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn requirement(&self) -> &Arc<Requirement> {
        &self.requirement
    }

    pub fn residual(&self) -> &Formula {
        &self.residual
    }

    pub fn status(&self) -> Verdict {
        self.status
    }

    pub fn violation_time(&self) -> Option<f64> {
        self.violation_time
    }

    pub fn events_consumed(&self) -> usize {
        self.events_consumed
    }

    /// Largest residual seen so far, as counted by [`Formula::shared_size`].
    pub fn peak_residual(&self) -> usize {
        self.peak_residual
    }

    /// Consumes one event and returns the status after deriving the event
    /// before it.
    pub fn feed(&mut self, event: &TimedState) -> Result<Verdict, MonitorError> {
        if self.finished {
            return Err(MonitorError::Finished);
        }
        if let Some(previous) = self.last_tau {
            if event.tau < previous {
                return Err(MonitorError::NonMonotonic {
                    previous,
                    time: event.tau,
                });
            }
        }
        self.last_tau = Some(event.tau);
        self.events_consumed += 1;
        if self.status.is_conclusive() {
            return Ok(self.status);
        }
        let values = self.requirement.bindings.valuate(event)?;
        if let Some(p) = self.pending.take() {
            let ctx = StepContext::new(&p.values, p.tau, Successor::NextTimestamp(event.tau));
            let next = derive_step(&self.residual, &ctx)?;
            self.advance(next, p.tau)?;
            if self.status.is_conclusive() {
                return Ok(self.status);
            }
        }
        self.pending = Some(Pending {
            tau: event.tau,
            values,
        });
        Ok(self.status)
    }

    /// Closes the trace. The verdict is always conclusive afterwards.
    pub fn finish(&mut self) -> Result<Verdict, MonitorError> {
        if self.finished {
            return Err(MonitorError::Finished);
        }
        if self.events_consumed == 0 {
            return Err(MonitorError::EmptyTrace);
        }
        self.finished = true;
        if let Some(p) = self.pending.take() {
            let holds = derive_final(&self.residual, &p.values, p.tau)?;
            self.residual = Formula::constant(holds);
            self.status = Verdict::of_constant(holds);
            if !holds {
                self.violation_time = Some(p.tau);
            }
        }
        Ok(self.status)
    }

    fn advance(&mut self, next: Formula, tau: f64) -> Result<(), MonitorError> {
        if next != self.residual {
            let size = next.shared_size();
            self.peak_residual = self.peak_residual.max(size);
            if let Some(ceiling) = self.ceiling {
                if size > ceiling {
                    return Err(MonitorError::ResidualCeiling { size, ceiling });
                }
            }
        }
        if let Some(value) = next.as_constant() {
            self.status = Verdict::of_constant(value);
            if !value {
                self.violation_time = Some(tau);
            }
        }
        self.residual = next;
        Ok(())
    }
}

/// Outcome for one requirement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementReport {
    pub name: String,
    pub class: RequirementClass,
    pub verdict: Verdict,
    pub violation_time: Option<f64>,
    pub events: usize,
    #[serde(skip)]
    pub peak_residual: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub violated: usize,
    pub total: usize,
    pub events_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub requirements: Vec<RequirementReport>,
    pub summary: Summary,
    #[serde(skip)]
    pub events: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunReport {
    pub fn get(&self, name: &str) -> Option<&RequirementReport> {
        self.requirements.iter().find(|r| r.name == name)
    }

    pub fn violated(&self) -> impl Iterator<Item = &RequirementReport> {
        self.requirements
            .iter()
            .filter(|r| r.verdict == Verdict::Violated)
    }

    /// Largest residual of any monitor during the run.
    pub fn peak_residual(&self) -> usize {
        self.requirements
            .iter()
            .map(|r| r.peak_residual)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("requirement `{requirement}`, event {}: {source}", display_event(.event))]
    Monitor {
        requirement: String,
        /// 1-based index of the offending event; absent at end of trace.
        event: Option<usize>,
        source: MonitorError,
    },
}

fn display_event(event: &Option<usize>) -> String {
    event.map_or_else(|| "end of trace".to_string(), |k| k.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// One task per monitor. Without the `parallel` feature this runs
    /// sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub execution: Execution,
    pub residual_ceiling: Option<usize>,
    /// Events buffered before they are broadcast to the monitors.
    pub chunk: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            execution: Execution::default(),
            residual_ceiling: Some(DEFAULT_RESIDUAL_CEILING),
            chunk: 1024,
        }
    }
}

/// Drives one monitor per requirement over a shared event stream.
pub struct Runner {
    monitors: Vec<Monitor>,
    options: RunOptions,
    buffer: Vec<TimedState>,
    events: usize,
    started: Instant,
}

impl Runner {
    pub fn new(requirements: &RequirementSet, options: RunOptions) -> Self {
        let monitors = requirements
            .requirements
            .iter()
            .map(|r| Monitor::new(r.clone()).with_ceiling(options.residual_ceiling))
            .collect();
        Runner {
            monitors,
            options: RunOptions {
                chunk: options.chunk.max(1),
                ..options
            },
            buffer: Vec::new(),
            events: 0,
            started: Instant::now(),
        }
    }

    pub fn monitors(&self) -> &[Monitor] {
        &self.monitors
    }

    pub fn push(&mut self, event: TimedState) -> Result<(), RunError> {
        self.buffer.push(event);
        if self.buffer.len() >= self.options.chunk {
            self.flush()?;
        }
        Ok(())
    }

    /// Delivers buffered events to every monitor.
    pub fn flush(&mut self) -> Result<(), RunError> {
        let events = std::mem::take(&mut self.buffer);
        let first = self.events;
        self.events += events.len();
        let feed_all = |m: &mut Monitor| -> Result<(), (usize, MonitorError)> {
            for (k, e) in events.iter().enumerate() {
                m.feed(e).map_err(|err| (first + k + 1, err))?;
            }
            Ok(())
        };
        let outcomes = self.each_monitor(feed_all);
        self.first_error(
            outcomes
                .into_iter()
                .map(|r| r.map_err(|(k, e)| (Some(k), e))),
        )
    }

    /// Ends the stream and reports every monitor's final verdict.
    pub fn finish(mut self) -> Result<RunReport, RunError> {
        self.flush()?;
        if self.events == 0 {
            return Err(TraceError::Empty.into());
        }
        let outcomes = self.each_monitor(|m: &mut Monitor| m.finish().map(|_| ()));
        self.first_error(outcomes.into_iter().map(|r| r.map_err(|e| (None, e))))?;

        let elapsed = self.started.elapsed();
        let requirements: Vec<RequirementReport> = self
            .monitors
            .iter()
            .map(|m| RequirementReport {
                name: m.requirement.name.clone(),
                class: m.requirement.class,
                verdict: m.status,
                violation_time: m.violation_time,
                events: m.events_consumed,
                peak_residual: m.peak_residual,
            })
            .collect();
        let violated = requirements
            .iter()
            .filter(|r| r.verdict == Verdict::Violated)
            .count();
        let seconds = elapsed.as_secs_f64().max(1e-9);
        Ok(RunReport {
            summary: Summary {
                violated,
                total: requirements.len(),
                events_per_second: self.events as f64 / seconds,
            },
            requirements,
            events: self.events,
            elapsed,
        })
    }

    fn each_monitor<T, F>(&mut self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut Monitor) -> T + Sync + Send,
    {
        match self.options.execution {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                self.monitors.par_iter_mut().map(f).collect()
            }
            _ => self.monitors.iter_mut().map(f).collect(),
        }
    }

    /// Picks the error at the earliest event, ties broken by requirement
    /// order, so the result does not depend on scheduling.
    fn first_error(
        &self,
        outcomes: impl Iterator<Item = Result<(), (Option<usize>, MonitorError)>>,
    ) -> Result<(), RunError> {
        let earliest = outcomes
            .enumerate()
            .filter_map(|(m, r)| {
                r.err()
                    .map(|(event, e)| (event.unwrap_or(usize::MAX), m, event, e))
            })
            .min_by_key(|(key, m, _, _)| (*key, *m));
        match earliest {
            None => Ok(()),
            Some((_, m, event, source)) => Err(RunError::Monitor {
                requirement: self.monitors[m].requirement.name.clone(),
                event,
                source,
            }),
        }
    }
}

/// Runs every requirement over a trace held in memory.
pub fn run_all(
    requirements: &RequirementSet,
    trace: &TimedStateSequence,
    options: RunOptions,
) -> Result<RunReport, RunError> {
    let mut runner = Runner::new(requirements, options);
    for e in trace.events() {
        runner.push(e.clone())?;
    }
    runner.finish()
}

/// Runs every requirement over a stream of events, such as a trace reader.
pub fn run_stream<I>(
    requirements: &RequirementSet,
    events: I,
    options: RunOptions,
) -> Result<RunReport, RunError>
where
    I: IntoIterator<Item = Result<TimedState, TraceError>>,
{
    let mut runner = Runner::new(requirements, options);
    for e in events {
        runner.push(e?)?;
    }
    runner.finish()
}
