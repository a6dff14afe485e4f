//! Timed state sequences: in-memory representation, CSV/JSONL readers and
//! writers with timestamp validation.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use serde_json::Value as Json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("row {row}: timestamp {time} precedes previous timestamp {previous}")]
    NonMonotonic {
        row: usize,
        previous: f64,
        time: f64,
    },
    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("header: {0}")]
    Header(String),
    #[error("unsupported trace format `{0}` (expected csv or jsonl)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    /// Guesses the format from a file name; `.jsonl`, `.ndjson` and `.json`
    /// are JSON lines, anything else is CSV.
    pub fn from_path(path: &std::path::Path) -> TraceFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => TraceFormat::Jsonl,
            _ => TraceFormat::Csv,
        }
    }
}

impl std::str::FromStr for TraceFormat {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "jsonl" => Ok(TraceFormat::Jsonl),
            other => Err(TraceError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Variable names shared by every event of a trace.
#[derive(Debug, PartialEq)]
pub struct Schema {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Schema {
    pub fn new(names: Vec<String>) -> Result<Self, String> {
        let mut index = HashMap::with_capacity(names.len());
        for (k, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(format!("variable {} has an empty name", k + 1));
            }
            if name == "time" {
                return Err("`time` cannot be used as a variable name".to_string());
            }
            if index.insert(name.clone(), k).is_some() {
                return Err(format!("duplicate variable `{name}`"));
            }
        }
        Ok(Schema { names, index })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// One event: a timestamp in seconds and a full snapshot of the variables.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedState {
    pub tau: f64,
    schema: Arc<Schema>,
    values: Vec<Value>,
}

impl TimedState {
    pub fn new(tau: f64, schema: Arc<Schema>, values: Vec<Value>) -> Self {
        assert_eq!(
            schema.len(),
            values.len(),
            "state does not match its schema"
        );
        TimedState {
            tau,
            schema,
            values,
        }
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.schema.position(name).map(|k| self.values[k])
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, Value)> {
        self.schema
            .names
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }
}

/// A non-empty, non-decreasing sequence of timed states over one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedStateSequence {
    events: Vec<TimedState>,
}

impl TimedStateSequence {
    pub fn new(events: Vec<TimedState>) -> Result<Self, TraceError> {
        let mut check = Validator::default();
        for (k, e) in events.iter().enumerate() {
            if e.schema != events[0].schema {
                return Err(TraceError::Schema {
                    row: k + 1,
                    message: "variables differ from the first event".into(),
                });
            }
            check.admit(k + 1, e)?;
        }
        if events.is_empty() {
            return Err(TraceError::Empty);
        }
        Ok(TimedStateSequence { events })
    }

    pub fn events(&self) -> &[TimedState] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The event at 1-based index `i`.
    pub fn at(&self, i: usize) -> Option<&TimedState> {
        i.checked_sub(1).and_then(|k| self.events.get(k))
    }

    pub fn prefix(&self, len: usize) -> TimedStateSequence {
        TimedStateSequence {
            events: self.events[..len.clamp(1, self.events.len())].to_vec(),
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        self.events[0].schema()
    }
}

#[derive(Default)]
struct Validator {
    previous: Option<f64>,
    kinds: Vec<&'static str>,
}

impl Validator {
    fn admit(&mut self, row: usize, e: &TimedState) -> Result<(), TraceError> {
        if !e.tau.is_finite() {
            return Err(TraceError::Parse {
                row,
                column: "time".into(),
                message: format!("timestamp {} is not finite", e.tau),
            });
        }
        if let Some(previous) = self.previous {
            if e.tau < previous {
                return Err(TraceError::NonMonotonic {
                    row,
                    previous,
                    time: e.tau,
                });
            }
        }
        self.previous = Some(e.tau);
        if self.kinds.is_empty() {
            self.kinds = e.values.iter().map(Value::kind).collect();
            return Ok(());
        }
        for ((name, value), kind) in e.vars().zip(&self.kinds) {
            if value.kind() != *kind {
                return Err(TraceError::Schema {
                    row,
                    message: format!("variable `{name}` changed from {kind} to {}", value.kind()),
                });
            }
        }
        Ok(())
    }
}

fn parse_cell(row: usize, column: &str, cell: &str) -> Result<Value, TraceError> {
    match cell.trim() {
        "true" => Ok(Value::Bool(true)),
        "false" => Ok(Value::Bool(false)),
        text => text
            .parse::<f64>()
            .ok()
            .filter(|x| !x.is_nan())
            .map(Value::Num)
            .ok_or_else(|| TraceError::Parse {
                row,
                column: column.to_string(),
                message: format!("`{text}` is neither a number nor true/false"),
            }),
    }
}

/// Streams validated events out of a CSV or JSONL source.
pub struct TraceReader<R: Read> {
    inner: Source<R>,
    schema: Option<Arc<Schema>>,
    validator: Validator,
    row: usize,
    done: bool,
}

enum Source<R: Read> {
    Csv(csv::Reader<R>, csv::StringRecord),
    Jsonl(BufReader<R>, String),
}

impl<R: Read> TraceReader<R> {
    pub fn new(input: R, format: TraceFormat) -> Result<Self, TraceError> {
        let (inner, schema) = match format {
            TraceFormat::Csv => {
                let mut reader = csv::ReaderBuilder::new()
                    .has_headers(true)
                    .trim(csv::Trim::All)
                    .from_reader(input);
                let header = reader.headers().map_err(csv_error)?.clone();
                if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
                    return Err(TraceError::Empty);
                }
                if &header[0] != "time" {
                    return Err(TraceError::Header(format!(
                        "first column must be `time`, found `{}`",
                        &header[0]
                    )));
                }
                let names = header.iter().skip(1).map(str::to_string).collect();
                let schema = Schema::new(names).map_err(TraceError::Header)?;
                (
                    Source::Csv(reader, csv::StringRecord::new()),
                    Some(Arc::new(schema)),
                )
            }
            TraceFormat::Jsonl => (Source::Jsonl(BufReader::new(input), String::new()), None),
        };
        Ok(TraceReader {
            inner,
            schema,
            validator: Validator::default(),
            row: 0,
            done: false,
        })
    }

    /// Data rows read so far; the first data row is row 1.
    pub fn rows_read(&self) -> usize {
        self.row
    }

    fn read_event(&mut self) -> Result<Option<TimedState>, TraceError> {
        let event = match &mut self.inner {
            Source::Csv(reader, record) => {
                if !reader.read_record(record).map_err(csv_error)? {
                    return Ok(None);
                }
                self.row += 1;
                let row = self.row;
                let schema = self
                    .schema
                    .clone()
                    .expect("csv schema comes from the header");
                if record.len() != schema.len() + 1 {
                    return Err(TraceError::Schema {
                        row,
                        message: format!(
                            "expected {} cells, found {}",
                            schema.len() + 1,
                            record.len()
                        ),
                    });
                }
                let tau = match parse_cell(row, "time", &record[0])? {
                    Value::Num(t) => t,
                    Value::Bool(_) => {
                        return Err(TraceError::Parse {
                            row,
                            column: "time".into(),
                            message: "timestamp must be a number".into(),
                        })
                    }
                };
                let values = schema
                    .names()
                    .iter()
                    .zip(record.iter().skip(1))
                    .map(|(name, cell)| parse_cell(row, name, cell))
                    .collect::<Result<Vec<_>, _>>()?;
                TimedState::new(tau, schema, values)
            }
            Source::Jsonl(reader, line) => loop {
                line.clear();
                if reader.read_line(line)? == 0 {
                    return Ok(None);
                }
                self.row += 1;
                if !line.trim().is_empty() {
                    break json_event(self.row, line, &mut self.schema)?;
                }
            },
        };
        self.validator.admit(self.row, &event)?;
        Ok(Some(event))
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<TimedState, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self.read_event().transpose();
        if !matches!(out, Some(Ok(_))) {
            self.done = true;
        }
        out
    }
}

fn json_event(
    row: usize,
    line: &str,
    schema: &mut Option<Arc<Schema>>,
) -> Result<TimedState, TraceError> {
    let parse_err = |column: &str, message: String| TraceError::Parse {
        row,
        column: column.to_string(),
        message,
    };
    let object = match serde_json::from_str::<Json>(line) {
        Ok(Json::Object(map)) => map,
        Ok(_) => return Err(parse_err("-", "line is not a JSON object".into())),
        Err(e) => return Err(parse_err("-", e.to_string())),
    };
    let tau = match object.get("time") {
        Some(Json::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
        Some(_) => return Err(parse_err("time", "timestamp must be a number".into())),
        None => {
            return Err(TraceError::Schema {
                row,
                message: "missing `time` key".into(),
            })
        }
    };
    let schema = match schema {
        Some(s) => s.clone(),
        None => {
            let names = object.keys().filter(|k| *k != "time").cloned().collect();
            let s = Arc::new(
                Schema::new(names).map_err(|message| TraceError::Schema { row, message })?,
            );
            *schema = Some(s.clone());
            s
        }
    };
    if object.len() != schema.len() + 1 {
        let extra: Vec<_> = object
            .keys()
            .filter(|k| *k != "time" && schema.position(k).is_none())
            .cloned()
            .collect();
        let missing: Vec<_> = schema
            .names()
            .iter()
            .filter(|n| !object.contains_key(*n))
            .cloned()
            .collect();
        return Err(TraceError::Schema {
            row,
            message: format!("unexpected variables {extra:?}, missing variables {missing:?}"),
        });
    }
    let values = schema
        .names()
        .iter()
        .map(|name| match object.get(name) {
            Some(Json::Bool(b)) => Ok(Value::Bool(*b)),
            Some(Json::Number(n)) => Ok(Value::Num(n.as_f64().unwrap_or(f64::NAN))),
            Some(other) => Err(parse_err(name, format!("unsupported value {other}"))),
            None => Err(TraceError::Schema {
                row,
                message: format!("missing variable `{name}`"),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TimedState::new(tau, schema, values))
}

fn csv_error(e: csv::Error) -> TraceError {
    let row = e
        .position()
        .map(|p| (p.line() as usize).saturating_sub(1))
        .unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TraceError::Io(io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => TraceError::Schema {
            row,
            message: format!("expected {expected_len} cells, found {len}"),
        },
        other => TraceError::Parse {
            row,
            column: "-".into(),
            message: format!("{other:?}"),
        },
    }
}

/// Reads a whole trace into memory.
pub fn parse_trace<R: Read>(
    input: R,
    format: TraceFormat,
) -> Result<TimedStateSequence, TraceError> {
    let events = TraceReader::new(input, format)?.collect::<Result<Vec<_>, _>>()?;
    if events.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(TimedStateSequence { events })
}

/// Writes a trace in the given format. Numbers use the shortest
/// representation that reads back to the same value.
pub fn write_trace<W: Write>(
    out: W,
    trace: &TimedStateSequence,
    format: TraceFormat,
) -> Result<(), TraceError> {
    write_events(out, trace.schema(), trace.events(), format)
}

pub fn write_events<W: Write>(
    mut out: W,
    schema: &Schema,
    events: &[TimedState],
    format: TraceFormat,
) -> Result<(), TraceError> {
    match format {
        TraceFormat::Csv => {
            write!(out, "time")?;
            for name in schema.names() {
                write!(out, ",{name}")?;
            }
            writeln!(out)?;
            for e in events {
                write!(out, "{}", e.tau)?;
                for v in e.values() {
                    write!(out, ",{v}")?;
                }
                writeln!(out)?;
            }
        }
        TraceFormat::Jsonl => {
            for e in events {
                let mut map = serde_json::Map::new();
                map.insert("time".into(), json_number(e.tau));
                for (name, v) in e.vars() {
                    let v = match v {
                        Value::Num(x) => json_number(x),
                        Value::Bool(b) => Json::Bool(b),
                    };
                    map.insert(name.to_string(), v);
                }
                serde_json::to_writer(&mut out, &Json::Object(map))
                    .map_err(std::io::Error::from)?;
                writeln!(out)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn json_number(x: f64) -> Json {
    serde_json::Number::from_f64(x)
        .map(Json::Number)
        .unwrap_or(Json::Null)
}
