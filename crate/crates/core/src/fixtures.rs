//! Synthetic autoclave case study: a 26-requirement specification, a clean
//! trace, and fault-injection traces with their expected violations.
//!
//! Variables follow piecewise-linear profiles sampled once per second over
//! `0..=600` s. Every value is an integer number of thousandths, so each
//! threshold crossing happens at a known whole second.

use std::sync::Arc;

use serde::Serialize;

use crate::spec::{parse_spec, RequirementSet};
use crate::trace::{Schema, TimedState, TimedStateSequence, Value};

/// Requirements over the autoclave variables: 20 limits, 5 timed orders and
/// one delayed order.
pub const SPEC: &str = r#"# Synthetic pressure-leaching autoclave.
#
# Limits: the variable must always stay within its band.
prop p_pressure := pressure in [27.9, 28.1];
prop p_temp_c1 := temp_c1 in [215, 225];
prop p_temp_c2 := temp_c2 in [215, 225];
prop p_temp_c3 := temp_c3 in [215, 225];
prop p_temp_c4 := temp_c4 in [215, 225];
prop p_temp_c5 := temp_c5 in [215, 225];
prop p_o2_pressure := o2_pressure in [4.5, 5.5];
prop p_acid_conc := acid_conc in [40, 50];
prop p_level_max := level_c5 <= 3.0;
prop p_level_min := level_c5 >= 0.5;
prop p_slurry_feed := slurry_feed_flow in [40, 60];
prop p_offgas_flow := offgas_flow in [0.5, 3.0];
prop p_steam_flow_c1 := steam_flow_c1 <= 12;
prop p_steam_flow_c3 := steam_flow_c3 <= 12;
prop p_oxygen_flow_c1 := oxygen_flow_c1 <= 8;
prop p_oxygen_flow_c3 := oxygen_flow_c3 <= 8;
prop p_discharge_flow := discharge_flow in [35, 65];
prop p_agitator_speed := agitator_speed >= 80;
prop p_flash_level := flash_level in [0.5, 2.5];
prop p_cooling_water := cooling_water_flow >= 20;

req r_pressure := G p_pressure;
req r_temp_c1 := G p_temp_c1;
req r_temp_c2 := G p_temp_c2;
req r_temp_c3 := G p_temp_c3;
req r_temp_c4 := G p_temp_c4;
req r_temp_c5 := G p_temp_c5;
req r_o2_pressure := G p_o2_pressure;
req r_acid_conc := G p_acid_conc;
req r_level_max := G p_level_max;
req r_level_min := G p_level_min;
req r_slurry_feed := G p_slurry_feed;
req r_offgas_flow := G p_offgas_flow;
req r_steam_flow_c1 := G p_steam_flow_c1;
req r_steam_flow_c3 := G p_steam_flow_c3;
req r_oxygen_flow_c1 := G p_oxygen_flow_c1;
req r_oxygen_flow_c3 := G p_oxygen_flow_c3;
req r_discharge_flow := G p_discharge_flow;
req r_agitator_speed := G p_agitator_speed;
req r_flash_level := G p_flash_level;
req r_cooling_water := G p_cooling_water;

# Timed orders: when the condition starts, the valve must close within 60 s.
prop p_steam_dp_c1_low := steam_dp_c1 < 0.1;
prop p_steam_dp_c3_low := steam_dp_c3 < 0.1;
prop p_o2_pressure_high := o2_pressure > 5.3;
prop p_temp_c2_high := temp_c2 > 223;
prop p_level_high := level_c5 > 2.8;
prop p_steam_valve_c1_closed := steam_valve_c1_closed = true;
prop p_steam_valve_c2_closed := steam_valve_c2_closed = true;
prop p_steam_valve_c3_closed := steam_valve_c3_closed = true;
prop p_oxygen_valve_c1_closed := oxygen_valve_c1_closed = true;
prop p_inlet_valve_closed := inlet_valve_closed = true;

req r_steam_valve_c1 := timedTrigger[0,60](p_steam_dp_c1_low, p_steam_valve_c1_closed);
req r_steam_valve_c3 := timedTrigger[0,60](p_steam_dp_c3_low, p_steam_valve_c3_closed);
req r_oxygen_valve_c1 := timedTrigger[0,60](p_o2_pressure_high, p_oxygen_valve_c1_closed);
req r_steam_valve_c2 := timedTrigger[0,60](p_temp_c2_high, p_steam_valve_c2_closed);
req r_inlet_valve := timedTrigger[0,60](p_level_high, p_inlet_valve_closed);

# Delayed order: when the level drops below 1 m the outlet valve must not
# close before 30 s, but must be closed by 60 s.
prop p_level_low := level_c5 < 1.0;
prop p_outlet_valve_closed := outlet_valve_closed = true;

req r_outlet_valve := !timedTrigger[0,30](p_level_low, p_outlet_valve_closed)
    & timedTrigger(30,60](p_level_low, p_outlet_valve_closed);
"#;

/// Trace variables, in column order.
pub const VARIABLES: [&str; 27] = [
    "pressure",
    "temp_c1",
    "temp_c2",
    "temp_c3",
    "temp_c4",
    "temp_c5",
    "o2_pressure",
    "acid_conc",
    "level_c5",
    "slurry_feed_flow",
    "offgas_flow",
    "steam_flow_c1",
    "steam_flow_c3",
    "oxygen_flow_c1",
    "oxygen_flow_c3",
    "discharge_flow",
    "agitator_speed",
    "flash_level",
    "cooling_water_flow",
    "steam_dp_c1",
    "steam_dp_c3",
    "steam_valve_c1_closed",
    "steam_valve_c2_closed",
    "steam_valve_c3_closed",
    "oxygen_valve_c1_closed",
    "inlet_valve_closed",
    "outlet_valve_closed",
];

/// Last timestamp of the clean and fault traces, in seconds.
pub const DURATION: i64 = 600;

pub fn requirement_set() -> RequirementSet {
    parse_spec(SPEC).expect("bundled specification parses")
}

pub fn schema() -> Arc<Schema> {
    Arc::new(Schema::new(VARIABLES.iter().map(|s| s.to_string()).collect()).expect("unique names"))
}

/// Plant state at one instant. Numbers are in thousandths of their unit.
#[derive(Debug, Clone)]
struct Sample {
    pressure: i64,
    temp: [i64; 5],
    o2_pressure: i64,
    acid_conc: i64,
    level_c5: i64,
    slurry_feed_flow: i64,
    offgas_flow: i64,
    steam_flow: [i64; 2],
    oxygen_flow: [i64; 2],
    discharge_flow: i64,
    agitator_speed: i64,
    flash_level: i64,
    cooling_water_flow: i64,
    steam_dp: [i64; 2],
    steam_valve_closed: [bool; 3],
    oxygen_valve_c1_closed: bool,
    inlet_valve_closed: bool,
    outlet_valve_closed: bool,
}

/// Small deterministic wobble in `-amplitude..=amplitude`.
fn ripple(t: i64, period: i64, amplitude: i64) -> i64 {
    let phase = t.rem_euclid(period);
    amplitude * (2 * phase - (period - 1)) / (period - 1)
}

/// Level of compartment 5: drains from 2 m to 0.8 m over `200..260`, holds,
/// then refills over `320..380`.
fn level_profile(t: i64) -> i64 {
    match t {
        ..=200 => 2000,
        201..=260 => 2000 - 20 * (t - 200),
        261..=320 => 800,
        321..=380 => 800 + 20 * (t - 320),
        _ => 2000,
    }
}

fn normal(t: i64) -> Sample {
    let mut temp = [0; 5];
    for (k, v) in temp.iter_mut().enumerate() {
        *v = 220_000 + ripple(t + 3 * k as i64, 13, 1200);
    }
    Sample {
        pressure: 28_000 + ripple(t, 11, 25),
        temp,
        o2_pressure: 5000 + ripple(t, 7, 60),
        acid_conc: 45_000 + ripple(t, 17, 500),
        level_c5: level_profile(t),
        slurry_feed_flow: 50_000 + ripple(t, 19, 2000),
        offgas_flow: 1500 + ripple(t, 5, 100),
        steam_flow: [10_000 + ripple(t, 23, 300), 9000 + ripple(t + 4, 23, 300)],
        oxygen_flow: [6000 + ripple(t, 29, 200), 5500 + ripple(t + 9, 29, 200)],
        discharge_flow: 50_000 + ripple(t, 31, 3000),
        agitator_speed: 95_000,
        flash_level: 1500 + ripple(t, 37, 100),
        cooling_water_flow: 30_000 + ripple(t, 41, 1000),
        steam_dp: [if (100..=150).contains(&t) { 50 } else { 500 }, 500],
        steam_valve_closed: [(130..=170).contains(&t), false, false],
        oxygen_valve_c1_closed: false,
        inlet_valve_closed: false,
        outlet_valve_closed: (296..=400).contains(&t),
    }
}

impl Sample {
    fn into_state(self, tau: f64, schema: &Arc<Schema>) -> TimedState {
        let n = |x: i64| Value::Num(x as f64 / 1000.0);
        let values = vec![
            n(self.pressure),
            n(self.temp[0]),
            n(self.temp[1]),
            n(self.temp[2]),
            n(self.temp[3]),
            n(self.temp[4]),
            n(self.o2_pressure),
            n(self.acid_conc),
            n(self.level_c5),
            n(self.slurry_feed_flow),
            n(self.offgas_flow),
            n(self.steam_flow[0]),
            n(self.steam_flow[1]),
            n(self.oxygen_flow[0]),
            n(self.oxygen_flow[1]),
            n(self.discharge_flow),
            n(self.agitator_speed),
            n(self.flash_level),
            n(self.cooling_water_flow),
            n(self.steam_dp[0]),
            n(self.steam_dp[1]),
            Value::Bool(self.steam_valve_closed[0]),
            Value::Bool(self.steam_valve_closed[1]),
            Value::Bool(self.steam_valve_closed[2]),
            Value::Bool(self.oxygen_valve_c1_closed),
            Value::Bool(self.inlet_valve_closed),
            Value::Bool(self.outlet_valve_closed),
        ];
        TimedState::new(tau, schema.clone(), values)
    }
}

/// Injected faults, after the rows of the paper's test matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fault {
    /// The off-gas valve sticks at t = 300: off-gas flow collapses, oxygen
    /// partial pressure climbs and the compartments cool.
    StuckValve,
    /// The pressure transmitter drifts upward by 1 mbar/s from t = 200.
    SensorBias,
    /// The compartment 2 thermocouple fails and reads 0 from t = 420.
    MeasurementFailure,
    /// The compartment 5 level reads 0.9 m high from t = 150.
    LevelBias,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedViolation {
    pub requirement: &'static str,
    pub time: f64,
}

impl Fault {
    pub const ALL: [Fault; 4] = [
        Fault::StuckValve,
        Fault::SensorBias,
        Fault::MeasurementFailure,
        Fault::LevelBias,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Fault::StuckValve => "stuck_valve",
            Fault::SensorBias => "sensor_bias",
            Fault::MeasurementFailure => "measurement_failure",
            Fault::LevelBias => "level_bias",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Fault::StuckValve => {
                "off-gas valve stuck from t=300: off-gas flow 0.2, O2 pressure +0.015/s, \
                 temperatures -0.1/s"
            }
            Fault::SensorBias => "pressure transmitter drifts +0.001 bar/s from t=200",
            Fault::MeasurementFailure => "compartment 2 temperature reads 0 from t=420",
            Fault::LevelBias => "compartment 5 level reads +0.9 m from t=150",
        }
    }

    /// Violated requirements and the timestamps at which they are detected.
    pub fn expected(&self) -> Vec<ExpectedViolation> {
        let v = |requirement, time| ExpectedViolation { requirement, time };
        match self {
            // Off-gas flow drops below 0.5 at once. O2 pressure passes 5.3
            // at 321, so its valve is overdue at 381, and passes 5.5 at 334.
            // Temperatures fall below 215 at 351.
            Fault::StuckValve => vec![
                v("r_offgas_flow", 300.0),
                v("r_o2_pressure", 334.0),
                v("r_temp_c1", 351.0),
                v("r_temp_c2", 351.0),
                v("r_temp_c3", 351.0),
                v("r_temp_c4", 351.0),
                v("r_temp_c5", 351.0),
                v("r_oxygen_valve_c1", 381.0),
            ],
            // 28.0 + 0.001 (t - 200) exceeds 28.1 at 301.
            Fault::SensorBias => vec![v("r_pressure", 301.0)],
            Fault::MeasurementFailure => vec![v("r_temp_c2", 420.0)],
            // The level reads 2.9 at 150 and the inlet valve never closes,
            // so the obligation expires at 210. The level never reads below
            // 1 m, so the delayed-order trigger never fires and its negated
            // conjunct can only fail once the trace ends.
            Fault::LevelBias => vec![v("r_inlet_valve", 210.0), v("r_outlet_valve", 600.0)],
        }
    }

    fn apply(&self, t: i64, s: &mut Sample) {
        match self {
            Fault::StuckValve if t >= 300 => {
                let d = t - 300;
                s.offgas_flow = 200;
                s.o2_pressure = 5000 + 15 * d;
                for v in &mut s.temp {
                    *v = 220_000 - 100 * d;
                }
            }
            Fault::SensorBias if t >= 200 => s.pressure = 28_000 + (t - 200),
            Fault::MeasurementFailure if t >= 420 => s.temp[1] = 0,
            Fault::LevelBias if t >= 150 => s.level_c5 += 900,
            _ => {}
        }
    }
}

fn trace_with(fault: Option<Fault>) -> TimedStateSequence {
    let schema = schema();
    let events = (0..=DURATION)
        .map(|t| {
            let mut s = normal(t);
            if let Some(f) = fault {
                f.apply(t, &mut s);
            }
            s.into_state(t as f64, &schema)
        })
        .collect();
    TimedStateSequence::new(events).expect("fixture trace is valid")
}

/// Normal operation; no requirement is violated.
pub fn clean_trace() -> TimedStateSequence {
    trace_with(None)
}

pub fn fault_trace(fault: Fault) -> TimedStateSequence {
    trace_with(Some(fault))
}

/// `events` one-second samples of normal operation, repeating the clean
/// profile every 600 s.
pub fn throughput_events(events: usize) -> impl Iterator<Item = TimedState> {
    let schema = schema();
    (0..events as i64).map(move |t| normal(t.rem_euclid(DURATION)).into_state(t as f64, &schema))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::RequirementClass;

    #[test]
    fn class_counts() {
        let set = requirement_set();
        let count = |c| set.requirements.iter().filter(|r| r.class == c).count();
        assert_eq!(set.len(), 26);
        assert_eq!(count(RequirementClass::Limit), 20);
        assert_eq!(count(RequirementClass::TimedOrder), 5);
        assert_eq!(count(RequirementClass::DelayedOrder), 1);
    }

    #[test]
    fn expected_names_exist() {
        let set = requirement_set();
        for f in Fault::ALL {
            for e in f.expected() {
                assert!(set.get(e.requirement).is_some(), "{}", e.requirement);
            }
        }
    }

    #[test]
    fn ripple_is_bounded() {
        for t in 0..100 {
            assert!(ripple(t, 13, 1200).abs() <= 1200);
        }
        assert_eq!(ripple(0, 11, 25), -25);
        assert_eq!(ripple(10, 11, 25), 25);
    }

    #[test]
    fn level_window() {
        let low: Vec<i64> = (0..=DURATION)
            .filter(|t| level_profile(*t) < 1000)
            .collect();
        assert_eq!((low[0], *low.last().unwrap()), (251, 329));
    }

    #[test]
    fn throughput_repeats_the_profile() {
        let events: Vec<_> = throughput_events(1300).collect();
        assert_eq!(events.len(), 1300);
        assert_eq!(events[700].values(), events[100].values());
        assert_eq!(events[1299].tau, 1299.0);
    }
}
