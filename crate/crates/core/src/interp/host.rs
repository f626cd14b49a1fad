//! The host surface the interpreter drives: a step clock, digital pins, and
//! the CSV formats shared by schedules and traces.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

/// One row of a schedule or trace: `time_ms,pin,level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PinEvent {
    pub time_ms: u32,
    pub pin: i32,
    pub level: u8,
}

impl PinEvent {
    pub fn new(time_ms: u32, pin: i32, level: u8) -> Self {
        PinEvent { time_ms, pin, level }
    }
}

/// Callbacks for the primitives the stdlib implements with inline C++.
pub trait HostHooks {
    /// Consumes one scheduler step. Called at the top of every `while` and
    /// `do ... while` iteration; returning false ends the run cleanly.
    fn step(&mut self) -> bool;
    /// Milliseconds since start; never decreases within a run.
    fn now(&mut self) -> u32;
    /// 0 for low, 1 for high.
    fn read_pin(&mut self, pin: i32) -> u8;
    fn write_pin(&mut self, pin: i32, level: u8);
    fn set_pin_mode(&mut self, _pin: i32, _mode: &str) {}
}

/// Simulated board. Step `k` (counting from zero) happens at `k * tick_ms`;
/// after `budget` steps the next `step` call stops the run.
#[derive(Clone, Debug)]
pub struct SimHost {
    tick_ms: u32,
    budget: u64,
    steps: u64,
    now: u32,
    schedule: Vec<PinEvent>,
    modes: BTreeMap<i32, String>,
    trace: Vec<PinEvent>,
}

impl SimHost {
    pub fn new(tick_ms: u32, budget: u64, mut schedule: Vec<PinEvent>) -> Self {
        schedule.sort_by_key(|e| e.time_ms);
        SimHost { tick_ms, budget, steps: 0, now: 0, schedule, modes: BTreeMap::new(), trace: Vec::new() }
    }

    /// Runs steps at `0, tick, 2*tick, ...` up to and including `horizon_ms`.
    pub fn with_horizon(tick_ms: u32, horizon_ms: u32, schedule: Vec<PinEvent>) -> Self {
        let budget = horizon_ms.checked_div(tick_ms).map_or(1, |n| u64::from(n) + 1);
        SimHost::new(tick_ms, budget, schedule)
    }

    pub fn trace(&self) -> &[PinEvent] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<PinEvent> {
        self.trace
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn pin_mode(&self, pin: i32) -> Option<&str> {
        self.modes.get(&pin).map(String::as_str)
    }
}

impl HostHooks for SimHost {
    fn step(&mut self) -> bool {
        if self.steps >= self.budget {
            return false;
        }
        let t = self.steps.saturating_mul(u64::from(self.tick_ms));
        self.now = u32::try_from(t).unwrap_or(u32::MAX);
        self.steps += 1;
        true
    }

    fn now(&mut self) -> u32 {
        self.now
    }

    fn read_pin(&mut self, pin: i32) -> u8 {
        // Unscheduled pins read low.
        self.schedule.iter().rev().find(|e| e.pin == pin && e.time_ms <= self.now).map_or(0, |e| e.level)
    }

    fn write_pin(&mut self, pin: i32, level: u8) {
        self.trace.push(PinEvent::new(self.now, pin, level));
    }

    fn set_pin_mode(&mut self, pin: i32, mode: &str) {
        self.modes.insert(pin, mode.to_string());
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("malformed schedule: {0}")]
    Csv(#[from] csv::Error),
    #[error("schedule row {row}: level must be 0 or 1, found {level}")]
    Level { row: usize, level: u8 },
}

/// Reads `time_ms,pin,level` rows after a header line.
pub fn read_schedule<R: io::Read>(reader: R) -> Result<Vec<PinEvent>, ScheduleError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize().enumerate() {
        let ev: PinEvent = row?;
        if ev.level > 1 {
            return Err(ScheduleError::Level { row: i + 1, level: ev.level });
        }
        out.push(ev);
    }
    Ok(out)
}

/// Writes `time_ms,pin,level` rows after a header line. The header is
/// written even when there are no events.
pub fn write_trace<W: io::Write>(writer: W, events: &[PinEvent]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if events.is_empty() {
        w.write_record(["time_ms", "pin", "level"])?;
    }
    for e in events {
        w.serialize(e)?;
    }
    w.flush()
}

pub fn trace_to_string(events: &[PinEvent]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, events).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_advance_by_tick_until_budget() {
        let mut h = SimHost::new(100, 3, vec![]);
        let times: Vec<u32> = std::iter::from_fn(|| h.step().then(|| h.now())).collect();
        assert_eq!(times, [0, 100, 200]);
        assert!(!h.step());
    }

    #[test]
    fn horizon_includes_its_endpoint() {
        let mut h = SimHost::with_horizon(100, 10_000, vec![]);
        let mut last = 0;
        while h.step() {
            last = h.now();
        }
        assert_eq!(last, 10_000);
        assert_eq!(h.steps_taken(), 101);
    }

    #[test]
    fn reads_follow_the_schedule() {
        let mut h = SimHost::new(100, 100, vec![PinEvent::new(1500, 7, 1)]);
        for _ in 0..15 {
            h.step();
        }
        assert_eq!(h.now(), 1400);
        assert_eq!(h.read_pin(7), 0);
        h.step();
        assert_eq!(h.read_pin(7), 1);
        assert_eq!(h.read_pin(8), 0);
    }

    #[test]
    fn csv_round_trip() {
        let evs = vec![PinEvent::new(0, 2, 1), PinEvent::new(1500, 2, 0)];
        let text = trace_to_string(&evs);
        assert_eq!(text, "time_ms,pin,level\n0,2,1\n1500,2,0\n");
        assert_eq!(read_schedule(text.as_bytes()).unwrap(), evs);
        assert_eq!(trace_to_string(&[]), "time_ms,pin,level\n");
    }

    #[test]
    fn bad_levels_are_rejected() {
        let err = read_schedule("time_ms,pin,level\n0,2,5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ScheduleError::Level { row: 1, level: 5 }));
        assert!(read_schedule("time_ms,pin,level\nx,2,1\n".as_bytes()).is_err());
    }
}
