//! Simulation traces and their CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use super::SimError;

pub const CSV_HEADER: [&str; 8] = [
    "t", "level", "pressure", "valve", "pump_on", "P", "pid_out", "event",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Hazard,
    DisruptionOnset,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Hazard => "hazard",
            EventKind::DisruptionOnset => "disruption_onset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationEvent {
    pub t: f64,
    pub kind: EventKind,
}

/// One scan: plant state at `t` and the actuator values computed from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub level: f64,
    pub pressure: f64,
    pub valve: f64,
    pub pump_on: bool,
    /// Predicate truth on the ground-truth plant state.
    pub p_truth: bool,
    pub pid_out: f64,
    /// Operator and environmental tags at this scan.
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub dt: f64,
    pub samples: Vec<Sample>,
    pub events: Vec<ViolationEvent>,
}

impl SimTrace {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn first_event(&self, kind: EventKind) -> Option<f64> {
        self.events.iter().find(|e| e.kind == kind).map(|e| e.t)
    }

    /// Inserts events, keeping them ordered by time.
    pub fn add_events(&mut self, events: impl IntoIterator<Item = ViolationEvent>) {
        self.events.extend(events);
        self.events.sort_by(|a, b| a.t.total_cmp(&b.t));
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        let mut events = self.events.iter().peekable();
        for s in &self.samples {
            let mut labels = Vec::new();
            while let Some(e) = events.next_if(|e| e.t <= s.t + self.dt * 1e-6) {
                labels.push(e.kind.label());
            }
            out.write_record([
                format!("{:.6}", s.t),
                format!("{:.6}", s.level),
                format!("{:.6}", s.pressure),
                format!("{:.6}", s.valve),
                u8::from(s.pump_on).to_string(),
                u8::from(s.p_truth).to_string(),
                format!("{:.6}", s.pid_out),
                labels.join(";"),
            ])?;
        }
        out.flush().map_err(|e| SimError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, SimError> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(SimError::Csv(format!(
                "unexpected header '{}'",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut trace = SimTrace::default();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, SimError> {
                rec[i].trim().parse().map_err(|_| {
                    SimError::Csv(format!(
                        "row {}: bad {} value '{}'",
                        row + 2,
                        CSV_HEADER[i],
                        &rec[i]
                    ))
                })
            };
            let flag = |i: usize| -> Result<bool, SimError> {
                match rec[i].trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(SimError::Csv(format!(
                        "row {}: bad {} value '{other}'",
                        row + 2,
                        CSV_HEADER[i]
                    ))),
                }
            };
            let t = num(0)?;
            for label in rec[7].split(';').filter(|l| !l.is_empty()) {
                let kind = match label {
                    "hazard" => EventKind::Hazard,
                    "disruption_onset" => EventKind::DisruptionOnset,
                    other => {
                        return Err(SimError::Csv(format!(
                            "row {}: unknown event '{other}'",
                            row + 2
                        )))
                    }
                };
                trace.events.push(ViolationEvent { t, kind });
            }
            trace.samples.push(Sample {
                t,
                level: num(1)?,
                pressure: num(2)?,
                valve: num(3)?,
                pump_on: flag(4)?,
                p_truth: flag(5)?,
                pid_out: num(6)?,
                extra: BTreeMap::new(),
            });
        }
        if let [a, b, ..] = trace.samples.as_slice() {
            trace.dt = b.t - a.t;
        }
        Ok(trace)
    }
}
