//! Fixed-step closed-loop simulation of the tank-pump process.
//!
//! Each scan reads the plant into the process image, runs the control
//! program (PID blocks), then the driver program if any, then the safety
//! program, which has the last word on shared actuators. The resulting valve
//! and pump commands are applied and the plant advances one Euler step.
//!
//! Plant tags: `x1` level (%), `x2` discharge pressure (bar), `v1` inlet
//! valve command (%), `u` pump run command.

pub mod exec;
pub mod monitor;
pub mod pid;
pub mod plant;
pub mod trace;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use exec::{execute, execute_logic, ExecEnv, Tags};
pub use monitor::monitor_invariant;
pub use pid::{pid_step, PidState};
pub use plant::{plant_step, PlantParams, PlantState};
pub use trace::{EventKind, Sample, SimTrace, ViolationEvent};

use crate::model::{extract_controllers, extract_invariants, ModelError, SafetyInvariant};
use crate::st::eval::eval_bool;
use crate::st::{DataType, Program, VarKind};

pub const TAG_LEVEL: &str = "x1";
pub const TAG_PRESSURE: &str = "x2";
pub const TAG_VALVE: &str = "v1";
pub const TAG_PUMP: &str = "u";

const PLANT_TAGS: [(&str, DataType); 4] = [
    (TAG_LEVEL, DataType::Real),
    (TAG_PRESSURE, DataType::Real),
    (TAG_VALVE, DataType::Real),
    (TAG_PUMP, DataType::Bool),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown tag '{0}'")]
    UnknownTag(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("trace lengths differ ({left} vs {right} samples)")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trace csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioMode {
    Baseline,
    Disruption,
    Hazard,
    Dormant,
}

impl ScenarioMode {
    pub const ALL: [ScenarioMode; 4] = [
        ScenarioMode::Baseline,
        ScenarioMode::Disruption,
        ScenarioMode::Hazard,
        ScenarioMode::Dormant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioMode::Baseline => "baseline",
            ScenarioMode::Disruption => "disruption",
            ScenarioMode::Hazard => "hazard",
            ScenarioMode::Dormant => "dormant",
        }
    }

    /// Whether the safety payload waits for the trigger state before it
    /// replaces the original safety program. A disruption payload is live
    /// from the first scan; hazard and dormant payloads launch on the first
    /// scan whose sensor readings satisfy an invariant predicate, so the
    /// original logic keeps running while the state is being driven there.
    pub fn payload_armed(self) -> bool {
        matches!(self, ScenarioMode::Hazard | ScenarioMode::Dormant)
    }
}

/// Uniform sensor noise in `[-amplitude, amplitude]` on `x1` and `x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoise {
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// The original safety program; its invariants define the monitored
    /// predicate in every mode.
    pub safety_program: Program,
    /// Replacement safety program; see [`ScenarioMode::payload_armed`] for
    /// when it takes over.
    pub safety_payload: Option<Program>,
    pub control_program: Program,
    pub driver_program: Option<Program>,
    pub plant: PlantParams,
    pub initial: PlantState,
    pub duration: f64,
    pub dt: f64,
    pub mode: ScenarioMode,
    pub noise: Option<SensorNoise>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return bad(format!("dt must be in (0, 1], got {}", self.dt));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return bad(format!(
                "duration must be at least dt, got {}",
                self.duration
            ));
        }
        if self.driver_program.is_some() != (self.mode == ScenarioMode::Hazard) {
            return bad("a driver program is required in hazard mode and only there".into());
        }
        let needs_payload = self.mode != ScenarioMode::Baseline;
        if self.safety_payload.is_some() != needs_payload {
            return bad(format!(
                "{} mode {} a safety payload",
                self.mode.name(),
                if needs_payload {
                    "requires"
                } else {
                    "does not take"
                }
            ));
        }
        self.plant.validate().map_err(SimError::InvalidScenario)?;
        let s = &self.initial;
        if !(0.0..=100.0).contains(&s.level)
            || !(0.0..=100.0).contains(&s.valve)
            || s.pressure < 0.0
        {
            return bad("initial plant state out of range".into());
        }
        if let Some(n) = self.noise {
            if !(n.amplitude.is_finite() && n.amplitude >= 0.0) {
                return bad(format!(
                    "noise amplitude must be nonnegative, got {}",
                    n.amplitude
                ));
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize + 1
    }

    fn programs(&self) -> impl Iterator<Item = &Program> {
        [
            Some(&self.safety_program),
            self.safety_payload.as_ref(),
            Some(&self.control_program),
            self.driver_program.as_ref(),
        ]
        .into_iter()
        .flatten()
    }
}

/// Builds the initial process image and rejects declarations that name
/// neither a plant tag nor an operator/environmental variable.
fn initial_tags(sc: &ScenarioConfig) -> Result<Tags, SimError> {
    let mut tags = Tags::new();
    tags.insert(TAG_LEVEL.into(), sc.initial.level);
    tags.insert(TAG_PRESSURE.into(), sc.initial.pressure);
    tags.insert(TAG_VALVE.into(), sc.initial.valve);
    tags.insert(TAG_PUMP.into(), f64::from(u8::from(sc.initial.pump_on)));

    for p in sc.programs() {
        for d in &p.decls {
            if d.dtype == DataType::Pid {
                continue;
            }
            if let Some((_, ty)) = PLANT_TAGS.iter().find(|(n, _)| *n == d.name) {
                if *ty != d.dtype {
                    return Err(SimError::UnknownTag(format!(
                        "{} declared {} in {}, plant provides {}",
                        d.name,
                        d.dtype.keyword(),
                        p.name,
                        ty.keyword()
                    )));
                }
                continue;
            }
            match d.kind {
                VarKind::Operator | VarKind::Environmental => {
                    let init = d.init.as_ref().map_or(0.0, |l| l.value());
                    tags.entry(d.name.clone()).or_insert(init);
                }
                _ => return Err(SimError::UnknownTag(d.name.clone())),
            }
        }
    }
    Ok(tags)
}

fn extra_tags(tags: &Tags) -> BTreeMap<String, f64> {
    tags.iter()
        .filter(|(k, _)| !PLANT_TAGS.iter().any(|(n, _)| n == k))
        .map(|(k, v)| (k.clone(), *v))
        .collect()
}

/// Invariants of a safety program, or none when it has no matching IF.
pub fn monitored_invariants(safety: &Program) -> Vec<SafetyInvariant> {
    extract_invariants(safety).map_or_else(|_| Vec::new(), |e| e.invariants)
}

pub fn run_closed_loop(sc: &ScenarioConfig) -> Result<SimTrace, SimError> {
    sc.validate()?;
    let mut tags = initial_tags(sc)?;
    let controllers = extract_controllers(&sc.control_program)?;
    let mut env = ExecEnv::new(sc.dt, &controllers);
    if let Some(driver) = &sc.driver_program {
        env.overridden = exec::assigned_targets(driver);
    }
    let mut driver_env = ExecEnv::new(sc.dt, &[]);
    let mut safety_env = ExecEnv::new(sc.dt, &[]);
    let mut launched = !sc.mode.payload_armed();
    let invariants = monitored_invariants(&sc.safety_program);
    let pid_out_tag = controllers.first().map(|c| c.out_target.clone());
    let mut rng = sc
        .noise
        .map(|n| (n.amplitude, ChaCha8Rng::seed_from_u64(n.seed)));

    let n = sc.sample_count();
    let mut state = sc.initial;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * sc.dt;
        let (noise_level, noise_pressure) = match &mut rng {
            Some((a, r)) if *a > 0.0 => (r.gen_range(-*a..=*a), r.gen_range(-*a..=*a)),
            _ => (0.0, 0.0),
        };
        tags.insert(TAG_LEVEL.into(), state.level + noise_level);
        tags.insert(TAG_PRESSURE.into(), state.pressure + noise_pressure);

        execute(&sc.control_program, &mut tags, &mut env)?;
        if let Some(driver) = &sc.driver_program {
            execute(driver, &mut tags, &mut driver_env)?;
        }
        let pid_out = pid_out_tag
            .as_ref()
            .and_then(|t| tags.get(t).copied())
            .unwrap_or(0.0);
        if !launched {
            let lookup = |name: &str| tags.get(name).copied();
            for inv in &invariants {
                launched |=
                    eval_bool(&inv.predicate, &lookup).map_err(|u| SimError::UnknownTag(u.0))?;
            }
        }
        let safety = match &sc.safety_payload {
            Some(payload) if launched => payload,
            _ => &sc.safety_program,
        };
        execute(safety, &mut tags, &mut safety_env)?;

        state.valve = tags[TAG_VALVE].clamp(0.0, 100.0);
        state.pump_on = tags[TAG_PUMP] != 0.0;

        // Monitoring sees the plant itself, not the sensor readings.
        tags.insert(TAG_LEVEL.into(), state.level);
        tags.insert(TAG_PRESSURE.into(), state.pressure);
        let lookup = |name: &str| tags.get(name).copied();
        let mut p_truth = false;
        for inv in &invariants {
            p_truth |= eval_bool(&inv.predicate, &lookup).map_err(|u| SimError::UnknownTag(u.0))?;
        }

        samples.push(Sample {
            t,
            level: state.level,
            pressure: state.pressure,
            valve: state.valve,
            pump_on: state.pump_on,
            p_truth,
            pid_out,
            extra: extra_tags(&tags),
        });
        state = plant_step(&state, &sc.plant, sc.dt);
    }

    let mut trace = SimTrace {
        dt: sc.dt,
        samples,
        events: Vec::new(),
    };
    let mut events = Vec::new();
    for inv in &invariants {
        events.extend(monitor_invariant(&trace, inv, None)?);
    }
    trace.add_events(events);
    Ok(trace)
}
