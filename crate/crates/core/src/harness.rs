//! End-to-end experiments: synthesize payloads, run the baseline and the
//! attacked scenario side by side, and summarise the impact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{extract_invariants, ModelError};
use crate::sim::{
    monitor_invariant, run_closed_loop, EventKind, PlantParams, PlantState, ScenarioConfig,
    ScenarioMode, SensorNoise, SimError, SimTrace,
};
use crate::st::{parse_program, ParseError, Program, Role, SourceFile};
use crate::synth::{synthesize, DriverPlan, Mode, SynthError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse stage: cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("parse stage: {path}:{source}")]
    Parse { path: String, source: ParseError },
    #[error("extract stage: {0}")]
    Extract(ModelError),
    #[error("synth stage: {0}")]
    Synth(SynthError),
    #[error("simulate stage: {0}")]
    Simulate(SimError),
    #[error("report stage: {0}")]
    Report(String),
}

impl HarnessError {
    pub fn stage(&self) -> &'static str {
        match self {
            HarnessError::Read { .. } | HarnessError::Parse { .. } => "parse",
            HarnessError::Extract(_) => "extract",
            HarnessError::Synth(_) => "synth",
            HarnessError::Simulate(_) => "simulate",
            HarnessError::Report(_) => "report",
        }
    }
}

impl From<SynthError> for HarnessError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Model(m) => HarnessError::Extract(m),
            other => HarnessError::Synth(other),
        }
    }
}

pub fn load_source(path: &Path, role: Role) -> Result<SourceFile, HarnessError> {
    let body = fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.display().to_string(),
        source,
    })?;
    Ok(SourceFile::new(path.display().to_string(), body, role))
}

pub fn parse_source(src: &SourceFile) -> Result<Program, HarnessError> {
    parse_program(src).map_err(|source| HarnessError::Parse {
        path: src.path.clone(),
        source,
    })
}

/// Plant configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    #[serde(flatten)]
    pub plant: PlantParams,
    /// Initial tank level, %.
    pub level0: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            plant: PlantParams::default(),
            level0: 50.0,
            duration: 3600.0,
            dt: 0.1,
        }
    }
}

impl PlantConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub mode: ScenarioMode,
    pub safety: SourceFile,
    pub control: SourceFile,
    pub config: PlantConfig,
    pub synth_mode: Mode,
    pub noise: Option<SensorNoise>,
    /// Directory receiving the trace CSVs; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub throughput_loss: f64,
    pub time_to_hazard: Option<f64>,
    pub disruption_onset: Option<f64>,
}

/// Compares an attacked trace against a baseline of the same length and step.
/// Outflow is proportional to the pump run state, so the flow constant cancels.
pub fn compute_metrics(baseline: &SimTrace, attacked: &SimTrace) -> Result<Metrics, SimError> {
    if baseline.samples.len() != attacked.samples.len()
        || (baseline.dt - attacked.dt).abs() > 1e-9 * baseline.dt.abs().max(1.0)
    {
        return Err(SimError::LengthMismatch {
            left: baseline.samples.len(),
            right: attacked.samples.len(),
        });
    }
    let pumped = |t: &SimTrace| t.samples.iter().filter(|s| s.pump_on).count() as f64;
    let base = pumped(baseline);
    let throughput_loss = if base > 0.0 {
        (1.0 - pumped(attacked) / base).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(Metrics {
        throughput_loss,
        time_to_hazard: attacked.first_event(EventKind::Hazard),
        disruption_onset: attacked.first_event(EventKind::DisruptionOnset),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub mode: ScenarioMode,
    pub hazard_occurred: bool,
    #[serde(rename = "time_to_hazard_s")]
    pub time_to_hazard: Option<f64>,
    #[serde(rename = "disruption_onset_s")]
    pub disruption_onset: Option<f64>,
    pub throughput_loss: f64,
    pub plan: Option<DriverPlan>,
    #[serde(rename = "traces")]
    pub trace_paths: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub baseline: SimTrace,
    #[serde(skip)]
    pub attacked: SimTrace,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn run_scenario(sc: &Scenario) -> Result<Report, HarnessError> {
    let safety = parse_source(&sc.safety)?;
    let control = parse_source(&sc.control)?;
    let extraction = extract_invariants(&safety).map_err(HarnessError::Extract)?;

    let mut warnings = Vec::new();
    let mut plan = None;
    let (payload, driver) = match sc.mode {
        ScenarioMode::Baseline => (None, None),
        mode => {
            let art = synthesize(&safety, &control, sc.synth_mode)?;
            warnings.extend(art.plan.warnings.iter().cloned());
            if mode == ScenarioMode::Hazard {
                plan = Some(art.plan);
                (Some(art.f_ms), Some(art.f_mc))
            } else {
                (Some(art.f_ms), None)
            }
        }
    };

    let cfg = &sc.config;
    let base_cfg = ScenarioConfig {
        safety_program: safety,
        safety_payload: None,
        control_program: control,
        driver_program: None,
        plant: cfg.plant,
        initial: PlantState::at_level(cfg.level0),
        duration: cfg.duration,
        dt: cfg.dt,
        mode: ScenarioMode::Baseline,
        noise: sc.noise,
    };
    let attack_cfg = ScenarioConfig {
        safety_payload: payload,
        driver_program: driver,
        mode: sc.mode,
        ..base_cfg.clone()
    };

    let (baseline, attacked) = if sc.mode == ScenarioMode::Baseline {
        let b = run_closed_loop(&base_cfg).map_err(HarnessError::Simulate)?;
        (b.clone(), b)
    } else {
        let (b, a) = std::thread::scope(|s| {
            let b = s.spawn(|| run_closed_loop(&base_cfg));
            let a = run_closed_loop(&attack_cfg);
            (b.join().expect("baseline run panicked"), a)
        });
        (
            b.map_err(HarnessError::Simulate)?,
            a.map_err(HarnessError::Simulate)?,
        )
    };

    let mut attacked = attacked;
    if sc.mode != ScenarioMode::Baseline {
        let mut onsets = Vec::new();
        for inv in &extraction.invariants {
            let events = monitor_invariant(&attacked, inv, Some(&baseline))
                .map_err(HarnessError::Simulate)?;
            onsets.extend(
                events
                    .into_iter()
                    .filter(|e| e.kind == EventKind::DisruptionOnset),
            );
        }
        if let Some(first) = onsets.into_iter().min_by(|a, b| a.t.total_cmp(&b.t)) {
            attacked.add_events([first]);
        }
    }

    if sc.mode == ScenarioMode::Dormant && !attacked.samples.iter().any(|s| s.p_truth) {
        warnings.push("trigger state never occurred; the dormant payload stayed inactive".into());
    }

    let metrics = compute_metrics(&baseline, &attacked).map_err(HarnessError::Simulate)?;

    let mut trace_paths = Vec::new();
    if let Some(dir) = &sc.out_dir {
        fs::create_dir_all(dir)
            .map_err(|e| HarnessError::Report(format!("{}: {e}", dir.display())))?;
        let mut write = |name: String, trace: &SimTrace| -> Result<(), HarnessError> {
            let path = dir.join(name);
            fs::write(&path, trace.to_csv_string())
                .map_err(|e| HarnessError::Report(format!("{}: {e}", path.display())))?;
            trace_paths.push(path.display().to_string());
            Ok(())
        };
        write("baseline.csv".into(), &baseline)?;
        if sc.mode != ScenarioMode::Baseline {
            write(format!("{}.csv", sc.mode.name()), &attacked)?;
        }
    }

    Ok(Report {
        mode: sc.mode,
        hazard_occurred: metrics.time_to_hazard.is_some(),
        time_to_hazard: metrics.time_to_hazard,
        disruption_onset: metrics.disruption_onset,
        throughput_loss: metrics.throughput_loss,
        plan,
        trace_paths,
        warnings,
        baseline,
        attacked,
    })
}
