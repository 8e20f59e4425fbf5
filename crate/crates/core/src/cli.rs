//! `invflip` command-line front end.
//!
//! Exit codes: 0 success, 1 input or domain error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::harness::{
    compute_metrics, load_source, parse_source, run_scenario, HarnessError, PlantConfig, Scenario,
};
use crate::model::model_dump;
use crate::sim::{ScenarioMode, SensorNoise, SimTrace};
use crate::st::{emit_program, Role};
use crate::synth::{synthesize, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "invflip",
    version,
    about = "Synthesize invariant-negation attack payloads from structured-text programs and replay them in a tank-pump simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a program and print its syntax tree as JSON.
    Parse(ParseArgs),
    /// Write F_ms.st, F_mc.st and plan.json for a safety/control pair.
    Synth(SynthArgs),
    /// Run a scenario against the baseline and write traces and a report.
    Simulate(SimulateArgs),
    /// Compare an attacked trace CSV with a baseline trace CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct ParseArgs {
    file: PathBuf,
    /// Print the syntax tree as JSON (the default).
    #[arg(long, conflicts_with_all = ["canonical", "model"])]
    json: bool,
    /// Print canonical structured text instead of JSON.
    #[arg(long, conflicts_with = "model")]
    canonical: bool,
    /// Treat FILE as a safety program and print extracted invariants,
    /// controllers and bindings; requires --control.
    #[arg(long, requires = "control")]
    model: bool,
    #[arg(long)]
    control: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    safety: PathBuf,
    #[arg(long)]
    control: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Force DIRECT loops to OUT_MIN and REVERSE loops to OUT_MAX
    /// regardless of the direction an atom needs.
    #[arg(long, alias = "paper-literal")]
    fixed_table: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Baseline,
    Disruption,
    Hazard,
    Dormant,
}

impl From<ScenarioArg> for ScenarioMode {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Baseline => ScenarioMode::Baseline,
            ScenarioArg::Disruption => ScenarioMode::Disruption,
            ScenarioArg::Hazard => ScenarioMode::Hazard,
            ScenarioArg::Dormant => ScenarioMode::Dormant,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    safety: PathBuf,
    #[arg(long)]
    control: PathBuf,
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// Plant configuration JSON.
    #[arg(long)]
    plant: Option<PathBuf>,
    /// Simulated time in seconds [default: 3600, or the plant file's value].
    #[arg(long)]
    duration: Option<f64>,
    /// Step in seconds [default: 0.1, or the plant file's value].
    #[arg(long)]
    dt: Option<f64>,
    /// Uniform sensor noise amplitude; requires --seed.
    #[arg(long, requires = "seed")]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, alias = "paper-literal")]
    fixed_table: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    attacked: PathBuf,
}

fn synth_mode(fixed_table: bool) -> Mode {
    if fixed_table {
        Mode::FixedTable
    } else {
        Mode::SignConsistent
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::Report(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Report(format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

/// Parses `argv` (program name first) and runs the command. Machine output
/// goes to `stdout`, diagnostics to `stderr`.
pub fn dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{}", e.render());
                EXIT_OK
            };
            return code;
        }
    };

    match run(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_DOMAIN
        }
    }
}

fn run(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), HarnessError> {
    let emit = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|e| HarnessError::Report(format!("stdout: {e}")))
    };
    match cmd {
        Command::Parse(a) => {
            if a.model {
                let safety = parse_source(&load_source(&a.file, Role::Safety)?)?;
                let control_path = a.control.as_deref().expect("clap enforces --control");
                let control = parse_source(&load_source(control_path, Role::Control)?)?;
                let dump = model_dump(&safety, &control).map_err(HarnessError::Extract)?;
                emit(stdout, &to_json(&dump))
            } else {
                let program = parse_source(&load_source(&a.file, Role::Safety)?)?;
                if a.canonical {
                    emit(stdout, &emit_program(&program))
                } else {
                    emit(stdout, &to_json(&program))
                }
            }
        }
        Command::Synth(a) => {
            let safety = parse_source(&load_source(&a.safety, Role::Safety)?)?;
            let control = parse_source(&load_source(&a.control, Role::Control)?)?;
            let art = synthesize(&safety, &control, synth_mode(a.fixed_table))?;
            create_dir(&a.out)?;
            write_file(&a.out.join("F_ms.st"), &emit_program(&art.f_ms))?;
            write_file(&a.out.join("F_mc.st"), &emit_program(&art.f_mc))?;
            write_file(&a.out.join("plan.json"), &to_json(&art.plan))?;
            for w in &art.plan.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            Ok(())
        }
        Command::Simulate(a) => {
            let mut config = match &a.plant {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|source| HarnessError::Read {
                        path: p.display().to_string(),
                        source,
                    })?;
                    PlantConfig::from_json(&text).map_err(|e| {
                        HarnessError::Simulate(crate::sim::SimError::InvalidScenario(format!(
                            "{}: {e}",
                            p.display()
                        )))
                    })?
                }
                None => PlantConfig::default(),
            };
            if let Some(d) = a.duration {
                config.duration = d;
            }
            if let Some(dt) = a.dt {
                config.dt = dt;
            }
            let noise = match (a.noise, a.seed) {
                (Some(amplitude), Some(seed)) if amplitude > 0.0 => {
                    Some(SensorNoise { amplitude, seed })
                }
                _ => None,
            };
            let scenario = Scenario {
                mode: a.scenario.into(),
                safety: load_source(&a.safety, Role::Safety)?,
                control: load_source(&a.control, Role::Control)?,
                config,
                synth_mode: synth_mode(a.fixed_table),
                noise,
                out_dir: Some(a.out.clone()),
            };
            let report = run_scenario(&scenario)?;
            let json = report.to_json() + "\n";
            write_file(&a.out.join("report.json"), &json)?;
            for w in &report.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            emit(stdout, &json)
        }
        Command::Report(a) => {
            let read = |p: &Path| -> Result<SimTrace, HarnessError> {
                let f = fs::File::open(p).map_err(|source| HarnessError::Read {
                    path: p.display().to_string(),
                    source,
                })?;
                SimTrace::read_csv(f).map_err(HarnessError::Simulate)
            };
            let baseline = read(&a.baseline)?;
            let attacked = read(&a.attacked)?;
            let m = compute_metrics(&baseline, &attacked).map_err(HarnessError::Simulate)?;
            #[derive(Serialize)]
            struct Comparison {
                hazard_occurred: bool,
                time_to_hazard_s: Option<f64>,
                disruption_onset_s: Option<f64>,
                throughput_loss: f64,
            }
            emit(
                stdout,
                &to_json(&Comparison {
                    hazard_occurred: m.time_to_hazard.is_some(),
                    time_to_hazard_s: m.time_to_hazard,
                    disruption_onset_s: m.disruption_onset,
                    throughput_loss: m.throughput_loss,
                }),
            )
        }
    }
}
