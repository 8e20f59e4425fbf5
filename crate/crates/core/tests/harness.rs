mod common;

use invflip::harness::*;
use invflip::sim::{EventKind, ScenarioMode};
use invflip::st::{Role, SourceFile};
use invflip::synth::Mode;

fn scenario(mode: ScenarioMode, duration: f64) -> Scenario {
    Scenario {
        mode,
        safety: SourceFile::new(
            "pump_safety.st",
            common::read_fixture("pump_safety.st"),
            Role::Safety,
        ),
        control: SourceFile::new(
            "level_control.st",
            common::read_fixture("level_control.st"),
            Role::Control,
        ),
        config: PlantConfig {
            duration,
            ..PlantConfig::default()
        },
        synth_mode: Mode::SignConsistent,
        noise: None,
        out_dir: None,
    }
}

#[test]
fn baseline_report() {
    let r = run_scenario(&scenario(ScenarioMode::Baseline, 3600.0)).unwrap();
    assert!(!r.hazard_occurred);
    assert_eq!(r.time_to_hazard, None);
    assert_eq!(r.throughput_loss, 0.0);
    assert!(r.attacked.events.is_empty());
}

#[test]
fn hazard_report() {
    let r = run_scenario(&scenario(ScenarioMode::Hazard, 120.0)).unwrap();
    assert!(r.hazard_occurred);
    let t = r.time_to_hazard.unwrap();
    assert!((t - 40.0).abs() <= 2.0, "{t}");
    assert_eq!(r.disruption_onset, None);
    assert_eq!(r.plan.as_ref().unwrap().commands.len(), 1);
}

#[test]
fn disruption_report() {
    let r = run_scenario(&scenario(ScenarioMode::Disruption, 600.0)).unwrap();
    assert_eq!(r.disruption_onset, Some(0.0));
    assert!(!r.hazard_occurred);
    assert!(r.throughput_loss >= 0.99, "{}", r.throughput_loss);
    assert_eq!(r.attacked.first_event(EventKind::Hazard), None);
}

#[test]
fn dormant_payload_never_fires_in_stable_loop() {
    let r = run_scenario(&scenario(ScenarioMode::Dormant, 3600.0)).unwrap();
    assert!(!r.hazard_occurred);
    assert_eq!(r.throughput_loss, 0.0);
    assert!(r.warnings.iter().any(|w| w.contains("never occurred")));
}

#[test]
fn dormant_payload_fires_when_trigger_state_arrives() {
    let mut sc = scenario(ScenarioMode::Dormant, 60.0);
    sc.config.level0 = 9.0;
    let r = run_scenario(&sc).unwrap();
    assert_eq!(r.time_to_hazard, Some(0.0));
}

#[test]
fn disruption_precedes_hazard() {
    let d = run_scenario(&scenario(ScenarioMode::Disruption, 120.0)).unwrap();
    let h = run_scenario(&scenario(ScenarioMode::Hazard, 120.0)).unwrap();
    assert_eq!(d.disruption_onset, Some(0.0));
    assert!(h.time_to_hazard.unwrap() > 0.0);
}

#[test]
fn reports_are_deterministic_and_keyed() {
    let a = run_scenario(&scenario(ScenarioMode::Hazard, 60.0))
        .unwrap()
        .to_json();
    let b = run_scenario(&scenario(ScenarioMode::Hazard, 60.0))
        .unwrap()
        .to_json();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for key in [
        "mode",
        "hazard_occurred",
        "time_to_hazard_s",
        "disruption_onset_s",
        "throughput_loss",
        "plan",
        "traces",
        "warnings",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["mode"], "hazard");
}

#[test]
fn traces_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = scenario(ScenarioMode::Disruption, 10.0);
    sc.out_dir = Some(dir.path().join("run"));
    let r = run_scenario(&sc).unwrap();
    assert_eq!(r.trace_paths.len(), 2);
    for p in &r.trace_paths {
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 102);
    }
}

#[test]
fn errors_carry_stage() {
    let mut sc = scenario(ScenarioMode::Hazard, 10.0);
    sc.safety.body = "PROGRAM BROKEN VAR x1 : REAL END_VAR".into();
    let e = run_scenario(&sc).unwrap_err();
    assert_eq!(e.stage(), "parse");
    assert!(
        e.to_string().starts_with("parse stage: pump_safety.st:"),
        "{e}"
    );

    let mut sc = scenario(ScenarioMode::Hazard, 10.0);
    sc.safety.body = "PROGRAM S VAR x1 : REAL; END_VAR x1 := 1.0; END_PROGRAM".into();
    assert_eq!(run_scenario(&sc).unwrap_err().stage(), "extract");

    let mut sc = scenario(ScenarioMode::Hazard, 10.0);
    sc.config.dt = 5.0;
    assert_eq!(run_scenario(&sc).unwrap_err().stage(), "simulate");

    let missing = load_source(
        std::path::Path::new("/nonexistent/missing.st"),
        Role::Safety,
    )
    .unwrap_err();
    assert_eq!(missing.stage(), "parse");
}

#[test]
fn plant_fixture_matches_defaults() {
    let c = PlantConfig::from_json(&common::read_fixture("plant.json")).unwrap();
    assert_eq!(c, PlantConfig::default());
}
