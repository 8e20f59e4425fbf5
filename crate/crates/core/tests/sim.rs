mod common;

use invflip::model::{extract_invariants, Action, PidConfig};
use invflip::sim::*;
use invflip::st::{parse_str, Program};
use invflip::synth::{forced_output, synth_hazard_driver, Direction, Extreme, Mode};
use proptest::prelude::*;

fn cfg(kp: f64, ki: f64, kd: f64, action: Action) -> PidConfig {
    PidConfig {
        instance_id: "LIC101".into(),
        pv: "x1".into(),
        sp: 50.0,
        kp,
        ki,
        kd,
        action,
        out_min: 0.0,
        out_max: 100.0,
        out_target: "v1".into(),
    }
}

fn scenario(mode: ScenarioMode, duration: f64) -> ScenarioConfig {
    ScenarioConfig {
        safety_program: common::parse_fixture("pump_safety.st"),
        safety_payload: None,
        control_program: common::parse_fixture("level_control.st"),
        driver_program: None,
        plant: PlantParams::default(),
        initial: PlantState::at_level(50.0),
        duration,
        dt: 0.1,
        mode,
        noise: None,
    }
}

fn level_loop(action: &str) -> Program {
    parse_str(&common::read_fixture("level_control.st").replace("DIRECT", action)).unwrap()
}

#[test]
fn pid_reference_values() {
    let st = PidState::default();
    let (out, _) = pid_step(&cfg(2.0, 0.0, 0.0, Action::Direct), &st, 47.0, 0.1);
    assert!((out - 6.0).abs() < 1e-9);
    let (out, _) = pid_step(&cfg(2.0, 0.0, 0.0, Action::Reverse), &st, 47.0, 0.1);
    assert!((out - 0.0).abs() < 1e-9);
    let (out, st1) = pid_step(&cfg(0.0, 1.0, 0.0, Action::Direct), &st, 48.0, 0.5);
    assert!((out - 1.0).abs() < 1e-9);
    assert!((st1.integral - 1.0).abs() < 1e-9);
}

#[test]
fn integral_of_constant_error() {
    let c = PidConfig {
        out_min: -1e6,
        out_max: 1e6,
        ..cfg(0.0, 0.3, 0.0, Action::Direct)
    };
    let (n, dt, e) = (1000, 0.1, 2.0);
    let mut st = PidState::default();
    let mut out = 0.0;
    for _ in 0..n {
        (out, st) = pid_step(&c, &st, c.sp - e, dt);
    }
    let expected = c.ki * e * n as f64 * dt;
    assert!((out - expected).abs() < 1e-9, "{out} vs {expected}");
}

#[test]
fn derivative_kick_suppressed_on_first_step() {
    let c = cfg(0.0, 0.0, 5.0, Action::Direct);
    let (out, st) = pid_step(&c, &PidState::default(), 40.0, 0.1);
    assert_eq!(out, 0.0);
    let (out, _) = pid_step(&c, &st, 39.0, 0.1);
    assert!((out - 50.0).abs() < 1e-9);
}

#[test]
fn anti_windup_bounds_integral_under_saturation() {
    let c = cfg(1.0, 0.1, 0.0, Action::Direct);
    let (dt, pv) = (0.1, 0.0);
    let e = c.sp - pv;
    let mut st = PidState::default();
    let mut out = 0.0;
    for _ in 0..6000 {
        (out, st) = pid_step(&c, &st, pv, dt);
    }
    assert_eq!(out, c.out_max);
    let bound = (c.out_max - c.kp * e) / c.ki + e * dt;
    assert!(st.integral.abs() <= bound, "{} > {bound}", st.integral);
    assert!(st.integral < e * 600.0 / 10.0);
}

proptest! {
    #[test]
    fn proportional_only_is_clamped_gain(kp in 0.0f64..10.0, pv in -50.0f64..150.0, reverse: bool) {
        let action = if reverse { Action::Reverse } else { Action::Direct };
        let c = cfg(kp, 0.0, 0.0, action);
        let e = if reverse { pv - c.sp } else { c.sp - pv };
        let (out, _) = pid_step(&c, &PidState::default(), pv, 0.1);
        prop_assert!((out - (kp * e).clamp(0.0, 100.0)).abs() < 1e-9);
    }

    #[test]
    fn level_stays_in_bounds(
        level in 0.0f64..=100.0,
        valve in 0.0f64..=100.0,
        pump: bool,
        dt in 0.01f64..=1.0,
        steps in 1usize..200,
    ) {
        let p = PlantParams::default();
        let mut s = PlantState { level, pressure: 0.0, valve, pump_on: pump };
        for _ in 0..steps {
            s = plant_step(&s, &p, dt);
            prop_assert!((0.0..=100.0).contains(&s.level));
        }
    }
}

#[test]
fn plant_reference_values() {
    let p = PlantParams::default();
    let s = PlantState {
        level: 50.0,
        pressure: 2.0,
        valve: 50.0,
        pump_on: true,
    };
    assert!((plant_step(&s, &p, 1.0).level - 50.0).abs() < 1e-12);
    let s = PlantState { valve: 0.0, ..s };
    assert!((plant_step(&s, &p, 1.0).level - 49.0).abs() < 1e-12);
    let blocked = PlantParams { blockage: 1.0, ..p };
    assert!((plant_step(&s, &blocked, 1.0).pressure - 6.0).abs() < 1e-12);
    let idle = PlantState {
        pump_on: false,
        ..s
    };
    assert_eq!(plant_step(&idle, &p, 1.0).level, 50.0);
    assert_eq!(plant_step(&idle, &p, 1.0).pressure, 0.0);
}

#[test]
fn one_step_scenario_has_two_samples() {
    let t = run_closed_loop(&scenario(ScenarioMode::Baseline, 0.1)).unwrap();
    assert_eq!(t.samples.len(), 2);
    assert_eq!(
        scenario(ScenarioMode::Baseline, 3600.0).sample_count(),
        36001
    );
}

#[test]
fn baseline_converges_without_events() {
    let t = run_closed_loop(&scenario(ScenarioMode::Baseline, 900.0)).unwrap();
    assert!(t.events.is_empty());
    for s in t.samples.iter().filter(|s| s.t > 300.0) {
        assert!((s.level - 50.0).abs() < 1.0, "t={} level={}", s.t, s.level);
    }
}

#[test]
fn reverse_action_on_fail_closed_valve_diverges() {
    let sc = ScenarioConfig {
        control_program: level_loop("REVERSE"),
        initial: PlantState::at_level(49.0),
        ..scenario(ScenarioMode::Baseline, 600.0)
    };
    let t = run_closed_loop(&sc).unwrap();
    // The low-level trip stops the drain at 10%, so the divergence shows in
    // the controller output pinned at a limit and a level far from SP.
    let last = t.samples.last().unwrap();
    assert!(
        last.pid_out == 0.0 || last.pid_out == 100.0,
        "{}",
        last.pid_out
    );
    assert!((last.level - 50.0).abs() > 30.0, "{}", last.level);
}

#[test]
fn runs_are_deterministic() {
    let sc = scenario(ScenarioMode::Baseline, 120.0);
    assert_eq!(
        run_closed_loop(&sc).unwrap().to_csv_string(),
        run_closed_loop(&sc).unwrap().to_csv_string()
    );
    let noisy = |seed| ScenarioConfig {
        noise: Some(SensorNoise {
            amplitude: 0.5,
            seed,
        }),
        ..sc.clone()
    };
    let a = run_closed_loop(&noisy(7)).unwrap().to_csv_string();
    assert_eq!(a, run_closed_loop(&noisy(7)).unwrap().to_csv_string());
    assert_ne!(a, run_closed_loop(&noisy(8)).unwrap().to_csv_string());
}

/// Forces the extreme the table prescribes and checks the level moves the
/// way the atom needs. Reverse action is paired with a fail-open valve,
/// the plant on which a reverse-acting level loop is negative feedback.
#[test]
fn forced_extremes_move_level_as_required() {
    let safety = common::parse_fixture("pump_safety.st");
    let atom_for = |dir: Direction| {
        let src = match dir {
            Direction::Down => "IF (x1 < 10.0) THEN u := 0; ELSE u := 1; END_IF;",
            Direction::Up => "IF (x1 > 90.0) THEN u := 0; ELSE u := 1; END_IF;",
        };
        let p = parse_str(&format!(
            "PROGRAM S VAR x1 : REAL; u : BOOL; END_VAR {src} END_PROGRAM"
        ))
        .unwrap();
        let inv = &extract_invariants(&p).unwrap().invariants[0];
        invflip::model::atomize(&inv.predicate, &p.decls).unwrap()
    };
    for action in [Action::Direct, Action::Reverse] {
        let name = if action == Action::Direct {
            "DIRECT"
        } else {
            "REVERSE"
        };
        let control = level_loop(name);
        let ctrls = invflip::model::extract_controllers(&control).unwrap();
        for dir in [Direction::Up, Direction::Down] {
            let bindings = invflip::model::bind_controllers(&atom_for(dir), &ctrls);
            let (plan, driver) = synth_hazard_driver(&bindings, Mode::SignConsistent).unwrap();
            assert_eq!(
                plan.commands[0].forced,
                forced_output(dir, action, Mode::SignConsistent)
            );
            let sc = ScenarioConfig {
                safety_payload: Some(safety.clone()),
                control_program: control.clone(),
                driver_program: Some(driver),
                plant: PlantParams {
                    fail_open: action == Action::Reverse,
                    ..PlantParams::default()
                },
                ..scenario(ScenarioMode::Hazard, 5.0)
            };
            let t = run_closed_loop(&sc).unwrap();
            let delta = t.samples.last().unwrap().level - t.samples[0].level;
            match dir {
                Direction::Up => assert!(delta > 4.0, "{action:?} {dir:?} {delta}"),
                Direction::Down => assert!(delta < -4.0, "{action:?} {dir:?} {delta}"),
            }
        }
    }
    assert_eq!(
        forced_output(Direction::Down, Action::Direct, Mode::SignConsistent),
        Extreme::Min
    );
}

#[test]
fn undeclared_plant_tag_is_rejected() {
    let control = parse_str(
        "PROGRAM C VAR LIC101 : PID; x1 : REAL; v1 : REAL; x9 : REAL; END_VAR \
         LIC101(PV := x1, SP := 50.0, KP := 2.0, KI := 0.1, KD := 0.0, ACTION := DIRECT, \
         OUT_MIN := 0.0, OUT_MAX := 100.0, OUT => v1); x9 := x1; END_PROGRAM",
    )
    .unwrap();
    let sc = ScenarioConfig {
        control_program: control,
        ..scenario(ScenarioMode::Baseline, 1.0)
    };
    assert_eq!(
        run_closed_loop(&sc).unwrap_err(),
        SimError::UnknownTag("x9".into())
    );
}

#[test]
fn invalid_configs_are_rejected() {
    let mut sc = scenario(ScenarioMode::Baseline, 10.0);
    sc.dt = 2.0;
    assert!(matches!(
        run_closed_loop(&sc),
        Err(SimError::InvalidScenario(_))
    ));
    let sc = scenario(ScenarioMode::Hazard, 10.0);
    assert!(matches!(
        run_closed_loop(&sc),
        Err(SimError::InvalidScenario(_))
    ));
}

fn sample(level: f64, pump_on: bool) -> Sample {
    Sample {
        t: 0.0,
        level,
        pressure: 2.0,
        valve: 0.0,
        pump_on,
        p_truth: false,
        pid_out: 0.0,
        extra: Default::default(),
    }
}

#[test]
fn monitor_flags_low_level_with_pump_running() {
    let inv = &extract_invariants(&common::parse_fixture("pump_safety.st"))
        .unwrap()
        .invariants[0];
    let trace = SimTrace {
        dt: 0.1,
        samples: vec![sample(9.0, true)],
        events: vec![],
    };
    let ev = monitor_invariant(&trace, inv, None).unwrap();
    assert_eq!(
        ev,
        vec![ViolationEvent {
            t: 0.0,
            kind: EventKind::Hazard
        }]
    );
    let trace = SimTrace {
        dt: 0.1,
        samples: vec![sample(9.0, false)],
        events: vec![],
    };
    assert!(monitor_invariant(&trace, inv, None).unwrap().is_empty());
}

#[test]
fn monitor_agrees_with_direct_evaluation() {
    let safety = common::parse_fixture("pump_safety.st");
    let inv = &extract_invariants(&safety).unwrap().invariants[0];
    let art = invflip::synth::synthesize(
        &safety,
        &common::parse_fixture("level_control.st"),
        Mode::SignConsistent,
    )
    .unwrap();
    let sc = ScenarioConfig {
        safety_payload: Some(art.f_ms),
        driver_program: Some(art.f_mc),
        ..scenario(ScenarioMode::Hazard, 60.0)
    };
    let t = run_closed_loop(&sc).unwrap();
    let flagged: Vec<f64> = monitor_invariant(&t, inv, None)
        .unwrap()
        .iter()
        .map(|e| e.t)
        .collect();
    let expected: Vec<f64> = t
        .samples
        .iter()
        .filter(|s| (s.level < 10.0 || s.pressure > 5.0) && s.pump_on)
        .map(|s| s.t)
        .collect();
    assert!(!expected.is_empty());
    assert_eq!(flagged, expected);
}

#[test]
fn disruption_onset_needs_baseline_difference() {
    let inv = &extract_invariants(&common::parse_fixture("pump_safety.st"))
        .unwrap()
        .invariants[0];
    let base = SimTrace {
        dt: 0.1,
        samples: vec![sample(50.0, true); 3],
        events: vec![],
    };
    let attacked = SimTrace {
        dt: 0.1,
        samples: vec![sample(50.0, false); 3],
        events: vec![],
    };
    let ev = monitor_invariant(&attacked, inv, Some(&base)).unwrap();
    assert_eq!(
        ev,
        vec![ViolationEvent {
            t: 0.0,
            kind: EventKind::DisruptionOnset
        }]
    );
    assert!(monitor_invariant(&base, inv, Some(&base))
        .unwrap()
        .is_empty());
}

#[test]
fn csv_round_trip() {
    let t = run_closed_loop(&scenario(ScenarioMode::Baseline, 5.0)).unwrap();
    let text = t.to_csv_string();
    assert!(text.starts_with("t,level,pressure,valve,pump_on,P,pid_out,event\n"));
    let back = SimTrace::read_csv(text.as_bytes()).unwrap();
    assert_eq!(back.samples.len(), t.samples.len());
    assert!((back.dt - 0.1).abs() < 1e-9);
    for (a, b) in back.samples.iter().zip(&t.samples) {
        assert!((a.level - b.level).abs() < 1e-6);
        assert_eq!(a.pump_on, b.pump_on);
    }
}
