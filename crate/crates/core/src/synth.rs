//! Invariant negation and hazard-driver synthesis.
//!
//! The malicious safety program flips every boolean constant assigned to the
//! actuator inside each matched IF, which turns `P <=> safe` into
//! `P <=> !safe`. Its two disjuncts are the disruption term
//! `(!P and actuator = safe)` and the hazard term `(P and actuator = unsafe)`.
//! The hazard driver holds each controller output at the extreme that pushes
//! its process variable toward the predicate.

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    atomize, bind_controllers, extract_controllers, extract_invariants, Action, AtomicPredicate,
    ControllerBinding, Mechanism, ModelError, SafetyInvariant,
};
use crate::st::{CmpOp, DataType, Expr, Literal, Program, Stmt, VarDecl, VarKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invariant on '{actuator}' has no ELSE branch, so the disruption term is unavailable")]
    ImplicationOnly { actuator: String },
    #[error("every atom is unreachable; only a dormant attack is possible")]
    EmptyPlan { unreachable: Vec<UnreachableAtom> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Forced extreme follows the loop sign implied by the controller action.
    #[default]
    SignConsistent,
    /// Forced extreme depends on the controller action alone (DIRECT drives
    /// to OUT_MIN, REVERSE to OUT_MAX), whatever direction the atom needs.
    FixedTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Extreme {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Negation {
    pub invariant: SafetyInvariant,
    pub warning: Option<String>,
}

/// Complements the constants of an invariant; the predicate is unchanged.
pub fn negate_invariant(inv: &SafetyInvariant) -> Negation {
    let warning = inv.implication_only().then(|| {
        format!(
            "invariant on '{}' is implication-only; the disruption term is unavailable",
            inv.actuator
        )
    });
    Negation {
        invariant: SafetyInvariant {
            then_value: !inv.then_value,
            else_value: inv.else_value.map(|v| !v),
            ..inv.clone()
        },
        warning,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackTerm {
    pub condition: Expr,
    pub actuator: String,
    pub actuator_value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackTerms {
    pub disruption: AttackTerm,
    pub hazard: AttackTerm,
}

impl AttackTerms {
    /// Truth of `(!P and a = safe) or (P and a = unsafe)` for a given truth
    /// value of P and actuator value `a`.
    pub fn holds(&self, p: bool, actuator: bool) -> bool {
        (!p && actuator == self.disruption.actuator_value)
            || (p && actuator == self.hazard.actuator_value)
    }
}

pub fn attack_terms(inv: &SafetyInvariant) -> Result<AttackTerms, SynthError> {
    if inv.implication_only() {
        return Err(SynthError::ImplicationOnly {
            actuator: inv.actuator.clone(),
        });
    }
    let safe = inv.safe_value();
    Ok(AttackTerms {
        disruption: AttackTerm {
            condition: Expr::not(inv.predicate.clone()),
            actuator: inv.actuator.clone(),
            actuator_value: safe,
        },
        hazard: AttackTerm {
            condition: inv.predicate.clone(),
            actuator: inv.actuator.clone(),
            actuator_value: !safe,
        },
    })
}

/// Malicious safety program: both branches of every matched IF flipped at once.
pub fn synth_safety_payload(p: &Program) -> Result<Program, SynthError> {
    let extraction = extract_invariants(p)?;
    let mut out = p.clone();
    for inv in &extraction.invariants {
        let Stmt::If(ifs) = &mut out.stmts[inv.stmt_index] else {
            unreachable!("invariants are extracted from IF statements")
        };
        flip_constants(&mut ifs.then_body, &inv.actuator);
        if let Some(body) = &mut ifs.else_body {
            flip_constants(body, &inv.actuator);
        }
    }
    Ok(out)
}

fn flip_constants(body: &mut [Stmt], actuator: &str) {
    for s in body {
        if let Stmt::Assign(a) = s {
            if a.target == actuator {
                if let Expr::Bool { value } = &mut a.value {
                    *value = !*value;
                }
            }
        }
    }
}

/// Direction the atom's variable must move for the atom to become true.
pub fn direction_needed(atom: &AtomicPredicate) -> Direction {
    match atom.op {
        CmpOp::Gt | CmpOp::Ge => Direction::Up,
        CmpOp::Lt | CmpOp::Le => Direction::Down,
    }
}

pub fn forced_output(dir: Direction, action: Action, mode: Mode) -> Extreme {
    match mode {
        // With e = SP - PV, a direct-acting loop is negative feedback only if
        // raising the output raises PV; reverse acting is the opposite.
        Mode::SignConsistent => match (dir, action) {
            (Direction::Up, Action::Direct) | (Direction::Down, Action::Reverse) => Extreme::Max,
            (Direction::Down, Action::Direct) | (Direction::Up, Action::Reverse) => Extreme::Min,
        },
        Mode::FixedTable => match dir {
            Direction::Up => match action {
                Action::Direct => Extreme::Min,
                Action::Reverse => Extreme::Max,
            },
            Direction::Down => match action {
                Action::Reverse => Extreme::Max,
                Action::Direct => Extreme::Min,
            },
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverCommand {
    pub controller: String,
    pub out_target: String,
    pub forced: Extreme,
    pub forced_value: f64,
    pub target_atom: AtomicPredicate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectEnforcement {
    pub variable: String,
    pub value: f64,
    #[serde(skip)]
    pub dtype: DataType,
    pub target_atom: AtomicPredicate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnreachableAtom {
    pub atom: AtomicPredicate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct DriverPlan {
    pub mode: Mode,
    pub commands: Vec<DriverCommand>,
    pub direct_enforcements: Vec<DirectEnforcement>,
    pub unreachable: Vec<UnreachableAtom>,
    pub warnings: Vec<String>,
}

impl DriverPlan {
    pub fn atom_count(&self) -> usize {
        self.commands.len() + self.direct_enforcements.len() + self.unreachable.len()
    }

    pub fn summary(&self) -> String {
        let mut parts: Vec<String> = self
            .commands
            .iter()
            .map(|c| {
                format!(
                    "{} forced {:?} ({}) for {}",
                    c.controller, c.forced, c.forced_value, c.target_atom
                )
            })
            .collect();
        parts.extend(
            self.direct_enforcements
                .iter()
                .map(|d| format!("{} := {} for {}", d.variable, d.value, d.target_atom)),
        );
        parts.extend(
            self.unreachable
                .iter()
                .map(|u| format!("{} unreachable ({})", u.atom, u.reason)),
        );
        parts.join("; ")
    }
}

/// Value that makes an operator atom true, or `None` when a BOOL variable
/// has no satisfying value.
fn enforcement_value(atom: &AtomicPredicate) -> Option<f64> {
    match atom.dtype {
        DataType::Bool => [1.0, 0.0].into_iter().find(|v| atom.holds(*v)),
        _ => Some(match direction_needed(atom) {
            Direction::Up => atom.threshold.value() + 1.0,
            Direction::Down => atom.threshold.value() - 1.0,
        }),
    }
}

pub const DRIVER_PROGRAM_NAME: &str = "HAZARD_DRIVER";

/// Builds the driver plan and the driver program `f_mc` for one set of bindings.
pub fn synth_hazard_driver(
    bindings: &[ControllerBinding],
    mode: Mode,
) -> Result<(DriverPlan, Program), SynthError> {
    let mut plan = DriverPlan {
        mode,
        ..DriverPlan::default()
    };
    for b in bindings {
        match &b.mechanism {
            Mechanism::Controller(cfg) => {
                let forced = forced_output(direction_needed(&b.atom), cfg.action, mode);
                let forced_value = match forced {
                    Extreme::Min => cfg.out_min,
                    Extreme::Max => cfg.out_max,
                };
                plan.commands.push(DriverCommand {
                    controller: cfg.instance_id.clone(),
                    out_target: cfg.out_target.clone(),
                    forced,
                    forced_value,
                    target_atom: b.atom.clone(),
                });
            }
            Mechanism::DirectEnforce => match enforcement_value(&b.atom) {
                Some(value) => plan.direct_enforcements.push(DirectEnforcement {
                    variable: b.atom.var.clone(),
                    value,
                    dtype: b.atom.dtype,
                    target_atom: b.atom.clone(),
                }),
                None => plan.unreachable.push(UnreachableAtom {
                    atom: b.atom.clone(),
                    reason: "no BOOL value satisfies the atom".into(),
                }),
            },
            Mechanism::Unreachable(reason) => plan.unreachable.push(UnreachableAtom {
                atom: b.atom.clone(),
                reason: reason.clone(),
            }),
        }
    }

    if plan.commands.is_empty() && plan.direct_enforcements.is_empty() {
        return Err(SynthError::EmptyPlan {
            unreachable: plan.unreachable,
        });
    }

    let program = driver_program(&mut plan);
    Ok((plan, program))
}

fn driver_program(plan: &mut DriverPlan) -> Program {
    let mut p = Program::new(DRIVER_PROGRAM_NAME);
    let mut warnings = Vec::new();
    for (i, c) in plan.commands.iter().enumerate() {
        if let Some(first) = plan.commands[..i]
            .iter()
            .find(|o| o.out_target == c.out_target)
        {
            if first.forced != c.forced {
                warnings.push(format!(
                    "{} cannot be forced both {:?} and {:?}; keeping the first command",
                    c.controller, first.forced, c.forced
                ));
            }
            continue;
        }
        p.decls.push(VarDecl::new(
            c.out_target.clone(),
            DataType::Real,
            VarKind::Actuator,
        ));
        p.stmts.push(Stmt::assign(
            c.out_target.clone(),
            Expr::real(Literal::from_f64(c.forced_value)),
        ));
    }
    for d in &plan.direct_enforcements {
        if p.decl(&d.variable).is_some() {
            warnings.push(format!(
                "operator variable '{}' is enforced more than once; keeping the first value",
                d.variable
            ));
            continue;
        }
        let value = match d.dtype {
            DataType::Bool => Expr::bool(d.value != 0.0),
            _ => Expr::real(Literal::from_f64(d.value)),
        };
        p.decls
            .push(VarDecl::new(d.variable.clone(), d.dtype, VarKind::Operator));
        p.stmts.push(Stmt::assign(d.variable.clone(), value));
    }
    plan.warnings.extend(warnings);
    p
}

/// Output of the full synthesis pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackArtifacts {
    /// Malicious safety program.
    pub f_ms: Program,
    /// Hazard driver program. Empty when no atom is drivable.
    pub f_mc: Program,
    pub plan: DriverPlan,
}

/// Runs extraction, negation and driver synthesis over a safety/control pair.
pub fn synthesize(
    safety: &Program,
    control: &Program,
    mode: Mode,
) -> Result<AttackArtifacts, SynthError> {
    let extraction = extract_invariants(safety)?;
    let controllers = extract_controllers(control)?;
    let f_ms = synth_safety_payload(safety)?;

    let mut warnings: Vec<String> = extraction
        .skipped
        .iter()
        .map(|s| format!("skipped statement {}: {}", s.index + 1, s.reason))
        .collect();
    let mut bindings = Vec::new();
    for inv in &extraction.invariants {
        if let Some(w) = negate_invariant(inv).warning {
            warnings.push(w);
        }
        let atoms = atomize(&inv.predicate, &safety.decls)?;
        bindings.extend(bind_controllers(&atoms, &controllers));
    }

    let (mut plan, f_mc) = match synth_hazard_driver(&bindings, mode) {
        Ok(v) => v,
        Err(SynthError::EmptyPlan { unreachable }) => {
            warnings.push("every atom is unreachable; only a dormant attack is possible".into());
            let plan = DriverPlan {
                mode,
                unreachable,
                ..DriverPlan::default()
            };
            (plan, Program::new(DRIVER_PROGRAM_NAME))
        }
        Err(e) => return Err(e),
    };
    warnings.append(&mut plan.warnings);
    plan.warnings = warnings;
    Ok(AttackArtifacts { f_ms, f_mc, plan })
}
