//! Safety invariants, atomic predicates and PID configurations extracted
//! from parsed programs, and the binding of each atom to the mechanism an
//! attacker could use to make it true.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::st::{CmpOp, DataType, Expr, Literal, PidArg, Program, Span, Stmt, VarDecl, VarKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no safety invariant found{}", skipped_suffix(.skipped))]
    NoInvariantFound { skipped: Vec<Skipped> },
    #[error("unsupported atom '{leaf}': {reason}")]
    UnsupportedAtom { leaf: String, reason: String },
    #[error("PID call '{instance}' is missing parameter {param}")]
    MissingParam { instance: String, param: String },
    #[error("PID call '{instance}' has invalid parameter {param}: {reason}")]
    InvalidParam {
        instance: String,
        param: String,
        reason: String,
    },
    #[error("controllers '{first}' and '{second}' both claim PV '{pv}'")]
    DuplicatePv {
        pv: String,
        first: String,
        second: String,
    },
}

fn skipped_suffix(skipped: &[Skipped]) -> String {
    if skipped.is_empty() {
        String::new()
    } else {
        let reasons: Vec<_> = skipped
            .iter()
            .map(|s| format!("statement {}: {}", s.index + 1, s.reason))
            .collect();
        format!(" (skipped {})", reasons.join("; "))
    }
}

fn bit<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

fn opt_bit<S: Serializer>(v: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_some(&u8::from(*b)),
        None => s.serialize_none(),
    }
}

/// `IF P THEN u := then_value; [ELSE u := else_value;] END_IF` at the top
/// level of a safety program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafetyInvariant {
    pub predicate: Expr,
    pub actuator: String,
    #[serde(serialize_with = "bit")]
    pub then_value: bool,
    #[serde(serialize_with = "opt_bit")]
    pub else_value: Option<bool>,
    #[serde(skip)]
    pub source_span: Option<Span>,
    /// Index of the IF among the program's top-level statements.
    #[serde(skip)]
    pub stmt_index: usize,
}

impl SafetyInvariant {
    /// True for the one-armed `IF ... THEN` form.
    pub fn implication_only(&self) -> bool {
        self.else_value.is_none()
    }

    /// Actuator value the invariant mandates while the predicate holds.
    pub fn safe_value(&self) -> bool {
        self.then_value
    }
}

/// An IF statement that did not match the invariant pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub index: usize,
    pub span: Option<Span>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub invariants: Vec<SafetyInvariant>,
    pub skipped: Vec<Skipped>,
}

pub fn extract_invariants(p: &Program) -> Result<Extraction, ModelError> {
    let mut invariants = Vec::new();
    let mut skipped = Vec::new();
    for (index, stmt) in p.stmts.iter().enumerate() {
        let Stmt::If(ifs) = stmt else { continue };
        match match_invariant(p, ifs) {
            Ok((actuator, then_value, else_value)) => invariants.push(SafetyInvariant {
                predicate: ifs.cond.clone(),
                actuator,
                then_value,
                else_value,
                source_span: p.span_of(index),
                stmt_index: index,
            }),
            Err(reason) => skipped.push(Skipped {
                index,
                span: p.span_of(index),
                reason,
            }),
        }
    }
    if invariants.is_empty() {
        return Err(ModelError::NoInvariantFound { skipped });
    }
    Ok(Extraction {
        invariants,
        skipped,
    })
}

fn constant_assignment(body: &[Stmt]) -> Option<(&str, bool)> {
    match body {
        [Stmt::Assign(a)] => match a.value {
            Expr::Bool { value } => Some((&a.target, value)),
            _ => None,
        },
        _ => None,
    }
}

fn match_invariant(
    p: &Program,
    ifs: &crate::st::IfStmt,
) -> Result<(String, bool, Option<bool>), String> {
    let (actuator, then_value) = constant_assignment(&ifs.then_body)
        .ok_or("THEN branch is not a single boolean constant assignment")?;
    let decl = p
        .decl(actuator)
        .ok_or_else(|| format!("'{actuator}' is not declared"))?;
    if decl.dtype != DataType::Bool || decl.kind != VarKind::Actuator {
        return Err(format!("'{actuator}' is not a BOOL actuator"));
    }

    let else_value = match &ifs.else_body {
        None => None,
        Some(body) => {
            let (target, v) = constant_assignment(body)
                .ok_or("ELSE branch is not a single boolean constant assignment")?;
            if target != actuator {
                return Err(format!(
                    "branches assign different actuators '{actuator}' and '{target}'"
                ));
            }
            if v == then_value {
                return Err("both branches assign the same value".into());
            }
            Some(v)
        }
    };

    for var in ifs.cond.referenced_vars() {
        if p.decl(var).is_some_and(|d| d.kind == VarKind::Actuator) {
            return Err(format!("predicate reads actuator '{var}'"));
        }
    }
    atomize(&ifs.cond, &p.decls).map_err(|e| e.to_string())?;
    Ok((actuator.to_string(), then_value, else_value))
}

/// A single comparison leaf of a predicate, after pushing negations inward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicPredicate {
    pub var: String,
    pub op: CmpOp,
    pub threshold: Literal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub var_kind: VarKind,
    pub dtype: DataType,
}

impl AtomicPredicate {
    pub fn holds(&self, value: f64) -> bool {
        self.op.holds(value, self.threshold.value())
    }

    pub fn as_expr(&self) -> Expr {
        Expr::cmp(self.var.clone(), self.op, self.threshold.clone())
    }
}

impl std::fmt::Display for AtomicPredicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {}", self.var, self.op, self.threshold)?;
        if let Some(u) = &self.unit {
            write!(f, " {u}")?;
        }
        Ok(())
    }
}

/// Negation normal form: NOT only appears directly over variable leaves,
/// and negated comparisons are folded into the complementary operator.
pub fn to_nnf(e: &Expr) -> Expr {
    nnf(e, false)
}

fn nnf(e: &Expr, negate: bool) -> Expr {
    match e {
        Expr::Cmp { var, op, threshold } => {
            let op = if negate { op.negated() } else { *op };
            Expr::cmp(var.clone(), op, threshold.clone())
        }
        Expr::Bool { value } => Expr::bool(*value != negate),
        Expr::Real { .. } | Expr::Var { .. } => {
            if negate {
                Expr::not(e.clone())
            } else {
                e.clone()
            }
        }
        Expr::And { lhs, rhs } if negate => Expr::or(nnf(lhs, true), nnf(rhs, true)),
        Expr::Or { lhs, rhs } if negate => Expr::and(nnf(lhs, true), nnf(rhs, true)),
        Expr::And { lhs, rhs } => Expr::and(nnf(lhs, false), nnf(rhs, false)),
        Expr::Or { lhs, rhs } => Expr::or(nnf(lhs, false), nnf(rhs, false)),
        Expr::Not { inner } => nnf(inner, !negate),
    }
}

/// Lists the comparison leaves of `predicate` left to right. A BOOL
/// operator variable `xo` becomes the atom `xo > 0` (`xo <= 0` under NOT).
pub fn atomize(predicate: &Expr, decls: &[VarDecl]) -> Result<Vec<AtomicPredicate>, ModelError> {
    let mut out = Vec::new();
    collect_atoms(&to_nnf(predicate), false, decls, &mut out)?;
    Ok(out)
}

fn collect_atoms(
    e: &Expr,
    negated: bool,
    decls: &[VarDecl],
    out: &mut Vec<AtomicPredicate>,
) -> Result<(), ModelError> {
    let decl_of = |name: &str| {
        decls
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| ModelError::UnsupportedAtom {
                leaf: name.to_string(),
                reason: "undeclared variable".into(),
            })
    };
    let state_kind = |d: &VarDecl| match d.kind {
        VarKind::Actuator => Err(ModelError::UnsupportedAtom {
            leaf: d.name.clone(),
            reason: "actuator variables cannot appear in a predicate".into(),
        }),
        k => Ok(k),
    };
    match e {
        Expr::Cmp { var, op, threshold } => {
            let d = decl_of(var)?;
            out.push(AtomicPredicate {
                var: var.clone(),
                op: *op,
                threshold: threshold.clone(),
                unit: d.unit.clone(),
                var_kind: state_kind(d)?,
                dtype: d.dtype,
            });
        }
        Expr::Var { name } => {
            let d = decl_of(name)?;
            if d.kind != VarKind::Operator {
                return Err(ModelError::UnsupportedAtom {
                    leaf: name.clone(),
                    reason: format!("boolean leaf of a {} variable", d.kind),
                });
            }
            out.push(AtomicPredicate {
                var: name.clone(),
                op: if negated { CmpOp::Le } else { CmpOp::Gt },
                threshold: Literal::new("0").expect("valid literal"),
                unit: d.unit.clone(),
                var_kind: VarKind::Operator,
                dtype: d.dtype,
            });
        }
        Expr::Not { inner } => collect_atoms(inner, !negated, decls, out)?,
        Expr::And { lhs, rhs } | Expr::Or { lhs, rhs } => {
            collect_atoms(lhs, negated, decls, out)?;
            collect_atoms(rhs, negated, decls, out)?;
        }
        Expr::Bool { value } => {
            return Err(ModelError::UnsupportedAtom {
                leaf: if *value { "1" } else { "0" }.into(),
                reason: "constant in predicate".into(),
            });
        }
        Expr::Real { value } => {
            return Err(ModelError::UnsupportedAtom {
                leaf: value.to_string(),
                reason: "numeric constant in predicate".into(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    /// Output rises as `SP - PV` rises.
    Direct,
    /// Output falls as `SP - PV` rises.
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PidConfig {
    pub instance_id: String,
    pub pv: String,
    pub sp: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub action: Action,
    pub out_min: f64,
    pub out_max: f64,
    pub out_target: String,
}

const REQUIRED_PARAMS: [&str; 8] = ["PV", "SP", "KP", "KI", "KD", "ACTION", "OUT_MIN", "OUT_MAX"];

pub fn extract_controllers(p: &Program) -> Result<Vec<PidConfig>, ModelError> {
    let mut calls = Vec::new();
    collect_calls(&p.stmts, &mut calls);

    let mut out: Vec<PidConfig> = Vec::new();
    for call in calls {
        let missing = |param: &str| ModelError::MissingParam {
            instance: call.instance.clone(),
            param: param.to_string(),
        };
        let invalid = |param: &str, reason: &str| ModelError::InvalidParam {
            instance: call.instance.clone(),
            param: param.to_string(),
            reason: reason.to_string(),
        };
        for param in REQUIRED_PARAMS {
            if call.param(param).is_none() {
                return Err(missing(param));
            }
        }
        let number = |param: &str| -> Result<f64, ModelError> {
            match call.param(param) {
                Some(PidArg::Number(l)) if l.value().is_finite() => Ok(l.value()),
                Some(_) => Err(invalid(param, "expected a numeric literal")),
                None => Err(missing(param)),
            }
        };
        let pv = match call.param("PV") {
            Some(PidArg::Name(n)) => n.clone(),
            _ => return Err(invalid("PV", "expected a variable")),
        };
        let action = match call.param("ACTION") {
            Some(PidArg::Name(a)) if a.eq_ignore_ascii_case("DIRECT") => Action::Direct,
            Some(PidArg::Name(a)) if a.eq_ignore_ascii_case("REVERSE") => Action::Reverse,
            _ => return Err(invalid("ACTION", "expected DIRECT or REVERSE")),
        };
        let cfg = PidConfig {
            instance_id: call.instance.clone(),
            pv,
            sp: number("SP")?,
            kp: number("KP")?,
            ki: number("KI")?,
            kd: number("KD")?,
            action,
            out_min: number("OUT_MIN")?,
            out_max: number("OUT_MAX")?,
            out_target: call.out_target.clone(),
        };
        if cfg.out_min >= cfg.out_max {
            return Err(invalid("OUT_MIN", "must be below OUT_MAX"));
        }
        if let Some(prev) = out.iter().find(|c| c.pv == cfg.pv) {
            return Err(ModelError::DuplicatePv {
                pv: cfg.pv.clone(),
                first: prev.instance_id.clone(),
                second: cfg.instance_id.clone(),
            });
        }
        out.push(cfg);
    }
    Ok(out)
}

fn collect_calls<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a crate::st::PidCall>) {
    for s in stmts {
        match s {
            Stmt::PidCall(c) => out.push(c),
            Stmt::If(i) => {
                collect_calls(&i.then_body, out);
                if let Some(b) = &i.else_body {
                    collect_calls(b, out);
                }
            }
            Stmt::Assign(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mechanism", content = "detail", rename_all = "snake_case")]
pub enum Mechanism {
    Controller(PidConfig),
    DirectEnforce,
    Unreachable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerBinding {
    pub atom: AtomicPredicate,
    #[serde(flatten)]
    pub mechanism: Mechanism,
}

pub const REASON_ENVIRONMENTAL: &str = "environmental";
pub const REASON_NO_CONTROLLER: &str = "no controller; dormant attack only";

/// Classifies every atom by how an attacker could drive it true.
pub fn bind_controllers(atoms: &[AtomicPredicate], ctrls: &[PidConfig]) -> Vec<ControllerBinding> {
    atoms
        .iter()
        .map(|atom| {
            let mechanism = match atom.var_kind {
                VarKind::Operator => Mechanism::DirectEnforce,
                VarKind::Environmental => Mechanism::Unreachable(REASON_ENVIRONMENTAL.into()),
                VarKind::Physical | VarKind::Actuator => {
                    match ctrls.iter().find(|c| c.pv == atom.var) {
                        Some(c) => Mechanism::Controller(c.clone()),
                        None => Mechanism::Unreachable(REASON_NO_CONTROLLER.into()),
                    }
                }
            };
            ControllerBinding {
                atom: atom.clone(),
                mechanism,
            }
        })
        .collect()
}

/// JSON view of what was extracted from a safety/control program pair.
#[derive(Debug, Clone, Serialize)]
pub struct ModelDump {
    pub invariants: Vec<InvariantDump>,
    pub skipped: Vec<Skipped>,
    pub controllers: Vec<PidConfig>,
    pub bindings: Vec<ControllerBinding>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantDump {
    #[serde(flatten)]
    pub invariant: SafetyInvariant,
    pub atoms: Vec<AtomicPredicate>,
}

pub fn model_dump(safety: &Program, control: &Program) -> Result<ModelDump, ModelError> {
    let extraction = extract_invariants(safety)?;
    let controllers = extract_controllers(control)?;
    let mut invariants = Vec::new();
    let mut bindings = Vec::new();
    for inv in extraction.invariants {
        let atoms = atomize(&inv.predicate, &safety.decls)?;
        bindings.extend(bind_controllers(&atoms, &controllers));
        invariants.push(InvariantDump {
            invariant: inv,
            atoms,
        });
    }
    Ok(ModelDump {
        invariants,
        skipped: extraction.skipped,
        controllers,
        bindings,
    })
}
