//! Scan-cycle interpreter for parsed programs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::pid::{pid_step, PidState};
use super::SimError;
use crate::model::PidConfig;
use crate::st::eval::{eval_bool, eval_value};
use crate::st::{DataType, Program, Stmt};

/// Process image: every tag value as a float, BOOL tags as 0.0 / 1.0.
pub type Tags = BTreeMap<String, f64>;

/// Per-run interpreter state carried across scans.
#[derive(Debug, Clone, Default)]
pub struct ExecEnv {
    pub dt: f64,
    pub controllers: HashMap<String, PidConfig>,
    pub pid_states: HashMap<String, PidState>,
    /// Tags written by a driver program; control logic must not touch them.
    pub overridden: BTreeSet<String>,
}

impl ExecEnv {
    pub fn new(dt: f64, controllers: &[PidConfig]) -> Self {
        Self {
            dt,
            controllers: controllers
                .iter()
                .map(|c| (c.instance_id.clone(), c.clone()))
                .collect(),
            ..Self::default()
        }
    }
}

/// Runs one scan of `program` against `tags`.
pub fn execute(program: &Program, tags: &mut Tags, env: &mut ExecEnv) -> Result<(), SimError> {
    exec_block(program, &program.stmts, tags, env)
}

/// Runs one scan of a program that contains no PID calls.
pub fn execute_logic(program: &Program, tags: &mut Tags) -> Result<(), SimError> {
    execute(program, tags, &mut ExecEnv::new(1.0, &[]))
}

fn exec_block(
    program: &Program,
    stmts: &[Stmt],
    tags: &mut Tags,
    env: &mut ExecEnv,
) -> Result<(), SimError> {
    for s in stmts {
        match s {
            Stmt::If(i) => {
                let cond = {
                    let lookup = |n: &str| tags.get(n).copied();
                    eval_bool(&i.cond, &lookup).map_err(|u| SimError::UnknownTag(u.0))?
                };
                if cond {
                    exec_block(program, &i.then_body, tags, env)?;
                } else if let Some(b) = &i.else_body {
                    exec_block(program, b, tags, env)?;
                }
            }
            Stmt::Assign(a) => {
                if env.overridden.contains(&a.target) {
                    continue;
                }
                let v = {
                    let lookup = |n: &str| tags.get(n).copied();
                    eval_value(&a.value, &lookup).map_err(|u| SimError::UnknownTag(u.0))?
                };
                let v = match program.decl(&a.target).map(|d| d.dtype) {
                    Some(DataType::Bool) => f64::from(u8::from(v != 0.0)),
                    _ => v,
                };
                tags.insert(a.target.clone(), v);
            }
            Stmt::PidCall(c) => {
                if env.overridden.contains(&c.out_target) {
                    continue;
                }
                let cfg = env
                    .controllers
                    .get(&c.instance)
                    .ok_or_else(|| SimError::UnknownTag(c.instance.clone()))?;
                let pv = *tags
                    .get(&cfg.pv)
                    .ok_or_else(|| SimError::UnknownTag(cfg.pv.clone()))?;
                let st = env.pid_states.get(&c.instance).copied().unwrap_or_default();
                let (out, st) = pid_step(cfg, &st, pv, env.dt);
                env.pid_states.insert(c.instance.clone(), st);
                tags.insert(c.out_target.clone(), out);
            }
        }
    }
    Ok(())
}

/// Every tag a program assigns, at any nesting depth.
pub fn assigned_targets(program: &Program) -> BTreeSet<String> {
    fn walk(stmts: &[Stmt], out: &mut BTreeSet<String>) {
        for s in stmts {
            match s {
                Stmt::Assign(a) => {
                    out.insert(a.target.clone());
                }
                Stmt::PidCall(c) => {
                    out.insert(c.out_target.clone());
                }
                Stmt::If(i) => {
                    walk(&i.then_body, out);
                    if let Some(b) = &i.else_body {
                        walk(b, out);
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(&program.stmts, &mut out);
    out
}
