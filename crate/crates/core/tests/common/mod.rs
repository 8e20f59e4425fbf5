//! Shared fixtures and seeded generators for the integration tests.

#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use invflip::st::*;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn parse_fixture(name: &str) -> Program {
    parse_str(&read_fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(fixture_path("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "st"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect()
}

/// Boolean structure over atom indices, evaluated without the library.
#[derive(Debug, Clone)]
pub enum Formula {
    Atom(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn eval(&self, truth: &[bool]) -> bool {
        match self {
            Formula::Atom(i) => truth[*i],
            Formula::Not(f) => !f.eval(truth),
            Formula::And(a, b) => a.eval(truth) && b.eval(truth),
            Formula::Or(a, b) => a.eval(truth) || b.eval(truth),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenAtom {
    pub var: String,
    pub op: CmpOp,
    pub threshold: f64,
}

impl GenAtom {
    /// A variable value that makes the comparison come out as `truth`.
    pub fn value_for(&self, truth: bool) -> f64 {
        let below = self.threshold - 1.0;
        let above = self.threshold + 1.0;
        match (self.op, truth) {
            (CmpOp::Lt | CmpOp::Le, true) | (CmpOp::Gt | CmpOp::Ge, false) => below,
            (CmpOp::Lt | CmpOp::Le, false) | (CmpOp::Gt | CmpOp::Ge, true) => above,
        }
    }
}

/// A single-IF safety program `IF P THEN u := c; ELSE u := NOT c;` together
/// with an independent description of `P`.
#[derive(Debug, Clone)]
pub struct GenInvariant {
    pub program: Program,
    pub atoms: Vec<GenAtom>,
    pub formula: Formula,
    pub then_value: bool,
}

impl GenInvariant {
    /// Sensor values realising one truth assignment of the atoms.
    pub fn tags_for(&self, truth: &[bool]) -> Vec<(String, f64)> {
        self.atoms
            .iter()
            .zip(truth)
            .map(|(a, t)| (a.var.clone(), a.value_for(*t)))
            .collect()
    }
}

const OPS: [CmpOp; 4] = [CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge];

fn lit_int(v: i64) -> Literal {
    Literal::from_f64(v as f64)
}

fn build_formula<R: Rng>(rng: &mut R, leaves: &[usize], atoms: &[GenAtom]) -> (Formula, Expr) {
    let (f, e) = if leaves.len() == 1 {
        let a = &atoms[leaves[0]];
        (
            Formula::Atom(leaves[0]),
            Expr::cmp(a.var.clone(), a.op, Literal::from_f64(a.threshold)),
        )
    } else {
        let k = rng.gen_range(1..leaves.len());
        let (fl, el) = build_formula(rng, &leaves[..k], atoms);
        let (fr, er) = build_formula(rng, &leaves[k..], atoms);
        if rng.gen_bool(0.5) {
            (Formula::And(Box::new(fl), Box::new(fr)), Expr::and(el, er))
        } else {
            (Formula::Or(Box::new(fl), Box::new(fr)), Expr::or(el, er))
        }
    };
    if rng.gen_bool(0.25) {
        (Formula::Not(Box::new(f)), Expr::not(e))
    } else {
        (f, e)
    }
}

pub fn gen_invariant<R: Rng>(rng: &mut R, n_atoms: usize) -> GenInvariant {
    assert!(n_atoms >= 1);
    let atoms: Vec<GenAtom> = (0..n_atoms)
        .map(|i| GenAtom {
            var: format!("s{i}"),
            op: *OPS.choose(rng).unwrap(),
            threshold: rng.gen_range(-50..=50) as f64,
        })
        .collect();
    let mut leaves: Vec<usize> = (0..n_atoms).collect();
    leaves.shuffle(rng);
    let (formula, cond) = build_formula(rng, &leaves, &atoms);
    let then_value = rng.gen_bool(0.5);

    let mut program = Program::new("GEN_SAFETY");
    for a in &atoms {
        program.decls.push(VarDecl::new(
            a.var.clone(),
            DataType::Real,
            VarKind::Physical,
        ));
    }
    program
        .decls
        .push(VarDecl::new("u", DataType::Bool, VarKind::Actuator));
    program.stmts.push(Stmt::If(IfStmt {
        cond,
        then_body: vec![Stmt::assign("u", Expr::bool(then_value))],
        else_body: Some(vec![Stmt::assign("u", Expr::bool(!then_value))]),
    }));
    GenInvariant {
        program,
        atoms,
        formula,
        then_value,
    }
}

const UNITS: [&str; 4] = ["%", "bar", "degC", "m3/h"];

/// Random but well-typed program covering every statement and declaration form.
pub fn gen_program<R: Rng>(rng: &mut R) -> Program {
    let mut p = Program::new(format!("GEN_{}", rng.gen_range(0..1000)));
    let n_real = rng.gen_range(1..=4);
    let n_bool = rng.gen_range(1..=3);
    let n_pid = rng.gen_range(0..=2);
    let kinds = [
        VarKind::Physical,
        VarKind::Environmental,
        VarKind::Operator,
        VarKind::Actuator,
    ];
    let reals: Vec<String> = (0..n_real).map(|i| format!("r{i}")).collect();
    let bools: Vec<String> = (0..n_bool).map(|i| format!("b{i}")).collect();
    let pids: Vec<String> = (0..n_pid).map(|i| format!("PIC{}", 100 + i)).collect();

    for name in &reals {
        let mut d = VarDecl::new(name.clone(), DataType::Real, *kinds.choose(rng).unwrap());
        if rng.gen_bool(0.3) {
            d.init = Some(
                Literal::new(format!(
                    "{}.{}",
                    rng.gen_range(-9..=99),
                    rng.gen_range(0..10)
                ))
                .unwrap(),
            );
        }
        if rng.gen_bool(0.4) {
            d.unit = Some(UNITS.choose(rng).unwrap().to_string());
        }
        p.decls.push(d);
    }
    for name in &bools {
        let mut d = VarDecl::new(name.clone(), DataType::Bool, *kinds.choose(rng).unwrap());
        if rng.gen_bool(0.3) {
            d.init = Some(Literal::new(if rng.gen_bool(0.5) { "1" } else { "0" }).unwrap());
        }
        p.decls.push(d);
    }
    for name in &pids {
        p.decls
            .push(VarDecl::new(name.clone(), DataType::Pid, VarKind::Physical));
    }

    let n_stmts = rng.gen_range(0..=5);
    for _ in 0..n_stmts {
        let s = gen_stmt(rng, &reals, &bools, &pids, 2);
        p.stmts.push(s);
    }
    p
}

fn gen_stmt<R: Rng>(
    rng: &mut R,
    reals: &[String],
    bools: &[String],
    pids: &[String],
    depth: u32,
) -> Stmt {
    let choice = rng.gen_range(0..if depth > 0 { 4 } else { 3 });
    match choice {
        0 => {
            let target = reals.choose(rng).unwrap().clone();
            let value = if rng.gen_bool(0.5) {
                Expr::real(lit_int(rng.gen_range(-100..=100)))
            } else {
                Expr::var(reals.choose(rng).unwrap().clone())
            };
            Stmt::assign(target, value)
        }
        1 => Stmt::assign(
            bools.choose(rng).unwrap().clone(),
            gen_bool_expr(rng, reals, bools, 2),
        ),
        2 if !pids.is_empty() => {
            let instance = pids.choose(rng).unwrap().clone();
            let mut params = vec![PidParam {
                name: "PV".into(),
                value: PidArg::Name(reals.choose(rng).unwrap().clone()),
            }];
            for name in ["SP", "KP", "KI", "KD", "OUT_MIN", "OUT_MAX"] {
                if rng.gen_bool(0.7) {
                    params.push(PidParam {
                        name: name.into(),
                        value: PidArg::Number(lit_int(rng.gen_range(-10..=100))),
                    });
                }
            }
            if rng.gen_bool(0.8) {
                let action = if rng.gen_bool(0.5) {
                    "DIRECT"
                } else {
                    "REVERSE"
                };
                params.push(PidParam {
                    name: "ACTION".into(),
                    value: PidArg::Name(action.into()),
                });
            }
            params.shuffle(rng);
            Stmt::PidCall(PidCall {
                instance,
                params,
                out_target: reals.choose(rng).unwrap().clone(),
            })
        }
        2 => Stmt::assign(
            bools.choose(rng).unwrap().clone(),
            Expr::bool(rng.gen_bool(0.5)),
        ),
        _ => {
            let cond = gen_bool_expr(rng, reals, bools, 3);
            let then_body = (0..rng.gen_range(0..=2))
                .map(|_| gen_stmt(rng, reals, bools, pids, depth - 1))
                .collect();
            let else_body = rng.gen_bool(0.6).then(|| {
                (0..rng.gen_range(0..=2))
                    .map(|_| gen_stmt(rng, reals, bools, pids, depth - 1))
                    .collect()
            });
            Stmt::If(IfStmt {
                cond,
                then_body,
                else_body,
            })
        }
    }
}

fn gen_bool_expr<R: Rng>(rng: &mut R, reals: &[String], bools: &[String], depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        return match rng.gen_range(0..6) {
            0 => Expr::bool(rng.gen_bool(0.5)),
            1 | 2 => Expr::var(bools.choose(rng).unwrap().clone()),
            _ => Expr::cmp(
                reals.choose(rng).unwrap().clone(),
                *OPS.choose(rng).unwrap(),
                Literal::new(format!(
                    "{}.{}",
                    rng.gen_range(-50..=50),
                    rng.gen_range(0..100)
                ))
                .unwrap(),
            ),
        };
    }
    match rng.gen_range(0..3) {
        0 => Expr::not(gen_bool_expr(rng, reals, bools, depth - 1)),
        1 => Expr::and(
            gen_bool_expr(rng, reals, bools, depth - 1),
            gen_bool_expr(rng, reals, bools, depth - 1),
        ),
        _ => Expr::or(
            gen_bool_expr(rng, reals, bools, depth - 1),
            gen_bool_expr(rng, reals, bools, depth - 1),
        ),
    }
}
