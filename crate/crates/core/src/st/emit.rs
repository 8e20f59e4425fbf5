//! Canonical text output: two-space indentation, one statement per line,
//! comparisons always parenthesised, other parentheses only where precedence
//! requires them.

use std::fmt::Write;

use super::ast::*;

pub fn emit_program(p: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "PROGRAM {}", p.name);
    if !p.decls.is_empty() {
        out.push_str("  VAR\n");
        for d in &p.decls {
            out.push_str("    ");
            emit_decl(&mut out, d, &p.stmts);
            out.push('\n');
        }
        out.push_str("  END_VAR\n");
    }
    for s in &p.stmts {
        emit_stmt(&mut out, s, 1);
    }
    out.push_str("END_PROGRAM\n");
    out
}

fn emit_decl(out: &mut String, d: &VarDecl, stmts: &[Stmt]) {
    let show_kind = d.kind != default_kind(&d.name, d.dtype, stmts);
    let mut entries = Vec::new();
    if show_kind {
        entries.push(format!("kind := {}", d.kind));
    }
    if let Some(unit) = &d.unit {
        entries.push(format!("unit := '{unit}'"));
    }
    if !entries.is_empty() {
        let _ = write!(out, "{{{}}} ", entries.join("; "));
    }
    let _ = write!(out, "{} : {}", d.name, d.dtype.keyword());
    if let Some(init) = &d.init {
        let _ = write!(out, " := {init}");
    }
    out.push(';');
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn emit_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match s {
        Stmt::Assign(a) => {
            let _ = writeln!(out, "{} := {};", a.target, emit_expr(&a.value));
        }
        Stmt::PidCall(c) => {
            let mut args: Vec<String> = c
                .params
                .iter()
                .map(|p| {
                    let v = match &p.value {
                        PidArg::Number(l) => l.to_string(),
                        PidArg::Name(n) => n.clone(),
                    };
                    format!("{} := {}", p.name, v)
                })
                .collect();
            args.push(format!("OUT => {}", c.out_target));
            let _ = writeln!(out, "{}({});", c.instance, args.join(", "));
        }
        Stmt::If(i) => {
            let _ = writeln!(out, "IF {} THEN", emit_expr(&i.cond));
            for s in &i.then_body {
                emit_stmt(out, s, level + 1);
            }
            if let Some(else_body) = &i.else_body {
                indent(out, level);
                out.push_str("ELSE\n");
                for s in else_body {
                    emit_stmt(out, s, level + 1);
                }
            }
            indent(out, level);
            out.push_str("END_IF;\n");
        }
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Or { .. } => 1,
        Expr::And { .. } => 2,
        Expr::Not { .. } => 3,
        _ => 4,
    }
}

/// Renders an expression in canonical form.
pub fn emit_expr(e: &Expr) -> String {
    match e {
        Expr::Cmp { var, op, threshold } => format!("({var} {op} {threshold})"),
        Expr::Bool { value } => if *value { "1" } else { "0" }.to_string(),
        Expr::Real { value } => value.to_string(),
        Expr::Var { name } => name.clone(),
        Expr::And { lhs, rhs } => binary(lhs, rhs, "AND", 2),
        Expr::Or { lhs, rhs } => binary(lhs, rhs, "OR", 1),
        Expr::Not { inner } => {
            if precedence(inner) < 3 {
                format!("NOT ({})", emit_expr(inner))
            } else {
                format!("NOT {}", emit_expr(inner))
            }
        }
    }
}

// Binary operators are left-associative: a right operand of equal
// precedence needs parentheses, a left one does not.
fn binary(lhs: &Expr, rhs: &Expr, op: &str, prec: u8) -> String {
    let l = emit_expr(lhs);
    let r = emit_expr(rhs);
    let l = if precedence(lhs) < prec {
        format!("({l})")
    } else {
        l
    };
    let r = if precedence(rhs) <= prec {
        format!("({r})")
    } else {
        r
    };
    format!("{l} {op} {r}")
}
