use super::ast::Expr;

/// A variable lookup failed while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unbound(pub String);

/// Evaluates a boolean expression. BOOL variables are non-zero for true.
pub fn eval_bool<F>(e: &Expr, lookup: &F) -> Result<bool, Unbound>
where
    F: Fn(&str) -> Option<f64>,
{
    let get = |name: &str| lookup(name).ok_or_else(|| Unbound(name.to_string()));
    Ok(match e {
        Expr::Cmp { var, op, threshold } => op.holds(get(var)?, threshold.value()),
        Expr::Bool { value } => *value,
        Expr::Real { value } => value.value() != 0.0,
        Expr::Var { name } => get(name)? != 0.0,
        Expr::And { lhs, rhs } => eval_bool(lhs, lookup)? && eval_bool(rhs, lookup)?,
        Expr::Or { lhs, rhs } => eval_bool(lhs, lookup)? || eval_bool(rhs, lookup)?,
        Expr::Not { inner } => !eval_bool(inner, lookup)?,
    })
}

/// Evaluates an expression as a number; booleans map to 0.0 / 1.0.
pub fn eval_value<F>(e: &Expr, lookup: &F) -> Result<f64, Unbound>
where
    F: Fn(&str) -> Option<f64>,
{
    match e {
        Expr::Real { value } => Ok(value.value()),
        Expr::Var { name } => lookup(name).ok_or_else(|| Unbound(name.clone())),
        other => eval_bool(other, lookup).map(|b| if b { 1.0 } else { 0.0 }),
    }
}
