//! Syntax tree for the structured-text subset.
//!
//! Equality on [`Program`] is structural: source positions are kept in a side
//! table and ignored by `==`, so a program compares equal to the result of
//! parsing its own emitted text.

use serde::Serialize;
use std::fmt;

/// Which layer a source file belongs to. Declared by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Safety,
    Control,
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub body: String,
    pub role: Role,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, body: impl Into<String>, role: Role) -> Self {
        Self {
            path: path.into(),
            body: body.into(),
            role,
        }
    }
}

/// 1-based line/column position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DataType {
    #[serde(rename = "BOOL")]
    Bool,
    #[serde(rename = "REAL")]
    Real,
    #[serde(rename = "PID")]
    Pid,
}

impl DataType {
    pub fn keyword(self) -> &'static str {
        match self {
            DataType::Bool => "BOOL",
            DataType::Real => "REAL",
            DataType::Pid => "PID",
        }
    }
}

/// State classification of a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Physical,
    Environmental,
    Operator,
    Actuator,
}

impl VarKind {
    pub fn keyword(self) -> &'static str {
        match self {
            VarKind::Physical => "physical",
            VarKind::Environmental => "environmental",
            VarKind::Operator => "operator",
            VarKind::Actuator => "actuator",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "physical" => Some(VarKind::Physical),
            "environmental" => Some(VarKind::Environmental),
            "operator" => Some(VarKind::Operator),
            "actuator" => Some(VarKind::Actuator),
            _ => None,
        }
    }
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A numeric literal kept exactly as written (`10`, `10.0`, `-2.5`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Literal(String);

impl Literal {
    /// Accepts `-?digits(.digits)?`.
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        let body = text.strip_prefix('-').unwrap_or(&text);
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if digits(int) && frac.is_none_or(digits) {
            Some(Literal(text))
        } else {
            None
        }
    }

    /// Canonical text for a computed value; always carries a fractional part.
    pub fn from_f64(v: f64) -> Self {
        let mut s = format!("{v}");
        if !s.contains('.') {
            s.push_str(".0");
        }
        Literal(s)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn value(&self) -> f64 {
        // Construction guarantees a valid decimal.
        self.0.parse().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarDecl {
    pub name: String,
    pub dtype: DataType,
    pub kind: VarKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Literal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, dtype: DataType, kind: VarKind) -> Self {
        Self {
            name: name.into(),
            dtype,
            kind,
            init: None,
            unit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator `op'` with `NOT (x op t)` equivalent to `x op' t`.
    pub fn negated(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "node")]
pub enum Expr {
    /// `var op threshold`; `var` is a REAL variable.
    Cmp {
        var: String,
        op: CmpOp,
        threshold: Literal,
    },
    /// `0` / `1` in boolean context.
    Bool {
        value: bool,
    },
    Real {
        value: Literal,
    },
    Var {
        name: String,
    },
    And {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Or {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Not {
        inner: Box<Expr>,
    },
}

impl Expr {
    pub fn cmp(var: impl Into<String>, op: CmpOp, threshold: Literal) -> Self {
        Expr::Cmp {
            var: var.into(),
            op,
            threshold,
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var { name: name.into() }
    }

    pub fn bool(value: bool) -> Self {
        Expr::Bool { value }
    }

    pub fn real(value: Literal) -> Self {
        Expr::Real { value }
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Self {
        Expr::And {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Self {
        Expr::Or {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Expr) -> Self {
        Expr::Not {
            inner: Box::new(inner),
        }
    }

    /// Names of all variables the expression reads, in left-to-right order.
    pub fn referenced_vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Cmp { var, .. } => out.push(var),
            Expr::Var { name } => out.push(name),
            Expr::Bool { .. } | Expr::Real { .. } => {}
            Expr::And { lhs, rhs } | Expr::Or { lhs, rhs } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Expr::Not { inner } => inner.collect_vars(out),
        }
    }
}

/// Named argument value of a PID call.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "arg", content = "value", rename_all = "lowercase")]
pub enum PidArg {
    Number(Literal),
    /// A declared variable, or `DIRECT`/`REVERSE` for the `ACTION` parameter.
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PidParam {
    pub name: String,
    pub value: PidArg,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IfStmt {
    pub cond: Expr,
    pub then_body: Vec<Stmt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub else_body: Option<Vec<Stmt>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assign {
    pub target: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PidCall {
    pub instance: String,
    pub params: Vec<PidParam>,
    pub out_target: String,
}

impl PidCall {
    /// Case-insensitive lookup of a named parameter.
    pub fn param(&self, name: &str) -> Option<&PidArg> {
        self.params
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .map(|p| &p.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "stmt")]
pub enum Stmt {
    If(IfStmt),
    Assign(Assign),
    PidCall(PidCall),
}

impl Stmt {
    pub fn assign(target: impl Into<String>, value: Expr) -> Self {
        Stmt::Assign(Assign {
            target: target.into(),
            value,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Program {
    #[serde(rename = "program")]
    pub name: String,
    pub decls: Vec<VarDecl>,
    pub stmts: Vec<Stmt>,
    /// Start position of each top-level statement, when parsed from text.
    #[serde(skip)]
    pub stmt_spans: Vec<Span>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.decls == other.decls && self.stmts == other.stmts
    }
}

impl Program {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            decls: Vec::new(),
            stmts: Vec::new(),
            stmt_spans: Vec::new(),
        }
    }

    pub fn decl(&self, name: &str) -> Option<&VarDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn span_of(&self, index: usize) -> Option<Span> {
        self.stmt_spans.get(index).copied()
    }
}

/// Kind assigned to a declaration that carries no `kind` pragma: REAL
/// defaults to physical, BOOL assigned inside some IF body to actuator,
/// anything else to physical.
pub fn default_kind(decl_name: &str, dtype: DataType, stmts: &[Stmt]) -> VarKind {
    if dtype == DataType::Bool && assigned_in_if(decl_name, stmts, false) {
        VarKind::Actuator
    } else {
        VarKind::Physical
    }
}

fn assigned_in_if(name: &str, stmts: &[Stmt], inside_if: bool) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Assign(a) => inside_if && a.target == name,
        Stmt::If(i) => {
            assigned_in_if(name, &i.then_body, true)
                || i.else_body
                    .as_deref()
                    .is_some_and(|b| assigned_in_if(name, b, true))
        }
        Stmt::PidCall(_) => false,
    })
}
