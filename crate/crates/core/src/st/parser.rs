//! Recursive-descent parser for the structured-text subset.
//!
//! Declarations are read before statements, so type and declaration checks
//! happen during the statement pass. Variables without a `kind` pragma get
//! their default kind once the statement list is known.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

const KEYWORDS: &[&str] = &[
    "PROGRAM",
    "END_PROGRAM",
    "VAR",
    "END_VAR",
    "IF",
    "THEN",
    "ELSE",
    "ELSIF",
    "END_IF",
    "AND",
    "OR",
    "NOT",
    "BOOL",
    "REAL",
    "PID",
    "TRUE",
    "FALSE",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

pub fn parse_str(src: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(src)?;
    Parser {
        tokens,
        pos: 0,
        types: HashMap::new(),
    }
    .program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    types: HashMap<String, DataType>,
}

/// Declaration before its kind has been resolved.
struct PendingDecl {
    decl: VarDecl,
    kind: Option<VarKind>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &TokenKind {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::new(t.span, expected, t.kind.describe())
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Span, ParseError> {
        if self.at_keyword(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.error_here(format!("'{kw}'")))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Span, ParseError> {
        if self.peek().kind == kind {
            Ok(self.advance().span)
        } else {
            Err(self.error_here(kind.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                let span = self.advance().span;
                Ok((s, span))
            }
            _ => Err(self.error_here(what)),
        }
    }

    fn program(mut self) -> Result<Program, ParseError> {
        self.expect_keyword("PROGRAM")?;
        let (name, _) = self.ident("program name")?;

        let mut pending = Vec::new();
        while self.eat_keyword("VAR") {
            while !self.at_keyword("END_VAR") {
                let d = self.var_decl()?;
                pending.push(d);
            }
            self.expect_keyword("END_VAR")?;
        }

        let mut stmts = Vec::new();
        let mut stmt_spans = Vec::new();
        while !self.at_keyword("END_PROGRAM") {
            stmt_spans.push(self.peek().span);
            stmts.push(self.stmt()?);
        }
        self.expect_keyword("END_PROGRAM")?;
        if self.peek().kind != TokenKind::Eof {
            return Err(self.error_here("end of input"));
        }

        let decls = pending
            .into_iter()
            .map(|p| {
                let kind = p
                    .kind
                    .unwrap_or_else(|| default_kind(&p.decl.name, p.decl.dtype, &stmts));
                VarDecl { kind, ..p.decl }
            })
            .collect();

        Ok(Program {
            name,
            decls,
            stmts,
            stmt_spans,
        })
    }

    fn var_decl(&mut self) -> Result<PendingDecl, ParseError> {
        let (kind, unit) = if self.peek().kind == TokenKind::LBrace {
            self.pragma()?
        } else {
            (None, None)
        };

        let (name, span) = self.ident("variable name or 'END_VAR'")?;
        if self.types.contains_key(&name) {
            return Err(ParseError::new(
                span,
                "unique declaration name",
                format!("duplicate declaration of '{name}'"),
            ));
        }
        self.expect(TokenKind::Colon)?;

        let dtype = if self.eat_keyword("BOOL") {
            DataType::Bool
        } else if self.eat_keyword("REAL") {
            DataType::Real
        } else if self.eat_keyword("PID") {
            DataType::Pid
        } else {
            return Err(self.error_here("type 'BOOL', 'REAL' or 'PID'"));
        };

        let init = if self.eat(&TokenKind::Assign) {
            let lit_span = self.peek().span;
            let lit = self.literal()?;
            match dtype {
                DataType::Bool if !matches!(lit.as_str(), "0" | "1") => {
                    return Err(ParseError::new(
                        lit_span,
                        "BOOL initial value 0 or 1",
                        format!("'{lit}'"),
                    ));
                }
                DataType::Pid => {
                    return Err(ParseError::new(
                        lit_span,
                        "';' (PID instances take no initial value)",
                        format!("'{lit}'"),
                    ));
                }
                _ => {}
            }
            Some(lit)
        } else {
            None
        };
        self.expect(TokenKind::Semi)?;

        self.types.insert(name.clone(), dtype);
        Ok(PendingDecl {
            decl: VarDecl {
                name,
                dtype,
                kind: VarKind::Physical,
                init,
                unit,
            },
            kind,
        })
    }

    /// `{kind := operator; unit := '%'}`
    fn pragma(&mut self) -> Result<(Option<VarKind>, Option<String>), ParseError> {
        self.expect(TokenKind::LBrace)?;
        let mut kind = None;
        let mut unit = None;
        loop {
            let (key, key_span) = self.ident("pragma key 'kind' or 'unit'")?;
            self.expect(TokenKind::Assign)?;
            if key.eq_ignore_ascii_case("kind") {
                let span = self.peek().span;
                let (value, _) = self.ident("variable kind")?;
                let k = VarKind::from_keyword(&value).ok_or_else(|| {
                    ParseError::new(
                        span,
                        "physical, environmental, operator or actuator",
                        format!("'{value}'"),
                    )
                })?;
                kind = Some(k);
            } else if key.eq_ignore_ascii_case("unit") {
                match &self.peek().kind {
                    TokenKind::Str(s) => {
                        unit = Some(s.clone());
                        self.advance();
                    }
                    _ => return Err(self.error_here("quoted unit string")),
                }
            } else {
                return Err(ParseError::new(
                    key_span,
                    "pragma key 'kind' or 'unit'",
                    format!("'{key}'"),
                ));
            }
            if !(self.eat(&TokenKind::Semi) || self.eat(&TokenKind::Comma)) {
                break;
            }
        }
        self.expect(TokenKind::RBrace)?;
        Ok((kind, unit))
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let neg = self.eat(&TokenKind::Minus);
        match &self.peek().kind {
            TokenKind::Number(n) => {
                let text = if neg { format!("-{n}") } else { n.clone() };
                self.advance();
                Ok(Literal::new(text).expect("lexer produces valid decimals"))
            }
            _ => Err(self.error_here("numeric literal")),
        }
    }

    fn lookup(&self, name: &str, span: Span) -> Result<DataType, ParseError> {
        self.types.get(name).copied().ok_or_else(|| {
            ParseError::new(span, "declared identifier", format!("undeclared '{name}'"))
        })
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        if self.eat_keyword("IF") {
            let cond = self.bool_expr()?;
            self.expect_keyword("THEN")?;
            let then_body = self.block(&["ELSE", "END_IF"])?;
            let else_body = if self.eat_keyword("ELSE") {
                Some(self.block(&["END_IF"])?)
            } else {
                None
            };
            self.expect_keyword("END_IF")?;
            self.eat(&TokenKind::Semi);
            return Ok(Stmt::If(IfStmt {
                cond,
                then_body,
                else_body,
            }));
        }

        let (name, span) = self.ident("statement")?;
        let dtype = self.lookup(&name, span)?;
        match self.peek().kind {
            TokenKind::Assign => {
                self.advance();
                let value = match dtype {
                    DataType::Bool => self.bool_expr()?,
                    DataType::Real => self.real_expr()?,
                    DataType::Pid => {
                        return Err(ParseError::new(
                            span,
                            "assignable BOOL or REAL variable",
                            format!("PID instance '{name}'"),
                        ));
                    }
                };
                self.expect(TokenKind::Semi)?;
                Ok(Stmt::assign(name, value))
            }
            TokenKind::LParen if dtype == DataType::Pid => self.pid_call(name),
            TokenKind::LParen => Err(ParseError::new(
                span,
                "declared PID instance",
                format!("'{name}' of type {}", dtype.keyword()),
            )),
            _ => Err(self.error_here("':=' or '('")),
        }
    }

    fn block(&mut self, terminators: &[&str]) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        while !terminators.iter().any(|kw| self.at_keyword(kw)) {
            if self.peek().kind == TokenKind::Eof {
                let expected = terminators
                    .iter()
                    .map(|k| format!("'{k}'"))
                    .collect::<Vec<_>>()
                    .join(" or ");
                return Err(self.error_here(expected));
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn pid_call(&mut self, instance: String) -> Result<Stmt, ParseError> {
        let open = self.expect(TokenKind::LParen)?;
        let mut params: Vec<PidParam> = Vec::new();
        let mut out_target = None;
        loop {
            let (pname, pspan) = match &self.peek().kind {
                // OUT and parameter names may collide with nothing reserved.
                TokenKind::Ident(s) => {
                    let s = s.clone();
                    (s, self.advance().span)
                }
                _ => return Err(self.error_here("parameter name")),
            };
            if self.eat(&TokenKind::Arrow) {
                if !pname.eq_ignore_ascii_case("OUT") {
                    return Err(ParseError::new(
                        pspan,
                        "'OUT' before '=>'",
                        format!("'{pname}'"),
                    ));
                }
                if out_target.is_some() {
                    return Err(ParseError::new(
                        pspan,
                        "a single OUT binding",
                        "second 'OUT =>'",
                    ));
                }
                let (target, tspan) = self.ident("output variable")?;
                self.expect_real_var(&target, tspan)?;
                out_target = Some(target);
            } else {
                self.expect(TokenKind::Assign)?;
                if params.iter().any(|p| p.name.eq_ignore_ascii_case(&pname)) {
                    return Err(ParseError::new(
                        pspan,
                        "distinct parameter names",
                        format!("duplicate parameter '{pname}'"),
                    ));
                }
                let value = self.pid_arg(&pname)?;
                params.push(PidParam { name: pname, value });
            }
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RParen)?;
        self.expect(TokenKind::Semi)?;
        let out_target = out_target.ok_or_else(|| {
            ParseError::new(open, "'OUT => <variable>' binding", "call without output")
        })?;
        Ok(Stmt::PidCall(PidCall {
            instance,
            params,
            out_target,
        }))
    }

    fn pid_arg(&mut self, param: &str) -> Result<PidArg, ParseError> {
        match &self.peek().kind {
            TokenKind::Number(_) | TokenKind::Minus => Ok(PidArg::Number(self.literal()?)),
            TokenKind::Ident(s) if param.eq_ignore_ascii_case("ACTION") => {
                if s.eq_ignore_ascii_case("DIRECT") || s.eq_ignore_ascii_case("REVERSE") {
                    let s = s.clone();
                    self.advance();
                    Ok(PidArg::Name(s))
                } else {
                    Err(self.error_here("'DIRECT' or 'REVERSE'"))
                }
            }
            TokenKind::Ident(_) => {
                let (name, span) = self.ident("variable or number")?;
                self.expect_real_var(&name, span)?;
                Ok(PidArg::Name(name))
            }
            _ => Err(self.error_here("variable or number")),
        }
    }

    fn expect_real_var(&self, name: &str, span: Span) -> Result<(), ParseError> {
        match self.lookup(name, span)? {
            DataType::Real => Ok(()),
            other => Err(ParseError::new(
                span,
                "REAL variable",
                format!("'{name}' of type {}", other.keyword()),
            )),
        }
    }

    fn real_expr(&mut self) -> Result<Expr, ParseError> {
        match &self.peek().kind {
            TokenKind::Number(_) | TokenKind::Minus => Ok(Expr::real(self.literal()?)),
            TokenKind::Ident(_) => {
                let (name, span) = self.ident("REAL value")?;
                self.expect_real_var(&name, span)?;
                Ok(Expr::var(name))
            }
            _ => Err(self.error_here("REAL value")),
        }
    }

    fn bool_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("OR") {
            let rhs = self.and_expr()?;
            lhs = Expr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat_keyword("AND") {
            let rhs = self.unary()?;
            lhs = Expr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_keyword("NOT") {
            return Ok(Expr::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::LParen => {
                self.advance();
                let e = self.bool_expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Number(n) if n == "0" || n == "1" => {
                self.advance();
                Ok(Expr::bool(n == "1"))
            }
            TokenKind::Ident(_) => {
                let (name, span) = self.ident("boolean expression")?;
                let dtype = self.lookup(&name, span)?;
                let op = match self.peek_at(0) {
                    TokenKind::Lt => Some(CmpOp::Lt),
                    TokenKind::Gt => Some(CmpOp::Gt),
                    TokenKind::Le => Some(CmpOp::Le),
                    TokenKind::Ge => Some(CmpOp::Ge),
                    TokenKind::Eq | TokenKind::Ne => {
                        return Err(self.error_here(
                            "'<', '>', '<=' or '>=' (equality comparisons are not supported)",
                        ));
                    }
                    _ => None,
                };
                match (op, dtype) {
                    (Some(op), DataType::Real) => {
                        self.advance();
                        let threshold = self.literal()?;
                        Ok(Expr::cmp(name, op, threshold))
                    }
                    (Some(_), other) => Err(ParseError::new(
                        span,
                        "REAL variable on the left of a comparison",
                        format!("'{name}' of type {}", other.keyword()),
                    )),
                    (None, DataType::Bool) => Ok(Expr::var(name)),
                    (None, other) => Err(ParseError::new(
                        span,
                        "BOOL variable or comparison",
                        format!("'{name}' of type {}", other.keyword()),
                    )),
                }
            }
            _ => Err(self.error_here("boolean expression")),
        }
    }
}
