use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Identifier or keyword; keywords are recognised case-insensitively by the parser.
    Ident(String),
    Number(String),
    Str(String),
    Assign, // :=
    Arrow,  // =>
    Colon,
    Semi,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    Minus,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("'{s}'"),
            TokenKind::Number(s) => format!("number '{s}'"),
            TokenKind::Str(s) => format!("string '{s}'"),
            TokenKind::Assign => "':='".into(),
            TokenKind::Arrow => "'=>'".into(),
            TokenKind::Colon => "':'".into(),
            TokenKind::Semi => "';'".into(),
            TokenKind::Comma => "','".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::LBrace => "'{'".into(),
            TokenKind::RBrace => "'}'".into(),
            TokenKind::Lt => "'<'".into(),
            TokenKind::Gt => "'>'".into(),
            TokenKind::Le => "'<='".into(),
            TokenKind::Ge => "'>='".into(),
            TokenKind::Eq => "'='".into(),
            TokenKind::Ne => "'<>'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.column,
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }
}

/// Splits source text into tokens, dropping whitespace and `(* ... *)` comments.
/// The returned vector always ends with an `Eof` token.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        let span = cur.span();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur
                .peek()
                .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
            {
                s.push(c);
                cur.bump();
            }
            out.push(Token {
                kind: TokenKind::Ident(s),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                s.push(c);
                cur.bump();
            }
            if cur.eat('.') {
                s.push('.');
                let frac_span = cur.span();
                let before = s.len();
                while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                    s.push(c);
                    cur.bump();
                }
                if s.len() == before {
                    return Err(ParseError::new(
                        frac_span,
                        "digit after '.'",
                        describe_char(cur.peek()),
                    ));
                }
            }
            out.push(Token {
                kind: TokenKind::Number(s),
                span,
            });
            continue;
        }

        cur.bump();
        let kind = match c {
            '(' if cur.peek() == Some('*') => {
                cur.bump();
                skip_comment(&mut cur, span)?;
                continue;
            }
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            '{' => TokenKind::LBrace,
            '}' => TokenKind::RBrace,
            ';' => TokenKind::Semi,
            ',' => TokenKind::Comma,
            '-' => TokenKind::Minus,
            ':' if cur.eat('=') => TokenKind::Assign,
            ':' => TokenKind::Colon,
            '=' if cur.eat('>') => TokenKind::Arrow,
            '=' => TokenKind::Eq,
            '<' if cur.eat('=') => TokenKind::Le,
            '<' if cur.eat('>') => TokenKind::Ne,
            '<' => TokenKind::Lt,
            '>' if cur.eat('=') => TokenKind::Ge,
            '>' => TokenKind::Gt,
            '\'' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        Some('\'') => break,
                        Some('\n') | None => {
                            return Err(ParseError::new(span, "closing quote", "end of line"));
                        }
                        Some(c) => s.push(c),
                    }
                }
                TokenKind::Str(s)
            }
            other => {
                return Err(ParseError::new(
                    span,
                    "a token",
                    format!("character '{other}'"),
                ));
            }
        };
        out.push(Token { kind, span });
    }

    out.push(Token {
        kind: TokenKind::Eof,
        span: cur.span(),
    });
    Ok(out)
}

fn skip_comment(cur: &mut Cursor<'_>, start: Span) -> Result<(), ParseError> {
    loop {
        match cur.bump() {
            Some('*') if cur.peek() == Some(')') => {
                cur.bump();
                return Ok(());
            }
            Some(_) => {}
            None => {
                return Err(ParseError::new(
                    start,
                    "'*)' closing the comment",
                    "end of input",
                ));
            }
        }
    }
}

fn describe_char(c: Option<char>) -> String {
    match c {
        Some(c) => format!("character '{c}'"),
        None => "end of input".into(),
    }
}
