//! Textual architecture language: lexer, recursive-descent parser, and
//! renderer.
//!
//! The grammar (normative, `//` line comments allowed anywhere):
//!
//! ```text
//! model         := enumdecl* componentdecl+        // exactly one marked root
//! enumdecl      := "enum" IDENT "{" IDENT ("," IDENT)* "}"
//! componentdecl := ["root"] "component" IDENT ["(" param ("," param)* ")"]
//!                  "{" portdecl* (automaton | composite) "}"
//! param         := IDENT ":" type
//! portdecl      := ("in"|"out") ["delayed" "init" literal] type IDENT ";"
//! automaton     := "automaton" "{" vardecl* "initial" IDENT ";" transition* "}"
//! vardecl       := "var" type IDENT "=" literal ";"
//! transition    := IDENT ":" IDENT "->" IDENT "[" expr "]"
//!                  ("/" "{" (assign|emit)* "}")? ";"
//! assign        := IDENT "=" expr ";"
//! emit          := IDENT "!" expr ";"
//! composite     := "subcomponents" "{" (IDENT ":" IDENT ["(" expr ("," expr)* ")"] ";")* "}"
//!                  "connectors" "{" (endpoint "->" endpoint ";")* "}"
//! endpoint      := IDENT "." IDENT | IDENT
//! type          := "int" | "rat" | "bool" | "string" | IDENT
//! literal       := ["-"] INT | ["-"] DECIMAL | ["-"] INT "/" INT
//!                | STRING | "true" | "false" | IDENT "::" IDENT
//! ```
//!
//! Operator precedence, loosest to tightest:
//! `||` < `&&` < `!` < comparison < `+`/`-` < `*` < unary `-`.
//! Parentheses are allowed; there is no division operator (the `/` in a
//! transition separates the guard from its action block, and inside a
//! literal it forms an exact rational).

use crate::expr::{CmpOp, Expr, ExprNode, Span, VarRef};
use crate::ir::*;
use crate::value::{rational_from_str, TypeTag, Value};
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

/// A positioned parse diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiag {
    pub message: String,
    pub span: Span,
}

impl fmt::Display for ParseDiag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
    }
}

pub type ParseErrors = Vec<ParseDiag>;

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Decimal(BigRational),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    ColonColon,
    Comma,
    Dot,
    Arrow,
    Bang,
    Assign,
    Lt,
    Le,
    Gt,
    Ge,
    Ne,
    AndAnd,
    OrOr,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Decimal(_) => write!(f, "decimal literal"),
            Tok::Str(_) => write!(f, "string literal"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::ColonColon => write!(f, "`::`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Assign => write!(f, "`=`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Le => write!(f, "`<=`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Ge => write!(f, "`>=`"),
            Tok::Ne => write!(f, "`!=`"),
            Tok::AndAnd => write!(f, "`&&`"),
            Tok::OrOr => write!(f, "`||`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "enum",
    "component",
    "root",
    "in",
    "out",
    "delayed",
    "init",
    "automaton",
    "var",
    "initial",
    "subcomponents",
    "connectors",
    "int",
    "rat",
    "bool",
    "string",
    "true",
    "false",
];

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn span_here(&self, len: u32) -> Span {
        Span::new(self.line, self.col, len)
    }

    fn lex(mut self) -> Result<Vec<(Tok, Span)>, ParseDiag> {
        let mut out = Vec::new();
        loop {
            // skip whitespace and line comments
            loop {
                match self.peek() {
                    Some(b) if b.is_ascii_whitespace() => {
                        self.bump();
                    }
                    Some(b'/') if self.peek2() == Some(b'/') => {
                        while let Some(b) = self.peek() {
                            if b == b'\n' {
                                break;
                            }
                            self.bump();
                        }
                    }
                    _ => break,
                }
            }
            let span = self.span_here(1);
            let Some(b) = self.peek() else {
                out.push((Tok::Eof, span));
                return Ok(out);
            };
            let tok = match b {
                b'{' => {
                    self.bump();
                    Tok::LBrace
                }
                b'}' => {
                    self.bump();
                    Tok::RBrace
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b';' => {
                    self.bump();
                    Tok::Semi
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b':' => {
                    self.bump();
                    if self.peek() == Some(b':') {
                        self.bump();
                        Tok::ColonColon
                    } else {
                        Tok::Colon
                    }
                }
                b'-' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        Tok::Minus
                    }
                }
                b'!' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ne
                    } else {
                        Tok::Bang
                    }
                }
                b'=' => {
                    self.bump();
                    Tok::Assign
                }
                b'<' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Le
                    } else {
                        Tok::Lt
                    }
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                b'&' => {
                    self.bump();
                    if self.peek() == Some(b'&') {
                        self.bump();
                        Tok::AndAnd
                    } else {
                        return Err(ParseDiag {
                            message: "expected `&&`".into(),
                            span,
                        });
                    }
                }
                b'|' => {
                    self.bump();
                    if self.peek() == Some(b'|') {
                        self.bump();
                        Tok::OrOr
                    } else {
                        return Err(ParseDiag {
                            message: "expected `||`".into(),
                            span,
                        });
                    }
                }
                b'"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None | Some(b'\n') => {
                                return Err(ParseDiag {
                                    message: "unterminated string literal".into(),
                                    span,
                                })
                            }
                            Some(b'"') => break,
                            Some(b'\\') => match self.bump() {
                                Some(b'"') => s.push('"'),
                                Some(b'\\') => s.push('\\'),
                                Some(b'n') => s.push('\n'),
                                Some(b't') => s.push('\t'),
                                Some(b'r') => s.push('\r'),
                                other => {
                                    return Err(ParseDiag {
                                        message: format!(
                                            "unknown escape `\\{}`",
                                            other.map(|c| c as char).unwrap_or(' ')
                                        ),
                                        span,
                                    })
                                }
                            },
                            Some(b) if b < 0x80 => s.push(b as char),
                            Some(b) => {
                                // re-assemble a UTF-8 sequence
                                let start = self.pos - 1;
                                let mut end = self.pos;
                                while end < self.src.len() && self.src[end] & 0xC0 == 0x80 {
                                    end += 1;
                                }
                                match std::str::from_utf8(&self.src[start..end]) {
                                    Ok(chunk) => {
                                        s.push_str(chunk);
                                        for _ in 0..end - self.pos {
                                            self.bump();
                                        }
                                    }
                                    Err(_) => {
                                        return Err(ParseDiag {
                                            message: format!("invalid byte 0x{b:02x} in string"),
                                            span,
                                        })
                                    }
                                }
                            }
                        }
                    }
                    Tok::Str(s)
                }
                b if b.is_ascii_digit() => {
                    let mut digits = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() {
                            digits.push(c as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if self.peek() == Some(b'.') && self.peek2().is_some_and(|c| c.is_ascii_digit())
                    {
                        self.bump();
                        let mut frac = String::new();
                        while let Some(c) = self.peek() {
                            if c.is_ascii_digit() {
                                frac.push(c as char);
                                self.bump();
                            } else {
                                break;
                            }
                        }
                        let r = rational_from_str(&format!("{digits}.{frac}")).ok_or_else(|| {
                            ParseDiag {
                                message: "malformed decimal literal".into(),
                                span,
                            }
                        })?;
                        Tok::Decimal(r)
                    } else {
                        match digits.parse::<i64>() {
                            Ok(n) => Tok::Int(n),
                            Err(_) => {
                                return Err(ParseDiag {
                                    message: "integer literal out of range".into(),
                                    span,
                                })
                            }
                        }
                    }
                }
                b if b.is_ascii_alphabetic() || b == b'_' => {
                    let mut s = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            s.push(c as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(s)
                }
                other => {
                    return Err(ParseDiag {
                        message: format!("unexpected byte 0x{other:02x}"),
                        span,
                    })
                }
            };
            out.push((tok, span));
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Scope {
    /// name -> type for params, ports, and internal variables.
    names: BTreeMap<String, TypeTag>,
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    errors: ParseErrors,
    enums: Vec<EnumDecl>,
    depth: usize,
}

const MAX_ERRORS: usize = 64;
const MAX_EXPR_DEPTH: usize = 200;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)].0
    }

    fn peek_at(&self, off: usize) -> &Tok {
        &self.toks[(self.pos + off).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos.min(self.toks.len() - 1)].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos.min(self.toks.len() - 1)].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&mut self, message: impl Into<String>, span: Span) {
        if self.errors.len() < MAX_ERRORS {
            self.errors.push(ParseDiag {
                message: message.into(),
                span,
            });
        }
    }

    fn expect(&mut self, want: Tok) -> Result<Span, ()> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            let span = self.span();
            let got = self.peek().clone();
            self.error(format!("expected {want}, found {got}"), span);
            Err(())
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), ()> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let span = self.bump().1;
                Ok((s, span))
            }
            other => {
                let span = self.span();
                self.error(format!("expected {what}, found {other}"), span);
                Err(())
            }
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Span, ()> {
        if self.eat_kw(kw) {
            Ok(self.toks[self.pos - 1].1)
        } else {
            let span = self.span();
            let got = self.peek().clone();
            self.error(format!("expected `{kw}`, found {got}"), span);
            Err(())
        }
    }

    /// Skips tokens until one of the given synchronization points (consumed
    /// when it is `;`).
    fn sync_to_semi_or(&mut self, stops: &[Tok]) {
        loop {
            let t = self.peek().clone();
            if t == Tok::Eof {
                return;
            }
            if t == Tok::Semi {
                self.bump();
                return;
            }
            if stops.contains(&t) {
                return;
            }
            self.bump();
        }
    }

    fn parse_type(&mut self) -> Result<TypeTag, ()> {
        let span = self.span();
        match self.bump().0 {
            Tok::Ident(s) => match s.as_str() {
                "int" => Ok(TypeTag::Int),
                "rat" => Ok(TypeTag::Rat),
                "bool" => Ok(TypeTag::Bool),
                "string" => Ok(TypeTag::Str),
                name if !KEYWORDS.contains(&name) => {
                    if self.enums.iter().any(|e| e.name == name) {
                        Ok(TypeTag::Enum(name.to_string()))
                    } else {
                        self.error(format!("unknown type `{name}`"), span);
                        Err(())
                    }
                }
                other => {
                    self.error(format!("expected a type, found `{other}`"), span);
                    Err(())
                }
            },
            other => {
                self.error(format!("expected a type, found {other}"), span);
                Err(())
            }
        }
    }

    fn parse_literal(&mut self) -> Result<Value, ()> {
        let span = self.span();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump().0 {
            Tok::Int(n) => {
                if *self.peek() == Tok::Slash {
                    self.bump();
                    let dspan = self.span();
                    match self.bump().0 {
                        Tok::Int(d) if d > 0 => {
                            let mut r = BigRational::new(BigInt::from(n), BigInt::from(d));
                            if negative {
                                r = -r;
                            }
                            Ok(Value::Rat(r))
                        }
                        _ => {
                            self.error("rational literal needs a positive integer denominator", dspan);
                            Err(())
                        }
                    }
                } else if negative {
                    n.checked_neg().map(Value::Int).ok_or_else(|| {
                        self.error("integer literal out of range", span);
                    })
                } else {
                    Ok(Value::Int(n))
                }
            }
            Tok::Decimal(r) => Ok(Value::Rat(if negative { -r } else { r })),
            Tok::Str(s) if !negative => Ok(Value::Str(s)),
            Tok::Ident(s) if s == "true" && !negative => Ok(Value::Bool(true)),
            Tok::Ident(s) if s == "false" && !negative => Ok(Value::Bool(false)),
            Tok::Ident(e) if !negative && *self.peek() == Tok::ColonColon => {
                self.bump();
                let (variant, vspan) = self.expect_ident("enum variant")?;
                match self.enums.iter().find(|d| d.name == e) {
                    Some(decl) if decl.variants.contains(&variant) => Ok(Value::EnumVal(e, variant)),
                    Some(_) => {
                        self.error(format!("unknown variant `{variant}` of enum `{e}`"), vspan);
                        Err(())
                    }
                    None => {
                        self.error(format!("unknown enum `{e}`"), span);
                        Err(())
                    }
                }
            }
            other => {
                self.error(format!("expected a literal, found {other}"), span);
                Err(())
            }
        }
    }

    // Expression parsing, loosest level first.
    fn parse_expr(&mut self, scope: &Scope) -> Result<Expr, ()> {
        self.depth += 1;
        if self.depth > MAX_EXPR_DEPTH {
            let span = self.span();
            self.error("expression nested too deeply", span);
            self.depth -= 1;
            return Err(());
        }
        let r = self.parse_or(scope);
        self.depth -= 1;
        r
    }

    fn parse_or(&mut self, scope: &Scope) -> Result<Expr, ()> {
        let first = self.parse_and(scope)?;
        if *self.peek() != Tok::OrOr {
            return Ok(first);
        }
        let span = first.span;
        let mut children = vec![first];
        while *self.peek() == Tok::OrOr {
            self.bump();
            children.push(self.parse_and(scope)?);
        }
        Ok(Expr::with_span(ExprNode::Or(children), span))
    }

    fn parse_and(&mut self, scope: &Scope) -> Result<Expr, ()> {
        let first = self.parse_not(scope)?;
        if *self.peek() != Tok::AndAnd {
            return Ok(first);
        }
        let span = first.span;
        let mut children = vec![first];
        while *self.peek() == Tok::AndAnd {
            self.bump();
            children.push(self.parse_not(scope)?);
        }
        Ok(Expr::with_span(ExprNode::And(children), span))
    }

    fn parse_not(&mut self, scope: &Scope) -> Result<Expr, ()> {
        if *self.peek() == Tok::Bang {
            let span = self.bump().1;
            self.depth += 1;
            if self.depth > MAX_EXPR_DEPTH {
                self.error("expression nested too deeply", span);
                self.depth -= 1;
                return Err(());
            }
            let inner = self.parse_not(scope);
            self.depth -= 1;
            Ok(Expr::with_span(ExprNode::Not(Box::new(inner?)), span))
        } else {
            self.parse_cmp(scope)
        }
    }

    fn parse_cmp(&mut self, scope: &Scope) -> Result<Expr, ()> {
        let lhs = self.parse_additive(scope)?;
        let op = match self.peek() {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Assign => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.parse_additive(scope)?;
        let span = lhs.span;
        Ok(Expr::with_span(
            ExprNode::Cmp(op, Box::new(lhs), Box::new(rhs)),
            span,
        ))
    }

    fn parse_additive(&mut self, scope: &Scope) -> Result<Expr, ()> {
        let mut acc = self.parse_mul(scope)?;
        loop {
            let add = match self.peek() {
                Tok::Plus => true,
                Tok::Minus => false,
                _ => return Ok(acc),
            };
            self.bump();
            let rhs = self.parse_mul(scope)?;
            let span = acc.span;
            acc = Expr::with_span(
                if add {
                    ExprNode::Add(Box::new(acc), Box::new(rhs))
                } else {
                    ExprNode::Sub(Box::new(acc), Box::new(rhs))
                },
                span,
            );
        }
    }

    fn parse_mul(&mut self, scope: &Scope) -> Result<Expr, ()> {
        let mut acc = self.parse_neg(scope)?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.parse_neg(scope)?;
            let span = acc.span;
            acc = Expr::with_span(ExprNode::Mul(Box::new(acc), Box::new(rhs)), span);
        }
        Ok(acc)
    }

    fn parse_neg(&mut self, scope: &Scope) -> Result<Expr, ()> {
        if *self.peek() == Tok::Minus {
            let span = self.bump().1;
            self.depth += 1;
            if self.depth > MAX_EXPR_DEPTH {
                self.error("expression nested too deeply", span);
                self.depth -= 1;
                return Err(());
            }
            let inner = self.parse_neg(scope);
            self.depth -= 1;
            Ok(Expr::with_span(ExprNode::Neg(Box::new(inner?)), span))
        } else {
            self.parse_atom(scope)
        }
    }

    fn parse_atom(&mut self, scope: &Scope) -> Result<Expr, ()> {
        let span = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.parse_expr(scope)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Int(_) | Tok::Decimal(_) | Tok::Str(_) | Tok::Minus => {
                let v = self.parse_literal()?;
                Ok(Expr::with_span(ExprNode::Const(v), span))
            }
            Tok::Ident(name) => {
                if name == "true" || name == "false" {
                    let v = self.parse_literal()?;
                    return Ok(Expr::with_span(ExprNode::Const(v), span));
                }
                if *self.peek_at(1) == Tok::ColonColon {
                    let v = self.parse_literal()?;
                    return Ok(Expr::with_span(ExprNode::Const(v), span));
                }
                self.bump();
                match scope.names.get(&name) {
                    Some(ty) => Ok(Expr::with_span(
                        ExprNode::Var(VarRef {
                            name,
                            ty: ty.clone(),
                        }),
                        span,
                    )),
                    None => {
                        self.error(format!("unknown reference `{name}`"), span);
                        Err(())
                    }
                }
            }
            other => {
                self.error(format!("expected an expression, found {other}"), span);
                Err(())
            }
        }
    }

    fn parse_enum(&mut self) -> Result<(), ()> {
        let span = self.expect_kw("enum")?;
        let (name, nspan) = self.expect_ident("enum name")?;
        if self.enums.iter().any(|e| e.name == name) {
            self.error(format!("duplicate enum `{name}`"), nspan);
        }
        self.expect(Tok::LBrace)?;
        let mut variants = Vec::new();
        loop {
            let (v, vs) = self.expect_ident("enum variant")?;
            if variants.contains(&v) {
                self.error(format!("duplicate variant `{v}`"), vs);
            } else {
                variants.push(v);
            }
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        self.enums.push(EnumDecl {
            name,
            variants,
            span,
        });
        Ok(())
    }

    fn parse_component(&mut self) -> Result<(Component, bool), ()> {
        let is_root = self.eat_kw("root");
        let span = self.expect_kw("component")?;
        let (name, _) = self.expect_ident("component name")?;

        let mut scope = Scope {
            names: BTreeMap::new(),
        };
        let mut params = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                let (pname, pspan) = self.expect_ident("parameter name")?;
                self.expect(Tok::Colon)?;
                let ty = self.parse_type()?;
                if scope.names.insert(pname.clone(), ty.clone()).is_some() {
                    self.error(format!("duplicate parameter `{pname}`"), pspan);
                }
                params.push((pname, ty));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::LBrace)?;

        let mut ports = Vec::new();
        loop {
            let dir = if matches!(self.peek(), Tok::Ident(s) if s == "in") {
                Direction::In
            } else if matches!(self.peek(), Tok::Ident(s) if s == "out") {
                Direction::Out
            } else {
                break;
            };
            let pspan = self.bump().1;
            let (delayed, initial) = if self.eat_kw("delayed") {
                self.expect_kw("init")?;
                let lit = self.parse_literal()?;
                (true, Some(lit))
            } else {
                (false, None)
            };
            let ty = self.parse_type()?;
            let (pname, nspan) = self.expect_ident("port name")?;
            self.expect(Tok::Semi)?;
            if scope.names.insert(pname.clone(), ty.clone()).is_some() {
                self.error(format!("duplicate name `{pname}` in component `{name}`"), nspan);
            }
            ports.push(Port {
                name: pname,
                direction: dir,
                ty,
                delayed,
                initial,
                span: pspan,
            });
        }

        let body = if matches!(self.peek(), Tok::Ident(s) if s == "automaton") {
            Body::Atomic(self.parse_automaton(&mut scope, &name)?)
        } else if matches!(self.peek(), Tok::Ident(s) if s == "subcomponents") {
            Body::Composite(self.parse_composite(&scope)?)
        } else {
            let sp = self.span();
            let got = self.peek().clone();
            self.error(
                format!("expected `automaton` or `subcomponents`, found {got}"),
                sp,
            );
            return Err(());
        };
        self.expect(Tok::RBrace)?;
        Ok((
            Component {
                name,
                params,
                ports,
                body,
                span,
            },
            is_root,
        ))
    }

    fn parse_automaton(&mut self, scope: &mut Scope, comp: &str) -> Result<Automaton, ()> {
        self.expect_kw("automaton")?;
        self.expect(Tok::LBrace)?;
        let mut vars = Vec::new();
        while matches!(self.peek(), Tok::Ident(s) if s == "var") {
            let vspan = self.bump().1;
            let ty = self.parse_type()?;
            let (vname, nspan) = self.expect_ident("variable name")?;
            self.expect(Tok::Assign)?;
            let init = self.parse_literal()?;
            self.expect(Tok::Semi)?;
            if scope.names.insert(vname.clone(), ty.clone()).is_some() {
                self.error(format!("duplicate name `{vname}` in component `{comp}`"), nspan);
            }
            vars.push(VarDecl {
                name: vname,
                ty,
                init,
                span: vspan,
            });
        }
        self.expect_kw("initial")?;
        let (initial, _) = self.expect_ident("initial state")?;
        self.expect(Tok::Semi)?;

        let mut states = vec![initial.clone()];
        let mut transitions: Vec<Transition> = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            match self.parse_transition(scope) {
                Ok(t) => {
                    if transitions.iter().any(|o| o.id == t.id) {
                        self.error(format!("duplicate transition id `{}`", t.id), t.span);
                    }
                    for s in [&t.source, &t.target] {
                        if !states.contains(s) {
                            states.push(s.clone());
                        }
                    }
                    transitions.push(t);
                }
                Err(()) => self.sync_to_semi_or(&[Tok::RBrace]),
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(Automaton {
            states,
            initial,
            vars,
            transitions,
        })
    }

    fn parse_transition(&mut self, scope: &Scope) -> Result<Transition, ()> {
        let (id, span) = self.expect_ident("transition id")?;
        self.expect(Tok::Colon)?;
        let (source, _) = self.expect_ident("source state")?;
        self.expect(Tok::Arrow)?;
        let (target, _) = self.expect_ident("target state")?;
        self.expect(Tok::LBracket)?;
        let guard = self.parse_expr(scope)?;
        self.expect(Tok::RBracket)?;
        let mut actions = Vec::new();
        let mut emissions = Vec::new();
        if *self.peek() == Tok::Slash {
            self.bump();
            self.expect(Tok::LBrace)?;
            while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                let (tgt, tspan) = self.expect_ident("assignment or emission target")?;
                match self.bump().0 {
                    Tok::Assign => {
                        let e = self.parse_expr(scope)?;
                        self.expect(Tok::Semi)?;
                        actions.push((tgt, e));
                    }
                    Tok::Bang => {
                        let e = self.parse_expr(scope)?;
                        self.expect(Tok::Semi)?;
                        emissions.push((tgt, e));
                    }
                    other => {
                        self.error(format!("expected `=` or `!` after `{tgt}`, found {other}"), tspan);
                        return Err(());
                    }
                }
                if !scope.names.contains_key(&tgt) {
                    self.error(format!("unknown reference `{tgt}`"), tspan);
                }
            }
            self.expect(Tok::RBrace)?;
        }
        self.expect(Tok::Semi)?;
        Ok(Transition {
            id,
            source,
            target,
            guard,
            actions,
            emissions,
            span,
        })
    }

    fn parse_composite(&mut self, scope: &Scope) -> Result<CompositeBody, ()> {
        self.expect_kw("subcomponents")?;
        self.expect(Tok::LBrace)?;
        let mut subs: Vec<SubInstance> = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            let (iname, ispan) = self.expect_ident("instance name")?;
            self.expect(Tok::Colon)?;
            let (cname, _) = self.expect_ident("component name")?;
            let mut args = Vec::new();
            if *self.peek() == Tok::LParen {
                self.bump();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.parse_expr(scope)?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
            }
            self.expect(Tok::Semi)?;
            if subs.iter().any(|s| s.name == iname) {
                self.error(format!("duplicate instance `{iname}`"), ispan);
            }
            subs.push(SubInstance {
                name: iname,
                component: cname,
                args,
                span: ispan,
            });
        }
        self.expect(Tok::RBrace)?;
        self.expect_kw("connectors")?;
        self.expect(Tok::LBrace)?;
        let mut connectors = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            let span = self.span();
            let from = self.parse_endpoint()?;
            self.expect(Tok::Arrow)?;
            let to = self.parse_endpoint()?;
            self.expect(Tok::Semi)?;
            connectors.push(Connector { from, to, span });
        }
        self.expect(Tok::RBrace)?;
        Ok(CompositeBody { subs, connectors })
    }

    fn parse_endpoint(&mut self) -> Result<Endpoint, ()> {
        let (first, _) = self.expect_ident("endpoint")?;
        if *self.peek() == Tok::Dot {
            self.bump();
            let (port, _) = self.expect_ident("port name")?;
            Ok(Endpoint::Child(first, port))
        } else {
            Ok(Endpoint::Own(first))
        }
    }

    fn parse_model(mut self) -> Result<Model, ParseErrors> {
        while matches!(self.peek(), Tok::Ident(s) if s == "enum") {
            if self.parse_enum().is_err() {
                self.sync_to_semi_or(&[Tok::RBrace]);
                if *self.peek() == Tok::RBrace {
                    self.bump();
                }
            }
        }
        let mut components: Vec<Component> = Vec::new();
        let mut root: Option<String> = None;
        while *self.peek() != Tok::Eof {
            if !matches!(self.peek(), Tok::Ident(s) if s == "component" || s == "root") {
                let sp = self.span();
                let got = self.peek().clone();
                self.error(format!("expected a component declaration, found {got}"), sp);
                // skip forward to the next plausible declaration
                loop {
                    match self.peek() {
                        Tok::Eof => break,
                        Tok::Ident(s) if s == "component" || s == "root" || s == "enum" => break,
                        _ => {
                            self.bump();
                        }
                    }
                }
                if matches!(self.peek(), Tok::Ident(s) if s == "enum") {
                    self.bump(); // stray enum after components is an error already reported
                    continue;
                }
                if *self.peek() == Tok::Eof {
                    break;
                }
            }
            match self.parse_component() {
                Ok((c, is_root)) => {
                    if components.iter().any(|o| o.name == c.name) {
                        self.error(format!("duplicate component `{}`", c.name), c.span);
                    }
                    if is_root {
                        if root.is_some() {
                            self.error("more than one root component".to_string(), c.span);
                        } else {
                            root = Some(c.name.clone());
                        }
                    }
                    components.push(c);
                }
                Err(()) => loop {
                    match self.peek() {
                        Tok::Eof => break,
                        Tok::Ident(s) if s == "component" || s == "root" => break,
                        _ => {
                            self.bump();
                        }
                    }
                },
            }
            if self.errors.len() >= MAX_ERRORS {
                break;
            }
        }
        let root = match root {
            Some(r) => r,
            None => {
                let span = Span::new(1, 1, 0);
                self.error("missing root component", span);
                String::new()
            }
        };
        if self.errors.is_empty() {
            Ok(Model {
                enums: self.enums,
                components,
                root,
            })
        } else {
            Err(self.errors)
        }
    }
}

/// Parses a model from source text.
pub fn parse_model(text: &str) -> Result<Model, ParseErrors> {
    let toks = match Lexer::new(text).lex() {
        Ok(toks) => toks,
        Err(d) => return Err(vec![d]),
    };
    Parser {
        toks,
        pos: 0,
        errors: Vec::new(),
        enums: Vec::new(),
        depth: 0,
    }
    .parse_model()
}

/// Byte-level entry point; invalid UTF-8 is replaced before parsing.
pub fn parse_model_bytes(bytes: &[u8]) -> Result<Model, ParseErrors> {
    parse_model(&String::from_utf8_lossy(bytes))
}

// ---------------------------------------------------------------------------
// Renderer
// ---------------------------------------------------------------------------

fn render_type(ty: &TypeTag) -> String {
    ty.to_string()
}

fn render_endpoint(e: &Endpoint) -> String {
    match e {
        Endpoint::Own(p) => p.clone(),
        Endpoint::Child(i, p) => format!("{i}.{p}"),
    }
}

/// Renders a model back to source text. Deterministic: rendering the same
/// model twice yields byte-identical text, and `parse(render(m))` is
/// structurally equal to `m`.
pub fn render_model(m: &Model) -> String {
    let mut out = String::new();
    for e in &m.enums {
        let _ = writeln!(out, "enum {} {{ {} }}", e.name, e.variants.join(", "));
    }
    if !m.enums.is_empty() {
        out.push('\n');
    }
    for (i, c) in m.components.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if c.name == m.root {
            out.push_str("root ");
        }
        let _ = write!(out, "component {}", c.name);
        if !c.params.is_empty() {
            let params: Vec<String> = c
                .params
                .iter()
                .map(|(n, t)| format!("{n}: {}", render_type(t)))
                .collect();
            let _ = write!(out, "({})", params.join(", "));
        }
        out.push_str(" {\n");
        for p in &c.ports {
            let dir = match p.direction {
                Direction::In => "in",
                Direction::Out => "out",
            };
            let delayed = match (&p.delayed, &p.initial) {
                (true, Some(v)) => format!("delayed init {v} "),
                _ => String::new(),
            };
            let _ = writeln!(out, "  {dir} {delayed}{} {};", render_type(&p.ty), p.name);
        }
        match &c.body {
            Body::Atomic(a) => {
                out.push_str("  automaton {\n");
                for v in &a.vars {
                    let _ = writeln!(out, "    var {} {} = {};", render_type(&v.ty), v.name, v.init);
                }
                let _ = writeln!(out, "    initial {};", a.initial);
                for t in &a.transitions {
                    let _ = write!(out, "    {}: {} -> {} [{}]", t.id, t.source, t.target, t.guard);
                    if !t.actions.is_empty() || !t.emissions.is_empty() {
                        out.push_str(" / { ");
                        for (v, e) in &t.actions {
                            let _ = write!(out, "{v} = {e}; ");
                        }
                        for (p, e) in &t.emissions {
                            let _ = write!(out, "{p}! {e}; ");
                        }
                        out.push('}');
                    }
                    out.push_str(";\n");
                }
                out.push_str("  }\n");
            }
            Body::Composite(body) => {
                out.push_str("  subcomponents {\n");
                for s in &body.subs {
                    let _ = write!(out, "    {}: {}", s.name, s.component);
                    if !s.args.is_empty() {
                        let args: Vec<String> = s.args.iter().map(|a| a.to_string()).collect();
                        let _ = write!(out, "({})", args.join(", "));
                    }
                    out.push_str(";\n");
                }
                out.push_str("  }\n  connectors {\n");
                for conn in &body.connectors {
                    let _ = writeln!(
                        out,
                        "    {} -> {};",
                        render_endpoint(&conn.from),
                        render_endpoint(&conn.to)
                    );
                }
                out.push_str("  }\n");
            }
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::CmpOp;

    const TINY: &str = r#"
// a one-component model
root component Tiny(p: int) {
  in int mtr;
  out int y;
  automaton {
    var int c = 0;
    initial S;
    t1: S -> S [mtr > 350000 && mtr < p] / { c = c + 1; y! c + 1; };
  }
}
"#;

    #[test]
    fn parses_guard_shape() {
        let m = parse_model(TINY).unwrap();
        let c = m.root_component();
        let Body::Atomic(a) = &c.body else {
            panic!("expected automaton")
        };
        let guard = &a.transitions[0].guard;
        let expected = Expr::and(vec![
            Expr::cmp(
                CmpOp::Gt,
                Expr::var("mtr", TypeTag::Int),
                Expr::int(350000),
            ),
            Expr::cmp(CmpOp::Lt, Expr::var("mtr", TypeTag::Int), Expr::var("p", TypeTag::Int)),
        ]);
        assert_eq!(*guard, expected);
    }

    #[test]
    fn empty_input_reports_missing_root() {
        let errs = parse_model("").unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("missing root")));
    }

    #[test]
    fn unknown_reference_is_positioned() {
        let bad = "root component A { in int x; automaton { initial S; t: S -> S [nosuch > 1]; } }";
        let errs = parse_model(bad).unwrap_err();
        let d = errs
            .iter()
            .find(|d| d.message.contains("unknown reference"))
            .expect("diagnostic present");
        assert!(d.span.line >= 1 && d.span.col >= 1);
    }

    #[test]
    fn roundtrip_is_stable() {
        let m = parse_model(TINY).unwrap();
        let once = render_model(&m);
        let m2 = parse_model(&once).unwrap();
        assert_eq!(m, m2);
        assert_eq!(render_model(&m2), once);
    }

    #[test]
    fn enum_declaration_roundtrips_variant_order() {
        let src = r#"
enum Cmd { Go, Stop, Idle }
root component M {
  in Cmd c;
  out bool b;
  automaton {
    initial S;
    t: S -> S [c = Cmd::Go] / { b! true; };
  }
}
"#;
        let m = parse_model(src).unwrap();
        assert_eq!(m.enums[0].variants, vec!["Go", "Stop", "Idle"]);
        let m2 = parse_model(&render_model(&m)).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn rational_literals_parse_exactly() {
        let src = r#"
root component R {
  in rat x;
  out delayed init 1/3 rat y;
  automaton {
    var rat c = -0.25;
    initial S;
    t: S -> S [x < 1.5] / { y! c + 1/3; };
  }
}
"#;
        let m = parse_model(src).unwrap();
        let port = m.root_component().port("y").unwrap();
        assert_eq!(port.initial, Some(Value::rat_i64(1, 3)));
        let m2 = parse_model(&render_model(&m)).unwrap();
        assert_eq!(m, m2);
    }
}
