//! Surface syntax for parametric path patterns.
//!
//! A query names a start node and a pattern built from bracketed atoms:
//!
//! ```text
//! FROM v0 MATCH ([Person, ?p <= age && ?q >= age && ?q - ?p <= 7] / [follow, since > 2019])*
//!               / [Person, ?p <= age && ?q >= age && ?q - ?p <= 7]
//! ```
//!
//! Atoms carry a label and an optional conjunction of constraints over
//! element attributes (`age`) and query-global parameters (`?p`). Operator
//! precedence: postfix `* + ?` bind tightest, then inverse `^`, then
//! concatenation `/`, then alternation `|`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rat::{render_rat, Rat};

/// Variable occurring in a linear expression: an element attribute or a
/// `?`-prefixed global parameter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    Attr(String),
    Param(String),
}

/// Linear expression: rational constant plus rational-coefficient terms.
/// Zero coefficients are never stored, so structural equality is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinExpr {
    pub constant: Rat,
    pub terms: BTreeMap<VarRef, Rat>,
}

impl LinExpr {
    pub fn constant(value: Rat) -> Self {
        LinExpr {
            constant: value,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(var: VarRef) -> Self {
        let mut e = LinExpr::default();
        e.add_term(var, Rat::one());
        e
    }

    pub fn add_term(&mut self, var: VarRef, coef: Rat) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(var).or_insert_with(Rat::zero);
        *entry += coef;
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, c)| c.is_zero())
                .map(|(k, _)| k.clone())
                .expect("just zeroed");
            self.terms.remove(&key);
        }
    }

    pub fn add(&mut self, other: &LinExpr, scale: &Rat) {
        self.constant += &other.constant * scale;
        for (var, coef) in &other.terms {
            self.add_term(var.clone(), coef * scale);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }
}

/// A single conjunct: string equality on an attribute, or a comparison
/// between two linear expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CAtom {
    StrEq {
        attr: String,
        value: String,
    },
    Cmp {
        lhs: LinExpr,
        op: CmpOp,
        rhs: LinExpr,
    },
}

/// Conjunction of atoms; the empty conjunction is trivially true.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Constraint(pub Vec<CAtom>);

impl Constraint {
    pub fn top() -> Self {
        Constraint::default()
    }

    pub fn is_top(&self) -> bool {
        self.0.is_empty()
    }

    /// Parameters mentioned anywhere in the conjunction.
    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.0.iter().flat_map(|atom| {
            let exprs: Vec<&LinExpr> = match atom {
                CAtom::StrEq { .. } => Vec::new(),
                CAtom::Cmp { lhs, rhs, .. } => vec![lhs, rhs],
            };
            exprs.into_iter().flat_map(|e| {
                e.terms.keys().filter_map(|v| match v {
                    VarRef::Param(p) => Some(p.as_str()),
                    VarRef::Attr(_) => None,
                })
            })
        })
    }
}

/// Pattern AST. `Plus` and `Opt` are kept as nodes; compilation desugars
/// them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pregex {
    Atom {
        label: String,
        constraint: Constraint,
    },
    Inverse(Box<Pregex>),
    Concat(Box<Pregex>, Box<Pregex>),
    Alt(Box<Pregex>, Box<Pregex>),
    Star(Box<Pregex>),
    Plus(Box<Pregex>),
    Opt(Box<Pregex>),
    Epsilon,
}

impl Pregex {
    pub fn atom(label: &str) -> Self {
        Pregex::Atom {
            label: label.to_string(),
            constraint: Constraint::top(),
        }
    }

    pub fn atom_with(label: &str, constraint: Constraint) -> Self {
        Pregex::Atom {
            label: label.to_string(),
            constraint,
        }
    }

    pub fn concat(lhs: Pregex, rhs: Pregex) -> Self {
        Pregex::Concat(Box::new(lhs), Box::new(rhs))
    }

    pub fn alt(lhs: Pregex, rhs: Pregex) -> Self {
        Pregex::Alt(Box::new(lhs), Box::new(rhs))
    }

    pub fn star(inner: Pregex) -> Self {
        Pregex::Star(Box::new(inner))
    }

    pub fn count_atoms(&self) -> usize {
        match self {
            Pregex::Atom { .. } => 1,
            Pregex::Epsilon => 0,
            Pregex::Inverse(x) | Pregex::Star(x) | Pregex::Opt(x) => x.count_atoms(),
            Pregex::Plus(x) => x.count_atoms(),
            Pregex::Concat(a, b) | Pregex::Alt(a, b) => a.count_atoms() + b.count_atoms(),
        }
    }

    pub fn count_alts(&self) -> usize {
        match self {
            Pregex::Atom { .. } | Pregex::Epsilon => 0,
            Pregex::Inverse(x) | Pregex::Star(x) | Pregex::Opt(x) | Pregex::Plus(x) => {
                x.count_alts()
            }
            Pregex::Concat(a, b) => a.count_alts() + b.count_alts(),
            Pregex::Alt(a, b) => 1 + a.count_alts() + b.count_alts(),
        }
    }

    /// Number of comparison atoms across all constraints in the pattern.
    pub fn count_cmp_atoms(&self) -> usize {
        match self {
            Pregex::Atom { constraint, .. } => constraint
                .0
                .iter()
                .filter(|a| matches!(a, CAtom::Cmp { .. }))
                .count(),
            Pregex::Epsilon => 0,
            Pregex::Inverse(x) | Pregex::Star(x) | Pregex::Opt(x) | Pregex::Plus(x) => {
                x.count_cmp_atoms()
            }
            Pregex::Concat(a, b) | Pregex::Alt(a, b) => a.count_cmp_atoms() + b.count_cmp_atoms(),
        }
    }
}

/// A parsed query: start node id plus pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathQuery {
    pub start: String,
    pub pattern: Pregex,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: lexical error: {msg}")]
    Lexical {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Param(String),
    Number(Rat),
    StrLit(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Slash,
    Pipe,
    Star,
    Plus,
    Question,
    Caret,
    AndAnd,
    Minus,
    Cmp(CmpOp),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Param(s) => write!(f, "`?{s}`"),
            Tok::Number(_) => write!(f, "number"),
            Tok::StrLit(_) => write!(f, "string literal"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Question => write!(f, "`?`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::AndAnd => write!(f, "`&&`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol()),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
    tok_line: usize,
    tok_col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
            tok_line: 1,
            tok_col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        match c {
            Some('\n') => {
                self.line += 1;
                self.col = 1;
            }
            Some(_) => self.col += 1,
            None => {}
        }
        c
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Lexical {
            line: self.tok_line,
            col: self.tok_col,
            msg: msg.into(),
        }
    }

    fn ident(&mut self, first: char) -> String {
        let mut s = String::new();
        s.push(first);
        while matches!(self.chars.peek(), Some(&c) if is_ident_char(c)) {
            s.push(self.bump().unwrap());
        }
        s
    }

    fn number(&mut self, first: char) -> Result<Rat, ParseError> {
        let mut s = String::new();
        s.push(first);
        while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
            s.push(self.bump().unwrap());
        }
        if self.chars.peek() == Some(&'.') {
            self.bump();
            s.push('.');
            if !matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                return Err(self.err("digits expected after decimal point"));
            }
            while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                s.push(self.bump().unwrap());
            }
        } else if self.chars.peek() == Some(&'/') {
            // `n/d` fraction literal; only taken when a digit follows, so
            // concatenation after a bracketed atom is unaffected.
            let mut ahead = self.chars.clone();
            ahead.next();
            if matches!(ahead.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
                s.push('/');
                while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                    s.push(self.bump().unwrap());
                }
            }
        }
        crate::rat::parse_rat(&s).ok_or_else(|| self.err(format!("bad numeric literal `{s}`")))
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            self.tok_line = line;
            self.tok_col = col;
            let Some(c) = self.bump() else { break };
            let tok = match c {
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '/' => Tok::Slash,
                '|' => Tok::Pipe,
                '*' => Tok::Star,
                '+' => Tok::Plus,
                '^' => Tok::Caret,
                '-' => Tok::Minus,
                '&' => {
                    if self.chars.peek() == Some(&'&') {
                        self.bump();
                        Tok::AndAnd
                    } else {
                        return Err(self.err("expected `&&`"));
                    }
                }
                '<' => {
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Cmp(CmpOp::Le)
                    } else {
                        Tok::Cmp(CmpOp::Lt)
                    }
                }
                '>' => {
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Cmp(CmpOp::Ge)
                    } else {
                        Tok::Cmp(CmpOp::Gt)
                    }
                }
                '=' => {
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                    }
                    Tok::Cmp(CmpOp::Eq)
                }
                '!' => {
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Cmp(CmpOp::Ne)
                    } else {
                        return Err(self.err("unknown comparator `!`"));
                    }
                }
                '?' => {
                    if matches!(self.chars.peek(), Some(&c) if is_ident_start(c)) {
                        let first = self.bump().unwrap();
                        Tok::Param(self.ident(first))
                    } else {
                        Tok::Question
                    }
                }
                '"' => {
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                _ => return Err(self.err("bad escape in string literal")),
                            },
                            Some(c) => s.push(c),
                            None => return Err(self.err("unterminated string literal")),
                        }
                    }
                    Tok::StrLit(s)
                }
                c if c.is_ascii_digit() => Tok::Number(self.number(c)?),
                c if is_ident_start(c) => Tok::Ident(self.ident(c)),
                c => return Err(self.err(format!("unexpected character `{c}`"))),
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _, _)| t)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((1, 1))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t == want => {
                self.next();
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected {what}, found {t}"))),
            None => Err(self.err(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.next() {
                Some(Tok::Ident(s)) => Ok(s),
                _ => unreachable!(),
            },
            Some(t) => Err(self.err(format!("expected {what}, found {t}"))),
            None => Err(self.err(format!("expected {what}, found end of input"))),
        }
    }

    fn query(&mut self) -> Result<PathQuery, ParseError> {
        let kw = self.expect_ident("`FROM`")?;
        if kw != "FROM" {
            return Err(self.err(format!("expected `FROM`, found `{kw}`")));
        }
        let start = self.expect_ident("start node id")?;
        let kw = self.expect_ident("`MATCH`")?;
        if kw != "MATCH" {
            return Err(self.err(format!("expected `MATCH`, found `{kw}`")));
        }
        let pattern = self.expr()?;
        if let Some(t) = self.peek() {
            return Err(self.err(format!("unexpected {t} after pattern")));
        }
        Ok(PathQuery { start, pattern })
    }

    fn expr(&mut self) -> Result<Pregex, ParseError> {
        let mut lhs = self.concat()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.next();
            let rhs = self.concat()?;
            lhs = Pregex::alt(lhs, rhs);
        }
        Ok(lhs)
    }

    fn concat(&mut self) -> Result<Pregex, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Slash) {
            self.next();
            let rhs = self.unary()?;
            lhs = Pregex::concat(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Pregex, ParseError> {
        if self.peek() == Some(&Tok::Caret) {
            self.next();
            let inner = self.unary()?;
            return Ok(Pregex::Inverse(Box::new(inner)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Pregex, ParseError> {
        let mut base = self.base()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    base = Pregex::Star(Box::new(base));
                }
                Some(Tok::Plus) => {
                    self.next();
                    base = Pregex::Plus(Box::new(base));
                }
                Some(Tok::Question) => {
                    self.next();
                    base = Pregex::Opt(Box::new(base));
                }
                _ => return Ok(base),
            }
        }
    }

    fn base(&mut self) -> Result<Pregex, ParseError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.next();
                if self.peek() == Some(&Tok::RParen) {
                    self.next();
                    return Ok(Pregex::Epsilon);
                }
                let inner = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::LBracket) => {
                self.next();
                let label = self.expect_ident("label")?;
                let constraint = if self.peek() == Some(&Tok::Comma) {
                    self.next();
                    self.constraint()?
                } else {
                    Constraint::top()
                };
                self.expect(&Tok::RBracket, "`]`")?;
                Ok(Pregex::Atom { label, constraint })
            }
            Some(t) => Err(self.err(format!("expected `[` or `(`, found {t}"))),
            None => Err(self.err("expected `[` or `(`, found end of input")),
        }
    }

    fn constraint(&mut self) -> Result<Constraint, ParseError> {
        let mut atoms = vec![self.catom()?];
        while self.peek() == Some(&Tok::AndAnd) {
            self.next();
            atoms.push(self.catom()?);
        }
        Ok(Constraint(atoms))
    }

    fn catom(&mut self) -> Result<CAtom, ParseError> {
        // String equality: ident (= | ==) stringlit.
        if let (Some(Tok::Ident(_)), Some(Tok::Cmp(CmpOp::Eq)), Some(Tok::StrLit(_))) =
            (self.peek(), self.peek_at(1), self.peek_at(2))
        {
            let attr = match self.next() {
                Some(Tok::Ident(s)) => s,
                _ => unreachable!(),
            };
            self.next();
            let value = match self.next() {
                Some(Tok::StrLit(s)) => s,
                _ => unreachable!(),
            };
            return Ok(CAtom::StrEq { attr, value });
        }
        let lhs = self.linexp()?;
        let op = match self.next() {
            Some(Tok::Cmp(op)) => op,
            Some(t) => return Err(self.err(format!("expected comparator, found {t}"))),
            None => return Err(self.err("expected comparator, found end of input")),
        };
        let rhs = self.linexp()?;
        Ok(CAtom::Cmp { lhs, op, rhs })
    }

    fn linexp(&mut self) -> Result<LinExpr, ParseError> {
        let mut expr = LinExpr::default();
        let first = self.linterm()?;
        expr.add(&first, &Rat::one());
        loop {
            let scale = match self.peek() {
                Some(Tok::Plus) => Rat::one(),
                Some(Tok::Minus) => -Rat::one(),
                _ => break,
            };
            self.next();
            let term = self.linterm()?;
            expr.add(&term, &scale);
        }
        Ok(expr)
    }

    /// term := ["-"] number ["*" var] | var
    fn linterm(&mut self) -> Result<LinExpr, ParseError> {
        let negate = if self.peek() == Some(&Tok::Minus) {
            self.next();
            true
        } else {
            false
        };
        match self.peek() {
            Some(Tok::Number(_)) => {
                let mut value = match self.next() {
                    Some(Tok::Number(r)) => r,
                    _ => unreachable!(),
                };
                if negate {
                    value = -value;
                }
                if self.peek() == Some(&Tok::Star) {
                    self.next();
                    let var = self.var()?;
                    let mut e = LinExpr::default();
                    e.add_term(var, value);
                    Ok(e)
                } else {
                    Ok(LinExpr::constant(value))
                }
            }
            _ if !negate => Ok(LinExpr::var(self.var()?)),
            Some(t) => Err(self.err(format!("expected number after `-`, found {t}"))),
            None => Err(self.err("expected number after `-`, found end of input")),
        }
    }

    fn var(&mut self) -> Result<VarRef, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(VarRef::Attr(s)),
            Some(Tok::Param(s)) => Ok(VarRef::Param(s)),
            Some(t) => Err(self.err(format!("expected attribute or parameter, found {t}"))),
            None => Err(self.err("expected attribute or parameter, found end of input")),
        }
    }
}

pub fn parse_query(text: &str) -> Result<PathQuery, ParseError> {
    let tokens = Lexer::new(text).tokens()?;
    Parser { tokens, pos: 0 }.query()
}

/// Parses a bare pattern (no `FROM`/`MATCH` header).
pub fn parse_pattern(text: &str) -> Result<Pregex, ParseError> {
    let tokens = Lexer::new(text).tokens()?;
    let mut p = Parser { tokens, pos: 0 };
    let pattern = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(p.err(format!("unexpected {t} after pattern")));
    }
    Ok(pattern)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Renders a pattern so that reparsing yields a structurally identical AST.
pub fn render(ast: &Pregex) -> String {
    render_level(ast, 0)
}

pub fn render_query(query: &PathQuery) -> String {
    format!("FROM {} MATCH {}", query.start, render(&query.pattern))
}

fn level(ast: &Pregex) -> u8 {
    match ast {
        Pregex::Alt(..) => 0,
        Pregex::Concat(..) => 1,
        Pregex::Inverse(..) => 2,
        Pregex::Star(..) | Pregex::Plus(..) | Pregex::Opt(..) => 3,
        Pregex::Atom { .. } | Pregex::Epsilon => 4,
    }
}

fn render_level(ast: &Pregex, min: u8) -> String {
    let body = match ast {
        Pregex::Atom { label, constraint } => {
            if constraint.is_top() {
                format!("[{label}]")
            } else {
                format!("[{label}, {}]", render_constraint(constraint))
            }
        }
        Pregex::Epsilon => "()".to_string(),
        Pregex::Inverse(x) => format!("^{}", render_level(x, 2)),
        Pregex::Concat(a, b) => format!("{}/{}", render_level(a, 1), render_level(b, 2)),
        Pregex::Alt(a, b) => format!("{}|{}", render_level(a, 0), render_level(b, 1)),
        Pregex::Star(x) => format!("{}*", render_level(x, 3)),
        Pregex::Plus(x) => format!("{}+", render_level(x, 3)),
        Pregex::Opt(x) => format!("{}?", render_level(x, 3)),
    };
    if level(ast) < min {
        format!("({body})")
    } else {
        body
    }
}

pub fn render_constraint(constraint: &Constraint) -> String {
    constraint
        .0
        .iter()
        .map(render_catom)
        .collect::<Vec<_>>()
        .join(" && ")
}

fn render_catom(atom: &CAtom) -> String {
    match atom {
        CAtom::StrEq { attr, value } => {
            format!(
                "{attr} = \"{}\"",
                value.replace('\\', "\\\\").replace('"', "\\\"")
            )
        }
        CAtom::Cmp { lhs, op, rhs } => {
            format!(
                "{} {} {}",
                render_linexp(lhs),
                op.symbol(),
                render_linexp(rhs)
            )
        }
    }
}

fn render_var(var: &VarRef) -> String {
    match var {
        VarRef::Attr(a) => a.clone(),
        VarRef::Param(p) => format!("?{p}"),
    }
}

fn render_linexp(expr: &LinExpr) -> String {
    let mut out = String::new();
    for (var, coef) in &expr.terms {
        let mag = coef.abs();
        let piece = if mag.is_one() {
            render_var(var)
        } else {
            format!("{}*{}", render_rat(&mag), render_var(var))
        };
        if out.is_empty() {
            if coef.is_negative() {
                // Leading negatives need an explicit coefficient: `-1*x`.
                out = format!("-{}*{}", render_rat(&mag), render_var(var));
            } else {
                out = piece;
            }
        } else if coef.is_negative() {
            out.push_str(" - ");
            out.push_str(&piece);
        } else {
            out.push_str(" + ");
            out.push_str(&piece);
        }
    }
    if out.is_empty() {
        return render_rat(&expr.constant);
    }
    if !expr.constant.is_zero() {
        if expr.constant.is_negative() {
            out.push_str(" - ");
            out.push_str(&render_rat(&expr.constant.abs()));
        } else {
            out.push_str(" + ");
            out.push_str(&render_rat(&expr.constant));
        }
    }
    out
}
