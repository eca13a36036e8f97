//! The `.kmap` declaration language.
//!
//! ```text
//! # a cubic and a quarter turn
//! map f = blaschke(theta=0, p=1, zeros=[])
//! map g = moebius(theta=0, a=1+0i, b=-1)
//! job pic = julia(map=f, width=4, res_w=512, res_h=512, out="z3.ppm")
//! ```
//!
//! Parsing runs in three stages: lexing, a single-lookahead recursive descent
//! over the token stream, and a semantic pass that builds every declared map
//! and job so that all invariant violations are reported together.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{Window, DEFAULT_EPS, DEFAULT_MAX_ITER};
use crate::maps::{
    BlaschkeProduct, CanonicalMap, DianalyticMap, HInvariantBlaschke, MapError, MapForm,
    MoebiusRotation, RationalForm1,
};

pub const DEFAULT_JULIA_WIDTH: f64 = 4.0;
pub const DEFAULT_RESOLUTION: i64 = 512;
pub const DEFAULT_MERIDIANS: i64 = 8;
pub const DEFAULT_LATITUDES: i64 = 7;
pub const DEFAULT_ORBIT_STEPS: i64 = 10;

/// Source position, 1-based. Positions never take part in equality, so
/// specs that differ only in layout compare equal.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Lexical,
    Syntax,
    Semantic,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{}", render_diagnostics(.kind, .diagnostics))]
pub struct ParseError {
    pub kind: ErrorKind,
    pub diagnostics: Vec<Diagnostic>,
}

fn render_diagnostics(kind: &ErrorKind, diags: &[Diagnostic]) -> String {
    let label = match kind {
        ErrorKind::Lexical => "lexical error",
        ErrorKind::Syntax => "syntax error",
        ErrorKind::Semantic => "semantic error",
    };
    diags
        .iter()
        .map(|d| format!("{}: {label}: {}", d.pos, d.message))
        .collect::<Vec<_>>()
        .join("\n")
}

impl ParseError {
    fn single(kind: ErrorKind, pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            diagnostics: vec![Diagnostic {
                pos,
                message: message.into(),
            }],
        }
    }
}

#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Real(f64),
    Complex(Complex64),
    List(Vec<Complex64>),
    Ident(String),
    Str(String),
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (Int(a), Int(b)) => a == b,
            (Real(a), Real(b)) => a.to_bits() == b.to_bits(),
            (Complex(a), Complex(b)) => {
                a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
            }
            (List(a), List(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| {
                        x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
                    })
            }
            (Ident(a), Ident(b)) | (Str(a), Str(b)) => a == b,
            _ => false,
        }
    }
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Complex(_) => "complex",
            Value::List(_) => "list",
            Value::Ident(_) => "name",
            Value::Str(_) => "string",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arg {
    pub name: String,
    pub value: Value,
    pub pos: Pos,
    pub value_pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    Moebius,
    Canonical,
    Blaschke,
    Form1,
    Product,
}

impl MapKind {
    const ALL: [MapKind; 5] = [
        MapKind::Moebius,
        MapKind::Canonical,
        MapKind::Blaschke,
        MapKind::Form1,
        MapKind::Product,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            MapKind::Moebius => "moebius",
            MapKind::Canonical => "canonical",
            MapKind::Blaschke => "blaschke",
            MapKind::Form1 => "form1",
            MapKind::Product => "product",
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            MapKind::Moebius => &["theta", "a", "b"],
            MapKind::Canonical => &["alpha", "zeros"],
            MapKind::Blaschke => &["theta", "p", "zeros"],
            MapKind::Form1 => &["theta", "coeffs"],
            MapKind::Product => &["theta", "zeros"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JobKind {
    Julia,
    Steiner,
    Orbit,
}

impl JobKind {
    const ALL: [JobKind; 3] = [JobKind::Julia, JobKind::Steiner, JobKind::Orbit];

    pub fn keyword(self) -> &'static str {
        match self {
            JobKind::Julia => "julia",
            JobKind::Steiner => "steiner",
            JobKind::Orbit => "orbit",
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            JobKind::Julia => &[
                "map", "center", "width", "res_w", "res_h", "max_iter", "eps", "out",
            ],
            JobKind::Steiner => &[
                "map",
                "meridians",
                "latitudes",
                "out",
                "res_w",
                "res_h",
                "width",
                "center",
            ],
            JobKind::Orbit => &["map", "start", "steps", "out"],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapDecl {
    pub name: String,
    pub kind: MapKind,
    pub args: Vec<Arg>,
    pub conj: bool,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobDecl {
    pub name: String,
    pub kind: JobKind,
    pub args: Vec<Arg>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Spec {
    pub maps: Vec<MapDecl>,
    pub jobs: Vec<JobDecl>,
}

impl Spec {
    pub fn map(&self, name: &str) -> Option<&MapDecl> {
        self.maps.iter().find(|m| m.name == name)
    }

    pub fn job(&self, name: &str) -> Option<&JobDecl> {
        self.jobs.iter().find(|j| j.name == name)
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number { value: f64, int: Option<i64> },
    Imag(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Plus,
    Minus,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number { .. } => "a number".into(),
            Tok::Imag(_) => "an imaginary literal".into(),
            Tok::Str(_) => "a string".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Equals => "'='".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: Pos,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            col: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn error(&self, pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError::single(ErrorKind::Lexical, pos, msg)
    }

    fn tokens(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '#' {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let pos = Pos {
                line: self.line,
                col: self.col,
            };
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, pos });
                return Ok(out);
            };
            let tok = match c {
                '(' | ')' | '[' | ']' | ',' | '=' | '+' | '-' => {
                    self.bump();
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ',' => Tok::Comma,
                        '=' => Tok::Equals,
                        '+' => Tok::Plus,
                        _ => Tok::Minus,
                    }
                }
                '"' => self.string(pos)?,
                c if c.is_ascii_digit() || c == '.' => self.number(pos)?,
                c if c.is_alphabetic() || c == '_' => {
                    let start = self.offset();
                    while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                        self.bump();
                    }
                    let end = self.offset();
                    Tok::Ident(self.src[start..end].to_string())
                }
                other => return Err(self.error(pos, format!("unexpected character {other:?}"))),
            };
            out.push(Token { tok, pos });
        }
    }

    fn string(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.error(pos, "unterminated string")),
                Some('"') => return Ok(Tok::Str(s)),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => s.push(c),
                    _ => return Err(self.error(pos, "unsupported escape in string")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let start = self.offset();
        let mut integral = true;
        let digits = |lx: &mut Self| {
            let mut n = 0;
            while lx.peek().is_some_and(|c| c.is_ascii_digit()) {
                lx.bump();
                n += 1;
            }
            n
        };
        let mut n = digits(self);
        if self.peek() == Some('.') {
            self.bump();
            integral = false;
            n += digits(self);
        }
        if n == 0 {
            return Err(self.error(pos, "malformed number"));
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.bump();
            integral = false;
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if digits(self) == 0 {
                return Err(self.error(pos, "malformed exponent"));
            }
        }
        let text = &self.src[start..self.offset()];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(pos, "malformed number"))?;
        if !value.is_finite() {
            return Err(self.error(pos, format!("number {text} is out of range")));
        }
        let int = if integral {
            Some(
                text.parse::<i64>()
                    .map_err(|_| self.error(pos, format!("integer {text} is out of range")))?,
            )
        } else {
            None
        };
        if self.peek() == Some('i') {
            self.bump();
            if self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                return Err(self.error(pos, "malformed imaginary literal"));
            }
            return Ok(Tok::Imag(value));
        }
        if self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.')
        {
            return Err(self.error(pos, format!("malformed number near {text:?}")));
        }
        Ok(Tok::Number { value, int })
    }
}

// ---------------------------------------------------------------- parser

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, what: &str) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::single(
            ErrorKind::Syntax,
            t.pos,
            format!("expected {what}, found {}", t.tok.describe()),
        ))
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        if self.peek().tok == tok {
            Ok(self.next().pos)
        } else {
            self.fail(&tok.describe())
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.next().pos))
            }
            _ => self.fail(what),
        }
    }

    fn file(&mut self) -> Result<Spec, ParseError> {
        let mut spec = Spec::default();
        loop {
            match &self.peek().tok {
                Tok::Eof => return Ok(spec),
                Tok::Ident(k) if k == "map" => spec.maps.push(self.map_decl()?),
                Tok::Ident(k) if k == "job" => spec.jobs.push(self.job_decl()?),
                _ => return self.fail("'map' or 'job'"),
            }
        }
    }

    fn map_decl(&mut self) -> Result<MapDecl, ParseError> {
        let pos = self.next().pos;
        let (name, _) = self.ident("a map name")?;
        self.expect(Tok::Equals)?;
        let kind = match &self.peek().tok {
            Tok::Ident(k) => MapKind::ALL.into_iter().find(|m| m.keyword() == k),
            _ => None,
        };
        let Some(kind) = kind else {
            return self.fail("a map kind (moebius, canonical, blaschke, form1, product)");
        };
        self.next();
        let args = self.arg_list(true)?;
        let conj = matches!(&self.peek().tok, Tok::Ident(k) if k == "conj");
        if conj {
            self.next();
        }
        Ok(MapDecl {
            name,
            kind,
            args,
            conj,
            pos,
        })
    }

    fn job_decl(&mut self) -> Result<JobDecl, ParseError> {
        let pos = self.next().pos;
        let (name, _) = self.ident("a job name")?;
        self.expect(Tok::Equals)?;
        let kind = match &self.peek().tok {
            Tok::Ident(k) => JobKind::ALL.into_iter().find(|j| j.keyword() == k),
            _ => None,
        };
        let Some(kind) = kind else {
            return self.fail("a job kind (julia, steiner, orbit)");
        };
        self.next();
        let args = self.arg_list(false)?;
        Ok(JobDecl {
            name,
            kind,
            args,
            pos,
        })
    }

    fn arg_list(&mut self, optional: bool) -> Result<Vec<Arg>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if optional && self.peek().tok == Tok::RParen {
            self.next();
            return Ok(args);
        }
        loop {
            let (name, pos) = self.ident("an argument name")?;
            self.expect(Tok::Equals)?;
            let value_pos = self.peek().pos;
            let value = self.value()?;
            args.push(Arg {
                name,
                value,
                pos,
                value_pos,
            });
            match self.peek().tok {
                Tok::Comma => {
                    self.next();
                }
                Tok::RParen => {
                    self.next();
                    return Ok(args);
                }
                _ => return self.fail("',' or ')'"),
            }
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match &self.peek().tok {
            Tok::LBracket => self.list(),
            Tok::Str(s) => {
                let s = s.clone();
                self.next();
                Ok(Value::Str(s))
            }
            Tok::Ident(s) if s != "i" => {
                let s = s.clone();
                self.next();
                Ok(Value::Ident(s))
            }
            _ => self.number(),
        }
    }

    fn list(&mut self) -> Result<Value, ParseError> {
        self.next();
        let mut items = Vec::new();
        if self.peek().tok == Tok::RBracket {
            self.next();
            return Ok(Value::List(items));
        }
        loop {
            items.push(match self.number()? {
                Value::Int(n) => Complex64::new(n as f64, 0.0),
                Value::Real(x) => Complex64::new(x, 0.0),
                Value::Complex(z) => z,
                _ => unreachable!("number() yields numeric values"),
            });
            match self.peek().tok {
                Tok::Comma => {
                    self.next();
                }
                Tok::RBracket => {
                    self.next();
                    return Ok(Value::List(items));
                }
                _ => return self.fail("',' or ']'"),
            }
        }
    }

    /// `[sign] (NUMBER [("+"|"-") IMAG] | IMAG | "i")`, with `"i"` alone the imaginary unit.
    fn number(&mut self) -> Result<Value, ParseError> {
        let sign = self.sign();
        match self.peek().tok.clone() {
            Tok::Imag(y) => {
                self.next();
                Ok(Value::Complex(Complex64::new(0.0, sign * y)))
            }
            Tok::Ident(s) if s == "i" => {
                self.next();
                Ok(Value::Complex(Complex64::new(0.0, sign)))
            }
            Tok::Number { value, int } => {
                self.next();
                let re = sign * value;
                if matches!(self.peek().tok, Tok::Plus | Tok::Minus) {
                    let s = self.sign();
                    let im = match self.peek().tok.clone() {
                        Tok::Imag(y) => y,
                        Tok::Ident(i) if i == "i" => 1.0,
                        _ => return self.fail("an imaginary part"),
                    };
                    self.next();
                    return Ok(Value::Complex(Complex64::new(re, s * im)));
                }
                Ok(match int {
                    Some(n) => Value::Int(if sign < 0.0 { -n } else { n }),
                    None => Value::Real(re),
                })
            }
            _ => self.fail("a value"),
        }
    }

    fn sign(&mut self) -> f64 {
        match self.peek().tok {
            Tok::Minus => {
                self.next();
                -1.0
            }
            Tok::Plus => {
                self.next();
                1.0
            }
            _ => 1.0,
        }
    }
}

/// Parses and validates a spec.
pub fn parse(text: &str) -> Result<Spec, ParseError> {
    let spec = parse_syntax(text)?;
    let diagnostics = validate(&spec);
    if diagnostics.is_empty() {
        Ok(spec)
    } else {
        Err(ParseError {
            kind: ErrorKind::Semantic,
            diagnostics,
        })
    }
}

/// Lexing and syntax only; no semantic checks.
pub fn parse_syntax(text: &str) -> Result<Spec, ParseError> {
    let tokens = Lexer::new(text).tokens()?;
    Parser { tokens, at: 0 }.file()
}

// ---------------------------------------------------------------- semantics

struct Args<'a> {
    args: &'a [Arg],
    diags: Vec<Diagnostic>,
}

impl<'a> Args<'a> {
    fn new(args: &'a [Arg], allowed: &[&str], owner: &str) -> Self {
        let mut diags = Vec::new();
        for (k, a) in args.iter().enumerate() {
            if !allowed.contains(&a.name.as_str()) {
                diags.push(Diagnostic {
                    pos: a.pos,
                    message: format!(
                        "unknown argument '{}' for {owner} (expected one of {})",
                        a.name,
                        allowed.join(", ")
                    ),
                });
            } else if args[..k].iter().any(|b| b.name == a.name) {
                diags.push(Diagnostic {
                    pos: a.pos,
                    message: format!("duplicate argument '{}'", a.name),
                });
            }
        }
        Args { args, diags }
    }

    fn find(&self, name: &str) -> Option<&'a Arg> {
        self.args.iter().find(|a| a.name == name)
    }

    fn wrong(&mut self, a: &Arg, want: &str) {
        self.diags.push(Diagnostic {
            pos: a.value_pos,
            message: format!(
                "argument '{}' must be {want}, got {}",
                a.name,
                a.value.type_name()
            ),
        });
    }

    fn missing(&mut self, pos: Pos, name: &str) {
        self.diags.push(Diagnostic {
            pos,
            message: format!("missing required argument '{name}'"),
        });
    }

    fn real(&mut self, name: &str, default: f64) -> f64 {
        match self.find(name) {
            None => default,
            Some(a) => match a.value {
                Value::Int(n) => n as f64,
                Value::Real(x) => x,
                _ => {
                    self.wrong(a, "a real number");
                    default
                }
            },
        }
    }

    fn positive_real(&mut self, name: &str, default: f64) -> f64 {
        let x = self.real(name, default);
        if !(x > 0.0) {
            let a = self
                .find(name)
                .expect("only explicit values can be nonpositive");
            self.diags.push(Diagnostic {
                pos: a.value_pos,
                message: format!("argument '{name}' must be positive"),
            });
            return default;
        }
        x
    }

    fn int(&mut self, name: &str, default: i64, min: i64) -> i64 {
        match self.find(name) {
            None => default,
            Some(a) => match a.value {
                Value::Int(n) if n >= min => n,
                Value::Int(_) => {
                    self.diags.push(Diagnostic {
                        pos: a.value_pos,
                        message: format!("argument '{name}' must be at least {min}"),
                    });
                    default
                }
                _ => {
                    self.wrong(a, "an integer");
                    default
                }
            },
        }
    }

    fn complex(&mut self, name: &str, default: Option<Complex64>, owner_pos: Pos) -> Complex64 {
        match self.find(name) {
            None => default.unwrap_or_else(|| {
                self.missing(owner_pos, name);
                Complex64::new(0.0, 0.0)
            }),
            Some(a) => match a.value {
                Value::Int(n) => Complex64::new(n as f64, 0.0),
                Value::Real(x) => Complex64::new(x, 0.0),
                Value::Complex(z) => z,
                _ => {
                    self.wrong(a, "a number");
                    Complex64::new(0.0, 0.0)
                }
            },
        }
    }

    fn list(&mut self, name: &str, required: bool, owner_pos: Pos) -> (Vec<Complex64>, Pos) {
        match self.find(name) {
            None => {
                if required {
                    self.missing(owner_pos, name);
                }
                (Vec::new(), owner_pos)
            }
            Some(a) => match &a.value {
                Value::List(v) => (v.clone(), a.value_pos),
                _ => {
                    self.wrong(a, "a list");
                    (Vec::new(), a.value_pos)
                }
            },
        }
    }

    fn ident(&mut self, name: &str, owner_pos: Pos) -> Option<(String, Pos)> {
        match self.find(name) {
            None => {
                self.missing(owner_pos, name);
                None
            }
            Some(a) => match &a.value {
                Value::Ident(s) => Some((s.clone(), a.value_pos)),
                _ => {
                    self.wrong(a, "a map name");
                    None
                }
            },
        }
    }

    fn string(&mut self, name: &str) -> Option<String> {
        let a = self.find(name)?;
        match &a.value {
            Value::Str(s) => Some(s.clone()),
            _ => {
                self.wrong(a, "a quoted string");
                None
            }
        }
    }

    fn finish<T>(self, value: T) -> Result<T, Vec<Diagnostic>> {
        if self.diags.is_empty() {
            Ok(value)
        } else {
            Err(self.diags)
        }
    }
}

fn map_error(pos: Pos, e: MapError) -> Vec<Diagnostic> {
    vec![Diagnostic {
        pos,
        message: e.to_string(),
    }]
}

impl MapDecl {
    /// Constructs the declared map, reporting every invalid argument.
    pub fn build(&self) -> Result<DianalyticMap, Vec<Diagnostic>> {
        let owner = format!("{} map", self.kind.keyword());
        let mut args = Args::new(&self.args, self.kind.params(), &owner);
        let built: Option<Result<MapForm, Vec<Diagnostic>>> = match self.kind {
            MapKind::Moebius => {
                let theta = args.real("theta", 0.0);
                let a = args.complex("a", None, self.pos);
                let b = args.complex("b", None, self.pos);
                args.diags.is_empty().then(|| {
                    MoebiusRotation::new(theta, a, b)
                        .map(MapForm::Moebius)
                        .map_err(|e| map_error(self.pos, e))
                })
            }
            MapKind::Canonical => {
                let alpha = args.real("alpha", 0.0);
                let (zeros, at) = args.list("zeros", true, self.pos);
                args.diags.is_empty().then(|| {
                    CanonicalMap::new(alpha, zeros)
                        .map(MapForm::Canonical)
                        .map_err(|e| map_error(at, e))
                })
            }
            MapKind::Blaschke => {
                let theta = args.real("theta", 0.0);
                let p = args.int("p", 0, 0);
                let (zeros, at) = args.list("zeros", false, self.pos);
                let p = u32::try_from(p).unwrap_or(u32::MAX);
                args.diags.is_empty().then(|| {
                    HInvariantBlaschke::new(theta, p, zeros)
                        .map(MapForm::Blaschke)
                        .map_err(|e| map_error(at, e))
                })
            }
            MapKind::Form1 => {
                let theta = args.real("theta", 0.0);
                let (coeffs, at) = args.list("coeffs", true, self.pos);
                args.diags.is_empty().then(|| {
                    RationalForm1::new(theta, coeffs)
                        .map(MapForm::Form1)
                        .map_err(|e| map_error(at, e))
                })
            }
            MapKind::Product => {
                let theta = args.real("theta", 0.0);
                let (zeros, at) = args.list("zeros", true, self.pos);
                args.diags.is_empty().then(|| {
                    BlaschkeProduct::new(theta, zeros)
                        .map(MapForm::Product)
                        .map_err(|e| map_error(at, e))
                })
            }
        };
        match built {
            Some(Ok(form)) => args.finish(DianalyticMap {
                form,
                conj: self.conj,
            }),
            Some(Err(d)) => Err(d),
            None => Err(args.diags),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JuliaJob {
    pub map: String,
    pub window: Window,
    pub res: (usize, usize),
    pub max_iter: u32,
    pub eps: f64,
    pub out: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteinerJob {
    pub map: String,
    pub meridians: usize,
    pub latitudes: usize,
    pub window: Window,
    pub res: (usize, usize),
    pub out: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitJob {
    pub map: String,
    pub start: Complex64,
    pub steps: usize,
    /// Standard output when absent.
    pub out: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Job {
    Julia(JuliaJob),
    Steiner(SteinerJob),
    Orbit(OrbitJob),
}

impl Job {
    pub fn map_name(&self) -> &str {
        match self {
            Job::Julia(j) => &j.map,
            Job::Steiner(j) => &j.map,
            Job::Orbit(j) => &j.map,
        }
    }
}

impl JobDecl {
    /// Typed parameters with defaults filled in. Does not look at the referenced map.
    pub fn build(&self) -> Result<Job, Vec<Diagnostic>> {
        let owner = format!("{} job", self.kind.keyword());
        let mut args = Args::new(&self.args, self.kind.params(), &owner);
        let map = args
            .ident("map", self.pos)
            .map(|(m, _)| m)
            .unwrap_or_default();
        let job = match self.kind {
            JobKind::Julia => {
                let center = args.complex("center", Some(Complex64::new(0.0, 0.0)), self.pos);
                let width = args.positive_real("width", DEFAULT_JULIA_WIDTH);
                let res_w = args.int("res_w", DEFAULT_RESOLUTION, 1) as usize;
                let res_h = args.int("res_h", res_w as i64, 1) as usize;
                let max_iter = args
                    .int("max_iter", DEFAULT_MAX_ITER as i64, 1)
                    .min(u32::MAX as i64) as u32;
                let eps = args.real("eps", DEFAULT_EPS);
                if !(eps > 0.0 && eps < 1.0) {
                    let pos = args.find("eps").map_or(self.pos, |a| a.value_pos);
                    args.diags.push(Diagnostic {
                        pos,
                        message: "argument 'eps' must lie in (0, 1)".into(),
                    });
                }
                let out = args
                    .string("out")
                    .unwrap_or_else(|| format!("{}.ppm", self.name));
                let height = width * res_h as f64 / res_w as f64;
                Job::Julia(JuliaJob {
                    map,
                    window: Window::new(center, width, height),
                    res: (res_w, res_h),
                    max_iter,
                    eps,
                    out,
                })
            }
            JobKind::Steiner => {
                let meridians = args.int("meridians", DEFAULT_MERIDIANS, 0) as usize;
                let latitudes = args.int("latitudes", DEFAULT_LATITUDES, 0) as usize;
                let center = args.complex("center", Some(Complex64::new(0.0, 0.0)), self.pos);
                let width = args.positive_real("width", DEFAULT_JULIA_WIDTH);
                let res_w = args.int("res_w", DEFAULT_RESOLUTION, 1) as usize;
                let res_h = args.int("res_h", res_w as i64, 1) as usize;
                let out = args
                    .string("out")
                    .unwrap_or_else(|| format!("{}.ppm", self.name));
                let height = width * res_h as f64 / res_w as f64;
                Job::Steiner(SteinerJob {
                    map,
                    meridians,
                    latitudes,
                    window: Window::new(center, width, height),
                    res: (res_w, res_h),
                    out,
                })
            }
            JobKind::Orbit => {
                let start = args.complex("start", None, self.pos);
                let steps = args.int("steps", DEFAULT_ORBIT_STEPS, 0) as usize;
                let out = args.string("out");
                Job::Orbit(OrbitJob {
                    map,
                    start,
                    steps,
                    out,
                })
            }
        };
        args.finish(job)
    }
}

/// All semantic problems of a syntactically valid spec, in source order.
pub fn validate(spec: &Spec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    let names = spec
        .maps
        .iter()
        .map(|m| (&m.name, m.pos))
        .chain(spec.jobs.iter().map(|j| (&j.name, j.pos)));
    for (name, pos) in names {
        if seen.contains(&name.as_str()) {
            diags.push(Diagnostic {
                pos,
                message: format!("name '{name}' is declared twice"),
            });
        }
        seen.push(name);
    }
    let mut built = Vec::new();
    for m in &spec.maps {
        match m.build() {
            Ok(map) => built.push((m.name.as_str(), map)),
            Err(d) => diags.extend(d),
        }
    }
    for j in &spec.jobs {
        let job = match j.build() {
            Ok(job) => job,
            Err(d) => {
                diags.extend(d);
                continue;
            }
        };
        let map_pos = j
            .args
            .iter()
            .find(|a| a.name == "map")
            .map_or(j.pos, |a| a.value_pos);
        let Some(decl) = spec.map(job.map_name()) else {
            diags.push(Diagnostic {
                pos: map_pos,
                message: format!("unknown map '{}'", job.map_name()),
            });
            continue;
        };
        let Some((_, map)) = built.iter().find(|(n, _)| *n == decl.name) else {
            continue;
        };
        match (&job, &map.form) {
            (Job::Julia(_), MapForm::Blaschke(b)) if b.degree() < 3 => diags.push(Diagnostic {
                pos: map_pos,
                message: format!(
                    "julia needs a blaschke map of degree at least 3, '{}' has degree {}",
                    decl.name,
                    b.degree()
                ),
            }),
            (Job::Julia(_), MapForm::Blaschke(_)) => {}
            (Job::Julia(_), _) => diags.push(Diagnostic {
                pos: map_pos,
                message: format!(
                    "julia needs a blaschke map, '{}' is {}",
                    decl.name,
                    map.kind_name()
                ),
            }),
            (Job::Steiner(_), MapForm::Moebius(_)) => {}
            (Job::Steiner(_), _) => diags.push(Diagnostic {
                pos: map_pos,
                message: format!(
                    "steiner needs a moebius map, '{}' is {}",
                    decl.name,
                    map.kind_name()
                ),
            }),
            _ => {}
        }
    }
    diags.sort_by_key(|d| (d.pos.line, d.pos.col));
    diags
}

// ---------------------------------------------------------------- printer

/// Shortest representation that parses back to the same bits.
fn real(x: f64) -> String {
    format!("{x:?}")
}

fn complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", real(z.re), real(z.im.abs()))
}

/// Integral components print without a fraction; list items are always complex,
/// so the shorter forms re-parse to the same bits.
fn compact_real(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 && !(x == 0.0 && x.is_sign_negative()) {
        format!("{}", x as i64)
    } else {
        real(x)
    }
}

fn list_item(z: Complex64) -> String {
    if z.im.to_bits() == 0 {
        compact_real(z.re)
    } else if z.re.to_bits() == 0 {
        format!("{}i", compact_real(z.im))
    } else {
        let sign = if z.im.is_sign_negative() { '-' } else { '+' };
        format!("{}{sign}{}i", compact_real(z.re), compact_real(z.im.abs()))
    }
}

fn value(v: &Value) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        Value::Real(x) => real(*x),
        Value::Complex(z) => complex(*z),
        Value::List(items) => format!(
            "[{}]",
            items
                .iter()
                .map(|z| list_item(*z))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        Value::Ident(s) => s.clone(),
        Value::Str(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
    }
}

fn args(args: &[Arg]) -> String {
    args.iter()
        .map(|a| format!("{}={}", a.name, value(&a.value)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text: maps first, then jobs, one declaration per line.
pub fn format_spec(spec: &Spec) -> String {
    let mut out = String::new();
    for m in &spec.maps {
        let conj = if m.conj { " conj" } else { "" };
        out += &format!(
            "map {} = {}({}){conj}\n",
            m.name,
            m.kind.keyword(),
            args(&m.args)
        );
    }
    for j in &spec.jobs {
        out += &format!("job {} = {}({})\n", j.name, j.kind.keyword(), args(&j.args));
    }
    out
}

/// A single map declaration in canonical text.
pub fn format_map_decl(m: &MapDecl) -> String {
    format_spec(&Spec {
        maps: vec![m.clone()],
        jobs: vec![],
    })
    .trim_end()
    .to_string()
}

impl Arg {
    pub fn new(name: &str, value: Value) -> Self {
        Arg {
            name: name.to_string(),
            value,
            pos: Pos::default(),
            value_pos: Pos::default(),
        }
    }
}

impl MapDecl {
    /// Declaration of a canonical zero product; an integral `alpha` is written as an integer.
    pub fn canonical(name: &str, c: &CanonicalMap) -> MapDecl {
        let alpha = if c.alpha().fract() == 0.0 {
            Value::Int(c.alpha() as i64)
        } else {
            Value::Real(c.alpha())
        };
        MapDecl {
            name: name.to_string(),
            kind: MapKind::Canonical,
            args: vec![
                Arg::new("alpha", alpha),
                Arg::new("zeros", Value::List(c.zeros().to_vec())),
            ],
            conj: false,
            pos: Pos::default(),
        }
    }
}
