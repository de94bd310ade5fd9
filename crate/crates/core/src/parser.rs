//! Parser for the `__qpu__` kernel language.
//!
//! ```text
//! __qpu__ ansatz(AcceleratorBuffer b, double t0) {
//!   RX(3.1415926) 0
//!   CNOT 1 0
//!   RZ(t0) 0
//! }
//! __qpu__ term0(AcceleratorBuffer b, double t0) {
//!   ansatz(b, t0)
//!   MEASURE 0 [0]
//! }
//! ```
//!
//! Angles are real literals or bare formal-parameter names. A kernel may only
//! call kernels defined above it, so every unit is a forest of finite trees.
//! `#` starts a comment that runs to the end of the line.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ir::{CompositeInstruction, GateKind, Instruction, IrError, Node, Param};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{pos}: unexpected character {ch:?}")]
    Lexical { pos: Pos, ch: char },
    #[error("{pos}: malformed number `{text}`")]
    BadNumber { pos: Pos, text: String },
    #[error("{pos}: expected {expected}, found {found}")]
    Unexpected { pos: Pos, expected: String, found: String },
    #[error("{pos}: unknown gate `{name}`")]
    UnknownGate { pos: Pos, name: String },
    #[error("{pos}: call to undefined kernel `{name}`")]
    UndefinedKernel { pos: Pos, name: String },
    #[error("{pos}: `{name}` expects {expected} argument(s), got {got}")]
    Arity { pos: Pos, name: String, expected: usize, got: usize },
    #[error("{pos}: kernel `{name}` is already defined")]
    DuplicateKernel { pos: Pos, name: String },
    #[error("{pos}: undeclared parameter `{name}`")]
    UndeclaredParameter { pos: Pos, name: String },
    #[error("{pos}: {source}")]
    Invalid { pos: Pos, source: IrError },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Lexical { pos, .. }
            | ParseError::BadNumber { pos, .. }
            | ParseError::Unexpected { pos, .. }
            | ParseError::UnknownGate { pos, .. }
            | ParseError::UndefinedKernel { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::DuplicateKernel { pos, .. }
            | ParseError::UndeclaredParameter { pos, .. }
            | ParseError::Invalid { pos, .. } => *pos,
        }
    }
}

/// Parsed source: kernels in definition order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceUnit {
    pub text: String,
    pub kernels: Vec<CompositeInstruction>,
}

impl SourceUnit {
    pub fn get(&self, name: &str) -> Option<&CompositeInstruction> {
        self.kernels.iter().find(|k| k.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.kernels.iter().map(|k| k.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Real(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Real(v) => write!(f, "`{v}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            toks.push((t, pos));
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            toks.push((Tok::Ident(word), pos));
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || ((c == '-' || c == '+' || c == '.')
                && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit() || *n == '.'));
        if starts_number {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let is_int = word.chars().all(|d| d.is_ascii_digit());
            let tok = if is_int {
                word.parse::<usize>().map(Tok::Int).ok()
            } else {
                word.parse::<f64>().ok().filter(|v| v.is_finite()).map(Tok::Real)
            };
            match tok {
                Some(t) => toks.push((t, pos)),
                None => return Err(ParseError::BadNumber { pos, text: word }),
            }
            continue;
        }
        return Err(ParseError::Lexical { pos, ch: c });
    }
    toks.push((Tok::Eof, Pos { line, col }));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    defined: Vec<CompositeInstruction>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::Unexpected {
            pos: self.pos(),
            expected: expected.to_string(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Pos, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.bump().1;
                Ok((s, pos))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => Ok(self.bump().1),
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn qubit(&mut self) -> Result<usize, ParseError> {
        match *self.peek() {
            Tok::Int(q) => {
                self.bump();
                Ok(q)
            }
            _ => Err(self.unexpected("qubit index")),
        }
    }

    fn expr(&mut self, formals: &[String]) -> Result<Param, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Param::Value(v as f64))
            }
            Tok::Real(v) => {
                self.bump();
                Ok(Param::Value(v))
            }
            Tok::Ident(name) => {
                self.bump();
                if formals.contains(&name) {
                    Ok(Param::Named(name))
                } else {
                    Err(ParseError::UndeclaredParameter { pos, name })
                }
            }
            _ => Err(self.unexpected("angle literal or parameter name")),
        }
    }

    fn kernel(&mut self) -> Result<CompositeInstruction, ParseError> {
        self.keyword("__qpu__")?;
        let (name, name_pos) = self.ident("kernel name")?;
        if self.defined.iter().any(|k| k.name == name) {
            return Err(ParseError::DuplicateKernel { pos: name_pos, name });
        }
        self.expect(Tok::LParen, "`(`")?;
        self.keyword("AcceleratorBuffer")?;
        self.ident("buffer name")?;
        let mut formals: Vec<String> = Vec::new();
        while *self.peek() == Tok::Comma {
            self.bump();
            self.keyword("double")?;
            let (p, ppos) = self.ident("parameter name")?;
            if formals.contains(&p) {
                return Err(ParseError::Unexpected {
                    pos: ppos,
                    expected: "distinct parameter name".into(),
                    found: format!("`{p}`"),
                });
            }
            formals.push(p);
        }
        self.expect(Tok::RParen, "`)` or `, double NAME`")?;
        self.expect(Tok::LBrace, "`{`")?;

        let mut kernel = CompositeInstruction::new(name).with_params(formals);
        while *self.peek() != Tok::RBrace {
            let node = self.statement(&kernel.formal_params)?;
            kernel.children.push(node);
        }
        self.bump();
        Ok(kernel)
    }

    fn statement(&mut self, formals: &[String]) -> Result<Node, ParseError> {
        let (name, pos) = self.ident("gate or kernel call")?;
        if let Some(kind) = GateKind::from_name(&name) {
            return self.gate(kind, pos, formals).map(Node::Gate);
        }
        if *self.peek() != Tok::LParen {
            return Err(ParseError::UnknownGate { pos, name });
        }
        let callee = self
            .defined
            .iter()
            .find(|k| k.name == name)
            .ok_or_else(|| ParseError::UndefinedKernel { pos, name: name.clone() })?
            .clone();
        self.bump();
        // buffer argument: required, ignored
        self.ident("buffer argument")?;
        let mut args = Vec::new();
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr(formals)?);
        }
        self.expect(Tok::RParen, "`)`")?;
        if args.len() != callee.formal_params.len() {
            return Err(ParseError::Arity {
                pos,
                name,
                expected: callee.formal_params.len(),
                got: args.len(),
            });
        }
        Ok(Node::Call(crate::ir::KernelCall { args, kernel: callee }))
    }

    fn gate(&mut self, kind: GateKind, pos: Pos, formals: &[String]) -> Result<Instruction, ParseError> {
        let mut params = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            params.push(self.expr(formals)?);
            self.expect(Tok::RParen, "`)`")?;
        }
        if params.len() != kind.num_params() {
            return Err(ParseError::Arity {
                pos,
                name: kind.name().to_string(),
                expected: kind.num_params(),
                got: params.len(),
            });
        }
        let mut qubits = vec![self.qubit()?];
        if kind.num_qubits() == 2 {
            qubits.push(self.qubit()?);
        }
        let mut instr = Instruction { kind, qubits, params, classical_target: None };
        if kind == GateKind::Measure {
            self.expect(Tok::LBracket, "`[`")?;
            match *self.peek() {
                Tok::Int(c) => {
                    self.bump();
                    instr.classical_target = Some(c);
                }
                _ => return Err(self.unexpected("classical register index")),
            }
            self.expect(Tok::RBracket, "`]`")?;
        }
        instr.validate().map_err(|source| ParseError::Invalid { pos, source })?;
        Ok(instr)
    }
}

/// Parses zero or more kernel definitions.
pub fn parse(text: &str) -> Result<SourceUnit, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0, defined: Vec::new() };
    while *p.peek() != Tok::Eof {
        let k = p.kernel()?;
        p.defined.push(k);
    }
    Ok(SourceUnit { text: text.to_string(), kernels: p.defined })
}

fn fmt_param(p: &Param) -> String {
    match p {
        // `{:?}` always keeps a decimal point or exponent and round-trips exactly
        Param::Value(v) => format!("{v:?}"),
        Param::Named(n) => n.clone(),
    }
}

/// Canonical text for a unit. Parsing the output yields the same kernels.
pub fn unparse(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for k in &unit.kernels {
        write!(out, "__qpu__ {}(AcceleratorBuffer b", k.name).unwrap();
        for p in &k.formal_params {
            write!(out, ", double {p}").unwrap();
        }
        out.push_str(") {\n");
        for child in &k.children {
            match child {
                Node::Gate(i) => {
                    out.push_str("  ");
                    out.push_str(i.kind.name());
                    if let Some(p) = i.params.first() {
                        write!(out, "({})", fmt_param(p)).unwrap();
                    }
                    for q in &i.qubits {
                        write!(out, " {q}").unwrap();
                    }
                    if let Some(c) = i.classical_target {
                        write!(out, " [{c}]").unwrap();
                    }
                    out.push('\n');
                }
                Node::Call(call) => {
                    write!(out, "  {}(b", call.kernel.name).unwrap();
                    for a in &call.args {
                        write!(out, ", {}", fmt_param(a)).unwrap();
                    }
                    out.push_str(")\n");
                }
            }
        }
        out.push_str("}\n");
    }
    out
}
