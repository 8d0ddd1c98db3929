//! Expression DSL for first integrals, slopes and coordinate maps.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term { ("+" | "-") term }
//! term   := factor { ("*" | "/") factor }
//! factor := "-" factor | power
//! power  := atom [ "^" factor ]          // right-associative
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus, which binds tighter than `*` `/`,
//! which bind tighter than `+` `-`. Identifiers resolve to variables or to
//! caller-supplied named constants (substituted as numerals at parse time).
//! Functions: exp, log, sin, cos, sqrt.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Num(f64),
    Var(usize),
    Bin(BinOp, Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Byte offset of the node's leading token in the source text.
    pub offset: usize,
}

/// A parsed expression over a fixed ordered variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    vars: Arc<Vec<String>>,
    root: Node,
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    tok: Tok,
    tok_offset: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Result<Lexer<'a>> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
            tok: Tok::End,
            tok_offset: 0,
        };
        lx.advance()?;
        Ok(lx)
    }

    fn advance(&mut self) -> Result<()> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_offset = self.pos;
        if self.pos >= self.src.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = self.src[self.pos];
        self.tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' | b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                // exponent suffix: 1e-3, 2.5E+10
                if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
                    let mut probe = self.pos + 1;
                    if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-')
                    {
                        probe += 1;
                    }
                    if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                        self.pos = probe;
                        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                            self.pos += 1;
                        }
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let v: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    expected: "a numeric literal".into(),
                })?;
                Tok::Num(v)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(
                    std::str::from_utf8(&self.src[start..self.pos])
                        .unwrap()
                        .to_string(),
                )
            }
            _ => {
                return Err(Error::Syntax {
                    offset: self.pos,
                    expected: "one of: number, identifier, '(', '+', '-', '*', '/', '^'".into(),
                })
            }
        };
        Ok(())
    }
}

// ---------------------------------------------------------------- parser

struct Parser<'a> {
    lx: Lexer<'a>,
    vars: &'a [String],
    consts: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.lx.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let offset = lhs.offset;
            self.lx.advance()?;
            let rhs = self.term()?;
            lhs = Node {
                kind: NodeKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                offset,
            };
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.lx.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let offset = self.lx.tok_offset;
            self.lx.advance()?;
            let rhs = self.factor()?;
            lhs = Node {
                kind: NodeKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                offset,
            };
        }
    }

    fn factor(&mut self) -> Result<Node> {
        if self.lx.tok == Tok::Minus {
            let offset = self.lx.tok_offset;
            self.lx.advance()?;
            let inner = self.factor()?;
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(inner)),
                offset,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.lx.tok == Tok::Caret {
            let offset = self.lx.tok_offset;
            self.lx.advance()?;
            let exp = self.factor()?;
            return Ok(Node {
                kind: NodeKind::Bin(BinOp::Pow, Box::new(base), Box::new(exp)),
                offset,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let offset = self.lx.tok_offset;
        match self.lx.tok.clone() {
            Tok::Num(v) => {
                self.lx.advance()?;
                Ok(Node {
                    kind: NodeKind::Num(v),
                    offset,
                })
            }
            Tok::LParen => {
                self.lx.advance()?;
                let inner = self.expr()?;
                if self.lx.tok != Tok::RParen {
                    return Err(Error::Syntax {
                        offset: self.lx.tok_offset,
                        expected: "')'".into(),
                    });
                }
                self.lx.advance()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.lx.advance()?;
                if self.lx.tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| Error::UnknownIdentifier {
                        name: name.clone(),
                        offset,
                    })?;
                    self.lx.advance()?;
                    let arg = self.expr()?;
                    if self.lx.tok != Tok::RParen {
                        return Err(Error::Syntax {
                            offset: self.lx.tok_offset,
                            expected: "')'".into(),
                        });
                    }
                    self.lx.advance()?;
                    return Ok(Node {
                        kind: NodeKind::Call(func, Box::new(arg)),
                        offset,
                    });
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node {
                        kind: NodeKind::Var(i),
                        offset,
                    });
                }
                if let Some(&v) = self.consts.get(&name) {
                    return Ok(Node {
                        kind: NodeKind::Num(v),
                        offset,
                    });
                }
                Err(Error::UnknownIdentifier { name, offset })
            }
            _ => Err(Error::Syntax {
                offset,
                expected: "one of: number, identifier, '(', '-'".into(),
            }),
        }
    }
}

/// Parse an expression over the given ordered variables. Named constants are
/// substituted as numeric literals.
pub fn parse(
    text: &str,
    variables: &[String],
    constants: &BTreeMap<String, f64>,
) -> Result<ScalarField> {
    let mut p = Parser {
        lx: Lexer::new(text)?,
        vars: variables,
        consts: constants,
    };
    let root = p.expr()?;
    if p.lx.tok != Tok::End {
        return Err(Error::Syntax {
            offset: p.lx.tok_offset,
            expected: "end of input or an operator".into(),
        });
    }
    Ok(ScalarField {
        vars: Arc::new(variables.to_vec()),
        root,
    })
}

impl ScalarField {
    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    /// Evaluate to a jet at a base point.
    pub fn eval_jet(&self, x0: &[f64], order: usize) -> Result<Jet> {
        if x0.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                got: x0.len(),
            });
        }
        self.eval_jet_on(&Jet::seed_point(x0, order))
    }

    /// Evaluate on caller-supplied variable jets (used for evaluation under a
    /// coordinate frame, where the variable jets are affine images of seeds).
    pub fn eval_jet_on(&self, seeds: &[Jet]) -> Result<Jet> {
        if seeds.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                got: seeds.len(),
            });
        }
        eval_node(&self.root, seeds)
    }

    /// Plain pointwise evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                got: x.len(),
            });
        }
        eval_point(&self.root, x)
    }

    /// Substitute each variable by the corresponding expression. All
    /// substituted expressions must share one variable list.
    pub fn compose(&self, subs: &[ScalarField]) -> Result<ScalarField> {
        if subs.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                got: subs.len(),
            });
        }
        let vars = subs[0].vars.clone();
        for s in subs {
            if s.vars != vars {
                return Err(Error::InvalidInput(
                    "composition substitutes must share one variable list".into(),
                ));
            }
        }
        fn subst(node: &Node, subs: &[ScalarField]) -> Node {
            match &node.kind {
                NodeKind::Num(_) => node.clone(),
                NodeKind::Var(i) => subs[*i].root.clone(),
                NodeKind::Bin(op, a, b) => Node {
                    kind: NodeKind::Bin(*op, Box::new(subst(a, subs)), Box::new(subst(b, subs))),
                    offset: node.offset,
                },
                NodeKind::Neg(a) => Node {
                    kind: NodeKind::Neg(Box::new(subst(a, subs))),
                    offset: node.offset,
                },
                NodeKind::Call(f, a) => Node {
                    kind: NodeKind::Call(*f, Box::new(subst(a, subs))),
                    offset: node.offset,
                },
            }
        }
        Ok(ScalarField {
            vars,
            root: subst(&self.root, subs),
        })
    }

    /// Render back to DSL text; parsing the result yields an equivalent AST.
    pub fn print(&self) -> String {
        let mut s = String::new();
        print_node(&self.root, 0, &self.vars, &mut s);
        s
    }
}

fn eval_node(node: &Node, seeds: &[Jet]) -> Result<Jet> {
    let nvars = seeds[0].nvars();
    let order = seeds[0].order();
    match &node.kind {
        NodeKind::Num(v) => Ok(Jet::constant(nvars, order, *v)),
        NodeKind::Var(i) => Ok(seeds[*i].clone()),
        NodeKind::Neg(a) => Ok(eval_node(a, seeds)?.neg()),
        NodeKind::Call(f, a) => {
            let arg = eval_node(a, seeds)?;
            let out = match f {
                Func::Exp => Ok(arg.exp()),
                Func::Log => arg.ln(),
                Func::Sin => Ok(arg.sin()),
                Func::Cos => Ok(arg.cos()),
                Func::Sqrt => arg.sqrt(),
            };
            out.map_err(|e| e.at_offset(node.offset))
        }
        NodeKind::Bin(op, a, b) => {
            let lhs = eval_node(a, seeds)?;
            match op {
                BinOp::Add => lhs.add(&eval_node(b, seeds)?),
                BinOp::Sub => lhs.sub(&eval_node(b, seeds)?),
                BinOp::Mul => lhs.mul(&eval_node(b, seeds)?),
                BinOp::Div => lhs.div(&eval_node(b, seeds)?),
                BinOp::Pow => {
                    let exp = eval_node(b, seeds)?;
                    // exponents must be constant expressions
                    if exp.coeffs()[1..].iter().any(|&c| c != 0.0) {
                        return Err(Error::InvalidInput(
                            "exponent must be a constant expression".into(),
                        )
                        .at_offset(node.offset));
                    }
                    let e = exp.value();
                    if (e - e.round()).abs() < 1e-12 && e.abs() < 64.0 {
                        lhs.powi(e.round() as i64)
                    } else {
                        lhs.powf(e)
                    }
                }
            }
            .map_err(|e| e.at_offset(node.offset))
        }
    }
}

fn eval_point(node: &Node, x: &[f64]) -> Result<f64> {
    match &node.kind {
        NodeKind::Num(v) => Ok(*v),
        NodeKind::Var(i) => Ok(x[*i]),
        NodeKind::Neg(a) => Ok(-eval_point(a, x)?),
        NodeKind::Call(f, a) => {
            let v = eval_point(a, x)?;
            match f {
                Func::Exp => Ok(v.exp()),
                Func::Log => {
                    if v <= 0.0 {
                        Err(Error::DomainError {
                            func: "log",
                            value: v,
                        }
                        .at_offset(node.offset))
                    } else {
                        Ok(v.ln())
                    }
                }
                Func::Sin => Ok(v.sin()),
                Func::Cos => Ok(v.cos()),
                Func::Sqrt => {
                    if v < 0.0 {
                        Err(Error::DomainError {
                            func: "sqrt",
                            value: v,
                        }
                        .at_offset(node.offset))
                    } else {
                        Ok(v.sqrt())
                    }
                }
            }
        }
        NodeKind::Bin(op, a, b) => {
            let l = eval_point(a, x)?;
            let r = eval_point(b, x)?;
            match op {
                BinOp::Add => Ok(l + r),
                BinOp::Sub => Ok(l - r),
                BinOp::Mul => Ok(l * r),
                BinOp::Div => {
                    if r.abs() < 1e-300 {
                        Err(Error::DivisionByNonUnit { magnitude: r.abs() }
                            .at_offset(node.offset))
                    } else {
                        Ok(l / r)
                    }
                }
                BinOp::Pow => {
                    if (r - r.round()).abs() < 1e-12 && r.abs() < 64.0 {
                        Ok(l.powi(r.round() as i32))
                    } else if l <= 0.0 {
                        Err(Error::DomainError {
                            func: "pow",
                            value: l,
                        }
                        .at_offset(node.offset))
                    } else {
                        Ok(l.powf(r))
                    }
                }
            }
        }
    }
}

// precedence levels: 0 add, 1 mul, 2 unary minus, 3 pow, 4 atom
fn print_node(node: &Node, parent_prec: u8, vars: &[String], out: &mut String) {
    let prec = match &node.kind {
        NodeKind::Bin(BinOp::Add | BinOp::Sub, ..) => 0,
        NodeKind::Bin(BinOp::Mul | BinOp::Div, ..) => 1,
        NodeKind::Neg(_) => 2,
        NodeKind::Bin(BinOp::Pow, ..) => 3,
        _ => 4,
    };
    let need_paren = prec < parent_prec;
    if need_paren {
        out.push('(');
    }
    match &node.kind {
        NodeKind::Num(v) => {
            if *v < 0.0 {
                let _ = write!(out, "({v})");
            } else {
                let _ = write!(out, "{v}");
            }
        }
        NodeKind::Var(i) => out.push_str(&vars[*i]),
        NodeKind::Neg(a) => {
            out.push('-');
            print_node(a, 3, vars, out);
        }
        NodeKind::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            print_node(a, 0, vars, out);
            out.push(')');
        }
        NodeKind::Bin(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => ("+", 0, 1),
                BinOp::Sub => ("-", 0, 1),
                BinOp::Mul => ("*", 1, 2),
                BinOp::Div => ("/", 1, 2),
                BinOp::Pow => ("^", 4, 3),
            };
            print_node(a, lp, vars, out);
            out.push_str(sym);
            print_node(b, rp, vars, out);
        }
    }
    if need_paren {
        out.push(')');
    }
}
