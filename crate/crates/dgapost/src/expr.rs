//! Arithmetic expressions in `x` and `y` for coefficient and source data.
//!
//! Grammar: numbers, `x`, `y`, `pi`, `e`; `+ - * / ^`; comparisons
//! `< <= > >= == !=` and `&&`, `||` yielding 1 or 0; functions `sin`,
//! `cos`, `tan`, `exp`, `log`, `sqrt`, `abs`, `arctan` (alias `atan`),
//! `min`, `max` and `if(cond, then, else)` for piecewise data.

use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Atan,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Y,
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    If(Box<Node>, Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::Y => y,
            Node::Neg(a) => -a.eval(x, y),
            Node::Call(f, a) => {
                let v = a.eval(x, y);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                    Func::Atan => v.atan(),
                }
            }
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y), b.eval(x, y));
                let t = |c: bool| if c { 1.0 } else { 0.0 };
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                    BinOp::Lt => t(a < b),
                    BinOp::Le => t(a <= b),
                    BinOp::Gt => t(a > b),
                    BinOp::Ge => t(a >= b),
                    BinOp::Eq => t(a == b),
                    BinOp::Ne => t(a != b),
                    BinOp::And => t(a != 0.0 && b != 0.0),
                    BinOp::Or => t(a != 0.0 || b != 0.0),
                    BinOp::Min => a.min(b),
                    BinOp::Max => a.max(b),
                }
            }
            Node::If(c, a, b) => {
                if c.eval(x, y) != 0.0 {
                    a.eval(x, y)
                } else {
                    b.eval(x, y)
                }
            }
        }
    }
}

/// A parsed expression; cheap to clone and shareable across threads.
#[derive(Debug, Clone)]
pub struct Expr {
    source: Arc<str>,
    root: Arc<Node>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if let Some(t) = p.tokens.get(p.pos) {
            return Err(ParseError {
                position: t.offset,
                message: format!("unexpected {:?}", t.kind),
            });
        }
        Ok(Self {
            source: source.into(),
            root: Arc::new(root),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.root.eval(p[0], p[1])
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

const OPS: [&str; 15] = [
    "<=", ">=", "==", "!=", "&&", "||", "**", "+", "-", "*", "/", "^", "<", ">", "!",
];

fn tokenize(s: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &s[start..i];
            let v = text.parse().map_err(|_| ParseError {
                position: start,
                message: format!("bad number '{text}'"),
            })?;
            out.push(Token {
                kind: Tok::Num(v),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Tok::Ident(s[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let kind = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(k) = kind {
            out.push(Token {
                kind: k,
                offset: start,
            });
            i += 1;
            continue;
        }
        match OPS.iter().find(|op| s[i..].starts_with(*op)) {
            Some(op) => {
                i += op.len();
                out.push(Token {
                    kind: Tok::Op(op),
                    offset: start,
                });
            }
            None => {
                return Err(ParseError {
                    position: start,
                    message: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or(self.tokens.last())
            .map_or(0, |t| t.offset)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn eat_op(&mut self, ops: &[&'static str]) -> Option<&'static str> {
        if let Some(Tok::Op(o)) = self.peek() {
            if let Some(found) = ops.iter().find(|x| *x == o) {
                self.pos += 1;
                return Some(found);
            }
        }
        None
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {t:?}"))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Node, ParseError> {
        const LEVELS: [&[&str]; 5] = [
            &["||"],
            &["&&"],
            &["<=", ">=", "==", "!=", "<", ">"],
            &["+", "-"],
            &["*", "/"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = self.eat_op(LEVELS[level]) {
            let rhs = self.binary(level + 1)?;
            let op = match op {
                "||" => BinOp::Or,
                "&&" => BinOp::And,
                "<=" => BinOp::Le,
                ">=" => BinOp::Ge,
                "==" => BinOp::Eq,
                "!=" => BinOp::Ne,
                "<" => BinOp::Lt,
                ">" => BinOp::Gt,
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                _ => BinOp::Div,
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat_op(&["-"]).is_some() {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op(&["+"]).is_some() {
            return self.unary();
        }
        if self.eat_op(&["!"]).is_some() {
            let a = self.unary()?;
            return Ok(Node::Bin(BinOp::Eq, Box::new(a), Box::new(Node::Num(0.0))));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat_op(&["^", "**"]).is_some() {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Node>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut out = vec![self.expr()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            out.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = match self.tokens.get(self.pos) {
            Some(t) => t.kind.clone(),
            None => return self.err("unexpected end of expression"),
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(&name),
            other => {
                self.pos -= 1;
                self.err(format!("unexpected {other:?}"))
            }
        }
    }

    fn ident(&mut self, name: &str) -> Result<Node, ParseError> {
        let func = match name {
            "x" => return Ok(Node::X),
            "y" => return Ok(Node::Y),
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "arctan" | "atan" => Func::Atan,
            "min" | "max" | "if" => {
                let at = self.offset();
                let mut a = self.args()?;
                let want = if name == "if" { 3 } else { 2 };
                if a.len() != want {
                    return Err(ParseError {
                        position: at,
                        message: format!("{name} takes {want} arguments"),
                    });
                }
                let c = Box::new(a.pop().unwrap());
                let b = Box::new(a.pop().unwrap());
                return Ok(match name {
                    "min" => Node::Bin(BinOp::Min, b, c),
                    "max" => Node::Bin(BinOp::Max, b, c),
                    _ => Node::If(Box::new(a.pop().unwrap()), b, c),
                });
            }
            _ => return self.err(format!("unknown identifier '{name}'")),
        };
        let at = self.offset();
        let mut a = self.args()?;
        if a.len() != 1 {
            return Err(ParseError {
                position: at,
                message: format!("{name} takes one argument"),
            });
        }
        Ok(Node::Call(func, Box::new(a.pop().unwrap())))
    }
}
