//! Hand-written recursive-descent parser for user function expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | var | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus (`-x1^2 = -(x1^2)`) and associates to
//! the right. Variables are `x1 .. xn`. Error positions are byte offsets.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func1 {
    Abs,
    Sqrt,
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func2 {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call1(Func1, Box<Node>),
    Call2(Func2, Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Node::Call1(f, a) => {
                let v = a.eval(x);
                match f {
                    Func1::Abs => v.abs(),
                    Func1::Sqrt => v.sqrt(),
                    Func1::Sin => v.sin(),
                    Func1::Cos => v.cos(),
                    Func1::Exp => v.exp(),
                }
            }
            Node::Call2(f, a, b) => {
                let (u, v) = (a.eval(x), b.eval(x));
                match f {
                    Func2::Min => u.min(v),
                    Func2::Max => u.max(v),
                }
            }
        }
    }
}

/// A parsed expression over `x1 .. xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    dim: usize,
}

impl Expr {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates at `x`; panics if `x` has fewer than `dim` coordinates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(pos: usize, msg: impl Into<String>) -> Error {
        Error::Parse { pos, msg: msg.into() }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>> {
        let bytes = self.src.as_bytes();
        let mut out = Vec::new();
        loop {
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            let Some(&c) = bytes.get(self.pos) else {
                out.push((start, Tok::End));
                return Ok(out);
            };
            let tok = match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => {
                    self.pos += 1;
                    Tok::Op(c as char)
                }
                b'(' => {
                    self.pos += 1;
                    Tok::LParen
                }
                b')' => {
                    self.pos += 1;
                    Tok::RParen
                }
                b',' => {
                    self.pos += 1;
                    Tok::Comma
                }
                b'0'..=b'9' | b'.' => self.number()?,
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while self.pos < bytes.len()
                        && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    Tok::Ident(self.src[start..self.pos].to_string())
                }
                _ => {
                    let ch = self.src[start..].chars().next().unwrap_or('?');
                    return Err(Self::err(start, format!("unexpected character {ch:?}")));
                }
            };
            out.push((start, tok));
        }
    }

    fn number(&mut self) -> Result<Tok> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.pos < bytes.len() && bytes[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut count = digits(self);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(Self::err(start, "malformed number"));
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(Self::err(save, "exponent has no digits"));
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Tok::Num)
            .map_err(|e| Self::err(start, format!("malformed number: {e}")))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(Error::Parse { pos: self.pos(), msg: format!("expected {what}") })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            lhs = if c == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let (pos, tok) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    return self.call(pos, &name);
                }
                self.variable(pos, &name)
            }
            Tok::End => Err(Error::Parse { pos, msg: "unexpected end of expression".into() }),
            other => Err(Error::Parse { pos, msg: format!("unexpected token {other:?}") }),
        }
    }

    fn variable(&self, pos: usize, name: &str) -> Result<Node> {
        let idx = name
            .strip_prefix('x')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<usize>().ok());
        match idx {
            Some(k) if k >= 1 && k <= self.dim => Ok(Node::Var(k - 1)),
            Some(k) => Err(Error::Parse {
                pos,
                msg: format!("variable index out of range: x{k} with n = {}", self.dim),
            }),
            None => Err(Error::Parse { pos, msg: format!("unknown identifier {name:?}") }),
        }
    }

    fn call(&mut self, pos: usize, name: &str) -> Result<Node> {
        self.expect(Tok::LParen, "'('")?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "')'")?;
        let arity = |want: usize| {
            if args.len() == want {
                Ok(())
            } else {
                Err(Error::Parse {
                    pos,
                    msg: format!("arity mismatch: {name} takes {want} argument(s), got {}", args.len()),
                })
            }
        };
        let f1 = match name {
            "abs" => Some(Func1::Abs),
            "sqrt" => Some(Func1::Sqrt),
            "sin" => Some(Func1::Sin),
            "cos" => Some(Func1::Cos),
            "exp" => Some(Func1::Exp),
            _ => None,
        };
        if let Some(f) = f1 {
            arity(1)?;
            return Ok(Node::Call1(f, Box::new(args.remove(0))));
        }
        let f2 = match name {
            "min" => Some(Func2::Min),
            "max" => Some(Func2::Max),
            _ => None,
        };
        if let Some(f) = f2 {
            arity(2)?;
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            return Ok(Node::Call2(f, Box::new(a), Box::new(b)));
        }
        Err(Error::Parse { pos, msg: format!("unknown function {name:?}") })
    }
}

/// Parses `src` as a function of `x1 .. xn`.
pub fn parse_function(src: &str, n: usize) -> Result<Expr> {
    let toks = Lexer { src, pos: 0 }.tokens()?;
    let mut p = Parser { toks, at: 0, dim: n };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(Error::Parse { pos: p.pos(), msg: "trailing input".into() });
    }
    Ok(Expr { root, dim: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ev(src: &str, n: usize, x: &[f64]) -> f64 {
        parse_function(src, n).unwrap().eval(x)
    }

    fn err_pos(src: &str, n: usize) -> (usize, String) {
        match parse_function(src, n).unwrap_err() {
            Error::Parse { pos, msg } => (pos, msg),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn examples() {
        assert_abs_diff_eq!(ev("x1*x2", 2, &[0.3, 0.7]), 0.21, epsilon = 1e-16);
        assert_eq!(ev("abs(x1-0.5)", 1, &[0.25]), 0.25);
        let (_, msg) = err_pos("x3", 2);
        assert!(msg.contains("variable index out of range"));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-x1^2", 1, &[3.0]), -9.0);
        assert_eq!(ev("2^3^2", 0, &[]), 512.0);
        assert_eq!(ev("2^-1", 0, &[]), 0.5);
        assert_eq!(ev("1 - 2 - 3", 0, &[]), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0, &[]), 1.0);
        assert_eq!(ev("1 + 2 * 3", 0, &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", 0, &[]), 9.0);
        assert_eq!(ev("--2", 0, &[]), 2.0);
        assert_eq!(ev("-2*3", 0, &[]), -6.0);
    }

    #[test]
    fn functions_and_literals() {
        assert_eq!(ev("min(x1, x2) + max(x1, x2)", 2, &[0.2, 0.9]), 1.1);
        assert_eq!(ev("sqrt(4) + exp(0) + cos(0) + sin(0)", 0, &[]), 4.0);
        assert_eq!(ev("1.5e2 + .5 + 2.", 0, &[]), 152.5);
        assert_eq!(ev("1E-1", 0, &[]), 0.1);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(err_pos("x1 + ", 1).0, 5);
        assert_eq!(err_pos("x1 $ 2", 1).0, 3);
        let (pos, msg) = err_pos("foo + 1", 1);
        assert_eq!(pos, 0);
        assert!(msg.contains("unknown identifier"));
        let (pos, msg) = err_pos("1 + min(x1)", 1);
        assert_eq!(pos, 4);
        assert!(msg.contains("arity mismatch"));
        assert!(err_pos("sin(1, 2)", 0).1.contains("arity"));
        assert!(err_pos("(1 + 2", 0).1.contains("')'"));
        assert!(err_pos("1 2", 0).1.contains("trailing"));
        assert!(err_pos("x0", 2).1.contains("out of range"));
        assert!(err_pos("1e+", 0).1.contains("exponent"));
        assert!(err_pos("tan(1)", 0).1.contains("unknown function"));
    }
}
