//! Arithmetic over `t`, `x`, `y` for right-hand sides and weights.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | atom
//! atom   := number | 'pi' | 't' | var | var '[' int ']' | func '(' expr ')' | '(' expr ')'
//! var    := 'x' | 'y'        func := 'sin' | 'cos' | 'exp' | 'tanh'
//! ```
//!
//! A bare `x` or `y` means the component being evaluated, so `-x` is `-x[j]` in
//! component `j`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    /// `x` (`y == false`) or `y` at `index`, or at the current component.
    Var { y: bool, index: Option<usize> },
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.offset + 1, self.message)
    }
}

impl std::error::Error for ExprError {}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected input"));
        }
        Ok(e)
    }

    pub fn eval(&self, t: f64, x: &[f64], y: &[f64], component: usize) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::T => t,
            Expr::Var { y: is_y, index } => {
                let j = index.unwrap_or(component);
                if *is_y {
                    y[j]
                } else {
                    x[j]
                }
            }
            Expr::Neg(e) => -e.eval(t, x, y, component),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(t, x, y, component), b.eval(t, x, y, component));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                }
            }
            Expr::Call(func, e) => {
                let v = e.eval(t, x, y, component);
                match func {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Tanh => v.tanh(),
                }
            }
        }
    }

    /// Visits every variable reference.
    fn vars(&self, out: &mut Vec<(bool, Option<usize>)>) {
        match self {
            Expr::Num(_) | Expr::T => {}
            Expr::Var { y, index } => out.push((*y, *index)),
            Expr::Neg(e) | Expr::Call(_, e) => e.vars(out),
            Expr::Bin(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    pub fn uses_y(&self) -> bool {
        let mut v = vec![];
        self.vars(&mut v);
        v.iter().any(|(y, _)| *y)
    }

    pub fn uses_state(&self) -> bool {
        let mut v = vec![];
        self.vars(&mut v);
        !v.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        let mut v = vec![];
        self.vars(&mut v);
        v.iter().filter_map(|(_, i)| *i).max()
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> ExprError {
        ExprError { offset: self.pos, message: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => Op::Add,
                Some(b'-') => Op::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => Op::Mul,
                Some(b'/') => Op::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ASCII");
                let func = match word {
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    "t" => return Ok(Expr::T),
                    "x" | "y" => {
                        let index = if self.eat(b'[') {
                            let i = self.index()?;
                            if !self.eat(b']') {
                                return Err(self.err("expected ']'"));
                            }
                            Some(i)
                        } else {
                            None
                        };
                        return Ok(Expr::Var { y: word == "y", index });
                    }
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "tanh" => Func::Tanh,
                    _ => {
                        self.pos = start;
                        return Err(self.err(format!("unknown name '{word}'")));
                    }
                };
                if !self.eat(b'(') {
                    return Err(self.err(format!("expected '(' after {word}")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(c) => Err(self.err(format!("unexpected '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                digits(self);
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ASCII");
        text.parse().map(Expr::Num).map_err(|_| ExprError { offset: start, message: format!("bad number '{text}'") })
    }

    fn index(&mut self) -> Result<usize, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ASCII")
            .parse()
            .map_err(|_| ExprError { offset: start, message: "expected a component index".into() })
    }
}
