use super::{AlphaExpr, Declared};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Word(String),
    Quoted(String),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let mut out = vec![];
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' => {
                chars.next();
                out.push((i, if c == '(' { Token::Open } else { Token::Close }));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, e)) => s.push(e),
                            None => return Err(parse_err(src.len(), "unterminated escape")),
                        },
                        Some((_, ch)) => s.push(ch),
                        None => return Err(parse_err(i, "unterminated string")),
                    }
                }
                out.push((i, Token::Quoted(s)));
            }
            _ => {
                let mut s = String::new();
                while let Some(&(_, ch)) = chars.peek() {
                    if ch.is_whitespace() || ch == '(' || ch == ')' || ch == '"' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                out.push((i, Token::Word(s)));
            }
        }
    }
    Ok(out)
}

fn parse_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Parse { offset, reason: reason.into() }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn next(&mut self) -> Result<Token> {
        let t = self.tokens.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t.ok_or_else(|| parse_err(self.end, "unexpected end of input"))
    }

    fn expect_close(&mut self) -> Result<()> {
        let at = self.offset();
        match self.next()? {
            Token::Close => Ok(()),
            _ => Err(parse_err(at, "expected ')'")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let at = self.offset();
        match self.next()? {
            Token::Word(w) => w.parse().map_err(|_| parse_err(at, format!("expected a number, got '{w}'"))),
            _ => Err(parse_err(at, "expected a number")),
        }
    }

    fn expr(&mut self) -> Result<AlphaExpr> {
        let at = self.offset();
        if self.next()? != Token::Open {
            return Err(parse_err(at, "expected '('"));
        }
        let head_at = self.offset();
        let head = match self.next()? {
            Token::Word(w) => w,
            _ => return Err(parse_err(head_at, "expected an operator name")),
        };
        let e = match head.as_str() {
            "atom" => {
                let name_at = self.offset();
                let name = match self.next()? {
                    Token::Word(w) | Token::Quoted(w) => w,
                    _ => return Err(parse_err(name_at, "expected an atom name")),
                };
                let value_at = self.offset();
                let declared = match self.next()? {
                    Token::Word(w) if w == "compact" => Declared::Compact,
                    Token::Word(w) if w == "unknown" => Declared::Unknown,
                    Token::Word(w) => Declared::Value(
                        w.parse().map_err(|_| parse_err(value_at, format!("expected α, 'compact' or 'unknown', got '{w}'")))?,
                    ),
                    _ => return Err(parse_err(value_at, "expected α, 'compact' or 'unknown'")),
                };
                AlphaExpr::Atom { name, declared }
            }
            "closure" => AlphaExpr::Closure(Box::new(self.expr()?)),
            "hull" | "convex_hull" => AlphaExpr::ConvexHull(Box::new(self.expr()?)),
            "subset" | "subset_of" => AlphaExpr::SubsetOf(Box::new(self.expr()?)),
            "scale" => {
                let l = self.number()?;
                AlphaExpr::Scale(l, Box::new(self.expr()?))
            }
            "scalar_set_product" => {
                let s = self.number()?;
                AlphaExpr::ScalarSetProduct { sup_abs: s, set: Box::new(self.expr()?) }
            }
            "union" | "sum" | "product" | "product_max" => {
                // n-ary forms fold to the left
                let mut acc = self.expr()?;
                let mut count = 1;
                while self.tokens.get(self.pos).map(|t| &t.1) == Some(&Token::Open) {
                    let rhs = Box::new(self.expr()?);
                    acc = match head.as_str() {
                        "union" => AlphaExpr::Union(Box::new(acc), rhs),
                        "sum" => AlphaExpr::Sum(Box::new(acc), rhs),
                        _ => AlphaExpr::ProductMax(Box::new(acc), rhs),
                    };
                    count += 1;
                }
                if count < 2 {
                    return Err(parse_err(self.offset(), format!("'{head}' needs at least two operands")));
                }
                acc
            }
            other => return Err(parse_err(head_at, format!("unknown operator '{other}'"))),
        };
        self.expect_close()?;
        Ok(e)
    }
}

/// Reads expressions such as `(scale 3 (atom "B" 2))`.
///
/// Operators: `atom NAME (VALUE|compact|unknown)`, `closure`, `hull`, `subset`,
/// `scale λ`, `scalar_set_product SUP`, and the n-ary `union`, `sum`, `product`.
pub fn parse_expr(src: &str) -> Result<AlphaExpr> {
    let mut p = Parser { tokens: tokenize(src)?, pos: 0, end: src.len() };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(parse_err(p.offset(), "trailing input"));
    }
    Ok(e)
}
