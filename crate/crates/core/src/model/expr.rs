//! A small arithmetic expression language for weights and nonlinearities.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := ("-" | "+") unary | power
//! power  := atom ("^" unary)?
//! atom   := number | ident | func "(" expr ")" | "(" expr ")"
//! func   := abs | sign | sin | cos | exp
//! ```
//!
//! An expression has exactly one free variable. `^` is right associative and
//! binds tighter than unary minus, so `-u^2` is `-(u^2)`. Integer exponents
//! are evaluated with `powi`, which keeps `u^3` odd for negative `u`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Abs,
    Sign,
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed single-variable expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number literal '{text}'")))?;
            out.push(Token::Num(value));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else {
            let tok = match c {
                '+' | '*' | '/' | '^' => Token::Op(c),
                '-' | '\u{2212}' => Token::Op('-'),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => return Err(Error::Parse(format!("unexpected character '{c}'"))),
            };
            out.push(tok);
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    variables: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek() {
            let op = if *op == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek() {
            let op = if *op == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Num(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                let func = match name.as_str() {
                    "abs" => Some(Func::Abs),
                    "sign" => Some(Func::Sign),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(func) = func {
                    match self.next() {
                        Some(Token::LParen) => {}
                        _ => return Err(Error::Parse(format!("expected '(' after {name}"))),
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Node::Num(std::f64::consts::PI));
                }
                if self.variables.contains(&name.as_str()) {
                    Ok(Node::Var)
                } else {
                    Err(Error::Parse(format!(
                        "unknown identifier '{name}' (allowed variables: {})",
                        self.variables.join(", ")
                    )))
                }
            }
            Some(tok) => Err(Error::Parse(format!("unexpected token {tok:?}"))),
            None => Err(Error::Parse("unexpected end of expression".into())),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.next() {
            Some(Token::RParen) => Ok(()),
            _ => Err(Error::Parse("expected ')'".into())),
        }
    }
}

impl Expr {
    /// Parses `src`, accepting any name in `variables` as the free variable.
    pub fn parse(src: &str, variables: &[&str]) -> Result<Self> {
        let tokens = tokenize(src)?;
        if tokens.is_empty() {
            return Err(Error::Parse("empty expression".into()));
        }
        let mut parser = Parser {
            tokens,
            pos: 0,
            variables,
        };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Parse(format!(
                "trailing input after position {}",
                parser.pos
            )));
        }
        Ok(Self {
            root,
            source: src.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_node(&self.root, x)
    }
}

fn eval_node(node: &Node, x: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var => x,
        Node::Neg(a) => -eval_node(a, x),
        Node::Bin(op, a, b) => {
            let l = eval_node(a, x);
            let r = eval_node(b, x);
            match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => l / r,
                BinOp::Pow => {
                    if r.fract() == 0.0 && r.abs() < i32::MAX as f64 {
                        l.powi(r as i32)
                    } else {
                        l.powf(r)
                    }
                }
            }
        }
        Node::Call(f, a) => {
            let v = eval_node(a, x);
            match f {
                Func::Abs => v.abs(),
                Func::Sign => {
                    if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: f64) -> f64 {
        Expr::parse(src, &["u"]).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0), 512.0);
        assert_eq!(ev("-u^2", 3.0), -9.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
    }

    #[test]
    fn integer_powers_stay_odd() {
        assert_eq!(ev("u^3", -2.0), -8.0);
        assert_eq!(ev("abs(u)^2*u", -2.0), -8.0);
        assert!((ev("abs(u)^1.5*sign(u)", -4.0) + 8.0).abs() < 1e-12);
    }

    #[test]
    fn functions_and_literals() {
        assert!((ev("sin(u) + cos(u)", 0.3) - (0.3f64.sin() + 0.3f64.cos())).abs() < 1e-15);
        assert_eq!(ev("exp(0)", 0.0), 1.0);
        assert_eq!(ev("1.5e-3 * 2E3", 0.0), 3.0);
        assert_eq!(ev("sign(0)", 0.0), 0.0);
        assert!((ev("pi", 0.0) - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(ev("u \u{2212} 1", 3.0), 2.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("", &["u"]).is_err());
        assert!(Expr::parse("1 +", &["u"]).is_err());
        assert!(Expr::parse("r * 2", &["u"]).is_err());
        assert!(Expr::parse("sin u", &["u"]).is_err());
        assert!(Expr::parse("(u", &["u"]).is_err());
        assert!(Expr::parse("u)", &["u"]).is_err());
        assert!(Expr::parse("u # 2", &["u"]).is_err());
    }

    #[test]
    fn alternative_variable_names() {
        let e = Expr::parse("1 + 0.5*cos(t)", &["r", "t"]).unwrap();
        assert_eq!(e.eval(0.0), 1.5);
        assert_eq!(e.source(), "1 + 0.5*cos(t)");
    }
}
