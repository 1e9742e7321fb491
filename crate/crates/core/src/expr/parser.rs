//! Recursive-descent parser for the moduli expression grammar.
//!
//! ```text
//! expr     := term (("+"|"-") term)*
//! term     := factor (("*"|"/") factor)*
//! factor   := "-" factor | base ("^" exponent)?
//! base     := number | var | "(" expr ")" | func "(" expr ")"
//! var      := "m" digits
//! func     := "sqrt" | "exp" | "log"
//! exponent := signed-integer | "(" signed-integer ("/" positive-integer)? ")"
//! ```

use super::{Func, Node, Rational};
use crate::error::{Error, Result};

pub(super) fn parse(text: &str, var_count: usize) -> Result<Node> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        var_count,
    };
    let node = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(node)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    var_count: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(match inner {
                Node::Const(c) => Node::Const(-c),
                other => Node::Neg(Box::new(other)),
            });
        }
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.exponent()?;
            return Ok(Node::Pow(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.error("expected number, variable, function or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number '{text}'"),
        })?;
        self.pos = i;
        Ok(Node::Const(value))
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_alphabetic() {
            i += 1;
        }
        let name = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        if name == "m" {
            let digits_start = i;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
            if i == digits_start {
                self.pos = i;
                return Err(self.error("expected variable index after 'm'"));
            }
            let index: usize = std::str::from_utf8(&s[digits_start..i])
                .expect("ascii slice")
                .parse()
                .map_err(|_| Error::Syntax {
                    offset: digits_start,
                    message: "variable index too large".into(),
                })?;
            if index >= self.var_count {
                return Err(Error::VariableOutOfRange {
                    index,
                    var_count: self.var_count,
                });
            }
            self.pos = i;
            return Ok(Node::Var(index));
        }
        let func = match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unknown identifier '{name}'"),
                })
            }
        };
        self.pos = i;
        self.expect(b'(')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok(Node::Func(func, Box::new(arg)))
    }

    fn signed_integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        let mut negative = false;
        if self.src.get(self.pos) == Some(&b'-') {
            negative = true;
            self.pos += 1;
        } else if self.src.get(self.pos) == Some(&b'+') {
            self.pos += 1;
        }
        self.skip_ws();
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.error("expected integer exponent"));
        }
        let magnitude: i64 = std::str::from_utf8(&self.src[digits_start..self.pos])
            .expect("ascii slice")
            .parse()
            .map_err(|_| Error::Syntax {
                offset: start,
                message: "exponent too large".into(),
            })?;
        Ok(if negative { -magnitude } else { magnitude })
    }

    fn exponent(&mut self) -> Result<Rational> {
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let num = self.signed_integer()?;
            let den = if self.peek() == Some(b'/') {
                self.pos += 1;
                self.skip_ws();
                let den_offset = self.pos;
                let den = self.signed_integer()?;
                if den == 0 {
                    return Err(Error::ZeroDenominator { offset: den_offset });
                }
                if den < 0 {
                    self.pos = den_offset;
                    return Err(self.error("exponent denominator must be positive"));
                }
                den
            } else {
                1
            };
            self.expect(b')')?;
            Ok(Rational::new(num, den))
        } else {
            Ok(Rational::integer(self.signed_integer()?))
        }
    }
}
