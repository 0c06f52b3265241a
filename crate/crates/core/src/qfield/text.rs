//! Text form of field elements.
//!
//! The canonical output is `a/d + b/d*sqrt(D)`. The parser accepts any
//! arithmetic expression over integers and `sqrt(n)` built from `+ - * /`
//! and parentheses, e.g. `sqrt(2)`, `3`, `1/2+1/2*sqrt(5)`,
//! `(1+sqrt(5))/2`, `3+2*sqrt(2)`. `sqrt(n)` must lie in the field, i.e.
//! `n = k^2` or `n = D k^2`.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{FieldDesc, QuadElem};
use crate::error::{Error, Result};

impl QuadElem {
    pub fn parse(field: &FieldDesc, input: &str) -> Result<QuadElem> {
        let mut p = Parser {
            src: input.as_bytes(),
            pos: 0,
            field,
            input,
        };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(v)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    field: &'a FieldDesc,
    input: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            input: self.input.to_string(),
            reason: format!("{} (at offset {})", reason.into(), self.pos),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<QuadElem> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.try_add(&self.term()?)?;
            } else if self.eat(b'-') {
                acc = acc.try_sub(&self.term()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<QuadElem> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc.try_mul(&self.unary()?)?;
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                if rhs.is_zero() {
                    return Err(self.err("division by zero"));
                }
                acc = acc.try_div(&rhs)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<QuadElem> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<QuadElem> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(QuadElem::from_int(self.field, n))
            }
            Some(b's') => {
                if !self.src[self.pos..].starts_with(b"sqrt") {
                    return Err(self.err("unknown identifier"));
                }
                self.pos += 4;
                if !self.eat(b'(') {
                    return Err(self.err("expected '(' after sqrt"));
                }
                self.skip_ws();
                let n = self.integer()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.sqrt_in_field(&n)
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        BigInt::parse_bytes(&self.src[start..self.pos], 10).ok_or_else(|| self.err("bad integer"))
    }

    fn sqrt_in_field(&self, n: &BigInt) -> Result<QuadElem> {
        if n.is_negative() {
            return Err(self.err("negative radicand"));
        }
        let r = n.sqrt();
        if &(&r * &r) == n {
            return Ok(QuadElem::from_int(self.field, r));
        }
        let d = self.field.d();
        if (n % d).is_zero() {
            let k2 = n / d;
            let k = k2.sqrt();
            if &k * &k == k2 {
                return Ok(QuadElem::sqrt_d(self.field).scale_int(&k));
            }
        }
        Err(Error::FieldMismatch(format!("sqrt({n})"), d.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(d: i64) -> FieldDesc {
        FieldDesc::new(d).unwrap()
    }

    fn q(field: &FieldDesc, a: i64, b: i64, c: i64) -> QuadElem {
        QuadElem::from_parts(field, a.into(), b.into(), c.into()).unwrap()
    }

    #[test]
    fn parses_common_forms() {
        let k2 = f(2);
        let k5 = f(5);
        assert_eq!(QuadElem::parse(&k2, "sqrt(2)").unwrap(), q(&k2, 0, 1, 1));
        assert_eq!(QuadElem::parse(&k2, "3").unwrap(), q(&k2, 3, 0, 1));
        assert_eq!(QuadElem::parse(&k5, "1/2+1/2*sqrt(5)").unwrap(), q(&k5, 1, 1, 2));
        assert_eq!(QuadElem::parse(&k5, "(1 + sqrt(5)) / 2").unwrap(), q(&k5, 1, 1, 2));
        assert_eq!(QuadElem::parse(&k2, "3+2*sqrt(2)").unwrap(), q(&k2, 3, 2, 1));
        assert_eq!(QuadElem::parse(&k2, "-(3+2*sqrt(2))").unwrap(), q(&k2, -3, -2, 1));
        assert_eq!(QuadElem::parse(&k2, "sqrt(8)").unwrap(), q(&k2, 0, 2, 1));
        assert_eq!(QuadElem::parse(&k2, "sqrt(9)").unwrap(), q(&k2, 3, 0, 1));
    }

    #[test]
    fn canonical_form_round_trips() {
        let k = f(13);
        for x in [q(&k, 3, -2, 7), q(&k, 0, 1, 1), q(&k, -5, 0, 1), q(&k, 1, 1, 2)] {
            let s = x.to_string();
            assert_eq!(QuadElem::parse(&k, &s).unwrap(), x, "{s}");
        }
        assert_eq!(q(&f(2), 3, 2, 1).to_string(), "3/1 + 2/1*sqrt(2)");
    }

    #[test]
    fn rejects_foreign_radicands_and_garbage() {
        let k5 = f(5);
        assert!(matches!(QuadElem::parse(&k5, "sqrt(7)"), Err(Error::FieldMismatch(..))));
        assert!(matches!(QuadElem::parse(&k5, "1 +"), Err(Error::Parse { .. })));
        assert!(matches!(QuadElem::parse(&k5, "1/0"), Err(Error::Parse { .. })));
        assert!(matches!(QuadElem::parse(&k5, "x"), Err(Error::Parse { .. })));
        assert!(matches!(QuadElem::parse(&k5, "2 3"), Err(Error::Parse { .. })));
    }
}
