//! Ordinal expressions for the `ord` command.
//!
//! ```text
//! expr    := operand (("+" | "#") operand)*
//! operand := primary ("#*" nat)*
//! primary := nat | "w" ("^" (nat | "(" expr ")"))? ("*" nat)?
//!          | "exp" "(" nat "," expr ")" | "(" expr ")"
//! ```
//!
//! `+` is ordinal addition, `#` the natural sum, `#* n` the natural product
//! with a finite `n`, `exp(k, a)` is `k^a`. Both binary operators associate
//! to the left and bind equally; `#*` binds tighter.

use termbound::nat::Nat;
use termbound::ordinals::Ordinal;

#[derive(Debug, thiserror::Error)]
#[error("at byte {pos}: {msg}")]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

pub fn evaluate(src: &str) -> Result<Ordinal, ExprError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(v)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> ExprError {
        ExprError {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ExprError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn nat(&mut self) -> Result<Nat, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a natural number"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("digits parse"))
    }

    fn expr(&mut self) -> Result<Ordinal, ExprError> {
        let mut acc = self.operand()?;
        loop {
            if self.peek() == Some(b'+') {
                self.pos += 1;
                acc = acc.add(&self.operand()?);
            } else if self.peek() == Some(b'#') && self.src.get(self.pos + 1) != Some(&b'*') {
                self.pos += 1;
                acc = acc.nat_sum(&self.operand()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn operand(&mut self) -> Result<Ordinal, ExprError> {
        let mut v = self.primary()?;
        while self.eat("#*") {
            v = v.nat_mul(&self.nat()?);
        }
        Ok(v)
    }

    fn primary(&mut self) -> Result<Ordinal, ExprError> {
        match self.peek() {
            Some(b'0'..=b'9') => Ok(Ordinal::finite(self.nat()?)),
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(")")?;
                Ok(v)
            }
            _ if self.eat("exp") => {
                self.expect("(")?;
                let at = self.pos;
                let base = self.nat()?;
                self.expect(",")?;
                let alpha = self.expr()?;
                self.expect(")")?;
                let base = u64::try_from(&base).map_err(|_| ExprError {
                    pos: at,
                    msg: "base too large".into(),
                })?;
                Ordinal::exp_base(base, &alpha).map_err(|e| ExprError {
                    pos: at,
                    msg: e.to_string(),
                })
            }
            Some(b'w') => {
                self.pos += 1;
                let exponent = if self.eat("^") {
                    if self.eat("(") {
                        let e = self.expr()?;
                        self.expect(")")?;
                        e
                    } else {
                        Ordinal::finite(self.nat()?)
                    }
                } else {
                    Ordinal::one()
                };
                let coefficient = if self.eat("*") { self.nat()? } else { Nat::from(1u8) };
                Ok(Ordinal::omega_term(exponent, coefficient))
            }
            Some(_) => Err(self.error("expected a number, `w`, `exp` or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(s: &str) -> String {
        evaluate(s).unwrap().to_string()
    }

    #[test]
    fn operators() {
        assert_eq!(eval("w # 1"), "w+1");
        assert_eq!(eval("1 # w"), "w+1");
        assert_eq!(eval("1 + w"), "w");
        assert_eq!(eval("0 # 0"), "0");
        assert_eq!(eval("exp(2, w*2)"), "w^2");
        assert_eq!(eval("(w+3) #* 2"), "w*2+6");
        assert_eq!(eval("w^(w) # w^2*3 + 4"), "w^(w)+w^2*3+4");
        assert_eq!(eval("exp(3, w*2 + 1)"), "w^2*3");
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["", "w +", "exp(1, 2)", "(w", "w ^", "x", "3 3"] {
            assert!(evaluate(bad).is_err(), "{bad:?}");
        }
    }
}
