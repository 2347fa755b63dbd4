//! A small expression language over tautological classes.
//!
//! Literals: `D(15|2346)` (boundary divisor), `S(1278|56|34)` (stratum),
//! `psi(3)`, `kappa(2)`, integer or rational scalars such as `3/2`.
//! Operators: `+`, `-`, `*`, parentheses. The ambient marking count is given
//! once per expression; marking lists are digit strings for n <= 9 and
//! comma-separated otherwise.

use std::fmt;

use crate::chow::{kappa_class, kappa_mul, psi_expand, ChowError, TautClass};
use crate::rational::Rational;
use crate::strata::{Partition2, StableTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprNode {
    Const(Rational),
    Divisor(Partition2),
    Stratum(StableTree),
    Psi(u8),
    Kappa(u8),
    Neg(Box<ExprNode>),
    Sum(Box<ExprNode>, Box<ExprNode>),
    Diff(Box<ExprNode>, Box<ExprNode>),
    Prod(Box<ExprNode>, Box<ExprNode>),
}

/// An expression over the tautological algebra of one M̄₀,ₙ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TautExpr {
    n: u8,
    root: ExprNode,
}

impl TautExpr {
    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn parse(n: u8, src: &str) -> Result<TautExpr, ParseError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            n,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(TautExpr { n, root })
    }

    /// Evaluates to a normal-form strata combination. Psi atoms expand into
    /// boundary, kappa atoms push forward from one extra marking, and
    /// products involving kappa atoms are computed by lifting:
    /// κ_a · X = π_*(ψ^{a+1} · π*X).
    pub fn evaluate(&self) -> Result<TautClass, ChowError> {
        match eval(self.n, &self.root)? {
            Value::Scalar(r) => Ok(TautClass::fundamental(self.n)?.scale(&r)),
            Value::Class(c) => Ok(c),
        }
    }
}

enum Value {
    Scalar(Rational),
    Class(TautClass),
}

enum Factor {
    Scalar(Rational),
    Class(TautClass),
    Kappa(u8),
}

fn eval(n: u8, node: &ExprNode) -> Result<Value, ChowError> {
    match node {
        ExprNode::Const(r) => Ok(Value::Scalar(r.clone())),
        ExprNode::Divisor(p) => Ok(Value::Class(TautClass::divisor(p))),
        ExprNode::Stratum(t) => Ok(Value::Class(TautClass::stratum(t))),
        ExprNode::Psi(i) => Ok(Value::Class(psi_expand(n, *i, None)?)),
        ExprNode::Kappa(a) => Ok(Value::Class(kappa_class(n, *a)?)),
        ExprNode::Neg(inner) => Ok(match eval(n, inner)? {
            Value::Scalar(r) => Value::Scalar(-r),
            Value::Class(c) => Value::Class(c.neg()),
        }),
        ExprNode::Sum(a, b) | ExprNode::Diff(a, b) => {
            let negate = matches!(node, ExprNode::Diff(..));
            let lhs = eval(n, a)?;
            let mut rhs = eval(n, b)?;
            if negate {
                rhs = match rhs {
                    Value::Scalar(r) => Value::Scalar(-r),
                    Value::Class(c) => Value::Class(c.neg()),
                };
            }
            let as_class = |v: Value| -> Result<TautClass, ChowError> {
                match v {
                    Value::Scalar(r) => Ok(TautClass::fundamental(n)?.scale(&r)),
                    Value::Class(c) => Ok(c),
                }
            };
            match (lhs, rhs) {
                (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(x + y)),
                (l, r) => {
                    let (l, r) = (as_class(l)?, as_class(r)?);
                    if l.codim() != r.codim() {
                        return Err(ChowError::MixedCodim(l.codim(), r.codim()));
                    }
                    Ok(Value::Class(l.add(&r)?))
                }
            }
        }
        ExprNode::Prod(..) => {
            let mut factors = Vec::new();
            collect_factors(n, node, &mut factors)?;
            let mut scalar = Rational::one();
            let mut class: Option<TautClass> = None;
            let mut kappas: Vec<u8> = Vec::new();
            for f in factors {
                match f {
                    Factor::Scalar(r) => scalar *= r,
                    Factor::Kappa(a) => kappas.push(a),
                    Factor::Class(c) => {
                        class = Some(match class {
                            None => c,
                            Some(acc) => acc.mul(&c)?,
                        });
                    }
                }
            }
            for a in kappas {
                class = Some(match class {
                    None => kappa_class(n, a)?,
                    Some(acc) => kappa_mul(a, &acc)?,
                });
            }
            Ok(match class {
                None => Value::Scalar(scalar),
                Some(c) => Value::Class(c.scale(&scalar)),
            })
        }
    }
}

fn collect_factors(n: u8, node: &ExprNode, out: &mut Vec<Factor>) -> Result<(), ChowError> {
    match node {
        ExprNode::Prod(a, b) => {
            collect_factors(n, a, out)?;
            collect_factors(n, b, out)?;
        }
        ExprNode::Kappa(a) => out.push(Factor::Kappa(*a)),
        ExprNode::Neg(inner) => {
            out.push(Factor::Scalar(-Rational::one()));
            collect_factors(n, inner, out)?;
        }
        ExprNode::Const(r) => out.push(Factor::Scalar(r.clone())),
        other => match eval(n, other)? {
            Value::Scalar(r) => out.push(Factor::Scalar(r)),
            Value::Class(c) => out.push(Factor::Class(c)),
        },
    }
    Ok(())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: u8,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl fmt::Display) -> ParseError {
        ParseError {
            position: self.pos,
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

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.bump() {
            Some(got) if got == c => Ok(()),
            _ => Err(self.error(format!("expected '{}'", c as char))),
        }
    }

    fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut node = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.bump();
                    node = ExprNode::Sum(Box::new(node), Box::new(self.term()?));
                }
                b'-' => {
                    self.bump();
                    node = ExprNode::Diff(Box::new(node), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<ExprNode, ParseError> {
        let mut node = self.factor()?;
        while self.peek() == Some(b'*') {
            self.bump();
            node = ExprNode::Prod(Box::new(node), Box::new(self.factor()?));
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<ExprNode, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.bump();
                Ok(ExprNode::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.rational(),
            Some(c) if c.is_ascii_alphabetic() => self.atom(),
            _ => Err(self.error("expected a factor")),
        }
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|e| self.error(format!("integer out of range: {e}")))
    }

    fn rational(&mut self) -> Result<ExprNode, ParseError> {
        let numer = self.integer()?;
        if self.peek() == Some(b'/') {
            self.bump();
            let denom = self.integer()?;
            if denom == 0 {
                return Err(self.error("zero denominator"));
            }
            Ok(ExprNode::Const(Rational::new(numer, denom)))
        } else {
            Ok(ExprNode::Const(Rational::from_int(numer)))
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<ExprNode, ParseError> {
        let name = self.ident();
        self.expect(b'(')?;
        match name.as_str() {
            "psi" => {
                let i = self.integer()?;
                self.expect(b')')?;
                if i < 1 || i > self.n as i64 {
                    return Err(self.error(format!("psi marking {i} outside 1..={}", self.n)));
                }
                Ok(ExprNode::Psi(i as u8))
            }
            "kappa" => {
                let a = self.integer()?;
                self.expect(b')')?;
                if a < 1 {
                    return Err(self.error("kappa index must be at least 1"));
                }
                if a > 13 {
                    return Err(self.error("kappa index out of range"));
                }
                Ok(ExprNode::Kappa(a as u8))
            }
            "D" | "S" => {
                let parts = self.parts()?;
                self.expect(b')')?;
                let total: usize = parts.iter().map(Vec::len).sum();
                if total != self.n as usize {
                    return Err(
                        self.error(format!("markings must be exactly 1..={}", self.n))
                    );
                }
                if name == "D" && parts.len() != 2 {
                    return Err(self.error("a divisor D(...) has exactly two parts"));
                }
                let tree = StableTree::chain(&parts)
                    .map_err(|e| self.error(format!("invalid stratum: {e}")))?;
                if name == "D" {
                    let p = Partition2::new(self.n, parts[1].iter().copied())
                        .map_err(|e| self.error(format!("invalid divisor: {e}")))?;
                    Ok(ExprNode::Divisor(p))
                } else {
                    Ok(ExprNode::Stratum(tree))
                }
            }
            other => Err(self.error(format!("unknown atom {other:?}"))),
        }
    }

    fn parts(&mut self) -> Result<Vec<Vec<u8>>, ParseError> {
        let mut parts = Vec::new();
        let mut current = String::new();
        loop {
            match self.src.get(self.pos).copied() {
                Some(b')') | None => break,
                Some(b'|') => {
                    self.pos += 1;
                    parts.push(std::mem::take(&mut current));
                }
                Some(c) => {
                    self.pos += 1;
                    current.push(c as char);
                }
            }
        }
        parts.push(current);
        parts
            .iter()
            .map(|s| {
                crate::strata::parse_marking_list(s)
                    .filter(|v| !v.is_empty())
                    .ok_or_else(|| self.error(format!("bad marking list {s:?}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::d_class;

    fn qi(v: i64) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn parses_divisor_combinations() {
        let e = TautExpr::parse(
            6,
            "D(15|2346)+D(25|1346)+D(36|1245)+D(46|1235)-D(56|1234)+2*S(125|346)",
        )
        .unwrap();
        let c = e.evaluate().unwrap();
        assert_eq!(c.num_terms(), 6);
        assert_eq!(c.coeff(&"(56|1234)".parse().unwrap()), qi(-1));
        assert_eq!(c.coeff(&"(125|346)".parse().unwrap()), qi(2));
    }

    #[test]
    fn psi_products_integrate() {
        let e = TautExpr::parse(5, "psi(1)*psi(2)").unwrap();
        assert_eq!(e.evaluate().unwrap().integrate().unwrap(), qi(2));
    }

    #[test]
    fn scalars_scale_and_constants_are_fundamental_multiples() {
        let e = TautExpr::parse(6, "3/2*D(12|3456)").unwrap();
        let c = e.evaluate().unwrap();
        assert_eq!(c.coeff(&"(12|3456)".parse().unwrap()), Rational::new(3, 2));
        let k = TautExpr::parse(6, "7").unwrap().evaluate().unwrap();
        assert_eq!(k.codim(), 0);
        assert_eq!(k.coeff(&"(123456)".parse().unwrap()), qi(7));
    }

    #[test]
    fn kappa_atom_matches_kappa_class() {
        let via_expr = TautExpr::parse(6, "kappa(1)").unwrap().evaluate().unwrap();
        assert_eq!(via_expr, kappa_class(6, 1).unwrap());
    }

    #[test]
    fn kappa_products_lift_and_agree_with_direct_multiplication() {
        let lifted = TautExpr::parse(7, "kappa(1)*kappa(1)")
            .unwrap()
            .evaluate()
            .unwrap();
        let direct = kappa_class(7, 1)
            .unwrap()
            .mul(&kappa_class(7, 1).unwrap())
            .unwrap();
        assert!(lifted.sub(&direct).unwrap().is_zero());
        // kappa times a boundary class through the lifting route.
        let mixed = TautExpr::parse(6, "kappa(1)*D(12|3456)")
            .unwrap()
            .evaluate()
            .unwrap();
        let d = TautClass::divisor(&Partition2::new(6, [1, 2]).unwrap());
        let direct2 = kappa_class(6, 1).unwrap().mul(&d).unwrap();
        assert!(mixed.sub(&direct2).unwrap().is_zero());
    }

    #[test]
    fn kappa_one_identity_against_total_boundary() {
        // kappa_1 = Σ psi_i − (all boundary divisors) on n=6.
        let e = TautExpr::parse(
            6,
            "psi(1)+psi(2)+psi(3)+psi(4)+psi(5)+psi(6)",
        )
        .unwrap();
        let psi_total = e.evaluate().unwrap();
        let boundary = d_class(6, &[2, 4])
            .unwrap()
            .add(&d_class(6, &[3, 3]).unwrap())
            .unwrap();
        let lhs = kappa_class(6, 1).unwrap();
        let rhs = psi_total.sub(&boundary).unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn mixed_codim_sums_are_rejected() {
        let e = TautExpr::parse(6, "psi(1)+1").unwrap();
        assert!(matches!(e.evaluate(), Err(ChowError::MixedCodim(..))));
        let e2 = TautExpr::parse(6, "D(12|3456)+S(12|34|56)").unwrap();
        assert!(matches!(e2.evaluate(), Err(ChowError::MixedCodim(..))));
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(TautExpr::parse(6, "psi(7)").is_err());
        assert!(TautExpr::parse(6, "D(12|345)").is_err());
        assert!(TautExpr::parse(6, "psi(1)/2").is_err());
        assert!(TautExpr::parse(6, "frob(1)").is_err());
        assert!(TautExpr::parse(6, "kappa(0)").is_err());
        let err = TautExpr::parse(6, "psi(1) + + psi(2)").unwrap_err();
        assert!(err.position > 0);
    }

    #[test]
    fn negation_and_grouping() {
        let a = TautExpr::parse(5, "-(psi(1)-psi(2))").unwrap().evaluate().unwrap();
        let b = TautExpr::parse(5, "psi(2)-psi(1)").unwrap().evaluate().unwrap();
        assert_eq!(a, b);
    }
}
