//! Recursive-descent parser for the expression syntax.
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' ['-'] nat)?
//! base   := nat | '(' expr ')'
//!         | 'x' '[' nat ']'
//!         | 'u' '[' nat (',' nat)* (';' nat)? ']' ('@' nat)?
//!         | 'p' ('[' nat (',' nat)* ';' nat ']' ('@' nat)?)?
//!         | ('A'|'B'|'C') '[' ... ']' ('@' nat)?
//!         | field ('[' nat (',' nat)* ']')?
//! ```
//!
//! All indices in the text are one-based.

use num_traits::Zero;

use super::coord::{CoordId, FieldAtom, Unknown};
use super::Expr;
use crate::error::{Error, Result};
use crate::jetmodel::CoordCatalog;
use crate::multiindex::MultiIndex;
use crate::Rational;

/// Parses `text` against `catalog`, allowing jets up to the catalog's order.
pub fn parse(text: &str, catalog: &CoordCatalog) -> Result<Expr> {
    parse_with_order(text, catalog, catalog.spec().k)
}

/// Parses `text`, allowing jet coordinates up to `max_order`.
pub fn parse_with_order(text: &str, catalog: &CoordCatalog, max_order: u32) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, catalog, max_order };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    catalog: &'a CoordCatalog,
    max_order: u32,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse { pos: self.pos, msg: msg.into() }
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = Vec::new();
        let first_negative = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        let first = self.term()?;
        terms.push(if first_negative { -first } else { first });
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Sum(terms) })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.factor()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.factor()?);
            } else if self.peek() == Some(b'/') {
                let at = self.pos;
                self.pos += 1;
                let d = self.factor()?;
                if let Expr::Const(c) = &d {
                    if c.is_zero() {
                        return Err(Error::Parse { pos: at, msg: "division by zero".into() });
                    }
                }
                factors.push(d.powi(-1));
            } else {
                break;
            }
        }
        Ok(fold_constant_fraction(factors))
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let negative = self.eat(b'-');
            let n = self.natural()? as i32;
            return Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }));
        }
        Ok(base)
    }

    fn natural(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a natural number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse { pos: start, msg: "number too large".into() })
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.natural()?;
                Ok(Expr::int(n as i64))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let name = self.ident().unwrap();
                self.named(&name, start)
            }
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    // Reads `n1, n2, ... [; s1 [; s2]]` up to the closing bracket.
    fn bracket(&mut self) -> Result<(Vec<u32>, Vec<u32>)> {
        self.expect(b'[')?;
        let mut comps = vec![self.natural()?];
        while self.eat(b',') {
            comps.push(self.natural()?);
        }
        let mut slots = Vec::new();
        while self.eat(b';') {
            slots.push(self.natural()?);
        }
        self.expect(b']')?;
        Ok((comps, slots))
    }

    fn fiber(&mut self) -> Result<usize> {
        let n = self.catalog.spec().n;
        if !self.eat(b'@') {
            return Ok(0);
        }
        let at = self.pos;
        let a = self.natural()? as usize;
        if a == 0 || a > n {
            return Err(Error::Parse { pos: at, msg: format!("fiber index {a} outside 1..={n}") });
        }
        Ok(a - 1)
    }

    fn multi_index(&self, comps: Vec<u32>, at: usize) -> Result<MultiIndex> {
        let m = self.catalog.spec().m;
        if comps.len() != m {
            return Err(Error::Parse {
                pos: at,
                msg: format!("multi-index has {} entries, base dimension is {m}", comps.len()),
            });
        }
        Ok(MultiIndex::new(comps))
    }

    fn direction(&self, s: u32, at: usize) -> Result<usize> {
        let m = self.catalog.spec().m;
        if s == 0 || s as usize > m {
            return Err(Error::Parse { pos: at, msg: format!("direction {s} outside 1..={m}") });
        }
        Ok(s as usize - 1)
    }

    fn named(&mut self, name: &str, start: usize) -> Result<Expr> {
        let spec = self.catalog.spec();
        let bracketed = self.peek() == Some(b'[');
        let at = self.pos;
        match name {
            "x" => {
                let (comps, slots) = self.bracket()?;
                if comps.len() != 1 || !slots.is_empty() {
                    return Err(Error::Parse { pos: at, msg: "expected x[i]".into() });
                }
                Ok(Expr::Atom(CoordId::Base(self.direction(comps[0], at)?)))
            }
            "u" => {
                let (comps, slots) = self.bracket()?;
                let index = self.multi_index(comps, at)?;
                let alpha = self.fiber()?;
                match slots.as_slice() {
                    [] => {
                        if index.order() > self.max_order {
                            return Err(Error::Parse {
                                pos: at,
                                msg: format!(
                                    "jet order {} exceeds the allowed order {}",
                                    index.order(),
                                    self.max_order
                                ),
                            });
                        }
                        Ok(Expr::Atom(CoordId::Jet { alpha, index }))
                    }
                    [s] => Ok(Expr::Atom(CoordId::IteratedJet {
                        alpha,
                        index,
                        dir: self.direction(*s, at)?,
                    })),
                    _ => Err(Error::Parse { pos: at, msg: "malformed jet coordinate".into() }),
                }
            }
            "p" if !bracketed => Ok(Expr::Atom(CoordId::Scalar)),
            "p" => {
                let (comps, slots) = self.bracket()?;
                let index = self.multi_index(comps, at)?;
                let [s] = slots.as_slice() else {
                    return Err(Error::Parse { pos: at, msg: "expected p[I;i]".into() });
                };
                let dir = self.direction(*s, at)?;
                if index.order() + 1 > spec.k {
                    return Err(Error::Parse {
                        pos: at,
                        msg: format!("momentum multi-index order must be below k = {}", spec.k),
                    });
                }
                let alpha = self.fiber()?;
                Ok(Expr::Atom(CoordId::Momentum { alpha, index, dir }))
            }
            "A" | "B" | "C" if bracketed => self.unknown(name, at),
            _ => {
                let decl = self.catalog.field(name).ok_or_else(|| Error::Parse {
                    pos: start,
                    msg: format!("unknown coordinate or undeclared field `{name}`"),
                })?;
                let mut atom = FieldAtom::new(name, spec.m, decl.depends.clone());
                if bracketed {
                    let (comps, slots) = self.bracket()?;
                    if !slots.is_empty() {
                        return Err(Error::Parse { pos: at, msg: "malformed field derivative".into() });
                    }
                    let deriv = self.multi_index(comps, at)?;
                    for (i, &c) in deriv.components().iter().enumerate() {
                        if c > 0 && !decl.depends.contains(&i) {
                            return Ok(Expr::zero());
                        }
                    }
                    atom.deriv = deriv;
                }
                Ok(Expr::Atom(CoordId::Field(atom)))
            }
        }
    }

    fn unknown(&mut self, name: &str, at: usize) -> Result<Expr> {
        let (comps, slots) = self.bracket()?;
        let u = match (name, slots.as_slice()) {
            ("C", []) if comps.len() == 1 => Unknown::C { dir: self.direction(comps[0], at)? },
            ("A", [j]) => {
                let index = self.multi_index(comps, at)?;
                let dir = self.direction(*j, at)?;
                Unknown::A { alpha: self.fiber()?, index, dir }
            }
            ("B", [i, j]) => {
                let index = self.multi_index(comps, at)?;
                let slot = self.direction(*i, at)?;
                let dir = self.direction(*j, at)?;
                Unknown::B { alpha: self.fiber()?, index, slot, dir }
            }
            _ => return Err(Error::Parse { pos: at, msg: format!("malformed unknown `{name}`") }),
        };
        Ok(Expr::Atom(CoordId::Unknown(u)))
    }
}

// `1/2` parses as a product of constants; fold it so printed rationals
// read back as the same literal.
fn fold_constant_fraction(mut factors: Vec<Expr>) -> Expr {
    if factors.len() >= 2 {
        if let (Expr::Const(a), Expr::Pow(b, -1)) = (&factors[0], &factors[1]) {
            if let Expr::Const(b) = b.as_ref() {
                let c: Rational = a / b;
                factors.splice(0..2, [Expr::Const(c)]);
            }
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Product(factors)
    }
}
