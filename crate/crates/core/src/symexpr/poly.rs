//! Sparse multivariate polynomials and rational functions over the rationals.
//!
//! This is the canonical form behind [`Expr`](super::Expr): a reduced quotient
//! of two expanded polynomials whose denominator has leading coefficient one.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::coord::CoordId;
use crate::error::{Error, Result};
use crate::Rational;

/// A power product of symbols, sorted by symbol.
///
/// Ordered lexicographically with the largest symbol most significant.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(CoordId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: CoordId) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn var_pow(v: CoordId, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(CoordId, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, v: &CoordId) -> u32 {
        self.0
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|k| self.0[k].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => {
                        out.push((va.clone(), *ea));
                        a.next();
                    }
                    Ordering::Greater => {
                        out.push((vb.clone(), *eb));
                        b.next();
                    }
                    Ordering::Equal => {
                        out.push((va.clone(), ea + eb));
                        a.next();
                        b.next();
                    }
                },
                (Some(x), None) => {
                    out.push((*x).clone());
                    a.next();
                }
                (None, Some(y)) => {
                    out.push((*y).clone());
                    b.next();
                }
                (None, None) => break,
            }
        }
        Monomial(out)
    }

    /// `self / other` when every exponent of `other` fits.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut b = other.0.iter().peekable();
        for (v, e) in &self.0 {
            match b.peek() {
                Some((w, f)) if w == v => {
                    if f > e {
                        return None;
                    }
                    if e > f {
                        out.push((v.clone(), e - f));
                    }
                    b.next();
                }
                Some((w, _)) if w < v => return None,
                _ => out.push((v.clone(), *e)),
            }
        }
        if b.next().is_some() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .filter_map(|(v, e)| {
                    let f = other.exponent(v);
                    (f > 0).then(|| (v.clone(), (*e).min(f)))
                })
                .collect(),
        )
    }

    pub fn without(&self, v: &CoordId) -> (Monomial, u32) {
        let e = self.exponent(v);
        (Monomial(self.0.iter().filter(|(w, _)| w != v).cloned().collect()), e)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter().rev();
        let mut b = other.0.iter().rev();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((va, ea)), Some((vb, eb))) => {
                    let ord = va.cmp(vb).then(ea.cmp(eb));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (n, (v, e)) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, "*")?;
            }
            write!(f, "{v}")?;
            if *e != 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn var(v: CoordId) -> Self {
        Poly::term(Monomial::var(v), Rational::one())
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_term(&self) -> Option<(&Monomial, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn vars(&self) -> BTreeSet<CoordId> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(v, _)| v.clone()))
            .collect()
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Monomial, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let mut out = Poly::zero();
        for (m, c) in &small.terms {
            for (n, d) in &large.terms {
                out.add_term(m.mul(n), c * d);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Partial derivative. Along a base direction, field atoms that depend
    /// on it are differentiated by the chain rule.
    pub fn derivative(&self, v: &CoordId) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e > 0 {
                let (rest, _) = m.without(v);
                let lowered = rest.mul(&Monomial::var_pow(v.clone(), e - 1));
                out.add_term(lowered, c * Rational::from_integer(e.into()));
            }
            let CoordId::Base(i) = v else { continue };
            for (f, fe) in m.factors() {
                let CoordId::Field(atom) = f else { continue };
                let Some(g) = atom.differentiated(*i) else { continue };
                let (rest, _) = m.without(f);
                let lowered = rest
                    .mul(&Monomial::var_pow(f.clone(), fe - 1))
                    .mul(&Monomial::var(CoordId::Field(g)));
                out.add_term(lowered, c * Rational::from_integer((*fe).into()));
            }
        }
        out
    }

    pub fn degree_in(&self, v: &CoordId) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Coefficients with respect to `v`, keyed by power.
    pub fn coefficients_in(&self, v: &CoordId) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (rest, e) = m.without(v);
            out.entry(e).or_default().add_term(rest, c.clone());
        }
        out
    }

    fn coefficient_in(&self, v: &CoordId, e: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (rest, f) = m.without(v);
            if f == e {
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    /// Greatest common monomial divisor of all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        it.fold(first.clone(), |acc, m| acc.gcd(m))
    }

    /// Exact quotient `self / divisor`, or `None` when it does not divide.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        let (lm, lc) = divisor.leading()?;
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let mut q = Poly::zero();
        let mut r = self.clone();
        while let Some((rm, rc)) = r.leading() {
            let tm = rm.div(lm)?;
            let tc = rc / lc;
            r = r.sub(&divisor.mul_term(&tm, &tc));
            q.add_term(tm, tc);
        }
        Some(q)
    }

    /// Rescales so that the leading coefficient is one.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) if !c.is_one() => self.scale(&c.recip()),
            _ => self.clone(),
        }
    }

    pub fn evaluate(&self, lookup: &mut dyn FnMut(&CoordId) -> Result<f64>) -> Result<f64> {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (v, e) in m.factors() {
                t *= lookup(v)?.powi(*e as i32);
            }
            total += t;
        }
        Ok(total)
    }
}

pub(crate) fn rational_to_f64(c: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or_else(|| {
        let n = c.numer().to_f64().unwrap_or(f64::NAN);
        let d = c.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{m:?}")?;
        }
        Ok(())
    }
}

/// Monic greatest common divisor over the rationals.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mono = Poly::term(ma.gcd(&mb), Rational::one());
    let a = a.div_exact(&Poly::term(ma, Rational::one())).expect("monomial content divides");
    let b = b.div_exact(&Poly::term(mb, Rational::one())).expect("monomial content divides");
    if a.as_term().is_some() || b.as_term().is_some() {
        return mono;
    }
    mono.mul(&gcd_no_monomial(&a, &b)).monic()
}

fn gcd_no_monomial(a: &Poly, b: &Poly) -> Poly {
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    let va = a.vars();
    let vb = b.vars();
    let top = va.last().into_iter().chain(vb.last()).max().cloned().expect("non-constant");
    match (va.contains(&top), vb.contains(&top)) {
        (true, false) => gcd(&content_in(a, &top), b),
        (false, true) => gcd(a, &content_in(b, &top)),
        _ => {
            let ca = content_in(a, &top);
            let cb = content_in(b, &top);
            let pa = a.div_exact(&ca).expect("content divides");
            let pb = b.div_exact(&cb).expect("content divides");
            gcd(&ca, &cb).mul(&primitive_prs(pa, pb, &top)).monic()
        }
    }
}

/// Gcd of the coefficients of `p` viewed as a polynomial in `v`.
fn content_in(p: &Poly, v: &CoordId) -> Poly {
    let mut g = Poly::zero();
    for c in p.coefficients_in(v).into_values() {
        g = gcd(&g, &c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn primitive_part_in(p: &Poly, v: &CoordId) -> Poly {
    let c = content_in(p, v);
    p.div_exact(&c).expect("content divides").monic()
}

fn pseudo_remainder(f: &Poly, g: &Poly, v: &CoordId) -> Poly {
    let dg = g.degree_in(v);
    let lg = g.coefficient_in(v, dg);
    let mut r = f.clone();
    while !r.is_zero() {
        let dr = r.degree_in(v);
        if dr < dg {
            break;
        }
        let lr = r.coefficient_in(v, dr);
        let shift = Poly::term(Monomial::var_pow(v.clone(), dr - dg), Rational::one());
        r = r.mul(&lg).sub(&lr.mul(&shift).mul(g));
    }
    r
}

fn primitive_prs(a: Poly, b: Poly, v: &CoordId) -> Poly {
    let (mut f, mut g) = if a.degree_in(v) >= b.degree_in(v) { (a, b) } else { (b, a) };
    loop {
        let r = pseudo_remainder(&f, &g, v);
        if r.is_zero() {
            return primitive_part_in(&g, v);
        }
        if r.degree_in(v) == 0 {
            return Poly::one();
        }
        f = g;
        g = primitive_part_in(&r, v);
    }
}

/// Reduced quotient `num / den` with a monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Poly,
    den: Poly,
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Normalization(
                "division by an identically zero expression".into(),
            ));
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return RationalFunction::from_poly(Poly::zero());
        }
        let (num, den) = if den.as_constant().is_some() {
            (num, den)
        } else {
            let g = gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides numerator"),
                    den.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        let lc = den.leading().map(|(_, c)| c.clone()).expect("nonzero denominator");
        if lc.is_one() {
            RationalFunction { num, den }
        } else {
            let inv = lc.recip();
            RationalFunction { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFunction { num: p, den: Poly::one() }
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn var(v: CoordId) -> Self {
        Self::from_poly(Poly::var(v))
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.is_polynomial() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn vars(&self) -> BTreeSet<CoordId> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v
    }

    pub fn add(&self, other: &RationalFunction) -> RationalFunction {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        if self.den == other.den {
            return Self::reduce(self.num.add(&other.num), self.den.clone());
        }
        if self.is_polynomial() {
            return Self::reduce(self.num.mul(&other.den).add(&other.num), other.den.clone());
        }
        if other.is_polynomial() {
            return Self::reduce(other.num.mul(&self.den).add(&self.num), self.den.clone());
        }
        let g = gcd(&self.den, &other.den);
        let a_cof = self.den.div_exact(&g).expect("gcd divides");
        let b_cof = other.den.div_exact(&g).expect("gcd divides");
        let num = self.num.mul(&b_cof).add(&other.num.mul(&a_cof));
        Self::reduce(num, self.den.mul(&b_cof))
    }

    pub fn neg(&self) -> RationalFunction {
        RationalFunction { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &RationalFunction) -> RationalFunction {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RationalFunction) -> RationalFunction {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if self.is_polynomial() && other.is_polynomial() {
            return Self::from_poly(self.num.mul(&other.num));
        }
        Self::reduce(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn scale(&self, k: &Rational) -> RationalFunction {
        if k.is_zero() {
            return Self::zero();
        }
        RationalFunction { num: self.num.scale(k), den: self.den.clone() }
    }

    pub fn recip(&self) -> Result<RationalFunction> {
        RationalFunction::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &RationalFunction) -> Result<RationalFunction> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, e: i32) -> Result<RationalFunction> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let e = e.unsigned_abs();
        Ok(RationalFunction { num: base.num.pow(e), den: base.den.pow(e) })
    }

    pub fn partial(&self, v: &CoordId) -> RationalFunction {
        let dn = self.num.derivative(v);
        if self.is_polynomial() {
            return Self::from_poly(dn);
        }
        let dd = self.den.derivative(v);
        if dd.is_zero() {
            return Self::reduce(dn, self.den.clone());
        }
        let num = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Self::reduce(num, self.den.mul(&self.den))
    }

    pub fn evaluate(&self, lookup: &mut dyn FnMut(&CoordId) -> Result<f64>) -> Result<f64> {
        let n = self.num.evaluate(lookup)?;
        if self.is_polynomial() {
            return Ok(n);
        }
        let d = self.den.evaluate(lookup)?;
        if d == 0.0 {
            return Err(Error::evaluation("denominator vanishes at point"));
        }
        Ok(n / d)
    }

    /// Sign of the leading numerator coefficient, used when printing.
    pub fn leading_is_negative(&self) -> bool {
        self.num.leading().is_some_and(|(_, c)| c.is_negative())
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{:?}", self.num)
        } else {
            write!(f, "({:?}) / ({:?})", self.num, self.den)
        }
    }
}
