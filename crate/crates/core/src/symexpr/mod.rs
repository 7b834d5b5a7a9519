//! Exact-coefficient symbolic expressions.
//!
//! An [`Expr`] is a plain tree; [`Expr::normalize`] maps it to a canonical
//! representative (a reduced quotient of expanded polynomials), so two
//! expressions are equal as functions iff their normal forms are identical.

mod coord;
mod parse;
pub mod poly;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use coord::{CoordId, FieldAtom, Unknown};
pub use parse::{parse, parse_with_order};
pub use poly::{Monomial, Poly, RationalFunction};

use crate::error::{Error, Result};
use crate::Rational;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Const(Rational),
    Atom(CoordId),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Integer power; negative exponents stand in for division.
    Pow(Box<Expr>, i32),
}

/// Numeric values for coordinates.
pub type Point = BTreeMap<CoordId, f64>;

/// Substitution of symbols by expressions.
pub type Substitution = BTreeMap<CoordId, Expr>;

/// Concrete external fields, each given as an expression in base coordinates.
pub type FieldValues = BTreeMap<String, Expr>;

/// How strongly two expressions were shown to agree.
#[derive(Clone, Debug, PartialEq)]
pub enum Equivalence {
    /// Normal forms coincide.
    Exact,
    /// Normalization was not possible; the expressions agreed numerically at
    /// `points` random rational points.
    Sampled { points: usize },
    Different,
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        !matches!(self, Equivalence::Different)
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Rational::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Const(Rational::new(n.into(), d.into()))
    }

    pub fn atom(c: CoordId) -> Expr {
        Expr::Atom(c)
    }

    pub fn powi(self, e: i32) -> Expr {
        match e {
            0 => Expr::one(),
            1 => self,
            _ => Expr::Pow(Box::new(self), e),
        }
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for t in terms {
            match t {
                Expr::Sum(inner) => out.extend(inner),
                Expr::Const(c) if c.is_zero() => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Sum(out),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for f in factors {
            match f {
                Expr::Product(inner) => out.extend(inner),
                Expr::Const(c) if c.is_zero() => return Expr::zero(),
                Expr::Const(c) if c.is_one() => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::Product(out),
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    /// Converts to the canonical rational-function representation.
    pub fn to_rational_function(&self) -> Result<RationalFunction> {
        match self {
            Expr::Const(c) => Ok(RationalFunction::constant(c.clone())),
            Expr::Atom(v) => Ok(RationalFunction::var(v.clone())),
            Expr::Sum(ts) => ts.iter().try_fold(RationalFunction::zero(), |acc, t| {
                Ok(acc.add(&t.to_rational_function()?))
            }),
            Expr::Product(fs) => {
                fs.iter().try_fold(RationalFunction::constant(Rational::one()), |acc, f| {
                    Ok(acc.mul(&f.to_rational_function()?))
                })
            }
            Expr::Pow(b, e) => b.to_rational_function()?.powi(*e),
        }
    }

    pub fn from_rational_function(rf: &RationalFunction) -> Expr {
        let num = poly_to_expr(rf.numerator());
        if rf.is_polynomial() {
            num
        } else {
            Expr::product([num, poly_to_expr(rf.denominator()).powi(-1)])
        }
    }

    /// Canonical form. Fails only when some denominator is identically zero.
    pub fn normalize(&self) -> Result<Expr> {
        Ok(Expr::from_rational_function(&self.to_rational_function()?))
    }

    pub fn is_zero(&self) -> Result<bool> {
        Ok(self.to_rational_function()?.is_zero())
    }

    /// Formal partial derivative; every other symbol is independent, and an
    /// external field only responds to the base directions it depends on.
    pub fn partial(&self, c: &CoordId) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Atom(v) if v == c => Expr::one(),
            Expr::Atom(CoordId::Field(f)) => match c {
                CoordId::Base(i) => f
                    .differentiated(*i)
                    .map(|g| Expr::Atom(CoordId::Field(g)))
                    .unwrap_or_else(Expr::zero),
                _ => Expr::zero(),
            },
            Expr::Atom(_) => Expr::zero(),
            Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| t.partial(c))),
            Expr::Product(fs) => Expr::sum((0..fs.len()).filter_map(|k| {
                let d = fs[k].partial(c);
                if d.is_zero_literal() {
                    return None;
                }
                Some(Expr::product(
                    fs.iter()
                        .enumerate()
                        .map(|(n, f)| if n == k { d.clone() } else { f.clone() }),
                ))
            })),
            Expr::Pow(b, e) => {
                let d = b.partial(c);
                if d.is_zero_literal() {
                    return Expr::zero();
                }
                Expr::product([Expr::int(*e as i64), b.as_ref().clone().powi(e - 1), d])
            }
        }
    }

    /// Partial derivative through the canonical form, returned normalized.
    pub fn partial_normalized(&self, c: &CoordId) -> Result<Expr> {
        Ok(Expr::from_rational_function(&self.to_rational_function()?.partial(c)))
    }

    pub fn substitute(&self, map: &Substitution) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Atom(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| t.substitute(map))),
            Expr::Product(fs) => Expr::product(fs.iter().map(|f| f.substitute(map))),
            Expr::Pow(b, e) => b.substitute(map).powi(*e),
        }
    }

    pub fn atoms(&self) -> BTreeSet<CoordId> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<CoordId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Atom(v) => {
                out.insert(v.clone());
            }
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
            Expr::Pow(b, _) => b.collect_atoms(out),
        }
    }

    /// Highest jet order among the atoms, if any jet coordinate appears.
    pub fn jet_order(&self) -> Option<u32> {
        self.atoms().iter().filter_map(CoordId::jet_order).max()
    }

    /// IEEE evaluation. Field atoms are resolved through `fields`, whose
    /// expressions are differentiated symbolically for derivative atoms.
    pub fn evaluate(&self, point: &Point, fields: &FieldValues) -> Result<f64> {
        let mut lookup = |v: &CoordId| lookup_value(v, point, fields);
        self.eval_with(&mut lookup)
    }

    fn eval_with(&self, lookup: &mut dyn FnMut(&CoordId) -> Result<f64>) -> Result<f64> {
        match self {
            Expr::Const(c) => Ok(poly::rational_to_f64(c)),
            Expr::Atom(v) => lookup(v),
            Expr::Sum(ts) => ts.iter().try_fold(0.0, |acc, t| Ok(acc + t.eval_with(lookup)?)),
            Expr::Product(fs) => fs.iter().try_fold(1.0, |acc, f| Ok(acc * f.eval_with(lookup)?)),
            Expr::Pow(b, e) => {
                let v = b.eval_with(lookup)?;
                if *e < 0 && v == 0.0 {
                    return Err(Error::evaluation(format!(
                        "division by zero: `{b}` vanishes at the point"
                    )));
                }
                Ok(v.powi(*e))
            }
        }
    }

    /// Decides whether `self` and `other` denote the same function.
    pub fn equivalent(&self, other: &Expr) -> Equivalence {
        let diff = self.clone() - other.clone();
        match diff.to_rational_function() {
            Ok(rf) if rf.is_zero() => Equivalence::Exact,
            Ok(_) => Equivalence::Different,
            Err(_) => sampled_equivalence(self, other),
        }
    }
}

fn lookup_value(v: &CoordId, point: &Point, fields: &FieldValues) -> Result<f64> {
    if let Some(x) = point.get(v) {
        return Ok(*x);
    }
    if let CoordId::Field(f) = v {
        let def = fields
            .get(f.name.as_ref())
            .ok_or_else(|| Error::evaluation(format!("no values supplied for field `{}`", f.name)))?;
        let mut e = def.clone();
        for (i, &times) in f.deriv.components().iter().enumerate() {
            for _ in 0..times {
                e = e.partial(&CoordId::Base(i));
            }
        }
        return e.evaluate(point, fields);
    }
    Err(Error::evaluation(format!("no value assigned to `{v}`")))
}

// Fallback when normalization is impossible: compare at random rational
// points, skipping points where either side is singular.
fn sampled_equivalence(a: &Expr, b: &Expr) -> Equivalence {
    const POINTS: usize = 20;
    const TOL: f64 = 1e-9;
    let atoms: BTreeSet<CoordId> = a.atoms().union(&b.atoms()).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut agreed = 0;
    let mut attempts = 0;
    while agreed < POINTS && attempts < 10 * POINTS {
        attempts += 1;
        let point: Point = atoms
            .iter()
            .map(|v| (v.clone(), rng.gen_range(-64i32..=64) as f64 / 16.0 + 1.0 / 7.0))
            .collect();
        let (Ok(x), Ok(y)) = (a.evaluate(&point, &FieldValues::new()), b.evaluate(&point, &FieldValues::new()))
        else {
            continue;
        };
        if (x - y).abs() > TOL * (1.0 + x.abs().max(y.abs())) {
            return Equivalence::Different;
        }
        agreed += 1;
    }
    if agreed == POINTS {
        Equivalence::Sampled { points: agreed }
    } else {
        Equivalence::Different
    }
}

fn poly_to_expr(p: &Poly) -> Expr {
    let terms: Vec<Expr> = p
        .terms()
        .rev()
        .map(|(m, c)| {
            let factors = m.factors().iter().map(|(v, e)| Expr::Atom(v.clone()).powi(*e as i32));
            let mut all = Vec::new();
            if !c.is_one() || m.is_one() {
                all.push(Expr::Const(c.clone()));
            }
            all.extend(factors);
            if all.len() == 1 {
                all.pop().unwrap()
            } else {
                Expr::Product(all)
            }
        })
        .collect();
    match terms.len() {
        0 => Expr::zero(),
        1 => terms.into_iter().next().unwrap(),
        _ => Expr::Sum(terms),
    }
}

impl From<CoordId> for Expr {
    fn from(c: CoordId) -> Expr {
        Expr::Atom(c)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(c: Rational) -> Expr {
        Expr::Const(c)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum([self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum([self, -rhs])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product([self, rhs])
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::product([self, rhs.powi(-1)])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Product(mut fs) => {
                if let Some(Expr::Const(c)) = fs.first_mut() {
                    *c = -c.clone();
                    if c.is_one() {
                        fs.remove(0);
                        return Expr::product(fs);
                    }
                    return Expr::Product(fs);
                }
                fs.insert(0, Expr::int(-1));
                Expr::Product(fs)
            }
            other => Expr::Product(vec![Expr::int(-1), other]),
        }
    }
}

impl<'a> Add for &'a Expr {
    type Output = Expr;
    fn add(self, rhs: &'a Expr) -> Expr {
        self.clone() + rhs.clone()
    }
}

impl<'a> Sub for &'a Expr {
    type Output = Expr;
    fn sub(self, rhs: &'a Expr) -> Expr {
        self.clone() - rhs.clone()
    }
}

impl<'a> Mul for &'a Expr {
    type Output = Expr;
    fn mul(self, rhs: &'a Expr) -> Expr {
        self.clone() * rhs.clone()
    }
}

/// `true` when the leading printed sign of `e` is a minus.
pub(crate) fn starts_negative(e: &Expr) -> bool {
    match e {
        Expr::Const(c) => c.is_negative(),
        Expr::Product(fs) => fs.first().is_some_and(starts_negative),
        _ => false,
    }
}
