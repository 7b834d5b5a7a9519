//! Differential forms with symbolic coefficients.
//!
//! A wedge monomial is stored as a strictly increasing list of coordinates
//! under the `CoordId` order; building one from an unsorted list records
//! the sign of the sorting permutation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::jetmodel::CoordCatalog;
use crate::multiindex;
use crate::symexpr::{CoordId, Expr, Unknown};

pub type Monomial = Vec<CoordId>;

#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    degree: usize,
    terms: BTreeMap<Monomial, Expr>,
}

/// Sorts `coords` in place, returning the permutation sign, or `None` when a
/// differential repeats.
fn sort_with_sign(coords: &mut [CoordId]) -> Option<i64> {
    let mut sign = 1;
    for a in 1..coords.len() {
        let mut b = a;
        while b > 0 && coords[b - 1] > coords[b] {
            coords.swap(b - 1, b);
            sign = -sign;
            b -= 1;
        }
        if b > 0 && coords[b - 1] == coords[b] {
            return None;
        }
    }
    Some(sign)
}

impl Form {
    pub fn zero(degree: usize) -> Form {
        Form { degree, terms: BTreeMap::new() }
    }

    pub fn scalar(f: Expr) -> Form {
        let mut out = Form::zero(0);
        out.add_term(Vec::new(), f);
        out
    }

    /// `coef · dc_1 ∧ … ∧ dc_p` for coordinates in any order.
    pub fn monomial(mut coords: Vec<CoordId>, coef: Expr) -> Form {
        let mut out = Form::zero(coords.len());
        if let Some(sign) = sort_with_sign(&mut coords) {
            out.add_term(coords, if sign < 0 { -coef } else { coef });
        }
        out
    }

    pub fn differential(c: CoordId) -> Form {
        Form::monomial(vec![c], Expr::one())
    }

    /// `dx^1 ∧ … ∧ dx^m`.
    pub fn volume(m: usize) -> Form {
        Form::monomial((0..m).map(CoordId::Base).collect(), Expr::one())
    }

    /// `d^{m-1}x_i`, the contraction of the volume form by `∂/∂x^i`.
    pub fn volume_minus(m: usize, i: usize) -> Form {
        Form::volume(m)
            .contract_vector(&VecField::coordinate(CoordId::Base(i)))
            .expect("volume form has positive degree")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Expr> {
        &self.terms
    }

    pub fn is_zero_literal(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, mono: Monomial, coef: Expr) {
        if coef.is_zero_literal() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(existing) => {
                let sum = Expr::sum([std::mem::replace(existing, Expr::zero()), coef]);
                if sum.is_zero_literal() {
                    self.terms.remove(&mono);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(mono, coef);
            }
        }
    }

    fn check_degree(&self, other: &Form) {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
    }

    pub fn add(&self, other: &Form) -> Form {
        self.check_degree(other);
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.add_term(mono.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale(&Expr::int(-1))
    }

    pub fn scale(&self, f: &Expr) -> Form {
        let mut out = Form::zero(self.degree);
        for (mono, c) in &self.terms {
            out.add_term(mono.clone(), f * c);
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::zero(self.degree + other.degree);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut coords: Vec<CoordId> = ma.iter().chain(mb).cloned().collect();
                if let Some(sign) = sort_with_sign(&mut coords) {
                    let coef = ca * cb;
                    out.add_term(coords, if sign < 0 { -coef } else { coef });
                }
            }
        }
        out
    }

    /// Exterior derivative. Coefficients are differentiated along every
    /// coordinate of the velocity-momentum space they mention, and along the
    /// base directions their external fields depend on. Projector unknowns
    /// are treated as constants.
    pub fn exterior_d(&self) -> Form {
        let mut out = Form::zero(self.degree + 1);
        for (mono, c) in &self.terms {
            let mut directions: Vec<CoordId> = Vec::new();
            for a in c.atoms() {
                match a {
                    CoordId::Field(f) => directions.extend(f.depends.iter().map(|&i| CoordId::Base(i))),
                    a if a.is_coordinate() => directions.push(a),
                    _ => {}
                }
            }
            directions.sort();
            directions.dedup();
            for v in directions {
                let d = c.partial(&v);
                if d.is_zero_literal() {
                    continue;
                }
                let mut coords = Vec::with_capacity(mono.len() + 1);
                coords.push(v);
                coords.extend(mono.iter().cloned());
                if let Some(sign) = sort_with_sign(&mut coords) {
                    out.add_term(coords, if sign < 0 { -d } else { d });
                }
            }
        }
        out
    }

    /// Interior product with a vector field.
    pub fn contract_vector(&self, v: &VecField) -> Result<Form> {
        if self.degree == 0 {
            return Err(Error::usage("cannot contract a 0-form"));
        }
        let mut out = Form::zero(self.degree - 1);
        for (mono, c) in &self.terms {
            for (slot, coord) in mono.iter().enumerate() {
                let Some(vc) = v.components.get(coord) else { continue };
                let mut rest = mono.clone();
                rest.remove(slot);
                let coef = c * vc;
                out.add_term(rest, if slot % 2 == 1 { -coef } else { coef });
            }
        }
        Ok(out)
    }

    /// Contraction with a projector `h = Σ_j h_j ⊗ dx^j`: every slot `dc` is
    /// replaced in turn by `Σ_j dc(h_j) dx^j`.
    pub fn contract_projector(&self, h: &ProjectorTemplate) -> Form {
        let mut out = Form::zero(self.degree);
        for (mono, c) in &self.terms {
            for slot in 0..mono.len() {
                for j in 0..h.m() {
                    let pairing = h.pairing(j, &mono[slot]);
                    if pairing.is_zero_literal() {
                        continue;
                    }
                    let mut coords = mono.clone();
                    coords[slot] = CoordId::Base(j);
                    if let Some(sign) = sort_with_sign(&mut coords) {
                        let coef = c * &pairing;
                        out.add_term(coords, if sign < 0 { -coef } else { coef });
                    }
                }
            }
        }
        out
    }

    /// Normalized coefficients, with vanishing ones dropped.
    pub fn collect(&self) -> Result<BTreeMap<Monomial, Expr>> {
        let mut out = BTreeMap::new();
        for (mono, c) in &self.terms {
            let n = c.normalize()?;
            if !n.is_zero_literal() {
                out.insert(mono.clone(), n);
            }
        }
        Ok(out)
    }

    /// One `(coef) d a ^ d b ...` line per nonzero monomial, in catalog order.
    pub fn render(&self) -> Result<String> {
        let collected = self.collect()?;
        if collected.is_empty() {
            return Ok("0".into());
        }
        let mut out = String::new();
        for (mono, c) in collected {
            let _ = write!(out, "({c})");
            if mono.is_empty() {
                out.push('\n');
                continue;
            }
            for (n, coord) in mono.iter().enumerate() {
                out.push_str(if n == 0 { " d" } else { " ^ d" });
                let _ = write!(out, "{coord}");
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// A vector field `Σ components[c] ∂/∂c`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VecField {
    pub components: BTreeMap<CoordId, Expr>,
}

impl VecField {
    pub fn coordinate(c: CoordId) -> VecField {
        let mut components = BTreeMap::new();
        components.insert(c, Expr::one());
        VecField { components }
    }

    pub fn component(&self, c: &CoordId) -> Expr {
        self.components.get(c).cloned().unwrap_or_else(Expr::zero)
    }

    /// Applies the field as a derivation to a function.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(self.components.iter().map(|(c, v)| {
            let d = f.partial(c);
            if d.is_zero_literal() {
                Expr::zero()
            } else {
                v * &d
            }
        }))
    }
}

/// Horizontal lifts `h_j = ∂/∂x^j + A ∂/∂u + B ∂/∂p^{I,i} + C_j ∂/∂p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorTemplate {
    pub lifts: Vec<VecField>,
}

impl ProjectorTemplate {
    /// The generic template whose coefficients are fresh unknowns.
    pub fn generic(catalog: &CoordCatalog) -> ProjectorTemplate {
        let spec = catalog.spec();
        let mut lifts = Vec::with_capacity(spec.m);
        for j in 0..spec.m {
            let mut components = BTreeMap::new();
            for c in catalog.coords() {
                let value = match c {
                    CoordId::Base(i) if *i == j => Expr::one(),
                    CoordId::Base(_) => continue,
                    CoordId::Jet { alpha, index } => {
                        Expr::Atom(CoordId::Unknown(Unknown::A { alpha: *alpha, index: index.clone(), dir: j }))
                    }
                    CoordId::Momentum { alpha, index, dir } => Expr::Atom(CoordId::Unknown(Unknown::B {
                        alpha: *alpha,
                        index: index.clone(),
                        slot: *dir,
                        dir: j,
                    })),
                    CoordId::Scalar => Expr::Atom(CoordId::Unknown(Unknown::C { dir: j })),
                    _ => continue,
                };
                components.insert(c.clone(), value);
            }
            lifts.push(VecField { components });
        }
        ProjectorTemplate { lifts }
    }

    pub fn m(&self) -> usize {
        self.lifts.len()
    }

    /// `dc(h_j)`.
    pub fn pairing(&self, j: usize, c: &CoordId) -> Expr {
        match c {
            CoordId::Base(i) => {
                if *i == j {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            other => self.lifts[j].component(other),
        }
    }

    /// Every unknown the template mentions, in order.
    pub fn unknowns(&self) -> Vec<CoordId> {
        let mut out: Vec<CoordId> = self
            .lifts
            .iter()
            .flat_map(|h| h.components.values())
            .flat_map(|e| e.atoms())
            .filter(|a| matches!(a, CoordId::Unknown(_)))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Number of unknowns of the generic template.
pub fn generic_unknown_count(catalog: &CoordCatalog) -> usize {
    let spec = catalog.spec();
    let jets: usize = (0..=spec.k).map(|l| multiindex::count(spec.m, l)).sum();
    let lower: usize = (0..spec.k).map(|l| multiindex::count(spec.m, l)).sum();
    spec.m * (spec.n * jets + spec.n * spec.m * lower + 1)
}
