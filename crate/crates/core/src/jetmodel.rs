//! Bundle signatures, the coordinate catalog of the velocity-momentum space,
//! the pairing between jets and momenta, and prolongation of sections.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::equations::{Equation, EquationSet, Tag};
use crate::error::{Error, Result};
use crate::multiindex::{self, MultiIndex};
use crate::symexpr::{CoordId, Expr, FieldAtom};

/// Base dimension `m`, fiber dimension `n` and jet order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BundleSpec {
    pub m: usize,
    pub n: usize,
    pub k: u32,
}

impl BundleSpec {
    pub fn new(m: usize, n: usize, k: u32) -> Result<Self> {
        if m == 0 || n == 0 || k == 0 {
            return Err(Error::usage(format!(
                "bundle signature needs m, n, k >= 1 (got m={m}, n={n}, k={k})"
            )));
        }
        Ok(BundleSpec { m, n, k })
    }

    /// Jet coordinates `u^alpha_J` with `|J| <= order`, fiber-major.
    pub fn jets_up_to(&self, order: u32) -> Vec<CoordId> {
        let indices = multiindex::enumerate_up_to(self.m, order);
        (0..self.n)
            .flat_map(|alpha| indices.iter().map(move |j| CoordId::jet(alpha, j.clone())))
            .collect()
    }

    /// Jet coordinates of order exactly `order`.
    pub fn jets_of_order(&self, order: u32) -> Vec<CoordId> {
        let indices = multiindex::enumerate(self.m, order);
        (0..self.n)
            .flat_map(|alpha| indices.iter().map(move |j| CoordId::jet(alpha, j.clone())))
            .collect()
    }

    /// Momenta `p^{I,i}_alpha` with `|I| <= k-1`.
    pub fn momenta(&self) -> Vec<CoordId> {
        let indices = multiindex::enumerate_up_to(self.m, self.k - 1);
        let mut out = Vec::new();
        for alpha in 0..self.n {
            for index in &indices {
                for dir in 0..self.m {
                    out.push(CoordId::momentum(alpha, index.clone(), dir));
                }
            }
        }
        out
    }
}

/// An external scalar field and the base directions it depends on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub depends: Vec<usize>,
}

impl FieldDecl {
    pub fn atom(&self, m: usize) -> FieldAtom {
        FieldAtom::new(&self.name, m, self.depends.clone())
    }
}

const RESERVED: [&str; 6] = ["u", "x", "p", "A", "B", "C"];

/// The ordered coordinates `(x^i, u^alpha_J, p^{I,i}_alpha, p)` of the
/// velocity-momentum space, plus declared external fields.
#[derive(Clone, Debug)]
pub struct CoordCatalog {
    spec: BundleSpec,
    coords: Vec<CoordId>,
    fields: Vec<FieldDecl>,
}

impl CoordCatalog {
    pub fn with_fields(spec: BundleSpec, fields: Vec<FieldDecl>) -> Result<Self> {
        for (n, f) in fields.iter().enumerate() {
            let valid = f.name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && f.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid || RESERVED.contains(&f.name.as_str()) {
                return Err(Error::usage(format!("`{}` cannot be used as a field name", f.name)));
            }
            if fields[..n].iter().any(|g| g.name == f.name) {
                return Err(Error::usage(format!("field `{}` declared twice", f.name)));
            }
            if let Some(d) = f.depends.iter().find(|&&d| d >= spec.m) {
                return Err(Error::usage(format!(
                    "field `{}` depends on x[{}] but the base has dimension {}",
                    f.name,
                    d + 1,
                    spec.m
                )));
            }
        }
        let mut coords: Vec<CoordId> = (0..spec.m).map(CoordId::Base).collect();
        coords.extend(spec.jets_up_to(spec.k));
        coords.extend(spec.momenta());
        coords.push(CoordId::Scalar);
        Ok(CoordCatalog { spec, coords, fields })
    }

    pub fn spec(&self) -> BundleSpec {
        self.spec
    }

    pub fn coords(&self) -> &[CoordId] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn position(&self, c: &CoordId) -> Option<usize> {
        self.coords.binary_search(c).ok()
    }

    pub fn contains(&self, c: &CoordId) -> bool {
        self.position(c).is_some()
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn fields(&self) -> &[FieldDecl] {
        &self.fields
    }

    /// Coordinate names in catalog order.
    pub fn names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.to_string()).collect()
    }
}

/// Catalog of the bundle without external fields.
pub fn build_catalog(spec: BundleSpec) -> CoordCatalog {
    CoordCatalog::with_fields(spec, Vec::new()).expect("no fields to validate")
}

/// Dimension of the jet bundle of the given order.
pub fn dim_jet(spec: BundleSpec, order: u32) -> usize {
    spec.m + spec.n * (0..=order).map(|l| multiindex::count(spec.m, l)).sum::<usize>()
}

/// Expected catalog size.
pub fn dim_velocity_momentum(spec: BundleSpec) -> usize {
    let lower: usize = (0..spec.k).map(|l| multiindex::count(spec.m, l)).sum();
    dim_jet(spec, spec.k) + spec.n * spec.m * lower + 1
}

/// `Σ p^{I,i}_alpha u^alpha_{I+1_i} + p`.
pub fn pairing_phi(catalog: &CoordCatalog) -> Expr {
    let mut terms = Vec::new();
    for c in catalog.spec.momenta() {
        let CoordId::Momentum { alpha, index, dir } = &c else { unreachable!() };
        let jet = CoordId::jet(*alpha, index.raised(*dir));
        terms.push(Expr::Atom(c.clone()) * Expr::Atom(jet));
    }
    terms.push(Expr::Atom(CoordId::Scalar));
    Expr::sum(terms)
}

/// Equations cutting the holonomic jets of order `k+1` out of the first jet
/// of the `k`-th jet bundle.
pub fn holonomic_equations(spec: BundleSpec) -> EquationSet {
    let mut set = EquationSet::new();
    for alpha in 0..spec.n {
        for index in multiindex::enumerate_up_to(spec.m, spec.k - 1) {
            for dir in 0..spec.m {
                set.push(Equation::new(
                    Expr::Atom(CoordId::IteratedJet { alpha, index: index.clone(), dir }),
                    Expr::Atom(CoordId::jet(alpha, index.raised(dir))),
                    Tag::Holonomic,
                    "first family",
                ));
            }
        }
        // Pairs (I;i) ~ (J;j) of top order naming the same k+1 derivative;
        // each pair is listed once, with the left side first in order.
        let top = multiindex::enumerate(spec.m, spec.k);
        for (a, ia) in top.iter().enumerate() {
            for i in 0..spec.m {
                let target = ia.raised(i);
                for jb in &top[a..] {
                    for j in 0..spec.m {
                        if (jb == ia && j <= i) || jb.raised(j) != target {
                            continue;
                        }
                        set.push(Equation::new(
                            Expr::Atom(CoordId::IteratedJet { alpha, index: ia.clone(), dir: i }),
                            Expr::Atom(CoordId::IteratedJet { alpha, index: jb.clone(), dir: j }),
                            Tag::Holonomic,
                            "second family",
                        ));
                    }
                }
            }
        }
    }
    set
}

/// A local section: one expression in the base variables per fiber index.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionFn {
    pub components: Vec<Expr>,
}

impl SectionFn {
    pub fn new(components: Vec<Expr>) -> Result<Self> {
        for (alpha, c) in components.iter().enumerate() {
            if let Some(bad) =
                c.atoms().into_iter().find(|a| !matches!(a, CoordId::Base(_) | CoordId::Field(_)))
            {
                return Err(Error::usage(format!(
                    "section component {} mentions `{bad}`; only base variables and fields are allowed",
                    alpha + 1
                )));
            }
        }
        Ok(SectionFn { components })
    }
}

/// `u^alpha_J ↦ ∂^J s^alpha` for every `|J| <= order`.
pub fn prolong(s: &SectionFn, order: u32, spec: BundleSpec) -> Result<BTreeMap<CoordId, Expr>> {
    if s.components.len() != spec.n {
        return Err(Error::usage(format!(
            "section has {} components, fiber dimension is {}",
            s.components.len(),
            spec.n
        )));
    }
    let mut out = BTreeMap::new();
    for (alpha, comp) in s.components.iter().enumerate() {
        let zero = MultiIndex::zero(spec.m);
        out.insert(CoordId::jet(alpha, zero), comp.normalize()?);
        // Graded order guarantees J - 1_i was filled in before J.
        for index in multiindex::enumerate_up_to(spec.m, order).into_iter().skip(1) {
            let dir = index.components().iter().position(|&c| c > 0).expect("nonzero index");
            let lower = CoordId::jet(alpha, index.lowered(dir).expect("positive component"));
            let d = out[&lower].partial_normalized(&CoordId::Base(dir))?;
            out.insert(CoordId::jet(alpha, index), d);
        }
    }
    Ok(out)
}
