use std::fmt;
use std::sync::Arc;

use crate::multiindex::MultiIndex;

/// An opaque scalar field on the base, possibly differentiated.
///
/// `depends` lists the base directions the field varies along; derivatives
/// along any other direction vanish.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldAtom {
    pub name: Arc<str>,
    pub deriv: MultiIndex,
    pub depends: Vec<usize>,
}

impl FieldAtom {
    pub fn new(name: &str, m: usize, depends: Vec<usize>) -> Self {
        FieldAtom {
            name: Arc::from(name),
            deriv: MultiIndex::zero(m),
            depends,
        }
    }

    pub fn differentiated(&self, i: usize) -> Option<FieldAtom> {
        if !self.depends.contains(&i) {
            return None;
        }
        Some(FieldAtom {
            name: self.name.clone(),
            deriv: self.deriv.raised(i),
            depends: self.depends.clone(),
        })
    }
}

/// Coefficients of a horizontal projector, kept as symbols until solved for.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unknown {
    /// Coefficient of `d/du^alpha_J` in the lift of `d/dx^j`.
    A { alpha: usize, index: MultiIndex, dir: usize },
    /// Coefficient of `d/dp^{I,i}_alpha` in the lift of `d/dx^j`.
    B { alpha: usize, index: MultiIndex, slot: usize, dir: usize },
    /// Coefficient of `d/dp` in the lift of `d/dx^j`.
    C { dir: usize },
}

/// Every symbol an expression can mention.
///
/// The derived order (kind, then fiber index, then multi-index, then
/// direction) is the canonical coordinate order used for wedge monomials
/// and printed output.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoordId {
    /// Base coordinate `x^i`.
    Base(usize),
    /// Jet coordinate `u^alpha_J`.
    Jet { alpha: usize, index: MultiIndex },
    /// Momentum `p^{I,i}_alpha`.
    Momentum { alpha: usize, index: MultiIndex, dir: usize },
    /// The scalar momentum `p`.
    Scalar,
    /// Coordinate `u^alpha_{I;i}` of the first jet of the k-th jet bundle.
    IteratedJet { alpha: usize, index: MultiIndex, dir: usize },
    Field(FieldAtom),
    Unknown(Unknown),
}

impl CoordId {
    pub fn jet(alpha: usize, index: MultiIndex) -> Self {
        CoordId::Jet { alpha, index }
    }

    pub fn momentum(alpha: usize, index: MultiIndex, dir: usize) -> Self {
        CoordId::Momentum { alpha, index, dir }
    }

    /// Whether this is a coordinate of the velocity-momentum space (as opposed
    /// to an external field or projector unknown).
    pub fn is_coordinate(&self) -> bool {
        matches!(
            self,
            CoordId::Base(_) | CoordId::Jet { .. } | CoordId::Momentum { .. } | CoordId::Scalar
        )
    }

    pub fn is_base(&self) -> bool {
        matches!(self, CoordId::Base(_))
    }

    pub fn jet_order(&self) -> Option<u32> {
        match self {
            CoordId::Jet { index, .. } => Some(index.order()),
            _ => None,
        }
    }
}

fn write_components(f: &mut fmt::Formatter<'_>, index: &MultiIndex) -> fmt::Result {
    for (n, c) in index.components().iter().enumerate() {
        if n > 0 {
            write!(f, ",")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

fn write_fiber(f: &mut fmt::Formatter<'_>, alpha: usize) -> fmt::Result {
    if alpha > 0 {
        write!(f, "@{}", alpha + 1)?;
    }
    Ok(())
}

impl fmt::Display for CoordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordId::Base(i) => write!(f, "x[{}]", i + 1),
            CoordId::Jet { alpha, index } => {
                write!(f, "u[")?;
                write_components(f, index)?;
                write!(f, "]")?;
                write_fiber(f, *alpha)
            }
            CoordId::Momentum { alpha, index, dir } => {
                write!(f, "p[")?;
                write_components(f, index)?;
                write!(f, ";{}]", dir + 1)?;
                write_fiber(f, *alpha)
            }
            CoordId::Scalar => write!(f, "p"),
            CoordId::IteratedJet { alpha, index, dir } => {
                write!(f, "u[")?;
                write_components(f, index)?;
                write!(f, ";{}]", dir + 1)?;
                write_fiber(f, *alpha)
            }
            CoordId::Field(field) => {
                write!(f, "{}", field.name)?;
                if !field.deriv.is_zero() {
                    write!(f, "[")?;
                    write_components(f, &field.deriv)?;
                    write!(f, "]")?;
                }
                Ok(())
            }
            CoordId::Unknown(Unknown::A { alpha, index, dir }) => {
                write!(f, "A[")?;
                write_components(f, index)?;
                write!(f, ";{}]", dir + 1)?;
                write_fiber(f, *alpha)
            }
            CoordId::Unknown(Unknown::B { alpha, index, slot, dir }) => {
                write!(f, "B[")?;
                write_components(f, index)?;
                write!(f, ";{};{}]", slot + 1, dir + 1)?;
                write_fiber(f, *alpha)
            }
            CoordId::Unknown(Unknown::C { dir }) => write!(f, "C[{}]", dir + 1),
        }
    }
}

impl fmt::Debug for CoordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
