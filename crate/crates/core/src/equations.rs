use std::fmt;

use serde::Serialize;

use crate::symexpr::Expr;

/// Which family an equation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Tag {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "B_TRACE")]
    BTrace,
    #[serde(rename = "B_MIDDLE")]
    BMiddle,
    #[serde(rename = "W1")]
    W1,
    #[serde(rename = "W2")]
    W2,
    #[serde(rename = "TANGENCY")]
    Tangency,
    #[serde(rename = "C")]
    C,
    #[serde(rename = "HOLONOMIC")]
    Holonomic,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tag::A => "A",
            Tag::BTrace => "B_TRACE",
            Tag::BMiddle => "B_MIDDLE",
            Tag::W1 => "W1",
            Tag::W2 => "W2",
            Tag::Tangency => "TANGENCY",
            Tag::C => "C",
            Tag::Holonomic => "HOLONOMIC",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
    pub tag: Tag,
    /// The form monomial or constraint the equation was read off from.
    pub provenance: String,
}

impl Equation {
    pub fn new(lhs: Expr, rhs: Expr, tag: Tag, provenance: impl Into<String>) -> Self {
        Equation { lhs, rhs, tag, provenance: provenance.into() }
    }

    /// `lhs - rhs`, the expression that vanishes when the equation holds.
    pub fn residual(&self) -> Expr {
        &self.lhs - &self.rhs
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquationSet {
    pub equations: Vec<Equation>,
}

impl EquationSet {
    pub fn new() -> Self {
        EquationSet::default()
    }

    pub fn push(&mut self, eq: Equation) {
        self.equations.push(eq);
    }

    pub fn extend(&mut self, other: EquationSet) {
        self.equations.extend(other.equations);
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Equation> {
        self.equations.iter()
    }

    pub fn with_tag(&self, tag: Tag) -> impl Iterator<Item = &Equation> {
        self.equations.iter().filter(move |e| e.tag == tag)
    }

    pub fn count(&self, tag: Tag) -> usize {
        self.with_tag(tag).count()
    }
}

/// Serialized shape of one equation in reports.
#[derive(Clone, Debug, Serialize)]
pub struct EquationRecord {
    pub tag: Tag,
    pub lhs: String,
    pub rhs: String,
    pub provenance: String,
}

impl From<&Equation> for EquationRecord {
    fn from(e: &Equation) -> Self {
        EquationRecord {
            tag: e.tag,
            lhs: e.lhs.to_string(),
            rhs: e.rhs.to_string(),
            provenance: e.provenance.clone(),
        }
    }
}
