//! Total derivatives, the Euler-Lagrange operator, and a numeric check of it
//! through the first variation of the action.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jetmodel::{prolong, BundleSpec, SectionFn};
use crate::multiindex::{self, MultiIndex};
use crate::symexpr::{CoordId, Expr, FieldValues, Point, RationalFunction};

/// `D_i e = ∂e/∂x^i + Σ u_{J+1_i} ∂e/∂u_J`, with jets allowed up to
/// `max_order` in the result.
pub fn total_derivative(e: &Expr, i: usize, max_order: u32) -> Result<Expr> {
    let rf = e.to_rational_function()?;
    Ok(Expr::from_rational_function(&total_derivative_rf(&rf, i, max_order)?))
}

fn total_derivative_rf(rf: &RationalFunction, i: usize, max_order: u32) -> Result<RationalFunction> {
    let mut out = rf.partial(&CoordId::Base(i));
    for v in rf.vars() {
        let CoordId::Jet { alpha, index } = &v else { continue };
        if index.order() >= max_order {
            return Err(Error::usage(format!(
                "total derivative of `{v}` exceeds the jet order budget {max_order}"
            )));
        }
        let d = rf.partial(&v);
        if d.is_zero() {
            continue;
        }
        let next = CoordId::jet(*alpha, index.raised(i));
        out = out.add(&RationalFunction::var(next).mul(&d));
    }
    Ok(out)
}

/// `D^J e`, applying `D_1` first, then `D_2`, and so on.
pub fn iterated_total_derivative(e: &Expr, j: &MultiIndex, max_order: u32) -> Result<Expr> {
    let mut rf = e.to_rational_function()?;
    for (i, &times) in j.components().iter().enumerate() {
        for _ in 0..times {
            rf = total_derivative_rf(&rf, i, max_order)?;
        }
    }
    Ok(Expr::from_rational_function(&rf))
}

/// One Euler-Lagrange expression per fiber index, over jets of order `2k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElSystem {
    pub components: Vec<Expr>,
}

/// `Σ_{|J|<=k} (-1)^{|J|} D^J ∂L/∂u^alpha_J` for every alpha.
pub fn euler_lagrange(l: &Expr, spec: BundleSpec) -> Result<ElSystem> {
    if let Some(order) = l.jet_order() {
        if order > spec.k {
            return Err(Error::usage(format!(
                "Lagrangian has jet order {order}, above k = {}",
                spec.k
            )));
        }
    }
    let lrf = l.to_rational_function()?;
    let mut components = Vec::with_capacity(spec.n);
    for alpha in 0..spec.n {
        let mut total = RationalFunction::zero();
        for j in multiindex::enumerate_up_to(spec.m, spec.k) {
            let mut term = lrf.partial(&CoordId::jet(alpha, j.clone()));
            if term.is_zero() {
                continue;
            }
            for (i, &times) in j.components().iter().enumerate() {
                for _ in 0..times {
                    term = total_derivative_rf(&term, i, 2 * spec.k)?;
                }
            }
            total = if j.order() % 2 == 0 { total.add(&term) } else { total.sub(&term) };
        }
        components.push(Expr::from_rational_function(&total));
    }
    Ok(ElSystem { components })
}

/// Numeric values of the prolonged section at a base point.
fn jet_values(
    jets: &std::collections::BTreeMap<CoordId, Expr>,
    base: &[f64],
    fields: &FieldValues,
) -> Result<Point> {
    let pt: Point = base.iter().enumerate().map(|(i, &x)| (CoordId::Base(i), x)).collect();
    let mut values = pt.clone();
    for (c, e) in jets {
        values.insert(c.clone(), e.evaluate(&pt, fields)?);
    }
    Ok(values)
}

/// Evaluates `el` on the `2k`-jet of `s` at a base point.
pub fn residual_on_section(
    el: &ElSystem,
    s: &SectionFn,
    spec: BundleSpec,
    base: &[f64],
    fields: &FieldValues,
) -> Result<Vec<f64>> {
    if base.len() != spec.m {
        return Err(Error::usage(format!("point has {} coordinates, base dimension is {}", base.len(), spec.m)));
    }
    let jets = prolong(s, 2 * spec.k, spec)?;
    let pt = jet_values(&jets, base, fields)?;
    el.components.iter().map(|e| e.evaluate(&pt, fields)).collect()
}

/// Axis-aligned integration box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn unit_shifted(m: usize) -> Self {
        BoxDomain { lo: vec![1.0; m], hi: vec![2.0; m] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// `Π_i ((x^i - a_i)(b_i - x^i))^k · factor`: vanishes with all derivatives
/// below order `k` on the boundary of the box.
pub fn bump_variation(spec: BundleSpec, domain: &BoxDomain, factors: Vec<Expr>) -> Result<SectionFn> {
    let mut bump = Vec::new();
    for i in 0..spec.m {
        let x = Expr::Atom(CoordId::Base(i));
        let a = Expr::Const(f64_to_rational(domain.lo[i])?);
        let b = Expr::Const(f64_to_rational(domain.hi[i])?);
        bump.push(((&x - &a) * (&b - &x)).powi(spec.k as i32));
    }
    let bump = Expr::product(bump);
    SectionFn::new(factors.into_iter().map(|f| &bump * &f).collect())
}

fn f64_to_rational(x: f64) -> Result<crate::Rational> {
    crate::Rational::from_float(x).ok_or_else(|| Error::usage(format!("box bound {x} is not finite")))
}

/// Outcome of comparing the first variation with the Euler-Lagrange pairing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    /// Central-difference derivative of the action.
    pub lhs: f64,
    /// `∫ Σ EL_alpha ψ^alpha`.
    pub rhs: f64,
    pub rel_err: f64,
    /// Simpson panels per axis of the finest grid used.
    pub grid: usize,
    pub eps: f64,
}

const GRID_START: usize = 8;
const GRID_LIMIT: usize = 256;
// Central differences carry roundoff near 1e-9 relative, so successive grids
// are only asked to agree to 1e-7.
const QUADRATURE_TOL: f64 = 1e-7;

/// Compares `d/dε ∫ L(j^k(s + εψ))` at `ε = 0` with `∫ EL(j^{2k}s)·ψ`.
///
/// Both integrals use the same tensor Simpson rule with one Richardson
/// step; the grid is doubled until two successive extrapolations agree.
pub fn gateaux_oracle(
    l: &Expr,
    spec: BundleSpec,
    s: &SectionFn,
    psi: &SectionFn,
    domain: &BoxDomain,
    fields: &FieldValues,
) -> Result<OracleResult> {
    if domain.dim() != spec.m {
        return Err(Error::usage("integration box has the wrong dimension"));
    }
    let el = euler_lagrange(l, spec)?;
    let s_jets = prolong(s, 2 * spec.k, spec)?;
    let psi_jets = prolong(psi, spec.k, spec)?;
    let top: Vec<CoordId> = spec.jets_up_to(spec.k);

    let integrate = |panels: usize, eps: Option<f64>| -> Result<(f64, f64, f64)> {
        let mut action = 0.0;
        let mut variation = 0.0;
        let mut pairing = 0.0;
        for (node, weight) in simpson_nodes(domain, panels) {
            let sp = jet_values(&s_jets, &node, fields)?;
            let pp = jet_values(&psi_jets, &node, fields)?;
            action += weight * l.evaluate(&sp, fields)?;
            if let Some(h) = eps {
                let mut plus = sp.clone();
                let mut minus = sp.clone();
                for c in &top {
                    let dv = pp[c];
                    *plus.get_mut(c).unwrap() += h * dv;
                    *minus.get_mut(c).unwrap() -= h * dv;
                }
                variation += weight * (l.evaluate(&plus, fields)? - l.evaluate(&minus, fields)?) / (2.0 * h);
            }
            for (alpha, e) in el.components.iter().enumerate() {
                let psi_val = pp[&CoordId::jet(alpha, MultiIndex::zero(spec.m))];
                pairing += weight * e.evaluate(&sp, fields)? * psi_val;
            }
        }
        Ok((action, variation, pairing))
    };

    let (action0, _, _) = integrate(GRID_START, None)?;
    let eps = 1e-4 * (1.0 + action0.abs());
    let mut panels = GRID_START;
    let (_, mut coarse_l, mut coarse_r) = integrate(panels, Some(eps))?;
    let mut previous: Option<(f64, f64)> = None;
    let (lhs, rhs) = loop {
        if panels * 2 > GRID_LIMIT {
            let (l, r) = previous.unwrap_or((coarse_l, coarse_r));
            return Err(Error::Oracle(format!(
                "quadrature did not settle by {panels} panels per axis (lhs {l:e}, rhs {r:e})"
            )));
        }
        panels *= 2;
        let (_, fine_l, fine_r) = integrate(panels, Some(eps))?;
        // Richardson step for the h^4 error of Simpson's rule.
        let current = (fine_l + (fine_l - coarse_l) / 15.0, fine_r + (fine_r - coarse_r) / 15.0);
        (coarse_l, coarse_r) = (fine_l, fine_r);
        if let Some((pl, pr)) = previous {
            let scale = 1e-300_f64.max(current.0.abs()).max(current.1.abs());
            let settled =
                (current.0 - pl).abs() <= QUADRATURE_TOL * scale && (current.1 - pr).abs() <= QUADRATURE_TOL * scale;
            if settled || (current.0 == 0.0 && current.1 == 0.0) {
                break current;
            }
        }
        previous = Some(current);
    };
    let scale = lhs.abs().max(rhs.abs());
    let rel_err = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(OracleResult { lhs, rhs, rel_err, grid: panels, eps })
}

fn simpson_nodes(domain: &BoxDomain, panels: usize) -> Vec<(Vec<f64>, f64)> {
    let axes: Vec<Vec<(f64, f64)>> = (0..domain.dim())
        .map(|i| {
            let (a, b) = (domain.lo[i], domain.hi[i]);
            let h = (b - a) / panels as f64;
            (0..=panels)
                .map(|n| {
                    let w = if n == 0 || n == panels {
                        1.0
                    } else if n % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    (a + h * n as f64, w * h / 3.0)
                })
                .collect()
        })
        .collect();
    let mut out = vec![(Vec::new(), 1.0)];
    for axis in &axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for (node, w) in &out {
            for &(x, wx) in axis {
                let mut n = node.clone();
                n.push(x);
                next.push((n, w * wx));
            }
        }
        out = next;
    }
    out
}
