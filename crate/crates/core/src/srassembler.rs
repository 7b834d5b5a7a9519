//! Assembly of the dynamical equation on the velocity-momentum space and
//! extraction of its coefficient equations and constraints.

use std::collections::BTreeMap;

use crate::eleuler::{euler_lagrange, total_derivative};
use crate::equations::{Equation, EquationSet, Tag};
use crate::error::{Error, Result};
use crate::extalg::{Form, ProjectorTemplate};
use crate::jetmodel::{pairing_phi, BundleSpec, CoordCatalog};
use crate::multiindex::{self, MultiIndex};
use crate::symexpr::{CoordId, Expr, Substitution, Unknown};

/// Rejects Lagrangians mentioning anything but base variables, jets up to
/// order `k`, and declared fields.
pub fn check_lagrangian(catalog: &CoordCatalog, l: &Expr) -> Result<()> {
    let spec = catalog.spec();
    for a in l.atoms() {
        let ok = match &a {
            CoordId::Base(i) => *i < spec.m,
            CoordId::Jet { alpha, index } => *alpha < spec.n && index.dim() == spec.m && index.order() <= spec.k,
            CoordId::Field(f) => catalog.field(&f.name).is_some(),
            _ => false,
        };
        if !ok {
            return Err(Error::usage(format!("the Lagrangian may not depend on `{a}`")));
        }
    }
    Ok(())
}

fn a_sym(alpha: usize, index: MultiIndex, dir: usize) -> Expr {
    Expr::Atom(CoordId::Unknown(Unknown::A { alpha, index, dir }))
}

fn b_sym(alpha: usize, index: MultiIndex, slot: usize, dir: usize) -> Expr {
    Expr::Atom(CoordId::Unknown(Unknown::B { alpha, index, slot, dir }))
}

fn jet(alpha: usize, index: MultiIndex) -> Expr {
    Expr::Atom(CoordId::jet(alpha, index))
}

fn momentum(alpha: usize, index: MultiIndex, dir: usize) -> Expr {
    Expr::Atom(CoordId::momentum(alpha, index, dir))
}

/// `H_0 = Φ - L`.
pub fn hamiltonian_h0(catalog: &CoordCatalog, l: &Expr) -> Result<Expr> {
    check_lagrangian(catalog, l)?;
    Ok(pairing_phi(catalog) - l.clone())
}

/// The canonical form `-dp ∧ d^m x - dp^{I,i}_alpha ∧ du^alpha_I ∧ d^{m-1}x_i`.
pub fn canonical_form(catalog: &CoordCatalog) -> Form {
    let spec = catalog.spec();
    let vol = Form::volume(spec.m);
    let mut omega = Form::differential(CoordId::Scalar).wedge(&vol).neg();
    let partial_vols: Vec<Form> = (0..spec.m).map(|i| Form::volume_minus(spec.m, i)).collect();
    for c in spec.momenta() {
        let CoordId::Momentum { alpha, index, dir } = &c else { unreachable!() };
        let term = Form::differential(c.clone())
            .wedge(&Form::differential(CoordId::jet(*alpha, index.clone())))
            .wedge(&partial_vols[*dir]);
        omega = omega.sub(&term);
    }
    omega
}

/// `Ω_{H_0} = Ω + dH_0 ∧ d^m x`.
pub fn omega_h0(catalog: &CoordCatalog, l: &Expr) -> Result<Form> {
    let h0 = hamiltonian_h0(catalog, l)?;
    let vol = Form::volume(catalog.spec().m);
    Ok(canonical_form(catalog).add(&Form::scalar(h0).exterior_d().wedge(&vol)))
}

pub fn projector_template(catalog: &CoordCatalog) -> ProjectorTemplate {
    ProjectorTemplate::generic(catalog)
}

/// Sign `s` with `dc ∧ d^m x = s · (stored monomial)`.
fn top_sign(m: usize) -> Expr {
    if m % 2 == 0 {
        Expr::one()
    } else {
        Expr::int(-1)
    }
}

fn top_monomial(m: usize, c: &CoordId) -> Vec<CoordId> {
    let mut mono: Vec<CoordId> = (0..m).map(CoordId::Base).collect();
    mono.push(c.clone());
    mono
}

fn provenance(c: &CoordId) -> String {
    format!("d{c} ^ d^m x")
}

/// Trace `Σ_j B^{J,j}_{alpha j}`.
fn b_trace(alpha: usize, index: &MultiIndex, m: usize) -> Expr {
    Expr::sum((0..m).map(|j| b_sym(alpha, index.clone(), j, j)))
}

/// Sum of the momenta `p^{I,i}_alpha` over decompositions `I + 1_i = J`.
fn momentum_sum(alpha: usize, index: &MultiIndex) -> Expr {
    Expr::sum(index.decompositions().into_iter().map(|(lower, i)| momentum(alpha, lower, i)))
}

/// Coefficient equations of `i_h Ω_{H_0} = (m-1) Ω_{H_0}` for the generic
/// projector.
///
/// Every coefficient is computed from the forms and then checked against
/// the expected grouped shape; any other surviving monomial, or a
/// coefficient of the wrong shape, is reported as an internal error.
pub fn dynamical_equations(catalog: &CoordCatalog, l: &Expr) -> Result<EquationSet> {
    let spec = catalog.spec();
    let m = spec.m;
    let omega = omega_h0(catalog, l)?;
    let h = projector_template(catalog);
    let residual = omega.contract_projector(&h).sub(&omega.scale(&Expr::int(m as i64 - 1)));
    let mut collected = residual.collect()?;
    let sign = top_sign(m);

    let mut take = |c: &CoordId, expected: &Expr| -> Result<()> {
        let found = collected.remove(&top_monomial(m, c)).unwrap_or_else(Expr::zero);
        if !found.equivalent(&(&sign * expected)).holds() {
            return Err(Error::internal(format!(
                "coefficient of d{c} ^ d^m x is `{found}`, expected `{}`",
                &sign * expected
            )));
        }
        Ok(())
    };

    let mut a_eqs = EquationSet::new();
    let mut rest = EquationSet::new();
    for alpha in 0..spec.n {
        for index in multiindex::enumerate_up_to(m, spec.k - 1) {
            for i in 0..m {
                let c = CoordId::momentum(alpha, index.clone(), i);
                let lhs = a_sym(alpha, index.clone(), i);
                let rhs = jet(alpha, index.raised(i));
                take(&c, &(&rhs - &lhs))?;
                a_eqs.push(Equation::new(lhs, rhs, Tag::A, provenance(&c)));
            }
        }
        for index in multiindex::enumerate_up_to(m, spec.k) {
            let c = CoordId::jet(alpha, index.clone());
            let dl = l.partial_normalized(&c)?;
            let order = index.order();
            let trace = if order < spec.k { b_trace(alpha, &index, m) } else { Expr::zero() };
            let psum = momentum_sum(alpha, &index);
            take(&c, &(&(&trace + &psum) - &dl))?;
            let eq = if order == 0 {
                Equation::new(trace, dl, Tag::BTrace, provenance(&c))
            } else if order < spec.k {
                Equation::new(psum, (&dl - &trace).normalize()?, Tag::BMiddle, provenance(&c))
            } else {
                Equation::new(psum, dl, Tag::W1, provenance(&c))
            };
            rest.push(eq);
        }
    }
    if let Some((mono, coef)) = collected.into_iter().next() {
        let names: Vec<String> = mono.iter().map(|c| format!("d{c}")).collect();
        return Err(Error::internal(format!(
            "unexpected coefficient `{coef}` on {}",
            names.join(" ^ ")
        )));
    }
    // Families in a fixed order: A, then the trace, middle and top equations.
    let mut out = a_eqs;
    for tag in [Tag::BTrace, Tag::BMiddle, Tag::W1] {
        for eq in rest.with_tag(tag) {
            out.push(eq.clone());
        }
    }
    Ok(out)
}

/// `p = L - Σ p^{I,i}_alpha u^alpha_{I+1_i}`, the condition `H_0 = 0`.
pub fn w2_constraint(catalog: &CoordCatalog, l: &Expr) -> Result<EquationSet> {
    check_lagrangian(catalog, l)?;
    let pairing = pairing_phi(catalog) - Expr::Atom(CoordId::Scalar);
    let rhs = (l - &pairing).normalize()?;
    let mut set = EquationSet::new();
    set.push(Equation::new(Expr::Atom(CoordId::Scalar), rhs, Tag::W2, "H0 = 0"));
    Ok(set)
}

/// The W1 constraint functions `Σ_{I+1_i=K} p^{I,i}_alpha - ∂L/∂u^alpha_K`,
/// keyed by `(alpha, K)`.
pub fn w1_functions(catalog: &CoordCatalog, l: &Expr) -> Result<BTreeMap<(usize, MultiIndex), Expr>> {
    let spec = catalog.spec();
    let mut out = BTreeMap::new();
    for alpha in 0..spec.n {
        for k in multiindex::enumerate(spec.m, spec.k) {
            let dl = l.partial_normalized(&CoordId::jet(alpha, k.clone()))?;
            out.insert((alpha, k.clone()), momentum_sum(alpha, &k) - dl);
        }
    }
    Ok(out)
}

/// Holonomic values `A^alpha_{I j} = u^alpha_{I+1_j}` for `|I| <= k-1`.
pub fn lower_a_values(spec: BundleSpec) -> Substitution {
    let mut out = Substitution::new();
    for alpha in 0..spec.n {
        for index in multiindex::enumerate_up_to(spec.m, spec.k - 1) {
            for j in 0..spec.m {
                out.insert(
                    CoordId::Unknown(Unknown::A { alpha, index: index.clone(), dir: j }),
                    jet(alpha, index.raised(j)),
                );
            }
        }
    }
    out
}

/// Tangency of the projector to W1: for each `(alpha, K, j)`,
/// `Σ_{I+1_i=K} B^{I,i}_{alpha j} = ∂²L/∂x^j∂u_K + Σ u_{I+1_j} ∂²L/∂u_I∂u_K + Σ A_{Jj} ∂²L/∂u_J∂u_K`.
///
/// Each equation is cross-checked against `h_j` applied as a derivation to
/// the constraint function.
pub fn tangency_equations(catalog: &CoordCatalog, l: &Expr) -> Result<EquationSet> {
    check_lagrangian(catalog, l)?;
    let spec = catalog.spec();
    let h = projector_template(catalog);
    let lower_a = lower_a_values(spec);
    let lower_jets = spec.jets_up_to(spec.k - 1);
    let top_jets = spec.jets_of_order(spec.k);
    let mut set = EquationSet::new();
    for ((alpha, k), w1) in w1_functions(catalog, l)? {
        let dl = l.partial_normalized(&CoordId::jet(alpha, k.clone()))?;
        for j in 0..spec.m {
            let lhs = Expr::sum(k.decompositions().into_iter().map(|(lower, i)| b_sym(alpha, lower, i, j)));
            let mut rhs = vec![dl.partial(&CoordId::Base(j))];
            for c in &lower_jets {
                let CoordId::Jet { alpha: beta, index } = c else { unreachable!() };
                rhs.push(jet(*beta, index.raised(j)) * dl.partial(c));
            }
            for c in &top_jets {
                let CoordId::Jet { alpha: beta, index } = c else { unreachable!() };
                rhs.push(a_sym(*beta, index.clone(), j) * dl.partial(c));
            }
            let rhs = Expr::sum(rhs).normalize()?;
            let derived = h.lifts[j].apply(&w1).substitute(&lower_a);
            if !derived.equivalent(&(&lhs - &rhs)).holds() {
                return Err(Error::internal(format!(
                    "tangency along x[{}] of the W1 constraint for {k}@{} disagrees with the closed form",
                    j + 1,
                    alpha + 1
                )));
            }
            set.push(Equation::new(
                lhs,
                rhs,
                Tag::Tangency,
                format!("W1 {k}@{} along x[{}]", alpha + 1, j + 1),
            ));
        }
    }
    Ok(set)
}

/// Replaces, for every `(alpha, K)`, the momentum of the first decomposition
/// of `K` by its value on W1.
pub fn w1_elimination(catalog: &CoordCatalog, l: &Expr) -> Result<Substitution> {
    let mut out = Substitution::new();
    for ((alpha, k), _) in w1_functions(catalog, l)? {
        let dl = l.partial_normalized(&CoordId::jet(alpha, k.clone()))?;
        let mut decs = k.decompositions().into_iter();
        let (first, i) = decs.next().expect("top-order index has a decomposition");
        let others = Expr::sum(decs.map(|(lower, i)| momentum(alpha, lower, i)));
        out.insert(CoordId::momentum(alpha, first, i), dl - others);
    }
    Ok(out)
}

/// `C_j = ∂L/∂x^j + A_{Jj} ∂L/∂u_J - A_{I+1_i, j} p^{I,i} - B^{I,i}_j u_{I+1_i}`
/// with the given values substituted for `A` and `B`, reduced modulo W1.
pub fn c_coefficients(
    catalog: &CoordCatalog,
    l: &Expr,
    a: &Substitution,
    b: &Substitution,
) -> Result<Vec<Expr>> {
    check_lagrangian(catalog, l)?;
    let spec = catalog.spec();
    let elim = w1_elimination(catalog, l)?;
    let mut values = a.clone();
    values.extend(b.iter().map(|(k, v)| (k.clone(), v.clone())));
    let mut out = Vec::with_capacity(spec.m);
    for j in 0..spec.m {
        let raw = c_formula(catalog, l, j);
        let reduced = raw.substitute(&values).substitute(&elim).normalize()?;
        if let Some(bad) = reduced.atoms().into_iter().find(|v| {
            matches!(v, CoordId::Unknown(Unknown::A { index, .. }) if index.order() == spec.k)
        }) {
            return Err(Error::internal(format!(
                "`{bad}` survives in C[{}] after reduction modulo W1",
                j + 1
            )));
        }
        out.push(reduced);
    }
    Ok(out)
}

fn c_formula(catalog: &CoordCatalog, l: &Expr, j: usize) -> Expr {
    let spec = catalog.spec();
    let mut terms = vec![l.partial(&CoordId::Base(j))];
    for c in spec.jets_up_to(spec.k) {
        let CoordId::Jet { alpha, index } = &c else { unreachable!() };
        terms.push(a_sym(*alpha, index.clone(), j) * l.partial(&c));
    }
    for c in spec.momenta() {
        let CoordId::Momentum { alpha, index, dir } = &c else { unreachable!() };
        let up = index.raised(*dir);
        terms.push(-(a_sym(*alpha, up.clone(), j) * Expr::Atom(c.clone())));
        terms.push(-(b_sym(*alpha, index.clone(), *dir, j) * jet(*alpha, up)));
    }
    Expr::sum(terms)
}

/// `C_j` equations on W1 with holonomic lower `A`, leaving `B` symbolic.
///
/// The closed form is cross-checked against tangency of `h_j` to `H_0 = 0`.
pub fn c_equations(catalog: &CoordCatalog, l: &Expr) -> Result<EquationSet> {
    let spec = catalog.spec();
    let h0 = hamiltonian_h0(catalog, l)?;
    let h = projector_template(catalog);
    let cs = c_coefficients(catalog, l, &lower_a_values(spec), &Substitution::new())?;
    let mut set = EquationSet::new();
    for (j, c) in cs.into_iter().enumerate() {
        let c_sym = Expr::Atom(CoordId::Unknown(Unknown::C { dir: j }));
        // h_j(H_0) = C_j - (closed form) must vanish identically.
        let tangency = h.lifts[j].apply(&h0);
        if !tangency.equivalent(&(&c_sym - &c_formula(catalog, l, j))).holds() {
            return Err(Error::internal(format!("C[{}] closed form disagrees with h_j(H0)", j + 1)));
        }
        set.push(Equation::new(c_sym, c, Tag::C, format!("H0 = 0 along x[{}]", j + 1)));
    }
    Ok(set)
}

/// Derivation of the first-order Euler-Lagrange equation from the
/// second-order treatment of a first-order Lagrangian.
#[derive(Clone, Debug)]
pub struct FirstAsSecond {
    /// `Σ_j B^{1_i, j}_{alpha j} = 0` for every `(alpha, i)`.
    pub projectability: Vec<Equation>,
    /// Middle equations for `|J| = 1` under projectability: `p^{0,i} = ∂L/∂u_i`.
    pub momentum_constraints: Vec<Equation>,
    /// Tangency to those constraints: `B^{0,i}_{alpha j} = D_j ∂L/∂u_i`.
    pub b_values: Vec<Equation>,
    /// Trace equation after substitution, one per fiber index.
    pub reduced: Vec<Expr>,
    /// The Euler-Lagrange expressions of the first-order problem.
    pub first_order_el: Vec<Expr>,
    pub agrees: bool,
}

/// Replays the second-order treatment of a first-order `l` on the order-2
/// catalog: impose projectability, turn the order-one middle equations into
/// constraints, take their tangency, and feed the result into the trace.
pub fn first_as_second(catalog: &CoordCatalog, l: &Expr) -> Result<FirstAsSecond> {
    let spec = catalog.spec();
    if spec.k != 2 {
        return Err(Error::usage("the replay runs on an order-2 catalog"));
    }
    if l.jet_order().unwrap_or(0) > 1 {
        return Err(Error::usage("the replay needs a first-order Lagrangian"));
    }
    let m = spec.m;
    let eqs = dynamical_equations(catalog, l)?;
    let h = projector_template(catalog);
    let lower_a = lower_a_values(spec);

    let mut projectability = Vec::new();
    let mut momentum_constraints = Vec::new();
    let mut b_values = Vec::new();
    let mut b_subst = Substitution::new();
    for eq in eqs.with_tag(Tag::BMiddle) {
        let atoms: Vec<CoordId> = eq.lhs.atoms().into_iter().collect();
        let (alpha, index, i) = match atoms.as_slice() {
            [CoordId::Momentum { alpha, index, dir }] => (*alpha, index.clone(), *dir),
            _ => {
                return Err(Error::internal(format!(
                    "order-one middle equation `{eq}` has an unexpected shape"
                )))
            }
        };
        let one_i = index.raised(i);
        let trace = b_trace(alpha, &one_i, m);
        projectability.push(Equation::new(trace, Expr::zero(), Tag::BMiddle, format!("projectability {one_i}@{}", alpha + 1)));
        // Solve the trace for its diagonal entry and substitute.
        let diag = CoordId::Unknown(Unknown::B { alpha, index: one_i.clone(), slot: i, dir: i });
        let others = Expr::sum((0..m).filter(|&j| j != i).map(|j| b_sym(alpha, one_i.clone(), j, j)));
        let mut proj = Substitution::new();
        proj.insert(diag, -others);
        let rhs = eq.rhs.substitute(&proj).normalize()?;
        if rhs.atoms().iter().any(|a| matches!(a, CoordId::Unknown(_))) {
            return Err(Error::internal(format!("projectability leaves unknowns in `{rhs}`")));
        }
        let constraint = &eq.lhs - &rhs;
        momentum_constraints.push(Equation::new(eq.lhs.clone(), rhs.clone(), Tag::W1, eq.provenance.clone()));
        for j in 0..m {
            let b = CoordId::Unknown(Unknown::B { alpha, index: index.clone(), slot: i, dir: j });
            // h_j(constraint) = B^{0,i}_j - h_j(rhs) = 0.
            let applied = h.lifts[j].apply(&constraint).substitute(&lower_a);
            let value = (Expr::Atom(b.clone()) - applied).normalize()?;
            if value.atoms().iter().any(|a| matches!(a, CoordId::Unknown(_))) {
                return Err(Error::internal(format!("tangency leaves unknowns in `{value}`")));
            }
            let expected = total_derivative(&rhs, j, 2)?;
            if !value.equivalent(&expected).holds() {
                return Err(Error::internal(format!(
                    "tangency value `{value}` differs from the total derivative `{expected}`"
                )));
            }
            b_values.push(Equation::new(Expr::Atom(b.clone()), value.clone(), Tag::Tangency, format!("constraint {one_i}@{} along x[{}]", alpha + 1, j + 1)));
            b_subst.insert(b, value);
        }
    }

    let mut reduced = Vec::new();
    for eq in eqs.with_tag(Tag::BTrace) {
        reduced.push((&eq.rhs - &eq.lhs).substitute(&b_subst).normalize()?);
    }
    let first_spec = BundleSpec::new(m, spec.n, 1)?;
    let first_order_el = euler_lagrange(l, first_spec)?.components;
    let agrees = reduced.len() == first_order_el.len()
        && reduced.iter().zip(&first_order_el).all(|(a, b)| a.equivalent(b).holds());
    Ok(FirstAsSecond { projectability, momentum_constraints, b_values, reduced, first_order_el, agrees })
}
