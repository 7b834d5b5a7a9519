use jetforms::equations::Tag;
use jetforms::extalg::{generic_unknown_count, Form};
use jetforms::jetmodel::{build_catalog, BundleSpec, CoordCatalog, FieldDecl};
use jetforms::multiindex::{self, MultiIndex};
use jetforms::srassembler::*;
use jetforms::symexpr::{parse, CoordId, Expr, Substitution, Unknown};

fn plate() -> (CoordCatalog, Expr) {
    let spec = BundleSpec::new(2, 1, 2).unwrap();
    let cat = CoordCatalog::with_fields(spec, vec![FieldDecl { name: "q".into(), depends: vec![0, 1] }]).unwrap();
    let l = parse("1/2*(u[2,0]^2 + 2*u[1,1]^2 + u[0,2]^2 - 2*q*u[0,0])", &cat).unwrap();
    (cat, l)
}

fn camassa_holm() -> (CoordCatalog, Expr) {
    let cat = build_catalog(BundleSpec::new(2, 1, 2).unwrap());
    let l = parse("u[1,0]*u[0,1]^2/2 + u[1,1]^2/(2*u[1,0])", &cat).unwrap();
    (cat, l)
}

fn assert_equation(lhs: &Expr, rhs: &Expr, cat: &CoordCatalog, want_lhs: &str, want_rhs: &str) {
    let wl = parse(want_lhs, cat).unwrap();
    let wr = parse(want_rhs, cat).unwrap();
    assert!(
        (lhs - rhs).equivalent(&(&wl - &wr)).holds(),
        "{lhs} = {rhs} differs from {want_lhs} = {want_rhs}"
    );
}

#[test]
fn hamiltonian_of_first_order_mechanics() {
    let cat = build_catalog(BundleSpec::new(1, 1, 1).unwrap());
    let l = parse("u[1]^2/2", &cat).unwrap();
    let h0 = hamiltonian_h0(&cat, &l).unwrap();
    assert!(h0.equivalent(&parse("p[0;1]*u[1] + p - u[1]^2/2", &cat).unwrap()).holds());
    let zero = hamiltonian_h0(&cat, &Expr::zero()).unwrap();
    assert!(zero.equivalent(&parse("p[0;1]*u[1] + p", &cat).unwrap()).holds());
}

#[test]
fn lagrangian_with_momenta_is_rejected() {
    let cat = build_catalog(BundleSpec::new(1, 1, 1).unwrap());
    let l = parse("p[0;1]*u[1]", &cat).unwrap();
    assert!(hamiltonian_h0(&cat, &l).is_err());
}

#[test]
fn omega_h0_in_mechanics() {
    let cat = build_catalog(BundleSpec::new(1, 1, 1).unwrap());
    let l = parse("u[1]^2/2 - u[0]^2", &cat).unwrap();
    let omega = omega_h0(&cat, &l).unwrap();
    let dx = Form::differential(CoordId::Base(0));
    let d = |s: &str| Form::differential(parse(s, &cat).unwrap().atoms().into_iter().next().unwrap());
    let coef = |s: &str| parse(s, &cat).unwrap();
    // -dp1 ^ du + (p1 du1 + u1 dp1 - dL/du du - dL/du1 du1) ^ dx
    let expected = d("p[0;1]")
        .wedge(&d("u[0]"))
        .neg()
        .add(&d("u[1]").scale(&coef("p[0;1]")).wedge(&dx))
        .add(&d("p[0;1]").scale(&coef("u[1]")).wedge(&dx))
        .add(&d("u[0]").scale(&coef("2*u[0]")).wedge(&dx))
        .sub(&d("u[1]").scale(&coef("u[1]")).wedge(&dx));
    assert!(omega.sub(&expected).collect().unwrap().is_empty());
}

#[test]
fn omega_with_zero_lagrangian_is_canonical_plus_d_phi() {
    let cat = build_catalog(BundleSpec::new(2, 1, 2).unwrap());
    let omega = omega_h0(&cat, &Expr::zero()).unwrap();
    let phi = jetforms::jetmodel::pairing_phi(&cat);
    let expected = canonical_form(&cat).add(&Form::scalar(phi).exterior_d().wedge(&Form::volume(2)));
    assert!(omega.sub(&expected).collect().unwrap().is_empty());
}

#[test]
fn template_unknown_counts() {
    let (cat, _) = plate();
    assert_eq!(projector_template(&cat).unknowns().len(), 26);
    assert_eq!(generic_unknown_count(&cat), 26);
    let mech = build_catalog(BundleSpec::new(1, 1, 1).unwrap());
    let names: Vec<String> = projector_template(&mech).unknowns().iter().map(|c| c.to_string()).collect();
    assert_eq!(names, ["A[0;1]", "A[1;1]", "B[0;1;1]", "C[1]"]);
    for u in projector_template(&cat).unknowns() {
        assert!(!cat.contains(&u));
    }
}

#[test]
fn plate_grouped_equations() {
    let (cat, l) = plate();
    let eqs = dynamical_equations(&cat, &l).unwrap();
    let w1: Vec<_> = eqs.with_tag(Tag::W1).collect();
    assert_eq!(w1.len(), 3);
    assert_equation(&w1[0].lhs, &w1[0].rhs, &cat, "p[1,0;1]", "u[2,0]");
    assert_equation(&w1[1].lhs, &w1[1].rhs, &cat, "p[1,0;2] + p[0,1;1]", "2*u[1,1]");
    assert_equation(&w1[2].lhs, &w1[2].rhs, &cat, "p[0,1;2]", "u[0,2]");
    let trace: Vec<_> = eqs.with_tag(Tag::BTrace).collect();
    assert_eq!(trace.len(), 1);
    assert_equation(&trace[0].lhs, &trace[0].rhs, &cat, "B[0,0;1;1] + B[0,0;2;2]", "-q");
    assert_eq!(eqs.count(Tag::A), 6);
    assert_eq!(eqs.count(Tag::BMiddle), 2);
    for eq in eqs.with_tag(Tag::A) {
        let atoms = eq.rhs.atoms();
        assert!(matches!(atoms.iter().next(), Some(CoordId::Jet { .. })));
    }
}

#[test]
fn camassa_holm_grouped_equations() {
    let (cat, l) = camassa_holm();
    let eqs = dynamical_equations(&cat, &l).unwrap();
    let w1: Vec<_> = eqs.with_tag(Tag::W1).collect();
    assert_equation(&w1[0].lhs, &w1[0].rhs, &cat, "p[1,0;1]", "0");
    assert_equation(&w1[1].lhs, &w1[1].rhs, &cat, "p[1,0;2] + p[0,1;1]", "u[1,1]/u[1,0]");
    assert_equation(&w1[2].lhs, &w1[2].rhs, &cat, "p[0,1;2]", "0");
}

#[test]
fn first_order_grouping_has_no_middle_equations() {
    let cat = build_catalog(BundleSpec::new(2, 1, 1).unwrap());
    let l = parse("u[1,0]^2/2 + u[0,1]^2/2 + u[0,0]^3", &cat).unwrap();
    let eqs = dynamical_equations(&cat, &l).unwrap();
    assert_eq!(eqs.count(Tag::BMiddle), 0);
    let w1: Vec<_> = eqs.with_tag(Tag::W1).collect();
    assert_equation(&w1[0].lhs, &w1[0].rhs, &cat, "p[0,0;1]", "u[1,0]");
    assert_equation(&w1[1].lhs, &w1[1].rhs, &cat, "p[0,0;2]", "u[0,1]");
}

#[test]
fn w2_examples() {
    let cat = build_catalog(BundleSpec::new(1, 1, 1).unwrap());
    let w2 = w2_constraint(&cat, &Expr::zero()).unwrap();
    let eq = &w2.equations[0];
    assert_equation(&eq.lhs, &eq.rhs, &cat, "p", "-p[0;1]*u[1]");
    let mech = build_catalog(BundleSpec::new(1, 1, 3).unwrap());
    let l = parse("u[3]^2/2 + u[1]*u[0]", &mech).unwrap();
    let eq = &w2_constraint(&mech, &l).unwrap().equations[0];
    assert_equation(
        &eq.lhs,
        &eq.rhs,
        &mech,
        "p",
        "u[3]^2/2 + u[1]*u[0] - p[0;1]*u[1] - p[1;1]*u[2] - p[2;1]*u[3]",
    );
}

#[test]
fn plate_tangency() {
    let (cat, l) = plate();
    let t = tangency_equations(&cat, &l).unwrap();
    let eqs: Vec<_> = t.iter().collect();
    assert_eq!(eqs.len(), 6);
    // Ordered by K, then direction.
    assert_equation(&eqs[0].lhs, &eqs[0].rhs, &cat, "B[1,0;1;1]", "A[2,0;1]");
    assert_equation(&eqs[1].lhs, &eqs[1].rhs, &cat, "B[1,0;1;2]", "A[2,0;2]");
    assert_equation(&eqs[2].lhs, &eqs[2].rhs, &cat, "B[1,0;2;1] + B[0,1;1;1]", "2*A[1,1;1]");
    assert_equation(&eqs[3].lhs, &eqs[3].rhs, &cat, "B[1,0;2;2] + B[0,1;1;2]", "2*A[1,1;2]");
    assert_equation(&eqs[4].lhs, &eqs[4].rhs, &cat, "B[0,1;2;1]", "A[0,2;1]");
    assert_equation(&eqs[5].lhs, &eqs[5].rhs, &cat, "B[0,1;2;2]", "A[0,2;2]");
}

#[test]
fn camassa_holm_tangency() {
    let (cat, l) = camassa_holm();
    let t = tangency_equations(&cat, &l).unwrap();
    let eqs: Vec<_> = t.iter().collect();
    assert_equation(&eqs[0].lhs, &eqs[0].rhs, &cat, "B[1,0;1;1]", "0");
    assert_equation(
        &eqs[2].lhs,
        &eqs[2].rhs,
        &cat,
        "B[1,0;2;1] + B[0,1;1;1]",
        "-u[2,0]*u[1,1]/u[1,0]^2 + A[1,1;1]/u[1,0]",
    );
    assert_equation(&eqs[4].lhs, &eqs[4].rhs, &cat, "B[0,1;2;1]", "0");
}

#[test]
fn mechanics_tangency_with_identity_hessian() {
    let cat = build_catalog(BundleSpec::new(1, 1, 2).unwrap());
    let l = parse("u[2]^2/2 + x[1]*u[2]*u[1] + u[0]^2*u[2]", &cat).unwrap();
    let t = tangency_equations(&cat, &l).unwrap();
    let eq = &t.equations[0];
    // B^{1,1} = d2L/dxdu2 + u1 d2L/dudu2 + u2 d2L/du1du2 + A2
    assert_equation(&eq.lhs, &eq.rhs, &cat, "B[1;1;1]", "u[1] + u[1]*2*u[0] + u[2]*x[1] + A[2;1]");
}

#[test]
fn c_coefficients_first_order() {
    let cat = build_catalog(BundleSpec::new(2, 1, 1).unwrap());
    let l = parse("x[1]*u[1,0]^2/2 + u[0,1]^2/2 + u[0,0]^3", &cat).unwrap();
    let c = c_coefficients(&cat, &l, &lower_a_values(cat.spec()), &Substitution::new()).unwrap();
    // C_j = dL/dx^j + u_j dL/du - B^i_j u_i
    let want0 = parse("u[1,0]^2/2 + u[1,0]*3*u[0,0]^2 - B[0,0;1;1]*u[1,0] - B[0,0;2;1]*u[0,1]", &cat).unwrap();
    let want1 = parse("u[0,1]*3*u[0,0]^2 - B[0,0;1;2]*u[1,0] - B[0,0;2;2]*u[0,1]", &cat).unwrap();
    assert!(c[0].equivalent(&want0).holds(), "{}", c[0]);
    assert!(c[1].equivalent(&want1).holds(), "{}", c[1]);
    assert_eq!(c_equations(&cat, &l).unwrap().len(), 2);
}

#[test]
fn c_coefficients_zero_lagrangian() {
    let cat = build_catalog(BundleSpec::new(1, 1, 2).unwrap());
    let c = c_coefficients(&cat, &Expr::zero(), &Substitution::new(), &Substitution::new()).unwrap();
    // With L = 0 the top constraint forces p[1;1] = 0.
    let want = parse("-A[1;1]*p[0;1] - B[0;1;1]*u[1] - B[1;1;1]*u[2]", &cat).unwrap();
    assert!(c[0].equivalent(&want).holds(), "{}", c[0]);
}

#[test]
fn mechanics_c_loses_top_a() {
    let cat = build_catalog(BundleSpec::new(1, 1, 3).unwrap());
    let l = parse("u[3]^2/2 - u[1]^2*u[0]", &cat).unwrap();
    let eqs = c_equations(&cat, &l).unwrap();
    let top = CoordId::Unknown(Unknown::A { alpha: 0, index: MultiIndex::new(vec![3]), dir: 0 });
    assert!(!eqs.equations[0].rhs.atoms().contains(&top));
}

#[test]
fn family_counts_on_small_specs() {
    for (m, n, k) in [(1, 1, 1), (2, 1, 2), (1, 2, 3), (3, 1, 1), (2, 2, 2)] {
        let spec = BundleSpec::new(m, n, k).unwrap();
        let cat = build_catalog(spec);
        let l = Expr::sum(spec.jets_up_to(k).into_iter().map(|c| Expr::Atom(c).powi(2)));
        let eqs = dynamical_equations(&cat, &l).unwrap();
        let lower: usize = (0..k).map(|o| multiindex::count(m, o)).sum();
        let middle: usize = (1..k).map(|o| multiindex::count(m, o)).sum();
        assert_eq!(eqs.count(Tag::A), n * m * lower);
        assert_eq!(eqs.count(Tag::BTrace), n);
        assert_eq!(eqs.count(Tag::BMiddle), n * middle);
        assert_eq!(eqs.count(Tag::W1), n * multiindex::count(m, k));
        assert_eq!(eqs.len(), n * m * lower + n + n * middle + n * multiindex::count(m, k));
    }
}

#[test]
fn first_as_second_recovers_first_order_equation() {
    let cat = build_catalog(BundleSpec::new(2, 1, 2).unwrap());
    for text in ["u[1,0]^2/2", "u[1,0]^2/2 + u[0,1]^2/2 - u[0,0]^4 + x[1]*u[0,1]*u[0,0]"] {
        let l = parse(text, &cat).unwrap();
        let replay = first_as_second(&cat, &l).unwrap();
        assert!(replay.agrees, "{text}: {:?} vs {:?}", replay.reduced, replay.first_order_el);
        assert_eq!(replay.projectability.len(), 2);
        assert_eq!(replay.b_values.len(), 4);
    }
}
