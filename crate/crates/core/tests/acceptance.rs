//! Acceptance gate: one PASS/FAIL line per criterion, each with its runtime
//! budget. Runs without the libtest harness so the lines always print.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use jetforms::analysis::{
    classify_b_system, highest_hessian, is_regular_at, on_constraint_point, omega2_kernel_dim_at, random_jet_point,
    select_b_columns, selection_certificate, verify_selection, Certificate, HessianMatrix, Verdict,
};
use jetforms::corpus::{run_example, EXAMPLES};
use jetforms::eleuler::{euler_lagrange, total_derivative};
use jetforms::equations::Tag;
use jetforms::jetmodel::{build_catalog, BundleSpec, CoordCatalog, FieldDecl};
use jetforms::multiindex::{
    enumerate, enumerate_up_to, fubini_check, identity_weight_sum, redistribution_check, IndexFamily, MultiIndex,
    PairFamily,
};
use jetforms::srassembler::{dynamical_equations, first_as_second};
use jetforms::symexpr::{parse, parse_with_order, CoordId, Expr, FieldValues, Point};
use jetforms::{multiindex, Rational};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;

const PLATE_L: &str = "1/2*(u[2,0]^2 + 2*u[1,1]^2 + u[0,2]^2 - 2*q*u[0,0])";
const CH_L: &str = "u[1,0]*u[0,1]^2/2 + u[1,1]^2/(2*u[1,0])";

fn spec(m: usize, n: usize, k: u32) -> BundleSpec {
    BundleSpec::new(m, n, k).unwrap()
}

fn plate() -> (CoordCatalog, Expr) {
    let cat = CoordCatalog::with_fields(spec(2, 1, 2), vec![FieldDecl { name: "q".into(), depends: vec![0, 1] }])
        .unwrap();
    let l = parse(PLATE_L, &cat).unwrap();
    (cat, l)
}

fn camassa_holm() -> (CoordCatalog, Expr) {
    let cat = build_catalog(spec(2, 1, 2));
    let l = parse(CH_L, &cat).unwrap();
    (cat, l)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn same(got: &Expr, want: &str, cat: &CoordCatalog) -> Outcome {
    let w = parse(want, cat).map_err(|e| e.to_string())?;
    ensure(got.equivalent(&w).holds(), || format!("`{got}` is not `{want}`"))
}

fn hessian_is(h: &HessianMatrix, cat: &CoordCatalog, want: [[&str; 3]; 3]) -> Outcome {
    ensure(h.size() == 3, || format!("Hessian has size {}", h.size()))?;
    for (r, row) in want.iter().enumerate() {
        for (c, w) in row.iter().enumerate() {
            same(&h.entries[r][c], w, cat)?;
        }
    }
    Ok(())
}

fn plate_euler_lagrange() -> Outcome {
    let (cat, l) = plate();
    let el = euler_lagrange(&l, cat.spec()).map_err(|e| e.to_string())?;
    ensure(el.components.len() == 1, || "expected one equation".into())?;
    let want = parse_with_order("u[4,0] + 2*u[2,2] + u[0,4] - q", &cat, 4).map_err(|e| e.to_string())?;
    ensure(el.components[0].equivalent(&want).holds(), || format!("got {}", el.components[0]))
}

fn plate_hessian() -> Outcome {
    let (cat, l) = plate();
    let h = highest_hessian(&l, cat.spec()).map_err(|e| e.to_string())?;
    hessian_is(&h, &cat, [["1", "0", "0"], ["0", "2", "0"], ["0", "0", "1"]])?;
    let mut fields = FieldValues::new();
    fields.insert("q".into(), Expr::one());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pt = random_jet_point(cat.spec(), &Point::new(), &mut rng);
    ensure(is_regular_at(&l, cat.spec(), &pt, &fields).map_err(|e| e.to_string())?, || "not regular".into())
}

fn camassa_holm_hessian() -> Outcome {
    let (cat, l) = camassa_holm();
    let h = highest_hessian(&l, cat.spec()).map_err(|e| e.to_string())?;
    hessian_is(&h, &cat, [["0", "0", "0"], ["0", "1/u[1,0]", "0"], ["0", "0", "0"]])?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        // Every jet coordinate, u_x included, is drawn from [1, 2].
        let pt = random_jet_point(cat.spec(), &Point::new(), &mut rng);
        let ux = pt[&CoordId::jet(0, MultiIndex::new(vec![1, 0]))];
        ensure((1.0..=2.0).contains(&ux), || format!("u_x = {ux}"))?;
        let regular = is_regular_at(&l, cat.spec(), &pt, &FieldValues::new()).map_err(|e| e.to_string())?;
        ensure(!regular, || "regular at a sample".into())?;
    }
    Ok(())
}

fn w1_sets() -> Outcome {
    let expect = [
        (plate(), [("p[1,0;1]", "u[2,0]"), ("p[1,0;2] + p[0,1;1]", "2*u[1,1]"), ("p[0,1;2]", "u[0,2]")]),
        (camassa_holm(), [("p[1,0;1]", "0"), ("p[1,0;2] + p[0,1;1]", "u[1,1]/u[1,0]"), ("p[0,1;2]", "0")]),
    ];
    for ((cat, l), want) in expect {
        let eqs = dynamical_equations(&cat, &l).map_err(|e| e.to_string())?;
        let w1: Vec<_> = eqs.with_tag(Tag::W1).collect();
        ensure(w1.len() == 3, || format!("{} W1 equations", w1.len()))?;
        for (eq, (lhs, rhs)) in w1.iter().zip(want) {
            same(&eq.lhs, lhs, &cat)?;
            same(&eq.rhs, rhs, &cat)?;
        }
    }
    let (cat, l) = plate();
    let eqs = dynamical_equations(&cat, &l).map_err(|e| e.to_string())?;
    let trace: Vec<_> = eqs.with_tag(Tag::BTrace).collect();
    ensure(trace.len() == 1, || "expected one trace equation".into())?;
    same(&trace[0].lhs, "B[0,0;1;1] + B[0,0;2;2]", &cat)?;
    same(&trace[0].rhs, "-q", &cat)
}

fn classification() -> Outcome {
    for m in 1..=4 {
        let c = classify_b_system(spec(m, 1, 1));
        ensure(
            (c.b_unknowns, c.b_equations, c.verdict) == (m * m, m * m + 1, Verdict::Overdetermined),
            || format!("k=1, m={m}: {c:?}"),
        )?;
    }
    for k in 1..=4 {
        let c = classify_b_system(spec(1, 1, k));
        ensure(c.verdict == Verdict::Overdetermined, || format!("m=1, k={k}: {c:?}"))?;
    }
    let c = classify_b_system(spec(2, 1, 2));
    ensure((c.b_unknowns, c.b_equations, c.verdict) == (8, 8, Verdict::ExactlyDetermined), || format!("{c:?}"))?;
    // Unknowns B^{I,i}_j with |I| = k-1; one equation per (|J| = k, j) plus
    // one per |I| = k-1.
    for m in 1..=4 {
        for k in 1..=4u32 {
            let c = classify_b_system(spec(m, 1, k));
            let unknowns = m * m * multiindex::count(m, k - 1);
            let equations = m * multiindex::count(m, k) + multiindex::count(m, k - 1);
            ensure((c.b_unknowns, c.b_equations) == (unknowns, equations), || format!("m={m} k={k}: {c:?}"))?;
        }
    }
    Ok(())
}

fn column_selection() -> Outcome {
    for m in 2..=4 {
        for k in 2..=4 {
            let sel = select_b_columns(spec(m, 1, k)).map_err(|e| e.to_string())?;
            let n = sel.rows.len();
            ensure(sel.columns.len() == n && sel.entries.iter().all(|r| r.len() == n), || {
                format!("m={m} k={k}: selection is not square")
            })?;
            ensure(sel.entries.iter().flatten().all(|&e| e <= 1), || "entries are not 0/1".into())?;
            ensure(selection_certificate(&sel) != Certificate::Singular && verify_selection(&sel), || {
                format!("m={m} k={k}: selection is singular")
            })?;
        }
    }
    Ok(())
}

fn kernel_dims(cat: &CoordCatalog, l: &Expr, fields: &FieldValues, fixed: &Point, seed: u64) -> Result<Vec<usize>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..5 {
        let pt = on_constraint_point(cat, l, fields, fixed, &mut rng).map_err(|e| e.to_string())?;
        let dim = omega2_kernel_dim_at(l, cat, &pt, fields).map_err(|e| e.to_string())?;
        let regular = is_regular_at(l, cat.spec(), &pt, fields).map_err(|e| e.to_string())?;
        ensure((dim == 0) == regular, || format!("kernel {dim} but regular = {regular}"))?;
        out.push(dim);
    }
    Ok(out)
}

fn kernel_dimensions() -> Outcome {
    let (cat, l) = plate();
    let mut fields = FieldValues::new();
    fields.insert("q".into(), parse("x[1]*x[2] + 1", &cat).unwrap());
    let dims = kernel_dims(&cat, &l, &fields, &Point::new(), 1)?;
    ensure(dims == [0; 5], || format!("plate kernels {dims:?}"))?;

    let cat = build_catalog(spec(2, 1, 2));
    let squares = Expr::sum(spec(2, 1, 2).jets_up_to(2).into_iter().map(|c| Expr::product([Expr::ratio(1, 2), Expr::atom(c).powi(2)])));
    let dims = kernel_dims(&cat, &squares, &FieldValues::new(), &Point::new(), 2)?;
    ensure(dims == [0; 5], || format!("sum of squares kernels {dims:?}"))?;

    let (cat, l) = camassa_holm();
    let mut fixed = Point::new();
    fixed.insert(CoordId::jet(0, MultiIndex::new(vec![1, 0])), 1.5);
    let dims = kernel_dims(&cat, &l, &FieldValues::new(), &fixed, 3)?;
    ensure(dims.iter().all(|&d| d >= 1), || format!("Camassa-Holm kernels {dims:?}"))
}

fn rational(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=5).into())
}

fn multiindex_identities() -> Outcome {
    for m in 1..=4 {
        for j in enumerate_up_to(m, 8).into_iter().filter(|j| !j.is_zero()) {
            let s = identity_weight_sum(&j).map_err(|e| e.to_string())?;
            ensure(s.is_one(), || format!("weights of {j} sum to {s}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..100 {
        let m = rng.gen_range(1..=4);
        let l = rng.gen_range(1..=5);
        let mut family = PairFamily::new();
        for lower in enumerate(m, l - 1) {
            for i in 0..m {
                family.insert((lower.clone(), i), rational(&mut rng));
            }
        }
        ensure(fubini_check(&family, m, l).map_err(|e| e.to_string())?, || format!("fubini trial {trial}"))?;
    }
    for trial in 0..100 {
        let m = rng.gen_range(1..=4);
        let l = rng.gen_range(1..=5);
        let mut b = IndexFamily::new();
        let mut a = IndexFamily::new();
        let mut q = PairFamily::new();
        for j in enumerate(m, l) {
            b.insert(j.clone(), rational(&mut rng));
            a.insert(j.clone(), rational(&mut rng));
            // Random Q on the decompositions of J, with the last entry fixed
            // so that the weighted sum vanishes.
            let decs = j.decompositions();
            let mut weighted = Rational::zero();
            for (lower, i) in &decs[..decs.len() - 1] {
                let v = rational(&mut rng);
                weighted += multiindex::decomposition_weight(lower, *i) * &v;
                q.insert((lower.clone(), *i), v);
            }
            let (lower, i) = decs.last().unwrap();
            q.insert((lower.clone(), *i), -weighted / multiindex::decomposition_weight(lower, *i));
        }
        let ok = redistribution_check(&b, &a, &q, m, l).map_err(|e| e.to_string())?;
        ensure(ok, || format!("redistribution trial {trial}"))?;
    }
    Ok(())
}

fn gateaux_on_corpus() -> Outcome {
    for ex in &EXAMPLES {
        let report = run_example(ex).map_err(|e| e.to_string())?.report;
        ensure(report.oracle.len() == 3, || format!("{}: {} oracle trials", ex.name, report.oracle.len()))?;
        for rec in &report.oracle {
            let err: f64 = rec
                .rel_err
                .as_deref()
                .ok_or_else(|| format!("{}: {:?}", ex.name, rec.diagnostic))?
                .parse()
                .map_err(|_| "unreadable rel_err".to_string())?;
            ensure(err < 1e-5, || format!("{} seed {}: relative error {err:e}", ex.name, rec.seed))?;
        }
    }
    Ok(())
}

fn random_polynomial(atoms: &[CoordId], terms: usize, degree: u32, rng: &mut ChaCha8Rng) -> Expr {
    Expr::sum((0..terms).map(|_| {
        let coef = Expr::ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        let factors = (0..rng.gen_range(1..=degree)).map(|_| Expr::atom(atoms[rng.gen_range(0..atoms.len())].clone()));
        Expr::product(std::iter::once(coef).chain(factors))
    }))
}

fn null_lagrangians() -> Outcome {
    let s = spec(2, 1, 2);
    let mut atoms: Vec<CoordId> = (0..2).map(CoordId::Base).collect();
    atoms.extend(s.jets_up_to(1));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..20 {
        let f: Vec<Expr> = (0..2).map(|_| random_polynomial(&atoms, 3, 3, &mut rng)).collect();
        let l = Expr::sum(
            f.iter().enumerate().map(|(i, fi)| total_derivative(fi, i, 2)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?,
        );
        let el = euler_lagrange(&l, s).map_err(|e| e.to_string())?;
        ensure(el.components[0].is_zero().map_err(|e| e.to_string())?, || {
            format!("trial {trial}: EL of divergence is {}", el.components[0])
        })?;
    }
    Ok(())
}

fn projector_collapse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in 1..=3 {
        for n in 1..=3 {
            for k in 1..=3u32 {
                let s = spec(m, n, k);
                let cat = build_catalog(s);
                let mut atoms: Vec<CoordId> = (0..m).map(CoordId::Base).collect();
                atoms.extend(s.jets_up_to(k));
                let lower: usize = (0..k).map(|o| multiindex::count(m, o)).sum();
                let middle: usize = (1..k).map(|o| multiindex::count(m, o)).sum();
                let top = multiindex::count(m, k);
                for _ in 0..10 {
                    let l = random_polynomial(&atoms, 3, 3, &mut rng);
                    // Any monomial outside `d(coordinate) ^ d^m x`, or any
                    // coefficient off the grouped shape, is an error here.
                    let eqs = dynamical_equations(&cat, &l).map_err(|e| format!("({m},{n},{k}) {l}: {e}"))?;
                    let counts = [Tag::A, Tag::BTrace, Tag::BMiddle, Tag::W1].map(|t| eqs.count(t));
                    ensure(counts == [n * m * lower, n, n * middle, n * top], || {
                        format!("({m},{n},{k}): family sizes {counts:?}")
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn first_order_replay() -> Outcome {
    let cat = build_catalog(spec(2, 1, 2));
    let texts = [
        "u[1,0]^2/2",
        "u[0,1]^2/2 - u[1,0]^2/2 - u[0,0]^2/2 - u[0,0]^4/4",
        "u[1,0]*u[0,1] + x[1]*u[0,0]^2 + u[0,1]^3/3",
    ];
    for text in texts {
        let l = parse(text, &cat).map_err(|e| e.to_string())?;
        let replay = first_as_second(&cat, &l).map_err(|e| e.to_string())?;
        ensure(replay.agrees, || format!("{text}: {:?} vs {:?}", replay.reduced, replay.first_order_el))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 12] = [
        ("plate Euler-Lagrange equation", plate_euler_lagrange, 1),
        ("plate Hessian diag(1,2,1), regular", plate_hessian, 1),
        ("Camassa-Holm Hessian diag(0,1/u_x,0), singular", camassa_holm_hessian, 1),
        ("W1 equations and B trace", w1_sets, 1),
        ("B-system classification counts", classification, 1),
        ("column selection nonsingular for 2 <= m,k <= 4", column_selection, 10),
        ("kernel dimension matches regularity", kernel_dimensions, 30),
        ("multi-index identities", multiindex_identities, 5),
        ("Gateaux oracle on the corpus", gateaux_on_corpus, 60),
        ("divergences are null Lagrangians", null_lagrangians, 10),
        ("projector equations collapse to four families", projector_collapse, 60),
        ("first-order Lagrangian replayed at second order", first_order_replay, 5),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let limit = *limit;
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(()) if elapsed > Duration::from_secs(limit) => Err(format!("took longer than {limit} s")),
            other => other,
        };
        let status = if outcome.is_ok() { "PASS" } else { "FAIL" };
        print!("criterion {:>2} {status} {:>8.3}s (limit {limit} s) {name}", i + 1, elapsed.as_secs_f64());
        match &outcome {
            Ok(()) => println!(),
            Err(msg) => {
                println!(": {msg}");
                failures += 1;
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
