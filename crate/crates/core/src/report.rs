//! The full pipeline on a problem, and its JSON report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::analysis::{
    classify_b_system, highest_hessian, is_regular_at, omega2_kernel_dim_at, on_constraint_point, point_record,
    select_b_columns, selection_certificate, verify_selection, Certificate, Classification,
};
use crate::eleuler::{bump_variation, euler_lagrange, gateaux_oracle};
use crate::equations::{EquationRecord, EquationSet};
use crate::error::{Error, Result};
use crate::jetmodel::{holonomic_equations, BundleSpec, SectionFn};
use crate::multiindex;
use crate::problem::Problem;
use crate::srassembler::{c_equations, dynamical_equations, first_as_second, tangency_equations, w2_constraint};
use crate::symexpr::{CoordId, Expr};

/// Agreement demanded between the first variation and the EL pairing.
pub const ORACLE_TOL: f64 = 1e-5;

pub const FLAG_FURTHER_CONSTRAINTS: &str = "k=1 or m=1: further constraint steps may be required";

/// Floats are written as text so reports diff cleanly.
fn num(x: f64) -> String {
    format!("{x:.10e}")
}

fn text(e: &Expr) -> String {
    e.normalize().map(|n| n.to_string()).unwrap_or_else(|_| e.to_string())
}

fn records(set: &EquationSet) -> Vec<EquationRecord> {
    set.iter().map(EquationRecord::from).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecRecord {
    pub m: usize,
    pub n: usize,
    pub k: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldRecord {
    pub name: String,
    pub depends: Vec<String>,
    pub definition: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Equations {
    /// `A`, `B_TRACE`, `B_MIDDLE` and `W1`, read off the projector equation.
    pub dynamical: Vec<EquationRecord>,
    pub w2: Vec<EquationRecord>,
    pub tangency: Vec<EquationRecord>,
    pub c: Vec<EquationRecord>,
    pub holonomic: Vec<EquationRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianRecord {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleRecord {
    pub point: BTreeMap<String, String>,
    pub regular: bool,
    /// Kernel dimension of the restricted form, when the base has dimension > 1.
    pub kernel_dim: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Samples {
    pub seed: u64,
    pub points: Vec<SampleRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionRecord {
    pub rows: Vec<String>,
    pub selected_columns: Vec<String>,
    pub certificate: Certificate,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRecord {
    pub seed: u64,
    pub section: Vec<String>,
    pub variation: Vec<String>,
    pub lhs: Option<String>,
    pub rhs: Option<String>,
    pub rel_err: Option<String>,
    pub grid: Option<usize>,
    pub eps: Option<String>,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayRecord {
    pub projectability: Vec<String>,
    pub momentum_constraints: Vec<String>,
    pub b_values: Vec<String>,
    pub reduced: Vec<String>,
    pub first_order_el: Vec<String>,
    pub agrees: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub spec: SpecRecord,
    pub seed: u64,
    pub lagrangian: String,
    pub fields: Vec<FieldRecord>,
    pub catalog: Vec<String>,
    pub equations: Equations,
    pub hessian: HessianRecord,
    pub regular_at_samples: Option<Samples>,
    pub omega2_kernel_dims: Option<Vec<usize>>,
    pub classification: Classification,
    pub column_selection: Option<SelectionRecord>,
    pub euler_lagrange: Vec<String>,
    pub oracle: Vec<OracleRecord>,
    pub first_as_second: Option<ReplayRecord>,
    pub flags: Vec<String>,
    /// Checks whose failure means the engine contradicts itself.
    pub consistency_failures: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Which parts of the pipeline to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub assembly: bool,
    pub analysis: bool,
    pub euler_lagrange: bool,
}

impl Stages {
    pub const ALL: Stages = Stages { assembly: true, analysis: true, euler_lagrange: true };
}

pub fn run(problem: &Problem, seed: u64) -> Result<Report> {
    run_stages(problem, seed, Stages::ALL)
}

pub fn run_stages(problem: &Problem, seed: u64, stages: Stages) -> Result<Report> {
    let catalog = &problem.catalog;
    let spec = problem.spec();
    let l = &problem.lagrangian;
    crate::srassembler::check_lagrangian(catalog, l)?;
    let mut flags = Vec::new();
    let mut failures = Vec::new();
    if spec.k == 1 || spec.m == 1 {
        flags.push(FLAG_FURTHER_CONSTRAINTS.to_string());
    }
    let undefined = problem.undefined_fields();
    let numeric = undefined.is_empty();
    if !numeric {
        flags.push(format!("no definition for field(s) {}: numeric checks skipped", undefined.join(", ")));
    }

    let equations = if stages.assembly {
        Equations {
            dynamical: records(&dynamical_equations(catalog, l)?),
            w2: records(&w2_constraint(catalog, l)?),
            tangency: records(&tangency_equations(catalog, l)?),
            c: records(&c_equations(catalog, l)?),
            holonomic: records(&holonomic_equations(spec)),
        }
    } else {
        Equations { dynamical: vec![], w2: vec![], tangency: vec![], c: vec![], holonomic: vec![] }
    };

    let hessian = highest_hessian(l, spec)?;
    let hessian_record = HessianRecord {
        labels: hessian
            .labels
            .iter()
            .map(|(a, k)| if spec.n > 1 { format!("u{k}@{}", a + 1) } else { format!("u{k}") })
            .collect(),
        entries: hessian.entries.iter().map(|row| row.iter().map(text).collect()).collect(),
    };

    let classification = classify_b_system(spec);
    flags.push(format!("b-system {}", classification.verdict));

    let mut regular_at_samples = None;
    let mut omega2_kernel_dims = None;
    let mut column_selection = None;
    if stages.analysis {
        if spec.m >= 2 && spec.k >= 2 {
            let sel = select_b_columns(spec)?;
            let verified = verify_selection(&sel);
            if !verified {
                failures.push("selected B-system columns are singular".to_string());
            }
            column_selection = Some(SelectionRecord {
                rows: sel.rows.iter().map(|r| r.to_string()).collect(),
                selected_columns: sel.columns.iter().map(|c| c.to_string()).collect(),
                certificate: selection_certificate(&sel),
                verified,
            });
        } else {
            flags.push("column selection needs m >= 2 and k >= 2".to_string());
        }
        if spec.m < 2 {
            flags.push("kernel check skipped: base dimension 1".to_string());
        }
        if numeric {
            let samples = sample_points(problem, seed, &mut failures)?;
            if spec.m >= 2 {
                omega2_kernel_dims = Some(samples.points.iter().filter_map(|p| p.kernel_dim).collect());
            }
            regular_at_samples = Some(samples);
        }
    }

    let mut el_text = Vec::new();
    let mut oracle = Vec::new();
    let mut replay = None;
    if stages.euler_lagrange {
        let el = euler_lagrange(l, spec)?;
        el_text = el.components.iter().map(text).collect();
        if numeric {
            for t in 0..problem.oracle_trials {
                let record = oracle_trial(problem, seed.wrapping_add(1000 + t as u64), t)?;
                match (&record.rel_err, &record.diagnostic) {
                    (_, Some(d)) => flags.push(format!("oracle trial {}: {d}", t + 1)),
                    (Some(r), None) if r.parse::<f64>().map_or(true, |r| r >= ORACLE_TOL) => {
                        failures.push(format!("oracle trial {}: relative error {r}", t + 1))
                    }
                    _ => {}
                }
                oracle.push(record);
            }
        }
        if spec.k == 2 && l.jet_order().map_or(true, |o| o <= 1) {
            let r = first_as_second(catalog, l)?;
            if !r.agrees {
                failures.push("first-order replay does not reproduce the first-order equation".to_string());
            }
            replay = Some(ReplayRecord {
                projectability: r.projectability.iter().map(|e| e.to_string()).collect(),
                momentum_constraints: r.momentum_constraints.iter().map(|e| e.to_string()).collect(),
                b_values: r.b_values.iter().map(|e| e.to_string()).collect(),
                reduced: r.reduced.iter().map(text).collect(),
                first_order_el: r.first_order_el.iter().map(text).collect(),
                agrees: r.agrees,
            });
        }
    }

    Ok(Report {
        spec: SpecRecord { m: spec.m, n: spec.n, k: spec.k },
        seed,
        lagrangian: text(l),
        fields: catalog
            .fields()
            .iter()
            .map(|f| FieldRecord {
                name: f.name.clone(),
                depends: f.depends.iter().map(|&i| CoordId::Base(i).to_string()).collect(),
                definition: problem.field_values.get(&f.name).map(text),
            })
            .collect(),
        catalog: catalog.names(),
        equations,
        hessian: hessian_record,
        regular_at_samples,
        omega2_kernel_dims,
        classification,
        column_selection,
        euler_lagrange: el_text,
        oracle,
        first_as_second: replay,
        flags,
        consistency_failures: failures,
    })
}

fn sample_points(problem: &Problem, seed: u64, failures: &mut Vec<String>) -> Result<Samples> {
    let spec = problem.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(problem.samples);
    for s in 0..problem.samples {
        let pt = on_constraint_point(&problem.catalog, &problem.lagrangian, &problem.field_values, &problem.fixed, &mut rng)?;
        let regular = is_regular_at(&problem.lagrangian, spec, &pt, &problem.field_values)?;
        let kernel_dim = if spec.m >= 2 {
            let d = omega2_kernel_dim_at(&problem.lagrangian, &problem.catalog, &pt, &problem.field_values)?;
            if (d == 0) != regular {
                failures.push(format!(
                    "sample {}: kernel dimension {d} disagrees with regularity {regular}",
                    s + 1
                ));
            }
            Some(d)
        } else {
            None
        };
        let point = point_record(&pt).into_iter().map(|(k, v)| (k, num(v))).collect();
        points.push(SampleRecord { point, regular, kernel_dim });
    }
    Ok(Samples { seed, points })
}

/// `Σ c_J x^J` over `|J| <= degree` with `c_J = numerators[..] / denominator`.
fn random_polynomial(rng: &mut ChaCha8Rng, m: usize, degree: u32, range: i64, denominator: i64) -> Expr {
    let terms = multiindex::enumerate_up_to(m, degree).into_iter().map(|j| {
        let c = rng.gen_range(-range..=range);
        let mono = Expr::product(
            j.components().iter().enumerate().map(|(i, &e)| Expr::Atom(CoordId::Base(i)).powi(e as i32)),
        );
        Expr::ratio(c, denominator) * mono
    });
    Expr::sum(terms)
}

fn oracle_trial(problem: &Problem, seed: u64, trial: usize) -> Result<OracleRecord> {
    let spec: BundleSpec = problem.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sections: Vec<Expr> = (0..spec.n)
        .map(|alpha| match &problem.section {
            Some(given) if trial == 0 => given[alpha].clone(),
            Some(given) => &given[alpha] + &random_polynomial(&mut rng, spec.m, 2, 1, 16),
            None => random_polynomial(&mut rng, spec.m, 3, 2, 4),
        })
        .collect();
    let factors: Vec<Expr> = (0..spec.n)
        .map(|alpha| match &problem.variation {
            Some(given) if trial == 0 => given[alpha].clone(),
            _ => Expr::one() + random_polynomial(&mut rng, spec.m, 1, 1, 2),
        })
        .collect();
    let section_text = sections.iter().map(text).collect();
    let variation_text = factors.iter().map(text).collect();
    let s = SectionFn::new(sections)?;
    let psi = bump_variation(spec, &problem.domain, factors)?;
    let mut record = OracleRecord {
        seed,
        section: section_text,
        variation: variation_text,
        lhs: None,
        rhs: None,
        rel_err: None,
        grid: None,
        eps: None,
        diagnostic: None,
    };
    match gateaux_oracle(&problem.lagrangian, spec, &s, &psi, &problem.domain, &problem.field_values) {
        Ok(r) => {
            record.lhs = Some(num(r.lhs));
            record.rhs = Some(num(r.rhs));
            record.rel_err = Some(num(r.rel_err));
            record.grid = Some(r.grid);
            record.eps = Some(num(r.eps));
        }
        Err(Error::Oracle(msg)) => record.diagnostic = Some(msg),
        Err(e) => return Err(e),
    }
    Ok(record)
}

/// Human-readable rendering of a report.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "bundle m={} n={} k={}   seed {}", r.spec.m, r.spec.n, r.spec.k, r.seed);
    let _ = writeln!(out, "L = {}", r.lagrangian);
    for f in &r.fields {
        let def = f.definition.as_deref().unwrap_or("(undefined)");
        let _ = writeln!(out, "field {}({}) = {def}", f.name, f.depends.join(", "));
    }
    let _ = writeln!(out, "\ncatalog ({}): {}", r.catalog.len(), r.catalog.join(" "));
    let sections = [
        ("dynamical equations", &r.equations.dynamical),
        ("W2", &r.equations.w2),
        ("tangency", &r.equations.tangency),
        ("C coefficients", &r.equations.c),
    ];
    for (title, eqs) in sections {
        if eqs.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n{title}:");
        for e in eqs {
            let _ = writeln!(out, "  [{}] {} = {}", e.tag, e.lhs, e.rhs);
        }
    }
    let _ = writeln!(out, "\nhessian over {}:", r.hessian.labels.join(", "));
    for row in &r.hessian.entries {
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
    if let Some(s) = &r.regular_at_samples {
        let regular: Vec<&str> = s.points.iter().map(|p| if p.regular { "regular" } else { "singular" }).collect();
        let _ = writeln!(out, "samples (seed {}): {}", s.seed, regular.join(", "));
    }
    if let Some(d) = &r.omega2_kernel_dims {
        let dims: Vec<String> = d.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "kernel dimensions: {}", dims.join(", "));
    }
    let c = &r.classification;
    let _ = writeln!(out, "\nB system: {} unknowns, {} equations, {}", c.b_unknowns, c.b_equations, c.verdict);
    if let Some(sel) = &r.column_selection {
        let _ = writeln!(out, "column selection verified: {} ({:?})", sel.verified, sel.certificate);
        for (row, col) in sel.rows.iter().zip(&sel.selected_columns) {
            let _ = writeln!(out, "  {row} -> {col}");
        }
    }
    let _ = writeln!(out, "\nEuler-Lagrange:");
    for (a, e) in r.euler_lagrange.iter().enumerate() {
        let _ = writeln!(out, "  EL[{}] = {e}", a + 1);
    }
    for (t, o) in r.oracle.iter().enumerate() {
        match (&o.rel_err, &o.diagnostic) {
            (Some(e), _) => {
                let _ = writeln!(out, "oracle {}: rel_err {e} on {} panels", t + 1, o.grid.unwrap_or(0));
            }
            (None, Some(d)) => {
                let _ = writeln!(out, "oracle {}: {d}", t + 1);
            }
            _ => {}
        }
    }
    if let Some(rp) = &r.first_as_second {
        let _ = writeln!(out, "\nfirst-order replay agrees: {}", rp.agrees);
        for e in &rp.reduced {
            let _ = writeln!(out, "  reduced: {e} = 0");
        }
    }
    if !r.flags.is_empty() {
        let _ = writeln!(out, "\nflags:");
        for f in &r.flags {
            let _ = writeln!(out, "  {f}");
        }
    }
    if !r.consistency_failures.is_empty() {
        let _ = writeln!(out, "\nCONSISTENCY FAILURES:");
        for f in &r.consistency_failures {
            let _ = writeln!(out, "  {f}");
        }
    }
    out
}

const FLOAT_TOL: f64 = 1e-6;
// Quantities this small (relative errors, residuals) are roundoff.
const FLOAT_FLOOR: f64 = 1e-8;

fn float_text(s: &str) -> Option<f64> {
    if s.contains('e') {
        s.parse().ok()
    } else {
        None
    }
}

/// Differences between two reports, one line per mismatch. Numbers written
/// as text compare with a relative tolerance so goldens survive last-digit
/// drift between platforms.
pub fn diff_reports(expected: &Value, actual: &Value) -> Vec<String> {
    let mut out = Vec::new();
    diff_at("", expected, actual, &mut out);
    out
}

fn diff_at(path: &str, e: &Value, a: &Value, out: &mut Vec<String>) {
    match (e, a) {
        (Value::Object(eo), Value::Object(ao)) => {
            for (k, ev) in eo {
                let p = format!("{path}/{k}");
                match ao.get(k) {
                    Some(av) => diff_at(&p, ev, av, out),
                    None => out.push(format!("{p}: missing")),
                }
            }
            for k in ao.keys().filter(|k| !eo.contains_key(*k)) {
                out.push(format!("{path}/{k}: unexpected"));
            }
        }
        (Value::Array(ea), Value::Array(aa)) => {
            if ea.len() != aa.len() {
                out.push(format!("{path}: length {} != {}", aa.len(), ea.len()));
            }
            for (i, (ev, av)) in ea.iter().zip(aa).enumerate() {
                diff_at(&format!("{path}/{i}"), ev, av, out);
            }
        }
        (Value::String(es), Value::String(as_)) => {
            if es == as_ {
                return;
            }
            if let (Some(x), Some(y)) = (float_text(es), float_text(as_)) {
                let scale = x.abs().max(y.abs());
                if (x - y).abs() <= FLOAT_TOL * scale || scale < FLOAT_FLOOR {
                    return;
                }
            }
            out.push(format!("{path}: got {as_:?}, expected {es:?}"));
        }
        _ if e == a => {}
        _ => out.push(format!("{path}: got {a}, expected {e}")),
    }
}
