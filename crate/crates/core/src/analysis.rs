//! Regularity of the Lagrangian, counting and selection arguments for the
//! `B` coefficients, and the numeric kernel of the form restricted to the
//! final constraint submanifold.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jetmodel::{BundleSpec, CoordCatalog};
use crate::multiindex::{self, binomial, MultiIndex};
use crate::srassembler::{check_lagrangian, hamiltonian_h0, omega_h0, w1_elimination, w1_functions};
use crate::symexpr::{CoordId, Expr, FieldValues, Point, Substitution};

/// Relative singular-value cutoff used for every numeric rank.
pub const RANK_CUTOFF: f64 = 1e-8;

/// Largest constraint residual tolerated at a supplied point.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Second derivatives of `L` in the top-order jets.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianMatrix {
    /// `(alpha, K)` with `|K| = k`, fiber-major, graded-lex within a fiber.
    pub labels: Vec<(usize, MultiIndex)>,
    pub entries: Vec<Vec<Expr>>,
}

impl HessianMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn evaluate(&self, point: &Point, fields: &FieldValues) -> Result<DMatrix<f64>> {
        let n = self.size();
        let mut out = DMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = self.entries[r][c].evaluate(point, fields)?;
            }
        }
        Ok(out)
    }

    /// Entries as text, row by row.
    pub fn render(&self) -> Vec<Vec<String>> {
        self.entries.iter().map(|row| row.iter().map(|e| e.to_string()).collect()).collect()
    }
}

pub fn highest_hessian(l: &Expr, spec: BundleSpec) -> Result<HessianMatrix> {
    let top = spec.jets_of_order(spec.k);
    let labels = top
        .iter()
        .map(|c| match c {
            CoordId::Jet { alpha, index } => (*alpha, index.clone()),
            _ => unreachable!(),
        })
        .collect();
    let mut entries = Vec::with_capacity(top.len());
    for a in &top {
        let da = l.partial_normalized(a)?;
        let row = top.iter().map(|b| da.partial_normalized(b)).collect::<Result<Vec<_>>>()?;
        entries.push(row);
    }
    Ok(HessianMatrix { labels, entries })
}

/// Numeric rank with the relative cutoff [`RANK_CUTOFF`].
pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_CUTOFF * max).count()
}

pub fn is_regular_at(l: &Expr, spec: BundleSpec, point: &Point, fields: &FieldValues) -> Result<bool> {
    let h = highest_hessian(l, spec)?;
    let numeric = h.evaluate(point, fields)?;
    Ok(numeric_rank(&numeric) == h.size())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Overdetermined,
    ExactlyDetermined,
    UnderdeterminedMaximalRank,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Overdetermined => "overdetermined",
            Verdict::ExactlyDetermined => "exactly-determined",
            Verdict::UnderdeterminedMaximalRank => "underdetermined-maximal-rank",
        })
    }
}

/// Size of the linear system for the top `B` coefficients (one fiber).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub b_unknowns: usize,
    pub b_equations: usize,
    pub verdict: Verdict,
}

pub fn classify_b_system(spec: BundleSpec) -> Classification {
    let (m, k) = (spec.m as u64, spec.k as u64);
    let b_unknowns = (binomial(m - 1 + k - 1, m - 1) * m * m) as usize;
    let b_equations = (binomial(m - 1 + k, m - 1) * m + binomial(m - 1 + k - 1, m - 1)) as usize;
    let verdict = if k == 1 || m == 1 {
        Verdict::Overdetermined
    } else if k == 2 && m == 2 {
        Verdict::ExactlyDetermined
    } else {
        Verdict::UnderdeterminedMaximalRank
    };
    Classification { b_unknowns, b_equations, verdict }
}

/// Unknown `B^{I,i}_j` with `|I| = k-1`, as a column of the `B` system.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnLabel {
    pub i: usize,
    pub j: usize,
    pub index: MultiIndex,
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.i + 1, self.j + 1, self.index)
    }
}

/// An equation of the `B` system.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowLabel {
    /// Tangency along `x^j` of the top constraint for `K`.
    Tangency { j: usize, k: MultiIndex },
    /// Trace equation for `J` with `|J| = k-1`.
    Trace { j: MultiIndex },
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowLabel::Tangency { j, k } => write!(f, "({},{k})", j + 1),
            RowLabel::Trace { j } => write!(f, "{j}"),
        }
    }
}

/// Coefficient of column `col` in row `row`.
pub fn b_entry(row: &RowLabel, col: &ColumnLabel) -> u8 {
    match row {
        RowLabel::Tangency { j, k } => (col.j == *j && col.index.raised(col.i) == *k) as u8,
        RowLabel::Trace { j } => (col.i == col.j && col.index == *j) as u8,
    }
}

fn b_rows(spec: BundleSpec) -> Vec<RowLabel> {
    let mut rows = Vec::new();
    for j in 0..spec.m {
        for k in multiindex::enumerate(spec.m, spec.k) {
            rows.push(RowLabel::Tangency { j, k });
        }
    }
    for j in multiindex::enumerate(spec.m, spec.k - 1) {
        rows.push(RowLabel::Trace { j });
    }
    rows
}

fn b_columns(spec: BundleSpec) -> Vec<ColumnLabel> {
    let mut cols = Vec::new();
    for index in multiindex::enumerate(spec.m, spec.k - 1) {
        for i in 0..spec.m {
            for j in 0..spec.m {
                cols.push(ColumnLabel { i, j, index: index.clone() });
            }
        }
    }
    cols
}

/// The full 0/1 coefficient matrix of the `B` system (one fiber).
pub fn b_system_matrix(spec: BundleSpec) -> (Vec<RowLabel>, Vec<ColumnLabel>, Vec<Vec<u8>>) {
    let rows = b_rows(spec);
    let cols = b_columns(spec);
    let entries = rows.iter().map(|r| cols.iter().map(|c| b_entry(r, c)).collect()).collect();
    (rows, cols, entries)
}

/// Square submatrix of the `B` system chosen row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionMatrix {
    pub rows: Vec<RowLabel>,
    pub columns: Vec<ColumnLabel>,
    pub entries: Vec<Vec<u8>>,
    /// One line per row explaining the chosen column.
    pub trace: Vec<String>,
}

/// Picks one column per row of the `B` system: for a tangency row `(j, K)`
/// the decomposition of `K` when it is unique, otherwise one with `i != j`
/// (smallest such `i`); for a trace row `J`, the column `(m, m, J)` when
/// `J(1) = k-1` and `(1, 1, J)` otherwise.
pub fn select_b_columns(spec: BundleSpec) -> Result<SelectionMatrix> {
    if spec.m < 2 || spec.k < 2 {
        return Err(Error::usage(format!(
            "column selection needs m >= 2 and k >= 2 (got m={}, k={})",
            spec.m, spec.k
        )));
    }
    let rows = b_rows(spec);
    let mut columns = Vec::with_capacity(rows.len());
    let mut trace = Vec::with_capacity(rows.len());
    for row in &rows {
        let col = match row {
            RowLabel::Tangency { j, k } => {
                let g = k.decompositions();
                if let [(index, i)] = g.as_slice() {
                    trace.push(format!("row {row}: single decomposition"));
                    ColumnLabel { i: *i, j: *j, index: index.clone() }
                } else {
                    let Some((index, i)) = g.iter().find(|(_, i)| i != j) else {
                        return Err(Error::internal(format!("row {row}: no decomposition with i != j")));
                    };
                    trace.push(format!("row {row}: decomposition with i={} != j", i + 1));
                    ColumnLabel { i: *i, j: *j, index: index.clone() }
                }
            }
            RowLabel::Trace { j } => {
                let d = if j.get(0) == spec.k - 1 { spec.m - 1 } else { 0 };
                trace.push(format!("row {row}: diagonal slot {}", d + 1));
                ColumnLabel { i: d, j: d, index: j.clone() }
            }
        };
        columns.push(col);
    }
    let entries = rows.iter().map(|r| columns.iter().map(|c| b_entry(r, c)).collect()).collect();
    Ok(SelectionMatrix { rows, columns, entries, trace })
}

/// How nonsingularity was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    /// Peeling single-entry columns and rows left a permutation matrix.
    Elimination,
    /// Peeling stalled; exact integer elimination gave a nonzero determinant.
    IntegerDeterminant,
    Singular,
}

pub fn selection_certificate(sel: &SelectionMatrix) -> Certificate {
    let n = sel.entries.len();
    if sel.entries.iter().any(|r| r.len() != n) {
        return Certificate::Singular;
    }
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let e = &sel.entries;
    loop {
        let mut progress = false;
        // Columns with a single 1: expand along them.
        while let Some((ci, r)) = cols.iter().enumerate().find_map(|(ci, &c)| {
            let hits: Vec<usize> = rows.iter().copied().filter(|&r| e[r][c] == 1).collect();
            (hits.len() == 1).then(|| (ci, hits[0]))
        }) {
            cols.remove(ci);
            rows.retain(|&x| x != r);
            progress = true;
        }
        while let Some((ri, c)) = rows.iter().enumerate().find_map(|(ri, &r)| {
            let hits: Vec<usize> = cols.iter().copied().filter(|&c| e[r][c] == 1).collect();
            (hits.len() == 1).then(|| (ri, hits[0]))
        }) {
            rows.remove(ri);
            cols.retain(|&x| x != c);
            progress = true;
        }
        if rows.is_empty() || !progress {
            break;
        }
    }
    let permutation = rows.iter().all(|&r| cols.iter().filter(|&&c| e[r][c] == 1).count() == 1)
        && cols.iter().all(|&c| rows.iter().filter(|&&r| e[r][c] == 1).count() == 1);
    if permutation {
        return Certificate::Elimination;
    }
    if integer_determinant(&sel.entries).is_zero() {
        Certificate::Singular
    } else {
        Certificate::IntegerDeterminant
    }
}

pub fn verify_selection(sel: &SelectionMatrix) -> bool {
    selection_certificate(sel) != Certificate::Singular
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn integer_determinant(entries: &[Vec<u8>]) -> BigInt {
    let n = entries.len();
    let mut a: Vec<Vec<BigInt>> = entries.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        BigInt::one()
    } else {
        sign * &a[n - 1][n - 1]
    }
}

/// Exact rank of an integer matrix.
pub fn integer_rank(entries: &[Vec<u8>]) -> usize {
    let mut a: Vec<Vec<crate::Rational>> = entries
        .iter()
        .map(|r| r.iter().map(|&x| crate::Rational::from_integer(x.into())).collect())
        .collect();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(p, rank);
        for r in 0..rows {
            if r != rank && !a[r][c].is_zero() {
                let f = &a[r][c] / &a[rank][c];
                for cc in c..cols {
                    let v = &a[rank][cc] * &f;
                    a[r][cc] -= v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Coordinates solved for on the final constraint submanifold: the first
/// momentum of each top-order decomposition, and `p`.
fn dependent_values(catalog: &CoordCatalog, l: &Expr) -> Result<Substitution> {
    let mut dep = w1_elimination(catalog, l)?;
    let h0 = hamiltonian_h0(catalog, l)?;
    // H_0 = 0 solved for p, with the eliminated momenta substituted.
    let p_value = (Expr::Atom(CoordId::Scalar) - h0).substitute(&dep).normalize()?;
    dep.insert(CoordId::Scalar, p_value);
    Ok(dep)
}

/// A random point of the final constraint submanifold: free coordinates
/// uniform in `[1, 2]` (or taken from `fixed`), dependent ones solved for.
pub fn on_constraint_point<R: Rng>(
    catalog: &CoordCatalog,
    l: &Expr,
    fields: &FieldValues,
    fixed: &Point,
    rng: &mut R,
) -> Result<Point> {
    check_lagrangian(catalog, l)?;
    let dep = dependent_values(catalog, l)?;
    let mut pt = Point::new();
    for c in catalog.coords() {
        if !dep.contains_key(c) {
            let v = fixed.get(c).copied().unwrap_or_else(|| rng.gen_range(1.0..2.0));
            pt.insert(c.clone(), v);
        }
    }
    for (c, e) in &dep {
        let v = e.evaluate(&pt, fields)?;
        pt.insert(c.clone(), v);
    }
    Ok(pt)
}

/// A random point of the jet bundle with coordinates uniform in `[1, 2]`.
pub fn random_jet_point<R: Rng>(spec: BundleSpec, fixed: &Point, rng: &mut R) -> Point {
    let mut pt = Point::new();
    let coords = (0..spec.m).map(CoordId::Base).chain(spec.jets_up_to(spec.k));
    for c in coords {
        let v = fixed.get(&c).copied().unwrap_or_else(|| rng.gen_range(1.0..2.0));
        pt.insert(c, v);
    }
    pt
}

/// Largest absolute residual of the W1 and `H_0` constraints at `point`.
pub fn constraint_residual(catalog: &CoordCatalog, l: &Expr, point: &Point, fields: &FieldValues) -> Result<f64> {
    let mut worst: f64 = hamiltonian_h0(catalog, l)?.evaluate(point, fields)?.abs();
    for f in w1_functions(catalog, l)?.values() {
        worst = worst.max(f.evaluate(point, fields)?.abs());
    }
    Ok(worst)
}

fn m_subsets(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(m);
    fn rec(start: usize, d: usize, m: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == m {
            out.push(current.clone());
            return;
        }
        for s in start..d {
            current.push(s);
            rec(s + 1, d, m, current, out);
            current.pop();
        }
    }
    rec(0, d, m, &mut current, &mut out);
    out
}

fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        if a[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    det
}

/// Dimension of the kernel of `Ω_{H_0}` restricted to the tangent space of
/// the final constraint submanifold at `point`.
///
/// The tangent space is spanned by the graph of the solved-for coordinates
/// over the free ones; the kernel is the null space of
/// `v ↦ (i_v Ω_{H_0})(t_{s_1}, …, t_{s_m})` over all `m`-subsets of the basis.
pub fn omega2_kernel_dim_at(l: &Expr, catalog: &CoordCatalog, point: &Point, fields: &FieldValues) -> Result<usize> {
    let spec = catalog.spec();
    if spec.m < 2 {
        return Err(Error::precondition("the kernel check needs a base of dimension at least 2"));
    }
    check_lagrangian(catalog, l)?;
    if let Some(c) = catalog.coords().iter().find(|c| !point.contains_key(c)) {
        return Err(Error::precondition(format!("point does not assign `{c}`")));
    }
    let residual = constraint_residual(catalog, l, point, fields)?;
    if residual >= CONSTRAINT_TOL {
        return Err(Error::precondition(format!(
            "point is off the constraint submanifold (residual {residual:e})"
        )));
    }

    let dep = dependent_values(catalog, l)?;
    let free: Vec<&CoordId> = catalog.coords().iter().filter(|c| !dep.contains_key(c)).collect();
    let n = catalog.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(free.len());
    for f in &free {
        let mut v = vec![0.0; n];
        v[catalog.position(f).unwrap()] = 1.0;
        for (d, g) in &dep {
            let slope = g.partial(f);
            if !slope.is_zero_literal() {
                v[catalog.position(d).unwrap()] = slope.evaluate(point, fields)?;
            }
        }
        basis.push(v);
    }

    let omega = omega_h0(catalog, l)?;
    let mut monomials: Vec<(Vec<usize>, f64)> = Vec::new();
    for (mono, coef) in omega.terms() {
        let value = coef.evaluate(point, fields)?;
        if value != 0.0 {
            let idx = mono.iter().map(|c| catalog.position(c).expect("form lives on the catalog")).collect();
            monomials.push((idx, value));
        }
    }
    let eval = |vectors: &[&Vec<f64>]| -> f64 {
        monomials
            .iter()
            .map(|(idx, c)| {
                let mat: Vec<Vec<f64>> = vectors.iter().map(|v| idx.iter().map(|&k| v[k]).collect()).collect();
                c * determinant(mat)
            })
            .sum()
    };

    let d = basis.len();
    let subsets = m_subsets(d, spec.m);
    let mut matrix = DMatrix::zeros(subsets.len(), d);
    for (r, s) in subsets.iter().enumerate() {
        for a in 0..d {
            if s.contains(&a) {
                continue;
            }
            let mut vectors = vec![&basis[a]];
            vectors.extend(s.iter().map(|&i| &basis[i]));
            matrix[(r, a)] = eval(&vectors);
        }
    }
    Ok(d - numeric_rank(&matrix))
}

/// Coordinate values keyed by printed name, for reports.
pub fn point_record(point: &Point) -> BTreeMap<String, f64> {
    point.iter().map(|(c, v)| (c.to_string(), *v)).collect()
}
