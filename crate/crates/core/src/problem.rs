//! The line-oriented problem file.
//!
//! ```text
//! # thin plate under a unit load
//! m = 2
//! n = 1
//! k = 2
//! field q(x[1], x[2]) = 1
//! lagrangian = 1/2*(u[2,0]^2 + 2*u[1,1]^2 + u[0,2]^2 - 2*q*u[0,0])
//! section@1 = x[1]^3 - x[1]*x[2]^2
//! variation@1 = 1 + x[1]
//! point = u[1,0] = 1
//! box = 1:2, 1:2
//! samples = 5
//! oracle_trials = 3
//! ```
//!
//! Keys may appear in any order; `#` starts a comment. A field may be
//! declared without `= definition`, in which case the numeric checks are
//! skipped.

use std::collections::BTreeMap;

use crate::eleuler::BoxDomain;
use crate::error::{Error, Result};
use crate::jetmodel::{BundleSpec, CoordCatalog, FieldDecl};
use crate::symexpr::{parse, CoordId, Expr, FieldValues, Point};

#[derive(Clone, Debug)]
pub struct Problem {
    pub catalog: CoordCatalog,
    pub lagrangian: Expr,
    /// Definitions of external fields as functions of the base variables.
    /// Fields without one make the numeric checks unavailable.
    pub field_values: FieldValues,
    /// One expression per fiber index, when given.
    pub section: Option<Vec<Expr>>,
    /// Polynomial factor multiplying the boundary bump, per fiber index.
    pub variation: Option<Vec<Expr>>,
    /// Coordinates held fixed at every sampled point.
    pub fixed: Point,
    pub domain: BoxDomain,
    pub samples: usize,
    pub oracle_trials: usize,
}

impl Problem {
    pub fn spec(&self) -> BundleSpec {
        self.catalog.spec()
    }

    /// Names of declared fields that have no definition.
    pub fn undefined_fields(&self) -> Vec<String> {
        self.catalog
            .fields()
            .iter()
            .filter(|f| !self.field_values.contains_key(&f.name))
            .map(|f| f.name.clone())
            .collect()
    }
}

const DEFAULT_SAMPLES: usize = 5;
const DEFAULT_TRIALS: usize = 3;

struct Line<'a> {
    number: usize,
    offset: usize,
    key: &'a str,
    value: &'a str,
    value_offset: usize,
}

fn err(line: &Line, msg: impl std::fmt::Display) -> Error {
    Error::Parse { pos: line.offset, msg: format!("line {}: {msg}", line.number) }
}

/// Re-anchors an expression parse error to the file.
fn at(line: &Line, e: Error) -> Error {
    match e {
        Error::Parse { pos, msg } => {
            Error::Parse { pos: line.value_offset + pos, msg: format!("line {}: {msg}", line.number) }
        }
        other => other,
    }
}

fn split_lines(text: &str) -> Result<Vec<Line<'_>>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (i, raw) in text.split('\n').enumerate() {
        let start = offset;
        offset += raw.len() + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            // A field may be declared without a definition.
            if content.trim_start().starts_with("field") {
                out.push(Line { number: i + 1, offset: start, key: content.trim(), value: "", value_offset: offset - 1 });
                continue;
            }
            return Err(Error::Parse { pos: start, msg: format!("line {}: expected `key = value`", i + 1) });
        };
        let key = content[..eq].trim();
        let rest = &content[eq + 1..];
        let lead = rest.len() - rest.trim_start().len();
        out.push(Line { number: i + 1, offset: start, key, value: rest.trim(), value_offset: start + eq + 1 + lead });
    }
    Ok(out)
}

fn parse_count(line: &Line) -> Result<usize> {
    line.value.parse::<usize>().map_err(|_| err(line, format!("`{}` expects a natural number", line.key)))
}

fn parse_number(text: &str) -> Option<f64> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once('/') {
        let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (b != 0.0).then(|| a / b);
    }
    text.parse().ok().filter(|v: &f64| v.is_finite())
}

/// `field q(x[1], x[2])`, returning the name and the 0-based directions.
fn parse_field_header(line: &Line, m: usize) -> Result<FieldDecl> {
    let head = line.key.strip_prefix("field").ok_or_else(|| err(line, "malformed field declaration"))?.trim();
    let (name, args) = match head.split_once('(') {
        Some((name, rest)) => {
            let args = rest.strip_suffix(')').ok_or_else(|| err(line, "missing `)` in field declaration"))?;
            (name.trim(), args)
        }
        None => (head, ""),
    };
    let mut depends = Vec::new();
    for arg in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
        let idx = arg
            .strip_prefix("x[")
            .and_then(|a| a.strip_suffix(']'))
            .and_then(|a| a.trim().parse::<usize>().ok())
            .filter(|&i| (1..=m).contains(&i))
            .ok_or_else(|| err(line, format!("field argument `{arg}` is not a base variable x[1..={m}]")))?;
        depends.push(idx - 1);
    }
    Ok(FieldDecl { name: name.to_string(), depends })
}

fn parse_fiber_key(line: &Line, prefix: &str, n: usize) -> Result<usize> {
    let alpha = match line.key.strip_prefix(prefix) {
        Some("") => 1,
        Some(rest) => rest
            .strip_prefix('@')
            .and_then(|a| a.parse::<usize>().ok())
            .ok_or_else(|| err(line, format!("malformed key `{}`", line.key)))?,
        None => unreachable!(),
    };
    if !(1..=n).contains(&alpha) {
        return Err(err(line, format!("fiber index {alpha} outside 1..={n}")));
    }
    Ok(alpha - 1)
}

fn parse_box(line: &Line, m: usize) -> Result<BoxDomain> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in line.value.split(',') {
        let (a, b) = part.split_once(':').ok_or_else(|| err(line, "box axes are written `lo:hi`"))?;
        let (a, b) = (parse_number(a), parse_number(b));
        match (a, b) {
            (Some(a), Some(b)) if a < b => {
                lo.push(a);
                hi.push(b);
            }
            _ => return Err(err(line, format!("bad box axis `{}`", part.trim()))),
        }
    }
    if lo.len() != m {
        return Err(err(line, format!("box has {} axes, base dimension is {m}", lo.len())));
    }
    Ok(BoxDomain { lo, hi })
}

/// Splits on commas outside brackets.
fn split_top(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

fn parse_point(line: &Line, catalog: &CoordCatalog, fixed: &mut Point) -> Result<()> {
    for part in split_top(line.value) {
        let (name, value) = part.split_once('=').ok_or_else(|| err(line, "points are written `coord = value, ...`"))?;
        let coord = match parse(name.trim(), catalog).map_err(|e| err(line, e))? {
            Expr::Atom(c) if catalog.contains(&c) => c,
            _ => return Err(err(line, format!("`{}` is not a coordinate", name.trim()))),
        };
        let value = parse_number(value).ok_or_else(|| err(line, format!("bad number `{}`", value.trim())))?;
        fixed.insert(coord, value);
    }
    Ok(())
}

/// Reads a problem file.
pub fn parse_problem(text: &str) -> Result<Problem> {
    let lines = split_lines(text)?;
    let mut dims: BTreeMap<&str, usize> = BTreeMap::new();
    for line in &lines {
        if matches!(line.key, "m" | "n" | "k") {
            if dims.insert(line.key, parse_count(line)?).is_some() {
                return Err(err(line, format!("`{}` given twice", line.key)));
            }
        }
    }
    let get = |key: &str| {
        dims.get(key).copied().ok_or_else(|| Error::Parse { pos: 0, msg: format!("missing `{key} =` line") })
    };
    let (m, n, k) = (get("m")?, get("n")?, get("k")?);
    let spec = BundleSpec::new(m, n, k as u32).map_err(|e| Error::Parse { pos: 0, msg: e.to_string() })?;

    let mut decls = Vec::new();
    for line in lines.iter().filter(|l| l.key.starts_with("field ") || l.key.starts_with("field(")) {
        decls.push(parse_field_header(line, m)?);
    }
    let catalog = CoordCatalog::with_fields(spec, decls).map_err(|e| Error::Parse { pos: 0, msg: e.to_string() })?;

    let mut lagrangian = None;
    let mut field_values = FieldValues::new();
    let mut section: Vec<Option<Expr>> = vec![None; n];
    let mut variation: Vec<Option<Expr>> = vec![None; n];
    let mut fixed = Point::new();
    let mut domain = None;
    let mut samples = DEFAULT_SAMPLES;
    let mut oracle_trials = DEFAULT_TRIALS;

    for line in &lines {
        let expr = || parse(line.value, &catalog).map_err(|e| at(line, e));
        match line.key {
            "m" | "n" | "k" => {}
            "lagrangian" => {
                if lagrangian.replace(expr()?).is_some() {
                    return Err(err(line, "`lagrangian` given twice"));
                }
            }
            "samples" => samples = parse_count(line)?,
            "oracle_trials" => oracle_trials = parse_count(line)?,
            "box" => domain = Some(parse_box(line, m)?),
            "point" => parse_point(line, &catalog, &mut fixed)?,
            key if key.starts_with("field") => {
                if line.value.is_empty() {
                    continue;
                }
                let decl = parse_field_header(line, m)?;
                let value = expr()?;
                if let Some(bad) = value.atoms().into_iter().find(|a| !matches!(a, CoordId::Base(_))) {
                    return Err(err(line, format!("field definitions may only use base variables, found `{bad}`")));
                }
                field_values.insert(decl.name, value);
            }
            key if key.starts_with("section") => {
                let alpha = parse_fiber_key(line, "section", n)?;
                section[alpha] = Some(expr()?);
            }
            key if key.starts_with("variation") => {
                let alpha = parse_fiber_key(line, "variation", n)?;
                variation[alpha] = Some(expr()?);
            }
            other => return Err(err(line, format!("unknown key `{other}`"))),
        }
    }

    let lagrangian = lagrangian.ok_or_else(|| Error::Parse { pos: 0, msg: "missing `lagrangian =` line".into() })?;
    let complete = |parts: Vec<Option<Expr>>, what: &str| -> Result<Option<Vec<Expr>>> {
        if parts.iter().all(Option::is_none) {
            return Ok(None);
        }
        parts
            .into_iter()
            .enumerate()
            .map(|(a, p)| p.ok_or_else(|| Error::Parse { pos: 0, msg: format!("missing `{what}@{}`", a + 1) }))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    };
    Ok(Problem {
        lagrangian,
        field_values,
        section: complete(section, "section")?,
        variation: complete(variation, "variation")?,
        fixed,
        domain: domain.unwrap_or_else(|| BoxDomain::unit_shifted(m)),
        samples,
        oracle_trials,
        catalog,
    })
}
