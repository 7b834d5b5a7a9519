use std::fmt;

use num_traits::{One, Signed};

use super::{starts_negative, Expr};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Neg,
    Product,
    Atom,
}

fn wrap(s: (String, Prec), min: Prec) -> String {
    if s.1 < min {
        format!("({})", s.0)
    } else {
        s.0
    }
}

fn render(e: &Expr) -> (String, Prec) {
    match e {
        Expr::Const(c) => {
            let prec = if c.is_negative() {
                Prec::Neg
            } else if c.is_integer() {
                Prec::Atom
            } else {
                Prec::Product
            };
            (c.to_string(), prec)
        }
        Expr::Atom(v) => (v.to_string(), Prec::Atom),
        Expr::Pow(b, n) => {
            let base = wrap(render(b), Prec::Atom);
            let base = if matches!(**b, Expr::Pow(..)) { format!("({base})") } else { base };
            match *n {
                1 => (base, Prec::Atom),
                n if n > 0 => (format!("{base}^{n}"), Prec::Atom),
                -1 => (format!("1/{base}"), Prec::Product),
                n => (format!("1/{base}^{}", -n), Prec::Product),
            }
        }
        Expr::Product(fs) => render_product(fs),
        Expr::Sum(ts) => {
            let mut out = String::new();
            for (k, t) in ts.iter().enumerate() {
                if k == 0 {
                    out.push_str(&wrap(render(t), Prec::Neg));
                } else if starts_negative(t) {
                    out.push_str(" - ");
                    out.push_str(&wrap(render(&-t.clone()), Prec::Product));
                } else {
                    out.push_str(" + ");
                    out.push_str(&wrap(render(t), Prec::Neg));
                }
            }
            (out, Prec::Sum)
        }
    }
}

fn render_product(fs: &[Expr]) -> (String, Prec) {
    let mut negative = false;
    let mut parts: Vec<String> = Vec::new();
    let mut dens: Vec<String> = Vec::new();
    for (k, f) in fs.iter().enumerate() {
        match f {
            Expr::Const(c) if k == 0 => {
                let a = c.abs();
                negative = c.is_negative();
                if !a.is_one() {
                    parts.push(a.to_string());
                }
            }
            Expr::Pow(b, n) if *n < 0 => {
                let base = wrap(render(b), Prec::Atom);
                dens.push(if *n == -1 { base } else { format!("{base}^{}", -n) });
            }
            other => {
                let r = render(other);
                let min = if k == 0 && parts.is_empty() { Prec::Product } else { Prec::Atom };
                parts.push(wrap(r, min));
            }
        }
    }
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if parts.is_empty() {
        out.push('1');
    } else {
        out.push_str(&parts.join("*"));
    }
    for d in dens {
        out.push('/');
        out.push_str(&d);
    }
    (out, if negative { Prec::Neg } else { Prec::Product })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self).0)
    }
}
