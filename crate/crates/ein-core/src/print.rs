//! Canonical surface text. `parse_in(print(e), Γ) == e` when the field
//! identifiers of `e` are exactly the `FLD` entries of `Γ`.

use alloc::string::{String, ToString};
use core::fmt::{self, Write as _};

use num_traits::{One, Signed};

use crate::expr::{BinOp, Expr, UnOp};
use crate::index::IndexTerm;

const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_NEG: u8 = 3;
const P_PROBE: u8 = 4;
const P_ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => P_ADD,
        Expr::Binary(..) => P_MUL,
        Expr::Unary(UnOp::Neg, _) => P_NEG,
        Expr::Const(c) if c.is_negative() => P_NEG,
        Expr::Probe(..) => P_PROBE,
        _ => P_ATOM,
    }
}

pub(crate) fn write_indices(out: &mut String, items: &[IndexTerm]) {
    for (k, t) in items.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{t}");
    }
}

fn write_at(out: &mut String, e: &Expr, min: u8) {
    if prec(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Const(c) => {
            let _ = if c.denom().is_one() {
                write!(out, "{}", c.numer())
            } else {
                write!(out, "{}/{}", c.numer(), c.denom())
            };
        }
        Expr::Tensor(n, a) | Expr::Field(n, a) => {
            out.push_str(n);
            out.push('[');
            write_indices(out, a);
            out.push(']');
        }
        Expr::Conv { image, alpha, kernel, beta } => {
            let _ = write!(out, "conv({image},[");
            write_indices(out, alpha);
            let _ = write!(out, "],{kernel},[");
            write_indices(out, beta);
            out.push_str("])");
        }
        Expr::Delta(i, j) => {
            let _ = write!(out, "delta({i},{j})");
        }
        Expr::Eps(a) => {
            out.push_str("eps(");
            write_indices(out, a);
            out.push(')');
        }
        Expr::Sum { var, bound, body } => {
            let _ = write!(out, "sum({var},1,{bound}, ");
            write_expr(out, body);
            out.push(')');
        }
        Expr::Partial(nu, body) => {
            out.push_str("d(");
            if nu.len() == 1 {
                let _ = write!(out, "{}", nu[0]);
            } else {
                out.push('[');
                write_indices(out, nu);
                out.push(']');
            }
            out.push_str(", ");
            write_expr(out, body);
            out.push(')');
        }
        Expr::Probe(f, x) => {
            write_at(out, f, P_PROBE);
            out.push_str(" @ ");
            write_at(out, x, P_ATOM);
        }
        Expr::Lift(d, body) => {
            let _ = write!(out, "lift({d}, ");
            write_expr(out, body);
            out.push(')');
        }
        Expr::Unary(UnOp::Neg, body) => {
            let mut inner = String::new();
            write_at(&mut inner, body, P_NEG);
            out.push('-');
            // `-3` would read back as a negative literal.
            if inner.starts_with(|c: char| c.is_ascii_digit()) {
                out.push('(');
                out.push_str(&inner);
                out.push(')');
            } else {
                out.push_str(&inner);
            }
        }
        Expr::Unary(UnOp::Pow(n), body) => {
            out.push_str("pow(");
            write_expr(out, body);
            let _ = write!(out, ", {n})");
        }
        Expr::Unary(op, body) => {
            out.push_str(op.name());
            out.push('(');
            write_expr(out, body);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            let p = prec(e);
            write_at(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_at(out, b, p + 1);
        }
    }
}

pub fn print(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

impl Expr {
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(print(&Expr::delta("i", "j")), "delta(i,j)");
        assert_eq!(print(&Expr::partial(&["i"], Expr::field("F", &[]))), "d(i, F[])");
        assert_eq!(print(&Expr::probe(Expr::lift(2, Expr::int(1)), Expr::tensor("x", &[]))), "lift(2, 1) @ x[]");
    }

    #[test]
    fn negation_and_literals_stay_apart() {
        assert_eq!(print(&Expr::neg(Expr::int(3))), "-(3)");
        assert_eq!(print(&Expr::int(-3)), "-3");
        assert_eq!(print(&Expr::ratio(1, 2)), "1/2");
        assert_eq!(print(&Expr::sub(Expr::tensor("a", &[]), Expr::int(-3))), "a[] - -3");
    }

    #[test]
    fn parens_follow_associativity() {
        let a = || Expr::tensor("a", &[]);
        assert_eq!(print(&Expr::sub(a(), Expr::sub(a(), a()))), "a[] - (a[] - a[])");
        assert_eq!(print(&Expr::sub(Expr::sub(a(), a()), a())), "a[] - a[] - a[]");
        assert_eq!(print(&Expr::mul(Expr::add(a(), a()), a())), "(a[] + a[]) * a[]");
        assert_eq!(print(&Expr::probe(Expr::neg(a()), a())), "(-a[]) @ a[]");
    }
}
