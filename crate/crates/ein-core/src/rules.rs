//! The rewrite rule catalog.
//!
//! Groups: A index rules (ε, δ), B probe distribution, C differentiation,
//! D zero and sign cleanup, E division and summation algebra. Priority is
//! catalog order.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::expr::{BinOp, Expr, UnOp};
use crate::index::{IndexCtx, IndexTerm, Kind, SurfaceType, TypeEnv};
use crate::scope::{self, classify_product, product_body_ctx, Product};
use crate::types::kind_of;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId {
    pub group: char,
    pub num: u8,
    /// Number in the unified `R1..R42` scheme, where one exists.
    pub alias: Option<u8>,
}

impl RuleId {
    const fn new(group: char, num: u8, alias: Option<u8>) -> Self {
        RuleId { group, num, alias }
    }

    pub fn alias_name(&self) -> Option<String> {
        self.alias.map(|a| alloc::format!("R{a}"))
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.group, self.num)
    }
}

/// A catalog entry. The strings are documentation; [`apply`] is the
/// executable form.
#[derive(Clone, Copy, Debug)]
pub struct RuleInfo {
    pub id: RuleId,
    pub lhs: &'static str,
    pub rhs: &'static str,
    pub side: &'static str,
}

const fn r(
    group: char,
    num: u8,
    alias: Option<u8>,
    lhs: &'static str,
    rhs: &'static str,
    side: &'static str,
) -> RuleInfo {
    RuleInfo { id: RuleId::new(group, num, alias), lhs, rhs, side }
}

static CATALOG: &[RuleInfo] = &[
    r('A', 1, Some(35), "ε_ijk * ε_ilm", "δ_jl*δ_km - δ_jm*δ_kl", "exactly one shared index, contracted; any position"),
    r('A', 3, Some(34), "ε_ijk * V⊛H^{..j..k..}", "lift(0)", "two contracted ε indices in β"),
    r('A', 4, Some(33), "ε_ijk * ∂_{..j..k..} e", "lift(0)", "two contracted ε indices in ν"),
    r('A', 5, Some(36), "δ_ij * T_{..j..}", "T_{..i..}", "δ-application"),
    r('A', 6, Some(37), "δ_ij * F_{..j..}", "F_{..i..}", "δ-application"),
    r('A', 7, Some(40), "δ_ij * ∂_ν e", "(∂_ν e)[j:=i]", "δ-application"),
    r('A', 8, Some(38), "δ_ij * V_α⊛H^β", "(V_α⊛H^β)[j:=i]", "δ-application"),
    r('A', 9, Some(39), "δ_ij * (V_α⊛H^β)@x", "((V_α⊛H^β)@x)[j:=i]", "δ-application"),
    r('B', 1, Some(1), "(e1 ⊙ e2)@x", "(e1@x) ⊙ (e2@x)", "⊙ ∈ {*, /}; a probed δ/ε factor is kept"),
    r('B', 2, Some(2), "(e1 ± e2)@x", "(e1@x) ± (e2@x)", ""),
    r('B', 3, Some(3), "(⊙ e)@x", "⊙(e@x)", "⊙ unary"),
    r('B', 4, Some(4), "(Σ_i e)@x", "Σ_i (e@x)", ""),
    r('B', 5, Some(5), "δ@x | ε@x | lift(e)@x", "δ | ε | e", ""),
    r('C', 2, Some(20), "∂_ν lift(e)", "lift(0)", ""),
    r('C', 3, Some(19), "∂_ν Σ_v e", "Σ_v ∂_ν e", "v freshened if in ν"),
    r('C', 5, Some(21), "∂_ν V_α⊛H^β", "V_α⊛H^{βν}", ""),
    r('C', 6, Some(8), "∂_i √e", "(lift(1/2) * ∂_i e) / √e", "|ν| = 1"),
    r('C', 7, Some(9), "∂_i cos(e)", "-sin(e) * ∂_i e", "|ν| = 1"),
    r('C', 8, Some(10), "∂_i sin(e)", "cos(e) * ∂_i e", "|ν| = 1"),
    r('C', 9, Some(12), "∂_i acos(e)", "-((lift(1) * ∂_i e) / √(lift(1) - e*e))", "|ν| = 1"),
    r('C', 10, Some(13), "∂_i asin(e)", "(lift(1) / √(lift(1) - e*e)) * ∂_i e", "|ν| = 1"),
    r('C', 11, Some(7), "∂_i (e1 / e2)", "((∂_i e1)*e2 - e1*(∂_i e2)) / (e2*e2)", "|ν| = 1"),
    r('C', 14, Some(6), "∂_i (e1 * e2)", "e1*∂_i e2 + e2*∂_i e1", "|ν| = 1; not a δ/ε application"),
    r('C', 15, Some(18), "∂_ν (-e)", "-∂_ν e", ""),
    r('C', 16, Some(17), "∂_ν (e1 ± e2)", "∂_ν e1 ± ∂_ν e2", ""),
    r('C', 18, Some(11), "∂_i tan(e)", "∂_i e / (cos(e)*cos(e))", "|ν| = 1"),
    r('C', 19, Some(14), "∂_i atan(e)", "(lift(1) / (lift(1) + e*e)) * ∂_i e", "|ν| = 1"),
    r('C', 20, Some(15), "∂_i exp(e)", "exp(e) * ∂_i e", "|ν| = 1"),
    r('C', 21, Some(16), "∂_i e^n", "(lift(n) * e^(n-1)) * ∂_i e", "|ν| = 1, n ≥ 1"),
    r('C', 22, Some(42), "∂_α ∂_β e", "∂_{βα} e", ""),
    r('D', 1, None, "-0", "0", "0 is a constant zero or lift(0)"),
    r('D', 2, Some(30), "e + 0 | 0 + e", "e", ""),
    r('D', 3, Some(25), "e - 0", "e", ""),
    r('D', 4, Some(24), "0 - e", "-e", ""),
    r('D', 5, Some(26), "0 / e", "0", ""),
    r('D', 6, Some(31), "0 * e | e * 0", "0", ""),
    r('D', 8, None, "-(-e)", "e", ""),
    r('E', 1, Some(29), "(e1/e2) / e3", "e1 / (e2*e3)", "e3 not a division"),
    r('E', 2, Some(28), "e1 / (e2/e3)", "(e1*e3) / e2", "e1 not a division"),
    r('E', 4, Some(27), "(e1/e2) / (e3/e4)", "(e1*e4) / (e2*e3)", ""),
    r('E', 5, Some(41), "Σ_i (s*e) | Σ_{i=1..n} e", "s * Σ_i e | n * e", "s scalar; e independent of i"),
    r('E', 6, Some(32), "√e * √e", "e", ""),
];

/// The fixed catalog in priority order.
pub fn catalog() -> &'static [RuleInfo] {
    CATALOG
}

pub fn rule_by_name(name: &str) -> Option<RuleId> {
    CATALOG.iter().map(|r| r.id).find(|id| {
        alloc::format!("{id}").eq_ignore_ascii_case(name)
            || id.alias_name().is_some_and(|a| a.eq_ignore_ascii_case(name))
    })
}

/// Where a rule is being tried.
#[derive(Clone, Copy)]
pub struct RuleCtx<'a> {
    pub env: &'a TypeEnv,
    /// Context of the candidate redex.
    pub ctx: &'a IndexCtx,
}

fn rat(n: i64, d: i64) -> Expr {
    Expr::Const(BigRational::new(BigInt::from(n), BigInt::from(d)))
}

fn lift_const(d: u32, n: i64, den: i64) -> Expr {
    Expr::lift(d, rat(n, den))
}

fn names(items: &[IndexTerm]) -> BTreeSet<String> {
    items.iter().filter_map(IndexTerm::as_var).map(String::from).collect()
}

/// Tries one rule at the root of `e`.
pub fn apply(id: RuleId, rc: &RuleCtx<'_>, e: &Expr) -> Option<Expr> {
    match (id.group, id.num) {
        ('A', 1) => a1(rc, e),
        ('A', 3) => a3(rc, e),
        ('A', 4) => a4(rc, e),
        ('A', n @ 5..=9) => delta_app(rc, e, n),
        ('B', n) => b_rules(e, n),
        ('C', n) => c_rules(rc, e, n),
        ('D', n) => d_rules(e, n),
        ('E', n) => e_rules(rc, e, n),
        _ => None,
    }
}

/// First applicable rule at the root of `e`, in priority order.
pub fn first_match(rc: &RuleCtx<'_>, e: &Expr) -> Option<(RuleId, Expr)> {
    let groups = head_groups(e);
    CATALOG
        .iter()
        .filter(|info| groups.contains(&info.id.group))
        .find_map(|info| apply(info.id, rc, e).map(|out| (info.id, out)))
}

/// Rule groups whose left-hand side can have the head constructor of `e`.
pub(crate) fn head_groups(e: &Expr) -> &'static [char] {
    match e {
        Expr::Binary(BinOp::Mul, ..) => &['A', 'D', 'E'],
        Expr::Binary(..) | Expr::Unary(UnOp::Neg, _) => &['D', 'E'],
        Expr::Sum { .. } => &['E'],
        Expr::Probe(..) => &['B'],
        Expr::Partial(..) => &['C'],
        _ => &[],
    }
}

fn product(e: &Expr) -> Option<(&Expr, &Expr)> {
    match e {
        Expr::Binary(BinOp::Mul, a, b) => Some((a, b)),
        _ => None,
    }
}

/// Three distinct variable indices.
fn eps3_vars(e: &Expr) -> Option<[&str; 3]> {
    match e {
        Expr::Eps(a) if a.len() == 3 => {
            let v = [a[0].as_var()?, a[1].as_var()?, a[2].as_var()?];
            (v[0] != v[1] && v[1] != v[2] && v[0] != v[2]).then_some(v)
        }
        _ => None,
    }
}

/// `(j, k)` with `[s, j, k]` a cyclic rotation of `v`.
fn rotate_after(v: [&str; 3], s: &str) -> (String, String) {
    let p = v.iter().position(|x| *x == s).expect("shared index");
    (v[(p + 1) % 3].into(), v[(p + 2) % 3].into())
}

fn a1(rc: &RuleCtx<'_>, e: &Expr) -> Option<Expr> {
    let (a, b) = product(e)?;
    let (va, vb) = (eps3_vars(a)?, eps3_vars(b)?);
    let shared: Vec<&str> = va.iter().copied().filter(|x| vb.contains(x)).collect();
    if shared.len() != 1 || rc.ctx.contains(shared[0]) {
        return None;
    }
    let (j, k) = rotate_after(va, shared[0]);
    let (l, m) = rotate_after(vb, shared[0]);
    Some(Expr::sub(
        Expr::mul(Expr::delta(&j, &l), Expr::delta(&k, &m)),
        Expr::mul(Expr::delta(&j, &m), Expr::delta(&k, &l)),
    ))
}

/// Distinct contracted ε indices of `a * _` that occur in `items`.
fn contracted_hits(rc: &RuleCtx<'_>, a: &Expr, items: &[IndexTerm]) -> usize {
    match classify_product(rc.ctx, a) {
        Product::EpsApp { contracted, .. } => {
            let inside = names(items);
            contracted.iter().filter(|c| inside.contains(*c)).count()
        }
        _ => 0,
    }
}

fn a3(rc: &RuleCtx<'_>, e: &Expr) -> Option<Expr> {
    let (a, b) = product(e)?;
    if !matches!(a, Expr::Eps(al) if al.len() == 3) {
        return None;
    }
    let (image, beta) = match b {
        Expr::Conv { image, beta, .. } => (image, beta),
        _ => return None,
    };
    if contracted_hits(rc, a, beta) < 2 {
        return None;
    }
    let d = match rc.env.get(image) {
        Some(SurfaceType::Img { dim, .. }) => *dim,
        _ => return None,
    };
    Some(lift_const(d, 0, 1))
}

fn a4(rc: &RuleCtx<'_>, e: &Expr) -> Option<Expr> {
    let (a, b) = product(e)?;
    if !matches!(a, Expr::Eps(al) if al.len() == 3) {
        return None;
    }
    let nu = match b {
        Expr::Partial(nu, _) => nu,
        _ => return None,
    };
    if contracted_hits(rc, a, nu) < 2 {
        return None;
    }
    // The contracted derivative indices range over 1..3, the field dimension.
    Some(lift_const(3, 0, 1))
}

/// The δ-application rule number for a body shape.
pub fn delta_rule_for(body: &Expr) -> Option<u8> {
    match body {
        Expr::Tensor(..) => Some(5),
        Expr::Field(..) => Some(6),
        Expr::Partial(..) => Some(7),
        Expr::Conv { .. } => Some(8),
        Expr::Probe(f, _) if matches!(**f, Expr::Conv { .. }) => Some(9),
        _ => None,
    }
}

fn delta_app(rc: &RuleCtx<'_>, e: &Expr, n: u8) -> Option<Expr> {
    let (a, b) = product(e)?;
    if !matches!(a, Expr::Delta(..)) || delta_rule_for(b)? != n {
        return None;
    }
    let p = classify_product(rc.ctx, a);
    let (i, j) = match &p {
        Product::DeltaApp { i, j, .. } => (i.clone(), j.clone()),
        _ => return None,
    };
    let body_ctx = product_body_ctx(rc.ctx, &p);
    let avoid: BTreeSet<String> = [i.clone()].into_iter().collect();
    let body = scope::rename_binders_avoiding(b, &body_ctx, &avoid);
    Some(scope::subst_in_ctx(&body, &body_ctx, &j, &IndexTerm::Var(i)))
}

fn b_rules(e: &Expr, n: u8) -> Option<Expr> {
    let (f, x) = match e {
        Expr::Probe(f, x) => (&**f, &**x),
        _ => return None,
    };
    let at = |g: &Expr| Expr::probe(g.clone(), x.clone());
    match (n, f) {
        (1, Expr::Binary(op @ (BinOp::Mul | BinOp::Div), a, b)) => {
            // A δ/ε factor of an application keeps its (single) probe.
            let left = match &**a {
                Expr::Probe(g, _) if matches!(**g, Expr::Delta(..) | Expr::Eps(_)) => (**a).clone(),
                _ => at(a),
            };
            Some(Expr::bin(*op, left, at(b)))
        }
        (2, Expr::Binary(op @ (BinOp::Add | BinOp::Sub), a, b)) => Some(Expr::bin(*op, at(a), at(b))),
        (3, Expr::Unary(op, a)) => Some(Expr::unary(*op, at(a))),
        (4, Expr::Sum { var, bound, body }) => Some(Expr::sum(var, *bound, at(body))),
        (5, Expr::Delta(..) | Expr::Eps(_)) => Some(f.clone()),
        (5, Expr::Lift(_, body)) => Some((**body).clone()),
        _ => None,
    }
}

/// Nonlinear differentiation rules need a single derivative index.
fn c_rules(rc: &RuleCtx<'_>, e: &Expr, n: u8) -> Option<Expr> {
    let (nu, body) = match e {
        Expr::Partial(nu, body) => (nu, &**body),
        _ => return None,
    };
    let first = nu.first()?.as_var()?;
    let d = rc.ctx.get(first)?;
    let dx = |g: Expr| Expr::Partial(nu.clone(), alloc::boxed::Box::new(g));
    let single = nu.len() == 1;
    let body_ctx = || scope::child_ctxs(rc.ctx, e).swap_remove(0);
    // A scalar operand moves from `[]` into scope of the redex.
    let up = |g: &Expr| scope::relocate(g, &IndexCtx::new(), rc.ctx);
    // A body term moves from `σ \ ν` to `σ`.
    let widen = |g: &Expr| scope::relocate(g, &body_ctx(), rc.ctx);
    let one = || lift_const(d, 1, 1);
    match (n, body) {
        (2, Expr::Lift(..)) => Some(lift_const(d, 0, 1)),
        (3, Expr::Sum { var, bound, body: inner }) => {
            let (var, inner) = if names(nu).contains(var) {
                let mut taken = body.all_index_vars();
                taken.extend(rc.ctx.names().map(String::from));
                let fresh = crate::expr::fresh_name(var, &taken);
                let c = body_ctx().with(var, *bound);
                (fresh.clone(), scope::subst_in_ctx(inner, &c, var, &IndexTerm::Var(fresh)))
            } else {
                (var.clone(), (**inner).clone())
            };
            Some(Expr::sum(&var, *bound, dx(inner)))
        }
        (5, Expr::Conv { image, alpha, kernel, beta }) => {
            let mut beta = beta.clone();
            beta.extend(nu.iter().cloned());
            Some(Expr::Conv { image: image.clone(), alpha: alpha.clone(), kernel: kernel.clone(), beta })
        }
        (6, Expr::Unary(UnOp::Sqrt, g)) if single => {
            Some(Expr::div(Expr::mul(lift_const(d, 1, 2), dx(up(g))), body.clone()))
        }
        (7, Expr::Unary(UnOp::Cos, g)) if single => {
            Some(Expr::mul(Expr::neg(Expr::unary(UnOp::Sin, (**g).clone())), dx(up(g))))
        }
        (8, Expr::Unary(UnOp::Sin, g)) if single => Some(Expr::mul(Expr::unary(UnOp::Cos, (**g).clone()), dx(up(g)))),
        (9, Expr::Unary(UnOp::Acos, g)) if single => Some(Expr::neg(Expr::div(
            Expr::mul(one(), dx(up(g))),
            Expr::unary(UnOp::Sqrt, Expr::sub(one(), Expr::mul((**g).clone(), (**g).clone()))),
        ))),
        (10, Expr::Unary(UnOp::Asin, g)) if single => Some(Expr::mul(
            Expr::div(one(), Expr::unary(UnOp::Sqrt, Expr::sub(one(), Expr::mul((**g).clone(), (**g).clone())))),
            dx(up(g)),
        )),
        (11, Expr::Binary(BinOp::Div, a, b)) if single => {
            let num = Expr::sub(Expr::mul(dx((**a).clone()), up(b)), Expr::mul(widen(a), dx(up(b))));
            Some(Expr::div(num, Expr::mul((**b).clone(), (**b).clone())))
        }
        (14, Expr::Binary(BinOp::Mul, a, b)) if single => {
            if scope::delta_core(a).is_some() || scope::eps_core(a).is_some() {
                return None;
            }
            Some(Expr::add(Expr::mul(widen(a), dx((**b).clone())), Expr::mul(widen(b), dx((**a).clone()))))
        }
        (15, Expr::Unary(UnOp::Neg, g)) => Some(Expr::neg(dx((**g).clone()))),
        (16, Expr::Binary(op @ (BinOp::Add | BinOp::Sub), a, b)) => {
            Some(Expr::bin(*op, dx((**a).clone()), dx((**b).clone())))
        }
        (18, Expr::Unary(UnOp::Tan, g)) if single => {
            let c = || Expr::unary(UnOp::Cos, (**g).clone());
            Some(Expr::div(dx(up(g)), Expr::mul(c(), c())))
        }
        (19, Expr::Unary(UnOp::Atan, g)) if single => {
            Some(Expr::mul(Expr::div(one(), Expr::add(one(), Expr::mul((**g).clone(), (**g).clone()))), dx(up(g))))
        }
        (20, Expr::Unary(UnOp::Exp, g)) if single => Some(Expr::mul(body.clone(), dx(up(g)))),
        (21, Expr::Unary(UnOp::Pow(p), g)) if single && *p >= 1 => Some(Expr::mul(
            Expr::mul(lift_const(d, i64::from(*p), 1), Expr::unary(UnOp::Pow(p - 1), (**g).clone())),
            dx(up(g)),
        )),
        (22, Expr::Partial(inner_nu, g)) => {
            let mut merged = inner_nu.clone();
            merged.extend(nu.iter().cloned());
            Some(Expr::Partial(merged, g.clone()))
        }
        _ => None,
    }
}

fn d_rules(e: &Expr, n: u8) -> Option<Expr> {
    match (n, e) {
        (1, Expr::Unary(UnOp::Neg, z)) if z.is_zero() => Some((**z).clone()),
        (2, Expr::Binary(BinOp::Add, a, b)) if b.is_zero() => Some((**a).clone()),
        (2, Expr::Binary(BinOp::Add, a, b)) if a.is_zero() => Some((**b).clone()),
        (3, Expr::Binary(BinOp::Sub, a, b)) if b.is_zero() => Some((**a).clone()),
        (4, Expr::Binary(BinOp::Sub, a, b)) if a.is_zero() => Some(Expr::neg((**b).clone())),
        (5, Expr::Binary(BinOp::Div, a, _)) if a.is_zero() => Some((**a).clone()),
        (6, Expr::Binary(BinOp::Mul, a, _)) if a.is_zero() => Some((**a).clone()),
        (6, Expr::Binary(BinOp::Mul, _, b)) if b.is_zero() => Some((**b).clone()),
        (8, Expr::Unary(UnOp::Neg, g)) => match &**g {
            Expr::Unary(UnOp::Neg, inner) => Some((**inner).clone()),
            _ => None,
        },
        _ => None,
    }
}

fn is_div(e: &Expr) -> bool {
    matches!(e, Expr::Binary(BinOp::Div, ..))
}

fn e_rules(rc: &RuleCtx<'_>, e: &Expr, n: u8) -> Option<Expr> {
    let scalar_up = |g: &Expr| scope::relocate(g, &IndexCtx::new(), rc.ctx);
    match (n, e) {
        (1, Expr::Binary(BinOp::Div, num, e3)) if !is_div(e3) => match &**num {
            Expr::Binary(BinOp::Div, e1, e2) => {
                Some(Expr::div((**e1).clone(), Expr::mul((**e2).clone(), (**e3).clone())))
            }
            _ => None,
        },
        (2, Expr::Binary(BinOp::Div, e1, den)) if !is_div(e1) => match &**den {
            Expr::Binary(BinOp::Div, e2, e3) => {
                Some(Expr::div(Expr::mul((**e1).clone(), scalar_up(e3)), (**e2).clone()))
            }
            _ => None,
        },
        (4, Expr::Binary(BinOp::Div, num, den)) => match (&**num, &**den) {
            (Expr::Binary(BinOp::Div, e1, e2), Expr::Binary(BinOp::Div, e3, e4)) => {
                Some(Expr::div(Expr::mul((**e1).clone(), scalar_up(e4)), Expr::mul((**e2).clone(), (**e3).clone())))
            }
            _ => None,
        },
        (5, Expr::Sum { var, bound, body }) => {
            if let Expr::Binary(BinOp::Mul, s, rest) = &**body {
                if s.free_index_vars().is_empty() {
                    return Some(Expr::mul((**s).clone(), Expr::sum(var, *bound, (**rest).clone())));
                }
            }
            if body.mentions_free(var) {
                return None;
            }
            let inner = rc.ctx.with(var, *bound);
            let n = i64::from(*bound);
            match kind_of(rc.env, &inner, body)? {
                Kind::Ten => Some(Expr::mul(rat(n, 1), (**body).clone())),
                Kind::Fld(d) if !crate::size::is_unit(body) => Some(Expr::mul(lift_const(d, n, 1), (**body).clone())),
                Kind::Fld(_) => None,
            }
        }
        (6, Expr::Binary(BinOp::Mul, a, b)) => match (&**a, &**b) {
            (Expr::Unary(UnOp::Sqrt, x), Expr::Unary(UnOp::Sqrt, y)) if x == y => Some(scalar_up(x)),
            _ => None,
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_order_and_aliases() {
        let ids: Vec<RuleId> = catalog().iter().map(|r| r.id).collect();
        let mut sorted = ids.clone();
        sorted.sort_by_key(|id| (id.group, id.num));
        assert_eq!(ids, sorted);
        let r41: Vec<_> = ids.iter().filter(|id| id.alias == Some(41)).collect();
        assert_eq!(r41.len(), 1);
        assert_eq!(alloc::format!("{}", r41[0]), "E5");
        let mut aliases: Vec<u8> = ids.iter().filter_map(|id| id.alias).collect();
        let before = aliases.len();
        aliases.sort();
        aliases.dedup();
        assert_eq!(aliases.len(), before);
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(rule_by_name("a5").map(|id| id.num), Some(5));
        assert_eq!(rule_by_name("R41").map(|id| id.group), Some('E'));
        assert!(rule_by_name("C1").is_none());
    }
}
