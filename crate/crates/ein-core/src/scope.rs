//! Index scoping: which products contract, the context each child is
//! checked under, and capture-avoiding substitution and renaming.

use alloc::borrow::Cow;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{fresh_name, BinOp, Expr, UnOp};
use crate::index::{IndexCtx, IndexTerm, MultiIndex};

/// How a product `lhs * rhs` binds indices under a context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Product {
    /// `δ_ij * e`: `j` is bound in `e` and takes the value of `i`.
    DeltaApp {
        i: String,
        j: String,
        bound: u32,
    },
    /// `ε_α * e`: the listed indices of `α` are summed over `1..|α|`.
    EpsApp {
        contracted: Vec<String>,
        bound: u32,
    },
    Plain,
}

/// `δ_ij` or `δ_ij @ x`.
pub fn delta_core(e: &Expr) -> Option<(&IndexTerm, &IndexTerm)> {
    match e {
        Expr::Delta(i, j) => Some((i, j)),
        Expr::Probe(f, _) => match &**f {
            Expr::Delta(i, j) => Some((i, j)),
            _ => None,
        },
        _ => None,
    }
}

/// `ε_α` or `ε_α @ x`.
pub fn eps_core(e: &Expr) -> Option<&MultiIndex> {
    match e {
        Expr::Eps(a) => Some(a),
        Expr::Probe(f, _) => match &**f {
            Expr::Eps(a) => Some(a),
            _ => None,
        },
        _ => None,
    }
}

pub fn classify_product(ctx: &IndexCtx, lhs: &Expr) -> Product {
    if let Some((IndexTerm::Var(i), IndexTerm::Var(j))) = delta_core(lhs) {
        if i != j && !ctx.contains(j) {
            if let Some(bound) = ctx.get(i) {
                return Product::DeltaApp { i: i.clone(), j: j.clone(), bound };
            }
        }
    }
    if let Some(alpha) = eps_core(lhs) {
        let mut contracted: Vec<String> = Vec::new();
        for t in alpha {
            if let IndexTerm::Var(v) = t {
                if !ctx.contains(v) && !contracted.contains(v) {
                    contracted.push(v.clone());
                }
            }
        }
        if !contracted.is_empty() {
            return Product::EpsApp { contracted, bound: alpha.len() as u32 };
        }
    }
    Product::Plain
}

/// Context of the right factor of a product.
pub fn product_body_ctx(ctx: &IndexCtx, p: &Product) -> IndexCtx {
    match p {
        Product::DeltaApp { i, j, bound } => ctx.without(i).with(j, *bound),
        Product::EpsApp { contracted, bound } => contracted.iter().fold(ctx.clone(), |c, v| c.with(v, *bound)),
        Product::Plain => ctx.clone(),
    }
}

/// True for unary operators whose operand is a scalar checked under `[]`.
pub fn scalar_operand(op: UnOp) -> bool {
    op != UnOp::Neg
}

/// Context of child `k` of `e`, borrowed when it is `ctx` itself.
pub fn child_ctx<'a>(ctx: &'a IndexCtx, e: &Expr, k: usize) -> Cow<'a, IndexCtx> {
    match (e, k) {
        (Expr::Sum { var, bound, .. }, _) => Cow::Owned(ctx.with(var, *bound)),
        (Expr::Partial(nu, _), _) => {
            Cow::Owned(nu.iter().filter_map(IndexTerm::as_var).fold(ctx.clone(), |c, v| c.without(v)))
        }
        (Expr::Probe(..) | Expr::Binary(BinOp::Div, ..), 1) => Cow::Owned(IndexCtx::new()),
        (Expr::Unary(op, _), _) if scalar_operand(*op) => Cow::Owned(IndexCtx::new()),
        (Expr::Binary(BinOp::Mul, a, _), 1) => match classify_product(ctx, a) {
            Product::Plain => Cow::Borrowed(ctx),
            p => Cow::Owned(product_body_ctx(ctx, &p)),
        },
        _ => Cow::Borrowed(ctx),
    }
}

/// Contexts of each child, in [`Expr::children`] order.
pub fn child_ctxs(ctx: &IndexCtx, e: &Expr) -> Vec<IndexCtx> {
    (0..e.children().len()).map(|k| child_ctx(ctx, e, k).into_owned()).collect()
}

/// Index variables of `e` that no binder inside `e` accounts for when `e` is
/// checked under the empty context. Unlike [`Expr::free_index_vars`] this
/// sees the indices contracted by δ- and ε-applications.
pub fn unbound_vars(e: &Expr) -> BTreeSet<String> {
    fn go(ctx: &IndexCtx, e: &Expr, out: &mut BTreeSet<String>) {
        for t in e.own_indices() {
            if let IndexTerm::Var(v) = t {
                if !ctx.contains(v) {
                    out.insert(v.clone());
                }
            }
        }
        if let Expr::Binary(BinOp::Mul, a, b) = e {
            let p = classify_product(ctx, a);
            if p != Product::Plain {
                // The δ/ε factor only names indices of `ctx` or contracted ones.
                go(&product_body_ctx(ctx, &p), b, out);
                return;
            }
        }
        for (c, k) in e.children().into_iter().zip(child_ctxs(ctx, e)) {
            go(&k, c, out);
        }
    }
    let mut out = BTreeSet::new();
    go(&IndexCtx::new(), e, &mut out);
    out
}

/// Context at `path` below a root checked under `ctx`.
pub fn ctx_at(ctx: &IndexCtx, root: &Expr, path: &[usize]) -> IndexCtx {
    let mut cur = root;
    let mut c = ctx.clone();
    for &k in path {
        c = child_ctxs(&c, cur).swap_remove(k);
        cur = cur.children()[k];
    }
    c
}

fn rename_term(t: &IndexTerm, from: &str, to: &IndexTerm) -> IndexTerm {
    match t {
        IndexTerm::Var(v) if v == from => to.clone(),
        _ => t.clone(),
    }
}

fn rename_all(items: &[IndexTerm], from: &str, to: &IndexTerm) -> MultiIndex {
    items.iter().map(|t| rename_term(t, from, to)).collect()
}

/// Replaces the occurrences of `from` that refer to its entry in `ctx`.
///
/// Occurrences under a binder of the same name, and under a derivative or
/// scalar operand that drops `from` from scope, are left alone. The caller
/// guarantees `to` is not captured (see [`rename_binders_avoiding`]).
pub fn subst_in_ctx(e: &Expr, ctx: &IndexCtx, from: &str, to: &IndexTerm) -> Expr {
    if !ctx.contains(from) {
        return e.clone();
    }
    match e {
        Expr::Const(_) => e.clone(),
        Expr::Sum { var, .. } if var == from => e.clone(),
        Expr::Tensor(n, a) => Expr::Tensor(n.clone(), rename_all(a, from, to)),
        Expr::Field(n, a) => Expr::Field(n.clone(), rename_all(a, from, to)),
        Expr::Conv { image, alpha, kernel, beta } => Expr::Conv {
            image: image.clone(),
            alpha: rename_all(alpha, from, to),
            kernel: kernel.clone(),
            beta: rename_all(beta, from, to),
        },
        Expr::Delta(i, j) => Expr::Delta(rename_term(i, from, to), rename_term(j, from, to)),
        Expr::Eps(a) => Expr::Eps(rename_all(a, from, to)),
        Expr::Partial(nu, body) => {
            let inner = &child_ctxs(ctx, e)[0];
            Expr::Partial(rename_all(nu, from, to), alloc::boxed::Box::new(subst_in_ctx(body, inner, from, to)))
        }
        Expr::Binary(BinOp::Mul, a, b) => {
            let p = classify_product(ctx, a);
            let body_ctx = product_body_ctx(ctx, &p);
            Expr::mul(subst_in_ctx(a, ctx, from, to), subst_in_ctx(b, &body_ctx, from, to))
        }
        _ => {
            let ctxs = child_ctxs(ctx, e);
            let kids: Vec<Expr> =
                e.children().into_iter().zip(ctxs.iter()).map(|(c, cc)| subst_in_ctx(c, cc, from, to)).collect();
            rebuild(e, kids)
        }
    }
}

/// `e` with its children replaced, in [`Expr::children`] order.
pub fn rebuild(e: &Expr, kids: Vec<Expr>) -> Expr {
    let mut it = kids.into_iter();
    let mut next = || alloc::boxed::Box::new(it.next().expect("child count"));
    match e {
        Expr::Sum { var, bound, .. } => Expr::Sum { var: var.clone(), bound: *bound, body: next() },
        Expr::Partial(nu, _) => Expr::Partial(nu.clone(), next()),
        Expr::Lift(d, _) => Expr::Lift(*d, next()),
        Expr::Unary(op, _) => Expr::Unary(*op, next()),
        Expr::Probe(..) => {
            let a = next();
            Expr::Probe(a, next())
        }
        Expr::Binary(op, ..) => {
            let a = next();
            Expr::Binary(*op, a, next())
        }
        leaf => leaf.clone(),
    }
}

/// Renames every index binder of `e` (checked under `ctx`) whose name is in
/// `avoid`: summation variables, the `j` of a δ-application and the
/// contracted indices of an ε-application.
pub fn rename_binders_avoiding(e: &Expr, ctx: &IndexCtx, avoid: &BTreeSet<String>) -> Expr {
    let mut taken = e.all_index_vars();
    taken.extend(avoid.iter().cloned());
    taken.extend(ctx.names().map(String::from));
    rename_go(e, ctx, avoid, &mut taken)
}

fn take_fresh(base: &str, taken: &mut BTreeSet<String>) -> String {
    let n = fresh_name(base, taken);
    taken.insert(n.clone());
    n
}

fn rename_go(e: &Expr, ctx: &IndexCtx, avoid: &BTreeSet<String>, taken: &mut BTreeSet<String>) -> Expr {
    match e {
        Expr::Sum { var, bound, body } if avoid.contains(var) => {
            let new = take_fresh(var, taken);
            let inner = ctx.with(var, *bound);
            let body = subst_in_ctx(body, &inner, var, &IndexTerm::Var(new.clone()));
            let inner = ctx.with(&new, *bound);
            Expr::Sum { var: new, bound: *bound, body: alloc::boxed::Box::new(rename_go(&body, &inner, avoid, taken)) }
        }
        Expr::Binary(BinOp::Mul, a, b) => {
            let p = classify_product(ctx, a);
            let (mut a, mut b) = ((**a).clone(), (**b).clone());
            match &p {
                Product::DeltaApp { j, .. } if avoid.contains(j) => {
                    let new = take_fresh(j, taken);
                    let to = IndexTerm::Var(new);
                    let body_ctx = product_body_ctx(ctx, &p);
                    b = subst_in_ctx(&b, &body_ctx, j, &to);
                    a = map_delta_eps(&a, |t| rename_term(t, j, &to));
                }
                Product::EpsApp { contracted, .. } => {
                    for c in contracted.iter().filter(|c| avoid.contains(*c)) {
                        let new = take_fresh(c, taken);
                        let to = IndexTerm::Var(new);
                        let p_now = classify_product(ctx, &a);
                        let body_ctx = product_body_ctx(ctx, &p_now);
                        b = subst_in_ctx(&b, &body_ctx, c, &to);
                        a = map_delta_eps(&a, |t| rename_term(t, c, &to));
                    }
                }
                _ => {}
            }
            let p = classify_product(ctx, &a);
            let body_ctx = product_body_ctx(ctx, &p);
            Expr::mul(rename_go(&a, ctx, avoid, taken), rename_go(&b, &body_ctx, avoid, taken))
        }
        _ => {
            let ctxs = child_ctxs(ctx, e);
            let kids: Vec<Expr> =
                e.children().into_iter().zip(ctxs.iter()).map(|(c, cc)| rename_go(c, cc, avoid, taken)).collect();
            rebuild(e, kids)
        }
    }
}

/// Applies `f` to the indices of a `δ`/`ε` factor, looking through a probe.
fn map_delta_eps(e: &Expr, f: impl Fn(&IndexTerm) -> IndexTerm) -> Expr {
    match e {
        Expr::Delta(i, j) => Expr::Delta(f(i), f(j)),
        Expr::Eps(a) => Expr::Eps(a.iter().map(&f).collect()),
        Expr::Probe(g, x) => Expr::probe(map_delta_eps(g, f), (**x).clone()),
        other => other.clone(),
    }
}

/// Moves `e` from a position checked under `from_ctx` to one checked under
/// `to_ctx`, renaming binders that would clash with the new scope.
pub fn relocate(e: &Expr, from_ctx: &IndexCtx, to_ctx: &IndexCtx) -> Expr {
    let avoid: BTreeSet<String> = to_ctx.names().map(String::from).collect();
    rename_binders_avoiding(e, from_ctx, &avoid)
}

/// Syntactic replacement of the free occurrences of `from` by `to`.
///
/// Only summations count as binders here. A summation whose variable
/// collides with `to` is freshened first.
pub fn substitute_index(e: &Expr, from: &str, to: &IndexTerm) -> Expr {
    let mut taken = e.all_index_vars();
    taken.insert(from.into());
    if let IndexTerm::Var(v) = to {
        taken.insert(v.clone());
    }
    subst_syntactic(e, from, to, &mut taken)
}

fn subst_syntactic(e: &Expr, from: &str, to: &IndexTerm, taken: &mut BTreeSet<String>) -> Expr {
    match e {
        Expr::Sum { var, .. } if var == from => e.clone(),
        Expr::Sum { var, bound, body } => {
            let collides = matches!(to, IndexTerm::Var(v) if v == var) && body.mentions_free(from);
            if collides {
                let new = take_fresh(var, taken);
                let body = subst_syntactic(body, var, &IndexTerm::Var(new.clone()), taken);
                Expr::sum(&new, *bound, subst_syntactic(&body, from, to, taken))
            } else {
                Expr::sum(var, *bound, subst_syntactic(body, from, to, taken))
            }
        }
        Expr::Tensor(n, a) => Expr::Tensor(n.clone(), rename_all(a, from, to)),
        Expr::Field(n, a) => Expr::Field(n.clone(), rename_all(a, from, to)),
        Expr::Conv { image, alpha, kernel, beta } => Expr::Conv {
            image: image.clone(),
            alpha: rename_all(alpha, from, to),
            kernel: kernel.clone(),
            beta: rename_all(beta, from, to),
        },
        Expr::Delta(i, j) => Expr::Delta(rename_term(i, from, to), rename_term(j, from, to)),
        Expr::Eps(a) => Expr::Eps(rename_all(a, from, to)),
        Expr::Partial(nu, body) => {
            Expr::Partial(rename_all(nu, from, to), alloc::boxed::Box::new(subst_syntactic(body, from, to, taken)))
        }
        _ => {
            let kids: Vec<Expr> = e.children().into_iter().map(|c| subst_syntactic(c, from, to, taken)).collect();
            rebuild(e, kids)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(items: &[(&str, u32)]) -> IndexCtx {
        IndexCtx::from_entries(items.iter().map(|&(n, b)| (n, b)))
    }

    #[test]
    fn delta_application_needs_unscoped_j() {
        let d = Expr::delta("i", "j");
        assert!(matches!(classify_product(&ctx(&[("i", 3)]), &d), Product::DeltaApp { .. }));
        assert_eq!(classify_product(&ctx(&[("i", 3), ("j", 3)]), &d), Product::Plain);
    }

    #[test]
    fn eps_application_lists_contracted() {
        let e = Expr::eps(&["i", "j", "k"]);
        match classify_product(&ctx(&[("i", 3)]), &e) {
            Product::EpsApp { contracted, bound } => {
                assert_eq!(contracted, ["j", "k"]);
                assert_eq!(bound, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntactic_substitution_respects_binders() {
        let e = Expr::tensor("T", &["j"]);
        assert_eq!(substitute_index(&e, "j", &IndexTerm::var("i")), Expr::tensor("T", &["i"]));
        let bound = Expr::sum("j", 3, Expr::mul(Expr::tensor("T", &["j"]), Expr::tensor("S", &["j"])));
        assert_eq!(substitute_index(&bound, "j", &IndexTerm::var("i")), bound);
        let conv = Expr::conv("V", &[], "H", &["j"]);
        assert_eq!(substitute_index(&conv, "j", &IndexTerm::var("i")), Expr::conv("V", &[], "H", &["i"]));
    }

    #[test]
    fn substitution_freshens_capturing_binder() {
        let e = Expr::sum("i", 3, Expr::mul(Expr::tensor("T", &["i"]), Expr::tensor("S", &["j"])));
        let out = substitute_index(&e, "j", &IndexTerm::var("i"));
        assert_eq!(out, Expr::sum("i1", 3, Expr::mul(Expr::tensor("T", &["i1"]), Expr::tensor("S", &["i"]))));
    }

    #[test]
    fn renaming_keeps_meaning() {
        let c = ctx(&[("k", 3)]);
        let e = Expr::mul(Expr::delta("k", "i"), Expr::tensor("T", &["i"]));
        let avoid: BTreeSet<String> = ["i".into()].into_iter().collect();
        let out = rename_binders_avoiding(&e, &c, &avoid);
        assert_eq!(out, Expr::mul(Expr::delta("k", "i1"), Expr::tensor("T", &["i1"])));
    }
}
