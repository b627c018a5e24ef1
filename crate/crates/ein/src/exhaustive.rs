//! Every well-typed expression up to a node budget over a small signature.
//!
//! Terms are built per `(σ, kind, nodes)` from the typing rules, so only
//! well-typed ones are produced; each is still checked with `infer_type`.
//! Indices are attributes and do not count as nodes, a probe point does.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use ein_core::{infer_type, is_normal_form, is_terminal, Expr, IndexCtx, IndexTerm, Kind, SurfaceType, TypeEnv, UnOp};
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct Signature {
    pub dim: u32,
    /// Index variable names; binders draw from these too.
    pub vars: Vec<String>,
    pub consts: Vec<u32>,
    /// Scalar constants used as leaves.
    pub scalars: Vec<i64>,
    pub top: IndexCtx,
    pub unary: Vec<UnOp>,
    pub conv: bool,
    pub max_nodes: usize,
}

impl Signature {
    /// Dimension 2, variables `i j`, top shape `[i]`, the constant 0, `neg`
    /// and `sqrt`.
    pub fn small() -> Signature {
        Signature {
            dim: 2,
            vars: ["i", "j"].map(String::from).to_vec(),
            consts: vec![],
            scalars: vec![0],
            top: IndexCtx::from_entries([("i", 2)]),
            unary: vec![UnOp::Neg, UnOp::Sqrt],
            conv: false,
            max_nodes: 8,
        }
    }

    /// More leaves and operators, for smaller budgets.
    pub fn wide() -> Signature {
        Signature {
            dim: 2,
            vars: ["i", "j", "k"].map(String::from).to_vec(),
            consts: vec![1],
            scalars: vec![0, 1],
            top: IndexCtx::from_entries([("i", 2)]),
            unary: vec![UnOp::Neg, UnOp::Sqrt, UnOp::Exp, UnOp::Pow(0), UnOp::Pow(2)],
            conv: true,
            max_nodes: 5,
        }
    }

    /// Scalars `A`, `x`; vectors `U`; fields `F`, `G`; image `V`, kernel `K`.
    pub fn env(&self) -> TypeEnv {
        let d = self.dim;
        let mut env = TypeEnv::new();
        env.insert("A".into(), SurfaceType::Ten(vec![]));
        env.insert("U".into(), SurfaceType::Ten(vec![d]));
        env.insert("x".into(), SurfaceType::Ten(vec![d]));
        env.insert("F".into(), SurfaceType::Fld { dim: d, shape: vec![] });
        env.insert("G".into(), SurfaceType::Fld { dim: d, shape: vec![d] });
        env.insert("V".into(), SurfaceType::Img { dim: d, shape: vec![] });
        env.insert("K".into(), SurfaceType::Krn);
        env
    }
}

type Key = (Vec<String>, Kind, usize);

pub struct Enumerator<'a> {
    sig: &'a Signature,
    memo: HashMap<Key, Arc<Vec<Expr>>>,
}

fn key_of(ctx: &IndexCtx) -> Vec<String> {
    let set: BTreeSet<String> = ctx.names().map(String::from).collect();
    set.into_iter().collect()
}

impl<'a> Enumerator<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        Enumerator { sig, memo: HashMap::new() }
    }

    fn ctx_of(&self, names: &[String]) -> IndexCtx {
        IndexCtx::from_entries(names.iter().map(|n| (n.as_str(), self.sig.dim)))
    }

    fn terms(&self, ctx: &IndexCtx) -> Vec<IndexTerm> {
        let mut out: Vec<IndexTerm> = ctx.names().map(IndexTerm::var).collect();
        out.extend(self.sig.consts.iter().map(|c| IndexTerm::Const(*c)));
        out
    }

    fn tuples(items: &[IndexTerm], len: usize) -> Vec<Vec<IndexTerm>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    items.iter().map(move |t| {
                        let mut p = prefix.clone();
                        p.push(t.clone());
                        p
                    })
                })
                .collect();
        }
        out
    }

    fn point() -> Expr {
        Expr::Tensor("x".into(), vec![])
    }

    fn leaves(&self, ctx: &IndexCtx, kind: Kind) -> Vec<Expr> {
        let terms = self.terms(ctx);
        let d = self.sig.dim as usize;
        match kind {
            Kind::Ten => {
                let mut out: Vec<Expr> = self.sig.scalars.iter().map(|c| Expr::int(*c)).collect();
                out.push(Expr::tensor("A", &[]));
                out.extend(terms.iter().map(|t| Expr::Tensor("U".into(), vec![t.clone()])));
                for p in Self::tuples(&terms, 2) {
                    out.push(Expr::Delta(p[0].clone(), p[1].clone()));
                }
                out.extend(Self::tuples(&terms, d).into_iter().map(Expr::Eps));
                out
            }
            Kind::Fld(_) => {
                let mut out = vec![Expr::field("F", &[])];
                out.extend(terms.iter().map(|t| Expr::Field("G".into(), vec![t.clone()])));
                for n in (0..=1).filter(|_| self.sig.conv) {
                    for beta in Self::tuples(&terms, n) {
                        out.push(Expr::Conv { image: "V".into(), alpha: vec![], kernel: "K".into(), beta });
                    }
                }
                out
            }
        }
    }

    /// Well-typed terms of exactly `n` nodes, kept for reuse.
    pub fn exactly(&mut self, ctx: &IndexCtx, kind: Kind, n: usize) -> Arc<Vec<Expr>> {
        let key = (key_of(ctx), kind, n);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let ctx = self.ctx_of(&key.0);
        let mut out = Vec::new();
        self.build(&ctx, kind, n, &mut |e| out.push(e));
        let out = Arc::new(out);
        self.memo.insert(key, out.clone());
        out
    }

    /// Streams the terms of exactly `n` nodes. Sizes up to `keep` are
    /// memoized, larger ones are rebuilt on every call.
    pub fn visit(&mut self, ctx: &IndexCtx, kind: Kind, n: usize, keep: usize, f: &mut dyn FnMut(Expr)) {
        if n <= keep {
            for e in self.exactly(ctx, kind, n).iter() {
                f(e.clone());
            }
        } else {
            self.build_with(ctx, kind, n, keep, f);
        }
    }

    fn build(&mut self, ctx: &IndexCtx, kind: Kind, n: usize, f: &mut dyn FnMut(Expr)) {
        self.build_with(ctx, kind, n, n.saturating_sub(1), f)
    }

    fn build_with(&mut self, ctx: &IndexCtx, kind: Kind, n: usize, keep: usize, f: &mut dyn FnMut(Expr)) {
        if n == 0 {
            return;
        }
        if n == 1 {
            self.leaves(ctx, kind).into_iter().for_each(f);
            return;
        }
        let sig = self.sig;
        let d = sig.dim;
        let empty = IndexCtx::new();
        let sub = n - 1;
        for op in &sig.unary {
            let under = if *op == UnOp::Neg { ctx } else { &empty };
            self.visit(under, kind, sub, keep, &mut |e| f(Expr::unary(*op, e)));
        }
        for v in sig.vars.iter().filter(|v| !ctx.contains(v)) {
            self.visit(&ctx.with(v, d), kind, sub, keep, &mut |e| f(Expr::sum(v, d, e)));
        }
        match kind {
            Kind::Fld(_) => {
                self.visit(ctx, Kind::Ten, sub, keep, &mut |e| f(Expr::lift(d, e)));
                let names: Vec<String> = ctx.names().map(String::from).collect();
                let mut nus: Vec<Vec<&str>> = names.iter().map(|a| vec![a.as_str()]).collect();
                for a in &names {
                    for b in names.iter().filter(|b| *b != a) {
                        nus.push(vec![a.as_str(), b.as_str()]);
                    }
                }
                for nu in nus {
                    let inner = nu.iter().fold(ctx.clone(), |c, v| c.without(v));
                    self.visit(&inner, kind, sub, keep, &mut |e| f(Expr::partial(&nu, e)));
                }
            }
            Kind::Ten if n >= 3 => {
                self.visit(ctx, Kind::Fld(d), n - 2, keep, &mut |e| f(Expr::probe(e, Self::point())));
                if n == 3 {
                    let cores = self.leaves(ctx, Kind::Ten);
                    for c in cores.into_iter().filter(|c| matches!(c, Expr::Delta(..) | Expr::Eps(_))) {
                        f(Expr::probe(c, Self::point()));
                    }
                }
            }
            Kind::Ten => {}
        }
        if n >= 3 {
            for a in 1..=n - 2 {
                self.binaries(ctx, kind, a, n - 1 - a, f);
            }
        }
    }

    fn binaries(&mut self, ctx: &IndexCtx, kind: Kind, a: usize, b: usize, f: &mut dyn FnMut(Expr)) {
        let lefts = self.exactly(ctx, kind, a);
        let rights = self.exactly(ctx, kind, b);
        let dens = self.exactly(&IndexCtx::new(), kind, b);
        for l in lefts.iter() {
            for r in rights.iter() {
                f(Expr::add(l.clone(), r.clone()));
                f(Expr::sub(l.clone(), r.clone()));
                f(Expr::mul(l.clone(), r.clone()));
            }
            for r in dens.iter() {
                f(Expr::div(l.clone(), r.clone()));
            }
        }
        // Applications: the left factor binds indices outside σ.
        let d = self.sig.dim;
        let vars = self.sig.vars.clone();
        let outside: Vec<&String> = vars.iter().filter(|v| !ctx.contains(v)).collect();
        let mut apps: Vec<(Expr, IndexCtx)> = Vec::new();
        for i in ctx.names() {
            for j in &outside {
                let core = Expr::Delta(IndexTerm::var(i), IndexTerm::var(j));
                apps.push((core, ctx.without(i).with(j, d)));
            }
        }
        let mut pool = self.terms(ctx);
        pool.extend(outside.iter().map(|v| IndexTerm::var(v)));
        for alpha in Self::tuples(&pool, d as usize) {
            let contracted: BTreeSet<&str> =
                alpha.iter().filter_map(IndexTerm::as_var).filter(|v| !ctx.contains(v)).collect();
            if contracted.is_empty() {
                continue;
            }
            let inner = contracted.iter().fold(ctx.clone(), |c, v| c.with(v, d));
            apps.push((Expr::Eps(alpha), inner));
        }
        for (core, inner) in apps {
            let left = match a {
                1 => core,
                3 => Expr::probe(core, Self::point()),
                _ => continue,
            };
            for r in self.exactly(&inner, kind, b).iter() {
                f(Expr::mul(left.clone(), r.clone()));
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mismatch {
    pub expr: Expr,
    pub terminal: bool,
    pub normal_form: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExhaustiveReport {
    /// Terms checked, by node count.
    pub by_nodes: Vec<usize>,
    pub checked: usize,
    pub terminal: usize,
    pub ill_typed: Vec<Expr>,
    pub mismatches: Vec<Mismatch>,
}

impl ExhaustiveReport {
    pub fn ok(&self) -> bool {
        self.checked > 0 && self.ill_typed.is_empty() && self.mismatches.is_empty()
    }
}

fn check_one(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> (bool, Option<Mismatch>) {
    let terminal = is_terminal(env, ctx, e);
    let v = is_normal_form(env, ctx, e);
    let bad = (terminal != v.in_normal_form).then(|| Mismatch {
        expr: e.clone(),
        terminal,
        normal_form: v.in_normal_form,
        detail: v.violations.first().map(|x| format!("{}: {}", x.production, x.detail)).unwrap_or_default(),
    });
    (terminal, bad)
}

/// Checks `is_terminal ⇔ is_normal_form` on every term of both kinds.
pub fn check_terminal_iff_nf(sig: &Signature) -> ExhaustiveReport {
    const BATCH: usize = 1 << 14;
    let env = sig.env();
    let mut en = Enumerator::new(sig);
    let keep = sig.max_nodes.saturating_sub(2);
    let mut report = ExhaustiveReport { by_nodes: vec![0; sig.max_nodes + 1], ..Default::default() };
    let check = |e: &Expr| match infer_type(&env, &sig.top, e) {
        Err(_) => Err(e.clone()),
        Ok(_) => Ok(check_one(&env, &sig.top, e)),
    };
    let record = |r: Result<(bool, Option<Mismatch>), Expr>, report: &mut ExhaustiveReport| {
        report.checked += 1;
        match r {
            Err(e) => report.ill_typed.push(e),
            Ok((terminal, bad)) => {
                report.terminal += usize::from(terminal);
                report.mismatches.extend(bad);
            }
        }
    };
    // Batching only pays off with more than one worker.
    let parallel = rayon::current_num_threads() > 1;
    let flush = |batch: &mut Vec<Expr>, report: &mut ExhaustiveReport| {
        let results: Vec<_> = batch.par_iter().map(check).collect();
        for r in results {
            record(r, report);
        }
        batch.clear();
    };
    let mut batch = Vec::with_capacity(if parallel { BATCH } else { 0 });
    for n in 1..=sig.max_nodes {
        for kind in [Kind::Ten, Kind::Fld(sig.dim)] {
            let mut count = 0;
            en.visit(&sig.top, kind, n, keep, &mut |e| {
                count += 1;
                if !parallel {
                    record(check(&e), &mut report);
                    return;
                }
                batch.push(e);
                if batch.len() == BATCH {
                    flush(&mut batch, &mut report);
                }
            });
            report.by_nodes[n] += count;
        }
    }
    flush(&mut batch, &mut report);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_budgets_agree() {
        let sig = Signature { max_nodes: 5, ..Signature::wide() };
        let r = check_terminal_iff_nf(&sig);
        assert!(r.ill_typed.is_empty(), "{:?}", r.ill_typed.first().map(ToString::to_string));
        assert!(r.mismatches.is_empty(), "{:?}", r.mismatches.first());
        assert!(r.checked > 100);
    }

    #[test]
    fn leaves_count() {
        let sig = Signature::wide();
        let mut en = Enumerator::new(&sig);
        // 0, 1, A, U_i, U_1, four δ, four ε.
        assert_eq!(en.exactly(&sig.top, Kind::Ten, 1).len(), 13);
        let sig = Signature::small();
        let mut en = Enumerator::new(&sig);
        // 0, A, U_i, δ_ii, ε_ii.
        assert_eq!(en.exactly(&sig.top, Kind::Ten, 1).len(), 5);
    }
}
