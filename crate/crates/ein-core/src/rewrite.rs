//! Redex search, single steps and the normalization driver.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;

use crate::error::TypeError;
use crate::expr::{path_string, Expr, Path};
use crate::index::{EinType, IndexCtx, TypeEnv};
use crate::rules::{self, RuleCtx, RuleId};
use crate::scope::child_ctx;
use crate::size::try_size;
use crate::types::infer_type;

/// Redex selection order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Post-order, children left to right. The default.
    #[default]
    Innermost,
    /// Post-order, children right to left.
    InnermostRight,
    /// Pre-order, children left to right.
    Outermost,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Innermost, Strategy::InnermostRight, Strategy::Outermost];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Innermost => "innermost",
            Strategy::InnermostRight => "innermost-right",
            Strategy::Outermost => "outermost",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub rule: RuleId,
    pub path: Path,
    pub before: Expr,
    pub after: Expr,
    /// Whole-expression sizes; `None` past the measurable range.
    pub size_before: Option<BigUint>,
    pub size_after: Option<BigUint>,
    pub type_before: EinType,
    pub type_after: EinType,
}

impl RewriteStep {
    pub fn redex(&self) -> &Expr {
        self.before.at(&self.path).expect("redex path")
    }

    pub fn contractum(&self) -> &Expr {
        self.after.at(&self.path).expect("redex path")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteTrace {
    pub initial: Expr,
    pub steps: Vec<RewriteStep>,
    pub final_expr: Expr,
}

/// Failure of a step's own checks. These are bugs in the catalog, not user
/// errors, except for [`RewriteError::IllTyped`] on the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RewriteError {
    IllTyped(TypeError),
    SizeNotDecreasing { rule: RuleId, path: Path, before: Expr, after: Expr },
    TypeChanged { rule: RuleId, path: Path, before: Expr, after: Expr, detail: String },
}

impl fmt::Display for RewriteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewriteError::IllTyped(e) => write!(f, "input is ill-typed: {e}"),
            RewriteError::SizeNotDecreasing { rule, path, before, after } => {
                write!(f, "{rule} at {} does not decrease size: {before} ~> {after}", path_string(path))
            }
            RewriteError::TypeChanged { rule, path, before, after, detail } => {
                write!(f, "{rule} at {} changes the type ({detail}): {before} ~> {after}", path_string(path))
            }
        }
    }
}

/// A candidate rewrite: rule, position and the rewritten subterm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Redex {
    pub rule: RuleId,
    pub path: Path,
    pub contractum: Expr,
}

fn search(env: &TypeEnv, ctx: &IndexCtx, e: &Expr, path: &mut Path, strategy: Strategy) -> Option<Redex> {
    let here = |path: &Path| {
        let rc = RuleCtx { env, ctx };
        rules::first_match(&rc, e).map(|(rule, contractum)| Redex { rule, path: path.clone(), contractum })
    };
    if strategy == Strategy::Outermost {
        if let Some(r) = here(path) {
            return Some(r);
        }
    }
    let kids = e.children();
    let mut order: Vec<usize> = (0..kids.len()).collect();
    if strategy == Strategy::InnermostRight {
        order.reverse();
    }
    for k in order {
        path.push(k);
        let found = search(env, &child_ctx(ctx, e, k), kids[k], path, strategy);
        path.pop();
        if found.is_some() {
            return found;
        }
    }
    if strategy == Strategy::Outermost {
        None
    } else {
        here(path)
    }
}

/// The redex `strategy` would rewrite next, without running step checks.
pub fn find_redex(env: &TypeEnv, ctx: &IndexCtx, e: &Expr, strategy: Strategy) -> Option<Redex> {
    search(env, ctx, e, &mut Vec::new(), strategy)
}

/// Every applicable (rule, position) pair, in post-order then priority.
pub fn all_redexes(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> Vec<Redex> {
    fn go(env: &TypeEnv, ctx: &IndexCtx, e: &Expr, path: &mut Path, out: &mut Vec<Redex>) {
        for (k, c) in e.children().into_iter().enumerate() {
            path.push(k);
            go(env, &child_ctx(ctx, e, k), c, path, out);
            path.pop();
        }
        let rc = RuleCtx { env, ctx };
        let groups = rules::head_groups(e);
        for info in rules::catalog().iter().filter(|i| groups.contains(&i.id.group)) {
            if let Some(contractum) = rules::apply(info.id, &rc, e) {
                out.push(Redex { rule: info.id, path: path.clone(), contractum });
            }
        }
    }
    let mut out = Vec::new();
    go(env, ctx, e, &mut Vec::new(), &mut out);
    out
}

/// Performs `redex` on `e` and checks descent and type preservation.
pub fn apply_redex(env: &TypeEnv, ctx: &IndexCtx, e: &Expr, redex: Redex) -> Result<RewriteStep, RewriteError> {
    let type_before = infer_type(env, ctx, e).map_err(RewriteError::IllTyped)?;
    // Every constructor is strictly monotone in each measured child, so the
    // whole term shrinks iff the redex does.
    let local = e.at(&redex.path).map(try_size);
    let shrinks = match (local, try_size(&redex.contractum)) {
        (Some(Ok(a)), Ok(b)) => Some(b < a),
        _ => None,
    };
    let after = e.replace_at(&redex.path, redex.contractum);
    if shrinks == Some(false) {
        return Err(RewriteError::SizeNotDecreasing { rule: redex.rule, path: redex.path, before: e.clone(), after });
    }
    let (size_before, size_after) = (try_size(e).ok(), try_size(&after).ok());
    let type_after = match infer_type(env, ctx, &after) {
        Ok(t) if t == type_before => t,
        Ok(t) => {
            let detail = alloc::format!("{type_before} became {t}");
            return Err(RewriteError::TypeChanged {
                rule: redex.rule,
                path: redex.path,
                before: e.clone(),
                after,
                detail,
            });
        }
        Err(err) => {
            let detail = alloc::format!("{err}");
            return Err(RewriteError::TypeChanged {
                rule: redex.rule,
                path: redex.path,
                before: e.clone(),
                after,
                detail,
            });
        }
    };
    Ok(RewriteStep {
        rule: redex.rule,
        path: redex.path,
        before: e.clone(),
        after,
        size_before,
        size_after,
        type_before,
        type_after,
    })
}

/// One checked step with the default strategy; `Ok(None)` when terminal.
pub fn rewrite_once(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> Result<Option<RewriteStep>, RewriteError> {
    rewrite_once_with(env, ctx, e, Strategy::Innermost)
}

pub fn rewrite_once_with(
    env: &TypeEnv,
    ctx: &IndexCtx,
    e: &Expr,
    strategy: Strategy,
) -> Result<Option<RewriteStep>, RewriteError> {
    infer_type(env, ctx, e).map_err(RewriteError::IllTyped)?;
    match find_redex(env, ctx, e, strategy) {
        None => Ok(None),
        Some(r) => apply_redex(env, ctx, e, r).map(Some),
    }
}

/// Rewrites to a terminal expression with the default strategy.
pub fn normalize(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> Result<RewriteTrace, RewriteError> {
    normalize_with(env, ctx, e, Strategy::Innermost)
}

pub fn normalize_with(
    env: &TypeEnv,
    ctx: &IndexCtx,
    e: &Expr,
    strategy: Strategy,
) -> Result<RewriteTrace, RewriteError> {
    let mut cur = e.clone();
    let mut steps = Vec::new();
    while let Some(step) = rewrite_once_with(env, ctx, &cur, strategy)? {
        cur = step.after.clone();
        steps.push(step);
    }
    Ok(RewriteTrace { initial: e.clone(), steps, final_expr: cur })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::SurfaceType;

    fn setup() -> (TypeEnv, IndexCtx) {
        let mut env = TypeEnv::new();
        env.insert("T".into(), SurfaceType::Ten(alloc::vec![3]));
        env.insert("F".into(), SurfaceType::Fld { dim: 3, shape: alloc::vec![3] });
        env.insert("x".into(), SurfaceType::Ten(alloc::vec![3]));
        (env, IndexCtx::from_entries([("i", 3)]))
    }

    #[test]
    fn delta_application_rewrites_to_tensor() {
        let (env, ctx) = setup();
        let e = Expr::mul(Expr::delta("i", "j"), Expr::tensor("T", &["j"]));
        let step = rewrite_once(&env, &ctx, &e).unwrap().unwrap();
        assert_eq!(alloc::format!("{}", step.rule), "A5");
        assert_eq!(step.after, Expr::tensor("T", &["i"]));
        let trace = normalize(&env, &ctx, &e).unwrap();
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn variables_are_terminal() {
        let (env, ctx) = setup();
        assert!(rewrite_once(&env, &ctx, &Expr::tensor("T", &["i"])).unwrap().is_none());
    }

    #[test]
    fn probe_of_sum_distributes() {
        let (env, _) = setup();
        let e = Expr::probe(Expr::sum("i", 3, Expr::field("F", &["i"])), Expr::tensor("x", &[]));
        let step = rewrite_once(&env, &IndexCtx::new(), &e).unwrap().unwrap();
        assert_eq!(alloc::format!("{}", step.rule), "B4");
        assert_eq!(step.after, Expr::sum("i", 3, Expr::probe(Expr::field("F", &["i"]), Expr::tensor("x", &[]))));
    }
}
