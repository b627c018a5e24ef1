//! Property runs over generated expressions.
//!
//! Each case is normalized once under the innermost strategy and every
//! property is judged on that trace. A failing case is shrunk by replacing
//! subterms with their children or with a unit leaf for as long as the
//! property still fails.

use std::fmt;
use std::time::{Duration, Instant};

use ein_core::eval::{
    assignments, check_value_preservation, eval_numeric, eval_symbolic, flatten, reduce, Data, EvalError, ValueCheck,
    TOLERANCE,
};
use ein_core::rewrite::{rewrite_once_with, RewriteError};
use ein_core::scope::{ctx_at, unbound_vars};
use ein_core::types::kind_at;
use ein_core::{infer_type, is_normal_form, is_terminal, try_size, Expr, IndexCtx, RewriteStep, Strategy, TypeEnv};
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::gen::{generate_case, leaf_of, Case, GenConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    /// Every state has the type of the initial expression.
    TypePreservation,
    /// Each step shrinks the size and the trace is no longer than `size - 1`.
    Descent,
    /// `is_terminal` agrees with the normal-form grammar on every state.
    NfEquivalence,
    /// Field-free steps keep the value under every index assignment.
    ValuePreservation,
    /// The symbolic and numeric evaluators agree on the initial expression.
    EvaluatorAgreement,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::TypePreservation,
        Property::Descent,
        Property::NfEquivalence,
        Property::ValuePreservation,
        Property::EvaluatorAgreement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::TypePreservation => "type-preservation",
            Property::Descent => "descent",
            Property::NfEquivalence => "nf-equivalence",
            Property::ValuePreservation => "value-preservation",
            Property::EvaluatorAgreement => "evaluator-agreement",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Property::TypePreservation => "type",
            Property::Descent => "descent",
            Property::NfEquivalence => "nf-equiv",
            Property::ValuePreservation => "value",
            Property::EvaluatorAgreement => "eval-agree",
        }
    }

    /// Accepts the full or the short name.
    pub fn from_name(name: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == name || p.short_name() == name)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A normalization run with a step budget.
#[derive(Clone, Debug)]
pub struct Run {
    pub initial: Expr,
    pub steps: Vec<RewriteStep>,
    pub error: Option<RewriteError>,
    /// The budget ran out before a normal form was reached.
    pub truncated: bool,
}

impl Run {
    pub fn final_expr(&self) -> &Expr {
        self.steps.last().map_or(&self.initial, |s| &s.after)
    }

    pub fn states(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.after))
    }
}

pub fn run(env: &TypeEnv, ctx: &IndexCtx, e: &Expr, max_steps: usize) -> Run {
    let mut out = Run { initial: e.clone(), steps: Vec::new(), error: None, truncated: false };
    let mut cur = e.clone();
    loop {
        if out.steps.len() >= max_steps {
            out.truncated = true;
            return out;
        }
        match rewrite_once_with(env, ctx, &cur, Strategy::Innermost) {
            Ok(Some(step)) => {
                cur = step.after.clone();
                out.steps.push(step);
            }
            Ok(None) => return out,
            Err(e) => {
                out.error = Some(e);
                return out;
            }
        }
    }
}

/// What one case contributed to a property.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub checks: usize,
    pub skipped: usize,
}

pub type Verdict = Result<Tally, String>;

fn type_preservation(env: &TypeEnv, ctx: &IndexCtx, r: &Run) -> Verdict {
    let ty = infer_type(env, ctx, &r.initial).map_err(|e| format!("generated term is ill-typed: {e}"))?;
    if let Some(e @ (RewriteError::TypeChanged { .. } | RewriteError::IllTyped(_))) = &r.error {
        return Err(e.to_string());
    }
    for (n, s) in r.steps.iter().enumerate() {
        match infer_type(env, ctx, &s.after) {
            Ok(t) if t == ty => {}
            Ok(t) => return Err(format!("step {} ({}) changes {ty} to {t}", n + 1, s.rule)),
            Err(e) => return Err(format!("step {} ({}) is ill-typed: {e}", n + 1, s.rule)),
        }
    }
    Ok(Tally { checks: r.steps.len() + 1, skipped: 0 })
}

fn descent(r: &Run) -> Verdict {
    if let Some(e @ RewriteError::SizeNotDecreasing { .. }) = &r.error {
        return Err(e.to_string());
    }
    let mut t = Tally::default();
    for (n, s) in r.steps.iter().enumerate() {
        // Compared locally: the context around the redex is strictly monotone.
        match (try_size(s.redex()), try_size(s.contractum())) {
            (Ok(a), Ok(b)) if b < a => t.checks += 1,
            (Ok(a), Ok(b)) => return Err(format!("step {} ({}) goes from size {a} to {b}", n + 1, s.rule)),
            _ => t.skipped += 1,
        }
    }
    match try_size(&r.initial) {
        Ok(total) => {
            let bound = total - BigUint::from(1u32);
            if BigUint::from(r.steps.len()) > bound {
                return Err(format!("{} steps exceed size - 1 = {bound}", r.steps.len()));
            }
            t.checks += 1;
        }
        Err(_) => t.skipped += 1,
    }
    Ok(t)
}

fn nf_equivalence(env: &TypeEnv, ctx: &IndexCtx, r: &Run) -> Verdict {
    let mut checks = 0;
    for (n, e) in r.states().enumerate() {
        let terminal = is_terminal(env, ctx, e);
        let verdict = is_normal_form(env, ctx, e);
        if terminal != verdict.in_normal_form {
            let why = match verdict.violations.first() {
                Some(v) => format!("{} at {:?}: {}", v.production, v.path, v.detail),
                None => "no violation reported".into(),
            };
            return Err(format!(
                "state {n}: terminal = {terminal}, grammar says {} ({why}): {e}",
                verdict.in_normal_form
            ));
        }
        checks += 1;
    }
    Ok(Tally { checks, skipped: 0 })
}

/// Compares each redex with its contractum under every assignment of the
/// context at the rewritten position. Evaluation is compositional, so this
/// implies equality of the whole expressions and is cheaper to check. A
/// redex that mentions an index the position does not bind (the δ factor of
/// a δ-application) is compared as part of the whole expression instead.
fn value_preservation(data: &Data, ctx: &IndexCtx, r: &Run) -> Verdict {
    let mut t = Tally::default();
    for (n, s) in r.steps.iter().enumerate() {
        let local = ctx_at(ctx, &s.before, &s.path);
        let closed = unbound_vars(s.redex()).iter().all(|v| local.contains(v));
        let check = if closed {
            check_value_preservation(data, &local, s.redex(), s.contractum())
        } else {
            check_value_preservation(data, ctx, &s.before, &s.after)
        };
        match check {
            ValueCheck::Pass { .. } => t.checks += 1,
            ValueCheck::Skipped(_) => t.skipped += 1,
            ValueCheck::Fail { rho, before, after } => {
                let after = match after {
                    Ok(v) => v.to_string(),
                    Err(e) => e.to_string(),
                };
                return Err(format!("step {} ({}) under {rho:?}: {before} became {after}", n + 1, s.rule));
            }
            ValueCheck::Error(e) => return Err(format!("step {} ({}): {e}", n + 1, s.rule)),
        }
    }
    Ok(t)
}

fn evaluator_agreement(data: &Data, ctx: &IndexCtx, e: &Expr) -> Verdict {
    if e.has_field_terms() {
        return Ok(Tally { checks: 0, skipped: 1 });
    }
    let v = reduce(&eval_symbolic(ctx, e).map_err(|err| format!("symbolic: {err}"))?);
    let mut t = Tally::default();
    for rho in assignments(ctx.entries()) {
        let num = match eval_numeric(data, ctx, &rho, e) {
            Ok(n) => n,
            Err(EvalError::DivisionByZero | EvalError::Domain(_)) => {
                t.skipped += 1;
                continue;
            }
            Err(err) => return Err(format!("numeric: {err}")),
        };
        match flatten(&v, data, &rho) {
            Ok(s) if s.close_to(&num, TOLERANCE) => t.checks += 1,
            Ok(s) => return Err(format!("under {rho:?}: numeric {num}, symbolic {s} from {v}")),
            Err(err) => return Err(format!("under {rho:?}: numeric {num}, symbolic failed: {err}")),
        }
    }
    Ok(t)
}

pub fn check(p: Property, case: &Case, r: &Run) -> Verdict {
    match p {
        Property::TypePreservation => type_preservation(&case.env, &case.ctx, r),
        Property::Descent => descent(r),
        Property::NfEquivalence => nf_equivalence(&case.env, &case.ctx, r),
        Property::ValuePreservation => value_preservation(&case.data, &case.ctx, r),
        Property::EvaluatorAgreement => evaluator_agreement(&case.data, &case.ctx, &r.initial),
    }
}

fn candidates(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    for path in e.postorder_paths().into_iter().rev() {
        let node = e.at(&path).expect("path from the tree");
        if let Some(kind) = kind_at(env, ctx, e, &path) {
            let leaf = leaf_of(kind);
            if *node != leaf && node.node_count() > 1 {
                out.push(e.replace_at(&path, leaf));
            }
        }
        for c in node.children() {
            out.push(e.replace_at(&path, c.clone()));
        }
    }
    out.retain(|c| infer_type(env, ctx, c).is_ok());
    out.sort_by_key(Expr::node_count);
    out
}

/// Greedy shrinking of a failing case. Candidates that do not normalize
/// within `max_steps` are treated as passing.
pub fn shrink(p: Property, case: &Case, max_steps: usize) -> Expr {
    let mut cur = case.expr.clone();
    let mut budget = 5_000usize;
    'outer: while budget > 0 {
        for c in candidates(&case.env, &case.ctx, &cur) {
            if budget == 0 {
                break 'outer;
            }
            budget -= 1;
            let r = run(&case.env, &case.ctx, &c, max_steps);
            let trial = Case { expr: c.clone(), ..case.clone() };
            if !r.truncated && check(p, &trial, &r).is_err() {
                cur = c;
                continue 'outer;
            }
        }
        break;
    }
    cur
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub case: usize,
    pub ctx: IndexCtx,
    pub original: Expr,
    pub shrunk: Expr,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub property: Property,
    pub cases: usize,
    pub checks: usize,
    pub skipped: usize,
    /// Failing cases; only the first few are kept in `failures`.
    pub failed: usize,
    pub failures: Vec<Counterexample>,
}

impl PropertyReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub gen: GenConfig,
    pub cases: usize,
    pub properties: Vec<Property>,
    pub max_steps: usize,
    pub shrink: bool,
    /// Counterexamples kept per property.
    pub keep: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gen: GenConfig::default(),
            cases: 10_000,
            properties: Property::ALL.to_vec(),
            max_steps: 100_000,
            shrink: true,
            keep: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub reports: Vec<PropertyReport>,
    pub cases: usize,
    pub steps: usize,
    pub truncated: usize,
    pub max_nodes: usize,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.truncated == 0 && self.reports.iter().all(PropertyReport::ok)
    }

    pub fn report(&self, p: Property) -> Option<&PropertyReport> {
        self.reports.iter().find(|r| r.property == p)
    }
}

struct CaseResult {
    steps: usize,
    truncated: bool,
    nodes: usize,
    verdicts: Vec<(Property, Verdict)>,
}

pub fn run_properties(cfg: &RunConfig) -> RunReport {
    let start = Instant::now();
    let results: Vec<CaseResult> = (0..cfg.cases)
        .into_par_iter()
        .map(|n| {
            let case = generate_case(&cfg.gen, n);
            let r = run(&case.env, &case.ctx, &case.expr, cfg.max_steps);
            let verdicts = cfg.properties.iter().map(|p| (*p, check(*p, &case, &r))).collect();
            CaseResult { steps: r.steps.len(), truncated: r.truncated, nodes: case.expr.node_count(), verdicts }
        })
        .collect();
    let mut reports: Vec<PropertyReport> = cfg
        .properties
        .iter()
        .map(|p| PropertyReport {
            property: *p,
            cases: cfg.cases,
            checks: 0,
            skipped: 0,
            failed: 0,
            failures: Vec::new(),
        })
        .collect();
    let mut failing: Vec<(usize, usize, String)> = Vec::new();
    for (n, res) in results.iter().enumerate() {
        for (k, (_, v)) in res.verdicts.iter().enumerate() {
            match v {
                Ok(t) => {
                    reports[k].checks += t.checks;
                    reports[k].skipped += t.skipped;
                }
                Err(msg) => failing.push((k, n, msg.clone())),
            }
        }
    }
    for (k, report) in reports.iter_mut().enumerate() {
        let mine: Vec<&(usize, usize, String)> = failing.iter().filter(|f| f.0 == k).collect();
        report.failures = mine
            .par_iter()
            .take(cfg.keep)
            .map(|(_, n, msg)| {
                let case = generate_case(&cfg.gen, *n);
                let shrunk = if cfg.shrink { shrink(report.property, &case, 2_000) } else { case.expr.clone() };
                Counterexample { case: *n, ctx: case.ctx, original: case.expr, shrunk, message: msg.clone() }
            })
            .collect();
        report.failed = mine.len();
    }
    RunReport {
        cases: cfg.cases,
        steps: results.iter().map(|r| r.steps).sum(),
        truncated: results.iter().filter(|r| r.truncated).count(),
        max_nodes: results.iter().map(|r| r.nodes).max().unwrap_or(0),
        elapsed: start.elapsed(),
        reports,
    }
}
