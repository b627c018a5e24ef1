//! Exact checks of the size-metric inequalities.
//!
//! Three scalar inequalities back the descent argument for derivatives:
//!
//! * `5^(1+s) > 16 + 5^s`
//! * `5^(s1+s2) > 5^s1 > 4`
//! * `(1+s)·5^(1+s) > s·(16 + 5^s) + 20`
//!
//! Per rule, each catalog entry is instantiated with subterms of every size
//! in `1..=max_s` and both sides are measured with [`size`]. A subterm of size
//! `s` is a chain of `s - 1` negations, so the measurement evaluates the
//! rule's metric polynomials at those sizes.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::Pow;

use crate::expr::{Expr, UnOp};
use crate::index::{IndexCtx, SurfaceType, TypeEnv};
use crate::rules::{self, catalog, RuleCtx, RuleId};
use crate::size::size;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaFailure {
    /// `power-step`, `power-product`, `weighted-step` or a rule name with its template.
    pub name: String,
    pub sizes: Vec<u32>,
    pub lhs: BigUint,
    pub rhs: BigUint,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LemmaReport {
    /// Inequality instances evaluated.
    pub checked: usize,
    pub failures: Vec<LemmaFailure>,
    /// Catalog rules with no template; empty when coverage is complete.
    pub uncovered: Vec<RuleId>,
}

impl LemmaReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.uncovered.is_empty()
    }
}

fn pow5(e: u32) -> BigUint {
    BigUint::from(5u32).pow(e)
}

fn big(n: u32) -> BigUint {
    BigUint::from(n)
}

/// Subterm roles a template can ask for.
#[derive(Clone, Copy)]
enum Hole {
    /// Scalar tensor.
    Ten,
    /// Scalar field of dimension 3.
    Fld,
    /// Vector field component `G_j`.
    FldJ,
}

fn hole(kind: Hole, s: u32) -> Expr {
    let mut e = match kind {
        Hole::Ten => Expr::tensor("T", &[]),
        Hole::Fld => Expr::field("F", &[]),
        Hole::FldJ => Expr::field("G", &["j"]),
    };
    for _ in 1..s {
        e = Expr::neg(e);
    }
    e
}

struct Template {
    rule: &'static str,
    label: &'static str,
    ctx: &'static [&'static str],
    holes: &'static [Hole],
    /// Smallest subterm size the rule's side condition admits.
    min: u32,
    build: fn(&[Expr]) -> Expr,
}

const fn t(
    rule: &'static str,
    label: &'static str,
    ctx: &'static [&'static str],
    holes: &'static [Hole],
    build: fn(&[Expr]) -> Expr,
) -> Template {
    Template { rule, label, ctx, holes, min: 1, build }
}

fn x() -> Expr {
    Expr::tensor("x", &[])
}

fn at(e: Expr) -> Expr {
    Expr::probe(e, x())
}

fn zero() -> Expr {
    Expr::int(0)
}

fn e0(h: &[Expr]) -> Expr {
    h[0].clone()
}

fn e1(h: &[Expr]) -> Expr {
    h[1].clone()
}

fn dx(e: Expr) -> Expr {
    Expr::partial(&["i"], e)
}

use Hole::{Fld, FldJ, Ten};

const I: &[&str] = &["i"];
const NONE: &[&str] = &[];

static TEMPLATES: &[Template] = &[
    t("A1", "eps*eps", &["j", "k", "l", "m"], &[], |_| {
        Expr::mul(Expr::eps(&["i", "j", "k"]), Expr::eps(&["i", "l", "m"]))
    }),
    t("A3", "eps*conv", I, &[], |_| Expr::mul(Expr::eps(&["i", "j", "k"]), Expr::conv("V", &[], "H", &["j", "k"]))),
    t("A4", "eps*d", I, &[Fld], |h| Expr::mul(Expr::eps(&["i", "j", "k"]), Expr::partial(&["j", "k"], e0(h)))),
    t("A5", "delta*T", I, &[], |_| Expr::mul(Expr::delta("i", "j"), Expr::tensor("U", &["j"]))),
    t("A6", "delta*F", I, &[], |_| Expr::mul(Expr::delta("i", "j"), Expr::field("G", &["j"]))),
    t("A7", "delta*d", I, &[Fld], |h| Expr::mul(Expr::delta("i", "j"), Expr::partial(&["j"], e0(h)))),
    t("A8", "delta*conv", I, &[], |_| Expr::mul(Expr::delta("i", "j"), Expr::conv("V", &[], "H", &["j"]))),
    t("A9", "delta*conv@x", I, &[], |_| Expr::mul(Expr::delta("i", "j"), at(Expr::conv("V", &[], "H", &["j"])))),
    t("B1", "mul", NONE, &[Fld, Fld], |h| at(Expr::mul(e0(h), e1(h)))),
    t("B1", "div", NONE, &[Fld, Fld], |h| at(Expr::div(e0(h), e1(h)))),
    t("B1", "probed delta", I, &[FldJ], |h| at(Expr::mul(at(Expr::delta("i", "j")), e0(h)))),
    t("B2", "add", NONE, &[Fld, Fld], |h| at(Expr::add(e0(h), e1(h)))),
    t("B2", "sub", NONE, &[Fld, Fld], |h| at(Expr::sub(e0(h), e1(h)))),
    t("B3", "neg", NONE, &[Fld], |h| at(Expr::neg(e0(h)))),
    t("B3", "sqrt", NONE, &[Fld], |h| at(Expr::unary(UnOp::Sqrt, e0(h)))),
    t("B4", "sum", NONE, &[FldJ], |h| at(Expr::sum("j", 3, e0(h)))),
    t("B5", "delta", &["i", "j"], &[], |_| at(Expr::delta("i", "j"))),
    t("B5", "eps", &["i", "j", "k"], &[], |_| at(Expr::eps(&["i", "j", "k"]))),
    t("B5", "lift", NONE, &[Ten], |h| at(Expr::lift(3, e0(h)))),
    t("C2", "lift", I, &[Ten], |h| dx(Expr::lift(3, e0(h)))),
    t("C3", "sum", I, &[FldJ], |h| dx(Expr::sum("j", 3, e0(h)))),
    t("C5", "conv", I, &[], |_| dx(Expr::conv("V", &[], "H", &[]))),
    t("C6", "sqrt", I, &[Fld], |h| dx(Expr::unary(UnOp::Sqrt, e0(h)))),
    t("C7", "cos", I, &[Fld], |h| dx(Expr::unary(UnOp::Cos, e0(h)))),
    t("C8", "sin", I, &[Fld], |h| dx(Expr::unary(UnOp::Sin, e0(h)))),
    t("C9", "acos", I, &[Fld], |h| dx(Expr::unary(UnOp::Acos, e0(h)))),
    t("C10", "asin", I, &[Fld], |h| dx(Expr::unary(UnOp::Asin, e0(h)))),
    t("C11", "div", I, &[Fld, Fld], |h| dx(Expr::div(e0(h), e1(h)))),
    t("C14", "mul", I, &[Fld, Fld], |h| dx(Expr::mul(e0(h), e1(h)))),
    t("C15", "neg", I, &[Fld], |h| dx(Expr::neg(e0(h)))),
    t("C16", "add", I, &[Fld, Fld], |h| dx(Expr::add(e0(h), e1(h)))),
    t("C16", "sub", I, &[Fld, Fld], |h| dx(Expr::sub(e0(h), e1(h)))),
    t("C18", "tan", I, &[Fld], |h| dx(Expr::unary(UnOp::Tan, e0(h)))),
    t("C19", "atan", I, &[Fld], |h| dx(Expr::unary(UnOp::Atan, e0(h)))),
    t("C20", "exp", I, &[Fld], |h| dx(Expr::unary(UnOp::Exp, e0(h)))),
    t("C21", "pow1", I, &[Fld], |h| dx(Expr::unary(UnOp::Pow(1), e0(h)))),
    t("C21", "pow3", I, &[Fld], |h| dx(Expr::unary(UnOp::Pow(3), e0(h)))),
    t("C22", "dd", &["i", "j"], &[Fld], |h| dx(Expr::partial(&["j"], e0(h)))),
    t("D1", "neg0", NONE, &[], |_| Expr::neg(zero())),
    t("D1", "neglift0", NONE, &[], |_| Expr::neg(Expr::lift(3, zero()))),
    t("D2", "e+0", NONE, &[Ten], |h| Expr::add(e0(h), zero())),
    t("D2", "0+e", NONE, &[Ten], |h| Expr::add(zero(), e0(h))),
    t("D3", "e-0", NONE, &[Ten], |h| Expr::sub(e0(h), zero())),
    t("D4", "0-e", NONE, &[Ten], |h| Expr::sub(zero(), e0(h))),
    t("D5", "0/e", NONE, &[Ten], |h| Expr::div(zero(), e0(h))),
    t("D6", "0*e", NONE, &[Ten], |h| Expr::mul(zero(), e0(h))),
    t("D6", "e*0", NONE, &[Ten], |h| Expr::mul(e0(h), zero())),
    t("D8", "--e", NONE, &[Ten], |h| Expr::neg(Expr::neg(e0(h)))),
    t("E1", "(a/b)/c", NONE, &[Ten, Ten, Ten], |h| Expr::div(Expr::div(e0(h), e1(h)), h[2].clone())),
    t("E2", "a/(b/c)", NONE, &[Ten, Ten, Ten], |h| Expr::div(e0(h), Expr::div(e1(h), h[2].clone()))),
    t("E4", "(a/b)/(c/d)", NONE, &[Ten, Ten, Ten, Ten], |h| {
        Expr::div(Expr::div(e0(h), e1(h)), Expr::div(h[2].clone(), h[3].clone()))
    }),
    t("E5", "scalar factor", NONE, &[Ten], |h| Expr::sum("j", 3, Expr::mul(e0(h), Expr::tensor("U", &["j"])))),
    t("E5", "tensor body", NONE, &[Ten], |h| Expr::sum("j", 3, e0(h))),
    Template { rule: "E5", label: "field body", ctx: NONE, holes: &[Fld], min: 2, build: |h| Expr::sum("j", 3, e0(h)) },
    t("E6", "sqrt*sqrt", NONE, &[Ten], |h| Expr::mul(Expr::unary(UnOp::Sqrt, e0(h)), Expr::unary(UnOp::Sqrt, e0(h)))),
];

/// Declarations used by the rule templates.
pub fn template_env() -> TypeEnv {
    let mut env = TypeEnv::new();
    env.insert("T".into(), SurfaceType::Ten(vec![]));
    env.insert("U".into(), SurfaceType::Ten(vec![3]));
    env.insert("x".into(), SurfaceType::Ten(vec![3]));
    env.insert("F".into(), SurfaceType::Fld { dim: 3, shape: vec![] });
    env.insert("G".into(), SurfaceType::Fld { dim: 3, shape: vec![3] });
    env.insert("V".into(), SurfaceType::Img { dim: 3, shape: vec![] });
    env.insert("H".into(), SurfaceType::Krn);
    env
}

/// One instantiated rule template: context, redex and expected rule.
#[derive(Clone, Debug)]
pub struct RuleInstance {
    pub rule: RuleId,
    pub label: &'static str,
    pub ctx: IndexCtx,
    pub sizes: Vec<u32>,
    pub lhs: Expr,
}

/// Every template at every admissible combination of subterm sizes.
pub fn rule_instances(max_s: u32) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    for tpl in TEMPLATES {
        let rule = rules::rule_by_name(tpl.rule).expect("template names a catalog rule");
        let ctx = IndexCtx::from_entries(tpl.ctx.iter().map(|n| (*n, 3)));
        let n = tpl.holes.len();
        if tpl.min > max_s {
            continue;
        }
        let lo = tpl.min;
        let span = max_s - lo + 1;
        let total = (span as usize).pow(n as u32);
        for code in 0..total {
            let mut rest = code;
            let mut sizes = Vec::with_capacity(n);
            for _ in 0..n {
                sizes.push(lo + (rest % span as usize) as u32);
                rest /= span as usize;
            }
            let holes: Vec<Expr> = tpl.holes.iter().zip(&sizes).map(|(h, s)| hole(*h, *s)).collect();
            out.push(RuleInstance { rule, label: tpl.label, ctx: ctx.clone(), sizes, lhs: (tpl.build)(&holes) });
        }
    }
    out
}

/// Runs every inequality for sizes `1..=max_s`.
pub fn check_metric_lemmas(max_s: u32) -> LemmaReport {
    let mut report = LemmaReport::default();
    let mut check = |name: &str, sizes: Vec<u32>, lhs: BigUint, rhs: BigUint| {
        report.checked += 1;
        if lhs <= rhs {
            report.failures.push(LemmaFailure { name: name.into(), sizes, lhs, rhs });
        }
    };
    for s in 1..=max_s {
        check("power-step", vec![s], pow5(1 + s), big(16) + pow5(s));
        check("weighted-step", vec![s], big(1 + s) * pow5(1 + s), big(s) * (big(16) + pow5(s)) + big(20));
        for s2 in 1..=max_s {
            check("power-product", vec![s, s2], pow5(s + s2), pow5(s));
            check("power-product", vec![s, s2], pow5(s), big(4));
        }
    }

    let env = template_env();
    for inst in rule_instances(max_s) {
        let rc = RuleCtx { env: &env, ctx: &inst.ctx };
        let name = alloc::format!("{} {}", inst.rule, inst.label);
        let lhs = size(&inst.lhs);
        match rules::apply(inst.rule, &rc, &inst.lhs) {
            Some(rhs) => check(&name, inst.sizes, lhs, size(&rhs)),
            // A template the rule does not match is a failure of the table.
            None => check(&name, inst.sizes, BigUint::default(), lhs),
        }
    }
    report.uncovered = catalog()
        .iter()
        .map(|r| r.id)
        .filter(|id| !TEMPLATES.iter().any(|t| rules::rule_by_name(t.rule) == Some(*id)))
        .collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{apply_redex, Redex};

    #[test]
    fn scalar_inequalities_hold_at_unit_size() {
        assert!(pow5(2) > big(21));
        assert_eq!(big(2) * pow5(2), big(50));
        let r = check_metric_lemmas(1);
        assert!(r.ok(), "{:?}", r.failures);
    }

    #[test]
    fn every_rule_has_a_template() {
        assert!(check_metric_lemmas(1).uncovered.is_empty());
    }

    #[test]
    fn product_rule_at_unit_sizes() {
        let inst = rule_instances(1).into_iter().find(|i| alloc::format!("{}", i.rule) == "C14").unwrap();
        assert_eq!(size(&inst.lhs), big(375));
        let env = template_env();
        let out = rules::apply(inst.rule, &RuleCtx { env: &env, ctx: &inst.ctx }, &inst.lhs).unwrap();
        assert_eq!(size(&out), big(15));
    }

    /// The instances double as a typed smoke test of every rule.
    #[test]
    fn instances_are_typed_steps() {
        let env = template_env();
        for inst in rule_instances(2) {
            let rc = RuleCtx { env: &env, ctx: &inst.ctx };
            let contractum = rules::apply(inst.rule, &rc, &inst.lhs).unwrap();
            let redex = Redex { rule: inst.rule, path: Vec::new(), contractum };
            if let Err(e) = apply_redex(&env, &inst.ctx, &inst.lhs, redex) {
                panic!("{} {}: {e}", inst.rule, inst.label);
            }
        }
    }
}
