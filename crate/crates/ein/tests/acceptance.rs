//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Runs without the libtest harness so the lines always show.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ein::exhaustive::{check_terminal_iff_nf, Signature};
use ein::gen::GenConfig;
use ein::harness::{run_properties, Property, RunConfig, RunReport};
use ein::witness::{find_witnesses, WitnessConfig};
use ein_core::eval::{assignments, eval_numeric, eval_symbolic, flatten, reduce, Data, Num, Value};
use ein_core::lemmas::check_metric_lemmas;
use ein_core::{normalize, parse, Expr, IndexCtx, TypeEnv};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn first_failure(r: &RunReport, p: Property) -> String {
    match r.report(p).and_then(|x| x.failures.first()) {
        Some(c) => format!("; case {}: {} (shrunk to {})", c.case, c.message, c.shrunk),
        None => String::new(),
    }
}

fn property_line(r: &RunReport, p: Property) -> (bool, String) {
    let x = r.report(p).expect("property was run");
    let pass = x.ok() && r.truncated == 0;
    let detail = format!(
        "{} cases, {} checks, {} skipped, {} failed, {} truncated{}",
        r.cases,
        x.checks,
        x.skipped,
        x.failed,
        r.truncated,
        first_failure(r, p)
    );
    (pass, detail)
}

fn type_preservation(r: &RunReport) -> Outcome {
    let (ok, detail) = property_line(r, Property::TypePreservation);
    let fast = r.elapsed < Duration::from_secs(120);
    outcome(ok && fast && r.cases >= 10_000, format!("{detail}; {} steps in {}", r.steps, secs(r.elapsed)))
}

fn descent(r: &RunReport) -> Outcome {
    let (ok, detail) = property_line(r, Property::Descent);
    outcome(ok, detail)
}

fn terminal_iff_nf(r: &RunReport) -> Outcome {
    let (ok, detail) = property_line(r, Property::NfEquivalence);
    let sig = Signature::small();
    let t = Instant::now();
    let ex = check_terminal_iff_nf(&sig);
    let mut detail = format!(
        "corpus: {detail}; exhaustive up to {} nodes: {} terms, {} terminal, {} ill-typed, {} disagreements in {}",
        sig.max_nodes,
        ex.checked,
        ex.terminal,
        ex.ill_typed.len(),
        ex.mismatches.len(),
        secs(t.elapsed())
    );
    if let Some(m) = ex.mismatches.first() {
        detail += &format!("; first: {} (terminal {}, grammar {})", m.expr, m.terminal, m.normal_form);
    }
    outcome(ok && ex.ok(), detail)
}

fn value_preservation(mixed: &RunReport) -> Outcome {
    let gen = GenConfig { field_terms: false, seed: 1, ..GenConfig::default() };
    let props = vec![Property::ValuePreservation, Property::EvaluatorAgreement];
    let free = run_properties(&RunConfig { gen, properties: props, ..RunConfig::default() });
    let (ok_free, free_detail) = property_line(&free, Property::ValuePreservation);
    let (ok_eval, eval_detail) = property_line(&free, Property::EvaluatorAgreement);
    let (ok_mixed, mixed_detail) = property_line(mixed, Property::ValuePreservation);
    outcome(
        ok_free && ok_eval && ok_mixed,
        format!(
            "field-free: {free_detail}; evaluators: {eval_detail}; mixed corpus (field steps skipped): {mixed_detail}"
        ),
    )
}

fn ctx_of(names: &[&str]) -> IndexCtx {
    IndexCtx::from_entries(names.iter().map(|n| (*n, 3)))
}

fn exact(data: &Data, ctx: &IndexCtx, e: &Expr, rho: &ein_core::eval::Assignment) -> Result<Num, String> {
    match eval_numeric(data, ctx, rho, e) {
        Ok(v @ Num::Exact(_)) => Ok(v),
        Ok(v) => Err(format!("{e} is inexact: {v}")),
        Err(err) => Err(format!("{e}: {err}")),
    }
}

/// `Σ_i ε_ijk ε_ilm = δ_jl δ_km - δ_jm δ_kl`, through the oracle, the
/// rewriter and the symbolic reduction.
fn eps_eps() -> Outcome {
    let ctx = ctx_of(&["j", "k", "l", "m"]);
    let data = Data::new();
    let env = TypeEnv::new();
    let lhs = parse("eps(i,j,k) * eps(i,l,m)").unwrap();
    let sum = parse("sum(i,1,3, eps(i,j,k) * eps(i,l,m))").unwrap();
    let rhs = parse("delta(j,l) * delta(k,m) - delta(j,m) * delta(k,l)").unwrap();
    let rewritten = match normalize(&env, &ctx, &lhs) {
        Ok(t) => t.final_expr,
        Err(e) => return outcome(false, format!("normalization failed: {e}")),
    };
    let symbolic = match eval_symbolic(&ctx, &lhs) {
        Ok(v) => reduce(&v),
        Err(e) => return outcome(false, format!("symbolic evaluation failed: {e}")),
    };
    let mut checked = 0;
    for rho in assignments(ctx.entries()) {
        let want = match exact(&data, &ctx, &rhs, &rho) {
            Ok(v) => v,
            Err(e) => return outcome(false, e),
        };
        for e in [&lhs, &sum, &rewritten] {
            match exact(&data, &ctx, e, &rho) {
                Ok(v) if v == want => {}
                Ok(v) => return outcome(false, format!("{e} under {rho:?}: {v}, expected {want}")),
                Err(err) => return outcome(false, err),
            }
        }
        match flatten(&symbolic, &data, &rho) {
            Ok(v) if v == want => {}
            other => return outcome(false, format!("symbolic {symbolic} under {rho:?}: {other:?}")),
        }
        checked += 1;
    }
    outcome(checked == 81, format!("{checked} assignments of (j,k,l,m), exact; rewrites to {rewritten}"))
}

fn delta_laws() -> Outcome {
    let data = Data::new();
    let chain = parse("sum(k,1,3, delta(i,k) * delta(k,j))").unwrap();
    let delta = parse("delta(i,j)").unwrap();
    let ctx = ctx_of(&["i", "j"]);
    let mut checked = 0;
    for rho in assignments(ctx.entries()) {
        match (exact(&data, &ctx, &chain, &rho), exact(&data, &ctx, &delta, &rho)) {
            (Ok(a), Ok(b)) if a == b => checked += 1,
            (a, b) => return outcome(false, format!("chain under {rho:?}: {a:?} vs {b:?}")),
        }
    }
    match eval_symbolic(&ctx, &chain).map(|v| reduce(&v)) {
        Ok(Value::Kron(..)) => {}
        other => return outcome(false, format!("chain reduces to {other:?}, not a single δ")),
    }
    let trace = parse("sum(i,1,3, delta(i,i))").unwrap();
    let empty = IndexCtx::new();
    let three = Num::int(3);
    match exact(&data, &empty, &trace, &Default::default()) {
        Ok(v) if v == three => {}
        other => return outcome(false, format!("δ_ii = {other:?}")),
    }
    match eval_symbolic(&empty, &trace).map(|v| reduce(&v)) {
        Ok(Value::Real(r)) if Num::Exact(r.clone()) == three => {}
        other => return outcome(false, format!("δ_ii reduces to {other:?}")),
    }
    outcome(checked == 9, format!("δ_ik δ_kj = δ_ij at all {checked} (i,j), δ_ii = 3; exact and symbolic"))
}

fn metric_lemmas() -> Outcome {
    let t = Instant::now();
    let r = check_metric_lemmas(6);
    let took = t.elapsed();
    let mut detail = format!(
        "{} inequality instances over sizes 1..6, {} failures, {} rules without a template, {}",
        r.checked,
        r.failures.len(),
        r.uncovered.len(),
        secs(took)
    );
    if let Some(f) = r.failures.first() {
        detail += &format!("; first: {} at {:?}: {} vs {}", f.name, f.sizes, f.lhs, f.rhs);
    }
    outcome(r.ok() && took < Duration::from_secs(1), detail)
}

fn non_confluence() -> Outcome {
    let t = Instant::now();
    let r = find_witnesses(&WitnessConfig::default());
    let mut detail = format!(
        "{} triple-ε terms searched, {} with distinct normal forms, values agree in {}, {}",
        r.examined,
        r.witnesses.len(),
        r.witnesses.iter().filter(|w| w.values_agree()).count(),
        secs(t.elapsed())
    );
    if let Some(w) = r.witnesses.first() {
        let rules = |v: &[ein_core::RuleId]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        detail += &format!(
            "; e.g. case {}: {} ->[{}] {} and ->[{}] {}",
            w.case,
            w.expr,
            rules(&w.left.1),
            w.left.0,
            rules(&w.right.1),
            w.right.0
        );
    }
    outcome(r.ok(), detail)
}

fn golden() -> Outcome {
    let results = common::check_all();
    let failed: Vec<String> =
        results.iter().filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}"))).collect();
    let names: Vec<&str> = results.iter().map(|(n, _)| *n).collect();
    if failed.is_empty() {
        outcome(true, format!("{} traces identical across runs and to the files: {}", names.len(), names.join(", ")))
    } else {
        outcome(false, failed.join("; "))
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig {
        gen: GenConfig::default(),
        properties: vec![
            Property::TypePreservation,
            Property::Descent,
            Property::NfEquivalence,
            Property::ValuePreservation,
        ],
        ..RunConfig::default()
    };
    let corpus = run_properties(&cfg);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("type preservation", Box::new(|| type_preservation(&corpus))),
        ("strict descent and step bound", Box::new(|| descent(&corpus))),
        ("terminal iff normal form", Box::new(|| terminal_iff_nf(&corpus))),
        ("value preservation", Box::new(|| value_preservation(&corpus))),
        ("eps-eps identity", Box::new(eps_eps)),
        ("delta laws", Box::new(delta_laws)),
        ("metric lemmas and per-rule descent", Box::new(metric_lemmas)),
        ("non-confluence witness", Box::new(non_confluence)),
        ("golden traces", Box::new(golden)),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, n + 1, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
