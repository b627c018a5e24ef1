use ein_core::rewrite::{normalize_with, RewriteError};
use ein_core::{
    infer_type, is_normal_form, is_terminal, normalize, parse_in, rewrite_once, size, IndexCtx, Strategy, SurfaceType,
    TypeEnv, TypeErrorCode,
};

fn env() -> TypeEnv {
    let mut env = TypeEnv::new();
    env.insert("A".into(), SurfaceType::Ten(vec![]));
    env.insert("T".into(), SurfaceType::Ten(vec![3]));
    env.insert("M".into(), SurfaceType::Ten(vec![3, 3]));
    env.insert("F".into(), SurfaceType::Fld { dim: 3, shape: vec![] });
    env.insert("x".into(), SurfaceType::Ten(vec![3]));
    env
}

const INPUTS: &[(&str, &[&str])] = &[
    ("delta(i,j) * T[j]", &["i"]),
    ("sum(k,1,3, delta(i,k) * M[k,j])", &["i", "j"]),
    ("eps(k,i,j) * eps(k,l,m)", &["i", "j", "l", "m"]),
    ("A[] * (T[i] + 0) - 0 * M[i,i]", &["i"]),
    ("sqrt(A[]) * sqrt(A[]) / (A[] / A[])", &[]),
    ("d(i, F[] * F[]) @ x[]", &["i"]),
    ("d([i,j], sin(F[]))", &["i", "j"]),
    ("lift(3, A[] + T[1]) @ x[] * pow(A[], 2)", &[]),
];

fn case(text: &str, names: &[&str]) -> (TypeEnv, IndexCtx, ein_core::Expr) {
    let env = env();
    let ctx = IndexCtx::from_entries(names.iter().map(|n| (*n, 3)));
    let e = parse_in(text, &env).unwrap();
    (env, ctx, e)
}

#[test]
fn normal_forms_are_terminal_and_well_formed() {
    for (text, names) in INPUTS {
        let (env, ctx, e) = case(text, names);
        for s in Strategy::ALL {
            let t = normalize_with(&env, &ctx, &e, s).unwrap_or_else(|err| panic!("{text}: {err}"));
            assert!(is_terminal(&env, &ctx, &t.final_expr), "{text}");
            let v = is_normal_form(&env, &ctx, &t.final_expr);
            assert!(v.in_normal_form, "{text} -> {}: {:?}", t.final_expr, v.violations);
        }
    }
}

#[test]
fn steps_shrink_and_keep_the_type() {
    for (text, names) in INPUTS {
        let (env, ctx, e) = case(text, names);
        let ty = infer_type(&env, &ctx, &e).unwrap();
        let t = normalize(&env, &ctx, &e).unwrap();
        let budget = size(&e) - 1u32;
        assert!(num_bigint::BigUint::from(t.steps.len()) <= budget, "{text}");
        for s in &t.steps {
            assert!(size(&s.after) < size(&s.before), "{text}: {}", s.rule);
            assert_eq!(infer_type(&env, &ctx, &s.after).unwrap(), ty, "{text}: {}", s.rule);
        }
    }
}

#[test]
fn single_steps_chain_into_the_trace() {
    let (env, ctx, e) = case("sum(k,1,3, delta(i,k) * M[k,j])", &["i", "j"]);
    let t = normalize(&env, &ctx, &e).unwrap();
    let mut cur = e;
    for s in &t.steps {
        let step = rewrite_once(&env, &ctx, &cur).unwrap().expect("a redex remains");
        assert_eq!(step.rule, s.rule);
        cur = step.after;
    }
    assert_eq!(cur, t.final_expr);
    assert!(rewrite_once(&env, &ctx, &cur).unwrap().is_none());
}

#[test]
fn ill_typed_input_is_rejected_before_rewriting() {
    let (env, ctx, e) = case("T[j]", &["i"]);
    match normalize(&env, &ctx, &e) {
        Err(RewriteError::IllTyped(err)) => assert_eq!(err.code, TypeErrorCode::UnboundIndex),
        other => panic!("{other:?}"),
    }
}
