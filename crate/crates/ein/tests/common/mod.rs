//! Golden normalization traces, compared byte for byte against
//! `tests/golden/`. Set `UPDATE_GOLDEN=1` to rewrite the files.

use std::fs;
use std::path::PathBuf;

use ein::envfile::parse_env;
use ein::trace::{trace_json, trace_text};
use ein_core::{normalize, parse_in, RewriteTrace};

pub struct Golden {
    pub name: &'static str,
    pub env: &'static str,
    pub expr: &'static str,
    /// A rule the trace must use.
    pub rule: &'static str,
    pub result: &'static str,
}

pub const CASES: &[Golden] = &[
    Golden { name: "delta_app", env: "T : TEN[3]; index i : 3", expr: "delta(i,j) * T[j]", rule: "A5", result: "T[i]" },
    Golden {
        name: "eps_hessian",
        env: "F : FLD3[]; index i : 3",
        expr: "eps(i,j,k) * d([j,k], F[])",
        rule: "A4",
        result: "lift(3, 0)",
    },
    Golden {
        name: "sum_scalar_factor",
        env: "A : TEN[]; U : TEN[3]",
        expr: "sum(i,1,3, A[] * U[i])",
        rule: "E5",
        result: "A[] * sum(i,1,3, U[i])",
    },
    Golden { name: "sqrt_pair", env: "A : TEN[]", expr: "sqrt(A[]) * sqrt(A[])", rule: "E6", result: "A[]" },
    Golden {
        name: "probe_sum",
        env: "G : FLD3[3]; x : TEN[3]",
        expr: "sum(i,1,3, G[i]) @ x[]",
        rule: "B4",
        result: "sum(i,1,3, G[i] @ x[])",
    },
    Golden {
        name: "product_rule",
        env: "F : FLD3[]; H : FLD3[]; index i : 3",
        expr: "d(i, F[] * H[])",
        rule: "C14",
        result: "F[] * d(i, H[]) + H[] * d(i, F[])",
    },
    Golden {
        name: "quotient_rule",
        env: "F : FLD3[]; H : FLD3[]; index i : 3",
        expr: "d(i, F[] / H[])",
        rule: "C11",
        result: "(d(i, F[]) * H[] - F[] * d(i, H[])) / (H[] * H[])",
    },
];

pub fn trace_of(g: &Golden) -> RewriteTrace {
    let env = parse_env(g.env).expect("golden env");
    let e = parse_in(g.expr, &env.types).expect("golden expression");
    normalize(&env.types, &env.ctx, &e).expect("golden normalization")
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Text and JSON renderings of every case, rendered twice, and whether both
/// match the checked-in files.
pub fn check_all() -> Vec<(&'static str, Result<(), String>)> {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    CASES
        .iter()
        .map(|g| {
            let check = || -> Result<(), String> {
                let t = trace_of(g);
                if !t.steps.iter().any(|s| s.rule.to_string() == g.rule) {
                    return Err(format!("{} does not use {}", g.name, g.rule));
                }
                if t.final_expr.to_string() != g.result {
                    return Err(format!("{} ends in {}, expected {}", g.name, t.final_expr, g.result));
                }
                for (ext, render) in [("txt", trace_text as fn(&RewriteTrace) -> String), ("json", trace_json)] {
                    let (a, b) = (render(&t), render(&trace_of(g)));
                    if a != b {
                        return Err(format!("{}.{ext} differs between runs", g.name));
                    }
                    let path = golden_dir().join(format!("{}.{ext}", g.name));
                    if update {
                        fs::write(&path, &a).map_err(|e| e.to_string())?;
                        continue;
                    }
                    let want = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    if want != a {
                        return Err(format!("{} differs from {}:\n{a}", g.name, path.display()));
                    }
                }
                Ok(())
            };
            (g.name, check())
        })
        .collect()
}
