//! Search for distinct normal forms of one expression.
//!
//! The rewriting system is not confluent. Over a corpus of generated
//! field-free expressions with at least three ε factors, every reachable
//! rewrite order is explored and expressions with more than one normal form
//! are reported, together with a numeric check that the forms agree.

use std::collections::{HashMap, VecDeque};

use ein_core::eval::{check_value_preservation, ValueCheck};
use ein_core::rewrite::{all_redexes, apply_redex, normalize_with};
use ein_core::{Expr, IndexCtx, RuleId, Strategy, TypeEnv};

use crate::gen::{generate_case, Case, GenConfig, Weights};

/// Normal forms reachable from one expression.
#[derive(Clone, Debug)]
pub struct Reachable {
    /// Each normal form with the rules of one path leading to it.
    pub forms: Vec<(Expr, Vec<RuleId>)>,
    pub states: usize,
    /// False when the state budget ran out before the search finished.
    pub complete: bool,
}

/// Breadth-first search over all redex choices, up to `limit` states.
pub fn reachable_normal_forms(env: &TypeEnv, ctx: &IndexCtx, e: &Expr, limit: usize) -> Reachable {
    let mut parent: HashMap<Expr, Option<(Expr, RuleId)>> = HashMap::new();
    parent.insert(e.clone(), None);
    let mut queue = VecDeque::from([e.clone()]);
    let mut leaves = Vec::new();
    let mut complete = true;
    while let Some(cur) = queue.pop_front() {
        let redexes = all_redexes(env, ctx, &cur);
        if redexes.is_empty() {
            leaves.push(cur);
            continue;
        }
        for r in redexes {
            let rule = r.rule;
            let Ok(step) = apply_redex(env, ctx, &cur, r) else { continue };
            if parent.contains_key(&step.after) {
                continue;
            }
            if parent.len() >= limit {
                complete = false;
                break;
            }
            parent.insert(step.after.clone(), Some((cur.clone(), rule)));
            queue.push_back(step.after);
        }
    }
    let forms = leaves
        .into_iter()
        .map(|nf| {
            let mut rules = Vec::new();
            let mut at = &nf;
            while let Some(Some((prev, rule))) = parent.get(at) {
                rules.push(*rule);
                at = prev;
            }
            rules.reverse();
            (nf, rules)
        })
        .collect();
    Reachable { forms, states: parent.len(), complete }
}

/// Two structurally distinct normal forms of one expression.
#[derive(Clone, Debug)]
pub struct Witness {
    pub case: usize,
    pub ctx: IndexCtx,
    pub expr: Expr,
    pub left: (Expr, Vec<RuleId>),
    pub right: (Expr, Vec<RuleId>),
    /// Whether the fixed strategies alone already disagree.
    pub by_strategy: bool,
    pub values: ValueCheck,
}

impl Witness {
    pub fn values_agree(&self) -> bool {
        self.values.passed()
    }
}

#[derive(Clone, Debug)]
pub struct WitnessConfig {
    pub gen: GenConfig,
    pub max_cases: usize,
    /// Stop after this many witnesses.
    pub want: usize,
    pub state_limit: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        let weights = Weights { eps_app: 12, leaf: 2, ..Weights::default() };
        WitnessConfig {
            gen: GenConfig { seed: 7, dims: vec![3], field_terms: false, weights, ..GenConfig::default() },
            max_cases: 20_000,
            want: 3,
            state_limit: 3_000,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct WitnessReport {
    pub generated: usize,
    /// Corpus members: cases with at least three ε factors.
    pub examined: usize,
    pub witnesses: Vec<Witness>,
    /// Searches stopped by the state budget.
    pub incomplete: usize,
}

impl WitnessReport {
    pub fn ok(&self) -> bool {
        !self.witnesses.is_empty() && self.witnesses.iter().all(Witness::values_agree)
    }
}

pub fn eps_factors(e: &Expr) -> usize {
    usize::from(matches!(e, Expr::Eps(_))) + e.children().into_iter().map(eps_factors).sum::<usize>()
}

fn strategies_disagree(case: &Case) -> bool {
    let nfs: Vec<Option<Expr>> = Strategy::ALL
        .iter()
        .map(|s| normalize_with(&case.env, &case.ctx, &case.expr, *s).ok().map(|t| t.final_expr))
        .collect();
    nfs.windows(2).any(|w| w[0] != w[1])
}

pub fn find_witnesses(cfg: &WitnessConfig) -> WitnessReport {
    let mut report = WitnessReport::default();
    for n in 0..cfg.max_cases {
        if report.witnesses.len() >= cfg.want {
            break;
        }
        report.generated += 1;
        let case = generate_case(&cfg.gen, n);
        if eps_factors(&case.expr) < 3 {
            continue;
        }
        report.examined += 1;
        let reach = reachable_normal_forms(&case.env, &case.ctx, &case.expr, cfg.state_limit);
        if !reach.complete {
            report.incomplete += 1;
        }
        let mut forms = reach.forms.into_iter();
        let (Some(left), Some(right)) = (forms.next(), forms.next()) else { continue };
        let values = check_value_preservation(&case.data, &case.ctx, &left.0, &right.0);
        report.witnesses.push(Witness {
            case: n,
            by_strategy: strategies_disagree(&case),
            ctx: case.ctx,
            expr: case.expr,
            left,
            right,
            values,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use ein_core::parse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_normal_form_for_a_plain_pair() {
        let env = crate::gen::signature(3);
        let ctx = IndexCtx::new().with("i", 3).with("j", 3).with("l", 3).with("m", 3);
        let e = parse("eps(k,i,j) * eps(k,l,m)").unwrap();
        let r = reachable_normal_forms(&env, &ctx, &e, 100);
        assert!(r.complete);
        assert_eq!(r.forms.len(), 1);
        assert_eq!(r.forms[0].1.len(), 1);
    }

    #[test]
    fn nested_quotients_diverge() {
        let env = crate::gen::signature(3);
        let e = parse("A[] / (B[] / (A[] / B[]))").unwrap();
        let r = reachable_normal_forms(&env, &IndexCtx::new(), &e, 100);
        assert!(r.complete);
        let forms: Vec<String> = r.forms.iter().map(|f| f.0.to_string()).collect();
        assert_eq!(forms.len(), 2, "{forms:?}");
        let data = crate::gen::random_data(&env, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(check_value_preservation(&data, &IndexCtx::new(), &r.forms[0].0, &r.forms[1].0).passed());
    }
}
