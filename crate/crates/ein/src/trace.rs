//! Step and trace records.

use ein_core::{RewriteStep, RewriteTrace};
use serde::Serialize;

use crate::doc::{to_doc, Node};

/// One rewrite. `before` and `after` are the redex and its replacement at
/// `path`; the sizes are of the whole expression, `null` when too large to
/// measure.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepRecord {
    pub rule: String,
    pub alias: Option<String>,
    pub path: Vec<usize>,
    pub before: Node,
    pub after: Node,
    pub size_before: Option<String>,
    pub size_after: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRecord {
    pub initial: Node,
    pub steps: Vec<StepRecord>,
    #[serde(rename = "final")]
    pub final_expr: Node,
}

impl From<&RewriteStep> for StepRecord {
    fn from(s: &RewriteStep) -> Self {
        StepRecord {
            rule: s.rule.to_string(),
            alias: s.rule.alias_name(),
            path: s.path.clone(),
            before: to_doc(s.redex()),
            after: to_doc(s.contractum()),
            size_before: s.size_before.as_ref().map(ToString::to_string),
            size_after: s.size_after.as_ref().map(ToString::to_string),
        }
    }
}

impl From<&RewriteTrace> for TraceRecord {
    fn from(t: &RewriteTrace) -> Self {
        TraceRecord {
            initial: to_doc(&t.initial),
            steps: t.steps.iter().map(StepRecord::from).collect(),
            final_expr: to_doc(&t.final_expr),
        }
    }
}

pub fn trace_json(t: &RewriteTrace) -> String {
    let mut s = serde_json::to_string_pretty(&TraceRecord::from(t)).expect("traces always serialize");
    s.push('\n');
    s
}

fn shown(s: &Option<num_bigint::BigUint>) -> String {
    s.as_ref().map_or_else(|| "?".into(), ToString::to_string)
}

/// One line per step: `rule path: redex ~> contractum  [size a -> b]`.
pub fn trace_text(t: &RewriteTrace) -> String {
    let mut out = format!("   {}\n", t.initial);
    for s in &t.steps {
        let alias = s.rule.alias_name().map(|a| format!("/{a}")).unwrap_or_default();
        out += &format!(
            "{}{} at {}: {} ~> {}  [size {} -> {}]\n   {}\n",
            s.rule,
            alias,
            ein_core::expr::path_string(&s.path),
            s.redex(),
            s.contractum(),
            shown(&s.size_before),
            shown(&s.size_after),
            s.after
        );
    }
    out
}
