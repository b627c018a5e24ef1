//! Normal-form membership and the terminal test.
//!
//! The grammar, written out:
//!
//! ```text
//! N ::= A | c
//! A ::= D | G
//! D ::= B | -G
//! G ::= B | D / D
//! B ::= T_α | F | F@T_α | c≠0 | δ_ij | ε_ij | ε_ijk | A+A | A-A
//!     | √N | lift(N) | exp(N) | N^c | κ(N) | sin(N) | ... | A*A | Σ N
//! F ::= F_α | V⊛H | ∂_ν F_α
//! ```
//!
//! with the product and summation restrictions (1) ε pairs share no index,
//! (2) no two ε indices in one derivative component, (3) `δ_ij * A` does not
//! mention `j` in `A`, (4) `√e * √e` is excluded and (5) no scalar factor or
//! index-free body under `Σ`. `lift(0)` counts as a zero wherever `0` does.
//!
//! A breach that no catalog rule can repair is reported as a [`Gap`] rather
//! than a violation, so that terminal expressions are exactly the normal
//! forms.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{BinOp, Expr, Path, UnOp};
use crate::index::{IndexCtx, IndexTerm, Kind, TypeEnv};
use crate::rewrite::{find_redex, Strategy};
use crate::rules::delta_rule_for;
use crate::scope::{child_ctx, classify_product, delta_core, eps_core, Product};
use crate::size::is_unit;
use crate::types::kind_of;

/// A grammar production or restriction that a subterm breaks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// For example `"restriction 3"` or `"D ::= -G"`.
    pub production: &'static str,
    pub path: Path,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GapKind {
    /// Two ε factors sharing indices in a way A1 does not cover.
    EpsPairSharing,
    /// Two ε indices in a derivative component outside the A3/A4 shapes.
    EpsDerivative,
    /// `δ_ij * A` mentioning `j` in a body no δ rule rewrites.
    DeltaBody,
    /// `δ_ij * A` with `j` in scope: a pointwise product.
    DeltaPointwise,
    DerivativeOfKappa,
    /// `∂ pow(e, 0)`.
    DerivativeOfPowZero,
    /// Derivative of a δ or ε application.
    DerivativeOfApplication,
    /// Several derivative indices over a nonlinear body.
    MultiIndexNonlinear,
    /// Probe of a derivative that is not `∂ F_α`.
    ProbeOfDerivative,
    DivisionByZero,
    /// `Σ_i e` with `e` a size-1 field term independent of `i`.
    IndependentFieldSum,
}

impl GapKind {
    pub fn name(self) -> &'static str {
        match self {
            GapKind::EpsPairSharing => "eps-pair-sharing",
            GapKind::EpsDerivative => "eps-derivative",
            GapKind::DeltaBody => "delta-body",
            GapKind::DeltaPointwise => "delta-pointwise",
            GapKind::DerivativeOfKappa => "derivative-of-kappa",
            GapKind::DerivativeOfPowZero => "derivative-of-pow-zero",
            GapKind::DerivativeOfApplication => "derivative-of-application",
            GapKind::MultiIndexNonlinear => "multi-index-nonlinear",
            GapKind::ProbeOfDerivative => "probe-of-derivative",
            GapKind::DivisionByZero => "division-by-zero",
            GapKind::IndependentFieldSum => "independent-field-sum",
        }
    }
}

impl fmt::Display for GapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gap {
    pub kind: GapKind,
    pub path: Path,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NfVerdict {
    /// Equivalent to `violations.is_empty()`.
    pub in_normal_form: bool,
    pub violations: Vec<Violation>,
    pub gaps: Vec<Gap>,
}

struct Walk<'a> {
    env: &'a TypeEnv,
    violations: Vec<Violation>,
    gaps: Vec<Gap>,
}

impl Walk<'_> {
    fn violate(&mut self, production: &'static str, path: &Path, detail: &str) {
        self.violations.push(Violation { production, path: path.clone(), detail: detail.into() });
    }

    fn gap(&mut self, kind: GapKind, path: &Path) {
        self.gaps.push(Gap { kind, path: path.clone() });
    }

    fn node(&mut self, ctx: &IndexCtx, e: &Expr, path: &mut Path) {
        match e {
            Expr::Unary(UnOp::Neg, g) => {
                if g.is_zero() {
                    self.violate("D ::= -G", path, "negated zero");
                } else if matches!(**g, Expr::Unary(UnOp::Neg, _)) {
                    self.violate("D ::= -G", path, "double negation");
                }
            }
            Expr::Binary(BinOp::Add | BinOp::Sub, a, b) => {
                if a.is_zero() || b.is_zero() {
                    self.violate("B ::= A±A", path, "zero operand");
                }
            }
            Expr::Binary(BinOp::Div, a, b) => {
                if a.is_zero() {
                    self.violate("G ::= D/D", path, "zero numerator");
                } else if matches!(**a, Expr::Binary(BinOp::Div, ..)) || matches!(**b, Expr::Binary(BinOp::Div, ..)) {
                    self.violate("G ::= D/D", path, "nested division");
                } else if b.is_zero() {
                    self.gap(GapKind::DivisionByZero, path);
                }
            }
            Expr::Binary(BinOp::Mul, a, b) => self.product(ctx, a, b, path),
            Expr::Sum { var, bound, body } => self.sum(ctx, var, *bound, body, path),
            Expr::Partial(nu, body) => self.partial(nu, body, path),
            Expr::Probe(f, _) => match &**f {
                Expr::Field(..) | Expr::Conv { .. } => {}
                Expr::Partial(_, g) if matches!(**g, Expr::Field(..)) => {}
                Expr::Partial(..) => self.gap(GapKind::ProbeOfDerivative, path),
                Expr::Binary(..)
                | Expr::Unary(..)
                | Expr::Sum { .. }
                | Expr::Delta(..)
                | Expr::Eps(_)
                | Expr::Lift(..) => self.violate("B ::= F@T", path, "probe of a non-field-form"),
                _ => {}
            },
            _ => {}
        }
        for (k, c) in e.children().into_iter().enumerate() {
            path.push(k);
            self.node(&child_ctx(ctx, e, k), c, path);
            path.pop();
        }
    }

    fn product(&mut self, ctx: &IndexCtx, a: &Expr, b: &Expr, path: &Path) {
        if a.is_zero() || b.is_zero() {
            self.violate("B ::= A*A", path, "zero factor");
            return;
        }
        if let (Expr::Unary(UnOp::Sqrt, x), Expr::Unary(UnOp::Sqrt, y)) = (a, b) {
            if x == y {
                self.violate("restriction 4", path, "product of equal square roots");
            }
            return;
        }
        if let (Expr::Eps(p), Expr::Eps(q)) = (a, b) {
            let shared: BTreeSet<&str> = var_set(p).intersection(&var_set(q)).copied().collect();
            if !shared.is_empty() {
                if eps_pair_contracts(ctx, p, q, &shared) {
                    self.violate("restriction 1", path, "ε factors share one contracted index");
                } else {
                    self.gap(GapKind::EpsPairSharing, path);
                }
            }
            return;
        }
        if let Expr::Eps(alpha) = a {
            if alpha.len() == 3 {
                let mine = var_set(alpha);
                if derivative_components(b).iter().any(|comp| comp.intersection(&mine).count() >= 2) {
                    if eps_kills_derivative(ctx, a, b) {
                        self.violate("restriction 2", path, "ε contracts two derivative indices");
                    } else {
                        self.gap(GapKind::EpsDerivative, path);
                    }
                }
            }
            return;
        }
        if let Expr::Delta(_, IndexTerm::Var(j)) = a {
            match classify_product(ctx, a) {
                Product::DeltaApp { .. } if delta_rule_for(b).is_some() => {
                    self.violate("restriction 3", path, "δ index substitutes into the other factor")
                }
                Product::DeltaApp { .. } => self.gap(GapKind::DeltaBody, path),
                _ if b.mentions_free(j) => self.gap(GapKind::DeltaPointwise, path),
                _ => {}
            }
        }
    }

    fn sum(&mut self, ctx: &IndexCtx, var: &str, bound: u32, body: &Expr, path: &Path) {
        if let Expr::Binary(BinOp::Mul, s, _) = body {
            if s.free_index_vars().is_empty() {
                self.violate("restriction 5", path, "scalar factor under Σ");
                return;
            }
        }
        if body.mentions_free(var) {
            return;
        }
        match kind_of(self.env, &ctx.with(var, bound), body) {
            Some(Kind::Fld(_)) if is_unit(body) => self.gap(GapKind::IndependentFieldSum, path),
            _ => self.violate("restriction 5", path, "Σ body independent of its index"),
        }
    }

    fn partial(&mut self, nu: &[IndexTerm], body: &Expr, path: &Path) {
        let single = nu.len() == 1;
        let grammar = "F ::= ∂F_α";
        match body {
            Expr::Field(..) => {}
            Expr::Lift(..)
            | Expr::Sum { .. }
            | Expr::Conv { .. }
            | Expr::Partial(..)
            | Expr::Unary(UnOp::Neg, _)
            | Expr::Binary(BinOp::Add | BinOp::Sub, ..) => {
                self.violate(grammar, path, "derivative not yet pushed down")
            }
            Expr::Unary(UnOp::Kappa, _) => self.gap(GapKind::DerivativeOfKappa, path),
            _ if !single => self.gap(GapKind::MultiIndexNonlinear, path),
            Expr::Unary(UnOp::Pow(0), _) => self.gap(GapKind::DerivativeOfPowZero, path),
            Expr::Binary(BinOp::Mul, a, _) if delta_core(a).is_some() || eps_core(a).is_some() => {
                self.gap(GapKind::DerivativeOfApplication, path)
            }
            Expr::Unary(..) | Expr::Binary(..) => self.violate(grammar, path, "derivative of a compound term"),
            _ => {}
        }
    }
}

fn var_set(items: &[IndexTerm]) -> BTreeSet<&str> {
    items.iter().filter_map(IndexTerm::as_var).collect()
}

/// The A1 shape: two 3-index ε with distinct variables sharing exactly one
/// contracted index.
fn eps_pair_contracts(ctx: &IndexCtx, p: &[IndexTerm], q: &[IndexTerm], shared: &BTreeSet<&str>) -> bool {
    let distinct = |a: &[IndexTerm]| a.len() == 3 && var_set(a).len() == 3;
    distinct(p) && distinct(q) && shared.len() == 1 && shared.iter().all(|s| !ctx.contains(s))
}

/// Index sets of every derivative component in `e`: `ν` of a derivative
/// and `β` of a convolution.
fn derivative_components(e: &Expr) -> Vec<BTreeSet<&str>> {
    let mut out = Vec::new();
    fn go<'e>(e: &'e Expr, out: &mut Vec<BTreeSet<&'e str>>) {
        match e {
            Expr::Partial(nu, _) => out.push(var_set(nu)),
            Expr::Conv { beta, .. } => out.push(var_set(beta)),
            _ => {}
        }
        for c in e.children() {
            go(c, out);
        }
    }
    go(e, &mut out);
    out
}

/// The A3/A4 shape: the other factor is itself the derivative component and
/// holds two contracted ε indices.
fn eps_kills_derivative(ctx: &IndexCtx, a: &Expr, b: &Expr) -> bool {
    let comp = match b {
        Expr::Partial(nu, _) => var_set(nu),
        Expr::Conv { beta, .. } => var_set(beta),
        _ => return false,
    };
    match classify_product(ctx, a) {
        Product::EpsApp { contracted, .. } => contracted.iter().filter(|c| comp.contains(c.as_str())).count() >= 2,
        _ => false,
    }
}

/// Checks `e` against the normal-form grammar under `Γ,σ`.
pub fn is_normal_form(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> NfVerdict {
    let mut w = Walk { env, violations: Vec::new(), gaps: Vec::new() };
    w.node(ctx, e, &mut Vec::new());
    NfVerdict { in_normal_form: w.violations.is_empty(), violations: w.violations, gaps: w.gaps }
}

/// True when no catalog rule applies anywhere in `e`.
pub fn is_terminal(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> bool {
    find_redex(env, ctx, e, Strategy::Innermost).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::SurfaceType;

    fn env() -> TypeEnv {
        let mut g = TypeEnv::new();
        g.insert("T".into(), SurfaceType::Ten(alloc::vec![3]));
        g.insert("S".into(), SurfaceType::Ten(alloc::vec![]));
        g.insert("F".into(), SurfaceType::Fld { dim: 3, shape: alloc::vec![] });
        g
    }

    #[test]
    fn variables_are_normal() {
        let v = is_normal_form(&env(), &IndexCtx::from_entries([("i", 3)]), &Expr::tensor("T", &["i"]));
        assert!(v.in_normal_form);
    }

    #[test]
    fn delta_application_breaks_restriction_three() {
        let e = Expr::mul(Expr::delta("i", "j"), Expr::tensor("T", &["j"]));
        let v = is_normal_form(&env(), &IndexCtx::from_entries([("i", 3)]), &e);
        assert_eq!(v.violations[0].production, "restriction 3");
    }

    #[test]
    fn eps_over_derivative_breaks_restriction_two() {
        let e = Expr::mul(Expr::eps(&["i", "j", "k"]), Expr::partial(&["j", "k"], Expr::field("F", &[])));
        let v = is_normal_form(&env(), &IndexCtx::from_entries([("i", 3)]), &e);
        assert_eq!(v.violations[0].production, "restriction 2");
    }

    #[test]
    fn scalar_factor_under_sum_breaks_restriction_five() {
        let e = Expr::sum("i", 3, Expr::mul(Expr::tensor("S", &[]), Expr::tensor("T", &["i"])));
        let v = is_normal_form(&env(), &IndexCtx::new(), &e);
        assert_eq!(v.violations[0].production, "restriction 5");
    }
}
