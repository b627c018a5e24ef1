//! Random well-typed expressions.
//!
//! Generation is type-directed: every production is chosen for a target kind
//! under the current index context, so the output typechecks by construction.
//! Each case is still run through `infer_type` by the harness.

use ein_core::eval::{Data, DenseTensor};
use ein_core::{try_size, Expr, IndexCtx, IndexTerm, Kind, MultiIndex, SurfaceType, TypeEnv, UnOp};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative production weights. Zero disables a production.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weights {
    pub leaf: u32,
    pub neg: u32,
    pub add: u32,
    pub sub: u32,
    pub mul: u32,
    pub div: u32,
    pub unary: u32,
    pub sum: u32,
    pub delta_app: u32,
    pub eps_app: u32,
    pub probe: u32,
    pub partial: u32,
    pub lift: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            leaf: 4,
            neg: 2,
            add: 3,
            sub: 2,
            mul: 4,
            div: 2,
            unary: 2,
            sum: 3,
            delta_app: 3,
            eps_app: 3,
            probe: 2,
            partial: 3,
            lift: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: usize,
    pub dims: Vec<u32>,
    /// Allow fields, convolutions and derivatives. `lift` and probes of
    /// lifted terms are generated either way.
    pub field_terms: bool,
    pub weights: Weights,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { seed: 0, max_depth: 6, dims: vec![2, 3], field_terms: true, weights: Weights::default() }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("max depth must be at least 1")]
    Depth,
    #[error("dimensions must be 2 or 3, got {0}")]
    Dim(u32),
    #[error("no dimensions given")]
    NoDims,
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_depth == 0 {
            return Err(ConfigError::Depth);
        }
        if self.dims.is_empty() {
            return Err(ConfigError::NoDims);
        }
        match self.dims.iter().find(|d| !matches!(d, 2 | 3)) {
            Some(d) => Err(ConfigError::Dim(*d)),
            None => Ok(()),
        }
    }
}

/// One generated test case.
#[derive(Clone, Debug)]
pub struct Case {
    pub index: usize,
    pub dim: u32,
    pub env: TypeEnv,
    pub ctx: IndexCtx,
    pub expr: Expr,
    pub data: Data,
}

const VARS: [&str; 10] = ["i", "j", "k", "l", "m", "n", "p", "q", "r", "s"];

/// The fixed parameter signature for dimension `d`.
pub fn signature(d: u32) -> TypeEnv {
    let ten = |s: &[u32]| SurfaceType::Ten(s.to_vec());
    let mut env = TypeEnv::new();
    env.insert("A".into(), ten(&[]));
    env.insert("B".into(), ten(&[]));
    env.insert("U".into(), ten(&[d]));
    env.insert("W".into(), ten(&[d]));
    env.insert("M".into(), ten(&[d, d]));
    env.insert("x".into(), ten(&[d]));
    env.insert("F".into(), SurfaceType::Fld { dim: d, shape: vec![] });
    env.insert("G".into(), SurfaceType::Fld { dim: d, shape: vec![d] });
    env.insert("V".into(), SurfaceType::Img { dim: d, shape: vec![] });
    env.insert("K".into(), SurfaceType::Krn);
    env
}

fn rational(rng: &mut ChaCha8Rng) -> BigRational {
    let n: i64 = rng.gen_range(1..=5);
    let d: i64 = *[1, 1, 1, 2, 3].choose(rng).unwrap();
    let s = if rng.gen_bool(0.3) { -1 } else { 1 };
    BigRational::new(BigInt::from(s * n), BigInt::from(d))
}

/// Nonzero rational data for every tensor parameter of `env`.
pub fn random_data(env: &TypeEnv, rng: &mut ChaCha8Rng) -> Data {
    let mut data = Data::new();
    for (name, ty) in env {
        if let SurfaceType::Ten(shape) = ty {
            let len = shape.iter().product::<u32>() as usize;
            let values = (0..len).map(|_| rational(rng)).collect();
            data.insert(name.clone(), DenseTensor::new(shape.clone(), values).expect("shape matches"));
        }
    }
    data
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    d: u32,
    fields: bool,
    w: &'a Weights,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Prod {
    Leaf,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Unary,
    Sum,
    DeltaApp,
    EpsApp,
    Probe,
    Partial,
    Lift,
}

fn var(name: &str) -> IndexTerm {
    IndexTerm::var(name)
}

fn fresh(ctx: &IndexCtx) -> Option<&'static str> {
    VARS.iter().copied().find(|v| !ctx.contains(v))
}

impl Gen<'_> {
    fn term(&mut self, ctx: &IndexCtx) -> IndexTerm {
        let names: Vec<&str> = ctx.names().collect();
        if names.is_empty() || self.rng.gen_bool(0.2) {
            IndexTerm::Const(self.rng.gen_range(1..=self.d))
        } else {
            var(names.choose(&mut self.rng).unwrap())
        }
    }

    fn ten_leaf(&mut self, ctx: &IndexCtx) -> Expr {
        match self.rng.gen_range(0..10) {
            0 => Expr::Const(rational(&mut self.rng)),
            1 => Expr::int(self.rng.gen_range(0..=2)),
            2 => Expr::Tensor("A".into(), vec![]),
            3 => Expr::Tensor("B".into(), vec![]),
            4 | 5 => {
                let name = if self.rng.gen_bool(0.5) { "U" } else { "W" };
                Expr::Tensor(name.into(), vec![self.term(ctx)])
            }
            6 => Expr::Tensor("M".into(), vec![self.term(ctx), self.term(ctx)]),
            7 => Expr::Delta(self.term(ctx), self.term(ctx)),
            8 if !ctx.is_empty() => {
                let alpha = (0..self.d).map(|_| self.term(ctx)).collect();
                Expr::Eps(alpha)
            }
            _ => Expr::Tensor("A".into(), vec![]),
        }
    }

    fn fld_leaf(&mut self, ctx: &IndexCtx) -> Expr {
        if !self.fields {
            let body = self.ten_leaf(ctx);
            return Expr::Lift(self.d, Box::new(body));
        }
        match self.rng.gen_range(0..6) {
            0 | 1 => Expr::Field("F".into(), vec![]),
            2 | 3 => Expr::Field("G".into(), vec![self.term(ctx)]),
            4 => {
                let n = self.rng.gen_range(0..=2);
                let beta = (0..n).map(|_| self.term(ctx)).collect();
                Expr::Conv { image: "V".into(), alpha: vec![], kernel: "K".into(), beta }
            }
            _ => {
                let body = self.ten_leaf(ctx);
                Expr::Lift(self.d, Box::new(body))
            }
        }
    }

    fn leaf(&mut self, ctx: &IndexCtx, kind: Kind) -> Expr {
        match kind {
            Kind::Ten => self.ten_leaf(ctx),
            Kind::Fld(_) => self.fld_leaf(ctx),
        }
    }

    /// A factor that mentions `v`, used to keep binders live.
    fn user_of(&mut self, v: &str, kind: Kind) -> Expr {
        match kind {
            Kind::Fld(_) if self.fields && self.rng.gen_bool(0.6) => Expr::Field("G".into(), vec![var(v)]),
            Kind::Fld(_) => Expr::Lift(self.d, Box::new(Expr::Tensor("U".into(), vec![var(v)]))),
            Kind::Ten => {
                let name = if self.rng.gen_bool(0.5) { "U" } else { "W" };
                Expr::Tensor(name.into(), vec![var(v)])
            }
        }
    }

    fn mention_all(&mut self, mut body: Expr, vars: &[&str], kind: Kind) -> Expr {
        for v in vars {
            if !body.mentions_free(v) {
                let u = self.user_of(v, kind);
                body = if self.rng.gen_bool(0.5) { Expr::mul(u, body) } else { Expr::mul(body, u) };
            }
        }
        body
    }

    fn pick(&mut self, ctx: &IndexCtx, kind: Kind, partials: u8) -> Prod {
        let w = self.w;
        let fld = matches!(kind, Kind::Fld(_));
        let mut options = vec![
            (Prod::Leaf, w.leaf),
            (Prod::Neg, w.neg),
            (Prod::Add, w.add),
            (Prod::Sub, w.sub),
            (Prod::Mul, w.mul),
            (Prod::Div, w.div),
            (Prod::Unary, w.unary),
            (Prod::Sum, w.sum),
            (Prod::EpsApp, w.eps_app),
        ];
        if !ctx.is_empty() {
            options.push((Prod::DeltaApp, w.delta_app));
        }
        if fld {
            options.push((Prod::Lift, w.lift));
            if self.fields && !ctx.is_empty() && partials < 2 {
                options.push((Prod::Partial, w.partial));
            }
        } else {
            options.push((Prod::Probe, w.probe));
        }
        let total: u32 = options.iter().map(|o| o.1).sum();
        if total == 0 {
            return Prod::Leaf;
        }
        let mut roll = self.rng.gen_range(0..total);
        for (p, weight) in options {
            if roll < weight {
                return p;
            }
            roll -= weight;
        }
        Prod::Leaf
    }

    fn expr(&mut self, ctx: &IndexCtx, kind: Kind, depth: usize, partials: u8) -> Expr {
        if depth == 0 {
            return self.leaf(ctx, kind);
        }
        let sub = depth - 1;
        match self.pick(ctx, kind, partials) {
            Prod::Leaf => self.leaf(ctx, kind),
            Prod::Neg => Expr::neg(self.expr(ctx, kind, sub, partials)),
            Prod::Add => Expr::add(self.expr(ctx, kind, sub, partials), self.expr(ctx, kind, sub, partials)),
            Prod::Sub => Expr::sub(self.expr(ctx, kind, sub, partials), self.expr(ctx, kind, sub, partials)),
            Prod::Mul => self.product(ctx, kind, sub, partials),
            Prod::Div => {
                let num = self.expr(ctx, kind, sub, partials);
                let den = self.expr(&IndexCtx::new(), kind, sub.min(2), partials);
                Expr::div(num, den)
            }
            Prod::Unary => {
                let op = *[
                    UnOp::Sqrt,
                    UnOp::Exp,
                    UnOp::Kappa,
                    UnOp::Pow(0),
                    UnOp::Pow(1),
                    UnOp::Pow(2),
                    UnOp::Pow(3),
                    UnOp::Sin,
                    UnOp::Cos,
                    UnOp::Tan,
                    UnOp::Asin,
                    UnOp::Acos,
                    UnOp::Atan,
                ]
                .choose(&mut self.rng)
                .unwrap();
                Expr::unary(op, self.expr(&IndexCtx::new(), kind, sub.min(3), partials))
            }
            Prod::Sum => self.sum(ctx, kind, sub, partials),
            Prod::DeltaApp => self.delta_app(ctx, kind, sub, partials),
            Prod::EpsApp => self.eps_app(ctx, kind, sub, partials),
            Prod::Probe => {
                let field = self.expr(ctx, Kind::Fld(self.d), sub, partials);
                Expr::probe(field, Expr::Tensor("x".into(), vec![]))
            }
            Prod::Partial => self.partial(ctx, sub, partials),
            Prod::Lift => Expr::lift(self.d, self.expr(ctx, Kind::Ten, sub, partials)),
        }
    }

    /// Plain product. Square roots of a repeated factor are favoured so that
    /// `√e·√e` shows up.
    fn product(&mut self, ctx: &IndexCtx, kind: Kind, depth: usize, partials: u8) -> Expr {
        if self.rng.gen_ratio(1, 8) {
            let e = self.expr(&IndexCtx::new(), kind, depth.min(2), partials);
            let r = Expr::unary(UnOp::Sqrt, e);
            return Expr::mul(r.clone(), r);
        }
        let lhs = self.expr(ctx, kind, depth, partials);
        let rhs = self.expr(ctx, kind, depth, partials);
        Expr::mul(lhs, rhs)
    }

    fn sum(&mut self, ctx: &IndexCtx, kind: Kind, depth: usize, partials: u8) -> Expr {
        let Some(v) = fresh(ctx) else { return self.leaf(ctx, kind) };
        let inner = ctx.with(v, self.d);
        let mut body = self.expr(&inner, kind, depth, partials);
        if self.rng.gen_bool(0.8) {
            body = self.mention_all(body, &[v], kind);
        }
        Expr::sum(v, self.d, body)
    }

    fn delta_app(&mut self, ctx: &IndexCtx, kind: Kind, depth: usize, partials: u8) -> Expr {
        let names: Vec<&str> = ctx.names().collect();
        let i = *names.choose(&mut self.rng).unwrap();
        let Some(j) = fresh(ctx) else { return self.leaf(ctx, kind) };
        let inner = ctx.without(i).with(j, self.d);
        let body = match (kind, self.rng.gen_range(0..5)) {
            (Kind::Ten, 0) => Expr::Tensor("U".into(), vec![var(j)]),
            (Kind::Ten, 1) => Expr::Tensor("M".into(), vec![var(j), self.term(&inner)]),
            (Kind::Fld(_), 0) if self.fields => Expr::Field("G".into(), vec![var(j)]),
            (Kind::Fld(_), 1) if self.fields && partials < 2 => {
                self.derivative(vec![var(j)], &inner.without(j), depth.min(1), partials)
            }
            (Kind::Fld(_), 2) if self.fields => {
                Expr::Conv { image: "V".into(), alpha: vec![], kernel: "K".into(), beta: vec![var(j)] }
            }
            _ => {
                let b = self.expr(&inner, kind, depth, partials);
                self.mention_all(b, &[j], kind)
            }
        };
        let delta = Expr::Delta(var(i), var(j));
        Expr::mul(delta, body)
    }

    fn eps_app(&mut self, ctx: &IndexCtx, kind: Kind, depth: usize, partials: u8) -> Expr {
        let names: Vec<&'static str> = VARS.iter().copied().filter(|v| ctx.contains(v)).collect();
        if self.d == 3 && kind == Kind::Ten && names.len() >= 4 && self.rng.gen_bool(0.3) {
            return self.eps_pair(ctx, &names);
        }
        let mut inner = ctx.clone();
        let mut alpha = Vec::new();
        let mut contracted = Vec::new();
        for _ in 0..self.d {
            let reuse = !names.is_empty() && self.rng.gen_bool(0.4);
            if reuse {
                alpha.push(var(names.choose(&mut self.rng).unwrap()));
                continue;
            }
            let Some(c) = fresh(&inner) else { return self.leaf(ctx, kind) };
            inner = inner.with(c, self.d);
            contracted.push(c);
            alpha.push(var(c));
        }
        if contracted.is_empty() {
            let Some(c) = fresh(&inner) else { return self.leaf(ctx, kind) };
            inner = inner.with(c, self.d);
            contracted.push(c);
            let k = self.rng.gen_range(0..alpha.len());
            alpha[k] = var(c);
        }
        let body = match (kind, self.rng.gen_range(0..4)) {
            (Kind::Ten, 0) if self.d == 3 => {
                // A second ε sharing one contracted index.
                let shared = contracted[0];
                let mut beta = vec![var(shared)];
                while beta.len() < 3 {
                    beta.push(self.term(&inner));
                }
                Expr::Eps(beta)
            }
            (Kind::Ten, 1) if contracted.len() >= 2 => {
                Expr::Tensor("M".into(), vec![var(contracted[0]), var(contracted[1])])
            }
            (Kind::Fld(_), 0) if self.fields && contracted.len() >= 2 && partials < 2 => {
                let outer = inner.without(contracted[0]).without(contracted[1]);
                self.derivative(vec![var(contracted[0]), var(contracted[1])], &outer, depth.min(1), partials)
            }
            (Kind::Fld(_), 1) if self.fields && contracted.len() >= 2 => Expr::Conv {
                image: "V".into(),
                alpha: vec![],
                kernel: "K".into(),
                beta: vec![var(contracted[0]), var(contracted[1])],
            },
            _ => self.expr(&inner, kind, depth, partials),
        };
        let body = self.mention_all(body, &contracted, kind);
        Expr::mul(Expr::Eps(alpha), body)
    }

    /// `ε_cab · ε_cef` with one contracted index and four distinct ones from
    /// the context, the shape the ε·ε identity applies to.
    fn eps_pair(&mut self, ctx: &IndexCtx, names: &[&'static str]) -> Expr {
        let mut picked: Vec<&str> = names.to_vec();
        picked.shuffle(&mut self.rng);
        let Some(c) = fresh(ctx) else { return self.leaf(ctx, Kind::Ten) };
        let left = Expr::Eps(vec![var(c), var(picked[0]), var(picked[1])]);
        let right = Expr::Eps(vec![var(c), var(picked[2]), var(picked[3])]);
        let mut k = [0, 1, 2];
        k.shuffle(&mut self.rng);
        let rotate = |e: Expr, by: usize| match e {
            Expr::Eps(mut a) => {
                a.rotate_left(by);
                Expr::Eps(a)
            }
            other => other,
        };
        Expr::mul(rotate(left, k[0]), rotate(right, k[1]))
    }

    fn partial(&mut self, ctx: &IndexCtx, depth: usize, partials: u8) -> Expr {
        let mut names: Vec<&str> = ctx.names().collect();
        names.shuffle(&mut self.rng);
        let n = if names.len() >= 2 && self.rng.gen_bool(0.25) { 2 } else { 1 };
        let nu: Vec<IndexTerm> = names[..n].iter().map(|v| var(v)).collect();
        let outer = names[..n].iter().fold(ctx.clone(), |c, v| c.without(v));
        self.derivative(nu, &outer, depth.min(2), partials)
    }

    /// `∂_ν body` with `body` typed under `outer`. Nested derivatives make
    /// the size a tower; a body whose measure would be out of range is
    /// replaced by a leaf.
    fn derivative(&mut self, nu: MultiIndex, outer: &IndexCtx, depth: usize, partials: u8) -> Expr {
        let kind = Kind::Fld(self.d);
        for _ in 0..4 {
            let e = Expr::Partial(nu.clone(), Box::new(self.expr(outer, kind, depth, partials + 1)));
            if try_size(&e).is_ok() {
                return e;
            }
        }
        Expr::Partial(nu, Box::new(self.fld_leaf(outer)))
    }
}

/// Case `index` of a run. Cases are independent, so a run can be split
/// across threads and any single case reproduced from `(seed, index)`.
pub fn generate_case(cfg: &GenConfig, index: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let d = *cfg.dims.choose(&mut rng).expect("validated");
    let nvars = *[0, 1, 1, 2, 2, 3, 4].choose(&mut rng).unwrap();
    let ctx = IndexCtx::from_entries(VARS[..nvars].iter().map(|v| (*v, d)));
    let kind = if rng.gen_bool(0.3) { Kind::Fld(d) } else { Kind::Ten };
    let depth = rng.gen_range(cfg.max_depth.min(2)..=cfg.max_depth);
    let env = signature(d);
    let data = random_data(&env, &mut rng);
    let mut g = Gen { rng, d, fields: cfg.field_terms, w: &cfg.weights };
    let expr = g.expr(&ctx, kind, depth, 0);
    Case { index, dim: d, env, ctx, expr, data }
}

pub fn leaf_of(kind: Kind) -> Expr {
    match kind {
        Kind::Ten => Expr::int(1),
        Kind::Fld(d) => Expr::lift(d, Expr::int(1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ein_core::infer_type;

    #[test]
    fn cases_are_well_typed() {
        let cfg = GenConfig { seed: 7, ..GenConfig::default() };
        for n in 0..2000 {
            let c = generate_case(&cfg, n);
            if let Err(e) = infer_type(&c.env, &c.ctx, &c.expr) {
                panic!("case {n}: {} under {}: {e}", c.expr, c.ctx);
            }
            assert!(try_size(&c.expr).is_ok(), "case {n} is not measurable: {}", c.expr);
            assert!(c.expr.depth() <= 64);
        }
    }

    #[test]
    fn cases_are_reproducible() {
        let cfg = GenConfig { seed: 11, ..GenConfig::default() };
        for n in [0, 5, 99] {
            assert_eq!(generate_case(&cfg, n).expr, generate_case(&cfg, n).expr);
        }
    }

    #[test]
    fn field_free_config_has_no_fields() {
        let cfg = GenConfig { seed: 3, field_terms: false, ..GenConfig::default() };
        for n in 0..500 {
            assert!(!generate_case(&cfg, n).expr.has_field_terms());
        }
    }

    #[test]
    fn rejects_bad_dims() {
        let cfg = GenConfig { dims: vec![4], ..GenConfig::default() };
        assert_eq!(cfg.validate(), Err(ConfigError::Dim(4)));
    }
}
