//! Symbolic values over basis vectors and their reduction.
//!
//! A tensor component `T_ij` is `T` applied to the basis vectors `b_i, b_j`.
//! A δ application becomes `Σ_j δ_ij * v`, an ε application a sum over its
//! contracted indices. [`reduce`] then removes symbols with these laws:
//!
//! * absorption: `Σ_j δ_ij * v` becomes `v` with each `b_j` replaced by
//!   `b_i (b_j·b_j)`, and each other `j` by `i`;
//! * `b_j·b_j = 1`, and `b_i·b_j = δ_ij` otherwise;
//! * `Σ_k δ_ik δ_kj = δ_ij`, a case of absorption;
//! * `Σ_i δ_ii = d`;
//! * `Σ_i ε_ijk ε_ilm = δ_jl δ_km - δ_jm δ_kl`;
//! * constant folding, and `Σ_i v = n * v` when `v` does not mention `i`.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use super::numeric::{parity, unary_num};
use super::{Assignment, Data, EvalError, Num};
use crate::expr::{fresh_name, BinOp, Expr, Path, UnOp};
use crate::index::{IndexCtx, IndexTerm, MultiIndex};
use crate::scope::{child_ctxs, classify_product, Product};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Real(BigRational),
    /// One chain per index position. The chain `[h, a1, c1, a2, c2, ..]` is
    /// `b_h` scaled by the dot products `b_a1·b_c1`, `b_a2·b_c2`, ...
    Tensor {
        name: String,
        chains: Vec<Vec<IndexTerm>>,
    },
    Eps(MultiIndex),
    Kron(IndexTerm, IndexTerm),
    Neg(Box<Value>),
    /// Never `Neg`.
    Unary(UnOp, Box<Value>),
    Bin(BinOp, Box<Value>, Box<Value>),
    Sum {
        var: String,
        bound: u32,
        body: Box<Value>,
    },
}

fn real(n: i64) -> Value {
    Value::Real(BigRational::from_integer(BigInt::from(n)))
}

fn bin(op: BinOp, a: Value, b: Value) -> Value {
    Value::Bin(op, Box::new(a), Box::new(b))
}

fn sum(var: &str, bound: u32, body: Value) -> Value {
    Value::Sum { var: var.into(), bound, body: Box::new(body) }
}

fn var(name: &str) -> IndexTerm {
    IndexTerm::Var(name.into())
}

impl Value {
    pub fn children(&self) -> Vec<&Value> {
        match self {
            Value::Neg(a) | Value::Unary(_, a) => vec![a],
            Value::Bin(_, a, b) => vec![a, b],
            Value::Sum { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    fn with_children(&self, mut kids: Vec<Value>) -> Value {
        let mut next = || Box::new(kids.remove(0));
        match self {
            Value::Neg(_) => Value::Neg(next()),
            Value::Unary(op, _) => Value::Unary(*op, next()),
            Value::Bin(op, ..) => {
                let a = next();
                Value::Bin(*op, a, next())
            }
            Value::Sum { var, bound, .. } => Value::Sum { var: var.clone(), bound: *bound, body: next() },
            leaf => leaf.clone(),
        }
    }

    fn own_terms(&self) -> Vec<&IndexTerm> {
        match self {
            Value::Tensor { chains, .. } => chains.iter().flatten().collect(),
            Value::Eps(a) => a.iter().collect(),
            Value::Kron(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> =
            self.own_terms().into_iter().filter_map(|t| t.as_var().map(String::from)).collect();
        for c in self.children() {
            out.extend(c.free_vars());
        }
        if let Value::Sum { var, .. } = self {
            out.remove(var);
        }
        out
    }

    fn all_vars(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> =
            self.own_terms().into_iter().filter_map(|t| t.as_var().map(String::from)).collect();
        if let Value::Sum { var, .. } = self {
            out.insert(var.clone());
        }
        for c in self.children() {
            out.extend(c.all_vars());
        }
        out
    }

    fn at_mut(&mut self, path: &[usize]) -> &mut Value {
        match path.split_first() {
            None => self,
            Some((k, rest)) => {
                let child: &mut Value = match (self, k) {
                    (Value::Neg(a) | Value::Unary(_, a), 0) => a,
                    (Value::Bin(_, a, _), 0) => a,
                    (Value::Bin(_, _, b), 1) => b,
                    (Value::Sum { body, .. }, 0) => body,
                    _ => panic!("bad value path"),
                };
                child.at_mut(rest)
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = |f: &mut fmt::Formatter<'_>, ts: &[IndexTerm]| {
            for (k, t) in ts.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            Ok(())
        };
        match self {
            Value::Real(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Value::Real(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Tensor { name, chains } => {
                write!(f, "{name}(")?;
                for (k, c) in chains.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "b{}", c[0])?;
                    for pair in c[1..].chunks(2) {
                        write!(f, "(b{}·b{})", pair[0], pair[1])?;
                    }
                }
                f.write_str(")")
            }
            Value::Eps(a) => {
                f.write_str("eps(")?;
                terms(f, a)?;
                f.write_str(")")
            }
            Value::Kron(a, b) => write!(f, "delta({a},{b})"),
            Value::Neg(a) => write!(f, "-({a})"),
            Value::Unary(UnOp::Pow(n), a) => write!(f, "pow({a}, {n})"),
            Value::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Value::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Value::Sum { var, bound, body } => write!(f, "sum({var},1,{bound}, {body})"),
        }
    }
}

/// The unreduced value of `e` under `σ`. Field terms are unsupported; `lift`
/// and probes are transparent.
pub fn eval_symbolic(ctx: &IndexCtx, e: &Expr) -> Result<Value, EvalError> {
    build(ctx, e, &mut Vec::new())
}

fn build(ctx: &IndexCtx, e: &Expr, path: &mut Path) -> Result<Value, EvalError> {
    let ctxs = child_ctxs(ctx, e);
    let mut kid = |k: usize, c: &Expr| {
        path.push(k);
        let out = build(&ctxs[k], c, path);
        path.pop();
        out
    };
    Ok(match e {
        Expr::Const(c) => Value::Real(c.clone()),
        Expr::Tensor(name, alpha) => {
            Value::Tensor { name: name.clone(), chains: alpha.iter().map(|t| vec![t.clone()]).collect() }
        }
        Expr::Field(..) | Expr::Conv { .. } | Expr::Partial(..) => {
            return Err(EvalError::Unsupported { what: "field terms", path: path.clone() })
        }
        Expr::Delta(a, b) => Value::Kron(a.clone(), b.clone()),
        Expr::Eps(a) => Value::Eps(a.clone()),
        Expr::Sum { var, bound, body } => sum(var, *bound, kid(0, body)?),
        Expr::Lift(_, b) => kid(0, b)?,
        Expr::Probe(f, _) => kid(0, f)?,
        Expr::Unary(UnOp::Neg, a) => Value::Neg(Box::new(kid(0, a)?)),
        Expr::Unary(op, a) => Value::Unary(*op, Box::new(kid(0, a)?)),
        Expr::Binary(BinOp::Mul, a, b) => match classify_product(ctx, a) {
            Product::DeltaApp { i, j, bound } => {
                sum(&j, bound, bin(BinOp::Mul, Value::Kron(var(&i), var(&j)), kid(1, b)?))
            }
            Product::EpsApp { contracted, bound } => {
                let mut v = bin(BinOp::Mul, kid(0, a)?, kid(1, b)?);
                for c in contracted.iter().rev() {
                    v = sum(c, bound, v);
                }
                v
            }
            Product::Plain => bin(BinOp::Mul, kid(0, a)?, kid(1, b)?),
        },
        Expr::Binary(op, a, b) => bin(*op, kid(0, a)?, kid(1, b)?),
    })
}

/// `v[j := to]`, where a tensor chain headed by `b_j` becomes
/// `b_to (b_j·b_j)`. Binders that would capture `to` are renamed.
fn absorb(v: &Value, j: &str, to: &IndexTerm) -> Value {
    substitute(v, j, to, true)
}

/// Plain `v[j := to]`. With `pairs`, a chain head `b_j` keeps the
/// `(b_j·b_j)` witness of the absorbed δ.
fn substitute(v: &Value, j: &str, to: &IndexTerm, pairs: bool) -> Value {
    let swap = |t: &IndexTerm| if t.as_var() == Some(j) { to.clone() } else { t.clone() };
    match v {
        Value::Tensor { name, chains } => Value::Tensor {
            name: name.clone(),
            chains: chains
                .iter()
                .map(|c| {
                    let mut out = Vec::with_capacity(c.len() + 2);
                    out.push(swap(&c[0]));
                    if pairs && c[0].as_var() == Some(j) {
                        out.extend([c[0].clone(), c[0].clone()]);
                    }
                    out.extend(c[1..].iter().map(swap));
                    out
                })
                .collect(),
        },
        Value::Eps(a) => Value::Eps(a.iter().map(swap).collect()),
        Value::Kron(a, b) => Value::Kron(swap(a), swap(b)),
        Value::Sum { var, .. } if var == j => v.clone(),
        Value::Sum { var, bound, body } if to.as_var() == Some(var.as_str()) && body.free_vars().contains(j) => {
            let mut taken = body.all_vars();
            taken.insert(j.into());
            let fresh = fresh_name(var, &taken);
            let body = substitute(body, var, &IndexTerm::Var(fresh.clone()), false);
            sum(&fresh, *bound, substitute(&body, j, to, pairs))
        }
        _ => v.with_children(v.children().into_iter().map(|c| substitute(c, j, to, pairs)).collect()),
    }
}

fn eps3_distinct(a: &[IndexTerm]) -> Option<[&str; 3]> {
    if a.len() != 3 {
        return None;
    }
    let v = [a[0].as_var()?, a[1].as_var()?, a[2].as_var()?];
    (v[0] != v[1] && v[1] != v[2] && v[0] != v[2]).then_some(v)
}

fn rotate(v: [&str; 3], s: &str) -> (IndexTerm, IndexTerm) {
    let p = v.iter().position(|x| *x == s).expect("shared index");
    (var(v[(p + 1) % 3]), var(v[(p + 2) % 3]))
}

/// One reduction at the root of `v`, if any law applies.
pub fn step(v: &Value) -> Option<Value> {
    match v {
        Value::Sum { var: j, bound, body } => {
            if !body.free_vars().contains(j) {
                return Some(bin(BinOp::Mul, real(i64::from(*bound)), (**body).clone()));
            }
            let jt = var(j);
            match &**body {
                Value::Kron(a, b) if *a == jt && *b == jt => Some(real(i64::from(*bound))),
                Value::Kron(a, b) if *a == jt || *b == jt => Some(real(1)),
                Value::Bin(BinOp::Mul, k, rest) => match &**k {
                    Value::Kron(a, b) if (*a == jt) != (*b == jt) => {
                        let other = if *a == jt { b } else { a };
                        Some(absorb(rest, j, other))
                    }
                    Value::Eps(p) if *bound == 3 => {
                        let (Value::Eps(q), Some(vp)) = (&**rest, eps3_distinct(p)) else { return None };
                        let vq = eps3_distinct(q)?;
                        let shared: Vec<&str> = vp.iter().copied().filter(|x| vq.contains(x)).collect();
                        if shared != [j.as_str()] {
                            return None;
                        }
                        let ((a, b), (c, d)) = (rotate(vp, j), rotate(vq, j));
                        let k = |x: &IndexTerm, y: &IndexTerm| Value::Kron(x.clone(), y.clone());
                        Some(bin(
                            BinOp::Sub,
                            bin(BinOp::Mul, k(&a, &c), k(&b, &d)),
                            bin(BinOp::Mul, k(&a, &d), k(&b, &c)),
                        ))
                    }
                    _ => None,
                },
                _ => None,
            }
        }
        Value::Kron(a, b) if a == b => Some(real(1)),
        Value::Kron(IndexTerm::Const(_), IndexTerm::Const(_)) => Some(real(0)),
        Value::Tensor { name, chains } => {
            for (k, c) in chains.iter().enumerate() {
                if let Some(pair) = c[1..].chunks(2).next() {
                    let mut chains = chains.clone();
                    chains[k].drain(1..3);
                    let rest = Value::Tensor { name: name.clone(), chains };
                    return Some(match (&pair[0], &pair[1]) {
                        (x, y) if x == y => rest,
                        (IndexTerm::Const(_), IndexTerm::Const(_)) => real(0),
                        (x, y) => bin(BinOp::Mul, Value::Kron(x.clone(), y.clone()), rest),
                    });
                }
            }
            None
        }
        Value::Neg(a) => match &**a {
            Value::Real(r) => Some(Value::Real(-r)),
            _ => None,
        },
        Value::Unary(UnOp::Pow(n), a) => match &**a {
            Value::Real(r) => Some(Value::Real(Pow::pow(r, n))),
            _ => None,
        },
        Value::Bin(op, a, b) => match (op, &**a, &**b) {
            (BinOp::Add, Value::Real(x), Value::Real(y)) => Some(Value::Real(x + y)),
            (BinOp::Sub, Value::Real(x), Value::Real(y)) => Some(Value::Real(x - y)),
            (BinOp::Mul, Value::Real(x), Value::Real(y)) => Some(Value::Real(x * y)),
            (BinOp::Div, Value::Real(x), Value::Real(y)) if !y.is_zero() => Some(Value::Real(x / y)),
            (BinOp::Mul, Value::Real(x), other) | (BinOp::Mul, other, Value::Real(x)) if x.is_one() => {
                Some(other.clone())
            }
            _ => None,
        },
        _ => None,
    }
}

/// Paths of every subvalue where [`step`] applies, in post-order.
pub fn redex_paths(v: &Value) -> Vec<Path> {
    fn go(v: &Value, path: &mut Path, out: &mut Vec<Path>) {
        for (k, c) in v.children().into_iter().enumerate() {
            path.push(k);
            go(c, path, out);
            path.pop();
        }
        if step(v).is_some() {
            out.push(path.clone());
        }
    }
    let mut out = Vec::new();
    go(v, &mut Vec::new(), &mut out);
    out
}

/// Reduces at the position `pick` selects among the candidates, until none
/// remain. `pick` receives the candidate count.
pub fn reduce_with(v: &Value, mut pick: impl FnMut(usize) -> usize) -> Value {
    let mut cur = v.clone();
    loop {
        let paths = redex_paths(&cur);
        if paths.is_empty() {
            return cur;
        }
        let path = &paths[pick(paths.len()) % paths.len()];
        let slot = cur.at_mut(path);
        *slot = step(slot).expect("redex");
    }
}

/// Reduces bottom-up to a value where no law applies.
pub fn reduce(v: &Value) -> Value {
    let kids: Vec<Value> = v.children().into_iter().map(reduce).collect();
    let here = v.with_children(kids);
    match step(&here) {
        Some(next) => reduce(&next),
        None => here,
    }
}

/// Concrete value of `v` under `rho`.
pub fn flatten(v: &Value, data: &Data, rho: &Assignment) -> Result<Num, EvalError> {
    let term = |t: &IndexTerm| match t {
        IndexTerm::Const(c) => Ok(*c),
        IndexTerm::Var(x) => rho.get(x).copied().ok_or_else(|| EvalError::MissingIndex(x.clone())),
    };
    match v {
        Value::Real(r) => Ok(Num::Exact(r.clone())),
        Value::Tensor { name, chains } => {
            let t = data.get(name).ok_or_else(|| EvalError::UnknownTensor(name.clone()))?;
            let mut at = Vec::with_capacity(chains.len());
            for c in chains {
                for pair in c[1..].chunks(2) {
                    if pair[0] != pair[1] && term(&pair[0])? != term(&pair[1])? {
                        return Ok(Num::int(0));
                    }
                }
                at.push(term(&c[0])?);
            }
            t.get(&at).cloned().map(Num::Exact).ok_or(EvalError::OutOfBounds { tensor: name.clone(), index: at })
        }
        Value::Eps(a) => {
            let vals = a.iter().map(term).collect::<Result<Vec<_>, _>>()?;
            Ok(Num::int(parity(&vals)))
        }
        Value::Kron(a, b) => Ok(Num::int(i64::from(term(a)? == term(b)?))),
        Value::Neg(a) => Ok(flatten(a, data, rho)?.neg()),
        Value::Unary(op, a) => unary_num(*op, flatten(a, data, rho)?),
        Value::Bin(op, a, b) => {
            let (x, y) = (flatten(a, data, rho)?, flatten(b, data, rho)?);
            match op {
                BinOp::Add => Ok(x.add(&y)),
                BinOp::Sub => Ok(x.sub(&y)),
                BinOp::Mul => Ok(x.mul(&y)),
                BinOp::Div => x.div(&y).ok_or(EvalError::DivisionByZero),
            }
        }
        Value::Sum { var, bound, body } => {
            let mut r = rho.clone();
            let mut acc = Num::int(0);
            for k in 1..=*bound {
                r.insert(var.clone(), k);
                acc = acc.add(&flatten(body, data, &r)?);
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{assignments, eval_numeric, DenseTensor};

    fn ctx(names: &[&str]) -> IndexCtx {
        IndexCtx::from_entries(names.iter().map(|n| (*n, 3)))
    }

    fn t(name: &str, items: &[&str]) -> Value {
        Value::Tensor { name: name.into(), chains: items.iter().map(|i| vec![var(i)]).collect() }
    }

    #[test]
    fn delta_is_kron() {
        assert_eq!(eval_symbolic(&ctx(&["i", "j"]), &Expr::delta("i", "j")), Ok(Value::Kron(var("i"), var("j"))));
    }

    #[test]
    fn lift_probe_is_transparent() {
        let mut env = crate::index::TypeEnv::new();
        env.insert("T".into(), crate::index::SurfaceType::Ten(vec![2]));
        let e = Expr::probe(Expr::lift(2, Expr::tensor("T", &["i"])), Expr::tensor("x", &[]));
        assert_eq!(eval_symbolic(&ctx(&["i"]), &e), Ok(t("T", &["i"])));
    }

    #[test]
    fn kron_absorbs_into_tensor() {
        let e = Expr::mul(Expr::delta("i", "j"), Expr::tensor("T", &["j"]));
        let v = eval_symbolic(&ctx(&["i"]), &e).unwrap();
        let absorbed = step(&v).unwrap();
        assert_eq!(absorbed, Value::Tensor { name: "T".into(), chains: vec![vec![var("i"), var("j"), var("j")]] });
        assert_eq!(reduce(&v), t("T", &["i"]));
    }

    #[test]
    fn delta_trace_is_dimension() {
        assert_eq!(reduce(&sum("i", 3, Value::Kron(var("i"), var("i")))), real(3));
    }

    #[test]
    fn eps_pair_expands() {
        let e = Expr::mul(Expr::eps(&["i", "j", "k"]), Expr::eps(&["i", "l", "m"]));
        let v = reduce(&eval_symbolic(&ctx(&["j", "k", "l", "m"]), &e).unwrap());
        let k = |a: &str, b: &str| Value::Kron(var(a), var(b));
        assert_eq!(
            v,
            bin(BinOp::Sub, bin(BinOp::Mul, k("j", "l"), k("k", "m")), bin(BinOp::Mul, k("j", "m"), k("k", "l")))
        );
    }

    #[test]
    fn absorption_renames_capturing_binder() {
        // Σ_j δ_ij Σ_i T_i S_j: the inner i must not capture the outer one.
        let inner = sum("i", 3, bin(BinOp::Mul, t("T", &["i"]), t("S", &["j"])));
        let v = sum("j", 3, bin(BinOp::Mul, Value::Kron(var("i"), var("j")), inner));
        let r = reduce(&v);
        assert_eq!(r.free_vars(), ["i".into()].into_iter().collect());
        let mut data = Data::new();
        let vals = |xs: &[i64]| xs.iter().map(|x| BigRational::from_integer((*x).into())).collect();
        data.insert("T".into(), DenseTensor::new(vec![3], vals(&[1, 2, 3])).unwrap());
        data.insert("S".into(), DenseTensor::new(vec![3], vals(&[4, 5, 6])).unwrap());
        for rho in assignments(&[("i".into(), 3)]) {
            assert_eq!(flatten(&v, &data, &rho), flatten(&r, &data, &rho));
        }
    }

    #[test]
    fn flatten_matches_oracle_on_delta_chain() {
        // Σ_k δ_ik δ_kj with i, j in scope: pointwise δ then contraction.
        let e = Expr::sum("k", 3, Expr::mul(Expr::delta("i", "k"), Expr::delta("k", "j")));
        let c = ctx(&["i", "j"]);
        let v = reduce(&eval_symbolic(&c, &e).unwrap());
        for rho in assignments(c.entries()) {
            assert_eq!(flatten(&v, &Data::new(), &rho), eval_numeric(&Data::new(), &c, &rho, &e));
        }
    }
}
