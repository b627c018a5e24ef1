//! The typing judgment `Γ,σ ⊢ e : τ`.
//!
//! Every well-typed node has the current `σ` as its shape, so inference
//! mostly decides the kind and validates the premises on the way down.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{TypeError, TypeErrorCode as Code};
use crate::expr::{BinOp, Expr, Path};
use crate::index::{EinType, IndexCtx, IndexTerm, Kind, SurfaceType, TypeEnv};
use crate::scope::{child_ctxs, classify_product, product_body_ctx, scalar_operand, Product};

/// `⊢ Γ,σ ok`. `Γ` keys are unique by construction.
pub fn check_env_ok(_env: &TypeEnv, ctx: &IndexCtx) -> Result<(), TypeError> {
    let mut seen: Vec<&str> = Vec::new();
    for (name, bound) in ctx.entries() {
        if seen.contains(&name.as_str()) {
            return Err(TypeError::new(Code::DuplicateIndex, &[], format!("index variable '{name}' repeats in σ")));
        }
        if *bound == 0 {
            return Err(TypeError::new(Code::BoundMismatch, &[], format!("index variable '{name}' has empty range")));
        }
        seen.push(name);
    }
    Ok(())
}

/// `σ ⊢ α < [d1..dn]`; the caller has checked `|α| = n`.
pub fn check_multi_index(ctx: &IndexCtx, alpha: &[IndexTerm], dims: &[u32]) -> Result<(), TypeError> {
    check_alpha(ctx, alpha, dims, &[])
}

fn check_alpha(ctx: &IndexCtx, alpha: &[IndexTerm], dims: &[u32], path: &[usize]) -> Result<(), TypeError> {
    for (k, (mu, &d)) in alpha.iter().zip(dims).enumerate() {
        match mu {
            IndexTerm::Const(c) if (1..=d).contains(c) => {}
            IndexTerm::Const(c) => {
                return Err(TypeError::new(
                    Code::BoundMismatch,
                    path,
                    format!("constant index {c} at position {k} is outside 1..{d}"),
                ));
            }
            IndexTerm::Var(v) => match ctx.get(v) {
                None => {
                    return Err(TypeError::new(Code::UnboundIndex, path, format!("index variable '{v}' is not in σ")));
                }
                Some(b) if b != d => {
                    return Err(TypeError::new(
                        Code::BoundMismatch,
                        path,
                        format!("σ({v}) = {b} but position {k} needs {d}"),
                    ));
                }
                Some(_) => {}
            },
        }
    }
    Ok(())
}

fn lookup<'e>(env: &'e TypeEnv, name: &str, path: &[usize]) -> Result<&'e SurfaceType, TypeError> {
    env.get(name).ok_or_else(|| TypeError::new(Code::UnboundParam, path, format!("parameter '{name}' is not in Γ")))
}

fn arity(got: usize, want: usize, what: &str, path: &[usize]) -> Result<(), TypeError> {
    if got == want {
        Ok(())
    } else {
        Err(TypeError::new(Code::ArityMismatch, path, format!("{what} takes {want} indices, found {got}")))
    }
}

fn same_kind(a: Kind, b: Kind, what: &str, path: &[usize]) -> Result<(), TypeError> {
    match (a, b) {
        _ if a == b => Ok(()),
        (Kind::Fld(x), Kind::Fld(y)) => {
            Err(TypeError::new(Code::DimMismatch, path, format!("{what}: field dimensions {x} and {y} differ")))
        }
        _ => Err(TypeError::new(Code::KindMismatch, path, format!("{what}: operands have kinds {a} and {b}"))),
    }
}

/// The point of a probe: a declared `TEN[d]` variable with no indices.
fn point_dim(env: &TypeEnv, x: &Expr, path: &[usize]) -> Result<u32, TypeError> {
    match x {
        Expr::Tensor(name, a) if a.is_empty() => match lookup(env, name, path)? {
            SurfaceType::Ten(dims) if dims.len() == 1 => Ok(dims[0]),
            SurfaceType::Ten(dims) => Err(TypeError::new(
                Code::DimMismatch,
                path,
                format!("probe point '{name}' must be TEN[d], found order {}", dims.len()),
            )),
            other => Err(TypeError::new(Code::KindMismatch, path, format!("probe point '{name}' has type {other}"))),
        },
        _ => Err(TypeError::new(Code::KindMismatch, path, "probe point must be a tensor variable `x[]`".into())),
    }
}

fn check_eps_indices(ctx: &IndexCtx, alpha: &[IndexTerm], path: &[usize]) -> Result<(), TypeError> {
    let n = alpha.len() as u32;
    if !(2..=3).contains(&n) {
        return Err(TypeError::new(Code::ArityMismatch, path, format!("ε takes 2 or 3 indices, found {n}")));
    }
    for mu in alpha {
        match mu {
            IndexTerm::Const(c) if !(1..=n).contains(c) => {
                return Err(TypeError::new(Code::BoundMismatch, path, format!("ε index {c} is outside 1..{n}")));
            }
            IndexTerm::Var(v) => match ctx.get(v) {
                Some(b) if b != n => {
                    return Err(TypeError::new(Code::BoundMismatch, path, format!("σ({v}) = {b} but ε needs {n}")));
                }
                _ => {}
            },
            _ => {}
        }
    }
    Ok(())
}

fn child(path: &mut Path, k: usize) -> &mut Path {
    path.push(k);
    path
}

/// A `δ`/`ε` factor, possibly probed; checks the point and returns nothing
/// else because such factors are always tensors.
fn check_constant_factor(env: &TypeEnv, f: &Expr, path: &mut Path) -> Result<(), TypeError> {
    if let Expr::Probe(_, x) = f {
        point_dim(env, x, child(path, 1))?;
        path.pop();
    }
    Ok(())
}

fn infer(env: &TypeEnv, ctx: &IndexCtx, e: &Expr, path: &mut Path) -> Result<Kind, TypeError> {
    match e {
        Expr::Const(_) => Ok(Kind::Ten),
        Expr::Tensor(name, alpha) => match lookup(env, name, path)? {
            SurfaceType::Ten(dims) => {
                arity(alpha.len(), dims.len(), name, path)?;
                check_alpha(ctx, alpha, dims, path)?;
                Ok(Kind::Ten)
            }
            other => Err(TypeError::new(Code::KindMismatch, path, format!("'{name}' is {other}, not a tensor"))),
        },
        Expr::Field(name, alpha) => match lookup(env, name, path)? {
            SurfaceType::Fld { dim, shape } => {
                arity(alpha.len(), shape.len(), name, path)?;
                check_alpha(ctx, alpha, shape, path)?;
                Ok(Kind::Fld(*dim))
            }
            other => Err(TypeError::new(Code::KindMismatch, path, format!("'{name}' is {other}, not a field"))),
        },
        Expr::Conv { image, alpha, kernel, beta } => {
            let (dim, shape) = match lookup(env, image, path)? {
                SurfaceType::Img { dim, shape } => (*dim, shape),
                other => {
                    return Err(TypeError::new(Code::KindMismatch, path, format!("'{image}' is {other}, not an image")))
                }
            };
            match lookup(env, kernel, path)? {
                SurfaceType::Krn => {}
                other => {
                    return Err(TypeError::new(
                        Code::KindMismatch,
                        path,
                        format!("'{kernel}' is {other}, not a kernel"),
                    ))
                }
            }
            arity(alpha.len(), shape.len(), image, path)?;
            check_alpha(ctx, alpha, shape, path)?;
            let dims: Vec<u32> = beta.iter().map(|_| dim).collect();
            check_alpha(ctx, beta, &dims, path)?;
            Ok(Kind::Fld(dim))
        }
        Expr::Delta(i, j) => {
            for t in [i, j] {
                if let IndexTerm::Var(v) = t {
                    if !ctx.contains(v) {
                        return Err(TypeError::new(Code::UnboundIndex, path, format!("δ index '{v}' is not in σ")));
                    }
                }
            }
            Ok(Kind::Ten)
        }
        Expr::Eps(alpha) => {
            check_eps_indices(ctx, alpha, path)?;
            if let Some(v) = alpha.iter().filter_map(IndexTerm::as_var).find(|v| !ctx.contains(v)) {
                return Err(TypeError::new(Code::UnboundIndex, path, format!("ε index '{v}' is not in σ")));
            }
            Ok(Kind::Ten)
        }
        Expr::Sum { var, bound, body } => {
            if ctx.contains(var) {
                return Err(TypeError::new(
                    Code::DuplicateIndex,
                    path,
                    format!("summation variable '{var}' is already in σ"),
                ));
            }
            if *bound == 0 {
                return Err(TypeError::new(Code::BoundMismatch, path, "summation bound must be at least 1".into()));
            }
            let k = infer(env, &ctx.with(var, *bound), body, child(path, 0))?;
            path.pop();
            Ok(k)
        }
        Expr::Partial(nu, body) => {
            if nu.is_empty() {
                return Err(TypeError::new(Code::ArityMismatch, path, "derivative needs at least one index".into()));
            }
            let mut names: Vec<&str> = Vec::new();
            for t in nu {
                let v = match t {
                    IndexTerm::Var(v) => v.as_str(),
                    IndexTerm::Const(c) => {
                        return Err(TypeError::new(
                            Code::UnboundIndex,
                            path,
                            format!("derivative index must be a variable, found {c}"),
                        ));
                    }
                };
                if names.contains(&v) {
                    return Err(TypeError::new(Code::DuplicateIndex, path, format!("derivative index '{v}' repeats")));
                }
                if !ctx.contains(v) {
                    return Err(TypeError::new(
                        Code::UnboundIndex,
                        path,
                        format!("derivative index '{v}' is not in σ"),
                    ));
                }
                names.push(v);
            }
            let inner = &child_ctxs(ctx, e)[0];
            let k = infer(env, inner, body, child(path, 0))?;
            path.pop();
            let d = match k {
                Kind::Fld(d) => d,
                Kind::Ten => {
                    return Err(TypeError::new(Code::KindMismatch, path, "derivative of a tensor expression".into()));
                }
            };
            for v in names {
                let b = ctx.get(v).unwrap_or(0);
                if b != d {
                    return Err(TypeError::new(
                        Code::BoundMismatch,
                        path,
                        format!("σ({v}) = {b} but the field dimension is {d}"),
                    ));
                }
            }
            Ok(Kind::Fld(d))
        }
        Expr::Probe(f, x) => {
            let d = point_dim(env, x, child(path, 1))?;
            path.pop();
            match &**f {
                Expr::Delta(..) | Expr::Eps(_) => {
                    infer(env, ctx, f, child(path, 0))?;
                    path.pop();
                    Ok(Kind::Ten)
                }
                _ => {
                    let k = infer(env, ctx, f, child(path, 0))?;
                    path.pop();
                    match k {
                        Kind::Fld(fd) if fd == d => Ok(Kind::Ten),
                        Kind::Fld(fd) => Err(TypeError::new(
                            Code::DimMismatch,
                            path,
                            format!("probing a {fd}-d field at a point of dimension {d}"),
                        )),
                        Kind::Ten => {
                            Err(TypeError::new(Code::KindMismatch, path, "probe of a tensor expression".into()))
                        }
                    }
                }
            }
        }
        Expr::Lift(d, body) => {
            if *d == 0 {
                return Err(TypeError::new(Code::DimMismatch, path, "lift dimension must be at least 1".into()));
            }
            let k = infer(env, ctx, body, child(path, 0))?;
            path.pop();
            match k {
                Kind::Ten => Ok(Kind::Fld(*d)),
                Kind::Fld(_) => Err(TypeError::new(Code::KindMismatch, path, "lift of a field expression".into())),
            }
        }
        Expr::Unary(op, body) => {
            let inner = if scalar_operand(*op) {
                require_scalar(body, &format!("operand of {}", op.name()), child(path, 0))?;
                path.pop();
                IndexCtx::new()
            } else {
                ctx.clone()
            };
            let k = infer(env, &inner, body, child(path, 0))?;
            path.pop();
            Ok(k)
        }
        Expr::Binary(op, a, b) => {
            let sym = op.name();
            match op {
                BinOp::Add | BinOp::Sub => {
                    let ka = infer(env, ctx, a, child(path, 0))?;
                    path.pop();
                    let kb = infer(env, ctx, b, child(path, 1))?;
                    path.pop();
                    same_kind(ka, kb, sym, path)?;
                    Ok(ka)
                }
                BinOp::Div => {
                    let ka = infer(env, ctx, a, child(path, 0))?;
                    path.pop();
                    require_scalar(b, "denominator", child(path, 1))?;
                    let kb = infer(env, &IndexCtx::new(), b, path)?;
                    path.pop();
                    same_kind(ka, kb, sym, path)?;
                    Ok(ka)
                }
                BinOp::Mul => {
                    let p = classify_product(ctx, a);
                    match &p {
                        Product::DeltaApp { .. } => {
                            check_constant_factor(env, a, child(path, 0))?;
                            path.pop();
                            let k = infer(env, &product_body_ctx(ctx, &p), b, child(path, 1))?;
                            path.pop();
                            Ok(k)
                        }
                        Product::EpsApp { .. } => {
                            path.push(0);
                            check_constant_factor(env, a, path)?;
                            let alpha = crate::scope::eps_core(a).expect("ε factor");
                            check_eps_indices(ctx, alpha, path)?;
                            path.pop();
                            let k = infer(env, &product_body_ctx(ctx, &p), b, child(path, 1))?;
                            path.pop();
                            Ok(k)
                        }
                        Product::Plain => {
                            let ka = infer(env, ctx, a, child(path, 0))?;
                            path.pop();
                            let kb = infer(env, ctx, b, child(path, 1))?;
                            path.pop();
                            same_kind(ka, kb, sym, path)?;
                            Ok(ka)
                        }
                    }
                }
            }
        }
    }
}

/// The `τ[]` premise: the operand has no free index variables.
fn require_scalar(e: &Expr, what: &str, path: &[usize]) -> Result<(), TypeError> {
    let free = crate::scope::unbound_vars(e);
    if free.is_empty() {
        Ok(())
    } else {
        let names: Vec<String> = free.into_iter().collect();
        Err(TypeError::new(
            Code::DimMismatch,
            path,
            format!("{what} must be scalar, but has free indices {}", names.join(",")),
        ))
    }
}

/// Infers `τ` for `e` under `Γ,σ`.
pub fn infer_type(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> Result<EinType, TypeError> {
    check_env_ok(env, ctx)?;
    let kind = infer(env, ctx, e, &mut Vec::new())?;
    Ok(EinType { kind, shape: ctx.clone() })
}

/// One subterm fact forced by the last typing rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtermTyping {
    /// Child position in [`Expr::children`] order.
    pub child: usize,
    pub ctx: IndexCtx,
    /// `None` when the rule leaves the subterm's kind open (the δ/ε factor
    /// of an application, whose own typing is not a premise).
    pub expected: Option<EinType>,
}

/// Inversion: the typings of the immediate subterms of a well-typed `e : τ`.
pub fn invert_type(env: &TypeEnv, e: &Expr, ty: &EinType) -> Vec<SubtermTyping> {
    let ctx = &ty.shape;
    let ctxs = child_ctxs(ctx, e);
    let at = |k: usize, kind: Option<Kind>| SubtermTyping {
        child: k,
        ctx: ctxs[k].clone(),
        expected: kind.map(|kind| EinType { kind, shape: ctxs[k].clone() }),
    };
    match e {
        Expr::Sum { .. } | Expr::Unary(..) => alloc::vec![at(0, Some(ty.kind))],
        Expr::Partial(..) => alloc::vec![at(0, Some(ty.kind))],
        Expr::Lift(..) => alloc::vec![at(0, Some(Kind::Ten))],
        Expr::Probe(f, x) => {
            let fk = match &**f {
                Expr::Delta(..) | Expr::Eps(_) => Kind::Ten,
                _ => Kind::Fld(point_dim(env, x, &[]).unwrap_or(0)),
            };
            alloc::vec![at(0, Some(fk)), at(1, Some(Kind::Ten))]
        }
        Expr::Binary(BinOp::Mul, a, _) => match classify_product(ctx, a) {
            Product::Plain => alloc::vec![at(0, Some(ty.kind)), at(1, Some(ty.kind))],
            _ => alloc::vec![at(0, None), at(1, Some(ty.kind))],
        },
        Expr::Binary(..) => alloc::vec![at(0, Some(ty.kind)), at(1, Some(ty.kind))],
        _ => Vec::new(),
    }
}

/// The kind of `e` under `Γ,σ`, or `None` if it is ill-typed.
pub fn kind_of(env: &TypeEnv, ctx: &IndexCtx, e: &Expr) -> Option<Kind> {
    infer(env, ctx, e, &mut Vec::new()).ok()
}

/// The kind of a subterm at `path` below a root checked under `ctx`.
pub fn kind_at(env: &TypeEnv, ctx: &IndexCtx, root: &Expr, path: &[usize]) -> Option<Kind> {
    let sub = root.at(path)?;
    let c = crate::scope::ctx_at(ctx, root, path);
    infer(env, &c, sub, &mut Vec::new()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(items: &[(&str, u32)]) -> IndexCtx {
        IndexCtx::from_entries(items.iter().map(|&(n, b)| (n, b)))
    }

    fn env(items: &[(&str, SurfaceType)]) -> TypeEnv {
        items.iter().map(|(n, t)| ((*n).into(), t.clone())).collect()
    }

    #[test]
    fn env_ok_rejects_repeats() {
        assert!(check_env_ok(&TypeEnv::new(), &ctx(&[("i", 3), ("j", 3)])).is_ok());
        let err = check_env_ok(&TypeEnv::new(), &ctx(&[("i", 3), ("i", 2)])).unwrap_err();
        assert_eq!(err.code, Code::DuplicateIndex);
        assert!(check_env_ok(&TypeEnv::new(), &IndexCtx::new()).is_ok());
    }

    #[test]
    fn multi_index_bounds() {
        assert!(check_multi_index(&ctx(&[("i", 3)]), &crate::expr::idx(&["i"]), &[3]).is_ok());
        let err = check_multi_index(&ctx(&[("i", 2)]), &crate::expr::idx(&["i"]), &[3]).unwrap_err();
        assert_eq!(err.code, Code::BoundMismatch);
        assert!(check_multi_index(&IndexCtx::new(), &crate::expr::idx(&["2"]), &[3]).is_ok());
    }

    #[test]
    fn judgments() {
        let g = env(&[("T", SurfaceType::Ten(alloc::vec![3, 3]))]);
        let s = ctx(&[("i", 3), ("j", 3)]);
        let t = infer_type(&g, &s, &Expr::tensor("T", &["i", "j"])).unwrap();
        assert_eq!(t, EinType { kind: Kind::Ten, shape: s });

        let g = env(&[("T", SurfaceType::Ten(alloc::vec![3]))]);
        let t = infer_type(&g, &IndexCtx::new(), &Expr::sum("i", 3, Expr::tensor("T", &["i"]))).unwrap();
        assert_eq!(t.kind, Kind::Ten);
        let err = infer_type(&g, &IndexCtx::new(), &Expr::tensor("T", &["i"])).unwrap_err();
        assert_eq!(err.code, Code::UnboundIndex);

        let g = env(&[("V", SurfaceType::Img { dim: 2, shape: alloc::vec![3] }), ("H", SurfaceType::Krn)]);
        let t = infer_type(&g, &ctx(&[("i", 3)]), &Expr::conv("V", &["i"], "H", &[])).unwrap();
        assert_eq!(t.kind, Kind::Fld(2));
    }

    #[test]
    fn delta_application_contracts() {
        let g = env(&[("T", SurfaceType::Ten(alloc::vec![3]))]);
        let e = Expr::mul(Expr::delta("i", "j"), Expr::tensor("T", &["j"]));
        assert_eq!(infer_type(&g, &ctx(&[("i", 3)]), &e).unwrap().kind, Kind::Ten);
    }

    #[test]
    fn error_paths_point_at_subterm() {
        let g = env(&[("T", SurfaceType::Ten(alloc::vec![3]))]);
        let e = Expr::add(Expr::tensor("T", &["i"]), Expr::tensor("T", &["k"]));
        let err = infer_type(&g, &ctx(&[("i", 3)]), &e).unwrap_err();
        assert_eq!(err.path, [1]);
        assert_eq!(err.code, Code::UnboundIndex);
    }

    #[test]
    fn inversion_of_addition() {
        let g = env(&[("T", SurfaceType::Ten(alloc::vec![3]))]);
        let s = ctx(&[("i", 3)]);
        let e = Expr::add(Expr::tensor("T", &["i"]), Expr::tensor("T", &["i"]));
        let ty = infer_type(&g, &s, &e).unwrap();
        let inv = invert_type(&g, &e, &ty);
        assert_eq!(inv.len(), 2);
        assert!(inv.iter().all(|f| f.expected.as_ref() == Some(&ty)));
    }
}
