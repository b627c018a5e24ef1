//! The brute-force numeric oracle.

use alloc::vec::Vec;

use num_traits::Pow;

use super::{assignments, exact_sqrt, Assignment, Data, EvalError, Num};
use crate::expr::{BinOp, Expr, Path, UnOp};
use crate::index::{IndexCtx, IndexTerm};
use crate::scope::{child_ctxs, classify_product, product_body_ctx, Product};

/// Relative tolerance for comparisons involving inexact values.
pub const TOLERANCE: f64 = 1e-9;

/// Value of `e` under `Γ,σ ⊢ e` with every variable of `σ` bound by `rho`.
///
/// `lift` and probes are transparent; field terms are unsupported. A δ
/// application substitutes, an ε application sums its contracted indices.
pub fn eval_numeric(data: &Data, ctx: &IndexCtx, rho: &Assignment, e: &Expr) -> Result<Num, EvalError> {
    let mut rho = rho.clone();
    Eval { data }.go(ctx, &mut rho, e, &mut Vec::new())
}

struct Eval<'a> {
    data: &'a Data,
}

fn term(rho: &Assignment, t: &IndexTerm) -> Result<u32, EvalError> {
    match t {
        IndexTerm::Const(c) => Ok(*c),
        IndexTerm::Var(v) => rho.get(v).copied().ok_or_else(|| EvalError::MissingIndex(v.clone())),
    }
}

/// Sign of the permutation `vals`, or 0 with a repeat.
pub fn parity(vals: &[u32]) -> i64 {
    let mut sign = 1;
    for a in 0..vals.len() {
        for b in a + 1..vals.len() {
            if vals[a] == vals[b] {
                return 0;
            }
            if vals[a] > vals[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Runs `f` with `name` bound to `value`, then restores the old binding.
fn with_binding<T>(rho: &mut Assignment, name: &str, value: u32, f: impl FnOnce(&mut Assignment) -> T) -> T {
    let old = rho.insert(name.into(), value);
    let out = f(rho);
    match old {
        Some(v) => rho.insert(name.into(), v),
        None => rho.remove(name),
    };
    out
}

fn finite(x: f64, op: &'static str) -> Result<Num, EvalError> {
    if x.is_finite() {
        Ok(Num::Approx(x))
    } else {
        Err(EvalError::Domain(op))
    }
}

impl Eval<'_> {
    fn go(&self, ctx: &IndexCtx, rho: &mut Assignment, e: &Expr, path: &mut Path) -> Result<Num, EvalError> {
        let ctxs = child_ctxs(ctx, e);
        let kid = |k: usize, c: &Expr, rho: &mut Assignment, path: &mut Path| {
            path.push(k);
            let out = self.go(&ctxs[k], rho, c, path);
            path.pop();
            out
        };
        match e {
            Expr::Const(c) => Ok(Num::Exact(c.clone())),
            Expr::Tensor(name, alpha) => {
                let t = self.data.get(name).ok_or_else(|| EvalError::UnknownTensor(name.clone()))?;
                let at = alpha.iter().map(|a| term(rho, a)).collect::<Result<Vec<_>, _>>()?;
                t.get(&at)
                    .cloned()
                    .map(Num::Exact)
                    .ok_or_else(|| EvalError::OutOfBounds { tensor: name.clone(), index: at })
            }
            Expr::Field(..) => Err(EvalError::Unsupported { what: "a field variable", path: path.clone() }),
            Expr::Conv { .. } => Err(EvalError::Unsupported { what: "a convolution", path: path.clone() }),
            Expr::Partial(..) => Err(EvalError::Unsupported { what: "a derivative", path: path.clone() }),
            Expr::Delta(a, b) => Ok(Num::int(i64::from(term(rho, a)? == term(rho, b)?))),
            Expr::Eps(alpha) => {
                let vals = alpha.iter().map(|a| term(rho, a)).collect::<Result<Vec<_>, _>>()?;
                Ok(Num::int(parity(&vals)))
            }
            Expr::Sum { var, bound, body } => {
                let mut acc = Num::int(0);
                for v in 1..=*bound {
                    let x = with_binding(rho, var, v, |rho| kid(0, body, rho, path))?;
                    acc = acc.add(&x);
                }
                Ok(acc)
            }
            Expr::Lift(_, b) => kid(0, b, rho, path),
            Expr::Probe(f, _) => kid(0, f, rho, path),
            Expr::Unary(op, b) => {
                let x = kid(0, b, rho, path)?;
                unary_num(*op, x)
            }
            Expr::Binary(BinOp::Add, a, b) => Ok(kid(0, a, rho, path)?.add(&kid(1, b, rho, path)?)),
            Expr::Binary(BinOp::Sub, a, b) => Ok(kid(0, a, rho, path)?.sub(&kid(1, b, rho, path)?)),
            Expr::Binary(BinOp::Div, a, b) => {
                let (x, y) = (kid(0, a, rho, path)?, kid(1, b, rho, path)?);
                x.div(&y).ok_or(EvalError::DivisionByZero)
            }
            Expr::Binary(BinOp::Mul, a, b) => match classify_product(ctx, a) {
                Product::DeltaApp { i, j, .. } => {
                    let vi = term(rho, &IndexTerm::Var(i))?;
                    with_binding(rho, &j, vi, |rho| kid(1, b, rho, path))
                }
                Product::EpsApp { contracted, bound } => {
                    let p = Product::EpsApp { contracted: contracted.clone(), bound };
                    let inner = product_body_ctx(ctx, &p);
                    let vars: Vec<_> = contracted.iter().map(|c| (c.clone(), bound)).collect();
                    let mut acc = Num::int(0);
                    for asg in assignments(&vars) {
                        let mut r = rho.clone();
                        r.extend(asg);
                        let eps = self.go(&inner, &mut r, a, path)?;
                        acc = acc.add(&eps.mul(&kid(1, b, &mut r, path)?));
                    }
                    Ok(acc)
                }
                Product::Plain => Ok(kid(0, a, rho, path)?.mul(&kid(1, b, rho, path)?)),
            },
        }
    }
}

/// `±1` for an inexact `f` just past it.
fn edge(x: &Num, f: f64) -> f64 {
    let within = !x.is_exact() && libm::fabs(f) > 1.0 && libm::fabs(f) - 1.0 <= TOLERANCE;
    if within {
        f.signum()
    } else {
        f
    }
}

pub(crate) fn unary_num(op: UnOp, x: Num) -> Result<Num, EvalError> {
    let f = x.to_f64();
    match (op, &x) {
        (UnOp::Neg, _) => Ok(x.neg()),
        // κ has no definition; the identity keeps every algebraic law.
        (UnOp::Kappa, _) => Ok(x),
        (UnOp::Pow(n), Num::Exact(r)) => Ok(Num::Exact(Pow::pow(r, n))),
        (UnOp::Pow(n), _) => finite(libm::pow(f, f64::from(n)), "pow"),
        (UnOp::Sqrt, Num::Exact(r)) if exact_sqrt(r).is_some() => Ok(Num::Exact(exact_sqrt(r).unwrap())),
        // Inexact arguments within TOLERANCE of a domain edge are taken to be
        // on it; summation order alone can push an exact 0 to -1e-17.
        (UnOp::Sqrt, Num::Approx(_)) if (-TOLERANCE..0.0).contains(&f) => Ok(Num::Approx(0.0)),
        (UnOp::Sqrt, _) if f < 0.0 => Err(EvalError::Domain("sqrt")),
        (UnOp::Sqrt, _) => finite(libm::sqrt(f), "sqrt"),
        (UnOp::Exp, _) => finite(libm::exp(f), "exp"),
        (UnOp::Sin, _) => finite(libm::sin(f), "sin"),
        (UnOp::Cos, _) => finite(libm::cos(f), "cos"),
        (UnOp::Tan, _) => finite(libm::tan(f), "tan"),
        (UnOp::Asin, _) => finite(libm::asin(edge(&x, f)), "asin"),
        (UnOp::Acos, _) => finite(libm::acos(edge(&x, f)), "acos"),
        (UnOp::Atan, _) => finite(libm::atan(f), "atan"),
    }
}

/// Outcome of comparing the two sides of a step over every assignment.
#[derive(Clone, Debug, PartialEq)]
pub enum ValueCheck {
    Pass {
        assignments: usize,
        /// Every compared pair was exact and equal.
        exact: bool,
        /// Assignments where the left side is undefined (division by zero or
        /// a domain error) and nothing was compared.
        undefined: usize,
    },
    Fail {
        rho: Assignment,
        before: Num,
        after: Result<Num, EvalError>,
    },
    /// Field terms on either side.
    Skipped(EvalError),
    /// Missing data or a malformed assignment.
    Error(EvalError),
}

impl ValueCheck {
    pub fn passed(&self) -> bool {
        matches!(self, ValueCheck::Pass { .. })
    }
}

/// Compares `before` and `after` under every assignment to `σ`.
pub fn check_value_preservation(data: &Data, ctx: &IndexCtx, before: &Expr, after: &Expr) -> ValueCheck {
    if let Err(e @ EvalError::Unsupported { .. }) = unsupported(before).and(unsupported(after)) {
        return ValueCheck::Skipped(e);
    }
    let (mut count, mut exact, mut undefined) = (0, true, 0);
    for rho in assignments(ctx.entries()) {
        let lhs = match eval_numeric(data, ctx, &rho, before) {
            Ok(v) => v,
            Err(EvalError::DivisionByZero | EvalError::Domain(_)) => {
                undefined += 1;
                continue;
            }
            Err(e) => return ValueCheck::Error(e),
        };
        let rhs = eval_numeric(data, ctx, &rho, after);
        match &rhs {
            Ok(r) if lhs.close_to(r, TOLERANCE) => {
                count += 1;
                exact &= lhs.is_exact() && r.is_exact();
            }
            _ => return ValueCheck::Fail { rho, before: lhs, after: rhs },
        }
    }
    ValueCheck::Pass { assignments: count, exact, undefined }
}

fn unsupported(e: &Expr) -> Result<(), EvalError> {
    if e.has_field_terms() {
        Err(EvalError::Unsupported { what: "field terms", path: Vec::new() })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::DenseTensor;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn data(name: &str, vals: &[i64]) -> Data {
        let d = vals.iter().map(|v| BigRational::from_integer(BigInt::from(*v))).collect();
        let mut m = Data::new();
        m.insert(name.into(), DenseTensor::new(alloc::vec![vals.len() as u32], d).unwrap());
        m
    }

    fn rho(pairs: &[(&str, u32)]) -> Assignment {
        pairs.iter().map(|(k, v)| ((*k).into(), *v)).collect()
    }

    #[test]
    fn eps_and_delta_components() {
        let ctx = IndexCtx::from_entries([("i", 3), ("j", 3), ("k", 3)]);
        let e = Expr::eps(&["i", "j", "k"]);
        assert_eq!(eval_numeric(&Data::new(), &ctx, &rho(&[("i", 1), ("j", 2), ("k", 3)]), &e), Ok(Num::int(1)));
        assert_eq!(eval_numeric(&Data::new(), &ctx, &rho(&[("i", 2), ("j", 1), ("k", 3)]), &e), Ok(Num::int(-1)));
        let d = Expr::delta("i", "j");
        assert_eq!(eval_numeric(&Data::new(), &ctx, &rho(&[("i", 2), ("j", 2)]), &d), Ok(Num::int(1)));
    }

    #[test]
    fn rounding_residue_divisor_is_undefined() {
        // √2·√2 - 2 is about 4e-16 in floating point; after E6 it is exactly 0.
        let a = Expr::tensor("T", &[]);
        let den = Expr::sub(Expr::mul(Expr::unary(UnOp::Sqrt, a.clone()), Expr::unary(UnOp::Sqrt, a.clone())), a);
        let mut m = Data::new();
        m.insert(
            "T".into(),
            DenseTensor::new(alloc::vec![], alloc::vec![BigRational::from_integer(BigInt::from(2))]).unwrap(),
        );
        let e = Expr::div(Expr::int(1), den);
        assert_eq!(eval_numeric(&m, &IndexCtx::new(), &Assignment::new(), &e), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn domain_edges_absorb_rounding() {
        assert_eq!(unary_num(UnOp::Sqrt, Num::Approx(-1e-17)), Ok(Num::Approx(0.0)));
        assert_eq!(unary_num(UnOp::Sqrt, Num::Approx(-1e-3)), Err(EvalError::Domain("sqrt")));
        assert_eq!(unary_num(UnOp::Acos, Num::Approx(1.0 + 1e-15)), Ok(Num::Approx(0.0)));
        assert!(unary_num(UnOp::Asin, Num::int(2)).is_err());
    }

    #[test]
    fn sum_of_squares() {
        let e = Expr::sum("i", 3, Expr::mul(Expr::tensor("T", &["i"]), Expr::tensor("T", &["i"])));
        assert_eq!(eval_numeric(&data("T", &[1, 2, 3]), &IndexCtx::new(), &Assignment::new(), &e), Ok(Num::int(14)));
    }

    #[test]
    fn delta_application_substitutes() {
        let ctx = IndexCtx::from_entries([("i", 3)]);
        let before = Expr::mul(Expr::delta("i", "j"), Expr::tensor("T", &["j"]));
        let check = check_value_preservation(&data("T", &[5, 7, 9]), &ctx, &before, &Expr::tensor("T", &["i"]));
        assert_eq!(check, ValueCheck::Pass { assignments: 3, exact: true, undefined: 0 });
    }

    #[test]
    fn square_roots_of_squares_stay_exact() {
        let e = Expr::unary(UnOp::Sqrt, Expr::ratio(9, 4));
        assert_eq!(
            eval_numeric(&Data::new(), &IndexCtx::new(), &Assignment::new(), &e),
            Ok(Num::Exact(BigRational::new(3.into(), 2.into())))
        );
    }

    #[test]
    fn fields_are_skipped() {
        let f = Expr::field("F", &[]);
        let check = check_value_preservation(&Data::new(), &IndexCtx::new(), &f, &f);
        assert!(matches!(check, ValueCheck::Skipped(_)));
    }
}
