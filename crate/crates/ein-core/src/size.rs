//! The termination measure.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::{One, Pow};

use crate::expr::{path_string, BinOp, Expr, Path};

/// Largest derivative body size whose measure is computed. `5^s` for this
/// bound already has about 232k bits; nested derivatives past it are towers.
pub const MAX_DERIVATIVE_BODY: u32 = 100_000;

/// A derivative whose body is too large to measure, at `path`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeOverflow {
    pub path: Path,
}

impl fmt::Display for SizeOverflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "derivative at {} is too large to measure", path_string(&self.path))
    }
}

/// Size of `e`.
///
/// # Panics
///
/// When a derivative body exceeds [`MAX_DERIVATIVE_BODY`]; see [`try_size`].
pub fn size(e: &Expr) -> BigUint {
    try_size(e).unwrap_or_else(|o| panic!("{o}"))
}

/// Size of `e`, exponential in derivatives, hence arbitrary precision.
pub fn try_size(e: &Expr) -> Result<BigUint, SizeOverflow> {
    go(e, &mut Vec::new())
}

fn go(e: &Expr, path: &mut Path) -> Result<BigUint, SizeOverflow> {
    let one = BigUint::one;
    let mut kid = |k: usize, c: &Expr| {
        path.push(k);
        let s = go(c, path);
        path.pop();
        s
    };
    Ok(match e {
        Expr::Const(_) | Expr::Tensor(..) | Expr::Field(..) | Expr::Conv { .. } | Expr::Delta(..) => one(),
        Expr::Eps(_) => BigUint::from(4u32),
        Expr::Lift(_, b) | Expr::Unary(_, b) => one() + kid(0, b)?,
        Expr::Binary(BinOp::Div, a, b) => BigUint::from(2u32) + kid(0, a)? + kid(1, b)?,
        Expr::Binary(_, a, b) => one() + kid(0, a)? + kid(1, b)?,
        Expr::Sum { body, .. } => BigUint::from(2u32) + kid(0, body)? * 2u32,
        Expr::Partial(_, body) => {
            let s = kid(0, body)?;
            if s > BigUint::from(MAX_DERIVATIVE_BODY) {
                return Err(SizeOverflow { path: path.clone() });
            }
            partial_size(&s)
        }
        // The point is not counted.
        Expr::Probe(f, _) => kid(0, f)? * 2u32,
    })
}

/// True when `size(e) == 1`, without computing it.
pub fn is_unit(e: &Expr) -> bool {
    matches!(e, Expr::Const(_) | Expr::Tensor(..) | Expr::Field(..) | Expr::Conv { .. } | Expr::Delta(..))
}

/// `5^s · s`.
pub fn partial_size(s: &BigUint) -> BigUint {
    let exp = u32::try_from(s).expect("derivative body too large to measure");
    BigUint::from(5u32).pow(exp) * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        assert_eq!(size(&Expr::eps(&["i", "j", "k"])), BigUint::from(4u32));
        assert_eq!(size(&Expr::partial(&["i"], Expr::field("F", &["a"]))), BigUint::from(5u32));
        let f = || Expr::field("F", &[]);
        let x = || Expr::tensor("x", &[]);
        assert_eq!(size(&Expr::probe(Expr::div(f(), f()), x())), BigUint::from(8u32));
        assert_eq!(size(&Expr::div(Expr::probe(f(), x()), Expr::probe(f(), x()))), BigUint::from(6u32));
    }

    #[test]
    fn nested_derivative_overflow_is_reported() {
        let mut e = Expr::field("F", &[]);
        for _ in 0..6 {
            e = Expr::add(e.clone(), e);
        }
        let e = Expr::partial(&["j"], Expr::partial(&["i"], e));
        assert_eq!(try_size(&e), Err(SizeOverflow { path: alloc::vec![] }));
        let small = Expr::partial(&["j"], Expr::partial(&["i"], Expr::field("F", &[])));
        assert_eq!(try_size(&small), Ok(partial_size(&BigUint::from(5u32))));
    }
}
