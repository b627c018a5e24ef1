//! Values of field-free expressions.
//!
//! [`numeric`] is a brute-force oracle over dense data. [`symbolic`] builds
//! basis-vector values and reduces them with the δ and ε laws; flattening a
//! symbolic value must agree with the oracle.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::expr::{path_string, Path};

pub mod numeric;
pub mod symbolic;

pub use numeric::{check_value_preservation, eval_numeric, ValueCheck, TOLERANCE};
pub use symbolic::{eval_symbolic, flatten, reduce, Value};

/// A scalar result: exact while only rational arithmetic has been used.
#[derive(Clone, Debug, PartialEq)]
pub enum Num {
    Exact(BigRational),
    Approx(f64),
}

impl Num {
    pub fn int(n: i64) -> Num {
        Num::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Num::Approx(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Exact(r) => r.is_zero(),
            Num::Approx(x) => *x == 0.0,
        }
    }

    fn lift2(
        &self,
        other: &Num,
        exact: impl FnOnce(&BigRational, &BigRational) -> BigRational,
        approx: impl FnOnce(f64, f64) -> f64,
    ) -> Num {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(exact(a, b)),
            _ => Num::Approx(approx(self.to_f64(), other.to_f64())),
        }
    }

    pub fn add(&self, other: &Num) -> Num {
        self.lift2(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &Num) -> Num {
        self.lift2(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, other: &Num) -> Num {
        self.lift2(other, |a, b| a * b, |a, b| a * b)
    }

    /// `None` on a zero divisor. An inexact divisor within [`TOLERANCE`] of
    /// zero counts as zero: `√2·√2 - 2` is rounding residue, not a value.
    pub fn div(&self, other: &Num) -> Option<Num> {
        let tiny = matches!(other, Num::Approx(x) if libm::fabs(*x) <= TOLERANCE);
        if other.is_zero() || tiny {
            return None;
        }
        Some(self.lift2(other, |a, b| a / b, |a, b| a / b))
    }

    pub fn neg(&self) -> Num {
        match self {
            Num::Exact(r) => Num::Exact(-r),
            Num::Approx(x) => Num::Approx(-x),
        }
    }

    /// Equal when both are exact and identical, otherwise within `tol`
    /// relative to the larger magnitude (and absolute below 1).
    pub fn close_to(&self, other: &Num, tol: f64) -> bool {
        if let (Num::Exact(a), Num::Exact(b)) = (self, other) {
            return a == b;
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        let scale = libm::fabs(a).max(libm::fabs(b)).max(1.0);
        libm::fabs(a - b) <= tol * scale
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Num::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Num::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// `√r` when `r` is the square of a rational.
pub(crate) fn exact_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer().sqrt(), r.denom().sqrt());
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| BigRational::new(n, d))
}

/// Dense row-major data for one tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseTensor {
    pub shape: Vec<u32>,
    pub data: Vec<BigRational>,
}

impl DenseTensor {
    /// `None` if `data` does not fill `shape`.
    pub fn new(shape: Vec<u32>, data: Vec<BigRational>) -> Option<Self> {
        let n: usize = shape.iter().map(|d| *d as usize).product();
        (n == data.len()).then_some(DenseTensor { shape, data })
    }

    /// Component at a 1-based multi-index.
    pub fn get(&self, at: &[u32]) -> Option<&BigRational> {
        if at.len() != self.shape.len() {
            return None;
        }
        let mut off = 0usize;
        for (k, d) in at.iter().zip(&self.shape) {
            if *k < 1 || k > d {
                return None;
            }
            off = off * (*d as usize) + (*k as usize - 1);
        }
        self.data.get(off)
    }
}

/// Tensor data by name (`Ψ`).
pub type Data = BTreeMap<String, DenseTensor>;

/// Concrete values for index variables (`ρ`).
pub type Assignment = BTreeMap<String, u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    /// Field variable, convolution or derivative: no value semantics.
    Unsupported {
        what: &'static str,
        path: Path,
    },
    UnknownTensor(String),
    MissingIndex(String),
    OutOfBounds {
        tensor: String,
        index: Vec<u32>,
    },
    DivisionByZero,
    /// A transcendental function left its domain.
    Domain(&'static str),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unsupported { what, path } => write!(f, "no value for {what} at {}", path_string(path)),
            EvalError::UnknownTensor(t) => write!(f, "no data for tensor '{t}'"),
            EvalError::MissingIndex(i) => write!(f, "index '{i}' has no value"),
            EvalError::OutOfBounds { tensor, index } => write!(f, "{tensor}{index:?} is out of bounds"),
            EvalError::DivisionByZero => f.write_str("division by zero"),
            EvalError::Domain(op) => write!(f, "{op} outside its domain"),
        }
    }
}

/// Every assignment of `1..=bound` to the given variables, last varying fastest.
pub fn assignments(vars: &[(String, u32)]) -> Vec<Assignment> {
    let mut out = alloc::vec![Assignment::new()];
    for (name, bound) in vars {
        let mut next = Vec::with_capacity(out.len() * *bound as usize);
        for a in &out {
            for v in 1..=*bound {
                let mut b = a.clone();
                b.insert(name.clone(), v);
                next.push(b);
            }
        }
        out = next;
    }
    out
}
