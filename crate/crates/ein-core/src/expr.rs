//! The expression tree.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::index::{IndexTerm, MultiIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Sqrt,
    Exp,
    Kappa,
    Pow(u32),
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
}

impl UnOp {
    /// Surface name; `Neg` is written as a prefix `-` instead.
    pub fn name(self) -> &'static str {
        match self {
            UnOp::Neg => "neg",
            UnOp::Sqrt => "sqrt",
            UnOp::Exp => "exp",
            UnOp::Kappa => "kappa",
            UnOp::Pow(_) => "pow",
            UnOp::Sin => "sin",
            UnOp::Cos => "cos",
            UnOp::Tan => "tan",
            UnOp::Asin => "asin",
            UnOp::Acos => "acos",
            UnOp::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<UnOp> {
        Some(match name {
            "sqrt" => UnOp::Sqrt,
            "exp" => UnOp::Exp,
            "kappa" => UnOp::Kappa,
            "sin" => UnOp::Sin,
            "cos" => UnOp::Cos,
            "tan" => UnOp::Tan,
            "asin" => UnOp::Asin,
            "acos" => UnOp::Acos,
            "atan" => UnOp::Atan,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(BigRational),
    Tensor(String, MultiIndex),
    Field(String, MultiIndex),
    /// `V_α ⊛ H^β`
    Conv {
        image: String,
        alpha: MultiIndex,
        kernel: String,
        beta: MultiIndex,
    },
    Delta(IndexTerm, IndexTerm),
    Eps(MultiIndex),
    /// `Σ_{var=1..bound} body`
    Sum {
        var: String,
        bound: u32,
        body: Box<Expr>,
    },
    /// `∂/∂x_ν body`; `ν[0]` is applied first.
    Partial(MultiIndex, Box<Expr>),
    /// `field @ point`
    Probe(Box<Expr>, Box<Expr>),
    Lift(u32, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Child positions from the root.
pub type Path = Vec<usize>;

pub fn path_string(path: &[usize]) -> String {
    if path.is_empty() {
        return "/".into();
    }
    let mut s = String::new();
    for p in path {
        let _ = write!(s, "/{p}");
    }
    s
}

/// Builds a multi-index from strings; numerals become constants.
pub fn idx(items: &[&str]) -> MultiIndex {
    items
        .iter()
        .map(|s| match s.parse::<u32>() {
            Ok(n) => IndexTerm::Const(n),
            Err(_) => IndexTerm::Var((*s).into()),
        })
        .collect()
}

// `add`, `mul` and friends build nodes; they are not arithmetic.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Const(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn tensor(name: &str, items: &[&str]) -> Expr {
        Expr::Tensor(name.into(), idx(items))
    }

    pub fn field(name: &str, items: &[&str]) -> Expr {
        Expr::Field(name.into(), idx(items))
    }

    pub fn conv(image: &str, alpha: &[&str], kernel: &str, beta: &[&str]) -> Expr {
        Expr::Conv { image: image.into(), alpha: idx(alpha), kernel: kernel.into(), beta: idx(beta) }
    }

    pub fn delta(i: &str, j: &str) -> Expr {
        let v = idx(&[i, j]);
        Expr::Delta(v[0].clone(), v[1].clone())
    }

    pub fn eps(items: &[&str]) -> Expr {
        Expr::Eps(idx(items))
    }

    pub fn sum(var: &str, bound: u32, body: Expr) -> Expr {
        Expr::Sum { var: var.into(), bound, body: Box::new(body) }
    }

    pub fn partial(items: &[&str], body: Expr) -> Expr {
        Expr::Partial(idx(items), Box::new(body))
    }

    pub fn probe(field: Expr, point: Expr) -> Expr {
        Expr::Probe(Box::new(field), Box::new(point))
    }

    pub fn lift(dim: u32, body: Expr) -> Expr {
        Expr::Lift(dim, Box::new(body))
    }

    pub fn unary(op: UnOp, body: Expr) -> Expr {
        Expr::Unary(op, Box::new(body))
    }

    pub fn neg(body: Expr) -> Expr {
        Expr::unary(UnOp::Neg, body)
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn add(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Add, lhs, rhs)
    }

    pub fn sub(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Sub, lhs, rhs)
    }

    pub fn mul(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Mul, lhs, rhs)
    }

    pub fn div(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Div, lhs, rhs)
    }

    /// `0` or `lift(0)`, the tensor and field zeros.
    pub fn is_zero(&self) -> bool {
        match self {
            Expr::Const(c) => c.is_zero(),
            Expr::Lift(_, b) => matches!(&**b, Expr::Const(c) if c.is_zero()),
            _ => false,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_)
            | Expr::Tensor(..)
            | Expr::Field(..)
            | Expr::Conv { .. }
            | Expr::Delta(..)
            | Expr::Eps(_) => Vec::new(),
            Expr::Sum { body, .. } | Expr::Partial(_, body) | Expr::Lift(_, body) | Expr::Unary(_, body) => {
                alloc::vec![&**body]
            }
            Expr::Probe(a, b) | Expr::Binary(_, a, b) => alloc::vec![&**a, &**b],
        }
    }

    fn child_mut(&mut self, k: usize) -> Option<&mut Expr> {
        match (self, k) {
            (Expr::Sum { body, .. }, 0)
            | (Expr::Partial(_, body), 0)
            | (Expr::Lift(_, body), 0)
            | (Expr::Unary(_, body), 0) => Some(body),
            (Expr::Probe(a, _), 0) | (Expr::Binary(_, a, _), 0) => Some(a),
            (Expr::Probe(_, b), 1) | (Expr::Binary(_, _, b), 1) => Some(b),
            _ => None,
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Expr> {
        let mut cur = self;
        for &k in path {
            cur = *cur.children().get(k)?;
        }
        Some(cur)
    }

    /// Copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[usize], new: Expr) -> Expr {
        let mut out = self.clone();
        let mut cur = &mut out;
        for &k in path {
            cur = cur.child_mut(k).expect("path out of range");
        }
        *cur = new;
        out
    }

    /// Paths in post-order, children left to right.
    pub fn postorder_paths(&self) -> Vec<Path> {
        fn go(e: &Expr, prefix: &mut Path, out: &mut Vec<Path>) {
            for (k, c) in e.children().into_iter().enumerate() {
                prefix.push(k);
                go(c, prefix, out);
                prefix.pop();
            }
            out.push(prefix.clone());
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Index variables written directly on this node (not in children).
    pub fn own_indices(&self) -> Vec<&IndexTerm> {
        match self {
            Expr::Tensor(_, a) | Expr::Field(_, a) | Expr::Eps(a) | Expr::Partial(a, _) => a.iter().collect(),
            Expr::Conv { alpha, beta, .. } => alpha.iter().chain(beta.iter()).collect(),
            Expr::Delta(i, j) => alloc::vec![i, j],
            _ => Vec::new(),
        }
    }

    /// Variables not bound by an enclosing `Sum`.
    pub fn free_index_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        for t in self.own_indices() {
            if let IndexTerm::Var(v) = t {
                out.insert(v.clone());
            }
        }
        match self {
            Expr::Sum { var, body, .. } => {
                let mut inner = BTreeSet::new();
                body.collect_free(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
            _ => {
                for c in self.children() {
                    c.collect_free(out);
                }
            }
        }
    }

    pub fn mentions_free(&self, var: &str) -> bool {
        self.free_index_vars().contains(var)
    }

    /// Every index variable name, free or bound.
    pub fn all_index_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_all(&mut out);
        out
    }

    fn collect_all(&self, out: &mut BTreeSet<String>) {
        for t in self.own_indices() {
            if let IndexTerm::Var(v) = t {
                out.insert(v.clone());
            }
        }
        if let Expr::Sum { var, .. } = self {
            out.insert(var.clone());
        }
        for c in self.children() {
            c.collect_all(out);
        }
    }

    /// True when the tree contains a field variable, convolution or derivative.
    pub fn has_field_terms(&self) -> bool {
        match self {
            Expr::Field(..) | Expr::Conv { .. } | Expr::Partial(..) => true,
            _ => self.children().iter().any(|c| c.has_field_terms()),
        }
    }
}

/// A name not in `taken`, derived from `base`.
pub fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    let stem: &str = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    for n in 1u32.. {
        let cand = alloc::format!("{stem}{n}");
        if !taken.contains(&cand) {
            return cand;
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_drop_sum_binder() {
        let e = Expr::sum("i", 3, Expr::mul(Expr::tensor("T", &["i"]), Expr::tensor("S", &["j"])));
        let fv: Vec<_> = e.free_index_vars().into_iter().collect();
        assert_eq!(fv, ["j"]);
        assert!(Expr::int(5).free_index_vars().is_empty());
        assert_eq!(Expr::tensor("T", &["i"]).free_index_vars().len(), 1);
    }

    #[test]
    fn replace_and_lookup_paths() {
        let e = Expr::add(Expr::tensor("T", &["i"]), Expr::neg(Expr::int(0)));
        assert_eq!(e.at(&[1, 0]), Some(&Expr::int(0)));
        let r = e.replace_at(&[1], Expr::int(2));
        assert_eq!(r, Expr::add(Expr::tensor("T", &["i"]), Expr::int(2)));
        assert_eq!(e.postorder_paths(), alloc::vec![alloc::vec![0], alloc::vec![1, 0], alloc::vec![1], alloc::vec![]]);
    }

    #[test]
    fn fresh_names_skip_taken() {
        let taken: BTreeSet<String> = ["i1".into(), "i2".into()].into_iter().collect();
        assert_eq!(fresh_name("i", &taken), "i3");
    }
}
