//! Index terms, index contexts and the static environment.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// One position of a multi-index: a concrete component or a variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexTerm {
    /// 1-based component; always `>= 1`.
    Const(u32),
    Var(String),
}

impl IndexTerm {
    pub fn var(name: &str) -> Self {
        IndexTerm::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            IndexTerm::Var(v) => Some(v),
            IndexTerm::Const(_) => None,
        }
    }
}

impl fmt::Display for IndexTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexTerm::Const(c) => write!(f, "{c}"),
            IndexTerm::Var(v) => f.write_str(v),
        }
    }
}

pub type MultiIndex = Vec<IndexTerm>;

/// Ordered map from index variables to upper bounds (lower bound is 1).
///
/// Order matters: it is the result shape. Duplicate names are representable
/// so that [`crate::check_env_ok`] can reject them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexCtx {
    entries: Vec<(String, u32)>,
}

impl IndexCtx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        IndexCtx { entries: entries.into_iter().map(|(n, b)| (n.into(), b)).collect() }
    }

    pub fn entries(&self) -> &[(String, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.entries.iter().find(|(n, _)| n == name).map(|&(_, b)| b)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// `σ[i ↦ (1,n)]`: rebinds in place if present, else appends.
    pub fn with(&self, name: &str, bound: u32) -> Self {
        let mut out = self.clone();
        match out.entries.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = bound,
            None => out.entries.push((name.into(), bound)),
        }
        out
    }

    /// `σ \ i`.
    pub fn without(&self, name: &str) -> Self {
        IndexCtx { entries: self.entries.iter().filter(|(n, _)| n != name).cloned().collect() }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }
}

impl fmt::Display for IndexCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (n, b)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}:{b}")?;
        }
        f.write_str("}")
    }
}

/// Types of operator parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SurfaceType {
    Ten(Vec<u32>),
    Fld { dim: u32, shape: Vec<u32> },
    Img { dim: u32, shape: Vec<u32> },
    Krn,
}

impl fmt::Display for SurfaceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn dims(f: &mut fmt::Formatter<'_>, ds: &[u32]) -> fmt::Result {
            f.write_str("[")?;
            for (k, d) in ds.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{d}")?;
            }
            f.write_str("]")
        }
        match self {
            SurfaceType::Ten(s) => {
                f.write_str("TEN")?;
                dims(f, s)
            }
            SurfaceType::Fld { dim, shape } => {
                write!(f, "FLD{dim}")?;
                dims(f, shape)
            }
            SurfaceType::Img { dim, shape } => {
                write!(f, "IMG{dim}")?;
                dims(f, shape)
            }
            SurfaceType::Krn => f.write_str("KRN"),
        }
    }
}

/// `Γ`: parameter identifiers to surface types.
pub type TypeEnv = BTreeMap<String, SurfaceType>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Ten,
    /// Field over a `d`-dimensional domain.
    Fld(u32),
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Ten => f.write_str("TEN"),
            Kind::Fld(d) => write!(f, "FLD{d}"),
        }
    }
}

/// `τ`: an indexed tensor or field type.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EinType {
    pub kind: Kind,
    pub shape: IndexCtx,
}

impl fmt::Display for EinType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind, self.shape)
    }
}
