use alloc::string::String;
use core::fmt;

use crate::expr::{path_string, Path};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TypeErrorCode {
    UnboundParam,
    UnboundIndex,
    ArityMismatch,
    BoundMismatch,
    DuplicateIndex,
    KindMismatch,
    DimMismatch,
}

impl TypeErrorCode {
    pub fn name(self) -> &'static str {
        match self {
            TypeErrorCode::UnboundParam => "UnboundParam",
            TypeErrorCode::UnboundIndex => "UnboundIndex",
            TypeErrorCode::ArityMismatch => "ArityMismatch",
            TypeErrorCode::BoundMismatch => "BoundMismatch",
            TypeErrorCode::DuplicateIndex => "DuplicateIndex",
            TypeErrorCode::KindMismatch => "KindMismatch",
            TypeErrorCode::DimMismatch => "DimMismatch",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub code: TypeErrorCode,
    /// Position of the offending subterm.
    pub path: Path,
    pub message: String,
}

impl TypeError {
    pub(crate) fn new(code: TypeErrorCode, path: &[usize], message: String) -> Self {
        TypeError { code, path: path.into(), message }
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code.name(), path_string(&self.path), self.message)
    }
}
