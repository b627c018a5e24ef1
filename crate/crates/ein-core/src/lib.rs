//! Core of the EIN intermediate representation.
//!
//! Expressions carry explicit index variables; a context `σ` gives each
//! variable its range and doubles as the result shape. Normalization rewrites
//! an expression until no catalog rule applies, and every step is checked for
//! type preservation and strict descent of the size metric.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use ein_core::{infer_type, normalize, parse_in, IndexCtx, SurfaceType, TypeEnv};
//!
//! let mut env = TypeEnv::new();
//! env.insert("T".into(), SurfaceType::Ten(vec![3]));
//! let ctx = IndexCtx::new().with("i", 3);
//! let e = parse_in("delta(i,j) * T[j]", &env).unwrap();
//! infer_type(&env, &ctx, &e).unwrap();
//! let trace = normalize(&env, &ctx, &e).unwrap();
//! assert_eq!(trace.final_expr.to_string(), "T[i]");
//! ```

#![no_std]

extern crate alloc;

pub mod error;
pub mod eval;
pub mod expr;
pub mod index;
pub mod lemmas;
pub mod nf;
pub mod parse;
pub mod print;
pub mod rewrite;
pub mod rules;
pub mod scope;
pub mod size;
pub mod types;

pub use error::{ParseError, TypeError, TypeErrorCode};
pub use expr::{BinOp, Expr, Path, UnOp};
pub use index::{EinType, IndexCtx, IndexTerm, Kind, MultiIndex, SurfaceType, TypeEnv};
pub use nf::{is_normal_form, is_terminal, NfVerdict};
pub use parse::{parse, parse_in};
pub use rewrite::{normalize, rewrite_once, RewriteStep, RewriteTrace, Strategy};
pub use rules::{catalog, RuleId};
pub use size::{size, try_size};
pub use types::{check_env_ok, check_multi_index, infer_type, invert_type};
