//! Declarations of `Γ` and `σ`, one per line:
//!
//! ```text
//! # comment
//! T : TEN[3,3]
//! F : FLD3[]
//! V : IMG3[3]
//! H : KRN
//! index i : 3
//! ```
//!
//! Declarations may also be separated by `;`, and a type declaration may
//! start with `tensor`: `tensor T : TEN[3,3]; index i : 3;`.

use std::fmt::Write as _;

use ein_core::{check_env_ok, IndexCtx, SurfaceType, TypeEnv};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Env {
    pub types: TypeEnv,
    /// Declaration order is the result shape.
    pub ctx: IndexCtx,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct EnvError {
    pub line: usize,
    pub message: String,
}

fn dims(text: &str) -> Option<Vec<u32>> {
    let inner = text.strip_prefix('[')?.strip_suffix(']')?.trim();
    if inner.is_empty() {
        return Some(Vec::new());
    }
    inner.split(',').map(|d| d.trim().parse::<u32>().ok().filter(|d| *d >= 1)).collect()
}

/// Parses the printed form of a [`SurfaceType`].
pub fn parse_type(text: &str) -> Option<SurfaceType> {
    let text = text.trim();
    if text == "KRN" {
        return Some(SurfaceType::Krn);
    }
    if let Some(rest) = text.strip_prefix("TEN") {
        return dims(rest).map(SurfaceType::Ten);
    }
    let (ctor, rest): (fn(u32, Vec<u32>) -> SurfaceType, &str) = if let Some(r) = text.strip_prefix("FLD") {
        (|dim, shape| SurfaceType::Fld { dim, shape }, r)
    } else {
        (|dim, shape| SurfaceType::Img { dim, shape }, text.strip_prefix("IMG")?)
    };
    let open = rest.find('[')?;
    let dim = rest[..open].parse::<u32>().ok().filter(|d| *d >= 1)?;
    Some(ctor(dim, dims(&rest[open..])?))
}

pub fn parse_env(text: &str) -> Result<Env, EnvError> {
    let mut env = Env::default();
    let mut entries = Vec::new();
    let decls = text
        .lines()
        .enumerate()
        .flat_map(|(k, raw)| raw.split('#').next().unwrap_or("").split(';').map(move |d| (k, d.trim())));
    for (k, decl) in decls {
        let err = |message: String| EnvError { line: k + 1, message };
        if decl.is_empty() {
            continue;
        }
        let (lhs, rhs) = decl.split_once(':').ok_or_else(|| err("expected 'name : type'".into()))?;
        let lhs = lhs.trim();
        let lhs = lhs.strip_prefix("tensor ").map_or(lhs, str::trim);
        if let Some(name) = lhs.strip_prefix("index ") {
            let bound = rhs.trim().parse::<u32>().map_err(|_| err(format!("bad bound '{}'", rhs.trim())))?;
            entries.push((name.trim().to_string(), bound));
            continue;
        }
        if lhs.is_empty() || !lhs.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(err(format!("bad name '{lhs}'")));
        }
        let ty = parse_type(rhs).ok_or_else(|| err(format!("bad type '{}'", rhs.trim())))?;
        if env.types.insert(lhs.to_string(), ty).is_some() {
            return Err(err(format!("'{lhs}' declared twice")));
        }
    }
    env.ctx = IndexCtx::from_entries(entries);
    check_env_ok(&env.types, &env.ctx).map_err(|e| EnvError { line: 0, message: e.message })?;
    Ok(env)
}

pub fn env_text(env: &Env) -> String {
    let mut out = String::new();
    for (name, ty) in &env.types {
        let _ = writeln!(out, "{name} : {ty}");
    }
    for (name, bound) in env.ctx.entries() {
        let _ = writeln!(out, "index {name} : {bound}");
    }
    out
}
