//! The JSON AST document: one `{"node", "children", "attrs"}` record per node.

use std::str::FromStr;

use ein_core::{BinOp, Expr, IndexTerm, MultiIndex, UnOp};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub node: String,
    #[serde(default)]
    pub children: Vec<Node>,
    #[serde(default)]
    pub attrs: Map<String, Value>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DocError {
    #[error("unknown node kind '{0}'")]
    UnknownKind(String),
    #[error("'{kind}' node: missing or malformed attribute '{attr}'")]
    BadAttr { kind: String, attr: &'static str },
    #[error("'{kind}' node needs {want} children, found {got}")]
    Arity { kind: String, want: usize, got: usize },
    #[error("malformed document: {0}")]
    Json(String),
}

fn node(kind: &str, children: Vec<Node>, attrs: Value) -> Node {
    let attrs = match attrs {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    Node { node: kind.into(), children, attrs }
}

fn index_json(items: &[IndexTerm]) -> Value {
    Value::Array(
        items
            .iter()
            .map(|t| match t {
                IndexTerm::Const(c) => json!(c),
                IndexTerm::Var(v) => json!(v),
            })
            .collect(),
    )
}

fn rational_text(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `n`, `-n`, `n/m` or a finite decimal such as `-0.25`, exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let (n, d) = (BigInt::from_str(n.trim()).ok()?, BigInt::from_str(d.trim()).ok()?);
        return (d != BigInt::from(0)).then(|| BigRational::new(n, d));
    }
    let (mantissa, exp) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let neg = int.starts_with('-');
    let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut r = BigRational::from_integer(BigInt::from_str(&digits).ok()?);
    let shift = exp - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
    r = if shift >= 0 { r * scale } else { r / scale };
    Some(if neg { -r } else { r })
}

pub fn to_doc(e: &Expr) -> Node {
    let kids = |cs: Vec<&Expr>| cs.into_iter().map(to_doc).collect::<Vec<_>>();
    match e {
        Expr::Const(c) => node("const", vec![], json!({ "value": rational_text(c) })),
        Expr::Tensor(n, a) => node("tensor", vec![], json!({ "name": n, "indices": index_json(a) })),
        Expr::Field(n, a) => node("field", vec![], json!({ "name": n, "indices": index_json(a) })),
        Expr::Conv { image, alpha, kernel, beta } => node(
            "conv",
            vec![],
            json!({ "image": image, "alpha": index_json(alpha), "kernel": kernel, "beta": index_json(beta) }),
        ),
        Expr::Delta(a, b) => node("delta", vec![], json!({ "indices": index_json(&[a.clone(), b.clone()]) })),
        Expr::Eps(a) => node("eps", vec![], json!({ "indices": index_json(a) })),
        Expr::Sum { var, bound, .. } => node("sum", kids(e.children()), json!({ "var": var, "bound": bound })),
        Expr::Partial(nu, _) => node("partial", kids(e.children()), json!({ "indices": index_json(nu) })),
        Expr::Probe(..) => node("probe", kids(e.children()), json!({})),
        Expr::Lift(d, _) => node("lift", kids(e.children()), json!({ "dim": d })),
        Expr::Unary(UnOp::Pow(n), _) => node("unary", kids(e.children()), json!({ "op": "pow", "power": n })),
        Expr::Unary(op, _) => node("unary", kids(e.children()), json!({ "op": op.name() })),
        Expr::Binary(op, ..) => node("binary", kids(e.children()), json!({ "op": op.name() })),
    }
}

impl Node {
    fn bad(&self, attr: &'static str) -> DocError {
        DocError::BadAttr { kind: self.node.clone(), attr }
    }

    fn str_attr(&self, attr: &'static str) -> Result<&str, DocError> {
        self.attrs.get(attr).and_then(Value::as_str).ok_or_else(|| self.bad(attr))
    }

    fn u32_attr(&self, attr: &'static str) -> Result<u32, DocError> {
        self.attrs.get(attr).and_then(Value::as_u64).and_then(|n| u32::try_from(n).ok()).ok_or_else(|| self.bad(attr))
    }

    fn indices(&self, attr: &'static str) -> Result<MultiIndex, DocError> {
        let items = self.attrs.get(attr).and_then(Value::as_array).ok_or_else(|| self.bad(attr))?;
        items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(IndexTerm::Var(s.clone())),
                Value::Number(n) => n
                    .as_u64()
                    .and_then(|n| u32::try_from(n).ok())
                    .filter(|n| *n >= 1)
                    .map(IndexTerm::Const)
                    .ok_or_else(|| self.bad(attr)),
                _ => Err(self.bad(attr)),
            })
            .collect()
    }

    fn kids(&self, want: usize) -> Result<Vec<Expr>, DocError> {
        if self.children.len() != want {
            return Err(DocError::Arity { kind: self.node.clone(), want, got: self.children.len() });
        }
        self.children.iter().map(from_doc).collect()
    }
}

pub fn from_doc(n: &Node) -> Result<Expr, DocError> {
    let leaf = |n: &Node| n.kids(0).map(|_| ());
    Ok(match n.node.as_str() {
        "const" => {
            leaf(n)?;
            Expr::Const(parse_rational(n.str_attr("value")?).ok_or_else(|| n.bad("value"))?)
        }
        "tensor" => {
            leaf(n)?;
            Expr::Tensor(n.str_attr("name")?.into(), n.indices("indices")?)
        }
        "field" => {
            leaf(n)?;
            Expr::Field(n.str_attr("name")?.into(), n.indices("indices")?)
        }
        "conv" => {
            leaf(n)?;
            Expr::Conv {
                image: n.str_attr("image")?.into(),
                alpha: n.indices("alpha")?,
                kernel: n.str_attr("kernel")?.into(),
                beta: n.indices("beta")?,
            }
        }
        "delta" => {
            leaf(n)?;
            match n.indices("indices")?.as_slice() {
                [a, b] => Expr::Delta(a.clone(), b.clone()),
                _ => return Err(n.bad("indices")),
            }
        }
        "eps" => {
            leaf(n)?;
            Expr::Eps(n.indices("indices")?)
        }
        "sum" => {
            let [body] = <[Expr; 1]>::try_from(n.kids(1)?).expect("one child");
            Expr::sum(n.str_attr("var")?, n.u32_attr("bound")?, body)
        }
        "partial" => {
            let [body] = <[Expr; 1]>::try_from(n.kids(1)?).expect("one child");
            Expr::Partial(n.indices("indices")?, Box::new(body))
        }
        "probe" => {
            let [f, x] = <[Expr; 2]>::try_from(n.kids(2)?).expect("two children");
            Expr::probe(f, x)
        }
        "lift" => {
            let [body] = <[Expr; 1]>::try_from(n.kids(1)?).expect("one child");
            Expr::lift(n.u32_attr("dim")?, body)
        }
        "unary" => {
            let [body] = <[Expr; 1]>::try_from(n.kids(1)?).expect("one child");
            let op = match n.str_attr("op")? {
                "neg" => UnOp::Neg,
                "pow" => UnOp::Pow(n.u32_attr("power")?),
                other => UnOp::from_name(other).ok_or_else(|| n.bad("op"))?,
            };
            Expr::unary(op, body)
        }
        "binary" => {
            let [a, b] = <[Expr; 2]>::try_from(n.kids(2)?).expect("two children");
            let op = match n.str_attr("op")? {
                "add" => BinOp::Add,
                "sub" => BinOp::Sub,
                "mul" => BinOp::Mul,
                "div" => BinOp::Div,
                _ => return Err(n.bad("op")),
            };
            Expr::bin(op, a, b)
        }
        other => return Err(DocError::UnknownKind(other.into())),
    })
}

pub fn to_json(e: &Expr) -> String {
    serde_json::to_string_pretty(&to_doc(e)).expect("documents always serialize")
}

pub fn from_json(text: &str) -> Result<Expr, DocError> {
    let n: Node = serde_json::from_str(text).map_err(|e| DocError::Json(e.to_string()))?;
    from_doc(&n)
}
