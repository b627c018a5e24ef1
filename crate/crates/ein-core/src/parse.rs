//! Recursive-descent parser for the surface syntax.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | postfix
//! postfix:= atom ('@' atom)*
//! atom   := NUMBER | ID '[' indices ']' | '(' expr ')'
//!         | delta(i,j) | eps(i,j[,k]) | conv(V,[α],H,[β])
//!         | sum(i,1,n, e) | d(i, e) | d([ν], e) | lift(d, e)
//!         | pow(e, n) | sqrt(e) | exp(e) | kappa(e) | sin(e) | ...
//! ```
//!
//! `INT/INT` with no spaces is a rational literal, and a `-` glued to a
//! number is a negative literal; `a / b` and `-(3)` are the operators.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::ParseError;
use crate::expr::{BinOp, Expr, UnOp};
use crate::index::{IndexTerm, MultiIndex, SurfaceType, TypeEnv};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    At,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    start: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        if c == '\n' {
            line += 1;
            col = 1;
            k += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            k += 1;
            continue;
        }
        let start = k;
        let (l0, c0) = (line, col);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            Tok::Ident(chars[start..k].iter().collect())
        } else if c.is_ascii_digit() {
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let digit_at = |p: usize| p < chars.len() && chars[p].is_ascii_digit();
            if k < chars.len() && matches!(chars[k], '.' | '/') && digit_at(k + 1) {
                k += 1;
                while digit_at(k) {
                    k += 1;
                }
            }
            Tok::Number(chars[start..k].iter().collect())
        } else {
            k += 1;
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                ',' => Tok::Comma,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '@' => Tok::At,
                other => {
                    return Err(ParseError { line, col, message: format!("unexpected character '{other}'") });
                }
            }
        };
        col += k - start;
        out.push(Token { tok, line: l0, col: c0, start, end: k });
    }
    out.push(Token { tok: Tok::Eof, line, col, start: chars.len(), end: chars.len() });
    Ok(out)
}

fn number_value(text: &str) -> Option<BigRational> {
    if let Some((n, d)) = text.split_once('/') {
        let d: BigInt = d.parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n.parse().ok()?, d));
    }
    if let Some((w, f)) = text.split_once('.') {
        let scale = BigInt::from(10u32).pow(f.len() as u32);
        let whole: BigInt = w.parse().ok()?;
        let frac: BigInt = f.parse().ok()?;
        return Some(BigRational::new(whole * &scale + frac, scale));
    }
    Some(BigRational::from_integer(text.parse().ok()?))
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    env: Option<&'a TypeEnv>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, off: usize) -> &Token {
        let k = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[k]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Token, message: String) -> ParseError {
        ParseError { line: t.line, col: t.col, message }
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Number(s) => format!("number '{s}'"),
            Tok::Eof => "end of input".into(),
            other => format!("'{}'", tok_char(other)),
        }
    }

    fn expect(&mut self, want: Tok) -> PResult<Token> {
        let t = self.peek().clone();
        if t.tok == want {
            Ok(self.bump())
        } else {
            Err(Self::err_at(&t, format!("expected '{}', found {}", tok_char(&want), Self::describe(&t.tok))))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) => Ok(s.clone()),
            other => Err(Self::err_at(&t, format!("expected identifier, found {}", Self::describe(other)))),
        }
    }

    fn positive_int(&mut self, what: &str) -> PResult<u32> {
        let t = self.bump();
        match &t.tok {
            Tok::Number(s) => match s.parse::<u32>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(Self::err_at(&t, format!("{what} must be a positive integer, found '{s}'"))),
            },
            other => Err(Self::err_at(&t, format!("expected {what}, found {}", Self::describe(other)))),
        }
    }

    fn index_term(&mut self) -> PResult<IndexTerm> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) => Ok(IndexTerm::Var(s.clone())),
            Tok::Number(s) => match s.parse::<u32>() {
                Ok(n) if n >= 1 => Ok(IndexTerm::Const(n)),
                _ => Err(Self::err_at(&t, format!("index constant must be an integer >= 1, found '{s}'"))),
            },
            other => Err(Self::err_at(&t, format!("expected index, found {}", Self::describe(other)))),
        }
    }

    /// Items up to (not including) `close`.
    fn index_list(&mut self, close: Tok) -> PResult<MultiIndex> {
        let mut items = Vec::new();
        if self.peek().tok == close {
            return Ok(items);
        }
        loop {
            items.push(self.index_term()?);
            if self.peek().tok == Tok::Comma {
                self.bump();
            } else {
                return Ok(items);
            }
        }
    }

    fn bracketed_indices(&mut self) -> PResult<MultiIndex> {
        self.expect(Tok::LBrack)?;
        let items = self.index_list(Tok::RBrack)?;
        self.expect(Tok::RBrack)?;
        Ok(items)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut acc = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(acc),
            };
            self.bump();
            let rhs = self.term()?;
            acc = Expr::bin(op, acc, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut acc = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(acc),
            };
            self.bump();
            let rhs = self.factor()?;
            acc = Expr::bin(op, acc, rhs);
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        if self.peek().tok == Tok::Minus {
            let minus = self.bump();
            let next = self.peek().clone();
            if let Tok::Number(ref s) = next.tok {
                if next.start == minus.end {
                    self.bump();
                    let v = number_value(s).ok_or_else(|| Self::err_at(&next, format!("bad number '{s}'")))?;
                    return self.postfix(Expr::Const(-v));
                }
            }
            return Ok(Expr::neg(self.factor()?));
        }
        let a = self.atom()?;
        self.postfix(a)
    }

    fn postfix(&mut self, mut acc: Expr) -> PResult<Expr> {
        while self.peek().tok == Tok::At {
            self.bump();
            let point = self.atom()?;
            acc = Expr::probe(acc, point);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(s) => {
                self.bump();
                let v = number_value(s).ok_or_else(|| Self::err_at(&t, format!("bad number '{s}'")))?;
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let name = name.clone();
                match self.peek_at(1).tok {
                    Tok::LBrack => {
                        self.bump();
                        let items = self.bracketed_indices()?;
                        let is_field = matches!(self.env.and_then(|g| g.get(&name)), Some(SurfaceType::Fld { .. }));
                        Ok(if is_field { Expr::Field(name, items) } else { Expr::Tensor(name, items) })
                    }
                    Tok::LParen => {
                        self.bump();
                        self.bump();
                        let e = self.call(&name, &t)?;
                        self.expect(Tok::RParen)?;
                        Ok(e)
                    }
                    _ => Err(Self::err_at(self.peek_at(1), format!("expected '[' or '(' after identifier '{name}'"))),
                }
            }
            other => Err(Self::err_at(&t, format!("expected expression, found {}", Self::describe(other)))),
        }
    }

    /// Body of `name(...)`; the opening paren is consumed, the closing one is not.
    fn call(&mut self, name: &str, at: &Token) -> PResult<Expr> {
        match name {
            "delta" => {
                let i = self.index_term()?;
                self.expect(Tok::Comma)?;
                let j = self.index_term()?;
                Ok(Expr::Delta(i, j))
            }
            "eps" => {
                let items = self.index_list(Tok::RParen)?;
                if !(2..=3).contains(&items.len()) {
                    return Err(Self::err_at(at, format!("Eps arity must be 2 or 3, found {}", items.len())));
                }
                Ok(Expr::Eps(items))
            }
            "conv" => {
                let image = self.ident()?;
                self.expect(Tok::Comma)?;
                let alpha = self.bracketed_indices()?;
                self.expect(Tok::Comma)?;
                let kernel = self.ident()?;
                self.expect(Tok::Comma)?;
                let beta = self.bracketed_indices()?;
                Ok(Expr::Conv { image, alpha, kernel, beta })
            }
            "sum" => {
                let var = self.ident()?;
                self.expect(Tok::Comma)?;
                let lo_tok = self.peek().clone();
                let lo = self.positive_int("lower bound")?;
                if lo != 1 {
                    return Err(Self::err_at(&lo_tok, format!("summation lower bound must be 1, found {lo}")));
                }
                self.expect(Tok::Comma)?;
                let bound = self.positive_int("upper bound")?;
                self.expect(Tok::Comma)?;
                let body = self.expr()?;
                Ok(Expr::Sum { var, bound, body: Box::new(body) })
            }
            "d" => {
                let nu = if self.peek().tok == Tok::LBrack {
                    let t = self.peek().clone();
                    let nu = self.bracketed_indices()?;
                    if nu.is_empty() {
                        return Err(Self::err_at(&t, "derivative index list must be non-empty".into()));
                    }
                    nu
                } else {
                    alloc::vec![self.index_term()?]
                };
                self.expect(Tok::Comma)?;
                let body = self.expr()?;
                Ok(Expr::Partial(nu, Box::new(body)))
            }
            "lift" => {
                let d = self.positive_int("lift dimension")?;
                self.expect(Tok::Comma)?;
                let body = self.expr()?;
                Ok(Expr::lift(d, body))
            }
            "pow" => {
                let body = self.expr()?;
                self.expect(Tok::Comma)?;
                let t = self.bump();
                let n = match &t.tok {
                    Tok::Number(s) => s.parse::<u32>().map_err(|_| Self::err_at(&t, format!("bad exponent '{s}'")))?,
                    other => {
                        return Err(Self::err_at(&t, format!("expected exponent, found {}", Self::describe(other))))
                    }
                };
                Ok(Expr::unary(UnOp::Pow(n), body))
            }
            other => match UnOp::from_name(other) {
                Some(op) => Ok(Expr::unary(op, self.expr()?)),
                None => Err(Self::err_at(at, format!("unknown operator '{other}'"))),
            },
        }
    }
}

fn tok_char(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrack => "[",
        Tok::RBrack => "]",
        Tok::Comma => ",",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::At => "@",
        Tok::Ident(_) => "identifier",
        Tok::Number(_) => "number",
        Tok::Eof => "end of input",
    }
}

fn parse_with(text: &str, env: Option<&TypeEnv>) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, env };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::Eof {
        return Err(Parser::err_at(t, format!("unexpected {}", Parser::describe(&t.tok))));
    }
    Ok(e)
}

/// Parses without an environment; every `ID[...]` is a tensor reference.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, None)
}

/// Parses with `Γ`, so identifiers declared `FLD` become field references.
pub fn parse_in(text: &str, env: &TypeEnv) -> Result<Expr, ParseError> {
    parse_with(text, Some(env))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        assert_eq!(parse("delta(i,j) * T[j]").unwrap(), Expr::mul(Expr::delta("i", "j"), Expr::tensor("T", &["j"])));
        assert_eq!(
            parse("sum(i,1,3, T[i]*T[i])").unwrap(),
            Expr::sum("i", 3, Expr::mul(Expr::tensor("T", &["i"]), Expr::tensor("T", &["i"])))
        );
    }

    #[test]
    fn eps_arity_is_checked() {
        let err = parse("eps(i,j,k,l)").unwrap_err();
        assert!(err.message.contains("Eps arity must be 2 or 3"), "{err}");
        assert_eq!((err.line, err.col), (1, 1));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("T[i] +\n  frob(T[i])").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
        assert!(err.message.contains("unknown operator 'frob'"));
        let err = parse("T[i] + ").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn literals_versus_operators() {
        assert_eq!(parse("1/2").unwrap(), Expr::ratio(1, 2));
        assert_eq!(parse("1 / 2").unwrap(), Expr::div(Expr::int(1), Expr::int(2)));
        assert_eq!(parse("-3").unwrap(), Expr::int(-3));
        assert_eq!(parse("-(3)").unwrap(), Expr::neg(Expr::int(3)));
        assert_eq!(parse("0.25").unwrap(), Expr::ratio(1, 4));
        assert_eq!(parse("a[] - 3").unwrap(), Expr::sub(Expr::tensor("a", &[]), Expr::int(3)));
    }

    #[test]
    fn probe_binds_tighter_than_negation() {
        let e = parse("-F[] @ x[]").unwrap();
        assert_eq!(e, Expr::neg(Expr::probe(Expr::tensor("F", &[]), Expr::tensor("x", &[]))));
    }

    #[test]
    fn env_resolves_fields() {
        let mut env = TypeEnv::new();
        env.insert("F".into(), SurfaceType::Fld { dim: 2, shape: alloc::vec![] });
        assert_eq!(parse_in("d(i, F[])", &env).unwrap(), Expr::partial(&["i"], Expr::field("F", &[])));
        assert_eq!(parse_in("d([i,j], F[])", &env).unwrap(), Expr::partial(&["i", "j"], Expr::field("F", &[])));
    }
}
