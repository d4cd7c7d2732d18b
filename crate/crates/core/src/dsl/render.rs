//! Canonical parenthesized text form of [`Expr`].

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use super::expr::Expr;
use super::value::{CmpOp, TypedValue, Unit};

fn quote(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}

/// Names that read back as a single atom.
fn is_bare(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | '\\'))
}

fn render(e: &Expr, out: &mut String) {
    match e {
        Expr::Conditional { cond, then, otherwise } => {
            out.push_str("(if ");
            render(cond, out);
            out.push(' ');
            render(then, out);
            if let Some(o) = otherwise {
                out.push(' ');
                render(o, out);
            }
            out.push(')');
        }
        Expr::Compare { lhs, op, rhs } => {
            let _ = write!(out, "({} ", op.symbol());
            render(lhs, out);
            out.push(' ');
            render(rhs, out);
            out.push(')');
        }
        Expr::BoolConcept(name) => {
            out.push_str("(concept ");
            quote(name, out);
            out.push(')');
        }
        Expr::ValueConcept(name) => {
            out.push_str("(value ");
            quote(name, out);
            out.push(')');
        }
        Expr::Const(v) => {
            let _ = write!(out, "(const {}", v.magnitude());
            if v.unit() != Unit::Unitless {
                let _ = write!(out, " {}", v.unit().tag());
            }
            out.push(')');
        }
        Expr::Call { procedure, args } => {
            out.push_str("(proc ");
            quote(procedure, out);
            for (k, v) in args {
                out.push_str(" (");
                if is_bare(k) {
                    out.push_str(k);
                } else {
                    quote(k, out);
                }
                out.push(' ');
                quote(v, out);
                out.push(')');
            }
            out.push(')');
        }
        Expr::ResolveBool(s) | Expr::ResolveValue(s) | Expr::ResolveProcedure(s) => {
            let head = match e {
                Expr::ResolveBool(_) => "resolve-bool",
                Expr::ResolveValue(_) => "resolve-value",
                _ => "resolve-proc",
            };
            let _ = write!(out, "({head} ");
            quote(s, out);
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        render(self, &mut s);
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("script syntax error at byte {offset}: {message}")]
pub struct ExprSyntaxError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>, usize),
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprSyntaxError> {
        Err(ExprSyntaxError {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn read(&mut self) -> Result<Sexp, ExprSyntaxError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some('(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return self.err("unclosed '('"),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => self.err("unexpected ')'"),
            Some('"') => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    let Some(c) = self.peek() else {
                        return self.err("unterminated string");
                    };
                    self.pos += c.len_utf8();
                    match c {
                        '"' => return Ok(Sexp::Str(s)),
                        '\\' => {
                            let Some(n) = self.peek() else {
                                return self.err("unterminated escape");
                            };
                            self.pos += n.len_utf8();
                            s.push(n);
                        }
                        _ => s.push(c),
                    }
                }
            }
            Some(_) => {
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
                Ok(Sexp::Atom(self.src[start..self.pos].to_string()))
            }
        }
    }
}

fn bad<T>(offset: usize, message: impl Into<String>) -> Result<T, ExprSyntaxError> {
    Err(ExprSyntaxError {
        offset,
        message: message.into(),
    })
}

fn string_arg(items: &[Sexp], at: usize, offset: usize) -> Result<String, ExprSyntaxError> {
    match items.get(at) {
        Some(Sexp::Str(s)) => Ok(s.clone()),
        _ => bad(offset, format!("expected a string in position {at}")),
    }
}

fn convert(s: &Sexp) -> Result<Expr, ExprSyntaxError> {
    let Sexp::List(items, offset) = s else {
        return bad(0, "expected a parenthesized form");
    };
    let offset = *offset;
    let Some(Sexp::Atom(head)) = items.first() else {
        return bad(offset, "form must start with a symbol");
    };
    let arity = |n: std::ops::RangeInclusive<usize>| -> Result<(), ExprSyntaxError> {
        if n.contains(&(items.len() - 1)) {
            Ok(())
        } else {
            bad(offset, format!("wrong number of operands for {head}"))
        }
    };
    match head.as_str() {
        "if" => {
            arity(2..=3)?;
            Ok(Expr::Conditional {
                cond: Box::new(convert(&items[1])?),
                then: Box::new(convert(&items[2])?),
                otherwise: items.get(3).map(convert).transpose()?.map(Box::new),
            })
        }
        ">" | "<" | "=" => {
            arity(2..=2)?;
            Ok(Expr::Compare {
                lhs: Box::new(convert(&items[1])?),
                op: CmpOp::from_symbol(head).expect("matched above"),
                rhs: Box::new(convert(&items[2])?),
            })
        }
        "concept" => {
            arity(1..=1)?;
            Ok(Expr::BoolConcept(string_arg(items, 1, offset)?))
        }
        "value" => {
            arity(1..=1)?;
            Ok(Expr::ValueConcept(string_arg(items, 1, offset)?))
        }
        "resolve-bool" => {
            arity(1..=1)?;
            Ok(Expr::ResolveBool(string_arg(items, 1, offset)?))
        }
        "resolve-value" => {
            arity(1..=1)?;
            Ok(Expr::ResolveValue(string_arg(items, 1, offset)?))
        }
        "resolve-proc" => {
            arity(1..=1)?;
            Ok(Expr::ResolveProcedure(string_arg(items, 1, offset)?))
        }
        "const" => {
            arity(1..=2)?;
            let Some(Sexp::Atom(num)) = items.get(1) else {
                return bad(offset, "const needs a number");
            };
            let magnitude: f64 = num
                .parse()
                .or_else(|_| bad(offset, format!("bad number {num:?}")))?;
            let unit = match items.get(2) {
                None => Unit::Unitless,
                Some(Sexp::Atom(tag)) => match Unit::from_tag(tag) {
                    Some(u) if u != Unit::Unitless => u,
                    _ => return bad(offset, format!("unknown unit {tag:?}")),
                },
                Some(_) => return bad(offset, "unit must be a symbol"),
            };
            TypedValue::new(magnitude, unit)
                .map(Expr::Const)
                .or_else(|e| bad(offset, e.to_string()))
        }
        "proc" => {
            arity(1..=usize::MAX)?;
            let procedure = string_arg(items, 1, offset)?;
            let mut args = BTreeMap::new();
            for item in &items[2..] {
                match item {
                    Sexp::List(pair, at) => match pair.as_slice() {
                        [Sexp::Atom(k) | Sexp::Str(k), Sexp::Str(v)] => {
                            if args.insert(k.clone(), v.clone()).is_some() {
                                return bad(*at, format!("duplicate argument {k}"));
                            }
                        }
                        _ => return bad(*at, "argument must be (name \"value\")"),
                    },
                    _ => return bad(offset, "argument must be (name \"value\")"),
                }
            }
            Ok(Expr::Call { procedure, args })
        }
        other => bad(offset, format!("unknown form {other:?}")),
    }
}

impl FromStr for Expr {
    type Err = ExprSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut reader = Reader { src: s, pos: 0 };
        let sexp = reader.read()?;
        reader.skip_ws();
        if reader.pos != s.len() {
            return reader.err("trailing input after expression");
        }
        convert(&sexp)
    }
}

/// Serde adapter storing an [`Expr`] as its canonical text.
pub mod as_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::Expr;

    pub fn serialize<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(e)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"(if (> (value "temperature") (const 85 F)) (proc "order_Starbucks" (item "Iced Cappuccino")) (proc "order_Starbucks" (item "Hot Latte")))"#;

    #[test]
    fn canonical_text_round_trips() {
        let e: Expr = CANONICAL.parse().unwrap();
        assert_eq!(e.to_string(), CANONICAL);
    }

    #[test]
    fn parsing_is_whitespace_insensitive() {
        let spaced = "( if\n (>  (value \"temperature\")(const 85 F) )\n(proc \"order_Starbucks\" ( item \"Iced Cappuccino\")) (proc \"order_Starbucks\" (item \"Hot Latte\")) )";
        assert_eq!(spaced.parse::<Expr>().unwrap().to_string(), CANONICAL);
    }

    #[test]
    fn strings_escape_quotes() {
        let e = Expr::ResolveBool("say \"hi\" \\ bye".into());
        let text = e.to_string();
        assert_eq!(text.parse::<Expr>().unwrap(), e);
    }

    #[test]
    fn units_and_unitless_constants() {
        for text in ["(const 2)", "(const 30 min)", "(const -5 USD)", "(const 420 tod)", "(const 30 C)"] {
            assert_eq!(text.parse::<Expr>().unwrap().to_string(), text);
        }
        assert!("(const 5 parsecs)".parse::<Expr>().is_err());
        assert!("(const -5 min)".parse::<Expr>().is_err());
    }

    #[test]
    fn malformed_input_is_rejected() {
        for text in ["", "(if", "(concept hot)", "(bogus \"x\")", "(value \"a\") extra", "(proc \"p\" (a \"1\") (a \"2\"))"] {
            assert!(text.parse::<Expr>().is_err(), "{text}");
        }
    }
}
