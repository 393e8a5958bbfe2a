//! Arithmetic expressions over named parameters.
//!
//! Grammar: `expr := term (('+'|'-') term)*`, `term := unary (('*'|'/') unary)*`,
//! `unary := '-' unary | '+' unary | atom`, `atom := number | name | '(' expr ')'`.
//! Names are the constants `pi`, `gm`, `sqrt2`, `sqrt3` or other parameters.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::GOLDEN_MEAN;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parameter `{key}`: {message} at position {position} in `{source_text}`")]
    Syntax {
        key: String,
        position: usize,
        message: String,
        source_text: String,
    },
    #[error("parameter `{key}`: unknown name `{name}` at position {position}")]
    UnknownName { key: String, name: String, position: usize },
    #[error("parameter `{key}`: circular reference through {cycle}")]
    Cycle { key: String, cycle: String },
    #[error("parameter `{key}` evaluates to {value}, not a finite number")]
    NotFinite { key: String, value: f64 },
}

pub fn constant(name: &str) -> Option<f64> {
    match name {
        "pi" => Some(std::f64::consts::PI),
        "gm" => Some(GOLDEN_MEAN),
        "sqrt2" => Some(std::f64::consts::SQRT_2),
        "sqrt3" => Some(3f64.sqrt()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Name(String),
    Op(char),
}

struct Parser<'a> {
    key: &'a str,
    text: &'a str,
    tokens: Vec<(Token, usize)>,
    pos: usize,
    resolve: &'a mut dyn FnMut(&str, usize) -> Result<f64, ExprError>,
}

fn tokenize(key: &str, text: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |position: usize, message: String| ExprError::Syntax {
        key: key.to_string(),
        position,
        message,
        source_text: text.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let literal = &text[start..i];
            let value = literal
                .parse::<f64>()
                .map_err(|_| syntax(start, format!("malformed number `{literal}`")))?;
            out.push((Token::Number(value), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Name(text[start..i].to_string()), start));
        } else if "+-*/()".contains(c) {
            out.push((Token::Op(c), i));
            i += 1;
        } else {
            return Err(syntax(i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

impl Parser<'_> {
    fn error(&self, position: usize, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            key: self.key.to_string(),
            position,
            message: message.into(),
            source_text: self.text.to_string(),
        }
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.text.len(), |t| t.1)
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Token::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<f64, ExprError> {
        let mut value = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            value = if op == '+' { value + rhs } else { value - rhs };
        }
        Ok(value)
    }

    fn term(&mut self) -> Result<f64, ExprError> {
        let mut value = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            value = if op == '*' { value * rhs } else { value / rhs };
        }
        Ok(value)
    }

    fn unary(&mut self) -> Result<f64, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<f64, ExprError> {
        let position = self.here();
        let Some((token, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error(position, "unexpected end of expression"));
        };
        self.pos += 1;
        match token {
            Token::Number(v) => Ok(v),
            Token::Name(name) => (self.resolve)(&name, position),
            Token::Op('(') => {
                let value = self.expr()?;
                if self.peek_op() != Some(')') {
                    return Err(self.error(self.here(), "expected `)`"));
                }
                self.pos += 1;
                Ok(value)
            }
            Token::Op(c) => Err(self.error(position, format!("unexpected `{c}`"))),
        }
    }
}

fn parse_with(
    key: &str,
    text: &str,
    resolve: &mut dyn FnMut(&str, usize) -> Result<f64, ExprError>,
) -> Result<f64, ExprError> {
    let tokens = tokenize(key, text)?;
    let mut parser = Parser {
        key,
        text,
        tokens,
        pos: 0,
        resolve,
    };
    let value = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        return Err(parser.error(parser.here(), "unexpected trailing input"));
    }
    if !value.is_finite() {
        return Err(ExprError::NotFinite {
            key: key.to_string(),
            value,
        });
    }
    Ok(value)
}

/// Evaluates a standalone expression that may use only the constants.
pub fn evaluate(key: &str, text: &str) -> Result<f64, ExprError> {
    parse_with(key, text, &mut |name, position| {
        constant(name).ok_or_else(|| ExprError::UnknownName {
            key: key.to_string(),
            name: name.to_string(),
            position,
        })
    })
}

/// Evaluates every expression, resolving references to other keys.
pub fn evaluate_all(exprs: &BTreeMap<String, String>) -> Result<BTreeMap<String, f64>, ExprError> {
    let mut done = BTreeMap::new();
    for key in exprs.keys() {
        resolve_key(key, exprs, &mut done, &mut Vec::new())?;
    }
    Ok(done)
}

fn resolve_key(
    key: &str,
    exprs: &BTreeMap<String, String>,
    done: &mut BTreeMap<String, f64>,
    stack: &mut Vec<String>,
) -> Result<f64, ExprError> {
    if let Some(&v) = done.get(key) {
        return Ok(v);
    }
    if stack.iter().any(|k| k == key) {
        let mut cycle = stack.clone();
        cycle.push(key.to_string());
        let first = cycle.iter().position(|k| k == key).unwrap_or(0);
        return Err(ExprError::Cycle {
            key: key.to_string(),
            cycle: cycle[first..].join(" -> "),
        });
    }
    stack.push(key.to_string());
    let text = &exprs[key];
    let mut resolve = |name: &str, position: usize| -> Result<f64, ExprError> {
        if exprs.contains_key(name) {
            resolve_key(name, exprs, done, stack)
        } else if let Some(v) = constant(name) {
            Ok(v)
        } else {
            Err(ExprError::UnknownName {
                key: key.to_string(),
                name: name.to_string(),
                position,
            })
        }
    };
    let value = parse_with(key, text, &mut resolve);
    stack.pop();
    let value = value?;
    done.insert(key.to_string(), value);
    Ok(value)
}

/// Names referenced by an expression, constants excluded.
pub fn references(key: &str, text: &str) -> Result<BTreeSet<String>, ExprError> {
    Ok(tokenize(key, text)?
        .into_iter()
        .filter_map(|(t, _)| match t {
            Token::Name(n) if constant(&n).is_none() => Some(n),
            _ => None,
        })
        .collect())
}
