//! A small pure expression language for splitting and cleaning cell text.
//!
//! An expression is a pipeline of steps joined by `|`. Each step maps every
//! value of the current list to zero or more values:
//!
//! ```text
//! split("/") | trim() | replace("^\(new\)\s*", "") | lower()
//! regex_all("V\d+: [^\n]+")
//! ["constant", "values"]
//! ```
//!
//! | step               | effect                                          |
//! |--------------------|-------------------------------------------------|
//! | `split(sep)`       | split on a literal separator                    |
//! | `trim()`           | strip surrounding whitespace                    |
//! | `replace(pat,rep)` | regex replace-all (`$1` style references)       |
//! | `regex_all(pat)`   | all matches; group 1 when the pattern has one   |
//! | `lower()`          | lowercase                                       |
//! | `[s, ...]`         | replace the list by the literal list            |
//!
//! Strings use double or single quotes with `\" \' \\ \n \t \r` escapes.
//! Evaluation is metered: every processed value costs one unit plus its
//! length in bytes, and exceeding the budget aborts the evaluation.

use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const MAX_VALUES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid pattern `{pattern}`: {message}")]
    Pattern { pattern: String, message: String },
    #[error("evaluation exceeded its budget of {0} steps")]
    BudgetExceeded(u64),
    #[error("evaluation produced more than {MAX_VALUES} values")]
    TooManyValues,
}

#[derive(Debug, Clone)]
enum Step {
    Split(String),
    Trim,
    Replace(Regex, String),
    RegexAll(Regex),
    Lower,
    List(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct TransformExpr {
    source: String,
    steps: Vec<Step>,
}

impl PartialEq for TransformExpr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Eq for TransformExpr {}

impl fmt::Display for TransformExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for TransformExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for TransformExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        TransformExpr::parse(&src).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, TransformError> {
        Err(TransformError::Syntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TransformError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected `{c}`"))
        }
    }

    fn ident(&mut self) -> Result<&'a str, TransformError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !(c.is_ascii_alphanumeric() || c == '_') {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return self.error("expected a step name or list");
        }
        Ok(&self.src[start..self.pos])
    }

    fn string(&mut self) -> Result<String, TransformError> {
        self.skip_ws();
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return self.error("expected a quoted string"),
        };
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else {
                return self.error("unterminated string");
            };
            self.pos += c.len_utf8();
            match c {
                '\\' => {
                    let Some(e) = self.peek() else {
                        return self.error("unterminated escape");
                    };
                    self.pos += e.len_utf8();
                    match e {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        '\\' | '"' | '\'' => out.push(e),
                        // Unknown escapes are kept verbatim so regex escapes survive.
                        other => {
                            out.push('\\');
                            out.push(other);
                        }
                    }
                }
                c if c == quote => return Ok(out),
                c => out.push(c),
            }
        }
    }

    fn strings_until(&mut self, close: char) -> Result<Vec<String>, TransformError> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.string()?);
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn regex(&self, pattern: &str) -> Result<Regex, TransformError> {
        Regex::new(pattern).map_err(|e| TransformError::Pattern {
            pattern: pattern.to_string(),
            message: e.to_string(),
        })
    }

    fn step(&mut self) -> Result<Step, TransformError> {
        if self.eat('[') {
            return Ok(Step::List(self.strings_until(']')?));
        }
        let name = self.ident()?;
        self.expect('(')?;
        let args = self.strings_until(')')?;
        let arity = |n: usize, this: &Self| {
            if args.len() == n {
                Ok(())
            } else {
                this.error(format!("`{name}` takes {n} argument(s), got {}", args.len()))
            }
        };
        match name {
            "split" => {
                arity(1, self)?;
                if args[0].is_empty() {
                    return self.error("split separator must not be empty");
                }
                Ok(Step::Split(args[0].clone()))
            }
            "trim" => arity(0, self).map(|_| Step::Trim),
            "lower" => arity(0, self).map(|_| Step::Lower),
            "replace" => {
                arity(2, self)?;
                Ok(Step::Replace(self.regex(&args[0])?, args[1].clone()))
            }
            "regex_all" => {
                arity(1, self)?;
                Ok(Step::RegexAll(self.regex(&args[0])?))
            }
            other => self.error(format!("unknown step `{other}`")),
        }
    }
}

impl TransformExpr {
    /// Parses an expression; the empty expression is the identity.
    pub fn parse(source: &str) -> Result<Self, TransformError> {
        let mut p = Parser { src: source, pos: 0 };
        let mut steps = Vec::new();
        p.skip_ws();
        if p.peek().is_some() {
            loop {
                steps.push(p.step()?);
                if !p.eat('|') {
                    break;
                }
            }
            p.skip_ws();
            if p.peek().is_some() {
                return p.error("unexpected trailing input");
            }
        }
        Ok(TransformExpr {
            source: source.to_string(),
            steps,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, input: &str) -> Result<Vec<String>, TransformError> {
        self.eval_with_budget(input, DEFAULT_BUDGET)
    }

    pub fn eval_with_budget(&self, input: &str, budget: u64) -> Result<Vec<String>, TransformError> {
        let mut spent: u64 = 0;
        let mut values = vec![input.to_string()];
        for step in &self.steps {
            let mut next = Vec::new();
            for v in &values {
                spent += 1 + v.len() as u64;
                if spent > budget {
                    return Err(TransformError::BudgetExceeded(budget));
                }
                match step {
                    Step::Split(sep) => next.extend(v.split(sep.as_str()).map(str::to_string)),
                    Step::Trim => next.push(v.trim().to_string()),
                    Step::Lower => next.push(v.to_lowercase()),
                    Step::Replace(re, rep) => next.push(re.replace_all(v, rep.as_str()).into_owned()),
                    Step::RegexAll(re) => {
                        for caps in re.captures_iter(v) {
                            let m = caps.get(1).or_else(|| caps.get(0));
                            next.push(m.map(|m| m.as_str().to_string()).unwrap_or_default());
                        }
                    }
                    Step::List(items) => {
                        next = items.clone();
                        break;
                    }
                }
                if next.len() > MAX_VALUES {
                    return Err(TransformError::TooManyValues);
                }
            }
            values = next;
        }
        Ok(values)
    }
}
