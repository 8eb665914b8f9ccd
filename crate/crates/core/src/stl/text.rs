//! Prefix s-expression form: `(and (G 0 60 (>= sep 300)) (F 0 10 (<= alt 360)))`.

use thiserror::Error;

use super::Formula;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected token {token:?} at {pos}")]
    Unexpected { token: String, pos: usize },
    #[error("bad number {0:?}")]
    Number(String),
    #[error("trailing input at {0}")]
    Trailing(usize),
}

fn tokenize(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(b) = start.take() {
                out.push((b, &s[b..i]));
            }
            if !c.is_whitespace() {
                out.push((i, &s[i..i + 1]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(b) = start {
        out.push((b, &s[b..]));
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, &'a str)>,
    i: usize,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), ParseError> {
        let t = *self.toks.get(self.i).ok_or(ParseError::Eof)?;
        self.i += 1;
        Ok(t)
    }

    fn expect(&mut self, want: &str) -> Result<(), ParseError> {
        let (pos, t) = self.next()?;
        if t == want {
            Ok(())
        } else {
            Err(ParseError::Unexpected { token: t.into(), pos })
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let (_, t) = self.next()?;
        t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| ParseError::Number(t.into()))
    }

    fn peek_close(&self) -> bool {
        self.toks.get(self.i).is_some_and(|(_, t)| *t == ")")
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        self.expect("(")?;
        let (pos, head) = self.next()?;
        let f = match head {
            ">=" | "<=" => {
                let (npos, name) = self.next()?;
                if name == "(" || name == ")" {
                    return Err(ParseError::Unexpected { token: name.into(), pos: npos });
                }
                let th = self.number()?;
                if head == ">=" {
                    Formula::ge(name, th)
                } else {
                    Formula::le(name, th)
                }
            }
            "not" => Formula::not(self.formula()?),
            "and" | "or" => {
                let mut parts = vec![self.formula()?, self.formula()?];
                while !self.peek_close() {
                    parts.push(self.formula()?);
                }
                let mut acc = parts.pop().unwrap_or_else(|| unreachable!());
                while let Some(p) = parts.pop() {
                    acc = if head == "and" { Formula::and(p, acc) } else { Formula::or(p, acc) };
                }
                acc
            }
            "G" | "F" => {
                let a = self.number()?;
                let b = self.number()?;
                let body = self.formula()?;
                if head == "G" {
                    Formula::globally(a, b, body)
                } else {
                    Formula::eventually(a, b, body)
                }
            }
            other => return Err(ParseError::Unexpected { token: other.into(), pos }),
        };
        self.expect(")")?;
        Ok(f)
    }
}

/// Parses the prefix text form. `and`/`or` accept two or more operands,
/// folded to the right.
pub fn parse_formula(s: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: tokenize(s), i: 0 };
    let f = p.formula()?;
    if let Some((pos, _)) = p.toks.get(p.i) {
        return Err(ParseError::Trailing(*pos));
    }
    Ok(f)
}
