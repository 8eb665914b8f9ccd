//! Signal temporal logic over discretely sampled traces.
//!
//! Space robustness: predicates evaluate to signed margins, negation flips
//! the sign, conjunction and `G` take minima, disjunction and `F` take maxima.
//! Temporal windows are clipped at the end of the trace.

mod rules;
mod text;

pub use rules::{
    channel_row, pattern_rules, rule_bodies, OtherSample, RuleTrace, RulesConfig, CHANNELS, NO_TRAFFIC_SEP_M,
};
pub use text::{parse_formula, ParseError};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StlError {
    #[error("unknown predicate {0:?}")]
    UnknownPredicate(String),
    #[error("empty window [{a}, {b}] at index {t}")]
    EmptyWindow { a: f64, b: f64, t: usize },
    #[error("time index {t} outside trace of length {len}")]
    OutOfRange { t: usize, len: usize },
    #[error("invalid trace: {0}")]
    BadTrace(String),
    #[error("invalid interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

impl Cmp {
    pub fn as_str(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Le => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub cmp: Cmp,
    pub threshold: f64,
}

impl Predicate {
    /// Signed margin of a raw signal value.
    pub fn margin(&self, value: f64) -> f64 {
        match self.cmp {
            Cmp::Ge => value - self.threshold,
            Cmp::Le => self.threshold - value,
        }
    }

    pub fn holds(&self, value: f64) -> bool {
        match self.cmp {
            Cmp::Ge => value >= self.threshold,
            Cmp::Le => value <= self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Pred(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Globally(f64, f64, Box<Formula>),
    Eventually(f64, f64, Box<Formula>),
}

impl Formula {
    pub fn ge(name: &str, threshold: f64) -> Formula {
        Formula::Pred(Predicate { name: name.into(), cmp: Cmp::Ge, threshold })
    }

    pub fn le(name: &str, threshold: f64) -> Formula {
        Formula::Pred(Predicate { name: name.into(), cmp: Cmp::Le, threshold })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn globally(a: f64, b: f64, f: Formula) -> Formula {
        Formula::Globally(a, b, Box::new(f))
    }

    pub fn eventually(a: f64, b: f64, f: Formula) -> Formula {
        Formula::Eventually(a, b, Box::new(f))
    }

    /// Conjunction of a non-empty list, folded to the right.
    pub fn all(mut fs: Vec<Formula>) -> Option<Formula> {
        let mut acc = fs.pop()?;
        while let Some(f) = fs.pop() {
            acc = Formula::and(f, acc);
        }
        Some(acc)
    }

    /// Checks intervals and that every predicate is among `names`.
    pub fn validate(&self, names: &[&str]) -> Result<(), StlError> {
        match self {
            Formula::Pred(p) => {
                if names.contains(&p.name.as_str()) {
                    Ok(())
                } else {
                    Err(StlError::UnknownPredicate(p.name.clone()))
                }
            }
            Formula::Not(f) => f.validate(names),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.validate(names)?;
                b.validate(names)
            }
            Formula::Globally(a, b, f) | Formula::Eventually(a, b, f) => {
                if !(a.is_finite() && b.is_finite() && 0.0 <= *a && a <= b) {
                    return Err(StlError::BadInterval { a: *a, b: *b });
                }
                f.validate(names)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Pred(_) => 1,
            Formula::Not(f) | Formula::Globally(_, _, f) | Formula::Eventually(_, _, f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Pred(p) => write!(f, "({} {} {})", p.cmp.as_str(), p.name, p.threshold),
            Formula::Not(x) => write!(f, "(not {x})"),
            Formula::And(a, b) => write!(f, "(and {a} {b})"),
            Formula::Or(a, b) => write!(f, "(or {a} {b})"),
            Formula::Globally(a, b, x) => write!(f, "(G {a} {b} {x})"),
            Formula::Eventually(a, b, x) => write!(f, "(F {a} {b} {x})"),
        }
    }
}

/// Read access to sampled signals.
pub trait SignalSource {
    fn stride_s(&self) -> f64;
    fn len(&self) -> usize;
    fn value(&self, name: &str, t: usize) -> Option<f64>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub stride_s: f64,
    pub channels: BTreeMap<String, Vec<f64>>,
}

impl Trace {
    pub fn new(stride_s: f64) -> Self {
        Trace { stride_s, channels: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Self {
        self.channels.insert(name.to_string(), values);
        self
    }

    pub fn validate(&self) -> Result<(), StlError> {
        if !(self.stride_s > 0.0 && self.stride_s.is_finite()) {
            return Err(StlError::BadTrace(format!("stride {}", self.stride_s)));
        }
        let mut lens = self.channels.values().map(Vec::len);
        let Some(n) = lens.next() else { return Err(StlError::BadTrace("no channels".into())) };
        if n == 0 || lens.any(|m| m != n) {
            return Err(StlError::BadTrace("channels must share a non-zero length".into()));
        }
        Ok(())
    }
}

impl SignalSource for Trace {
    fn stride_s(&self) -> f64 {
        self.stride_s
    }

    fn len(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }

    fn value(&self, name: &str, t: usize) -> Option<f64> {
        self.channels.get(name).and_then(|v| v.get(t)).copied()
    }
}

/// Index range `[lo, hi]` of a temporal window at `t`, clipped to the trace.
fn window(a: f64, b: f64, t: usize, stride: f64, len: usize) -> Result<(usize, usize), StlError> {
    let eps = 1e-9;
    let lo = t + ((a / stride) - eps).ceil().max(0.0) as usize;
    let hi = (t + ((b / stride) + eps).floor() as usize).min(len.saturating_sub(1));
    if lo > hi {
        return Err(StlError::EmptyWindow { a, b, t });
    }
    Ok((lo, hi))
}

/// Quantitative robustness of `formula` at time index `t`.
pub fn robustness<S: SignalSource + ?Sized>(formula: &Formula, trace: &S, t: usize) -> Result<f64, StlError> {
    let len = trace.len();
    if t >= len {
        return Err(StlError::OutOfRange { t, len });
    }
    Ok(match formula {
        Formula::Pred(p) => {
            let v = trace.value(&p.name, t).ok_or_else(|| StlError::UnknownPredicate(p.name.clone()))?;
            p.margin(v)
        }
        Formula::Not(f) => -robustness(f, trace, t)?,
        Formula::And(a, b) => robustness(a, trace, t)?.min(robustness(b, trace, t)?),
        Formula::Or(a, b) => robustness(a, trace, t)?.max(robustness(b, trace, t)?),
        Formula::Globally(a, b, f) => {
            let (lo, hi) = window(*a, *b, t, trace.stride_s(), len)?;
            let mut m = f64::INFINITY;
            for i in lo..=hi {
                m = m.min(robustness(f, trace, i)?);
            }
            m
        }
        Formula::Eventually(a, b, f) => {
            let (lo, hi) = window(*a, *b, t, trace.stride_s(), len)?;
            let mut m = f64::NEG_INFINITY;
            for i in lo..=hi {
                m = m.max(robustness(f, trace, i)?);
            }
            m
        }
    })
}

/// Boolean satisfaction by direct quantification over windows.
pub fn brute_force_satisfaction<S: SignalSource + ?Sized>(
    formula: &Formula,
    trace: &S,
    t: usize,
) -> Result<bool, StlError> {
    let len = trace.len();
    if t >= len {
        return Err(StlError::OutOfRange { t, len });
    }
    Ok(match formula {
        Formula::Pred(p) => p.holds(trace.value(&p.name, t).ok_or_else(|| StlError::UnknownPredicate(p.name.clone()))?),
        Formula::Not(f) => !brute_force_satisfaction(f, trace, t)?,
        Formula::And(a, b) => brute_force_satisfaction(a, trace, t)? && brute_force_satisfaction(b, trace, t)?,
        Formula::Or(a, b) => brute_force_satisfaction(a, trace, t)? || brute_force_satisfaction(b, trace, t)?,
        Formula::Globally(a, b, f) | Formula::Eventually(a, b, f) => {
            let stride = trace.stride_s();
            // Times in the window, enumerated directly in seconds.
            let mut inside = Vec::new();
            for i in t..len {
                let dt = (i - t) as f64 * stride;
                if dt + 1e-9 >= *a && dt <= *b + 1e-9 {
                    inside.push(i);
                }
            }
            if inside.is_empty() {
                return Err(StlError::EmptyWindow { a: *a, b: *b, t });
            }
            let mut results = inside.into_iter().map(|i| brute_force_satisfaction(f, trace, i));
            if matches!(formula, Formula::Globally(..)) {
                results.try_fold(true, |acc, r| r.map(|v| acc && v))?
            } else {
                results.try_fold(false, |acc, r| r.map(|v| acc || v))?
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sep_trace() -> Trace {
        Trace::new(1.0).with("sep", vec![500.0, 400.0, 350.0]).with("alt", vec![100.0, 50.0, 5.0])
    }

    #[test]
    fn worked_examples() {
        let t = sep_trace();
        let g = Formula::globally(0.0, 2.0, Formula::ge("sep", 300.0));
        let f = Formula::eventually(0.0, 2.0, Formula::le("alt", 10.0));
        assert_eq!(robustness(&g, &t, 0).unwrap(), 50.0);
        assert_eq!(robustness(&f, &t, 0).unwrap(), 5.0);
        assert_eq!(robustness(&Formula::and(g.clone(), f.clone()), &t, 0).unwrap(), 5.0);
        assert!(brute_force_satisfaction(&g, &t, 0).unwrap());
        assert!(brute_force_satisfaction(&f, &t, 0).unwrap());
        let neg = Formula::not(g);
        assert_eq!(robustness(&neg, &t, 0).unwrap(), -50.0);
        assert!(!brute_force_satisfaction(&neg, &t, 0).unwrap());
    }

    #[test]
    fn errors_and_clipping() {
        let t = sep_trace();
        assert_eq!(
            robustness(&Formula::ge("nope", 0.0), &t, 0),
            Err(StlError::UnknownPredicate("nope".into()))
        );
        // Clipped: only index 2 remains.
        let g = Formula::globally(0.0, 10.0, Formula::ge("sep", 300.0));
        assert_eq!(robustness(&g, &t, 2).unwrap(), 50.0);
        let late = Formula::globally(5.0, 10.0, Formula::ge("sep", 300.0));
        assert!(matches!(robustness(&late, &t, 0), Err(StlError::EmptyWindow { .. })));
        assert!(matches!(robustness(&g, &t, 3), Err(StlError::OutOfRange { .. })));
        let gap = Trace::new(2.0).with("sep", vec![1.0, 2.0, 3.0]);
        let between = Formula::globally(0.5, 1.5, Formula::ge("sep", 0.0));
        assert!(robustness(&between, &gap, 0).is_err());
    }

    #[test]
    fn stride_scaling() {
        let t = Trace::new(5.0).with("x", vec![3.0, 1.0, 2.0, -4.0]);
        let g = Formula::globally(5.0, 10.0, Formula::ge("x", 0.0));
        assert_eq!(robustness(&g, &t, 0).unwrap(), 1.0);
        assert_eq!(robustness(&g, &t, 1).unwrap(), -4.0);
    }

    fn ge_leaf() -> impl Strategy<Value = Formula> {
        (prop_oneof![Just("a"), Just("b")], -3i32..=3).prop_map(|(n, th)| Formula::ge(n, th as f64))
    }

    fn positive_formula() -> impl Strategy<Value = Formula> {
        ge_leaf().prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (0u8..3, 0u8..3, inner.clone()).prop_map(|(a, w, f)| Formula::globally(a as f64, (a + w) as f64, f)),
                (0u8..3, 0u8..3, inner).prop_map(|(a, w, f)| Formula::eventually(a as f64, (a + w) as f64, f)),
            ]
        })
    }

    proptest! {
        #[test]
        fn negation_free_is_monotone(
            f in positive_formula(),
            a in proptest::collection::vec(-5.0f64..5.0, 8),
            b in proptest::collection::vec(-5.0f64..5.0, 8),
            bump in proptest::collection::vec(0.0f64..2.0, 8),
        ) {
            let lo = Trace::new(1.0).with("a", a.clone()).with("b", b.clone());
            let up: Vec<f64> = a.iter().zip(&bump).map(|(x, d)| x + d).collect();
            let hi = Trace::new(1.0).with("a", up).with("b", b);
            let (Ok(r0), Ok(r1)) = (robustness(&f, &lo, 0), robustness(&f, &hi, 0)) else { return Ok(()) };
            prop_assert!(r1 >= r0);
        }
    }
}
