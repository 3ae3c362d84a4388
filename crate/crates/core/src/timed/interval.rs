use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::rational::{format_rational, parse_rational, Rational};

/// A nonempty interval of nonnegative rationals; `hi = None` is `+∞`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Option<Rational>,
    lo_closed: bool,
    hi_closed: bool,
}

impl Interval {
    pub fn new(lo: Rational, lo_closed: bool, hi: Option<Rational>, hi_closed: bool) -> Result<Self, ModelError> {
        if lo.is_negative() {
            return Err(ModelError::invariant(format!("interval lower bound {} is negative", format_rational(&lo))));
        }
        let hi_closed = hi_closed && hi.is_some();
        let iv = Interval { lo, hi, lo_closed, hi_closed };
        if iv.is_empty() {
            return Err(ModelError::invariant(format!("interval {iv} is empty")));
        }
        Ok(iv)
    }

    /// `[0, ∞)`.
    pub fn unbounded() -> Self {
        Interval { lo: Rational::zero(), hi: None, lo_closed: true, hi_closed: false }
    }

    /// `(0, ∞)`, the admissible delays before any guard is applied.
    pub fn positive() -> Self {
        Interval { lo: Rational::zero(), hi: None, lo_closed: false, hi_closed: false }
    }

    pub fn point(t: Rational) -> Self {
        Interval { lo: t.clone(), hi: Some(t), lo_closed: true, hi_closed: true }
    }

    pub fn closed(lo: Rational, hi: Rational) -> Result<Self, ModelError> {
        Interval::new(lo, true, Some(hi), true)
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> Option<&Rational> {
        self.hi.as_ref()
    }

    pub fn lo_closed(&self) -> bool {
        self.lo_closed
    }

    pub fn hi_closed(&self) -> bool {
        self.hi_closed
    }

    fn is_empty(&self) -> bool {
        match &self.hi {
            None => false,
            Some(hi) => hi < &self.lo || (hi == &self.lo && !(self.lo_closed && self.hi_closed)),
        }
    }

    pub fn contains(&self, t: &Rational) -> bool {
        let above = if self.lo_closed { t >= &self.lo } else { t > &self.lo };
        let below = match &self.hi {
            None => true,
            Some(hi) if self.hi_closed => t <= hi,
            Some(hi) => t < hi,
        };
        above && below
    }

    pub fn as_point(&self) -> Option<&Rational> {
        (self.hi.as_ref() == Some(&self.lo)).then_some(&self.lo)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        let lo_ok = self.lo > other.lo || (self.lo == other.lo && (other.lo_closed || !self.lo_closed));
        let hi_ok = match (&self.hi, &other.hi) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a < b || (a == b && (other.hi_closed || !self.hi_closed)),
        };
        lo_ok && hi_ok
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        match &self.hi {
            None => write!(f, "{open}{},inf)", format_rational(&self.lo)),
            Some(hi) => {
                let close = if self.hi_closed { ']' } else { ')' };
                write!(f, "{open}{},{}{close}", format_rational(&self.lo), format_rational(hi))
            }
        }
    }
}

/// Lower and upper bounds accumulated while intersecting shifted intervals.
#[derive(Clone, Debug)]
pub(crate) struct Bounds {
    lo: Rational,
    lo_closed: bool,
    hi: Option<Rational>,
    hi_closed: bool,
}

impl Bounds {
    /// `(0, ∞)`.
    pub fn positive() -> Self {
        Bounds { lo: Rational::zero(), lo_closed: false, hi: None, hi_closed: false }
    }

    /// Intersect with `{t | v + t ∈ iv}`.
    pub fn restrict(&mut self, iv: &Interval, v: &Rational) {
        let lo = &iv.lo - v;
        if lo > self.lo {
            self.lo = lo;
            self.lo_closed = iv.lo_closed;
        } else if lo == self.lo {
            self.lo_closed &= iv.lo_closed;
        }
        if let Some(h) = &iv.hi {
            let hi = h - v;
            match &self.hi {
                Some(cur) if *cur < hi => {}
                Some(cur) if *cur == hi => self.hi_closed &= iv.hi_closed,
                _ => {
                    self.hi = Some(hi);
                    self.hi_closed = iv.hi_closed;
                }
            }
        }
    }

    pub fn finish(self) -> Option<Interval> {
        let iv = Interval { lo: self.lo, hi: self.hi, lo_closed: self.lo_closed, hi_closed: self.hi_closed };
        (!iv.is_empty()).then_some(iv)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalRepr {
    #[serde(with = "crate::rational::serde_text")]
    lo: Rational,
    #[serde(default = "inf")]
    hi: serde_json::Value,
    #[serde(default = "yes")]
    lo_closed: bool,
    #[serde(default = "yes")]
    hi_closed: bool,
}

fn inf() -> serde_json::Value {
    serde_json::Value::String("inf".into())
}

fn yes() -> bool {
    true
}

impl TryFrom<IntervalRepr> for Interval {
    type Error = ModelError;

    fn try_from(r: IntervalRepr) -> Result<Self, ModelError> {
        let hi = match &r.hi {
            serde_json::Value::String(s) if s == "inf" => None,
            serde_json::Value::Null => None,
            v => Some(crate::rational::serde_text::from_value(v).map_err(ModelError::Invariant)?),
        };
        Interval::new(r.lo, r.lo_closed, hi, r.hi_closed)
    }
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Accepts the text form `"[0,1)"` or an object with `lo`, `hi`, `lo_closed`, `hi_closed`.
impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Text(String),
            Object(IntervalRepr),
        }
        match Either::deserialize(d)? {
            Either::Text(t) => parse_interval(&t),
            Either::Object(r) => Interval::try_from(r),
        }
        .map_err(crate::error::invalid)
    }
}

/// Parses `"[1,2)"`, `"(0,inf)"` and the like.
pub fn parse_interval(text: &str) -> Result<Interval, ModelError> {
    let s = text.trim();
    let bad = || ModelError::invariant(format!("`{text}` is not an interval"));
    if s.len() < 2 {
        return Err(bad());
    }
    let lo_closed = match s.chars().next() {
        Some('[') => true,
        Some('(') | Some(']') => false,
        _ => return Err(bad()),
    };
    let hi_closed = match s.chars().last() {
        Some(']') => true,
        Some(')') | Some('[') => false,
        _ => return Err(bad()),
    };
    let (lo, hi) = s[1..s.len() - 1].split_once(',').ok_or_else(bad)?;
    let lo = parse_rational(lo).map_err(|_| bad())?;
    let hi = match hi.trim() {
        "inf" | "+inf" => None,
        h => Some(parse_rational(h).map_err(|_| bad())?),
    };
    Interval::new(lo, lo_closed, hi, hi_closed)
}
