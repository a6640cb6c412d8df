//! Rule conditions as finite unions of disjoint intervals over decimals.
//!
//! A [`Predicate`] is kept in canonical form at all times: intervals sorted by
//! lower bound, pairwise disjoint and never touching. Two predicates that
//! accept the same values therefore have identical interval lists, and
//! structural equality is extensional equality.
//!
//! The domain is treated as continuous, so the complement of `. < v` is
//! `. >= v` even when the stored data happens to be integral.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::decimal::Decimal;
use crate::error::{Error, Result};

/// One finite endpoint of an interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bound {
    pub value: Decimal,
    pub closed: bool,
}

impl Bound {
    pub fn closed(value: Decimal) -> Self {
        Bound {
            value,
            closed: true,
        }
    }

    pub fn open(value: Decimal) -> Self {
        Bound {
            value,
            closed: false,
        }
    }

    fn flipped(&self) -> Bound {
        Bound {
            value: self.value.clone(),
            closed: !self.closed,
        }
    }
}

/// `None` on either side stands for an infinite endpoint.
fn cmp_lower(a: Option<&Bound>, b: Option<&Bound>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        // A closed lower bound starts before an open one at the same value.
        (Some(a), Some(b)) => a.value.cmp(&b.value).then(b.closed.cmp(&a.closed)),
    }
}

fn cmp_upper(a: Option<&Bound>, b: Option<&Bound>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(a), Some(b)) => a.value.cmp(&b.value).then(a.closed.cmp(&b.closed)),
    }
}

/// A non-empty interval. Missing bounds are infinite.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lower: Option<Bound>,
    upper: Option<Bound>,
}

impl Interval {
    /// Returns `None` when the bounds describe an empty set.
    pub fn new(lower: Option<Bound>, upper: Option<Bound>) -> Option<Interval> {
        let non_empty = match (&lower, &upper) {
            (Some(l), Some(u)) => match l.value.cmp(&u.value) {
                Ordering::Less => true,
                Ordering::Equal => l.closed && u.closed,
                Ordering::Greater => false,
            },
            _ => true,
        };
        non_empty.then_some(Interval { lower, upper })
    }

    pub fn unbounded() -> Interval {
        Interval {
            lower: None,
            upper: None,
        }
    }

    pub fn lower(&self) -> Option<&Bound> {
        self.lower.as_ref()
    }

    pub fn upper(&self) -> Option<&Bound> {
        self.upper.as_ref()
    }

    pub fn contains(&self, v: &Decimal) -> bool {
        let above = match &self.lower {
            None => true,
            Some(b) => *v > b.value || (b.closed && *v == b.value),
        };
        let below = match &self.upper {
            None => true,
            Some(b) => *v < b.value || (b.closed && *v == b.value),
        };
        above && below
    }

    fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lower = match cmp_lower(self.lower(), other.lower()) {
            Ordering::Less => other.lower.clone(),
            _ => self.lower.clone(),
        };
        let upper = match cmp_upper(self.upper(), other.upper()) {
            Ordering::Greater => other.upper.clone(),
            _ => self.upper.clone(),
        };
        Interval::new(lower, upper)
    }

    /// Whether `next` (which starts no earlier than `self`) overlaps or touches `self`.
    fn joins(&self, next: &Interval) -> bool {
        match (&self.upper, &next.lower) {
            (None, _) | (_, None) => true,
            (Some(u), Some(l)) => match u.value.cmp(&l.value) {
                Ordering::Greater => true,
                Ordering::Equal => u.closed || l.closed,
                Ordering::Less => false,
            },
        }
    }

    fn render(&self) -> String {
        let op_lower = |b: &Bound| if b.closed { "<=" } else { "<" };
        match (&self.lower, &self.upper) {
            (None, None) => "-".to_string(),
            (None, Some(u)) => format!(".{} {}", op_lower(u), u.value),
            (Some(l), None) => format!(".{} {}", if l.closed { ">=" } else { ">" }, l.value),
            (Some(l), Some(u)) if l.value == u.value => format!(".= {}", l.value),
            (Some(l), Some(u)) => {
                format!("{} {} . {} {}", l.value, op_lower(l), op_lower(u), u.value)
            }
        }
    }
}

/// Comparison operators accepted in conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    /// The operator with its operands swapped: `v < .` is `. > v`.
    fn mirrored(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }
}

/// A condition on the context node value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    intervals: Vec<Interval>,
}

/// Outcome of checking a deny condition against an existing grant condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConflictKind {
    /// The conditions share no value; the grant stands as is.
    None,
    /// Every granted value is denied; the grant is removed.
    Absolute,
    /// Some granted values survive; the grant narrows to the carried predicate.
    Partial(Predicate),
}

impl Predicate {
    /// Accepts every value: the unconditional case.
    pub fn universal() -> Predicate {
        Predicate {
            intervals: vec![Interval::unbounded()],
        }
    }

    pub fn empty() -> Predicate {
        Predicate {
            intervals: Vec::new(),
        }
    }

    /// `. op value`
    pub fn compare(op: CmpOp, value: Decimal) -> Predicate {
        let one = |lower, upper| Predicate {
            intervals: Interval::new(lower, upper).into_iter().collect(),
        };
        match op {
            CmpOp::Lt => one(None, Some(Bound::open(value))),
            CmpOp::Le => one(None, Some(Bound::closed(value))),
            CmpOp::Gt => one(Some(Bound::open(value)), None),
            CmpOp::Ge => one(Some(Bound::closed(value)), None),
            CmpOp::Eq => one(
                Some(Bound::closed(value.clone())),
                Some(Bound::closed(value)),
            ),
            CmpOp::Ne => Predicate::from_intervals([
                Interval::new(None, Some(Bound::open(value.clone()))).expect("half-line"),
                Interval::new(Some(Bound::open(value)), None).expect("half-line"),
            ]),
        }
    }

    /// Builds the canonical predicate covering the union of `intervals`.
    pub fn from_intervals(intervals: impl IntoIterator<Item = Interval>) -> Predicate {
        let mut intervals: Vec<Interval> = intervals.into_iter().collect();
        intervals.sort_by(|a, b| cmp_lower(a.lower(), b.lower()));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for next in intervals {
            match merged.last_mut() {
                Some(last) if last.joins(&next) => {
                    if cmp_upper(next.upper(), last.upper()) == Ordering::Greater {
                        last.upper = next.upper;
                    }
                }
                _ => merged.push(next),
            }
        }
        Predicate { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_universal(&self) -> bool {
        matches!(self.intervals.as_slice(), [i] if i.lower.is_none() && i.upper.is_none())
    }

    pub fn satisfies(&self, v: &Decimal) -> bool {
        self.intervals.iter().any(|i| i.contains(v))
    }

    pub fn complement(&self) -> Predicate {
        let mut gaps = Vec::with_capacity(self.intervals.len() + 1);
        // Lower bound of the gap currently open; `Some(None)` is -inf.
        let mut start: Option<Option<Bound>> = Some(None);
        for i in &self.intervals {
            if let (Some(gap_lower), Some(l)) = (start.take(), &i.lower) {
                gaps.extend(Interval::new(gap_lower, Some(l.flipped())));
            }
            start = i.upper.as_ref().map(|u| Some(u.flipped()));
        }
        if let Some(gap_lower) = start {
            gaps.extend(Interval::new(gap_lower, None));
        }
        Predicate { intervals: gaps }
    }

    pub fn intersect(&self, other: &Predicate) -> Predicate {
        let pieces = self
            .intervals
            .iter()
            .flat_map(|a| other.intervals.iter().filter_map(move |b| a.intersect(b)));
        Predicate::from_intervals(pieces)
    }

    pub fn union(&self, other: &Predicate) -> Predicate {
        Predicate::from_intervals(self.intervals.iter().chain(&other.intervals).cloned())
    }

    /// Values accepted by `self` but not by `other`.
    pub fn difference(&self, other: &Predicate) -> Predicate {
        self.intersect(&other.complement())
    }

    pub fn is_subset(&self, other: &Predicate) -> bool {
        self.difference(other).is_empty()
    }

    /// Every finite endpoint value, in ascending order.
    pub fn bound_values(&self) -> Vec<Decimal> {
        self.intervals
            .iter()
            .flat_map(|i| i.lower.iter().chain(i.upper.iter()))
            .map(|b| b.value.clone())
            .collect()
    }

    /// Renders the predicate in table form (`-`, `.>= 2.0`, `2.0 <= . < 3.0`).
    pub fn render(&self) -> Result<String> {
        if self.is_empty() {
            return Err(Error::EmptyPredicate);
        }
        Ok(self
            .intervals
            .iter()
            .map(Interval::render)
            .collect::<Vec<_>>()
            .join(" or "))
    }

    /// Parses a condition, with or without the surrounding brackets.
    pub fn parse(text: &str) -> Result<Predicate> {
        parse_condition(text, 0)
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Predicate::parse(s)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.render() {
            Ok(s) => f.write_str(&s),
            Err(_) => f.write_str("(empty)"),
        }
    }
}

/// Classifies a deny condition against the grant condition it overlaps.
///
/// A grant left with nothing after removing the denied values is an absolute
/// conflict; this covers the subset case and any difference that would empty
/// the predicate.
pub fn classify_conflict(grant: &Predicate, deny: &Predicate) -> ConflictKind {
    let remaining = grant.difference(deny);
    if remaining.is_empty() {
        ConflictKind::Absolute
    } else if grant.intersect(deny).is_empty() {
        ConflictKind::None
    } else {
        ConflictKind::Partial(remaining)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Dot,
    Op(CmpOp),
    Num(Decimal),
    Or,
}

fn tokenize(text: &str, offset: usize) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let col = offset + i + 1;
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                out.push((col, Token::Dot));
                i += 1;
            }
            b'<' | b'>' | b'=' | b'!' => {
                let two = bytes.get(i + 1) == Some(&b'=');
                let op = match (c, two) {
                    (b'<', true) => CmpOp::Le,
                    (b'<', false) => CmpOp::Lt,
                    (b'>', true) => CmpOp::Ge,
                    (b'>', false) => CmpOp::Gt,
                    (b'=', false) => CmpOp::Eq,
                    (b'!', true) => CmpOp::Ne,
                    _ => return Err(Error::predicate(col, "unsupported operator")),
                };
                out.push((col, Token::Op(op)));
                i += if two { 2 } else { 1 };
            }
            b'-' | b'0'..=b'9' | b'.' => {
                let start = i;
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.') {
                    i += 1;
                }
                let lit = &text[start..i];
                let value = lit
                    .parse::<Decimal>()
                    .map_err(|_| Error::predicate(col, format!("`{lit}` is not a numeric literal")))?;
                out.push((col, Token::Num(value)));
            }
            b'\'' | b'"' => {
                return Err(Error::predicate(
                    col,
                    "only numeric literals are supported",
                ))
            }
            c if c.is_ascii_alphabetic() || c == b'_' || c == b'@' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'@' | b'-'))
                {
                    i += 1;
                }
                let word = &text[start..i];
                if word == "or" {
                    out.push((col, Token::Or));
                } else {
                    return Err(Error::predicate(
                        col,
                        format!("conditions must test the context node `.`, found `{word}`"),
                    ));
                }
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(Error::predicate(col, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(out)
}

/// Parses condition text. `offset` shifts reported columns when the text is
/// a slice of a larger expression.
pub(crate) fn parse_condition(text: &str, offset: usize) -> Result<Predicate> {
    let (inner, inner_offset) = strip_brackets(text, offset)?;
    let trimmed = inner.trim();
    if trimmed.is_empty() || trimmed == "-" {
        return Ok(Predicate::universal());
    }
    let tokens = tokenize(inner, inner_offset)?;
    let end_col = inner_offset + inner.len() + 1;
    let mut pos = 0;
    let mut result = Predicate::empty();
    loop {
        let (disjunct, next) = parse_disjunct(&tokens, pos, end_col)?;
        result = result.union(&disjunct);
        pos = next;
        match tokens.get(pos) {
            None => break,
            Some((_, Token::Or)) => pos += 1,
            Some((col, _)) => return Err(Error::predicate(*col, "expected `or` or end of condition")),
        }
    }
    Ok(result)
}

fn strip_brackets(text: &str, offset: usize) -> Result<(&str, usize)> {
    let lead = text.len() - text.trim_start().len();
    let t = text.trim();
    match (t.starts_with('['), t.ends_with(']')) {
        (true, true) if t.len() >= 2 => Ok((&t[1..t.len() - 1], offset + lead + 1)),
        (false, false) => Ok((text, offset)),
        (true, _) => Err(Error::predicate(offset + lead + 1, "unclosed `[`")),
        (false, true) => Err(Error::predicate(offset + lead + t.len(), "unmatched `]`")),
    }
}

fn parse_disjunct(tokens: &[(usize, Token)], pos: usize, end_col: usize) -> Result<(Predicate, usize)> {
    let at = |p: usize| tokens.get(p).map(|(c, _)| *c).unwrap_or(end_col);
    let op_at = |p: usize| match tokens.get(p) {
        Some((_, Token::Op(op))) => Ok(*op),
        _ => Err(Error::predicate(at(p), "expected a comparison operator")),
    };
    let num_at = |p: usize| match tokens.get(p) {
        Some((_, Token::Num(v))) => Ok(v.clone()),
        _ => Err(Error::predicate(at(p), "expected a numeric literal")),
    };
    match tokens.get(pos) {
        Some((_, Token::Dot)) => {
            let op = op_at(pos + 1)?;
            let v = num_at(pos + 2)?;
            Ok((Predicate::compare(op, v), pos + 3))
        }
        Some((_, Token::Num(lhs))) => {
            let left_op = op_at(pos + 1)?;
            match tokens.get(pos + 2) {
                Some((_, Token::Dot)) => {}
                _ => return Err(Error::predicate(at(pos + 2), "expected `.`")),
            }
            let left = Predicate::compare(left_op.mirrored(), lhs.clone());
            if let Some((_, Token::Op(right_op))) = tokens.get(pos + 3) {
                let v = num_at(pos + 4)?;
                Ok((left.intersect(&Predicate::compare(*right_op, v)), pos + 5))
            } else {
                Ok((left, pos + 3))
            }
        }
        _ => Err(Error::predicate(at(pos), "expected `.` or a numeric literal")),
    }
}
