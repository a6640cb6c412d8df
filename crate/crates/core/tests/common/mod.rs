//! Test-only oracles, independent of the library's matching and algebra.
//!
//! * Rule conditions are generated as small specs evaluated directly on
//!   integer arithmetic (values are held doubled so `x.5` midpoints stay exact).
//! * Object expressions are matched with a regex translation, not the
//!   library's step matcher.
//! * The department path list is checked against an enumeration of the DTD.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::Rng;
use regex::Regex;

use xat_core::{decide, Action, AllPaths, Decimal, PathExpr, Predicate, RuleDocument, XatStore};

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Root-to-node paths of a DTD with every optional child present.
pub fn enumerate_dtd(dtd: &str, root: &str) -> Vec<String> {
    let decl = Regex::new(r"<!ELEMENT\s+(\S+)\s+\((.*)\)\s*>").unwrap();
    let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for cap in decl.captures_iter(dtd) {
        let names = cap[2]
            .split([',', '|'])
            .map(|s| s.trim().trim_end_matches(['?', '*', '+']).to_string())
            .filter(|s| !s.is_empty() && s != "#PCDATA")
            .collect();
        children.insert(cap[1].to_string(), names);
    }
    fn walk(node: &str, prefix: &str, children: &BTreeMap<String, Vec<String>>, out: &mut Vec<String>) {
        let here = format!("{prefix}/{node}");
        out.push(here.clone());
        for c in children.get(node).into_iter().flatten() {
            walk(c, &here, children, out);
        }
    }
    let mut out = Vec::new();
    walk(root, "", &children, &mut out);
    out
}

/// A value in half-units: `v2 = 5` is 2.5.
pub fn half_to_decimal(v2: i64) -> Decimal {
    let sign = if v2 < 0 { "-" } else { "" };
    let abs = v2.unsigned_abs();
    let text = if abs.is_multiple_of(2) {
        format!("{sign}{}", abs / 2)
    } else {
        format!("{sign}{}.5", abs / 2)
    };
    text.parse().unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Lt, Op::Le, Op::Gt, Op::Ge, Op::Eq, Op::Ne];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Eq => "=",
            Op::Ne => "!=",
        }
    }

    fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Op::Lt => lhs < rhs,
            Op::Le => lhs <= rhs,
            Op::Gt => lhs > rhs,
            Op::Ge => lhs >= rhs,
            Op::Eq => lhs == rhs,
            Op::Ne => lhs != rhs,
        }
    }
}

/// A rule condition as written in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Always,
    Cmp(Op, i64),
    /// `lo (< | <=) . (< | <=) hi`
    Range { lo: i64, lo_closed: bool, hi: i64, hi_closed: bool },
}

impl Cond {
    pub fn text(&self) -> Option<String> {
        match self {
            Cond::Always => None,
            Cond::Cmp(op, n) => Some(format!(".{}{n}", op.symbol())),
            Cond::Range { lo, lo_closed, hi, hi_closed } => Some(format!(
                "{lo} {} . {} {hi}",
                if *lo_closed { "<=" } else { "<" },
                if *hi_closed { "<=" } else { "<" }
            )),
        }
    }

    pub fn holds(&self, v2: i64) -> bool {
        match self {
            Cond::Always => true,
            Cond::Cmp(op, n) => op.holds(v2, 2 * n),
            Cond::Range { lo, lo_closed, hi, hi_closed } => {
                let above = if *lo_closed { v2 >= 2 * lo } else { v2 > 2 * lo };
                let below = if *hi_closed { v2 <= 2 * hi } else { v2 < 2 * hi };
                above && below
            }
        }
    }

    pub fn bounds(&self) -> Vec<i64> {
        match self {
            Cond::Always => vec![],
            Cond::Cmp(_, n) => vec![*n],
            Cond::Range { lo, hi, .. } => vec![*lo, *hi],
        }
    }

    pub fn random(rng: &mut StdRng) -> Cond {
        match rng.gen_range(0..10) {
            0..=2 => Cond::Always,
            3..=7 => Cond::Cmp(Op::ALL[rng.gen_range(0..6)], rng.gen_range(-5..=5)),
            _ => {
                let lo = rng.gen_range(-5..=5);
                let hi = rng.gen_range(lo..=6);
                Cond::Range { lo, lo_closed: rng.gen(), hi, hi_closed: rng.gen() }
            }
        }
    }
}

/// Half-unit sample points: every bound, bound ± 1, and midpoints between
/// consecutive bounds.
pub fn sample_points(bounds: impl IntoIterator<Item = i64>) -> Vec<i64> {
    let sorted: BTreeSet<i64> = bounds.into_iter().map(|b| 2 * b).collect();
    let mut out: BTreeSet<i64> = BTreeSet::new();
    out.insert(0);
    for &b in &sorted {
        out.extend([b - 2, b, b + 2]);
    }
    let v: Vec<i64> = sorted.into_iter().collect();
    for w in v.windows(2) {
        out.insert((w[0] + w[1]) / 2);
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct RuleSpec {
    pub subject: String,
    /// Object expression without the condition.
    pub object: String,
    pub recursive: bool,
    pub grant: bool,
    pub cond: Cond,
}

impl RuleSpec {
    pub fn object_text(&self) -> String {
        match self.cond.text() {
            Some(c) => format!("{}[{c}]", self.object),
            None => self.object.clone(),
        }
    }
}

/// Renders rules as a rule document, escaping `<` as an author would.
pub fn rules_xml(rules: &[RuleSpec]) -> String {
    let mut xml = String::from("<?xml version=\"1.0\"?>\n<rules>\n");
    for r in rules {
        xml.push_str(&format!(
            "  <rule><subject>{}</subject><object>{}</object><action>Select</action><type>{}</type><mode>{}</mode></rule>\n",
            r.subject,
            r.object_text().replace('<', "&lt;"),
            if r.recursive { "R" } else { "L" },
            if r.grant { "Grant" } else { "Deny" },
        ));
    }
    xml.push_str("</rules>\n");
    xml
}

fn expr_regex(object: &str) -> Regex {
    let mut pattern = String::from("^");
    let mut rest = object;
    while !rest.is_empty() {
        let descendant = rest.starts_with("//");
        rest = if descendant { &rest[2..] } else { &rest[1..] };
        let end = rest.find('/').unwrap_or(rest.len());
        if descendant {
            pattern.push_str("(?:/[^/]+)*");
        }
        pattern.push('/');
        pattern.push_str(&regex::escape(&rest[..end]));
        rest = &rest[end..];
    }
    pattern.push('$');
    Regex::new(&pattern).unwrap()
}

/// Whether `rule` applies to `path`, by regex over canonical path text.
pub fn covers(rule: &RuleSpec, path: &str) -> bool {
    covers_with(&expr_regex(&rule.object), rule.recursive, path)
}

fn covers_with(re: &Regex, recursive: bool, path: &str) -> bool {
    re.is_match(path)
        || (recursive
            && path
                .match_indices('/')
                .skip(1)
                .any(|(i, _)| re.is_match(&path[..i])))
}

/// For each rule, the set of paths it applies to.
pub fn coverage(rules: &[RuleSpec], paths: &[String]) -> Vec<BTreeSet<String>> {
    rules
        .iter()
        .map(|r| {
            let re = expr_regex(&r.object);
            paths.iter().filter(|p| covers_with(&re, r.recursive, p)).cloned().collect()
        })
        .collect()
}

/// Decision of the last applicable rule, default deny.
pub fn oracle_decision(
    rules: &[RuleSpec],
    coverage: &[BTreeSet<String>],
    subject: &str,
    path: &str,
    v2: i64,
) -> bool {
    rules
        .iter()
        .zip(coverage)
        .rev()
        .find(|(r, cov)| r.subject == subject && cov.contains(path) && r.cond.holds(v2))
        .is_some_and(|(r, _)| r.grant)
}

pub const SUBJECTS: [&str; 2] = ["s1", "s2"];
const NAMES: [&str; 3] = ["a", "b", "c"];

#[derive(Debug, Clone)]
pub struct Scenario {
    pub paths: Vec<String>,
    pub rules: Vec<RuleSpec>,
}

impl Scenario {
    /// Up to `max_paths` paths under `/r` and up to `max_rules` rules.
    pub fn random(rng: &mut StdRng, max_paths: usize, max_rules: usize) -> Scenario {
        let mut paths = vec!["/r".to_string()];
        let target = rng.gen_range(1..=max_paths);
        while paths.len() < target {
            let parent = paths[rng.gen_range(0..paths.len())].clone();
            let child = format!("{parent}/{}", NAMES[rng.gen_range(0..NAMES.len())]);
            if !paths.contains(&child) {
                paths.push(child);
            } else if rng.gen_bool(0.2) {
                break;
            }
        }
        let rule_count = rng.gen_range(0..=max_rules);
        let rules = (0..rule_count)
            .map(|_| {
                let segs = rng.gen_range(1..=3);
                let mut object = String::new();
                for k in 0..segs {
                    let descendant = rng.gen_bool(0.5);
                    object.push_str(if descendant { "//" } else { "/" });
                    if k == 0 && !descendant && rng.gen_bool(0.7) {
                        object.push('r');
                    } else {
                        object.push_str(["r", "a", "b", "c"][rng.gen_range(0..4)]);
                    }
                }
                RuleSpec {
                    subject: SUBJECTS[rng.gen_range(0..2)].to_string(),
                    object,
                    recursive: rng.gen_bool(0.4),
                    grant: rng.gen_bool(0.55),
                    cond: Cond::random(rng),
                }
            })
            .collect();
        Scenario { paths, rules }
    }

    pub fn universe(&self) -> AllPaths {
        AllPaths::from_list(&self.paths.join("\n")).unwrap()
    }

    pub fn samples(&self) -> Vec<i64> {
        sample_points(self.rules.iter().flat_map(|r| r.cond.bounds()))
    }
}

/// Compiles the scenario and compares the table, and the query gate, with
/// the oracle at every (subject, path, sample). Returns the mismatches.
pub fn check_scenario(sc: &Scenario) -> Vec<String> {
    let universe = sc.universe();
    let doc = RuleDocument::parse(&rules_xml(&sc.rules)).expect("generated rule document parses");
    let mut xat = XatStore::new();
    xat_core::compile(&[doc], &universe, &mut xat).unwrap();

    let mut mismatches = Vec::new();
    for row in xat.entries() {
        if row.predicate.is_empty() {
            mismatches.push(format!("empty row {row:?}"));
        }
    }
    let samples = sc.samples();
    let cov = coverage(&sc.rules, &sc.paths);
    for subject in SUBJECTS {
        for path in universe.iter() {
            let text = path.to_string();
            let row = xat.predicate(subject, path, Action::Select);
            for &v2 in &samples {
                let v = half_to_decimal(v2);
                let expected = oracle_decision(&sc.rules, &cov, subject, &text, v2);
                let from_table = row.is_some_and(|p| p.satisfies(&v));
                let query = PathExpr::parse(&format!("{text}[. = {v}]")).unwrap();
                let from_gate = decide(subject, Action::Select, &query, &universe, &xat).any_granted();
                if from_table != expected || from_gate != expected {
                    mismatches.push(format!(
                        "{subject} {text} v={v}: oracle {expected}, table {from_table}, gate {from_gate}"
                    ));
                }
            }
        }
    }
    mismatches
}

/// An interval spec in half-units; `None` is infinite.
#[derive(Debug, Clone, Copy)]
pub struct IntervalSpec {
    pub lo: Option<(i64, bool)>,
    pub hi: Option<(i64, bool)>,
}

impl IntervalSpec {
    pub fn contains(&self, v2: i64) -> bool {
        let above = self.lo.is_none_or(|(b, c)| if c { v2 >= 2 * b } else { v2 > 2 * b });
        let below = self.hi.is_none_or(|(b, c)| if c { v2 <= 2 * b } else { v2 < 2 * b });
        above && below
    }

    /// Condition text, or `None` if the spec is empty.
    pub fn text(&self) -> Option<String> {
        let op = |closed: bool| if closed { "<=" } else { "<" };
        match (self.lo, self.hi) {
            (None, None) => Some("-".into()),
            (None, Some((b, c))) => Some(format!(". {} {b}", op(c))),
            (Some((b, c)), None) => Some(format!(". {} {b}", if c { ">=" } else { ">" })),
            (Some((l, lc)), Some((h, hc))) => {
                if l < h || (l == h && lc && hc) {
                    Some(format!("{l} {} . {} {h}", op(lc), op(hc)))
                } else {
                    None
                }
            }
        }
    }
}

/// A union of interval specs; evaluated directly, built through the parser.
#[derive(Debug, Clone)]
pub struct PredSpec(pub Vec<IntervalSpec>);

impl PredSpec {
    pub fn contains(&self, v2: i64) -> bool {
        self.0.iter().any(|i| i.contains(v2))
    }

    pub fn bounds(&self) -> Vec<i64> {
        self.0
            .iter()
            .flat_map(|i| i.lo.iter().chain(i.hi.iter()).map(|(b, _)| *b))
            .collect()
    }

    pub fn build(&self) -> Predicate {
        let parts: Vec<String> = self.0.iter().filter_map(IntervalSpec::text).collect();
        if parts.iter().any(|p| p == "-") {
            return Predicate::universal();
        }
        if parts.is_empty() {
            return Predicate::empty();
        }
        Predicate::parse(&parts.join(" or ")).unwrap()
    }

    pub fn random(rng: &mut StdRng) -> PredSpec {
        let n = rng.gen_range(0..=3);
        let bound = |rng: &mut StdRng| {
            if rng.gen_bool(0.15) {
                None
            } else {
                Some((rng.gen_range(-6..=6), rng.gen()))
            }
        };
        PredSpec(
            (0..n)
                .map(|_| IntervalSpec { lo: bound(rng), hi: bound(rng) })
                .collect(),
        )
    }
}

/// True if the interval list is sorted, disjoint and non-touching.
pub fn is_canonical(p: &Predicate) -> bool {
    p.intervals().windows(2).all(|w| {
        match (w[0].upper(), w[1].lower()) {
            (Some(u), Some(l)) => u.value < l.value || (u.value == l.value && !u.closed && !l.closed),
            _ => false,
        }
    })
}
