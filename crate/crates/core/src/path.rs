//! Absolute paths, the XPath subset used by rules and queries, and the
//! global path table those expressions are expanded against.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::predicate::{self, Predicate};

/// One step of a path: an element name, or an attribute name as the final step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    name: String,
    attribute: bool,
}

impl Step {
    pub fn element(name: impl Into<String>) -> Step {
        Step {
            name: name.into(),
            attribute: false,
        }
    }

    pub fn attribute(name: impl Into<String>) -> Step {
        Step {
            name: name.into(),
            attribute: true,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_attribute(&self) -> bool {
        self.attribute
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.attribute {
            f.write_str("@")?;
        }
        f.write_str(&self.name)
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')
}

/// Parses one step token (`name` or `@name`). `col` is the 1-based column of
/// the token for error reporting.
fn parse_step(token: &str, col: usize) -> Result<Step> {
    let (attribute, name) = match token.strip_prefix('@') {
        Some(rest) => (true, rest),
        None => (false, token),
    };
    if name.is_empty() {
        return Err(Error::path(col, "empty step"));
    }
    if name.contains("::") {
        return Err(Error::path(col, format!("unsupported axis in `{token}`")));
    }
    if name == "*" || name.contains('*') {
        return Err(Error::path(col, "wildcards are not supported"));
    }
    if let Some(bad) = name.chars().find(|c| !is_name_char(*c)) {
        return Err(Error::path(col, format!("invalid character `{bad}` in step `{token}`")));
    }
    Ok(Step {
        name: name.to_string(),
        attribute,
    })
}

/// A fully resolved root-to-node path such as `/department/gradstudent/gpa`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbsolutePath {
    steps: Vec<Step>,
}

impl AbsolutePath {
    /// Fails if `steps` is empty or an attribute step is not last.
    pub fn new(steps: Vec<Step>) -> Result<AbsolutePath> {
        if steps.is_empty() {
            return Err(Error::path(1, "a path needs at least one step"));
        }
        if let Some(i) = steps[..steps.len() - 1].iter().position(Step::is_attribute) {
            return Err(Error::path(
                i + 1,
                "an attribute step may only appear last",
            ));
        }
        Ok(AbsolutePath { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn child(&self, step: Step) -> Result<AbsolutePath> {
        let mut steps = self.steps.clone();
        steps.push(step);
        AbsolutePath::new(steps)
    }

    /// Every proper prefix, shortest first.
    pub fn ancestors(&self) -> impl Iterator<Item = AbsolutePath> + '_ {
        (1..self.steps.len()).map(move |n| AbsolutePath {
            steps: self.steps[..n].to_vec(),
        })
    }

    pub fn is_proper_prefix_of(&self, other: &AbsolutePath) -> bool {
        self.steps.len() < other.steps.len() && other.steps.starts_with(&self.steps)
    }
}

impl FromStr for AbsolutePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix('/') else {
            return Err(Error::path(1, "an absolute path starts with `/`"));
        };
        let mut steps = Vec::new();
        let mut col = 2;
        for token in rest.split('/') {
            steps.push(parse_step(token, col)?);
            col += token.len() + 1;
        }
        AbsolutePath::new(steps)
    }
}

impl fmt::Display for AbsolutePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            write!(f, "/{step}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// `/`: exactly one step down.
    Child,
    /// `//`: one or more steps down.
    Descendant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    pub axis: Axis,
    pub step: Step,
}

/// A path expression in the supported XPath subset: child and descendant
/// axes, an optional attribute final step, and an optional condition on the
/// context node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathExpr {
    segments: Vec<Segment>,
    condition: Option<Predicate>,
}

impl PathExpr {
    pub fn new(segments: Vec<Segment>, condition: Option<Predicate>) -> Result<PathExpr> {
        if segments.is_empty() {
            return Err(Error::path(1, "an expression needs at least one step"));
        }
        if segments[..segments.len() - 1].iter().any(|s| s.step.attribute) {
            return Err(Error::path(1, "an attribute step may only appear last"));
        }
        Ok(PathExpr {
            segments,
            condition,
        })
    }

    pub fn parse(text: &str) -> Result<PathExpr> {
        parse_path_expr(text)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn condition(&self) -> Option<&Predicate> {
        self.condition.as_ref()
    }

    /// The condition, or the universal predicate when there is none.
    pub fn predicate(&self) -> Predicate {
        self.condition.clone().unwrap_or_else(Predicate::universal)
    }

    pub fn with_condition(mut self, condition: Option<Predicate>) -> PathExpr {
        self.condition = condition;
        self
    }

    pub fn has_descendant_axis(&self) -> bool {
        self.segments.iter().any(|s| s.axis == Axis::Descendant)
    }

    /// Whole-step structural match of `path` against this expression.
    pub fn matches(&self, path: &AbsolutePath) -> bool {
        match_from(&self.segments, &path.steps)
    }
}

fn match_from(segments: &[Segment], steps: &[Step]) -> bool {
    let Some((first, rest)) = segments.split_first() else {
        return steps.is_empty();
    };
    match first.axis {
        Axis::Child => steps.first() == Some(&first.step) && match_from(rest, &steps[1..]),
        Axis::Descendant => steps
            .iter()
            .enumerate()
            .any(|(k, s)| *s == first.step && match_from(rest, &steps[k + 1..])),
    }
}

impl FromStr for PathExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_path_expr(s)
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            let sep = match seg.axis {
                Axis::Child => "/",
                Axis::Descendant => "//",
            };
            write!(f, "{sep}{}", seg.step)?;
        }
        if let Some(cond) = &self.condition {
            if !cond.is_universal() {
                write!(f, "[{cond}]")?;
            }
        }
        Ok(())
    }
}

/// Parses `//a/b[. < 5]`, `/a/@id` and similar.
pub fn parse_path_expr(text: &str) -> Result<PathExpr> {
    let trimmed = text.trim_end();
    let lead = trimmed.len() - trimmed.trim_start().len();
    let body = trimmed.trim_start();
    if body.is_empty() {
        return Err(Error::path(1, "empty expression"));
    }
    let (path_part, condition) = match body.find('[') {
        Some(i) => {
            if !body.ends_with(']') {
                return Err(Error::path(lead + body.len(), "malformed brackets: expected trailing `]`"));
            }
            let cond_text = &body[i..];
            if cond_text[1..cond_text.len() - 1].contains(['[', ']']) {
                return Err(Error::path(lead + i + 1, "nested or repeated predicates are not supported"));
            }
            (&body[..i], Some(predicate::parse_condition(cond_text, lead + i)?))
        }
        None if body.contains(']') => {
            return Err(Error::path(lead + body.find(']').unwrap_or(0) + 1, "unmatched `]`"))
        }
        None => (body, None),
    };

    let bytes = path_part.as_bytes();
    let mut segments = Vec::new();
    let mut i = 0;
    if bytes.first() != Some(&b'/') {
        return Err(Error::path(lead + 1, "expressions start with `/` or `//`"));
    }
    while i < bytes.len() {
        let axis = if path_part[i..].starts_with("//") {
            i += 2;
            Axis::Descendant
        } else if bytes[i] == b'/' {
            i += 1;
            Axis::Child
        } else {
            return Err(Error::path(lead + i + 1, "expected `/`"));
        };
        let end = path_part[i..].find('/').map_or(path_part.len(), |n| i + n);
        let step = parse_step(&path_part[i..end], lead + i + 1)?;
        segments.push(Segment { axis, step });
        i = end;
    }
    PathExpr::new(segments, condition)
}

/// The set of every absolute path present in the protected document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AllPaths {
    paths: BTreeSet<AbsolutePath>,
}

impl AllPaths {
    pub fn new() -> AllPaths {
        AllPaths::default()
    }

    /// Inserts `path` together with all of its prefixes.
    pub fn insert(&mut self, path: AbsolutePath) {
        for ancestor in path.ancestors() {
            self.paths.insert(ancestor);
        }
        self.paths.insert(path);
    }

    pub fn contains(&self, path: &AbsolutePath) -> bool {
        self.paths.contains(path)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AbsolutePath> {
        self.paths.iter()
    }

    /// Every element and attribute path of an XML document.
    pub fn from_document(xml: &str) -> Result<AllPaths> {
        let doc = roxmltree::Document::parse(xml)?;
        let mut all = AllPaths::new();
        let root = doc.root_element();
        let mut stack = vec![(root, AbsolutePath::new(vec![Step::element(root.tag_name().name())])?)];
        while let Some((node, path)) = stack.pop() {
            for attr in node.attributes() {
                all.paths.insert(path.child(Step::attribute(attr.name()))?);
            }
            for child in node.children().filter(roxmltree::Node::is_element) {
                stack.push((child, path.child(Step::element(child.tag_name().name()))?));
            }
            all.paths.insert(path);
        }
        Ok(all)
    }

    /// Reads a newline-delimited path list; blank lines and `#` comments are
    /// skipped and the prefix closure is added.
    pub fn from_list(text: &str) -> Result<AllPaths> {
        let mut all = AllPaths::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let path = line
                .parse::<AbsolutePath>()
                .map_err(|e| Error::line(n + 1, e.to_string()))?;
            all.insert(path);
        }
        Ok(all)
    }

    /// Canonical path list, one per line.
    pub fn to_list(&self) -> String {
        self.paths.iter().map(|p| format!("{p}\n")).collect()
    }

    /// Every path in the table matched by `expr`. The condition is ignored.
    pub fn match_paths(&self, expr: &PathExpr) -> BTreeSet<AbsolutePath> {
        self.paths.iter().filter(|p| expr.matches(p)).cloned().collect()
    }

    /// `paths` plus every table member that has one of them as a proper prefix.
    pub fn recursive_closure(&self, paths: &BTreeSet<AbsolutePath>) -> BTreeSet<AbsolutePath> {
        let mut out = paths.clone();
        out.extend(
            self.paths
                .iter()
                .filter(|p| p.ancestors().any(|a| paths.contains(&a)))
                .cloned(),
        );
        out
    }
}

impl FromIterator<AbsolutePath> for AllPaths {
    fn from_iter<I: IntoIterator<Item = AbsolutePath>>(iter: I) -> Self {
        let mut all = AllPaths::new();
        for p in iter {
            all.insert(p);
        }
        all
    }
}
