//! Rule documents and their compilation into the XAT.
//!
//! Rules are applied strictly in document order. For every path a rule's
//! object expands to:
//!
//! * a grant inserts a row, or widens an existing row by union;
//! * a deny removes the denied values from an existing row, deleting the row
//!   when nothing is left (absolute conflict) and narrowing it otherwise
//!   (partial conflict). A deny with no row to act on changes nothing, since
//!   the default is already deny.
//!
//! Deny rules are never stored.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use log::debug;

use crate::error::{Error, Result};
use crate::path::{AbsolutePath, AllPaths, PathExpr};
use crate::predicate::{classify_conflict, ConflictKind, Predicate};
use crate::store::{Action, XatEntry, XatStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    /// `L`: the object node only.
    Local,
    /// `R`: the object node and all of its descendants.
    Recursive,
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            t if t.eq_ignore_ascii_case("L") => Ok(Scope::Local),
            t if t.eq_ignore_ascii_case("R") => Ok(Scope::Recursive),
            t => Err(format!("unknown type `{t}` (expected L or R)")),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Local => "L",
            Scope::Recursive => "R",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Grant,
    Deny,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            t if t.eq_ignore_ascii_case("grant") => Ok(Mode::Grant),
            t if t.eq_ignore_ascii_case("deny") => Ok(Mode::Deny),
            t => Err(format!("unknown mode `{t}` (expected Grant or Deny)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Grant => "Grant",
            Mode::Deny => "Deny",
        })
    }
}

/// One authorization rule. The condition travels inside `object`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthRule {
    pub subject: String,
    pub object: PathExpr,
    pub action: Action,
    pub scope: Scope,
    pub mode: Mode,
}

impl AuthRule {
    pub fn new(subject: impl Into<String>, object: PathExpr, scope: Scope, mode: Mode) -> AuthRule {
        AuthRule {
            subject: subject.into(),
            object,
            action: Action::Select,
            scope,
            mode,
        }
    }

    /// The rule's condition; unconditional rules get the universal predicate.
    pub fn predicate(&self) -> Predicate {
        self.object.predicate()
    }
}

impl fmt::Display for AuthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} ({})",
            self.mode, self.subject, self.action, self.object, self.scope
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleDocument {
    pub rules: Vec<AuthRule>,
}

impl RuleDocument {
    pub fn parse(xml: &str) -> Result<RuleDocument> {
        parse_rule_document(xml)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

const RULE_FIELDS: [&str; 5] = ["subject", "object", "action", "type", "mode"];

/// Escapes a raw `<` inside `<object>` text so that conditions written as
/// `//zip[.<60000]` parse as XML.
fn escape_object_text(xml: &str) -> std::borrow::Cow<'_, str> {
    const OPEN: &str = "<object>";
    const CLOSE: &str = "</object>";
    if !xml.contains(OPEN) {
        return xml.into();
    }
    let mut out = String::with_capacity(xml.len() + 16);
    let mut rest = xml;
    while let Some(start) = rest.find(OPEN) {
        let body_start = start + OPEN.len();
        let Some(len) = rest[body_start..].find(CLOSE) else {
            break;
        };
        let body = &rest[body_start..body_start + len];
        out.push_str(&rest[..body_start]);
        if body.contains("<!") {
            out.push_str(body);
        } else {
            out.push_str(&body.replace('<', "&lt;"));
        }
        out.push_str(CLOSE);
        rest = &rest[body_start + len + CLOSE.len()..];
    }
    out.push_str(rest);
    out.into()
}

/// Parses a `<rules>` document. Child elements of `<rule>` may come in any
/// order; errors name the 1-based rule index.
pub fn parse_rule_document(xml: &str) -> Result<RuleDocument> {
    let text = escape_object_text(xml);
    let doc = roxmltree::Document::parse(&text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "rules" {
        return Err(Error::Rule {
            index: 0,
            message: format!("expected root <rules>, found <{}>", root.tag_name().name()),
        });
    }
    let mut rules = Vec::new();
    for (n, node) in root.children().filter(roxmltree::Node::is_element).enumerate() {
        let index = n + 1;
        let fail = |message: String| Error::Rule { index, message };
        if node.tag_name().name() != "rule" {
            return Err(fail(format!("expected <rule>, found <{}>", node.tag_name().name())));
        }
        let mut fields: [Option<String>; 5] = Default::default();
        for child in node.children().filter(roxmltree::Node::is_element) {
            let name = child.tag_name().name();
            let slot = RULE_FIELDS
                .iter()
                .position(|f| *f == name)
                .ok_or_else(|| fail(format!("unexpected element <{name}>")))?;
            if fields[slot].is_some() {
                return Err(fail(format!("duplicate <{name}>")));
            }
            fields[slot] = Some(child.text().unwrap_or("").trim().to_string());
        }
        let mut take = |slot: usize| {
            fields[slot]
                .take()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| fail(format!("missing <{}>", RULE_FIELDS[slot])))
        };
        let subject = take(0)?;
        let object_text = take(1)?;
        let action_text = take(2)?;
        let type_text = take(3)?;
        let mode_text = take(4)?;

        let object = PathExpr::parse(&object_text)
            .map_err(|e| fail(format!("object `{object_text}`: {e}")))?;
        let action = action_text.parse::<Action>().map_err(|e| fail(e.to_string()))?;
        let scope = type_text.parse::<Scope>().map_err(fail)?;
        let mode = mode_text.parse::<Mode>().map_err(fail)?;
        rules.push(AuthRule {
            subject,
            object,
            action,
            scope,
            mode,
        });
    }
    Ok(RuleDocument { rules })
}

/// The set of paths a rule applies to.
pub fn expand_object(rule: &AuthRule, universe: &AllPaths) -> BTreeSet<AbsolutePath> {
    let matched = universe.match_paths(&rule.object);
    match rule.scope {
        Scope::Local => matched,
        Scope::Recursive => universe.recursive_closure(&matched),
    }
}

/// Row counts touched by one or more rules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChangeSummary {
    pub inserted: usize,
    pub updated: usize,
    pub deleted: usize,
    pub unchanged: usize,
}

impl ChangeSummary {
    pub fn is_noop(&self) -> bool {
        self.inserted == 0 && self.updated == 0 && self.deleted == 0
    }
}

impl AddAssign for ChangeSummary {
    fn add_assign(&mut self, rhs: ChangeSummary) {
        self.inserted += rhs.inserted;
        self.updated += rhs.updated;
        self.deleted += rhs.deleted;
        self.unchanged += rhs.unchanged;
    }
}

impl fmt::Display for ChangeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} inserted, {} updated, {} deleted",
            self.inserted, self.updated, self.deleted
        )
    }
}

/// Applies one rule to every path of its expanded object set.
pub fn apply_rule(rule: &AuthRule, universe: &AllPaths, xat: &mut XatStore) -> Result<ChangeSummary> {
    let objects = expand_object(rule, universe);
    if objects.is_empty() {
        debug!("rule `{rule}` matches no path; skipped");
    }
    apply_to_paths(rule, &objects, xat)
}

/// Applies `rule` to an already expanded object set.
pub fn apply_to_paths(
    rule: &AuthRule,
    objects: &BTreeSet<AbsolutePath>,
    xat: &mut XatStore,
) -> Result<ChangeSummary> {
    let condition = rule.predicate();
    let mut summary = ChangeSummary::default();
    for object in objects {
        let existing = xat.predicate(&rule.subject, object, rule.action).cloned();
        match (rule.mode, existing) {
            (Mode::Grant, None) => {
                if condition.is_empty() {
                    summary.unchanged += 1;
                    continue;
                }
                xat.upsert(XatEntry::new(&rule.subject, object.clone(), condition.clone(), rule.action))?;
                summary.inserted += 1;
            }
            (Mode::Grant, Some(current)) => {
                let merged = current.union(&condition);
                if merged == current {
                    summary.unchanged += 1;
                } else {
                    xat.upsert(XatEntry::new(&rule.subject, object.clone(), merged, rule.action))?;
                    summary.updated += 1;
                }
            }
            (Mode::Deny, None) => summary.unchanged += 1,
            (Mode::Deny, Some(current)) => match classify_conflict(&current, &condition) {
                ConflictKind::Absolute => {
                    xat.delete(&rule.subject, object, rule.action);
                    summary.deleted += 1;
                }
                ConflictKind::Partial(narrowed) => {
                    xat.upsert(XatEntry::new(&rule.subject, object.clone(), narrowed, rule.action))?;
                    summary.updated += 1;
                }
                ConflictKind::None => summary.unchanged += 1,
            },
        }
    }
    Ok(summary)
}

/// Applies one document's rules in order.
pub fn compile_document(doc: &RuleDocument, universe: &AllPaths, xat: &mut XatStore) -> Result<ChangeSummary> {
    let mut total = ChangeSummary::default();
    for rule in &doc.rules {
        total += apply_rule(rule, universe, xat)?;
    }
    Ok(total)
}

/// Applies every rule of every document in order.
pub fn compile(docs: &[RuleDocument], universe: &AllPaths, xat: &mut XatStore) -> Result<ChangeSummary> {
    let mut total = ChangeSummary::default();
    for doc in docs {
        total += compile_document(doc, universe, xat)?;
    }
    Ok(total)
}
