//! Access decisions for queries against a compiled table.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::path::{AbsolutePath, AllPaths, PathExpr};
use crate::predicate::Predicate;
use crate::store::{Action, XatStore};

/// The outcome for one path matched by the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathVerdict {
    pub path: AbsolutePath,
    /// Predicate of the grant row consulted, if there is one.
    pub row: Option<Predicate>,
    /// Query condition intersected with the row; empty when denied.
    pub effective: Predicate,
}

impl PathVerdict {
    pub fn granted(&self) -> bool {
        !self.effective.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessDecision {
    pub query: PathExpr,
    pub subject: String,
    pub action: Action,
    /// One verdict per matched path, ordered by path.
    pub verdicts: Vec<PathVerdict>,
}

impl AccessDecision {
    /// Granted paths with the filter a rewritten query would attach.
    pub fn grants(&self) -> Vec<(&AbsolutePath, &Predicate)> {
        self.verdicts
            .iter()
            .filter(|v| v.granted())
            .map(|v| (&v.path, &v.effective))
            .collect()
    }

    pub fn denied_paths(&self) -> Vec<&AbsolutePath> {
        self.verdicts.iter().filter(|v| !v.granted()).map(|v| &v.path).collect()
    }

    pub fn any_granted(&self) -> bool {
        self.verdicts.iter().any(PathVerdict::granted)
    }

    pub fn is_unmatched(&self) -> bool {
        self.verdicts.is_empty()
    }

    /// Machine-readable form: one record per path.
    pub fn records(&self) -> Vec<DecisionRecord> {
        self.verdicts
            .iter()
            .map(|v| DecisionRecord {
                path: v.path.to_string(),
                verdict: if v.granted() { Verdict::Grant } else { Verdict::Deny },
                predicate: v.effective.render().unwrap_or_default(),
            })
            .collect()
    }

    /// Writes [`records`](Self::records) as CSV with header `Path,Verdict,Predicate`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["Path", "Verdict", "Predicate"])?;
        for r in self.records() {
            w.write_record([r.path.as_str(), r.verdict.as_str(), r.predicate.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Grant,
    Deny,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Grant => "GRANT",
            Verdict::Deny => "DENY",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRecord {
    pub path: String,
    pub verdict: Verdict,
    /// Rendered effective predicate; empty for denied paths.
    pub predicate: String,
}

/// Decides which paths matched by `query` the subject may read, and under
/// which effective condition. Paths without a grant row are denied.
pub fn decide(
    subject: &str,
    action: Action,
    query: &PathExpr,
    universe: &AllPaths,
    xat: &XatStore,
) -> AccessDecision {
    let wanted = query.predicate();
    let verdicts = universe
        .match_paths(query)
        .into_iter()
        .map(|path| {
            let row = xat.predicate(subject, &path, action).cloned();
            let effective = row
                .as_ref()
                .map_or_else(Predicate::empty, |r| wanted.intersect(r));
            PathVerdict { path, row, effective }
        })
        .collect();
    AccessDecision {
        query: query.clone(),
        subject: subject.to_string(),
        action,
        verdicts,
    }
}

/// Human-readable report of a decision.
pub fn explain(decision: &AccessDecision) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "subject {} {} {}",
        decision.subject, decision.action, decision.query
    );
    if decision.is_unmatched() {
        out.push_str("no paths matched\n");
        return out;
    }
    let (granted, denied): (Vec<_>, Vec<_>) = decision.verdicts.iter().partition(|v| v.granted());
    if !granted.is_empty() {
        let _ = writeln!(out, "granted ({}):", granted.len());
        for v in granted {
            let row = v.row.as_ref().map(ToString::to_string).unwrap_or_default();
            let _ = writeln!(out, "  GRANT {}  row {}  effective {}", v.path, row, v.effective);
        }
    }
    if !denied.is_empty() {
        let _ = writeln!(out, "denied ({}):", denied.len());
        for v in denied {
            match &v.row {
                None => {
                    let _ = writeln!(out, "  DENY  {}  no grant row", v.path);
                }
                Some(row) => {
                    let _ = writeln!(out, "  DENY  {}  row {}  effective empty", v.path, row);
                }
            }
        }
    }
    out
}
