//! Compiles XML authorization rules into a grant-only XML Authorization
//! Table (XAT) and answers access decisions against it.
//!
//! The pipeline:
//!
//! 1. build an [`AllPaths`] table from an instance document or a path list;
//! 2. parse rule documents into [`RuleDocument`]s;
//! 3. [`compile`] them, in order, into an [`XatStore`], resolving grant/deny
//!    conflicts through [`Predicate`] interval algebra;
//! 4. [`decide`] queries against the store.
//!
//! ```
//! use xat_core::{compile, decide, Action, AllPaths, PathExpr, RuleDocument, XatStore};
//!
//! let universe = AllPaths::from_list("/dept/student/gpa\n").unwrap();
//! let grant = RuleDocument::parse(
//!     "<rules><rule><subject>staff</subject><object>//gpa</object>\
//!      <action>select</action><type>L</type><mode>Grant</mode></rule></rules>",
//! ).unwrap();
//! let deny = RuleDocument::parse(
//!     "<rules><rule><subject>staff</subject><object>//gpa[.&lt;2.0]</object>\
//!      <action>select</action><type>L</type><mode>Deny</mode></rule></rules>",
//! ).unwrap();
//!
//! let mut xat = XatStore::new();
//! compile(&[grant, deny], &universe, &mut xat).unwrap();
//!
//! let decision = decide("staff", Action::Select, &PathExpr::parse("//gpa").unwrap(), &universe, &xat);
//! assert_eq!(decision.grants()[0].1.render().unwrap(), ".>= 2.0");
//! ```

pub mod compiler;
pub mod decimal;
pub mod error;
pub mod gate;
pub mod path;
pub mod predicate;
pub mod store;

pub use compiler::{
    apply_rule, apply_to_paths, compile, compile_document, expand_object, parse_rule_document,
    AuthRule, ChangeSummary, Mode, RuleDocument, Scope,
};
pub use decimal::Decimal;
pub use error::{Error, Result};
pub use gate::{decide, explain, AccessDecision, DecisionRecord, PathVerdict, Verdict};
pub use path::{parse_path_expr, AbsolutePath, AllPaths, Axis, PathExpr, Segment, Step};
pub use predicate::{classify_conflict, Bound, CmpOp, ConflictKind, Interval, Predicate};
pub use store::{ingest_users, Action, UserRecord, UserTable, XatEntry, XatStore};
