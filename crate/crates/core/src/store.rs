//! The XML Authorization Table and the users table.
//!
//! The XAT holds grant rows only, keyed by `(subject, object, action)`. A
//! missing row means access is denied.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::path::AbsolutePath;
use crate::predicate::Predicate;

pub const XAT_HEADER: [&str; 4] = ["Subject", "Object", "Predicate", "Action"];
pub const USERS_HEADER: [&str; 5] = ["UserID", "Password", "FirstName", "LastName", "Role"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Select,
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("select") {
            Ok(Action::Select)
        } else {
            Err(Error::UnsupportedAction(s.trim().to_string()))
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Select => f.write_str("Select"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key {
    subject: String,
    object: AbsolutePath,
    action: Action,
}

/// One row of the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XatEntry {
    pub subject: String,
    pub object: AbsolutePath,
    pub predicate: Predicate,
    pub action: Action,
}

impl XatEntry {
    pub fn new(
        subject: impl Into<String>,
        object: AbsolutePath,
        predicate: Predicate,
        action: Action,
    ) -> XatEntry {
        XatEntry {
            subject: subject.into(),
            object,
            predicate,
            action,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct XatStore {
    rows: BTreeMap<Key, Predicate>,
}

impl XatStore {
    pub fn new() -> XatStore {
        XatStore::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Stores `entry`, returning the row it replaced.
    pub fn upsert(&mut self, entry: XatEntry) -> Result<Option<XatEntry>> {
        if entry.predicate.is_empty() {
            return Err(Error::EmptyPredicate);
        }
        if entry.subject.trim().is_empty() {
            return Err(Error::Users("subject must not be empty".into()));
        }
        let key = Key {
            subject: entry.subject,
            object: entry.object,
            action: entry.action,
        };
        let previous = self
            .rows
            .get(&key)
            .map(|p| XatEntry::new(key.subject.clone(), key.object.clone(), p.clone(), key.action));
        self.rows.insert(key, entry.predicate);
        Ok(previous)
    }

    pub fn delete(&mut self, subject: &str, object: &AbsolutePath, action: Action) -> bool {
        let key = Key {
            subject: subject.to_string(),
            object: object.clone(),
            action,
        };
        self.rows.remove(&key).is_some()
    }

    pub fn lookup(&self, subject: &str, object: &AbsolutePath, action: Action) -> Option<XatEntry> {
        self.predicate(subject, object, action)
            .map(|p| XatEntry::new(subject, object.clone(), p.clone(), action))
    }

    pub fn predicate(&self, subject: &str, object: &AbsolutePath, action: Action) -> Option<&Predicate> {
        let key = Key {
            subject: subject.to_string(),
            object: object.clone(),
            action,
        };
        self.rows.get(&key)
    }

    /// Rows in export order: by subject, then object text, then action.
    pub fn entries(&self) -> Vec<XatEntry> {
        let mut rows: Vec<(String, XatEntry)> = self
            .rows
            .iter()
            .map(|(k, p)| {
                let entry = XatEntry::new(k.subject.clone(), k.object.clone(), p.clone(), k.action);
                (k.object.to_string(), entry)
            })
            .collect();
        rows.sort_by(|(ta, a), (tb, b)| {
            a.subject
                .cmp(&b.subject)
                .then_with(|| ta.cmp(tb))
                .then_with(|| a.action.cmp(&b.action))
        });
        rows.into_iter().map(|(_, e)| e).collect()
    }

    pub fn export_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(XAT_HEADER)?;
        for e in self.entries() {
            let predicate = e.predicate.render()?;
            w.write_record([
                e.subject.as_str(),
                &e.object.to_string(),
                &predicate,
                &e.action.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.export_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn import_csv<R: Read>(input: R) -> Result<XatStore> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let mut records = reader.records();
        match records.next() {
            Some(header) => {
                let header = header?;
                if header.iter().ne(XAT_HEADER) {
                    return Err(Error::line(1, format!("expected header `{}`", XAT_HEADER.join(","))));
                }
            }
            None => return Err(Error::line(1, "missing header")),
        }
        let mut store = XatStore::new();
        for record in records {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let fail = |m: String| Error::line(line, m);
            if record.len() != 4 {
                return Err(fail(format!("expected 4 fields, found {}", record.len())));
            }
            let subject = record[0].trim();
            if subject.is_empty() {
                return Err(fail("empty subject".into()));
            }
            let object: AbsolutePath = record[1].trim().parse().map_err(|e: Error| fail(e.to_string()))?;
            let predicate = Predicate::parse(&record[2]).map_err(|e| fail(e.to_string()))?;
            if predicate.is_empty() {
                return Err(fail("predicate accepts no value".into()));
            }
            let action: Action = record[3].parse().map_err(|e: Error| fail(e.to_string()))?;
            if store.predicate(subject, &object, action).is_some() {
                return Err(fail(format!("duplicate row for ({subject}, {object}, {action})")));
            }
            store.upsert(XatEntry::new(subject, object, predicate, action))?;
        }
        Ok(store)
    }

    pub fn from_csv_str(text: &str) -> Result<XatStore> {
        XatStore::import_csv(text.as_bytes())
    }
}

/// One user; the role is the subject used in access decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub user_id: String,
    /// Kept as given; never used for authentication.
    pub password: String,
    pub first_name: String,
    pub last_name: String,
    pub role: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserTable {
    users: BTreeMap<String, UserRecord>,
}

impl UserTable {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn get(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.get(user_id)
    }

    pub fn role_of(&self, user_id: &str) -> Option<&str> {
        self.get(user_id).map(|u| u.role.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.values()
    }

    pub fn insert(&mut self, user: UserRecord) -> Result<()> {
        if user.user_id.is_empty() {
            return Err(Error::Users("userID must not be empty".into()));
        }
        if user.role.is_empty() {
            return Err(Error::Users(format!("user `{}` has no role", user.user_id)));
        }
        if self.users.contains_key(&user.user_id) {
            return Err(Error::Users(format!("duplicate userID `{}`", user.user_id)));
        }
        self.users.insert(user.user_id.clone(), user);
        Ok(())
    }

    /// Writes the table as CSV rows ordered by userID.
    pub fn export_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(USERS_HEADER)?;
        for u in self.users.values() {
            w.write_record([&u.user_id, &u.password, &u.first_name, &u.last_name, &u.role])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads `<users><user><userID/>...<role/></user>...</users>`.
pub fn ingest_users(xml: &str) -> Result<UserTable> {
    let doc = roxmltree::Document::parse(xml)?;
    let root = doc.root_element();
    if root.tag_name().name() != "users" {
        return Err(Error::Users(format!(
            "expected root <users>, found <{}>",
            root.tag_name().name()
        )));
    }
    let mut table = UserTable::default();
    for (n, user) in root.children().filter(roxmltree::Node::is_element).enumerate() {
        if user.tag_name().name() != "user" {
            return Err(Error::Users(format!(
                "entry {}: expected <user>, found <{}>",
                n + 1,
                user.tag_name().name()
            )));
        }
        let field = |name: &str| {
            user.children()
                .find(|c| c.is_element() && c.tag_name().name() == name)
                .map(|c| c.text().unwrap_or("").trim().to_string())
        };
        let user_id = field("userID")
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Users(format!("entry {}: missing userID", n + 1)))?;
        let role = field("role")
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Users(format!("user `{user_id}`: missing role")))?;
        table.insert(UserRecord {
            user_id,
            password: field("password").unwrap_or_default(),
            first_name: field("firstName").unwrap_or_default(),
            last_name: field("lastName").unwrap_or_default(),
            role,
        })?;
    }
    Ok(table)
}
