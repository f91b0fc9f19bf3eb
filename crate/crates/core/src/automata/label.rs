//! Proposition universes and labels.
//!
//! A label is a subset of the proposition universe, stored as a bit pattern
//! whose bit `i` corresponds to the `i`-th proposition of the universe.

use std::fmt;

use crate::error::{Error, Result};

/// Maximum number of propositions in a universe. Machines store dense tables
/// over all `2^|P|` labels, so this is a practical rather than a hard limit.
pub const MAX_PROPS: usize = 16;

/// A set of propositions, encoded as bits over a [`PropSet`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u32);

impl Label {
    pub const EMPTY: Label = Label(0);

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, prop: usize) -> bool {
        self.0 & (1 << prop) != 0
    }

    pub fn with(self, prop: usize) -> Label {
        Label(self.0 | (1 << prop))
    }

    pub fn union(self, other: Label) -> Label {
        Label(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// An ordered, duplicate-free universe of proposition names.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PropSet {
    names: Vec<String>,
}

impl PropSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_PROPS {
            return Err(Error::input(format!(
                "{} propositions exceed the limit of {MAX_PROPS}",
                names.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) {
                return Err(Error::input(format!(
                    "`{name}` is not a valid proposition name"
                )));
            }
            if matches!(name.as_str(), "true" | "false") {
                return Err(Error::input(format!("`{name}` is reserved")));
            }
            if names[..i].contains(name) {
                return Err(Error::input(format!("duplicate proposition `{name}`")));
            }
        }
        Ok(PropSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of distinct labels, `2^|P|`.
    pub fn label_count(&self) -> usize {
        1 << self.names.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        (0..self.label_count() as u32).map(Label)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains_label(&self, label: Label) -> bool {
        (label.0 as usize) < self.label_count()
    }

    pub fn check_label(&self, label: Label) -> Result<()> {
        if self.contains_label(label) {
            Ok(())
        } else {
            Err(Error::input(format!(
                "label bits {:#b} outside a universe of {} propositions",
                label.0,
                self.len()
            )))
        }
    }

    /// Builds a label from proposition names.
    pub fn label<'a, I>(&self, names: I) -> Result<Label>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut label = Label::EMPTY;
        for name in names {
            let idx = self
                .index_of(name)
                .ok_or_else(|| Error::input(format!("unknown proposition `{name}`")))?;
            label = label.with(idx);
        }
        Ok(label)
    }

    pub fn props_of(&self, label: Label) -> impl Iterator<Item = &str> + '_ {
        self.names
            .iter()
            .enumerate()
            .filter(move |(i, _)| label.contains(*i))
            .map(|(_, n)| n.as_str())
    }

    /// Renders a label as `{p,q}`.
    pub fn format_label(&self, label: Label) -> String {
        let inner: Vec<&str> = self.props_of(label).collect();
        format!("{{{}}}", inner.join(","))
    }

    /// Parses `{p,q}` (braces optional, empty braces for the empty label).
    pub fn parse_label(&self, text: &str) -> Result<Label> {
        let t = text.trim();
        let inner = t
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .unwrap_or(t)
            .trim();
        if inner.is_empty() {
            return Ok(Label::EMPTY);
        }
        self.label(inner.split(',').map(str::trim))
    }
}

impl fmt::Display for PropSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names.join(" "))
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
