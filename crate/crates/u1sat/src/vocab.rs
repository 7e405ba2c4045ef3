//! Relational vocabularies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// The built-in order symbol used by the ordered-satisfiability pipeline.
pub const ORDER: &str = "<";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("relation `{0}` declared with arity 0; arities must be positive")]
    ZeroArity(String),
    #[error("relation `{name}` used with arity {found} but declared with arity {expected}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("order-like symbol `{0}` must be binary")]
    OrderArity(String),
}

/// A finite relational vocabulary: relation names with positive arities,
/// plus a set of names designated as order-like (`<`, `<1`, `<2`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    rels: BTreeMap<String, usize>,
    order_like: BTreeSet<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary from `(name, arity)` pairs. Names starting with
    /// `<` are registered as order-like.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut v = Self::new();
        for (name, arity) in pairs {
            v.declare(name.into(), arity)?;
        }
        Ok(v)
    }

    pub fn declare(&mut self, name: String, arity: usize) -> Result<(), VocabError> {
        if arity == 0 {
            return Err(VocabError::ZeroArity(name));
        }
        if let Some(&a) = self.rels.get(&name) {
            if a != arity {
                return Err(VocabError::ArityMismatch {
                    name,
                    expected: a,
                    found: arity,
                });
            }
            return Ok(());
        }
        if name.starts_with('<') {
            if arity != 2 {
                return Err(VocabError::OrderArity(name));
            }
            self.order_like.insert(name.clone());
        }
        self.rels.insert(name, arity);
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.rels.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.rels.contains_key(name)
    }

    pub fn is_order_like(&self, name: &str) -> bool {
        self.order_like.contains(name)
    }

    /// Relation names in sorted order; this order fixes every bitset layout
    /// used by types and tables.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rels.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.rels.iter().map(|(n, &a)| (n.as_str(), a))
    }

    pub fn len(&self) -> usize {
        self.rels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rels.is_empty()
    }

    /// Maximum arity over all symbols, 0 for the empty vocabulary.
    pub fn max_arity(&self) -> usize {
        self.rels.values().copied().max().unwrap_or(0)
    }

    /// Position of `name` in sorted order.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.rels.keys().position(|k| k == name)
    }

    /// Returns a copy extended with the order symbol `<` if absent.
    pub fn with_order(&self) -> Self {
        let mut v = self.clone();
        if !v.contains(ORDER) {
            v.declare(ORDER.to_string(), 2).expect("order symbol is binary");
        }
        v
    }

    /// Restriction to the given names.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Self {
        Self {
            rels: self
                .rels
                .iter()
                .filter(|(n, _)| keep.contains(*n))
                .map(|(n, &a)| (n.clone(), a))
                .collect(),
            order_like: self.order_like.intersection(keep).cloned().collect(),
        }
    }

    /// True when `self` contains every declaration of `other`.
    pub fn extends(&self, other: &Vocabulary) -> bool {
        other
            .iter()
            .all(|(n, a)| self.arity(n) == Some(a))
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, arity) in self.iter() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{name}/{arity}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declares_and_queries() {
        let v = Vocabulary::from_pairs([("P", 1), ("<", 2), ("R", 3)]).unwrap();
        assert_eq!(v.arity("P"), Some(1));
        assert_eq!(v.max_arity(), 3);
        assert!(v.is_order_like("<"));
        assert!(!v.is_order_like("R"));
        assert_eq!(v.names().collect::<Vec<_>>(), vec!["<", "P", "R"]);
    }

    #[test]
    fn rejects_bad_declarations() {
        assert!(Vocabulary::from_pairs([("P", 0)]).is_err());
        assert!(Vocabulary::from_pairs([("<1", 3)]).is_err());
        let mut v = Vocabulary::from_pairs([("P", 1)]).unwrap();
        assert_eq!(
            v.declare("P".into(), 2),
            Err(VocabError::ArityMismatch {
                name: "P".into(),
                expected: 1,
                found: 2
            })
        );
    }
}
