//! Formula ASTs, rendering, and live-variable analysis.

use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

use crate::vocab::{VocabError, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuantKind {
    Exists,
    Forall,
}

impl QuantKind {
    pub fn keyword(self) -> &'static str {
        match self {
            QuantKind::Exists => "exists",
            QuantKind::Forall => "forall",
        }
    }
}

/// First-order formulas over a relational vocabulary. Variables are named;
/// quantifiers come in blocks of same-kind variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom { rel: String, args: Vec<String> },
    Equality(String, String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Quant {
        kind: QuantKind,
        vars: Vec<String>,
        body: Box<Formula>,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("matrix is not quantifier-free")]
    NotQuantifierFree,
}

impl Formula {
    pub fn atom(rel: impl Into<String>, args: &[&str]) -> Self {
        Formula::Atom {
            rel: rel.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn eq(x: impl Into<String>, y: impl Into<String>) -> Self {
        Formula::Equality(x.into(), y.into())
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Self {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    pub fn quant(kind: QuantKind, vars: &[&str], body: Formula) -> Self {
        Formula::Quant {
            kind,
            vars: vars.iter().map(|s| s.to_string()).collect(),
            body: Box::new(body),
        }
    }

    pub fn exists(vars: &[&str], body: Formula) -> Self {
        Self::quant(QuantKind::Exists, vars, body)
    }

    pub fn forall(vars: &[&str], body: Formula) -> Self {
        Self::quant(QuantKind::Forall, vars, body)
    }

    /// Conjunction of a nonempty list, left-associated. For an empty list
    /// returns the trivially true atom `var = var`.
    pub fn conjoin(parts: Vec<Formula>, var_if_empty: &str) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::eq(var_if_empty, var_if_empty),
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of a nonempty list, left-associated. For an empty list
    /// returns the trivially false formula `~(var = var)`.
    pub fn disjoin(parts: Vec<Formula>, var_if_empty: &str) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::not(Formula::eq(var_if_empty, var_if_empty)),
            Some(first) => it.fold(first, Formula::or),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom { .. } | Formula::Equality(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => l.is_quantifier_free() && r.is_quantifier_free(),
            Formula::Quant { .. } => false,
        }
    }

    /// Free variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom { args, .. } => {
                for a in args {
                    if !bound.contains(a) {
                        out.insert(a.clone());
                    }
                }
            }
            Formula::Equality(x, y) => {
                for a in [x, y] {
                    if !bound.contains(a) {
                        out.insert(a.clone());
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Formula::Quant { vars, body, .. } => {
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// All variables occurring anywhere.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |f| match f {
            Formula::Atom { args, .. } => out.extend(args.iter().cloned()),
            Formula::Equality(x, y) => {
                out.insert(x.clone());
                out.insert(y.clone());
            }
            _ => {}
        });
        let mut quant_vars = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Quant { vars, .. } = f {
                quant_vars.extend(vars.iter().cloned());
            }
        });
        out.extend(quant_vars);
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Atom { .. } | Formula::Equality(..) => {}
            Formula::Not(g) => g.visit(f),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Formula::Quant { body, .. } => body.visit(f),
        }
    }

    fn visit_atoms(&self, f: &mut impl FnMut(&Formula)) {
        self.visit(&mut |g| {
            if matches!(g, Formula::Atom { .. } | Formula::Equality(..)) {
                f(g)
            }
        });
    }

    /// Node count, used as the size measure `|phi|` in all bound checks.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom { args, .. } => 1 + args.len(),
            Formula::Equality(..) => 3,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => 1 + l.size() + r.size(),
            Formula::Quant { vars, body, .. } => 1 + vars.len() + body.size(),
        }
    }

    /// Rewrites `->` and `<->` into the `~ & |` basis.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::Atom { .. } | Formula::Equality(..) => self.clone(),
            Formula::Not(f) => Formula::not(f.desugar()),
            Formula::And(l, r) => Formula::and(l.desugar(), r.desugar()),
            Formula::Or(l, r) => Formula::or(l.desugar(), r.desugar()),
            Formula::Implies(l, r) => Formula::or(Formula::not(l.desugar()), r.desugar()),
            Formula::Iff(l, r) => {
                let (l, r) = (l.desugar(), r.desugar());
                Formula::and(
                    Formula::or(Formula::not(l.clone()), r.clone()),
                    Formula::or(Formula::not(r), l),
                )
            }
            Formula::Quant { kind, vars, body } => Formula::Quant {
                kind: *kind,
                vars: vars.clone(),
                body: Box::new(body.desugar()),
            },
        }
    }

    /// Renames variables via the given map; variables absent from the map
    /// are kept. Quantified occurrences are renamed consistently, so the
    /// map must not capture.
    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> Formula {
        match self {
            Formula::Atom { rel, args } => Formula::Atom {
                rel: rel.clone(),
                args: args.iter().map(|a| map(a)).collect(),
            },
            Formula::Equality(x, y) => Formula::Equality(map(x), map(y)),
            Formula::Not(f) => Formula::not(f.rename(map)),
            Formula::And(l, r) => Formula::and(l.rename(map), r.rename(map)),
            Formula::Or(l, r) => Formula::or(l.rename(map), r.rename(map)),
            Formula::Implies(l, r) => Formula::implies(l.rename(map), r.rename(map)),
            Formula::Iff(l, r) => Formula::iff(l.rename(map), r.rename(map)),
            Formula::Quant { kind, vars, body } => Formula::Quant {
                kind: *kind,
                vars: vars.iter().map(|v| map(v)).collect(),
                body: Box::new(body.rename(map)),
            },
        }
    }

    /// Infers a vocabulary from atom usage. Fails on inconsistent arities.
    pub fn infer_vocabulary(&self) -> Result<Vocabulary, VocabError> {
        let mut v = Vocabulary::new();
        let mut err = None;
        self.visit_atoms(&mut |f| {
            if let Formula::Atom { rel, args } = f {
                if err.is_none() {
                    if let Err(e) = v.declare(rel.clone(), args.len()) {
                        err = Some(e);
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// Checks every atom against the vocabulary.
    pub fn check_arities(&self, vocab: &Vocabulary) -> Result<(), VocabError> {
        let mut err = None;
        self.visit_atoms(&mut |f| {
            if let Formula::Atom { rel, args } = f {
                if err.is_none() {
                    match vocab.arity(rel) {
                        Some(a) if a == args.len() => {}
                        Some(a) => {
                            err = Some(VocabError::ArityMismatch {
                                name: rel.clone(),
                                expected: a,
                                found: args.len(),
                            })
                        }
                        None => {
                            err = Some(VocabError::ArityMismatch {
                                name: rel.clone(),
                                expected: 0,
                                found: args.len(),
                            })
                        }
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// The set of live variables of a quantifier-free matrix: the union of the
/// variable sets of relational atoms (equality excluded) mentioning at
/// least two distinct variables. Empty when no such atom occurs. For a U1
/// matrix this union is the common variable set of those atoms.
pub fn live_variables(matrix: &Formula) -> Result<BTreeSet<String>, FormulaError> {
    if !matrix.is_quantifier_free() {
        return Err(FormulaError::NotQuantifierFree);
    }
    let mut live = BTreeSet::new();
    matrix.visit_atoms(&mut |f| {
        if let Formula::Atom { args, .. } = f {
            let distinct: BTreeSet<&String> = args.iter().collect();
            if distinct.len() >= 2 {
                live.extend(args.iter().cloned());
            }
        }
    });
    Ok(live)
}

/// Lifts live variables to element tuples: given the matrix over the listed
/// variables and a parallel element tuple, returns the elements assigned to
/// live variables.
pub fn live_elements(
    matrix: &Formula,
    vars: &[String],
    elems: &[usize],
) -> Result<BTreeSet<usize>, FormulaError> {
    assert_eq!(vars.len(), elems.len());
    let live = live_variables(matrix)?;
    Ok(vars
        .iter()
        .zip(elems)
        .filter(|(v, _)| live.contains(*v))
        .map(|(_, &e)| e)
        .collect())
}

// Rendering. Precedence: ~ > & > | > -> > <->, quantifier body weakest.
// `&` and `|` print left-associated, `->` and `<->` right-associated;
// the output reparses to a structurally identical tree.

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Atom { .. } | Formula::Equality(..) => 6,
        Formula::Not(_) => 5,
        Formula::And(..) => 4,
        Formula::Or(..) => 3,
        Formula::Implies(..) => 2,
        Formula::Iff(..) => 1,
        Formula::Quant { .. } => 0,
    }
}

fn fmt_child(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(f) < min {
        write!(out, "({f})")
    } else {
        write!(out, "{f}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { rel, args } => {
                if args.len() == 2 && rel.starts_with('<') {
                    write!(out, "{} {} {}", args[0], rel, args[1])
                } else {
                    write!(out, "{rel}({})", args.join(","))
                }
            }
            Formula::Equality(x, y) => write!(out, "{x} = {y}"),
            Formula::Not(f) => match f.as_ref() {
                Formula::Equality(x, y) => write!(out, "{x} != {y}"),
                // infix atoms are parenthesized under negation for legibility
                inner @ Formula::Atom { rel, args } if args.len() == 2 && rel.starts_with('<') => {
                    write!(out, "~({inner})")
                }
                inner => {
                    write!(out, "~")?;
                    fmt_child(inner, 5, out)
                }
            },
            Formula::And(l, r) => {
                fmt_child(l, 4, out)?;
                write!(out, " & ")?;
                fmt_child(r, 5, out)
            }
            Formula::Or(l, r) => {
                fmt_child(l, 3, out)?;
                write!(out, " | ")?;
                fmt_child(r, 4, out)
            }
            Formula::Implies(l, r) => {
                fmt_child(l, 3, out)?;
                write!(out, " -> ")?;
                fmt_child(r, 2, out)
            }
            Formula::Iff(l, r) => {
                fmt_child(l, 2, out)?;
                write!(out, " <-> ")?;
                fmt_child(r, 1, out)
            }
            Formula::Quant { kind, vars, body } => {
                write!(out, "{} {} . {}", kind.keyword(), vars.join(" "), body)
            }
        }
    }
}

/// Renders a formula in the concrete grammar; the output reparses to a
/// structurally identical AST.
pub fn render_formula(f: &Formula) -> String {
    f.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infix_atoms_render_with_operator_syntax() {
        let f = Formula::atom("<", &["x", "y"]);
        assert_eq!(render_formula(&f), "x < y");
        let g = Formula::atom("R", &["x", "y", "x"]);
        assert_eq!(render_formula(&g), "R(x,y,x)");
    }

    #[test]
    fn negated_equality_renders_as_neq() {
        let f = Formula::not(Formula::eq("x", "y"));
        assert_eq!(render_formula(&f), "x != y");
    }

    #[test]
    fn live_variables_of_mixed_matrix() {
        // R(v2,v3,v2) & P(v4) & v1 = v2 has live set {v2, v3}
        let m = Formula::and(
            Formula::and(
                Formula::atom("R", &["v2", "v3", "v2"]),
                Formula::atom("P", &["v4"]),
            ),
            Formula::eq("v1", "v2"),
        );
        let live = live_variables(&m).unwrap();
        assert_eq!(
            live.into_iter().collect::<Vec<_>>(),
            vec!["v2".to_string(), "v3".to_string()]
        );
        let lifted = live_elements(
            &m,
            &["v1".into(), "v2".into(), "v3".into(), "v4".into()],
            &[0, 1, 2, 1],
        )
        .unwrap();
        assert_eq!(lifted.into_iter().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn live_variables_empty_without_higher_arity_atoms() {
        let m = Formula::and(Formula::atom("P", &["x"]), Formula::eq("x", "y"));
        assert!(live_variables(&m).unwrap().is_empty());
    }

    #[test]
    fn live_variables_requires_quantifier_free() {
        let m = Formula::exists(&["x"], Formula::atom("P", &["x"]));
        assert_eq!(live_variables(&m), Err(FormulaError::NotQuantifierFree));
    }

    #[test]
    fn desugar_removes_implications() {
        let f = Formula::implies(Formula::atom("P", &["x"]), Formula::atom("Q", &["x"]));
        assert!(matches!(f.desugar(), Formula::Or(..)));
    }

    #[test]
    fn infers_vocabulary_and_rejects_inconsistency() {
        let f = Formula::and(
            Formula::atom("P", &["x"]),
            Formula::atom("P", &["x", "y"]),
        );
        assert!(f.infer_vocabulary().is_err());
    }
}
