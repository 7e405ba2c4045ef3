//! Membership checking for the uniform one-dimensional fragment and its
//! variants.
//!
//! A formula belongs to the fragment when every quantifier block leaves at
//! most one free variable (one-dimensionality) and, inside each block's
//! matrix, all non-exempt relational atoms mentioning at least two distinct
//! variables share one variable set (uniformity). Which atoms are exempt
//! depends on the profile: plain U1 exempts equality, `U1_FREE` additionally
//! exempts the listed binary symbols, `FU1` treats equality like a binary
//! relation symbol, and `U1_NO_EQ` forbids equality outright.

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{Formula, QuantKind};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FragmentProfile {
    U1,
    U1NoEq,
    Fu1,
    /// Uniformity exemption for the listed binary symbols (plus equality).
    U1Free(Vec<String>),
}

impl FragmentProfile {
    fn equality_allowed(&self) -> bool {
        !matches!(self, FragmentProfile::U1NoEq)
    }

    /// Equality participates in uniformity only under FU1.
    fn equality_uniform(&self) -> bool {
        matches!(self, FragmentProfile::Fu1)
    }

    fn atom_exempt(&self, rel: &str) -> bool {
        match self {
            FragmentProfile::U1Free(list) => list.iter().any(|s| s == rel),
            _ => false,
        }
    }
}

impl fmt::Display for FragmentProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragmentProfile::U1 => write!(f, "u1"),
            FragmentProfile::U1NoEq => write!(f, "u1-noeq"),
            FragmentProfile::Fu1 => write!(f, "fu1"),
            FragmentProfile::U1Free(list) => write!(f, "u1-free[{}]", list.join(",")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Uniformity,
    OneDimensionality,
    Arity,
    Scope,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::Uniformity => write!(f, "uniformity"),
            ViolationKind::OneDimensionality => write!(f, "one-dimensionality"),
            ViolationKind::Arity => write!(f, "arity"),
            ViolationKind::Scope => write!(f, "scope"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Path of child indices from the root to the offending subformula.
    pub location: String,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentReport {
    pub accepted: bool,
    pub violations: Vec<Violation>,
}

impl FragmentReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

struct Checker<'a> {
    profile: &'a FragmentProfile,
    violations: Vec<Violation>,
    path: Vec<usize>,
}

impl<'a> Checker<'a> {
    fn report(&mut self, kind: ViolationKind, message: String) {
        let location = if self.path.is_empty() {
            "root".to_string()
        } else {
            self.path
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(".")
        };
        self.violations.push(Violation {
            location,
            kind,
            message,
        });
    }

    /// Checks a formula in component position: it must itself belong to the
    /// fragment (atoms with two or more distinct variables are only allowed
    /// inside a quantified matrix).
    fn check_component(&mut self, f: &Formula) {
        match f {
            Formula::Atom { rel, args } => {
                let distinct: BTreeSet<&String> = args.iter().collect();
                if distinct.len() >= 2 && !self.profile.atom_exempt(rel) {
                    self.report(
                        ViolationKind::Scope,
                        format!("atom `{rel}` with several variables occurs outside a quantifier block"),
                    );
                }
            }
            Formula::Equality(x, y) => self.check_equality(x, y, false),
            Formula::Not(g) => {
                self.path.push(0);
                self.check_component(g);
                self.path.pop();
            }
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                self.path.push(0);
                self.check_component(l);
                self.path.pop();
                self.path.push(1);
                self.check_component(r);
                self.path.pop();
            }
            Formula::Quant { .. } => self.check_block(f),
        }
    }

    fn check_equality(&mut self, x: &str, y: &str, in_matrix: bool) {
        if !self.profile.equality_allowed() {
            self.report(
                ViolationKind::Scope,
                format!("equality `{x} = {y}` is not available in this profile"),
            );
        } else if self.profile.equality_uniform() && x != y && !in_matrix {
            self.report(
                ViolationKind::Scope,
                format!("equality `{x} = {y}` used like a binary atom outside a quantifier block"),
            );
        }
    }

    /// Checks a maximal quantifier block: one-dimensionality of the block
    /// and uniformity of its matrix.
    fn check_block(&mut self, f: &Formula) {
        let (kind, vars, matrix) = flatten_block(f);
        let free = f.free_vars();
        if free.len() > 1 {
            self.report(
                ViolationKind::OneDimensionality,
                format!(
                    "{} block over {} leaves {} free variables ({})",
                    kind.keyword(),
                    vars.join(" "),
                    free.len(),
                    free.iter().cloned().collect::<Vec<_>>().join(", ")
                ),
            );
        }
        let mut shared: Option<BTreeSet<String>> = None;
        self.path.push(0);
        self.check_matrix(matrix, &mut shared);
        self.path.pop();
    }

    /// Walks a matrix through Boolean structure. Non-exempt atoms with two
    /// or more distinct variables must all use one shared variable set;
    /// nested quantifier blocks are fragment components of their own.
    fn check_matrix(&mut self, f: &Formula, shared: &mut Option<BTreeSet<String>>) {
        match f {
            Formula::Atom { rel, args } => {
                let distinct: BTreeSet<String> = args.iter().cloned().collect();
                if distinct.len() >= 2 && !self.profile.atom_exempt(rel) {
                    self.note_uniform_set(rel, distinct, shared);
                }
            }
            Formula::Equality(x, y) => {
                self.check_equality(x, y, true);
                if self.profile.equality_uniform() && x != y && self.profile.equality_allowed() {
                    let set: BTreeSet<String> = [x.to_string(), y.to_string()].into();
                    self.note_uniform_set("=", set, shared);
                }
            }
            Formula::Not(g) => {
                self.path.push(0);
                self.check_matrix(g, shared);
                self.path.pop();
            }
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                self.path.push(0);
                self.check_matrix(l, shared);
                self.path.pop();
                self.path.push(1);
                self.check_matrix(r, shared);
                self.path.pop();
            }
            Formula::Quant { .. } => self.check_block(f),
        }
    }

    fn note_uniform_set(
        &mut self,
        rel: &str,
        set: BTreeSet<String>,
        shared: &mut Option<BTreeSet<String>>,
    ) {
        match shared {
            None => *shared = Some(set),
            Some(prev) if *prev == set => {}
            Some(prev) => {
                self.report(
                    ViolationKind::Uniformity,
                    format!(
                        "atom `{rel}` uses variables {{{}}} but the block's atoms use {{{}}}",
                        set.iter().cloned().collect::<Vec<_>>().join(","),
                        prev.iter().cloned().collect::<Vec<_>>().join(",")
                    ),
                );
            }
        }
    }
}

/// Merges directly nested same-kind blocks into one maximal block and
/// returns (kind, variables, matrix).
fn flatten_block(f: &Formula) -> (QuantKind, Vec<String>, &Formula) {
    let (kind, mut vars, mut body) = match f {
        Formula::Quant { kind, vars, body } => (*kind, vars.clone(), body.as_ref()),
        _ => unreachable!("flatten_block on a non-quantifier"),
    };
    while let Formula::Quant {
        kind: k2,
        vars: v2,
        body: b2,
    } = body
    {
        if *k2 != kind {
            break;
        }
        vars.extend(v2.iter().cloned());
        body = b2.as_ref();
    }
    (kind, vars, body)
}

/// Checks fragment membership. Arity consistency is checked first when a
/// vocabulary can be inferred; for `U1_FREE`, listed symbols must be binary.
pub fn check_fragment(f: &Formula, profile: &FragmentProfile) -> FragmentReport {
    let mut checker = Checker {
        profile,
        violations: Vec::new(),
        path: Vec::new(),
    };
    match f.infer_vocabulary() {
        Ok(vocab) => {
            if let FragmentProfile::U1Free(list) = profile {
                for sym in list {
                    if let Some(a) = vocab.arity(sym) {
                        if a != 2 {
                            checker.report(
                                ViolationKind::Arity,
                                format!("exempt symbol `{sym}` has arity {a}, expected 2"),
                            );
                        }
                    }
                }
            }
        }
        Err(e) => checker.report(ViolationKind::Arity, e.to_string()),
    }
    let desugared = f.desugar();
    checker.check_component(&desugared);
    FragmentReport {
        accepted: checker.violations.is_empty(),
        violations: checker.violations,
    }
}

/// Convenience wrapper used by vocabulary-aware callers.
pub fn check_u1_sentence(f: &Formula, vocab: &Vocabulary) -> FragmentReport {
    if let Err(e) = f.check_arities(vocab) {
        return FragmentReport {
            accepted: false,
            violations: vec![Violation {
                location: "root".into(),
                kind: ViolationKind::Arity,
                message: e.to_string(),
            }],
        };
    }
    check_fragment(f, &FragmentProfile::U1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn check(text: &str, profile: FragmentProfile) -> FragmentReport {
        let f = parse_formula(text, None).unwrap();
        check_fragment(&f, &profile)
    }

    #[test]
    fn accepts_uniform_block() {
        let r = check(
            "exists x y z. ~R(x,y,z,x,y) & ~T(y,x,z) & P(x) & Q(y)",
            FragmentProfile::U1,
        );
        assert!(r.accepted, "{:?}", r.violations);
    }

    #[test]
    fn accepts_alternating_blocks() {
        let r = check(
            "exists x . forall y z . ~S(x,y) -> exists u v . T(u,v,z)",
            FragmentProfile::U1NoEq,
        );
        assert!(r.accepted, "{:?}", r.violations);
    }

    #[test]
    fn rejects_uniformity_violation() {
        let r = check("exists x y z. S(x,y) | S(x,z)", FragmentProfile::U1);
        assert!(!r.accepted);
        assert!(r.has(ViolationKind::Uniformity));
    }

    #[test]
    fn rejects_one_dimensionality_violation() {
        let r = check("forall y. P(y) & (exists x. T(x,y,z))", FragmentProfile::U1);
        assert!(!r.accepted);
        assert!(r.has(ViolationKind::OneDimensionality));
    }

    #[test]
    fn free_profile_exempts_listed_orders() {
        let text = "forall x y z. (x <1 y & y <1 z) -> x <1 z";
        let free = FragmentProfile::U1Free(vec!["<1".into(), "<2".into()]);
        assert!(check(text, free).accepted);
        let plain = check(text, FragmentProfile::U1);
        assert!(!plain.accepted);
        assert!(plain.has(ViolationKind::Uniformity));
    }

    #[test]
    fn counting_sentence_is_u1() {
        let r = check(
            "exists x y z. x != y & y != z & z != x",
            FragmentProfile::U1,
        );
        assert!(r.accepted, "{:?}", r.violations);
    }

    #[test]
    fn part_of_every_tuple_sentence_is_u1() {
        let r = check(
            "exists x . forall y z . S(y,z) -> (x = y | x = z)",
            FragmentProfile::U1,
        );
        assert!(r.accepted, "{:?}", r.violations);
    }

    #[test]
    fn no_eq_profile_rejects_equality() {
        let r = check("exists x . x = x", FragmentProfile::U1NoEq);
        assert!(!r.accepted);
        assert!(r.has(ViolationKind::Scope));
    }

    #[test]
    fn fu1_equality_participates_in_uniformity() {
        // substituting a binary symbol by equality keeps uniformity
        assert!(check("exists x y . S(x,y) & x = y", FragmentProfile::Fu1).accepted);
        let r = check("exists x y z . S(x,y) & x = z", FragmentProfile::Fu1);
        assert!(!r.accepted);
        assert!(r.has(ViolationKind::Uniformity));
        // plain U1 exempts equality, so the same formula passes
        assert!(check("exists x y z . S(x,y) & x = z", FragmentProfile::U1).accepted);
    }

    #[test]
    fn bare_higher_arity_atom_is_out_of_scope() {
        let r = check("R(x,y)", FragmentProfile::U1);
        assert!(!r.accepted);
        assert!(r.has(ViolationKind::Scope));
    }

    #[test]
    fn vacuous_quantification_is_permitted() {
        assert!(check("exists x y . P(x)", FragmentProfile::U1).accepted);
    }
}
