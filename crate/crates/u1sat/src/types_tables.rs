//! 1-types and k-tables: enumeration, realization, extremal realizations
//! and royalty classification.
//!
//! A 1-type fixes a polarity for every unary atom `R(v1,..,v1)`, one per
//! relation symbol; the equality atom `v1 = v1` is forced positive. A
//! k-table (k >= 2) fixes a polarity for every atom whose variable set is
//! exactly `{v1,..,vk}`; tables contain no identity literals.

use std::collections::{BTreeMap, BTreeSet};
use itertools::Itertools;
use thiserror::Error;

use crate::formula::Formula;
use crate::normal_form::NormalFormSentence;
use crate::structures::{Element, FiniteStructure};
use crate::vocab::Vocabulary;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypesError {
    #[error("enumeration budget exceeded: {0} atoms or types")]
    Budget(u128),
    #[error("element {0} is out of range")]
    OutOfRange(Element),
    #[error("tuple {0:?} has repeated elements")]
    Repeats(Vec<Element>),
    #[error("structure vocabulary does not match")]
    VocabularyMismatch,
}

/// A 1-type over a vocabulary, one polarity bit per relation symbol in
/// sorted-name order. Always interpreted against an explicit vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OneType {
    pub bits: u64,
}

impl OneType {
    pub fn positive(&self, rel_index: usize) -> bool {
        self.bits >> rel_index & 1 == 1
    }

    /// The type realized by `a`.
    pub fn of(st: &FiniteStructure, a: Element) -> Result<OneType, TypesError> {
        if a >= st.domain_size {
            return Err(TypesError::OutOfRange(a));
        }
        let vocab = st.vocabulary();
        let mut bits = 0u64;
        for (i, (rel, arity)) in vocab.iter().enumerate() {
            let tuple = vec![a; arity];
            if st.holds(rel, &tuple) {
                bits |= 1 << i;
            }
        }
        Ok(OneType { bits })
    }

    /// The defining conjunction over the single variable `var`, including
    /// the forced `var = var` literal.
    pub fn formula(&self, vocab: &Vocabulary, var: &str) -> Formula {
        let mut parts = Vec::new();
        for (i, (rel, arity)) in vocab.iter().enumerate() {
            let atom = Formula::Atom {
                rel: rel.to_string(),
                args: vec![var.to_string(); arity],
            };
            parts.push(if self.positive(i) {
                atom
            } else {
                Formula::not(atom)
            });
        }
        parts.push(Formula::eq(var, var));
        Formula::conjoin(parts, var)
    }

    /// Literal-list rendering in the formula grammar.
    pub fn render(&self, vocab: &Vocabulary) -> String {
        self.formula(vocab, "v1").to_string()
    }

    /// True when the type contains the literal `~(v1 < v1)`.
    pub fn order_irreflexive(&self, vocab: &Vocabulary) -> bool {
        match vocab.index_of(crate::vocab::ORDER) {
            Some(i) => !self.positive(i),
            None => true,
        }
    }

    /// Writes the type into a structure at element `a`.
    pub fn imprint(&self, st: &mut FiniteStructure, a: Element) {
        let vocab = st.vocabulary();
        for (i, (rel, arity)) in vocab.iter().enumerate() {
            let tuple = vec![a; arity];
            if self.positive(i) {
                st.add_tuple(rel, tuple).expect("type fits vocabulary");
            } else {
                st.remove_tuple(rel, &tuple);
            }
        }
    }
}

/// All 1-types over the vocabulary, in increasing bit order. The count is
/// `2^|vocab|`; a budget guards the blowup.
pub fn enumerate_one_types(
    vocab: &Vocabulary,
    max_count: u128,
) -> Result<Vec<OneType>, TypesError> {
    let n = vocab.len();
    let count: u128 = 1u128 << n.min(127);
    if n >= 64 || count > max_count {
        return Err(TypesError::Budget(count));
    }
    Ok((0..count as u64).map(|bits| OneType { bits }).collect())
}

/// An atom in a k-table's universe: a relation applied to a pattern of
/// variable indices `0..k`, using every index at least once.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TableAtom {
    pub rel: String,
    pub pattern: Vec<usize>,
}

impl TableAtom {
    pub fn formula(&self, vars: &[String]) -> Formula {
        Formula::Atom {
            rel: self.rel.clone(),
            args: self.pattern.iter().map(|&i| vars[i].clone()).collect(),
        }
    }
}

/// The canonical atom universe of k-tables: relations in sorted order, then
/// patterns lexicographically. Patterns are the surjective maps from
/// argument positions onto `{0..k-1}`.
pub fn table_atoms(
    vocab: &Vocabulary,
    k: usize,
    max_atoms: usize,
) -> Result<Vec<TableAtom>, TypesError> {
    assert!(k >= 2, "tables are defined for k >= 2");
    let mut atoms = Vec::new();
    for (rel, arity) in vocab.iter() {
        if arity < k {
            continue;
        }
        for pattern in (0..arity).map(|_| 0..k).multi_cartesian_product() {
            let used: BTreeSet<usize> = pattern.iter().copied().collect();
            if used.len() == k {
                atoms.push(TableAtom {
                    rel: rel.to_string(),
                    pattern,
                });
                if atoms.len() > max_atoms {
                    return Err(TypesError::Budget(atoms.len() as u128));
                }
            }
        }
    }
    Ok(atoms)
}

/// A k-table: polarity bits over [`table_atoms`] in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KTable {
    pub k: usize,
    pub bits: Vec<bool>,
}

pub const DEFAULT_MAX_TABLE_ATOMS: usize = 4096;

impl KTable {
    /// The table of a tuple of pairwise distinct elements.
    pub fn of(st: &FiniteStructure, tuple: &[Element]) -> Result<KTable, TypesError> {
        let k = tuple.len();
        assert!(k >= 2, "tables are defined for k >= 2");
        let distinct: BTreeSet<Element> = tuple.iter().copied().collect();
        if distinct.len() != k {
            return Err(TypesError::Repeats(tuple.to_vec()));
        }
        if let Some(&worst) = tuple.iter().max() {
            if worst >= st.domain_size {
                return Err(TypesError::OutOfRange(worst));
            }
        }
        let vocab = st.vocabulary();
        let atoms = table_atoms(&vocab, k, DEFAULT_MAX_TABLE_ATOMS)?;
        let bits = atoms
            .iter()
            .map(|atom| {
                let args: Vec<Element> = atom.pattern.iter().map(|&i| tuple[i]).collect();
                st.holds(&atom.rel, &args)
            })
            .collect();
        Ok(KTable { k, bits })
    }

    /// The defining conjunction over `vars` (one per table index).
    pub fn formula(&self, vocab: &Vocabulary, vars: &[String]) -> Formula {
        assert_eq!(vars.len(), self.k);
        let atoms = table_atoms(vocab, self.k, DEFAULT_MAX_TABLE_ATOMS)
            .expect("vocabulary fits the atom budget");
        let parts = atoms
            .iter()
            .zip(&self.bits)
            .map(|(atom, &pos)| {
                let f = atom.formula(vars);
                if pos {
                    f
                } else {
                    Formula::not(f)
                }
            })
            .collect();
        Formula::conjoin(parts, &vars[0])
    }

    pub fn render(&self, vocab: &Vocabulary) -> String {
        let vars: Vec<String> = (1..=self.k).map(|i| format!("v{i}")).collect();
        self.formula(vocab, &vars).to_string()
    }

    /// The table of the permuted tuple: `perm[i]` gives the old index of
    /// the element now in position `i`.
    pub fn permuted(&self, vocab: &Vocabulary, perm: &[usize]) -> KTable {
        let atoms = table_atoms(vocab, self.k, DEFAULT_MAX_TABLE_ATOMS)
            .expect("vocabulary fits the atom budget");
        let index: BTreeMap<&TableAtom, usize> =
            atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let bits = atoms
            .iter()
            .map(|atom| {
                let old_atom = TableAtom {
                    rel: atom.rel.clone(),
                    pattern: atom.pattern.iter().map(|&v| perm[v]).collect(),
                };
                self.bits[index[&old_atom]]
            })
            .collect();
        KTable { k: self.k, bits }
    }

    /// Writes the table into a structure over the given distinct elements.
    pub fn imprint(&self, st: &mut FiniteStructure, tuple: &[Element]) {
        assert_eq!(tuple.len(), self.k);
        let vocab = st.vocabulary();
        let atoms = table_atoms(&vocab, self.k, DEFAULT_MAX_TABLE_ATOMS)
            .expect("vocabulary fits the atom budget");
        for (atom, &pos) in atoms.iter().zip(&self.bits) {
            let args: Vec<Element> = atom.pattern.iter().map(|&i| tuple[i]).collect();
            if pos {
                st.add_tuple(&atom.rel, args).expect("table fits vocabulary");
            } else {
                st.remove_tuple(&atom.rel, &args);
            }
        }
    }
}

/// Extremal kind for [`extremal_realization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    Min,
    Max,
}

/// The defining formula of a minimal or maximal realization of `alpha`:
/// `alpha(x) & forall y ((alpha(y) & x != y) -> x < y)` and its dual.
pub fn extremal_formula(
    vocab: &Vocabulary,
    alpha: OneType,
    kind: Extremal,
) -> Formula {
    let order = |a: &str, b: &str| Formula::atom(crate::vocab::ORDER, &[a, b]);
    let cmp = match kind {
        Extremal::Min => order("x", "y"),
        Extremal::Max => order("y", "x"),
    };
    Formula::and(
        alpha.formula(vocab, "x"),
        Formula::forall(
            &["y"],
            Formula::implies(
                Formula::and(alpha.formula(vocab, "y"), Formula::not(Formula::eq("x", "y"))),
                cmp,
            ),
        ),
    )
}

/// Finds an element satisfying the extremal formula by direct evaluation,
/// valid even when `<` is not an order. Returns the least such element.
pub fn extremal_realization(
    st: &FiniteStructure,
    alpha: OneType,
    kind: Extremal,
) -> Option<Element> {
    let order_holds = |a: Element, b: Element| st.holds(crate::vocab::ORDER, &[a, b]);
    'cand: for a in st.elements() {
        if OneType::of(st, a).ok()? != alpha {
            continue;
        }
        for b in st.elements() {
            if b == a || OneType::of(st, b).ok()? != alpha {
                continue;
            }
            let ok = match kind {
                Extremal::Min => order_holds(a, b),
                Extremal::Max => order_holds(b, a),
            };
            if !ok {
                continue 'cand;
            }
        }
        return Some(a);
    }
    None
}

/// Royalty classification of a structure against a normal-form sentence:
/// a realized type with at most `width - 1` realizations is royal, its
/// realizations are kings, everything else is a pawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoyaltyReport {
    /// Realization counts per realized type, capped at the width.
    pub per_type: BTreeMap<OneType, usize>,
    pub kings: BTreeSet<Element>,
    pub pawns: BTreeSet<Element>,
    pub royal_types: BTreeSet<OneType>,
}

pub fn classify_royalty(
    st: &FiniteStructure,
    nf: &NormalFormSentence,
) -> Result<RoyaltyReport, TypesError> {
    if !st.vocabulary().extends(&nf.vocabulary) {
        return Err(TypesError::VocabularyMismatch);
    }
    classify_royalty_with_width(st, nf.width())
}

pub fn classify_royalty_with_width(
    st: &FiniteStructure,
    width: usize,
) -> Result<RoyaltyReport, TypesError> {
    let mut counts: BTreeMap<OneType, usize> = BTreeMap::new();
    let mut type_of: Vec<OneType> = Vec::with_capacity(st.domain_size);
    for a in st.elements() {
        let t = OneType::of(st, a)?;
        *counts.entry(t).or_insert(0) += 1;
        type_of.push(t);
    }
    let royal_types: BTreeSet<OneType> = counts
        .iter()
        .filter(|(_, &c)| c <= width.saturating_sub(1))
        .map(|(&t, _)| t)
        .collect();
    let mut kings = BTreeSet::new();
    let mut pawns = BTreeSet::new();
    for a in st.elements() {
        if royal_types.contains(&type_of[a]) {
            kings.insert(a);
        } else {
            pawns.insert(a);
        }
    }
    let per_type = counts
        .into_iter()
        .map(|(t, c)| (t, c.min(width)))
        .collect();
    Ok(RoyaltyReport {
        per_type,
        kings,
        pawns,
        royal_types,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::structures::{model_check, Assignment};

    #[test]
    fn one_type_counts() {
        let v = Vocabulary::from_pairs([("P", 1), ("<", 2)]).unwrap();
        assert_eq!(enumerate_one_types(&v, 1 << 20).unwrap().len(), 4);
        let empty = Vocabulary::new();
        assert_eq!(enumerate_one_types(&empty, 1 << 20).unwrap().len(), 1);
    }

    #[test]
    fn example_one_type_is_enumerated() {
        // over {R/3, </2, P/1}: the type with ~R(x,x,x), P(x), ~(x<x)
        let v = Vocabulary::from_pairs([("R", 3), ("<", 2), ("P", 1)]).unwrap();
        let types = enumerate_one_types(&v, 1 << 20).unwrap();
        let mut st = FiniteStructure::new(&v, 1);
        st.add_tuple("P", vec![0]).unwrap();
        let t = OneType::of(&st, 0).unwrap();
        assert!(types.contains(&t));
        assert!(t.order_irreflexive(&v));
        let rendered = t.render(&v);
        assert_eq!(rendered, "~(v1 < v1) & P(v1) & ~R(v1,v1,v1) & v1 = v1");
    }

    #[test]
    fn every_element_realizes_exactly_one_type() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v = Vocabulary::from_pairs([("P", 1), ("<", 2)]).unwrap();
        let types = enumerate_one_types(&v, 1 << 20).unwrap();
        for _ in 0..20 {
            let size = rng.gen_range(1..=4);
            let mut st = FiniteStructure::new(&v, size);
            for a in 0..size {
                if rng.gen_bool(0.5) {
                    st.add_tuple("P", vec![a]).unwrap();
                }
                for b in 0..size {
                    if rng.gen_bool(0.3) {
                        st.add_tuple("<", vec![a, b]).unwrap();
                    }
                }
            }
            for a in st.elements() {
                let t = OneType::of(&st, a).unwrap();
                let matching: Vec<_> = types
                    .iter()
                    .filter(|ty| {
                        let f = ty.formula(&v, "x");
                        let mut asg = Assignment::new();
                        asg.insert("x".into(), a);
                        model_check(&st, &f, &asg).unwrap()
                    })
                    .collect();
                assert_eq!(matching, vec![&t]);
            }
        }
    }

    #[test]
    fn example_two_table_reads_back() {
        // 2-table {Rxxy, Rxyx, ~Ryxx, Ryyx, ~Ryxy, Rxyy, x<y, ~(y<x)}
        let v = Vocabulary::from_pairs([("R", 3), ("<", 2), ("P", 1)]).unwrap();
        let mut st = FiniteStructure::new(&v, 2);
        let (a, b) = (0usize, 1usize);
        st.add_tuple("R", vec![a, a, b]).unwrap();
        st.add_tuple("R", vec![a, b, a]).unwrap();
        st.add_tuple("R", vec![b, b, a]).unwrap();
        st.add_tuple("R", vec![a, b, b]).unwrap();
        st.add_tuple("<", vec![a, b]).unwrap();
        let table = KTable::of(&st, &[a, b]).unwrap();
        // check through the defining formula
        let f = table.formula(&v, &["x".into(), "y".into()]);
        let mut asg = Assignment::new();
        asg.insert("x".into(), a);
        asg.insert("y".into(), b);
        assert!(model_check(&st, &f, &asg).unwrap());
        // and bit-level: atoms are sorted by relation then pattern
        let atoms = table_atoms(&v, 2, 4096).unwrap();
        for (atom, bit) in atoms.iter().zip(&table.bits) {
            let args: Vec<usize> = atom.pattern.iter().map(|&i| [a, b][i]).collect();
            assert_eq!(st.holds(&atom.rel, &args), *bit);
        }
    }

    #[test]
    fn all_negative_table_for_empty_relations() {
        let v = Vocabulary::from_pairs([("S", 2), ("<", 2)]).unwrap();
        let st = FiniteStructure::new(&v, 3);
        let t = KTable::of(&st, &[0, 2]).unwrap();
        assert!(t.bits.iter().all(|&b| !b));
    }

    #[test]
    fn tables_are_permutation_covariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let v = Vocabulary::from_pairs([("S", 2), ("<", 2), ("R", 3)]).unwrap();
        for _ in 0..15 {
            let size = 3;
            let mut st = FiniteStructure::new(&v, size);
            for (name, arity) in v.iter() {
                for tuple in (0..arity).map(|_| 0..size).multi_cartesian_product() {
                    if rng.gen_bool(0.4) {
                        st.add_tuple(name, tuple).unwrap();
                    }
                }
            }
            let ab = KTable::of(&st, &[0, 1]).unwrap();
            let ba = KTable::of(&st, &[1, 0]).unwrap();
            assert_eq!(ab.permuted(&v, &[1, 0]), ba);
            let abc = KTable::of(&st, &[0, 1, 2]).unwrap();
            let cab = KTable::of(&st, &[2, 0, 1]).unwrap();
            // position i of (c,a,b) holds the element from old position perm[i]
            assert_eq!(abc.permuted(&v, &[2, 0, 1]), cab);
        }
    }

    #[test]
    fn table_of_rejects_repeats() {
        let v = Vocabulary::from_pairs([("<", 2)]).unwrap();
        let st = FiniteStructure::new(&v, 3);
        assert!(matches!(
            KTable::of(&st, &[1, 1]),
            Err(TypesError::Repeats(_))
        ));
    }

    #[test]
    fn extremal_on_linear_order() {
        let v = Vocabulary::from_pairs([("<", 2)]).unwrap();
        let mut st = FiniteStructure::new(&v, 3);
        st.set_canonical_order("<");
        let alpha = OneType::of(&st, 0).unwrap();
        assert_eq!(extremal_realization(&st, alpha, Extremal::Min), Some(0));
        assert_eq!(extremal_realization(&st, alpha, Extremal::Max), Some(2));
    }

    #[test]
    fn no_extremal_without_order_edges() {
        let v = Vocabulary::from_pairs([("<", 2)]).unwrap();
        let st = FiniteStructure::new(&v, 2);
        let alpha = OneType::of(&st, 0).unwrap();
        assert_eq!(extremal_realization(&st, alpha, Extremal::Min), None);
        assert_eq!(extremal_realization(&st, alpha, Extremal::Max), None);
    }

    #[test]
    fn extremal_matches_formula_evaluation_on_random_relations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let v = Vocabulary::from_pairs([("P", 1), ("<", 2)]).unwrap();
        for _ in 0..40 {
            let size = rng.gen_range(1..=4);
            let mut st = FiniteStructure::new(&v, size);
            for a in 0..size {
                if rng.gen_bool(0.5) {
                    st.add_tuple("P", vec![a]).unwrap();
                }
                for b in 0..size {
                    if rng.gen_bool(0.5) {
                        st.add_tuple("<", vec![a, b]).unwrap();
                    }
                }
            }
            for alpha in enumerate_one_types(&v, 16).unwrap() {
                for kind in [Extremal::Min, Extremal::Max] {
                    let f = extremal_formula(&v, alpha, kind);
                    let brute = st.elements().find(|&a| {
                        let mut asg = Assignment::new();
                        asg.insert("x".into(), a);
                        model_check(&st, &f, &asg).unwrap()
                    });
                    assert_eq!(extremal_realization(&st, alpha, kind), brute);
                }
            }
        }
    }

    #[test]
    fn royalty_on_exactly_three_p() {
        use crate::normal_form::validate_normal_form;
        // width-4 sentence forcing exactly three P elements
        let text = "(exists x1 x2 x3 . x1 != x2 & x1 != x3 & x2 != x3 & P(x1) & P(x2) & P(x3)) \
                    & (forall x1 x2 x3 x4 . (P(x1) & P(x2) & P(x3) & P(x4)) -> \
                    (x1 = x2 | x1 = x3 | x1 = x4 | x2 = x3 | x2 = x4 | x3 = x4))";
        let f = parse_formula(text, None).unwrap();
        let nf = validate_normal_form(&f).unwrap();
        assert_eq!(nf.width(), 4);
        let v = nf.vocabulary.clone();
        // four non-P elements so their type is realized at least width times
        let mut st = FiniteStructure::new(&v.with_order(), 7);
        for a in 0..3 {
            st.add_tuple("P", vec![a]).unwrap();
        }
        let report = classify_royalty_with_width(&st, nf.width()).unwrap();
        let p_type = OneType::of(&st, 0).unwrap();
        assert!(report.royal_types.contains(&p_type));
        assert_eq!(report.kings, BTreeSet::from([0, 1, 2]));
        assert_eq!(report.pawns, BTreeSet::from([3, 4, 5, 6]));
    }

    #[test]
    fn no_kings_when_types_abound() {
        let v = Vocabulary::from_pairs([("P", 1), ("<", 2)]).unwrap();
        let st = FiniteStructure::new(&v, 4);
        let report = classify_royalty_with_width(&st, 2).unwrap();
        assert!(report.kings.is_empty());
        assert_eq!(report.pawns.len(), 4);
    }

    #[test]
    fn king_bound_holds_on_random_structures() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let v = Vocabulary::from_pairs([("P", 1), ("Q", 1), ("<", 2)]).unwrap();
        for _ in 0..30 {
            let size = rng.gen_range(1..=6);
            let mut st = FiniteStructure::new(&v, size);
            for a in 0..size {
                for p in ["P", "Q"] {
                    if rng.gen_bool(0.5) {
                        st.add_tuple(p, vec![a]).unwrap();
                    }
                }
            }
            st.set_canonical_order("<");
            for width in 2..=4usize {
                let r = classify_royalty_with_width(&st, width).unwrap();
                assert!(r.kings.len() <= (width - 1) * (1 << v.len()));
                assert_eq!(
                    r.kings.union(&r.pawns).count(),
                    st.domain_size,
                    "kings and pawns partition the domain"
                );
                // royalty is monotone in the width
                let r2 = classify_royalty_with_width(&st, width + 1).unwrap();
                assert!(r.kings.is_subset(&r2.kings));
            }
        }
    }
}
