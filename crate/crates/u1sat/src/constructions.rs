//! Constructions on concrete finite ordered models: cloning extensions,
//! courts, canonical partitions, canonical admissibility tuples and the
//! expansion that interprets the fresh axiom predicates.

use std::collections::{BTreeMap, BTreeSet};
use itertools::Itertools;
use thiserror::Error;

use crate::admissibility::{check_admissibility, size_bounds, AdmissibilityTuple};
use crate::normal_form::{ExistentialConjunct, NormalFormSentence};
use crate::structures::{model_check, Assignment, Element, FiniteStructure, StructureClass};
use crate::types_tables::{classify_royalty_with_width, enumerate_one_types, OneType};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("input structure does not satisfy the sentence")]
    NotAModel,
    #[error("input structure is not linearly ordered")]
    NotOrdered,
    #[error("cloning requires c >= 3, got {0}")]
    BadCloneCount(usize),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("size bound violated: {0}")]
    BoundViolated(String),
}

/// Bookkeeping of a cloning extension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneMetadata {
    /// Old element index to new element index.
    pub embed: Vec<Element>,
    /// For each original pawn (new index), its clone interval in order:
    /// one fresh element before the pawn, the pawn, the rest after.
    pub clone_intervals: BTreeMap<Element, Vec<Element>>,
    /// New element index to original element index (clones map to their
    /// pawn).
    pub origin: Vec<Element>,
}

impl CloneMetadata {
    pub fn is_clone(&self, e: Element) -> bool {
        self.embed[self.origin[e]] != e
    }
}

fn require_model(
    st: &FiniteStructure,
    nf: &NormalFormSentence,
) -> Result<(), ConstructionError> {
    if !crate::structures::class_membership(st, crate::vocab::ORDER, StructureClass::Ofin) {
        return Err(ConstructionError::NotOrdered);
    }
    let ok = model_check(st, &nf.sentence(), &Assignment::new())
        .map_err(|e| ConstructionError::Budget(e.to_string()))?;
    if !ok {
        return Err(ConstructionError::NotAModel);
    }
    Ok(())
}

/// Position of each element in the linear order of `<`.
fn order_positions(st: &FiniteStructure) -> Vec<usize> {
    let n = st.domain_size;
    let mut pos = vec![0usize; n];
    for (a, slot) in pos.iter_mut().enumerate() {
        *slot = (0..n)
            .filter(|&b| st.holds(crate::vocab::ORDER, &[b, a]))
            .count();
    }
    pos
}

/// Builds the c-cloning extension: every pawn gains `c - 1` same-type
/// clones forming an interval around it (one before, the rest after).
/// Tables over one clone and original elements away from its pawn are
/// copied from the pawn; the remaining mixed tables are filled from
/// representative tuples of the base model; supports larger than
/// `min(width, max arity)` stay empty. The result satisfies the sentence
/// whenever the input does.
pub fn cloning_extension(
    base: &FiniteStructure,
    nf: &NormalFormSentence,
    c: usize,
) -> Result<(FiniteStructure, CloneMetadata), ConstructionError> {
    if c < 3 {
        return Err(ConstructionError::BadCloneCount(c));
    }
    require_model(base, nf)?;
    let vocab = base.vocabulary();
    let width = nf.width();
    let m = width.min(vocab.max_arity());
    let royalty = classify_royalty_with_width(base, width)
        .map_err(|e| ConstructionError::Budget(e.to_string()))?;

    // lay out the new domain in order: p0, p, p2..p_{c-1} per pawn
    let pos = order_positions(base);
    let mut old_in_order: Vec<Element> = (0..base.domain_size).collect();
    old_in_order.sort_by_key(|&a| pos[a]);
    let mut layout: Vec<(Element, bool)> = Vec::new(); // (origin, is_clone)
    for &a in &old_in_order {
        if royalty.pawns.contains(&a) {
            layout.push((a, true));
            layout.push((a, false));
            for _ in 2..c {
                layout.push((a, true));
            }
        } else {
            layout.push((a, false));
        }
    }
    let new_size = layout.len();
    let mut embed = vec![usize::MAX; base.domain_size];
    let mut origin = vec![0usize; new_size];
    for (new, &(old, is_clone)) in layout.iter().enumerate() {
        origin[new] = old;
        if !is_clone {
            embed[old] = new;
        }
    }
    let mut clone_intervals = BTreeMap::new();
    for &p in &royalty.pawns {
        let members: Vec<Element> = (0..new_size).filter(|&e| origin[e] == p).collect();
        clone_intervals.insert(embed[p], members);
    }

    let mut ext = FiniteStructure::new(&vocab, new_size);
    ext.set_canonical_order(crate::vocab::ORDER);

    let type_of_old: Vec<OneType> = (0..base.domain_size)
        .map(|a| OneType::of(base, a).expect("element in range"))
        .collect();
    // representative tuple per type vector: distinct base elements, the
    // pair case additionally respecting the base order
    let base_pos = pos;
    let mut rep_cache: BTreeMap<Vec<OneType>, Option<Vec<Element>>> = BTreeMap::new();
    let mut representative = |types: &[OneType]| -> Option<Vec<Element>> {
        if let Some(r) = rep_cache.get(types) {
            return r.clone();
        }
        let found = if types.len() == 2 {
            let mut hit = None;
            'outer: for &w in &old_in_order {
                for &w2 in &old_in_order {
                    if base_pos[w] < base_pos[w2]
                        && type_of_old[w] == types[0]
                        && type_of_old[w2] == types[1]
                    {
                        hit = Some(vec![w, w2]);
                        break 'outer;
                    }
                }
            }
            hit
        } else {
            let mut used = BTreeSet::new();
            let mut tuple = Vec::with_capacity(types.len());
            let mut ok = true;
            for ty in types {
                match (0..base.domain_size)
                    .find(|e| !used.contains(e) && type_of_old[*e] == *ty)
                {
                    Some(e) => {
                        used.insert(e);
                        tuple.push(e);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            ok.then_some(tuple)
        };
        rep_cache.insert(types.to_vec(), found.clone());
        found
    };

    for (rel, arity) in vocab.iter() {
        if rel == crate::vocab::ORDER {
            continue;
        }
        for tuple in (0..arity).map(|_| 0..new_size).multi_cartesian_product() {
            let support: BTreeSet<Element> = tuple.iter().copied().collect();
            let clones: Vec<Element> = support
                .iter()
                .copied()
                .filter(|&e| embed[origin[e]] != e)
                .collect();
            let holds = if clones.is_empty() {
                let mapped: Vec<Element> = tuple.iter().map(|&e| origin[e]).collect();
                base.holds(rel, &mapped)
            } else if clones.len() == 1
                && support.len() <= m
                && !support.contains(&embed[origin[clones[0]]])
            {
                // cloning stage: substitute the clone by its pawn
                let mapped: Vec<Element> = tuple.iter().map(|&e| origin[e]).collect();
                base.holds(rel, &mapped)
            } else if support.len() <= m {
                completion_holds(
                    base,
                    rel,
                    &tuple,
                    &support,
                    &type_of_old,
                    &origin,
                    &mut representative,
                )
            } else {
                // supports beyond m involving clones stay empty
                false
            };
            if holds {
                ext.add_tuple(rel, tuple).expect("tuple in range");
            }
        }
    }

    let meta = CloneMetadata {
        embed,
        clone_intervals,
        origin,
    };
    Ok((ext, meta))
}

/// Membership via the representative tuple of the support's type vector.
fn completion_holds(
    base: &FiniteStructure,
    rel: &str,
    tuple: &[Element],
    support: &BTreeSet<Element>,
    type_of_old: &[OneType],
    origin: &[Element],
    representative: &mut impl FnMut(&[OneType]) -> Option<Vec<Element>>,
) -> bool {
    let ordered: Vec<Element> = support.iter().copied().collect();
    let types: Vec<OneType> = ordered.iter().map(|&e| type_of_old[origin[e]]).collect();
    let rep = representative(&types)
        .expect("mixed supports use pawn types, realized often enough in the base");
    let index_of: BTreeMap<Element, usize> = ordered
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, i))
        .collect();
    let mapped: Vec<Element> = tuple.iter().map(|&e| rep[index_of[&e]]).collect();
    base.holds(rel, &mapped)
}

/// A court: an induced substructure collecting kings, one free-witness
/// live part per (type, conjunct) pair that has one, and one witness
/// structure per court seed and conjunct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Court {
    /// Court elements as base-model indices, ascending.
    pub elements: Vec<Element>,
    pub kings: BTreeSet<Element>,
    pub free_witness_set: BTreeSet<Element>,
    /// Chosen witness tuples per (seed element, conjunct index).
    pub witness_choice: BTreeMap<(Element, usize), Vec<Element>>,
    /// The induced substructure, renumbered in order.
    pub structure: FiniteStructure,
    /// Pairs (type, conjunct) with a free-live-part witness in the base.
    pub free_pairs: BTreeSet<(OneType, usize)>,
}

/// Least witness tuple for `(a, conjunct)` under lexicographic element
/// order, or None.
pub fn least_witness(
    st: &FiniteStructure,
    conjunct: &ExistentialConjunct,
    a: Element,
) -> Option<Vec<Element>> {
    let vars = conjunct.all_vars();
    let k = conjunct.witness_count;
    let mut asg = Assignment::new();
    asg.insert(vars[0].clone(), a);
    if k == 0 {
        return model_check(st, &conjunct.matrix, &asg)
            .expect("matrix evaluates")
            .then(Vec::new);
    }
    for tuple in (0..k).map(|_| 0..st.domain_size).multi_cartesian_product() {
        for (i, &e) in tuple.iter().enumerate() {
            asg.insert(vars[i + 1].clone(), e);
        }
        if model_check(st, &conjunct.matrix, &asg).expect("matrix evaluates") {
            return Some(tuple);
        }
    }
    None
}

/// Least witness tuple whose live part is free, or None.
pub fn least_free_witness(
    st: &FiniteStructure,
    conjunct: &ExistentialConjunct,
    a: Element,
) -> Option<Vec<Element>> {
    let vars = conjunct.all_vars();
    let mut asg = Assignment::new();
    asg.insert(vars[0].clone(), a);
    if conjunct.witness_count == 0 {
        if model_check(st, &conjunct.matrix, &asg).expect("matrix evaluates") {
            let live = witness_live_elements(conjunct, a, &[]);
            if !live.contains(&a) {
                return Some(Vec::new());
            }
        }
        return None;
    }
    for tuple in (0..conjunct.witness_count)
        .map(|_| 0..st.domain_size)
        .multi_cartesian_product()
    {
        for (j, &e) in tuple.iter().enumerate() {
            asg.insert(vars[j + 1].clone(), e);
        }
        if model_check(st, &conjunct.matrix, &asg).expect("matrix evaluates") {
            let live = witness_live_elements(conjunct, a, &tuple);
            if !live.contains(&a) {
                return Some(tuple);
            }
        }
    }
    None
}

/// The live elements of a witness tuple for a conjunct.
pub fn witness_live_elements(
    conjunct: &ExistentialConjunct,
    a: Element,
    witnesses: &[Element],
) -> BTreeSet<Element> {
    let vars = conjunct.all_vars();
    let mut elems = vec![a];
    elems.extend_from_slice(witnesses);
    crate::formula::live_elements(&conjunct.matrix, &vars, &elems)
        .expect("matrix is quantifier-free")
}

/// Builds a court of the model. Kings and the chosen free-witness live
/// parts seed the set; it is closed by one chosen witness structure per
/// seed and conjunct. Deterministic: all choices take the least tuple.
pub fn build_court(
    base: &FiniteStructure,
    nf: &NormalFormSentence,
) -> Result<Court, ConstructionError> {
    require_model(base, nf)?;
    let vocab = base.vocabulary();
    let width = nf.width();
    let royalty = classify_royalty_with_width(base, width)
        .map_err(|e| ConstructionError::Budget(e.to_string()))?;
    let kings = royalty.kings.clone();

    let types = enumerate_one_types(&vocab, 1 << 20)
        .map_err(|e| ConstructionError::Budget(e.to_string()))?;
    let type_of: Vec<OneType> = (0..base.domain_size)
        .map(|a| OneType::of(base, a).expect("element in range"))
        .collect();

    // one free-witness live part per (type, conjunct) that has one
    let mut free_witness_set = BTreeSet::new();
    let mut free_pairs = BTreeSet::new();
    for alpha in &types {
        for (i, conjunct) in nf.existential.iter().enumerate() {
            let mut found = None;
            for a in base.elements() {
                if type_of[a] != *alpha {
                    continue;
                }
                if let Some(w) = least_free_witness(base, conjunct, a) {
                    found = Some(witness_live_elements(conjunct, a, &w));
                    break;
                }
            }
            if let Some(live) = found {
                free_pairs.insert((*alpha, i));
                free_witness_set.extend(live);
            }
        }
    }

    let mut members: BTreeSet<Element> = kings.union(&free_witness_set).copied().collect();
    let mut witness_choice = BTreeMap::new();
    for a in kings.union(&free_witness_set).copied().collect::<Vec<_>>() {
        for (i, conjunct) in nf.existential.iter().enumerate() {
            let w = least_witness(base, conjunct, a)
                .expect("model satisfies every existential conjunct");
            members.extend(w.iter().copied());
            witness_choice.insert((a, i), w);
        }
    }

    let (structure, elements) = base.induced(&members);
    let (court_bound, _) = size_bounds(nf);
    if members.len() as u128 > court_bound {
        return Err(ConstructionError::BoundViolated(format!(
            "court size {} exceeds 2|phi|^4|alpha| = {court_bound}",
            members.len()
        )));
    }
    Ok(Court {
        elements,
        kings,
        free_witness_set,
        witness_choice,
        structure,
        free_pairs,
    })
}

/// The canonical interval partition of a cloning extension with respect to
/// an embedded court.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalFamily {
    /// Half-open index ranges, ascending and exhaustive.
    pub ranges: Vec<(Element, Element)>,
    /// Realized 1-types per interval.
    pub realized: Vec<BTreeSet<OneType>>,
    /// Court element (extension index) to its singleton interval.
    pub singleton_of: BTreeMap<Element, usize>,
}

impl IntervalFamily {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn interval_of(&self, e: Element) -> usize {
        self.ranges
            .iter()
            .position(|&(lo, hi)| lo <= e && e < hi)
            .expect("element covered by the partition")
    }
}

/// Cuts the extension at court elements (both sides) and at the first and
/// last realization of every non-royal type. Court elements end up in
/// singleton intervals.
pub fn canonical_partition(
    ext: &FiniteStructure,
    court_in_ext: &[Element],
    nf: &NormalFormSentence,
) -> Result<IntervalFamily, ConstructionError> {
    let n = ext.domain_size;
    let width = nf.width();
    let royalty = classify_royalty_with_width(ext, width)
        .map_err(|e| ConstructionError::Budget(e.to_string()))?;
    let mut cuts: BTreeSet<usize> = BTreeSet::new();
    cuts.insert(0);
    cuts.insert(n);
    for &c in court_in_ext {
        cuts.insert(c);
        cuts.insert(c + 1);
    }
    let type_of: Vec<OneType> = (0..n)
        .map(|a| OneType::of(ext, a).expect("element in range"))
        .collect();
    let mut first: BTreeMap<OneType, usize> = BTreeMap::new();
    let mut last: BTreeMap<OneType, usize> = BTreeMap::new();
    for a in 0..n {
        first.entry(type_of[a]).or_insert(a);
        last.insert(type_of[a], a);
    }
    for (ty, &f) in &first {
        if royalty.royal_types.contains(ty) {
            continue;
        }
        cuts.insert(f);
        cuts.insert(last[ty] + 1);
    }
    let cut_list: Vec<usize> = cuts.into_iter().collect();
    let mut ranges = Vec::new();
    for pair in cut_list.windows(2) {
        if pair[0] < pair[1] {
            ranges.push((pair[0], pair[1]));
        }
    }
    let realized: Vec<BTreeSet<OneType>> = ranges
        .iter()
        .map(|&(lo, hi)| (lo..hi).map(|a| type_of[a]).collect())
        .collect();
    let mut singleton_of = BTreeMap::new();
    for &c in court_in_ext {
        let s = ranges
            .iter()
            .position(|&(lo, hi)| lo == c && hi == c + 1)
            .expect("court elements sit in singleton intervals");
        singleton_of.insert(c, s);
    }
    let count_bound = 2 * (court_in_ext.len() + (1usize << nf.vocabulary.len().min(40))) + 1;
    let (_, index_bound) = size_bounds(nf);
    if ranges.len() > count_bound || ranges.len() as u128 > index_bound {
        return Err(ConstructionError::BoundViolated(format!(
            "{} intervals exceed 2(|C|+|alpha|)+1 = {count_bound} or 6|phi|^4|alpha| = {index_bound}",
            ranges.len()
        )));
    }
    Ok(IntervalFamily {
        ranges,
        realized,
        singleton_of,
    })
}

/// Everything the canonical tuple construction produces.
#[derive(Debug, Clone)]
pub struct CanonicalTuple {
    pub tuple: AdmissibilityTuple,
    pub extension: FiniteStructure,
    pub meta: CloneMetadata,
    pub court: Court,
    pub family: IntervalFamily,
}

/// The number of clones per pawn used when deriving canonical tuples.
///
/// Three suffices for satisfaction-preserving cloning, but the axiom
/// demanding two same-type points inside a non-court interval that retires
/// its type needs the trailing clone run of a court pawn to have length
/// two, hence four.
pub const CANONICAL_CLONES: usize = 4;

/// Derives the canonical admissibility tuple of a finite ordered model:
/// cloning extension, court, partition, then the seven components. The
/// result is admissible for all three classes.
pub fn canonical_admissibility_tuple(
    base: &FiniteStructure,
    nf: &NormalFormSentence,
) -> Result<CanonicalTuple, ConstructionError> {
    let nf = nf.with_order();
    let (extension, meta) = cloning_extension(base, &nf, CANONICAL_CLONES)?;
    let court = build_court(base, &nf)?;
    let court_in_ext: Vec<Element> = court.elements.iter().map(|&c| meta.embed[c]).collect();
    let family = canonical_partition(&extension, &court_in_ext, &nf)?;

    let width = nf.width();
    let royalty = classify_royalty_with_width(&extension, width)
        .map_err(|e| ConstructionError::Budget(e.to_string()))?;
    let realized_types: BTreeSet<OneType> = (0..extension.domain_size)
        .map(|a| OneType::of(&extension, a).expect("element in range"))
        .collect();

    let delta: Vec<usize> = court_in_ext
        .iter()
        .map(|c| family.singleton_of[c])
        .collect();

    // free pairs are computed on the extension; cloning keeps them equal
    // to the base model's
    let mut free_pairs = BTreeSet::new();
    for (i, conjunct) in nf.existential.iter().enumerate() {
        for a in extension.elements() {
            let alpha = OneType::of(&extension, a).expect("element in range");
            if free_pairs.contains(&(alpha, i)) {
                continue;
            }
            if least_free_witness(&extension, conjunct, a).is_some() {
                free_pairs.insert((alpha, i));
            }
        }
    }

    let tuple = AdmissibilityTuple {
        vocab: nf.vocabulary.clone(),
        court: court.structure.clone(),
        interval_types: family.realized.clone(),
        royal: royalty.royal_types.iter().copied().collect(),
        bottom: realized_types.clone(),
        top: realized_types,
        delta,
        free_pairs,
    };
    tuple
        .check_structural(&nf)
        .map_err(|e| ConstructionError::BoundViolated(e.to_string()))?;
    debug_assert!(check_admissibility(&tuple).admissible_for(StructureClass::Ofin));
    Ok(CanonicalTuple {
        tuple,
        extension,
        meta,
        court,
        family,
    })
}

/// Interprets the fresh predicates over the cloning extension: `K` as the
/// kings, `D` as the court's free-witness set, the bottom and top markers
/// as minimal and maximal realizations per type, and one `U_s` per
/// interval. The result satisfies the generated axiom sentence.
pub fn expand_with_axiom_predicates(
    canonical: &CanonicalTuple,
    nf: &NormalFormSentence,
) -> FiniteStructure {
    let nf = nf.with_order();
    let ext = &canonical.extension;
    let names = crate::axioms::fresh_symbol_names(&nf.vocabulary, canonical.family.len());
    let vocab2 = crate::axioms::extended_vocabulary(&nf.vocabulary, &names);
    let mut out = ext.expand(&vocab2);

    let width = nf.width();
    let royalty = classify_royalty_with_width(ext, width).expect("census fits");
    for &k in &royalty.kings {
        out.add_tuple(&names.kings, vec![k]).expect("king in range");
    }
    for &d in &canonical.court.free_witness_set {
        out.add_tuple(&names.free_set, vec![canonical.meta.embed[d]])
            .expect("witness in range");
    }
    let type_of: Vec<OneType> = (0..ext.domain_size)
        .map(|a| OneType::of(ext, a).expect("element in range"))
        .collect();
    let mut first: BTreeMap<OneType, Element> = BTreeMap::new();
    let mut last: BTreeMap<OneType, Element> = BTreeMap::new();
    for a in ext.elements() {
        first.entry(type_of[a]).or_insert(a);
        last.insert(type_of[a], a);
    }
    for &a in first.values() {
        out.add_tuple(&names.bottom, vec![a]).expect("in range");
    }
    for &a in last.values() {
        out.add_tuple(&names.top, vec![a]).expect("in range");
    }
    for (s, &(lo, hi)) in canonical.family.ranges.iter().enumerate() {
        for e in lo..hi {
            out.add_tuple(&names.intervals[s], vec![e])
                .expect("in range");
        }
    }
    out
}

/// True when the structure satisfies the sentence.
pub fn holds_sentence(st: &FiniteStructure, nf: &NormalFormSentence) -> bool {
    model_check(st, &nf.sentence(), &Assignment::new()).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::to_normal_form;
    use crate::parser::parse_formula;
    use crate::structures::enumerate_ordered_structures;
    use crate::types_tables::{extremal_realization, Extremal};

    fn nf_of(text: &str) -> NormalFormSentence {
        to_normal_form(&parse_formula(text, None).unwrap())
            .unwrap()
            .with_order()
    }

    fn chain_with_p(size: usize, p: &[usize]) -> FiniteStructure {
        let v = crate::vocab::Vocabulary::from_pairs([("P", 1), ("<", 2)]).unwrap();
        let mut st = FiniteStructure::new(&v, size);
        st.set_canonical_order("<");
        for &a in p {
            st.add_tuple("P", vec![a]).unwrap();
        }
        st
    }

    #[test]
    fn no_pawns_means_identity_extension() {
        // width 2, both types realized once: everything royal
        let nf = nf_of("forall x . exists y . x < y | P(x)");
        let st = chain_with_p(2, &[1]);
        let (ext, meta) = cloning_extension(&st, &nf, 3).unwrap();
        assert_eq!(ext.domain_size, st.domain_size);
        assert!(meta.clone_intervals.is_empty());
    }

    #[test]
    fn two_pawns_grow_by_four() {
        let nf = nf_of("forall x . exists y . x < y | P(x)");
        // 0,1 share the non-P type realized twice = width, so both are pawns
        let st = chain_with_p(3, &[2]);
        let (ext, meta) = cloning_extension(&st, &nf, 3).unwrap();
        assert_eq!(ext.domain_size, 3 + 2 * 2);
        assert_eq!(meta.clone_intervals.len(), 2);
        for members in meta.clone_intervals.values() {
            assert_eq!(members.len(), 3);
            for w in members.windows(2) {
                assert_eq!(w[1], w[0] + 1, "clone interval is contiguous");
            }
        }
    }

    #[test]
    fn cloning_preserves_satisfaction_on_samples() {
        let sentences = [
            "forall x . exists y . x < y | P(x)",
            "(forall x . exists y . P(y)) & (forall x y . ~S(x,y) | x < y)",
            "forall x . exists y . S(x,y) | P(x) | ~P(x)",
        ];
        for text in sentences {
            let nf = nf_of(text);
            let vocab = nf.vocabulary.with_order();
            let mut tried = 0;
            for st in enumerate_ordered_structures(&vocab, 3, true, 1 << 20).unwrap() {
                if !holds_sentence(&st, &nf) {
                    continue;
                }
                tried += 1;
                if tried > 25 {
                    break;
                }
                let (ext, meta) = cloning_extension(&st, &nf, 3).unwrap();
                assert!(holds_sentence(&ext, &nf), "failed on {st}");
                // same realized types and royal counts
                let before: BTreeSet<OneType> = st
                    .elements()
                    .map(|a| OneType::of(&st, a).unwrap())
                    .collect();
                let after: BTreeSet<OneType> = ext
                    .elements()
                    .map(|a| OneType::of(&ext, a).unwrap())
                    .collect();
                assert_eq!(before, after);
                let rb = classify_royalty_with_width(&st, nf.width()).unwrap();
                let ra = classify_royalty_with_width(&ext, nf.width()).unwrap();
                assert_eq!(rb.royal_types, ra.royal_types);
                assert_eq!(rb.kings.len(), ra.kings.len());
                // cloned pawns never become extremal realizations
                for &p in meta.clone_intervals.keys() {
                    let ty = OneType::of(&ext, p).unwrap();
                    assert_ne!(extremal_realization(&ext, ty, Extremal::Min), Some(p));
                    assert_ne!(extremal_realization(&ext, ty, Extremal::Max), Some(p));
                }
            }
            assert!(tried > 0, "no models at desk scale for {text}");
        }
    }

    #[test]
    fn court_contains_kings_and_free_set() {
        let nf = nf_of("forall x . exists y . x < y | P(x)");
        let st = chain_with_p(4, &[3]);
        let court = build_court(&st, &nf).unwrap();
        for k in &court.kings {
            assert!(court.elements.contains(k));
        }
        for d in &court.free_witness_set {
            assert!(court.elements.contains(d));
        }
    }

    #[test]
    fn court_of_purely_universal_sentence_is_the_kings() {
        let nf = nf_of("forall x y . ~S(x,y) | x < y");
        let st = {
            let v = crate::vocab::Vocabulary::from_pairs([("S", 2), ("<", 2)]).unwrap();
            let mut st = FiniteStructure::new(&v, 2);
            st.set_canonical_order("<");
            st
        };
        let court = build_court(&st, &nf).unwrap();
        assert_eq!(
            court.elements.iter().copied().collect::<BTreeSet<_>>(),
            court.kings
        );
    }

    #[test]
    fn partition_is_ordered_and_exhaustive() {
        let nf = nf_of("forall x . exists y . x < y | P(x)");
        for st in
            enumerate_ordered_structures(&nf.vocabulary.with_order(), 3, true, 1 << 20).unwrap()
        {
            if !holds_sentence(&st, &nf) {
                continue;
            }
            let canonical = canonical_admissibility_tuple(&st, &nf).unwrap();
            let family = &canonical.family;
            let mut covered = 0;
            for (i, &(lo, hi)) in family.ranges.iter().enumerate() {
                assert!(lo < hi);
                covered += hi - lo;
                if i > 0 {
                    assert_eq!(family.ranges[i - 1].1, lo);
                }
            }
            assert_eq!(covered, canonical.extension.domain_size);
            for (c, s) in &family.singleton_of {
                let (lo, hi) = family.ranges[*s];
                assert_eq!((lo, hi), (*c, c + 1));
            }
        }
    }

    #[test]
    fn canonical_tuple_is_admissible_for_every_class() {
        let nf = nf_of("forall x . exists y . x < y | P(x)");
        let mut tried = 0;
        for st in
            enumerate_ordered_structures(&nf.vocabulary.with_order(), 3, true, 1 << 20).unwrap()
        {
            if !holds_sentence(&st, &nf) {
                continue;
            }
            tried += 1;
            if tried > 20 {
                break;
            }
            let canonical = canonical_admissibility_tuple(&st, &nf).unwrap();
            let report = check_admissibility(&canonical.tuple);
            assert!(
                report.admissible_for(StructureClass::Ofin),
                "conditions {:?} notes {:?}",
                report.conditions,
                report.notes
            );
        }
        assert!(tried > 0);
    }

    #[test]
    fn singleton_model_gives_singleton_intervals() {
        let nf = nf_of("forall x1 x2 . x1 = x1");
        let st = chain_with_p(1, &[]);
        let canonical = canonical_admissibility_tuple(&st, &nf).unwrap();
        assert_eq!(canonical.family.len(), 1);
        assert_eq!(canonical.tuple.delta.len(), 1);
        assert!(canonical.tuple.free_pairs.is_empty());
    }

    #[test]
    fn empty_live_parts_count_as_free() {
        // the matrix x = y1 has no live variables, so its empty live part
        // does not contain the spectator and the pair enters F
        let nf = nf_of("forall x . exists y . x = y");
        let st = chain_with_p(1, &[]);
        let canonical = canonical_admissibility_tuple(&st, &nf).unwrap();
        assert_eq!(canonical.tuple.free_pairs.len(), 1);
        // while a matrix whose live set contains the spectator never
        // produces a free witness
        let nf2 = nf_of("forall x . exists y . x < y | P(x)");
        let st2 = chain_with_p(2, &[1]);
        let canonical2 = canonical_admissibility_tuple(&st2, &nf2).unwrap();
        assert!(canonical2.tuple.free_pairs.is_empty());
    }
}
