//! Generation of the pseudo-ordering axiom sentence for an admissibility
//! tuple: sixteen groups of normal-form conjuncts over the vocabulary
//! extended with `K`, `D`, bottom and top markers, and one interval
//! predicate per index. General (unordered) satisfiability of the output
//! is equivalent to ordered satisfiability of the input sentence.

use std::collections::BTreeSet;
use itertools::Itertools;
use thiserror::Error;

use crate::admissibility::{derived_boundary_sets, AdmissibilityTuple};
use crate::formula::Formula;
use crate::normal_form::{ExistentialConjunct, NormalFormSentence, UniversalConjunct};
use crate::types_tables::{enumerate_one_types, KTable, OneType};
use crate::vocab::Vocabulary;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AxiomsError {
    #[error("tuple vocabulary differs from the sentence vocabulary")]
    VocabularyMismatch,
    #[error("type enumeration budget exceeded")]
    Budget,
}

/// Names of the fresh unary predicates, collision-free against the base
/// vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreshNames {
    pub kings: String,
    pub free_set: String,
    pub bottom: String,
    pub top: String,
    pub intervals: Vec<String>,
}

fn uncollide(vocab: &Vocabulary, base: &str) -> String {
    let mut name = base.to_string();
    while vocab.contains(&name) {
        name.push('_');
    }
    name
}

pub fn fresh_symbol_names(vocab: &Vocabulary, index: usize) -> FreshNames {
    FreshNames {
        kings: uncollide(vocab, "K"),
        free_set: uncollide(vocab, "D"),
        bottom: uncollide(vocab, "Pbot"),
        top: uncollide(vocab, "Ptop"),
        intervals: (1..=index)
            .map(|s| uncollide(vocab, &format!("U{s}")))
            .collect(),
    }
}

/// The base vocabulary extended with the fresh unary predicates.
pub fn extended_vocabulary(vocab: &Vocabulary, names: &FreshNames) -> Vocabulary {
    let mut v = vocab.clone();
    for n in [&names.kings, &names.free_set, &names.bottom, &names.top] {
        v.declare(n.clone(), 1).expect("fresh unary symbol");
    }
    for u in &names.intervals {
        v.declare(u.clone(), 1).expect("fresh unary symbol");
    }
    v
}

/// The generated sentence, its vocabulary data and per-conjunct axiom
/// numbers (1..=16), parallel to the sentence's conjunct lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomsOutput {
    pub sentence: NormalFormSentence,
    pub names: FreshNames,
    pub existential_axiom: Vec<usize>,
    pub universal_axiom: Vec<usize>,
}

impl AxiomsOutput {
    /// Conjuncts of one axiom group as standalone sentences.
    pub fn group(&self, axiom: usize) -> Vec<Formula> {
        let mut out = Vec::new();
        for (c, &a) in self
            .sentence
            .existential
            .iter()
            .zip(&self.existential_axiom)
        {
            if a == axiom {
                out.push(c.sentence());
            }
        }
        for (c, &a) in self.sentence.universal.iter().zip(&self.universal_axiom) {
            if a == axiom {
                out.push(c.sentence());
            }
        }
        out
    }

    /// Rendering with one conjunct per line, each preceded by a comment
    /// naming its axiom group. The text reparses as a single formula.
    pub fn render_annotated(&self) -> String {
        let mut parts: Vec<(usize, String)> = Vec::new();
        for (c, &a) in self
            .sentence
            .existential
            .iter()
            .zip(&self.existential_axiom)
        {
            parts.push((a, format!("({})", c.sentence())));
        }
        for (c, &a) in self.sentence.universal.iter().zip(&self.universal_axiom) {
            parts.push((a, format!("({})", c.sentence())));
        }
        parts.sort_by_key(|(a, _)| *a);
        let mut out = String::new();
        for (i, (a, text)) in parts.iter().enumerate() {
            out.push_str(&format!("# axiom {a}\n"));
            out.push_str(text);
            if i + 1 < parts.len() {
                out.push_str(" &\n");
            } else {
                out.push('\n');
            }
        }
        out
    }
}

struct Emitter {
    existential: Vec<ExistentialConjunct>,
    universal: Vec<UniversalConjunct>,
    existential_axiom: Vec<usize>,
    universal_axiom: Vec<usize>,
}

impl Emitter {
    fn push_e(&mut self, axiom: usize, witness_count: usize, matrix: Formula) {
        self.existential.push(ExistentialConjunct {
            witness_count,
            matrix: matrix.desugar(),
        });
        self.existential_axiom.push(axiom);
    }

    fn push_u(&mut self, axiom: usize, var_count: usize, matrix: Formula) {
        self.universal.push(UniversalConjunct {
            var_count,
            matrix: matrix.desugar(),
        });
        self.universal_axiom.push(axiom);
    }
}

fn unary(rel: &str, var: &str) -> Formula {
    Formula::Atom {
        rel: rel.to_string(),
        args: vec![var.to_string()],
    }
}

fn less(a: &str, b: &str) -> Formula {
    Formula::atom(crate::vocab::ORDER, &[a, b])
}

/// Emits the sixteen pseudo-ordering axiom groups for the tuple. The
/// original sentence is group 1. Every existential conjunct is written in
/// the explicit-spectator shape, so the output validates as a normal-form
/// sentence and stays inside the fragment.
pub fn generate_pseudo_ordering_axioms(
    tuple: &AdmissibilityTuple,
    nf: &NormalFormSentence,
) -> Result<AxiomsOutput, AxiomsError> {
    let nf = nf.with_order();
    if tuple.vocab != nf.vocabulary {
        return Err(AxiomsError::VocabularyMismatch);
    }
    let vocab = &nf.vocabulary;
    let n = nf.width();
    let r = vocab.max_arity();
    let m = n.min(r);
    let index = tuple.index();
    let names = fresh_symbol_names(vocab, index);
    let all_types = enumerate_one_types(vocab, 1 << 20).map_err(|_| AxiomsError::Budget)?;
    let (minus, plus) = derived_boundary_sets(tuple);
    let union = tuple.union_types();
    let delta_image: BTreeSet<usize> = tuple.delta_image();

    let mut em = Emitter {
        existential: Vec::new(),
        universal: Vec::new(),
        existential_axiom: Vec::new(),
        universal_axiom: Vec::new(),
    };

    // 1: the sentence itself
    for c in &nf.existential {
        em.push_e(1, c.witness_count, c.matrix.clone());
    }
    for c in &nf.universal {
        em.push_u(1, c.var_count, c.matrix.clone());
    }

    // 2: the interval predicates partition the universe
    for u in &names.intervals {
        em.push_e(2, 1, unary(u, "y1"));
    }
    let partition = Formula::disjoin(
        (0..index)
            .map(|s| {
                let mut conj = vec![unary(&names.intervals[s], "x1")];
                for (t, u) in names.intervals.iter().enumerate() {
                    if t != s {
                        conj.push(Formula::not(unary(u, "x1")));
                    }
                }
                Formula::conjoin(conj, "x1")
            })
            .collect(),
        "x1",
    );
    em.push_u(2, 1, partition);

    // 3: each interval realizes exactly its type set
    for (s, types) in tuple.interval_types.iter().enumerate() {
        let u = &names.intervals[s];
        let any_type = Formula::disjoin(
            types.iter().map(|t| t.formula(vocab, "x1")).collect(),
            "x1",
        );
        em.push_u(3, 1, Formula::implies(unary(u, "x1"), any_type));
        for t in types {
            em.push_e(
                3,
                1,
                Formula::and(unary(u, "y1"), t.formula(vocab, "y1")),
            );
        }
    }

    // 4: delta intervals are singletons realizing the court type
    for (c, &s) in tuple.delta.iter().enumerate() {
        let u = &names.intervals[s];
        let alpha = OneType::of(&tuple.court, c).expect("court element");
        em.push_e(
            4,
            1,
            Formula::and(unary(u, "y1"), alpha.formula(vocab, "y1")),
        );
        em.push_u(
            4,
            2,
            Formula::implies(
                Formula::and(unary(u, "x1"), unary(u, "x2")),
                Formula::eq("x1", "x2"),
            ),
        );
    }

    // 5: non-royal interval types are realized at least n times
    for alpha in &union {
        if tuple.royal.contains(alpha) {
            continue;
        }
        let vars: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
        let mut parts = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                parts.push(Formula::not(Formula::eq(&*vars[i], &*vars[j])));
            }
        }
        for v in &vars {
            parts.push(alpha.formula(vocab, v));
        }
        em.push_e(5, n, Formula::conjoin(parts, "y1"));
    }

    // 6: royal types are realized, at most n-1 times
    for alpha in &tuple.royal {
        em.push_e(6, 1, alpha.formula(vocab, "y1"));
        let vars: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let all_alpha = Formula::conjoin(
            vars.iter().map(|v| alpha.formula(vocab, v)).collect(),
            "x1",
        );
        let mut eqs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                eqs.push(Formula::eq(&*vars[i], &*vars[j]));
            }
        }
        em.push_u(
            6,
            n,
            Formula::implies(all_alpha, Formula::disjoin(eqs, "x1")),
        );
    }

    // 7: K is exactly the set of royal-type realizations
    let royal_disj = Formula::disjoin(
        tuple.royal.iter().map(|t| t.formula(vocab, "x1")).collect(),
        "x1",
    );
    em.push_u(7, 1, Formula::iff(royal_disj, unary(&names.kings, "x1")));

    // 8: F bookkeeping. For pairs in F a witness with its live part in D
    // and away from the spectator; for pairs outside F no such witness.
    for alpha in &all_types {
        for (i, conjunct) in nf.existential.iter().enumerate() {
            let k = conjunct.witness_count;
            let live = conjunct.live_vars();
            // spectator becomes y1, old yj becomes y_{j+1} (existential
            // half) or x1, x_{j+1} (universal half)
            fn shift(prefix: char) -> impl Fn(&str) -> String {
                move |v: &str| -> String {
                    if v == "x" {
                        return format!("{prefix}1");
                    }
                    match v.strip_prefix('y').and_then(|d| d.parse::<usize>().ok()) {
                        Some(j) => format!("{prefix}{}", j + 1),
                        None => v.to_string(),
                    }
                }
            }
            if tuple.free_pairs.contains(&(*alpha, i)) {
                let map = shift('y');
                let matrix = conjunct.matrix.rename(&map);
                let mut parts = vec![alpha.formula(vocab, "y1"), matrix];
                for z in &live {
                    let zv = map(z);
                    parts.push(Formula::not(Formula::eq(zv.clone(), "y1".to_string())));
                    parts.push(unary(&names.free_set, &zv));
                }
                em.push_e(8, k + 1, Formula::conjoin(parts, "y1"));
            } else {
                let map = shift('x');
                let matrix = conjunct.matrix.rename(&map);
                let mut parts = vec![alpha.formula(vocab, "x1"), matrix];
                for z in &live {
                    let zv = map(z);
                    parts.push(Formula::not(Formula::eq(zv, "x1".to_string())));
                }
                em.push_u(
                    8,
                    k + 1,
                    Formula::not(Formula::conjoin(parts, "x1")),
                );
            }
        }
    }

    // 9: K and D live inside the court intervals
    let in_court = |v: &str| {
        Formula::disjoin(
            tuple
                .delta
                .iter()
                .map(|&s| unary(&names.intervals[s], v))
                .collect(),
            v,
        )
    };
    em.push_u(
        9,
        1,
        Formula::implies(
            Formula::or(unary(&names.kings, "x1"), unary(&names.free_set, "x1")),
            in_court("x1"),
        ),
    );

    // 10: witnesses of K and D elements stay inside the court intervals
    for conjunct in &nf.existential {
        let k = conjunct.witness_count;
        let mut inside = Vec::new();
        for j in 1..=k {
            inside.push(in_court(&format!("y{j}")));
        }
        inside.push(conjunct.matrix.clone());
        em.push_e(
            10,
            k,
            Formula::implies(
                Formula::or(unary(&names.kings, "x"), unary(&names.free_set, "x")),
                Formula::conjoin(inside, "x"),
            ),
        );
    }

    // 11: an isomorphic copy of the court
    for k in 1..=m.min(tuple.court_size()) {
        for combo in (0..tuple.court_size()).combinations(k) {
            let vars: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
            let guard = Formula::conjoin(
                combo
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| unary(&names.intervals[tuple.delta[c]], &vars[j]))
                    .collect(),
                "x1",
            );
            let body = if k == 1 {
                let alpha = OneType::of(&tuple.court, combo[0]).expect("court element");
                alpha.formula(vocab, "x1")
            } else {
                let beta = KTable::of(&tuple.court, &combo).expect("distinct court tuple");
                beta.formula(vocab, &vars)
            };
            em.push_u(11, k, Formula::implies(guard, body));
        }
    }

    // 12: the order symbol is a tournament
    em.push_u(
        12,
        2,
        Formula::or(
            Formula::or(less("x1", "x2"), less("x2", "x1")),
            Formula::eq("x1", "x2"),
        ),
    );
    em.push_u(
        12,
        2,
        Formula::not(Formula::and(less("x1", "x2"), less("x2", "x1"))),
    );

    // 13: bottom markers are the unique minimal realizations
    for alpha in &all_types {
        if !tuple.bottom.contains(alpha) {
            em.push_u(
                13,
                1,
                Formula::not(Formula::and(
                    alpha.formula(vocab, "x1"),
                    unary(&names.bottom, "x1"),
                )),
            );
        }
    }
    for alpha in &tuple.bottom {
        em.push_e(
            13,
            1,
            Formula::and(alpha.formula(vocab, "y1"), unary(&names.bottom, "y1")),
        );
        em.push_u(
            13,
            2,
            Formula::implies(
                Formula::conjoin(
                    vec![
                        unary(&names.bottom, "x1"),
                        alpha.formula(vocab, "x1"),
                        alpha.formula(vocab, "x2"),
                        Formula::not(Formula::eq("x2", "x1")),
                    ],
                    "x1",
                ),
                less("x1", "x2"),
            ),
        );
    }
    for (s, mset) in minus.iter().enumerate() {
        for alpha in mset {
            if tuple.bottom.contains(alpha) {
                em.push_e(
                    13,
                    1,
                    Formula::conjoin(
                        vec![
                            unary(&names.bottom, "y1"),
                            alpha.formula(vocab, "y1"),
                            unary(&names.intervals[s], "y1"),
                        ],
                        "y1",
                    ),
                );
            }
        }
    }

    // 14: dual top markers
    for alpha in &all_types {
        if !tuple.top.contains(alpha) {
            em.push_u(
                14,
                1,
                Formula::not(Formula::and(
                    alpha.formula(vocab, "x1"),
                    unary(&names.top, "x1"),
                )),
            );
        }
    }
    for alpha in &tuple.top {
        em.push_e(
            14,
            1,
            Formula::and(alpha.formula(vocab, "y1"), unary(&names.top, "y1")),
        );
        em.push_u(
            14,
            2,
            Formula::implies(
                Formula::conjoin(
                    vec![
                        unary(&names.top, "x1"),
                        alpha.formula(vocab, "x1"),
                        alpha.formula(vocab, "x2"),
                        Formula::not(Formula::eq("x2", "x1")),
                    ],
                    "x1",
                ),
                less("x2", "x1"),
            ),
        );
    }
    for (s, pset) in plus.iter().enumerate() {
        for alpha in pset {
            if tuple.top.contains(alpha) {
                em.push_e(
                    14,
                    1,
                    Formula::conjoin(
                        vec![
                            unary(&names.top, "y1"),
                            alpha.formula(vocab, "y1"),
                            unary(&names.intervals[s], "y1"),
                        ],
                        "y1",
                    ),
                );
            }
        }
    }

    // 15: earlier intervals sit below later intervals
    for s in 0..index {
        for t in (s + 1)..index {
            em.push_u(
                15,
                2,
                Formula::implies(
                    Formula::and(
                        unary(&names.intervals[s], "x1"),
                        unary(&names.intervals[t], "x2"),
                    ),
                    less("x1", "x2"),
                ),
            );
        }
    }

    // 16: inside a non-court interval, a type that retires there has a
    // same-interval point below it for every resident type
    for s in 0..index {
        if delta_image.contains(&s) {
            continue;
        }
        for alpha in &plus[s] {
            for alpha2 in &tuple.interval_types[s] {
                em.push_e(
                    16,
                    2,
                    Formula::conjoin(
                        vec![
                            alpha.formula(vocab, "y1"),
                            alpha2.formula(vocab, "y2"),
                            unary(&names.intervals[s], "y1"),
                            unary(&names.intervals[s], "y2"),
                            less("y2", "y1"),
                        ],
                        "y1",
                    ),
                );
            }
        }
    }

    let sentence = NormalFormSentence {
        vocabulary: extended_vocabulary(vocab, &names),
        existential: em.existential,
        universal: em.universal,
    };
    assert_size_bound(&sentence, &nf, tuple);
    Ok(AxiomsOutput {
        sentence,
        names,
        existential_axiom: em.existential_axiom,
        universal_axiom: em.universal_axiom,
    })
}

/// The output size stays exponentially bounded in the input size.
fn assert_size_bound(out: &NormalFormSentence, nf: &NormalFormSentence, t: &AdmissibilityTuple) {
    let size = nf.size() as u128;
    let alpha = 1u128 << nf.vocabulary.len().min(100);
    let n = nf.width() as u128;
    let index = t.index() as u128;
    let court = t.court_size() as u128;
    let m = n.min(nf.vocabulary.max_arity() as u128);
    let conjuncts = 64u128
        .saturating_mul(size)
        .saturating_mul(index.saturating_mul(index).max(1))
        .saturating_mul(alpha.saturating_mul(alpha))
        .saturating_mul(court.max(1).saturating_pow(m as u32))
        .saturating_add(64);
    let per_len = 64u128
        .saturating_mul(n + 2)
        .saturating_mul(
            alpha
                .saturating_mul(nf.vocabulary.len() as u128 + 1)
                .saturating_add(index)
                .saturating_add(size),
        )
        .saturating_mul(size.max(1));
    let bound = conjuncts.saturating_mul(per_len);
    let actual = out.size() as u128;
    assert!(
        actual <= bound,
        "axiom sentence size {actual} exceeds the exponential bound {bound}"
    );
}

/// The compact non-normal-form reading of the bottom-marker axiom for one
/// interval and type: some point is the minimal realization and sits in
/// the interval.
pub fn compact_min_reading(
    tuple: &AdmissibilityTuple,
    names: &FreshNames,
    s: usize,
    alpha: OneType,
) -> Formula {
    let min = crate::types_tables::extremal_formula(
        &tuple.vocab,
        alpha,
        crate::types_tables::Extremal::Min,
    );
    Formula::exists(
        &["x"],
        Formula::and(min, unary(&names.intervals[s], "x")),
    )
}

/// Dual compact reading for the top marker.
pub fn compact_max_reading(
    tuple: &AdmissibilityTuple,
    names: &FreshNames,
    s: usize,
    alpha: OneType,
) -> Formula {
    let max = crate::types_tables::extremal_formula(
        &tuple.vocab,
        alpha,
        crate::types_tables::Extremal::Max,
    );
    Formula::exists(
        &["x"],
        Formula::and(max, unary(&names.intervals[s], "x")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::{EnumBudgets, TupleStream};
    use crate::constructions::{canonical_admissibility_tuple, expand_with_axiom_predicates};
    use crate::formula::render_formula;
    use crate::fragment::{check_fragment, FragmentProfile};
    use crate::normal_form::{to_normal_form, validate_normal_form};
    use crate::parser::parse_formula;
    use crate::structures::{
        enumerate_ordered_structures, model_check, Assignment, StructureClass,
    };

    fn nf_of(text: &str) -> NormalFormSentence {
        to_normal_form(&parse_formula(text, None).unwrap())
            .unwrap()
            .with_order()
    }

    fn first_tuple(nf: &NormalFormSentence) -> AdmissibilityTuple {
        TupleStream::new(nf, StructureClass::O, EnumBudgets::default(), true)
            .next()
            .expect("candidates exist")
    }

    #[test]
    fn output_contains_verbatim_tournament_conjuncts() {
        let nf = nf_of("forall x . exists y . x < y");
        let t = first_tuple(&nf);
        let out = generate_pseudo_ordering_axioms(&t, &nf).unwrap();
        let group = out.group(12);
        assert_eq!(group.len(), 2);
        let expect_a = parse_formula("forall x1 x2 . x1 < x2 | x2 < x1 | x1 = x2", None).unwrap();
        let expect_b = parse_formula("forall x1 x2 . ~(x1 < x2 & x2 < x1)", None).unwrap();
        assert!(group.contains(&expect_a), "{:?}", group.iter().map(render_formula).collect::<Vec<_>>());
        assert!(group.contains(&expect_b));
    }

    #[test]
    fn output_is_normal_form_u1_with_expected_vocabulary() {
        let nf = nf_of("forall x . exists y . x < y | P(x)");
        for t in TupleStream::new(&nf, StructureClass::Wo, EnumBudgets::default(), true).take(12)
        {
            let out = generate_pseudo_ordering_axioms(&t, &nf).unwrap();
            let sentence = out.sentence.sentence();
            let report = check_fragment(&sentence, &FragmentProfile::U1);
            assert!(report.accepted, "{:?}", report.violations);
            let revalidated = validate_normal_form(&sentence).unwrap();
            assert_eq!(revalidated.width(), out.sentence.width());
            assert_eq!(
                out.sentence.vocabulary.len(),
                nf.vocabulary.len() + t.index() + 4
            );
            // all fresh symbols are unary
            for (name, arity) in out.sentence.vocabulary.iter() {
                if !nf.vocabulary.contains(name) {
                    assert_eq!(arity, 1);
                }
            }
            let n = nf.width();
            assert!(out.sentence.width() <= n + 1);
            assert!(out.sentence.width() >= n);
        }
    }

    #[test]
    fn empty_free_set_degenerates_axiom_eight() {
        let nf = nf_of("forall x . exists y . x < y");
        let t = first_tuple(&nf);
        assert!(t.free_pairs.is_empty());
        let out = generate_pseudo_ordering_axioms(&t, &nf).unwrap();
        let e_count = out.existential_axiom.iter().filter(|&&a| a == 8).count();
        let u_count = out.universal_axiom.iter().filter(|&&a| a == 8).count();
        assert_eq!(e_count, 0, "no positive halves without free pairs");
        assert!(u_count > 0, "the negative halves are still emitted");
    }

    #[test]
    fn lemma_four_expansion_satisfies_generated_axioms() {
        let nf = nf_of("forall x . exists y . x < y | P(x)");
        let vocab = nf.vocabulary.with_order();
        let mut tried = 0;
        for st in enumerate_ordered_structures(&vocab, 3, true, 1 << 20).unwrap() {
            if !crate::constructions::holds_sentence(&st, &nf) {
                continue;
            }
            tried += 1;
            if tried > 12 {
                break;
            }
            let canonical = canonical_admissibility_tuple(&st, &nf).unwrap();
            let out = generate_pseudo_ordering_axioms(&canonical.tuple, &nf).unwrap();
            let expanded = expand_with_axiom_predicates(&canonical, &nf);
            let ok = model_check(&expanded, &out.sentence.sentence(), &Assignment::new())
                .unwrap();
            if !ok {
                // name the failing group for diagnosis
                for a in 1..=16 {
                    for g in out.group(a) {
                        if !model_check(&expanded, &g, &Assignment::new()).unwrap() {
                            panic!("axiom {a} fails on {expanded}: {g}");
                        }
                    }
                }
            }
            assert!(ok);
            // bottom markers match extremal realizations
            let compact_groups: Vec<(usize, OneType)> = {
                let (minus, _) = derived_boundary_sets(&canonical.tuple);
                minus
                    .iter()
                    .enumerate()
                    .flat_map(|(s, set)| set.iter().map(move |&a| (s, a)))
                    .collect()
            };
            for (s, alpha) in compact_groups {
                let compact = compact_min_reading(&canonical.tuple, &out.names, s, alpha);
                assert!(model_check(&expanded, &compact, &Assignment::new()).unwrap());
            }
        }
        assert!(tried > 0);
    }

    #[test]
    fn removing_tournament_axioms_flips_a_crafted_witness() {
        // a two-element structure with empty order satisfies every group
        // of a trivial tuple except the tournament conjuncts
        let nf = nf_of("forall x1 x2 . x1 = x1");
        let t = first_tuple(&nf);
        let out = generate_pseudo_ordering_axioms(&t, &nf).unwrap();
        let vocab2 = out.sentence.vocabulary.clone();
        let mut st = crate::structures::FiniteStructure::new(&vocab2, 2);
        for e in 0..2 {
            st.add_tuple(&out.names.intervals[0], vec![e]).unwrap();
        }
        // no order edges at all: tournament totality fails
        let tournament_ok = out
            .group(12)
            .iter()
            .all(|g| model_check(&st, g, &Assignment::new()).unwrap());
        assert!(!tournament_ok);
        let others_ok = (1..=16)
            .filter(|&a| a != 12 && a != 13 && a != 14 && a != 16)
            .all(|a| {
                out.group(a)
                    .iter()
                    .all(|g| model_check(&st, g, &Assignment::new()).unwrap())
            });
        // with the partition predicate set, the remaining failures are
        // exactly the order-sensitive groups
        assert!(others_ok);
    }
}
