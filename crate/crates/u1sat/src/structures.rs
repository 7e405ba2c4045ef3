//! Finite relational structures, model checking, order-class membership,
//! bounded enumeration and the text serialization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

use crate::formula::{Formula, QuantKind};
use crate::vocab::Vocabulary;

pub type Element = usize;
pub type Assignment = BTreeMap<String, Element>;

/// Structure classes: all linear orders, well-orders, finite linear orders.
/// On finite structures the three coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StructureClass {
    O,
    Wo,
    Ofin,
}

impl StructureClass {
    pub fn name(self) -> &'static str {
        match self {
            StructureClass::O => "o",
            StructureClass::Wo => "wo",
            StructureClass::Ofin => "ofin",
        }
    }
}

impl std::str::FromStr for StructureClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "o" => Ok(StructureClass::O),
            "wo" => Ok(StructureClass::Wo),
            "ofin" => Ok(StructureClass::Ofin),
            other => Err(format!("unknown class `{other}` (expected o, wo or ofin)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("tuple {tuple:?} for `{rel}` has arity {found}, expected {expected}")]
    TupleArity {
        rel: String,
        tuple: Vec<Element>,
        expected: usize,
        found: usize,
    },
    #[error("tuple {tuple:?} for `{rel}` is out of the domain 0..{domain}")]
    TupleRange {
        rel: String,
        tuple: Vec<Element>,
        domain: usize,
    },
    #[error("relation `{0}` is not in the vocabulary")]
    UnknownRelation(String),
    #[error("free variable `{0}` is not covered by the assignment")]
    UnboundVariable(String),
    #[error("vocabulary mismatch: formula uses `{0}`")]
    VocabularyMismatch(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("enumeration budget exceeded: {0} candidate structures")]
    Budget(u128),
}

/// A finite structure with domain `{0, .., domain_size-1}` and set-valued
/// relation interpretations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FiniteStructure {
    vocab_rels: Vec<(String, usize)>,
    pub domain_size: usize,
    interp: BTreeMap<String, BTreeSet<Vec<Element>>>,
}

impl FiniteStructure {
    pub fn new(vocab: &Vocabulary, domain_size: usize) -> Self {
        let mut interp = BTreeMap::new();
        for (name, _) in vocab.iter() {
            interp.insert(name.to_string(), BTreeSet::new());
        }
        FiniteStructure {
            vocab_rels: vocab.iter().map(|(n, a)| (n.to_string(), a)).collect(),
            domain_size,
            interp,
        }
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_pairs(self.vocab_rels.iter().map(|(n, a)| (n.clone(), *a)))
            .expect("stored vocabulary is valid")
    }

    pub fn arity(&self, rel: &str) -> Option<usize> {
        self.vocab_rels
            .iter()
            .find(|(n, _)| n == rel)
            .map(|(_, a)| *a)
    }

    pub fn add_tuple(&mut self, rel: &str, tuple: Vec<Element>) -> Result<(), StructureError> {
        let arity = self
            .arity(rel)
            .ok_or_else(|| StructureError::UnknownRelation(rel.to_string()))?;
        if tuple.len() != arity {
            return Err(StructureError::TupleArity {
                rel: rel.to_string(),
                expected: arity,
                found: tuple.len(),
                tuple,
            });
        }
        if tuple.iter().any(|&e| e >= self.domain_size) {
            return Err(StructureError::TupleRange {
                rel: rel.to_string(),
                tuple,
                domain: self.domain_size,
            });
        }
        self.interp.get_mut(rel).unwrap().insert(tuple);
        Ok(())
    }

    pub fn remove_tuple(&mut self, rel: &str, tuple: &[Element]) {
        if let Some(set) = self.interp.get_mut(rel) {
            set.remove(tuple);
        }
    }

    pub fn holds(&self, rel: &str, tuple: &[Element]) -> bool {
        self.interp
            .get(rel)
            .map(|set| set.contains(tuple))
            .unwrap_or(false)
    }

    pub fn tuples(&self, rel: &str) -> impl Iterator<Item = &Vec<Element>> {
        self.interp.get(rel).into_iter().flatten()
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> {
        0..self.domain_size
    }

    /// Induced substructure on the given elements, renumbered in ascending
    /// order. Returns the structure and the map from new to old indices.
    pub fn induced(&self, keep: &BTreeSet<Element>) -> (FiniteStructure, Vec<Element>) {
        let old_of_new: Vec<Element> = keep.iter().copied().collect();
        let new_of_old: BTreeMap<Element, Element> = old_of_new
            .iter()
            .enumerate()
            .map(|(n, &o)| (o, n))
            .collect();
        let mut sub = FiniteStructure::new(&self.vocabulary(), old_of_new.len());
        for (rel, tuples) in &self.interp {
            for t in tuples {
                if t.iter().all(|e| keep.contains(e)) {
                    let mapped: Vec<Element> = t.iter().map(|e| new_of_old[e]).collect();
                    sub.interp.get_mut(rel).unwrap().insert(mapped);
                }
            }
        }
        (sub, old_of_new)
    }

    /// Reduct to a smaller vocabulary.
    pub fn reduct(&self, vocab: &Vocabulary) -> FiniteStructure {
        let mut out = FiniteStructure::new(vocab, self.domain_size);
        for (rel, _) in vocab.iter() {
            if let Some(tuples) = self.interp.get(rel) {
                out.interp.insert(rel.to_string(), tuples.clone());
            }
        }
        out
    }

    /// Expansion to a larger vocabulary; new relations start empty.
    pub fn expand(&self, vocab: &Vocabulary) -> FiniteStructure {
        let mut out = FiniteStructure::new(vocab, self.domain_size);
        for (rel, tuples) in &self.interp {
            out.interp.insert(rel.clone(), tuples.clone());
        }
        out
    }

    /// Interprets `sym` as the canonical strict order `0 < 1 < ..`.
    pub fn set_canonical_order(&mut self, sym: &str) {
        let set = self.interp.get_mut(sym).expect("order symbol declared");
        set.clear();
        for i in 0..self.domain_size {
            for j in (i + 1)..self.domain_size {
                set.insert(vec![i, j]);
            }
        }
    }
}

/// Evaluates a formula under a partial assignment, standard semantics.
/// Quantifier blocks range over all element tuples, repetitions allowed.
pub fn model_check(
    st: &FiniteStructure,
    f: &Formula,
    asg: &Assignment,
) -> Result<bool, StructureError> {
    let mut env = asg.clone();
    eval(st, f, &mut env)
}

fn eval(
    st: &FiniteStructure,
    f: &Formula,
    env: &mut Assignment,
) -> Result<bool, StructureError> {
    match f {
        Formula::Atom { rel, args } => {
            if st.arity(rel) != Some(args.len()) {
                return Err(StructureError::VocabularyMismatch(rel.clone()));
            }
            let mut tuple = Vec::with_capacity(args.len());
            for a in args {
                match env.get(a) {
                    Some(&e) => tuple.push(e),
                    None => return Err(StructureError::UnboundVariable(a.clone())),
                }
            }
            Ok(st.holds(rel, &tuple))
        }
        Formula::Equality(x, y) => {
            let ex = *env
                .get(x)
                .ok_or_else(|| StructureError::UnboundVariable(x.clone()))?;
            let ey = *env
                .get(y)
                .ok_or_else(|| StructureError::UnboundVariable(y.clone()))?;
            Ok(ex == ey)
        }
        Formula::Not(g) => Ok(!eval(st, g, env)?),
        Formula::And(l, r) => Ok(eval(st, l, env)? && eval(st, r, env)?),
        Formula::Or(l, r) => Ok(eval(st, l, env)? || eval(st, r, env)?),
        Formula::Implies(l, r) => Ok(!eval(st, l, env)? || eval(st, r, env)?),
        Formula::Iff(l, r) => Ok(eval(st, l, env)? == eval(st, r, env)?),
        Formula::Quant { kind, vars, body } => eval_block(st, *kind, vars, body, env),
    }
}

fn eval_block(
    st: &FiniteStructure,
    kind: QuantKind,
    vars: &[String],
    body: &Formula,
    env: &mut Assignment,
) -> Result<bool, StructureError> {
    match vars.split_first() {
        None => eval(st, body, env),
        Some((v, rest)) => {
            let saved = env.get(v).copied();
            for e in 0..st.domain_size {
                env.insert(v.clone(), e);
                let r = eval_block(st, kind, rest, body, env)?;
                match kind {
                    QuantKind::Exists if r => {
                        restore(env, v, saved);
                        return Ok(true);
                    }
                    QuantKind::Forall if !r => {
                        restore(env, v, saved);
                        return Ok(false);
                    }
                    _ => {}
                }
            }
            restore(env, v, saved);
            Ok(kind == QuantKind::Forall)
        }
    }
}

fn restore(env: &mut Assignment, var: &str, saved: Option<Element>) {
    match saved {
        Some(e) => {
            env.insert(var.to_string(), e);
        }
        None => {
            env.remove(var);
        }
    }
}

/// True when `sym` denotes a strict linear order on the domain. For finite
/// structures the classes O, WO and Ofin coincide, so the class argument
/// only documents the caller's intent.
pub fn class_membership(st: &FiniteStructure, sym: &str, _class: StructureClass) -> bool {
    if st.arity(sym) != Some(2) {
        return false;
    }
    let n = st.domain_size;
    for i in 0..n {
        if st.holds(sym, &[i, i]) {
            return false;
        }
        for j in 0..n {
            if i != j && !(st.holds(sym, &[i, j]) ^ st.holds(sym, &[j, i])) {
                return false;
            }
            for k in 0..n {
                if st.holds(sym, &[i, j]) && st.holds(sym, &[j, k]) && !st.holds(sym, &[i, k]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Number of structures `enumerate_ordered_structures` would yield.
pub fn enumeration_count(vocab: &Vocabulary, size: usize, fix_order: bool) -> u128 {
    let mut bits: u32 = 0;
    for (name, arity) in vocab.iter() {
        if fix_order && name == crate::vocab::ORDER {
            continue;
        }
        bits += (size as u128).pow(arity as u32).min(u32::MAX as u128) as u32;
    }
    if bits >= 127 {
        return u128::MAX;
    }
    1u128 << bits
}

/// Streams all structures of the given size. With `fix_order` the symbol
/// `<` is pinned to the canonical order `0 < 1 < ..` (sound for
/// satisfiability over ordered structures up to isomorphism of the order
/// reduct); all other relations range over all interpretations.
pub struct OrderedStructures {
    template: FiniteStructure,
    slots: Vec<(String, Vec<Element>)>,
    next_mask: u128,
    done: bool,
}

pub fn enumerate_ordered_structures(
    vocab: &Vocabulary,
    size: usize,
    fix_order: bool,
    max_count: u128,
) -> Result<OrderedStructures, StructureError> {
    let count = enumeration_count(vocab, size, fix_order);
    if count > max_count {
        return Err(StructureError::Budget(count));
    }
    let mut template = FiniteStructure::new(vocab, size);
    let mut slots = Vec::new();
    for (name, arity) in vocab.iter() {
        if fix_order && name == crate::vocab::ORDER {
            template.set_canonical_order(name);
            continue;
        }
        for tuple in all_tuples(size, arity) {
            slots.push((name.to_string(), tuple));
        }
    }
    Ok(OrderedStructures {
        template,
        slots,
        next_mask: 0,
        done: false,
    })
}

fn all_tuples(size: usize, arity: usize) -> Vec<Vec<Element>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        let mut next = Vec::with_capacity(out.len() * size.max(1));
        for t in &out {
            for e in 0..size {
                let mut t2 = t.clone();
                t2.push(e);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

impl Iterator for OrderedStructures {
    type Item = FiniteStructure;

    fn next(&mut self) -> Option<FiniteStructure> {
        if self.done {
            return None;
        }
        let mut st = self.template.clone();
        for (i, (rel, tuple)) in self.slots.iter().enumerate() {
            if self.next_mask >> i & 1 == 1 {
                st.interp.get_mut(rel).unwrap().insert(tuple.clone());
            }
        }
        if self.slots.len() >= 127 || self.next_mask == (1u128 << self.slots.len()) - 1 {
            self.done = true;
        } else {
            self.next_mask += 1;
        }
        Some(st)
    }
}

// Text format: line `domain=N`, then one line per relation
// `NAME = {(t,..),(t,..)}`. Whitespace inside braces is insignificant,
// `#` starts a comment. Writing is canonical: relations sorted by name,
// tuples in lexicographic order.

pub fn write_structure(st: &FiniteStructure) -> String {
    let mut out = String::new();
    out.push_str(&format!("domain={}\n", st.domain_size));
    for (rel, tuples) in &st.interp {
        let body = tuples
            .iter()
            .map(|t| {
                format!(
                    "({})",
                    t.iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            })
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!("{rel} = {{{body}}}\n"));
    }
    out
}

/// Parses the structure format. Arities are taken from `vocab` when given,
/// otherwise inferred from the first tuple of each relation; empty
/// relations without a vocabulary default to arity 1 except order-like
/// names, which are binary.
pub fn read_structure(
    text: &str,
    vocab: Option<&Vocabulary>,
) -> Result<FiniteStructure, StructureError> {
    let mut domain: Option<usize> = None;
    let mut rels: Vec<(String, Vec<Vec<Element>>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line.split_once('=').ok_or(StructureError::Format {
            line: lineno + 1,
            msg: "expected `name = value`".into(),
        })?;
        let lhs = lhs.trim();
        let rhs = rhs.trim();
        if lhs == "domain" {
            let n = rhs.parse::<usize>().map_err(|_| StructureError::Format {
                line: lineno + 1,
                msg: format!("bad domain size `{rhs}`"),
            })?;
            domain = Some(n);
            continue;
        }
        if !rhs.starts_with('{') || !rhs.ends_with('}') {
            return Err(StructureError::Format {
                line: lineno + 1,
                msg: "relation value must be `{(..),(..)}`".into(),
            });
        }
        let inner = &rhs[1..rhs.len() - 1];
        let mut tuples = Vec::new();
        let mut rest = inner.trim();
        while !rest.is_empty() {
            if !rest.starts_with('(') {
                return Err(StructureError::Format {
                    line: lineno + 1,
                    msg: format!("expected `(` in tuple list near `{rest}`"),
                });
            }
            let close = rest.find(')').ok_or(StructureError::Format {
                line: lineno + 1,
                msg: "unclosed tuple".into(),
            })?;
            let tuple: Result<Vec<Element>, _> = rest[1..close]
                .split(',')
                .map(|s| s.trim().parse::<Element>())
                .collect();
            let tuple = tuple.map_err(|_| StructureError::Format {
                line: lineno + 1,
                msg: format!("bad tuple `{}`", &rest[..=close]),
            })?;
            tuples.push(tuple);
            rest = rest[close + 1..].trim_start();
            if let Some(stripped) = rest.strip_prefix(',') {
                rest = stripped.trim_start();
            }
        }
        rels.push((lhs.to_string(), tuples));
    }
    let domain = domain.ok_or(StructureError::Format {
        line: 1,
        msg: "missing `domain=N` line".into(),
    })?;
    let vocab = match vocab {
        Some(v) => v.clone(),
        None => {
            let mut v = Vocabulary::new();
            for (name, tuples) in &rels {
                let arity = tuples
                    .first()
                    .map(|t| t.len())
                    .unwrap_or(if name.starts_with('<') { 2 } else { 1 });
                v.declare(name.clone(), arity)
                    .map_err(|e| StructureError::Format {
                        line: 1,
                        msg: e.to_string(),
                    })?;
            }
            v
        }
    };
    let mut st = FiniteStructure::new(&vocab, domain);
    for (name, tuples) in rels {
        for t in tuples {
            st.add_tuple(&name, t)?;
        }
    }
    Ok(st)
}

impl fmt::Display for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", write_structure(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    /// Independent reference evaluator: rewrites blocks one variable at a
    /// time and evaluates connectives without short-circuiting.
    pub fn naive_eval(st: &FiniteStructure, f: &Formula, asg: &Assignment) -> bool {
        match f {
            Formula::Atom { rel, args } => {
                let tuple: Vec<Element> = args.iter().map(|a| asg[a]).collect();
                st.holds(rel, &tuple)
            }
            Formula::Equality(x, y) => asg[x] == asg[y],
            Formula::Not(g) => !naive_eval(st, g, asg),
            Formula::And(l, r) => {
                let (a, b) = (naive_eval(st, l, asg), naive_eval(st, r, asg));
                a && b
            }
            Formula::Or(l, r) => {
                let (a, b) = (naive_eval(st, l, asg), naive_eval(st, r, asg));
                a || b
            }
            Formula::Implies(l, r) => {
                let (a, b) = (naive_eval(st, l, asg), naive_eval(st, r, asg));
                !a || b
            }
            Formula::Iff(l, r) => naive_eval(st, l, asg) == naive_eval(st, r, asg),
            Formula::Quant { kind, vars, body } => match vars.split_first() {
                None => naive_eval(st, body, asg),
                Some((v, rest)) => {
                    let inner = Formula::Quant {
                        kind: *kind,
                        vars: rest.to_vec(),
                        body: body.clone(),
                    };
                    let results: Vec<bool> = (0..st.domain_size)
                        .map(|e| {
                            let mut asg2 = asg.clone();
                            asg2.insert(v.clone(), e);
                            naive_eval(st, &inner, &asg2)
                        })
                        .collect();
                    match kind {
                        QuantKind::Exists => results.iter().any(|&b| b),
                        QuantKind::Forall => results.iter().all(|&b| b),
                    }
                }
            },
        }
    }

    fn two_chain() -> FiniteStructure {
        let v = Vocabulary::from_pairs([("<", 2)]).unwrap();
        let mut st = FiniteStructure::new(&v, 2);
        st.set_canonical_order("<");
        st
    }

    #[test]
    fn chain_has_no_top_successor() {
        let st = two_chain();
        let f = parse_formula("forall x . exists y . x < y", None).unwrap();
        assert!(!model_check(&st, &f, &Assignment::new()).unwrap());
        let g = parse_formula("exists x . x = x", None).unwrap();
        assert!(model_check(&st, &g, &Assignment::new()).unwrap());
    }

    #[test]
    fn model_check_matches_naive_eval_on_random_structures() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let v = Vocabulary::from_pairs([("P", 1), ("S", 2), ("<", 2)]).unwrap();
        let formulas = [
            "forall x . exists y . x < y | S(x,y)",
            "exists x y . S(x,y) & ~S(y,x) & P(x)",
            "forall x y . S(x,y) -> (exists z . S(y,z))",
            "exists x . P(x) <-> (forall y . x < y | x = y)",
        ];
        for _ in 0..60 {
            let size = rng.gen_range(1..=3);
            let mut st = FiniteStructure::new(&v, size);
            for (name, arity) in v.iter() {
                for tuple in all_tuples(size, arity) {
                    if rng.gen_bool(0.4) {
                        st.add_tuple(name, tuple).unwrap();
                    }
                }
            }
            for text in &formulas {
                let f = parse_formula(text, Some(&v)).unwrap();
                assert_eq!(
                    model_check(&st, &f, &Assignment::new()).unwrap(),
                    naive_eval(&st, &f, &Assignment::new()),
                    "structure {st} formula {text}"
                );
            }
        }
    }

    #[test]
    fn class_membership_cases() {
        let st = {
            let v = Vocabulary::from_pairs([("<", 2)]).unwrap();
            let mut st = FiniteStructure::new(&v, 3);
            st.add_tuple("<", vec![0, 1]).unwrap();
            st.add_tuple("<", vec![0, 2]).unwrap();
            st.add_tuple("<", vec![1, 2]).unwrap();
            st
        };
        assert!(class_membership(&st, "<", StructureClass::Ofin));

        let mut missing = st.clone();
        missing.remove_tuple("<", &[0, 2]);
        assert!(!class_membership(&missing, "<", StructureClass::Ofin));

        let cyclic = {
            let v = Vocabulary::from_pairs([("<", 2)]).unwrap();
            let mut st = FiniteStructure::new(&v, 3);
            st.add_tuple("<", vec![0, 1]).unwrap();
            st.add_tuple("<", vec![1, 2]).unwrap();
            st.add_tuple("<", vec![2, 0]).unwrap();
            st
        };
        assert!(!class_membership(&cyclic, "<", StructureClass::Ofin));
    }

    #[test]
    fn enumeration_counts_match_closed_form() {
        let v = Vocabulary::from_pairs([("<", 2)]).unwrap();
        let one: Vec<_> = enumerate_ordered_structures(&v, 2, true, 1 << 20)
            .unwrap()
            .collect();
        assert_eq!(one.len(), 1);

        let v2 = Vocabulary::from_pairs([("P", 1), ("<", 2)]).unwrap();
        let four: Vec<_> = enumerate_ordered_structures(&v2, 2, true, 1 << 20)
            .unwrap()
            .collect();
        assert_eq!(four.len(), 4);

        let v3 = Vocabulary::from_pairs([("P", 1), ("S", 2), ("<", 2)]).unwrap();
        for size in 1..=2usize {
            let expected = enumeration_count(&v3, size, true);
            let got = enumerate_ordered_structures(&v3, size, true, 1 << 20)
                .unwrap()
                .count() as u128;
            assert_eq!(got, expected);
            assert_eq!(
                expected,
                1u128 << (size.pow(1) + size.pow(2)) // P plus S, order fixed
            );
        }
    }

    #[test]
    fn serialization_roundtrips_canonically() {
        let text = "domain=3\n< = {(0,1),(0,2),(1,2)}\n";
        let st = read_structure(text, None).unwrap();
        assert_eq!(write_structure(&st), text);

        let messy = "# comment\ndomain=3\n< = { (0, 1) , (0,2),\t(1,2) }\nR = {}\n";
        let st2 = read_structure(messy, None).unwrap();
        assert_eq!(
            write_structure(&st2),
            "domain=3\n< = {(0,1),(0,2),(1,2)}\nR = {}\n"
        );
    }

    #[test]
    fn read_rejects_out_of_range() {
        let text = "domain=2\nP = {(5)}\n";
        assert!(matches!(
            read_structure(text, None),
            Err(StructureError::TupleRange { .. })
        ));
    }

    #[test]
    fn universal_sentences_survive_substructures() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let v = Vocabulary::from_pairs([("P", 1), ("S", 2), ("<", 2)]).unwrap();
        let f = parse_formula("forall x y . S(x,y) -> x < y | P(x)", None).unwrap();
        let mut checked = 0;
        for st in enumerate_ordered_structures(&v, 3, true, 1 << 20).unwrap() {
            if !model_check(&st, &f, &Assignment::new()).unwrap() {
                continue;
            }
            let keep: BTreeSet<Element> =
                st.elements().filter(|_| rng.gen_bool(0.6)).collect();
            if keep.is_empty() {
                continue;
            }
            let (sub, _) = st.induced(&keep);
            assert!(model_check(&sub, &f, &Assignment::new()).unwrap());
            checked += 1;
            if checked > 40 {
                break;
            }
        }
        assert!(checked > 10);
    }
}
