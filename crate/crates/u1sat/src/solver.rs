//! The decision pipeline: a brute-force ordered oracle, a backtracking
//! bounded model finder with type and table propagation, the budgeted
//! candidate-tuple loop, and certificate verification.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use itertools::Itertools;
use thiserror::Error;

use crate::admissibility::{
    check_admissibility, read_tuple, write_tuple, AdmissibilityTuple, EnumBudgets, TupleStream,
};
use crate::axioms::generate_pseudo_ordering_axioms;
use crate::formula::Formula;
use crate::fragment::{check_fragment, FragmentProfile, FragmentReport};
use crate::normal_form::{to_normal_form, NormalFormSentence};
use crate::structures::{
    enumerate_ordered_structures, model_check, read_structure, write_structure, Assignment,
    FiniteStructure, StructureClass,
};
use crate::types_tables::{enumerate_one_types, table_atoms, KTable, OneType, TableAtom};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("formula is outside the fragment: {0:?}")]
    Fragment(FragmentReport),
    #[error("normal form conversion failed: {0}")]
    NormalForm(#[from] crate::normal_form::NormalFormError),
    #[error("budget misconfiguration: {0}")]
    BadBudgets(String),
    #[error("wall clock budget exhausted")]
    Timeout,
    #[error("search budget exceeded: {0}")]
    Budget(String),
    #[error("certificate error: {0}")]
    Certificate(String),
}

/// Search budgets. The defaults sit far below the theoretical bounds
/// (court and index bounds are exponential in the sentence size, and a
/// sufficient general-model domain grows like `8 m^2 n^2 |types|`), so a
/// negative answer is reported as "no model within budget", never as
/// unsatisfiable, unless the budgets provably cover the full space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    pub max_oracle_domain: usize,
    pub max_gamma_index: usize,
    pub max_court_size: usize,
    pub max_types: usize,
    pub max_ax_model_domain: usize,
    /// 0 means unlimited.
    pub wall_clock_secs: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_oracle_domain: 4,
            max_gamma_index: 3,
            max_court_size: 1,
            max_types: 8,
            max_ax_model_domain: 6,
            wall_clock_secs: 0,
        }
    }
}

impl Budgets {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.max_oracle_domain == 0
            || self.max_gamma_index == 0
            || self.max_types == 0
            || self.max_ax_model_domain == 0
        {
            return Err(SolveError::BadBudgets(
                "domain, index and type budgets must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn enum_budgets(&self) -> EnumBudgets {
        EnumBudgets {
            max_index: self.max_gamma_index,
            max_court: self.max_court_size,
            max_types: self.max_types,
            max_court_structures: 1 << 16,
        }
    }

    fn deadline(&self) -> Option<Instant> {
        (self.wall_clock_secs > 0)
            .then(|| Instant::now() + Duration::from_secs(self.wall_clock_secs))
    }
}

/// A satisfiability certificate: the candidate tuple and a general model
/// of its axiom sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub class: StructureClass,
    pub formula: Formula,
    pub tuple: AdmissibilityTuple,
    pub model: FiniteStructure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatSource {
    FastPath,
    Pipeline,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatEvidence {
    /// Tuple plus general model of its axiom sentence.
    Certificate(Box<Certificate>),
    /// A finite ordered model found by the oracle.
    DirectModel(FiniteStructure),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveVerdict {
    Sat {
        evidence: SatEvidence,
        source: SatSource,
    },
    /// No model found. `complete` is true only when the searched space
    /// provably covers every candidate, in which case this is a refutation.
    NoModelWithinBudget { budgets: Budgets, complete: bool },
}

impl SolveVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveVerdict::Sat { .. })
    }
}

fn require_u1(f: &Formula) -> Result<(), SolveError> {
    let report = check_fragment(f, &FragmentProfile::U1);
    if !report.accepted {
        return Err(SolveError::Fragment(report));
    }
    Ok(())
}

/// Enumerates canonically ordered structures of growing size and returns
/// the first model. Any finite linearly ordered model belongs to all three
/// classes, so a positive answer is conclusive for every class; a negative
/// answer only means no model up to the domain budget.
pub fn brute_force_ordered_sat(
    f: &Formula,
    _class: StructureClass,
    budgets: &Budgets,
) -> Result<SolveVerdict, SolveError> {
    budgets.validate()?;
    require_u1(f)?;
    let stop = AtomicBool::new(false);
    brute_force_with_stop(f, budgets, &stop)
}

fn brute_force_with_stop(
    f: &Formula,
    budgets: &Budgets,
    stop: &AtomicBool,
) -> Result<SolveVerdict, SolveError> {
    let deadline = budgets.deadline();
    let vocab = f
        .infer_vocabulary()
        .map_err(|e| SolveError::Budget(e.to_string()))?
        .with_order();
    for size in 1..=budgets.max_oracle_domain {
        let stream = enumerate_ordered_structures(&vocab, size, true, 1 << 30)
            .map_err(|e| SolveError::Budget(e.to_string()))?;
        for st in stream {
            if stop.load(Ordering::Relaxed) {
                return Ok(SolveVerdict::NoModelWithinBudget {
                    budgets: *budgets,
                    complete: false,
                });
            }
            if let Some(d) = deadline {
                if Instant::now() > d {
                    return Err(SolveError::Timeout);
                }
            }
            if model_check(&st, f, &Assignment::new())
                .map_err(|e| SolveError::Budget(e.to_string()))?
            {
                return Ok(SolveVerdict::Sat {
                    evidence: SatEvidence::DirectModel(st),
                    source: SatSource::FastPath,
                });
            }
        }
    }
    Ok(SolveVerdict::NoModelWithinBudget {
        budgets: *budgets,
        complete: false,
    })
}

// Bounded general model search: backtracking over per-element 1-types and
// per-support tables. Propagation layers, tightest first: every universal
// conjunct is folded into a one-element filter on the type alphabet and a
// two-element filter on pair tables (this covers the partition, singleton
// and tournament constraints of axiom sentences); conjuncts over three or
// more distinct elements are checked as soon as their supports are fully
// tabled. Matrices run compiled, not through the generic model checker.

/// Compiled quantifier-free matrix.
enum Ir {
    Holds { rel: usize, args: Vec<u8> },
    Eq(u8, u8),
    Not(Box<Ir>),
    And(Box<Ir>, Box<Ir>),
    Or(Box<Ir>, Box<Ir>),
    Const(bool),
}

fn compile_matrix(f: &Formula, vars: &[String], rels: &BTreeMap<String, usize>) -> Ir {
    let slot = |v: &str| -> u8 {
        vars.iter()
            .position(|w| w == v)
            .expect("matrix variables are declared") as u8
    };
    match f {
        Formula::Atom { rel, args } => Ir::Holds {
            rel: rels[rel],
            args: args.iter().map(|a| slot(a)).collect(),
        },
        Formula::Equality(x, y) => Ir::Eq(slot(x), slot(y)),
        Formula::Not(g) => Ir::Not(Box::new(compile_matrix(g, vars, rels))),
        Formula::And(l, r) => Ir::And(
            Box::new(compile_matrix(l, vars, rels)),
            Box::new(compile_matrix(r, vars, rels)),
        ),
        Formula::Or(l, r) => Ir::Or(
            Box::new(compile_matrix(l, vars, rels)),
            Box::new(compile_matrix(r, vars, rels)),
        ),
        Formula::Implies(l, r) => Ir::Or(
            Box::new(Ir::Not(Box::new(compile_matrix(l, vars, rels)))),
            Box::new(compile_matrix(r, vars, rels)),
        ),
        Formula::Iff(l, r) => {
            let a = compile_matrix(l, vars, rels);
            let b = compile_matrix(r, vars, rels);
            let a2 = compile_matrix(l, vars, rels);
            let b2 = compile_matrix(r, vars, rels);
            Ir::And(
                Box::new(Ir::Or(Box::new(Ir::Not(Box::new(a))), Box::new(b))),
                Box::new(Ir::Or(Box::new(Ir::Not(Box::new(b2))), Box::new(a2))),
            )
        }
        Formula::Quant { .. } => Ir::Const(false),
    }
}

fn eval_ir(ir: &Ir, asg: &[usize], holds: &dyn Fn(usize, &[usize]) -> bool) -> bool {
    match ir {
        Ir::Holds { rel, args } => {
            let mut buf = [0usize; 8];
            debug_assert!(args.len() <= 8);
            for (i, &a) in args.iter().enumerate() {
                buf[i] = asg[a as usize];
            }
            holds(*rel, &buf[..args.len()])
        }
        Ir::Eq(x, y) => asg[*x as usize] == asg[*y as usize],
        Ir::Not(g) => !eval_ir(g, asg, holds),
        Ir::And(l, r) => eval_ir(l, asg, holds) && eval_ir(r, asg, holds),
        Ir::Or(l, r) => eval_ir(l, asg, holds) || eval_ir(r, asg, holds),
        Ir::Const(b) => *b,
    }
}

/// Bitset structure over tiny domains used by the constraint filters.
struct Scratch {
    domain: usize,
    arities: Vec<usize>,
    masks: Vec<u64>,
}

impl Scratch {
    fn new(vocab: &crate::vocab::Vocabulary, domain: usize) -> Scratch {
        let arities: Vec<usize> = vocab.iter().map(|(_, a)| a).collect();
        for &a in &arities {
            assert!(domain.pow(a as u32) <= 64, "scratch domain too large");
        }
        Scratch {
            domain,
            masks: vec![0; arities.len()],
            arities,
        }
    }

    fn tuple_bit(&self, rel: usize, args: &[usize]) -> u64 {
        let mut idx = 0usize;
        for &a in args {
            idx = idx * self.domain + a;
        }
        debug_assert_eq!(args.len(), self.arities[rel]);
        1u64 << idx
    }

    fn holds(&self, rel: usize, args: &[usize]) -> bool {
        self.masks[rel] & self.tuple_bit(rel, args) != 0
    }

    fn set(&mut self, rel: usize, args: &[usize], value: bool) {
        let bit = self.tuple_bit(rel, args);
        if value {
            self.masks[rel] |= bit;
        } else {
            self.masks[rel] &= !bit;
        }
    }

    fn set_type(&mut self, e: usize, ty: OneType) {
        for (rel, &arity) in self.arities.clone().iter().enumerate() {
            let tuple = vec![e; arity];
            self.set(rel, &tuple, ty.positive(rel));
        }
    }

    fn set_table(&mut self, elems: &[usize], atoms: &[(usize, Vec<usize>)], table: &KTable) {
        for ((rel, pattern), &bit) in atoms.iter().zip(&table.bits) {
            let args: Vec<usize> = pattern.iter().map(|&i| elems[i]).collect();
            self.set(*rel, &args, bit);
        }
    }
}

struct SearchSpace {
    vocab: crate::vocab::Vocabulary,
    rel_names: Vec<String>,
    allowed_types: Vec<OneType>,
    /// Allowed 2-tables per ordered pair of allowed-type indices.
    pair_tables: BTreeMap<(usize, usize), Vec<KTable>>,
    /// All tables per support size of three and more.
    wide_tables: BTreeMap<usize, Vec<KTable>>,
    universal_ir: Vec<(usize, Ir)>,
    existential_ir: Vec<(usize, Ir)>,
    max_support: usize,
    max_width: usize,
}

fn table_universe(vocab: &crate::vocab::Vocabulary, k: usize) -> (Vec<TableAtom>, Vec<KTable>) {
    let atoms = table_atoms(vocab, k, 1 << 14).expect("atom budget at desk scale");
    assert!(atoms.len() < 24, "table universe too large for search");
    let mut tables = Vec::with_capacity(1 << atoms.len());
    for mask in 0u64..(1u64 << atoms.len()) {
        tables.push(KTable {
            k,
            bits: (0..atoms.len()).map(|i| mask >> i & 1 == 1).collect(),
        });
    }
    (atoms, tables)
}

fn build_space(nf: &NormalFormSentence, max_domain: usize) -> Result<SearchSpace, SolveError> {
    let vocab = nf.vocabulary.clone();
    let rel_names: Vec<String> = vocab.names().map(|s| s.to_string()).collect();
    let rel_ids: BTreeMap<String, usize> = rel_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let all_types =
        enumerate_one_types(&vocab, 1 << 16).map_err(|e| SolveError::Budget(e.to_string()))?;
    let universal_ir: Vec<(usize, Ir)> = nf
        .universal
        .iter()
        .map(|c| (c.var_count, compile_matrix(&c.matrix, &c.vars(), &rel_ids)))
        .collect();
    let existential_ir: Vec<(usize, Ir)> = nf
        .existential
        .iter()
        .map(|c| {
            (
                c.witness_count,
                compile_matrix(&c.matrix, &c.all_vars(), &rel_ids),
            )
        })
        .collect();
    let max_width = nf
        .universal
        .iter()
        .map(|c| c.var_count)
        .max()
        .unwrap_or(1);

    // every universal conjunct folded into the one-element filter
    let mut allowed_types = Vec::new();
    for &ty in &all_types {
        let mut scratch = Scratch::new(&vocab, 1);
        scratch.set_type(0, ty);
        let holds = |rel: usize, args: &[usize]| scratch.holds(rel, args);
        let ok = universal_ir.iter().all(|(w, ir)| {
            let asg = vec![0usize; *w];
            eval_ir(ir, &asg, &holds)
        });
        if ok {
            allowed_types.push(ty);
        }
    }
    // and into the two-element filter on pair tables
    let pair_atoms_raw = table_atoms(&vocab, 2, 1 << 14)
        .map_err(|e| SolveError::Budget(e.to_string()))?;
    let pair_atoms: Vec<(usize, Vec<usize>)> = pair_atoms_raw
        .iter()
        .map(|a| (rel_ids[&a.rel], a.pattern.clone()))
        .collect();
    let (_, pair_universe) = table_universe(&vocab, 2);
    let mut pair_tables = BTreeMap::new();
    for (i, &ti) in allowed_types.iter().enumerate() {
        for (j, &tj) in allowed_types.iter().enumerate() {
            let mut scratch = Scratch::new(&vocab, 2);
            scratch.set_type(0, ti);
            scratch.set_type(1, tj);
            let mut ok_tables = Vec::new();
            for table in &pair_universe {
                scratch.set_table(&[0, 1], &pair_atoms, table);
                let holds = |rel: usize, args: &[usize]| scratch.holds(rel, args);
                let ok = universal_ir.iter().all(|(w, ir)| {
                    let mut asg = vec![0usize; *w];
                    loop {
                        if !eval_ir(ir, &asg, &holds) {
                            return false;
                        }
                        // odometer over {0,1}^w
                        let mut carry = true;
                        for slot in asg.iter_mut() {
                            if carry {
                                *slot += 1;
                                if *slot == 2 {
                                    *slot = 0;
                                } else {
                                    carry = false;
                                }
                            }
                        }
                        if carry {
                            return true;
                        }
                    }
                });
                if ok {
                    ok_tables.push(table.clone());
                }
            }
            pair_tables.insert((i, j), ok_tables);
        }
    }
    let max_support = vocab.max_arity().min(max_domain);
    let mut wide_tables = BTreeMap::new();
    for k in 3..=max_support {
        let (_, tables) = table_universe(&vocab, k);
        wide_tables.insert(k, tables);
    }
    Ok(SearchSpace {
        vocab,
        rel_names,
        allowed_types,
        pair_tables,
        wide_tables,
        universal_ir,
        existential_ir,
        max_support,
        max_width,
    })
}

struct Searcher<'a> {
    space: &'a SearchSpace,
    st: FiniteStructure,
    type_idx: Vec<usize>,
    deadline: Option<Instant>,
    stop: &'a AtomicBool,
    nodes: u64,
}

impl Searcher<'_> {
    fn holds_by_id(&self, rel: usize, args: &[usize]) -> bool {
        self.st.holds(&self.space.rel_names[rel], args)
    }

    /// Supports of the given element against smaller elements, by size
    /// then lexicographic order.
    fn supports_of(&self, e: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for k in 2..=self.space.max_support.min(e + 1) {
            for mut combo in (0..e).combinations(k - 1) {
                combo.push(e);
                out.push(combo);
            }
        }
        out
    }

    /// Universal conjuncts on tuples whose support is exactly the given
    /// set of three or more elements; smaller supports are covered by the
    /// type and pair filters.
    fn check_exact_support(&self, support: &[usize]) -> bool {
        let k = support.len();
        debug_assert!(k >= 3);
        let holds = |rel: usize, args: &[usize]| self.holds_by_id(rel, args);
        for (w, ir) in &self.space.universal_ir {
            if *w < k {
                continue;
            }
            for pattern in (0..*w).map(|_| 0..k).multi_cartesian_product() {
                let mut seen = 0u32;
                for &p in &pattern {
                    seen |= 1 << p;
                }
                if seen.count_ones() as usize != k {
                    continue;
                }
                let asg: Vec<usize> = pattern.iter().map(|&p| support[p]).collect();
                if !eval_ir(ir, &asg, &holds) {
                    return false;
                }
            }
        }
        true
    }

    /// Wide-conjunct checks run at element completion for support sizes
    /// that carry no tables of their own.
    fn check_untabled_supports(&self, e: usize) -> bool {
        let lo = self.space.max_support.max(2) + 1;
        for k in lo..=self.space.max_width.min(e + 1) {
            for mut combo in (0..e).combinations(k - 1) {
                combo.push(e);
                if !self.check_exact_support(&combo) {
                    return false;
                }
            }
        }
        true
    }

    fn existentials_hold(&self) -> bool {
        let d = self.st.domain_size;
        let holds = |rel: usize, args: &[usize]| self.holds_by_id(rel, args);
        for (k, ir) in &self.space.existential_ir {
            for a in 0..d {
                let mut asg = vec![0usize; k + 1];
                asg[0] = a;
                let mut found = false;
                'witness: loop {
                    if eval_ir(ir, &asg, &holds) {
                        found = true;
                        break;
                    }
                    if *k == 0 {
                        break;
                    }
                    let mut carry = true;
                    for slot in asg.iter_mut().skip(1) {
                        if carry {
                            *slot += 1;
                            if *slot == d {
                                *slot = 0;
                            } else {
                                carry = false;
                            }
                        }
                    }
                    if carry {
                        break 'witness;
                    }
                }
                if !found {
                    return false;
                }
            }
        }
        true
    }

    fn out_of_time(&mut self) -> Result<bool, SolveError> {
        self.nodes += 1;
        if self.nodes % 512 == 0 {
            if self.stop.load(Ordering::Relaxed) {
                return Ok(true);
            }
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    return Err(SolveError::Timeout);
                }
            }
        }
        Ok(false)
    }

    /// Assigns element `e`'s type, then its tables, then recurses.
    fn assign_element(&mut self, e: usize) -> Result<Option<FiniteStructure>, SolveError> {
        if e == self.st.domain_size {
            if self.existentials_hold() {
                return Ok(Some(self.st.clone()));
            }
            return Ok(None);
        }
        if self.out_of_time()? {
            return Ok(None);
        }
        for ti in 0..self.space.allowed_types.len() {
            let ty = self.space.allowed_types[ti];
            ty.imprint(&mut self.st, e);
            self.type_idx[e] = ti;
            let supports = self.supports_of(e);
            if let Some(found) = self.assign_tables(e, &supports, 0)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }

    fn assign_tables(
        &mut self,
        e: usize,
        supports: &[Vec<usize>],
        at: usize,
    ) -> Result<Option<FiniteStructure>, SolveError> {
        if at == supports.len() {
            if !self.check_untabled_supports(e) {
                return Ok(None);
            }
            return self.assign_element(e + 1);
        }
        if self.out_of_time()? {
            return Ok(None);
        }
        let support = supports[at].clone();
        let choice_count = if support.len() == 2 {
            let key = (self.type_idx[support[0]], self.type_idx[support[1]]);
            self.space.pair_tables[&key].len()
        } else {
            self.space.wide_tables[&support.len()].len()
        };
        for c in 0..choice_count {
            let table = if support.len() == 2 {
                let key = (self.type_idx[support[0]], self.type_idx[support[1]]);
                self.space.pair_tables[&key][c].clone()
            } else {
                self.space.wide_tables[&support.len()][c].clone()
            };
            table.imprint(&mut self.st, &support);
            if support.len() < 3 || self.check_exact_support(&support) {
                if let Some(found) = self.assign_tables(e, supports, at + 1)? {
                    return Ok(Some(found));
                }
            }
        }
        Ok(None)
    }
}

/// Searches for a general model of the sentence (no order requirement on
/// any symbol) of size at most `max_domain`, smallest domains first.
/// Deterministic: returns the first model in canonical search order.
pub fn bounded_general_model_search(
    nf: &NormalFormSentence,
    max_domain: usize,
    deadline: Option<Instant>,
) -> Result<Option<FiniteStructure>, SolveError> {
    let stop = AtomicBool::new(false);
    bounded_search_with_stop(nf, 1, max_domain, deadline, &stop)
}

fn bounded_search_with_stop(
    nf: &NormalFormSentence,
    min_domain: usize,
    max_domain: usize,
    deadline: Option<Instant>,
    stop: &AtomicBool,
) -> Result<Option<FiniteStructure>, SolveError> {
    let space = build_space(nf, max_domain)?;
    if space.allowed_types.is_empty() {
        return Ok(None);
    }
    for d in min_domain.max(1)..=max_domain {
        if stop.load(Ordering::Relaxed) {
            return Ok(None);
        }
        let mut searcher = Searcher {
            space: &space,
            st: FiniteStructure::new(&space.vocab, d),
            type_idx: vec![0; d],
            deadline,
            stop,
            nodes: 0,
        };
        if let Some(found) = searcher.assign_element(0)? {
            debug_assert!(
                model_check(&found, &nf.sentence(), &Assignment::new()).unwrap_or(false),
                "search result satisfies the sentence"
            );
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// A lower bound on any model of the axiom sentence of a tuple: every
/// interval realizes each of its types, realizations of distinct types are
/// distinct, and non-royal union types need at least `width` realizations.
/// Returns `usize::MAX` when the royal cap is already violated.
fn minimum_model_size(tuple: &AdmissibilityTuple, nf: &NormalFormSentence) -> usize {
    let n = nf.width();
    let mut total = 0usize;
    for alpha in tuple.union_types() {
        let intervals_with = tuple
            .interval_types
            .iter()
            .filter(|s| s.contains(&alpha))
            .count();
        if tuple.royal.contains(&alpha) {
            if intervals_with > n.saturating_sub(1) {
                return usize::MAX;
            }
            total = total.saturating_add(intervals_with.max(1));
        } else {
            total = total.saturating_add(n.max(intervals_with));
        }
    }
    total.max(1)
}

/// Options controlling the pipeline.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub fast_path: bool,
    pub monotone_delta: bool,
    /// Claim a refutation when the searched space provably covers every
    /// candidate (practically only degenerate inputs).
    pub complete: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            fast_path: true,
            monotone_delta: true,
            complete: false,
        }
    }
}

const GAMMA_BATCH: usize = 32;

fn pipeline_with_stop(
    f: &Formula,
    nf: &NormalFormSentence,
    class: StructureClass,
    budgets: &Budgets,
    options: &SolveOptions,
    stop: &AtomicBool,
) -> Result<SolveVerdict, SolveError> {
    let deadline = budgets.deadline();
    let mut stream = TupleStream::new(nf, class, budgets.enum_budgets(), options.monotone_delta);
    loop {
        if stop.load(Ordering::Relaxed) {
            return Ok(SolveVerdict::NoModelWithinBudget {
                budgets: *budgets,
                complete: false,
            });
        }
        if let Some(d) = deadline {
            if Instant::now() > d {
                return Err(SolveError::Timeout);
            }
        }
        let batch: Vec<AdmissibilityTuple> = stream.by_ref().take(GAMMA_BATCH).collect();
        if batch.is_empty() {
            break;
        }
        let hit = crate::par::find_first_map(batch, |tuple| {
            if stop.load(Ordering::Relaxed) {
                return None;
            }
            let min_size = minimum_model_size(&tuple, nf);
            if min_size > budgets.max_ax_model_domain {
                return None;
            }
            let out = generate_pseudo_ordering_axioms(&tuple, nf).ok()?;
            match bounded_search_with_stop(
                &out.sentence,
                min_size,
                budgets.max_ax_model_domain,
                deadline,
                stop,
            ) {
                Ok(Some(model)) => Some((tuple, model)),
                _ => None,
            }
        });
        if let Some((tuple, model)) = hit {
            let cert = Certificate {
                class,
                formula: f.clone(),
                tuple,
                model,
            };
            let report = verify_certificate(f, &cert);
            if !report.valid {
                return Err(SolveError::Certificate(format!(
                    "internal: produced certificate fails verification: {:?}",
                    report.failures
                )));
            }
            return Ok(SolveVerdict::Sat {
                evidence: SatEvidence::Certificate(Box::new(cert)),
                source: SatSource::Pipeline,
            });
        }
    }
    let complete = options.complete && !stream.exhausted_budget && budget_covers_bound(nf, budgets);
    Ok(SolveVerdict::NoModelWithinBudget {
        budgets: *budgets,
        complete,
    })
}

/// True when the budgets reach the theoretical candidate bounds for this
/// sentence, making an exhausted search a refutation.
fn budget_covers_bound(nf: &NormalFormSentence, budgets: &Budgets) -> bool {
    let (court_bound, index_bound) = crate::admissibility::size_bounds(nf);
    let types = 1u128 << nf.vocabulary.len().min(100);
    let n = nf.width() as u128;
    let me = nf.m_exists().max(1) as u128;
    // a sufficient model domain for the axiom sentence
    let model_bound = 8u128
        .saturating_mul(me * me)
        .saturating_mul(n * n)
        .saturating_mul(types);
    budgets.max_gamma_index as u128 >= index_bound
        && budgets.max_court_size as u128 >= court_bound
        && budgets.max_types as u128 >= types
        && budgets.max_ax_model_domain as u128 >= model_bound
}

/// The full ordered-satisfiability decision procedure: normal form, then
/// the candidate-tuple pipeline, with the finite oracle as an optional
/// fast path. With the fast path off the result is fully deterministic.
pub fn solve_ordered_sat(
    f: &Formula,
    class: StructureClass,
    budgets: &Budgets,
    options: &SolveOptions,
) -> Result<SolveVerdict, SolveError> {
    budgets.validate()?;
    require_u1(f)?;
    let nf = to_normal_form(f)?.with_order();
    let stop = AtomicBool::new(false);
    if !options.fast_path {
        return pipeline_with_stop(f, &nf, class, budgets, options, &stop);
    }
    #[cfg(feature = "parallel")]
    {
        let (oracle, pipeline) = rayon::join(
            || {
                let r = brute_force_with_stop(f, budgets, &stop);
                if matches!(r, Ok(SolveVerdict::Sat { .. })) {
                    stop.store(true, Ordering::Relaxed);
                }
                r
            },
            || {
                let r = pipeline_with_stop(f, &nf, class, budgets, options, &stop);
                if matches!(r, Ok(SolveVerdict::Sat { .. })) {
                    stop.store(true, Ordering::Relaxed);
                }
                r
            },
        );
        match (oracle, pipeline) {
            (Ok(sat @ SolveVerdict::Sat { .. }), _) => Ok(sat),
            (_, Ok(sat @ SolveVerdict::Sat { .. })) => Ok(sat),
            (_, p) => p,
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let oracle = brute_force_with_stop(f, budgets, &stop)?;
        if oracle.is_sat() {
            return Ok(oracle);
        }
        pipeline_with_stop(f, &nf, class, budgets, options, &stop)
    }
}

/// Verification report for a certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub valid: bool,
    pub failures: Vec<String>,
}

/// Re-derives the normal form, re-checks the tuple's structure and class
/// admissibility, regenerates the axiom sentence and model-checks the
/// certificate model against every conjunct. Independent of the search
/// path that produced the certificate.
pub fn verify_certificate(f: &Formula, cert: &Certificate) -> VerificationReport {
    let mut failures = Vec::new();
    let nf = match to_normal_form(f) {
        Ok(nf) => nf.with_order(),
        Err(e) => {
            return VerificationReport {
                valid: false,
                failures: vec![format!("normal form: {e}")],
            }
        }
    };
    if cert.tuple.vocab != nf.vocabulary {
        failures.push("tuple vocabulary differs from the sentence".into());
    }
    if let Err(e) = cert.tuple.check_structural(&nf) {
        failures.push(format!("structure: {e}"));
    }
    let report = check_admissibility(&cert.tuple);
    if !report.admissible_for(cert.class) {
        failures.push(format!(
            "tuple is not admissible for {}: {:?}",
            cert.class.name(),
            report.notes
        ));
    }
    if !failures.is_empty() {
        return VerificationReport {
            valid: false,
            failures,
        };
    }
    let out = match generate_pseudo_ordering_axioms(&cert.tuple, &nf) {
        Ok(out) => out,
        Err(e) => {
            return VerificationReport {
                valid: false,
                failures: vec![format!("axiom generation: {e}")],
            }
        }
    };
    if cert.model.vocabulary() != out.sentence.vocabulary {
        failures.push("model vocabulary differs from the axiom sentence".into());
    } else {
        for (c, &a) in out
            .sentence
            .existential
            .iter()
            .zip(&out.existential_axiom)
        {
            match model_check(&cert.model, &c.sentence(), &Assignment::new()) {
                Ok(true) => {}
                Ok(false) => failures.push(format!("axiom {a}: existential conjunct fails")),
                Err(e) => failures.push(format!("axiom {a}: {e}")),
            }
        }
        for (c, &a) in out.sentence.universal.iter().zip(&out.universal_axiom) {
            match model_check(&cert.model, &c.sentence(), &Assignment::new()) {
                Ok(true) => {}
                Ok(false) => failures.push(format!("axiom {a}: universal conjunct fails")),
                Err(e) => failures.push(format!("axiom {a}: {e}")),
            }
        }
    }
    VerificationReport {
        valid: failures.is_empty(),
        failures,
    }
}

// Certificate files: a provenance header, the tuple document, then the
// model in the structure format.

pub fn write_certificate(cert: &Certificate) -> String {
    let mut out = String::new();
    out.push_str("# u1sat certificate\n");
    out.push_str("version = 1\n");
    out.push_str(&format!("class = {}\n", cert.class.name()));
    out.push_str(&format!("formula = {}\n", cert.formula));
    out.push_str("[tuple]\n");
    out.push_str(&write_tuple(&cert.tuple));
    out.push_str("[model]\n");
    out.push_str(&write_structure(&cert.model));
    out
}

pub fn read_certificate(text: &str) -> Result<Certificate, SolveError> {
    let mut class = None;
    let mut formula = None;
    let mut lines = text.lines().peekable();
    while let Some(&line) = lines.peek() {
        let trimmed = line.trim();
        if trimmed == "[tuple]" {
            break;
        }
        lines.next();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = trimmed.split_once('=') {
            match k.trim() {
                "class" => {
                    class = Some(
                        v.trim()
                            .parse::<StructureClass>()
                            .map_err(SolveError::Certificate)?,
                    )
                }
                "formula" => {
                    formula = Some(
                        crate::parser::parse_formula(v.trim(), None)
                            .map_err(|e| SolveError::Certificate(e.to_string()))?,
                    )
                }
                "version" => {}
                other => {
                    return Err(SolveError::Certificate(format!(
                        "unknown header key `{other}`"
                    )))
                }
            }
        }
    }
    match lines.next() {
        Some(l) if l.trim() == "[tuple]" => {}
        other => {
            return Err(SolveError::Certificate(format!(
                "expected [tuple], found {other:?}"
            )))
        }
    }
    let mut tuple_text = String::new();
    for line in lines.by_ref() {
        if line.trim() == "[model]" {
            break;
        }
        tuple_text.push_str(line);
        tuple_text.push('\n');
    }
    let tuple = read_tuple(&tuple_text).map_err(|e| SolveError::Certificate(e.to_string()))?;
    let model_text: String = lines.map(|l| format!("{l}\n")).collect();
    let names = crate::axioms::fresh_symbol_names(&tuple.vocab, tuple.index());
    let sigma2 = crate::axioms::extended_vocabulary(&tuple.vocab, &names);
    let model = read_structure(&model_text, Some(&sigma2))
        .map_err(|e| SolveError::Certificate(e.to_string()))?;
    Ok(Certificate {
        class: class.ok_or_else(|| SolveError::Certificate("missing class header".into()))?,
        formula: formula
            .ok_or_else(|| SolveError::Certificate("missing formula header".into()))?,
        tuple,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn solve(text: &str, class: StructureClass) -> SolveVerdict {
        let f = parse_formula(text, None).unwrap();
        let budgets = Budgets::default();
        let options = SolveOptions {
            fast_path: false,
            ..Default::default()
        };
        solve_ordered_sat(&f, class, &budgets, &options).unwrap()
    }

    #[test]
    fn oracle_finds_three_distinct_elements() {
        let f = parse_formula("exists x y z . x != y & y != z & z != x", None).unwrap();
        let v = brute_force_ordered_sat(&f, StructureClass::Ofin, &Budgets::default()).unwrap();
        match v {
            SolveVerdict::Sat {
                evidence: SatEvidence::DirectModel(m),
                ..
            } => assert_eq!(m.domain_size, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_rejects_reflexive_order_demand() {
        let f = parse_formula("forall x . x < x", None).unwrap();
        let v = brute_force_ordered_sat(&f, StructureClass::Ofin, &Budgets::default()).unwrap();
        assert!(!v.is_sat());
    }

    #[test]
    fn oracle_rejects_unbounded_successor_over_finite_orders() {
        let f = parse_formula("forall x . exists y . x < y", None).unwrap();
        let v = brute_force_ordered_sat(&f, StructureClass::Ofin, &Budgets::default()).unwrap();
        assert!(!v.is_sat());
    }

    #[test]
    fn bounded_search_finds_one_element_model() {
        let nf = to_normal_form(&parse_formula("exists x . P(x)", None).unwrap()).unwrap();
        let m = bounded_general_model_search(&nf, 2, None).unwrap().unwrap();
        assert_eq!(m.domain_size, 1);
    }

    #[test]
    fn bounded_search_rejects_contradiction() {
        let nf = crate::normal_form::NormalFormSentence {
            vocabulary: crate::vocab::Vocabulary::from_pairs([("P", 1)]).unwrap(),
            existential: vec![],
            universal: vec![crate::normal_form::UniversalConjunct {
                var_count: 1,
                matrix: Formula::not(Formula::eq("x1", "x1")),
            }],
        };
        assert!(bounded_general_model_search(&nf, 3, None)
            .unwrap()
            .is_none());
    }

    #[test]
    fn bounded_search_agrees_with_exhaustive_enumeration() {
        let texts = [
            "forall x . exists y . S(x,y)",
            "(exists x y . S(x,y) & ~S(y,x)) & (forall x . ~S(x,x))",
            "(forall x . P(x)) & (exists x y . x != y)",
            "(forall x y . ~S(x,y)) & (forall x . exists y . S(x,y))",
        ];
        for text in texts {
            let nf = to_normal_form(&parse_formula(text, None).unwrap()).unwrap();
            for d in 1..=3usize {
                let found = bounded_general_model_search(&nf, d, None).unwrap();
                let brute = (1..=d).any(|d2| {
                    enumerate_ordered_structures(&nf.vocabulary, d2, false, 1 << 26)
                        .ok()
                        .and_then(|mut s| {
                            s.find(|st| {
                                model_check(st, &nf.sentence(), &Assignment::new()).unwrap()
                            })
                        })
                        .is_some()
                });
                assert_eq!(found.is_some(), brute, "{text} at domain {d}");
                if let Some(m) = found {
                    assert!(model_check(&m, &nf.sentence(), &Assignment::new()).unwrap());
                }
            }
        }
    }

    #[test]
    fn pipeline_certifies_infinite_successor_demand_over_o() {
        let v = solve("forall x . exists y . x < y", StructureClass::O);
        match v {
            SolveVerdict::Sat {
                evidence: SatEvidence::Certificate(cert),
                source,
            } => {
                assert_eq!(source, SatSource::Pipeline);
                let f = parse_formula("forall x . exists y . x < y", None).unwrap();
                assert!(verify_certificate(&f, &cert).valid);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pipeline_certifies_wo_variant() {
        let v = solve("forall x . exists y . x < y", StructureClass::Wo);
        assert!(v.is_sat());
    }

    #[test]
    fn trivial_sentence_sat_via_fast_path() {
        let f = parse_formula("exists x . x = x", None).unwrap();
        let v = solve_ordered_sat(
            &f,
            StructureClass::Ofin,
            &Budgets::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(v.is_sat());
    }

    #[test]
    fn tampered_certificate_names_failing_axiom() {
        let v = solve("forall x . exists y . x < y", StructureClass::O);
        let cert = match v {
            SolveVerdict::Sat {
                evidence: SatEvidence::Certificate(cert),
                ..
            } => *cert,
            other => panic!("{other:?}"),
        };
        let f = parse_formula("forall x . exists y . x < y", None).unwrap();
        let mut tampered = cert.clone();
        // delete one interval-predicate tuple
        let u_name = crate::axioms::fresh_symbol_names(&cert.tuple.vocab, cert.tuple.index())
            .intervals[0]
            .clone();
        let victim = tampered
            .model
            .tuples(&u_name)
            .next()
            .expect("interval predicate is nonempty")
            .clone();
        tampered.model.remove_tuple(&u_name, &victim);
        let report = verify_certificate(&f, &tampered);
        assert!(!report.valid);
        assert!(
            report.failures.iter().any(|m| m.contains("axiom")),
            "{:?}",
            report.failures
        );
    }

    #[test]
    fn certificates_roundtrip_through_serialization() {
        let v = solve("forall x . exists y . x < y", StructureClass::O);
        let cert = match v {
            SolveVerdict::Sat {
                evidence: SatEvidence::Certificate(cert),
                ..
            } => *cert,
            other => panic!("{other:?}"),
        };
        let text = write_certificate(&cert);
        let back = read_certificate(&text).unwrap();
        assert_eq!(cert, back);
        let f = parse_formula("forall x . exists y . x < y", None).unwrap();
        assert!(verify_certificate(&f, &back).valid);
    }

    #[test]
    fn deterministic_certificates_without_fast_path() {
        let run = || match solve("forall x . exists y . x < y", StructureClass::O) {
            SolveVerdict::Sat {
                evidence: SatEvidence::Certificate(cert),
                ..
            } => write_certificate(&cert),
            other => panic!("{other:?}"),
        };
        assert_eq!(run(), run());
    }
}
