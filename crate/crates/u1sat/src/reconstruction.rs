//! Reconstruction of ordered models from certificates: fully materialized
//! for the finite class, symbolic and lazily queryable for the classes
//! with possibly infinite models.
//!
//! The ordered domain is a concatenation of intervals. Court intervals are
//! singletons (royal court types) or a single block; every other interval
//! concatenates blocks of `3 (m_exists + width)` same-type elements, one
//! per type of the interval, with the boundary types repeated downwards
//! or upwards according to the class. Witnesses are drawn from pattern
//! elements of the certificate model and placed by a cyclic part rule
//! (E to F to G to E) that keeps table assignments conflict-free; all
//! remaining tables come from a completion lookup into the certificate
//! model. Every choice is deterministic, so repeated queries agree.

use std::collections::{BTreeMap, BTreeSet};
use itertools::Itertools;
use thiserror::Error;

use crate::admissibility::derived_boundary_sets;
use crate::axioms::{extended_vocabulary, fresh_symbol_names, FreshNames};
use crate::normal_form::NormalFormSentence;
use crate::solver::{verify_certificate, Certificate};
use crate::structures::{FiniteStructure, StructureClass};
use crate::types_tables::{KTable, OneType};

#[derive(Debug, Error)]
pub enum ReconstructionError {
    #[error("certificate fails verification: {0:?}")]
    InvalidCertificate(Vec<String>),
    #[error("tuple is not admissible for {0}")]
    NotAdmissible(&'static str),
    #[error("normal form: {0}")]
    NormalForm(#[from] crate::normal_form::NormalFormError),
    #[error("invalid address {0}")]
    BadAddress(String),
}

/// Repetition kind of a boundary part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepKind {
    /// The part is absent.
    None,
    /// Exactly one copy.
    Single,
    /// Copies indexed by all negative integers (downward part).
    OmegaStar,
    /// Copies indexed by all positive integers (upward part).
    Omega,
}

/// Layout of one interval of the reconstructed domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntervalLayout {
    /// A one-element interval carrying a royal court type.
    Singleton { ty: OneType },
    /// Block sequences: downward boundary copies, the middle copy with one
    /// block per interval type, upward boundary copies.
    Blocks {
        minus: Vec<OneType>,
        mid: Vec<OneType>,
        plus: Vec<OneType>,
        minus_rep: RepKind,
        plus_rep: RepKind,
    },
}

/// An element address: interval, block-copy repetition (negative for the
/// downward part, zero for the middle, positive for the upward part),
/// block index inside the copy, and position inside the block. Addresses
/// compare lexicographically, which is the model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address {
    pub interval: usize,
    pub rep: i64,
    pub block: usize,
    pub pos: usize,
}

impl Address {
    pub fn parse(text: &str) -> Result<Address, ReconstructionError> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 4 {
            return Err(ReconstructionError::BadAddress(format!(
                "`{text}` is not of the form i:r:b:p"
            )));
        }
        let interval: usize = parts[0]
            .parse()
            .map_err(|_| ReconstructionError::BadAddress(text.to_string()))?;
        if interval == 0 {
            return Err(ReconstructionError::BadAddress(
                "intervals are 1-based".into(),
            ));
        }
        Ok(Address {
            interval: interval - 1,
            rep: parts[1]
                .parse()
                .map_err(|_| ReconstructionError::BadAddress(text.to_string()))?,
            block: parts[2]
                .parse()
                .map_err(|_| ReconstructionError::BadAddress(text.to_string()))?,
            pos: parts[3]
                .parse()
                .map_err(|_| ReconstructionError::BadAddress(text.to_string()))?,
        })
    }

    pub fn display(&self) -> String {
        format!(
            "{}:{}:{}:{}",
            self.interval + 1,
            self.rep,
            self.block,
            self.pos
        )
    }
}

/// Cyclic parts of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    E,
    F,
    G,
}

fn cycle(p: Part) -> Part {
    match p {
        Part::E => Part::F,
        Part::F => Part::G,
        Part::G => Part::E,
    }
}

fn part_base(p: Part, part_len: usize) -> usize {
    match p {
        Part::E => 0,
        Part::F => part_len,
        Part::G => 2 * part_len,
    }
}

/// A symbolic, lazily queryable description of the reconstructed ordered
/// model. All operations are pure; repeated queries agree.
#[derive(Debug, Clone)]
pub struct IntervalModelDescription {
    pub class: StructureClass,
    pub cert: Certificate,
    pub nf: NormalFormSentence,
    pub layouts: Vec<IntervalLayout>,
    pub names: FreshNames,
    pub block_len: usize,
    pub part_len: usize,
    /// Certificate-model element realizing each court index.
    court_b: Vec<usize>,
    b_reduct: FiniteStructure,
    b_types: Vec<OneType>,
    /// Interval index of each certificate-model element.
    u_of_b: Vec<usize>,
    kings_b: BTreeSet<usize>,
    free_b: BTreeSet<usize>,
    pbot_b: BTreeSet<usize>,
    ptop_b: BTreeSet<usize>,
    minus: Vec<BTreeSet<OneType>>,
    plus: Vec<BTreeSet<OneType>>,
}

fn sorted_types(set: &BTreeSet<OneType>) -> Vec<OneType> {
    set.iter().copied().collect()
}

impl IntervalModelDescription {
    /// Builds the description after verifying the certificate and the
    /// required degree of admissibility.
    pub fn new(
        cert: &Certificate,
        class: StructureClass,
    ) -> Result<IntervalModelDescription, ReconstructionError> {
        let report = verify_certificate(&cert.formula, cert);
        if !report.valid {
            return Err(ReconstructionError::InvalidCertificate(report.failures));
        }
        let adm = crate::admissibility::check_admissibility(&cert.tuple);
        if !adm.admissible_for(class) {
            return Err(ReconstructionError::NotAdmissible(class.name()));
        }
        let nf = crate::normal_form::to_normal_form(&cert.formula)?.with_order();
        let tuple = &cert.tuple;
        let names = fresh_symbol_names(&tuple.vocab, tuple.index());
        let sigma2 = extended_vocabulary(&tuple.vocab, &names);
        debug_assert_eq!(cert.model.vocabulary(), sigma2);
        let b = &cert.model;
        let b_reduct = b.reduct(&tuple.vocab);
        let b_types: Vec<OneType> = (0..b.domain_size)
            .map(|e| OneType::of(&b_reduct, e).expect("element in range"))
            .collect();
        let u_of_b: Vec<usize> = (0..b.domain_size)
            .map(|e| {
                let homes: Vec<usize> = (0..tuple.index())
                    .filter(|&s| b.holds(&names.intervals[s], &[e]))
                    .collect();
                assert_eq!(homes.len(), 1, "interval predicates partition the model");
                homes[0]
            })
            .collect();
        let court_b: Vec<usize> = tuple
            .delta
            .iter()
            .map(|&s| {
                let members: Vec<usize> = (0..b.domain_size)
                    .filter(|&e| u_of_b[e] == s)
                    .collect();
                assert_eq!(members.len(), 1, "court intervals are singletons");
                members[0]
            })
            .collect();
        let kings_b: BTreeSet<usize> = (0..b.domain_size)
            .filter(|&e| b.holds(&names.kings, &[e]))
            .collect();
        let free_b: BTreeSet<usize> = (0..b.domain_size)
            .filter(|&e| b.holds(&names.free_set, &[e]))
            .collect();
        let pbot_b: BTreeSet<usize> = (0..b.domain_size)
            .filter(|&e| b.holds(&names.bottom, &[e]))
            .collect();
        let ptop_b: BTreeSet<usize> = (0..b.domain_size)
            .filter(|&e| b.holds(&names.top, &[e]))
            .collect();
        for &k in &kings_b {
            assert!(
                court_b.contains(&k),
                "kings of the certificate model sit in court intervals"
            );
        }
        for &d in &free_b {
            assert!(
                court_b.contains(&d),
                "free-set members sit in court intervals"
            );
        }

        let (minus, plus) = derived_boundary_sets(tuple);
        let m_exists = nf.m_exists();
        let width = nf.width();
        let part_len = m_exists + width;
        let block_len = 3 * part_len;

        let image: BTreeMap<usize, usize> = tuple
            .delta
            .iter()
            .enumerate()
            .map(|(c, &s)| (s, c))
            .collect();
        let mut layouts = Vec::with_capacity(tuple.index());
        for s in 0..tuple.index() {
            if let Some(&c) = image.get(&s) {
                let ty = OneType::of(&tuple.court, c).expect("court element");
                if tuple.royal.contains(&ty) {
                    layouts.push(IntervalLayout::Singleton { ty });
                    continue;
                }
                assert!(
                    minus[s].is_empty() && plus[s].is_empty(),
                    "non-royal court intervals carry no boundary types"
                );
                layouts.push(IntervalLayout::Blocks {
                    minus: vec![],
                    mid: vec![ty],
                    plus: vec![],
                    minus_rep: RepKind::None,
                    plus_rep: RepKind::None,
                });
                continue;
            }
            let minus_list = sorted_types(&minus[s]);
            let plus_list = sorted_types(&plus[s]);
            let mid = sorted_types(&tuple.interval_types[s]);
            assert!(!mid.is_empty(), "certified intervals realize a type");
            let minus_rep = if minus_list.is_empty() {
                RepKind::None
            } else {
                match class {
                    StructureClass::O => RepKind::OmegaStar,
                    _ => RepKind::Single,
                }
            };
            let plus_rep = if plus_list.is_empty() {
                RepKind::None
            } else {
                match class {
                    StructureClass::Ofin => RepKind::Single,
                    _ => RepKind::Omega,
                }
            };
            layouts.push(IntervalLayout::Blocks {
                minus: minus_list,
                mid,
                plus: plus_list,
                minus_rep,
                plus_rep,
            });
        }
        Ok(IntervalModelDescription {
            class,
            cert: cert.clone(),
            nf,
            layouts,
            names,
            block_len,
            part_len,
            court_b,
            b_reduct,
            b_types,
            u_of_b,
            kings_b,
            free_b,
            pbot_b,
            ptop_b,
            minus,
            plus,
        })
    }

    pub fn index(&self) -> usize {
        self.layouts.len()
    }

    /// The singleton or block-start address of court index `c`.
    pub fn court_address(&self, c: usize) -> Address {
        Address {
            interval: self.cert.tuple.delta[c],
            rep: 0,
            block: 0,
            pos: 0,
        }
    }

    pub fn court_count(&self) -> usize {
        self.court_b.len()
    }

    /// Validity of an address against the layout.
    pub fn valid_address(&self, a: Address) -> bool {
        if a.interval >= self.layouts.len() {
            return false;
        }
        match &self.layouts[a.interval] {
            IntervalLayout::Singleton { .. } => a.rep == 0 && a.block == 0 && a.pos == 0,
            IntervalLayout::Blocks {
                minus,
                mid,
                plus,
                minus_rep,
                plus_rep,
            } => {
                if a.pos >= self.block_len {
                    return false;
                }
                if a.rep == 0 {
                    a.block < mid.len()
                } else if a.rep < 0 {
                    let depth_ok = match minus_rep {
                        RepKind::OmegaStar => true,
                        RepKind::Single => a.rep == -1,
                        _ => false,
                    };
                    depth_ok && a.block < minus.len()
                } else {
                    let height_ok = match plus_rep {
                        RepKind::Omega => true,
                        RepKind::Single => a.rep == 1,
                        _ => false,
                    };
                    height_ok && a.block < plus.len()
                }
            }
        }
    }

    /// The 1-type (over the base vocabulary) of an address.
    pub fn type_of(&self, a: Address) -> OneType {
        debug_assert!(self.valid_address(a), "{}", a.display());
        match &self.layouts[a.interval] {
            IntervalLayout::Singleton { ty } => *ty,
            IntervalLayout::Blocks {
                minus, mid, plus, ..
            } => {
                if a.rep == 0 {
                    mid[a.block]
                } else if a.rep < 0 {
                    minus[a.block]
                } else {
                    plus[a.block]
                }
            }
        }
    }

    /// True when the model order has a least element.
    pub fn has_least_address(&self) -> bool {
        !matches!(
            &self.layouts[0],
            IntervalLayout::Blocks {
                minus_rep: RepKind::OmegaStar,
                ..
            }
        )
    }

    fn is_court_address(&self, a: Address) -> Option<usize> {
        if a.rep == 0 && a.block == 0 && a.pos == 0 {
            self.cert
                .tuple
                .delta
                .iter()
                .position(|&s| s == a.interval)
        } else {
            None
        }
    }

    /// Kings and free-set images do not spectate; everyone else does.
    fn is_protected(&self, a: Address) -> bool {
        match self.is_court_address(a) {
            Some(c) => {
                let b = self.court_b[c];
                self.kings_b.contains(&b) || self.free_b.contains(&b)
            }
            None => false,
        }
    }

    fn part_of(&self, a: Address) -> Part {
        match a.pos / self.part_len {
            0 => Part::E,
            1 => Part::F,
            _ => Part::G,
        }
    }

    /// Spectator part class: court images pick their partners from the
    /// first part, everyone else cycles forward from their own part.
    fn spectator_target_part(&self, a: Address) -> Part {
        if self.is_court_address(a).is_some() {
            Part::E
        } else {
            cycle(self.part_of(a))
        }
    }

    /// Whether `a` sits in the last block of a finite interval layout.
    fn in_last_block(&self, a: Address) -> bool {
        match &self.layouts[a.interval] {
            IntervalLayout::Singleton { .. } => true,
            IntervalLayout::Blocks {
                minus,
                mid,
                plus,
                plus_rep,
                ..
            } => match plus_rep {
                RepKind::Omega => false,
                RepKind::Single => a.rep == 1 && a.block + 1 == plus.len(),
                RepKind::None => {
                    if mid.is_empty() {
                        a.rep == -1 && a.block + 1 == minus.len()
                    } else {
                        a.rep == 0 && a.block + 1 == mid.len()
                    }
                }
                RepKind::OmegaStar => unreachable!("upward part never repeats downwards"),
            },
        }
    }

    /// The pattern element of an address: a certificate-model element of
    /// the same type in the same interval, extremal when the type is a
    /// boundary type of the interval.
    pub fn pattern_element(&self, a: Address) -> usize {
        if let Some(c) = self.is_court_address(a) {
            return self.court_b[c];
        }
        let s = a.interval;
        let alpha = self.type_of(a);
        let in_minus = self.minus[s].contains(&alpha);
        let in_plus = self.plus[s].contains(&alpha);
        let least = || {
            (0..self.b_reduct.domain_size)
                .find(|&e| self.u_of_b[e] == s && self.b_types[e] == alpha)
                .expect("interval types are realized in their interval predicate")
        };
        let marked = |marks: &BTreeSet<usize>, what: &str| {
            let hits: Vec<usize> = (0..self.b_reduct.domain_size)
                .filter(|&e| {
                    self.u_of_b[e] == s && self.b_types[e] == alpha && marks.contains(&e)
                })
                .collect();
            assert_eq!(hits.len(), 1, "unique {what} marker per boundary type");
            hits[0]
        };
        match self.class {
            StructureClass::O => least(),
            StructureClass::Wo => {
                if in_minus {
                    marked(&self.pbot_b, "bottom")
                } else {
                    least()
                }
            }
            StructureClass::Ofin => {
                if in_minus && in_plus {
                    if self.in_last_block(a) {
                        marked(&self.ptop_b, "top")
                    } else {
                        marked(&self.pbot_b, "bottom")
                    }
                } else if in_minus {
                    marked(&self.pbot_b, "bottom")
                } else if in_plus {
                    marked(&self.ptop_b, "top")
                } else {
                    least()
                }
            }
        }
    }

    /// Least witness tuple of the certificate model for `(b, conjunct)`.
    fn b_witness(&self, b: usize, i: usize) -> Vec<usize> {
        crate::constructions::least_witness(&self.b_reduct, &self.nf.existential[i], b)
            .expect("certificate model satisfies the sentence")
    }

    fn b_live(&self, b: usize, i: usize, witnesses: &[usize]) -> BTreeSet<usize> {
        crate::constructions::witness_live_elements(&self.nf.existential[i], b, witnesses)
    }

    /// The block (interval, rep, block index) designated for a non-royal
    /// witness element.
    fn block_of_witness(&self, a: Address, b_prime: usize) -> (usize, i64, usize) {
        let beta = self.b_types[b_prime];
        let t = self.u_of_b[b_prime];
        let s = a.interval;
        let mid_index = |interval: usize, ty: OneType| -> usize {
            match &self.layouts[interval] {
                IntervalLayout::Blocks { mid, .. } => mid
                    .iter()
                    .position(|&x| x == ty)
                    .expect("interval types have middle blocks"),
                IntervalLayout::Singleton { .. } => {
                    unreachable!("non-royal witnesses never target singletons")
                }
            }
        };
        if self.court_b.contains(&b_prime) || t != s {
            // another interval, or the single block of a court interval
            return (t, 0, mid_index(t, beta));
        }
        // same interval: the chosen block must sit on the same side as the
        // certificate order, because the copied table carries order literals
        let below = self
            .b_reduct
            .holds(crate::vocab::ORDER, &[b_prime, self.pattern_element(a)]);
        if below {
            if !self.minus[s].contains(&beta) {
                let t2 = (0..s)
                    .find(|&t2| self.cert.tuple.interval_types[t2].contains(&beta))
                    .expect("a type outside the minus set occurs earlier");
                (t2, 0, mid_index(t2, beta))
            } else {
                self.nearest_block(s, a, beta, true)
            }
        } else if !self.plus[s].contains(&beta) {
            let t2 = ((s + 1)..self.index())
                .find(|&t2| self.cert.tuple.interval_types[t2].contains(&beta))
                .expect("a type outside the plus set occurs later");
            (t2, 0, mid_index(t2, beta))
        } else {
            self.nearest_block(s, a, beta, false)
        }
    }

    /// Nearest block of type `beta` strictly before or after the block of
    /// `a` within interval `s`.
    fn nearest_block(
        &self,
        s: usize,
        a: Address,
        beta: OneType,
        before: bool,
    ) -> (usize, i64, usize) {
        let (minus, mid, plus, minus_rep, plus_rep) = match &self.layouts[s] {
            IntervalLayout::Blocks {
                minus,
                mid,
                plus,
                minus_rep,
                plus_rep,
            } => (minus, mid, plus, *minus_rep, *plus_rep),
            IntervalLayout::Singleton { .. } => unreachable!("singletons have no blocks"),
        };
        let list_at = |rep: i64| -> &Vec<OneType> {
            if rep == 0 {
                mid
            } else if rep < 0 {
                minus
            } else {
                plus
            }
        };
        let level_exists = |rep: i64| -> bool {
            if rep == 0 {
                true
            } else if rep < 0 {
                match minus_rep {
                    RepKind::OmegaStar => true,
                    RepKind::Single => rep == -1,
                    _ => false,
                }
            } else {
                match plus_rep {
                    RepKind::Omega => true,
                    RepKind::Single => rep == 1,
                    _ => false,
                }
            }
        };
        let fail = || -> ! {
            unreachable!(
                "type has no block {} {} in interval {}",
                if before { "before" } else { "after" },
                a.display(),
                s + 1
            )
        };
        if before {
            if let Some(idx) = list_at(a.rep)
                .iter()
                .enumerate()
                .filter(|&(i, &t)| t == beta && i < a.block)
                .map(|(i, _)| i)
                .next_back()
            {
                return (s, a.rep, idx);
            }
            // walk distinct levels below, nearest first; repeated levels of
            // one part share their list, so each part is checked once
            let mut rep = a.rep - 1;
            let mut steps = 0;
            while steps < 4 {
                if rep > 0 || rep == 0 || level_exists(rep) {
                    if level_exists(rep) {
                        if let Some(idx) = list_at(rep).iter().rposition(|&t| t == beta) {
                            return (s, rep, idx);
                        }
                        if rep < 0 {
                            fail();
                        }
                    } else if rep < 0 {
                        fail();
                    }
                }
                if rep > 1 {
                    rep = 1; // all upper copies share the plus list
                } else {
                    rep -= 1;
                }
                steps += 1;
            }
            fail()
        } else {
            if let Some(idx) = list_at(a.rep)
                .iter()
                .enumerate()
                .find(|&(i, &t)| t == beta && i > a.block)
                .map(|(i, _)| i)
            {
                return (s, a.rep, idx);
            }
            let mut rep = a.rep + 1;
            let mut steps = 0;
            while steps < 4 {
                if level_exists(rep) {
                    if let Some(idx) = list_at(rep).iter().position(|&t| t == beta) {
                        return (s, rep, idx);
                    }
                    if rep > 0 {
                        fail();
                    }
                } else if rep > 0 {
                    fail();
                }
                if rep < -1 {
                    rep = -1; // all lower copies share the minus list
                } else {
                    rep += 1;
                }
                steps += 1;
            }
            fail()
        }
    }

    /// The partner address of a doubleton witness: the conjunct-indexed
    /// slot in the cyclic part of the designated block.
    fn partner_address(&self, a: Address, i: usize, b_prime: usize) -> Address {
        let beta = self.b_types[b_prime];
        if self.cert.tuple.royal.contains(&beta) {
            let c = self
                .court_b
                .iter()
                .position(|&e| e == b_prime)
                .expect("royal realizations are court members");
            return self.court_address(c);
        }
        let (interval, rep, block) = self.block_of_witness(a, b_prime);
        let q = self.spectator_target_part(a);
        Address {
            interval,
            rep,
            block,
            pos: part_base(q, self.part_len) + i,
        }
    }

    /// Secondary slots of the large-witness case: the j-th non-royal
    /// witness takes part position `m_exists + j - 1` of the cyclic part.
    fn secondary_address(&self, a: Address, j: usize, b_j: usize) -> Address {
        let (interval, rep, block) = self.block_of_witness(a, b_j);
        let q = self.spectator_target_part(a);
        let m_exists = self.nf.m_exists();
        let pos = part_base(q, self.part_len) + m_exists + (j - 1);
        debug_assert!(pos < part_base(q, self.part_len) + self.part_len);
        Address {
            interval,
            rep,
            block,
            pos,
        }
    }

    /// Deterministic stream of fresh addresses realizing a type, middle
    /// copies first.
    fn addresses_of_type(
        &self,
        beta: OneType,
        needed: usize,
        used: &BTreeSet<Address>,
    ) -> Vec<Address> {
        let mut out = Vec::new();
        'outer: for s in 0..self.index() {
            match &self.layouts[s] {
                IntervalLayout::Singleton { ty } if *ty == beta => {
                    let a = Address {
                        interval: s,
                        rep: 0,
                        block: 0,
                        pos: 0,
                    };
                    if !used.contains(&a) {
                        out.push(a);
                        if out.len() == needed {
                            break 'outer;
                        }
                    }
                }
                IntervalLayout::Singleton { .. } => {}
                IntervalLayout::Blocks { mid, .. } => {
                    if let Some(block) = mid.iter().position(|&t| t == beta) {
                        for pos in 0..self.block_len {
                            let a = Address {
                                interval: s,
                                rep: 0,
                                block,
                                pos,
                            };
                            if !used.contains(&a) {
                                out.push(a);
                                if out.len() == needed {
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(out.len(), needed, "enough same-type addresses for dead parts");
        out
    }

    /// The designated witness addresses for `(a, conjunct)`: a tuple
    /// parallel to the conjunct's witness variables. The live part follows
    /// the case rules; dead elements are least fresh addresses of matching
    /// types.
    pub fn witness_addresses(&self, a: Address, i: usize) -> Vec<Address> {
        assert!(self.valid_address(a), "{}", a.display());
        if let Some(c) = self.is_court_address(a) {
            let b = self.court_b[c];
            if self.kings_b.contains(&b) || self.free_b.contains(&b) {
                return self.court_witness_addresses(b, i);
            }
        }
        let b_a = self.pattern_element(a);
        let witness = self.b_witness(b_a, i);
        let live = self.b_live(b_a, i, &witness);
        let mut element_map: BTreeMap<usize, Address> = BTreeMap::new();
        element_map.insert(b_a, a);
        if live.is_empty() || (live.len() == 1 && live.contains(&b_a)) {
            // nothing beyond the spectator to place
        } else if !live.contains(&b_a) {
            // free live part: reroute through the court's free-set copy
            let (x, d_witness) = self
                .free_set_witness(self.b_types[b_a], i)
                .expect("free pairs have free-set witnesses");
            element_map.clear();
            element_map.insert(x, a);
            let d_live = self.b_live(x, i, &d_witness);
            for d in &d_live {
                let c = self
                    .court_b
                    .iter()
                    .position(|&e| e == *d)
                    .expect("free-set members are court members");
                element_map.insert(*d, self.court_address(c));
            }
            return self.complete_witness(a, &d_witness, element_map);
        } else if live.len() == 2 {
            let b_prime = *live.iter().find(|&&e| e != b_a).expect("two live elements");
            element_map.insert(b_prime, self.partner_address(a, i, b_prime));
        } else {
            let mut royals = Vec::new();
            let mut others = Vec::new();
            for &e in &live {
                if e == b_a {
                    continue;
                }
                if self.kings_b.contains(&e) {
                    royals.push(e);
                } else {
                    others.push(e);
                }
            }
            for r in royals {
                let c = self
                    .court_b
                    .iter()
                    .position(|&e| e == r)
                    .expect("kings are court members");
                element_map.insert(r, self.court_address(c));
            }
            for (j, b_j) in others.iter().enumerate() {
                element_map.insert(*b_j, self.secondary_address(a, j + 1, *b_j));
            }
        }
        self.complete_witness(a, &witness, element_map)
    }

    /// Witnesses of protected court elements stay inside the court copy.
    fn court_witness_addresses(&self, b: usize, i: usize) -> Vec<Address> {
        let conjunct = &self.nf.existential[i];
        let k = conjunct.witness_count;
        let vars = conjunct.all_vars();
        let mut asg = crate::structures::Assignment::new();
        asg.insert(vars[0].clone(), b);
        if k == 0 {
            let ok = crate::structures::model_check(&self.b_reduct, &conjunct.matrix, &asg)
                .expect("matrix evaluates");
            assert!(ok, "protected elements satisfy witness-free conjuncts");
            return Vec::new();
        }
        for tuple in (0..k)
            .map(|_| self.court_b.iter().copied())
            .multi_cartesian_product()
        {
            for (j, &e) in tuple.iter().enumerate() {
                asg.insert(vars[j + 1].clone(), e);
            }
            if crate::structures::model_check(&self.b_reduct, &conjunct.matrix, &asg)
                .expect("matrix evaluates")
            {
                return tuple
                    .iter()
                    .map(|e| {
                        let c = self
                            .court_b
                            .iter()
                            .position(|&x| x == *e)
                            .expect("court witness");
                        self.court_address(c)
                    })
                    .collect();
            }
        }
        unreachable!("protected elements have court-internal witnesses")
    }

    /// The least free-set witness for `(alpha, conjunct)`: a spectator of
    /// the type with its live part inside the free set and away from the
    /// spectator.
    fn free_set_witness(&self, alpha: OneType, i: usize) -> Option<(usize, Vec<usize>)> {
        let conjunct = &self.nf.existential[i];
        let vars = conjunct.all_vars();
        for x in 0..self.b_reduct.domain_size {
            if self.b_types[x] != alpha {
                continue;
            }
            let mut asg = crate::structures::Assignment::new();
            asg.insert(vars[0].clone(), x);
            if conjunct.witness_count == 0 {
                if crate::structures::model_check(&self.b_reduct, &conjunct.matrix, &asg)
                    .expect("matrix evaluates")
                {
                    return Some((x, Vec::new()));
                }
                continue;
            }
            for tuple in (0..conjunct.witness_count)
                .map(|_| 0..self.b_reduct.domain_size)
                .multi_cartesian_product()
            {
                for (j, &e) in tuple.iter().enumerate() {
                    asg.insert(vars[j + 1].clone(), e);
                }
                if !crate::structures::model_check(&self.b_reduct, &conjunct.matrix, &asg)
                    .expect("matrix evaluates")
                {
                    continue;
                }
                let live = self.b_live(x, i, &tuple);
                if !live.contains(&x) && live.iter().all(|e| self.free_b.contains(e)) {
                    return Some((x, tuple));
                }
            }
        }
        None
    }

    /// Extends the element map with dead picks and applies it to the
    /// witness tuple.
    fn complete_witness(
        &self,
        a: Address,
        witness: &[usize],
        mut element_map: BTreeMap<usize, Address>,
    ) -> Vec<Address> {
        let mut used: BTreeSet<Address> = element_map.values().copied().collect();
        used.insert(a);
        let distinct: BTreeSet<usize> = witness.iter().copied().collect();
        for e in distinct {
            if element_map.contains_key(&e) {
                continue;
            }
            let beta = self.b_types[e];
            let pick = self.addresses_of_type(beta, 1, &used)[0];
            used.insert(pick);
            element_map.insert(e, pick);
        }
        witness.iter().map(|e| element_map[e]).collect()
    }

    /// The pair table of two distinct addresses, `u` strictly before `v`.
    fn pair_table(&self, u: Address, v: Address) -> KTable {
        debug_assert!(u < v);
        // court copy
        if let (Some(cu), Some(cv)) = (self.is_court_address(u), self.is_court_address(v)) {
            return KTable::of(&self.b_reduct, &[self.court_b[cu], self.court_b[cv]])
                .expect("distinct court elements");
        }
        // designated witness pairs
        for (spectator, other) in [(u, v), (v, u)] {
            if self.is_protected(spectator) {
                continue;
            }
            let b_s = self.pattern_element(spectator);
            for i in 0..self.nf.m_exists() {
                let witness = self.b_witness(b_s, i);
                let live = self.b_live(b_s, i, &witness);
                if live.len() != 2 || !live.contains(&b_s) {
                    continue;
                }
                let b_prime = *live.iter().find(|&&e| e != b_s).expect("two live elements");
                if self.partner_address(spectator, i, b_prime) == other {
                    let table =
                        KTable::of(&self.b_reduct, &[b_s, b_prime]).expect("distinct live pair");
                    let oriented = if spectator == u {
                        table
                    } else {
                        table.permuted(&self.cert.tuple.vocab, &[1, 0])
                    };
                    self.assert_order_bit(&oriented);
                    return oriented;
                }
            }
        }
        // completion
        let (s, t) = (u.interval, v.interval);
        let (alpha1, alpha2) = (self.type_of(u), self.type_of(v));
        let pick_pair = |s1: usize, s2: usize| -> KTable {
            for b1 in 0..self.b_reduct.domain_size {
                if self.u_of_b[b1] != s1 || self.b_types[b1] != alpha1 {
                    continue;
                }
                for b2 in 0..self.b_reduct.domain_size {
                    if b2 == b1 || self.u_of_b[b2] != s2 || self.b_types[b2] != alpha2 {
                        continue;
                    }
                    if self.b_reduct.holds(crate::vocab::ORDER, &[b1, b2]) {
                        return KTable::of(&self.b_reduct, &[b1, b2]).expect("distinct pair");
                    }
                }
            }
            unreachable!("completion pair exists for intervals {s1},{s2}")
        };
        let table = if s < t {
            pick_pair(s, t)
        } else if !self.plus[s].contains(&alpha2) {
            let t2 = ((s + 1)..self.index())
                .find(|&t2| self.cert.tuple.interval_types[t2].contains(&alpha2))
                .expect("non-plus types recur later");
            pick_pair(s, t2)
        } else {
            assert!(
                !self.cert.tuple.delta.contains(&s),
                "court intervals never need same-interval completion of a plus type"
            );
            pick_pair(s, s)
        };
        self.assert_order_bit(&table);
        table
    }

    fn assert_order_bit(&self, table: &KTable) {
        // the first position is the smaller address: v1 < v2 must hold and
        // v2 < v1 must not
        let atoms = crate::types_tables::table_atoms(&self.cert.tuple.vocab, 2, 1 << 14)
            .expect("atom budget");
        for (atom, &bit) in atoms.iter().zip(&table.bits) {
            if atom.rel == crate::vocab::ORDER {
                if atom.pattern == vec![0, 1] {
                    debug_assert!(bit, "assigned pair tables respect the address order");
                }
                if atom.pattern == vec![1, 0] {
                    debug_assert!(!bit, "assigned pair tables respect the address order");
                }
            }
        }
    }

    /// The k-table of a sorted address set, k at least 3.
    fn set_table(&self, set: &[Address]) -> KTable {
        let k = set.len();
        debug_assert!(k >= 3);
        if set.iter().all(|&a| self.is_court_address(a).is_some()) {
            let elems: Vec<usize> = set
                .iter()
                .map(|&a| self.court_b[self.is_court_address(a).unwrap()])
                .collect();
            return KTable::of(&self.b_reduct, &elems).expect("distinct court elements");
        }
        // designated large-witness sets
        for &spectator in set {
            if self.is_protected(spectator) {
                continue;
            }
            let b_s = self.pattern_element(spectator);
            for i in 0..self.nf.m_exists() {
                let witness = self.b_witness(b_s, i);
                let live = self.b_live(b_s, i, &witness);
                if live.len() < 3 || !live.contains(&b_s) {
                    continue;
                }
                let mut element_map: BTreeMap<usize, Address> = BTreeMap::new();
                element_map.insert(b_s, spectator);
                let mut royals = Vec::new();
                let mut others = Vec::new();
                for &e in &live {
                    if e == b_s {
                        continue;
                    }
                    if self.kings_b.contains(&e) {
                        royals.push(e);
                    } else {
                        others.push(e);
                    }
                }
                for r in royals {
                    let c = self.court_b.iter().position(|&e| e == r).expect("king");
                    element_map.insert(r, self.court_address(c));
                }
                for (j, b_j) in others.iter().enumerate() {
                    element_map.insert(*b_j, self.secondary_address(spectator, j + 1, *b_j));
                }
                let designated: BTreeSet<Address> = element_map.values().copied().collect();
                let queried: BTreeSet<Address> = set.iter().copied().collect();
                if designated == queried {
                    let addr_of: BTreeMap<Address, usize> =
                        element_map.iter().map(|(&e, &ad)| (ad, e)).collect();
                    let elems: Vec<usize> = set.iter().map(|a| addr_of[a]).collect();
                    return KTable::of(&self.b_reduct, &elems)
                        .expect("distinct live elements");
                }
            }
        }
        // completion: greedy type-matched distinct elements
        let mut used = BTreeSet::new();
        let mut elems = Vec::with_capacity(k);
        for &a in set {
            let beta = self.type_of(a);
            let pick = (0..self.b_reduct.domain_size)
                .find(|&e| !used.contains(&e) && self.b_types[e] == beta)
                .expect("pawn types are realized at least width times");
            used.insert(pick);
            elems.push(pick);
        }
        KTable::of(&self.b_reduct, &elems).expect("distinct picks")
    }

    /// The induced finite substructure on pairwise distinct addresses,
    /// renumbered in address order. Idempotent and pure.
    pub fn sample(
        &self,
        addresses: &[Address],
    ) -> Result<(FiniteStructure, Vec<Address>), ReconstructionError> {
        let sorted: Vec<Address> = addresses
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for &a in &sorted {
            if !self.valid_address(a) {
                return Err(ReconstructionError::BadAddress(a.display()));
            }
        }
        let vocab = self.cert.tuple.vocab.clone();
        let mut st = FiniteStructure::new(&vocab, sorted.len());
        for (idx, &a) in sorted.iter().enumerate() {
            self.type_of(a).imprint(&mut st, idx);
        }
        let m = self.nf.width().min(vocab.max_arity());
        for k in 2..=m.min(sorted.len()) {
            for combo in (0..sorted.len()).combinations(k) {
                let addrs: Vec<Address> = combo.iter().map(|&i| sorted[i]).collect();
                let table = if k == 2 {
                    self.pair_table(addrs[0], addrs[1])
                } else {
                    self.set_table(&addrs)
                };
                table.imprint(&mut st, &combo);
            }
        }
        Ok((st, sorted))
    }

    /// All addresses of the finite layout, in order.
    pub fn all_addresses_finite(&self) -> Vec<Address> {
        assert_eq!(self.class, StructureClass::Ofin);
        let mut out = Vec::new();
        for (s, layout) in self.layouts.iter().enumerate() {
            match layout {
                IntervalLayout::Singleton { .. } => out.push(Address {
                    interval: s,
                    rep: 0,
                    block: 0,
                    pos: 0,
                }),
                IntervalLayout::Blocks {
                    minus,
                    mid,
                    plus,
                    minus_rep,
                    plus_rep,
                } => {
                    if *minus_rep == RepKind::Single {
                        for block in 0..minus.len() {
                            for pos in 0..self.block_len {
                                out.push(Address {
                                    interval: s,
                                    rep: -1,
                                    block,
                                    pos,
                                });
                            }
                        }
                    }
                    for block in 0..mid.len() {
                        for pos in 0..self.block_len {
                            out.push(Address {
                                interval: s,
                                rep: 0,
                                block,
                                pos,
                            });
                        }
                    }
                    if *plus_rep == RepKind::Single {
                        for block in 0..plus.len() {
                            for pos in 0..self.block_len {
                                out.push(Address {
                                    interval: s,
                                    rep: 1,
                                    block,
                                    pos,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Human-readable layout summary.
    pub fn describe_layout(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "class = {}\nblock = {}\nintervals = {}\n",
            self.class.name(),
            self.block_len,
            self.index()
        ));
        for (s, layout) in self.layouts.iter().enumerate() {
            match layout {
                IntervalLayout::Singleton { ty } => {
                    out.push_str(&format!(
                        "interval[{}] = singleton {}\n",
                        s + 1,
                        ty.render(&self.cert.tuple.vocab)
                    ));
                }
                IntervalLayout::Blocks {
                    minus,
                    mid,
                    plus,
                    minus_rep,
                    plus_rep,
                } => {
                    let rep_name = |r: &RepKind| match r {
                        RepKind::None => "none",
                        RepKind::Single => "single",
                        RepKind::Omega => "omega",
                        RepKind::OmegaStar => "omega-star",
                    };
                    out.push_str(&format!(
                        "interval[{}] = blocks minus:{}({}) mid:{} plus:{}({})\n",
                        s + 1,
                        minus.len(),
                        rep_name(minus_rep),
                        mid.len(),
                        plus.len(),
                        rep_name(plus_rep),
                    ));
                }
            }
        }
        out
    }
}

/// Fully materializes the finite reconstruction and returns the ordered
/// model together with the description used to build it.
pub fn reconstruct_finite(
    cert: &Certificate,
) -> Result<(FiniteStructure, IntervalModelDescription), ReconstructionError> {
    let desc = IntervalModelDescription::new(cert, StructureClass::Ofin)?;
    let addresses = desc.all_addresses_finite();
    let (st, _) = desc.sample(&addresses)?;
    Ok((st, desc))
}

/// Builds the symbolic description for a possibly infinite class.
pub fn reconstruct_symbolic(
    cert: &Certificate,
    class: StructureClass,
) -> Result<IntervalModelDescription, ReconstructionError> {
    assert!(
        matches!(class, StructureClass::O | StructureClass::Wo),
        "the finite class uses reconstruct_finite"
    );
    IntervalModelDescription::new(cert, class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::solver::{solve_ordered_sat, Budgets, SatEvidence, SolveOptions, SolveVerdict};
    use crate::structures::{class_membership, model_check, Assignment};

    fn certificate_for(text: &str, class: StructureClass) -> Certificate {
        let f = parse_formula(text, None).unwrap();
        let options = SolveOptions {
            fast_path: false,
            ..Default::default()
        };
        match solve_ordered_sat(&f, class, &Budgets::default(), &options).unwrap() {
            SolveVerdict::Sat {
                evidence: SatEvidence::Certificate(cert),
                ..
            } => *cert,
            other => panic!("expected a certificate, got {other:?}"),
        }
    }

    #[test]
    fn trivial_certificate_reconstructs_small_ordered_model() {
        let cert = certificate_for("exists x . x = x", StructureClass::Ofin);
        let (st, desc) = reconstruct_finite(&cert).unwrap();
        assert!(class_membership(&st, "<", StructureClass::Ofin));
        assert!(model_check(&st, &desc.nf.sentence(), &Assignment::new()).unwrap());
    }

    #[test]
    fn successor_demand_reconstructs_symbolically_over_wo() {
        let cert = certificate_for("forall x . exists y . x < y", StructureClass::Wo);
        let desc = reconstruct_symbolic(&cert, StructureClass::Wo).unwrap();
        assert!(desc.has_least_address());
        // some interval repeats its upward part forever
        let omega_somewhere = desc.layouts.iter().any(|l| {
            matches!(
                l,
                IntervalLayout::Blocks {
                    plus_rep: RepKind::Omega,
                    ..
                }
            )
        });
        assert!(omega_somewhere, "{}", desc.describe_layout());
        // designated witnesses satisfy the matrix on the sample
        let a = Address {
            interval: 0,
            rep: 0,
            block: 0,
            pos: 0,
        };
        for i in 0..desc.nf.m_exists() {
            let ws = desc.witness_addresses(a, i);
            let mut all = vec![a];
            all.extend(ws.iter().copied());
            let (st, sorted) = desc.sample(&all).unwrap();
            let conjunct = &desc.nf.existential[i];
            let pos_of = |ad: Address| sorted.iter().position(|&x| x == ad).unwrap();
            let mut asg = Assignment::new();
            asg.insert("x".into(), pos_of(a));
            for (j, w) in ws.iter().enumerate() {
                asg.insert(format!("y{}", j + 1), pos_of(*w));
            }
            assert!(model_check(&st, &conjunct.matrix, &asg).unwrap());
        }
    }

    #[test]
    fn symbolic_over_o_repeats_downwards_without_least_elements() {
        let cert = certificate_for(
            "(forall x . exists y . x < y) & (forall x . exists y . y < x)",
            StructureClass::O,
        );
        let desc = reconstruct_symbolic(&cert, StructureClass::O).unwrap();
        let omega_star = desc.layouts.iter().any(|l| {
            matches!(
                l,
                IntervalLayout::Blocks {
                    minus_rep: RepKind::OmegaStar,
                    ..
                }
            )
        });
        assert!(omega_star, "{}", desc.describe_layout());
    }

    #[test]
    fn address_order_is_total_and_transitive() {
        use rand::{Rng, SeedableRng};
        let cert = certificate_for("forall x . exists y . x < y", StructureClass::Wo);
        let desc = reconstruct_symbolic(&cert, StructureClass::Wo).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let rand_addr = |rng: &mut rand_chacha::ChaCha8Rng| loop {
            let a = Address {
                interval: rng.gen_range(0..desc.index()),
                rep: rng.gen_range(-3..=6),
                block: 0,
                pos: rng.gen_range(0..desc.block_len),
            };
            if desc.valid_address(a) {
                return a;
            }
        };
        for _ in 0..10_000 {
            let (a, b, c) = (
                rand_addr(&mut rng),
                rand_addr(&mut rng),
                rand_addr(&mut rng),
            );
            assert_eq!(a < b, !(b < a || a == b));
            if a < b && b < c {
                assert!(a < c);
            }
        }
    }

    #[test]
    fn sampling_court_addresses_recovers_the_court() {
        let cert = certificate_for("exists x y . P(x) & ~P(y)", StructureClass::Ofin);
        let desc = IntervalModelDescription::new(&cert, StructureClass::Ofin).unwrap();
        let court_addrs: Vec<Address> = (0..desc.court_count())
            .map(|c| desc.court_address(c))
            .collect();
        if court_addrs.is_empty() {
            return;
        }
        let (st, sorted) = desc.sample(&court_addrs).unwrap();
        assert_eq!(st.domain_size, cert.tuple.court.domain_size);
        for (idx, _) in sorted.iter().enumerate() {
            assert_eq!(
                OneType::of(&st, idx).unwrap(),
                OneType::of(&cert.tuple.court, idx).unwrap()
            );
        }
        for i in 0..st.domain_size {
            for j in (i + 1)..st.domain_size {
                assert_eq!(
                    KTable::of(&st, &[i, j]).unwrap(),
                    KTable::of(&cert.tuple.court, &[i, j]).unwrap()
                );
            }
        }
    }

    #[test]
    fn single_address_sample_realizes_block_type() {
        let cert = certificate_for("forall x . exists y . x < y", StructureClass::O);
        let desc = reconstruct_symbolic(&cert, StructureClass::O).unwrap();
        for s in 0..desc.index() {
            let a = Address {
                interval: s,
                rep: 0,
                block: 0,
                pos: 0,
            };
            if !desc.valid_address(a) {
                continue;
            }
            let (st, _) = desc.sample(&[a]).unwrap();
            assert_eq!(OneType::of(&st, 0).unwrap(), desc.type_of(a));
        }
    }

    #[test]
    fn finite_reconstruction_satisfies_pipeline_sentences() {
        for text in [
            "exists x . x = x",
            "exists x y . P(x) & ~P(y)",
            "exists x y . x != y & P(x)",
        ] {
            let cert = certificate_for(text, StructureClass::Ofin);
            let (st, desc) = reconstruct_finite(&cert).unwrap();
            assert!(
                class_membership(&st, "<", StructureClass::Ofin),
                "{text}: not an order"
            );
            assert!(
                model_check(&st, &desc.nf.sentence(), &Assignment::new()).unwrap(),
                "{text}: reconstruction does not satisfy the sentence\n{st}"
            );
            let realized: BTreeSet<OneType> = st
                .elements()
                .map(|e| OneType::of(&st.reduct(&cert.tuple.vocab), e).unwrap())
                .collect();
            assert_eq!(realized, cert.tuple.union_types(), "{text}");
        }
    }

    #[test]
    fn universal_conjuncts_hold_on_random_symbolic_samples() {
        use rand::{Rng, SeedableRng};
        let cert = certificate_for("forall x . exists y . x < y", StructureClass::Wo);
        let desc = reconstruct_symbolic(&cert, StructureClass::Wo).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..120 {
            let size = rng.gen_range(1..=desc.nf.width());
            let mut addrs = BTreeSet::new();
            while addrs.len() < size {
                let a = Address {
                    interval: rng.gen_range(0..desc.index()),
                    rep: rng.gen_range(-1..=5),
                    block: 0,
                    pos: rng.gen_range(0..desc.block_len),
                };
                if desc.valid_address(a) {
                    addrs.insert(a);
                }
            }
            let list: Vec<Address> = addrs.into_iter().collect();
            let (st, _) = desc.sample(&list).unwrap();
            for c in &desc.nf.universal {
                assert!(
                    model_check(&st, &c.sentence(), &Assignment::new()).unwrap(),
                    "universal conjunct fails on sample {st}"
                );
            }
        }
    }
}
