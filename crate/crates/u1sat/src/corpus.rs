//! Shared test corpora and seeded random generators: the hand-written
//! fragment classification panel, normal-form agreement sentences, the
//! solver panel, and random satisfying (model, sentence) pairs.

use std::collections::BTreeMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::Formula;
use crate::fragment::{FragmentProfile, ViolationKind};
use crate::normal_form::{to_normal_form, NormalFormSentence};
use crate::parser::parse_formula;
use crate::solver::Budgets;
use crate::structures::{
    enumerate_ordered_structures, FiniteStructure, StructureClass,
};

/// One fragment-gate case: text, profile, expected acceptance, and the
/// violation kind that must be reported when rejected.
pub struct FragmentCase {
    pub text: &'static str,
    pub profile: FragmentProfile,
    pub accept: bool,
    pub kind: Option<ViolationKind>,
}

/// The hand corpus for the fragment gate: thirty-plus formulas with their
/// expected classification.
pub fn fragment_corpus() -> Vec<FragmentCase> {
    use FragmentProfile::{Fu1, U1, U1NoEq};
    let free = || FragmentProfile::U1Free(vec!["<1".into(), "<2".into()]);
    let case = |text, profile, accept, kind| FragmentCase {
        text,
        profile,
        accept,
        kind,
    };
    vec![
        // accepted flagship examples
        case(
            "exists x y z . ~R(x,y,z,x,y) & ~T(y,x,z) & P(x) & Q(y)",
            U1,
            true,
            None,
        ),
        case(
            "exists x . forall y z . ~S(x,y) -> (exists u v . T(u,v,z))",
            U1NoEq,
            true,
            None,
        ),
        case(
            "forall x y z . (x <1 y & y <1 z) -> x <1 z",
            free(),
            true,
            None,
        ),
        // named rejections
        case(
            "exists x y z . S(x,y) | S(x,z)",
            U1,
            false,
            Some(ViolationKind::Uniformity),
        ),
        case(
            "forall y . P(y) & (exists x . T(x,y,z))",
            U1,
            false,
            Some(ViolationKind::OneDimensionality),
        ),
        case("exists x y . T(x,y,y) & Q(y)", U1, true, None),
        case("exists x . x = x", U1, true, None),
        case("exists x y z . x != y & y != z & z != x", U1, true, None),
        case(
            "exists x . forall y z . S(y,z) -> (x = y | x = z)",
            U1,
            true,
            None,
        ),
        case("forall x . exists y . x < y", U1, true, None),
        case("forall x . P(x) -> (exists y . S(x,y) & Q(y))", U1, true, None),
        case(
            "exists x y . S(x,y) & (exists z u . T(z,u,u))",
            U1,
            true,
            None,
        ),
        case("exists x y z . T(x,y,z) & R5(x,x,y,y,z)", U1, true, None),
        case(
            "exists x y z . T(x,y,z) & R5(x,x,y,z,z) & x = u & Q(u)",
            U1,
            true,
            None,
        ),
        case("forall x y . S(x,y) <-> S(y,x)", U1, true, None),
        case("~(exists x . P(x))", U1, true, None),
        case("exists x y . P(x) & x = y & Q(y)", U1, true, None),
        case("forall x . x < x", U1, true, None),
        // uniformity violations
        case("exists x y z . T(x,y,z) & S(x,y)", U1, false, Some(ViolationKind::Uniformity)),
        case("forall x y . S(x,y) -> (exists z . S(x,z) & S(y,z))", U1, false, Some(ViolationKind::Uniformity)),
        case(
            "forall x y z . (x < y & y < z) -> x < z",
            U1,
            false,
            Some(ViolationKind::Uniformity),
        ),
        case("exists x y . S(x,y) & S(y,x) | (exists z . S(x,z))", U1, false, Some(ViolationKind::Uniformity)),
        // one-dimensionality violations
        case(
            "forall x . exists y . S(x,y) & (forall z . T(x,y,z))",
            U1,
            false,
            Some(ViolationKind::OneDimensionality),
        ),
        case(
            "exists x . forall y . S(x,y) -> (exists z . T(x,y,z))",
            U1,
            false,
            Some(ViolationKind::OneDimensionality),
        ),
        // scope violations
        case("S(x,y)", U1, false, Some(ViolationKind::Scope)),
        case("P(x) & S(x,y)", U1, false, Some(ViolationKind::Scope)),
        case("exists x . x = x", U1NoEq, false, Some(ViolationKind::Scope)),
        case("exists x y . x != y", U1NoEq, false, Some(ViolationKind::Scope)),
        // two-variable style sentences are fully uniform
        case("forall x . exists y . S(x,y) & ~S(y,x)", Fu1, true, None),
        case("exists x y . S(x,y) & x = y", Fu1, true, None),
        case(
            "exists x y z . S(x,y) & x = z",
            Fu1,
            false,
            Some(ViolationKind::Uniformity),
        ),
        case("exists x y z . S(x,y) & x = z", U1, true, None),
        // exemption monotonicity samples
        case("forall x . exists y . x <1 y", U1, true, None),
        case("forall x . exists y . x <1 y", free(), true, None),
        case(
            "forall x y z t u . N(x,y,z,t) -> (x <1 u | u <2 y)",
            free(),
            true,
            None,
        ),
        case("exists x y . x < y & P(x)", U1, true, None),
        case("exists u . forall x y z . R(x,y,z,u) | P(u)", U1, false, Some(ViolationKind::OneDimensionality)),
    ]
}

/// Thirty sentences over at most two non-order symbols for the normal
/// form agreement panel.
pub fn normal_form_corpus() -> Vec<&'static str> {
    vec![
        "exists x . P(x)",
        "~(exists x . P(x))",
        "forall x . P(x)",
        "exists x . P(x) & ~Q(x)",
        "forall x . P(x) -> Q(x)",
        "forall x . exists y . x < y",
        "forall x . exists y . y < x",
        "exists x . forall y . x < y | x = y",
        "exists x . forall y . y < x | x = y",
        "forall x . exists y . x < y & P(y)",
        "forall x . P(x) -> (exists y . y < x)",
        "exists x y . x != y & P(x) & P(y)",
        "exists x y z . x != y & y != z & z != x",
        "forall x . exists y . P(y) & x = x",
        "(exists x . P(x)) & (exists x . Q(x))",
        "(exists x . P(x)) | (exists x . Q(x))",
        "(forall x . P(x)) -> (exists y . Q(y))",
        "exists x . P(x) & (forall y . Q(y) -> y = x)",
        "forall x . exists y . x = y & P(y) | ~P(x)",
        "exists x . ~(forall y . x < y | x = y)",
        "forall x y . P(x) & Q(y) -> x = y",
        "forall x y . x < y -> P(x)",
        "exists x . forall y . P(y) <-> x = y",
        "forall x . (exists y . x < y) | P(x)",
        "exists x . P(x) & (exists y . Q(y) & ~(x = y))",
        "forall x . ~P(x) | (exists y . x < y & Q(y))",
        "(forall x . P(x) -> Q(x)) & (exists x . P(x))",
        "exists x . forall y . ~(y < x)",
        "forall x . exists y z . y < x | x < z",
        "~(forall x . exists y . x < y)",
    ]
}

/// One solver panel case: the sentence, target class and the budgets that
/// suffice for the pipeline on this input.
pub struct SolveCase {
    pub text: &'static str,
    pub class: StructureClass,
    pub budgets: Budgets,
}

fn b(max_gamma_index: usize, max_ax_model_domain: usize) -> Budgets {
    Budgets {
        max_gamma_index,
        max_ax_model_domain,
        ..Budgets::default()
    }
}

/// The fifty-case solver panel. Budgets are the documented sufficient
/// budgets for each entry; entries that are unsatisfiable over their class
/// stay negative under these budgets.
pub fn solve_corpus() -> Vec<SolveCase> {
    use StructureClass::{Ofin, Wo, O};
    let case = |text, class, budgets| SolveCase {
        text,
        class,
        budgets,
    };
    vec![
        // trivial satisfiables over the finite class
        case("exists x . x = x", Ofin, b(2, 4)),
        case("exists x . P(x)", Ofin, b(2, 4)),
        case("exists x . ~P(x)", Ofin, b(2, 4)),
        case("exists x y . x != y", Ofin, b(2, 5)),
        case("exists x y . P(x) & ~P(y)", Ofin, b(2, 5)),
        case("exists x y z . x != y & y != z & z != x", Ofin, b(2, 5)),
        case("exists x y . x != y & P(x)", Ofin, b(2, 5)),
        case("forall x . P(x)", Ofin, b(2, 4)),
        case("forall x . P(x) -> Q(x)", Ofin, b(2, 4)),
        case("(exists x . P(x)) & (exists x . Q(x))", Ofin, b(2, 5)),
        case("exists x . forall y . x < y | x = y", Ofin, b(2, 5)),
        case("exists x . forall y . y < x | x = y", Ofin, b(2, 5)),
        case("exists x . P(x) & (forall y . P(y) -> y = x)", Ofin, b(3, 6)),
        case("forall x y . x < y -> (P(x) -> P(y))", Ofin, b(2, 5)),
        case("forall x y . S(x,y) -> x < y", Ofin, b(2, 5)),
        case("(forall x . exists y . S(x,y)) & (forall x . ~S(x,x))", Ofin, b(2, 6)),
        case("exists x . forall y . ~(y < x)", Ofin, b(2, 4)),
        case("forall x . exists y . x = y & P(y) | ~P(x)", Ofin, b(2, 4)),
        case("exists x y . S(x,y) & ~S(y,x)", Ofin, b(2, 6)),
        case("forall x . exists y . P(y)", Ofin, b(2, 4)),
        // unsatisfiable over every class
        case("forall x . x < x", Ofin, b(2, 4)),
        case("(exists x . P(x)) & (forall x . ~P(x))", Ofin, b(2, 4)),
        case("forall x . x != x", Ofin, b(2, 4)),
        case("(exists x y . S(x,y)) & (forall x y . ~S(x,y))", Ofin, b(2, 5)),
        // unsatisfiable over finite orders only
        case("forall x . exists y . x < y", Ofin, b(2, 5)),
        case("forall x . exists y . y < x", Ofin, b(2, 5)),
        // satisfiable over unrestricted orders
        case("forall x . exists y . x < y", O, b(2, 5)),
        case("forall x . exists y . y < x", O, b(2, 5)),
        case(
            "(forall x . exists y . x < y) & (forall x . exists y . y < x)",
            O,
            b(2, 6),
        ),
        case("forall x . exists y . x < y & P(y)", O, b(2, 6)),
        case("forall x . exists y . y < x & P(y)", O, b(2, 6)),
        case("exists x . P(x) & (forall y . exists z . y < z)", O, b(2, 6)),
        case("forall x . exists y . x < y | P(x)", O, b(2, 5)),
        case(
            "(forall x . exists y . x < y) & (exists x . P(x))",
            O,
            b(3, 6),
        ),
        // satisfiable over well-orders
        case("forall x . exists y . x < y", Wo, b(2, 5)),
        case("forall x . exists y . x < y & P(y)", Wo, b(2, 6)),
        case("exists x . forall y . x < y | x = y", Wo, b(2, 5)),
        case("(forall x . exists y . x < y) & (exists x . Q(x))", Wo, b(3, 6)),
        case("forall x . exists y . x < y | Q(x)", Wo, b(2, 5)),
        // well-order refutations at budget
        case("forall x . exists y . y < x", Wo, b(2, 5)),
        case(
            "(forall x . exists y . y < x) & (exists x . P(x))",
            Wo,
            b(2, 5),
        ),
        // mixed finite satisfiables with binary symbols
        case("forall x y . S(x,y) -> S(y,x)", Ofin, b(2, 5)),
        case("(exists x y . S(x,y)) & (forall x . ~S(x,x))", Ofin, b(2, 6)),
        case("forall x . exists y . S(x,y) | P(x) | ~P(x)", Ofin, b(2, 5)),
        case("exists x y . S(x,y) & x < y", Ofin, b(2, 6)),
        case("forall x y . S(x,y) -> x != y", Ofin, b(2, 5)),
        // three-distinct with a royal twist
        case(
            "(exists x y . P(x) & Q(y) & x != y) & (forall x . P(x) -> ~Q(x))",
            Ofin,
            b(2, 5),
        ),
        case("exists x . forall y . P(y) <-> x = y", Ofin, b(3, 6)),
        case("forall x . (exists y . x < y) | P(x)", Ofin, b(2, 5)),
        case("exists x . Q(x) & (forall y . ~(y < x))", Ofin, b(3, 6)),
    ]
}

/// Template sentences for the random-model panels; all have small width
/// and vocabulary so desk-scale enumeration stays fast.
pub fn random_model_templates() -> Vec<&'static str> {
    vec![
        "forall x . exists y . x < y | P(x)",
        "forall x . exists y . P(y) | Q(x)",
        "forall x y . P(x) & P(y) -> x = x",
        "(forall x . exists y . P(y)) & (forall x y . ~S(x,y) | x < y)",
        "forall x . exists y . S(x,y) | ~P(x)",
        "forall x . P(x) | ~P(x)",
        "(exists x . P(x)) & (forall x . exists y . x < y | P(y))",
        "forall x y . S(x,y) -> x < y",
    ]
}

/// Seeded random satisfying pairs (model, normal form), produced by
/// enumerating small ordered structures and sampling the satisfying ones.
pub fn random_model_pairs(
    seed: u64,
    count: usize,
    max_size: usize,
) -> Vec<(FiniteStructure, NormalFormSentence)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let templates: Vec<NormalFormSentence> = random_model_templates()
        .iter()
        .map(|t| {
            to_normal_form(&parse_formula(t, None).expect("template parses"))
                .expect("template converts")
                .with_order()
        })
        .collect();
    // precompute the satisfying structures per template and size
    let mut pools: Vec<Vec<FiniteStructure>> = Vec::new();
    for nf in &templates {
        let mut pool = Vec::new();
        let vocab = nf.vocabulary.with_order();
        for size in 2..=max_size {
            for st in enumerate_ordered_structures(&vocab, size, true, 1 << 22)
                .expect("enumeration within budget")
            {
                if crate::constructions::holds_sentence(&st, nf) {
                    pool.push(st);
                }
            }
        }
        pools.push(pool);
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = rng.gen_range(0..templates.len());
        if pools[t].is_empty() {
            continue;
        }
        let m = rng.gen_range(0..pools[t].len());
        out.push((pools[t][m].clone(), templates[t].clone()));
    }
    out
}

/// Random total labelings of a k-by-k grid over a domino system.
pub fn random_labeling(
    sys: &crate::reductions::DominoSystem,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<(usize, usize), String> {
    let mut labels = BTreeMap::new();
    for i in 0..k {
        for j in 0..k {
            let d = rng.gen_range(0..sys.tiles.len());
            labels.insert((i, j), sys.tiles[d].clone());
        }
    }
    labels
}

/// Random formula ASTs for round-trip properties: plain seeded generation
/// mirroring the grammar.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    let vars = ["x", "y", "z", "u"];
    let var = |rng: &mut ChaCha8Rng| vars[rng.gen_range(0..vars.len())];
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..4) {
            0 => Formula::atom("P", &[var(rng)]),
            1 => Formula::atom("S", &[var(rng), var(rng)]),
            2 => Formula::atom("<", &[var(rng), var(rng)]),
            _ => Formula::eq(var(rng), var(rng)),
        };
    }
    match rng.gen_range(0..7) {
        0 => Formula::not(random_formula(rng, depth - 1)),
        1 => Formula::and(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        2 => Formula::or(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        3 => Formula::implies(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        4 => Formula::iff(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        5 => {
            let n = rng.gen_range(1..=3);
            let vs: Vec<&str> = (0..n).map(|_| var(rng)).collect();
            let mut uniq: Vec<&str> = vec![];
            for v in vs {
                if !uniq.contains(&v) {
                    uniq.push(v);
                }
            }
            Formula::exists(&uniq, random_formula(rng, depth - 1))
        }
        _ => {
            let n = rng.gen_range(1..=3);
            let vs: Vec<&str> = (0..n).map(|_| var(rng)).collect();
            let mut uniq: Vec<&str> = vec![];
            for v in vs {
                if !uniq.contains(&v) {
                    uniq.push(v);
                }
            }
            Formula::forall(&uniq, random_formula(rng, depth - 1))
        }
    }
}

/// Random two-variable-style sentences whose binary atoms use two distinct
/// variables; every such sentence passes the fully uniform profile.
pub fn random_two_variable_sentence(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    fn body(rng: &mut ChaCha8Rng, x: &str, y: &str, depth: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.35) {
            return match rng.gen_range(0..4) {
                0 => Formula::atom("P", &[x]),
                1 => Formula::atom("Q", &[y]),
                2 => Formula::atom("S", &[x, y]),
                _ => Formula::atom("S", &[y, x]),
            };
        }
        match rng.gen_range(0..5) {
            0 => Formula::not(body(rng, x, y, depth - 1)),
            1 => Formula::and(body(rng, x, y, depth - 1), body(rng, x, y, depth - 1)),
            2 => Formula::or(body(rng, x, y, depth - 1), body(rng, x, y, depth - 1)),
            3 => {
                // quantify the inner variable, keeping one free
                let inner = body(rng, y, x, depth - 1);
                Formula::exists(&[y], inner)
            }
            _ => {
                let inner = body(rng, y, x, depth - 1);
                Formula::forall(&[y], inner)
            }
        }
    }
    let inner = body(rng, "x", "y", depth);
    if rng.gen_bool(0.5) {
        Formula::exists(&["x"], Formula::exists(&["y"], inner))
    } else {
        Formula::forall(&["x"], Formula::forall(&["y"], inner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragment::check_fragment;

    #[test]
    fn fragment_corpus_has_thirty_cases_and_classifies_exactly() {
        let corpus = fragment_corpus();
        assert!(corpus.len() >= 30);
        for case in corpus {
            let f = parse_formula(case.text, None).unwrap();
            let report = check_fragment(&f, &case.profile);
            assert_eq!(
                report.accepted, case.accept,
                "{} under {}: {:?}",
                case.text, case.profile, report.violations
            );
            if let Some(kind) = case.kind {
                assert!(report.has(kind), "{}: wanted {kind} in {:?}", case.text, report.violations);
            }
        }
    }

    #[test]
    fn fragment_acceptance_is_monotone_in_exemptions() {
        for case in fragment_corpus() {
            if !matches!(case.profile, FragmentProfile::U1) || !case.accept {
                continue;
            }
            let f = parse_formula(case.text, None).unwrap();
            let free = FragmentProfile::U1Free(vec!["<1".into(), "<2".into(), "S".into()]);
            assert!(
                check_fragment(&f, &free).accepted,
                "{} lost acceptance under exemptions",
                case.text
            );
        }
    }

    #[test]
    fn normal_form_corpus_is_u1() {
        for text in normal_form_corpus() {
            let f = parse_formula(text, None).unwrap();
            assert!(
                check_fragment(&f, &FragmentProfile::U1).accepted,
                "{text}"
            );
            let non_order: usize = f
                .infer_vocabulary()
                .unwrap()
                .iter()
                .filter(|(n, _)| !n.starts_with('<'))
                .count();
            assert!(non_order <= 2, "{text} uses too many symbols");
        }
    }

    #[test]
    fn random_pairs_satisfy_their_sentences() {
        let pairs = random_model_pairs(42, 25, 3);
        assert_eq!(pairs.len(), 25);
        for (st, nf) in pairs {
            assert!(crate::constructions::holds_sentence(&st, &nf));
        }
    }

    #[test]
    fn random_two_variable_sentences_pass_fully_uniform_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let f = random_two_variable_sentence(&mut rng, 3);
            let report = check_fragment(&f, &FragmentProfile::Fu1);
            assert!(report.accepted, "{f}: {:?}", report.violations);
        }
    }

    #[test]
    fn random_asts_roundtrip_through_the_grammar() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let f = random_formula(&mut rng, 4);
            let text = crate::formula::render_formula(&f);
            let g = parse_formula(&text, None)
                .unwrap_or_else(|e| panic!("`{text}` fails to reparse: {e}"));
            assert_eq!(f, g, "{text}");
        }
    }
}
