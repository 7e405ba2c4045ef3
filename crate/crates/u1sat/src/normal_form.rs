//! Generalized Scott normal form: validation and conversion.
//!
//! A normal-form sentence is a conjunction of existential conjuncts
//! `forall x exists y1..yk (matrix)` and universal conjuncts
//! `forall x1..xl (matrix)` with quantifier-free U1 matrices. Conversion
//! renames quantified subformulas with fresh unary predicates and is
//! equisatisfiable in the expansion/reduct sense: a model of the input
//! expands to a model of the output and a model of the output reducts to
//! a model of the input.

use std::collections::BTreeSet;
use thiserror::Error;

use crate::formula::{Formula, QuantKind};
use crate::fragment::{check_fragment, FragmentProfile};
use crate::vocab::Vocabulary;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalFormError {
    #[error("not a U1 sentence: {0}")]
    NotU1(String),
    #[error("shape mismatch at conjunct {index}: {msg}")]
    Shape { index: usize, msg: String },
    #[error("input has free variables: {0:?}")]
    OpenFormula(Vec<String>),
}

/// An existential conjunct `forall x exists y1..yk (matrix)`. The matrix
/// uses the canonical spectator variable `x` and witness variables
/// `y1..yk`; vacuous spectators simply do not occur in the matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistentialConjunct {
    pub witness_count: usize,
    pub matrix: Formula,
}

impl ExistentialConjunct {
    pub fn spectator() -> String {
        "x".to_string()
    }

    pub fn witnesses(&self) -> Vec<String> {
        (1..=self.witness_count).map(|i| format!("y{i}")).collect()
    }

    pub fn all_vars(&self) -> Vec<String> {
        let mut v = vec![Self::spectator()];
        v.extend(self.witnesses());
        v
    }

    pub fn sentence(&self) -> Formula {
        let inner = Formula::Quant {
            kind: QuantKind::Exists,
            vars: self.witnesses(),
            body: Box::new(self.matrix.clone()),
        };
        Formula::Quant {
            kind: QuantKind::Forall,
            vars: vec![Self::spectator()],
            body: Box::new(inner),
        }
    }

    /// Live variables of the matrix.
    pub fn live_vars(&self) -> BTreeSet<String> {
        crate::formula::live_variables(&self.matrix).expect("matrix is quantifier-free")
    }
}

/// A universal conjunct `forall x1..xl (matrix)` over canonical variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniversalConjunct {
    pub var_count: usize,
    pub matrix: Formula,
}

impl UniversalConjunct {
    pub fn vars(&self) -> Vec<String> {
        (1..=self.var_count).map(|i| format!("x{i}")).collect()
    }

    pub fn sentence(&self) -> Formula {
        Formula::Quant {
            kind: QuantKind::Forall,
            vars: self.vars(),
            body: Box::new(self.matrix.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalFormSentence {
    pub vocabulary: Vocabulary,
    pub existential: Vec<ExistentialConjunct>,
    pub universal: Vec<UniversalConjunct>,
}

impl NormalFormSentence {
    /// Width: the maximum of `k+1` over existential conjuncts and `l` over
    /// universal conjuncts. Construction pads so this is at least 2.
    pub fn width(&self) -> usize {
        let e = self
            .existential
            .iter()
            .map(|c| c.witness_count + 1)
            .max()
            .unwrap_or(0);
        let u = self
            .universal
            .iter()
            .map(|c| c.var_count)
            .max()
            .unwrap_or(0);
        e.max(u)
    }

    pub fn m_exists(&self) -> usize {
        self.existential.len()
    }

    pub fn m_forall(&self) -> usize {
        self.universal.len()
    }

    /// `min(width, max arity)`, the largest support size that tables have
    /// to cover.
    pub fn m_bound(&self) -> usize {
        self.width().min(self.vocabulary.max_arity())
    }

    /// The sentence as a single formula.
    pub fn sentence(&self) -> Formula {
        let mut parts: Vec<Formula> = self
            .existential
            .iter()
            .map(ExistentialConjunct::sentence)
            .collect();
        parts.extend(self.universal.iter().map(UniversalConjunct::sentence));
        Formula::conjoin(parts, "x")
    }

    /// Node-count size measure used by every bound check.
    pub fn size(&self) -> usize {
        self.sentence().size()
    }

    /// Copy with `<` added to the vocabulary (the ordered pipeline assumes
    /// the order symbol is present).
    pub fn with_order(&self) -> NormalFormSentence {
        NormalFormSentence {
            vocabulary: self.vocabulary.with_order(),
            existential: self.existential.clone(),
            universal: self.universal.clone(),
        }
    }
}

fn canonical_exists(matrix: &Formula, spectator: &str, witnesses: &[String]) -> ExistentialConjunct {
    let map = |v: &str| -> String {
        if v == spectator {
            return ExistentialConjunct::spectator();
        }
        match witnesses.iter().position(|w| w == v) {
            Some(i) => format!("y{}", i + 1),
            None => v.to_string(),
        }
    };
    ExistentialConjunct {
        witness_count: witnesses.len(),
        matrix: matrix.rename(&map),
    }
}

fn canonical_forall(matrix: &Formula, vars: &[String]) -> UniversalConjunct {
    let map = |v: &str| -> String {
        match vars.iter().position(|w| w == v) {
            Some(i) => format!("x{}", i + 1),
            None => v.to_string(),
        }
    };
    UniversalConjunct {
        var_count: vars.len(),
        matrix: matrix.rename(&map),
    }
}

fn split_conjuncts(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(l, r) => {
            split_conjuncts(l, out);
            split_conjuncts(r, out);
        }
        other => out.push(other.clone()),
    }
}

fn flatten(kind: QuantKind, f: &Formula) -> Option<(Vec<String>, &Formula)> {
    match f {
        Formula::Quant {
            kind: k,
            vars,
            body,
        } if *k == kind => {
            let mut all = vars.clone();
            let mut cur = body.as_ref();
            while let Formula::Quant {
                kind: k2,
                vars: v2,
                body: b2,
            } = cur
            {
                if *k2 != kind {
                    break;
                }
                all.extend(v2.iter().cloned());
                cur = b2.as_ref();
            }
            Some((all, cur))
        }
        _ => None,
    }
}

/// Parses a sentence that is syntactically in normal form. Existential
/// conjuncts must read `forall x exists ys (matrix)`; a bare existential
/// block binding two or more variables is accepted as an existential
/// conjunct with a vacuous spectator. The conversion output and the axiom
/// generator always use the explicit-spectator form.
pub fn validate_normal_form(f: &Formula) -> Result<NormalFormSentence, NormalFormError> {
    let free = f.free_vars();
    if !free.is_empty() {
        return Err(NormalFormError::OpenFormula(free.into_iter().collect()));
    }
    let desugared = f.desugar();
    let mut conjuncts = Vec::new();
    split_conjuncts(&desugared, &mut conjuncts);
    let mut existential = Vec::new();
    let mut universal = Vec::new();
    for (index, conj) in conjuncts.iter().enumerate() {
        if let Some((uvars, rest)) = flatten(QuantKind::Forall, conj) {
            if let Some((evars, matrix)) = flatten(QuantKind::Exists, rest) {
                if uvars.len() != 1 {
                    return Err(NormalFormError::Shape {
                        index,
                        msg: format!(
                            "existential conjuncts take one universal variable, found {}",
                            uvars.len()
                        ),
                    });
                }
                if !matrix.is_quantifier_free() {
                    return Err(NormalFormError::Shape {
                        index,
                        msg: "matrix is not quantifier-free".into(),
                    });
                }
                existential.push(canonical_exists(matrix, &uvars[0], &evars));
            } else {
                if !rest.is_quantifier_free() {
                    return Err(NormalFormError::Shape {
                        index,
                        msg: "universal conjunct matrix is not quantifier-free".into(),
                    });
                }
                universal.push(canonical_forall(rest, &uvars));
            }
        } else if let Some((evars, matrix)) = flatten(QuantKind::Exists, conj) {
            if evars.len() < 2 {
                return Err(NormalFormError::Shape {
                    index,
                    msg: "existential conjunct without a leading forall".into(),
                });
            }
            if !matrix.is_quantifier_free() {
                return Err(NormalFormError::Shape {
                    index,
                    msg: "matrix is not quantifier-free".into(),
                });
            }
            // vacuous spectator
            existential.push(canonical_exists(matrix, "", &evars));
        } else {
            return Err(NormalFormError::Shape {
                index,
                msg: "conjunct is not a quantifier block".into(),
            });
        }
    }
    let vocabulary = f
        .infer_vocabulary()
        .map_err(|e| NormalFormError::NotU1(e.to_string()))?;
    let nf = NormalFormSentence {
        vocabulary,
        existential,
        universal,
    };
    for (i, c) in nf.existential.iter().enumerate() {
        let report = check_fragment(&c.sentence(), &FragmentProfile::U1);
        if !report.accepted {
            return Err(NormalFormError::Shape {
                index: i,
                msg: format!("existential matrix is not a U1 matrix: {:?}", report.violations),
            });
        }
    }
    for (i, c) in nf.universal.iter().enumerate() {
        let report = check_fragment(&c.sentence(), &FragmentProfile::U1);
        if !report.accepted {
            return Err(NormalFormError::Shape {
                index: nf.existential.len() + i,
                msg: format!("universal matrix is not a U1 matrix: {:?}", report.violations),
            });
        }
    }
    Ok(nf)
}

/// Translates a U1 sentence into generalized Scott normal form.
///
/// Sentences already in shape are returned unchanged up to desugaring and
/// canonical variable names. Otherwise every quantified subformula is
/// replaced bottom-up by a fresh unary predicate with linking conjuncts in
/// both directions; the one free variable guaranteed by the fragment makes
/// the replacement well defined. The width is padded to at least 2 with a
/// vacuous two-variable universal conjunct.
pub fn to_normal_form(f: &Formula) -> Result<NormalFormSentence, NormalFormError> {
    let report = check_fragment(f, &FragmentProfile::U1);
    if !report.accepted {
        return Err(NormalFormError::NotU1(format!(
            "{} violation(s), first: {}",
            report.violations.len(),
            report.violations[0].message
        )));
    }
    let free = f.free_vars();
    if !free.is_empty() {
        return Err(NormalFormError::OpenFormula(free.into_iter().collect()));
    }
    let desugared = f.desugar();
    let mut nf = match validate_normal_form(&desugared) {
        Ok(nf) => nf,
        Err(_) => convert(&desugared),
    };
    if nf.width() < 2 {
        nf.universal.push(UniversalConjunct {
            var_count: 2,
            matrix: Formula::eq("x1", "x1"),
        });
    }
    Ok(nf)
}

struct Converter {
    vocab: Vocabulary,
    fresh: usize,
    existential: Vec<ExistentialConjunct>,
    universal: Vec<UniversalConjunct>,
}

impl Converter {
    fn fresh_pred(&mut self) -> String {
        loop {
            self.fresh += 1;
            let name = format!("NF{}", self.fresh);
            if !self.vocab.contains(&name) {
                self.vocab
                    .declare(name.clone(), 1)
                    .expect("fresh unary predicate");
                return name;
            }
        }
    }

    /// Replaces every quantified subformula by a fresh marker predicate,
    /// innermost first; returns a quantifier-free formula. Markers for
    /// closed subformulas take the variable `ctx` of the enclosing scope.
    fn strip(&mut self, f: &Formula, ctx: &str) -> Formula {
        match f {
            Formula::Atom { .. } | Formula::Equality(..) => f.clone(),
            Formula::Not(g) => Formula::not(self.strip(g, ctx)),
            Formula::And(l, r) => Formula::and(self.strip(l, ctx), self.strip(r, ctx)),
            Formula::Or(l, r) => Formula::or(self.strip(l, ctx), self.strip(r, ctx)),
            Formula::Implies(..) | Formula::Iff(..) => {
                unreachable!("input is desugared")
            }
            Formula::Quant { .. } => {
                let marker_arg = self.rename_block(f, ctx);
                marker_arg
            }
        }
    }

    /// Renames one maximal block: emits the two linking conjuncts and
    /// returns the marker atom that replaces the block.
    fn rename_block(&mut self, f: &Formula, ctx: &str) -> Formula {
        let (kind, vars, raw_body) = match f {
            Formula::Quant { kind, vars, body } => (*kind, vars.clone(), body.as_ref()),
            _ => unreachable!(),
        };
        // merge directly nested same-kind blocks
        let (vars, raw_body) = {
            let mut vars = vars;
            let mut cur = raw_body;
            while let Formula::Quant {
                kind: k2,
                vars: v2,
                body: b2,
            } = cur
            {
                if *k2 != kind {
                    break;
                }
                vars.extend(v2.iter().cloned());
                cur = b2.as_ref();
            }
            (vars, cur)
        };
        let free: Vec<String> = {
            let mut fr = f.free_vars();
            for v in &vars {
                fr.remove(v);
            }
            fr.into_iter().collect()
        };
        debug_assert!(free.len() <= 1, "one-dimensionality of the fragment");
        let spectator = free.first().cloned();
        let inner_ctx = spectator.clone().unwrap_or_else(|| vars[0].clone());
        let matrix = self.strip(raw_body, &inner_ctx);
        let pred = self.fresh_pred();
        let spec_var = spectator.clone().unwrap_or_else(|| "x".to_string());
        // avoid collision between the spectator name and block variables
        let spec_var = if vars.contains(&spec_var) {
            let mut cand = spec_var.clone();
            while vars.contains(&cand) {
                cand.push('_');
            }
            cand
        } else {
            spec_var
        };
        let marker_at = |v: &str| Formula::Atom {
            rel: pred.clone(),
            args: vec![v.to_string()],
        };
        match kind {
            QuantKind::Exists => {
                // P(x) -> exists ys (matrix)
                self.existential.push(canonical_exists(
                    &Formula::or(Formula::not(marker_at(&spec_var)), matrix.clone()),
                    &spec_var,
                    &vars,
                ));
                // matrix -> P(x), universally
                let mut uvars = vec![spec_var.clone()];
                uvars.extend(vars.clone());
                self.universal.push(canonical_forall(
                    &Formula::or(marker_at(&spec_var), Formula::not(matrix)),
                    &uvars,
                ));
            }
            QuantKind::Forall => {
                // P(x) -> matrix, universally
                let mut uvars = vec![spec_var.clone()];
                uvars.extend(vars.clone());
                self.universal.push(canonical_forall(
                    &Formula::or(Formula::not(marker_at(&spec_var)), matrix.clone()),
                    &uvars,
                ));
                // ~P(x) -> exists ys ~matrix
                self.existential.push(canonical_exists(
                    &Formula::or(marker_at(&spec_var), Formula::not(matrix)),
                    &spec_var,
                    &vars,
                ));
            }
        }
        marker_at(&spectator.unwrap_or_else(|| ctx.to_string()))
    }
}

fn convert(desugared: &Formula) -> NormalFormSentence {
    let vocab = desugared
        .infer_vocabulary()
        .expect("fragment check implies consistent arities");
    let mut cv = Converter {
        vocab,
        fresh: 0,
        existential: Vec::new(),
        universal: Vec::new(),
    };
    let top = cv.strip(desugared, "u");
    // the residue is quantifier-free with markers over `u`; assert it at
    // every point
    cv.universal.push(canonical_forall(&top, &["u".to_string()]));
    NormalFormSentence {
        vocabulary: cv.vocab,
        existential: cv.existential,
        universal: cv.universal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::structures::{
        enumerate_ordered_structures, model_check, Assignment,
    };

    /// Brute-force satisfiability over canonically ordered structures of
    /// sizes 1..=max.
    pub fn brute_sat(nf_or_f: &Formula, max: usize) -> bool {
        let vocab = nf_or_f.infer_vocabulary().unwrap().with_order();
        for size in 1..=max {
            for st in enumerate_ordered_structures(&vocab, size, true, 1 << 24).unwrap() {
                if model_check(&st, nf_or_f, &Assignment::new()).unwrap() {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn fixed_point_on_normal_shape() {
        let f = parse_formula("forall x . exists y . x < y", None).unwrap();
        let nf = to_normal_form(&f).unwrap();
        assert_eq!(nf.m_exists(), 1);
        assert_eq!(nf.m_forall(), 0);
        assert_eq!(nf.width(), 2);
        assert_eq!(
            nf.existential[0].matrix,
            Formula::atom("<", &["x", "y1"])
        );
    }

    #[test]
    fn exists_p_converts_with_one_existential_conjunct() {
        let f = parse_formula("exists x . P(x)", None).unwrap();
        let nf = to_normal_form(&f).unwrap();
        assert_eq!(nf.m_exists(), 1);
        assert!(nf.vocabulary.len() > 1, "fresh unary predicates added");
        // fresh symbols are unary only
        for (name, arity) in nf.vocabulary.iter() {
            if name != "P" {
                assert_eq!(arity, 1, "{name} must be unary");
            }
        }
        // equisatisfiable on domains up to 3
        assert_eq!(brute_sat(&f, 3), brute_sat(&nf.sentence(), 3));
        assert!(brute_sat(&nf.sentence(), 3));
    }

    #[test]
    fn validate_accepts_exactly_three_p() {
        let text = "(exists x1 x2 x3 . x1 != x2 & x1 != x3 & x2 != x3 & P(x1) & P(x2) & P(x3)) \
                    & (forall x1 x2 x3 x4 . (P(x1) & P(x2) & P(x3) & P(x4)) -> \
                    (x1 = x2 | x1 = x3 | x1 = x4 | x2 = x3 | x2 = x4 | x3 = x4))";
        let f = parse_formula(text, None).unwrap();
        let nf = validate_normal_form(&f).unwrap();
        assert_eq!(nf.width(), 4);
        assert_eq!(nf.m_exists(), 1);
        assert_eq!(nf.m_forall(), 1);
    }

    #[test]
    fn validate_rejects_bare_single_exists() {
        let f = parse_formula("exists x . P(x)", None).unwrap();
        assert!(matches!(
            validate_normal_form(&f),
            Err(NormalFormError::Shape { .. })
        ));
    }

    #[test]
    fn equisatisfiability_on_nested_sentences() {
        let texts = [
            "exists x . P(x) & ~Q(x)",
            "forall x . P(x) -> (exists y . S(x,y))",
            "exists x . forall y . x < y | x = y",
            "forall x . exists y . S(x,y) & (forall z . ~S(y,z))",
            "~(exists x . P(x))",
        ];
        for text in texts {
            let f = parse_formula(text, None).unwrap();
            let nf = to_normal_form(&f).unwrap();
            assert!(nf.width() >= 2);
            assert_eq!(
                brute_sat(&f, 3),
                brute_sat(&nf.sentence(), 3),
                "disagreement on {text}"
            );
            // conversion output revalidates
            let rt = validate_normal_form(&nf.sentence()).unwrap();
            assert_eq!(rt.width(), nf.width());
        }
    }

    #[test]
    fn width_is_block_size_plus_one_at_most() {
        let f = parse_formula("exists x . forall y z . ~S(x,y) -> P(z)", None).unwrap();
        // wait: ~S(x,y) has live {x,y}; block forall y z leaves {x} free; ok
        let nf = to_normal_form(&f).unwrap();
        assert!(nf.width() <= 3 + 1);
    }

    #[test]
    fn rejects_non_u1_input() {
        let f = parse_formula("exists x y z . S(x,y) | S(x,z)", None).unwrap();
        assert!(matches!(to_normal_form(&f), Err(NormalFormError::NotU1(_))));
    }

    #[test]
    fn rejects_open_input() {
        let f = parse_formula("P(x)", None).unwrap();
        assert!(matches!(
            to_normal_form(&f),
            Err(NormalFormError::OpenFormula(_))
        ));
    }
}
