//! Grammar-based parsing of commands and explanations into typed expressions.
//!
//! Spans the lexicon cannot ground become typed holes. Every derivation is
//! scored as `2 × lexicon tokens − tokens inside holes − 3 × holes`; grammar
//! function words and digits score nothing.

pub mod chart;
pub mod grammar;
pub mod lexicon;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dsl::{Expr, NodePath};
use crate::text::{phrase_words, tokenize};

use chart::{dedupe, Chart, Deriv};
pub use lexicon::{Category, LexEntry, Lexicon, LexiconError, LexiconSource, ProcedurePhrase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AmbiguityKind {
    /// A comparison word that names more than one operator.
    Operator,
    /// A bare "degrees" read as Fahrenheit.
    Unit,
    /// Another candidate differs only in how much text this hole covers.
    HoleExtent,
}

/// A node the parser is unsure about, with every reading it considered.
#[derive(Debug, Clone, PartialEq)]
pub struct Ambiguity {
    pub path: NodePath,
    pub kind: AmbiguityKind,
    pub alternatives: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseCandidate {
    pub expr: Expr,
    pub score: i32,
    pub ambiguous_nodes: Vec<Ambiguity>,
    /// Utterance text each node was derived from.
    pub node_spans: BTreeMap<NodePath, String>,
}

impl ParseCandidate {
    pub fn hole_tokens(&self) -> usize {
        self.expr.holes().iter().map(|h| h.span.split_whitespace().count()).sum()
    }

    /// Ordering key: score descending, then fewer holes, fewer hole tokens, canonical text.
    pub fn rank_key(&self) -> (i32, usize, usize, String) {
        (-self.score, self.expr.hole_count(), self.hole_tokens(), self.expr.to_string())
    }

    pub fn span(&self, path: &NodePath) -> Option<&str> {
        self.node_spans.get(path).map(String::as_str)
    }

    pub fn ambiguity(&self, kind: AmbiguityKind) -> Option<&Ambiguity> {
        self.ambiguous_nodes.iter().find(|a| a.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("could not understand {0:?}")]
    NoParse(String),
}

/// Result of parsing an answer to a value question.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueExplanation {
    DemonstrationRequested,
    Parsed(Vec<ParseCandidate>),
}

/// Sorts candidates by [`ParseCandidate::rank_key`].
pub fn rank(candidates: &mut [ParseCandidate]) {
    candidates.sort_by_cached_key(ParseCandidate::rank_key);
}

fn finish(utterance: &str, derivs: Vec<Deriv>) -> Result<Vec<ParseCandidate>, ParseError> {
    let mut out: Vec<ParseCandidate> = dedupe(derivs).into_iter().map(Deriv::into_candidate).collect();
    if out.is_empty() {
        return Err(ParseError::NoParse(utterance.to_string()));
    }
    rank(&mut out);
    let extents = hole_extent_ambiguities(&out);
    out[0].ambiguous_nodes.extend(extents);
    Ok(out)
}

/// Holes of the top candidate for which another candidate differs only in that hole.
fn hole_extent_ambiguities(candidates: &[ParseCandidate]) -> Vec<Ambiguity> {
    let top = &candidates[0].expr;
    let mut out = Vec::new();
    for hole in top.holes() {
        let Some(own) = top.get(&hole.path) else { continue };
        let mut alternatives = vec![own.clone()];
        for other in &candidates[1..] {
            let Some(alt) = other.expr.get(&hole.path) else { continue };
            if !alt.is_hole() || alt.ty() != hole.ty {
                continue;
            }
            if top.replace_node(&hole.path, alt.clone()).is_ok_and(|e| e == other.expr) {
                alternatives.push(alt.clone());
            }
        }
        if alternatives.len() > 1 {
            out.push(Ambiguity {
                path: hole.path,
                kind: AmbiguityKind::HoleExtent,
                alternatives,
            });
        }
    }
    out
}

fn chart<'a>(utterance: &str, lexicon: &'a Lexicon) -> Result<Chart<'a>, ParseError> {
    let tokens = tokenize(utterance);
    if tokens.is_empty() {
        return Err(ParseError::NoParse(utterance.to_string()));
    }
    Ok(Chart::new(tokens, lexicon))
}

/// Parses a top-level command: a conditional frame or a known procedure.
pub fn parse_command(utterance: &str, lexicon: &Lexicon) -> Result<Vec<ParseCandidate>, ParseError> {
    let c = chart(utterance, lexicon)?;
    finish(utterance, c.command())
}

/// Parses the answer to "how do I know whether ...": a Bool-typed expression.
pub fn parse_bool_explanation(utterance: &str, lexicon: &Lexicon) -> Result<Vec<ParseCandidate>, ParseError> {
    let c = chart(utterance, lexicon)?;
    finish(utterance, c.bool_explanation())
}

/// Parses the answer to "how do I find out the value for ...".
pub fn parse_value_explanation(utterance: &str, lexicon: &Lexicon) -> Result<ValueExplanation, ParseError> {
    if grammar::requests_demonstration(&phrase_words(utterance)) {
        return Ok(ValueExplanation::DemonstrationRequested);
    }
    let c = chart(utterance, lexicon)?;
    finish(utterance, c.value_explanation()).map(ValueExplanation::Parsed)
}

/// Parses an action phrase: a known procedure or a procedure hole.
pub fn parse_action(utterance: &str, lexicon: &Lexicon) -> Result<Vec<ParseCandidate>, ParseError> {
    let c = chart(utterance, lexicon)?;
    let n = c.len();
    finish(utterance, c.action(0, n, false).iter().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{Parameter, RecordedScript};
    use crate::dsl::{CmpOp, TypedValue};

    fn top(utterance: &str, lex: &Lexicon) -> Expr {
        parse_command(utterance, lex).unwrap().remove(0).expr
    }

    fn text(e: &Expr) -> String {
        e.to_string()
    }

    #[test]
    fn unknown_conditional_becomes_holes() {
        let lex = Lexicon::seed();
        assert_eq!(
            text(&top("If it's hot, order a cup of Iced Cappuccino.", &lex)),
            r#"(if (resolve-bool "it's hot") (resolve-proc "order a cup of Iced Cappuccino"))"#
        );
        let e = top("Order Iced coffee when it's hot outside, otherwise order hot coffee when the weather is cold.", &lex);
        let Expr::Conditional { cond, then, otherwise } = e else { panic!() };
        assert_eq!(cond.hole_span(), Some("it's hot outside"));
        assert_eq!(then.hole_span(), Some("Order Iced coffee"));
        assert_eq!(otherwise.unwrap().hole_span(), Some("order hot coffee"));
    }

    #[test]
    fn empty_and_bare_unknown_commands_fail() {
        let lex = Lexicon::seed();
        assert!(parse_command("", &lex).is_err());
        assert!(parse_command("  . ", &lex).is_err());
        assert!(parse_command("order a coffee", &lex).is_err());
    }

    #[test]
    fn comparison_explanations() {
        let lex = Lexicon::seed();
        let c = parse_bool_explanation("It is hot when the temperature is above 85 degrees Fahrenheit.", &lex).unwrap();
        let expected = Expr::Compare {
            lhs: Box::new(Expr::ResolveValue("temperature".into())),
            op: CmpOp::Gt,
            rhs: Box::new(Expr::Const(TypedValue::fahrenheit(85.0).unwrap())),
        };
        assert_eq!(c[0].expr, expected);
        assert!(c[0].ambiguity(AmbiguityKind::Unit).is_none());

        let c = parse_bool_explanation("commute takes more than 30 minutes", &lex).unwrap();
        assert_eq!(text(&c[0].expr), r#"(> (resolve-value "commute") (const 30 min))"#);
        let c = parse_bool_explanation("the room price is below $100", &lex).unwrap();
        assert_eq!(text(&c[0].expr), r#"(< (resolve-value "room price") (const 100 USD))"#);
    }

    #[test]
    fn ambiguous_operator_yields_both_readings() {
        let lex = Lexicon::seed();
        let c = parse_bool_explanation("the rating is better than 2", &lex).unwrap();
        let ops: Vec<String> = c.iter().take(2).map(|c| text(&c.expr)).collect();
        assert!(ops.contains(&r#"(> (resolve-value "rating") (const 2))"#.to_string()));
        assert!(ops.contains(&r#"(< (resolve-value "rating") (const 2))"#.to_string()));
        let amb = c[0].ambiguity(AmbiguityKind::Operator).unwrap();
        assert_eq!(amb.alternatives.len(), 2);
        assert!(matches!(amb.alternatives[0], Expr::Compare { op: CmpOp::Gt, .. }));
    }

    #[test]
    fn bare_degrees_default_to_fahrenheit_and_are_flagged() {
        let lex = Lexicon::seed();
        let ValueExplanation::Parsed(c) = parse_value_explanation("85 degrees", &lex).unwrap() else { panic!() };
        assert_eq!(c[0].expr, Expr::Const(TypedValue::fahrenheit(85.0).unwrap()));
        assert!(c[0].ambiguity(AmbiguityKind::Unit).is_some());
        let ValueExplanation::Parsed(c) = parse_value_explanation("thirty minutes", &lex).unwrap() else { panic!() };
        assert_eq!(c[0].expr, Expr::Const(TypedValue::minutes(30.0).unwrap()));
    }

    #[test]
    fn value_explanations() {
        let lex = Lexicon::seed();
        assert_eq!(
            parse_value_explanation("Let me demonstrate for you.", &lex).unwrap(),
            ValueExplanation::DemonstrationRequested
        );
        let names = vec!["commute time".to_string()];
        let grown = lex.grow(LexiconSource::ValueConcept { name: "commute time", triggers: &names });
        let ValueExplanation::Parsed(c) = parse_value_explanation("the commute time", &grown).unwrap() else { panic!() };
        assert_eq!(c[0].expr, Expr::ValueConcept("commute time".into()));
    }

    #[test]
    fn pronouns_stay_unresolved() {
        let c = parse_bool_explanation("it takes longer than 30 minutes", &Lexicon::seed()).unwrap();
        assert_eq!(text(&c[0].expr), r#"(> (resolve-value "it") (const 30 min))"#);
    }

    #[test]
    fn learned_concepts_ground_later_parses() {
        let lex = Lexicon::seed();
        let before = top("If it's hot, turn on the AC.", &lex);
        assert!(matches!(before, Expr::Conditional { ref cond, .. } if cond.is_hole()));
        let triggers = vec!["it's hot".to_string()];
        let lex = lex.grow(LexiconSource::BoolConcept { name: "hot", triggers: &triggers });
        let after = top("If it's hot, turn on the AC.", &lex);
        let Expr::Conditional { cond, .. } = after else { panic!() };
        assert_eq!(*cond, Expr::BoolConcept("hot".into()));
    }

    #[test]
    fn learned_procedures_parse_with_arguments() {
        let script = RecordedScript {
            name: "order_Starbucks".into(),
            goal: "order iced coffee".into(),
            app: "Starbucks".into(),
            steps: Vec::new(),
            parameters: vec![Parameter {
                name: "item".into(),
                recorded_value: "Iced Coffee".into(),
                step: 1,
                alternatives: vec!["Hot Coffee".into(), "Hot Latte".into()],
            }],
        };
        let lex = Lexicon::seed().grow(LexiconSource::Procedure { script: &script, triggers: &[] });
        let c = parse_action("order hot coffee", &lex).unwrap();
        assert_eq!(text(&c[0].expr), r#"(proc "order_Starbucks" (item "Hot Coffee"))"#);
        let c = parse_action("order a hot latte", &lex).unwrap();
        assert_eq!(text(&c[0].expr), r#"(proc "order_Starbucks" (item "Hot Latte"))"#);
        assert_eq!(text(&top("order iced coffee", &lex)), r#"(proc "order_Starbucks" (item "Iced Coffee"))"#);
    }

    #[test]
    fn every_candidate_typechecks_and_is_ranked() {
        let lex = Lexicon::seed();
        for u in [
            "If it's hot, order a cup of Iced Cappuccino.",
            "Set an alarm for 7:00 am if the traffic is heavy.",
            "when the price is below 100 dollars then book it otherwise skip",
        ] {
            let c = parse_command(u, &lex).unwrap();
            for w in c.windows(2) {
                assert!(w[0].rank_key() <= w[1].rank_key());
            }
            for cand in &c {
                assert!(cand.expr.typecheck().is_ok(), "{}", cand.expr);
            }
        }
    }
}
