//! Turning utterance spans into concept names and phrases for questions.

use crate::dsl::{CmpOp, Expr};
use crate::parser::grammar::{is_copula, is_determiner};
use crate::text::{phrase_words, tokenize};

const PRONOUNS: &[&str] = &["it", "there", "this", "that", "they"];

fn strip_leading(words: &[String]) -> &[String] {
    let mut w = words;
    while let Some((first, rest)) = w.split_first() {
        if is_determiner(first) || PRONOUNS.contains(&first.as_str()) {
            w = rest;
        } else {
            break;
        }
    }
    w
}

/// `the traffic is heavy` -> `heavy traffic`, `it's hot` -> `hot`.
pub fn bool_concept_name(span: &str) -> String {
    let words = phrase_words(span);
    let name = match words.iter().position(|w| is_copula(w)) {
        Some(k) => {
            let subject = strip_leading(&words[..k]);
            let predicate = strip_leading(&words[k + 1..]);
            predicate.iter().chain(subject.iter()).cloned().collect::<Vec<_>>()
        }
        None => strip_leading(&words).to_vec(),
    };
    if name.is_empty() {
        words.join(" ")
    } else {
        name.join(" ")
    }
}

/// `the commute time` -> `commute time`.
pub fn value_concept_name(span: &str) -> String {
    let words = phrase_words(span);
    let mut w: &[String] = &words;
    while w.len() > 1 && is_determiner(&w[0]) {
        w = &w[1..];
    }
    w.join(" ")
}

/// Lowercases the first letter of a sentence-initial span.
pub fn context_label(span: &str) -> String {
    let span = span.trim();
    let mut cs = span.chars();
    match cs.next() {
        Some(f) if cs.clone().next().is_some_and(|c| c.is_lowercase() || c == ' ') => f.to_lowercase().chain(cs).collect(),
        _ => span.to_string(),
    }
}

/// Phrase for "What should I do if ...?": `it's hot` -> `it's not hot`.
pub fn negated_phrase(cond: &Expr, span: Option<&str>) -> String {
    if let Expr::Compare { lhs, op, rhs } = cond {
        return format!("{} is {} {}", describe(lhs), op.negated_words(), describe(rhs));
    }
    let span = span.map(str::to_string).unwrap_or_else(|| describe(cond));
    let tokens: Vec<String> = tokenize(&span).into_iter().map(|t| t.text).collect();
    match tokens.iter().position(|w| is_copula(&w.to_lowercase())) {
        Some(k) => {
            let mut out = tokens[..=k].to_vec();
            out.push("not".into());
            out.extend_from_slice(&tokens[k + 1..]);
            out.join(" ")
        }
        None => format!("not {span}"),
    }
}

/// Short English rendering of an expression for confirmations.
pub fn describe(e: &Expr) -> String {
    match e {
        Expr::Compare { lhs, op, rhs } => format!("{} is {} {}", describe(lhs), op.words(), describe(rhs)),
        Expr::BoolConcept(n) | Expr::ValueConcept(n) => n.clone(),
        Expr::Const(v) => v.to_string(),
        Expr::ResolveBool(s) | Expr::ResolveValue(s) | Expr::ResolveProcedure(s) => s.clone(),
        Expr::Call { procedure, args } => {
            if args.is_empty() {
                procedure.clone()
            } else {
                let a: Vec<String> = args.iter().map(|(k, v)| format!("{k} {v}")).collect();
                format!("{procedure} with {}", a.join(", "))
            }
        }
        Expr::Conditional { cond, then, otherwise } => {
            let mut s = format!("{} if {}", describe(then), describe(cond));
            if let Some(o) = otherwise {
                s.push_str(&format!(", otherwise {}", describe(o)));
            }
            s
        }
    }
}

/// Answer-option labels for comparison operators.
pub fn operator_option(op: CmpOp) -> String {
    op.words().to_string()
}

/// Reads yes/no answers.
pub fn yes_or_no(text: &str) -> Option<bool> {
    let words = phrase_words(text);
    let first = words.first()?;
    match first.as_str() {
        "yes" | "yeah" | "yep" | "sure" | "correct" | "right" | "ok" | "okay" | "y" => Some(true),
        "no" | "nope" | "wrong" | "n" | "incorrect" => Some(false),
        _ => None,
    }
}

/// Answers that decline to give an else branch.
pub fn is_decline(text: &str) -> bool {
    let words = phrase_words(text);
    matches!(
        words.iter().map(String::as_str).collect::<Vec<_>>().as_slice(),
        ["nothing"] | ["no"] | ["skip"] | ["do", "nothing"] | ["nothing", "else"] | ["no", "thanks"]
    )
}

pub fn is_undo(text: &str) -> bool {
    matches!(normalize(text).as_str(), "undo" | "go back" | "undo that")
}

pub fn is_finish(text: &str) -> bool {
    matches!(normalize(text).as_str(), "done" | "finish" | "finished" | "that's it" | "i'm done")
}

fn normalize(text: &str) -> String {
    phrase_words(text).join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::TypedValue;

    #[test]
    fn concept_names() {
        assert_eq!(bool_concept_name("it's hot"), "hot");
        assert_eq!(bool_concept_name("the traffic is heavy"), "heavy traffic");
        assert_eq!(bool_concept_name("there is enough budget"), "enough budget");
        assert_eq!(bool_concept_name("it's a good restaurant"), "good restaurant");
        assert_eq!(bool_concept_name("the hotel is cheap"), "cheap hotel");
        assert_eq!(value_concept_name("the commute time"), "commute time");
        assert_eq!(value_concept_name("Temperature"), "temperature");
    }

    #[test]
    fn negations() {
        assert_eq!(negated_phrase(&Expr::ResolveBool("it's hot".into()), Some("it's hot")), "it's not hot");
        assert_eq!(negated_phrase(&Expr::BoolConcept("hot".into()), Some("the traffic is heavy")), "the traffic is not heavy");
        assert_eq!(negated_phrase(&Expr::BoolConcept("raining".into()), None), "not raining");
        let c = Expr::Compare {
            lhs: Box::new(Expr::ValueConcept("price".into())),
            op: CmpOp::Lt,
            rhs: Box::new(Expr::Const(TypedValue::usd(100.0).unwrap())),
        };
        assert_eq!(negated_phrase(&c, Some("the price is below $100")), "price is at least $100");
    }

    #[test]
    fn answers() {
        assert_eq!(yes_or_no("Yes."), Some(true));
        assert_eq!(yes_or_no("no, it is not"), Some(false));
        assert_eq!(yes_or_no("maybe"), None);
        assert!(is_decline("Nothing."));
        assert!(is_decline("do nothing"));
        assert!(!is_decline("order hot coffee"));
        assert!(is_undo("Go back"));
        assert_eq!(context_label("Order a cup of Iced Cappuccino"), "order a cup of Iced Cappuccino");
        assert_eq!(context_label("AC on"), "AC on");
    }
}
