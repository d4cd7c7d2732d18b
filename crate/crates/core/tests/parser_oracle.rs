#[path = "support/oracle.rs"]
mod oracle;

use oracle::{all_utterances, distinct_by_tokens, fixture_lexicon, skeleton_utterances, Oracle, Reading, ALPHABET};
use proptest::prelude::*;
use teachable::parser::{parse_action, parse_bool_explanation, parse_command, parse_value_explanation, Lexicon, ValueExplanation};

fn readings(r: Result<Vec<teachable::parser::ParseCandidate>, teachable::parser::ParseError>) -> Vec<Reading> {
    r.map(|cs| cs.into_iter().map(|c| (c.expr.to_string(), c.score)).collect()).unwrap_or_default()
}

fn check(u: &str, lex: &Lexicon) -> Result<(), String> {
    let o = Oracle::new(u);
    let pairs = [
        ("command", readings(parse_command(u, lex)), o.command()),
        ("bool explanation", readings(parse_bool_explanation(u, lex)), o.bool_explanation()),
        (
            "value explanation",
            match parse_value_explanation(u, lex) {
                Ok(ValueExplanation::Parsed(cs)) => readings(Ok(cs)),
                _ => Vec::new(),
            },
            o.value_explanation(),
        ),
        ("action", readings(parse_action(u, lex)), o.action()),
    ];
    for (what, chart, brute) in pairs {
        if chart != brute {
            return Err(format!("{what} of {u:?}:\n chart {chart:?}\n brute {brute:?}"));
        }
    }
    Ok(())
}

#[test]
fn oracle_agrees_on_hand_picked_sentences() {
    let lex = fixture_lexicon();
    for u in [
        "if it's hot, order coffee",
        "if the temperature is better than 30 minutes then order the tea otherwise x",
        "order tea if hot, otherwise x if x",
        "x means it's hot",
        "it's hot if the temperature is above 30",
    ] {
        check(u, &lex).unwrap();
    }
    let o = Oracle::new("if it's hot, order coffee");
    assert_eq!(o.command()[0], (r#"(if (concept "hot") (proc "order_Shop" (item "coffee")))"#.to_string(), 10));
}

#[test]
fn oracle_agrees_on_every_short_utterance() {
    let lex = fixture_lexicon();
    for u in distinct_by_tokens(all_utterances(&ALPHABET, 3)) {
        check(&u, &lex).unwrap();
    }
}

#[test]
fn oracle_agrees_on_skeleton_sentences() {
    let lex = fixture_lexicon();
    for u in skeleton_utterances(8) {
        check(&u, &lex).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]
    #[test]
    fn oracle_agrees_on_random_utterances(words in proptest::collection::vec(0..ALPHABET.len(), 1..=8)) {
        let lex = fixture_lexicon();
        let u: Vec<&str> = words.iter().map(|&i| ALPHABET[i]).collect();
        let u = u.join(" ");
        prop_assert_eq!(check(&u, &lex), Ok(()));
    }
}
