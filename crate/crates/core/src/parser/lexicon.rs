use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::demo::RecordedScript;
use crate::dsl::{CmpOp, Expr};
use crate::text::{find_subsequence, phrase_words};

use super::grammar::DETERMINERS;

const SEED: &str = include_str!("../../fixtures/lexicon/seed.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    BoolConcept,
    ValueConcept,
    Procedure,
    ComparisonWord,
    Unit,
    Number,
    ConditionalMarker,
    ElseMarker,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::BoolConcept,
        Category::ValueConcept,
        Category::Procedure,
        Category::ComparisonWord,
        Category::Unit,
        Category::Number,
        Category::ConditionalMarker,
        Category::ElseMarker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::BoolConcept => "BoolConcept",
            Category::ValueConcept => "ValueConcept",
            Category::Procedure => "Procedure",
            Category::ComparisonWord => "ComparisonWord",
            Category::Unit => "Unit",
            Category::Number => "Number",
            Category::ConditionalMarker => "ConditionalMarker",
            Category::ElseMarker => "ElseMarker",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| LexiconError {
                line: 0,
                message: format!("unknown category {s:?}"),
            })
    }
}

/// One phrase of the lexicon.
///
/// Procedure entries come in three shapes, told apart by phrase and payload:
/// a trigger (`order iced coffee` -> canonical call text), a template whose
/// phrase holds one `{slot}` word (payload: the call with its recorded
/// bindings), and an argument phrase (payload `procedure.slot=Value`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LexEntry {
    pub phrase: String,
    pub category: Category,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lexicon line {line}: {message}")]
pub struct LexiconError {
    pub line: usize,
    pub message: String,
}

/// Structured view of a procedure entry.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcedurePhrase {
    Trigger(Expr),
    Template { call: Expr, slot: String, prefix: Vec<String>, suffix: Vec<String> },
    Argument { procedure: String, slot: String, value: String },
}

impl LexEntry {
    pub fn new(phrase: &str, category: Category, payload: &str) -> Self {
        LexEntry {
            phrase: normalize_entry_phrase(phrase),
            category,
            payload: payload.trim().to_string(),
        }
    }

    pub fn words(&self) -> Vec<String> {
        self.phrase.split(' ').filter(|w| !w.is_empty()).map(str::to_string).collect()
    }

    pub fn operators(&self) -> Vec<CmpOp> {
        if self.category != Category::ComparisonWord {
            return Vec::new();
        }
        let mut ops: Vec<CmpOp> = self.payload.split(',').filter_map(|p| CmpOp::from_code(p.trim())).collect();
        ops.sort();
        ops.dedup();
        ops
    }

    pub fn procedure_phrase(&self) -> Option<ProcedurePhrase> {
        if self.category != Category::Procedure {
            return None;
        }
        let words = self.words();
        let slots: Vec<usize> = (0..words.len()).filter(|&i| is_slot(&words[i])).collect();
        if self.payload.starts_with('(') {
            let call: Expr = self.payload.parse().ok()?;
            if !matches!(call, Expr::Call { .. }) {
                return None;
            }
            return match slots.as_slice() {
                [] => Some(ProcedurePhrase::Trigger(call)),
                [p] => Some(ProcedurePhrase::Template {
                    call,
                    slot: words[*p][1..words[*p].len() - 1].to_string(),
                    prefix: words[..*p].to_vec(),
                    suffix: words[p + 1..].to_vec(),
                }),
                _ => None,
            };
        }
        let (target, value) = self.payload.split_once('=')?;
        let (procedure, slot) = target.split_once('.')?;
        Some(ProcedurePhrase::Argument {
            procedure: procedure.to_string(),
            slot: slot.to_string(),
            value: value.to_string(),
        })
    }
}

fn is_slot(word: &str) -> bool {
    word.len() > 2 && word.starts_with('{') && word.ends_with('}')
}

fn normalize_entry_phrase(phrase: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    for raw in phrase.split_whitespace() {
        if is_slot(raw) {
            out.push(raw.to_lowercase());
        } else {
            out.extend(phrase_words(raw));
        }
    }
    out.join(" ")
}

/// What to add to a lexicon.
#[derive(Debug, Clone, Copy)]
pub enum LexiconSource<'a> {
    BoolConcept { name: &'a str, triggers: &'a [String] },
    ValueConcept { name: &'a str, triggers: &'a [String] },
    Procedure { script: &'a RecordedScript, triggers: &'a [String] },
    ScreenLabels { procedure: &'a str, parameter: &'a str, labels: &'a [String] },
}

/// Phrase inventory of the parser. Values are immutable; growing returns a new lexicon.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeSet<LexEntry>,
}

fn concept_phrases(name: &str, triggers: &[String]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in std::iter::once(name).chain(triggers.iter().map(String::as_str)) {
        let words = phrase_words(t);
        if words.is_empty() {
            continue;
        }
        out.insert(words.join(" "));
        if words.len() > 1 && DETERMINERS.contains(&words[0].as_str()) {
            out.insert(words[1..].join(" "));
        }
    }
    out
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The bundled grammar vocabulary: markers, comparison words, units, number words.
    pub fn seed() -> Self {
        Self::from_tsv(SEED).expect("bundled seed lexicon is valid")
    }

    pub fn from_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [phrase, category, payload] = cols.as_slice() else {
                return Err(LexiconError {
                    line: line_no,
                    message: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            };
            let category: Category = category.trim().parse().map_err(|e: LexiconError| LexiconError {
                line: line_no,
                message: e.message,
            })?;
            let entry = LexEntry::new(phrase, category, payload);
            if entry.phrase.is_empty() || entry.payload.is_empty() {
                return Err(LexiconError {
                    line: line_no,
                    message: "empty phrase or payload".into(),
                });
            }
            if category == Category::ComparisonWord && entry.operators().is_empty() {
                return Err(LexiconError {
                    line: line_no,
                    message: format!("comparison payload {payload:?} names no operator"),
                });
            }
            lex.entries.insert(entry);
        }
        Ok(lex)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("# phrase\tcategory\tpayload\n");
        for e in &self.entries {
            s.push_str(&format!("{}\t{}\t{}\n", e.phrase, e.category, e.payload));
        }
        s
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, entry: &LexEntry) -> bool {
        self.entries.contains(entry)
    }

    pub fn insert(&mut self, entry: LexEntry) {
        if !entry.phrase.is_empty() {
            self.entries.insert(entry);
        }
    }

    pub fn with(mut self, entry: LexEntry) -> Self {
        self.insert(entry);
        self
    }

    /// Extended copy of this lexicon. Adding the same source twice changes nothing.
    pub fn grow(&self, source: LexiconSource<'_>) -> Lexicon {
        let mut out = self.clone();
        match source {
            LexiconSource::BoolConcept { name, triggers } => {
                for p in concept_phrases(name, triggers) {
                    out.insert(LexEntry::new(&p, Category::BoolConcept, name));
                }
            }
            LexiconSource::ValueConcept { name, triggers } => {
                for p in concept_phrases(name, triggers) {
                    out.insert(LexEntry::new(&p, Category::ValueConcept, name));
                }
            }
            LexiconSource::Procedure { script, triggers } => {
                let call = Expr::Call {
                    procedure: script.name.clone(),
                    args: script.recorded_bindings(),
                }
                .to_string();
                let phrases: BTreeSet<Vec<String>> = std::iter::once(&script.goal)
                    .chain(triggers.iter())
                    .map(|t| phrase_words(t))
                    .filter(|w| !w.is_empty())
                    .collect();
                for words in phrases {
                    out.insert(LexEntry::new(&words.join(" "), Category::Procedure, &call));
                    for p in &script.parameters {
                        let value = phrase_words(&p.recorded_value);
                        if let Some(at) = find_subsequence(&words, &value) {
                            let mut tpl = words[..at].to_vec();
                            tpl.push(format!("{{{}}}", p.name));
                            tpl.extend_from_slice(&words[at + value.len()..]);
                            out.insert(LexEntry::new(&tpl.join(" "), Category::Procedure, &call));
                            if at > 1 {
                                // `order a cup of {item}` also answers to `order {item}`
                                let mut short = vec![words[0].clone(), format!("{{{}}}", p.name)];
                                short.extend_from_slice(&words[at + value.len()..]);
                                out.insert(LexEntry::new(&short.join(" "), Category::Procedure, &call));
                            }
                        }
                    }
                }
                for p in &script.parameters {
                    let mut labels = vec![p.recorded_value.clone()];
                    labels.extend(p.alternatives.iter().cloned());
                    out = out.grow(LexiconSource::ScreenLabels {
                        procedure: &script.name,
                        parameter: &p.name,
                        labels: &labels,
                    });
                }
            }
            LexiconSource::ScreenLabels {
                procedure,
                parameter,
                labels,
            } => {
                for label in labels {
                    let payload = format!("{procedure}.{parameter}={}", label.trim());
                    out.insert(LexEntry::new(label, Category::Procedure, &payload));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{Parameter, RecordedScript};

    fn starbucks() -> RecordedScript {
        RecordedScript {
            name: "order_Starbucks".into(),
            goal: "order a cup of Iced Cappuccino".into(),
            app: "Starbucks".into(),
            steps: Vec::new(),
            parameters: vec![Parameter {
                name: "item".into(),
                recorded_value: "Iced Cappuccino".into(),
                step: 2,
                alternatives: vec!["Hot Latte".into()],
            }],
        }
    }

    #[test]
    fn seed_parses_and_round_trips() {
        let seed = Lexicon::seed();
        assert!(seed.len() > 50);
        assert_eq!(Lexicon::from_tsv(&seed.to_tsv()).unwrap(), seed);
        let better = seed.entries().find(|e| e.phrase == "better").unwrap();
        assert_eq!(better.operators(), [CmpOp::Gt, CmpOp::Lt]);
    }

    #[test]
    fn malformed_tsv_reports_line() {
        let err = Lexicon::from_tsv("hot\tBoolConcept\thot\nbad line\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(Lexicon::from_tsv("x\tNoSuch\ty\n").is_err());
    }

    #[test]
    fn growing_is_idempotent_and_monotone() {
        let lex = Lexicon::seed();
        let triggers = vec!["it's hot".to_string()];
        let once = lex.grow(LexiconSource::BoolConcept { name: "hot", triggers: &triggers });
        let twice = once.grow(LexiconSource::BoolConcept { name: "hot", triggers: &triggers });
        assert_eq!(once, twice);
        assert!(lex.entries().all(|e| once.contains(e)));
        assert!(once.contains(&LexEntry::new("it's hot", Category::BoolConcept, "hot")));
    }

    #[test]
    fn procedures_add_triggers_templates_and_arguments() {
        let script = starbucks();
        let lex = Lexicon::new().grow(LexiconSource::Procedure { script: &script, triggers: &[] });
        let kinds: Vec<ProcedurePhrase> = lex.entries().filter_map(LexEntry::procedure_phrase).collect();
        assert!(kinds.iter().any(|k| matches!(k, ProcedurePhrase::Trigger(_))));
        assert!(kinds.iter().any(|k| matches!(k, ProcedurePhrase::Template { slot, .. } if slot == "item")));
        assert!(lex.entries().any(|e| e.phrase == "hot latte" && e.payload == "order_Starbucks.item=Hot Latte"));
    }
}
