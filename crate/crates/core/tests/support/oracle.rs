//! Brute-force reference parser over a small fixed lexicon.
//!
//! Plain recursion over every split point, no memo, no phrase index. Each
//! derivation carries a tally of lexicon tokens, hole tokens and holes, and is
//! scored as `2 * lex - hole_tokens - 3 * holes` only at the end.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use teachable::dsl::{CmpOp, Expr, TypedValue, Unit};
use teachable::parser::Lexicon;
use teachable::text::tokenize;

const COPULAS: &[&str] = &["is", "are", "was", "be", "gets", "takes", "costs", "it's", "feels", "seems"];
const DETERMINERS: &[&str] = &["the", "a", "an", "my", "our", "your"];

pub const PROCEDURE: &str = "order_Shop";
pub const SLOT: &str = "item";

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    If,
    Otherwise,
    Bool(&'static str),
    Value(&'static str),
    Cmp(&'static [CmpOp]),
    Unit(Unit, &'static str),
    Trigger(&'static str),
    Template(&'static str),
    Argument(&'static str),
}

/// The twelve entries both parsers see.
pub const FIXTURE: [(&str, Kind); 12] = [
    ("if", Kind::If),
    ("otherwise", Kind::Otherwise),
    ("hot", Kind::Bool("hot")),
    ("it's hot", Kind::Bool("hot")),
    ("temperature", Kind::Value("temperature")),
    ("above", Kind::Cmp(&[CmpOp::Gt])),
    ("better than", Kind::Cmp(&[CmpOp::Gt, CmpOp::Lt])),
    ("minutes", Kind::Unit(Unit::Minute, "min")),
    ("order coffee", Kind::Trigger("coffee")),
    ("order {item}", Kind::Template("coffee")),
    ("coffee", Kind::Argument("coffee")),
    ("tea", Kind::Argument("tea")),
];

/// Every distinct surface word of the fixture plus grammar glue and one number.
pub const ALPHABET: [&str; 18] = [
    "if", "otherwise", "hot", "it's", "temperature", "above", "better", "than", "minutes", "order", "coffee", "tea",
    "is", "the", "then", ",", "30", "x",
];

fn call(item: &str) -> Expr {
    Expr::Call {
        procedure: PROCEDURE.into(),
        args: BTreeMap::from([(SLOT.to_string(), item.to_string())]),
    }
}

pub fn fixture_lexicon() -> Lexicon {
    let mut tsv = String::new();
    for (phrase, kind) in FIXTURE {
        let (category, payload) = match kind {
            Kind::If => ("ConditionalMarker", "if".to_string()),
            Kind::Otherwise => ("ElseMarker", "else".to_string()),
            Kind::Bool(n) => ("BoolConcept", n.to_string()),
            Kind::Value(n) => ("ValueConcept", n.to_string()),
            Kind::Cmp(ops) => (
                "ComparisonWord",
                ops.iter().map(|o| if *o == CmpOp::Gt { "GT" } else { "LT" }).collect::<Vec<_>>().join(","),
            ),
            Kind::Unit(_, tag) => ("Unit", tag.to_string()),
            Kind::Trigger(item) | Kind::Template(item) => ("Procedure", call(item).to_string()),
            Kind::Argument(item) => ("Procedure", format!("{PROCEDURE}.{SLOT}={item}")),
        };
        tsv.push_str(&format!("{phrase}\t{category}\t{payload}\n"));
    }
    Lexicon::from_tsv(&tsv).expect("fixture lexicon")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub lex: i32,
    pub hole_tokens: i32,
    pub holes: i32,
}

impl Tally {
    fn lex(n: usize) -> Self {
        Tally { lex: n as i32, ..Tally::default() }
    }

    fn hole(n: usize) -> Self {
        Tally {
            lex: 0,
            hole_tokens: n as i32,
            holes: 1,
        }
    }

    fn plus(self, o: Tally) -> Self {
        Tally {
            lex: self.lex + o.lex,
            hole_tokens: self.hole_tokens + o.hole_tokens,
            holes: self.holes + o.holes,
        }
    }

    pub fn score(self) -> i32 {
        2 * self.lex - self.hole_tokens - 3 * self.holes
    }
}

type Ds = Vec<(Expr, Tally)>;

pub struct Oracle {
    words: Vec<String>,
    texts: Vec<String>,
}

/// One ranked reading: canonical text and score.
pub type Reading = (String, i32);

impl Oracle {
    pub fn new(utterance: &str) -> Self {
        let toks = tokenize(utterance);
        Oracle {
            words: toks.iter().map(|t| t.norm.clone()).collect(),
            texts: toks.iter().map(|t| t.text.clone()).collect(),
        }
    }

    fn n(&self) -> usize {
        self.words.len()
    }

    fn text(&self, i: usize, j: usize) -> String {
        self.texts[i..j].join(" ")
    }

    fn entries(&self, i: usize, j: usize) -> Vec<Kind> {
        if i >= j {
            return Vec::new();
        }
        let span = self.words[i..j].join(" ");
        FIXTURE.iter().filter(|(p, _)| *p == span).map(|(_, k)| *k).collect()
    }

    fn is(&self, i: usize, w: &str) -> bool {
        self.words.get(i).is_some_and(|x| x == w)
    }

    fn if_ends(&self, i: usize) -> Vec<usize> {
        (i + 1..=self.n()).filter(|&e| self.entries(i, e).iter().any(|k| matches!(k, Kind::If))).collect()
    }

    fn otherwise_ends(&self, i: usize) -> Vec<usize> {
        (i + 1..=self.n()).filter(|&e| self.entries(i, e).iter().any(|k| matches!(k, Kind::Otherwise))).collect()
    }

    fn marker_word(w: &str) -> bool {
        w == "if" || w == "otherwise"
    }

    fn clause(&self, i: usize, j: usize) -> bool {
        i < j && self.words[i..j].iter().all(|w| w != "," && w != "then" && !Self::marker_word(w))
    }

    fn value_clause(&self, i: usize, j: usize) -> bool {
        self.clause(i, j)
            && !DETERMINERS.contains(&self.words[i].as_str())
            && self.words[i..j].iter().all(|w| {
                !COPULAS.contains(&w.as_str()) && !["than", "above", "better", "means"].contains(&w.as_str())
            })
    }

    fn bools(&self, i: usize, j: usize) -> Ds {
        let mut out = Ds::new();
        if i >= j {
            return out;
        }
        // [subject copula] concept
        for k in i..j {
            if k > i && !(COPULAS.contains(&self.words[k - 1].as_str()) && self.clause(i, k)) {
                continue;
            }
            for kind in self.entries(k, j) {
                if let Kind::Bool(name) = kind {
                    out.push((Expr::BoolConcept(name.into()), Tally::lex(j - k)));
                }
            }
        }
        // VALUE [copula] CMP [than] VALUE
        for b in i + 1..j {
            for c in b + 1..j {
                for kind in self.entries(b, c) {
                    let Kind::Cmp(ops) = kind else { continue };
                    let mut lhs_ends = vec![b];
                    if b >= i + 2 && COPULAS.contains(&self.words[b - 1].as_str()) {
                        lhs_ends.push(b - 1);
                    }
                    let mut rhs_starts = vec![c];
                    if self.is(c, "than") && c + 1 < j {
                        rhs_starts.push(c + 1);
                    }
                    for &a in &lhs_ends {
                        for &d in &rhs_starts {
                            for (l, lt) in self.values(i, a) {
                                for (r, rt) in self.values(d, j) {
                                    for &op in ops {
                                        let e = Expr::Compare {
                                            lhs: Box::new(l.clone()),
                                            op,
                                            rhs: Box::new(r.clone()),
                                        };
                                        out.push((e, Tally::lex(c - b).plus(lt).plus(rt)));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if self.clause(i, j) {
            out.push((Expr::ResolveBool(self.text(i, j)), Tally::hole(j - i)));
        }
        out
    }

    fn values(&self, i: usize, j: usize) -> Ds {
        let mut out = Ds::new();
        if i >= j {
            return out;
        }
        if let Ok(x) = self.words[i].parse::<u32>() {
            if j == i + 1 {
                out.push((Expr::Const(TypedValue::number(x as f64).unwrap()), Tally::default()));
            }
            for kind in self.entries(i + 1, j) {
                if let Kind::Unit(unit, _) = kind {
                    let v = TypedValue::new(x as f64, unit).unwrap().normalize();
                    out.push((Expr::Const(v), Tally::lex(j - i - 1)));
                }
            }
        }
        let mut starts = vec![i];
        if j > i + 1 && DETERMINERS.contains(&self.words[i].as_str()) {
            starts.push(i + 1);
        }
        for s in starts {
            for kind in self.entries(s, j) {
                if let Kind::Value(name) = kind {
                    out.push((Expr::ValueConcept(name.into()), Tally::lex(j - s)));
                }
            }
            if self.value_clause(s, j) {
                out.push((Expr::ResolveValue(self.text(s, j)), Tally::hole(j - s)));
            }
        }
        out
    }

    fn actions(&self, i: usize, j: usize, known_only: bool) -> Ds {
        let mut out = Ds::new();
        if i >= j {
            return out;
        }
        for kind in self.entries(i, j) {
            if let Kind::Trigger(item) = kind {
                out.push((call(item), Tally::lex(j - i)));
            }
        }
        // the only template is `order {item}`
        if j >= i + 2 && self.words[i] == "order" {
            let mut starts = vec![i + 1];
            if j > i + 2 && DETERMINERS.contains(&self.words[i + 1].as_str()) {
                starts.push(i + 2);
            }
            for a in starts {
                for kind in self.entries(a, j) {
                    if let Kind::Argument(item) = kind {
                        out.push((call(item), Tally::lex(1 + j - a)));
                    }
                }
            }
        }
        if !known_only && self.clause(i, j) {
            out.push((Expr::ResolveProcedure(self.text(i, j)), Tally::hole(j - i)));
        }
        out
    }

    fn comma_skips(&self, i: usize) -> Vec<usize> {
        if self.is(i, ",") {
            vec![i, i + 1]
        } else {
            vec![i]
        }
    }

    /// Readings of `[c, n)` as an else tail.
    fn else_tails(&self, c: usize) -> Ds {
        let n = self.n();
        let mut out = Ds::new();
        for p in self.comma_skips(c) {
            for e in self.otherwise_ends(p) {
                for s in self.comma_skips(e) {
                    for m in s + 1..=n {
                        let trailing = if m == n {
                            Some(0)
                        } else {
                            self.if_ends(m)
                                .into_iter()
                                .filter(|&f| f < n && !self.words[f..n].iter().any(|w| w == ","))
                                .map(|f| f - m)
                                .max()
                        };
                        let Some(trailing) = trailing else { continue };
                        for (a, t) in self.actions(s, m, false) {
                            out.push((a, t.plus(Tally::lex(e - p + trailing))));
                        }
                    }
                }
            }
        }
        out
    }

    fn conditionals(&self, cond: &(Expr, Tally), then: &(Expr, Tally), end: usize, marker: usize, out: &mut Ds) {
        let base = Tally::lex(marker).plus(cond.1).plus(then.1);
        let build = |o: Option<Expr>| Expr::Conditional {
            cond: Box::new(cond.0.clone()),
            then: Box::new(then.0.clone()),
            otherwise: o.map(Box::new),
        };
        if end == self.n() {
            out.push((build(None), base));
        } else {
            for (o, t) in self.else_tails(end) {
                out.push((build(Some(o)), base.plus(t)));
            }
        }
    }

    fn command_derivations(&self) -> Ds {
        let n = self.n();
        let mut out = Ds::new();
        for e in self.if_ends(0) {
            for a in e + 1..n {
                let conds = self.bools(e, a);
                let mut starts = Vec::new();
                for p in self.comma_skips(a) {
                    starts.push(p);
                    if self.is(p, "then") {
                        starts.push(p + 1);
                    }
                }
                for p in starts {
                    for c in p + 1..=n {
                        for then in self.actions(p, c, false) {
                            for cond in &conds {
                                self.conditionals(cond, &then, c, e, &mut out);
                            }
                        }
                    }
                }
            }
        }
        for a in 1..n {
            let thens = self.actions(0, a, false);
            for q in self.comma_skips(a) {
                for e in self.if_ends(q) {
                    for b in e + 1..=n {
                        for cond in self.bools(e, b) {
                            for then in &thens {
                                self.conditionals(&cond, then, b, e - q, &mut out);
                            }
                        }
                    }
                }
            }
        }
        out.extend(self.actions(0, n, true));
        out
    }

    fn explanation_starts(&self, copula_intro: bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.n() {
            if self.words[..x].iter().enumerate().any(|(k, w)| w == "," && k + 1 != x) {
                continue;
            }
            let mut ends: Vec<(usize, usize)> = self.if_ends(x).into_iter().map(|e| (e, e - x)).collect();
            let w = self.words[x].as_str();
            if w == "means" || (copula_intro && COPULAS.contains(&w)) {
                ends.push((x + 1, 0));
            }
            for (e, lex) in ends {
                out.push((e, lex));
                if self.is(e, "that") {
                    out.push((e + 1, lex));
                }
            }
        }
        out
    }

    fn bool_explanation_derivations(&self) -> Ds {
        let n = self.n();
        let mut out = self.bools(0, n);
        for (s, lex) in self.explanation_starts(false) {
            out.extend(self.bools(s, n).into_iter().map(|(e, t)| (e, t.plus(Tally::lex(lex)))));
        }
        out
    }

    fn value_explanation_derivations(&self) -> Ds {
        let n = self.n();
        let mut out = self.values(0, n);
        for (s, lex) in self.explanation_starts(true) {
            out.extend(self.values(s, n).into_iter().map(|(e, t)| (e, t.plus(Tally::lex(lex)))));
        }
        out
    }

    fn ranked(derivations: Ds) -> Vec<Reading> {
        let mut best: BTreeMap<String, Tally> = BTreeMap::new();
        for (e, t) in derivations {
            let key = e.to_string();
            let keep = best.get(&key).is_none_or(|old| t.score() > old.score());
            if keep {
                best.insert(key, t);
            }
        }
        let mut rows: Vec<(i32, i32, i32, String)> =
            best.into_iter().map(|(k, t)| (-t.score(), t.holes, t.hole_tokens, k)).collect();
        rows.sort();
        rows.into_iter().map(|(s, _, _, k)| (k, -s)).collect()
    }

    pub fn command(&self) -> Vec<Reading> {
        if self.n() == 0 {
            return Vec::new();
        }
        Self::ranked(self.command_derivations())
    }

    pub fn bool_explanation(&self) -> Vec<Reading> {
        if self.n() == 0 {
            return Vec::new();
        }
        Self::ranked(self.bool_explanation_derivations())
    }

    pub fn value_explanation(&self) -> Vec<Reading> {
        if self.n() == 0 {
            return Vec::new();
        }
        Self::ranked(self.value_explanation_derivations())
    }

    pub fn action(&self) -> Vec<Reading> {
        if self.n() == 0 {
            return Vec::new();
        }
        Self::ranked(self.actions(0, self.n(), false))
    }
}

/// Every string of `1..=max_len` words over `alphabet`, joined by spaces.
pub fn all_utterances(alphabet: &[&str], max_len: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for prefix in &layer {
            for w in alphabet {
                let mut p = prefix.clone();
                p.push(w);
                next.push(p);
            }
        }
        out.extend(next.iter().map(|p| p.join(" ")));
        layer = next;
    }
    out
}

/// Distinct token sequences; the tokenizer folds leading, trailing and doubled commas.
pub fn distinct_by_tokens(utterances: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    utterances
        .into_iter()
        .filter(|u| seen.insert(tokenize(u).into_iter().map(|t| t.norm).collect::<Vec<_>>()))
        .collect()
}

/// Sentences built from grammar-shaped pieces, up to `max_len` tokens.
pub fn skeleton_utterances(max_len: usize) -> Vec<String> {
    const CONDS: &[&str] = &[
        "hot",
        "it's hot",
        "the x is hot",
        "x",
        "x x",
        "temperature above 30",
        "the temperature is above 30 minutes",
        "x better than 30",
        "temperature is better than the x",
        "it's x",
    ];
    const ACTS: &[&str] = &["order coffee", "order the tea", "order tea", "order x", "x", "x coffee", "order", "the x"];
    const SHAPES: &[&str] = &[
        "if C , A",
        "if C then A",
        "if C , then A",
        "if C A",
        "A if C",
        "A , if C",
        "if C , A otherwise B",
        "if C , A , otherwise , B",
        "A if C otherwise B",
        "A if C , otherwise B if x",
        "if C A otherwise B if C",
        "A",
        "C",
    ];
    let mut out = BTreeSet::new();
    for shape in SHAPES {
        for c in CONDS {
            for a in ACTS {
                for b in ACTS {
                    let s = shape.replace('C', c).replace('A', a).replace('B', b);
                    if s.split_whitespace().count() <= max_len {
                        out.insert(s);
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}
