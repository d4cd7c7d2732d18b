use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::rc::Rc;

use crate::dsl::{CmpOp, Expr, NodePath, Slot, TypedValue, Unit};
use crate::entities::extract_entities;
use crate::text::Token;

use super::grammar::{is_copula, is_determiner, EXPLANATION_WORDS, THAN, THEN};
use super::lexicon::{Category, LexEntry, Lexicon, ProcedurePhrase};
use super::{Ambiguity, AmbiguityKind, ParseCandidate};

/// One derivation of a span: the expression plus everything needed to rank it.
#[derive(Debug, Clone)]
pub(crate) struct Deriv {
    pub expr: Expr,
    pub score: i32,
    pub ambiguities: Vec<Ambiguity>,
    pub spans: Vec<(NodePath, String)>,
}

impl Deriv {
    fn leaf(expr: Expr, score: i32, span: String) -> Self {
        Deriv {
            expr,
            score,
            ambiguities: Vec::new(),
            spans: vec![(NodePath::root(), span)],
        }
    }

    fn absorb(&mut self, child: &Deriv, slot: Slot) {
        let prefix = NodePath::root().child(slot);
        self.score += child.score;
        self.ambiguities.extend(child.ambiguities.iter().map(|a| Ambiguity {
            path: a.path.under(&prefix),
            kind: a.kind,
            alternatives: a.alternatives.clone(),
        }));
        self.spans.extend(child.spans.iter().map(|(p, s)| (p.under(&prefix), s.clone())));
    }

    pub fn into_candidate(self) -> ParseCandidate {
        let mut node_spans = BTreeMap::new();
        for (p, s) in self.spans {
            node_spans.entry(p).or_insert(s);
        }
        ParseCandidate {
            expr: self.expr,
            score: self.score,
            ambiguous_nodes: self.ambiguities,
            node_spans,
        }
    }
}

/// Keeps one derivation per distinct expression: the best scoring, then the least ambiguous.
pub(crate) fn dedupe(derivs: Vec<Deriv>) -> Vec<Deriv> {
    let mut best: BTreeMap<String, Deriv> = BTreeMap::new();
    for d in derivs {
        let key = d.expr.to_string();
        match best.get(&key) {
            Some(old) if (old.score, -(old.ambiguities.len() as i64)) >= (d.score, -(d.ambiguities.len() as i64)) => {}
            _ => {
                best.insert(key, d);
            }
        }
    }
    best.into_values().collect()
}

struct Template {
    call: Expr,
    slot: String,
    prefix: Vec<String>,
    suffix: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Nt {
    Bool,
    Value,
    Action,
    KnownAction,
}

type Memo = HashMap<(Nt, usize, usize), Rc<Vec<Deriv>>>;

pub(crate) struct Chart<'a> {
    tokens: Vec<Token>,
    words: Vec<String>,
    phrases: HashMap<String, Vec<&'a LexEntry>>,
    templates: Vec<Template>,
    comparison_words: HashSet<String>,
    marker_words: HashSet<String>,
    memo: RefCell<Memo>,
}

impl<'a> Chart<'a> {
    pub fn new(tokens: Vec<Token>, lexicon: &'a Lexicon) -> Self {
        let mut phrases: HashMap<String, Vec<&LexEntry>> = HashMap::new();
        let mut templates = Vec::new();
        let mut comparison_words = HashSet::new();
        let mut marker_words = HashSet::new();
        for e in lexicon.entries() {
            match e.category {
                Category::ComparisonWord => comparison_words.extend(e.words()),
                Category::ConditionalMarker | Category::ElseMarker => marker_words.extend(e.words()),
                _ => {}
            }
            if let Some(ProcedurePhrase::Template {
                call,
                slot,
                prefix,
                suffix,
            }) = e.procedure_phrase()
            {
                templates.push(Template {
                    call,
                    slot,
                    prefix,
                    suffix,
                });
                continue;
            }
            phrases.entry(e.phrase.clone()).or_default().push(e);
        }
        let words = tokens.iter().map(|t| t.norm.clone()).collect();
        Chart {
            tokens,
            words,
            phrases,
            templates,
            comparison_words,
            marker_words,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    fn text(&self, i: usize, j: usize) -> String {
        self.tokens[i..j].iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
    }

    fn lookup(&self, i: usize, j: usize, category: Category) -> Vec<&'a LexEntry> {
        if i >= j {
            return Vec::new();
        }
        self.phrases
            .get(&self.words[i..j].join(" "))
            .map(|v| v.iter().copied().filter(|e| e.category == category).collect())
            .unwrap_or_default()
    }

    fn is_comma(&self, i: usize) -> bool {
        self.words.get(i).is_some_and(|w| w == ",")
    }

    /// End positions of conditional-marker phrases starting at `i`.
    pub fn markers_at(&self, i: usize, category: Category) -> Vec<usize> {
        (i + 1..=self.len()).filter(|&e| !self.lookup(i, e, category).is_empty()).collect()
    }

    fn clause_word_ok(&self, w: &str) -> bool {
        w != "," && w != THEN && !self.marker_words.contains(w)
    }

    fn bool_hole_ok(&self, i: usize, j: usize) -> bool {
        i < j && self.words[i..j].iter().all(|w| self.clause_word_ok(w))
    }

    fn value_hole_ok(&self, i: usize, j: usize) -> bool {
        self.bool_hole_ok(i, j)
            && !is_determiner(&self.words[i])
            && self.words[i..j].iter().all(|w| {
                !is_copula(w) && w != THAN && !self.comparison_words.contains(w) && !EXPLANATION_WORDS.contains(&w.as_str())
            })
    }

    fn memoized(&self, nt: Nt, i: usize, j: usize, build: impl FnOnce() -> Vec<Deriv>) -> Rc<Vec<Deriv>> {
        if let Some(hit) = self.memo.borrow().get(&(nt, i, j)) {
            return hit.clone();
        }
        let out = Rc::new(dedupe(build()));
        self.memo.borrow_mut().insert((nt, i, j), out.clone());
        out
    }

    pub fn boolean(&self, i: usize, j: usize) -> Rc<Vec<Deriv>> {
        self.memoized(Nt::Bool, i, j, || {
            let mut out = Vec::new();
            if i >= j {
                return out;
            }
            for k in i..j {
                let subject_ok = k == i || (is_copula(&self.words[k - 1]) && self.bool_hole_ok(i, k));
                if !subject_ok {
                    continue;
                }
                for e in self.lookup(k, j, Category::BoolConcept) {
                    out.push(Deriv::leaf(Expr::BoolConcept(e.payload.clone()), 2 * (j - k) as i32, self.text(i, j)));
                }
            }
            for b in i + 1..j {
                for c in b + 1..j {
                    for e in self.lookup(b, c, Category::ComparisonWord) {
                        self.comparisons(i, b, c, j, e, &mut out);
                    }
                }
            }
            if self.bool_hole_ok(i, j) {
                let len = (j - i) as i32;
                out.push(Deriv::leaf(Expr::ResolveBool(self.text(i, j)), -len - 3, self.text(i, j)));
            }
            out
        })
    }

    fn comparisons(&self, i: usize, b: usize, c: usize, j: usize, word: &LexEntry, out: &mut Vec<Deriv>) {
        let ops = word.operators();
        let mut lhs_ends = vec![b];
        if b > i + 1 && is_copula(&self.words[b - 1]) {
            lhs_ends.push(b - 1);
        }
        let mut rhs_starts = vec![c];
        if self.words[c] == THAN && c + 1 < j {
            rhs_starts.push(c + 1);
        }
        for &a in &lhs_ends {
            let lhs_all = self.value(i, a);
            if lhs_all.is_empty() {
                continue;
            }
            for &d in &rhs_starts {
                let rhs_all = self.value(d, j);
                for lhs in lhs_all.iter() {
                    for rhs in rhs_all.iter() {
                        let build = |op: CmpOp| Expr::Compare {
                            lhs: Box::new(lhs.expr.clone()),
                            op,
                            rhs: Box::new(rhs.expr.clone()),
                        };
                        for &op in &ops {
                            let mut d = Deriv::leaf(build(op), 2 * (c - b) as i32, self.text(i, j));
                            d.absorb(lhs, Slot::Lhs);
                            d.absorb(rhs, Slot::Rhs);
                            if ops.len() > 1 {
                                d.ambiguities.push(Ambiguity {
                                    path: NodePath::root(),
                                    kind: AmbiguityKind::Operator,
                                    alternatives: ops.iter().map(|&o| build(o)).collect(),
                                });
                            }
                            out.push(d);
                        }
                    }
                }
            }
        }
    }

    pub fn value(&self, i: usize, j: usize) -> Rc<Vec<Deriv>> {
        self.memoized(Nt::Value, i, j, || {
            let mut out = Vec::new();
            if i >= j {
                return out;
            }
            for (value, lex_tokens, celsius) in self.constants(i, j) {
                let mut d = Deriv::leaf(Expr::Const(value), 2 * lex_tokens as i32, self.text(i, j));
                if let Some(c) = celsius {
                    d.ambiguities.push(Ambiguity {
                        path: NodePath::root(),
                        kind: AmbiguityKind::Unit,
                        alternatives: vec![Expr::Const(value), Expr::Const(c)],
                    });
                }
                out.push(d);
            }
            let mut starts = vec![i];
            if j > i + 1 && is_determiner(&self.words[i]) {
                starts.push(i + 1);
            }
            for s in starts {
                for e in self.lookup(s, j, Category::ValueConcept) {
                    out.push(Deriv::leaf(Expr::ValueConcept(e.payload.clone()), 2 * (j - s) as i32, self.text(i, j)));
                }
                if self.value_hole_ok(s, j) {
                    let len = (j - s) as i32;
                    out.push(Deriv::leaf(Expr::ResolveValue(self.text(s, j)), -len - 3, self.text(i, j)));
                }
            }
            out
        })
    }

    /// Number (digits or number words) optionally followed by one unit phrase.
    /// Returns the value, the number of lexicon tokens used, and the Celsius
    /// reading when the unit was a bare "degrees".
    fn constants(&self, i: usize, j: usize) -> Vec<(TypedValue, usize, Option<TypedValue>)> {
        let mut numbers: Vec<(usize, String, Option<TypedValue>, usize)> = Vec::new();
        let first = &self.tokens[i].text;
        if first.chars().any(|c| c.is_ascii_digit()) {
            if let [m] = extract_entities(first).as_slice() {
                if m.span == (0, first.len()) {
                    numbers.push((i + 1, first.clone(), Some(m.value), 0));
                }
            }
        } else {
            let mut total: f64 = 0.0;
            for m in i..j {
                let Some(v) = self.lookup(m, m + 1, Category::Number).first().and_then(|e| e.payload.parse::<f64>().ok()) else {
                    break;
                };
                total = if v == 100.0 { total.max(1.0) * 100.0 } else { total + v };
                numbers.push((m + 1, format_number(total), None, m + 1 - i));
            }
        }
        let mut out = Vec::new();
        for (m, surface, value, lex) in numbers {
            if m == j {
                let v = value.or_else(|| TypedValue::number(surface.parse().ok()?).ok());
                if let Some(v) = v {
                    out.push((v, lex, None));
                }
                continue;
            }
            for unit_entry in self.lookup(m, j, Category::Unit) {
                let Some(unit) = Unit::from_tag(&unit_entry.payload) else {
                    continue;
                };
                let plain = value.is_none_or(|v| v.unit() == Unit::Unitless);
                let typed = if plain && unit != Unit::MinuteOfDay {
                    TypedValue::new(surface.parse().unwrap_or(f64::NAN), unit).ok().map(|v| v.normalize())
                } else {
                    let full = format!("{surface} {}", unit_entry.phrase);
                    match extract_entities(&full).as_slice() {
                        [e] if e.span == (0, full.len()) && e.value.unit() == unit => Some(e.value.normalize()),
                        [e] if e.span == (0, full.len()) && e.value.dimension() == unit.dimension() => Some(e.value.normalize()),
                        _ => None,
                    }
                };
                let Some(v) = typed else { continue };
                let celsius = matches!(unit_entry.phrase.as_str(), "degrees" | "degree")
                    .then(|| TypedValue::celsius(surface.parse().ok()?).ok())
                    .flatten();
                out.push((v, lex + (j - m), celsius));
            }
        }
        out
    }

    pub fn action(&self, i: usize, j: usize, known_only: bool) -> Rc<Vec<Deriv>> {
        let nt = if known_only { Nt::KnownAction } else { Nt::Action };
        self.memoized(nt, i, j, || {
            let mut out = Vec::new();
            if i >= j {
                return out;
            }
            for e in self.lookup(i, j, Category::Procedure) {
                if let Some(ProcedurePhrase::Trigger(call)) = e.procedure_phrase() {
                    out.push(Deriv::leaf(call, 2 * (j - i) as i32, self.text(i, j)));
                }
            }
            for t in &self.templates {
                let (p, s) = (t.prefix.len(), t.suffix.len());
                if p + s >= j - i || self.words[i..i + p] != t.prefix[..] || self.words[j - s..j] != t.suffix[..] {
                    continue;
                }
                let (lo, hi) = (i + p, j - s);
                let mut starts = vec![lo];
                if hi > lo + 1 && is_determiner(&self.words[lo]) {
                    starts.push(lo + 1);
                }
                let Expr::Call { procedure, args } = &t.call else {
                    continue;
                };
                for a in starts {
                    for e in self.lookup(a, hi, Category::Procedure) {
                        let Some(ProcedurePhrase::Argument { procedure: proc_name, slot, value }) = e.procedure_phrase() else {
                            continue;
                        };
                        if proc_name != *procedure || slot != t.slot {
                            continue;
                        }
                        let mut args = args.clone();
                        args.insert(slot, value);
                        let call = Expr::Call {
                            procedure: procedure.clone(),
                            args,
                        };
                        out.push(Deriv::leaf(call, 2 * (p + s + hi - a) as i32, self.text(i, j)));
                    }
                }
            }
            if !known_only && self.bool_hole_ok(i, j) {
                let len = (j - i) as i32;
                out.push(Deriv::leaf(Expr::ResolveProcedure(self.text(i, j)), -len - 3, self.text(i, j)));
            }
            out
        })
    }

    /// Positions right after an optional comma at `i`.
    fn after_comma(&self, i: usize) -> Vec<usize> {
        let mut v = vec![i];
        if self.is_comma(i) {
            v.push(i + 1);
        }
        v
    }

    /// `[,] else-marker [,] ACTION [marker trailing-words]` over `[c, n)`.
    fn else_tail(&self, c: usize) -> Vec<Deriv> {
        let n = self.len();
        let mut out = Vec::new();
        for p in self.after_comma(c) {
            for e in self.markers_at(p, Category::ElseMarker) {
                let marker = 2 * (e - p) as i32;
                for start in self.after_comma(e) {
                    for m in start + 1..=n {
                        let tail = if m == n {
                            Some(0)
                        } else {
                            self.markers_at(m, Category::ConditionalMarker)
                                .into_iter()
                                .filter(|&f| f < n && (f..n).all(|k| !self.is_comma(k)))
                                .map(|f| 2 * (f - m) as i32)
                                .max()
                        };
                        let Some(tail) = tail else { continue };
                        for a in self.action(start, m, false).iter() {
                            let mut d = a.clone();
                            d.score += marker + tail;
                            out.push(d);
                        }
                    }
                }
            }
        }
        out
    }

    fn conditional(&self, cond: &Deriv, then: &Deriv, otherwise: Option<&Deriv>, fixed: i32, out: &mut Vec<Deriv>) {
        let expr = Expr::Conditional {
            cond: Box::new(cond.expr.clone()),
            then: Box::new(then.expr.clone()),
            otherwise: otherwise.map(|o| Box::new(o.expr.clone())),
        };
        let mut d = Deriv {
            expr,
            score: fixed,
            ambiguities: Vec::new(),
            spans: Vec::new(),
        };
        d.absorb(cond, Slot::Cond);
        d.absorb(then, Slot::Then);
        if let Some(o) = otherwise {
            d.absorb(o, Slot::Else);
        }
        out.push(d);
    }

    fn with_tails(&self, cond: &Deriv, then: &Deriv, end: usize, fixed: i32, out: &mut Vec<Deriv>) {
        if end == self.len() {
            self.conditional(cond, then, None, fixed, out);
        } else {
            for e in self.else_tail(end) {
                self.conditional(cond, then, Some(&e), fixed, out);
            }
        }
    }

    pub fn command(&self) -> Vec<Deriv> {
        let n = self.len();
        let mut out = Vec::new();
        // marker COND [,] [then] ACTION [ELSE]
        for e in self.markers_at(0, Category::ConditionalMarker) {
            let marker = 2 * e as i32;
            for a in e + 1..n {
                let conds = self.boolean(e, a);
                if conds.is_empty() {
                    continue;
                }
                let mut starts = Vec::new();
                for p in self.after_comma(a) {
                    starts.push(p);
                    if self.words.get(p).is_some_and(|w| w == THEN) {
                        starts.push(p + 1);
                    }
                }
                for p in starts {
                    for c in p + 1..=n {
                        for then in self.action(p, c, false).iter() {
                            for cond in conds.iter() {
                                self.with_tails(cond, then, c, marker, &mut out);
                            }
                        }
                    }
                }
            }
        }
        // ACTION [,] marker COND [ELSE]
        for a in 1..n {
            let thens = self.action(0, a, false);
            if thens.is_empty() {
                continue;
            }
            for q in self.after_comma(a) {
                for e in self.markers_at(q, Category::ConditionalMarker) {
                    let marker = 2 * (e - q) as i32;
                    for b in e + 1..=n {
                        for cond in self.boolean(e, b).iter() {
                            for then in thens.iter() {
                                self.with_tails(cond, then, b, marker, &mut out);
                            }
                        }
                    }
                }
            }
        }
        out.extend(self.action(0, n, true).iter().cloned());
        out
    }

    /// Start positions of the explanation body after `[glue] [,] word [that]`,
    /// with the score of the introducing word.
    fn explanation_starts(&self, allow_copula: bool) -> Vec<(usize, i32)> {
        let n = self.len();
        let mut out = Vec::new();
        for x in 0..n {
            if (0..x).any(|k| self.is_comma(k) && k + 1 != x) {
                continue;
            }
            let mut ends: Vec<(usize, i32)> = self
                .markers_at(x, Category::ConditionalMarker)
                .into_iter()
                .map(|e| (e, 2 * (e - x) as i32))
                .collect();
            let w = self.words[x].as_str();
            if EXPLANATION_WORDS.contains(&w) || (allow_copula && is_copula(w)) {
                ends.push((x + 1, 0));
            }
            for (e, score) in ends {
                out.push((e, score));
                if self.words.get(e).is_some_and(|w| w == "that") {
                    out.push((e + 1, score));
                }
            }
        }
        out
    }

    pub fn bool_explanation(&self) -> Vec<Deriv> {
        let n = self.len();
        let mut out: Vec<Deriv> = self.boolean(0, n).iter().cloned().collect();
        for (s, score) in self.explanation_starts(false) {
            for d in self.boolean(s, n).iter() {
                let mut d = d.clone();
                d.score += score;
                out.push(d);
            }
        }
        out
    }

    pub fn value_explanation(&self) -> Vec<Deriv> {
        let n = self.len();
        let mut out: Vec<Deriv> = self.value(0, n).iter().cloned().collect();
        for (s, score) in self.explanation_starts(true) {
            for d in self.value(s, n).iter() {
                let mut d = d.clone();
                d.score += score;
                out.push(d);
            }
        }
        out
    }
}

fn format_number(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}
