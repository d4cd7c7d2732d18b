//! Utterance tokenization shared by the parser, the recorder and the knowledge base.

/// One token of an utterance.
///
/// `text` keeps the user's casing with surrounding punctuation removed; `norm`
/// is its lowercase form. Clause-separating commas become their own `","` token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub norm: String,
}

impl Token {
    pub fn is_comma(&self) -> bool {
        self.norm == ","
    }

    fn comma() -> Self {
        Token {
            text: ",".to_string(),
            norm: ",".to_string(),
        }
    }
}

const TRAILING: &[char] = &['.', ',', ';', '!', '?', '"', ')', ']', '}', ':', '\'', '`'];
const LEADING: &[char] = &['"', '(', '[', '{', '\'', '`'];

/// Splits an utterance into tokens.
pub fn tokenize(utterance: &str) -> Vec<Token> {
    let cleaned = utterance.replace(['\u{2019}', '\u{2018}'], "'");
    let mut out = Vec::new();
    for raw in cleaned.split_whitespace() {
        let mut word = raw.trim_start_matches(LEADING);
        let mut trailing_comma = false;
        while let Some(c) = word.chars().last() {
            if !TRAILING.contains(&c) {
                break;
            }
            if c == ',' || c == ';' {
                trailing_comma = true;
            }
            word = &word[..word.len() - c.len_utf8()];
        }
        if !word.is_empty() {
            out.push(Token {
                text: word.to_string(),
                norm: word.to_lowercase(),
            });
        }
        if trailing_comma || (word.is_empty() && raw.contains([',', ';'])) {
            out.push(Token::comma());
        }
    }
    // Leading commas and doubled commas carry no structure.
    let mut deduped: Vec<Token> = Vec::with_capacity(out.len());
    for tok in out {
        if tok.is_comma() && deduped.last().is_none_or(Token::is_comma) {
            continue;
        }
        deduped.push(tok);
    }
    if deduped.last().is_some_and(Token::is_comma) {
        deduped.pop();
    }
    deduped
}

/// Lowercase, punctuation-stripped, whitespace-normalized form of a phrase.
/// Commas are dropped.
pub fn normalize_phrase(phrase: &str) -> String {
    tokenize(phrase)
        .into_iter()
        .filter(|t| !t.is_comma())
        .map(|t| t.norm)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Normalized word list of a phrase, commas dropped.
pub fn phrase_words(phrase: &str) -> Vec<String> {
    tokenize(phrase)
        .into_iter()
        .filter(|t| !t.is_comma())
        .map(|t| t.norm)
        .collect()
}

/// Position of the first contiguous occurrence of `needle` in `haystack`.
pub fn find_subsequence(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Lowercase identifier-safe slug (`"Order iced coffee"` -> `"order_iced_coffee"`).
pub fn slug(phrase: &str) -> String {
    let words: Vec<String> = phrase_words(phrase)
        .into_iter()
        .map(|w| w.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|w| !w.is_empty())
        .collect();
    words.join("_")
}
