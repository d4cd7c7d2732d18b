//! Fixed function words of the grammar. They score nothing when matched.

pub const COPULAS: &[&str] = &["is", "are", "was", "be", "gets", "takes", "costs", "it's", "feels", "seems"];

pub const DETERMINERS: &[&str] = &["the", "a", "an", "my", "our", "your"];

pub const THEN: &str = "then";

pub const THAN: &str = "than";

/// Words introducing an explanation besides the conditional markers ("hot means ...").
pub const EXPLANATION_WORDS: &[&str] = &["means"];

/// Word sequences announcing a demonstration instead of an explanation.
pub const DEMONSTRATION_PHRASES: &[&[&str]] = &[&["demonstrate"], &["show", "you"], &["show", "me"], &["let", "me", "show"]];

pub fn is_copula(word: &str) -> bool {
    COPULAS.contains(&word)
}

pub fn is_determiner(word: &str) -> bool {
    DETERMINERS.contains(&word)
}

pub fn requests_demonstration(words: &[String]) -> bool {
    DEMONSTRATION_PHRASES
        .iter()
        .any(|p| words.windows(p.len()).any(|w| w.iter().zip(p.iter()).all(|(a, b)| a == b)))
}
