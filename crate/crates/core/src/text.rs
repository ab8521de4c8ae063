//! Tweet-aware tokenizer shared by the readability and dialect annotators.
//!
//! Whitespace split, URLs dropped, leading `#`/`@` sigils stripped, and
//! surrounding punctuation trimmed. Inner apostrophes and hyphens survive
//! (`don't`, `well-known`).

/// One whitespace-delimited chunk of the input after URL removal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    /// The cleaned word form, empty if the chunk held only punctuation.
    pub word: &'a str,
    /// The chunk ends a sentence (`.`, `!` or `?` before any closing quotes/brackets).
    pub ends_sentence: bool,
}

impl Token<'_> {
    /// A word in the readability sense: at least one alphabetic character.
    pub fn is_word(&self) -> bool {
        self.word.chars().any(char::is_alphabetic)
    }
}

pub fn is_url(chunk: &str) -> bool {
    let lower = chunk.trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = lower.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '»' | '”' | '’')
}

/// Splits `text` into tokens in reading order.
pub fn tokens(text: &str) -> Vec<Token<'_>> {
    text.split_whitespace()
        .filter(|chunk| !is_url(chunk))
        .map(|chunk| {
            let ends_sentence = chunk
                .trim_end_matches(is_closer)
                .chars()
                .next_back()
                .is_some_and(is_terminator);
            let word = chunk
                .trim_start_matches(|c: char| !c.is_alphanumeric())
                .trim_end_matches(|c: char| !c.is_alphanumeric());
            Token {
                word,
                ends_sentence,
            }
        })
        .collect()
}

/// Lowercased word forms, punctuation-only chunks removed.
pub fn normalized_words(text: &str) -> Vec<String> {
    tokens(text)
        .into_iter()
        .filter(|t| !t.word.is_empty())
        .map(|t| t.word.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_urls_and_strips_sigils() {
        let words = normalized_words("Check https://t.co/xyz #MAGA @realDonaldTrump now!");
        assert_eq!(words, vec!["check", "maga", "realdonaldtrump", "now"]);
    }

    #[test]
    fn keeps_inner_apostrophes() {
        assert_eq!(normalized_words("\"don't\" stop"), vec!["don't", "stop"]);
    }

    #[test]
    fn detects_terminators_behind_quotes() {
        let toks = tokens("He said \"go.\" Then left");
        let ends: Vec<bool> = toks.iter().map(|t| t.ends_sentence).collect();
        assert_eq!(ends, vec![false, false, true, false, false]);
    }

    #[test]
    fn punctuation_only_chunk_is_not_a_word() {
        let toks = tokens("!!!");
        assert_eq!(toks.len(), 1);
        assert!(!toks[0].is_word());
        assert!(toks[0].ends_sentence);
    }
}
