//! Token cleaning applied before sampling.
//!
//! A token is dropped when it is tagged as a numeral or punctuation, when it
//! is longer than five characters without any ASCII alphanumeric, when it
//! consists solely of typographic symbols, or when it is purely numeric.

use serde::{Deserialize, Serialize};

use crate::corpus::WordKey;

/// Why a token was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropRule {
    NumeralOrPunctuationTag,
    NoAlphanumeric,
    SymbolsOnly,
    AllNumeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenDecision {
    Keep,
    Drop(DropRule),
}

impl TokenDecision {
    pub fn is_keep(self) -> bool {
        self == TokenDecision::Keep
    }
}

/// Tags that mark numerals or punctuation, compared ASCII case-insensitively.
///
/// Universal tagset (`NUM`, `.`, `PUNCT`) plus the CLAWS cardinal and
/// punctuation codes found in the BNC lists.
pub const EXCLUDED_TAGS: &[&str] = &["num", ".", "punct", "crd", "pun", "pul", "pur", "puq"];

/// Characters that never make a word on their own.
pub const SYMBOL_SET: &[char] = &[
    '«', '»', '.', '\'', '‘', '*', '§', '•', '°', '#', '\\', '$', '+', '^', '(', ')', '[', ']', '{', '}', '-', '=',
    '|', ':', ';', '<', ',', '>', '?', '/', '~', '`',
];

/// Longest token that may lack an ASCII alphanumeric character.
pub const MAX_SYMBOLIC_LEN: usize = 5;

pub fn is_excluded_tag(tag: &str) -> bool {
    EXCLUDED_TAGS.iter().any(|t| t.eq_ignore_ascii_case(tag))
}

/// Decides whether a token survives cleaning. Rules are checked in a fixed
/// order and the first matching rule is reported.
pub fn clean_token(word: &WordKey) -> TokenDecision {
    if word.pos().is_some_and(is_excluded_tag) {
        return TokenDecision::Drop(DropRule::NumeralOrPunctuationTag);
    }
    let surface = word.surface();
    if surface.chars().count() > MAX_SYMBOLIC_LEN && !surface.chars().any(|c| c.is_ascii_alphanumeric()) {
        return TokenDecision::Drop(DropRule::NoAlphanumeric);
    }
    if surface.chars().all(|c| SYMBOL_SET.contains(&c)) {
        return TokenDecision::Drop(DropRule::SymbolsOnly);
    }
    if surface.chars().all(char::is_numeric) {
        return TokenDecision::Drop(DropRule::AllNumeric);
    }
    TokenDecision::Keep
}

/// Row accounting for one cleaning pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenFilterReport {
    pub kept: u64,
    pub dropped_tag: u64,
    pub dropped_no_alphanumeric: u64,
    pub dropped_symbols: u64,
    pub dropped_numeric: u64,
}

impl TokenFilterReport {
    pub fn record(&mut self, decision: TokenDecision) {
        match decision {
            TokenDecision::Keep => self.kept += 1,
            TokenDecision::Drop(DropRule::NumeralOrPunctuationTag) => self.dropped_tag += 1,
            TokenDecision::Drop(DropRule::NoAlphanumeric) => self.dropped_no_alphanumeric += 1,
            TokenDecision::Drop(DropRule::SymbolsOnly) => self.dropped_symbols += 1,
            TokenDecision::Drop(DropRule::AllNumeric) => self.dropped_numeric += 1,
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped_tag + self.dropped_no_alphanumeric + self.dropped_symbols + self.dropped_numeric
    }

    pub fn total(&self) -> u64 {
        self.kept + self.dropped()
    }

    pub fn merge(&mut self, other: &TokenFilterReport) {
        self.kept += other.kept;
        self.dropped_tag += other.dropped_tag;
        self.dropped_no_alphanumeric += other.dropped_no_alphanumeric;
        self.dropped_symbols += other.dropped_symbols;
        self.dropped_numeric += other.dropped_numeric;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use proptest::prelude::*;

    fn decide(surface: &str, pos: &str) -> TokenDecision {
        clean_token(&WordKey::new(surface, pos).unwrap())
    }

    #[test]
    fn hyphen_run_is_symbols_only() {
        assert_eq!(decide("-----", ""), TokenDecision::Drop(DropRule::SymbolsOnly));
        assert_eq!(decide("*****", ""), TokenDecision::Drop(DropRule::SymbolsOnly));
    }

    #[test]
    fn years_are_numeric() {
        assert_eq!(decide("1914", ""), TokenDecision::Drop(DropRule::AllNumeric));
    }

    #[test]
    fn ordinary_words_survive() {
        assert_eq!(decide("Krieg", ""), TokenDecision::Keep);
        assert_eq!(decide("Krieg", "NOUN"), TokenDecision::Keep);
        assert_eq!(decide("ó", "CONJ"), TokenDecision::Keep);
        assert_eq!(decide("daß", ""), TokenDecision::Keep);
        assert_eq!(decide("n't", "xx0"), TokenDecision::Keep);
    }

    #[test]
    fn long_symbol_runs_lack_alphanumerics() {
        assert_eq!(decide("§§§§§§", ""), TokenDecision::Drop(DropRule::NoAlphanumeric));
        assert_eq!(decide("______", ""), TokenDecision::Drop(DropRule::NoAlphanumeric));
        // five characters is not "longer than five"
        assert_eq!(decide("_____", ""), TokenDecision::Keep);
    }

    #[test]
    fn tag_rule_wins() {
        assert_eq!(
            decide("three", "NUM"),
            TokenDecision::Drop(DropRule::NumeralOrPunctuationTag)
        );
        assert_eq!(decide(",", "."), TokenDecision::Drop(DropRule::NumeralOrPunctuationTag));
        assert_eq!(
            decide("!", "pun"),
            TokenDecision::Drop(DropRule::NumeralOrPunctuationTag)
        );
    }

    #[test]
    fn report_accounting() {
        let mut r = TokenFilterReport::default();
        for (w, p) in [("a", ""), ("1", ""), ("--", ""), ("x", "NUM"), ("§§§§§§", "")] {
            r.record(decide(w, p));
        }
        assert_eq!(r.kept, 1);
        assert_eq!(r.dropped(), 4);
        assert_eq!(r.total(), 5);
    }

    proptest! {
        #[test]
        fn short_alphanumeric_tokens_are_kept(s in "[A-Za-z0-9§.\\-#ä]{1,5}") {
            prop_assume!(s.chars().any(|c| c.is_ascii_alphanumeric()));
            let word = WordKey::plain(String::from(s.as_str())).unwrap();
            let numeric = s.chars().all(char::is_numeric);
            prop_assert_eq!(clean_token(&word).is_keep(), !numeric);
        }
    }
}
