//! Function/content word classification and POS filters.

use alloc::collections::BTreeSet;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::corpus::WordKey;

/// CLAWS codes counted as content words in the BNC lists.
pub const CLAWS_CONTENT_TAGS: &[&str] = &[
    "aj0", "aj0-av0", "aj0-nn1", "aj0-vvd", "aj0-vvg", "ajc", "ajs", "av0", "nn0", "nn1", "nn1-np0", "nn1-vvb",
    "nn1-vvg", "nn2", "nn2-vvz", "np0", "vvb", "vvd", "vvd-vvn", "vvg", "vvi", "vvn", "vvz",
];

/// Universal-tagset labels (long and short forms) counted as content words.
pub const UNIVERSAL_CONTENT_TAGS: &[&str] = &["NOUN", "N", "VERB", "V", "ADJ", "ADV"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordClass {
    Function,
    Content,
}

/// Classifies a word. Untagged words count as content words since nothing
/// marks them as grammatical.
pub fn word_class(word: &WordKey) -> WordClass {
    match word.pos() {
        None => WordClass::Content,
        Some(tag) => {
            let content =
                CLAWS_CONTENT_TAGS.iter().any(|t| t.eq_ignore_ascii_case(tag)) || UNIVERSAL_CONTENT_TAGS.contains(&tag);
            if content {
                WordClass::Content
            } else {
                WordClass::Function
            }
        }
    }
}

/// Restricts which word types take part in ranking.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tags", rename_all = "snake_case")]
pub enum PosFilter {
    #[default]
    All,
    Content,
    Function,
    /// Exact tag allowlist; the empty string admits untagged words.
    Allow(BTreeSet<String>),
}

impl PosFilter {
    pub fn admits(&self, word: &WordKey) -> bool {
        match self {
            PosFilter::All => true,
            PosFilter::Content => word_class(word) == WordClass::Content,
            PosFilter::Function => word_class(word) == WordClass::Function,
            PosFilter::Allow(tags) => tags.contains(word.pos_or_empty()),
        }
    }
}
