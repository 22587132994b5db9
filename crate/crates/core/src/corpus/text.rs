//! Token-level text cleaning: tokenization, stopword removal and stemming.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use super::PreprocessConfig;

static DEFAULT_STOPWORDS_FILE: &str = include_str!("../../data/stopwords_en.txt");

/// The bundled English stopword list, one lowercase word per line.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopword_list(DEFAULT_STOPWORDS_FILE)
}

/// Parses a stopword file: one word per line, `#` starts a comment line,
/// blank lines are ignored, entries are lowercased.
pub fn parse_stopword_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Splits `raw_text` into lowercase maximal runs of alphabetic characters.
///
/// Digits, punctuation and whitespace all act as separators. Tokens shorter
/// than `config.min_token_length` characters are dropped.
pub fn tokenize(raw_text: &str, config: &PreprocessConfig) -> Vec<String> {
    raw_text
        .split(|c: char| !c.is_alphabetic())
        .filter(|run| !run.is_empty())
        .map(str::to_lowercase)
        .filter(|token| token.chars().count() >= config.min_token_length)
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, config: &PreprocessConfig) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|token| !config.stopwords.contains(token))
        .collect()
}

fn english_stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

// Longest first so that "under" wins over "un".
const PREFIXES: &[&str] = &[
    "counter", "inter", "super", "trans", "under", "anti", "over", "post", "dis", "mis", "non",
    "pre", "sub", "re", "un",
];

// Prefixes are only removed when at least this many characters remain.
const MIN_PREFIX_REMAINDER: usize = 4;

fn strip_prefix(token: &str) -> Option<&str> {
    PREFIXES.iter().find_map(|prefix| {
        token
            .strip_prefix(prefix)
            .filter(|rest| rest.chars().count() >= MIN_PREFIX_REMAINDER)
    })
}

fn stem_once(token: &str, strip_prefixes: bool) -> String {
    let token = if strip_prefixes {
        strip_prefix(token).unwrap_or(token)
    } else {
        token
    };
    english_stemmer().stem(token).into_owned()
}

/// Suffix-strips `token` with the Snowball English (Porter2) stemmer.
///
/// The stemmer is applied until the output stops changing, so the result is
/// a fixed point: `stem(&stem(t)) == stem(t)` for every input.
pub fn stem(token: &str) -> String {
    stem_with(token, false)
}

/// Like [`stem`], optionally removing a common English prefix first.
pub fn stem_with(token: &str, strip_prefixes: bool) -> String {
    let mut current = token.to_owned();
    loop {
        let next = stem_once(&current, strip_prefixes);
        if next == current {
            return current;
        }
        current = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(min_len: usize) -> PreprocessConfig {
        PreprocessConfig {
            min_token_length: min_len,
            ..PreprocessConfig::default()
        }
    }

    #[test]
    fn tokenize_splits_on_punctuation_and_digits() {
        assert_eq!(
            tokenize("Team-based AI, 2022!", &config(2)),
            vec!["team", "based", "ai"]
        );
        assert_eq!(tokenize("abc123def", &config(1)), vec!["abc", "def"]);
    }

    #[test]
    fn tokenize_empty_and_short() {
        assert!(tokenize("", &config(2)).is_empty());
        assert!(tokenize("a b c 1 2 3", &config(2)).is_empty());
        assert_eq!(tokenize("a b", &config(1)), vec!["a", "b"]);
    }

    #[test]
    fn tokenize_keeps_plain_words_unchanged() {
        assert_eq!(
            tokenize("client delivery sponsor development", &config(2)),
            vec!["client", "delivery", "sponsor", "development"]
        );
    }

    #[test]
    fn tokenize_handles_non_ascii_letters() {
        assert_eq!(tokenize("Köhler über-team", &config(2)), vec!["köhler", "über", "team"]);
    }

    #[test]
    fn stopwords_default_list() {
        let tokens = ["the", "team", "of", "managers"].map(String::from).to_vec();
        assert_eq!(
            remove_stopwords(tokens, &PreprocessConfig::default()),
            vec!["team", "managers"]
        );
        assert!(remove_stopwords(vec![], &PreprocessConfig::default()).is_empty());
    }

    #[test]
    fn bundled_list_is_lowercase_alphabetic() {
        let list = default_stopwords();
        assert!(list.len() > 100);
        assert!(list
            .iter()
            .all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
    }

    #[test]
    fn stem_single_letter_and_short_words() {
        assert_eq!(stem("a"), "a");
        assert_eq!(stem("x"), "x");
        assert_eq!(stem("team"), "team");
    }

    #[test]
    fn prefix_stripping_is_opt_in() {
        assert_eq!(stem_with("reorganisation", false), stem("reorganisation"));
        assert_eq!(stem_with("reorganisation", true), stem("organisation"));
        // remainder would be too short
        assert_eq!(stem_with("rerun", true), stem("rerun"));
    }
}
