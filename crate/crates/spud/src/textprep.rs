//! Deterministic text-to-token pipeline applied identically to documents and
//! queries: ASCII tokenization, lowercasing, stopword removal, Porter
//! stemming.
//!
//! Tokens are maximal runs of ASCII alphanumerics; everything else, including
//! non-ASCII letters, is a delimiter. Stopwords are matched on the unstemmed
//! lowercase form, before stemming. The pipeline is a pure function of the
//! input text and the config, and a fingerprint of the config is stored in
//! every index so that query-time preprocessing can be checked against the
//! preprocessing the index was built with.

pub mod porter;

pub use porter::stem as porter_stem;

use std::collections::BTreeSet;

/// Bundled default English stopword list, one word per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Configuration of the token pipeline. Identical configs produce identical
/// token streams for identical input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenPipelineConfig {
    /// Lowercase tokens before stopword matching and stemming.
    pub lowercase: bool,
    /// Surface forms to drop, matched on unstemmed lowercase tokens.
    pub stopword_list: BTreeSet<String>,
    /// Apply the Porter stemmer to surviving tokens.
    pub stem: bool,
}

impl Default for TokenPipelineConfig {
    /// Lowercasing and stemming on, bundled English stopword list.
    fn default() -> Self {
        TokenPipelineConfig {
            lowercase: true,
            stopword_list: parse_stopword_list(DEFAULT_STOPWORDS),
            stem: true,
        }
    }
}

impl TokenPipelineConfig {
    /// Same flags as the default pipeline but with a caller-supplied
    /// stopword list in the bundled file format.
    pub fn with_stopword_text(text: &str) -> Self {
        TokenPipelineConfig {
            stopword_list: parse_stopword_list(text),
            ..TokenPipelineConfig::default()
        }
    }

    /// Hex fingerprint of the full pipeline configuration. Indexes store it;
    /// query preparation refuses to run under a config with a different
    /// fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut canon = String::new();
        canon.push_str(if self.lowercase { "lowercase=1\n" } else { "lowercase=0\n" });
        canon.push_str(if self.stem { "stem=1\n" } else { "stem=0\n" });
        for word in &self.stopword_list {
            canon.push_str(word);
            canon.push('\n');
        }
        crate::sha256_hex(canon.as_bytes())
    }
}

/// Parses stopword-file text: UTF-8, one token per line, `#`-prefixed
/// comment lines and blank lines ignored. Entries are lowercased.
pub fn parse_stopword_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(|line| line.to_ascii_lowercase())
        .collect()
}

/// Splits text into tokens and runs them through the configured pipeline:
/// maximal ASCII-alphanumeric runs, lowercased, stopwords dropped, survivors
/// stemmed. Order is preserved; the result may be empty.
pub fn tokenize(text: &str, cfg: &TokenPipelineConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    for run in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let token = if cfg.lowercase {
            run.to_ascii_lowercase()
        } else {
            run.to_string()
        };
        let lookup = if cfg.lowercase {
            token.clone()
        } else {
            run.to_ascii_lowercase()
        };
        if cfg.stopword_list.contains(&lookup) {
            continue;
        }
        tokens.push(if cfg.stem { porter_stem(&token) } else { token });
    }
    tokens
}
