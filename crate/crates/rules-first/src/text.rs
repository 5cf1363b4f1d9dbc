//! Bag-of-words ingestion for the sentiment experiments: tokenization,
//! vocabulary construction, and binary-presence vectorization.
//!
//! Corpus input is UTF-8 TSV, one document per line, `label<TAB>text` with
//! label in {-1, +1}. The vocabulary sidecar is `index<TAB>token`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{CoreError, Dataset, Example, Label, SparseVec};

#[derive(Debug, Error)]
pub enum TextError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty vocabulary")]
    EmptyVocabulary,
}

/// Token normalizer applied after tokenization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalizer {
    /// Keep tokens as-is.
    #[default]
    Identity,
    /// Strip one trailing "ing", "ed" or "s", keeping at least a
    /// three-letter stem.
    SuffixStrip,
}

impl Normalizer {
    pub fn normalize<'a>(&self, token: &'a str) -> &'a str {
        match self {
            Normalizer::Identity => token,
            Normalizer::SuffixStrip => {
                for suffix in ["ing", "ed", "s"] {
                    if let Some(stem) = token.strip_suffix(suffix) {
                        if stem.chars().count() >= 3 {
                            return stem;
                        }
                    }
                }
                token
            }
        }
    }
}

fn looks_like_url(token: &str) -> bool {
    token.contains("://") || token.starts_with("www.")
}

/// Lowercases, strips URLs and non-alphanumeric characters (keeping
/// intra-word apostrophes), splits on whitespace, and applies the
/// normalizer.
pub fn tokenize(text: &str, normalizer: Normalizer) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for raw in lower.split_whitespace() {
        if looks_like_url(raw) {
            continue;
        }
        let chars: Vec<char> = raw.chars().collect();
        let mut cleaned = String::new();
        for (i, &ch) in chars.iter().enumerate() {
            if ch.is_alphanumeric() {
                cleaned.push(ch);
            } else if ch == '\'' {
                let prev_ok = i > 0 && chars[i - 1].is_alphanumeric();
                let next_ok = i + 1 < chars.len() && chars[i + 1].is_alphanumeric();
                if prev_ok && next_ok {
                    cleaned.push(ch);
                }
            }
        }
        if cleaned.is_empty() {
            continue;
        }
        let normalized = normalizer.normalize(&cleaned);
        if !normalized.is_empty() {
            out.push(normalized.to_string());
        }
    }
    out
}

/// Token-to-index map with indices assigned in first-appearance order.
/// A frozen vocabulary maps unknown tokens to nothing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    frozen: bool,
    normalizer: Normalizer,
}

impl Vocabulary {
    pub fn new(normalizer: Normalizer) -> Vocabulary {
        Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
            frozen: false,
            normalizer,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn normalizer(&self) -> Normalizer {
        self.normalizer
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Index of `token`, inserting it unless the vocabulary is frozen.
    fn intern(&mut self, token: &str) -> Option<usize> {
        if let Some(&i) = self.index.get(token) {
            return Some(i);
        }
        if self.frozen {
            return None;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        Some(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.tokens.iter().enumerate().map(|(i, t)| (i, t.as_str()))
    }
}

/// Builds a vocabulary over the documents in order.
pub fn build_vocab<S: AsRef<str>>(docs: &[S], normalizer: Normalizer) -> Vocabulary {
    let mut vocab = Vocabulary::new(normalizer);
    for doc in docs {
        for token in tokenize(doc.as_ref(), normalizer) {
            vocab.intern(&token);
        }
    }
    vocab
}

/// One binary-presence example per document; out-of-vocabulary tokens are
/// ignored. Dimension equals the vocabulary size.
pub fn vectorize<S: AsRef<str>>(
    docs: &[(S, Label)],
    vocab: &Vocabulary,
) -> Result<Dataset, TextError> {
    if vocab.is_empty() {
        return Err(TextError::EmptyVocabulary);
    }
    let mut examples = Vec::with_capacity(docs.len());
    for (text, label) in docs {
        let mut present: Vec<usize> = tokenize(text.as_ref(), vocab.normalizer())
            .iter()
            .filter_map(|t| vocab.lookup(t))
            .collect();
        present.sort_unstable();
        present.dedup();
        let entries: Vec<(usize, f64)> = present.into_iter().map(|i| (i, 1.0)).collect();
        examples.push(Example::new(SparseVec::new(entries)?, *label));
    }
    Ok(Dataset::new(vocab.len(), examples)?)
}

/// Parses `label<TAB>text` lines; label is -1 or +1.
pub fn parse_corpus_tsv(text: &str) -> Result<Vec<(String, Label)>, TextError> {
    let mut docs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (label_s, doc) = raw.split_once('\t').ok_or_else(|| TextError::Parse {
            line,
            message: "expected `label<TAB>text`".into(),
        })?;
        let label = match label_s.trim() {
            "1" | "+1" => Label::Positive,
            "-1" => Label::Negative,
            other => {
                return Err(TextError::Parse {
                    line,
                    message: format!("bad label `{other}`"),
                })
            }
        };
        docs.push((doc.to_string(), label));
    }
    Ok(docs)
}

pub fn vocab_sidecar(vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (i, token) in vocab.iter() {
        out.push_str(&format!("{i}\t{token}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_vocab_first_appearance_order() {
        let vocab = build_vocab(&["good day", "good night"], Normalizer::Identity);
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.lookup("good"), Some(0));
        assert_eq!(vocab.lookup("day"), Some(1));
        assert_eq!(vocab.lookup("night"), Some(2));
    }

    #[test]
    fn urls_are_stripped() {
        let tokens = tokenize("visit http://x.co now", Normalizer::Identity);
        assert_eq!(tokens, vec!["visit", "now"]);
    }

    #[test]
    fn empty_corpus_gives_empty_vocab() {
        let docs: Vec<&str> = Vec::new();
        assert!(build_vocab(&docs, Normalizer::Identity).is_empty());
    }

    #[test]
    fn intra_word_apostrophes_survive() {
        let tokens = tokenize("Don't stop!", Normalizer::Identity);
        assert_eq!(tokens, vec!["don't", "stop"]);
    }

    #[test]
    fn suffix_stripping() {
        let n = Normalizer::SuffixStrip;
        assert_eq!(n.normalize("disappointing"), "disappoint");
        assert_eq!(n.normalize("loves"), "love");
        assert_eq!(n.normalize("ruined"), "ruin");
        // two-letter stems are left alone
        assert_eq!(n.normalize("is"), "is");
    }

    #[test]
    fn vectorize_binary_presence() {
        let vocab = build_vocab(&["good day", "good night"], Normalizer::Identity);
        let data = vectorize(&[("good good day", Label::Positive)], &vocab).unwrap();
        let ex = &data.examples()[0];
        assert_eq!(ex.features.get(0), 1.0);
        assert_eq!(ex.features.get(1), 1.0);
        assert_eq!(ex.features.get(2), 0.0);
        assert_eq!(ex.features.nnz(), 2);
    }

    #[test]
    fn out_of_vocab_tokens_ignored() {
        let mut vocab = build_vocab(&["known"], Normalizer::Identity);
        vocab.freeze();
        let data = vectorize(&[("unseen words only", Label::Positive)], &vocab).unwrap();
        assert_eq!(data.examples()[0].features.nnz(), 0);
    }

    #[test]
    fn round_trip_keeps_active_features() {
        let docs = ["alpha beta", "gamma", "beta gamma delta"];
        let vocab = build_vocab(&docs, Normalizer::Identity);
        let labeled: Vec<(&str, Label)> =
            docs.iter().map(|&d| (d, Label::Positive)).collect();
        let data = vectorize(&labeled, &vocab).unwrap();
        for ex in data.iter() {
            assert!(ex.features.nnz() >= 1);
            for (_, v) in ex.features.iter() {
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn corpus_parse_error_carries_line() {
        let err = parse_corpus_tsv("+1\tok\nbroken line\n").unwrap_err();
        match err {
            TextError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn determinism() {
        let docs = ["one two three", "two four"];
        let a = build_vocab(&docs, Normalizer::Identity);
        let b = build_vocab(&docs, Normalizer::Identity);
        assert_eq!(a.tokens, b.tokens);
    }
}
