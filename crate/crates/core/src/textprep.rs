//! Raw text to the document → sentence → token → index hierarchy.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::Document;
use crate::rng::fingerprint;

pub const UNK: &str = "<unk>";
pub const PAD: &str = "<pad>";
pub const URL: &str = "<url>";
pub const UNK_INDEX: usize = 0;
pub const PAD_INDEX: usize = 1;

const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "approx.", "mr.", "mrs.", "ms.", "dr.", "no.", "fig.",
];

#[derive(Clone, Debug, PartialEq)]
pub struct TokenizedDocument {
    pub raw_text: String,
    pub sentences: Vec<Vec<String>>,
}

impl TokenizedDocument {
    pub fn from_text(text: &str) -> Self {
        TokenizedDocument {
            raw_text: text.to_owned(),
            sentences: split_sentences(text).iter().map(|s| tokenize(s)).collect(),
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits on runs of `.`, `!` or `?` that are followed by whitespace or the
/// end of the text, unless the word ending there is a known abbreviation.
/// Whitespace-only input gives a single empty sentence, which tokenizes to
/// `[UNK]`.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        if !is_terminator(chars[i].1) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < chars.len() && is_terminator(chars[j + 1].1) {
            j += 1;
        }
        let at_boundary = j + 1 == chars.len() || chars[j + 1].1.is_whitespace();
        let end = chars.get(j + 1).map_or(text.len(), |&(b, _)| b);
        if at_boundary && !ends_with_abbreviation(&text[start..end]) {
            push_trimmed(&mut out, &text[start..end]);
            start = end;
        }
        i = j + 1;
    }
    push_trimmed(&mut out, &text[start..]);
    if out.is_empty() {
        out.push(String::new());
    }
    out
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_owned());
    }
}

fn ends_with_abbreviation(piece: &str) -> bool {
    let last = piece.split_whitespace().last().unwrap_or("");
    let last = last.to_lowercase();
    ABBREVIATIONS.iter().any(|a| last == *a)
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}' | '\u{2026}' | '\u{2013}' | '\u{2014}'
                | '\u{00ab}' | '\u{00bb}' | '\u{00bf}' | '\u{00a1}'
        )
}

fn is_url(token: &str) -> bool {
    let t = token.trim_start_matches(|c: char| is_punct(c));
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

pub fn tokenize(sentence: &str) -> Vec<String> {
    let lowered = sentence.to_lowercase();
    let mut tokens: Vec<String> = lowered
        .split_whitespace()
        .filter_map(|raw| {
            if is_url(raw) {
                return Some(URL.to_owned());
            }
            let t = raw.trim_matches(is_punct);
            (!t.is_empty()).then(|| t.to_owned())
        })
        .collect();
    if tokens.is_empty() {
        tokens.push(UNK.to_owned());
    }
    tokens
}

/// Token ↔ index map. Index 0 is UNK, 1 is PAD; real tokens follow in
/// descending frequency, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    index_to_token: Vec<String>,
    token_to_index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build(corpus: &[TokenizedDocument], min_count: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Config("cannot build a vocabulary from an empty corpus".into()));
        }
        if min_count < 1 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in corpus {
            for tok in doc.tokens() {
                if tok != UNK && tok != PAD {
                    *counts.entry(tok).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, usize)> =
            counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(Self::from_tokens(ranked.into_iter().map(|(t, _)| t.to_owned())))
    }

    /// Builds a vocabulary from real tokens in index order (starting at 2).
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut index_to_token = vec![UNK.to_owned(), PAD.to_owned()];
        index_to_token.extend(tokens);
        let token_to_index = index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            index_to_token,
            token_to_index,
        }
    }

    /// Total size including the two reserved entries.
    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 2
    }

    pub fn index(&self, token: &str) -> usize {
        self.token_to_index.get(token).copied().unwrap_or(UNK_INDEX)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    /// All entries in index order, including UNK and PAD.
    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint(self.index_to_token.iter().map(String::as_str))
    }

    pub fn index_document(&self, doc: &TokenizedDocument, label: Option<usize>) -> Document {
        Document {
            sentences: doc
                .sentences
                .iter()
                .map(|s| s.iter().map(|t| self.index(t)).collect())
                .collect(),
            label,
        }
    }
}

pub fn build_vocab(corpus: &[TokenizedDocument], min_count: usize) -> Result<Vocabulary> {
    Vocabulary::build(corpus, min_count)
}

pub fn index_document(doc: &TokenizedDocument, vocab: &Vocabulary) -> Document {
    vocab.index_document(doc, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(text: &str) -> TokenizedDocument {
        TokenizedDocument::from_text(text)
    }

    #[test]
    fn splits_on_terminators() {
        assert_eq!(split_sentences("Great app. Crashes a lot!"), ["Great app.", "Crashes a lot!"]);
        assert_eq!(split_sentences("works fine"), ["works fine"]);
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(
            split_sentences("see e.g. the docs. thanks"),
            ["see e.g. the docs.", "thanks"]
        );
        assert_eq!(split_sentences("Really?! yes... ok"), ["Really?!", "yes...", "ok"]);
        assert_eq!(split_sentences("version 1.2 works"), ["version 1.2 works"]);
    }

    #[test]
    fn blank_text_is_one_unk_sentence() {
        assert_eq!(split_sentences("   \n "), [""]);
        assert_eq!(doc("  ").sentences, vec![vec![UNK.to_owned()]]);
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("Crashes a lot!"), ["crashes", "a", "lot"]);
        assert_eq!(tokenize("Check http://x.io now"), ["check", URL, "now"]);
        assert_eq!(tokenize("... !!"), [UNK]);
        assert_eq!(tokenize("\"Don't\" (stop)"), ["don't", "stop"]);
    }

    #[test]
    fn vocab_ordering_and_threshold() {
        let corpus = [doc("a b"), doc("a")];
        let v = build_vocab(&corpus, 1).unwrap();
        assert_eq!(v.tokens(), [UNK, PAD, "a", "b"]);
        let v2 = build_vocab(&corpus, 2).unwrap();
        assert_eq!(v2.tokens(), [UNK, PAD, "a"]);

        let tie = [doc("zeta alpha zeta alpha zeta alpha")];
        let v3 = build_vocab(&tie, 1).unwrap();
        assert_eq!(v3.index("alpha"), 2);
        assert_eq!(v3.index("zeta"), 3);
    }

    #[test]
    fn vocab_rejects_empty_corpus() {
        assert!(matches!(build_vocab(&[], 1), Err(Error::Config(_))));
    }

    #[test]
    fn indexing() {
        let v = build_vocab(&[doc("a b"), doc("a")], 1).unwrap();
        assert_eq!(index_document(&doc("a b"), &v).sentences, vec![vec![2, 3]]);
        assert_eq!(index_document(&doc("z"), &v).sentences, vec![vec![UNK_INDEX]]);
        let d = doc("b a. a");
        let idx = index_document(&d, &v);
        let back: Vec<Vec<&str>> = idx
            .sentences
            .iter()
            .map(|s| s.iter().map(|&i| v.token(i).unwrap()).collect())
            .collect();
        assert_eq!(back, vec![vec!["b", "a"], vec!["a"]]);
    }

    proptest! {
        #[test]
        fn split_preserves_characters(text in "[a-zA-Z .!?,e]{0,60}") {
            let parts = split_sentences(&text);
            prop_assert!(!parts.is_empty());
            let joined: String = parts.concat().chars().filter(|c| !c.is_whitespace()).collect();
            let original: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, original);
        }

        #[test]
        fn vocab_independent_of_document_order(
            texts in proptest::collection::vec("[a-e ]{1,20}", 1..8)
        ) {
            let docs: Vec<_> = texts.iter().map(|t| doc(t)).collect();
            let mut rev = docs.clone();
            rev.reverse();
            let a = build_vocab(&docs, 1).unwrap();
            let b = build_vocab(&rev, 1).unwrap();
            prop_assert_eq!(a.tokens(), b.tokens());
            prop_assert_eq!(a.fingerprint(), b.fingerprint());
        }

        #[test]
        fn every_sentence_has_a_token(text in "\\PC{0,80}") {
            let d = doc(&text);
            prop_assert!(!d.sentences.is_empty());
            prop_assert!(d.sentences.iter().all(|s| !s.is_empty()));
        }
    }
}
