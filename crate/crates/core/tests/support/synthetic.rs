//! Marker-token corpus: a document is positive exactly when it contains
//! the marker word somewhere.

#![allow(dead_code)]

use hisent_core::eval::Corpus;
use hisent_core::rng;
use rand::Rng as _;

pub const MARKER: &str = "splendid";
pub const FILLER: usize = 60;

pub fn marker_texts(n: usize, seed: u64) -> (Vec<String>, Vec<usize>) {
    marker_texts_with(n, seed, FILLER, 3, 3, 8)
}

pub fn marker_texts_with(
    n: usize,
    seed: u64,
    filler: usize,
    max_sentences: usize,
    min_len: usize,
    max_len: usize,
) -> (Vec<String>, Vec<usize>) {
    let mut r = rng::seeded(seed, 200, 0);
    let mut texts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let mut sentences: Vec<Vec<String>> = (0..r.gen_range(1..=max_sentences))
            .map(|_| (0..r.gen_range(min_len..=max_len)).map(|_| format!("w{}", r.gen_range(0..filler))).collect())
            .collect();
        if label == 1 {
            let s = r.gen_range(0..sentences.len());
            let pos = r.gen_range(0..=sentences[s].len());
            sentences[s].insert(pos, MARKER.to_owned());
        }
        let text = sentences.iter().map(|s| s.join(" ") + ".").collect::<Vec<_>>().join(" ");
        texts.push(text);
        labels.push(label);
    }
    (texts, labels)
}

pub fn marker_corpus(n: usize, seed: u64) -> Corpus {
    let (texts, labels) = marker_texts(n, seed);
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    Corpus::new("marker", vec!["negative".into(), "positive".into()], &refs, labels).unwrap()
}

/// Texts with labels drawn independently of content, balanced over `c`
/// classes.
pub fn random_label_corpus(n: usize, c: usize, seed: u64) -> Corpus {
    let mut r = rng::seeded(seed, 201, 0);
    let texts: Vec<String> = (0..n)
        .map(|_| (0..r.gen_range(3..=10)).map(|_| format!("w{}", r.gen_range(0..FILLER))).collect::<Vec<_>>().join(" "))
        .collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let labels = (0..n).map(|i| i % c).collect();
    let names = (0..c).map(|k| format!("class{k}")).collect();
    Corpus::new("random-labels", names, &refs, labels).unwrap()
}
