//! On-disk round trips: checkpoints and word-vector files.

mod support;

use hisent_core::embeddings::{load_word2vec_binary, load_word2vec_text, EmbeddingTable};
use hisent_core::model::{load_checkpoint, save_checkpoint, HiCnnLstmModel};
use hisent_core::rng;
use rand::Rng as _;
use support::gradcheck::{desk_config, random_document, random_lookup};

#[test]
fn checkpoint_predictions_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    let mut r = rng::seeded(77, 0, 0);
    let mut model = HiCnnLstmModel::new(desk_config(3, 5)).unwrap();
    for t in model.tensors_mut() {
        for x in t.iter_mut() {
            *x += r.gen_range(-0.1..0.1);
        }
    }
    save_checkpoint(&model, 0xfeed, &path).unwrap();
    let loaded = load_checkpoint(&path, 0xfeed).unwrap();
    let lookup = random_lookup(12, 4, &mut r);
    for _ in 0..10 {
        let doc = random_document(12, 3, &mut r);
        let a = model.predict_probs(&doc, &lookup).unwrap();
        let b = loaded.predict_probs(&doc, &lookup).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn binary_vectors_survive_the_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let words = ["crash", "Crash", "fixed", "thanks", "ü-umlaut", "<url>"];
    let table = EmbeddingTable::random(words, 7, 3).unwrap();
    let bin = dir.path().join("v.bin");
    let txt = dir.path().join("v.txt");
    table.write_word2vec_binary(&bin).unwrap();
    let from_bin = load_word2vec_binary(&bin, None).unwrap();
    from_bin.write_word2vec_text(&txt).unwrap();
    let from_txt = load_word2vec_text(&txt).unwrap();
    assert_eq!(from_txt.words(), from_bin.words());
    for w in words {
        let (a, b) = (from_bin.get(w).unwrap(), from_txt.get(w).unwrap());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1e-12), "{w}: {x} vs {y}");
        }
        for (x, y) in a.iter().zip(table.get(w).unwrap()) {
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1e-12));
        }
    }
}
