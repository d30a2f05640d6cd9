//! Brute-force oracles for metrics, fold plans and Naive Bayes. Each check
//! returns the first discrepancy instead of panicking so the acceptance
//! suite can report it.

#![allow(dead_code)]

use hisent_core::baseline::nb_fit;
use hisent_core::eval::{compute_metrics, stratified_kfold};
use hisent_core::model::Document;
use hisent_core::rng;
use hisent_core::textprep::Vocabulary;
use rand::Rng as _;

pub type Check = Result<(), String>;

/// Counts every (gold, predicted) pair by scanning all samples for each
/// cell, then applies the textbook definitions as single divisions.
pub fn metric_oracle(gold: &[usize], pred: &[usize], c: usize) -> (f64, Vec<(f64, f64, f64, usize)>) {
    let cell = |g: usize, p: usize| gold.iter().zip(pred).filter(|&(&a, &b)| a == g && b == p).count();
    let n = gold.len();
    let correct: usize = (0..c).map(|k| cell(k, k)).sum();
    let per_class = (0..c)
        .map(|k| {
            let tp = cell(k, k);
            let fp: usize = (0..c).filter(|&g| g != k).map(|g| cell(g, k)).sum();
            let fn_: usize = (0..c).filter(|&p| p != k).map(|p| cell(k, p)).sum();
            let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            (div(tp, tp + fp), div(tp, tp + fn_), div(2 * tp, 2 * tp + fp + fn_), tp + fn_)
        })
        .collect();
    (correct as f64 / n as f64, per_class)
}

/// Random cases of length ≤ 30 over ≤ 4 classes; equality is exact.
pub fn metrics_match_brute_force(cases: usize, seed: u64) -> Check {
    let mut r = rng::seeded(seed, 0, 0);
    for case in 0..cases {
        let c = r.gen_range(1..=4);
        let n = r.gen_range(1..=30);
        let gold: Vec<usize> = (0..n).map(|_| r.gen_range(0..c)).collect();
        let pred: Vec<usize> = (0..n).map(|_| r.gen_range(0..c)).collect();
        let report = compute_metrics(&gold, &pred, c).map_err(|e| format!("case {case}: {e}"))?;
        let (acc, per_class) = metric_oracle(&gold, &pred, c);
        if report.accuracy != acc {
            return Err(format!("case {case}: accuracy {} vs {acc}", report.accuracy));
        }
        if report.confusion.total() != n {
            return Err(format!("case {case}: confusion total {}", report.confusion.total()));
        }
        for (k, (m, o)) in report.classes.iter().zip(&per_class).enumerate() {
            if (m.precision, m.recall, m.f1, m.support) != *o {
                return Err(format!("case {case} class {k}: {m:?} vs {o:?}"));
            }
        }
    }
    Ok(())
}

/// Random label multisets, some with classes smaller than k, in arbitrary
/// order. Returns how many multisets had such a class.
pub fn folds_partition_and_stratify(cases: usize, seed: u64) -> Result<usize, String> {
    let mut r = rng::seeded(seed, 0, 0);
    let mut small_class_cases = 0;
    let mut done = 0;
    while done < cases {
        let c = r.gen_range(1..=5);
        let k = r.gen_range(2..=10);
        let sizes: Vec<usize> = (0..c).map(|_| r.gen_range(0..=3 * k)).collect();
        let mut labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(l, &s)| std::iter::repeat_n(l, s)).collect();
        if labels.len() < k {
            continue;
        }
        let case = done;
        done += 1;
        if sizes.iter().any(|&s| s > 0 && s < k) {
            small_class_cases += 1;
        }
        for i in (1..labels.len()).rev() {
            labels.swap(i, r.gen_range(0..=i));
        }
        let plan = stratified_kfold(&labels, k, case as u64).map_err(|e| format!("case {case}: {e}"))?;
        if plan.folds.len() != k {
            return Err(format!("case {case}: {} folds for k={k}", plan.folds.len()));
        }
        let mut seen = vec![0u32; labels.len()];
        for f in &plan.folds {
            for &i in f {
                seen[i] += 1;
            }
        }
        if !seen.iter().all(|&s| s == 1) {
            return Err(format!("case {case}: folds do not partition the indices"));
        }
        for l in 0..c {
            let counts: Vec<usize> = plan.folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == l).count()).collect();
            if counts.iter().max().unwrap() - counts.iter().min().unwrap() > 1 {
                return Err(format!("case {case} class {l}: per-fold counts {counts:?}"));
            }
        }
    }
    Ok(small_class_cases)
}

/// Exact rational posterior comparison: `P(c) · Π P(w|c)` as a fraction of
/// integers, compared by cross-multiplication.
pub fn nb_oracle(train: &[(Vec<usize>, usize)], doc: &[usize], c: usize, v: usize) -> usize {
    let n = train.len() as u128;
    let mut best: Option<(u128, u128, usize)> = None;
    for class in 0..c {
        let docs: Vec<&Vec<usize>> = train.iter().filter(|d| d.1 == class).map(|d| &d.0).collect();
        let total: u128 = docs.iter().map(|d| d.len() as u128).sum();
        let mut num = docs.len() as u128;
        let mut den = n;
        for &w in doc {
            let count = docs.iter().map(|d| d.iter().filter(|&&t| t == w).count() as u128).sum::<u128>();
            num *= count + 1;
            den *= total + v as u128;
        }
        match best {
            Some((bn, bd, _)) if num * bd <= bn * den => {}
            _ => best = Some((num, den, class)),
        }
    }
    best.unwrap().2
}

/// Tiny training sets (≤ 8 documents, ≤ 6 word types), ten queries each.
pub fn naive_bayes_matches_posterior(cases: usize, seed: u64) -> Check {
    let mut r = rng::seeded(seed, 0, 0);
    for case in 0..cases {
        let c = r.gen_range(2..=3);
        let v = r.gen_range(1..=6);
        let n = r.gen_range(c..=8);
        let train: Vec<(Vec<usize>, usize)> = (0..n)
            .map(|i| {
                let len = r.gen_range(1..=4);
                // Every class appears at least once.
                let label = if i < c { i } else { r.gen_range(0..c) };
                ((0..len).map(|_| r.gen_range(0..v)).collect(), label)
            })
            .collect();
        let vocab = Vocabulary::from_tokens((0..v).map(|w| format!("w{w}")));
        let docs: Vec<Document> = train
            .iter()
            .map(|(toks, l)| Document::new(vec![toks.iter().map(|t| t + 2).collect()], Some(*l)))
            .collect();
        let refs: Vec<&Document> = docs.iter().collect();
        let model = nb_fit(&refs, c, &vocab, 1.0).map_err(|e| format!("case {case}: {e}"))?;
        for _ in 0..10 {
            let len = r.gen_range(1..=6);
            let doc: Vec<usize> = (0..len).map(|_| r.gen_range(0..v)).collect();
            let indexed = Document::new(vec![doc.iter().map(|t| t + 2).collect()], None);
            let (got, want) = (model.predict(&indexed), nb_oracle(&train, &doc, c, v));
            if got != want {
                return Err(format!("case {case} doc {doc:?}: predicted {got}, oracle {want}"));
            }
        }
    }
    Ok(())
}
