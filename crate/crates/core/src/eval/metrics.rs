use crate::error::{Error, Result};

/// Rows are gold classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.num_classes()).map(|c| self.counts[c][c]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub classes: Vec<ClassMetrics>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy plus per-class precision, recall and F1. Undefined ratios
/// (nothing predicted, nothing gold) are reported as 0.
pub fn compute_metrics(gold: &[usize], predicted: &[usize], num_classes: usize) -> Result<MetricsReport> {
    if gold.len() != predicted.len() {
        return Err(Error::Contract(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Contract("no samples to score".into()));
    }
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    for (&g, &p) in gold.iter().zip(predicted) {
        if g >= num_classes || p >= num_classes {
            return Err(Error::Contract(format!("label ({g}, {p}) out of range for {num_classes} classes")));
        }
        counts[g][p] += 1;
    }
    let confusion = ConfusionMatrix { counts };
    let classes = (0..num_classes)
        .map(|c| {
            let tp = confusion.counts[c][c];
            let support: usize = confusion.counts[c].iter().sum();
            let predicted_c: usize = confusion.counts.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, predicted_c);
            let recall = ratio(tp, support);
            // 2PR/(P+R) in a single division; 0 when P + R = 0.
            let f1 = ratio(2 * tp, support + predicted_c);
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let accuracy = ratio(confusion.trace(), confusion.total());
    Ok(MetricsReport {
        confusion,
        accuracy,
        classes,
    })
}

/// Unweighted mean of several reports (accuracy and each per-class metric).
#[derive(Clone, Debug, PartialEq)]
pub struct MeanMetrics {
    pub accuracy: f64,
    pub classes: Vec<ClassMetrics>,
}

pub fn mean_metrics(reports: &[MetricsReport]) -> Option<MeanMetrics> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let c = first.classes.len();
    let accuracy = reports.iter().map(|r| r.accuracy).sum::<f64>() / n;
    let classes = (0..c)
        .map(|k| ClassMetrics {
            precision: reports.iter().map(|r| r.classes[k].precision).sum::<f64>() / n,
            recall: reports.iter().map(|r| r.classes[k].recall).sum::<f64>() / n,
            f1: reports.iter().map(|r| r.classes[k].f1).sum::<f64>() / n,
            support: reports.iter().map(|r| r.classes[k].support).sum(),
        })
        .collect();
    Some(MeanMetrics { accuracy, classes })
}
