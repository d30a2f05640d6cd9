use std::fmt::Write as _;

use super::{ClassMetrics, CrossValidation, CurvePlan, LearningCurve};

/// `# key: value` lines. Values are written verbatim on one line.
pub fn manifest_header(entries: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        let v = v.replace('\n', " ");
        writeln!(s, "# {k}: {v}").unwrap();
    }
    s
}

fn metric_columns(class_names: &[String]) -> Vec<String> {
    let mut cols = vec!["accuracy".to_owned()];
    for c in class_names {
        for m in ["precision", "recall", "f1", "support"] {
            cols.push(format!("{c}_{m}"));
        }
    }
    cols
}

fn metric_cells(accuracy: f64, classes: &[ClassMetrics]) -> Vec<String> {
    let mut cells = vec![format!("{accuracy:.6}")];
    for m in classes {
        cells.push(format!("{:.6}", m.precision));
        cells.push(format!("{:.6}", m.recall));
        cells.push(format!("{:.6}", m.f1));
        cells.push(m.support.to_string());
    }
    cells
}

/// One row per fold plus `pooled` and `fold_mean` rows.
pub fn crossval_summary_csv(header: &str, cv: &CrossValidation, class_names: &[String]) -> String {
    let mut s = header.to_owned();
    writeln!(s, "scope,{}", metric_columns(class_names).join(",")).unwrap();
    for f in &cv.folds {
        let cells = metric_cells(f.report.accuracy, &f.report.classes);
        writeln!(s, "fold_{},{}", f.fold + 1, cells.join(",")).unwrap();
    }
    writeln!(s, "pooled,{}", metric_cells(cv.pooled.accuracy, &cv.pooled.classes).join(",")).unwrap();
    writeln!(s, "fold_mean,{}", metric_cells(cv.fold_mean.accuracy, &cv.fold_mean.classes).join(",")).unwrap();
    s
}

/// Held-out predictions in fold order.
pub fn predictions_csv(header: &str, cv: &CrossValidation, labels: &[usize], class_names: &[String]) -> String {
    let mut s = header.to_owned();
    s.push_str("fold,index,gold,predicted\n");
    for f in &cv.folds {
        for (&i, &p) in f.test.iter().zip(&f.predictions) {
            writeln!(s, "{},{},{},{}", f.fold + 1, i, class_names[labels[i]], class_names[p]).unwrap();
        }
    }
    s
}

/// Wall-clock seconds per work unit. These vary run to run.
pub fn timing_csv(header: &str, rows: &[(String, f64, f64)]) -> String {
    let mut s = header.to_owned();
    s.push_str("unit,train_seconds,test_seconds\n");
    for (unit, train, test) in rows {
        writeln!(s, "{unit},{train:.3},{test:.3}").unwrap();
    }
    s
}

fn markdown_table(header: &[String], rows: &[Vec<String>], numeric_from: usize) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|j| {
            rows.iter()
                .map(|r| r[j].chars().count())
                .chain([header[j].chars().count(), 3])
                .max()
                .unwrap()
        })
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::from("|");
        for (j, c) in cells.iter().enumerate() {
            if j >= numeric_from {
                write!(s, " {c:>w$} |", w = widths[j]).unwrap();
            } else {
                write!(s, " {c:<w$} |", w = widths[j]).unwrap();
            }
        }
        s.push('\n');
        s
    };
    let mut s = line(header);
    s.push('|');
    for (j, w) in widths.iter().enumerate() {
        if j >= numeric_from {
            write!(s, " {}: |", "-".repeat(w - 1)).unwrap();
        } else {
            write!(s, " {} |", "-".repeat(*w)).unwrap();
        }
    }
    s.push('\n');
    for r in rows {
        s.push_str(&line(r));
    }
    s
}

/// Per-class precision/recall/F1 and accuracy, one row per classifier and
/// aggregation.
pub fn crossval_markdown(header: &str, runs: &[&CrossValidation], class_names: &[String]) -> String {
    let mut cols = vec!["Classifier".to_owned(), "Aggregation".to_owned()];
    for c in class_names {
        cols.push(format!("{c} P"));
        cols.push(format!("{c} R"));
        cols.push(format!("{c} F1"));
    }
    cols.push("Accuracy".to_owned());
    let row = |name: &str, agg: &str, acc: f64, classes: &[ClassMetrics]| {
        let mut r = vec![name.to_owned(), agg.to_owned()];
        for m in classes {
            r.push(format!("{:.2}", m.precision));
            r.push(format!("{:.2}", m.recall));
            r.push(format!("{:.2}", m.f1));
        }
        r.push(format!("{acc:.2}"));
        r
    };
    let mut rows = Vec::new();
    for cv in runs {
        rows.push(row(&cv.classifier, "pooled", cv.pooled.accuracy, &cv.pooled.classes));
        rows.push(row(&cv.classifier, "fold mean", cv.fold_mean.accuracy, &cv.fold_mean.classes));
    }
    let mut s = header.to_owned();
    s.push_str(&markdown_table(&cols, &rows, 2));
    s
}

fn skipped_lines(curve: &LearningCurve) -> String {
    let mut s = String::new();
    for k in &curve.skipped {
        writeln!(s, "# skipped: fraction {} size {}: {}", k.fraction, k.resample_size, k.reason).unwrap();
    }
    s
}

/// `fraction,size,accuracy` rows for one classifier.
pub fn curve_csv(header: &str, curve: &LearningCurve) -> String {
    let mut s = header.to_owned();
    s.push_str(&skipped_lines(curve));
    s.push_str("fraction,size,accuracy\n");
    for p in &curve.points {
        writeln!(s, "{},{},{:.6}", p.fraction, p.resample_size, p.test_accuracy).unwrap();
    }
    s
}

fn accuracy_at(curve: &LearningCurve, fraction: f64) -> Option<f64> {
    curve.points.iter().find(|p| p.fraction == fraction).map(|p| p.test_accuracy)
}

/// One row per planned fraction, one accuracy column per classifier.
/// Skipped points are left empty.
pub fn combined_curve_csv(header: &str, plan: &CurvePlan, curves: &[&LearningCurve]) -> String {
    let mut s = header.to_owned();
    s.push_str("fraction,size");
    for c in curves {
        write!(s, ",{}", c.classifier).unwrap();
    }
    s.push('\n');
    for p in &plan.points {
        write!(s, "{},{}", p.fraction, p.size).unwrap();
        for c in curves {
            match accuracy_at(c, p.fraction) {
                Some(a) => write!(s, ",{a:.6}").unwrap(),
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

pub fn curve_markdown(header: &str, plan: &CurvePlan, curves: &[&LearningCurve]) -> String {
    let mut cols = vec!["Fraction".to_owned(), "Size".to_owned()];
    cols.extend(curves.iter().map(|c| c.classifier.clone()));
    let rows: Vec<Vec<String>> = plan
        .points
        .iter()
        .map(|p| {
            let mut r = vec![p.fraction.to_string(), p.size.to_string()];
            for c in curves {
                r.push(accuracy_at(c, p.fraction).map_or_else(|| "skipped".to_owned(), |a| format!("{a:.4}")));
            }
            r
        })
        .collect();
    let mut s = header.to_owned();
    s.push_str(&markdown_table(&cols, &rows, 1));
    s
}
