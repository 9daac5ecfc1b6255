//! Classification metrics: confusion matrix, per-class precision/recall/F1
//! and classification ratio (per-class recall), macro averages, and a simple
//! equal-width histogram for per-sample KL values.

use std::fmt::Write as _;

use crate::data::LabeledDataset;
use crate::dbn::Dbn;
use crate::error::{Error, Result};

/// Square count matrix indexed `(true class, predicted class)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    class_labels: Vec<String>,
}

impl ConfusionMatrix {
    pub fn new(class_labels: Vec<String>) -> Self {
        let n = class_labels.len();
        Self {
            counts: vec![vec![0; n]; n],
            class_labels,
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>, class_labels: Vec<String>) -> Result<Self> {
        let n = class_labels.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "ConfusionMatrix::from_counts",
                expected: n,
                actual: counts.len(),
            });
        }
        Ok(Self {
            counts,
            class_labels,
        })
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn get(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class][predicted]
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class][predicted] += 1;
    }

    pub fn row_sum(&self, true_class: usize) -> u64 {
        self.counts[true_class].iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        self.counts.iter().map(|r| r[predicted]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_class");
        for c in &self.class_labels {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (r, row) in self.counts.iter().enumerate() {
            let _ = write!(out, "{}", self.class_labels[r]);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluate a model over a dataset. The dataset's class list must match the
/// model's exactly.
pub fn confusion(dbn: &Dbn, ds: &LabeledDataset) -> Result<ConfusionMatrix> {
    if ds.class_labels != dbn.class_labels() {
        return Err(Error::ClassMismatch {
            message: format!(
                "model classes {:?} vs data classes {:?}",
                dbn.class_labels(),
                ds.class_labels
            ),
        });
    }
    let mut cm = ConfusionMatrix::new(ds.class_labels.clone());
    for s in &ds.samples {
        cm.record(s.label, dbn.predict_label(&s.input)?);
    }
    Ok(cm)
}

/// Per-class metrics row. `degenerate` flags zero-denominator precision or
/// recall (reported as 0 by convention).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Classification ratio: per-class recall under its tabular name.
    pub ratio: f64,
    pub support: u64,
    pub degenerate: bool,
}

/// Per-class metrics plus unweighted macro averages.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_ratio: f64,
}

impl ClassReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,precision,recall,f1,ratio,support,degenerate\n");
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                m.class, m.precision, m.recall, m.f1, m.ratio, m.support, m.degenerate
            );
        }
        let _ = writeln!(
            out,
            "macro,{},{},{},{},,",
            self.macro_precision, self.macro_recall, self.macro_f1, self.macro_ratio
        );
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(
            "class            precision   recall       f1    ratio  support\n",
        );
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{:<16} {:>9.4} {:>8.4} {:>8.4} {:>7.1}% {:>8}{}",
                m.class,
                m.precision,
                m.recall,
                m.f1,
                m.ratio * 100.0,
                m.support,
                if m.degenerate { "  (degenerate)" } else { "" }
            );
        }
        let _ = writeln!(
            out,
            "{:<16} {:>9.4} {:>8.4} {:>8.4} {:>7.1}%",
            "macro",
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.macro_ratio * 100.0
        );
        out
    }
}

/// Precision/recall/F1/classification-ratio per class from a confusion
/// matrix. Zero-denominator cases yield 0 and set the `degenerate` flag.
pub fn class_report(cm: &ConfusionMatrix) -> Result<ClassReport> {
    if cm.total() == 0 {
        return Err(Error::EmptyInput("confusion matrix"));
    }
    let n = cm.n_classes();
    let mut per_class = Vec::with_capacity(n);
    for c in 0..n {
        let tp = cm.get(c, c) as f64;
        let fp = cm.col_sum(c) as f64 - tp;
        let fn_ = cm.row_sum(c) as f64 - tp;
        let mut degenerate = false;
        let precision = if tp + fp > 0.0 {
            tp / (tp + fp)
        } else {
            degenerate = true;
            0.0
        };
        let recall = if tp + fn_ > 0.0 {
            tp / (tp + fn_)
        } else {
            degenerate = true;
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            degenerate = true;
            0.0
        };
        per_class.push(ClassMetrics {
            class: cm.class_labels[c].clone(),
            precision,
            recall,
            f1,
            ratio: recall,
            support: cm.row_sum(c),
            degenerate,
        });
    }
    let mean = |f: fn(&ClassMetrics) -> f64| -> f64 {
        per_class.iter().map(f).sum::<f64>() / per_class.len() as f64
    };
    Ok(ClassReport {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        macro_ratio: mean(|m| m.ratio),
        per_class,
    })
}

/// Equal-width histogram over `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.max - self.min) / self.counts.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let width = self.bin_width();
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let lo = self.min + width * i as f64;
            let hi = if i + 1 == self.counts.len() {
                self.max
            } else {
                self.min + width * (i + 1) as f64
            };
            let _ = writeln!(out, "{lo},{hi},{c}");
        }
        out
    }
}

/// Bin values into `bins` equal-width bins over `[min, max]`. All values land
/// in bin 0 when the range collapses; the maximum lands in the last bin.
pub fn kl_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput("histogram values"));
    }
    if bins == 0 {
        return Err(Error::InvalidValue {
            what: "histogram bins".into(),
            value: 0.0,
        });
    }
    for &v in values {
        if !v.is_finite() {
            return Err(Error::InvalidValue {
                what: "histogram value".into(),
                value: v,
            });
        }
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = if width > 0.0 {
            (((v - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(Histogram { min, max, counts })
}

#[cfg(test)]
pub(crate) mod published_tables {
    //! Published confusion matrix used as an arithmetic fixture.

    pub const CLASSES: [&str; 8] = [
        "Neutral", "Happy", "Sad", "Surprise", "Fear", "Disgust", "Anger", "Contempt",
    ];

    pub const CONFUSION: [[u64; 8]; 8] = [
        [439, 2, 7, 5, 8, 16, 4, 19],
        [7, 462, 2, 0, 4, 12, 1, 12],
        [12, 3, 421, 13, 11, 20, 5, 15],
        [15, 4, 10, 429, 11, 22, 0, 9],
        [10, 2, 10, 10, 452, 8, 3, 5],
        [8, 2, 3, 5, 8, 462, 5, 7],
        [14, 4, 8, 10, 9, 47, 392, 16],
        [17, 8, 6, 3, 2, 21, 5, 438],
    ];

    pub const F1_EXPECTED: [f64; 8] = [0.85, 0.93, 0.87, 0.88, 0.90, 0.83, 0.85, 0.85];

    pub const TEST_RATIOS_PCT: [f64; 8] = [87.8, 92.4, 84.2, 85.8, 90.4, 92.4, 78.4, 87.6];

    pub fn matrix() -> super::ConfusionMatrix {
        super::ConfusionMatrix::from_counts(
            CONFUSION.iter().map(|r| r.to_vec()).collect(),
            CLASSES.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn::SoftmaxHead;
    use crate::numerics::{DenseMatrix, SeededRng};
    use crate::rbm::Rbm;

    #[test]
    fn published_matrix_row_sums_are_500() {
        let cm = published_tables::matrix();
        for c in 0..8 {
            assert_eq!(cm.row_sum(c), 500);
        }
        assert_eq!(cm.total(), 4000);
    }

    #[test]
    fn published_matrix_reproduces_f1_column() {
        let report = class_report(&published_tables::matrix()).unwrap();
        for (m, expected) in report.per_class.iter().zip(published_tables::F1_EXPECTED) {
            assert!(
                (m.f1 - expected).abs() <= 0.01,
                "{}: f1 {} vs published {}",
                m.class,
                m.f1,
                expected
            );
        }
    }

    #[test]
    fn published_matrix_reproduces_ratios_and_macro_average() {
        let report = class_report(&published_tables::matrix()).unwrap();
        for (m, expected) in report.per_class.iter().zip(published_tables::TEST_RATIOS_PCT) {
            let pct = (m.ratio * 1000.0).round() / 10.0;
            assert_eq!(pct, expected, "{}", m.class);
        }
        let macro_pct = (report.macro_ratio * 1000.0).round() / 10.0;
        assert_eq!(macro_pct, 87.4);
    }

    #[test]
    fn diagonal_matrix_scores_ones() {
        let cm = ConfusionMatrix::from_counts(
            vec![vec![3, 0], vec![0, 7]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let report = class_report(&cm).unwrap();
        for m in &report.per_class {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
            assert!(!m.degenerate);
        }
    }

    #[test]
    fn equal_precision_recall_gives_same_f1() {
        // P = R = 0.5 -> F1 = 0.5
        let cm = ConfusionMatrix::from_counts(
            vec![vec![1, 1], vec![1, 1]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let report = class_report(&cm).unwrap();
        assert_eq!(report.per_class[0].f1, 0.5);
        assert_eq!(report.per_class[1].f1, 0.5);
    }

    #[test]
    fn zero_denominator_yields_zero_and_flag() {
        // class b never occurs and is never predicted
        let cm = ConfusionMatrix::from_counts(
            vec![vec![4, 0], vec![0, 0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let report = class_report(&cm).unwrap();
        let b = &report.per_class[1];
        assert_eq!((b.precision, b.recall, b.f1), (0.0, 0.0, 0.0));
        assert!(b.degenerate);
    }

    #[test]
    fn confusion_total_matches_dataset_and_perfect_model_is_diagonal() {
        // one-feature model that separates inputs at 0.5
        let rbm = Rbm::from_parts(
            DenseMatrix::from_values(1, 1, vec![30.0]).unwrap(),
            vec![0.0],
            vec![-15.0],
        )
        .unwrap();
        let head = SoftmaxHead::from_parts(
            DenseMatrix::from_values(1, 2, vec![-20.0, 20.0]).unwrap(),
            vec![10.0, -10.0],
        )
        .unwrap();
        let dbn = crate::dbn::Dbn::from_parts(
            vec![rbm],
            head,
            vec!["lo".into(), "hi".into()],
        )
        .unwrap();

        let samples: Vec<crate::data::LabeledSample> = (0..20)
            .map(|i| {
                let x = if i % 2 == 0 { 0.05 } else { 0.95 };
                crate::data::LabeledSample {
                    id: format!("s{i}"),
                    input: vec![x],
                    label: i % 2,
                    valence: None,
                    arousal: None,
                }
            })
            .collect();
        let ds = LabeledDataset::new(samples, vec!["lo".into(), "hi".into()]).unwrap();
        let cm = confusion(&dbn, &ds).unwrap();
        assert_eq!(cm.total(), 20);
        assert_eq!(cm.get(0, 0), 10);
        assert_eq!(cm.get(1, 1), 10);
        assert_eq!(cm.get(0, 1), 0);
        assert_eq!(cm.get(1, 0), 0);
    }

    #[test]
    fn confusion_rejects_class_mismatch() {
        let mut rng = SeededRng::new(3);
        let rbm = Rbm::new(1, 2, &mut rng).unwrap();
        let dbn = crate::dbn::Dbn::from_parts(
            vec![rbm],
            SoftmaxHead::zeros(2, 2),
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let ds = LabeledDataset::new(
            vec![crate::data::LabeledSample {
                id: "s0".into(),
                input: vec![0.5],
                label: 0,
                valence: None,
                arousal: None,
            }, crate::data::LabeledSample {
                id: "s1".into(),
                input: vec![0.5],
                label: 1,
                valence: None,
                arousal: None,
            }],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(confusion(&dbn, &ds).is_err());
    }

    #[test]
    fn histogram_single_value() {
        let h = kl_histogram(&[0.42], 5).unwrap();
        assert_eq!(h.counts, vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn histogram_counts_preserved() {
        let mut rng = SeededRng::new(8);
        let values: Vec<f64> = (0..317).map(|_| rng.next_f64() * 3.0).collect();
        let h = kl_histogram(&values, 7).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 317);
    }

    #[test]
    fn histogram_uniform_grid() {
        let values: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let h = kl_histogram(&values, 10).unwrap();
        assert_eq!(h.counts, vec![10; 10]);
    }

    #[test]
    fn histogram_rejects_empty_and_zero_bins() {
        assert!(kl_histogram(&[], 3).is_err());
        assert!(kl_histogram(&[1.0], 0).is_err());
    }
}
