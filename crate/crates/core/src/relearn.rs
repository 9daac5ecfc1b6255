//! Parent/child re-learning: partition the focus-class data by parent
//! correctness, train child models on each partition, compare parent and
//! child softmax distributions sample-by-sample with KL divergence, and
//! sweep a KL threshold to pick the re-learning subset.
//!
//! Per sample, `KL(x) = Σ_c p_c ln(p_c / q_c)` over the focus classes, with
//! `q_c` clamped below by 1e-12 and `0 · ln 0 = 0`; the aggregate value of a
//! model pair is the mean over samples. The parent's distribution over the
//! focus classes is its softmax output restricted to those classes and
//! renormalized, so an 8-class parent is comparable to a 2-class child.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::LabeledDataset;
use crate::dbn::{train_dbn, Dbn, DbnTrainConfig};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Floor applied to child probabilities inside the KL sum.
const Q_CLAMP: f64 = 1e-12;

/// KL divergence between two distributions on the same ordered support.
/// Nonnegative by construction (tiny negative rounding is clamped to 0);
/// exactly 0 when `p == q` componentwise.
pub fn kl_between(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::EmptyInput("distribution"));
    }
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            context: "kl_between",
            expected: p.len(),
            actual: q.len(),
        });
    }
    let mut total = 0.0;
    for (&pc, &qc) in p.iter().zip(q) {
        if pc > 0.0 {
            total += pc * (pc / qc.max(Q_CLAMP)).ln();
        }
    }
    Ok(total.max(0.0))
}

/// Which partition a child model trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChildSet {
    /// Parent-correct focus samples; the Q1 child trains here.
    Set1,
    /// Parent-wrong focus samples; the Q2 child trains here.
    Set2,
}

/// Evaluation set for the threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepEvalSet {
    /// All parent-wrong samples (default).
    Set2,
    /// All focus-class samples.
    Set0,
    /// The below-threshold remainder of Set 2 (disjoint from the child's
    /// training samples).
    Heldout,
}

/// Parent model plus the Set 0/1/2 partition of the focus-class data.
#[derive(Debug, Clone)]
pub struct RelearnPlan {
    pub parent: Dbn,
    pub focus_classes: Vec<String>,
    /// All focus-class samples, labels remapped to focus indices.
    focus_data: LabeledDataset,
    pub set0: Vec<String>,
    pub set1: Vec<String>,
    pub set2: Vec<String>,
}

impl RelearnPlan {
    pub fn dataset_for(&self, which: ChildSet) -> LabeledDataset {
        let ids: BTreeSet<String> = match which {
            ChildSet::Set1 => self.set1.iter().cloned().collect(),
            ChildSet::Set2 => self.set2.iter().cloned().collect(),
        };
        self.focus_data.subset(&ids)
    }

    pub fn focus_dataset(&self) -> &LabeledDataset {
        &self.focus_data
    }

    /// Table-style text summary of the partition sizes.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "focus classes: {}", self.focus_classes.join(", "));
        let _ = writeln!(out, "set0 (all focus samples): {}", self.set0.len());
        let _ = writeln!(out, "set1 (parent-correct):    {}", self.set1.len());
        let _ = writeln!(out, "set2 (parent-wrong):      {}", self.set2.len());
        out
    }
}

/// Partition the focus-class samples of `ds` by parent correctness.
pub fn build_plan(parent: &Dbn, ds: &LabeledDataset, focus_classes: &[String]) -> Result<RelearnPlan> {
    if focus_classes.is_empty() {
        return Err(Error::EmptyInput("focus classes"));
    }
    if ds.class_labels != parent.class_labels() {
        return Err(Error::ClassMismatch {
            message: format!(
                "parent classes {:?} vs data classes {:?}",
                parent.class_labels(),
                ds.class_labels
            ),
        });
    }
    let mut focus_indices = Vec::with_capacity(focus_classes.len());
    for c in focus_classes {
        match ds.class_index(c) {
            Some(i) => focus_indices.push(i),
            None => {
                return Err(Error::ClassMismatch {
                    message: format!("focus class `{c}` not in dataset classes"),
                })
            }
        }
    }

    let mut set0 = Vec::new();
    let mut set1 = Vec::new();
    let mut set2 = Vec::new();
    let mut focus_samples = Vec::new();
    for s in &ds.samples {
        let Some(focus_label) = focus_indices.iter().position(|&i| i == s.label) else {
            continue;
        };
        set0.push(s.id.clone());
        let predicted = parent.predict_label(&s.input)?;
        if predicted == s.label {
            set1.push(s.id.clone());
        } else {
            set2.push(s.id.clone());
        }
        let mut remapped = s.clone();
        remapped.label = focus_label;
        focus_samples.push(remapped);
    }

    if set1.is_empty() || set2.is_empty() {
        return Err(Error::DegeneratePartition {
            set1: set1.len(),
            set2: set2.len(),
        });
    }

    let focus_data = LabeledDataset::new(focus_samples, focus_classes.to_vec())?;
    Ok(RelearnPlan {
        parent: parent.clone(),
        focus_classes: focus_classes.to_vec(),
        focus_data,
        set0,
        set1,
        set2,
    })
}

/// Train a fresh adaptive DBN on one partition. The parent is never touched;
/// the child's classes are exactly the focus classes.
pub fn train_child(
    plan: &RelearnPlan,
    which: ChildSet,
    cfg: &DbnTrainConfig,
    rng: &mut SeededRng,
) -> Result<Dbn> {
    let subset = plan.dataset_for(which);
    if subset.is_empty() {
        return Err(Error::EmptyInput("child training subset"));
    }
    let (child, _) = train_dbn(&subset, cfg, rng)?;
    Ok(child)
}

/// Per-sample KL value with the sample's annotations carried along.
#[derive(Debug, Clone, PartialEq)]
pub struct KlSample {
    pub id: String,
    pub kl: f64,
    pub valence: Option<f64>,
    pub arousal: Option<f64>,
}

/// Per-sample and mean KL divergence between two models on a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct KlReport {
    pub model_pair: (String, String),
    pub per_sample: Vec<KlSample>,
    /// Mean of the per-sample values.
    pub aggregate: f64,
}

impl KlReport {
    pub fn values(&self) -> Vec<f64> {
        self.per_sample.iter().map(|s| s.kl).collect()
    }
}

fn support_indices(model: &Dbn, support: &[String]) -> Result<Vec<usize>> {
    support
        .iter()
        .map(|c| {
            model
                .class_labels()
                .iter()
                .position(|m| m == c)
                .ok_or_else(|| Error::ClassMismatch {
                    message: format!("class `{c}` missing from model classes"),
                })
        })
        .collect()
}

fn restricted_proba(model: &Dbn, v: &[f64], idxs: &[usize]) -> Result<Vec<f64>> {
    let full = model.predict_proba(v)?;
    let picked: Vec<f64> = idxs.iter().map(|&i| full[i]).collect();
    let sum: f64 = picked.iter().sum();
    if sum > 0.0 {
        Ok(picked.iter().map(|p| p / sum).collect())
    } else {
        Ok(vec![1.0 / picked.len() as f64; picked.len()])
    }
}

/// Per-sample and aggregate KL divergence between the softmax outputs of
/// `p` and `q` over `q`'s class set. `p` is restricted to that support and
/// renormalized; both models must be able to score every sample.
pub fn kl_divergence(
    p: &Dbn,
    q: &Dbn,
    samples: &LabeledDataset,
    p_name: &str,
    q_name: &str,
) -> Result<KlReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("KL sample set"));
    }
    let support = q.class_labels().to_vec();
    let p_idxs = support_indices(p, &support)?;
    let q_idxs = support_indices(q, &support)?;

    let mut per_sample = Vec::with_capacity(samples.len());
    let mut total = 0.0;
    for s in &samples.samples {
        let p_dist = restricted_proba(p, &s.input, &p_idxs)?;
        let q_dist = restricted_proba(q, &s.input, &q_idxs)?;
        let kl = kl_between(&p_dist, &q_dist)?;
        total += kl;
        per_sample.push(KlSample {
            id: s.id.clone(),
            kl,
            valence: s.valence,
            arousal: s.arousal,
        });
    }
    Ok(KlReport {
        model_pair: (p_name.to_string(), q_name.to_string()),
        aggregate: total / per_sample.len() as f64,
        per_sample,
    })
}

/// Nonnegative finite KL threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlThreshold(f64);

impl KlThreshold {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidValue {
                what: "KL threshold".into(),
                value,
            });
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Split a report into ids strictly above the threshold and the rest.
pub fn partition_by_threshold(
    report: &KlReport,
    threshold: KlThreshold,
) -> (Vec<String>, Vec<String>) {
    let mut above = Vec::new();
    let mut below = Vec::new();
    for s in &report.per_sample {
        if s.kl > threshold.value() {
            above.push(s.id.clone());
        } else {
            below.push(s.id.clone());
        }
    }
    (above, below)
}

/// Why a sweep row carries no classification ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFlag {
    Ok,
    /// No sample exceeded the threshold; no child was trained.
    EmptyAbove,
    /// The held-out evaluation set was empty.
    EmptyEval,
}

impl SweepFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepFlag::Ok => "ok",
            SweepFlag::EmptyAbove => "empty",
            SweepFlag::EmptyEval => "empty_eval",
        }
    }
}

/// One threshold's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub n_above: usize,
    pub classification_ratio: Option<f64>,
    pub flag: SweepFlag,
}

/// Result of the full threshold sweep: the KL(P, Q2) report over Set 2 and
/// one row per threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub q2_report: KlReport,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("theta,n_above,classification_ratio,flag\n");
        for r in &self.rows {
            let ratio = r
                .classification_ratio
                .map(|v| v.to_string())
                .unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.theta, r.n_above, ratio, r.flag.as_str());
        }
        out
    }
}

/// For each threshold: take the Set 2 samples whose KL(P, Q2) exceeds it,
/// train a fresh re-learning child on them, and measure its classification
/// ratio on the chosen evaluation set. Child trainings use RNG streams
/// derived deterministically from one master draw, so the sweep is
/// reproducible and the rows are independent.
pub fn relearn_sweep(
    plan: &RelearnPlan,
    thresholds: &[KlThreshold],
    cfg: &DbnTrainConfig,
    eval_set: SweepEvalSet,
    rng: &mut SeededRng,
) -> Result<SweepResult> {
    if thresholds.is_empty() {
        return Err(Error::EmptyInput("threshold list"));
    }
    let master = rng.next_u64();
    let set2_ds = plan.dataset_for(ChildSet::Set2);
    let q2 = {
        let mut child_rng = SeededRng::derived(master, 0);
        train_child(plan, ChildSet::Set2, cfg, &mut child_rng)?
    };
    let q2_report = kl_divergence(&plan.parent, &q2, &set2_ds, "P", "Q2")?;

    let mut rows = Vec::with_capacity(thresholds.len());
    for (i, &theta) in thresholds.iter().enumerate() {
        let (above, below) = partition_by_threshold(&q2_report, theta);
        if above.is_empty() {
            rows.push(SweepRow {
                theta: theta.value(),
                n_above: 0,
                classification_ratio: None,
                flag: SweepFlag::EmptyAbove,
            });
            continue;
        }
        let train_ids: BTreeSet<String> = above.iter().cloned().collect();
        let train_ds = set2_ds.subset(&train_ids);
        let mut child_rng = SeededRng::derived(master, 1 + i as u64);
        let (child, _) = train_dbn(&train_ds, cfg, &mut child_rng)?;

        let eval_ds = match eval_set {
            SweepEvalSet::Set2 => set2_ds.clone(),
            SweepEvalSet::Set0 => plan.focus_dataset().clone(),
            SweepEvalSet::Heldout => {
                let below_ids: BTreeSet<String> = below.iter().cloned().collect();
                set2_ds.subset(&below_ids)
            }
        };
        if eval_ds.is_empty() {
            rows.push(SweepRow {
                theta: theta.value(),
                n_above: above.len(),
                classification_ratio: None,
                flag: SweepFlag::EmptyEval,
            });
            continue;
        }
        rows.push(SweepRow {
            theta: theta.value(),
            n_above: above.len(),
            classification_ratio: Some(child.accuracy(&eval_ds)?),
            flag: SweepFlag::Ok,
        });
    }

    Ok(SweepResult { q2_report, rows })
}

/// Write `id,valence,arousal,kl,above` rows for external scatter plotting.
/// Every sample must carry valence and arousal.
pub fn export_scatter(report: &KlReport, threshold: KlThreshold, path: &Path) -> Result<()> {
    if report.per_sample.is_empty() {
        return Err(Error::EmptyInput("KL report"));
    }
    let mut out = String::from("id,valence,arousal,kl,above\n");
    for s in &report.per_sample {
        let (Some(v), Some(a)) = (s.valence, s.arousal) else {
            return Err(Error::Data {
                path: path.to_path_buf(),
                message: format!("sample {} has no valence/arousal annotation", s.id),
            });
        };
        let above = if s.kl > threshold.value() { 1 } else { 0 };
        let _ = writeln!(out, "{},{v},{a},{},{above}", s.id, s.kl);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_overlap_fixture;
    use crate::dbn::{DbnTrainConfig, SoftmaxHead};
    use crate::numerics::DenseMatrix;
    use crate::rbm::{Rbm, RbmTrainConfig};

    #[test]
    fn kl_identity_is_exactly_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_between(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_direct_evaluation() {
        // 0.9 ln 1.8 + 0.1 ln 0.2
        let kl = kl_between(&[0.9, 0.1], &[0.5, 0.5]).unwrap();
        assert!((kl - 0.3680642071684971).abs() < 1e-15);
    }

    #[test]
    fn kl_zero_p_component_contributes_nothing() {
        let kl = kl_between(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_clamps_vanishing_q() {
        let kl = kl_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(kl.is_finite());
        assert!((kl - (1.0f64 / Q_CLAMP).ln()).abs() < 1e-9);
    }

    #[test]
    fn kl_rejects_mismatched_or_empty() {
        assert!(kl_between(&[1.0], &[0.5, 0.5]).is_err());
        assert!(kl_between(&[], &[]).is_err());
    }

    #[test]
    fn kl_matches_brute_force_on_random_pairs() {
        // independent oracle: literal evaluation of the definition
        fn oracle(p: &[f64], q: &[f64]) -> f64 {
            let mut s = 0.0;
            for i in 0..p.len() {
                if p[i] > 0.0 {
                    let qq = if q[i] < 1e-12 { 1e-12 } else { q[i] };
                    s += p[i] * (p[i] / qq).ln();
                }
            }
            s
        }
        let mut rng = SeededRng::new(77);
        for _ in 0..200 {
            let k = 2 + (rng.next_u64() % 4) as usize; // 2..=5 classes
            let mut p: Vec<f64> = (0..k).map(|_| rng.next_f64() + 1e-6).collect();
            let mut q: Vec<f64> = (0..k).map(|_| rng.next_f64() + 1e-6).collect();
            let sp: f64 = p.iter().sum();
            let sq: f64 = q.iter().sum();
            p.iter_mut().for_each(|x| *x /= sp);
            q.iter_mut().for_each(|x| *x /= sq);
            let got = kl_between(&p, &q).unwrap();
            assert!((got - oracle(&p, &q).max(0.0)).abs() < 1e-12);
            assert!(got >= 0.0);
        }
    }

    /// Hand-built 8-class-style parent on one feature, for partition tests:
    /// splits at 0.5 but deliberately mislabels inputs in (0.35, 0.5).
    fn step_model(cut: f64, labels: Vec<String>) -> Dbn {
        let n = labels.len();
        let rbm = Rbm::from_parts(
            DenseMatrix::from_values(1, 1, vec![40.0]).unwrap(),
            vec![0.0],
            vec![-40.0 * cut],
        )
        .unwrap();
        let mut w = vec![0.0; n];
        w[0] = -20.0;
        w[1] = 20.0;
        let head = SoftmaxHead::from_parts(
            DenseMatrix::from_values(1, n, w).unwrap(),
            {
                let mut b = vec![-50.0; n];
                b[0] = 10.0;
                b[1] = -10.0;
                b
            },
        )
        .unwrap();
        Dbn::from_parts(vec![rbm], head, labels).unwrap()
    }

    fn two_class_dataset(xs: &[(f64, usize)]) -> LabeledDataset {
        let samples = xs
            .iter()
            .enumerate()
            .map(|(i, &(x, label))| crate::data::LabeledSample {
                id: format!("s{i:03}"),
                input: vec![x],
                label,
                valence: Some(2.0 * x - 1.0),
                arousal: Some(0.0),
            })
            .collect();
        LabeledDataset::new(samples, vec!["c0".into(), "c1".into()]).unwrap()
    }

    #[test]
    fn plan_partitions_by_parent_correctness() {
        let parent = step_model(0.5, vec!["c0".into(), "c1".into()]);
        // two c0 correct, one c0 wrong (x>0.5), two c1 correct, one c1 wrong
        let ds = two_class_dataset(&[
            (0.1, 0),
            (0.2, 0),
            (0.8, 0),
            (0.9, 1),
            (0.7, 1),
            (0.2, 1),
        ]);
        let plan = build_plan(&parent, &ds, &ds.class_labels.clone()).unwrap();
        assert_eq!(plan.set0.len(), 6);
        assert_eq!(plan.set1.len(), 4);
        assert_eq!(plan.set2.len(), 2);
        assert_eq!(plan.set1.len() + plan.set2.len(), plan.set0.len());
        let set2: BTreeSet<_> = plan.set2.iter().cloned().collect();
        assert!(set2.contains("s002") && set2.contains("s005"));
    }

    #[test]
    fn plan_with_perfect_parent_is_degenerate() {
        let parent = step_model(0.5, vec!["c0".into(), "c1".into()]);
        let ds = two_class_dataset(&[(0.1, 0), (0.2, 0), (0.8, 1), (0.9, 1)]);
        let err = build_plan(&parent, &ds, &ds.class_labels.clone()).unwrap_err();
        assert!(matches!(err, Error::DegeneratePartition { set2: 0, .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn plan_is_deterministic() {
        let parent = step_model(0.5, vec!["c0".into(), "c1".into()]);
        let ds = two_class_dataset(&[(0.1, 0), (0.8, 0), (0.9, 1), (0.2, 1)]);
        let a = build_plan(&parent, &ds, &ds.class_labels.clone()).unwrap();
        let b = build_plan(&parent, &ds, &ds.class_labels.clone()).unwrap();
        assert_eq!(a.set0, b.set0);
        assert_eq!(a.set1, b.set1);
        assert_eq!(a.set2, b.set2);
    }

    #[test]
    fn plan_rejects_unknown_focus_class() {
        let parent = step_model(0.5, vec!["c0".into(), "c1".into()]);
        let ds = two_class_dataset(&[(0.1, 0), (0.8, 0), (0.9, 1), (0.2, 1)]);
        assert!(build_plan(&parent, &ds, &["zz".into()]).is_err());
    }

    fn quick_cfg() -> DbnTrainConfig {
        let mut cfg = DbnTrainConfig::defaults();
        cfg.initial_hidden = 4;
        cfg.rbm = RbmTrainConfig::defaults_for(4);
        cfg.rbm.epochs = 40;
        cfg.head_epochs = 300;
        cfg.max_layers = 1;
        cfg
    }

    /// Higher-capacity config for the child-quality checks.
    fn child_cfg() -> DbnTrainConfig {
        let mut cfg = DbnTrainConfig::defaults();
        cfg.initial_hidden = 12;
        cfg.rbm = RbmTrainConfig::defaults_for(12);
        cfg.rbm.epochs = 100;
        cfg.head_epochs = 1000;
        cfg.head_learning_rate = 2.0;
        cfg.max_layers = 1;
        cfg
    }

    fn trained_fixture() -> (Dbn, LabeledDataset, RelearnPlan) {
        let mut rng = SeededRng::new(1234);
        let data = make_overlap_fixture(60, 0.5, &mut rng).unwrap();
        let (parent, _) = train_dbn(&data, &quick_cfg(), &mut rng).unwrap();
        let plan = build_plan(&parent, &data, &data.class_labels.clone()).unwrap();
        (parent, data, plan)
    }

    #[test]
    fn children_match_partition_semantics() {
        let (parent, _, plan) = trained_fixture();

        // child classes are exactly the focus classes
        let mut rng = SeededRng::new(9);
        let q1 = train_child(&plan, ChildSet::Set1, &child_cfg(), &mut rng).unwrap();
        assert_eq!(q1.class_labels(), plan.focus_classes.as_slice());

        // determinism
        let q1_again = train_child(
            &plan,
            ChildSet::Set1,
            &child_cfg(),
            &mut SeededRng::new(9),
        )
        .unwrap();
        assert_eq!(q1, q1_again);

        // the parent is correct on every Set 1 sample by construction, so the
        // child must fit Set 1 perfectly to match it
        let set1 = plan.dataset_for(ChildSet::Set1);
        let q1_acc = q1.accuracy(&set1).unwrap();
        assert!(q1_acc >= 1.0 - 1e-12, "Q1 accuracy on set1 = {q1_acc}");

        // Q2, trained on the parent's mistakes, diverges more than Q1
        let mut rng = SeededRng::new(10);
        let q2 = train_child(&plan, ChildSet::Set2, &child_cfg(), &mut rng).unwrap();
        let set2 = plan.dataset_for(ChildSet::Set2);
        let kl_q1 = kl_divergence(&parent, &q1, &set2, "P", "Q1").unwrap();
        let kl_q2 = kl_divergence(&parent, &q2, &set2, "P", "Q2").unwrap();
        assert!(
            kl_q2.aggregate > kl_q1.aggregate,
            "KL(P,Q2)={} must exceed KL(P,Q1)={}",
            kl_q2.aggregate,
            kl_q1.aggregate
        );
    }

    #[test]
    fn kl_of_model_with_itself_is_zero() {
        let (parent, data, _) = trained_fixture();
        let report = kl_divergence(&parent, &parent, &data, "P", "P").unwrap();
        assert_eq!(report.aggregate, 0.0);
        assert!(report.per_sample.iter().all(|s| s.kl == 0.0));
    }

    #[test]
    fn kl_rejects_class_mismatch() {
        let (parent, data, _) = trained_fixture();
        let other = step_model(0.5, vec!["x".into(), "y".into()]);
        assert!(kl_divergence(&parent, &other, &data, "P", "Q").is_err());
    }

    #[test]
    fn parent_is_immutable_under_relearn_operations() {
        let (parent, data, plan) = trained_fixture();
        let before = serde_json::to_string(&parent).unwrap();
        let mut rng = SeededRng::new(20);
        let q2 = train_child(&plan, ChildSet::Set2, &quick_cfg(), &mut rng).unwrap();
        let set2 = plan.dataset_for(ChildSet::Set2);
        let report = kl_divergence(&plan.parent, &q2, &set2, "P", "Q2").unwrap();
        let thresholds = [KlThreshold::new(0.0).unwrap(), KlThreshold::new(0.1).unwrap()];
        let _ = relearn_sweep(&plan, &thresholds, &quick_cfg(), SweepEvalSet::Set2, &mut rng)
            .unwrap();
        let _ = partition_by_threshold(&report, thresholds[1]);
        let _ = kl_divergence(&parent, &parent, &data, "P", "P").unwrap();
        assert_eq!(serde_json::to_string(&plan.parent).unwrap(), before);
        assert_eq!(serde_json::to_string(&parent).unwrap(), before);
    }

    #[test]
    fn partition_laws() {
        let report = KlReport {
            model_pair: ("P".into(), "Q".into()),
            per_sample: vec![
                KlSample { id: "a".into(), kl: 0.0, valence: None, arousal: None },
                KlSample { id: "b".into(), kl: 0.5, valence: None, arousal: None },
                KlSample { id: "c".into(), kl: 1.5, valence: None, arousal: None },
            ],
            aggregate: 2.0 / 3.0,
        };
        let (above, below) = partition_by_threshold(&report, KlThreshold::new(0.0).unwrap());
        assert_eq!(above, vec!["b", "c"]);
        assert_eq!(below, vec!["a"]);

        let (above, below) = partition_by_threshold(&report, KlThreshold::new(9.0).unwrap());
        assert!(above.is_empty());
        assert_eq!(below.len(), 3);

        // |above| non-increasing in theta; covers are disjoint and exhaustive
        let mut prev = usize::MAX;
        for theta in [0.0, 0.4, 0.5, 1.0, 2.0] {
            let (above, below) = partition_by_threshold(&report, KlThreshold::new(theta).unwrap());
            assert_eq!(above.len() + below.len(), report.per_sample.len());
            assert!(above.len() <= prev);
            prev = above.len();
        }
    }

    #[test]
    fn threshold_rejects_negative_and_nan() {
        assert!(KlThreshold::new(-0.1).is_err());
        assert!(KlThreshold::new(f64::NAN).is_err());
        assert!(KlThreshold::new(0.0).is_ok());
        assert!(KlThreshold::new(f64::INFINITY).is_ok());
    }

    #[test]
    fn sweep_has_one_row_per_threshold_and_flags_empty() {
        let (_, _, plan) = trained_fixture();
        let thresholds = [
            KlThreshold::new(0.0).unwrap(),
            KlThreshold::new(0.05).unwrap(),
            KlThreshold::new(f64::INFINITY).unwrap(),
        ];
        let mut rng = SeededRng::new(30);
        let result =
            relearn_sweep(&plan, &thresholds, &quick_cfg(), SweepEvalSet::Set2, &mut rng).unwrap();
        assert_eq!(result.rows.len(), 3);
        let last = &result.rows[2];
        assert_eq!(last.flag, SweepFlag::EmptyAbove);
        assert_eq!(last.n_above, 0);
        assert!(last.classification_ratio.is_none());
        for row in &result.rows[..2] {
            if row.flag == SweepFlag::Ok {
                assert!(row.classification_ratio.is_some());
            }
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let (_, _, plan) = trained_fixture();
        let thresholds = [KlThreshold::new(0.0).unwrap(), KlThreshold::new(0.02).unwrap()];
        let run = |seed: u64| {
            let mut rng = SeededRng::new(seed);
            relearn_sweep(&plan, &thresholds, &quick_cfg(), SweepEvalSet::Set2, &mut rng).unwrap()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn scatter_export_round_trips() {
        let report = KlReport {
            model_pair: ("P".into(), "Q2".into()),
            per_sample: vec![
                KlSample {
                    id: "s0".into(),
                    kl: 0.123456789123,
                    valence: Some(-0.25),
                    arousal: Some(0.75),
                },
                KlSample {
                    id: "s1".into(),
                    kl: 0.000001234567891,
                    valence: Some(0.5),
                    arousal: Some(-1.0),
                },
            ],
            aggregate: 0.0617284566,
        };
        let dir = std::env::temp_dir().join("adaptive_dbn_relearn_tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("scatter_{}.csv", std::process::id()));
        let theta = KlThreshold::new(0.001).unwrap();
        export_scatter(&report, theta, &path).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + report.per_sample.len());
        for (line, s) in lines[1..].iter().zip(&report.per_sample) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0], s.id);
            assert_eq!(fields[1].parse::<f64>().unwrap(), s.valence.unwrap());
            assert_eq!(fields[2].parse::<f64>().unwrap(), s.arousal.unwrap());
            assert_eq!(fields[3].parse::<f64>().unwrap(), s.kl);
            let above = s.kl > theta.value();
            assert_eq!(fields[4], if above { "1" } else { "0" });
        }
    }

    #[test]
    fn scatter_export_requires_annotations() {
        let report = KlReport {
            model_pair: ("P".into(), "Q2".into()),
            per_sample: vec![KlSample {
                id: "s0".into(),
                kl: 0.5,
                valence: None,
                arousal: None,
            }],
            aggregate: 0.5,
        };
        let dir = std::env::temp_dir().join("adaptive_dbn_relearn_tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("scatter_missing_{}.csv", std::process::id()));
        assert!(export_scatter(&report, KlThreshold::new(0.0).unwrap(), &path).is_err());
    }
}
