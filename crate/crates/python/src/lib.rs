//! Python bindings for the adaptive DBN library.
//!
//! Exposes datasets, model training/prediction, and the KL-divergence
//! re-learning pipeline as the `_adaptive_dbn` extension module. See
//! `python/smoke_test.py` for a worked end-to-end example.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use adaptive_dbn::data::{self, CsvSchema, LabeledDataset};
use adaptive_dbn::dbn::{self, DbnTrainConfig};
use adaptive_dbn::metrics;
use adaptive_dbn::numerics::SeededRng;
use adaptive_dbn::rbm::RbmTrainConfig;
use adaptive_dbn::relearn::{self, ChildSet, KlThreshold, SweepEvalSet};
use adaptive_dbn::Error;

type SampleTuple = (String, Vec<f64>, String, Option<f64>, Option<f64>);
type ReportRow = (String, f64, f64, f64, f64);
type SweepRowTuple = (f64, usize, Option<f64>, String);

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Data { .. } | Error::DataRow { .. } => {
            PyIOError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// An immutable labeled dataset.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Dataset {
    inner: LabeledDataset,
}

#[pymethods]
impl Dataset {
    /// Synthetic two-class 2-D overlap fixture with valence/arousal fields.
    #[staticmethod]
    fn overlap_fixture(n_per_class: usize, overlap: f64, seed: u64) -> PyResult<Self> {
        let mut rng = SeededRng::new(seed);
        let inner = data::make_overlap_fixture(n_per_class, overlap, &mut rng).map_err(err)?;
        Ok(Self { inner })
    }

    /// Load `label[,valence,arousal],f0,f1,...` CSV with min-max normalization.
    #[staticmethod]
    #[pyo3(signature = (path, expected_classes=None))]
    fn from_csv(path: PathBuf, expected_classes: Option<Vec<String>>) -> PyResult<Self> {
        let schema = CsvSchema { expected_classes };
        let inner = data::load_csv(&path, &schema).map_err(err)?;
        Ok(Self { inner })
    }

    /// Load a big-endian IDX image/label file pair.
    #[staticmethod]
    fn from_idx(images: PathBuf, labels: PathBuf) -> PyResult<Self> {
        let inner = data::load_idx(&images, &labels).map_err(err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn class_labels(&self) -> Vec<String> {
        self.inner.class_labels.clone()
    }

    fn class_counts(&self) -> Vec<usize> {
        self.inner.class_counts()
    }

    fn input_width(&self) -> usize {
        self.inner.input_width()
    }

    /// `(id, input, label_name, valence, arousal)` of one sample.
    fn sample(&self, index: usize) -> PyResult<SampleTuple> {
        let s = self
            .inner
            .samples
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("sample index {index} out of range")))?;
        Ok((
            s.id.clone(),
            s.input.clone(),
            self.inner.class_labels[s.label].clone(),
            s.valence,
            s.arousal,
        ))
    }

    fn save_csv(&self, path: PathBuf) -> PyResult<()> {
        data::save_csv(&self.inner, &path).map_err(err)
    }

    /// Seed-deterministic stratified split into (train, test).
    fn split(&self, fraction: f64, seed: u64) -> PyResult<(Dataset, Dataset)> {
        let mut rng = SeededRng::new(seed);
        let (train, test) = data::split(&self.inner, fraction, &mut rng).map_err(err)?;
        Ok((Dataset { inner: train }, Dataset { inner: test }))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} samples, {} features, classes {:?})",
            self.inner.len(),
            self.inner.input_width(),
            self.inner.class_labels
        )
    }
}

/// Training hyperparameters; every field has the library default.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct TrainOptions {
    cfg: DbnTrainConfig,
}

#[pymethods]
impl TrainOptions {
    #[new]
    #[pyo3(signature = (
        initial_hidden=8, max_layers=3, layer_wd_threshold=1e-4,
        layer_energy_threshold=-25.0, head_learning_rate=1.0, head_epochs=500,
        learning_rate=0.5, cd_steps=1, epochs=100, batch_size=10,
        gen_threshold=0.05, annihilate_threshold=0.01, inherit_noise=0.01,
        max_hidden=None, wd_window=10
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        initial_hidden: usize,
        max_layers: usize,
        layer_wd_threshold: f64,
        layer_energy_threshold: f64,
        head_learning_rate: f64,
        head_epochs: usize,
        learning_rate: f64,
        cd_steps: usize,
        epochs: usize,
        batch_size: usize,
        gen_threshold: f64,
        annihilate_threshold: f64,
        inherit_noise: f64,
        max_hidden: Option<usize>,
        wd_window: usize,
    ) -> PyResult<Self> {
        let rbm = RbmTrainConfig {
            learning_rate,
            cd_steps,
            epochs,
            batch_size,
            gen_threshold,
            annihilate_threshold,
            inherit_noise,
            max_hidden: max_hidden.unwrap_or(8 * initial_hidden.max(1)),
            wd_window,
        };
        let cfg = DbnTrainConfig {
            rbm,
            initial_hidden,
            layer_wd_threshold,
            layer_energy_threshold,
            max_layers,
            head_learning_rate,
            head_epochs,
        };
        cfg.validate().map_err(err)?;
        Ok(Self { cfg })
    }
}

fn resolve_cfg(options: Option<TrainOptions>) -> DbnTrainConfig {
    options.map(|o| o.cfg).unwrap_or_else(DbnTrainConfig::defaults)
}

/// A trained adaptive DBN.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Model {
    inner: dbn::Dbn,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: dbn::Dbn::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    fn class_labels(&self) -> Vec<String> {
        self.inner.class_labels().to_vec()
    }

    fn n_layers(&self) -> usize {
        self.inner.n_layers()
    }

    /// `(n_visible, n_hidden)` per layer, input to output.
    fn layer_sizes(&self) -> Vec<(usize, usize)> {
        self.inner
            .layers()
            .iter()
            .map(|l| (l.n_visible(), l.n_hidden()))
            .collect()
    }

    fn predict_proba(&self, input: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.predict_proba(&input).map_err(err)
    }

    fn predict_label(&self, input: Vec<f64>) -> PyResult<String> {
        let idx = self.inner.predict_label(&input).map_err(err)?;
        Ok(self.inner.class_labels()[idx].clone())
    }

    fn accuracy(&self, dataset: &Dataset) -> PyResult<f64> {
        self.inner.accuracy(&dataset.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model({} layers {:?}, classes {:?})",
            self.inner.n_layers(),
            self.layer_sizes(),
            self.inner.class_labels()
        )
    }
}

/// Train an adaptive DBN on a dataset.
#[pyfunction]
#[pyo3(signature = (dataset, seed, options=None))]
fn train(dataset: &Dataset, seed: u64, options: Option<TrainOptions>) -> PyResult<Model> {
    let mut rng = SeededRng::new(seed);
    let (model, _) = dbn::train_dbn(&dataset.inner, &resolve_cfg(options), &mut rng).map_err(err)?;
    Ok(Model { inner: model })
}

/// `(class_labels, counts)` confusion matrix of a model over a dataset.
#[pyfunction]
fn confusion_matrix(model: &Model, dataset: &Dataset) -> PyResult<(Vec<String>, Vec<Vec<u64>>)> {
    let cm = metrics::confusion(&model.inner, &dataset.inner).map_err(err)?;
    let counts = (0..cm.n_classes())
        .map(|t| (0..cm.n_classes()).map(|p| cm.get(t, p)).collect())
        .collect();
    Ok((cm.class_labels().to_vec(), counts))
}

/// Per-class `(class, precision, recall, f1, ratio)` rows plus a macro row.
#[pyfunction]
fn class_report(model: &Model, dataset: &Dataset) -> PyResult<Vec<ReportRow>> {
    let cm = metrics::confusion(&model.inner, &dataset.inner).map_err(err)?;
    let report = metrics::class_report(&cm).map_err(err)?;
    let mut rows: Vec<ReportRow> = report
        .per_class
        .iter()
        .map(|m| (m.class.clone(), m.precision, m.recall, m.f1, m.ratio))
        .collect();
    rows.push((
        "macro".into(),
        report.macro_precision,
        report.macro_recall,
        report.macro_f1,
        report.macro_ratio,
    ));
    Ok(rows)
}

/// Parent-correctness partition of the focus-class samples.
#[pyclass]
struct Plan {
    inner: relearn::RelearnPlan,
}

#[pymethods]
impl Plan {
    fn set_sizes(&self) -> (usize, usize, usize) {
        (
            self.inner.set0.len(),
            self.inner.set1.len(),
            self.inner.set2.len(),
        )
    }

    fn set_ids(&self, which: &str) -> PyResult<Vec<String>> {
        match which {
            "set0" => Ok(self.inner.set0.clone()),
            "set1" => Ok(self.inner.set1.clone()),
            "set2" => Ok(self.inner.set2.clone()),
            other => Err(PyValueError::new_err(format!(
                "`{other}` is not one of set0|set1|set2"
            ))),
        }
    }

    fn summary(&self) -> String {
        self.inner.summary()
    }

    fn __repr__(&self) -> String {
        let (s0, s1, s2) = self.set_sizes();
        format!("Plan(set0={s0}, set1={s1}, set2={s2})")
    }
}

fn parse_child_set(which: &str) -> PyResult<ChildSet> {
    match which {
        "set1" => Ok(ChildSet::Set1),
        "set2" => Ok(ChildSet::Set2),
        other => Err(PyValueError::new_err(format!(
            "`{other}` is not one of set1|set2"
        ))),
    }
}

/// Partition `dataset`'s focus-class samples by `parent` correctness.
#[pyfunction]
fn build_plan(parent: &Model, dataset: &Dataset, focus_classes: Vec<String>) -> PyResult<Plan> {
    let inner = relearn::build_plan(&parent.inner, &dataset.inner, &focus_classes).map_err(err)?;
    Ok(Plan { inner })
}

/// Train a fresh child model on `set1` or `set2` of the plan.
#[pyfunction]
#[pyo3(signature = (plan, which, seed, options=None))]
fn train_child(plan: &Plan, which: &str, seed: u64, options: Option<TrainOptions>) -> PyResult<Model> {
    let mut rng = SeededRng::new(seed);
    let child = relearn::train_child(
        &plan.inner,
        parse_child_set(which)?,
        &resolve_cfg(options),
        &mut rng,
    )
    .map_err(err)?;
    Ok(Model { inner: child })
}

/// Per-sample and mean KL divergence between two models' softmax outputs.
/// Returns `(aggregate, [(sample_id, kl), ...])`.
#[pyfunction]
fn kl_divergence(p: &Model, q: &Model, dataset: &Dataset) -> PyResult<(f64, Vec<(String, f64)>)> {
    let report = relearn::kl_divergence(&p.inner, &q.inner, &dataset.inner, "P", "Q").map_err(err)?;
    let per_sample = report
        .per_sample
        .iter()
        .map(|s| (s.id.clone(), s.kl))
        .collect();
    Ok((report.aggregate, per_sample))
}

/// Threshold sweep over Set 2: `(theta, n_above, classification_ratio, flag)`
/// per threshold. `classification_ratio` is None for flagged rows.
#[pyfunction]
#[pyo3(signature = (plan, thresholds, seed, eval_set="set2", options=None))]
fn relearn_sweep(
    plan: &Plan,
    thresholds: Vec<f64>,
    seed: u64,
    eval_set: &str,
    options: Option<TrainOptions>,
) -> PyResult<Vec<SweepRowTuple>> {
    let eval_set = match eval_set {
        "set2" => SweepEvalSet::Set2,
        "set0" => SweepEvalSet::Set0,
        "heldout" => SweepEvalSet::Heldout,
        other => {
            return Err(PyValueError::new_err(format!(
                "`{other}` is not one of set2|set0|heldout"
            )))
        }
    };
    let thresholds: Vec<KlThreshold> = thresholds
        .into_iter()
        .map(|v| KlThreshold::new(v).map_err(err))
        .collect::<PyResult<_>>()?;
    let mut rng = SeededRng::new(seed);
    let result = relearn::relearn_sweep(
        &plan.inner,
        &thresholds,
        &resolve_cfg(options),
        eval_set,
        &mut rng,
    )
    .map_err(err)?;
    Ok(result
        .rows
        .iter()
        .map(|r| {
            (
                r.theta,
                r.n_above,
                r.classification_ratio,
                r.flag.as_str().to_string(),
            )
        })
        .collect())
}

#[pymodule]
fn _adaptive_dbn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Dataset>()?;
    m.add_class::<TrainOptions>()?;
    m.add_class::<Model>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(class_report, m)?)?;
    m.add_function(wrap_pyfunction!(build_plan, m)?)?;
    m.add_function(wrap_pyfunction!(train_child, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(relearn_sweep, m)?)?;
    Ok(())
}
