//! Deep Belief Network assembled by greedy layer-wise training of adaptive
//! RBMs. A new RBM layer is appended while both the total Walking Distance
//! and the mean energy of the just-trained layer stay large; a softmax head
//! trained on the propagated features produces the class distributions
//! consumed by the re-learning pipeline.
//!
//! Lower layers are frozen once the next layer starts; only the head is
//! trained discriminatively.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::{softmax, DenseMatrix, SeededRng};
use crate::rbm::{EpochRecord, Rbm, RbmTrainConfig, StructuralEvent};

const MODEL_FORMAT_VERSION: u32 = 1;

/// Linear-plus-softmax classification head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHead {
    weights: DenseMatrix, // features x classes
    bias: Vec<f64>,
}

impl SoftmaxHead {
    pub fn zeros(n_features: usize, n_classes: usize) -> Self {
        Self {
            weights: DenseMatrix::zeros(n_features, n_classes),
            bias: vec![0.0; n_classes],
        }
    }

    pub fn from_parts(weights: DenseMatrix, bias: Vec<f64>) -> Result<Self> {
        if weights.cols() != bias.len() {
            return Err(Error::DimensionMismatch {
                context: "SoftmaxHead::from_parts",
                expected: weights.cols(),
                actual: bias.len(),
            });
        }
        Ok(Self { weights, bias })
    }

    pub fn n_features(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.weights.cols()
    }

    /// Class probability vector; sums to 1 within 1e-12.
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        let mut logits = self.weights.vecmat(features)?;
        for (l, b) in logits.iter_mut().zip(&self.bias) {
            *l += b;
        }
        softmax(&logits)
    }

    /// One full-batch cross-entropy gradient step. Returns the mean
    /// cross-entropy before the step.
    fn gradient_step(
        &mut self,
        features: &[Vec<f64>],
        labels: &[usize],
        learning_rate: f64,
    ) -> Result<f64> {
        let n = features.len() as f64;
        let n_classes = self.n_classes();
        let n_features = self.n_features();
        let mut grad_w = vec![0.0; n_features * n_classes];
        let mut grad_b = vec![0.0; n_classes];
        let mut loss = 0.0;
        for (f, &y) in features.iter().zip(labels) {
            let p = self.predict(f)?;
            loss -= p[y].max(1e-300).ln();
            for c in 0..n_classes {
                let err = p[c] - if c == y { 1.0 } else { 0.0 };
                grad_b[c] += err;
                for (i, &fi) in f.iter().enumerate() {
                    grad_w[i * n_classes + c] += fi * err;
                }
            }
        }
        let scale = learning_rate / n;
        for i in 0..n_features {
            for c in 0..n_classes {
                self.weights.add_to(i, c, -scale * grad_w[i * n_classes + c]);
            }
        }
        for (b, g) in self.bias.iter_mut().zip(&grad_b) {
            *b -= scale * g;
        }
        Ok(loss / n)
    }
}

/// Free constants of DBN training.
#[derive(Debug, Clone)]
pub struct DbnTrainConfig {
    /// Applied to every layer.
    pub rbm: RbmTrainConfig,
    /// Hidden size each new layer starts from.
    pub initial_hidden: usize,
    /// A new layer is generated while total WD exceeds this...
    pub layer_wd_threshold: f64,
    /// ...and mean energy exceeds this.
    pub layer_energy_threshold: f64,
    pub max_layers: usize,
    pub head_learning_rate: f64,
    pub head_epochs: usize,
}

impl DbnTrainConfig {
    pub fn defaults() -> Self {
        Self {
            rbm: RbmTrainConfig::defaults_for(8),
            initial_hidden: 8,
            layer_wd_threshold: 1e-4,
            layer_energy_threshold: -25.0,
            max_layers: 3,
            head_learning_rate: 1.0,
            head_epochs: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rbm.validate(self.initial_hidden)?;
        let check = |ok: bool, what: &str, value: f64| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidValue {
                    what: what.into(),
                    value,
                })
            }
        };
        check(
            self.initial_hidden >= 1,
            "initial_hidden",
            self.initial_hidden as f64,
        )?;
        check(
            self.layer_wd_threshold > 0.0,
            "layer_wd_threshold",
            self.layer_wd_threshold,
        )?;
        check(
            !self.layer_energy_threshold.is_nan(),
            "layer_energy_threshold",
            self.layer_energy_threshold,
        )?;
        check(self.max_layers >= 1, "max_layers", self.max_layers as f64)?;
        check(
            self.head_learning_rate > 0.0 && self.head_learning_rate.is_finite(),
            "head_learning_rate",
            self.head_learning_rate,
        )?;
        check(self.head_epochs >= 1, "head_epochs", self.head_epochs as f64)?;
        Ok(())
    }
}

/// Layer-generation decision for one trained layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerDecision {
    Generate,
    Stop,
    /// Criterion held but the layer cap was reached.
    Capped,
}

/// The layer-generation criterion: grow while both signals stay large and
/// the stack is below its cap.
pub fn maybe_generate_layer(
    total_wd: f64,
    mean_energy: f64,
    n_layers: usize,
    cfg: &DbnTrainConfig,
) -> LayerDecision {
    let wants_growth =
        total_wd > cfg.layer_wd_threshold && mean_energy > cfg.layer_energy_threshold;
    if !wants_growth {
        LayerDecision::Stop
    } else if n_layers >= cfg.max_layers {
        LayerDecision::Capped
    } else {
        LayerDecision::Generate
    }
}

/// Per-layer summary kept in the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerLog {
    pub layer: usize,
    pub epochs: Vec<EpochRecord>,
    pub events: Vec<(usize, StructuralEvent)>,
    pub total_wd: f64,
    pub mean_energy: f64,
    pub decision: LayerDecision,
}

/// Full record of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub layers: Vec<LayerLog>,
    /// Mean cross-entropy per head epoch.
    pub head_cross_entropy: Vec<f64>,
}

/// Stack of frozen RBMs plus a softmax head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dbn {
    format_version: u32,
    class_labels: Vec<String>,
    layers: Vec<Rbm>,
    head: SoftmaxHead,
}

impl Dbn {
    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn layers(&self) -> &[Rbm] {
        &self.layers
    }

    pub fn head(&self) -> &SoftmaxHead {
        &self.head
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.n_visible())
    }

    /// Test/fixture constructor. Validates dimension chaining.
    pub fn from_parts(layers: Vec<Rbm>, head: SoftmaxHead, class_labels: Vec<String>) -> Result<Self> {
        let dbn = Self {
            format_version: MODEL_FORMAT_VERSION,
            class_labels,
            layers,
            head,
        };
        dbn.validate()?;
        Ok(dbn)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::EmptyInput("DBN layer stack"));
        }
        if self.class_labels.len() < 2 {
            return Err(Error::EmptyInput("class labels"));
        }
        for pair in self.layers.windows(2) {
            if pair[0].n_hidden() != pair[1].n_visible() {
                return Err(Error::DimensionMismatch {
                    context: "DBN layer chaining",
                    expected: pair[0].n_hidden(),
                    actual: pair[1].n_visible(),
                });
            }
        }
        let top = self.layers.last().unwrap();
        if self.head.n_features() != top.n_hidden() {
            return Err(Error::DimensionMismatch {
                context: "DBN head input width",
                expected: top.n_hidden(),
                actual: self.head.n_features(),
            });
        }
        if self.head.n_classes() != self.class_labels.len() {
            return Err(Error::DimensionMismatch {
                context: "DBN head output width",
                expected: self.class_labels.len(),
                actual: self.head.n_classes(),
            });
        }
        for layer in &self.layers {
            if !layer.check_structure() || !layer.weights().is_finite() {
                return Err(Error::ModelFormat("inconsistent layer record".into()));
            }
        }
        Ok(())
    }

    /// Deterministic feed-forward through every layer's hidden activations.
    pub fn propagate(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.layers[0].hidden_activations(v)?;
        for layer in &self.layers[1..] {
            x = layer.hidden_activations(&x)?;
        }
        Ok(x)
    }

    /// Class probabilities `softmax(head · propagate(v))`; sums to 1 ± 1e-12.
    pub fn predict_proba(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.head.predict(&self.propagate(v)?)
    }

    /// Argmax class index; ties break toward the lowest index.
    pub fn predict_label(&self, v: &[f64]) -> Result<usize> {
        let p = self.predict_proba(v)?;
        let mut best = 0;
        for (i, &pi) in p.iter().enumerate() {
            if pi > p[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Fraction of dataset samples whose predicted label matches the truth.
    pub fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        if ds.is_empty() {
            return Err(Error::EmptyInput("evaluation dataset"));
        }
        let mut correct = 0usize;
        for s in &ds.samples {
            if self.predict_label(&s.input)? == s.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / ds.len() as f64)
    }

    /// Serialize to a versioned JSON model file. All parameters are written
    /// with shortest round-trip float encoding, so save → load → predict is
    /// bit-exact.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dbn: Dbn = serde_json::from_str(&text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if dbn.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {} (expected {})",
                dbn.format_version, MODEL_FORMAT_VERSION
            )));
        }
        dbn.validate()?;
        Ok(dbn)
    }
}

/// Greedy layer-wise adaptive DBN training followed by head training.
pub fn train_dbn(
    data: &LabeledDataset,
    cfg: &DbnTrainConfig,
    rng: &mut SeededRng,
) -> Result<(Dbn, TrainLog)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("training dataset"));
    }
    data.validate()?;
    if data.class_labels.len() < 2 {
        return Err(Error::EmptyInput("class labels"));
    }

    let mut layers: Vec<Rbm> = Vec::new();
    let mut layer_logs: Vec<LayerLog> = Vec::new();
    let mut layer_inputs = data.inputs();

    loop {
        let n_visible = layer_inputs[0].len();
        let mut rbm = Rbm::new(n_visible, cfg.initial_hidden, rng)?;
        let report = rbm.train(&layer_inputs, &cfg.rbm, rng)?;
        let total_wd = report.total_wd();
        let mean_energy = report.mean_energy;
        let decision = maybe_generate_layer(total_wd, mean_energy, layers.len() + 1, cfg);

        let next_inputs = if decision == LayerDecision::Generate {
            let mut mapped = Vec::with_capacity(layer_inputs.len());
            for v in &layer_inputs {
                mapped.push(rbm.hidden_activations(v)?);
            }
            Some(mapped)
        } else {
            None
        };

        layer_logs.push(LayerLog {
            layer: layers.len(),
            epochs: report.epochs,
            events: report.events,
            total_wd,
            mean_energy,
            decision,
        });
        layers.push(rbm);

        match next_inputs {
            Some(mapped) => layer_inputs = mapped,
            None => break,
        }
    }

    // propagate the training set through the frozen stack
    let mut features = Vec::with_capacity(data.len());
    {
        let stack = &layers;
        for v in data.inputs() {
            let mut x = stack[0].hidden_activations(&v)?;
            for layer in &stack[1..] {
                x = layer.hidden_activations(&x)?;
            }
            features.push(x);
        }
    }
    let labels: Vec<usize> = data.samples.iter().map(|s| s.label).collect();

    let mut head = SoftmaxHead::zeros(layers.last().unwrap().n_hidden(), data.class_labels.len());
    let mut head_cross_entropy = Vec::with_capacity(cfg.head_epochs);
    for _ in 0..cfg.head_epochs {
        head_cross_entropy.push(head.gradient_step(&features, &labels, cfg.head_learning_rate)?);
    }

    let dbn = Dbn::from_parts(layers, head, data.class_labels.clone())?;
    Ok((
        dbn,
        TrainLog {
            layers: layer_logs,
            head_cross_entropy,
        },
    ))
}
