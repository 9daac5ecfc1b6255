//! Restricted Boltzmann Machine with contrastive-divergence training and
//! structural adaptivity: hidden neurons are generated when the Walking
//! Distance of their parameter updates stays large, and annihilated when
//! their output activation degenerates (dead or stuck-on).
//!
//! Walking Distance (WD) is tracked per hidden neuron as the absolute
//! difference between the variances of two adjacent windows of that neuron's
//! incoming-weight-update L2 magnitudes.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{mean, sample_bernoulli, sigmoid, variance, DenseMatrix, SeededRng};

/// One RBM: `n_visible` inputs, `n_hidden` feature detectors, full bipartite
/// weights and per-unit biases. The hidden layer is mutable in size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rbm {
    n_visible: usize,
    n_hidden: usize,
    weights: DenseMatrix, // n_visible x n_hidden
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
}

/// Structural change applied to an RBM during adaptive training.
#[derive(Debug, Clone, PartialEq)]
pub enum StructuralEvent {
    NeuronGenerated { parent: usize, new_index: usize },
    GenerationCapped { parent: usize },
    NeuronAnnihilated { index: usize, mean_activation: f64 },
    AnnihilationFloorHit { index: usize, mean_activation: f64 },
}

impl StructuralEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            StructuralEvent::NeuronGenerated { .. } => "neuron_generated",
            StructuralEvent::GenerationCapped { .. } => "generation_capped",
            StructuralEvent::NeuronAnnihilated { .. } => "neuron_annihilated",
            StructuralEvent::AnnihilationFloorHit { .. } => "annihilation_floor",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            StructuralEvent::NeuronGenerated { parent, new_index } => {
                format!("parent={parent} new={new_index}")
            }
            StructuralEvent::GenerationCapped { parent } => format!("parent={parent}"),
            StructuralEvent::NeuronAnnihilated {
                index,
                mean_activation,
            } => format!("index={index} mean_activation={mean_activation}"),
            StructuralEvent::AnnihilationFloorHit {
                index,
                mean_activation,
            } => format!("index={index} mean_activation={mean_activation}"),
        }
    }
}

/// Per-hidden-neuron Walking Distance tracker.
///
/// Keeps the last `2 * window` update magnitudes per neuron; WD is the
/// absolute difference between the population variances (divisor n) of the
/// older and newer halves, and 0 until both windows are full.
#[derive(Debug, Clone)]
pub struct WdTracker {
    window: usize,
    histories: Vec<VecDeque<f64>>,
}

impl WdTracker {
    pub fn new(n_neurons: usize, window: usize) -> Self {
        Self {
            window,
            histories: (0..n_neurons)
                .map(|_| VecDeque::with_capacity(2 * window))
                .collect(),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_neurons(&self) -> usize {
        self.histories.len()
    }

    pub fn is_full(&self, neuron: usize) -> bool {
        self.histories[neuron].len() == 2 * self.window
    }

    /// Push one update magnitude per neuron and return the WD values.
    pub fn push(&mut self, magnitudes: &[f64]) -> Result<Vec<f64>> {
        if magnitudes.len() != self.histories.len() {
            return Err(Error::DimensionMismatch {
                context: "WdTracker::push",
                expected: self.histories.len(),
                actual: magnitudes.len(),
            });
        }
        for (h, &m) in self.histories.iter_mut().zip(magnitudes) {
            if h.len() == 2 * self.window {
                h.pop_front();
            }
            h.push_back(m);
        }
        Ok(self.wd_values())
    }

    /// WD of one neuron: |var(current window) - var(past window)|, 0 until
    /// both windows are full.
    pub fn wd(&self, neuron: usize) -> f64 {
        let h = &self.histories[neuron];
        if h.len() < 2 * self.window {
            return 0.0;
        }
        let vals: Vec<f64> = h.iter().copied().collect();
        let past = variance(&vals[..self.window]);
        let current = variance(&vals[self.window..]);
        (current - past).abs()
    }

    pub fn wd_values(&self) -> Vec<f64> {
        (0..self.histories.len()).map(|j| self.wd(j)).collect()
    }

    fn add_neuron(&mut self) {
        self.histories.push(VecDeque::with_capacity(2 * self.window));
    }

    fn remove_neuron(&mut self, neuron: usize) {
        self.histories.remove(neuron);
    }
}

/// Free constants of adaptive RBM training.
#[derive(Debug, Clone)]
pub struct RbmTrainConfig {
    pub learning_rate: f64,
    pub cd_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// WD threshold above which a hidden neuron spawns a child neuron.
    pub gen_threshold: f64,
    /// Mean-activation band: neurons below it or above `1 - it` are removed.
    pub annihilate_threshold: f64,
    /// Scale of the uniform noise added to inherited weights and bias.
    pub inherit_noise: f64,
    pub max_hidden: usize,
    pub wd_window: usize,
}

impl RbmTrainConfig {
    /// Defaults with `max_hidden` set to eight times the initial layer size.
    pub fn defaults_for(initial_hidden: usize) -> Self {
        Self {
            learning_rate: 0.5,
            cd_steps: 1,
            epochs: 100,
            batch_size: 10,
            gen_threshold: 0.05,
            annihilate_threshold: 0.01,
            inherit_noise: 0.01,
            max_hidden: 8 * initial_hidden.max(1),
            wd_window: 10,
        }
    }

    pub fn validate(&self, current_hidden: usize) -> Result<()> {
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
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning_rate",
            self.learning_rate,
        )?;
        check(self.cd_steps >= 1, "cd_steps", self.cd_steps as f64)?;
        check(self.epochs >= 1, "epochs", self.epochs as f64)?;
        check(self.batch_size >= 1, "batch_size", self.batch_size as f64)?;
        check(self.gen_threshold > 0.0, "gen_threshold", self.gen_threshold)?;
        check(
            self.annihilate_threshold > 0.0 && self.annihilate_threshold <= 0.5,
            "annihilate_threshold",
            self.annihilate_threshold,
        )?;
        check(
            self.inherit_noise >= 0.0 && self.inherit_noise.is_finite(),
            "inherit_noise",
            self.inherit_noise,
        )?;
        check(
            self.max_hidden >= current_hidden,
            "max_hidden",
            self.max_hidden as f64,
        )?;
        check(self.wd_window >= 1, "wd_window", self.wd_window as f64)?;
        Ok(())
    }
}

/// Per-epoch training record of one RBM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub reconstruction_error: f64,
    pub wd_total: f64,
    pub wd_max: f64,
    pub n_hidden: usize,
}

/// Outcome of adaptively training one RBM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Structural events, tagged with the epoch they occurred in.
    pub events: Vec<(usize, StructuralEvent)>,
    /// Final per-neuron WD values.
    pub final_wd: Vec<f64>,
    /// Mean energy over (input, sampled hidden) pairs at the end of training.
    pub mean_energy: f64,
}

impl LayerTrainReport {
    pub fn total_wd(&self) -> f64 {
        self.final_wd.iter().sum()
    }
}

impl Rbm {
    /// Fresh RBM with small Gaussian weights and zero biases.
    pub fn new(n_visible: usize, n_hidden: usize, rng: &mut SeededRng) -> Result<Self> {
        if n_visible == 0 {
            return Err(Error::EmptyInput("visible layer"));
        }
        if n_hidden == 0 {
            return Err(Error::EmptyInput("hidden layer"));
        }
        let weights = DenseMatrix::from_fn(n_visible, n_hidden, |_, _| 0.01 * rng.next_gaussian());
        Ok(Self {
            n_visible,
            n_hidden,
            weights,
            visible_bias: vec![0.0; n_visible],
            hidden_bias: vec![0.0; n_hidden],
        })
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    /// Test/fixture constructor with explicit parameters.
    pub fn from_parts(
        weights: DenseMatrix,
        visible_bias: Vec<f64>,
        hidden_bias: Vec<f64>,
    ) -> Result<Self> {
        if weights.rows() != visible_bias.len() {
            return Err(Error::DimensionMismatch {
                context: "Rbm::from_parts visible bias",
                expected: weights.rows(),
                actual: visible_bias.len(),
            });
        }
        if weights.cols() != hidden_bias.len() {
            return Err(Error::DimensionMismatch {
                context: "Rbm::from_parts hidden bias",
                expected: weights.cols(),
                actual: hidden_bias.len(),
            });
        }
        if hidden_bias.is_empty() {
            return Err(Error::EmptyInput("hidden layer"));
        }
        Ok(Self {
            n_visible: weights.rows(),
            n_hidden: weights.cols(),
            weights,
            visible_bias,
            hidden_bias,
        })
    }

    /// Consistency of dimensions after structural edits.
    pub fn check_structure(&self) -> bool {
        self.n_hidden >= 1
            && self.weights.rows() == self.n_visible
            && self.weights.cols() == self.n_hidden
            && self.visible_bias.len() == self.n_visible
            && self.hidden_bias.len() == self.n_hidden
    }

    /// Bilinear RBM energy `E(v,h) = -Σ a_i v_i - Σ b_j h_j - Σ v_i W_ij h_j`.
    pub fn energy(&self, v: &[f64], h: &[f64]) -> Result<f64> {
        if v.len() != self.n_visible {
            return Err(Error::DimensionMismatch {
                context: "Rbm::energy visible",
                expected: self.n_visible,
                actual: v.len(),
            });
        }
        if h.len() != self.n_hidden {
            return Err(Error::DimensionMismatch {
                context: "Rbm::energy hidden",
                expected: self.n_hidden,
                actual: h.len(),
            });
        }
        let va: f64 = v.iter().zip(&self.visible_bias).map(|(x, a)| x * a).sum();
        let hb: f64 = h.iter().zip(&self.hidden_bias).map(|(x, b)| x * b).sum();
        let vwh: f64 = self
            .weights
            .vecmat(v)?
            .iter()
            .zip(h)
            .map(|(p, hj)| p * hj)
            .sum();
        Ok(-va - hb - vwh)
    }

    /// Hidden activation probabilities `sigmoid(b_j + Σ v_i W_ij)`.
    pub fn hidden_activations(&self, v: &[f64]) -> Result<Vec<f64>> {
        let pre = self.weights.vecmat(v).map_err(|_| Error::DimensionMismatch {
            context: "Rbm::hidden_activations",
            expected: self.n_visible,
            actual: v.len(),
        })?;
        Ok(pre
            .iter()
            .zip(&self.hidden_bias)
            .map(|(x, b)| sigmoid(x + b))
            .collect())
    }

    /// Mean-field visible reconstruction `sigmoid(a_i + Σ W_ij h_j)`.
    pub fn visible_means(&self, h: &[f64]) -> Result<Vec<f64>> {
        let pre = self.weights.matvec(h).map_err(|_| Error::DimensionMismatch {
            context: "Rbm::visible_means",
            expected: self.n_hidden,
            actual: h.len(),
        })?;
        Ok(pre
            .iter()
            .zip(&self.visible_bias)
            .map(|(x, a)| sigmoid(x + a))
            .collect())
    }

    fn validate_batch(&self, batch: &[&Vec<f64>]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("training batch"));
        }
        for row in batch {
            if row.len() != self.n_visible {
                return Err(Error::DimensionMismatch {
                    context: "Rbm batch row",
                    expected: self.n_visible,
                    actual: row.len(),
                });
            }
            for &x in row.iter() {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidValue {
                        what: "batch component outside [0,1]".into(),
                        value: x,
                    });
                }
            }
        }
        Ok(())
    }

    /// One CD-k parameter update over a batch. Returns the L2 magnitude of
    /// the applied update to each hidden neuron's incoming weight column —
    /// the signal consumed by [`WdTracker`].
    ///
    /// Positive phase uses data-clamped hidden probabilities; the chain of
    /// the negative phase uses sampled hidden states with mean-field visible
    /// reconstructions, and its statistics use the final probabilities.
    pub fn cd_update(
        &mut self,
        batch: &[Vec<f64>],
        cfg: &RbmTrainConfig,
        rng: &mut SeededRng,
    ) -> Result<Vec<f64>> {
        let refs: Vec<&Vec<f64>> = batch.iter().collect();
        self.cd_update_refs(&refs, cfg, rng)
    }

    fn cd_update_refs(
        &mut self,
        batch: &[&Vec<f64>],
        cfg: &RbmTrainConfig,
        rng: &mut SeededRng,
    ) -> Result<Vec<f64>> {
        self.validate_batch(batch)?;
        let nv = self.n_visible;
        let nh = self.n_hidden;
        let n = batch.len() as f64;

        let mut grad_w = vec![0.0; nv * nh];
        let mut grad_a = vec![0.0; nv];
        let mut grad_b = vec![0.0; nh];

        for &v0 in batch {
            let h0 = self.hidden_activations(v0)?;
            let mut h_state = sample_bernoulli(&h0, rng)?;
            let mut v_mean = self.visible_means(&h_state)?;
            let mut h_prob = self.hidden_activations(&v_mean)?;
            for _ in 1..cfg.cd_steps {
                h_state = sample_bernoulli(&h_prob, rng)?;
                v_mean = self.visible_means(&h_state)?;
                h_prob = self.hidden_activations(&v_mean)?;
            }
            for i in 0..nv {
                for j in 0..nh {
                    grad_w[i * nh + j] += v0[i] * h0[j] - v_mean[i] * h_prob[j];
                }
            }
            for (g, (x, r)) in grad_a.iter_mut().zip(v0.iter().zip(&v_mean)) {
                *g += x - r;
            }
            for (g, (p0, pk)) in grad_b.iter_mut().zip(h0.iter().zip(&h_prob)) {
                *g += p0 - pk;
            }
        }

        let scale = cfg.learning_rate / n;
        let mut magnitudes = vec![0.0; nh];
        for i in 0..nv {
            for j in 0..nh {
                let delta = scale * grad_w[i * nh + j];
                self.weights.add_to(i, j, delta);
                magnitudes[j] += delta * delta;
            }
        }
        for m in &mut magnitudes {
            *m = m.sqrt();
        }
        for (b, g) in self.visible_bias.iter_mut().zip(&grad_a) {
            *b += scale * g;
        }
        for (b, g) in self.hidden_bias.iter_mut().zip(&grad_b) {
            *b += scale * g;
        }
        Ok(magnitudes)
    }

    /// Mean squared error between a batch and its one-step mean-field
    /// reconstruction, averaged over samples and components.
    pub fn reconstruction_error(&self, batch: &[Vec<f64>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("reconstruction batch"));
        }
        let mut total = 0.0;
        for v in batch {
            let h = self.hidden_activations(v)?;
            let recon = self.visible_means(&h)?;
            total += v
                .iter()
                .zip(&recon)
                .map(|(x, r)| (x - r) * (x - r))
                .sum::<f64>();
        }
        Ok(total / (batch.len() * self.n_visible) as f64)
    }

    /// Spawn a child neuron for every neuron whose WD exceeds the threshold,
    /// lowest index first, capped at `max_hidden`. The child copies the
    /// parent's incoming weights and bias plus uniform noise in
    /// `[-inherit_noise, inherit_noise]` per element. Neurons with unfilled
    /// WD windows never trigger.
    pub fn maybe_generate_neurons(
        &mut self,
        tracker: &mut WdTracker,
        cfg: &RbmTrainConfig,
        rng: &mut SeededRng,
    ) -> Vec<StructuralEvent> {
        let parents: Vec<usize> = (0..self.n_hidden)
            .filter(|&j| tracker.is_full(j) && tracker.wd(j) > cfg.gen_threshold)
            .collect();
        let mut events = Vec::new();
        for parent in parents {
            if self.n_hidden >= cfg.max_hidden {
                events.push(StructuralEvent::GenerationCapped { parent });
                continue;
            }
            let mut col = self.weights.column(parent);
            for w in &mut col {
                *w += rng.next_symmetric(cfg.inherit_noise);
            }
            let bias = self.hidden_bias[parent] + rng.next_symmetric(cfg.inherit_noise);
            self.weights
                .push_column(&col)
                .expect("column length matches by construction");
            self.hidden_bias.push(bias);
            self.n_hidden += 1;
            tracker.add_neuron();
            events.push(StructuralEvent::NeuronGenerated {
                parent,
                new_index: self.n_hidden - 1,
            });
        }
        events
    }

    /// Remove neurons whose mean activation over the batch is below
    /// `annihilate_threshold` or above `1 - annihilate_threshold`, keeping at
    /// least one neuron. Event indices refer to positions before removal.
    ///
    /// The adaptive training loop applies this check only in epochs after the
    /// first generation event.
    pub fn maybe_annihilate_neurons(
        &mut self,
        batch: &[Vec<f64>],
        cfg: &RbmTrainConfig,
        tracker: &mut WdTracker,
    ) -> Result<Vec<StructuralEvent>> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("annihilation batch"));
        }
        let mut sums = vec![0.0; self.n_hidden];
        for v in batch {
            for (s, p) in sums.iter_mut().zip(self.hidden_activations(v)?) {
                *s += p;
            }
        }
        let mean_act: Vec<f64> = sums.iter().map(|s| s / batch.len() as f64).collect();
        let mut candidates: Vec<usize> = (0..self.n_hidden)
            .filter(|&j| {
                mean_act[j] < cfg.annihilate_threshold
                    || mean_act[j] > 1.0 - cfg.annihilate_threshold
            })
            .collect();

        let mut events = Vec::new();
        if candidates.len() == self.n_hidden && !candidates.is_empty() {
            let retained = candidates.remove(0);
            events.push(StructuralEvent::AnnihilationFloorHit {
                index: retained,
                mean_activation: mean_act[retained],
            });
        }
        for &j in &candidates {
            events.push(StructuralEvent::NeuronAnnihilated {
                index: j,
                mean_activation: mean_act[j],
            });
        }
        for &j in candidates.iter().rev() {
            self.weights.remove_column(j)?;
            self.hidden_bias.remove(j);
            tracker.remove_neuron(j);
            self.n_hidden -= 1;
        }
        Ok(events)
    }

    /// Adaptive training loop: mini-batch CD updates feed the WD tracker;
    /// the generation check runs at every epoch end, the annihilation check
    /// after it, but only in epochs after the first generation event.
    pub fn train(
        &mut self,
        inputs: &[Vec<f64>],
        cfg: &RbmTrainConfig,
        rng: &mut SeededRng,
    ) -> Result<LayerTrainReport> {
        cfg.validate(self.n_hidden)?;
        let refs: Vec<&Vec<f64>> = inputs.iter().collect();
        self.validate_batch(&refs)?;

        let mut tracker = WdTracker::new(self.n_hidden, cfg.wd_window);
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let mut events: Vec<(usize, StructuralEvent)> = Vec::new();
        let mut epoch_records = Vec::new();
        let mut first_gen_epoch: Option<usize> = None;

        for epoch in 0..cfg.epochs {
            rng.shuffle(&mut order);
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<&Vec<f64>> = chunk.iter().map(|&i| &inputs[i]).collect();
                let magnitudes = self.cd_update_refs(&batch, cfg, rng)?;
                tracker.push(&magnitudes)?;
            }

            let wd = tracker.wd_values();
            let wd_total: f64 = wd.iter().sum();
            let wd_max = wd.iter().cloned().fold(0.0, f64::max);

            let gen_events = self.maybe_generate_neurons(&mut tracker, cfg, rng);
            if first_gen_epoch.is_none()
                && gen_events
                    .iter()
                    .any(|e| matches!(e, StructuralEvent::NeuronGenerated { .. }))
            {
                first_gen_epoch = Some(epoch);
            }
            events.extend(gen_events.into_iter().map(|e| (epoch, e)));

            if first_gen_epoch.is_some_and(|e0| epoch > e0) {
                let ann_events = self.maybe_annihilate_neurons(inputs, cfg, &mut tracker)?;
                events.extend(ann_events.into_iter().map(|e| (epoch, e)));
            }

            epoch_records.push(EpochRecord {
                epoch,
                reconstruction_error: self.reconstruction_error(inputs)?,
                wd_total,
                wd_max,
                n_hidden: self.n_hidden,
            });
            debug_assert!(self.check_structure());
        }

        let mut energies = Vec::with_capacity(inputs.len());
        for v in inputs {
            let h = sample_bernoulli(&self.hidden_activations(v)?, rng)?;
            energies.push(self.energy(v, &h)?);
        }

        Ok(LayerTrainReport {
            epochs: epoch_records,
            events,
            final_wd: tracker.wd_values(),
            mean_energy: mean(&energies),
        })
    }
}
