//! Run configuration and the `train` / `eval` / `relearn` / `fixture`
//! commands. A run is described by one INI-style config file (sections of
//! `key = value` lines); every artifact lands in the configured output
//! directory and is byte-identical across reruns with the same seed.
//!
//! RNG streams are derived from the run seed: stream 0 generates fixture
//! data, stream 1 drives parent training, stream 2 drives re-learning. This
//! keeps the dataset identical across commands that share a config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{load_csv, load_idx, make_overlap_fixture, save_csv, CsvSchema, LabeledDataset};
use crate::dbn::{train_dbn, Dbn, DbnTrainConfig, LayerDecision, TrainLog};
use crate::error::{Error, Result};
use crate::metrics::{class_report, confusion, kl_histogram, ClassReport, ConfusionMatrix};
use crate::numerics::SeededRng;
use crate::relearn::{
    build_plan, export_scatter, kl_divergence, relearn_sweep, train_child, ChildSet, KlThreshold,
    SweepEvalSet,
};

const DATA_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
const RELEARN_STREAM: u64 = 2;

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Fixture { n_per_class: usize, overlap: f64 },
    Csv { path: PathBuf, expected_classes: Option<Vec<String>> },
    Idx { images: PathBuf, labels: PathBuf },
}

/// Re-learning parameters.
#[derive(Debug, Clone)]
pub struct RelearnSpec {
    pub focus_classes: Vec<String>,
    pub thresholds: Vec<KlThreshold>,
    pub eval_set: SweepEvalSet,
    pub histogram_bins: usize,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataSpec,
    pub dbn: DbnTrainConfig,
    pub relearn: Option<RelearnSpec>,
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Raw `section.key -> value` map with strict unknown-key rejection.
struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    fn parse(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let full_key = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            if entries
                .insert(full_key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(config_err(&full_key, "duplicate key"));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| config_err(key, format!("cannot parse `{v}`"))),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        self.take_parsed(key)?
            .ok_or_else(|| config_err(key, "missing required key"))
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.entries.keys().next() {
            return Err(config_err(key, "unknown key"));
        }
        Ok(())
    }
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut raw = RawConfig::parse(path)?;

        let seed: u64 = raw.require("run.seed")?;
        let output_dir = PathBuf::from(raw.require::<String>("run.output_dir")?);

        let source: String = raw.require("data.source")?;
        let data = match source.as_str() {
            "fixture" => DataSpec::Fixture {
                n_per_class: raw.require("data.n_per_class")?,
                overlap: raw.require("data.overlap")?,
            },
            "csv" => DataSpec::Csv {
                path: PathBuf::from(raw.require::<String>("data.path")?),
                expected_classes: raw.take("data.expected_classes").map(|v| parse_list(&v)),
            },
            "idx" => DataSpec::Idx {
                images: PathBuf::from(raw.require::<String>("data.images")?),
                labels: PathBuf::from(raw.require::<String>("data.labels")?),
            },
            other => {
                return Err(config_err(
                    "data.source",
                    format!("`{other}` is not one of fixture|csv|idx"),
                ))
            }
        };
        if let DataSpec::Fixture { n_per_class, overlap } = &data {
            if *n_per_class == 0 {
                return Err(config_err("data.n_per_class", "must be at least 1"));
            }
            if !(0.0..=1.0).contains(overlap) {
                return Err(config_err("data.overlap", "must lie in [0,1]"));
            }
        }

        let mut dbn = DbnTrainConfig::defaults();
        if let Some(v) = raw.take_parsed("dbn.initial_hidden")? {
            dbn.initial_hidden = v;
            dbn.rbm.max_hidden = 8 * dbn.initial_hidden;
        }
        if let Some(v) = raw.take_parsed("dbn.layer_wd_threshold")? {
            dbn.layer_wd_threshold = v;
        }
        if let Some(v) = raw.take_parsed("dbn.layer_energy_threshold")? {
            dbn.layer_energy_threshold = v;
        }
        if let Some(v) = raw.take_parsed("dbn.max_layers")? {
            dbn.max_layers = v;
        }
        if let Some(v) = raw.take_parsed("dbn.head_learning_rate")? {
            dbn.head_learning_rate = v;
        }
        if let Some(v) = raw.take_parsed("dbn.head_epochs")? {
            dbn.head_epochs = v;
        }
        if let Some(v) = raw.take_parsed("rbm.learning_rate")? {
            dbn.rbm.learning_rate = v;
        }
        if let Some(v) = raw.take_parsed("rbm.cd_steps")? {
            dbn.rbm.cd_steps = v;
        }
        if let Some(v) = raw.take_parsed("rbm.epochs")? {
            dbn.rbm.epochs = v;
        }
        if let Some(v) = raw.take_parsed("rbm.batch_size")? {
            dbn.rbm.batch_size = v;
        }
        if let Some(v) = raw.take_parsed("rbm.gen_threshold")? {
            dbn.rbm.gen_threshold = v;
        }
        if let Some(v) = raw.take_parsed("rbm.annihilate_threshold")? {
            dbn.rbm.annihilate_threshold = v;
        }
        if let Some(v) = raw.take_parsed("rbm.inherit_noise")? {
            dbn.rbm.inherit_noise = v;
        }
        if let Some(v) = raw.take_parsed("rbm.max_hidden")? {
            dbn.rbm.max_hidden = v;
        }
        if let Some(v) = raw.take_parsed("rbm.wd_window")? {
            dbn.rbm.wd_window = v;
        }
        dbn.validate()?;

        let focus = raw.take("relearn.focus_classes");
        let thresholds = raw.take("relearn.thresholds");
        let eval_set = raw.take("relearn.eval_set");
        let bins = raw.take_parsed::<usize>("relearn.histogram_bins")?;
        let relearn = match (focus, thresholds) {
            (None, None) => {
                if eval_set.is_some() || bins.is_some() {
                    return Err(config_err(
                        "relearn.eval_set",
                        "relearn options given without focus_classes/thresholds",
                    ));
                }
                None
            }
            (Some(f), Some(t)) => {
                let focus_classes = parse_list(&f);
                if focus_classes.is_empty() {
                    return Err(config_err("relearn.focus_classes", "list is empty"));
                }
                let mut parsed = Vec::new();
                for item in parse_list(&t) {
                    let v: f64 = item
                        .parse()
                        .map_err(|_| config_err("relearn.thresholds", format!("cannot parse `{item}`")))?;
                    let threshold = KlThreshold::new(v)
                        .map_err(|_| config_err("relearn.thresholds", format!("invalid threshold {v}")))?;
                    if parsed.iter().any(|p: &KlThreshold| p.value() == v) {
                        return Err(config_err("relearn.thresholds", format!("duplicate threshold {v}")));
                    }
                    parsed.push(threshold);
                }
                if parsed.is_empty() {
                    return Err(config_err("relearn.thresholds", "list is empty"));
                }
                let eval_set = match eval_set.as_deref().unwrap_or("set2") {
                    "set2" => SweepEvalSet::Set2,
                    "set0" => SweepEvalSet::Set0,
                    "heldout" => SweepEvalSet::Heldout,
                    other => {
                        return Err(config_err(
                            "relearn.eval_set",
                            format!("`{other}` is not one of set2|set0|heldout"),
                        ))
                    }
                };
                Some(RelearnSpec {
                    focus_classes,
                    thresholds: parsed,
                    eval_set,
                    histogram_bins: bins.unwrap_or(20),
                })
            }
            _ => {
                return Err(config_err(
                    "relearn.focus_classes",
                    "focus_classes and thresholds must be given together",
                ))
            }
        };

        raw.finish()?;
        Ok(Self {
            seed,
            output_dir,
            data,
            dbn,
            relearn,
        })
    }

    /// Load (or synthesize) the dataset this run operates on.
    pub fn load_dataset(&self) -> Result<LabeledDataset> {
        match &self.data {
            DataSpec::Fixture { n_per_class, overlap } => {
                let mut rng = SeededRng::derived(self.seed, DATA_STREAM);
                make_overlap_fixture(*n_per_class, *overlap, &mut rng)
            }
            DataSpec::Csv { path, expected_classes } => {
                let schema = CsvSchema {
                    expected_classes: expected_classes.clone(),
                };
                load_csv(path, &schema)
            }
            DataSpec::Idx { images, labels } => load_idx(images, labels),
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn ensure_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn decision_str(d: LayerDecision) -> &'static str {
    match d {
        LayerDecision::Generate => "generate",
        LayerDecision::Stop => "stop",
        LayerDecision::Capped => "capped",
    }
}

fn train_log_csvs(log: &TrainLog) -> (String, String, String, String) {
    let mut epochs = String::from("layer,epoch,reconstruction_error,wd_total,wd_max,n_hidden\n");
    let mut events = String::from("layer,epoch,event,detail\n");
    let mut layers = String::from("layer,total_wd,mean_energy,decision\n");
    for l in &log.layers {
        for e in &l.epochs {
            let _ = writeln!(
                epochs,
                "{},{},{},{},{},{}",
                l.layer, e.epoch, e.reconstruction_error, e.wd_total, e.wd_max, e.n_hidden
            );
        }
        for (epoch, ev) in &l.events {
            let _ = writeln!(events, "{},{},{},{}", l.layer, epoch, ev.kind(), ev.detail());
        }
        let _ = writeln!(
            layers,
            "{},{},{},{}",
            l.layer,
            l.total_wd,
            l.mean_energy,
            decision_str(l.decision)
        );
    }
    let mut head = String::from("epoch,cross_entropy\n");
    for (i, ce) in log.head_cross_entropy.iter().enumerate() {
        let _ = writeln!(head, "{i},{ce}");
    }
    (epochs, events, layers, head)
}

/// Train the parent model and write `model.json` plus training-log CSVs.
pub fn cmd_train(config_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    ensure_output_dir(&cfg.output_dir)?;
    let ds = cfg.load_dataset()?;
    let mut rng = SeededRng::derived(cfg.seed, TRAIN_STREAM);
    let (dbn, log) = train_dbn(&ds, &cfg.dbn, &mut rng)?;

    let model_path = cfg.output_dir.join("model.json");
    dbn.save(&model_path)?;
    let (epochs, events, layers, head) = train_log_csvs(&log);
    write_file(&cfg.output_dir.join("train_epochs.csv"), &epochs)?;
    write_file(&cfg.output_dir.join("train_events.csv"), &events)?;
    write_file(&cfg.output_dir.join("train_layers.csv"), &layers)?;
    write_file(&cfg.output_dir.join("train_head.csv"), &head)?;

    println!(
        "trained {} layers on {} samples; model saved to {}",
        dbn.n_layers(),
        ds.len(),
        model_path.display()
    );
    Ok(())
}

fn ratio_table_csv(report: &ClassReport) -> String {
    let mut out = String::from("class,classification_ratio_pct\n");
    for m in &report.per_class {
        let _ = writeln!(out, "{},{}", m.class, m.ratio * 100.0);
    }
    let _ = writeln!(out, "macro,{}", report.macro_ratio * 100.0);
    out
}

fn eval_report_text(cm: &ConfusionMatrix, report: &ClassReport) -> String {
    let mut out = String::from("== confusion matrix ==\n");
    out.push_str(&cm.to_csv());
    out.push_str("\n== class report ==\n");
    out.push_str(&report.to_text());
    out.push_str("\n== classification ratio ==\n");
    out.push_str(&ratio_table_csv(report));
    out
}

/// Evaluate a saved model and write confusion/report/ratio tables.
pub fn cmd_eval(model_path: &Path, config_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    ensure_output_dir(&cfg.output_dir)?;
    let ds = cfg.load_dataset()?;
    let dbn = Dbn::load(model_path)?;

    let cm = confusion(&dbn, &ds)?;
    let report = class_report(&cm)?;
    write_file(&cfg.output_dir.join("confusion.csv"), &cm.to_csv())?;
    write_file(&cfg.output_dir.join("class_report.csv"), &report.to_csv())?;
    write_file(&cfg.output_dir.join("ratio_table.csv"), &ratio_table_csv(&report))?;
    write_file(
        &cfg.output_dir.join("report.txt"),
        &eval_report_text(&cm, &report),
    )?;

    println!(
        "evaluated {} samples; macro classification ratio {:.1}%",
        cm.total(),
        report.macro_ratio * 100.0
    );
    Ok(())
}

/// Run the full re-learning pipeline against a saved parent model.
pub fn cmd_relearn(model_path: &Path, config_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let relearn = cfg.relearn.clone().ok_or_else(|| {
        config_err(
            "relearn.focus_classes",
            "the relearn command needs a [relearn] section",
        )
    })?;
    ensure_output_dir(&cfg.output_dir)?;
    let ds = cfg.load_dataset()?;
    let parent = Dbn::load(model_path)?;

    let plan = build_plan(&parent, &ds, &relearn.focus_classes)?;
    write_file(&cfg.output_dir.join("plan_summary.txt"), &plan.summary())?;

    let mut rng = SeededRng::derived(cfg.seed, RELEARN_STREAM);
    let q1 = train_child(&plan, ChildSet::Set1, &cfg.dbn, &mut rng)?;
    let q2 = train_child(&plan, ChildSet::Set2, &cfg.dbn, &mut rng)?;

    // Table-V style aggregates and per-sample histograms over all focus data
    let focus_ds = plan.focus_dataset();
    let report_q1 = kl_divergence(&plan.parent, &q1, focus_ds, "P", "Q1")?;
    let report_q2 = kl_divergence(&plan.parent, &q2, focus_ds, "P", "Q2")?;
    let hist_q1 = kl_histogram(&report_q1.values(), relearn.histogram_bins)?;
    let hist_q2 = kl_histogram(&report_q2.values(), relearn.histogram_bins)?;
    write_file(&cfg.output_dir.join("kl_histogram_q1.csv"), &hist_q1.to_csv())?;
    write_file(&cfg.output_dir.join("kl_histogram_q2.csv"), &hist_q2.to_csv())?;
    write_file(
        &cfg.output_dir.join("kl_aggregate.txt"),
        &format!(
            "KL(P,Q1) = {}\nKL(P,Q2) = {}\n",
            report_q1.aggregate, report_q2.aggregate
        ),
    )?;

    let sweep = relearn_sweep(&plan, &relearn.thresholds, &cfg.dbn, relearn.eval_set, &mut rng)?;
    write_file(&cfg.output_dir.join("sweep.csv"), &sweep.rows_csv())?;
    for threshold in &relearn.thresholds {
        let name = format!("scatter_theta_{}.csv", threshold.value());
        export_scatter(&sweep.q2_report, *threshold, &cfg.output_dir.join(name))?;
    }

    println!(
        "relearn finished: |set0|={} |set1|={} |set2|={}, {} sweep rows",
        plan.set0.len(),
        plan.set1.len(),
        plan.set2.len(),
        sweep.rows.len()
    );
    Ok(())
}

/// Emit the synthetic overlap dataset as CSV.
pub fn cmd_fixture(config_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    if !matches!(cfg.data, DataSpec::Fixture { .. }) {
        return Err(config_err(
            "data.source",
            "the fixture command needs `source = fixture`",
        ));
    }
    ensure_output_dir(&cfg.output_dir)?;
    let ds = cfg.load_dataset()?;
    let path = cfg.output_dir.join("fixture.csv");
    save_csv(&ds, &path)?;
    println!("wrote {} samples to {}", ds.len(), path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_config(name: &str, content: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("adaptive_dbn_cli_tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{}_{name}", std::process::id()));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    const VALID: &str = "\
[run]
seed = 7
output_dir = /tmp/adbn-test-out

[data]
source = fixture
n_per_class = 10
overlap = 0.5

[rbm]
epochs = 3

[relearn]
focus_classes = c0,c1
thresholds = 0.002,0.0015
eval_set = heldout
";

    #[test]
    fn parses_valid_config() {
        let path = write_config("valid.conf", VALID);
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.dbn.rbm.epochs, 3);
        let relearn = cfg.relearn.unwrap();
        assert_eq!(relearn.focus_classes, vec!["c0", "c1"]);
        assert_eq!(relearn.thresholds.len(), 2);
        assert_eq!(relearn.eval_set, SweepEvalSet::Heldout);
        assert!(matches!(
            cfg.data,
            DataSpec::Fixture { n_per_class: 10, .. }
        ));
    }

    #[test]
    fn rejects_unknown_key() {
        let path = write_config("unknown.conf", &format!("{VALID}\n[rbm]\nbogus = 1\n"));
        let err = RunConfig::load(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rbm.bogus") && msg.contains("unknown"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn rejects_duplicate_key() {
        let path = write_config("dup.conf", "[run]\nseed = 1\nseed = 2\n");
        let err = RunConfig::load(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn rejects_missing_required_key() {
        let path = write_config("missing.conf", "[run]\nseed = 1\n");
        let err = RunConfig::load(&path).unwrap_err();
        assert!(err.to_string().contains("run.output_dir"), "{err}");
    }

    #[test]
    fn rejects_bad_source_and_bad_values() {
        let bad_source = write_config(
            "bad_source.conf",
            "[run]\nseed=1\noutput_dir=/tmp/x\n[data]\nsource = mystery\n",
        );
        assert!(RunConfig::load(&bad_source).is_err());

        let bad_overlap = write_config(
            "bad_overlap.conf",
            "[run]\nseed=1\noutput_dir=/tmp/x\n[data]\nsource=fixture\nn_per_class=5\noverlap=1.5\n",
        );
        assert!(RunConfig::load(&bad_overlap).is_err());

        let bad_threshold = write_config(
            "bad_threshold.conf",
            &VALID.replace("0.002,0.0015", "-1.0"),
        );
        assert!(RunConfig::load(&bad_threshold).is_err());

        let dup_threshold = write_config(
            "dup_threshold.conf",
            &VALID.replace("0.002,0.0015", "0.1,0.1"),
        );
        assert!(RunConfig::load(&dup_threshold).is_err());
    }

    #[test]
    fn missing_config_file_error_names_path() {
        let path = PathBuf::from("/definitely/not/here.conf");
        let err = RunConfig::load(&path).unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.conf"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn fixture_dataset_is_reproducible_across_loads() {
        let path = write_config("repro.conf", VALID);
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.load_dataset().unwrap(), cfg.load_dataset().unwrap());
    }
}
