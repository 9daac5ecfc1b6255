//! Dataset ingestion: CSV and IDX loaders, min-max normalization, stratified
//! splits, and the synthetic two-class overlap fixture with valence/arousal
//! annotations.

use std::collections::BTreeSet;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// One sample: feature vector in `[0,1]^d`, class index, and optional
/// valence/arousal annotations in `[-1,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub id: String,
    pub input: Vec<f64>,
    pub label: usize,
    pub valence: Option<f64>,
    pub arousal: Option<f64>,
}

/// Immutable dataset with ordered class names.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<LabeledSample>,
    pub class_labels: Vec<String>,
    /// Per-feature (min, max) recorded by min-max normalization, when applied.
    pub feature_bounds: Option<Vec<(f64, f64)>>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<LabeledSample>, class_labels: Vec<String>) -> Result<Self> {
        let ds = Self {
            samples,
            class_labels,
            feature_bounds: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let width = self.input_width();
        for s in &self.samples {
            if s.label >= self.class_labels.len() {
                return Err(Error::InvalidValue {
                    what: format!("label index of sample {}", s.id),
                    value: s.label as f64,
                });
            }
            if s.input.len() != width {
                return Err(Error::DimensionMismatch {
                    context: "dataset input width",
                    expected: width,
                    actual: s.input.len(),
                });
            }
            for &x in &s.input {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidValue {
                        what: format!("input component of sample {}", s.id),
                        value: x,
                    });
                }
            }
            for (name, v) in [("valence", s.valence), ("arousal", s.arousal)] {
                if let Some(v) = v {
                    if !(-1.0..=1.0).contains(&v) {
                        return Err(Error::InvalidValue {
                            what: format!("{name} of sample {}", s.id),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_width(&self) -> usize {
        self.samples.first().map_or(0, |s| s.input.len())
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.input.clone()).collect()
    }

    /// Samples of the given ids, preserving dataset order.
    pub fn subset(&self, ids: &BTreeSet<String>) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .filter(|s| ids.contains(&s.id))
                .cloned()
                .collect(),
            class_labels: self.class_labels.clone(),
            feature_bounds: self.feature_bounds.clone(),
        }
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_labels.iter().position(|c| c == name)
    }

    /// Count of samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_labels.len()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }
}

/// Min-max normalize every feature column into `[0,1]`, recording per-column
/// bounds. Constant columns map to 0.0. Normalizing an already-normalized
/// dataset is the identity.
pub fn normalize_min_max(ds: &mut LabeledDataset) {
    let width = ds.input_width();
    if ds.samples.is_empty() || width == 0 {
        ds.feature_bounds = Some(Vec::new());
        return;
    }
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); width];
    for s in &ds.samples {
        for (b, &x) in bounds.iter_mut().zip(&s.input) {
            b.0 = b.0.min(x);
            b.1 = b.1.max(x);
        }
    }
    for s in &mut ds.samples {
        for (x, &(lo, hi)) in s.input.iter_mut().zip(&bounds) {
            *x = if hi > lo { (*x - lo) / (hi - lo) } else { 0.0 };
        }
    }
    ds.feature_bounds = Some(bounds);
}

/// Optional expectations imposed on a CSV file.
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    /// When set, rows with labels outside this list are rejected and the
    /// dataset uses exactly this class ordering.
    pub expected_classes: Option<Vec<String>>,
}

/// Load a CSV dataset. Expected header: `label[,valence,arousal],f0,f1,...`;
/// features are min-max normalized to `[0,1]` with recorded bounds.
///
/// Row numbers in errors are 1-based file lines (the header is line 1).
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut lines = text.lines().enumerate();

    let data_err = |row: usize, message: String| Error::DataRow {
        path: path.to_path_buf(),
        row,
        message,
    };

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data {
            path: path.to_path_buf(),
            message: "no samples".into(),
        })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"label") {
        return Err(data_err(1, "header must start with `label`".into()));
    }
    let has_va = columns.len() >= 3 && columns[1] == "valence" && columns[2] == "arousal";
    let n_features = columns.len() - if has_va { 3 } else { 1 };
    if n_features == 0 {
        return Err(data_err(1, "header declares no feature columns".into()));
    }

    let mut class_labels: Vec<String> = schema.expected_classes.clone().unwrap_or_default();
    let fixed_classes = schema.expected_classes.is_some();
    let mut samples = Vec::new();

    for (idx, line) in lines {
        let row = idx + 1; // 1-based file line
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(data_err(
                row,
                format!("expected {} fields, got {}", columns.len(), fields.len()),
            ));
        }
        let label_name = fields[0].to_string();
        let label = match class_labels.iter().position(|c| *c == label_name) {
            Some(i) => i,
            None if fixed_classes => {
                return Err(data_err(row, format!("unknown label `{label_name}`")));
            }
            None => {
                class_labels.push(label_name);
                class_labels.len() - 1
            }
        };

        let parse = |field: &str, what: &str| -> Result<f64> {
            field
                .parse::<f64>()
                .map_err(|_| data_err(row, format!("non-numeric {what}: `{field}`")))
        };

        let (valence, arousal, feature_start) = if has_va {
            let v = parse(fields[1], "valence")?;
            let a = parse(fields[2], "arousal")?;
            for (name, x) in [("valence", v), ("arousal", a)] {
                if !(-1.0..=1.0).contains(&x) {
                    return Err(data_err(row, format!("{name} {x} outside [-1,1]")));
                }
            }
            (Some(v), Some(a), 3)
        } else {
            (None, None, 1)
        };

        let mut input = Vec::with_capacity(n_features);
        for field in &fields[feature_start..] {
            input.push(parse(field, "feature")?);
        }

        samples.push(LabeledSample {
            id: format!("s{:06}", samples.len()),
            input,
            label,
            valence,
            arousal,
        });
    }

    if samples.is_empty() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            message: "no samples".into(),
        });
    }

    let mut ds = LabeledDataset {
        samples,
        class_labels,
        feature_bounds: None,
    };
    normalize_min_max(&mut ds);
    ds.validate()?;
    Ok(ds)
}

/// Write a dataset in the `load_csv` schema. Valence/arousal columns are
/// emitted only when every sample carries both.
pub fn save_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let has_va = !ds.samples.is_empty()
        && ds
            .samples
            .iter()
            .all(|s| s.valence.is_some() && s.arousal.is_some());
    let width = ds.input_width();
    let mut out = String::new();
    out.push_str("label");
    if has_va {
        out.push_str(",valence,arousal");
    }
    for i in 0..width {
        out.push_str(&format!(",f{i}"));
    }
    out.push('\n');
    for s in &ds.samples {
        out.push_str(&ds.class_labels[s.label]);
        if has_va {
            out.push_str(&format!(",{},{}", s.valence.unwrap(), s.arousal.unwrap()));
        }
        for x in &s.input {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_u32_be(reader: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf).map_err(|_| Error::Data {
        path: path.to_path_buf(),
        message: "truncated file".into(),
    })?;
    Ok(u32::from_be_bytes(buf))
}

/// Load an IDX image/label file pair (big-endian, magic 0x803 / 0x801).
/// Pixels are scaled by 1/255 into `[0,1]`; class labels are the digit
/// strings `0..=max_label`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let open = |path: &Path| {
        fs::File::open(path).map_err(|e| Error::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    };
    let mut images = open(images_path)?;
    let magic = read_u32_be(&mut images, images_path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Data {
            path: images_path.to_path_buf(),
            message: format!("bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"),
        });
    }
    let n_images = read_u32_be(&mut images, images_path)? as usize;
    let rows = read_u32_be(&mut images, images_path)? as usize;
    let cols = read_u32_be(&mut images, images_path)? as usize;
    let mut pixels = vec![0u8; n_images * rows * cols];
    images.read_exact(&mut pixels).map_err(|_| Error::Data {
        path: images_path.to_path_buf(),
        message: "truncated image data".into(),
    })?;

    let mut labels_file = open(labels_path)?;
    let magic = read_u32_be(&mut labels_file, labels_path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Data {
            path: labels_path.to_path_buf(),
            message: format!("bad label magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}"),
        });
    }
    let n_labels = read_u32_be(&mut labels_file, labels_path)? as usize;
    if n_labels != n_images {
        return Err(Error::Data {
            path: labels_path.to_path_buf(),
            message: format!("{n_labels} labels for {n_images} images"),
        });
    }
    let mut labels = vec![0u8; n_labels];
    labels_file.read_exact(&mut labels).map_err(|_| Error::Data {
        path: labels_path.to_path_buf(),
        message: "truncated label data".into(),
    })?;

    if n_images == 0 {
        return Err(Error::Data {
            path: images_path.to_path_buf(),
            message: "no samples".into(),
        });
    }

    let max_label = *labels.iter().max().unwrap() as usize;
    let class_labels: Vec<String> = (0..=max_label).map(|l| l.to_string()).collect();
    let dim = rows * cols;
    let samples = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| LabeledSample {
            id: format!("s{i:06}"),
            input: pixels[i * dim..(i + 1) * dim]
                .iter()
                .map(|&p| p as f64 / 255.0)
                .collect(),
            label: label as usize,
            valence: None,
            arousal: None,
        })
        .collect();

    LabeledDataset::new(samples, class_labels)
}

/// Stratified split into (train, test). `fraction` of each class goes to
/// train (rounded, but at least one sample on each side per class).
pub fn split(
    ds: &LabeledDataset,
    fraction: f64,
    rng: &mut SeededRng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidValue {
            what: "split fraction".into(),
            value: fraction,
        });
    }
    let mut train_ids = BTreeSet::new();
    for class in 0..ds.class_labels.len() {
        let mut ids: Vec<&str> = ds
            .samples
            .iter()
            .filter(|s| s.label == class)
            .map(|s| s.id.as_str())
            .collect();
        if ids.len() < 2 {
            return Err(Error::Data {
                path: PathBuf::from("<dataset>"),
                message: format!(
                    "class `{}` has {} samples; need at least 2 to split",
                    ds.class_labels[class],
                    ids.len()
                ),
            });
        }
        rng.shuffle(&mut ids);
        let n_train = ((fraction * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);
        for id in &ids[..n_train] {
            train_ids.insert(id.to_string());
        }
    }
    let test_ids: BTreeSet<String> = ds
        .samples
        .iter()
        .filter(|s| !train_ids.contains(&s.id))
        .map(|s| s.id.clone())
        .collect();
    Ok((ds.subset(&train_ids), ds.subset(&test_ids)))
}

/// Synthesize a two-class 2-D Gaussian-blob dataset whose inter-centroid
/// distance shrinks as `overlap` grows (0 = well separated, 1 = identical
/// centroids). Inputs are clamped to `[0,1]^2`; the same coordinates are
/// exported as valence/arousal, affine-mapped to `[-1,1]`.
pub fn make_overlap_fixture(
    n_per_class: usize,
    overlap: f64,
    rng: &mut SeededRng,
) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::InvalidValue {
            what: "overlap".into(),
            value: overlap,
        });
    }
    if n_per_class == 0 {
        return Err(Error::EmptyInput("fixture class size"));
    }
    const SIGMA: f64 = 0.12;
    const HALF_SPAN: f64 = 0.45; // centroid distance 0.9 at overlap 0
    let offset = (1.0 - overlap) * HALF_SPAN / std::f64::consts::SQRT_2;
    let centroids = [
        (0.5 - offset, 0.5 - offset),
        (0.5 + offset, 0.5 + offset),
    ];

    let mut samples = Vec::with_capacity(2 * n_per_class);
    for (label, &(cx, cy)) in centroids.iter().enumerate() {
        for _ in 0..n_per_class {
            let x = (cx + SIGMA * rng.next_gaussian()).clamp(0.0, 1.0);
            let y = (cy + SIGMA * rng.next_gaussian()).clamp(0.0, 1.0);
            samples.push(LabeledSample {
                id: format!("s{:06}", samples.len()),
                input: vec![x, y],
                label,
                valence: Some(2.0 * x - 1.0),
                arousal: Some(2.0 * y - 1.0),
            });
        }
    }
    LabeledDataset::new(samples, vec!["c0".into(), "c1".into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &[u8], name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("adaptive_dbn_data_tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{}_{name}", std::process::id()));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content).unwrap();
        path
    }

    #[test]
    fn csv_empty_file_is_error() {
        let path = write_temp(b"", "empty.csv");
        let err = load_csv(&path, &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("no samples"));
    }

    #[test]
    fn csv_header_only_is_error() {
        let path = write_temp(b"label,f0\n", "header_only.csv");
        let err = load_csv(&path, &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("no samples"));
    }

    #[test]
    fn csv_round_trips_through_save() {
        let text = "label,valence,arousal,f0,f1\n\
                    anger,-0.5,0.25,0.0,10\n\
                    disgust,0.125,-1,1,20\n\
                    anger,1,0.75,0.5,15\n";
        let path = write_temp(text.as_bytes(), "roundtrip.csv");
        let ds = load_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!(ds.class_labels, vec!["anger", "disgust"]);
        let out = write_temp(b"", "roundtrip_out.csv");
        save_csv(&ds, &out).unwrap();
        let ds2 = load_csv(&out, &CsvSchema::default()).unwrap();
        assert_eq!(ds.samples, ds2.samples);
        assert_eq!(ds.class_labels, ds2.class_labels);
    }

    #[test]
    fn csv_constant_column_normalizes_to_zero() {
        let text = "label,f0,f1\na,5,1\na,5,2\nb,5,3\nb,5,4\n";
        let path = write_temp(text.as_bytes(), "constant.csv");
        let ds = load_csv(&path, &CsvSchema::default()).unwrap();
        for s in &ds.samples {
            assert_eq!(s.input[0], 0.0);
        }
        // non-constant column spans [0,1]
        assert_eq!(ds.samples[0].input[1], 0.0);
        assert_eq!(ds.samples[3].input[1], 1.0);
    }

    #[test]
    fn csv_malformed_rows_name_the_line() {
        let bad_count = write_temp(b"label,f0,f1\na,1\n", "bad_count.csv");
        let err = load_csv(&bad_count, &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        let bad_num = write_temp(b"label,f0\na,1\nb,x\n", "bad_num.csv");
        let err = load_csv(&bad_num, &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");

        let bad_va = write_temp(b"label,valence,arousal,f0\na,2.0,0,1\n", "bad_va.csv");
        let err = load_csv(&bad_va, &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn csv_unknown_label_rejected_under_schema() {
        let path = write_temp(b"label,f0\nanger,1\nfear,2\n", "unknown_label.csv");
        let schema = CsvSchema {
            expected_classes: Some(vec!["anger".into(), "disgust".into()]),
        };
        let err = load_csv(&path, &schema).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3") && msg.contains("fear"), "{msg}");
    }

    #[test]
    fn csv_loader_is_deterministic() {
        let text = "label,f0\na,1\nb,2\n";
        let path = write_temp(text.as_bytes(), "det.csv");
        let a = load_csv(&path, &CsvSchema::default()).unwrap();
        let b = load_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalization_is_idempotent() {
        let text = "label,f0,f1\na,-3,10\na,7,20\nb,2,30\n";
        let path = write_temp(text.as_bytes(), "idem.csv");
        let ds = load_csv(&path, &CsvSchema::default()).unwrap();
        let mut again = ds.clone();
        normalize_min_max(&mut again);
        for (a, b) in ds.samples.iter().zip(&again.samples) {
            assert_eq!(a.input, b.input);
        }
    }

    fn idx_fixture(n: usize, rows: usize, cols: usize, pixels: &[u8], labels: &[u8]) -> (PathBuf, PathBuf) {
        let mut img = Vec::new();
        img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
        img.extend_from_slice(&(n as u32).to_be_bytes());
        img.extend_from_slice(&(rows as u32).to_be_bytes());
        img.extend_from_slice(&(cols as u32).to_be_bytes());
        img.extend_from_slice(pixels);
        let mut lab = Vec::new();
        lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        lab.extend_from_slice(labels);
        (
            write_temp(&img, &format!("idx_{n}_{rows}x{cols}.images")),
            write_temp(&lab, &format!("idx_{n}_{rows}x{cols}.labels")),
        )
    }

    #[test]
    fn idx_pixel_scaling() {
        let (img, lab) = idx_fixture(1, 2, 2, &[0, 255, 128, 64], &[1]);
        let ds = load_idx(&img, &lab).unwrap();
        let expected = [0.0, 1.0, 0.5019607843137255, 0.25098039215686274];
        for (x, e) in ds.samples[0].input.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
        assert_eq!(ds.samples[0].label, 1);
    }

    #[test]
    fn idx_count_mismatch_is_error() {
        let (img, lab) = idx_fixture(2, 1, 1, &[0, 255], &[1, 0, 1]);
        let err = load_idx(&img, &lab).unwrap_err();
        assert!(err.to_string().contains("3 labels for 2 images"), "{err}");
    }

    #[test]
    fn idx_bad_magic_is_error() {
        let (img, lab) = idx_fixture(1, 1, 1, &[7], &[0]);
        assert!(load_idx(&lab, &lab).is_err()); // labels file as images
        assert!(load_idx(&img, &img).is_err()); // images file as labels
    }

    #[test]
    fn idx_generated_fixture_round_trip() {
        let labels: Vec<u8> = (0..10).map(|i| i % 3).collect();
        let pixels: Vec<u8> = (0..10 * 4).map(|i| (i * 7 % 256) as u8).collect();
        let (img, lab) = idx_fixture(10, 2, 2, &pixels, &labels);
        let ds = load_idx(&img, &lab).unwrap();
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.class_labels, vec!["0", "1", "2"]);
        for (s, &l) in ds.samples.iter().zip(&labels) {
            assert_eq!(s.label, l as usize);
        }
    }

    #[test]
    fn idx_truncated_file_is_error() {
        let mut img = Vec::new();
        img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
        img.extend_from_slice(&2u32.to_be_bytes());
        img.extend_from_slice(&2u32.to_be_bytes());
        img.extend_from_slice(&2u32.to_be_bytes());
        img.extend_from_slice(&[1, 2, 3]); // needs 8 bytes
        let path = write_temp(&img, "truncated.images");
        let (_, lab) = idx_fixture(2, 2, 2, &[0; 8], &[0, 1]);
        let err = load_idx(&path, &lab).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    fn small_dataset(per_class: usize) -> LabeledDataset {
        let mut rng = SeededRng::new(1);
        make_overlap_fixture(per_class, 0.5, &mut rng).unwrap()
    }

    #[test]
    fn split_halves_evenly() {
        let ds = small_dataset(10);
        let mut rng = SeededRng::new(2);
        let (train, test) = split(&ds, 0.5, &mut rng).unwrap();
        assert_eq!(train.class_counts(), vec![5, 5]);
        assert_eq!(test.class_counts(), vec![5, 5]);
    }

    #[test]
    fn split_is_disjoint_and_exhaustive() {
        let ds = small_dataset(7);
        let mut rng = SeededRng::new(3);
        let (train, test) = split(&ds, 0.3, &mut rng).unwrap();
        let train_ids: BTreeSet<_> = train.samples.iter().map(|s| &s.id).collect();
        let test_ids: BTreeSet<_> = test.samples.iter().map(|s| &s.id).collect();
        assert!(train_ids.is_disjoint(&test_ids));
        assert_eq!(train_ids.len() + test_ids.len(), ds.len());
    }

    #[test]
    fn split_deterministic_under_seed() {
        let ds = small_dataset(9);
        let (a_train, a_test) = split(&ds, 0.6, &mut SeededRng::new(5)).unwrap();
        let (b_train, b_test) = split(&ds, 0.6, &mut SeededRng::new(5)).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
    }

    #[test]
    fn split_rejects_tiny_classes() {
        let ds = LabeledDataset::new(
            vec![LabeledSample {
                id: "s0".into(),
                input: vec![0.5],
                label: 0,
                valence: None,
                arousal: None,
            }],
            vec!["only".into()],
        )
        .unwrap();
        assert!(split(&ds, 0.5, &mut SeededRng::new(1)).is_err());
    }

    #[test]
    fn fixture_annotations_in_range() {
        let ds = small_dataset(50);
        for s in &ds.samples {
            let v = s.valence.unwrap();
            let a = s.arousal.unwrap();
            assert!((-1.0..=1.0).contains(&v));
            assert!((-1.0..=1.0).contains(&a));
            // annotations are the affine image of the inputs
            assert!((v - (2.0 * s.input[0] - 1.0)).abs() < 1e-15);
            assert!((a - (2.0 * s.input[1] - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn fixture_overlap_controls_centroid_distance() {
        let mut rng = SeededRng::new(9);
        let spread = |overlap: f64, rng: &mut SeededRng| {
            let ds = make_overlap_fixture(200, overlap, rng).unwrap();
            let mut centroids = [[0.0; 2]; 2];
            for s in &ds.samples {
                centroids[s.label][0] += s.input[0];
                centroids[s.label][1] += s.input[1];
            }
            for c in &mut centroids {
                c[0] /= 200.0;
                c[1] /= 200.0;
            }
            ((centroids[0][0] - centroids[1][0]).powi(2)
                + (centroids[0][1] - centroids[1][1]).powi(2))
            .sqrt()
        };
        let far = spread(0.0, &mut rng);
        let mid = spread(0.5, &mut rng);
        let none = spread(1.0, &mut rng);
        assert!(far > mid && mid > none);
        assert!(none < 0.05, "identical centroids expected, got {none}");
    }
}
