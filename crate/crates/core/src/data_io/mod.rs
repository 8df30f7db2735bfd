//! Dataset ingestion (sparse `label idx:val ...` text), feature scaling and
//! reproducible seed derivation.

mod sparse;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use sparse::SparseMatrix;
pub(crate) use sparse::sparse_dot;

/// Environment variable naming the default dataset directory.
pub const DATA_DIR_ENV: &str = "PROXYPROX_DATA_DIR";

/// Row count and column count of the `mushrooms` binary classification set.
pub const MUSHROOMS_SAMPLES: usize = 8124;
pub const MUSHROOMS_FEATURES: usize = 112;

/// One parsed row: 1-based, strictly increasing indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    None,
    /// Divide each column by its maximum absolute value.
    #[default]
    UnitColumns,
    /// Normalize each row to unit Euclidean norm.
    UnitRows,
}

impl fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScalingMode::None => "none",
            ScalingMode::UnitColumns => "unit_columns",
            ScalingMode::UnitRows => "unit_rows",
        };
        f.write_str(s)
    }
}

/// Feature matrix plus labels. Classification labels live in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Arc<SparseMatrix>,
    pub labels: Vec<f64>,
    pub scaling: ScalingMode,
}

impl Dataset {
    pub fn new(features: SparseMatrix, labels: Vec<f64>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Contract(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::Contract("dataset must have at least one row and one column".into()));
        }
        let (_, _, values) = features.raw_parts();
        if values.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dataset entries",
                coordinate: None,
            });
        }
        Ok(Self {
            features: Arc::new(features),
            labels,
            scaling: ScalingMode::None,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }
    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_binary(&self) -> bool {
        self.labels.iter().all(|&y| y == 0.0 || y == 1.0)
    }

    /// SHA-256 over shape, CSR arrays and labels.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        let (indptr, indices, values) = self.features.raw_parts();
        h.update((self.n() as u64).to_le_bytes());
        h.update((self.d() as u64).to_le_bytes());
        for &p in indptr {
            h.update((p as u64).to_le_bytes());
        }
        for &j in indices {
            h.update((j as u64).to_le_bytes());
        }
        for v in values.iter().chain(self.labels.iter()) {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRow> + '_ {
        (0..self.n()).map(|i| {
            let (idx, val) = self.features.row(i);
            SparseRow {
                indices: idx.iter().map(|j| j + 1).collect(),
                values: val.to_vec(),
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept 0-based feature indices.
    pub zero_based: bool,
    /// Declared dimension; defaults to the largest index observed.
    pub dim: Option<usize>,
}

/// Reads a sparse classification file. See [`parse_sparse_classification_str`].
pub fn parse_sparse_classification(path: impl AsRef<Path>, opts: ParseOptions) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_sparse_classification_str(&text, opts)
}

/// Parses lines `<label> <i1>:<v1> <i2>:<v2> ...`.
///
/// Labels `{+1, -1}` and `{1, 2}` map to `{1, 0}`; `{0, 1}` is kept as is.
/// `#` starts a comment; blank lines are skipped.
pub fn parse_sparse_classification_str(text: &str, opts: ParseOptions) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_col = 0usize;
    let mut last_line = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("").trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = tokens_with_columns(line);
        let (col, tok) = tokens.next().expect("non-empty line has a token");
        let label: f64 = tok.parse().map_err(|_| Error::Parse {
            line: line_no,
            column: col,
            message: format!("invalid label `{tok}`"),
        })?;
        if !label.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                column: col,
                message: "label must be finite".into(),
            });
        }
        let mut row = Vec::new();
        let mut prev: Option<usize> = None;
        for (col, tok) in tokens {
            let bad = |message: String| Error::Parse {
                line: line_no,
                column: col,
                message,
            };
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| bad(format!("expected `index:value`, found `{tok}`")))?;
            let idx: usize = idx_s.parse().map_err(|_| bad(format!("invalid feature index `{idx_s}`")))?;
            let val: f64 = val_s.parse().map_err(|_| bad(format!("invalid feature value `{val_s}`")))?;
            if !val.is_finite() {
                return Err(bad(format!("non-finite feature value `{val_s}`")));
            }
            let col0 = if opts.zero_based {
                idx
            } else {
                idx.checked_sub(1).ok_or_else(|| bad("feature indices are 1-based".into()))?
            };
            if let Some(p) = prev {
                if col0 <= p {
                    return Err(Error::Format {
                        line: line_no,
                        message: format!("feature indices must be strictly increasing ({idx} after {})", if opts.zero_based { p } else { p + 1 }),
                    });
                }
            }
            prev = Some(col0);
            max_col = max_col.max(col0 + 1);
            row.push((col0, val));
        }
        raw_labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format {
            line: last_line,
            message: "no data rows".into(),
        });
    }
    let d = match opts.dim {
        Some(d) if d < max_col => {
            return Err(Error::Format {
                line: 0,
                message: format!("declared dimension {d} is smaller than the largest index {max_col}"),
            })
        }
        Some(d) => d,
        None => max_col.max(1),
    };
    let labels = map_binary_labels(&raw_labels)?;
    Dataset::new(SparseMatrix::from_rows(d, &rows), labels)
}

fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace().map(move |tok| {
        let offset = tok.as_ptr() as usize - line.as_ptr() as usize;
        (offset + 1, tok)
    })
}

fn map_binary_labels(raw: &[f64]) -> Result<Vec<f64>> {
    // {-1, 1} and {1, 2} encodings map to {0, 1}; {0, 1} passes through
    let negative = [-1.0, 2.0].into_iter().find(|v| raw.contains(v)).unwrap_or(0.0);
    raw.iter()
        .enumerate()
        .map(|(i, &y)| match y {
            _ if y == 1.0 => Ok(1.0),
            _ if y == negative => Ok(0.0),
            _ => Err(Error::Format {
                line: i + 1,
                message: format!("label {y} is not binary"),
            }),
        })
        .collect()
}

/// Writes the dataset back out; labels 1/0 become `+1`/`-1`, values use round-trip formatting.
pub fn write_sparse_classification<W: Write>(data: &Dataset, out: &mut W) -> Result<()> {
    for (row, &y) in data.rows().zip(&data.labels) {
        out.write_all(if y == 1.0 { b"+1" } else { b"-1" })?;
        for (j, v) in row.indices.iter().zip(&row.values) {
            write!(out, " {j}:{v}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_sparse_classification_string(data: &Dataset) -> String {
    let mut buf = Vec::new();
    write_sparse_classification(data, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("output is ASCII")
}

pub fn scale_features(data: &Dataset, mode: ScalingMode) -> Dataset {
    let mut features = (*data.features).clone();
    match mode {
        ScalingMode::None => {}
        ScalingMode::UnitColumns => {
            let mut col_max = vec![0.0_f64; features.ncols()];
            for i in 0..features.nrows() {
                let (idx, val) = features.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    col_max[j] = col_max[j].max(v.abs());
                }
            }
            for i in 0..features.nrows() {
                let (idx, val) = features.row_values_mut(i);
                for (&j, v) in idx.iter().zip(val.iter_mut()) {
                    if col_max[j] > 0.0 {
                        *v /= col_max[j];
                    }
                }
            }
        }
        ScalingMode::UnitRows => {
            for i in 0..features.nrows() {
                let (_, val) = features.row_values_mut(i);
                let norm = val.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    val.iter_mut().for_each(|v| *v /= norm);
                }
            }
        }
    }
    Dataset {
        features: Arc::new(features),
        labels: data.labels.clone(),
        scaling: mode,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed for a named random stream.
pub fn rng_fork(master_seed: u64, stream_label: &str) -> u64 {
    // FNV-1a over the label
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream_label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master_seed ^ splitmix64(h))
}

// Category counts of the 22 one-hot encoded attributes; they sum to 112.
const MUSHROOM_CARDINALITIES: [usize; 22] = [6, 4, 8, 2, 8, 2, 2, 2, 10, 2, 5, 4, 4, 9, 9, 1, 4, 3, 5, 9, 6, 7];

/// Deterministic stand-in with the shape of `mushrooms`: 8124 rows, 22 one-hot
/// encoded categorical attributes spanning 112 binary columns, and labels drawn
/// from a planted logistic model (so the classes are not linearly separable).
pub fn synthetic_mushrooms(seed: u64) -> Dataset {
    debug_assert_eq!(MUSHROOM_CARDINALITIES.iter().sum::<usize>(), MUSHROOMS_FEATURES);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // skewed category frequencies per attribute
    let probs: Vec<Vec<f64>> = MUSHROOM_CARDINALITIES
        .iter()
        .map(|&c| {
            let raw: Vec<f64> = (0..c).map(|_| (rng.sample::<f64, _>(StandardNormal)).exp()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / s).collect()
        })
        .collect();
    let weights: Vec<f64> = (0..MUSHROOMS_FEATURES)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.9)
        .collect();
    let mut rows = Vec::with_capacity(MUSHROOMS_SAMPLES);
    let mut logits = Vec::with_capacity(MUSHROOMS_SAMPLES);
    for _ in 0..MUSHROOMS_SAMPLES {
        let mut offset = 0;
        let mut row = Vec::with_capacity(MUSHROOM_CARDINALITIES.len());
        let mut logit = 0.0;
        for (attr, &c) in MUSHROOM_CARDINALITIES.iter().enumerate() {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = c - 1;
            for (k, p) in probs[attr].iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            row.push((offset + pick, 1.0));
            logit += weights[offset + pick];
            offset += c;
        }
        rows.push(row);
        logits.push(logit);
    }
    // center so the classes are roughly balanced
    let mut sorted = logits.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let labels = logits
        .iter()
        .map(|&z| {
            let p = 1.0 / (1.0 + (-(z - median)).exp());
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Dataset::new(SparseMatrix::from_rows(MUSHROOMS_FEATURES, &rows), labels).expect("generator output is valid")
}

/// Where a loaded dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    File(PathBuf),
    Synthetic { seed: u64 },
}

/// Seed used for the `mushrooms`-shaped fallback dataset.
pub const SYNTHETIC_MUSHROOMS_SEED: u64 = 20_230_607;

/// Finds `mushrooms` under `$PROXYPROX_DATA_DIR`, if present.
pub fn find_mushrooms() -> Option<PathBuf> {
    let dir = std::env::var_os(DATA_DIR_ENV)?;
    ["mushrooms", "mushrooms.txt", "mushrooms.libsvm", "mushrooms.svm"]
        .iter()
        .map(|name| Path::new(&dir).join(name))
        .find(|p| p.is_file())
}

/// Loads `mushrooms` from the data directory, falling back to [`synthetic_mushrooms`].
/// Features are scaled with [`ScalingMode::UnitColumns`] (a no-op on 0/1 data).
pub fn load_mushrooms() -> Result<(Dataset, DatasetSource)> {
    let (data, source) = match find_mushrooms() {
        Some(path) => {
            let data = parse_sparse_classification(
                &path,
                ParseOptions {
                    zero_based: false,
                    dim: Some(MUSHROOMS_FEATURES),
                },
            )?;
            (data, DatasetSource::File(path))
        }
        None => {
            log::info!("{DATA_DIR_ENV} has no `mushrooms` file; using the synthetic stand-in");
            (
                synthetic_mushrooms(SYNTHETIC_MUSHROOMS_SEED),
                DatasetSource::Synthetic {
                    seed: SYNTHETIC_MUSHROOMS_SEED,
                },
            )
        }
    };
    Ok((scale_features(&data, ScalingMode::UnitColumns), source))
}
