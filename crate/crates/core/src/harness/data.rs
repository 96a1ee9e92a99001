//! Datasets for the logistic-regression experiments: seeded Gaussian classes
//! and the UCI mushroom (agaricus-lepiota) file.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::objective::LogisticLocalObjective;

/// Feature width the mushroom encoding must produce.
pub const MUSHROOM_FEATURES: usize = 112;
pub const MUSHROOM_TRAIN: usize = 6000;

/// Samples as rows with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub samples: DMatrix<f64>,
    pub labels: Vec<f64>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, label: f64) -> usize {
        self.labels.iter().filter(|&&b| b == label).count()
    }

    fn rows(&self, range: std::ops::Range<usize>) -> LabeledSet {
        LabeledSet {
            samples: self.samples.rows(range.start, range.len()).into_owned(),
            labels: self.labels[range].to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub objectives: Vec<LogisticLocalObjective>,
    pub train: LabeledSet,
    pub test: LabeledSet,
}

/// Splits `train` into `agents` consecutive, equally sized blocks.
pub fn partition(train: &LabeledSet, agents: usize, beta: f64) -> Result<Vec<LogisticLocalObjective>> {
    if agents == 0 || !train.len().is_multiple_of(agents) || train.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "{} training samples cannot be split evenly across {agents} agents",
            train.len()
        )));
    }
    let q = train.len() / agents;
    (0..agents)
        .map(|i| {
            let part = train.rows(i * q..(i + 1) * q);
            LogisticLocalObjective::new(part.samples, part.labels, beta, agents)
        })
        .collect()
}

/// Two Gaussian classes with means `±2·u`, `u = (1, −1, 1, −1, …)`, and
/// covariance `2I`. Each agent gets `total/agents` samples, half per class;
/// a held-out set of `total/5` samples is drawn afterwards from the same
/// stream.
pub fn generate_synthetic(agents: usize, dim: usize, total: usize, beta: f64, seed: u64) -> Result<Dataset> {
    if agents == 0 || dim == 0 || !total.is_multiple_of(agents) || total / agents < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least two samples per agent with N divisible by m, got N = {total}, m = {agents}, n = {dim}"
        )));
    }
    // ±1 pattern scaled to the length of [1, -1], so n = 2 gives means ±[2, -2]
    let amplitude = 2.0 * (2.0 / dim as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 2f64.sqrt()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut draw = |count: usize| {
        let positives = count.div_ceil(2);
        let labels: Vec<f64> = (0..count).map(|j| if j < positives { 1.0 } else { -1.0 }).collect();
        let mut samples = DMatrix::zeros(count, dim);
        for (j, &b) in labels.iter().enumerate() {
            for c in 0..dim {
                let pattern = if c % 2 == 0 { 1.0 } else { -1.0 };
                samples[(j, c)] = amplitude * b * pattern + noise.sample(&mut rng);
            }
        }
        LabeledSet { samples, labels }
    };

    let q = total / agents;
    let blocks: Vec<LabeledSet> = (0..agents).map(|_| draw(q)).collect();
    let test = draw((total / 5).max(2));
    let train = LabeledSet {
        samples: DMatrix::from_fn(total, dim, |r, c| blocks[r / q].samples[(r % q, c)]),
        labels: blocks.iter().flat_map(|b| b.labels.iter().copied()).collect(),
    };
    Ok(Dataset {
        objectives: partition(&train, agents, beta)?,
        train,
        test,
    })
}

/// Raw categorical records: class letter plus the 22 attribute letters.
fn read_records(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != 23 {
            return Err(Error::FileFormat {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 23 fields, found {}", rec.len()),
            });
        }
        let fields: Vec<String> = rec.iter().map(|f| f.trim().to_string()).collect();
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::FileFormat {
                path: path.to_path_buf(),
                line,
                msg: "empty field".into(),
            });
        }
        if fields[0] != "p" && fields[0] != "e" {
            return Err(Error::FileFormat {
                path: path.to_path_buf(),
                line,
                msg: format!("unknown class {:?}", fields[0]),
            });
        }
        records.push(fields);
    }
    Ok(records)
}

/// One-hot encoding over each attribute's observed alphabet. Attributes with
/// missing values (`?`) are dropped; labels map `p → +1`, `e → −1`.
pub fn encode_mushroom(records: &[Vec<String>]) -> LabeledSet {
    let attrs = 1..records.first().map_or(1, |r| r.len());
    let kept: Vec<usize> = attrs.filter(|&c| records.iter().all(|r| r[c] != "?")).collect();
    let alphabets: Vec<Vec<&str>> = kept
        .iter()
        .map(|&c| {
            let set: BTreeSet<&str> = records.iter().map(|r| r[c].as_str()).collect();
            set.into_iter().collect()
        })
        .collect();
    let width: usize = alphabets.iter().map(Vec::len).sum();
    let mut samples = DMatrix::zeros(records.len(), width);
    for (row, r) in records.iter().enumerate() {
        let mut offset = 0;
        for (&c, alphabet) in kept.iter().zip(&alphabets) {
            let slot = alphabet.binary_search(&r[c].as_str()).unwrap_or(0);
            samples[(row, offset + slot)] = 1.0;
            offset += alphabet.len();
        }
    }
    let labels = records.iter().map(|r| if r[0] == "p" { 1.0 } else { -1.0 }).collect();
    LabeledSet { samples, labels }
}

/// Loads and encodes the mushroom file; the first `train_count` rows after
/// an optional seeded shuffle go to the agents, the rest form the test set.
/// `seed = None` keeps file order.
pub fn load_mushroom(path: impl AsRef<Path>, train_count: usize, agents: usize, beta: f64, seed: Option<u64>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut records = read_records(path)?;
    if records.len() <= train_count {
        return Err(Error::FileFormat {
            path: path.to_path_buf(),
            line: records.len(),
            msg: format!("{} records, need more than {train_count}", records.len()),
        });
    }
    if let Some(seed) = seed {
        records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let all = encode_mushroom(&records);
    if all.samples.ncols() != MUSHROOM_FEATURES {
        return Err(Error::DimensionMismatch {
            expected: MUSHROOM_FEATURES,
            got: all.samples.ncols(),
        });
    }
    let train = all.rows(0..train_count);
    let test = all.rows(train_count..all.len());
    Ok(Dataset {
        objectives: partition(&train, agents, beta)?,
        train,
        test,
    })
}
