//! Binary model container.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic "SHINTM" | version u16 | header_len u32 | header (JSON)
//! | n_tensors u32 | per tensor: ndim u32, dims u64 × ndim, data f64 × Π dims
//! | checksum u64 (FNV-1a of every preceding byte)
//! ```
//!
//! Parameters are stored as raw f64 bits, so a reloaded model predicts
//! bitwise identically.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{
    ArchConfig, Cnn1d, CnnConfig, DecisionTree, LstmSeq, ModelKind, ModelParams, Network, RandomForest,
    TrainedModel, TrainingMeta, TreeNode,
};
use crate::nn::Tensor;
use crate::preprocess::PreprocessConfig;
use crate::seed::fnv1a;

pub const MAGIC: &[u8; 6] = b"SHINTM";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("not a model container of version {VERSION}: {0}")]
    VersionMismatch(String),
    #[error("corrupt model container: {0}")]
    CorruptContainer(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    preprocess: PreprocessConfig,
    arch: ArchConfig,
    input_rows: usize,
    features: usize,
    epochs_run: usize,
    best_epoch: usize,
    best_val_f1: Option<f64>,
    seed: u64,
    no_improvement: bool,
    cnn: Option<CnnConfig>,
    lstm_hidden: Option<usize>,
}

const NODE_COLS: usize = 5;

fn tree_tensor(tree: &DecisionTree) -> Tensor {
    let mut data = Vec::with_capacity(tree.nodes().len() * NODE_COLS);
    for node in tree.nodes() {
        match *node {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => data.extend([0.0, feature as f64, threshold, left as f64, right as f64]),
            TreeNode::Leaf { high_fraction } => data.extend([1.0, 0.0, high_fraction, 0.0, 0.0]),
        }
    }
    Tensor::new(vec![tree.nodes().len(), NODE_COLS], data).expect("row-major node table")
}

fn as_index(v: f64, what: &str) -> Result<usize, ContainerError> {
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) {
        Ok(v as usize)
    } else {
        Err(ContainerError::CorruptContainer(format!("bad {what} {v}")))
    }
}

fn tree_from_tensor(t: &Tensor) -> Result<DecisionTree, ContainerError> {
    if t.shape().len() != 2 || t.shape()[1] != NODE_COLS {
        return Err(ContainerError::CorruptContainer("tree tensor is not [n, 5]".into()));
    }
    let n = t.shape()[0];
    let mut nodes = Vec::with_capacity(n);
    for row in t.data().chunks(NODE_COLS) {
        let node = match row[0] {
            0.0 => {
                let (left, right) = (as_index(row[3], "child")?, as_index(row[4], "child")?);
                if left >= n || right >= n {
                    return Err(ContainerError::CorruptContainer("child index out of range".into()));
                }
                TreeNode::Split {
                    feature: as_index(row[1], "feature")?,
                    threshold: row[2],
                    left,
                    right,
                }
            }
            1.0 => TreeNode::Leaf { high_fraction: row[2] },
            tag => return Err(ContainerError::CorruptContainer(format!("unknown node tag {tag}"))),
        };
        nodes.push(node);
    }
    Ok(DecisionTree::from_nodes(nodes))
}

pub fn encode(model: &TrainedModel) -> Vec<u8> {
    let (tensors, cnn, lstm_hidden): (Vec<Tensor>, _, _) = match &model.params {
        ModelParams::Forest(f) => (f.trees().iter().map(tree_tensor).collect(), None, None),
        ModelParams::Cnn(net) => (net.params().to_vec(), Some(net.config()), None),
        ModelParams::Lstm(net) => (net.params().to_vec(), None, Some(net.hidden())),
    };
    let header = Header {
        kind: model.kind,
        preprocess: model.preprocess,
        arch: model.arch,
        input_rows: model.input_rows,
        features: model.features,
        epochs_run: model.meta.epochs_run,
        best_epoch: model.meta.best_epoch,
        best_val_f1: model.meta.best_val_f1,
        seed: model.meta.seed,
        no_improvement: model.meta.no_improvement,
        cnn,
        lstm_hidden,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in &tensors {
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let checksum = fnv1a(&out);
    out.extend_from_slice(&checksum.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| ContainerError::CorruptContainer("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ContainerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<TrainedModel, ContainerError> {
    let prefix = MAGIC.len() + 2;
    if bytes.len() < prefix {
        return Err(ContainerError::CorruptContainer("shorter than the magic header".into()));
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(ContainerError::VersionMismatch("bad magic bytes".into()));
    }
    let version = u16::from_le_bytes([bytes[MAGIC.len()], bytes[MAGIC.len() + 1]]);
    if version != VERSION {
        return Err(ContainerError::VersionMismatch(format!("found version {version}")));
    }
    if bytes.len() < prefix + 8 {
        return Err(ContainerError::CorruptContainer("missing checksum".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    if fnv1a(body) != stored {
        return Err(ContainerError::CorruptContainer("checksum mismatch".into()));
    }

    let mut r = Reader { buf: body, pos: prefix };
    let header_len = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| ContainerError::CorruptContainer(format!("header: {e}")))?;
    let n_tensors = r.u32()? as usize;
    let mut tensors = Vec::new();
    for _ in 0..n_tensors {
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            shape.push(r.u64()? as usize);
        }
        let len = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| ContainerError::CorruptContainer("tensor size overflows".into()))?;
        let raw = r.take(len.checked_mul(8).ok_or_else(|| ContainerError::CorruptContainer("tensor size overflows".into()))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Tensor::new(shape, data).map_err(|e| ContainerError::CorruptContainer(e.to_string()))?);
    }
    if r.pos != body.len() {
        return Err(ContainerError::CorruptContainer("trailing bytes".into()));
    }

    let bad = |e: crate::nn::NnError| ContainerError::CorruptContainer(e.to_string());
    let params = match header.kind {
        ModelKind::MotionRangeForest => {
            let trees = tensors.iter().map(tree_from_tensor).collect::<Result<Vec<_>, _>>()?;
            ModelParams::Forest(RandomForest::from_trees(trees, header.features))
        }
        ModelKind::Cnn1d => {
            let cfg = header
                .cnn
                .ok_or_else(|| ContainerError::CorruptContainer("missing cnn config".into()))?;
            ModelParams::Cnn(Cnn1d::from_params(cfg, tensors).map_err(bad)?)
        }
        ModelKind::LstmSeq => {
            let hidden = header
                .lstm_hidden
                .ok_or_else(|| ContainerError::CorruptContainer("missing lstm width".into()))?;
            ModelParams::Lstm(LstmSeq::from_params(header.features, hidden, tensors).map_err(bad)?)
        }
    };
    Ok(TrainedModel {
        kind: header.kind,
        params,
        preprocess: header.preprocess,
        arch: header.arch,
        input_rows: header.input_rows,
        features: header.features,
        meta: TrainingMeta {
            epochs_run: header.epochs_run,
            best_epoch: header.best_epoch,
            best_val_f1: header.best_val_f1,
            seed: header.seed,
            no_improvement: header.no_improvement,
        },
    })
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), ContainerError> {
    let path = path.as_ref();
    fs::write(path, encode(model)).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, ContainerError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ForestConfig;
    use crate::pose::ShotLabel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn meta() -> TrainingMeta {
        TrainingMeta {
            epochs_run: 3,
            best_epoch: 2,
            best_val_f1: Some(0.75),
            seed: 9,
            no_improvement: false,
        }
    }

    fn cnn_model() -> TrainedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = CnnConfig {
            features: 4,
            kernel: 3,
            channels1: 3,
            channels2: 5,
            pool: 2,
        };
        TrainedModel {
            kind: ModelKind::Cnn1d,
            params: ModelParams::Cnn(Cnn1d::new(cfg, &mut rng).unwrap()),
            preprocess: PreprocessConfig::default(),
            arch: ArchConfig::default(),
            input_rows: 12,
            features: 4,
            meta: meta(),
        }
    }

    fn forest_model() -> TrainedModel {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let y: Vec<ShotLabel> = (0..20).map(|i| ShotLabel::from_index((i >= 10) as usize)).collect();
        let cfg = ForestConfig {
            n_trees: 5,
            ..Default::default()
        };
        TrainedModel {
            kind: ModelKind::MotionRangeForest,
            params: ModelParams::Forest(RandomForest::fit(&x, &y, &cfg, 3).unwrap()),
            preprocess: PreprocessConfig::default(),
            arch: ArchConfig::default(),
            input_rows: 50,
            features: 2,
            meta: TrainingMeta {
                best_val_f1: None,
                ..meta()
            },
        }
    }

    #[test]
    fn round_trips() {
        for m in [cnn_model(), forest_model()] {
            assert_eq!(decode(&encode(&m)).unwrap(), m);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lstm = TrainedModel {
            kind: ModelKind::LstmSeq,
            params: ModelParams::Lstm(LstmSeq::new(4, 3, &mut rng)),
            ..cnn_model()
        };
        assert_eq!(decode(&encode(&lstm)).unwrap(), lstm);
    }

    #[test]
    fn truncation_is_corrupt() {
        let bytes = encode(&cnn_model());
        for cut in [3, 8, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(decode(&bytes[..cut]), Err(ContainerError::CorruptContainer(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn flipped_byte_is_corrupt() {
        let mut bytes = encode(&forest_model());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(decode(&bytes), Err(ContainerError::CorruptContainer(_))));
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = encode(&cnn_model());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(ContainerError::VersionMismatch(_))));
        let mut bytes = encode(&cnn_model());
        bytes[MAGIC.len()] = 9;
        assert!(matches!(decode(&bytes), Err(ContainerError::VersionMismatch(_))));
    }
}
