//! A versioned binary container for fitted models and checkpoints: a JSON
//! text header (kind, vocabulary hash, hyperparameters, tensor manifest)
//! followed by raw little-endian f64 tensor payloads.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::logistic::LogisticModel;
use crate::models::{ForestModel, ForestParams, NbModel, SvmModel};
use crate::neural::{
    CnnConfig, CnnModel, GruClassifier, GruConfig, LmConfig, LmModel, RnnLmStacker,
    SequenceClassifier,
};

const MAGIC: &[u8; 4] = b"SSMC";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("io error: {0}")]
    Io(String),
    #[error("not a model container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u32),
    #[error("malformed container: {0}")]
    Malformed(String),
    #[error("container holds kind {got}, expected {want}")]
    WrongKind { got: String, want: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub vocab_hash: u64,
    pub hyper: BTreeMap<String, serde_json::Value>,
    pub tensors: Vec<TensorMeta>,
}

/// A named tensor set with a text header; every model kind lowers to this.
#[derive(Debug, Clone)]
pub struct ModelArtifact {
    pub header: Header,
    pub data: Vec<Vec<f64>>,
}

impl ModelArtifact {
    pub fn new(kind: &str, vocab_hash: u64) -> ModelArtifact {
        ModelArtifact {
            header: Header {
                kind: kind.to_string(),
                vocab_hash,
                hyper: BTreeMap::new(),
                tensors: Vec::new(),
            },
            data: Vec::new(),
        }
    }

    pub fn set_hyper(&mut self, key: &str, value: serde_json::Value) {
        self.header.hyper.insert(key.to_string(), value);
    }

    pub fn hyper_f64(&self, key: &str) -> Option<f64> {
        self.header.hyper.get(key).and_then(|v| v.as_f64())
    }

    pub fn push_tensor(&mut self, name: &str, shape: Vec<usize>, data: Vec<f64>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.header.tensors.push(TensorMeta {
            name: name.to_string(),
            shape,
        });
        self.data.push(data);
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.header
            .tensors
            .iter()
            .position(|t| t.name == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn save(&self, path: &Path) -> Result<(), ContainerError> {
        let mut file = std::fs::File::create(path).map_err(|e| ContainerError::Io(e.to_string()))?;
        let header =
            serde_json::to_vec(&self.header).map_err(|e| ContainerError::Malformed(e.to_string()))?;
        file.write_all(MAGIC)
            .and_then(|_| file.write_all(&VERSION.to_le_bytes()))
            .and_then(|_| file.write_all(&(header.len() as u64).to_le_bytes()))
            .and_then(|_| file.write_all(&header))
            .map_err(|e| ContainerError::Io(e.to_string()))?;
        for tensor in &self.data {
            let mut bytes = Vec::with_capacity(tensor.len() * 8);
            for v in tensor {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            file.write_all(&bytes)
                .map_err(|e| ContainerError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelArtifact, ContainerError> {
        let mut file = std::fs::File::open(path).map_err(|e| ContainerError::Io(e.to_string()))?;
        let mut magic = [0u8; 4];
        file.read_exact(&mut magic)
            .map_err(|e| ContainerError::Io(e.to_string()))?;
        if &magic != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        let mut word = [0u8; 4];
        file.read_exact(&mut word)
            .map_err(|e| ContainerError::Io(e.to_string()))?;
        let version = u32::from_le_bytes(word);
        if version != VERSION {
            return Err(ContainerError::BadVersion(version));
        }
        let mut len = [0u8; 8];
        file.read_exact(&mut len)
            .map_err(|e| ContainerError::Io(e.to_string()))?;
        let mut header_bytes = vec![0u8; u64::from_le_bytes(len) as usize];
        file.read_exact(&mut header_bytes)
            .map_err(|e| ContainerError::Io(e.to_string()))?;
        let header: Header = serde_json::from_slice(&header_bytes)
            .map_err(|e| ContainerError::Malformed(e.to_string()))?;
        let mut data = Vec::with_capacity(header.tensors.len());
        for meta in &header.tensors {
            let count: usize = meta.shape.iter().product();
            let mut bytes = vec![0u8; count * 8];
            file.read_exact(&mut bytes)
                .map_err(|e| ContainerError::Io(e.to_string()))?;
            let tensor: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk is 8 bytes")))
                .collect();
            data.push(tensor);
        }
        Ok(ModelArtifact { header, data })
    }

    fn expect_kind(&self, want: &str) -> Result<(), ContainerError> {
        if self.header.kind != want {
            return Err(ContainerError::WrongKind {
                got: self.header.kind.clone(),
                want: want.to_string(),
            });
        }
        Ok(())
    }

    fn required(&self, name: &str) -> Result<&[f64], ContainerError> {
        self.tensor(name)
            .ok_or_else(|| ContainerError::Malformed(format!("missing tensor {}", name)))
    }
}

/// Sparse feature sets flattened into (offsets, indices, counts) tensors.
fn push_sets(artifact: &mut ModelArtifact, prefix: &str, sets: &[crate::features::NGramSet]) {
    let mut offsets = Vec::with_capacity(sets.len() + 1);
    let mut indices = Vec::new();
    let mut counts = Vec::new();
    offsets.push(0.0);
    for set in sets {
        indices.extend(set.indices().iter().map(|&i| i as f64));
        counts.extend(set.counts().iter().map(|&c| c as f64));
        offsets.push(indices.len() as f64);
    }
    let index_count = indices.len();
    artifact.push_tensor(&format!("{}_offsets", prefix), vec![offsets.len()], offsets);
    artifact.push_tensor(&format!("{}_indices", prefix), vec![index_count], indices);
    artifact.push_tensor(&format!("{}_counts", prefix), vec![index_count], counts);
}

fn read_sets(
    artifact: &ModelArtifact,
    prefix: &str,
    mode: crate::features::FeatureMode,
    vocab_id: u64,
) -> Result<Vec<crate::features::NGramSet>, ContainerError> {
    let offsets = artifact.required(&format!("{}_offsets", prefix))?;
    let indices = artifact.required(&format!("{}_indices", prefix))?;
    let counts = artifact.required(&format!("{}_counts", prefix))?;
    let mut sets = Vec::with_capacity(offsets.len().saturating_sub(1));
    for w in offsets.windows(2) {
        let (lo, hi) = (w[0] as usize, w[1] as usize);
        let pairs = indices[lo..hi]
            .iter()
            .zip(&counts[lo..hi])
            .map(|(&i, &c)| (i as u32, c as u32));
        sets.push(crate::features::NGramSet::from_parts(pairs, mode, vocab_id));
    }
    Ok(sets)
}

pub fn save_svm(model: &SvmModel, vocab_hash: u64, vocab_id: u64, path: &Path) -> Result<(), ContainerError> {
    let mut artifact = ModelArtifact::new("svm", vocab_hash);
    artifact.set_hyper("C", serde_json::json!(model.c()));
    artifact.set_hyper("vocab_id", serde_json::json!(vocab_id));
    let (a, b) = model.platt();
    artifact.push_tensor("coef", vec![model.coefficients().len()], model.coefficients().to_vec());
    artifact.push_tensor("bias", vec![1], vec![model.bias()]);
    artifact.push_tensor("platt", vec![2], vec![a, b]);
    push_sets(&mut artifact, "support", model.support());
    artifact.save(path)
}

pub fn load_svm(path: &Path) -> Result<SvmModel, ContainerError> {
    let artifact = ModelArtifact::load(path)?;
    artifact.expect_kind("svm")?;
    let vocab_id = artifact
        .hyper_f64("vocab_id")
        .ok_or_else(|| ContainerError::Malformed("missing vocab_id".into()))? as u64;
    let support = read_sets(&artifact, "support", crate::features::FeatureMode::Set, vocab_id)?;
    let coef = artifact.required("coef")?.to_vec();
    let bias = artifact.required("bias")?[0];
    let platt = artifact.required("platt")?;
    let c = artifact
        .hyper_f64("C")
        .ok_or_else(|| ContainerError::Malformed("missing C".into()))?;
    Ok(SvmModel::from_raw(
        support, coef, bias, platt[0], platt[1], c, vocab_id,
    ))
}

pub fn save_nb(model: &NbModel, vocab_hash: u64, path: &Path) -> Result<(), ContainerError> {
    let mut artifact = ModelArtifact::new("nb", vocab_hash);
    let (log_on, log_off, off_sum, vocab_id) = model.parts();
    artifact.set_hyper("alpha", serde_json::json!(model.alpha()));
    artifact.set_hyper("vocab_id", serde_json::json!(vocab_id));
    let v = model.vocab_size();
    let flat_on: Vec<f64> = log_on.iter().flat_map(|r| r.iter().copied()).collect();
    let flat_off: Vec<f64> = log_off.iter().flat_map(|r| r.iter().copied()).collect();
    artifact.push_tensor("log_prior", vec![2], model.log_prior().to_vec());
    artifact.push_tensor("log_on", vec![v, 2], flat_on);
    artifact.push_tensor("log_off", vec![v, 2], flat_off);
    artifact.push_tensor("off_sum", vec![2], off_sum.to_vec());
    artifact.save(path)
}

pub fn load_nb(path: &Path) -> Result<NbModel, ContainerError> {
    let artifact = ModelArtifact::load(path)?;
    artifact.expect_kind("nb")?;
    let alpha = artifact
        .hyper_f64("alpha")
        .ok_or_else(|| ContainerError::Malformed("missing alpha".into()))?;
    let vocab_id = artifact
        .hyper_f64("vocab_id")
        .ok_or_else(|| ContainerError::Malformed("missing vocab_id".into()))? as u64;
    let prior = artifact.required("log_prior")?;
    let on = artifact.required("log_on")?;
    let off = artifact.required("log_off")?;
    let off_sum = artifact.required("off_sum")?;
    let to_pairs = |flat: &[f64]| -> Vec<[f64; 2]> {
        flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    };
    Ok(NbModel::from_raw(
        [prior[0], prior[1]],
        to_pairs(on),
        to_pairs(off),
        [off_sum[0], off_sum[1]],
        alpha,
        vocab_id,
    ))
}

pub fn save_forest(model: &ForestModel, vocab_hash: u64, path: &Path) -> Result<(), ContainerError> {
    use crate::models::Node;
    let mut artifact = ModelArtifact::new("rf", vocab_hash);
    let params = model.params();
    artifact.set_hyper("trees", serde_json::json!(params.trees));
    artifact.set_hyper("min_leaf", serde_json::json!(params.min_leaf));
    artifact.set_hyper("seed", serde_json::json!(params.seed));
    artifact.set_hyper("vocab_id", serde_json::json!(model.vocab_id()));
    // Each node flattens to 5 numbers:
    // split: [0, feature, threshold, left, right]
    // leaf:  [1, positives, total, 0, 0]
    let mut tree_offsets = vec![0.0];
    let mut nodes = Vec::new();
    for tree in &model.trees {
        for node in &tree.nodes {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => nodes.extend([0.0, *feature as f64, *threshold, *left as f64, *right as f64]),
                Node::Leaf { positives, total } => {
                    nodes.extend([1.0, *positives as f64, *total as f64, 0.0, 0.0])
                }
            }
        }
        tree_offsets.push((nodes.len() / 5) as f64);
    }
    let node_count = nodes.len() / 5;
    artifact.push_tensor("tree_offsets", vec![tree_offsets.len()], tree_offsets);
    artifact.push_tensor("nodes", vec![node_count, 5], nodes);
    artifact.save(path)
}

pub fn load_forest(path: &Path) -> Result<ForestModel, ContainerError> {
    use crate::models::{Node, Tree};
    let artifact = ModelArtifact::load(path)?;
    artifact.expect_kind("rf")?;
    let params = ForestParams {
        trees: artifact
            .hyper_f64("trees")
            .ok_or_else(|| ContainerError::Malformed("missing trees".into()))? as usize,
        min_leaf: artifact
            .hyper_f64("min_leaf")
            .ok_or_else(|| ContainerError::Malformed("missing min_leaf".into()))? as usize,
        seed: artifact
            .hyper_f64("seed")
            .ok_or_else(|| ContainerError::Malformed("missing seed".into()))? as u64,
    };
    let vocab_id = artifact
        .hyper_f64("vocab_id")
        .ok_or_else(|| ContainerError::Malformed("missing vocab_id".into()))? as u64;
    let offsets = artifact.required("tree_offsets")?.to_vec();
    let flat = artifact.required("nodes")?;
    let mut trees = Vec::new();
    for w in offsets.windows(2) {
        let (lo, hi) = (w[0] as usize, w[1] as usize);
        let mut nodes = Vec::with_capacity(hi - lo);
        for row in flat[lo * 5..hi * 5].chunks_exact(5) {
            nodes.push(if row[0] == 0.0 {
                Node::Split {
                    feature: row[1] as u32,
                    threshold: row[2],
                    left: row[3] as usize,
                    right: row[4] as usize,
                }
            } else {
                Node::Leaf {
                    positives: row[1] as u32,
                    total: row[2] as u32,
                }
            });
        }
        trees.push(Tree { nodes });
    }
    Ok(ForestModel::from_raw(trees, params, vocab_id))
}

pub fn save_cnn(model: &CnnModel, vocab_hash: u64, path: &Path) -> Result<(), ContainerError> {
    let mut artifact = ModelArtifact::new("cnn", vocab_hash);
    let cfg = model.config();
    artifact.set_hyper("vocab_size", serde_json::json!(cfg.vocab_size));
    artifact.set_hyper("filters", serde_json::json!(cfg.filters));
    artifact.set_hyper("regions", serde_json::json!(cfg.regions));
    artifact.push_tensor("theta", vec![model.theta().len()], model.theta().to_vec());
    artifact.save(path)
}

pub fn load_cnn(path: &Path) -> Result<CnnModel, ContainerError> {
    let artifact = ModelArtifact::load(path)?;
    artifact.expect_kind("cnn")?;
    let vocab_size = artifact
        .hyper_f64("vocab_size")
        .ok_or_else(|| ContainerError::Malformed("missing vocab_size".into()))? as usize;
    let filters = artifact
        .hyper_f64("filters")
        .ok_or_else(|| ContainerError::Malformed("missing filters".into()))? as usize;
    let regions: Vec<usize> = artifact
        .header
        .hyper
        .get("regions")
        .and_then(|v| v.as_array())
        .ok_or_else(|| ContainerError::Malformed("missing regions".into()))?
        .iter()
        .filter_map(|v| v.as_u64().map(|x| x as usize))
        .collect();
    let theta = artifact.required("theta")?.to_vec();
    Ok(CnnModel::from_theta(
        CnnConfig::new(vocab_size, regions, filters),
        theta,
    ))
}

pub fn save_gru(model: &GruClassifier, vocab_hash: u64, path: &Path) -> Result<(), ContainerError> {
    let mut artifact = ModelArtifact::new("gru", vocab_hash);
    let cfg = model.config();
    artifact.set_hyper("vocab_size", serde_json::json!(cfg.vocab_size));
    artifact.set_hyper("embed_dim", serde_json::json!(cfg.embed_dim));
    artifact.set_hyper("hidden", serde_json::json!(cfg.hidden));
    artifact.push_tensor("theta", vec![model.theta().len()], model.theta().to_vec());
    artifact.save(path)
}

pub fn load_gru(path: &Path) -> Result<GruClassifier, ContainerError> {
    let artifact = ModelArtifact::load(path)?;
    artifact.expect_kind("gru")?;
    let get = |key: &str| -> Result<usize, ContainerError> {
        artifact
            .hyper_f64(key)
            .map(|v| v as usize)
            .ok_or_else(|| ContainerError::Malformed(format!("missing {}", key)))
    };
    let cfg = GruConfig {
        vocab_size: get("vocab_size")?,
        embed_dim: get("embed_dim")?,
        hidden: get("hidden")?,
    };
    let theta = artifact.required("theta")?.to_vec();
    Ok(GruClassifier::from_theta(cfg, theta))
}

pub fn save_lm(model: &LmModel, vocab_hash: u64, path: &Path) -> Result<(), ContainerError> {
    let mut artifact = ModelArtifact::new("lm", vocab_hash);
    let (cfg, base_vocab) = model.config();
    artifact.set_hyper("base_vocab", serde_json::json!(base_vocab));
    artifact.set_hyper("embed_dim", serde_json::json!(cfg.embed_dim));
    artifact.set_hyper("hidden", serde_json::json!(cfg.hidden));
    artifact.push_tensor("theta", vec![model.theta().len()], model.theta().to_vec());
    artifact.save(path)
}

pub fn load_lm(path: &Path) -> Result<LmModel, ContainerError> {
    let artifact = ModelArtifact::load(path)?;
    artifact.expect_kind("lm")?;
    let get = |key: &str| -> Result<usize, ContainerError> {
        artifact
            .hyper_f64(key)
            .map(|v| v as usize)
            .ok_or_else(|| ContainerError::Malformed(format!("missing {}", key)))
    };
    let cfg = LmConfig {
        embed_dim: get("embed_dim")?,
        hidden: get("hidden")?,
    };
    let theta = artifact.required("theta")?.to_vec();
    Ok(LmModel::from_theta(get("base_vocab")?, cfg, theta))
}

/// The stacker saves as three small files next to each other: both language
/// models and the logistic head.
pub fn save_stacker(
    stacker: &RnnLmStacker,
    vocab_hash: u64,
    dir: &Path,
) -> Result<(), ContainerError> {
    save_lm(&stacker.active, vocab_hash, &dir.join("lm_active.ssmc"))?;
    save_lm(&stacker.inactive, vocab_hash, &dir.join("lm_inactive.ssmc"))?;
    let mut artifact = ModelArtifact::new("logistic", vocab_hash);
    let head = &stacker.stacker;
    artifact.push_tensor("weights", vec![head.weights.len()], head.weights.clone());
    artifact.push_tensor("means", vec![head.feature_means.len()], head.feature_means.clone());
    artifact.push_tensor("scales", vec![head.feature_scales.len()], head.feature_scales.clone());
    artifact.save(&dir.join("stacker.ssmc"))
}

pub fn load_stacker(dir: &Path) -> Result<RnnLmStacker, ContainerError> {
    let active = load_lm(&dir.join("lm_active.ssmc"))?;
    let inactive = load_lm(&dir.join("lm_inactive.ssmc"))?;
    let artifact = ModelArtifact::load(&dir.join("stacker.ssmc"))?;
    artifact.expect_kind("logistic")?;
    let stacker = LogisticModel {
        weights: artifact.required("weights")?.to_vec(),
        feature_means: artifact.required("means")?.to_vec(),
        feature_scales: artifact.required("scales")?.to_vec(),
        loss_history: Vec::new(),
    };
    Ok(RnnLmStacker {
        active,
        inactive,
        stacker,
    })
}
