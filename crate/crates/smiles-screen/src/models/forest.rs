//! Random forest on count-mode n-gram vectors: bootstrap bagging, Gini
//! splits over sqrt(F) sampled feature candidates, growth to purity or the
//! minimum leaf size.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_binary_labels, ModelError, ProbClassifier};
use crate::features::NGramSet;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 200,
            min_leaf: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        /// Samples with count <= threshold go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        positives: u32,
        total: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf_probability(&self, set: &NGramSet) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { positives, total } => {
                    return *positives as f64 / *total as f64;
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if (set.count(*feature) as f64) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    pub(crate) trees: Vec<Tree>,
    params: ForestParams,
    vocab_id: u64,
}

impl ForestModel {
    pub fn params(&self) -> ForestParams {
        self.params
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub(crate) fn from_raw(trees: Vec<Tree>, params: ForestParams, vocab_id: u64) -> ForestModel {
        ForestModel {
            trees,
            params,
            vocab_id,
        }
    }

    pub(crate) fn vocab_id(&self) -> u64 {
        self.vocab_id
    }
}

impl ProbClassifier for ForestModel {
    fn predict_proba(&self, features: &[NGramSet]) -> Result<Vec<f64>, ModelError> {
        features
            .iter()
            .map(|set| {
                if set.vocab_id() != self.vocab_id {
                    return Err(ModelError::VocabularyMismatch(
                        self.vocab_id,
                        set.vocab_id(),
                    ));
                }
                let sum: f64 = self.trees.iter().map(|t| t.leaf_probability(set)).sum();
                Ok(sum / self.trees.len() as f64)
            })
            .collect()
    }
}

/// Columns are addressed through a content-derived order (sorted by their
/// sparse value signature over the training samples), so the realized trees
/// do not depend on how the vocabulary happened to number the grams. Ties in
/// the signature are between identical columns, which predict identically.
fn content_column_order(sets: &[NGramSet], rows: &[usize], vocab_size: usize) -> Vec<u32> {
    let mut signature: Vec<Vec<(u32, u32)>> = vec![Vec::new(); vocab_size];
    for (local, &r) in rows.iter().enumerate() {
        let set = &sets[r];
        for (&idx, &count) in set.indices().iter().zip(set.counts()) {
            if (idx as usize) < vocab_size {
                signature[idx as usize].push((local as u32, count));
            }
        }
    }
    let mut order: Vec<u32> = (0..vocab_size as u32).collect();
    order.sort_by(|&a, &b| {
        signature[a as usize]
            .cmp(&signature[b as usize])
            .then(a.cmp(&b))
    });
    order
}

struct TreeBuilder<'a> {
    sets: &'a [NGramSet],
    labels: &'a [u8],
    rows: &'a [usize],
    column_order: &'a [u32],
    candidates_per_split: usize,
    min_leaf: usize,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

impl TreeBuilder<'_> {
    /// samples are indices into `rows` space (bootstrap may repeat them).
    fn grow(&self, samples: Vec<usize>, nodes: &mut Vec<Node>, rng: &mut ChaCha8Rng) -> usize {
        let total = samples.len() as f64;
        let positives = samples
            .iter()
            .filter(|&&s| self.labels[self.rows[s]] == 1)
            .count() as f64;
        let node_id = nodes.len();
        nodes.push(Node::Leaf {
            positives: positives as u32,
            total: total as u32,
        });
        if positives == 0.0 || positives == total || samples.len() < 2 * self.min_leaf {
            return node_id;
        }

        // sqrt(F) candidate features, sampled without replacement in
        // content order.
        let f = self.column_order.len();
        let k = self.candidates_per_split.min(f);
        let mut positions: Vec<usize> = Vec::with_capacity(k);
        // partial Fisher-Yates over 0..f
        let mut pool: Vec<usize> = (0..f).collect();
        for slot in 0..k {
            let pick = rng.gen_range(slot..f);
            pool.swap(slot, pick);
            positions.push(pool[slot]);
        }
        positions.sort_unstable();

        let parent_gini = gini(positives, total);
        let mut best: Option<(f64, usize, f64)> = None; // (gain, position, threshold)
        for &pos in &positions {
            let feature = self.column_order[pos];
            let mut values: Vec<(f64, u8)> = samples
                .iter()
                .map(|&s| {
                    (
                        self.sets[self.rows[s]].count(feature) as f64,
                        self.labels[self.rows[s]],
                    )
                })
                .collect();
            values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut left_pos = 0.0;
            let mut left_n = 0.0;
            let mut i = 0;
            while i < values.len() {
                // advance over one distinct value
                let v = values[i].0;
                while i < values.len() && values[i].0 == v {
                    left_pos += (values[i].1 == 1) as u32 as f64;
                    left_n += 1.0;
                    i += 1;
                }
                if i == values.len() {
                    break;
                }
                let threshold = (v + values[i].0) / 2.0;
                let right_n = total - left_n;
                if (left_n as usize) < self.min_leaf || (right_n as usize) < self.min_leaf {
                    continue;
                }
                let right_pos = positives - left_pos;
                let weighted = (left_n * gini(left_pos, left_n)
                    + right_n * gini(right_pos, right_n))
                    / total;
                let gain = parent_gini - weighted;
                let better = match best {
                    None => gain > 1e-12,
                    // ties: lowest content position, then lowest threshold
                    Some((g, p, t)) => {
                        gain > g + 1e-12
                            || ((gain - g).abs() <= 1e-12 && (pos, threshold) < (p, t))
                    }
                };
                if better {
                    best = Some((gain, pos, threshold));
                }
            }
        }

        let Some((_, pos, threshold)) = best else {
            return node_id;
        };
        let feature = self.column_order[pos];
        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&s| (self.sets[self.rows[s]].count(feature) as f64) <= threshold);
        let left = self.grow(left_samples, nodes, rng);
        let right = self.grow(right_samples, nodes, rng);
        nodes[node_id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        node_id
    }
}

/// Fits a random forest on count-mode features restricted to `rows`.
pub fn rf_fit_subset(
    sets: &[NGramSet],
    labels: &[u8],
    rows: &[usize],
    vocab_size: usize,
    params: ForestParams,
) -> Result<ForestModel, ModelError> {
    let sub_labels: Vec<u8> = rows.iter().map(|&r| labels[r]).collect();
    check_binary_labels(&sub_labels, rows.len())?;
    if params.trees == 0 || params.min_leaf == 0 {
        return Err(ModelError::Numerical(
            "trees and min_leaf must be positive".into(),
        ));
    }
    let vocab_id = sets[rows[0]].vocab_id();
    let column_order = content_column_order(sets, rows, vocab_size);
    let candidates = (vocab_size as f64).sqrt().ceil() as usize;
    let builder = TreeBuilder {
        sets,
        labels,
        rows,
        column_order: &column_order,
        candidates_per_split: candidates.max(1),
        min_leaf: params.min_leaf,
    };

    let n = rows.len();
    let mut trees = Vec::with_capacity(params.trees);
    for t in 0..params.trees {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[t as u64]));
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut nodes = Vec::new();
        builder.grow(bootstrap, &mut nodes, &mut rng);
        trees.push(Tree { nodes });
    }
    Ok(ForestModel {
        trees,
        params,
        vocab_id,
    })
}

pub fn rf_fit(
    sets: &[NGramSet],
    labels: &[u8],
    vocab_size: usize,
    params: ForestParams,
) -> Result<ForestModel, ModelError> {
    let rows: Vec<usize> = (0..sets.len()).collect();
    rf_fit_subset(sets, labels, &rows, vocab_size, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMode;

    fn counts_of(pairs: &[(u32, u32)]) -> NGramSet {
        NGramSet::from_parts(pairs.iter().copied(), FeatureMode::Count, 5)
    }

    #[test]
    fn forest_is_deterministic_given_seed() {
        let sets: Vec<NGramSet> = (0..20)
            .map(|i| counts_of(&[(i % 4, 1 + i % 3), (4 + i % 2, 1)]))
            .collect();
        let labels: Vec<u8> = (0..20).map(|i| (i % 4 < 2) as u8).collect();
        let params = ForestParams {
            trees: 25,
            min_leaf: 1,
            seed: 9,
        };
        let a = rf_fit(&sets, &labels, 8, params).unwrap();
        let b = rf_fit(&sets, &labels, 8, params).unwrap();
        assert_eq!(a.trees, b.trees);
        let pa = a.predict_proba(&sets).unwrap();
        let pb = b.predict_proba(&sets).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn near_pure_training_data_yields_confident_probabilities() {
        // One feature decides the label outright.
        let sets: Vec<NGramSet> = (0..16)
            .map(|i| {
                if i < 8 {
                    counts_of(&[(0, 2)])
                } else {
                    counts_of(&[(1, 1)])
                }
            })
            .collect();
        let labels: Vec<u8> = (0..16).map(|i| (i < 8) as u8).collect();
        let model = rf_fit(
            &sets,
            &labels,
            4,
            ForestParams {
                trees: 50,
                min_leaf: 1,
                seed: 3,
            },
        )
        .unwrap();
        let probs = model.predict_proba(&sets).unwrap();
        for (p, &y) in probs.iter().zip(&labels) {
            if y == 1 {
                assert!(*p > 0.9, "p = {}", p);
            } else {
                assert!(*p < 0.1, "p = {}", p);
            }
        }
    }

    #[test]
    fn xor_of_two_grams_is_learnable() {
        // label = presence(0) xor presence(1); counts make each feature
        // individually useless but jointly decisive.
        let mut sets = Vec::new();
        let mut labels = Vec::new();
        for i in 0..120 {
            let a = (i / 2) % 2 == 0;
            let b = i % 2 == 0;
            let mut pairs = vec![(2u32, (i % 5) as u32)]; // noise feature
            if a {
                pairs.push((0, 1));
            }
            if b {
                pairs.push((1, 1));
            }
            sets.push(counts_of(&pairs));
            labels.push((a ^ b) as u8);
        }
        let model = rf_fit(
            &sets,
            &labels,
            3,
            ForestParams {
                trees: 100,
                min_leaf: 1,
                seed: 11,
            },
        )
        .unwrap();
        let probs = model.predict_proba(&sets).unwrap();
        let correct = probs
            .iter()
            .zip(&labels)
            .filter(|(&p, &y)| u8::from(p >= 0.5) == y)
            .count();
        let accuracy = correct as f64 / labels.len() as f64;
        assert!(accuracy > 0.95, "accuracy = {}", accuracy);
    }

    #[test]
    fn column_permutation_leaves_predictions_unchanged() {
        let sets: Vec<NGramSet> = (0..30)
            .map(|i| counts_of(&[(i % 5, 1 + (i % 3)), ((i + 2) % 5, 1)]))
            .collect();
        let labels: Vec<u8> = (0..30).map(|i| ((i % 5) < 2) as u8).collect();
        let params = ForestParams {
            trees: 40,
            min_leaf: 1,
            seed: 21,
        };
        let before = rf_fit(&sets, &labels, 5, params)
            .unwrap()
            .predict_proba(&sets)
            .unwrap();

        let perm = [4u32, 2, 0, 3, 1];
        let permuted: Vec<NGramSet> = sets
            .iter()
            .map(|s| {
                NGramSet::from_parts(
                    s.indices()
                        .iter()
                        .zip(s.counts())
                        .map(|(&i, &c)| (perm[i as usize], c)),
                    FeatureMode::Count,
                    5,
                )
            })
            .collect();
        let after = rf_fit(&permuted, &labels, 5, params)
            .unwrap()
            .predict_proba(&permuted)
            .unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }
}
