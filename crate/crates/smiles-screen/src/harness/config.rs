//! Flat key=value run configuration: every knob of the evaluation pipeline,
//! with defaults matching the shipped protocol.

use std::path::Path;

use super::HarnessError;
use crate::features::SymbolStride;
use crate::neural::OptimizerKind;
use crate::util::fnv1a64;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub ngram_lo: usize,
    pub ngram_hi: usize,
    pub symbol_stride: SymbolStride,
    pub train_walks: usize,
    pub predict_walks: usize,
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub clip_norm: f64,
    pub filters: usize,
    pub embedding: usize,
    pub hidden: usize,
    pub regions: Vec<usize>,
    pub lm_embedding: usize,
    pub lm_hidden: usize,
    pub svm_c_grid: Vec<f64>,
    pub nb_alpha_grid: Vec<f64>,
    pub rf_trees_grid: Vec<usize>,
    pub rf_min_leaf_grid: Vec<usize>,
    pub lr_grid: Vec<f64>,
    pub filters_grid: Vec<usize>,
    pub hidden_grid: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            outer_folds: 5,
            inner_folds: 5,
            ngram_lo: 1,
            ngram_hi: 4,
            symbol_stride: SymbolStride::One,
            train_walks: 10,
            predict_walks: 20,
            epochs: 100,
            patience: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            clip_norm: 5.0,
            filters: 64,
            embedding: 32,
            hidden: 64,
            regions: vec![5, 3],
            lm_embedding: 16,
            lm_hidden: 24,
            svm_c_grid: vec![0.1, 1.0, 10.0, 100.0],
            nb_alpha_grid: vec![0.5, 1.0],
            rf_trees_grid: vec![100, 200],
            rf_min_leaf_grid: vec![1, 2],
            lr_grid: vec![1e-3, 3e-4],
            filters_grid: vec![32, 64],
            hidden_grid: vec![32, 64],
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .map(|part| {
            part.trim().parse::<T>().map_err(|_| HarnessError::BadConfig {
                key: key.to_string(),
                value: value.to_string(),
            })
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, HarnessError> {
    value.trim().parse::<T>().map_err(|_| HarnessError::BadConfig {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment; unknown keys are
    /// errors so typos never silently fall back to defaults.
    pub fn parse(text: &str) -> Result<RunConfig, HarnessError> {
        let mut cfg = RunConfig::default();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::BadConfig {
                key: line.to_string(),
                value: "missing '='".to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "outer_folds" => cfg.outer_folds = parse_one(value, key)?,
                "inner_folds" => cfg.inner_folds = parse_one(value, key)?,
                "ngram_lo" => cfg.ngram_lo = parse_one(value, key)?,
                "ngram_hi" => cfg.ngram_hi = parse_one(value, key)?,
                "symbol_stride" => {
                    cfg.symbol_stride = match value {
                        "1" => SymbolStride::One,
                        "2" => SymbolStride::Two,
                        _ => {
                            return Err(HarnessError::BadConfig {
                                key: key.to_string(),
                                value: value.to_string(),
                            })
                        }
                    }
                }
                "train_walks" => cfg.train_walks = parse_one(value, key)?,
                "predict_walks" => cfg.predict_walks = parse_one(value, key)?,
                "epochs" => cfg.epochs = parse_one(value, key)?,
                "patience" => cfg.patience = parse_one(value, key)?,
                "batch_size" => cfg.batch_size = parse_one(value, key)?,
                "learning_rate" => cfg.learning_rate = parse_one(value, key)?,
                "optimizer" => {
                    cfg.optimizer = match value {
                        "adam" => OptimizerKind::Adam,
                        "sgd" => OptimizerKind::Sgd,
                        _ => {
                            return Err(HarnessError::BadConfig {
                                key: key.to_string(),
                                value: value.to_string(),
                            })
                        }
                    }
                }
                "clip_norm" => cfg.clip_norm = parse_one(value, key)?,
                "filters" => cfg.filters = parse_one(value, key)?,
                "embedding" => cfg.embedding = parse_one(value, key)?,
                "hidden" => cfg.hidden = parse_one(value, key)?,
                "regions" => cfg.regions = parse_list(value, key)?,
                "lm_embedding" => cfg.lm_embedding = parse_one(value, key)?,
                "lm_hidden" => cfg.lm_hidden = parse_one(value, key)?,
                "svm_c_grid" => cfg.svm_c_grid = parse_list(value, key)?,
                "nb_alpha_grid" => cfg.nb_alpha_grid = parse_list(value, key)?,
                "rf_trees_grid" => cfg.rf_trees_grid = parse_list(value, key)?,
                "rf_min_leaf_grid" => cfg.rf_min_leaf_grid = parse_list(value, key)?,
                "lr_grid" => cfg.lr_grid = parse_list(value, key)?,
                "filters_grid" => cfg.filters_grid = parse_list(value, key)?,
                "hidden_grid" => cfg.hidden_grid = parse_list(value, key)?,
                _ => {
                    return Err(HarnessError::BadConfig {
                        key: key.to_string(),
                        value: "unknown key".to_string(),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(e.to_string()))?;
        RunConfig::parse(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |key: &str, value: String| HarnessError::BadConfig {
            key: key.to_string(),
            value,
        };
        if self.outer_folds < 2 {
            return Err(bad("outer_folds", self.outer_folds.to_string()));
        }
        if self.inner_folds < 2 {
            return Err(bad("inner_folds", self.inner_folds.to_string()));
        }
        if self.ngram_lo < 1 || self.ngram_hi < self.ngram_lo {
            return Err(bad(
                "ngram range",
                format!("({}, {})", self.ngram_lo, self.ngram_hi),
            ));
        }
        if self.train_walks < 1 || self.predict_walks < 1 {
            return Err(bad(
                "walks",
                format!("{}/{}", self.train_walks, self.predict_walks),
            ));
        }
        if self.regions.is_empty() || self.regions.iter().any(|&r| r == 0) {
            return Err(bad("regions", format!("{:?}", self.regions)));
        }
        for (key, list_empty) in [
            ("svm_c_grid", self.svm_c_grid.is_empty()),
            ("nb_alpha_grid", self.nb_alpha_grid.is_empty()),
            ("rf_trees_grid", self.rf_trees_grid.is_empty()),
            ("rf_min_leaf_grid", self.rf_min_leaf_grid.is_empty()),
            ("lr_grid", self.lr_grid.is_empty()),
            ("filters_grid", self.filters_grid.is_empty()),
            ("hidden_grid", self.hidden_grid.is_empty()),
        ] {
            if list_empty {
                return Err(bad(key, "empty".to_string()));
            }
        }
        Ok(())
    }

    /// Canonical text form; the config hash in reports is the FNV of this.
    pub fn canonical_text(&self) -> String {
        fn join<T: std::fmt::Display>(items: &[T]) -> String {
            items
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
        format!(
            "outer_folds={}\ninner_folds={}\nngram_lo={}\nngram_hi={}\nsymbol_stride={}\n\
             train_walks={}\npredict_walks={}\nepochs={}\npatience={}\nbatch_size={}\n\
             learning_rate={}\noptimizer={}\nclip_norm={}\nfilters={}\nembedding={}\nhidden={}\n\
             regions={}\nlm_embedding={}\nlm_hidden={}\nsvm_c_grid={}\nnb_alpha_grid={}\n\
             rf_trees_grid={}\nrf_min_leaf_grid={}\nlr_grid={}\nfilters_grid={}\nhidden_grid={}\n",
            self.outer_folds,
            self.inner_folds,
            self.ngram_lo,
            self.ngram_hi,
            match self.symbol_stride {
                SymbolStride::One => 1,
                SymbolStride::Two => 2,
            },
            self.train_walks,
            self.predict_walks,
            self.epochs,
            self.patience,
            self.batch_size,
            self.learning_rate,
            match self.optimizer {
                OptimizerKind::Adam => "adam",
                OptimizerKind::Sgd => "sgd",
            },
            self.clip_norm,
            self.filters,
            self.embedding,
            self.hidden,
            join(&self.regions),
            self.lm_embedding,
            self.lm_hidden,
            join(&self.svm_c_grid),
            join(&self.nb_alpha_grid),
            join(&self.rf_trees_grid),
            join(&self.rf_min_leaf_grid),
            join(&self.lr_grid),
            join(&self.filters_grid),
            join(&self.hidden_grid),
        )
    }

    pub fn config_hash(&self) -> u64 {
        fnv1a64(self.canonical_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_parse() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn keys_override_defaults() {
        let cfg = RunConfig::parse(
            "epochs = 7\nsvm_c_grid = 1, 10\nregions = 4,2 # comment\nsymbol_stride=2\n",
        )
        .unwrap();
        assert_eq!(cfg.epochs, 7);
        assert_eq!(cfg.svm_c_grid, vec![1.0, 10.0]);
        assert_eq!(cfg.regions, vec![4, 2]);
        assert_eq!(cfg.symbol_stride, SymbolStride::Two);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::parse("epoochs = 7\n"),
            Err(HarnessError::BadConfig { .. })
        ));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default().config_hash();
        let b = RunConfig::parse("epochs=7").unwrap().config_hash();
        assert_ne!(a, b);
        assert_eq!(a, RunConfig::parse("").unwrap().config_hash());
    }
}
