//! Declarative model configurations and how they turn into fitted forecasters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    DecisionTree, FeatureSubset, LogisticRegression, Lstm, Mlp, MultiLearner, NaiveSeasonal,
    Precision, RandomForest, SingleLearner, TrainingConfig, TreeParams,
};
use crate::series::{LagConfig, SupervisedRow};
use crate::strategy::{dirrec_fit, mimo_fit, Forecaster};

/// Learner family and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Naive,
    Logistic {
        #[serde(default = "default_logistic_lr")]
        learning_rate: f64,
        #[serde(default = "default_logistic_epochs")]
        epochs: usize,
        #[serde(default)]
        l2_penalty: f64,
    },
    Tree {
        max_depth: usize,
    },
    Forest {
        n_trees: usize,
        max_depth: usize,
    },
    Mlp {
        #[serde(flatten)]
        training: TrainingConfig,
    },
    Lstm {
        #[serde(flatten)]
        training: TrainingConfig,
        #[serde(default)]
        precision: Precision,
    },
}

fn default_logistic_lr() -> f64 {
    LogisticRegression::default().learning_rate
}

fn default_logistic_epochs() -> usize {
    LogisticRegression::default().epochs
}

fn default_lags() -> usize {
    14
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Naive => "naive",
            ModelSpec::Logistic { .. } => "logistic",
            ModelSpec::Tree { .. } => "tree",
            ModelSpec::Forest { .. } => "forest",
            ModelSpec::Mlp { .. } => "mlp",
            ModelSpec::Lstm { .. } => "lstm",
        }
    }

    /// Hyperparameter names a grid may set for `family`, besides the lags.
    pub fn keys(family: &str) -> Option<&'static [&'static str]> {
        const NET: &[&str] = &["learning_rate", "epochs", "batch_size", "hidden_units", "layers", "l2_penalty"];
        Some(match family {
            "naive" => &[],
            "logistic" => &["learning_rate", "epochs", "l2_penalty"],
            "tree" => &["max_depth"],
            "forest" => &["n_trees", "max_depth"],
            "mlp" => NET,
            "lstm" => &["learning_rate", "epochs", "batch_size", "hidden_units", "layers", "l2_penalty", "precision"],
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Naive => Ok(()),
            ModelSpec::Logistic { learning_rate, epochs, l2_penalty } => {
                if !(*learning_rate > 0.0) || *epochs == 0 || !(*l2_penalty >= 0.0) {
                    return Err(Error::Config(format!(
                        "logistic needs learning_rate > 0, epochs >= 1, l2_penalty >= 0; got {learning_rate}, {epochs}, {l2_penalty}"
                    )));
                }
                Ok(())
            }
            ModelSpec::Tree { max_depth } | ModelSpec::Forest { max_depth, .. } if *max_depth == 0 => {
                Err(Error::Config("max_depth must be >= 1".into()))
            }
            ModelSpec::Forest { n_trees: 0, .. } => Err(Error::Config("n_trees must be >= 1".into())),
            ModelSpec::Tree { .. } | ModelSpec::Forest { .. } => Ok(()),
            ModelSpec::Mlp { training } | ModelSpec::Lstm { training, .. } => training.validate(),
        }
    }
}

/// One grid point: lag depths plus a model configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(default = "default_lags")]
    pub d_y: usize,
    #[serde(default = "default_lags")]
    pub d_c: usize,
    #[serde(flatten)]
    pub model: ModelSpec,
}

impl Candidate {
    pub fn lag(&self, horizon: usize) -> Result<LagConfig> {
        LagConfig::new(self.d_y, self.d_c, horizon).map_err(|e| Error::Config(e.to_string()))
    }

    /// Compact one-line description, e.g. for leaderboards.
    pub fn label(&self) -> String {
        serde_json::to_string(self).expect("candidates serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_y == 0 || self.d_c == 0 {
            return Err(Error::Config("d_y and d_c must be >= 1".into()));
        }
        if matches!(self.model, ModelSpec::Naive) && self.d_y < 7 {
            return Err(Error::Config(format!("the naive model needs d_y >= 7, got {}", self.d_y)));
        }
        self.model.validate()
    }

    /// Trains a forecaster on `rows`. Every seeded learner draws from `seed`;
    /// horizon `h` of a DirRec ensemble uses `derive_seed(seed, &[h])`.
    pub fn fit(&self, rows: &[SupervisedRow], lag: &LagConfig, seed: u64) -> Result<Forecaster> {
        self.validate()?;
        let horizon = lag.horizon;
        let single = |make: &(dyn Fn(u64) -> SingleLearner + Sync)| -> Result<Forecaster> {
            let ens = dirrec_fit(|h| make(derive_seed(seed, &[h as u64])), rows, lag)?;
            Ok(Forecaster::DirRec(ens))
        };
        let multi = |mut model: MultiLearner| -> Result<Forecaster> {
            mimo_fit(&mut model, rows, lag)?;
            Ok(Forecaster::Mimo { model, lag: *lag })
        };
        match &self.model {
            ModelSpec::Naive => multi(MultiLearner::Naive(NaiveSeasonal::new(horizon))),
            &ModelSpec::Logistic { learning_rate, epochs, l2_penalty } => {
                single(&|_| SingleLearner::Logistic(LogisticRegression::new(learning_rate, epochs, l2_penalty)))
            }
            &ModelSpec::Tree { max_depth } => single(&|s| {
                SingleLearner::Tree(DecisionTree::new(
                    TreeParams { max_depth, features: FeatureSubset::All },
                    s,
                ))
            }),
            &ModelSpec::Forest { n_trees, max_depth } => {
                single(&|s| SingleLearner::Forest(RandomForest::new(n_trees, max_depth, s)))
            }
            ModelSpec::Mlp { training } => {
                let cfg = TrainingConfig { seed, ..training.clone() };
                multi(MultiLearner::Mlp(Mlp::new(cfg, horizon)))
            }
            ModelSpec::Lstm { training, precision } => {
                let cfg = TrainingConfig { seed, ..training.clone() };
                multi(MultiLearner::Lstm(Lstm::new(cfg, horizon).with_precision(*precision)))
            }
        }
    }
}

/// Deterministic child seed: SplitMix64 folded over the path components.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}
