//! Closed sets of the shipped learners, so fitted forecasters can be
//! checkpointed without trait objects.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{
    DecisionTree, LogisticRegression, Lstm, Mlp, MultiOutputModel, NaiveSeasonal, RandomForest,
    SingleOutputModel,
};
use crate::error::Result;
use crate::series::AnchorState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingleLearner {
    Logistic(LogisticRegression),
    Tree(DecisionTree),
    Forest(RandomForest),
}

impl SingleOutputModel for SingleLearner {
    fn fit(&mut self, x: ArrayView2<'_, f64>, y: &[u8], weights: &[f64]) -> Result<()> {
        match self {
            SingleLearner::Logistic(m) => m.fit(x, y, weights),
            SingleLearner::Tree(m) => m.fit(x, y, weights),
            SingleLearner::Forest(m) => m.fit(x, y, weights),
        }
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            SingleLearner::Logistic(m) => m.predict_proba(x),
            SingleLearner::Tree(m) => m.predict_proba(x),
            SingleLearner::Forest(m) => m.predict_proba(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiLearner {
    Naive(NaiveSeasonal),
    Mlp(Mlp),
    Lstm(Lstm),
}

impl MultiLearner {
    fn inner(&self) -> &dyn MultiOutputModel {
        match self {
            MultiLearner::Naive(m) => m,
            MultiLearner::Mlp(m) => m,
            MultiLearner::Lstm(m) => m,
        }
    }
}

impl MultiOutputModel for MultiLearner {
    fn horizon(&self) -> usize {
        self.inner().horizon()
    }

    fn fit(&mut self, states: &[AnchorState], targets: &[Vec<u8>], weights: &[Vec<f64>]) -> Result<()> {
        match self {
            MultiLearner::Naive(m) => m.fit(states, targets, weights),
            MultiLearner::Mlp(m) => m.fit(states, targets, weights),
            MultiLearner::Lstm(m) => m.fit(states, targets, weights),
        }
    }

    fn predict_vector(&self, state: &AnchorState) -> Vec<f64> {
        self.inner().predict_vector(state)
    }
}
