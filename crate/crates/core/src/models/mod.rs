//! Four classifier families behind one fit / predict contract.
//!
//! Every model standardizes its inputs with a scaler fitted on the training
//! matrix, so callers always pass raw feature values.

mod boosting;
mod forest;
mod hyper;
mod mlp;
mod tree;

pub use boosting::Boosted;
pub use forest::Forest;
pub use hyper::{
    Activation, Criterion, DecisionTreeHP, Family, GradBoostHP, HyperParams, MaxFeatures, MlpHP,
    RandomForestHP, Schedule, Solver, Splitter,
};
pub use mlp::{Layer, Network, TrainingRecord, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use tree::{entropy, gini, Tree};

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{fit_scaler, Scaler};
use crate::rng::SeedStream;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Tree(Tree),
    Forest(Forest),
    Boosted(Boosted),
    Network(Network),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub schema: u32,
    pub family: Family,
    pub hyperparams: HyperParams,
    pub seed: u64,
    pub n_features: usize,
    pub scaler: Scaler,
    pub payload: Payload,
}

fn check_training_data(x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::input("cannot fit a model on zero samples"));
    }
    if x.nrows() != y.len() {
        return Err(Error::input(format!("{} feature rows but {} labels", x.nrows(), y.len())));
    }
    if x.ncols() == 0 {
        return Err(Error::input("feature matrix has no columns"));
    }
    if let Some(i) = y.iter().position(|&v| v > 1) {
        return Err(Error::input(format!("label {} at row {i} is not binary", y[i])));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("feature matrix contains non-finite values"));
    }
    Ok(())
}

/// Fits any family; the hyperparameter variant selects it.
pub fn fit(x: ArrayView2<f64>, y: &[u8], hp: &HyperParams, seed: u64) -> Result<FittedModel> {
    check_training_data(x, y)?;
    hp.validate()?;
    let scaler = fit_scaler(x)?;
    let z = scaler.apply(x)?;
    let payload = match hp {
        HyperParams::DecisionTree(p) => {
            let data = tree::Presorted::new(z.view());
            let params = tree::GrowParams {
                max_depth: p.max_depth,
                max_features: p.max_features.count(x.ncols()),
                splitter: p.splitter,
            };
            let target = tree::Target::Class { y, criterion: p.criterion };
            let mut rng = ChaCha8Rng::seed_from_u64(SeedStream::new(seed).named("tree").value());
            Payload::Tree(tree::grow(&data, &target, None, &params, &mut rng))
        }
        HyperParams::RandomForest(p) => {
            if p.learning_rate.is_some() {
                log::warn!("random forest ignores learning_rate");
            }
            Payload::Forest(forest::fit(&tree::Presorted::new(z.view()), y, p, seed))
        }
        HyperParams::GradientBoosting(p) => Payload::Boosted(boosting::fit(&tree::Presorted::new(z.view()), y, p)),
        HyperParams::Mlp(p) => Payload::Network(mlp::fit(z.view(), y, p, seed)),
    };
    Ok(FittedModel {
        schema: MODEL_SCHEMA_VERSION,
        family: hp.family(),
        hyperparams: hp.clone(),
        seed,
        n_features: x.ncols(),
        scaler,
        payload,
    })
}

pub fn fit_decision_tree(x: ArrayView2<f64>, y: &[u8], hp: &DecisionTreeHP, seed: u64) -> Result<FittedModel> {
    fit(x, y, &HyperParams::DecisionTree(hp.clone()), seed)
}

pub fn fit_random_forest(x: ArrayView2<f64>, y: &[u8], hp: &RandomForestHP, seed: u64) -> Result<FittedModel> {
    fit(x, y, &HyperParams::RandomForest(hp.clone()), seed)
}

pub fn fit_gradient_boosting(x: ArrayView2<f64>, y: &[u8], hp: &GradBoostHP, seed: u64) -> Result<FittedModel> {
    fit(x, y, &HyperParams::GradientBoosting(hp.clone()), seed)
}

pub fn fit_mlp(x: ArrayView2<f64>, y: &[u8], hp: &MlpHP, seed: u64) -> Result<FittedModel> {
    fit(x, y, &HyperParams::Mlp(hp.clone()), seed)
}

impl FittedModel {
    fn standardize(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::input(format!(
                "model expects {} features, input has {}",
                self.n_features,
                x.ncols()
            )));
        }
        self.scaler.apply(x)
    }

    /// Probability of class "on" per row, always finite and in [0, 1].
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let z = self.standardize(x)?;
        let rows = || z.rows().into_iter().map(|r| r.to_vec());
        Ok(match &self.payload {
            Payload::Tree(t) => rows().map(|r| t.value(&r)).collect(),
            Payload::Forest(f) => rows().map(|r| f.proba(&r)).collect(),
            Payload::Boosted(b) => rows().map(|r| b.proba(&r)).collect(),
            Payload::Network(n) => n.proba_rows(z.view()),
        })
    }

    /// Labels are `proba ≥ 0.5`, except that tree leaves and forest votes
    /// split exactly in half resolve to 0.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<u8>> {
        let tie_to_off = matches!(self.payload, Payload::Tree(_) | Payload::Forest(_));
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(if tie_to_off { p > 0.5 } else { p >= 0.5 }))
            .collect())
    }

    /// Consistency of a deserialized model.
    pub fn check_schema(&self) -> Result<()> {
        let bad = |m: String| Err(Error::input(format!("invalid model file: {m}")));
        if self.schema != MODEL_SCHEMA_VERSION {
            return bad(format!("schema {} is not supported (expected {MODEL_SCHEMA_VERSION})", self.schema));
        }
        if self.family != self.hyperparams.family() {
            return bad("family tag disagrees with hyperparameters".into());
        }
        let d = self.n_features;
        if self.scaler.mean.len() != d || self.scaler.std_dev.len() != d {
            return bad("scaler dimension disagrees with n_features".into());
        }
        let trees = |ts: &[Tree]| ts.iter().try_for_each(|t| t.check(d));
        let checked = match (&self.payload, self.family) {
            (Payload::Tree(t), Family::DecisionTree) => t.check(d),
            (Payload::Forest(f), Family::RandomForest) => {
                if f.trees.is_empty() || f.trees.len() != f.tree_seeds.len() {
                    Err("forest trees and seeds disagree".to_string())
                } else {
                    trees(&f.trees)
                }
            }
            (Payload::Boosted(b), Family::GradientBoosting) => trees(&b.trees),
            (Payload::Network(n), Family::Mlp) => check_network(n, d),
            _ => Err("payload kind disagrees with family".into()),
        };
        checked.or_else(bad)
    }

    pub fn trees(&self) -> &[Tree] {
        match &self.payload {
            Payload::Tree(t) => std::slice::from_ref(t),
            Payload::Forest(f) => &f.trees,
            Payload::Boosted(b) => &b.trees,
            Payload::Network(_) => &[],
        }
    }
}

fn check_network(n: &Network, d: usize) -> std::result::Result<(), String> {
    let mut fan_in = d;
    for (l, layer) in n.layers.iter().enumerate() {
        if layer.weights.is_empty()
            || layer.weights.len() != layer.biases.len()
            || layer.weights.iter().any(|row| row.len() != fan_in)
        {
            return Err(format!("layer {l} has inconsistent dimensions"));
        }
        fan_in = layer.weights.len();
    }
    if n.layers.is_empty() || fan_in != 1 {
        return Err("network must end in a single output unit".into());
    }
    Ok(())
}
