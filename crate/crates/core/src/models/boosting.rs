//! Gradient-boosted regression trees on the logistic loss with Newton leaves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hyper::{GradBoostHP, Splitter};
use super::tree::{grow, GrowParams, Presorted, Target, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub initial_log_odds: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Boosted {
    /// Raw score after the first `stages` trees.
    pub fn staged_log_odds(&self, row: &[f64], stages: usize) -> f64 {
        self.trees[..stages.min(self.trees.len())]
            .iter()
            .fold(self.initial_log_odds, |f, t| f + self.learning_rate * t.value(row))
    }

    pub fn log_odds(&self, row: &[f64]) -> f64 {
        self.staged_log_odds(row, self.trees.len())
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.log_odds(row))
    }
}

pub(crate) fn fit(data: &Presorted, y: &[u8], hp: &GradBoostHP) -> Boosted {
    let n = y.len();
    let on = y.iter().filter(|&&v| v == 1).count() as f64;
    let p = (on / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let initial_log_odds = (p / (1.0 - p)).ln();

    let params = GrowParams {
        max_depth: Some(hp.max_depth),
        max_features: usize::MAX,
        splitter: Splitter::Best,
    };
    // The best splitter over all features never draws from this generator.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut f = vec![initial_log_odds; n];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut trees = Vec::with_capacity(hp.n_estimators);
    let mut leaf_step = vec![0.0; n];
    for _ in 0..hp.n_estimators {
        for i in 0..n {
            let p = sigmoid(f[i]);
            g[i] = f64::from(y[i]) - p;
            h[i] = p * (1.0 - p);
        }
        let tree = grow(data, &Target::Regress { g: &g, h: &h }, None, &params, &mut rng);
        data.for_each_row(|i, row| leaf_step[i] = tree.value(row));
        for i in 0..n {
            f[i] += hp.learning_rate * leaf_step[i];
        }
        trees.push(tree);
    }
    Boosted { initial_log_odds, learning_rate: hp.learning_rate, trees }
}
