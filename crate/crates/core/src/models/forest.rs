//! Bagged Gini trees with per-split feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hyper::{Criterion, RandomForestHP, Splitter};
use super::tree::{grow, GrowParams, Presorted, Target, Tree};
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub tree_seeds: Vec<u64>,
}

impl Forest {
    pub fn votes_on(&self, row: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.label(row) == 1).count()
    }

    /// Fraction of trees voting "on".
    pub fn proba(&self, row: &[f64]) -> f64 {
        self.votes_on(row) as f64 / self.trees.len() as f64
    }

    /// Strict majority; an even split votes 0.
    pub fn label(&self, row: &[f64]) -> u8 {
        u8::from(2 * self.votes_on(row) > self.trees.len())
    }
}

pub(crate) fn fit(data: &Presorted, y: &[u8], hp: &RandomForestHP, seed: u64) -> Forest {
    let n = data.n_samples();
    let params = GrowParams {
        max_depth: hp.max_depth,
        max_features: hp.max_features.count(data.n_features()),
        splitter: Splitter::Best,
    };
    let target = Target::Class { y, criterion: Criterion::Gini };
    let root = SeedStream::new(seed).named("forest");
    let tree_seeds: Vec<u64> = (0..hp.n_estimators as u64).map(|t| root.index(t).value()).collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            if hp.bootstrap {
                let mut weights = vec![0.0; n];
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
                grow(data, &target, Some(&weights), &params, &mut rng)
            } else {
                grow(data, &target, None, &params, &mut rng)
            }
        })
        .collect();
    Forest { trees, tree_seeds }
}
