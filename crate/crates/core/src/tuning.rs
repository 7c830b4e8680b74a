//! Exhaustive grid search scored by k-fold cross-validated accuracy.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metrics::accuracy;
use crate::models::*;
use crate::preprocess::kfold_indices;
use crate::rng::SeedStream;

pub const DEFAULT_FOLDS: usize = 10;
/// Candidates kept by a fast grid.
pub const FAST_GRID_SIZE: usize = 4;

/// Tree depth list entry: a positive integer or `"none"` for unbounded.
mod depth_list {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Depth(usize),
        Name(String),
    }

    pub fn serialize<S: Serializer>(v: &[Option<usize>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let reprs: Vec<Repr> = v
            .iter()
            .map(|d| d.map_or_else(|| Repr::Name("none".into()), Repr::Depth))
            .collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Option<usize>>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Depth(n) => Ok(Some(n)),
                Repr::Name(s) if s.eq_ignore_ascii_case("none") => Ok(None),
                Repr::Name(s) => Err(serde::de::Error::custom(format!("invalid depth `{s}`"))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionTreeGrid {
    pub criterion: Vec<Criterion>,
    #[serde(with = "depth_list")]
    pub max_depth: Vec<Option<usize>>,
    pub max_features: Vec<MaxFeatures>,
    pub splitter: Vec<Splitter>,
}

impl Default for DecisionTreeGrid {
    fn default() -> Self {
        DecisionTreeGrid {
            criterion: vec![Criterion::Gini, Criterion::Entropy],
            max_depth: vec![None, Some(2), Some(4), Some(8), Some(10)],
            max_features: vec![
                MaxFeatures::All,
                MaxFeatures::Sqrt,
                MaxFeatures::Log2,
                MaxFeatures::Fraction(0.2),
                MaxFeatures::Fraction(0.4),
                MaxFeatures::Fraction(0.6),
                MaxFeatures::Fraction(0.8),
            ],
            splitter: vec![Splitter::Best, Splitter::Random],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomForestGrid {
    pub max_depth: Vec<usize>,
    pub n_estimators: Vec<usize>,
    /// Empty by default; supplied values are enumerated but have no effect.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub learning_rate: Vec<f64>,
}

impl Default for RandomForestGrid {
    fn default() -> Self {
        RandomForestGrid {
            max_depth: vec![2, 4, 8, 10],
            n_estimators: vec![100, 200, 500],
            learning_rate: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradBoostGrid {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
}

impl Default for GradBoostGrid {
    fn default() -> Self {
        GradBoostGrid {
            n_estimators: vec![100, 200, 500],
            max_depth: vec![6, 9, 12],
            learning_rate: vec![0.1, 0.01, 0.05],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpGrid {
    pub hidden_layers: Vec<Vec<usize>>,
    pub activation: Vec<Activation>,
    pub solver: Vec<Solver>,
    pub alpha: Vec<f64>,
    pub learning_rate_schedule: Vec<Schedule>,
    /// Fixed training settings shared by every candidate.
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate_init: f64,
}

impl Default for MlpGrid {
    fn default() -> Self {
        let base = MlpHP::default();
        MlpGrid {
            hidden_layers: vec![vec![9], vec![18], vec![9, 9], vec![18, 9]],
            activation: vec![Activation::Tanh, Activation::Relu, Activation::Logistic],
            solver: vec![Solver::Sgd, Solver::Adam],
            alpha: vec![0.0001, 0.05, 1.0],
            learning_rate_schedule: vec![Schedule::Constant, Schedule::Adaptive],
            max_epochs: base.max_epochs,
            batch_size: base.batch_size,
            learning_rate_init: base.learning_rate_init,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum GridSpec {
    #[serde(rename = "dt")]
    DecisionTree(DecisionTreeGrid),
    #[serde(rename = "rf")]
    RandomForest(RandomForestGrid),
    #[serde(rename = "gb")]
    GradientBoosting(GradBoostGrid),
    #[serde(rename = "mlp")]
    Mlp(MlpGrid),
}

/// Row-major Cartesian product: the last list varies fastest.
fn product(lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &len in lens {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..len).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

impl GridSpec {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::DecisionTree => GridSpec::DecisionTree(DecisionTreeGrid::default()),
            Family::RandomForest => GridSpec::RandomForest(RandomForestGrid::default()),
            Family::GradientBoosting => GridSpec::GradientBoosting(GradBoostGrid::default()),
            Family::Mlp => GridSpec::Mlp(MlpGrid::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            GridSpec::DecisionTree(_) => Family::DecisionTree,
            GridSpec::RandomForest(_) => Family::RandomForest,
            GridSpec::GradientBoosting(_) => Family::GradientBoosting,
            GridSpec::Mlp(_) => Family::Mlp,
        }
    }

    fn list_lengths(&self) -> Vec<usize> {
        match self {
            GridSpec::DecisionTree(g) => {
                vec![g.criterion.len(), g.max_depth.len(), g.max_features.len(), g.splitter.len()]
            }
            GridSpec::RandomForest(g) => {
                let mut v = vec![g.max_depth.len(), g.n_estimators.len()];
                if !g.learning_rate.is_empty() {
                    v.push(g.learning_rate.len());
                }
                v
            }
            GridSpec::GradientBoosting(g) => vec![g.n_estimators.len(), g.max_depth.len(), g.learning_rate.len()],
            GridSpec::Mlp(g) => vec![
                g.hidden_layers.len(),
                g.activation.len(),
                g.solver.len(),
                g.alpha.len(),
                g.learning_rate_schedule.len(),
            ],
        }
    }

    pub fn size(&self) -> usize {
        self.list_lengths().iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.list_lengths().contains(&0) {
            return Err(Error::Config(format!("{} grid has an empty value list", self.family())));
        }
        self.candidates().iter().try_for_each(HyperParams::validate)
    }

    /// Every combination in enumeration order.
    pub fn candidates(&self) -> Vec<HyperParams> {
        product(&self.list_lengths())
            .into_iter()
            .map(|ix| match self {
                GridSpec::DecisionTree(g) => HyperParams::DecisionTree(DecisionTreeHP {
                    criterion: g.criterion[ix[0]],
                    max_depth: g.max_depth[ix[1]],
                    max_features: g.max_features[ix[2]],
                    splitter: g.splitter[ix[3]],
                }),
                GridSpec::RandomForest(g) => HyperParams::RandomForest(RandomForestHP {
                    max_depth: Some(g.max_depth[ix[0]]),
                    n_estimators: g.n_estimators[ix[1]],
                    learning_rate: ix.get(2).map(|&i| g.learning_rate[i]),
                    ..RandomForestHP::default()
                }),
                GridSpec::GradientBoosting(g) => HyperParams::GradientBoosting(GradBoostHP {
                    n_estimators: g.n_estimators[ix[0]],
                    max_depth: g.max_depth[ix[1]],
                    learning_rate: g.learning_rate[ix[2]],
                }),
                GridSpec::Mlp(g) => HyperParams::Mlp(MlpHP {
                    hidden_layers: g.hidden_layers[ix[0]].clone(),
                    activation: g.activation[ix[1]],
                    solver: g.solver[ix[2]],
                    alpha: g.alpha[ix[3]],
                    learning_rate_schedule: g.learning_rate_schedule[ix[4]],
                    max_epochs: g.max_epochs,
                    batch_size: g.batch_size,
                    learning_rate_init: g.learning_rate_init,
                }),
            })
            .collect()
    }
}

/// At most `keep` candidates spread evenly over the enumeration, first and
/// last included.
pub fn fast_subset(candidates: Vec<HyperParams>, keep: usize) -> Vec<HyperParams> {
    let n = candidates.len();
    if keep == 0 || n <= keep {
        return candidates;
    }
    if keep == 1 {
        return candidates.into_iter().take(1).collect();
    }
    let picks: Vec<usize> = (0..keep).map(|i| (i * (n - 1) + (keep - 1) / 2) / (keep - 1)).collect();
    candidates
        .into_iter()
        .enumerate()
        .filter(|(i, _)| picks.contains(i))
        .map(|(_, c)| c)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub hyperparams: HyperParams,
    pub mean_accuracy: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub family: Family,
    pub folds: usize,
    pub seed: u64,
    pub best_index: usize,
    pub best: HyperParams,
    pub candidates: Vec<CandidateScore>,
    /// Validation folds that contained a single class.
    pub single_class_folds: Vec<usize>,
}

impl TuneResult {
    pub fn winner_fold_scores(&self) -> &[f64] {
        &self.candidates[self.best_index].fold_scores
    }
}

#[derive(Debug, Clone)]
pub struct Search {
    pub result: TuneResult,
    /// The winner refitted on all of `x`.
    pub model: FittedModel,
}

fn take_rows(x: ArrayView2<f64>, y: &[u8], rows: &[usize]) -> (Array2<f64>, Vec<u8>) {
    (x.select(Axis(0), rows), rows.iter().map(|&i| y[i]).collect())
}

/// Cross-validates each candidate on one shared fold assignment and refits
/// the best. Ties go to the earlier candidate.
pub fn search_candidates(
    candidates: Vec<HyperParams>,
    x: ArrayView2<f64>,
    y: &[u8],
    k: usize,
    seed: u64,
) -> Result<Search> {
    let Some(family) = candidates.first().map(HyperParams::family) else {
        return Err(Error::input("grid has no candidates"));
    };
    if candidates.iter().any(|c| c.family() != family) {
        return Err(Error::input("grid mixes model families"));
    }
    if x.nrows() != y.len() {
        return Err(Error::input(format!("{} feature rows but {} labels", x.nrows(), y.len())));
    }
    let folds = kfold_indices(y.len(), k, SeedStream::new(seed).named("cv").value())?;
    let splits: Vec<_> = (0..k)
        .map(|f| {
            let (train, val): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] != f);
            (take_rows(x, y, &train), take_rows(x, y, &val))
        })
        .collect();
    let single_class_folds = splits
        .iter()
        .enumerate()
        .filter(|(_, (_, (_, yv)))| yv.iter().all(|&v| v == yv[0]))
        .map(|(f, _)| f)
        .collect();

    let fit_seed = SeedStream::new(seed).named("fit").value();
    let tasks: Vec<(usize, usize)> = (0..candidates.len()).flat_map(|c| (0..k).map(move |f| (c, f))).collect();
    let scores: Vec<f64> = tasks
        .par_iter()
        .map(|&(c, f)| {
            let ((xt, yt), (xv, yv)) = &splits[f];
            let model = fit(xt.view(), yt, &candidates[c], fit_seed)?;
            accuracy(yv, &model.predict(xv.view())?)
        })
        .collect::<Result<_>>()?;

    let scored: Vec<CandidateScore> = candidates
        .into_iter()
        .enumerate()
        .map(|(c, hyperparams)| {
            let fold_scores = scores[c * k..(c + 1) * k].to_vec();
            let mean_accuracy = fold_scores.iter().sum::<f64>() / k as f64;
            CandidateScore { hyperparams, mean_accuracy, fold_scores }
        })
        .collect();
    let best_index = scored
        .iter()
        .enumerate()
        .fold(0, |best, (i, c)| if c.mean_accuracy > scored[best].mean_accuracy { i } else { best });
    let best = scored[best_index].hyperparams.clone();
    let model = fit(x, y, &best, fit_seed)?;
    Ok(Search {
        result: TuneResult {
            family,
            folds: k,
            seed,
            best_index,
            best,
            candidates: scored,
            single_class_folds,
        },
        model,
    })
}

pub fn grid_search_cv(grid: &GridSpec, x: ArrayView2<f64>, y: &[u8], k: usize, seed: u64) -> Result<Search> {
    grid.validate()?;
    search_candidates(grid.candidates(), x, y, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_sizes() {
        assert_eq!(GridSpec::default_for(Family::Mlp).size(), 144);
        assert_eq!(GridSpec::default_for(Family::DecisionTree).size(), 140);
        assert_eq!(GridSpec::default_for(Family::RandomForest).size(), 12);
        assert_eq!(GridSpec::default_for(Family::GradientBoosting).size(), 27);
        for f in Family::ALL {
            let g = GridSpec::default_for(f);
            assert_eq!(g.candidates().len(), g.size());
        }
    }

    #[test]
    fn enumeration_is_row_major() {
        let c = GridSpec::default_for(Family::GradientBoosting).candidates();
        let HyperParams::GradientBoosting(first) = &c[0] else { panic!() };
        let HyperParams::GradientBoosting(second) = &c[1] else { panic!() };
        assert_eq!((first.n_estimators, first.max_depth, first.learning_rate), (100, 6, 0.1));
        assert_eq!((second.n_estimators, second.max_depth, second.learning_rate), (100, 6, 0.01));
    }

    #[test]
    fn fast_subset_spreads_out() {
        let all = GridSpec::default_for(Family::Mlp).candidates();
        let sub = fast_subset(all.clone(), 4);
        assert_eq!(sub.len(), 4);
        assert_eq!(sub[0], all[0]);
        assert_eq!(sub[3], all[143]);
        assert_eq!(fast_subset(all[..3].to_vec(), 4).len(), 3);
    }

    #[test]
    fn depth_lists_accept_none() {
        let g: DecisionTreeGrid = toml::from_str(r#"max_depth = ["none", 3]"#).unwrap();
        assert_eq!(g.max_depth, vec![None, Some(3)]);
        assert_eq!(g.criterion.len(), 2);
        assert!(toml::from_str::<DecisionTreeGrid>(r#"max_depth = ["deep"]"#).is_err());
        assert!(toml::from_str::<DecisionTreeGrid>("colour = [1]").is_err());
    }

    #[test]
    fn empty_list_is_rejected() {
        let g = GridSpec::GradientBoosting(GradBoostGrid { max_depth: vec![], ..Default::default() });
        assert!(g.validate().is_err());
        assert_eq!(g.size(), 0);
    }
}
