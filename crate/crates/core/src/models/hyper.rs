use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "dt")]
    DecisionTree,
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "gb")]
    GradientBoosting,
    #[serde(rename = "mlp")]
    Mlp,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::DecisionTree,
        Family::RandomForest,
        Family::GradientBoosting,
        Family::Mlp,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            Family::DecisionTree => "dt",
            Family::RandomForest => "rf",
            Family::GradientBoosting => "gb",
            Family::Mlp => "mlp",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Family::DecisionTree => "DT",
            Family::RandomForest => "RF",
            Family::GradientBoosting => "GB",
            Family::Mlp => "MLP",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.code() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::input(format!("unknown model family `{s}` (expected dt, rf, gb or mlp)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    Best,
    Random,
}

/// Number of features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaxFeaturesRepr", into = "MaxFeaturesRepr")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Fraction(f64),
}

impl MaxFeatures {
    /// Resolved count for `d` features, always in `1..=d`.
    pub fn count(&self, d: usize) -> usize {
        let n = match *self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::Log2 => (d as f64).log2().ceil() as usize,
            MaxFeatures::Fraction(f) => (f * d as f64).floor() as usize,
        };
        n.clamp(1, d.max(1))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaxFeaturesRepr {
    Name(String),
    Fraction(f64),
}

impl TryFrom<MaxFeaturesRepr> for MaxFeatures {
    type Error = String;

    fn try_from(r: MaxFeaturesRepr) -> std::result::Result<Self, String> {
        match r {
            MaxFeaturesRepr::Name(s) => match s.as_str() {
                "all" | "none" => Ok(MaxFeatures::All),
                "sqrt" => Ok(MaxFeatures::Sqrt),
                "log2" => Ok(MaxFeatures::Log2),
                other => Err(format!("unknown max_features `{other}`")),
            },
            MaxFeaturesRepr::Fraction(f) if f > 0.0 && f <= 1.0 => Ok(MaxFeatures::Fraction(f)),
            MaxFeaturesRepr::Fraction(f) => Err(format!("max_features fraction {f} outside (0, 1]")),
        }
    }
}

impl From<MaxFeatures> for MaxFeaturesRepr {
    fn from(m: MaxFeatures) -> Self {
        match m {
            MaxFeatures::All => MaxFeaturesRepr::Name("all".into()),
            MaxFeatures::Sqrt => MaxFeaturesRepr::Name("sqrt".into()),
            MaxFeatures::Log2 => MaxFeaturesRepr::Name("log2".into()),
            MaxFeatures::Fraction(f) => MaxFeaturesRepr::Fraction(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Constant,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeHP {
    pub criterion: Criterion,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

impl Default for DecisionTreeHP {
    fn default() -> Self {
        DecisionTreeHP {
            criterion: Criterion::Gini,
            max_depth: None,
            max_features: MaxFeatures::All,
            splitter: Splitter::Best,
        }
    }
}

fn yes() -> bool {
    true
}
fn sqrt_features() -> MaxFeatures {
    MaxFeatures::Sqrt
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestHP {
    pub max_depth: Option<usize>,
    pub n_estimators: usize,
    /// Accepted for grid compatibility and ignored: bagging has no step size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default = "yes")]
    pub bootstrap: bool,
    #[serde(default = "sqrt_features")]
    pub max_features: MaxFeatures,
}

impl Default for RandomForestHP {
    fn default() -> Self {
        RandomForestHP {
            max_depth: Some(10),
            n_estimators: 100,
            learning_rate: None,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradBoostHP {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for GradBoostHP {
    fn default() -> Self {
        GradBoostHP {
            n_estimators: 100,
            max_depth: 6,
            learning_rate: 0.1,
        }
    }
}

fn default_epochs() -> usize {
    500
}
fn default_batch() -> usize {
    32
}
fn default_step() -> f64 {
    0.001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHP {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub solver: Solver,
    pub alpha: f64,
    pub learning_rate_schedule: Schedule,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_step")]
    pub learning_rate_init: f64,
}

impl Default for MlpHP {
    fn default() -> Self {
        MlpHP {
            hidden_layers: vec![18],
            activation: Activation::Relu,
            solver: Solver::Adam,
            alpha: 0.0001,
            learning_rate_schedule: Schedule::Constant,
            max_epochs: default_epochs(),
            batch_size: default_batch(),
            learning_rate_init: default_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum HyperParams {
    #[serde(rename = "dt")]
    DecisionTree(DecisionTreeHP),
    #[serde(rename = "rf")]
    RandomForest(RandomForestHP),
    #[serde(rename = "gb")]
    GradientBoosting(GradBoostHP),
    #[serde(rename = "mlp")]
    Mlp(MlpHP),
}

impl HyperParams {
    pub fn family(&self) -> Family {
        match self {
            HyperParams::DecisionTree(_) => Family::DecisionTree,
            HyperParams::RandomForest(_) => Family::RandomForest,
            HyperParams::GradientBoosting(_) => Family::GradientBoosting,
            HyperParams::Mlp(_) => Family::Mlp,
        }
    }

    pub fn default_for(family: Family) -> Self {
        match family {
            Family::DecisionTree => HyperParams::DecisionTree(DecisionTreeHP::default()),
            Family::RandomForest => HyperParams::RandomForest(RandomForestHP::default()),
            Family::GradientBoosting => HyperParams::GradientBoosting(GradBoostHP::default()),
            Family::Mlp => HyperParams::Mlp(MlpHP::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::input(m));
        match self {
            HyperParams::DecisionTree(hp) => {
                if hp.max_depth == Some(0) {
                    return bad("max_depth must be ≥ 1".into());
                }
            }
            HyperParams::RandomForest(hp) => {
                if hp.n_estimators == 0 || hp.max_depth == Some(0) {
                    return bad("random forest needs n_estimators ≥ 1 and max_depth ≥ 1".into());
                }
            }
            HyperParams::GradientBoosting(hp) => {
                if hp.max_depth == 0 || !(hp.learning_rate >= 0.0) {
                    return bad("gradient boosting needs max_depth ≥ 1 and learning_rate ≥ 0".into());
                }
            }
            HyperParams::Mlp(hp) => {
                if hp.hidden_layers.is_empty() || hp.hidden_layers.contains(&0) {
                    return bad("hidden layer sizes must be non-empty and positive".into());
                }
                if !(hp.alpha >= 0.0) || !(hp.learning_rate_init > 0.0) || hp.batch_size == 0 {
                    return bad("mlp needs alpha ≥ 0, learning_rate_init > 0, batch_size ≥ 1".into());
                }
            }
        }
        Ok(())
    }
}
