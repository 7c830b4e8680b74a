mod common;

use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;

use beacon::models::*;
use common::{one_d, separable, uniform_matrix};

fn accuracy(y: &[u8], p: &[u8]) -> f64 {
    y.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

fn all_defaults() -> Vec<HyperParams> {
    Family::ALL.iter().map(|&f| HyperParams::default_for(f)).collect()
}

fn standardized(model: &FittedModel, x: ArrayView2<f64>) -> Array2<f64> {
    model.scaler.apply(x).unwrap()
}

// Pre-activations of every hidden unit, computed directly from the weights.
fn hidden_pre_activations(net: &Network, x: ArrayView2<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    for row in x.rows() {
        let mut a: Vec<f64> = row.to_vec();
        for layer in &net.layers[..net.layers.len() - 1] {
            let z: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .map(|(w, b)| w.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>() + b)
                .collect();
            out.extend(&z);
            a = z
                .iter()
                .map(|&v| match net.activation {
                    Activation::Tanh => v.tanh(),
                    Activation::Relu => v.max(0.0),
                    Activation::Logistic => 1.0 / (1.0 + (-v).exp()),
                })
                .collect();
        }
    }
    out
}

#[test]
fn mlp_gradient_matches_central_differences() {
    let h = 1e-5;
    for act in [Activation::Tanh, Activation::Relu, Activation::Logistic] {
        let x = uniform_matrix(16, 8, -2.0, 2.0, 11);
        let y: Vec<u8> = (0..16).map(|i| (i % 3 == 0) as u8).collect();
        // For relu, pick an initialization whose hidden units all sit well
        // away from zero on this fixture.
        let net = (0..1000u64)
            .map(|s| Network::init(&[8, 9, 1], act, s))
            .find(|n| act != Activation::Relu || hidden_pre_activations(n, x.view()).iter().all(|z| z.abs() > 1e-2))
            .expect("a kink-free initialization exists");

        for alpha in [0.0, 0.05] {
            let (_, grad) = net.loss_and_gradient(x.view(), &y, alpha);
            let params = net.parameters();
            assert_eq!(grad.len(), params.len());
            let mut probe = net.clone();
            let mut worst: f64 = 0.0;
            for i in 0..params.len() {
                let mut p = params.clone();
                p[i] = params[i] + h;
                probe.set_parameters(&p);
                let up = probe.loss_and_gradient(x.view(), &y, alpha).0;
                p[i] = params[i] - h;
                probe.set_parameters(&p);
                let down = probe.loss_and_gradient(x.view(), &y, alpha).0;
                let numeric = (up - down) / (2.0 * h);
                let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
            assert!(worst < 1e-4, "{act:?} alpha={alpha}: worst relative error {worst:e}");
        }
    }
}

#[test]
fn l2_penalty_is_alpha_over_two_batch_times_squared_weights() {
    let x = uniform_matrix(16, 8, -1.0, 1.0, 5);
    let y: Vec<u8> = (0..16).map(|i| (i % 2) as u8).collect();
    let net = Network::init(&[8, 18, 9, 1], Activation::Tanh, 9);
    let alpha = 0.37;
    let base = net.loss_and_gradient(x.view(), &y, 0.0).0;
    let with = net.loss_and_gradient(x.view(), &y, alpha).0;
    let sq: f64 = net.layers.iter().flat_map(|l| l.weights.iter().flatten()).map(|w| w * w).sum();
    let manual = base + alpha / (2.0 * 16.0) * sq;
    assert!((with - manual).abs() < 1e-12, "{with} vs {manual}");
}

#[test]
fn every_family_fits_the_separable_fixture() {
    let (x, y) = separable(200, 3);
    for hp in all_defaults() {
        let m = fit(x.view(), &y, &hp, 7).unwrap();
        let acc = accuracy(&y, &m.predict(x.view()).unwrap());
        assert!(acc >= 0.95, "{}: training accuracy {acc}", hp.family());
    }
}

#[test]
fn tree_depths_respect_limits() {
    let (x, y) = separable(200, 4);
    for depth in [1usize, 2, 4, 8] {
        let hps = [
            HyperParams::DecisionTree(DecisionTreeHP { max_depth: Some(depth), ..Default::default() }),
            HyperParams::RandomForest(RandomForestHP { max_depth: Some(depth), n_estimators: 25, ..Default::default() }),
            HyperParams::GradientBoosting(GradBoostHP { max_depth: depth, n_estimators: 10, learning_rate: 0.1 }),
        ];
        for hp in hps {
            let m = fit(x.view(), &y, &hp, 1).unwrap();
            assert!(!m.trees().is_empty());
            for t in m.trees() {
                assert!(t.depth() <= depth, "{}: depth {} > {depth}", hp.family(), t.depth());
            }
        }
    }
}

#[test]
fn forest_probability_is_the_vote_fraction() {
    let (x, y) = separable(200, 5);
    let hp = RandomForestHP { n_estimators: 37, max_depth: Some(4), ..Default::default() };
    let m = fit_random_forest(x.view(), &y, &hp, 2).unwrap();
    let z = standardized(&m, x.view());
    let proba = m.predict_proba(x.view()).unwrap();
    let labels = m.predict(x.view()).unwrap();
    for (i, row) in z.rows().into_iter().enumerate() {
        let row = row.to_vec();
        let votes = m.trees().iter().filter(|t| t.value(&row) > 0.5).count();
        assert_eq!(proba[i], votes as f64 / 37.0);
        assert_eq!(labels[i], u8::from(2 * votes > 37));
    }
}

#[test]
fn unanimous_forest_gives_probability_one() {
    let (x, y) = one_d();
    let m = fit_random_forest(x.view(), &vec![1; y.len()], &RandomForestHP::default(), 0).unwrap();
    assert!(m.predict_proba(x.view()).unwrap().iter().all(|&p| p == 1.0));
}

#[test]
fn single_unbootstrapped_tree_forest_equals_decision_tree() {
    let (x, y) = separable(200, 6);
    for depth in [Some(3), Some(10)] {
        let rf = RandomForestHP {
            n_estimators: 1,
            max_depth: depth,
            bootstrap: false,
            max_features: MaxFeatures::All,
            learning_rate: None,
        };
        let dt = DecisionTreeHP { max_depth: depth, ..Default::default() };
        let a = fit_random_forest(x.view(), &y, &rf, 4).unwrap();
        let b = fit_decision_tree(x.view(), &y, &dt, 4).unwrap();
        let probe = uniform_matrix(500, 8, -1.5, 1.5, 8);
        assert_eq!(a.predict(probe.view()).unwrap(), b.predict(probe.view()).unwrap());
        assert_eq!(a.trees()[0].feature, b.trees()[0].feature);
        assert_eq!(a.trees()[0].threshold, b.trees()[0].threshold);
    }
}

#[test]
fn five_hundred_trees_fit_the_one_d_fixture() {
    let (x, y) = one_d();
    let single = fit_decision_tree(x.view(), &y, &DecisionTreeHP::default(), 0).unwrap();
    assert_eq!(single.trees()[0].depth(), 1);
    assert_eq!(single.predict(x.view()).unwrap(), y);
    let hp = RandomForestHP { n_estimators: 500, max_depth: Some(10), ..Default::default() };
    let forest = fit_random_forest(x.view(), &y, &hp, 1).unwrap();
    assert_eq!(forest.predict(x.view()).unwrap(), y);
}

#[test]
fn boosting_stages_are_prefixes() {
    let (x, y) = separable(200, 7);
    let short = GradBoostHP { n_estimators: 15, max_depth: 3, learning_rate: 0.1 };
    let long = GradBoostHP { n_estimators: 40, ..short.clone() };
    let a = fit_gradient_boosting(x.view(), &y, &short, 3).unwrap();
    let b = fit_gradient_boosting(x.view(), &y, &long, 3).unwrap();
    assert_eq!(a.trees(), &b.trees()[..15]);
    let (Payload::Boosted(pa), Payload::Boosted(pb)) = (&a.payload, &b.payload) else { unreachable!() };
    for row in standardized(&a, x.view()).rows() {
        let row = row.to_vec();
        assert_eq!(pa.log_odds(&row), pb.staged_log_odds(&row, 15));
    }
}

#[test]
fn boosting_training_loss_never_increases() {
    let ds = common::short_station("Eddystone", 1, 60);
    let x = beacon::domain::FeatureSet::default().matrix(&ds.observations);
    let y = ds.labels();
    let hp = GradBoostHP { n_estimators: 60, max_depth: 3, learning_rate: 0.1 };
    let m = fit_gradient_boosting(x.view(), &y, &hp, 0).unwrap();
    let Payload::Boosted(b) = &m.payload else { unreachable!() };
    let z = standardized(&m, x.view());
    let loss = |stages: usize| -> f64 {
        z.rows()
            .into_iter()
            .zip(&y)
            .map(|(r, &t)| {
                let f = b.staged_log_odds(&r.to_vec(), stages);
                // log(1 + e^f) − t·f
                f.max(0.0) + (-f.abs()).exp().ln_1p() - f64::from(t) * f
            })
            .sum::<f64>()
            / y.len() as f64
    };
    let curve: Vec<f64> = (0..=60).map(loss).collect();
    for (s, w) in curve.windows(2).enumerate() {
        assert!(w[1] <= w[0] + 1e-12, "loss rose at stage {}: {} -> {}", s + 1, w[0], w[1]);
    }
    assert!(curve[60] < curve[0]);
}

#[test]
fn balanced_boosting_starts_at_one_half() {
    let (x, y) = one_d();
    let hp = GradBoostHP { n_estimators: 5, max_depth: 2, learning_rate: 0.1 };
    let m = fit_gradient_boosting(x.view(), &y, &hp, 0).unwrap();
    let Payload::Boosted(b) = &m.payload else { unreachable!() };
    assert_eq!(b.initial_log_odds, 0.0);
    assert_eq!(b.staged_log_odds(&[3.0], 0), 0.0);
}

#[test]
fn fitting_is_deterministic_for_every_family() {
    let (x, y) = separable(120, 8);
    for mut hp in all_defaults() {
        if let HyperParams::Mlp(p) = &mut hp {
            p.max_epochs = 30;
        }
        let a = serde_json::to_string(&fit(x.view(), &y, &hp, 99).unwrap()).unwrap();
        let b = serde_json::to_string(&fit(x.view(), &y, &hp, 99).unwrap()).unwrap();
        assert_eq!(a, b, "{}", hp.family());
    }
}

#[test]
fn model_json_round_trips_exactly() {
    let (x, y) = separable(100, 9);
    let probe = uniform_matrix(300, 8, -3.0, 3.0, 1);
    for hp in all_defaults() {
        let m = fit(x.view(), &y, &hp, 5).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: FittedModel = serde_json::from_str(&text).unwrap();
        back.check_schema().unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict_proba(probe.view()).unwrap(), m.predict_proba(probe.view()).unwrap());
    }
}

#[test]
fn dimension_mismatch_is_an_input_error() {
    let (x, y) = separable(50, 1);
    for hp in all_defaults() {
        let m = fit(x.view(), &y, &hp, 0).unwrap();
        let wrong = Array2::<f64>::zeros((3, 7));
        assert!(m.predict(wrong.view()).unwrap_err().is_input_error());
    }
}

fn fitted_models() -> Vec<FittedModel> {
    let (x, y) = separable(150, 12);
    all_defaults()
        .into_iter()
        .map(|mut hp| {
            if let HyperParams::Mlp(p) = &mut hp {
                p.max_epochs = 50;
            }
            fit(x.view(), &y, &hp, 3).unwrap()
        })
        .collect()
}

#[test]
fn probabilities_are_bounded_on_ten_thousand_inputs() {
    let probe = uniform_matrix(10_000, 8, -50.0, 50.0, 77);
    for m in fitted_models() {
        let p = m.predict_proba(probe.view()).unwrap();
        assert_eq!(p.len(), 10_000);
        assert!(p.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)), "{}", m.family);
    }
}

#[test]
fn labels_threshold_probabilities() {
    let probe = uniform_matrix(5_000, 8, -3.0, 3.0, 78);
    for m in fitted_models() {
        let p = m.predict_proba(probe.view()).unwrap();
        let l = m.predict(probe.view()).unwrap();
        for (&pi, &li) in p.iter().zip(&l) {
            if pi != 0.5 {
                assert_eq!(li == 1, pi >= 0.5, "{}: p={pi} label={li}", m.family);
            } else {
                let ties_to_off = matches!(m.family, Family::DecisionTree | Family::RandomForest);
                assert_eq!(li, u8::from(!ties_to_off));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_depth_never_exceeds_limit(seed in 0u64..1000, depth in 1usize..6, n in 10usize..80) {
        let x = uniform_matrix(n, 3, -1.0, 1.0, seed);
        let y: Vec<u8> = (0..n).map(|i| ((seed as usize + i * 7) % 3 == 0) as u8).collect();
        let hp = DecisionTreeHP { max_depth: Some(depth), splitter: Splitter::Random, ..Default::default() };
        let m = fit_decision_tree(x.view(), &y, &hp, seed).unwrap();
        prop_assert!(m.trees()[0].depth() <= depth);
        let p = m.predict_proba(x.view()).unwrap();
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
