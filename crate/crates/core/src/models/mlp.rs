//! Fully connected network with one logistic output unit.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::boosting::sigmoid;
use super::hyper::{Activation, MlpHP, Schedule, Solver};
use crate::rng::SeedStream;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;
const IMPROVEMENT_TOL: f64 = 1e-4;
const STALL_EPOCHS: usize = 2;
const SCHEDULE_DIVISOR: f64 = 5.0;
const CONVERGENCE_TOL: f64 = 1e-6;
const MIN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `weights[out][in]`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub epochs: usize,
    pub final_loss: f64,
    pub final_learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub activation: Activation,
    pub layers: Vec<Layer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingRecord>,
}

fn activate(act: Activation, z: f64) -> f64 {
    match act {
        Activation::Tanh => z.tanh(),
        Activation::Relu => z.max(0.0),
        Activation::Logistic => sigmoid(z),
    }
}

/// Derivative expressed through the activation's output.
fn derivative(act: Activation, a: f64) -> f64 {
    match act {
        Activation::Tanh => 1.0 - a * a,
        Activation::Relu => f64::from(u8::from(a > 0.0)),
        Activation::Logistic => a * (1.0 - a),
    }
}

/// Binary cross-entropy from a logit, without forming log(0).
fn bce(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

/// Flat parameter layout: per layer, weights row-major then biases.
struct Flat<'a> {
    sizes: &'a [usize],
    act: Activation,
}

impl Flat<'_> {
    fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn is_weight(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.n_params());
        for w in self.sizes.windows(2) {
            mask.extend(std::iter::repeat_n(true, w[0] * w[1]));
            mask.extend(std::iter::repeat_n(false, w[1]));
        }
        mask
    }

    /// Fills `acts[l]` with the input to layer `l` and returns the output logit.
    fn forward(&self, params: &[f64], x: &[f64], acts: &mut [Vec<f64>]) -> f64 {
        acts[0].copy_from_slice(x);
        let n_layers = self.sizes.len() - 1;
        let mut off = 0;
        let mut logit = 0.0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, rest) = params[off..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            let (before, after) = acts.split_at_mut(l + 1);
            let input = &before[l];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                if l + 1 == n_layers {
                    logit = z;
                } else {
                    after[0][o] = activate(self.act, z);
                }
            }
            off += n_in * n_out + n_out;
        }
        logit
    }

    /// Mean loss over `rows` plus (alpha / 2B)·Σw², gradient added into `grad`.
    fn batch(
        &self,
        params: &[f64],
        x: &[f64],
        y: &[u8],
        rows: &[usize],
        alpha: f64,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let d = self.sizes[0];
        let bsz = rows.len() as f64;
        let n_layers = self.sizes.len() - 1;
        let mut loss = 0.0;
        for &i in rows {
            let z = self.forward(params, &x[i * d..(i + 1) * d], &mut ws.acts);
            let t = f64::from(y[i]);
            loss += bce(z, t);
            ws.delta[n_layers][0] = (sigmoid(z) - t) / bsz;
            let mut off = self.n_params();
            for l in (0..n_layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                off -= n_in * n_out + n_out;
                let (lower, upper) = ws.delta.split_at_mut(l + 1);
                let delta = &upper[0];
                let input = &ws.acts[l];
                for o in 0..n_out {
                    let g = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                    for (gi, a) in g.iter_mut().zip(input) {
                        *gi += delta[o] * a;
                    }
                    grad[off + n_in * n_out + o] += delta[o];
                }
                if l > 0 {
                    let back = &mut lower[l];
                    for (i, bi) in back.iter_mut().enumerate() {
                        let s: f64 = (0..n_out).map(|o| params[off + o * n_in + i] * delta[o]).sum();
                        *bi = s * derivative(self.act, input[i]);
                    }
                }
            }
        }
        let mut penalty = 0.0;
        for ((p, g), &is_w) in params.iter().zip(grad.iter_mut()).zip(&ws.mask) {
            if is_w {
                penalty += p * p;
                *g += alpha / bsz * p;
            }
        }
        loss / bsz + alpha / (2.0 * bsz) * penalty
    }
}

struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
    mask: Vec<bool>,
}

impl Workspace {
    fn new(flat: &Flat) -> Self {
        let n = flat.sizes.len();
        Workspace {
            acts: flat.sizes[..n - 1].iter().map(|&s| vec![0.0; s]).collect(),
            delta: flat.sizes.iter().map(|&s| vec![0.0; s]).collect(),
            mask: flat.is_weight(),
        }
    }
}

fn flatten_rows(x: ArrayView2<f64>) -> Vec<f64> {
    x.rows().into_iter().flat_map(|r| r.to_vec()).collect()
}

impl Network {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.weights.first().map_or(0, Vec::len)).collect();
        s.push(1);
        s
    }

    /// Glorot-uniform weights and biases, one seed stream per layer.
    pub fn init(sizes: &[usize], activation: Activation, seed: u64) -> Self {
        let root = SeedStream::new(seed).named("mlp-init");
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let mut rng = root.index(l as u64).rng();
                let weights = (0..n_out)
                    .map(|_| (0..n_in).map(|_| rng.random_range(-limit..limit)).collect())
                    .collect();
                let biases = (0..n_out).map(|_| rng.random_range(-limit..limit)).collect();
                Layer { weights, biases }
            })
            .collect();
        Network { activation, layers, training: None }
    }

    pub fn zeros(sizes: &[usize], activation: Activation) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Layer { weights: vec![vec![0.0; w[0]]; w[1]], biases: vec![0.0; w[1]] })
            .collect();
        Network { activation, layers, training: None }
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for layer in &self.layers {
            for row in &layer.weights {
                p.extend_from_slice(row);
            }
            p.extend_from_slice(&layer.biases);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        let mut it = p.iter().copied();
        for layer in &mut self.layers {
            for row in &mut layer.weights {
                row.iter_mut().for_each(|w| *w = it.next().expect("parameter vector too short"));
            }
            layer.biases.iter_mut().for_each(|b| *b = it.next().expect("parameter vector too short"));
        }
    }

    /// Training objective and its gradient in `parameters()` order, using
    /// all rows as one batch.
    pub fn loss_and_gradient(&self, x: ArrayView2<f64>, y: &[u8], alpha: f64) -> (f64, Vec<f64>) {
        let sizes = self.sizes();
        let flat = Flat { sizes: &sizes, act: self.activation };
        let mut ws = Workspace::new(&flat);
        let mut grad = vec![0.0; flat.n_params()];
        let rows: Vec<usize> = (0..y.len()).collect();
        let loss = flat.batch(&self.parameters(), &flatten_rows(x), y, &rows, alpha, &mut ws, &mut grad);
        (loss, grad)
    }

    /// Post-activation outputs of every hidden layer for one input row.
    pub fn hidden_activations(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let sizes = self.sizes();
        let flat = Flat { sizes: &sizes, act: self.activation };
        let mut ws = Workspace::new(&flat);
        flat.forward(&self.parameters(), row, &mut ws.acts);
        ws.acts.split_off(1)
    }

    pub fn proba_rows(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let sizes = self.sizes();
        let flat = Flat { sizes: &sizes, act: self.activation };
        let mut ws = Workspace::new(&flat);
        let params = self.parameters();
        x.rows()
            .into_iter()
            .map(|r| {
                let row = r.to_vec();
                sigmoid(flat.forward(&params, &row, &mut ws.acts))
            })
            .collect()
    }
}

pub(crate) fn fit(x: ArrayView2<f64>, y: &[u8], hp: &MlpHP, seed: u64) -> Network {
    let mut sizes = vec![x.ncols()];
    sizes.extend(&hp.hidden_layers);
    sizes.push(1);
    let mut net = Network::init(&sizes, hp.activation, seed);
    let flat = Flat { sizes: &sizes, act: hp.activation };
    let mut ws = Workspace::new(&flat);
    let data = flatten_rows(x);
    let n = y.len();

    let mut params = net.parameters();
    let mut grad = vec![0.0; params.len()];
    let (mut m, mut v) = (vec![0.0; params.len()], vec![0.0; params.len()]);
    let mut step = 0i32;
    let mut lr = hp.learning_rate_init;
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle = SeedStream::new(seed).named("mlp-shuffle").rng();
    let (mut best, mut previous, mut stalled) = (f64::INFINITY, f64::INFINITY, 0);
    let mut epochs = 0;
    let mut epoch_loss = f64::NAN;

    while epochs < hp.max_epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for rows in order.chunks(hp.batch_size) {
            let loss = flat.batch(&params, &data, y, rows, hp.alpha, &mut ws, &mut grad);
            total += loss * rows.len() as f64;
            match hp.solver {
                Solver::Sgd => params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= lr * g),
                Solver::Adam => {
                    step += 1;
                    let c1 = 1.0 - ADAM_BETA1.powi(step);
                    let c2 = 1.0 - ADAM_BETA2.powi(step);
                    for k in 0..params.len() {
                        m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * grad[k];
                        v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
                        params[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPSILON);
                    }
                }
            }
        }
        epochs += 1;
        epoch_loss = total / n as f64;
        if !epoch_loss.is_finite() || (previous - epoch_loss).abs() < CONVERGENCE_TOL {
            break;
        }
        previous = epoch_loss;
        if hp.learning_rate_schedule == Schedule::Adaptive {
            if epoch_loss > best - IMPROVEMENT_TOL {
                stalled += 1;
                if stalled >= STALL_EPOCHS {
                    lr /= SCHEDULE_DIVISOR;
                    stalled = 0;
                    if lr < MIN_STEP {
                        break;
                    }
                }
            } else {
                stalled = 0;
            }
        }
        best = best.min(epoch_loss);
    }

    net.set_parameters(&params);
    net.training = Some(TrainingRecord {
        epochs,
        final_loss: epoch_loss,
        final_learning_rate: lr,
        adam_beta1: ADAM_BETA1,
        adam_beta2: ADAM_BETA2,
        adam_epsilon: ADAM_EPSILON,
    });
    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn zero_network_is_undecided() {
        let net = Network::zeros(&[3, 4, 1], Activation::Relu);
        let x = Array2::from_shape_vec((2, 3), vec![1.0, -2.0, 3.0, 0.0, 5.0, -1.0]).unwrap();
        assert_eq!(net.proba_rows(x.view()), vec![0.5, 0.5]);
    }

    #[test]
    fn tanh_of_zero_input_is_zero() {
        let mut net = Network::init(&[3, 5, 1], Activation::Tanh, 1);
        net.layers[0].biases.iter_mut().for_each(|b| *b = 0.0);
        assert!(net.hidden_activations(&[0.0; 3])[0].iter().all(|&a| a == 0.0));
    }

    #[test]
    fn penalty_excludes_biases() {
        let net = Network::init(&[2, 3, 1], Activation::Logistic, 5);
        let x = Array2::from_shape_vec((4, 2), vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8]).unwrap();
        let y = [0, 1, 1, 0];
        let (plain, _) = net.loss_and_gradient(x.view(), &y, 0.0);
        let (reg, _) = net.loss_and_gradient(x.view(), &y, 0.5);
        let sq: f64 = net.layers.iter().flat_map(|l| l.weights.iter().flatten()).map(|w| w * w).sum();
        assert!((reg - plain - 0.5 / 8.0 * sq).abs() < 1e-12);
    }

    #[test]
    fn bce_is_stable() {
        assert!((bce(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(bce(800.0, 0.0).is_finite());
        assert!(bce(-800.0, 0.0) < 1e-300);
    }
}
