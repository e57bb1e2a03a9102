//! Feed-forward ReLU regressor trained with Adam on `MSE + l1 * Σ|W|`.
//!
//! Hidden layers use ReLU, the single output is linear. The L1 term is
//! applied to weights only, as the subgradient `l1 * sign(W)` with
//! `sign(0) = 0`. Training keeps the snapshot with the best validation MSE
//! and stops after `early_stop_rounds` epochs without improvement.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map};

use crate::data::DatasetSpec;
use crate::error::{PidError, Result};
use crate::model::{NetworkSpec, WeightMatrix};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden widths, first to last.
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub l1: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub early_stop_rounds: usize,
    pub seed: u64,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![140, 100, 60, 20],
            lr: 5e-3,
            l1: 5e-5,
            batch: 100,
            max_epochs: 500,
            early_stop_rounds: 100,
            seed: 0,
            val_fraction: 1.0 / 3.0,
            test_fraction: 1.0 / 3.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PidError::InvalidArgument(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.l1 >= 0.0 && self.l1.is_finite()) {
            return bad(format!("l1 must be nonnegative, got {}", self.l1));
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be at least 1".into());
        }
        if self.batch == 0 || self.max_epochs == 0 {
            return bad("batch size and epoch budget must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub test_mse: f64,
    pub stopped_early: bool,
    pub seed: u64,
}

impl TrainLog {
    /// `epoch,train_mse,val_mse` with a comment header describing the run.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# inputs and targets used as generated (no standardization); seed={}; best_epoch={}; best_val_mse={}; test_mse={}",
            self.seed, self.best_epoch, self.best_val_mse, self.test_mse
        )
        .unwrap();
        out.push_str("epoch,train_mse,val_mse\n");
        for r in &self.epochs {
            writeln!(out, "{},{},{}", r.epoch, r.train_mse, r.val_mse).unwrap();
        }
        out
    }
}

/// Dense ReLU network with a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases. `widths = [d, hidden..., out]`.
    pub fn glorot<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for pair in widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| {
                rng.random_range(-limit..limit)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Mlp { weights, biases }
    }

    pub fn from_network(net: &NetworkSpec) -> Self {
        let weights: Vec<Array2<f64>> = net
            .layers()
            .iter()
            .map(|w| Array2::from_shape_vec((w.rows(), w.cols()), w.data().to_vec()).unwrap())
            .collect();
        let biases = match net.biases() {
            Some(b) => b.iter().map(|v| Array1::from(v.clone())).collect(),
            None => weights.iter().map(|w| Array1::zeros(w.ncols())).collect(),
        };
        Mlp { weights, biases }
    }

    pub fn to_network(&self) -> Result<NetworkSpec> {
        let layers = self
            .weights
            .iter()
            .map(|w| WeightMatrix::new(w.nrows(), w.ncols(), w.iter().copied().collect()))
            .collect::<Result<Vec<_>>>()?;
        NetworkSpec::new(layers)?.with_biases(self.biases.iter().map(|b| b.to_vec()).collect())
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.iter().map(|v| v.abs()).sum::<f64>())
            .sum()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let mut a = x.to_owned();
        let last = self.weights.len() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(w);
            z += b;
            if k < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        a.column(0).to_owned()
    }

    pub fn mse(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
        let pred = self.predict(x);
        let n = y.len().max(1) as f64;
        Zip::from(&pred)
            .and(&y)
            .fold(0.0, |acc, &p, &t| acc + (p - t) * (p - t))
            / n
    }

    /// `MSE + l1 * Σ|W|`.
    pub fn objective(&self, x: ArrayView2<f64>, y: ArrayView1<f64>, l1: f64) -> f64 {
        self.mse(x, y) + l1 * self.l1_norm()
    }

    /// Batch MSE and the (sub)gradient of [`objective`](Self::objective).
    pub fn gradients(&self, x: ArrayView2<f64>, y: ArrayView1<f64>, l1: f64) -> (f64, Gradients) {
        let depth = self.weights.len();
        let n = x.nrows() as f64;
        // activations[k] feeds layer k; pre[k] is layer k's pre-activation
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(depth);
        let mut pre: Vec<Array2<f64>> = Vec::with_capacity(depth);
        let mut a = x.to_owned();
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(w);
            z += b;
            activations.push(a);
            a = if k + 1 < depth {
                z.mapv(|v| v.max(0.0))
            } else {
                z.clone()
            };
            pre.push(z);
        }

        let out = pre[depth - 1].column(0);
        let mut loss = 0.0;
        let mut delta = Array2::<f64>::zeros((x.nrows(), 1));
        for i in 0..x.nrows() {
            let r = out[i] - y[i];
            loss += r * r;
            delta[[i, 0]] = 2.0 * r / n;
        }
        loss /= n;

        let mut gw = vec![Array2::zeros((0, 0)); depth];
        let mut gb = vec![Array1::zeros(0); depth];
        for k in (0..depth).rev() {
            let mut g = activations[k].t().dot(&delta);
            if l1 > 0.0 {
                Zip::from(&mut g).and(&self.weights[k]).for_each(|g, &w| {
                    if w > 0.0 {
                        *g += l1;
                    } else if w < 0.0 {
                        *g -= l1;
                    }
                });
            }
            gw[k] = g;
            gb[k] = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut next = delta.dot(&self.weights[k].t());
                Zip::from(&mut next).and(&pre[k - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = next;
            }
        }
        (
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        )
    }
}

struct Adam {
    lr: f64,
    t: i32,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl Adam {
    fn new(mlp: &Mlp, lr: f64) -> Self {
        Adam {
            lr,
            t: 0,
            m_w: mlp
                .weights
                .iter()
                .map(|w| Array2::zeros(w.raw_dim()))
                .collect(),
            v_w: mlp
                .weights
                .iter()
                .map(|w| Array2::zeros(w.raw_dim()))
                .collect(),
            m_b: mlp
                .biases
                .iter()
                .map(|b| Array1::zeros(b.raw_dim()))
                .collect(),
            v_b: mlp
                .biases
                .iter()
                .map(|b| Array1::zeros(b.raw_dim()))
                .collect(),
        }
    }

    fn step(&mut self, mlp: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let lr = self.lr;
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
        };
        for k in 0..mlp.weights.len() {
            Zip::from(&mut mlp.weights[k])
                .and(&mut self.m_w[k])
                .and(&mut self.v_w[k])
                .and(&grads.weights[k])
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut mlp.biases[k])
                .and(&mut self.m_b[k])
                .and(&mut self.v_b[k])
                .and(&grads.biases[k])
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

fn as_arrays(data: &DatasetSpec) -> (Array2<f64>, Array1<f64>) {
    let x = Array2::from_shape_vec((data.len(), data.num_features()), data.x().to_vec())
        .expect("dataset shape is validated");
    (x, Array1::from(data.y().to_vec()))
}

/// Trains on the first block of `data`, early-stops on the second and reports
/// the test MSE of the best snapshot on the third.
pub fn train_mlp(data: &DatasetSpec, cfg: &TrainConfig) -> Result<(NetworkSpec, TrainLog)> {
    cfg.validate()?;
    let split = data.split(cfg.val_fraction, cfg.test_fraction)?;
    let (x_train, y_train) = as_arrays(&split.train);
    let (x_val, y_val) = as_arrays(&split.val);
    let (x_test, y_test) = as_arrays(&split.test);

    let mut widths = vec![data.num_features()];
    widths.extend(&cfg.hidden);
    widths.push(1);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mlp = Mlp::glorot(&widths, &mut rng);
    let mut adam = Adam::new(&mlp, cfg.lr);
    let mut order: Vec<usize> = (0..split.train.len()).collect();

    let mut best = mlp.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut records = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut running = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let xb = x_train.select(Axis(0), chunk);
            let yb = y_train.select(Axis(0), chunk);
            let (loss, grads) = mlp.gradients(xb.view(), yb.view(), cfg.l1);
            if !loss.is_finite() {
                return Err(PidError::Diverged { epoch, loss });
            }
            adam.step(&mut mlp, &grads);
            running += loss * chunk.len() as f64;
        }
        let train_mse = running / order.len() as f64;
        let val_mse = mlp.mse(x_val.view(), y_val.view());
        if !val_mse.is_finite() {
            return Err(PidError::Diverged {
                epoch,
                loss: val_mse,
            });
        }
        records.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
        });
        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best = mlp.clone();
        } else if epoch - best_epoch >= cfg.early_stop_rounds {
            stopped_early = true;
            break;
        }
    }

    let test_mse = best.mse(x_test.view(), y_test.view());
    let log = TrainLog {
        epochs: records,
        best_epoch,
        best_val_mse: best_val,
        test_mse,
        stopped_early,
        seed: cfg.seed,
    };
    let mut meta = Map::new();
    meta.insert("hidden".into(), json!(cfg.hidden));
    meta.insert("lr".into(), json!(cfg.lr));
    meta.insert("l1".into(), json!(cfg.l1));
    meta.insert("seed".into(), json!(cfg.seed));
    meta.insert("best_epoch".into(), json!(best_epoch));
    meta.insert("test_mse".into(), json!(test_mse));
    if let Some(f) = data.provenance.function {
        meta.insert("function".into(), json!(format!("F{f}")));
    }
    let net = best.to_network()?.with_meta(meta);
    Ok((net, log))
}

/// Mean squared error of a single-output network over a dataset.
pub fn mse(net: &NetworkSpec, data: &DatasetSpec) -> Result<f64> {
    if net.input_dim() != data.num_features() {
        return Err(PidError::DimensionMismatch {
            expected: net.input_dim(),
            got: data.num_features(),
        });
    }
    if net.output_dim() != 1 {
        return Err(PidError::DimensionMismatch {
            expected: 1,
            got: net.output_dim(),
        });
    }
    let (x, y) = as_arrays(data);
    Ok(Mlp::from_network(net).mse(x.view(), y.view()))
}
