//! A single LSTM cell applied to length-one sequences, with a linear head.
//!
//! Each encoded feature row is one time step. Inputs and target are
//! standardised with training statistics, which are stored with the model.
//! Training minimises mean squared error with Adam on shuffled mini-batches
//! and keeps the weights with the best validation MAE.
//!
//! Parameters live in one flat vector:
//!
//! ```text
//! W  4H x D   input weights, gate blocks in order i, f, g, o
//! U  4H x H   recurrent weights
//! b  4H       gate biases
//! v  H        head weights
//! c  1        head bias
//! ```

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{clip_pct, ModelError, ModelKind, ModelParams, TrainedModel, TrainingMeta};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LstmSpec {
    pub hidden: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Validation MAE must drop by more than this to count as improvement.
    pub min_delta: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LstmSpec {
    fn default() -> Self {
        Self {
            hidden: 32,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 200,
            patience: 10,
            min_delta: 1e-4,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl LstmSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidSpec(m.to_string()));
        if self.hidden == 0 {
            return bad("hidden must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must be in [0, 1)");
        }
        if self.epsilon <= 0.0 {
            return bad("epsilon must be > 0");
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return bad("max_epochs and batch_size must be >= 1");
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Cell activations kept for the backward pass.
struct Step {
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmNet {
    pub input_dim: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl LstmNet {
    pub fn param_count(input_dim: usize, hidden: usize) -> usize {
        4 * hidden * input_dim + 4 * hidden * hidden + 4 * hidden + hidden + 1
    }

    /// Uniform initialisation in `±1/sqrt(H)`.
    pub fn new<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let params = (0..Self::param_count(input_dim, hidden))
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Self {
            input_dim,
            hidden,
            params,
        }
    }

    fn offsets(&self) -> (usize, usize, usize, usize, usize) {
        let (d, h) = (self.input_dim, self.hidden);
        let w = 0;
        let u = w + 4 * h * d;
        let b = u + 4 * h * h;
        let v = b + 4 * h;
        let c = v + h;
        (w, u, b, v, c)
    }

    fn step(&self, x: &[f64], h0: &[f64], c0: &[f64]) -> Step {
        let (d, hd) = (self.input_dim, self.hidden);
        let (ow, ou, ob, ov, oc) = self.offsets();
        let p = &self.params;
        let recurrent = h0.iter().any(|v| *v != 0.0);
        let mut z = vec![0.0; 4 * hd];
        for (k, zk) in z.iter_mut().enumerate() {
            let mut s = p[ob + k];
            let wrow = &p[ow + k * d..ow + (k + 1) * d];
            for (w, xv) in wrow.iter().zip(x) {
                s += w * xv;
            }
            if recurrent {
                let urow = &p[ou + k * hd..ou + (k + 1) * hd];
                for (u, hv) in urow.iter().zip(h0) {
                    s += u * hv;
                }
            }
            *zk = s;
        }
        let i: Vec<f64> = z[..hd].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[hd..2 * hd].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[2 * hd..3 * hd].iter().map(|v| v.tanh()).collect();
        let o: Vec<f64> = z[3 * hd..].iter().map(|&v| sigmoid(v)).collect();
        let c: Vec<f64> = (0..hd).map(|j| f[j] * c0[j] + i[j] * g[j]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..hd).map(|j| o[j] * tanh_c[j]).collect();
        let mut y = p[oc];
        for (vj, hj) in p[ov..ov + hd].iter().zip(&h) {
            y += vj * hj;
        }
        Step {
            i,
            f,
            g,
            o,
            c,
            tanh_c,
            h,
            y,
        }
    }

    /// Head output for one input with the given initial state.
    pub fn forward(&self, x: &[f64], h0: &[f64], c0: &[f64]) -> f64 {
        self.step(x, h0, c0).y
    }

    fn zero_state(&self) -> Vec<f64> {
        vec![0.0; self.hidden]
    }

    /// Output from a zero initial state.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let z = self.zero_state();
        self.forward(x, &z, &z)
    }

    /// Mean squared error over the batch and its analytic gradient.
    pub fn loss_and_grad(
        &self,
        xs: &[&[f64]],
        ys: &[f64],
        h0: &[f64],
        c0: &[f64],
    ) -> (f64, Vec<f64>) {
        let (d, hd) = (self.input_dim, self.hidden);
        let (ow, ou, ob, ov, oc) = self.offsets();
        let recurrent = h0.iter().any(|v| *v != 0.0);
        let n = xs.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut dz = vec![0.0; 4 * hd];
        for (x, &y) in xs.iter().zip(ys) {
            let s = self.step(x, h0, c0);
            let err = s.y - y;
            loss += err * err;
            let dy = 2.0 * err / n;
            grad[oc] += dy;
            for j in 0..hd {
                grad[ov + j] += dy * s.h[j];
                let dh = dy * self.params[ov + j];
                let d_o = dh * s.tanh_c[j];
                let dc = dh * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
                let di = dc * s.g[j];
                let dg = dc * s.i[j];
                let df = dc * c0[j];
                dz[j] = di * s.i[j] * (1.0 - s.i[j]);
                dz[hd + j] = df * s.f[j] * (1.0 - s.f[j]);
                dz[2 * hd + j] = dg * (1.0 - s.g[j] * s.g[j]);
                dz[3 * hd + j] = d_o * s.o[j] * (1.0 - s.o[j]);
            }
            debug_assert_eq!(s.c.len(), hd);
            for (k, &dzk) in dz.iter().enumerate() {
                grad[ob + k] += dzk;
                for (gw, xv) in grad[ow + k * d..ow + (k + 1) * d].iter_mut().zip(x.iter()) {
                    *gw += dzk * xv;
                }
                if recurrent {
                    for (gu, hv) in grad[ou + k * hd..ou + (k + 1) * hd].iter_mut().zip(h0) {
                        *gu += dzk * hv;
                    }
                }
            }
        }
        (loss / n, grad)
    }
}

/// Trained network plus the standardisation it was fitted under.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub net: LstmNet,
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub y_mean: f64,
    pub y_sd: f64,
}

impl LstmModel {
    fn standardise(&self, row: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (row[j] - self.x_mean[j]) / self.x_sd[j];
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut x = vec![0.0; row.len()];
        self.standardise(row, &mut x);
        self.net.predict(&x) * self.y_sd + self.y_mean
    }
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], spec: &LstmSpec) {
        self.t += 1;
        let bc1 = 1.0 - spec.beta1.powi(self.t);
        let bc2 = 1.0 - spec.beta2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = spec.beta1 * self.m[k] + (1.0 - spec.beta1) * grad[k];
            self.v[k] = spec.beta2 * self.v[k] + (1.0 - spec.beta2) * grad[k] * grad[k];
            let m_hat = self.m[k] / bc1;
            let v_hat = self.v[k] / bc2;
            params[k] -= spec.learning_rate * m_hat / (v_hat.sqrt() + spec.epsilon);
        }
    }
}

fn mae(model: &LstmModel, x: &FeatureMatrix) -> f64 {
    let total: f64 = x
        .rows()
        .zip(x.target())
        .map(|(r, t)| (clip_pct(model.predict_row(r)) - t).abs())
        .sum();
    total / x.n_rows() as f64
}

/// Trains with early stopping on `val`. An empty `val` monitors training MAE.
pub fn train_lstm(
    train: &FeatureMatrix,
    val: &FeatureMatrix,
    spec: &LstmSpec,
) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    let n = train.n_rows();
    if n == 0 {
        return Err(ModelError::EmptyTraining);
    }
    if val.n_rows() > 0 && val.columns() != train.columns() {
        return Err(ModelError::ColumnMismatch {
            expected: train.columns().to_vec(),
            actual: val.columns().to_vec(),
        });
    }
    let monitor = if val.n_rows() > 0 { val } else { train };
    let d = train.n_cols();
    let (x_mean, x_sd): (Vec<f64>, Vec<f64>) = (0..d)
        .map(|j| mean_sd((0..n).map(move |i| train.get(i, j))))
        .unzip();
    let (y_mean, y_sd) = mean_sd(train.target().iter().copied());

    let xs: Vec<Vec<f64>> = train
        .rows()
        .map(|r| (0..d).map(|j| (r[j] - x_mean[j]) / x_sd[j]).collect())
        .collect();
    let ys: Vec<f64> = train.target().iter().map(|t| (t - y_mean) / y_sd).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut model = LstmModel {
        net: LstmNet::new(d, spec.hidden, &mut rng),
        x_mean,
        x_sd,
        y_mean,
        y_sd,
    };
    let zero = model.net.zero_state();
    let mut adam = Adam::new(model.net.params.len());
    let mut best_params = model.net.params.clone();
    let mut best_mae = mae(&model, monitor);
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut val_trace = Vec::new();
    let mut train_trace = Vec::new();
    let mut epochs_run = 0;

    for epoch in 0..spec.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(spec.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<f64> = batch.iter().map(|&i| ys[i]).collect();
            let (loss, grad) = model.net.loss_and_grad(&bx, &by, &zero, &zero);
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    detail: format!("batch loss {loss}"),
                });
            }
            adam.update(&mut model.net.params, &grad, spec);
        }
        epochs_run = epoch + 1;
        let val_mae = mae(&model, monitor);
        if !val_mae.is_finite() {
            return Err(ModelError::NonFiniteLoss {
                epoch,
                detail: "validation MAE is not finite".into(),
            });
        }
        val_trace.push(val_mae);
        train_trace.push(mae(&model, train));
        if val_mae < best_mae - spec.min_delta {
            best_mae = val_mae;
            best_params.clone_from(&model.net.params);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= spec.patience {
                break;
            }
        }
    }
    model.net.params = best_params;

    Ok(TrainedModel {
        kind: ModelKind::Lstm,
        columns: train.columns().to_vec(),
        params: ModelParams::Lstm(model),
        feature_importances: None,
        meta: TrainingMeta {
            hyperparameters: serde_json::to_value(spec).expect("plain struct"),
            epochs_run: Some(epochs_run),
            val_mae_trace: val_trace,
            train_mae_trace: train_trace,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_grad(net: &LstmNet, xs: &[&[f64]], ys: &[f64], h0: &[f64], c0: &[f64]) -> Vec<f64> {
        let eps = 1e-5;
        let mut probe = net.clone();
        (0..net.params.len())
            .map(|k| {
                let orig = probe.params[k];
                probe.params[k] = orig + eps;
                let up = probe.loss_and_grad(xs, ys, h0, c0).0;
                probe.params[k] = orig - eps;
                let down = probe.loss_and_grad(xs, ys, h0, c0).0;
                probe.params[k] = orig;
                (up - down) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = LstmNet::new(3, 4, &mut rng);
        let h0: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
        let c0: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let xs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let ys = [0.3, -1.2, 0.8, 0.0, 2.0];
        let (_, analytic) = net.loss_and_grad(&xs, &ys, &h0, &c0);
        let numeric = numeric_grad(&net, &xs, &ys, &h0, &c0);
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            assert!(rel < 1e-4, "analytic {a} numeric {n}");
        }
    }

    #[test]
    fn zero_state_skips_recurrent_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = LstmNet::new(2, 3, &mut rng);
        let z = vec![0.0; 3];
        let (_, g) = net.loss_and_grad(&[&[0.5, -0.5]], &[1.0], &z, &z);
        let (_, ou, ob, _, _) = net.offsets();
        assert!(g[ou..ob].iter().all(|v| *v == 0.0));
    }

    fn linear_data(n: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(0.0..100.0), rng.random_range(0.0..10.0)])
            .collect();
        let y = rows.iter().map(|r| 0.8 * r[0] + r[1]).collect();
        FeatureMatrix::from_rows(&["resistance_lag1", "x"], &rows, y)
    }

    #[test]
    fn learns_and_stops_early() {
        let train = linear_data(300, 1);
        let val = linear_data(100, 2);
        let spec = LstmSpec {
            max_epochs: 60,
            patience: 3,
            learning_rate: 0.01,
            ..LstmSpec::default()
        };
        let m = train_lstm(&train, &val, &spec).unwrap();
        let trace = &m.meta.val_mae_trace;
        assert_eq!(Some(trace.len()), m.meta.epochs_run);
        assert!(trace.len() <= 60);
        let best = trace.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(best < 5.0, "best val MAE {best}");
        // Kept weights reproduce the best traced score.
        let ModelParams::Lstm(inner) = &m.params else { unreachable!() };
        assert!((mae(inner, &val) - best).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let train = linear_data(80, 3);
        let val = linear_data(20, 4);
        let spec = LstmSpec { max_epochs: 5, seed: 9, ..LstmSpec::default() };
        assert_eq!(train_lstm(&train, &val, &spec).unwrap(), train_lstm(&train, &val, &spec).unwrap());
    }

    #[test]
    fn non_finite_input_is_reported() {
        let rows = vec![vec![1.0, f64::NAN], vec![2.0, 1.0]];
        let x = FeatureMatrix::from_rows(&["resistance_lag1", "x"], &rows, vec![1.0, 2.0]);
        let err = train_lstm(&x, &x, &LstmSpec { max_epochs: 2, ..LstmSpec::default() }).unwrap_err();
        assert!(matches!(err, ModelError::NonFiniteLoss { .. }));
    }

    #[test]
    fn spec_validation() {
        assert!(LstmSpec { hidden: 0, ..LstmSpec::default() }.validate().is_err());
        assert!(LstmSpec { beta1: 1.0, ..LstmSpec::default() }.validate().is_err());
        assert!(LstmSpec::default().validate().is_ok());
    }
}
