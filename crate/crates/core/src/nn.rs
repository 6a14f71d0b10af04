//! Small dense networks with hand-written backprop, the training losses, Adam,
//! and JSON checkpoints.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
    /// Row-wise softmax.
    Softmax,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Sigmoid => z.mapv_inplace(sigmoid),
            Activation::Identity => {}
            Activation::Softmax => {
                for mut row in z.rows_mut() {
                    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - m).exp());
                    let s = row.sum();
                    row /= s;
                }
            }
        }
    }

    /// Gradient wrt pre-activation given the activation output `a` and the
    /// gradient `g` wrt that output.
    fn backprop(self, a: &Array2<f64>, g: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => Zip::from(a).and(g).map_collect(|&a, &g| if a > 0.0 { g } else { 0.0 }),
            Activation::Tanh => Zip::from(a).and(g).map_collect(|&a, &g| g * (1.0 - a * a)),
            Activation::Sigmoid => Zip::from(a).and(g).map_collect(|&a, &g| g * a * (1.0 - a)),
            Activation::Identity => g.clone(),
            Activation::Softmax => {
                let dot = (a * g).sum_axis(Axis(1)).insert_axis(Axis(1));
                a * &(g - &dot)
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-feature standardization applied to network inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(rows: ArrayView2<f64>) -> Normalizer {
        let n = rows.nrows().max(1) as f64;
        let mean = rows.sum_axis(Axis(0)) / n;
        let std = Array1::from_iter((0..rows.ncols()).map(|j| {
            let m = mean[j];
            let v = rows.column(j).iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            let s = v.sqrt();
            if s < 1e-8 {
                1.0
            } else {
                s
            }
        }));
        Normalizer {
            mean: mean.to_vec(),
            std: std.to_vec(),
        }
    }

    fn apply(&self, x: &mut Array2<f64>) {
        for mut row in x.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    /// One (in, out) matrix per layer.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub normalizer: Option<Normalizer>,
    pub adam: AdamState,
    pub rng_seed: u64,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m_w: Vec<Array2<f64>>,
    pub v_w: Vec<Array2<f64>>,
    pub m_b: Vec<Array1<f64>>,
    pub v_b: Vec<Array1<f64>>,
    pub t: u64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const POLYAK_RATE: f64 = 0.005;

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Grads {
    /// Weights then bias of each layer in turn, weights row-major.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite())) && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Activations of every layer from one forward pass (index 0 is the
/// normalized input).
pub struct ForwardCache {
    pub layers: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.layers.last().unwrap()
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(layer_sizes: &[usize], activations: &[Activation], rng_seed: u64) -> Result<Mlp> {
        if layer_sizes.len() < 2 || activations.len() != layer_sizes.len() - 1 || layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "{} layer sizes need {} activations and no zero widths",
                layer_sizes.len(),
                layer_sizes.len().saturating_sub(1)
            )));
        }
        let mut rng = seed::rng(rng_seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in layer_sizes.windows(2) {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            weights.push(Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-limit..limit)));
            biases.push(Array1::zeros(w[1]));
        }
        let adam = AdamState::zeros_like(&weights, &biases);
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activations: activations.to_vec(),
            weights,
            biases,
            normalizer: None,
            adam,
            rng_seed,
            step: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        if x.nrows() == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(())
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(&x)?;
        let mut input = x.to_owned();
        if let Some(n) = &self.normalizer {
            n.apply(&mut input);
        }
        let mut layers = Vec::with_capacity(self.weights.len() + 1);
        layers.push(input);
        for ((w, b), act) in self.weights.iter().zip(&self.biases).zip(&self.activations) {
            let mut z = layers.last().unwrap().dot(w);
            z += b;
            act.apply(&mut z);
            layers.push(z);
        }
        Ok(ForwardCache { layers })
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.layers.pop().unwrap())
    }

    /// Backprop of `grad_out` (gradient wrt the network output).
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Array2<f64>) -> Grads {
        let n = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); n];
        let mut gb = vec![Array1::zeros(0); n];
        let mut g = grad_out.clone();
        for l in (0..n).rev() {
            let dz = self.activations[l].backprop(&cache.layers[l + 1], &g);
            gw[l] = cache.layers[l].t().dot(&dz);
            gb[l] = dz.sum_axis(Axis(0));
            if l > 0 {
                g = dz.dot(&self.weights[l].t());
            }
        }
        Grads { weights: gw, biases: gb }
    }

    pub fn loss_value(&self, x: ArrayView2<f64>, loss: &Loss, batch: &LossBatch) -> Result<f64> {
        let out = self.forward(x)?;
        Ok(loss.evaluate(&out, batch)?.0)
    }

    pub fn loss_and_grad(&self, x: ArrayView2<f64>, loss: &Loss, batch: &LossBatch) -> Result<(f64, Grads)> {
        let cache = self.forward_cached(x)?;
        let (value, g) = loss.evaluate(cache.output(), batch)?;
        Ok((value, self.backward(&cache, &g)))
    }

    /// One Adam step on the given loss. Returns the pre-update loss.
    pub fn train_step(&mut self, x: ArrayView2<f64>, loss: &Loss, batch: &LossBatch, lr: f64) -> Result<f64> {
        let (value, grads) = self.loss_and_grad(x, loss, batch)?;
        self.step += 1;
        if !value.is_finite() || !grads.is_finite() {
            return Err(Error::Divergence { step: self.step });
        }
        self.adam_update(&grads, lr);
        Ok(value)
    }

    pub fn adam_update(&mut self, grads: &Grads, lr: f64) {
        let a = &mut self.adam;
        a.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(a.t as i32);
        let c2 = 1.0 - ADAM_BETA2.powi(a.t as i32);
        let upd = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        };
        for l in 0..self.weights.len() {
            Zip::from(&mut self.weights[l])
                .and(&mut a.m_w[l])
                .and(&mut a.v_w[l])
                .and(&grads.weights[l])
                .for_each(|p, m, v, &g| upd(p, m, v, g));
            Zip::from(&mut self.biases[l])
                .and(&mut a.m_b[l])
                .and(&mut a.v_b[l])
                .and(&grads.biases[l])
                .for_each(|p, m, v, &g| upd(p, m, v, g));
        }
    }

    /// Moves every parameter a fraction `rate` toward `source`.
    pub fn polyak_update(&mut self, source: &Mlp, rate: f64) {
        for (t, s) in self.weights.iter_mut().zip(&source.weights) {
            Zip::from(t).and(s).for_each(|t, &s| *t += rate * (s - *t));
        }
        for (t, s) in self.biases.iter_mut().zip(&source.biases) {
            Zip::from(t).and(s).for_each(|t, &s| *t += rate * (s - *t));
        }
    }

    /// Same ordering as [`Grads::flat`].
    pub fn params_flat(&self) -> Vec<f64> {
        Grads {
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        }
        .flat()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            w.iter_mut().for_each(|v| *v = it.next().unwrap());
            b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let flat2 = |v: &Vec<Array2<f64>>| v.iter().map(|w| w.iter().copied().collect()).collect();
        let flat1 = |v: &Vec<Array1<f64>>| v.iter().map(|b| b.to_vec()).collect();
        Checkpoint {
            layer_sizes: self.layer_sizes.clone(),
            activations: self.activations.clone(),
            weights: flat2(&self.weights),
            biases: flat1(&self.biases),
            optimizer_state: OptimizerState {
                m: interleave(flat2(&self.adam.m_w), flat1(&self.adam.m_b)),
                v: interleave(flat2(&self.adam.v_w), flat1(&self.adam.v_b)),
                t: self.adam.t,
            },
            rng_seed: self.rng_seed,
            step: self.step,
            normalizer: self.normalizer.clone(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Mlp> {
        let mut net = Mlp::new(&ck.layer_sizes, &ck.activations, ck.rng_seed)?;
        let n = net.weights.len();
        if ck.weights.len() != n || ck.biases.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: ck.weights.len().min(ck.biases.len()),
            });
        }
        let fill2 = |dst: &mut Array2<f64>, src: &[f64]| -> Result<()> {
            if src.len() != dst.len() {
                return Err(Error::DimensionMismatch {
                    expected: dst.len(),
                    got: src.len(),
                });
            }
            dst.iter_mut().zip(src).for_each(|(d, s)| *d = *s);
            Ok(())
        };
        let fill1 = |dst: &mut Array1<f64>, src: &[f64]| -> Result<()> {
            if src.len() != dst.len() {
                return Err(Error::DimensionMismatch {
                    expected: dst.len(),
                    got: src.len(),
                });
            }
            dst.iter_mut().zip(src).for_each(|(d, s)| *d = *s);
            Ok(())
        };
        for l in 0..n {
            fill2(&mut net.weights[l], &ck.weights[l])?;
            fill1(&mut net.biases[l], &ck.biases[l])?;
        }
        let os = &ck.optimizer_state;
        if os.m.len() == 2 * n && os.v.len() == 2 * n {
            for l in 0..n {
                fill2(&mut net.adam.m_w[l], &os.m[2 * l])?;
                fill1(&mut net.adam.m_b[l], &os.m[2 * l + 1])?;
                fill2(&mut net.adam.v_w[l], &os.v[2 * l])?;
                fill1(&mut net.adam.v_b[l], &os.v[2 * l + 1])?;
            }
            net.adam.t = os.t;
        } else if !(os.m.is_empty() && os.v.is_empty()) {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: os.m.len(),
            });
        }
        if let Some(norm) = &ck.normalizer {
            if norm.mean.len() != net.input_dim() || norm.std.len() != net.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: net.input_dim(),
                    got: norm.mean.len(),
                });
            }
        }
        net.normalizer = ck.normalizer.clone();
        net.step = ck.step;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Mlp> {
        Mlp::from_checkpoint(&serde_json::from_str(s)?)
    }
}

fn interleave(w: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    w.into_iter().zip(b).flat_map(|(w, b)| [w, b]).collect()
}

impl AdamState {
    fn zeros_like(weights: &[Array2<f64>], biases: &[Array1<f64>]) -> AdamState {
        let zw: Vec<_> = weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        let zb: Vec<_> = biases.iter().map(|b| Array1::zeros(b.len())).collect();
        AdamState {
            m_w: zw.clone(),
            v_w: zw,
            m_b: zb.clone(),
            v_b: zb,
            t: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    /// First moments, weights then bias per layer.
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

/// Serialized network. Weight matrices are (in, out), row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub optimizer_state: OptimizerState,
    pub rng_seed: u64,
    pub step: usize,
    pub normalizer: Option<Normalizer>,
}

pub fn expectile_loss(u: f64, tau: f64) -> f64 {
    let w = if u < 0.0 { 1.0 - tau } else { tau };
    w * (u * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    Mse,
    /// Asymmetric squared error on `target - prediction`.
    Expectile { tau: f64 },
    /// Squared error against `reward + gamma * (1 - terminal) * next_value`.
    TdError { gamma: f64 },
    /// Advantage-weighted negative log-likelihood of the taken action under a
    /// masked softmax over each sample's rows.
    AdvantageWeightedNll { beta: f64 },
}

pub const DEFAULT_EXPECTILE: f64 = 0.7;
pub const DEFAULT_DISCOUNT: f64 = 0.95;
pub const DEFAULT_TEMPERATURE: f64 = 3.0;
/// Upper clip on exponentiated advantages.
pub const MAX_ADVANTAGE_WEIGHT: f64 = 100.0;

impl Loss {
    /// Parses `mse`, `expectile[:tau]`, `td[:gamma]` or `awr[:beta]`.
    pub fn from_tag(tag: &str) -> Result<Loss> {
        let (name, param) = match tag.split_once(':') {
            Some((n, p)) => (n, Some(p.parse::<f64>().map_err(|_| Error::UnknownLoss(tag.to_string()))?)),
            None => (tag, None),
        };
        Ok(match name {
            "mse" if param.is_none() => Loss::Mse,
            "expectile" => Loss::Expectile {
                tau: param.unwrap_or(DEFAULT_EXPECTILE),
            },
            "td" => Loss::TdError {
                gamma: param.unwrap_or(DEFAULT_DISCOUNT),
            },
            "awr" => Loss::AdvantageWeightedNll {
                beta: param.unwrap_or(DEFAULT_TEMPERATURE),
            },
            _ => return Err(Error::UnknownLoss(tag.to_string())),
        })
    }

    pub fn tag(&self) -> String {
        match self {
            Loss::Mse => "mse".into(),
            Loss::Expectile { tau } => format!("expectile:{tau}"),
            Loss::TdError { gamma } => format!("td:{gamma}"),
            Loss::AdvantageWeightedNll { beta } => format!("awr:{beta}"),
        }
    }

    /// Loss value (batch mean) and its gradient wrt the network output.
    pub fn evaluate(&self, out: &Array2<f64>, batch: &LossBatch) -> Result<(f64, Array2<f64>)> {
        match (self, batch) {
            (Loss::Mse, LossBatch::Targets(t)) => scalar_loss(out, t, |u| (u * u, -2.0 * u)),
            (Loss::Expectile { tau }, LossBatch::Targets(t)) => {
                let tau = *tau;
                scalar_loss(out, t, |u| {
                    let w = if u < 0.0 { 1.0 - tau } else { tau };
                    (w * (u * u), -2.0 * w * u)
                })
            }
            (
                Loss::TdError { gamma },
                LossBatch::Td {
                    reward,
                    terminal,
                    next_value,
                },
            ) => {
                if reward.len() != terminal.len() || reward.len() != next_value.len() {
                    return Err(Error::DimensionMismatch {
                        expected: reward.len(),
                        got: next_value.len().min(terminal.len()),
                    });
                }
                let t: Vec<f64> = (0..reward.len())
                    .map(|i| reward[i] + gamma * if terminal[i] { 0.0 } else { next_value[i] })
                    .collect();
                scalar_loss(out, &t, |u| (u * u, -2.0 * u))
            }
            (Loss::AdvantageWeightedNll { beta }, LossBatch::Awr(groups)) => awr_loss(out, groups, *beta),
            _ => Err(Error::InvalidConfig(format!("batch does not match loss {}", self.tag()))),
        }
    }
}

/// Per-row loss of `u = target - prediction` on a single-output network;
/// `f` returns (loss, d loss / d prediction).
fn scalar_loss(out: &Array2<f64>, targets: &[f64], f: impl Fn(f64) -> (f64, f64)) -> Result<(f64, Array2<f64>)> {
    if out.ncols() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: out.ncols(),
        });
    }
    if out.nrows() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: out.nrows(),
            got: targets.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = targets.len() as f64;
    let mut grad = Array2::zeros(out.raw_dim());
    let mut total = 0.0;
    for i in 0..targets.len() {
        let (l, g) = f(targets[i] - out[[i, 0]]);
        total += l;
        grad[[i, 0]] = g / n;
    }
    Ok((total / n, grad))
}

/// One sample of the advantage-weighted loss: a run of consecutive output
/// rows (one per object) sharing a softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct AwrGroup {
    pub first_row: usize,
    pub rows: usize,
    /// Feasibility of every (row, column) entry, row-major over the group.
    pub mask: Vec<bool>,
    /// (row within group, column) of the taken action.
    pub action: (usize, usize),
    pub advantage: f64,
}

impl AwrGroup {
    pub fn weight(&self, beta: f64) -> f64 {
        (beta * self.advantage).exp().min(MAX_ADVANTAGE_WEIGHT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossBatch {
    Targets(Vec<f64>),
    Td {
        reward: Vec<f64>,
        terminal: Vec<bool>,
        next_value: Vec<f64>,
    },
    Awr(Vec<AwrGroup>),
}

fn awr_loss(out: &Array2<f64>, groups: &[AwrGroup], beta: f64) -> Result<(f64, Array2<f64>)> {
    if groups.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let cols = out.ncols();
    let n = groups.len() as f64;
    let mut grad = Array2::zeros(out.raw_dim());
    let mut total = 0.0;
    for g in groups {
        if g.first_row + g.rows > out.nrows() || g.mask.len() != g.rows * cols {
            return Err(Error::DimensionMismatch {
                expected: g.rows * cols,
                got: g.mask.len(),
            });
        }
        let (ar, ac) = g.action;
        if ar >= g.rows || ac >= cols || !g.mask[ar * cols + ac] {
            return Err(Error::InvalidConfig("taken action is masked".into()));
        }
        let block = out.slice(ndarray::s![g.first_row..g.first_row + g.rows, ..]);
        let mut max = f64::NEG_INFINITY;
        for (v, &m) in block.iter().zip(&g.mask) {
            if m {
                max = max.max(*v);
            }
        }
        let mut denom = 0.0;
        for (v, &m) in block.iter().zip(&g.mask) {
            if m {
                denom += (v - max).exp();
            }
        }
        let log_z = max + denom.ln();
        let w = g.weight(beta);
        total += -w * (block[[ar, ac]] - log_z);
        let mut gblock = grad.slice_mut(ndarray::s![g.first_row..g.first_row + g.rows, ..]);
        for (k, (gv, v)) in gblock.iter_mut().zip(block.iter()).enumerate() {
            if g.mask[k] {
                *gv = w * (v - log_z).exp() / n;
            }
        }
        gblock[[ar, ac]] -= w / n;
    }
    Ok((total / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn expectile_unit_cases() {
        assert_eq!(expectile_loss(1.0, 0.7), 0.7);
        // 1 - 0.7 is one ulp above the literal 0.3
        assert!((expectile_loss(-1.0, 0.7) - 0.3).abs() <= f64::EPSILON);
        assert_eq!(expectile_loss(0.0, 0.9), 0.0);
        for u in [-3.0, -0.5, 0.25, 7.0] {
            assert_eq!(expectile_loss(u, 0.5), 0.5 * u * u);
        }
    }

    #[test]
    fn loss_tags() {
        assert_eq!(Loss::from_tag("mse").unwrap(), Loss::Mse);
        assert_eq!(Loss::from_tag("expectile:0.9").unwrap(), Loss::Expectile { tau: 0.9 });
        assert_eq!(Loss::from_tag("awr").unwrap(), Loss::AdvantageWeightedNll { beta: 3.0 });
        assert!(matches!(Loss::from_tag("hinge"), Err(Error::UnknownLoss(_))));
        assert!(matches!(Loss::from_tag("td:x"), Err(Error::UnknownLoss(_))));
        for l in [Loss::Mse, Loss::Expectile { tau: 0.7 }, Loss::TdError { gamma: 0.95 }] {
            assert_eq!(Loss::from_tag(&l.tag()).unwrap(), l);
        }
    }

    #[test]
    fn forward_matches_hand_computation() {
        let mut net = Mlp::new(&[2, 2, 1], &[Activation::Relu, Activation::Identity], 0).unwrap();
        net.weights[0] = array![[1.0, -1.0], [2.0, 0.5]];
        net.biases[0] = array![0.0, 0.25];
        net.weights[1] = array![[1.0], [3.0]];
        net.biases[1] = array![-1.0];
        let out = net.forward(array![[1.0, 1.0], [-1.0, 0.0]].view()).unwrap();
        // row 0: hidden (3, max(0,-0.25)=0) -> 3 - 1
        // row 1: hidden (max(0,-1)=0, 1.25) -> 3.75 - 1
        assert_eq!(out, array![[2.0], [2.75]]);
        assert!(matches!(net.forward(array![[1.0]].view()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut z = array![[1.0, 2.0, 3.0], [1000.0, 1000.0, -1000.0]];
        Activation::Softmax.apply(&mut z);
        for r in z.rows() {
            assert!((r.sum() - 1.0).abs() < 1e-12);
        }
        assert!((z[[1, 0]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let mut net = Mlp::new(&[1, 1], &[Activation::Identity], 0).unwrap();
        net.weights[0] = array![[0.0]];
        let before = net.biases[0][0];
        net.train_step(array![[1.0]].view(), &Loss::Mse, &LossBatch::Targets(vec![5.0]), 0.1).unwrap();
        assert!((net.weights[0][[0, 0]] - 0.1).abs() < 1e-6);
        assert!((net.biases[0][0] - before - 0.1).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut net = Mlp::new(&[1, 1], &[Activation::Identity], 0).unwrap();
        let r = net.train_step(array![[1.0]].view(), &Loss::Mse, &LossBatch::Targets(vec![f64::NAN]), 0.1);
        assert_eq!(r, Err(Error::Divergence { step: 1 }));
    }

    #[test]
    fn regression_converges() {
        let mut net = Mlp::new(&[1, 16, 1], &[Activation::Tanh, Activation::Identity], 3).unwrap();
        let xs = Array2::from_shape_fn((32, 1), |(i, _)| i as f64 / 16.0 - 1.0);
        let ts: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let batch = LossBatch::Targets(ts);
        let first = net.loss_value(xs.view(), &Loss::Mse, &batch).unwrap();
        for _ in 0..2000 {
            net.train_step(xs.view(), &Loss::Mse, &batch, 1e-2).unwrap();
        }
        let last = net.loss_value(xs.view(), &Loss::Mse, &batch).unwrap();
        assert!(last < first * 0.05, "{first} -> {last}");
    }

    #[test]
    fn checkpoint_roundtrip() {
        let mut net = Mlp::new(&[3, 4, 2], &[Activation::Sigmoid, Activation::Softmax], 9).unwrap();
        net.normalizer = Some(Normalizer {
            mean: vec![0.0, 1.0, 2.0],
            std: vec![1.0, 2.0, 3.0],
        });
        net.train_step(
            array![[0.1, 0.2, 0.3]].view(),
            &Loss::AdvantageWeightedNll { beta: 1.0 },
            &LossBatch::Awr(vec![AwrGroup {
                first_row: 0,
                rows: 1,
                mask: vec![true, true],
                action: (0, 1),
                advantage: 0.5,
            }]),
            1e-3,
        )
        .unwrap();
        let back = Mlp::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json(), net.to_json());
        let mut bad = net.to_checkpoint();
        bad.weights[0].pop();
        assert!(Mlp::from_checkpoint(&bad).is_err());
    }

    #[test]
    fn polyak_moves_toward_source() {
        let a = Mlp::new(&[2, 2], &[Activation::Identity], 1).unwrap();
        let mut b = Mlp::new(&[2, 2], &[Activation::Identity], 2).unwrap();
        let before: Vec<f64> = b.params_flat();
        b.polyak_update(&a, POLYAK_RATE);
        for ((x, y), s) in b.params_flat().iter().zip(&before).zip(a.params_flat()) {
            assert!((x - (y + POLYAK_RATE * (s - y))).abs() < 1e-15);
        }
    }

    #[test]
    fn normalizer_standardizes() {
        let rows = array![[1.0, 5.0], [3.0, 5.0]];
        let n = Normalizer::fit(rows.view());
        assert_eq!(n.mean, vec![2.0, 5.0]);
        assert_eq!(n.std, vec![1.0, 1.0]);
    }

    #[test]
    fn awr_masked_entries_get_no_gradient() {
        let out = array![[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]];
        let g = AwrGroup {
            first_row: 0,
            rows: 2,
            mask: vec![true, false, true, false, true, false],
            action: (1, 1),
            advantage: 0.0,
        };
        let (v, grad) = awr_loss(&out, std::slice::from_ref(&g), 3.0).unwrap();
        let z = (0f64).exp() + 2f64.exp() + 4f64.exp();
        assert!((v - -(4.0 - z.ln())).abs() < 1e-12);
        for k in [1, 3, 5] {
            assert_eq!(grad[[k / 3, k % 3]], 0.0);
        }
        assert!(grad.sum().abs() < 1e-12);
        let mut masked = g;
        masked.action = (0, 1);
        assert!(awr_loss(&out, &[masked], 3.0).is_err());
    }
}
