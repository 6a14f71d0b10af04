//! Tidiness score: permutation-invariant scene features and a sigmoid-headed
//! regressor trained on trajectory labels.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::error::{Error, Result};
use crate::nn::{Activation, Loss, LossBatch, Mlp, Normalizer};
use crate::seed;
use crate::templates::{classify_relation, RelationKind};
use crate::world::{illegal_overlap, rect_in_bounds, ObjectInstance, Scene};

pub const DEFAULT_THRESHOLD: f64 = 0.85;

/// Objects whose orientation residual exceeds this (fraction of 45 degrees)
/// count as misaligned.
const MISALIGNED: f64 = 0.02;
/// Surface gap (meters) under which two objects count as placed together.
const ATTACHED_GAP: f64 = 0.05;
/// Center offset (meters) under which two objects share a row or column.
const ROW_TOLERANCE: f64 = 0.01;
const MAX_OBJECTS: f64 = 9.0;

const SCALAR_FEATURES: usize = 24;
pub const FEATURE_DIM: usize = SCALAR_FEATURES + Category::COUNT;

/// Sorted copy, so that sums do not depend on object order.
fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// (mean, min, max, variance); zeros for an empty set.
fn aggregate(v: Vec<f64>) -> [f64; 4] {
    if v.is_empty() {
        return [0.0; 4];
    }
    let v = sorted(v);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = sorted(v.iter().map(|x| (x - mean) * (x - mean)).collect()).iter().sum::<f64>() / n;
    [mean, v[0], v[v.len() - 1], var]
}

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Angular distance of an offset direction to the nearest multiple of 45
/// degrees, as a fraction of 22.5.
fn sector_residual(dx: f64, dy: f64) -> f64 {
    // the offset and its reverse must agree bit for bit
    let (dx, dy) = if dx < 0.0 || (dx == 0.0 && dy < 0.0) { (-dx, -dy) } else { (dx, dy) };
    let a = dy.atan2(dx).to_degrees().rem_euclid(45.0);
    a.min(45.0 - a) / 22.5
}

/// Distance of a heading to the nearest table axis, as a fraction of 45.
fn orientation_residual(theta: f64) -> f64 {
    let a = theta.rem_euclid(90.0);
    a.min(90.0 - a) / 45.0
}

/// Separation of the axis-aligned boxes of two footprints (negative when they
/// intersect).
fn surface_gap(a: &ObjectInstance, b: &ObjectInstance) -> f64 {
    let (ax, ay) = a.footprint().aabb_half();
    let (bx, by) = b.footprint().aabb_half();
    let gx = (a.pose.x - b.pose.x).abs() - (ax + bx);
    let gy = (a.pose.y - b.pose.y).abs() - (ay + by);
    gx.max(gy)
}

/// Fixed-length feature vector of a scene. Invariant (bit-exact) under
/// reordering of the object list.
pub fn featurize(scene: &Scene) -> Result<Vec<f64>> {
    let objs = &scene.objects;
    let n = objs.len();
    if n == 0 {
        return Err(Error::NoObjects);
    }
    let ws = &scene.workspace;
    let diag = ws.diagonal();

    let mut pair_residual = Vec::new();
    let mut overlaps = 0;
    let mut relation_counts = [0usize; RelationKind::ALL.len()];
    let mut relation_total = 0;
    // per object: (center distance, sector residual, row offset) of its nearest neighbour
    let mut nearest: Vec<Option<(f64, f64, f64)>> = vec![None; n];
    let mut min_gap = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (&objs[i], &objs[j]);
            let (dx, dy) = (b.pose.x - a.pose.x, b.pose.y - a.pose.y);
            let dist = dx.hypot(dy);
            if let Ok(kind) = classify_relation(a, b) {
                relation_counts[kind.index()] += 1;
                relation_total += 1;
            }
            min_gap[i] = min_gap[i].min(surface_gap(a, b));
            if i < j && illegal_overlap(a, b) {
                overlaps += 1;
            }
            if dist < 1e-12 {
                continue;
            }
            let res = sector_residual(dx, dy);
            let row = dx.abs().min(dy.abs());
            let cand = (dist, res, row);
            // ties on distance resolve by the remaining fields, independent of order
            let better = match nearest[i] {
                None => true,
                Some(cur) => cand.0.total_cmp(&cur.0).then(cand.1.total_cmp(&cur.1)).then(cand.2.total_cmp(&cur.2)).is_lt(),
            };
            if better {
                nearest[i] = Some(cand);
            }
            if i < j {
                pair_residual.push(res);
            }
        }
    }
    let pairs = n * (n - 1) / 2;
    let aligned_pairs = pair_residual.iter().filter(|&&r| r < 0.1).count();
    let pair_count = pair_residual.len();
    let [res_mean, res_min, res_max, _] = aggregate(pair_residual);

    let nn: Vec<(f64, f64, f64)> = nearest.iter().flatten().copied().collect();
    let [nn_res_mean, ..] = aggregate(nn.iter().map(|c| c.1).collect());
    let [nn_dist_mean, _, nn_dist_max, nn_dist_var] = aggregate(nn.iter().map(|c| c.0 / diag).collect());
    let in_row = nn.iter().filter(|c| c.2 < ROW_TOLERANCE).count();

    let gaps: Vec<f64> = if n > 1 { min_gap.clone() } else { Vec::new() };
    let attached = gaps.iter().filter(|&&g| g <= ATTACHED_GAP).count();
    let [gap_mean, _, gap_max, _] = aggregate(gaps.iter().map(|g| g / diag).collect());

    let orient: Vec<f64> = objs.iter().map(|o| orientation_residual(o.pose.theta)).collect();
    let misaligned = orient.iter().filter(|&&r| r > MISALIGNED).count();
    let [or_mean, or_min, or_max, _] = aggregate(orient);

    let oob = objs.iter().filter(|o| !rect_in_bounds(&o.footprint(), ws)).count();

    let xs = sorted(objs.iter().map(|o| o.pose.x).collect());
    let ys = sorted(objs.iter().map(|o| o.pose.y).collect());
    let cx = xs.iter().sum::<f64>() / n as f64;
    let cy = ys.iter().sum::<f64>() / n as f64;
    let (wx, wy) = ws.center();
    let (dx, dy) = ((cx - wx) / ws.width_m, (cy - wy) / ws.depth_m);
    let spread = (sorted(objs.iter().map(|o| (o.pose.x - cx).powi(2) + (o.pose.y - cy).powi(2)).collect())
        .iter()
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / diag;

    let entropy = if relation_total == 0 {
        0.0
    } else {
        let t = relation_total as f64;
        -relation_counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / t;
                p * p.ln()
            })
            .sum::<f64>()
            / (RelationKind::ALL.len() as f64).ln()
    };

    let mut f = Vec::with_capacity(FEATURE_DIM);
    f.extend([res_mean, res_min, res_max, nn_res_mean]);
    f.extend([or_mean, or_min, or_max, fraction(misaligned, n)]);
    f.extend([nn_dist_mean, nn_dist_var, nn_dist_max]);
    f.extend([gap_mean, gap_max, fraction(attached, n)]);
    f.extend([fraction(overlaps, pairs), fraction(oob, n)]);
    f.extend([dx, dy, dx.hypot(dy)]);
    f.extend([entropy, n as f64 / MAX_OBJECTS, spread]);
    f.extend([fraction(aligned_pairs, pair_count), fraction(in_row, nn.len())]);
    debug_assert_eq!(f.len(), SCALAR_FEATURES);
    let mut hist = [0usize; Category::COUNT];
    for o in objs {
        hist[o.category.index()] += 1;
    }
    f.extend(hist.iter().map(|&c| c as f64 / MAX_OBJECTS));
    Ok(f)
}

pub fn feature_matrix<'a>(scenes: impl IntoIterator<Item = &'a Scene>) -> Result<Array2<f64>> {
    let rows: Vec<Vec<f64>> = scenes.into_iter().map(featurize).collect::<Result<_>>()?;
    let n = rows.len();
    Ok(Array2::from_shape_vec((n, FEATURE_DIM), rows.concat()).expect("fixed feature width"))
}

/// Anything that rates a scene's tidiness in [0, 1].
pub trait TidinessModel {
    fn score(&self, scene: &Scene) -> Result<f64>;

    fn score_many(&self, scenes: &[Scene]) -> Result<Vec<f64>> {
        scenes.iter().map(|s| self.score(s)).collect()
    }
}

/// Plain functions and closures serve as hand-written scores.
impl<F> TidinessModel for F
where
    F: Fn(&Scene) -> Result<f64>,
{
    fn score(&self, scene: &Scene) -> Result<f64> {
        self(scene)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub net: Mlp,
}

impl Discriminator {
    pub fn new(seed: u64) -> Discriminator {
        let net = Mlp::new(
            &[FEATURE_DIM, 128, 64, 1],
            &[Activation::Relu, Activation::Relu, Activation::Sigmoid],
            seed,
        )
        .expect("static layout");
        Discriminator { net }
    }

    pub fn from_net(net: Mlp) -> Result<Discriminator> {
        if net.input_dim() != FEATURE_DIM || net.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                got: net.input_dim(),
            });
        }
        Ok(Discriminator { net })
    }

    pub fn to_json(&self) -> String {
        self.net.to_json()
    }

    pub fn from_json(s: &str) -> Result<Discriminator> {
        Discriminator::from_net(Mlp::from_json(s)?)
    }

    pub fn score_features(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self.net.forward(x)?.column(0).to_vec())
    }
}

impl TidinessModel for Discriminator {
    fn score(&self, scene: &Scene) -> Result<f64> {
        let x = Array2::from_shape_vec((1, FEATURE_DIM), featurize(scene)?).unwrap();
        Ok(self.net.forward(x.view())?[[0, 0]])
    }

    fn score_many(&self, scenes: &[Scene]) -> Result<Vec<f64>> {
        if scenes.is_empty() {
            return Ok(Vec::new());
        }
        self.score_features(feature_matrix(scenes)?.view())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for DiscConfig {
    fn default() -> Self {
        DiscConfig {
            epochs: 30,
            batch_size: 64,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: Option<f64>,
}

/// Minibatch Adam on mean squared error to the labels. Inputs are
/// standardized with statistics of the training features.
pub fn train_discriminator(
    train: &[(&Scene, f64)],
    validation: &[(&Scene, f64)],
    config: &DiscConfig,
) -> Result<(Discriminator, Vec<EpochLoss>)> {
    if train.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if config.batch_size == 0 || !(config.lr.is_finite() && config.lr > 0.0) {
        return Err(Error::InvalidConfig("batch size and learning rate must be positive".into()));
    }
    let x = feature_matrix(train.iter().map(|p| p.0))?;
    let y: Vec<f64> = train.iter().map(|p| p.1).collect();
    let vx = if validation.is_empty() {
        None
    } else {
        Some(feature_matrix(validation.iter().map(|p| p.0))?)
    };
    let vy: Vec<f64> = validation.iter().map(|p| p.1).collect();

    let mut disc = Discriminator::new(config.seed);
    disc.net.normalizer = Some(Normalizer::fit(x.view()));
    let mut rng = seed::rng(seed::derive(config.seed, &[1]));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let bx = x.select(ndarray::Axis(0), chunk);
            let by = LossBatch::Targets(chunk.iter().map(|&i| y[i]).collect());
            disc.net.train_step(bx.view(), &Loss::Mse, &by, config.lr)?;
        }
        let train_mse = disc.net.loss_value(x.view(), &Loss::Mse, &LossBatch::Targets(y.clone()))?;
        let validation_mse = match &vx {
            Some(vx) => Some(disc.net.loss_value(vx.view(), &Loss::Mse, &LossBatch::Targets(vy.clone()))?),
            None => None,
        };
        history.push(EpochLoss {
            epoch,
            train_mse,
            validation_mse,
        });
    }
    Ok((disc, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    /// Undefined when nothing is predicted tidy.
    pub precision: Option<f64>,
    pub recall: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Precision and recall of `score >= threshold` against "label is 1".
pub fn threshold_sweep(scores: &[f64], labels: &[f64], thresholds: &[f64]) -> Result<Vec<SweepRow>> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&l| l == 1.0).count();
    if positives == 0 {
        return Err(Error::DegenerateSweep("no fully tidied scenes".into()));
    }
    Ok(thresholds
        .iter()
        .map(|&t| {
            let mut tp = 0;
            let mut fp = 0;
            for (&s, &l) in scores.iter().zip(labels) {
                if s >= t {
                    if l == 1.0 {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            SweepRow {
                threshold: t,
                precision: (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64),
                recall: tp as f64 / positives as f64,
                true_positives: tp,
                false_positives: fp,
                false_negatives: positives - tp,
            }
        })
        .collect())
}

/// Thresholds 0, 0.05, ..., 1.
pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// Mean score per 1-based trajectory step.
pub fn mean_score_by_step(scores: &[f64], steps: &[usize]) -> Vec<f64> {
    let len = steps.iter().copied().max().unwrap_or(0);
    let mut sum = vec![0.0; len];
    let mut count = vec![0usize; len];
    for (&s, &t) in scores.iter().zip(steps) {
        sum[t - 1] += s;
        count[t - 1] += 1;
    }
    sum.iter().zip(&count).map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 }).collect()
}
