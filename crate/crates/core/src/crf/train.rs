use std::collections::{BTreeMap, HashMap};

use super::{end_weight, extract_features, start_weight, BmesSequence, CrfModel, Label, LABELS};
use crate::corpus::{SegMode, SegmentationDataset};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Sequences per gradient chunk (lower bound); the chunk layout depends only
/// on the dataset size, never on the thread count.
const MIN_CHUNK: usize = 64;
const MAX_CHUNKS: usize = 16;
const HISTORY: usize = 10;

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) struct Lattice {
    pub log_z: f64,
    /// `node[i][y] = p(y_i = y | x)`
    pub node: Vec<[f64; 4]>,
    /// `edge[i][p][y] = p(y_{i-1} = p, y_i = y | x)` for `i >= 1`
    pub edge: Vec<[[f64; 4]; 4]>,
}

pub(crate) fn forward_backward(em: &[[f64; 4]], trans: &[[f64; 4]; 4]) -> Lattice {
    let n = em.len();
    let mut alpha = vec![[f64::NEG_INFINITY; 4]; n];
    let mut beta = vec![[f64::NEG_INFINITY; 4]; n];
    for y in 0..4 {
        alpha[0][y] = start_weight(y) + em[0][y];
        beta[n - 1][y] = end_weight(y);
    }
    for i in 1..n {
        for y in 0..4 {
            alpha[i][y] = em[i][y] + log_sum_exp((0..4).map(|p| alpha[i - 1][p] + trans[p][y]));
        }
    }
    for i in (0..n - 1).rev() {
        for y in 0..4 {
            beta[i][y] = log_sum_exp((0..4).map(|nx| trans[y][nx] + em[i + 1][nx] + beta[i + 1][nx]));
        }
    }
    let log_z = log_sum_exp((0..4).map(|y| alpha[n - 1][y] + end_weight(y)));
    let node = (0..n)
        .map(|i| std::array::from_fn(|y| (alpha[i][y] + beta[i][y] - log_z).exp()))
        .collect();
    let mut edge = vec![[[0.0; 4]; 4]; n];
    for i in 1..n {
        for p in 0..4 {
            for y in 0..4 {
                edge[i][p][y] = (alpha[i - 1][p] + trans[p][y] + em[i][y] + beta[i][y] - log_z).exp();
            }
        }
    }
    Lattice { log_z, node, edge }
}

impl CrfModel {
    /// Log partition function over well-formed labelings.
    pub fn log_partition(&self, chars: &[char]) -> f64 {
        if chars.is_empty() {
            return 0.0;
        }
        forward_backward(&self.emissions(chars), &self.transitions).log_z
    }

    /// Per-position label posteriors.
    pub fn marginals(&self, chars: &[char]) -> Vec<[f64; 4]> {
        if chars.is_empty() {
            return Vec::new();
        }
        forward_backward(&self.emissions(chars), &self.transitions).node
    }
}

/// Allowed transitions in parameter order.
fn allowed_pairs() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for p in 0..4 {
        for n in 0..4 {
            if LABELS[n].can_follow(LABELS[p]) {
                v.push((p, n));
            }
        }
    }
    v
}

struct Encoded {
    feats: Vec<Vec<usize>>,
    labels: Vec<usize>,
}

/// Regularized conditional log-likelihood over a fixed feature set, with
/// parameters flattened as `[feature * 4 + label] ++ [allowed transitions]`.
pub struct Objective {
    features: Vec<String>,
    pairs: Vec<(usize, usize)>,
    seqs: Vec<Encoded>,
    l2: f64,
    exec: Exec,
}

impl Objective {
    /// Index every feature occurring in `data` plus any in `extra`.
    pub fn new(data: &[BmesSequence], delta: usize, l2: f64, extra: &[String], exec: Exec) -> Result<Self> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut features = Vec::new();
        for f in extra {
            if !index.contains_key(f) {
                index.insert(f.clone(), features.len());
                features.push(f.clone());
            }
        }
        let mut seqs = Vec::with_capacity(data.len());
        for (k, s) in data.iter().enumerate() {
            s.validate(k)?;
            let feats = (0..s.chars.len())
                .map(|i| {
                    extract_features(&s.chars, i, delta)
                        .into_iter()
                        .map(|f| {
                            let next = features.len();
                            *index.entry(f.clone()).or_insert_with(|| {
                                features.push(f);
                                next
                            })
                        })
                        .collect()
                })
                .collect();
            seqs.push(Encoded {
                feats,
                labels: s.labels.iter().map(|&l| l as usize).collect(),
            });
        }
        Ok(Objective {
            features,
            pairs: allowed_pairs(),
            seqs,
            l2,
            exec,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.len() * 4 + self.pairs.len()
    }

    fn trans_offset(&self) -> usize {
        self.features.len() * 4
    }

    fn transitions(&self, params: &[f64]) -> [[f64; 4]; 4] {
        let mut t = super::forbidden_mask();
        for (k, &(p, n)) in self.pairs.iter().enumerate() {
            t[p][n] = params[self.trans_offset() + k];
        }
        t
    }

    pub fn params_from(&self, model: &CrfModel) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (f, name) in self.features.iter().enumerate() {
            if let Some(w) = model.weights.get(name) {
                x[f * 4..f * 4 + 4].copy_from_slice(w);
            }
        }
        let off = self.trans_offset();
        for (k, &(p, n)) in self.pairs.iter().enumerate() {
            x[off + k] = model.transitions[p][n];
        }
        x
    }

    pub fn to_model(&self, params: &[f64], delta: usize) -> CrfModel {
        let mut model = CrfModel::zero(delta, self.l2);
        for (f, name) in self.features.iter().enumerate() {
            let w: [f64; 4] = params[f * 4..f * 4 + 4].try_into().expect("four labels");
            if w.iter().any(|v| *v != 0.0) {
                model.weights.insert(name.clone(), w);
            }
        }
        model.transitions = self.transitions(params);
        model
    }

    fn chunk_size(&self) -> usize {
        self.seqs.len().div_ceil(MAX_CHUNKS).max(MIN_CHUNK)
    }

    /// Regularized log-likelihood and its gradient.
    pub fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let trans = self.transitions(params);
        let off = self.trans_offset();
        let chunks: Vec<&[Encoded]> = self.seqs.chunks(self.chunk_size()).collect();
        let partial = self.exec.map(&chunks, |chunk| {
            let mut grad = vec![0.0; self.dim()];
            let mut ll = 0.0;
            for s in chunk.iter() {
                ll += self.accumulate(s, params, &trans, off, &mut grad);
            }
            (ll, grad)
        });
        let mut ll = 0.0;
        let mut grad = vec![0.0; self.dim()];
        for (l, g) in partial {
            ll += l;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        let mut sq = 0.0;
        for (g, x) in grad.iter_mut().zip(params) {
            sq += x * x;
            *g -= self.l2 * x;
        }
        (ll - 0.5 * self.l2 * sq, grad)
    }

    fn accumulate(&self, s: &Encoded, params: &[f64], trans: &[[f64; 4]; 4], off: usize, grad: &mut [f64]) -> f64 {
        let n = s.labels.len();
        if n == 0 {
            return 0.0;
        }
        let em: Vec<[f64; 4]> = s
            .feats
            .iter()
            .map(|fs| {
                let mut e = [0.0; 4];
                for &f in fs {
                    for (y, v) in e.iter_mut().enumerate() {
                        *v += params[f * 4 + y];
                    }
                }
                e
            })
            .collect();
        let lat = forward_backward(&em, trans);
        let gold: Vec<Label> = s.labels.iter().map(|&y| LABELS[y]).collect();
        let score = super::score_with(&em, trans, &gold);
        for i in 0..n {
            let y = s.labels[i];
            for &f in &s.feats[i] {
                grad[f * 4 + y] += 1.0;
                for (yy, p) in lat.node[i].iter().enumerate() {
                    grad[f * 4 + yy] -= p;
                }
            }
        }
        for (k, &(p, nx)) in self.pairs.iter().enumerate() {
            let mut g = 0.0;
            for i in 1..n {
                if s.labels[i - 1] == p && s.labels[i] == nx {
                    g += 1.0;
                }
                g -= lat.edge[i][p][nx];
            }
            grad[off + k] += g;
        }
        score - lat.log_z
    }
}

/// Gradient of the regularized log-likelihood keyed like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfGradient {
    pub weights: BTreeMap<String, [f64; 4]>,
    /// Zero on forbidden pairs.
    pub transitions: [[f64; 4]; 4],
}

/// Regularized log-likelihood of `data` under `model`, with the gradient
/// over every feature of the model or the data.
pub fn log_likelihood_and_gradient(model: &CrfModel, data: &[BmesSequence]) -> Result<(f64, CrfGradient)> {
    let extra: Vec<String> = model.weights.keys().cloned().collect();
    let obj = Objective::new(data, model.delta, model.l2, &extra, Exec::Sequential)?;
    let x = obj.params_from(model);
    let (ll, g) = obj.value_and_gradient(&x);
    let weights = obj
        .features
        .iter()
        .enumerate()
        .map(|(f, name)| (name.clone(), g[f * 4..f * 4 + 4].try_into().expect("four labels")))
        .collect();
    let mut transitions = [[0.0; 4]; 4];
    for (k, &(p, n)) in obj.pairs.iter().enumerate() {
        transitions[p][n] = g[obj.trans_offset() + k];
    }
    Ok((ll, CrfGradient { weights, transitions }))
}

#[derive(Clone, Debug)]
pub struct CrfTrainConfig {
    pub delta: usize,
    pub l2: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
    pub exec: Exec,
}

impl Default for CrfTrainConfig {
    fn default() -> Self {
        CrfTrainConfig {
            delta: super::DEFAULT_DELTA,
            l2: super::DEFAULT_L2,
            max_iters: 100,
            tol: 1e-5,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CrfTrace {
    /// Objective at the start and after every accepted step.
    pub objective: Vec<f64>,
    pub grad_norm: f64,
    pub converged: bool,
}

pub fn train_crf(dataset: &SegmentationDataset, delta: usize, l2: f64, max_iters: usize, tol: f64) -> Result<CrfModel> {
    let config = CrfTrainConfig {
        delta,
        l2,
        max_iters,
        tol,
        ..CrfTrainConfig::default()
    };
    Ok(train_crf_with(dataset, &config)?.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS ascent with Armijo backtracking.
pub fn train_crf_with(dataset: &SegmentationDataset, config: &CrfTrainConfig) -> Result<(CrfModel, CrfTrace)> {
    if dataset.mode == SegMode::Canonical {
        return Err(Error::UnsupportedMode(
            "the CRF segmenter supports surface segmentation only".into(),
        ));
    }
    if config.delta == 0 {
        return Err(Error::Config("window radius must be positive".into()));
    }
    if !(config.l2 >= 0.0 && config.l2.is_finite()) {
        return Err(Error::Config(format!("l2 must be non-negative, got {}", config.l2)));
    }
    let seqs: Vec<BmesSequence> = dataset.entries.iter().map(BmesSequence::from_word).collect();
    let obj = Objective::new(&seqs, config.delta, config.l2, &[], config.exec)?;

    // minimize f = -LL
    let mut x = vec![0.0; obj.dim()];
    let (ll, g) = obj.value_and_gradient(&x);
    let mut f = -ll;
    let mut grad: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut trace = CrfTrace {
        objective: vec![ll],
        ..CrfTrace::default()
    };
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();

    for _ in 0..config.max_iters {
        let gnorm = dot(&grad, &grad).sqrt();
        trace.grad_norm = gnorm;
        if gnorm < config.tol {
            trace.converged = true;
            break;
        }
        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.last() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            q.iter_mut().for_each(|v| *v /= gnorm.max(1.0));
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = grad.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&grad, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (lln, gn) = obj.value_and_gradient(&xn);
            let fn_ = -lln;
            if fn_.is_finite() && fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let gn: Vec<f64> = gn.iter().map(|v| -v).collect();
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if history.len() == HISTORY {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }
        let improvement = f - fn_;
        x = xn;
        f = fn_;
        grad = gn;
        trace.objective.push(-f);
        if improvement <= f64::EPSILON * f.abs().max(1.0) && history.is_empty() {
            break;
        }
    }
    trace.grad_norm = dot(&grad, &grad).sqrt();
    trace.converged |= trace.grad_norm < config.tol;
    Ok((obj.to_model(&x, config.delta), trace))
}
