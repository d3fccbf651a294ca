use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// Weights `[dim, classes]` (row-major) and bias of a softmax classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub dim: usize,
    pub classes: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub optimizer: AdamState,
}

impl ProbeModel {
    pub fn zeros(dim: usize, classes: usize) -> Self {
        Self {
            dim,
            classes,
            weights: vec![0.0; dim * classes],
            bias: vec![0.0; classes],
            optimizer: AdamState::new(dim, classes),
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng>(dim: usize, classes: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(dim, classes);
        let limit = libm::sqrt(6.0 / (dim + classes) as f64);
        m.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
        m
    }

    pub fn from_parts(dim: usize, classes: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != dim * classes || bias.len() != classes {
            return Err(Error::Shape(format!("probe parameters do not match {dim}x{classes}")));
        }
        Ok(Self {
            dim,
            classes,
            weights,
            bias,
            optimizer: AdamState::new(dim, classes),
        })
    }

    /// `Wᵀx + b` into `out`.
    pub fn logits_into(&self, x: &[f32], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (d, &xd) in x.iter().enumerate() {
            if xd == 0.0 {
                continue;
            }
            let xd = f64::from(xd);
            let row = &self.weights[d * self.classes..(d + 1) * self.classes];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xd * w;
            }
        }
    }

    /// Class probabilities.
    pub fn forward(&self, x: &[f32]) -> Vec<f64> {
        let mut z = vec![0.0; self.classes];
        self.logits_into(x, &mut z);
        softmax(&mut z);
        z
    }

    /// Most probable class; ties go to the smallest index.
    pub fn predict_one(&self, x: &[f32], scratch: &mut [f64]) -> usize {
        self.logits_into(x, scratch);
        argmax(scratch)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// In-place softmax with max-logit subtraction.
pub fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    let inv = 1.0 / sum;
    z.iter_mut().for_each(|v| *v *= inv);
}

/// Input dropout and weight penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub dropout: f64,
    pub l1: f64,
    pub l2: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            dropout: 0.25,
            l1: 1e-5,
            l2: 1e-4,
        }
    }
}

impl Regularization {
    pub const NONE: Self = Self {
        dropout: 0.0,
        l1: 0.0,
        l2: 0.0,
    };

    /// `l1 · Σ|W| + l2 · ΣW²`; the bias is not penalized.
    pub fn penalty(&self, weights: &[f64]) -> f64 {
        let (mut a, mut s) = (0.0, 0.0);
        for w in weights {
            a += w.abs();
            s += w * w;
        }
        self.l1 * a + self.l2 * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy of the batch plus weight penalties, and its gradient.
/// With `rng` present and a positive dropout rate, each input feature is
/// dropped independently and survivors are scaled by `1 / (1 - rate)`.
pub fn loss_and_grad<R: Rng>(
    model: &ProbeModel,
    rows: &[&[f32]],
    labels: &[usize],
    reg: &Regularization,
    mut rng: Option<&mut R>,
) -> Result<(f64, Gradients)> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::Argument(format!(
            "batch of {} rows and {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let k = model.classes;
    let mut grads = Gradients {
        weights: vec![0.0; model.weights.len()],
        bias: vec![0.0; k],
    };
    let mut z = vec![0.0; k];
    let mut dropped = vec![0.0f32; model.dim];
    let keep_scale = if reg.dropout > 0.0 {
        (1.0 / (1.0 - reg.dropout)) as f32
    } else {
        1.0
    };
    let mut ce = 0.0;
    for (&x, &y) in rows.iter().zip(labels) {
        if y >= k {
            return Err(Error::Argument(format!("label {y} outside {k} classes")));
        }
        let x: &[f32] = match rng.as_deref_mut() {
            Some(r) if reg.dropout > 0.0 => {
                for (d, &v) in dropped.iter_mut().zip(x) {
                    *d = if r.random::<f64>() < reg.dropout {
                        0.0
                    } else {
                        v * keep_scale
                    };
                }
                &dropped
            }
            _ => x,
        };
        model.logits_into(x, &mut z);
        softmax(&mut z);
        ce -= libm::log(z[y].max(f64::MIN_POSITIVE));
        z[y] -= 1.0;
        for (g, dz) in grads.bias.iter_mut().zip(&z) {
            *g += dz;
        }
        for (d, &xd) in x.iter().enumerate() {
            if xd == 0.0 {
                continue;
            }
            let xd = f64::from(xd);
            let row = &mut grads.weights[d * k..(d + 1) * k];
            for (g, dz) in row.iter_mut().zip(&z) {
                *g += xd * dz;
            }
        }
    }
    let inv = 1.0 / rows.len() as f64;
    grads.weights.iter_mut().for_each(|g| *g *= inv);
    grads.bias.iter_mut().for_each(|g| *g *= inv);
    if reg.l1 != 0.0 || reg.l2 != 0.0 {
        for (g, &w) in grads.weights.iter_mut().zip(&model.weights) {
            let sign = if w > 0.0 {
                1.0
            } else if w < 0.0 {
                -1.0
            } else {
                0.0
            };
            *g += reg.l1 * sign + 2.0 * reg.l2 * w;
        }
    }
    let loss = ce * inv + reg.penalty(&model.weights);
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("probe loss is {loss}")));
    }
    Ok((loss, grads))
}

/// First/second moment estimates of the adaptive-moment optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m_w: Vec<f64>,
    v_w: Vec<f64>,
    m_b: Vec<f64>,
    v_b: Vec<f64>,
}

impl AdamState {
    pub fn new(dim: usize, classes: usize) -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            step: 0,
            m_w: vec![0.0; dim * classes],
            v_w: vec![0.0; dim * classes],
            m_b: vec![0.0; classes],
            v_b: vec![0.0; classes],
        }
    }

    pub fn with_hyper(mut self, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        self.lr = lr;
        self.beta1 = beta1;
        self.beta2 = beta2;
        self.epsilon = epsilon;
        self
    }
}

impl ProbeModel {
    /// One optimizer step using the bias-corrected step size
    /// `lr · √(1-β₂ᵗ) / (1-β₁ᵗ)`.
    pub fn apply_gradients(&mut self, g: &Gradients) {
        let s = &mut self.optimizer;
        s.step += 1;
        let t = s.step as f64;
        let lr_t = s.lr * libm::sqrt(1.0 - libm::pow(s.beta2, t)) / (1.0 - libm::pow(s.beta1, t));
        let (b1, b2, eps) = (s.beta1, s.beta2, s.epsilon);
        let update = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
            for (((p, m), v), &g) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr_t * *m / (libm::sqrt(*v) + eps);
            }
        };
        update(&mut self.weights, &mut s.m_w, &mut s.v_w, &g.weights);
        update(&mut self.bias, &mut s.m_b, &mut s.v_b, &g.bias);
    }
}
