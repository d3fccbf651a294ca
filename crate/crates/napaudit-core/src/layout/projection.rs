use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{ParticleLayout, Point};
use crate::error::{Error, Result};
use crate::nap::NapSet;
use crate::scalar::Scalar;
use crate::seed;

/// Channels × features: row `c` holds channel `c`'s spatially averaged NAP
/// value for each non-empty group.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFeatureMatrix {
    pub layer_id: u32,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ChannelFeatureMatrix {
    pub fn new(layer_id: u32, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("channel feature matrix".into()));
        }
        Ok(Self {
            layer_id,
            rows,
            cols,
            data,
        })
    }

    pub fn from_nap_set<T: Scalar>(set: &NapSet<T>) -> Result<Self> {
        let cols = set.naps.len();
        let rows = set.naps.first().map_or(0, |n| n.channel_profile.len());
        let mut data = vec![0.0; rows * cols];
        for (g, nap) in set.naps.iter().enumerate() {
            if nap.channel_profile.len() != rows {
                return Err(Error::Shape("channel profiles differ in length".into()));
            }
            for (c, &v) in nap.channel_profile.iter().enumerate() {
                data[c * cols + g] = v;
            }
        }
        Self::new(set.layer_id, rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMethod {
    Pca,
    NeighborEmbedding,
}

impl ProjectionMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pca => "pca",
            Self::NeighborEmbedding => "neighbor-embedding",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pca" => Some(Self::Pca),
            "neighbor-embedding" | "tsne" => Some(Self::NeighborEmbedding),
            _ => None,
        }
    }
}

/// Eigen-decomposition of a symmetric `n×n` matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// rows.
pub fn symmetric_eigen(n: usize, matrix: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (values, vectors)
}

/// Top-two principal component scores of the rows.
fn pca(features: &ChannelFeatureMatrix) -> Vec<Point> {
    let (c, f) = (features.rows, features.cols);
    let mut centered = features.data.clone();
    for j in 0..f {
        let mean = (0..c).map(|i| centered[i * f + j]).sum::<f64>() / c as f64;
        for i in 0..c {
            centered[i * f + j] -= mean;
        }
    }
    let mut scores = vec![[0.0; 2]; c];
    if f <= c {
        let mut cov = vec![0.0; f * f];
        for i in 0..c {
            let row = &centered[i * f..(i + 1) * f];
            for a in 0..f {
                for b in a..f {
                    cov[a * f + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..f {
            for b in 0..a {
                cov[a * f + b] = cov[b * f + a];
            }
        }
        let (vals, vecs) = symmetric_eigen(f, &cov);
        for k in 0..2.min(f) {
            if vals[k] <= 0.0 {
                continue;
            }
            for (i, s) in scores.iter_mut().enumerate() {
                s[k] = centered[i * f..(i + 1) * f]
                    .iter()
                    .zip(&vecs[k])
                    .map(|(x, v)| x * v)
                    .sum();
            }
        }
    } else {
        let mut gram = vec![0.0; c * c];
        for i in 0..c {
            for j in i..c {
                let dot: f64 = centered[i * f..(i + 1) * f]
                    .iter()
                    .zip(&centered[j * f..(j + 1) * f])
                    .map(|(a, b)| a * b)
                    .sum();
                gram[i * c + j] = dot;
                gram[j * c + i] = dot;
            }
        }
        let (vals, vecs) = symmetric_eigen(c, &gram);
        for k in 0..2.min(c) {
            if vals[k] <= 0.0 {
                continue;
            }
            let sv = libm::sqrt(vals[k]);
            for (i, s) in scores.iter_mut().enumerate() {
                s[k] = vecs[k][i] * sv;
            }
        }
    }
    // Fix the sign of each axis so its largest-magnitude score is positive.
    for k in 0..2 {
        let mut best = 0.0f64;
        for s in &scores {
            if s[k].abs() > best.abs() {
                best = s[k];
            }
        }
        if best < 0.0 {
            scores.iter_mut().for_each(|s| s[k] = -s[k]);
        }
    }
    scores
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact t-SNE style neighbor embedding, initialized with a small seeded
/// Gaussian cloud.
fn neighbor_embedding(features: &ChannelFeatureMatrix, seed: u64) -> Vec<Point> {
    let n = features.rows;
    if n <= 3 {
        return pca(features);
    }
    let perplexity = 30.0f64.min((n - 1) as f64 / 3.0);
    let target = libm::log(perplexity);
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(features.row(i), features.row(j));
            d2[i * n + j] = d;
            d2[j * n + i] = d;
        }
    }
    // Conditional affinities with per-point bandwidth matched to the perplexity.
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let (mut lo, mut hi, mut beta) = (0.0f64, f64::INFINITY, 1.0f64);
        let row_min = (0..n)
            .filter(|&j| j != i)
            .map(|j| d2[i * n + j])
            .fold(f64::INFINITY, f64::min);
        for _ in 0..64 {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                let w = libm::exp(-(d2[i * n + j] - row_min) * beta);
                p[i * n + j] = w;
                sum += w;
                weighted += w * (d2[i * n + j] - row_min);
            }
            let entropy = libm::log(sum) + beta * weighted / sum;
            if (entropy - target).abs() < 1e-5 {
                break;
            }
            if entropy > target {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        let sum: f64 = (0..n).filter(|&j| j != i).map(|j| p[i * n + j]).sum();
        for j in (0..n).filter(|&j| j != i) {
            p[i * n + j] /= sum;
        }
    }
    let mut pij = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pij[i * n + j] = ((p[i * n + j] + p[j * n + i]) / (2.0 * n as f64)).max(1e-12);
            }
        }
    }

    let mut rng = seed::rng(seed);
    let mut y: Vec<Point> = (0..n)
        .map(|_| [rng.random_range(-1e-4..1e-4), rng.random_range(-1e-4..1e-4)])
        .collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let rate = (n as f64 / 12.0).max(50.0);
    let mut q = vec![0.0; n * n];
    for it in 0..750 {
        let exaggeration = if it < 100 { 12.0 } else { 1.0 };
        let momentum = if it < 100 { 0.5 } else { 0.8 };
        let mut qsum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                q[i * n + j] = w;
                q[j * n + i] = w;
                qsum += 2.0 * w;
            }
        }
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in (0..n).filter(|&j| j != i) {
                let w = q[i * n + j];
                let m = 4.0 * (exaggeration * pij[i * n + j] - w / qsum) * w;
                g[0] += m * (y[i][0] - y[j][0]);
                g[1] += m * (y[i][1] - y[j][1]);
            }
            for k in 0..2 {
                gains[i][k] = if (g[k] > 0.0) != (velocity[i][k] > 0.0) {
                    gains[i][k] + 0.2
                } else {
                    (gains[i][k] * 0.8).max(0.01)
                };
                velocity[i][k] = momentum * velocity[i][k] - rate * gains[i][k] * g[k];
            }
        }
        for (p, v) in y.iter_mut().zip(&velocity) {
            p[0] += v[0];
            p[1] += v[1];
        }
        let (mx, my) = y.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
        let (mx, my) = (mx / n as f64, my / n as f64);
        y.iter_mut().for_each(|p| {
            p[0] -= mx;
            p[1] -= my;
        });
    }
    y
}

/// Centers the points and scales them so the RMS distance from the centroid
/// is one. Coincident input collapses to the origin.
fn normalize_rms(points: &mut [Point]) {
    let n = points.len() as f64;
    if points.is_empty() {
        return;
    }
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
    let (mx, my) = (mx / n, my / n);
    let ms = points
        .iter()
        .map(|p| (p[0] - mx) * (p[0] - mx) + (p[1] - my) * (p[1] - my))
        .sum::<f64>()
        / n;
    let rms = libm::sqrt(ms);
    for p in points.iter_mut() {
        if rms > 1e-12 {
            *p = [(p[0] - mx) / rms, (p[1] - my) / rms];
        } else {
            *p = [0.0, 0.0];
        }
    }
}

/// Initial 2D positions for the channels, deterministic given `seed`.
pub fn initial_projection(
    features: &ChannelFeatureMatrix,
    method: ProjectionMethod,
    seed: u64,
) -> Result<ParticleLayout> {
    if features.rows == 0 {
        return Err(Error::Argument("cannot project an empty channel set".into()));
    }
    let mut coords = match method {
        ProjectionMethod::Pca => pca(features),
        ProjectionMethod::NeighborEmbedding => neighbor_embedding(features, seed),
    };
    normalize_rms(&mut coords);
    Ok(ParticleLayout::new(coords, seed))
}
