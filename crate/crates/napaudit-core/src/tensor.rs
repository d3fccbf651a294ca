//! Dense row-major tensors and spatial downsampling of feature maps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A dense, row-major tensor with finite elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Builds a tensor, checking that `shape` matches `data` and that every
    /// element is finite.
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected = shape_len(&shape)?;
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {} elements but {} were given",
                shape,
                expected,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor element {pos} is {:?}", data[pos])));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape_len(&shape)?;
        Ok(Self {
            shape,
            data: vec![T::ZERO; len],
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Multiplies every element by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let data = self.data.iter().map(|&v| T::from_f64(v.to_f64() * alpha)).collect();
        Self::new(self.shape.clone(), data)
    }

    /// Converts element type (through `f64`).
    pub fn cast<U: Scalar>(&self) -> Result<Tensor<U>> {
        Tensor::new(
            self.shape.clone(),
            self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        )
    }

    /// Number of elements per entry of the leading axis.
    pub fn row_len(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    /// The `index`-th entry along the leading axis as a flat slice.
    pub fn row(&self, index: usize) -> Result<&[T]> {
        let n = *self
            .shape
            .first()
            .ok_or_else(|| Error::Shape("scalar tensor has no rows".into()))?;
        if index >= n {
            return Err(Error::Index { index, len: n });
        }
        let len = self.row_len();
        Ok(&self.data[index * len..(index + 1) * len])
    }
}

fn shape_len(shape: &[usize]) -> Result<usize> {
    if shape.contains(&0) {
        return Err(Error::Shape(format!("shape {shape:?} has a zero-length axis")));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Shape(format!("shape {shape:?} overflows")))
}

/// How feature maps are reduced to the probe input resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DownsampleMethod {
    /// Every n-th value along both spatial axes, anchored at the top-left.
    Subsample,
    /// Mean over non-overlapping n×n windows; ragged edge windows average only
    /// the cells they cover.
    AvgPool,
}

impl DownsampleMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Subsample => "subsample",
            Self::AvgPool => "avgpool",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "subsample" => Some(Self::Subsample),
            "avgpool" | "avg_pool" | "average-pooling" => Some(Self::AvgPool),
            _ => None,
        }
    }
}

/// Stride/window used to bring `max(h, w)` down to at most `max_hw`.
pub fn downsample_factor(h: usize, w: usize, max_hw: usize) -> usize {
    let max_hw = max_hw.max(1);
    h.max(w).div_ceil(max_hw).max(1)
}

/// Output shape `[h', w', c]` for an `[h, w, c]` feature map.
pub fn downsampled_shape(h: usize, w: usize, c: usize, max_hw: usize) -> [usize; 3] {
    let n = downsample_factor(h, w, max_hw);
    [h.div_ceil(n), w.div_ceil(n), c]
}

/// Downsamples one `[h, w, c]` map given as a flat slice, appending to `out`.
pub fn downsample_map_into<T: Scalar>(
    input: &[T],
    [h, w, c]: [usize; 3],
    max_hw: usize,
    method: DownsampleMethod,
    out: &mut Vec<T>,
) {
    debug_assert_eq!(input.len(), h * w * c);
    let n = downsample_factor(h, w, max_hw);
    if n == 1 {
        out.extend_from_slice(input);
        return;
    }
    let (oh, ow) = (h.div_ceil(n), w.div_ceil(n));
    match method {
        DownsampleMethod::Subsample => {
            for i in 0..oh {
                for j in 0..ow {
                    let base = ((i * n) * w + j * n) * c;
                    out.extend_from_slice(&input[base..base + c]);
                }
            }
        }
        DownsampleMethod::AvgPool => {
            let mut acc = vec![0.0f64; c];
            for i in 0..oh {
                let rows = i * n..((i + 1) * n).min(h);
                for j in 0..ow {
                    let cols = j * n..((j + 1) * n).min(w);
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    let count = (rows.len() * cols.len()) as f64;
                    for y in rows.clone() {
                        for x in cols.clone() {
                            let base = (y * w + x) * c;
                            for (a, v) in acc.iter_mut().zip(&input[base..base + c]) {
                                *a += v.to_f64();
                            }
                        }
                    }
                    out.extend(acc.iter().map(|&a| T::from_f64(a / count)));
                }
            }
        }
    }
}

/// Downsamples an `[h, w, c]` map or an `[n, h, w, c]` batch of maps.
pub fn downsample<T: Scalar>(t: &Tensor<T>, max_hw: usize, method: DownsampleMethod) -> Result<Tensor<T>> {
    let (batch, hwc) = match *t.shape() {
        [h, w, c] => (None, [h, w, c]),
        [n, h, w, c] => (Some(n), [h, w, c]),
        _ => {
            return Err(Error::Shape(format!(
                "downsampling needs a rank-3 map or rank-4 batch, got shape {:?}",
                t.shape()
            )))
        }
    };
    let per = hwc.iter().product::<usize>();
    let [oh, ow, oc] = downsampled_shape(hwc[0], hwc[1], hwc[2], max_hw);
    let mut out = Vec::with_capacity(batch.unwrap_or(1) * oh * ow * oc);
    for chunk in t.data().chunks_exact(per) {
        downsample_map_into(chunk, hwc, max_hw, method, &mut out);
    }
    let shape = match batch {
        Some(n) => vec![n, oh, ow, oc],
        None => vec![oh, ow, oc],
    };
    Tensor::new(shape, out)
}

pub fn downsample_subsample<T: Scalar>(t: &Tensor<T>, max_hw: usize) -> Result<Tensor<T>> {
    downsample(t, max_hw, DownsampleMethod::Subsample)
}

pub fn downsample_avgpool<T: Scalar>(t: &Tensor<T>, max_hw: usize) -> Result<Tensor<T>> {
    downsample(t, max_hw, DownsampleMethod::AvgPool)
}
