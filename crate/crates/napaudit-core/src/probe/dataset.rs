use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::groups::{GroupAssignment, GroupKey};
use crate::nap::ActivationSource;
use crate::scalar::Scalar;
use crate::seed;
use crate::tensor::{downsample_map_into, downsampled_shape, DownsampleMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Val => "val",
        }
    }
}

/// Flattened probe inputs with class labels and a per-example split flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDataset {
    pub layer_id: u32,
    pub method: DownsampleMethod,
    pub dim: usize,
    pub num_classes: usize,
    /// `len × dim`, row-major.
    pub features: Vec<f32>,
    pub labels: Vec<usize>,
    pub split: Vec<Split>,
    pub example_ids: Vec<usize>,
    /// Groups that had no examples; their classes stay in the label space.
    pub skipped: Vec<GroupKey>,
}

impl ProbeDataset {
    pub fn new(
        dim: usize,
        num_classes: usize,
        features: Vec<f32>,
        labels: Vec<usize>,
        split: Vec<Split>,
    ) -> Result<Self> {
        let n = labels.len();
        if features.len() != n * dim || split.len() != n {
            return Err(Error::Shape(alloc::format!(
                "{n} labels, {} split flags and {} features do not fit dimension {dim}",
                split.len(),
                features.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Argument(alloc::format!(
                "label {bad} outside {num_classes} classes"
            )));
        }
        Ok(Self {
            layer_id: 0,
            method: DownsampleMethod::Subsample,
            dim,
            num_classes,
            features,
            labels,
            split,
            example_ids: (0..n).collect(),
            skipped: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == split).collect()
    }
}

/// Validation examples for a sampled group of size `n`: none for `n < 2`,
/// otherwise `max(1, round(0.1 · n))`.
pub fn validation_count(n: usize) -> usize {
    if n < 2 {
        0
    } else {
        (libm::round(0.1 * n as f64) as usize).max(1)
    }
}

/// Samples up to `max_per_group` examples per group, splits each group 90/10
/// and flattens the downsampled activations.
pub fn assemble_probe_dataset<S: ActivationSource>(
    source: &S,
    layer_id: u32,
    assignment: &GroupAssignment,
    method: DownsampleMethod,
    max_hw: usize,
    max_per_group: usize,
    seed: u64,
) -> Result<ProbeDataset> {
    if max_per_group == 0 {
        return Err(Error::Argument("max_per_group must be positive".into()));
    }
    let shape = source.example_shape().to_vec();
    let (dim, hwc) = match *shape.as_slice() {
        [d] => (d, None),
        [h, w, c] => {
            let [oh, ow, oc] = downsampled_shape(h, w, c, max_hw);
            (oh * ow * oc, Some([h, w, c]))
        }
        _ => {
            return Err(Error::Shape(alloc::format!(
                "layer shape must be [d] or [h, w, c], got {shape:?}"
            )))
        }
    };
    let num_classes = assignment.num_groups();
    let mut out = ProbeDataset {
        layer_id,
        method,
        dim,
        num_classes,
        features: Vec::new(),
        labels: Vec::new(),
        split: Vec::new(),
        example_ids: Vec::new(),
        skipped: Vec::new(),
    };
    let mut buf = vec![S::Elem::ZERO; source.example_len()];
    let mut reduced: Vec<S::Elem> = Vec::with_capacity(dim);
    for (class, (key, ids)) in assignment.iter().enumerate() {
        if ids.is_empty() {
            out.skipped.push(key);
            continue;
        }
        let mut sample = ids.to_vec();
        sample.sort_unstable();
        sample.shuffle(&mut seed::rng(seed::substream(seed, class as u64)));
        sample.truncate(max_per_group);
        let n_val = validation_count(sample.len());
        let n_train = sample.len() - n_val;
        for (pos, &id) in sample.iter().enumerate() {
            if id >= source.num_examples() {
                return Err(Error::Index {
                    index: id,
                    len: source.num_examples(),
                });
            }
            source.read_example(id, &mut buf)?;
            reduced.clear();
            match hwc {
                Some(hwc) => downsample_map_into(&buf, hwc, max_hw, method, &mut reduced),
                None => reduced.extend_from_slice(&buf),
            }
            out.features.extend(reduced.iter().map(|v| v.to_f64() as f32));
            out.labels.push(class);
            out.split.push(if pos < n_train { Split::Train } else { Split::Val });
            out.example_ids.push(id);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::Schema;
    use crate::nap::MemorySource;
    use crate::tensor::Tensor;

    #[test]
    fn split_rule() {
        assert_eq!(validation_count(128), 13);
        assert_eq!(128 - validation_count(128), 115);
        assert_eq!(validation_count(1), 0);
        assert_eq!(validation_count(2), 1);
        assert_eq!(validation_count(4), 1);
        assert_eq!(validation_count(15), 2);
        assert_eq!(validation_count(44), 4);
    }

    #[test]
    fn feature_dimension_of_a_14x14x512_layer() {
        assert_eq!(downsampled_shape(14, 14, 512, 8).iter().product::<usize>(), 25_088);
    }

    fn toy(counts: &[usize], shape: &[usize]) -> (MemorySource<f32>, GroupAssignment) {
        let schema = Schema::fairface();
        let total: usize = counts.iter().sum();
        let per: usize = shape.iter().product();
        let mut groups = vec![Vec::new(); schema.num_groups()];
        let mut next = 0;
        for (c, &n) in counts.iter().enumerate() {
            groups[c] = (next..next + n).collect();
            next += n;
        }
        let mut full = vec![total];
        full.extend_from_slice(shape);
        let data = (0..total * per).map(|v| (v % 97) as f32).collect();
        let src = MemorySource::new(Tensor::new(full, data).unwrap()).unwrap();
        (src, GroupAssignment::from_groups(schema, groups, None).unwrap())
    }

    #[test]
    fn per_group_sampling_and_split() {
        let (src, a) = toy(&[200, 1, 0, 10], &[4]);
        let pd = assemble_probe_dataset(&src, 0, &a, DownsampleMethod::Subsample, 8, 128, 5).unwrap();
        let count = |class: usize, split: Split| {
            (0..pd.len())
                .filter(|&i| pd.labels[i] == class && pd.split[i] == split)
                .count()
        };
        assert_eq!((count(0, Split::Train), count(0, Split::Val)), (115, 13));
        assert_eq!((count(1, Split::Train), count(1, Split::Val)), (1, 0));
        assert_eq!((count(3, Split::Train), count(3, Split::Val)), (9, 1));
        assert_eq!(pd.num_classes, 126);
        assert_eq!(pd.skipped.len(), 123);
        let again = assemble_probe_dataset(&src, 0, &a, DownsampleMethod::Subsample, 8, 128, 5).unwrap();
        assert_eq!(pd, again);
    }

    #[test]
    fn spatial_layers_are_downsampled() {
        let (src, a) = toy(&[3], &[16, 16, 2]);
        let pd = assemble_probe_dataset(&src, 0, &a, DownsampleMethod::AvgPool, 8, 128, 1).unwrap();
        assert_eq!(pd.dim, 8 * 8 * 2);
        assert_eq!(pd.features.len(), 3 * 128);
    }
}
