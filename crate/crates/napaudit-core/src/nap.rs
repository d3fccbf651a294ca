//! Group mean activations, the size-weighted expected activation, and Neuron
//! Activation Profiles (group mean minus expected activation).

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::groups::{union_groups, GroupAssignment, GroupKey, UnionKey, Variable};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Random access to the per-example activations of one layer.
pub trait ActivationSource {
    type Elem: Scalar;

    /// Per-example shape, `[h, w, c]` or `[d]`.
    fn example_shape(&self) -> &[usize];

    fn num_examples(&self) -> usize;

    /// Copies example `id` into `out` (length = product of the example shape).
    fn read_example(&self, id: usize, out: &mut [Self::Elem]) -> Result<()>;

    fn example_len(&self) -> usize {
        self.example_shape().iter().product()
    }
}

/// A layer held in memory as an `[n, ...]` tensor.
#[derive(Debug, Clone)]
pub struct MemorySource<T: Scalar> {
    tensor: Tensor<T>,
    example_shape: Vec<usize>,
}

impl<T: Scalar> MemorySource<T> {
    pub fn new(tensor: Tensor<T>) -> Result<Self> {
        if tensor.rank() < 2 {
            return Err(Error::Shape("a layer tensor needs a leading example axis".into()));
        }
        let example_shape = tensor.shape()[1..].to_vec();
        Ok(Self { tensor, example_shape })
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }
}

impl<T: Scalar> ActivationSource for MemorySource<T> {
    type Elem = T;

    fn example_shape(&self) -> &[usize] {
        &self.example_shape
    }

    fn num_examples(&self) -> usize {
        self.tensor.shape()[0]
    }

    fn read_example(&self, id: usize, out: &mut [T]) -> Result<()> {
        out.copy_from_slice(self.tensor.row(id)?);
        Ok(())
    }
}

impl<S: ActivationSource + ?Sized> ActivationSource for &S {
    type Elem = S::Elem;

    fn example_shape(&self) -> &[usize] {
        (**self).example_shape()
    }

    fn num_examples(&self) -> usize {
        (**self).num_examples()
    }

    fn read_example(&self, id: usize, out: &mut [S::Elem]) -> Result<()> {
        (**self).read_example(id, out)
    }
}

/// Which examples a profile summarizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProfileKey {
    Group(GroupKey),
    Union(UnionKey),
}

/// Mean activation of a set of examples, kept in 64-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMean {
    pub key: ProfileKey,
    pub layer_id: u32,
    pub mean: Tensor<f64>,
    pub count: usize,
}

/// Streaming mean over `ids`, reading one example at a time.
pub fn group_mean<S: ActivationSource>(source: &S, layer_id: u32, key: ProfileKey, ids: &[usize]) -> Result<GroupMean> {
    if ids.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let n = source.num_examples();
    let len = source.example_len();
    let mut buf = vec![S::Elem::ZERO; len];
    let mut mean = vec![0.0f64; len];
    for (k, &id) in ids.iter().enumerate() {
        if id >= n {
            return Err(Error::Index { index: id, len: n });
        }
        source.read_example(id, &mut buf)?;
        let inv = 1.0 / (k + 1) as f64;
        for (m, x) in mean.iter_mut().zip(&buf) {
            *m += (x.to_f64() - *m) * inv;
        }
    }
    Ok(GroupMean {
        key,
        layer_id,
        mean: Tensor::new(source.example_shape().to_vec(), mean)?,
        count: ids.len(),
    })
}

/// Count-weighted combination of group means, i.e. the mean over the union
/// of the underlying (disjoint) example sets.
pub fn combine_means(key: ProfileKey, means: &[&GroupMean]) -> Result<GroupMean> {
    let first = means.first().ok_or(Error::EmptyGroup)?;
    let shape = first.mean.shape().to_vec();
    let mut acc = vec![0.0f64; first.mean.len()];
    let mut total = 0usize;
    for m in means {
        if m.mean.shape() != shape.as_slice() {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: m.mean.shape().to_vec(),
            });
        }
        for (a, v) in acc.iter_mut().zip(m.mean.data()) {
            *a += m.count as f64 * v;
        }
        total += m.count;
    }
    if total == 0 {
        return Err(Error::EmptyGroup);
    }
    let inv = 1.0 / total as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(GroupMean {
        key,
        layer_id: first.layer_id,
        mean: Tensor::new(shape, acc)?,
        count: total,
    })
}

/// Size-weighted mean over all intersectional group means of a layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedActivation {
    pub layer_id: u32,
    pub expectation: Tensor<f64>,
    pub total_count: usize,
}

pub fn expected_activation(means: &[GroupMean]) -> Result<ExpectedActivation> {
    let non_empty: Vec<&GroupMean> = means.iter().filter(|m| m.count > 0).collect();
    if non_empty.is_empty() {
        return Err(Error::AllGroupsEmpty);
    }
    let combined = combine_means(non_empty[0].key, &non_empty)?;
    Ok(ExpectedActivation {
        layer_id: combined.layer_id,
        expectation: combined.mean,
        total_count: combined.count,
    })
}

/// Neuron Activation Profile of one group in one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Nap<T: Scalar = f32> {
    pub key: ProfileKey,
    pub layer_id: u32,
    pub count: usize,
    pub values: Tensor<T>,
    /// Spatial mean per channel; equal to `values` for flat layers.
    pub channel_profile: Vec<f64>,
}

/// Per-channel spatial means of an `[h, w, c]` tensor, or the values of a
/// `[d]` tensor.
pub fn channel_profile<T: Scalar>(values: &Tensor<T>) -> Result<Vec<f64>> {
    match *values.shape() {
        [_] => Ok(values.data().iter().map(|v| v.to_f64()).collect()),
        [h, w, c] => {
            let mut acc = vec![0.0f64; c];
            for px in values.data().chunks_exact(c) {
                for (a, v) in acc.iter_mut().zip(px) {
                    *a += v.to_f64();
                }
            }
            let inv = 1.0 / (h * w) as f64;
            acc.iter_mut().for_each(|a| *a *= inv);
            Ok(acc)
        }
        _ => Err(Error::Shape(format!(
            "layer shape must be [d] or [h, w, c], got {:?}",
            values.shape()
        ))),
    }
}

pub fn compute_nap<T: Scalar>(mean: &GroupMean, exp: &ExpectedActivation) -> Result<Nap<T>> {
    if mean.mean.shape() != exp.expectation.shape() {
        return Err(Error::ShapeMismatch {
            expected: exp.expectation.shape().to_vec(),
            actual: mean.mean.shape().to_vec(),
        });
    }
    let data = mean
        .mean
        .data()
        .iter()
        .zip(exp.expectation.data())
        .map(|(m, e)| T::from_f64(m - e))
        .collect();
    let values = Tensor::new(mean.mean.shape().to_vec(), data)?;
    let channel_profile = channel_profile(&values)?;
    Ok(Nap {
        key: mean.key,
        layer_id: mean.layer_id,
        count: mean.count,
        values,
        channel_profile,
    })
}

/// Unions of intersectional groups to profile alongside them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnionSpec {
    /// Every category combination of the given (one or two) variables.
    Variables(Vec<Variable>),
    /// One specific union.
    Key(UnionKey),
}

/// All profiles of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NapSet<T: Scalar = f32> {
    pub layer_id: u32,
    /// Non-empty intersectional groups, in class order.
    pub naps: Vec<Nap<T>>,
    pub unions: Vec<Nap<T>>,
    pub expectation: ExpectedActivation,
    /// Intersectional groups without examples; they get no profile.
    pub empty_groups: Vec<GroupKey>,
}

impl<T: Scalar> NapSet<T> {
    /// `Σ_G |G| · NAP(G)`, which vanishes up to rounding.
    pub fn weighted_sum(&self) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.expectation.expectation.len()];
        for nap in &self.naps {
            for (a, v) in acc.iter_mut().zip(nap.values.data()) {
                *a += nap.count as f64 * v.to_f64();
            }
        }
        acc
    }

    pub fn get(&self, key: GroupKey) -> Option<&Nap<T>> {
        self.naps.iter().find(|n| n.key == ProfileKey::Group(key))
    }
}

/// Means of every non-empty intersectional group, in class order.
pub fn intersectional_means<S: ActivationSource>(
    source: &S,
    layer_id: u32,
    assignment: &GroupAssignment,
) -> Result<Vec<GroupMean>> {
    assignment
        .non_empty()
        .map(|(key, ids)| group_mean(source, layer_id, ProfileKey::Group(key), ids))
        .collect()
}

/// Assembles a [`NapSet`] from already computed intersectional means. Union
/// profiles are built by combining member means and are normalized by the
/// intersectional expectation.
pub fn nap_set_from_means<T: Scalar>(
    layer_id: u32,
    assignment: &GroupAssignment,
    means: Vec<GroupMean>,
    unions: &[UnionSpec],
) -> Result<NapSet<T>> {
    let expectation = expected_activation(&means)?;
    let naps = means
        .iter()
        .map(|m| compute_nap(m, &expectation))
        .collect::<Result<Vec<_>>>()?;
    let empty_groups = assignment
        .iter()
        .filter(|(_, ids)| ids.is_empty())
        .map(|(k, _)| k)
        .collect();

    let mut union_keys = Vec::new();
    for spec in unions {
        match spec {
            UnionSpec::Variables(vars) => union_keys.extend(union_groups(assignment, vars)?.into_keys()),
            UnionSpec::Key(k) => {
                if !(1..=2).contains(&k.fixed_count()) {
                    return Err(Error::Argument("a union must fix one or two variables".to_string()));
                }
                union_keys.push(*k)
            }
        }
    }
    let mut union_naps = Vec::with_capacity(union_keys.len());
    for uk in union_keys {
        let members: Vec<&GroupMean> = means
            .iter()
            .filter(|m| matches!(m.key, ProfileKey::Group(g) if uk.contains(g)))
            .collect();
        if members.is_empty() {
            continue;
        }
        let mean = combine_means(ProfileKey::Union(uk), &members)?;
        union_naps.push(compute_nap(&mean, &expectation)?);
    }
    Ok(NapSet {
        layer_id,
        naps,
        unions: union_naps,
        expectation,
        empty_groups,
    })
}

/// Profiles for every non-empty intersectional group of one layer, plus the
/// requested unions.
pub fn compute_nap_set<T: Scalar, S: ActivationSource>(
    source: &S,
    layer_id: u32,
    assignment: &GroupAssignment,
    unions: &[UnionSpec],
) -> Result<NapSet<T>> {
    let means = intersectional_means(source, layer_id, assignment)?;
    nap_set_from_means(layer_id, assignment, means, unions)
}
