//! Topographic layout of a layer's channels: a 2D similarity projection
//! followed by particle force relaxation.

mod forces;
mod projection;

pub use forces::{
    attraction, equilibrium_distance, force_field, pair_forces, pair_scalar, relax, repulsion, DEFAULT_ITERATIONS,
    DEFAULT_STEP,
};
pub use projection::{initial_projection, symmetric_eigen, ChannelFeatureMatrix, ProjectionMethod};

use alloc::vec::Vec;

pub type Point = [f64; 2];

/// 2D coordinates, one per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleLayout {
    pub coords: Vec<Point>,
    pub seed: u64,
    pub iterations_run: usize,
}

impl ParticleLayout {
    pub fn new(coords: Vec<Point>, seed: u64) -> Self {
        Self {
            coords,
            seed,
            iterations_run: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Smallest pairwise distance, `None` for fewer than two particles.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, a) in self.coords.iter().enumerate() {
            for b in &self.coords[i + 1..] {
                let d = distance(*a, *b);
                best = Some(best.map_or(d, |x| x.min(d)));
            }
        }
        best
    }
}

pub(crate) fn distance(a: Point, b: Point) -> f64 {
    libm::hypot(b[0] - a[0], b[1] - a[1])
}
