//! Linear interpolation of per-channel values between layout positions onto
//! a square pixel grid, and the tabular arrangement of group maps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use spade::handles::FixedVertexHandle;
use spade::{DelaunayTriangulation, Point2, PositionInTriangulation, Triangulation};

use crate::error::{Error, Result};
use crate::groups::{GroupKey, Schema, Variable};
use crate::layout::{ParticleLayout, Point};

pub const DEFAULT_RESOLUTION: usize = 100;
/// Margin around the layout's bounding box, as a fraction of its extent.
pub const MARGIN: f64 = 0.05;

/// How one pixel's value is formed from particle values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PixelWeights {
    /// Barycentric weights over up to three particles (unused slots weigh 0).
    Linear { ids: [usize; 3], weights: [f64; 3] },
    /// Outside the convex hull: value of the nearest particle.
    Nearest(usize),
}

impl PixelWeights {
    pub fn apply(&self, profile: &[f64]) -> f64 {
        match *self {
            Self::Nearest(i) => profile[i],
            Self::Linear { ids, weights } => {
                let mut v = 0.0;
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for (&i, &w) in ids.iter().zip(&weights) {
                    if w > 0.0 {
                        v += w * profile[i];
                        lo = lo.min(profile[i]);
                        hi = hi.max(profile[i]);
                    }
                }
                // Rounding must not push the blend past its vertex values.
                v.clamp(lo, hi)
            }
        }
    }
}

/// Interpolation weights for every pixel of a layout, shared by all groups
/// rendered on that layout.
#[derive(Debug, Clone)]
pub struct Rasterizer {
    resolution: usize,
    /// Left, top, pixel size.
    frame: (f64, f64, f64),
    pixels: Vec<PixelWeights>,
}

struct Mesh {
    tri: DelaunayTriangulation<Point2<f64>>,
    particle_of_vertex: Vec<usize>,
    coords: Vec<Point>,
}

impl Mesh {
    fn build(coords: &[Point]) -> Result<Self> {
        let mut tri = DelaunayTriangulation::<Point2<f64>>::new();
        let mut particle_of_vertex = Vec::new();
        for (i, p) in coords.iter().enumerate() {
            let h = tri
                .insert(Point2::new(p[0], p[1]))
                .map_err(|e| Error::NonFinite(format!("particle {i} cannot be triangulated: {e:?}")))?;
            if h.index() == particle_of_vertex.len() {
                particle_of_vertex.push(i);
            }
        }
        Ok(Self {
            tri,
            particle_of_vertex,
            coords: coords.to_vec(),
        })
    }

    fn particle(&self, h: FixedVertexHandle) -> usize {
        self.particle_of_vertex[h.index()]
    }

    fn nearest(&self, p: Point) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (i, c) in self.coords.iter().enumerate() {
            let d = (c[0] - p[0]) * (c[0] - p[0]) + (c[1] - p[1]) * (c[1] - p[1]);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn weights(&self, p: Point) -> PixelWeights {
        if self.coords.len() < 3 || self.tri.num_inner_faces() == 0 {
            return PixelWeights::Nearest(self.nearest(p));
        }
        match self.tri.locate(Point2::new(p[0], p[1])) {
            PositionInTriangulation::OnFace(face) => {
                let vs = self.tri.face(face).vertices();
                let ids = [vs[0].fix(), vs[1].fix(), vs[2].fix()].map(|h| self.particle(h));
                let pos = vs.map(|v| v.position());
                PixelWeights::Linear {
                    ids,
                    weights: barycentric(p, [[pos[0].x, pos[0].y], [pos[1].x, pos[1].y], [pos[2].x, pos[2].y]]),
                }
            }
            PositionInTriangulation::OnEdge(edge) => {
                let [a, b] = self.tri.directed_edge(edge).vertices();
                let (pa, pb) = (a.position(), b.position());
                let (dx, dy) = (pb.x - pa.x, pb.y - pa.y);
                let len2 = dx * dx + dy * dy;
                let t = if len2 > 0.0 {
                    (((p[0] - pa.x) * dx + (p[1] - pa.y) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (ia, ib) = (self.particle(a.fix()), self.particle(b.fix()));
                PixelWeights::Linear {
                    ids: [ia, ib, ia],
                    weights: [1.0 - t, t, 0.0],
                }
            }
            PositionInTriangulation::OnVertex(v) => PixelWeights::Nearest(self.particle(v)),
            PositionInTriangulation::OutsideOfConvexHull(_) | PositionInTriangulation::NoTriangulation => {
                PixelWeights::Nearest(self.nearest(p))
            }
        }
    }
}

/// Barycentric coordinates of `p` in triangle `t`, clipped to be
/// non-negative and renormalized.
fn barycentric(p: Point, t: [Point; 3]) -> [f64; 3] {
    let [a, b, c] = t;
    let det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
    let l0 = ((b[1] - c[1]) * (p[0] - c[0]) + (c[0] - b[0]) * (p[1] - c[1])) / det;
    let l1 = ((c[1] - a[1]) * (p[0] - c[0]) + (a[0] - c[0]) * (p[1] - c[1])) / det;
    let mut w = [l0.max(0.0), l1.max(0.0), (1.0 - l0 - l1).max(0.0)];
    let s = w[0] + w[1] + w[2];
    w.iter_mut().for_each(|x| *x /= s);
    w
}

impl Rasterizer {
    pub fn new(layout: &ParticleLayout, resolution: usize) -> Result<Self> {
        if layout.is_empty() {
            return Err(Error::Argument("cannot rasterize an empty layout".into()));
        }
        if resolution == 0 {
            return Err(Error::Argument("resolution must be positive".into()));
        }
        let mesh = Mesh::build(&layout.coords)?;
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &layout.coords {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let mut extent = (x1 - x0).max(y1 - y0);
        if extent <= 0.0 {
            extent = 1.0;
        }
        let size = extent * (1.0 + 2.0 * MARGIN);
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let (left, top) = (cx - 0.5 * size, cy + 0.5 * size);
        let px = size / resolution as f64;
        let mut pixels = Vec::with_capacity(resolution * resolution);
        for row in 0..resolution {
            for col in 0..resolution {
                let p = [left + (col as f64 + 0.5) * px, top - (row as f64 + 0.5) * px];
                pixels.push(mesh.weights(p));
            }
        }
        Ok(Self {
            resolution,
            frame: (left, top, px),
            pixels,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Plane coordinates of a pixel centre.
    pub fn pixel_center(&self, col: usize, row: usize) -> Point {
        let (left, top, px) = self.frame;
        [left + (col as f64 + 0.5) * px, top - (row as f64 + 0.5) * px]
    }

    pub fn pixel_weights(&self) -> &[PixelWeights] {
        &self.pixels
    }

    /// Row-major grid of interpolated values (row 0 at the top).
    pub fn rasterize(&self, profile: &[f64], particles: usize) -> Result<Vec<f64>> {
        if profile.len() != particles {
            return Err(Error::Argument(format!(
                "profile has {} values for {particles} particles",
                profile.len()
            )));
        }
        Ok(self.pixels.iter().map(|w| w.apply(profile)).collect())
    }
}

/// Interpolation weights at an arbitrary point of the plane.
pub fn weights_at(layout: &ParticleLayout, p: Point) -> Result<PixelWeights> {
    if layout.is_empty() {
        return Err(Error::Argument("cannot interpolate on an empty layout".into()));
    }
    Ok(Mesh::build(&layout.coords)?.weights(p))
}

/// One-shot rasterization of a single profile.
pub fn rasterize(layout: &ParticleLayout, profile: &[f64], resolution: usize) -> Result<Vec<f64>> {
    Rasterizer::new(layout, resolution)?.rasterize(profile, layout.len())
}

/// Cell placement of group maps in the frequency-table arrangement: rows run
/// over race × gender, columns over age.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridArrangement {
    pub rows: usize,
    pub cols: usize,
}

impl GridArrangement {
    pub fn for_schema(schema: &Schema) -> Self {
        let [nr, na, ng] = schema.sizes();
        Self {
            rows: nr * ng,
            cols: na,
        }
    }

    /// `(row, col)` of a group.
    pub fn cell(&self, schema: &Schema, key: GroupKey) -> (usize, usize) {
        let ng = schema.vocab(Variable::Gender).len();
        (
            usize::from(key.race) * ng + usize::from(key.gender),
            usize::from(key.age),
        )
    }

    /// Row label as `(race, gender)` category indices.
    pub fn row_categories(&self, schema: &Schema, row: usize) -> (u16, u16) {
        let ng = schema.vocab(Variable::Gender).len();
        ((row / ng) as u16, (row % ng) as u16)
    }
}

/// Row-major value grid as a vector sized `resolution²`, filled with `v`.
pub fn uniform_grid(resolution: usize, v: f64) -> Vec<f64> {
    vec![v; resolution * resolution]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn layout(coords: Vec<Point>) -> ParticleLayout {
        ParticleLayout::new(coords, 0)
    }

    #[test]
    fn constants_give_uniform_grid() {
        let mut rng = seed::rng(2);
        let coords: Vec<Point> = (0..25)
            .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let grid = rasterize(&layout(coords), &[0.37; 25], 100).unwrap();
        assert_eq!(grid.len(), 10_000);
        assert!(grid.iter().all(|&v| v == 0.37));
    }

    #[test]
    fn triangle_centroid_is_mean() {
        let l = layout(vec![[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]);
        let w = weights_at(&l, [1.0, 1.0]).unwrap();
        let v = w.apply(&[0.0, 0.0, 3.0]);
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn few_particles_use_nearest() {
        let l = layout(vec![[0.0, 0.0], [1.0, 0.0]]);
        let grid = rasterize(&l, &[-1.0, 2.0], 10).unwrap();
        assert!(grid.iter().all(|&v| v == -1.0 || v == 2.0));
        assert_eq!(grid[0], -1.0);
        assert_eq!(grid[9], 2.0);
        let single = rasterize(&layout(vec![[0.5, 0.5]]), &[4.0], 5).unwrap();
        assert!(single.iter().all(|&v| v == 4.0));
    }

    #[test]
    fn collinear_particles_fall_back() {
        let l = layout(vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        let grid = rasterize(&l, &[0.0, 1.0, 2.0, 3.0], 8).unwrap();
        assert!(grid.iter().all(|v| [0.0, 1.0, 2.0, 3.0].contains(v)));
    }

    #[test]
    fn profile_length_checked() {
        let l = layout(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(rasterize(&l, &[1.0, 2.0], 10).is_err());
    }

    #[test]
    fn fairface_grid_is_14_by_9() {
        let s = Schema::fairface();
        let g = GridArrangement::for_schema(&s);
        assert_eq!((g.rows, g.cols), (14, 9));
        let k = s.key("White", "20-29", "Female").unwrap();
        assert_eq!(g.cell(&s, k), (12, 3));
        assert_eq!(g.row_categories(&s, 12), (6, 0));
    }

    #[test]
    fn grid_tracks_schema_size() {
        let s = |n: usize| (0..n).map(|i| format!("c{i}")).collect::<Vec<_>>();
        let small = Schema::new(s(1), s(1), s(1)).unwrap();
        let g = GridArrangement::for_schema(&small);
        assert_eq!((g.rows, g.cols), (1, 1));
        let other = Schema::new(s(3), s(4), s(2)).unwrap();
        let g = GridArrangement::for_schema(&other);
        assert_eq!((g.rows, g.cols), (6, 4));
    }

    proptest! {
        #[test]
        fn interpolation_is_bounded(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -3.0f64..3.0), 1..40)
        ) {
            let coords: Vec<Point> = pts.iter().map(|&(x, y, _)| [x, y]).collect();
            let profile: Vec<f64> = pts.iter().map(|&(_, _, v)| v).collect();
            let lo = profile.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let grid = rasterize(&layout(coords), &profile, 24).unwrap();
            prop_assert!(grid.iter().all(|&v| v >= lo && v <= hi));
        }

        #[test]
        fn interpolation_is_odd(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -3.0f64..3.0), 3..30)
        ) {
            let coords: Vec<Point> = pts.iter().map(|&(x, y, _)| [x, y]).collect();
            let profile: Vec<f64> = pts.iter().map(|&(_, _, v)| v).collect();
            let neg: Vec<f64> = profile.iter().map(|v| -v).collect();
            let r = Rasterizer::new(&layout(coords), 16).unwrap();
            let a = r.rasterize(&profile, pts.len()).unwrap();
            let b = r.rasterize(&neg, pts.len()).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(x, y)| *x == -*y));
        }
    }
}
