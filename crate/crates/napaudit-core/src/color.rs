//! Zero-symmetric blue–white–red colour scale and RGB rasters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];
/// Colour of `+vmax`. Its R/B mirror is the colour of `-vmax`.
pub const RED_END: Rgb = [255, 0, 0];
pub const BLUE_END: Rgb = [RED_END[2], RED_END[1], RED_END[0]];

pub const DEFAULT_PERCENTILE: f64 = 99.5;

/// Maps `[-vmax, vmax]` linearly onto blue → white → red, clamping outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorScale {
    vmax: f64,
}

impl ColorScale {
    pub fn new(vmax: f64) -> Result<Self> {
        if !(vmax > 0.0 && vmax.is_finite()) {
            return Err(Error::Argument(format!(
                "colour scale end must be positive and finite, got {vmax}"
            )));
        }
        Ok(Self { vmax })
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    pub fn map(&self, value: f64) -> Rgb {
        let t = (value / self.vmax).clamp(-1.0, 1.0);
        let a = t.abs();
        let lerp = |end: u8| libm::round(255.0 + a * (f64::from(end) - 255.0)) as u8;
        let c = [lerp(RED_END[0]), lerp(RED_END[1]), lerp(RED_END[2])];
        if t < 0.0 {
            [c[2], c[1], c[0]]
        } else {
            c
        }
    }
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Scale whose end is the larger magnitude of the `100 - p` and `p`
/// percentiles of `values`. Degenerate (all-zero) input gives `vmax = 1`.
pub fn build_color_scale(values: &[f64], p: f64) -> Result<ColorScale> {
    if values.is_empty() {
        return Err(Error::Argument("colour scale needs at least one value".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("colour scale input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile(&sorted, 100.0 - p);
    let hi = percentile(&sorted, p);
    let vmax = lo.abs().max(hi.abs());
    ColorScale::new(if vmax > 0.0 { vmax } else { 1.0 })
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        let mut pixels = vec![0u8; width * height * 3];
        for px in pixels.chunks_exact_mut(3) {
            px.copy_from_slice(&color);
        }
        Self { width, height, pixels }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, c: Rgb) {
        if x < self.width && y < self.height {
            let i = (y * self.width + x) * 3;
            self.pixels[i..i + 3].copy_from_slice(&c);
        }
    }

    /// Copies `src` with its top-left corner at `(x, y)`, clipping.
    pub fn blit(&mut self, src: &RgbImage, x: usize, y: usize) {
        for sy in 0..src.height {
            for sx in 0..src.width {
                self.put(x + sx, y + sy, src.get(sx, sy));
            }
        }
    }

    /// The same image with red and blue channels exchanged.
    pub fn swap_red_blue(&self) -> Self {
        let mut out = self.clone();
        for px in out.pixels.chunks_exact_mut(3) {
            px.swap(0, 2);
        }
        out
    }
}

/// Colours a square value grid (row-major, `resolution²` values).
pub fn render_group(grid: &[f64], resolution: usize, scale: &ColorScale) -> RgbImage {
    let mut img = RgbImage::filled(resolution, resolution, WHITE);
    for (px, &v) in img.pixels.chunks_exact_mut(3).zip(grid) {
        px.copy_from_slice(&scale.map(v));
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ends_and_centre() {
        let s = ColorScale::new(2.0).unwrap();
        assert_eq!(s.map(0.0), WHITE);
        assert_eq!(s.map(2.0), RED_END);
        assert_eq!(s.map(-2.0), BLUE_END);
        assert_eq!(s.map(50.0), RED_END);
        assert_eq!(s.map(-50.0), BLUE_END);
    }

    #[test]
    fn invalid_vmax() {
        assert!(ColorScale::new(0.0).is_err());
        assert!(ColorScale::new(f64::NAN).is_err());
    }

    #[test]
    fn symmetric_values_use_extreme() {
        let vals: Vec<f64> = (-300..=300).map(|i| i as f64 / 100.0).collect();
        let s = build_color_scale(&vals, 99.5).unwrap();
        // 99.5th percentile of 601 evenly spaced values in [-3, 3].
        assert!((s.vmax() - 2.97).abs() < 1e-9, "{}", s.vmax());
    }

    #[test]
    fn low_outlier_wins() {
        let mut vals = vec![-10.0];
        vals.extend((1..=10).map(|i| i as f64 / 10.0));
        // n = 11: the 0.5th percentile sits 0.05 of the way from -10 to 0.1;
        // the 99.5th sits 0.95 of the way from 0.9 to 1.0.
        let lo: f64 = -10.0 + 0.05 * 10.1;
        let hi = 0.9 + 0.95 * 0.1;
        let s = build_color_scale(&vals, 99.5).unwrap();
        assert!(lo.abs() > hi);
        assert!((s.vmax() - lo.abs()).abs() < 1e-12);
    }

    #[test]
    fn all_zero_gives_unit_scale_and_white() {
        let s = build_color_scale(&[0.0; 16], 99.5).unwrap();
        assert_eq!(s.vmax(), 1.0);
        let img = render_group(&[0.0; 100 * 100], 100, &s);
        assert!(img.pixels.chunks_exact(3).all(|p| p == WHITE));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(build_color_scale(&[], 99.5).is_err());
    }

    proptest! {
        #[test]
        fn mirror_symmetry(v in -10.0f64..10.0, vmax in 0.1f64..5.0) {
            let s = ColorScale::new(vmax).unwrap();
            let (p, n) = (s.map(v), s.map(-v));
            prop_assert_eq!(p, [n[2], n[1], n[0]]);
        }

        #[test]
        fn monotone_channels(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let s = ColorScale::new(3.0).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (cl, ch) = (s.map(lo), s.map(hi));
            prop_assert!(cl[0] <= ch[0]);
            prop_assert!(cl[2] >= ch[2]);
        }

        #[test]
        fn negated_grid_swaps_channels(grid in proptest::collection::vec(-5.0f64..5.0, 16)) {
            let s = ColorScale::new(2.5).unwrap();
            let neg: Vec<f64> = grid.iter().map(|v| -v).collect();
            prop_assert_eq!(render_group(&neg, 4, &s), render_group(&grid, 4, &s).swap_red_blue());
        }
    }
}
