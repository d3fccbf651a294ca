use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{ParticleLayout, Point};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_ITERATIONS: usize = 1000;

/// Default relaxation step. A coincident pair is pushed apart by
/// `2 · step · |attr(0) − rep(0)| = 27 · step` in the first iteration, which
/// at this step lands within 0.02% of the equilibrium spacing.
pub const DEFAULT_STEP: f64 = 0.885;

/// `1.5 · (d + 1)^-3`
pub fn attraction(d: f64) -> f64 {
    1.5 * libm::pow(d + 1.0, -3.0)
}

/// `15 · exp(-d / 2)`
pub fn repulsion(d: f64) -> f64 {
    15.0 * libm::exp(-d / 2.0)
}

/// Net pair interaction; positive pulls the pair together.
pub fn pair_scalar(d: f64) -> f64 {
    attraction(d) - repulsion(d)
}

/// Distance at which attraction and repulsion balance, found by bisection.
pub fn equilibrium_distance() -> f64 {
    // Repulsion wins at 0, attraction wins far out.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while pair_scalar(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pair_scalar(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unit vector from particle `i` toward `j`. Coincident pairs get a seeded
/// random direction, antisymmetric in `(i, j)` so pair forces still cancel.
fn direction(coords: &[Point], i: usize, j: usize, tie_seed: u64) -> (f64, Point) {
    let (a, b) = (coords[i], coords[j]);
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let d = libm::hypot(dx, dy);
    if d > 0.0 {
        return (d, [dx / d, dy / d]);
    }
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let h = seed::substream(seed::substream(tie_seed, lo as u64), hi as u64);
    let angle = (h >> 11) as f64 / (1u64 << 53) as f64 * core::f64::consts::TAU;
    let u = [libm::cos(angle), libm::sin(angle)];
    if i < j {
        (0.0, u)
    } else {
        (0.0, [-u[0], -u[1]])
    }
}

/// Mean pair force on particle `i`: each other particle contributes
/// `(attr − rep)` along the unit vector toward it.
pub fn pair_forces(i: usize, coords: &[Point], tie_seed: u64) -> Point {
    let others = coords.len().saturating_sub(1);
    if others == 0 {
        return [0.0, 0.0];
    }
    let mut f = [0.0, 0.0];
    for j in (0..coords.len()).filter(|&j| j != i) {
        let (d, u) = direction(coords, i, j, tie_seed);
        let s = pair_scalar(d);
        f[0] += s * u[0];
        f[1] += s * u[1];
    }
    [f[0] / others as f64, f[1] / others as f64]
}

fn all_forces(coords: &[Point], tie_seed: u64, out: &mut [Point]) {
    let n = coords.len();
    out.iter_mut().for_each(|f| *f = [0.0, 0.0]);
    if n < 2 {
        return;
    }
    for i in 0..n {
        for j in i + 1..n {
            let (d, u) = direction(coords, i, j, tie_seed);
            let s = pair_scalar(d);
            let (fx, fy) = (s * u[0], s * u[1]);
            out[i][0] += fx;
            out[i][1] += fy;
            out[j][0] -= fx;
            out[j][1] -= fy;
        }
    }
    let inv = 1.0 / (n - 1) as f64;
    for f in out.iter_mut() {
        f[0] *= inv;
        f[1] *= inv;
    }
}

/// Runs `iterations` synchronous updates `x ← x + step · f(x)`.
pub fn relax(layout: &ParticleLayout, iterations: usize, step: f64) -> Result<ParticleLayout> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Argument(format!("relaxation step must be positive, got {step}")));
    }
    let mut coords = layout.coords.clone();
    if let Some(i) = coords.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::NonFinite(format!(
            "initial coordinate of particle {i} is not finite"
        )));
    }
    let mut forces = vec![[0.0, 0.0]; coords.len()];
    for it in 0..iterations {
        let tie_seed = seed::substream(layout.seed, (layout.iterations_run + it) as u64);
        all_forces(&coords, tie_seed, &mut forces);
        for (p, f) in coords.iter_mut().zip(&forces) {
            p[0] += step * f[0];
            p[1] += step * f[1];
        }
        if let Some(i) = coords.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::NonFinite(format!(
                "particle {i} left the finite plane at iteration {it}; the step {step} is too large"
            )));
        }
    }
    Ok(ParticleLayout {
        coords,
        seed: layout.seed,
        iterations_run: layout.iterations_run + iterations,
    })
}

/// Per-particle forces for the whole layout (used by tests and diagnostics).
pub fn force_field(coords: &[Point], tie_seed: u64) -> Vec<Point> {
    let mut out = vec![[0.0, 0.0]; coords.len()];
    all_forces(coords, tie_seed, &mut out);
    out
}
