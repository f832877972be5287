//! Adaptive relocation of collocation points toward steep `∂û/∂t`.
//!
//! Each interior point moves a distance `β` along the normalized spatial
//! gradient of the fitted time-derivative surface, then is clamped back into
//! the partition cell it started in (with a small margin). Points on the
//! domain boundary never move.

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, invalid, Result};
use crate::osc2d::{CollocationField, SpaceTimeSurrogate, SplineSolution2D};

/// Gradients below this norm leave a point where it is.
pub const GRADIENT_THRESHOLD: f64 = 1e-12;
/// Clamp margin as a fraction of the cell width.
pub const CELL_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    /// Step length. `None` means half the smallest cell width.
    pub beta: Option<f64>,
    pub channel: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { beta: None, channel: 0 }
    }
}

impl AdaptiveConfig {
    pub fn step(&self, bx: &[f64], by: &[f64]) -> Result<f64> {
        let min_w = bx
            .windows(2)
            .chain(by.windows(2))
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        match self.beta {
            None => Ok(0.5 * min_w),
            Some(b) if b.is_finite() && b > 0.0 && b <= 0.5 * min_w => Ok(b),
            Some(b) => Err(invalid(format!("step length {b} must lie in (0, {}]", 0.5 * min_w))),
        }
    }
}

/// Point positions tied to the partition cell each one belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePoints {
    bx: Vec<f64>,
    by: Vec<f64>,
    positions: Vec<(f64, f64)>,
    cells: Vec<(usize, usize)>,
    fixed: Vec<bool>,
}

fn cell_of(bp: &[f64], v: f64) -> Result<usize> {
    crate::basis::locate(bp, v)
}

impl AdaptivePoints {
    /// Points in `[y][x]` order from a tensor layout.
    pub fn tensor(bx: Vec<f64>, by: Vec<f64>, xs: &[f64], ys: &[f64]) -> Result<Self> {
        let pts: Vec<(f64, f64)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
        Self::new(bx, by, pts)
    }

    pub fn new(bx: Vec<f64>, by: Vec<f64>, positions: Vec<(f64, f64)>) -> Result<Self> {
        if bx.len() < 2 || by.len() < 2 {
            return Err(invalid("need at least one cell per axis"));
        }
        let (x0, x1) = (bx[0], bx[bx.len() - 1]);
        let (y0, y1) = (by[0], by[by.len() - 1]);
        let mut cells = Vec::with_capacity(positions.len());
        let mut fixed = Vec::with_capacity(positions.len());
        for &(x, y) in &positions {
            cells.push((cell_of(&bx, x)?, cell_of(&by, y)?));
            let tx = 1e-12 * (x1 - x0);
            let ty = 1e-12 * (y1 - y0);
            fixed.push((x - x0).abs() <= tx || (x - x1).abs() <= tx || (y - y0).abs() <= ty || (y - y1).abs() <= ty);
        }
        Ok(Self { bx, by, positions, cells, fixed })
    }

    pub fn bx(&self) -> &[f64] {
        &self.bx
    }

    pub fn by(&self) -> &[f64] {
        &self.by
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn is_fixed(&self, k: usize) -> bool {
        self.fixed[k]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same cells, new coordinates. Fixed points must not move.
    pub fn with_positions(&self, positions: Vec<(f64, f64)>) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(dim_mismatch(format!("{} positions for {} points", positions.len(), self.len())));
        }
        Ok(Self { positions, ..self.clone() })
    }

    /// Moves every free point along the gradient of `surface`.
    pub fn step_along(&self, surface: &SplineSolution2D, beta: f64) -> Result<Self> {
        let mut out = self.positions.clone();
        for (k, p) in out.iter_mut().enumerate() {
            if self.fixed[k] {
                continue;
            }
            let (x, y) = *p;
            let gx = surface.evaluate(x, y, 1, 0)?;
            let gy = surface.evaluate(x, y, 0, 1)?;
            let norm = gx.hypot(gy);
            if !(norm >= GRADIENT_THRESHOLD) {
                continue;
            }
            let (cx, cy) = self.cells[k];
            *p = (
                clamp_to_cell(x + beta * gx / norm, self.bx[cx], self.bx[cx + 1]),
                clamp_to_cell(y + beta * gy / norm, self.by[cy], self.by[cy + 1]),
            );
        }
        self.with_positions(out)
    }
}

fn clamp_to_cell(v: f64, lo: f64, hi: f64) -> f64 {
    let m = CELL_MARGIN * (hi - lo);
    v.clamp(lo + m, hi - m)
}

/// `∂û/∂t` at the collocation points of a tensor surrogate, at an interior time.
pub fn time_derivative_field(st: &SpaceTimeSurrogate, t: f64, channel: usize) -> Result<CollocationField> {
    let (t0, t1) = st.time_range();
    if !(t > t0 && t < t1) {
        return Err(invalid(format!("time {t} must lie strictly inside ({t0}, {t1})")));
    }
    st.field_at(t, 1, channel)
}

/// One adaptation step of `points` driven by the surrogate at time `t`.
pub fn adapt_points(points: &AdaptivePoints, st: &SpaceTimeSurrogate, t: f64, cfg: &AdaptiveConfig) -> Result<AdaptivePoints> {
    let (t0, t1) = st.time_range();
    if !(t > t0 && t < t1) {
        return Err(invalid(format!("time {t} must lie strictly inside ({t0}, {t1})")));
    }
    let surface = st.time_derivative_surface(t, cfg.channel)?;
    points.step_along(&surface, cfg.step(&points.bx, &points.by)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osc2d::{fit_spacetime, gauss_coords};
    use crate::trajectory::Trajectory;

    fn unit(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    fn traj(n: usize, f: impl Fn(f64, f64, f64) -> f64) -> (Trajectory, Vec<f64>) {
        let xs = gauss_coords(&unit(n)).unwrap();
        let times = vec![0.0, 0.5, 1.0, 1.5];
        let mut frames = Vec::new();
        for &t in &times {
            for &y in &xs {
                for &x in &xs {
                    frames.push(f(x, y, t));
                }
            }
        }
        (Trajectory::new(times, xs.clone(), xs.clone(), 1, frames).unwrap(), xs)
    }

    #[test]
    fn ramp_moves_in_x_by_beta() {
        let (tr, xs) = traj(3, |x, _, t| t * x);
        let st = fit_spacetime(&tr, 3, 3).unwrap();
        let pts = AdaptivePoints::tensor(unit(3), unit(3), &xs, &xs).unwrap();
        let cfg = AdaptiveConfig::default();
        let beta = cfg.step(pts.bx(), pts.by()).unwrap();
        assert!((beta - 1.0 / 6.0).abs() < 1e-15);
        let out = adapt_points(&pts, &st, 0.7, &cfg).unwrap();
        for k in 0..pts.len() {
            let (x, y) = pts.positions()[k];
            let (nx, ny) = out.positions()[k];
            assert!((ny - y).abs() < 1e-12);
            if pts.is_fixed(k) {
                assert_eq!(nx, x);
            } else {
                let hi = pts.bx()[pts.cells()[k].0 + 1];
                let want = (x + beta).min(hi - CELL_MARGIN / 3.0);
                assert!((nx - want).abs() < 1e-12, "{nx} vs {want}");
            }
        }
    }

    #[test]
    fn stationary_is_identity() {
        let (tr, xs) = traj(2, |x, y, _| (3.0 * x).sin() * y);
        let st = fit_spacetime(&tr, 3, 3).unwrap();
        let pts = AdaptivePoints::tensor(unit(2), unit(2), &xs, &xs).unwrap();
        let out = adapt_points(&pts, &st, 0.9, &AdaptiveConfig::default()).unwrap();
        assert_eq!(out, pts);
    }

    #[test]
    fn time_must_be_interior() {
        let (tr, _) = traj(2, |x, _, t| t * x);
        let st = fit_spacetime(&tr, 3, 3).unwrap();
        assert!(time_derivative_field(&st, 0.0, 0).is_err());
        assert!(time_derivative_field(&st, 1.5, 0).is_err());
        let f = time_derivative_field(&st, 0.2, 0).unwrap();
        assert!((f.values().get(2, 3) - f.xs()[3]).abs() < 1e-10);
    }

    #[test]
    fn bad_beta() {
        let cfg = AdaptiveConfig { beta: Some(-1.0), channel: 0 };
        assert!(cfg.step(&unit(2), &unit(2)).is_err());
        let cfg = AdaptiveConfig { beta: Some(0.26), channel: 0 };
        assert!(cfg.step(&unit(2), &unit(2)).is_err());
        let cfg = AdaptiveConfig { beta: Some(0.25), channel: 0 };
        assert_eq!(cfg.step(&unit(2), &unit(2)).unwrap(), 0.25);
    }
}
