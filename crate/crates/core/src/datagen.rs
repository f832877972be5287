//! Reference data: finite-difference heat and damped-wave solvers and the
//! analytic test functions used by the interpolation comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
pub use crate::trajectory::Trajectory;

// ---------------------------------------------------------------------------
// analytic fields

#[derive(Clone, Copy, Debug)]
pub struct AnalyticField {
    pub name: &'static str,
    pub dims: usize,
    f: fn(f64, f64) -> f64,
}

fn quartic(x: f64, _: f64) -> f64 {
    x.powi(4) - 2.0 * x.powi(3) + 1.16 * x * x - 0.16 * x
}

fn sine1(x: f64, _: f64) -> f64 {
    (3.0 * std::f64::consts::PI * x).sin()
}

fn biquad(x: f64, y: f64) -> f64 {
    x * x * y * y - x * x * y - x * y * y + x * y
}

fn sine2(x: f64, y: f64) -> f64 {
    let p = 3.0 * std::f64::consts::PI;
    (p * x).sin() * (p * y).sin()
}

pub const ANALYTIC_NAMES: [&str; 4] = ["1d-linear", "1d-nonlinear", "2d-linear", "2d-nonlinear"];

impl AnalyticField {
    pub fn by_name(name: &str) -> Result<Self> {
        let (dims, f): (usize, fn(f64, f64) -> f64) = match name {
            "1d-linear" => (1, quartic),
            "1d-nonlinear" => (1, sine1),
            "2d-linear" => (2, biquad),
            "2d-nonlinear" => (2, sine2),
            other => return Err(Error::UnknownProblem(other.to_string())),
        };
        let name = ANALYTIC_NAMES.iter().find(|n| **n == name).unwrap();
        Ok(Self { name, dims, f })
    }

    /// A field from a plain function (for tests and ad-hoc comparisons).
    pub fn custom(name: &'static str, dims: usize, f: fn(f64, f64) -> f64) -> Self {
        Self { name, dims, f }
    }

    /// Exact value; `y` is ignored for 1D fields.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
}

/// Samples of a field on a uniform grid with `resolution` points per axis over [0, 1].
#[derive(Clone, Debug)]
pub struct AnalyticSamples {
    pub field: AnalyticField,
    pub xs: Vec<f64>,
    /// Empty for 1D fields.
    pub ys: Vec<f64>,
    /// `ys.len() x xs.len()` (a single row in 1D).
    pub values: Matrix,
}

pub fn uniform_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

pub fn analytic_field(name: &str, resolution: usize) -> Result<AnalyticSamples> {
    if resolution < 2 {
        return Err(invalid("resolution must be at least 2"));
    }
    let field = AnalyticField::by_name(name)?;
    let xs = uniform_points(resolution);
    let (ys, values) = if field.dims == 1 {
        let v = xs.iter().map(|&x| field.eval(x, 0.0)).collect();
        (vec![], Matrix::from_vec(1, resolution, v)?)
    } else {
        let ys = xs.clone();
        let mut v = Matrix::zeros(resolution, resolution);
        for (i, &y) in ys.iter().enumerate() {
            for (j, &x) in xs.iter().enumerate() {
                v.set(i, j, field.eval(x, y));
            }
        }
        (ys, v)
    };
    Ok(AnalyticSamples { field, xs, ys, values })
}

// ---------------------------------------------------------------------------
// heat equation

/// Explicit five-point scheme for `u_t = κ Δu` on the unit square with zero
/// Dirichlet boundary, on an `n x n` cell-centred grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatConfig {
    pub n: usize,
    pub diffusivity: f64,
    /// Internal time step; must satisfy `κ dt <= h² / 4`.
    pub dt: f64,
    /// Number of exported intervals.
    pub frames: usize,
    pub steps_per_frame: usize,
}

impl HeatConfig {
    /// 64 x 64 grid, exports every `export_dt` up to `horizon` with the largest stable step.
    pub fn standard(diffusivity: f64, export_dt: f64, horizon: f64) -> Self {
        let n = 64;
        let h = 1.0 / n as f64;
        let dt_max = h * h / (4.0 * diffusivity);
        let steps_per_frame = (export_dt / dt_max).ceil().max(1.0) as usize;
        Self {
            n,
            diffusivity,
            dt: export_dt / steps_per_frame as f64,
            frames: (horizon / export_dt).round() as usize,
            steps_per_frame,
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }
}

/// Cell-centre coordinates `(i + 1/2) h`.
pub fn cell_centres(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Sum of 1–3 Gaussian bumps with random centres and widths, row-major `n x n`.
pub fn gaussian_bumps(n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(1..=3);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.gen_range(0.25..0.75),
                rng.gen_range(0.25..0.75),
                rng.gen_range(0.06..0.15),
                rng.gen_range(0.5..1.0),
            )
        })
        .collect();
    let c = cell_centres(n);
    let mut m = Matrix::zeros(n, n);
    for (i, &y) in c.iter().enumerate() {
        for (j, &x) in c.iter().enumerate() {
            let v: f64 = bumps
                .iter()
                .map(|&(cx, cy, s, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
                .sum();
            m.set(i, j, v);
        }
    }
    m
}

pub fn heat_solve(cfg: &HeatConfig, initial: &Matrix) -> Result<Trajectory> {
    let n = cfg.n;
    if initial.shape() != (n, n) {
        return Err(invalid(format!("initial condition {:?} for a {n}x{n} grid", initial.shape())));
    }
    let h = cfg.h();
    let lam = cfg.diffusivity * cfg.dt / (h * h);
    if !(cfg.dt > 0.0) || lam > 0.25 + 1e-12 {
        return Err(Error::Unstable(format!(
            "κ dt / h² = {lam:.4} exceeds the explicit bound 1/4"
        )));
    }
    let bound = 10.0 * initial.max_abs().max(1e-300);
    let mut u = initial.data().to_vec();
    let mut next = vec![0.0; n * n];
    let mut frames = Vec::with_capacity((cfg.frames + 1) * n * n);
    frames.extend_from_slice(&u);
    for _ in 0..cfg.frames {
        for _ in 0..cfg.steps_per_frame {
            heat_step(&u, &mut next, n, lam);
            std::mem::swap(&mut u, &mut next);
        }
        let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !m.is_finite() || m > bound {
            return Err(Error::Unstable(format!("max |u| grew to {m:e}")));
        }
        frames.extend_from_slice(&u);
    }
    let dt_frame = cfg.dt * cfg.steps_per_frame as f64;
    let times = (0..=cfg.frames).map(|k| k as f64 * dt_frame).collect();
    let c = cell_centres(n);
    Trajectory::new(times, c.clone(), c, 1, frames)
}

fn heat_step(u: &[f64], out: &mut [f64], n: usize, lam: f64) {
    // antisymmetric ghost cells: u_ghost = -u_edge
    let at = |i: isize, j: isize| -> f64 {
        let (ni, nj) = (n as isize, n as isize);
        let mut s = 1.0;
        let ii = if i < 0 {
            s = -s;
            0
        } else if i >= ni {
            s = -s;
            ni - 1
        } else {
            i
        };
        let jj = if j < 0 {
            s = -s;
            0
        } else if j >= nj {
            s = -s;
            nj - 1
        } else {
            j
        };
        s * u[ii as usize * n + jj as usize]
    };
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let i = i as isize;
        for (j, o) in row.iter_mut().enumerate() {
            let j = j as isize;
            let c = u[i as usize * n + j as usize];
            let lap = at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1) - 4.0 * c;
            *o = c + lam * lap;
        }
    });
}

/// `sin(πx) sin(πy)` on the cell centres.
pub fn heat_eigenmode(n: usize) -> Matrix {
    let c = cell_centres(n);
    let mut m = Matrix::zeros(n, n);
    for (i, &y) in c.iter().enumerate() {
        for (j, &x) in c.iter().enumerate() {
            m.set(i, j, (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin());
        }
    }
    m
}

/// Discrete L² energy `h² Σ u²` of every frame.
pub fn l2_energy(traj: &Trajectory, channel: usize) -> Vec<f64> {
    let h2 = 1.0 / (traj.nx() * traj.ny()) as f64;
    (0..traj.n_times())
        .map(|k| {
            traj.frame(k).iter().skip(channel).step_by(traj.channels()).map(|v| v * v).sum::<f64>() * h2
        })
        .collect()
}

// ---------------------------------------------------------------------------
// damped wave equation

/// `w_tt + k w_t = c² Δw` on an `n x n` grid of spacing `length / n` with
/// zero-Neumann boundary, fourth-order 5x5 cross Laplacian and RK4 in time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub n: usize,
    pub length: f64,
    pub c: f64,
    pub k: f64,
    pub dt: f64,
    pub frames: usize,
    pub steps_per_frame: usize,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self { n: 64, length: 64.0, c: 330.0, k: 50.0, dt: 1e-3, frames: 10, steps_per_frame: 10 }
    }
}

impl WaveConfig {
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn courant(&self) -> f64 {
        self.c * self.dt / self.h()
    }
}

const STENCIL: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];

/// Fourth-order Laplacian with even reflection about the boundary faces
/// (`w_{-1} = w_0`, `w_{-2} = w_1`).
pub fn laplacian_5x5(w: &[f64], out: &mut [f64], n: usize, h: f64) {
    let inv = 1.0 / (h * h);
    let refl = |i: isize| -> usize {
        let ni = n as isize;
        (if i < 0 {
            -i - 1
        } else if i >= ni {
            2 * ni - 1 - i
        } else {
            i
        }) as usize
    };
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (s, coef) in STENCIL.iter().enumerate() {
                let d = s as isize - 2;
                acc += coef * w[refl(i as isize + d) * n + j];
                acc += coef * w[i * n + refl(j as isize + d)];
            }
            *o = acc * inv;
        }
    });
}

/// Discrete energy `½ Σ v² − ½ c² Σ w Δ_h w`, scaled by the cell area.
pub fn wave_energy(w: &[f64], v: &[f64], n: usize, h: f64, c: f64) -> f64 {
    let mut lap = vec![0.0; n * n];
    laplacian_5x5(w, &mut lap, n, h);
    let kin: f64 = v.iter().map(|x| x * x).sum();
    let pot: f64 = w.iter().zip(&lap).map(|(a, b)| a * b).sum();
    0.5 * h * h * (kin - c * c * pot)
}

pub fn wave_energies(cfg: &WaveConfig, traj: &Trajectory) -> Vec<f64> {
    let n = cfg.n;
    (0..traj.n_times())
        .map(|k| {
            let f = traj.frame(k);
            let w: Vec<f64> = f.iter().step_by(2).copied().collect();
            let v: Vec<f64> = f.iter().skip(1).step_by(2).copied().collect();
            wave_energy(&w, &v, n, cfg.h(), cfg.c)
        })
        .collect()
}

/// Gaussian bumps in `w` (same generator as the heat data), zero velocity.
pub fn wave_initial(n: usize, seed: u64) -> (Matrix, Matrix) {
    (gaussian_bumps(n, seed), Matrix::zeros(n, n))
}

/// Two channels `(w, ∂w/∂t)` per point.
pub fn wave_solve(cfg: &WaveConfig, w0: &Matrix, v0: &Matrix) -> Result<Trajectory> {
    let n = cfg.n;
    if w0.shape() != (n, n) || v0.shape() != (n, n) {
        return Err(invalid(format!("initial state shape does not match the {n}x{n} grid")));
    }
    if !(cfg.dt > 0.0) || cfg.courant() > std::f64::consts::FRAC_1_SQRT_2 + 1e-12 {
        return Err(Error::Unstable(format!(
            "CFL number c dt / h = {:.4} exceeds 1/sqrt(2)",
            cfg.courant()
        )));
    }
    let h = cfg.h();
    let (c2, k, dt) = (cfg.c * cfg.c, cfg.k, cfg.dt);
    let len = n * n;
    let mut w = w0.data().to_vec();
    let mut v = v0.data().to_vec();
    let rhs = |w: &[f64], v: &[f64], dw: &mut [f64], dv: &mut [f64]| {
        laplacian_5x5(w, dv, n, h);
        for i in 0..len {
            dw[i] = v[i];
            dv[i] = c2 * dv[i] - k * v[i];
        }
    };
    let mut k_w = vec![vec![0.0; len]; 4];
    let mut k_v = vec![vec![0.0; len]; 4];
    let (mut tw, mut tv) = (vec![0.0; len], vec![0.0; len]);
    let interleave = |w: &[f64], v: &[f64]| -> Vec<f64> { w.iter().zip(v).flat_map(|(a, b)| [*a, *b]).collect() };
    let mut frames = interleave(&w, &v);
    let bound = 1e3 * w0.max_abs().max(v0.max_abs()).max(1e-300);
    for _ in 0..cfg.frames {
        for _ in 0..cfg.steps_per_frame {
            for stage in 0..4 {
                let a = [0.0, 0.5, 0.5, 1.0][stage];
                if stage == 0 {
                    tw.copy_from_slice(&w);
                    tv.copy_from_slice(&v);
                } else {
                    for i in 0..len {
                        tw[i] = w[i] + a * dt * k_w[stage - 1][i];
                        tv[i] = v[i] + a * dt * k_v[stage - 1][i];
                    }
                }
                let (kw, kv) = (&mut k_w[stage], &mut k_v[stage]);
                rhs(&tw, &tv, kw, kv);
            }
            for i in 0..len {
                w[i] += dt / 6.0 * (k_w[0][i] + 2.0 * k_w[1][i] + 2.0 * k_w[2][i] + k_w[3][i]);
                v[i] += dt / 6.0 * (k_v[0][i] + 2.0 * k_v[1][i] + 2.0 * k_v[2][i] + k_v[3][i]);
            }
        }
        let m = w.iter().chain(&v).fold(0.0f64, |a, x| a.max(x.abs()));
        if !m.is_finite() || m > bound {
            return Err(Error::Unstable(format!("state grew to {m:e}")));
        }
        frames.extend(interleave(&w, &v));
    }
    let dt_frame = dt * cfg.steps_per_frame as f64;
    let times = (0..=cfg.frames).map(|i| i as f64 * dt_frame).collect();
    let coords: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    Trajectory::new(times, coords.clone(), coords, 2, frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        let f = AnalyticField::by_name("1d-linear").unwrap();
        assert_eq!(f.eval(0.0, 0.0), 0.0);
        assert!(f.eval(1.0, 0.0).abs() < 1e-15);
        let x: f64 = 0.2;
        assert_eq!(f.eval(x, 0.0), x.powi(4) - 2.0 * x.powi(3) + 1.16 * x * x - 0.16 * x);
        let s = AnalyticField::by_name("1d-nonlinear").unwrap();
        assert!((s.eval(1.0 / 6.0, 0.0) - 1.0).abs() < 1e-15);
        let b = AnalyticField::by_name("2d-linear").unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(b.eval(t, 0.0), 0.0);
            assert_eq!(b.eval(0.0, t), 0.0);
            assert!(b.eval(t, 1.0).abs() < 1e-15);
            assert!(b.eval(1.0, t).abs() < 1e-15);
        }
        assert!(matches!(analytic_field("3d", 8), Err(Error::UnknownProblem(_))));
        assert_eq!(analytic_field("2d-nonlinear", 9).unwrap().values.shape(), (9, 9));
    }

    #[test]
    fn heat_zero_stays_zero() {
        let cfg = HeatConfig { n: 16, diffusivity: 1.0, dt: 5e-4, frames: 3, steps_per_frame: 5 };
        let t = heat_solve(&cfg, &Matrix::zeros(16, 16)).unwrap();
        assert!(t.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn heat_rejects_unstable_step() {
        let cfg = HeatConfig { n: 16, diffusivity: 1.0, dt: 2e-3, frames: 1, steps_per_frame: 1 };
        assert!(matches!(heat_solve(&cfg, &Matrix::zeros(16, 16)), Err(Error::Unstable(_))));
    }

    #[test]
    fn wave_zero_and_cfl() {
        let cfg = WaveConfig { n: 16, length: 16.0, frames: 2, steps_per_frame: 3, ..Default::default() };
        let z = Matrix::zeros(16, 16);
        let t = wave_solve(&cfg, &z, &z).unwrap();
        assert!(t.data().iter().all(|v| *v == 0.0));
        let bad = WaveConfig { dt: 3e-3, ..cfg };
        assert!(matches!(wave_solve(&bad, &z, &z), Err(Error::Unstable(_))));
    }

    #[test]
    fn laplacian_is_symmetric() {
        let n = 7;
        let mut a = Matrix::zeros(n * n, n * n);
        let mut e = vec![0.0; n * n];
        let mut out = vec![0.0; n * n];
        for j in 0..n * n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            laplacian_5x5(&e, &mut out, n, 1.0);
            for i in 0..n * n {
                a.set(i, j, out[i]);
            }
        }
        for i in 0..n * n {
            for j in 0..n * n {
                assert!((a.get(i, j) - a.get(j, i)).abs() < 1e-14);
            }
        }
    }
}
