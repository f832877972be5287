//! Toy training sets: reference trajectories on a fine grid plus the
//! collocation layout the surrogate runs on.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::LossContext;
use super::mpnn::GridGraph;
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::osc2d::{gauss_coords, ScatteredFitter, SpaceFit, SurfaceFitter};
use crate::trajectory::Trajectory;
use crate::datagen::{gaussian_bumps, heat_solve, wave_initial, wave_solve, HeatConfig, WaveConfig};

/// How reference values extend past the outermost cell centres.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Odd reflection (zero on the boundary face).
    Dirichlet,
    /// Even reflection (zero normal derivative).
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyKind {
    Heat,
    Wave,
}

impl std::str::FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(Self::Heat),
            "wave" => Ok(Self::Wave),
            other => Err(Error::UnknownProblem(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    /// Partition cells per axis; the layout has `2 * cells + 2` points per axis.
    pub cells: usize,
    /// Surrogate steps per rollout; the reference has `2 * steps + 1` frames.
    pub steps: usize,
    pub r_time: usize,
    /// Every `fine_stride`-th reference cell centre is an interpolation point.
    pub fine_stride: usize,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
    pub heat_diffusivity: f64,
    pub heat_dt: f64,
    pub wave_steps_per_frame: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            cells: 5,
            steps: 5,
            r_time: 3,
            fine_stride: 4,
            train: 8,
            test: 4,
            seed: 0,
            heat_diffusivity: 0.01,
            heat_dt: 0.1,
            wave_steps_per_frame: 5,
        }
    }
}

/// Reference trajectories (unit-square coordinates, channels scaled to unit
/// peak) and the collocation layout.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub boundary: Boundary,
    pub channels: usize,
    pub steps: usize,
    pub r_time: usize,
    pub bx: Vec<f64>,
    pub by: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub fine_stride: usize,
    pub channel_scale: Vec<f64>,
    pub train: Vec<Trajectory>,
    pub test: Vec<Trajectory>,
    tensor_fit: Arc<SurfaceFitter>,
    graph: GridGraph,
}

/// One rollout problem: graph, initial state and loss targets.
#[derive(Clone, Debug)]
pub struct Episode {
    pub graph: GridGraph,
    pub initial: Matrix,
    pub loss: LossContext,
    pub space: SpaceFit,
}

fn uniform(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Manifest written next to saved trajectories.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub boundary: Boundary,
    pub config: ToyConfig,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl Dataset {
    pub fn toy(kind: ToyKind, cfg: &ToyConfig) -> Result<Self> {
        match kind {
            ToyKind::Heat => Self::heat_toy(cfg),
            ToyKind::Wave => Self::wave_toy(cfg),
        }
    }

    /// Heat equation, 64 x 64 reference, Gaussian-bump initial states.
    pub fn heat_toy(cfg: &ToyConfig) -> Result<Self> {
        let h = HeatConfig::standard(cfg.heat_diffusivity, cfg.heat_dt, cfg.heat_dt * (2 * cfg.steps) as f64);
        let trajs = (0..cfg.train + cfg.test)
            .into_par_iter()
            .map(|i| heat_solve(&h, &gaussian_bumps(h.n, cfg.seed * 1000 + i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_trajectories("heat", Boundary::Dirichlet, trajs, cfg)
    }

    /// Damped wave equation (channels `w`, `∂w/∂t`), coordinates scaled to the unit square.
    pub fn wave_toy(cfg: &ToyConfig) -> Result<Self> {
        let w = WaveConfig { frames: 2 * cfg.steps, steps_per_frame: cfg.wave_steps_per_frame, ..Default::default() };
        let trajs = (0..cfg.train + cfg.test)
            .into_par_iter()
            .map(|i| {
                let (w0, v0) = wave_initial(w.n, cfg.seed * 1000 + i as u64);
                let t = wave_solve(&w, &w0, &v0)?;
                let s = |v: &[f64]| v.iter().map(|x| x / w.length).collect::<Vec<_>>();
                Trajectory::new(t.times().to_vec(), s(t.xs()), s(t.ys()), t.channels(), t.data().to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_trajectories("wave", Boundary::Neumann, trajs, cfg)
    }

    /// The first `cfg.train` trajectories train, the rest test. All must share
    /// one grid, channel count and time axis with `2 * cfg.steps + 1` frames.
    pub fn from_trajectories(name: &str, boundary: Boundary, trajs: Vec<Trajectory>, cfg: &ToyConfig) -> Result<Self> {
        if trajs.len() < cfg.train + cfg.test || cfg.train == 0 {
            return Err(invalid(format!("{} trajectories for {} train + {} test", trajs.len(), cfg.train, cfg.test)));
        }
        let first = &trajs[0];
        if trajs.iter().any(|t| t.xs() != first.xs() || t.ys() != first.ys() || t.times() != first.times() || t.channels() != first.channels()) {
            return Err(Error::Layout("trajectories disagree on grid, times or channels".into()));
        }
        if first.n_times() != 2 * cfg.steps + 1 {
            return Err(Error::Layout(format!("{} frames, expected 2K+1 = {}", first.n_times(), 2 * cfg.steps + 1)));
        }
        if cfg.fine_stride == 0 || cfg.fine_stride > first.nx().min(first.ny()) {
            return Err(invalid("fine stride out of range"));
        }
        let channels = first.channels();
        let mut scale = vec![0.0f64; channels];
        for t in &trajs[..cfg.train] {
            for (i, v) in t.data().iter().enumerate() {
                let c = i % channels;
                scale[c] = scale[c].max(v.abs());
            }
        }
        let scale: Vec<f64> = scale.into_iter().map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        let trajs = trajs
            .into_iter()
            .map(|t| {
                let data = t.data().iter().enumerate().map(|(i, v)| v / scale[i % channels]).collect();
                Trajectory::new(t.times().to_vec(), t.xs().to_vec(), t.ys().to_vec(), channels, data)
            })
            .collect::<Result<Vec<_>>>()?;
        let bx = uniform(cfg.cells);
        let by = bx.clone();
        let xs = gauss_coords(&bx)?;
        let ys = xs.clone();
        let tensor_fit = Arc::new(SurfaceFitter::new(bx.clone(), by.clone(), xs.clone(), ys.clone())?);
        let graph = GridGraph::grid(&xs, &ys)?;
        let mut trajs = trajs;
        let test = trajs.split_off(cfg.train);
        let test = test.into_iter().take(cfg.test).collect();
        Ok(Self {
            name: name.to_string(),
            boundary,
            channels,
            steps: cfg.steps,
            r_time: cfg.r_time,
            bx,
            by,
            xs,
            ys,
            fine_stride: cfg.fine_stride,
            channel_scale: scale,
            train: trajs,
            test,
            tensor_fit,
            graph,
        })
    }

    pub fn reference_times(&self) -> &[f64] {
        self.train[0].times()
    }

    /// Times of the surrogate frames (every other reference frame).
    pub fn frame_times(&self) -> Vec<f64> {
        self.reference_times().iter().step_by(2).copied().collect()
    }

    /// Reference frames after the initial one.
    pub fn interp_times(&self) -> Vec<f64> {
        self.reference_times()[1..].to_vec()
    }

    fn fine_indices(&self, n: usize) -> Vec<usize> {
        (0..n / self.fine_stride).map(|i| i * self.fine_stride + self.fine_stride / 2).collect()
    }

    pub fn fine_x(&self) -> Vec<f64> {
        let t = &self.train[0];
        self.fine_indices(t.nx()).into_iter().map(|i| t.xs()[i]).collect()
    }

    pub fn fine_y(&self) -> Vec<f64> {
        let t = &self.train[0];
        self.fine_indices(t.ny()).into_iter().map(|i| t.ys()[i]).collect()
    }

    /// Collocation points in `[y][x]` order.
    pub fn base_positions(&self) -> Vec<(f64, f64)> {
        self.ys.iter().flat_map(|&y| self.xs.iter().map(move |&x| (x, y))).collect()
    }

    pub fn graph(&self) -> &GridGraph {
        &self.graph
    }

    /// Bilinear reference value at `(x, y)` with ghost values beyond the
    /// outermost cell centres.
    pub fn sample(&self, traj: &Trajectory, k: usize, x: f64, y: f64) -> Vec<f64> {
        sample_reference(traj, self.boundary, k, x, y)
    }

    /// Builds the rollout problem for `traj` with nodes at `positions`
    /// (the tensor layout when `None`).
    pub fn episode(&self, traj: &Trajectory, positions: Option<&[(f64, f64)]>) -> Result<Episode> {
        let base = self.base_positions();
        let (pts, space, graph) = match positions {
            None => (base, SpaceFit::Tensor((*self.tensor_fit).clone()), self.graph.clone()),
            Some(p) if p == base.as_slice() => (base, SpaceFit::Tensor((*self.tensor_fit).clone()), self.graph.clone()),
            Some(p) => {
                let fit = ScatteredFitter::new(self.bx.clone(), self.by.clone(), p)?;
                (p.to_vec(), SpaceFit::Scattered(fit), self.graph.with_positions(p.to_vec())?)
            }
        };
        let c = self.channels;
        let at = |k: usize| -> Result<Matrix> {
            let data = pts.iter().flat_map(|&(x, y)| self.sample(traj, k, x, y)).collect();
            Matrix::from_vec(pts.len(), c, data)
        };
        let initial = at(0)?;
        let targets = (1..=self.steps).map(|k| at(2 * k)).collect::<Result<Vec<_>>>()?;
        let (fx, fy) = (self.fine_indices(traj.nx()), self.fine_indices(traj.ny()));
        let fine = (1..traj.n_times())
            .map(|k| {
                let data = fy
                    .iter()
                    .flat_map(|&iy| fx.iter().flat_map(move |&ix| (0..c).map(move |ch| traj.value(k, iy, ix, ch))))
                    .collect();
                Matrix::from_vec(fx.len() * fy.len(), c, data)
            })
            .collect::<Result<Vec<_>>>()?;
        let loss = LossContext::new(
            &self.frame_times(),
            self.r_time,
            &space,
            targets,
            &self.interp_times(),
            &self.fine_x(),
            &self.fine_y(),
            fine,
        )?;
        Ok(Episode { graph, initial, loss, space })
    }

    /// Writes every trajectory plus `dataset.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, cfg: &ToyConfig) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let unscale = |t: &Trajectory| -> Result<Trajectory> {
            let c = t.channels();
            let data = t.data().iter().enumerate().map(|(i, v)| v * self.channel_scale[i % c]).collect();
            Trajectory::new(t.times().to_vec(), t.xs().to_vec(), t.ys().to_vec(), c, data)
        };
        let mut names = (Vec::new(), Vec::new());
        for (split, list, out) in [("train", &self.train, &mut names.0), ("test", &self.test, &mut names.1)] {
            for (i, t) in list.iter().enumerate() {
                let file = format!("{split}_{i:03}.sctraj");
                unscale(t)?.save(dir.join(&file))?;
                out.push(file);
            }
        }
        let manifest = DatasetManifest { name: self.name.clone(), boundary: self.boundary, config: cfg.clone(), train: names.0, test: names.1 };
        let path = dir.join("dataset.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }

    /// Loads a dataset saved by [`Dataset::save`].
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<(Self, ToyConfig)> {
        let path = manifest_path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let m: DatasetManifest = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let trajs = m.train.iter().chain(&m.test).map(|f| Trajectory::load(dir.join(f))).collect::<Result<Vec<_>>>()?;
        let cfg = ToyConfig { train: m.train.len(), test: m.test.len(), ..m.config };
        Ok((Self::from_trajectories(&m.name, m.boundary, trajs, &cfg)?, cfg))
    }
}

/// Bilinear interpolation on a uniform cell-centred grid. Past the outermost
/// centres the ghost value is `-u` (Dirichlet) or `u` (Neumann) of the edge cell.
pub fn sample_reference(traj: &Trajectory, boundary: Boundary, k: usize, x: f64, y: f64) -> Vec<f64> {
    let sign = match boundary {
        Boundary::Dirichlet => -1.0,
        Boundary::Neumann => 1.0,
    };
    let axis = |coords: &[f64], v: f64| -> [(usize, f64, f64); 2] {
        let n = coords.len();
        let h = if n > 1 { coords[1] - coords[0] } else { 1.0 };
        let s = ((v - coords[0]) / h).clamp(-1.0, n as f64);
        let i0 = (s.floor() as isize).clamp(-1, n as isize - 1);
        let f = s - i0 as f64;
        let map = |i: isize| -> (usize, f64) {
            if i < 0 {
                (0, sign)
            } else if i >= n as isize {
                (n - 1, sign)
            } else {
                (i as usize, 1.0)
            }
        };
        let (a, sa) = map(i0);
        let (b, sb) = map(i0 + 1);
        [(a, sa, 1.0 - f), (b, sb, f)]
    };
    let ax = axis(traj.xs(), x);
    let ay = axis(traj.ys(), y);
    (0..traj.channels())
        .map(|c| {
            let mut acc = 0.0;
            for &(iy, sy, wy) in &ay {
                for &(ix, sx, wx) in &ax {
                    if wx * wy != 0.0 {
                        acc += wx * wy * sx * sy * traj.value(k, iy, ix, c);
                    }
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ToyConfig {
        ToyConfig { cells: 2, steps: 2, r_time: 2, train: 2, test: 1, ..Default::default() }
    }

    #[test]
    fn heat_episode_shapes() {
        let ds = Dataset::heat_toy(&small()).unwrap();
        assert_eq!(ds.xs.len(), 6);
        assert_eq!(ds.reference_times().len(), 5);
        assert_eq!(ds.frame_times().len(), 3);
        let ep = ds.episode(&ds.train[0], None).unwrap();
        assert_eq!(ep.initial.shape(), (36, 1));
        assert_eq!(ep.loss.steps(), 2);
        assert_eq!(ep.loss.interp_frames(), 4);
        assert_eq!(ds.fine_x().len(), 16);
    }

    #[test]
    fn sampling_hits_grid_values_and_boundaries() {
        let ds = Dataset::heat_toy(&small()).unwrap();
        let t = &ds.train[0];
        let v = ds.sample(t, 3, t.xs()[5], t.ys()[7]);
        assert_eq!(v[0], t.value(3, 7, 5, 0));
        // Dirichlet ghost: the boundary face is exactly zero
        assert!(ds.sample(t, 3, 0.0, t.ys()[7])[0].abs() < 1e-15);
        assert!(ds.sample(t, 3, t.xs()[9], 1.0)[0].abs() < 1e-15);
    }

    #[test]
    fn wave_is_two_channel_unit_square() {
        let ds = Dataset::wave_toy(&small()).unwrap();
        assert_eq!(ds.channels, 2);
        let t = &ds.train[0];
        assert!(t.xs()[0] > 0.0 && *t.xs().last().unwrap() < 1.0);
        let peak = ds.train.iter().flat_map(|t| t.data().iter().step_by(2)).fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-12);
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let ds = Dataset::heat_toy(&cfg).unwrap();
        let path = ds.save(dir.path(), &cfg).unwrap();
        let (back, _) = Dataset::load(&path).unwrap();
        assert_eq!(back.train.len(), 2);
        for (a, b) in back.train[1].data().iter().zip(ds.train[1].data()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(Dataset::load(dir.path().join("missing.json")).is_err());
    }
}
