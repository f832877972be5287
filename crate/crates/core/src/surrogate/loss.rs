//! Composite loss `L = L_s + L_i` on predicted rollouts.
//!
//! `L_s` compares predicted node states with reference values at the sample
//! points. `L_i` fits time splines through the predicted frames at every node,
//! evaluates them at the interpolation frames, fits a surface through each
//! such snapshot and compares it with reference values at fine points.

use std::sync::Arc;

use super::tape::{LinearSolver, Tape, Var};
use crate::error::{dim_mismatch, invalid, Result};
use crate::linalg::Matrix;
use crate::osc1d::time_system;
use crate::basis::HermiteBasis1D;
use crate::osc2d::SpaceFit;

#[derive(Clone, Debug)]
enum SpaceOp {
    Tensor {
        x: Arc<dyn LinearSolver>,
        y: Arc<dyn LinearSolver>,
        by_fine: Arc<Matrix>,
        bxt_fine: Arc<Matrix>,
        ny: usize,
        nx: usize,
    },
    Scattered {
        lu: Arc<dyn LinearSolver>,
        k_fine: Arc<Matrix>,
        dy: usize,
        dx: usize,
    },
}

/// Everything the loss needs besides the predicted frames.
#[derive(Clone, Debug)]
pub struct LossContext {
    nodes: usize,
    channels: usize,
    time: Arc<dyn LinearSolver>,
    p_time: Arc<Matrix>,
    e_time: Arc<Matrix>,
    space: SpaceOp,
    sample_targets: Vec<Arc<Matrix>>,
    /// `[interp frame][channel]`.
    fine_targets: Vec<Vec<Arc<Matrix>>>,
    select: Vec<Vec<Arc<Vec<usize>>>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossValues {
    pub total: f64,
    pub sample: f64,
    pub interp: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub total: Var,
    pub sample: Var,
    pub interp: Var,
}

impl LossContext {
    /// * `frame_times`: the `K + 1` times of the predicted frames.
    /// * `sample_targets`: `K` reference frames (`nodes x channels`) for steps `1..=K`.
    /// * `interp_times` / `fine_targets`: reference frames at fine points, each
    ///   `fine_x.len() * fine_y.len() x channels` in `[y][x]` order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        frame_times: &[f64],
        r_time: usize,
        space: &SpaceFit,
        sample_targets: Vec<Matrix>,
        interp_times: &[f64],
        fine_x: &[f64],
        fine_y: &[f64],
        fine_targets: Vec<Matrix>,
    ) -> Result<Self> {
        let nodes = space.n_points();
        let k = frame_times.len().checked_sub(1).ok_or_else(|| invalid("no frame times"))?;
        let channels = sample_targets.first().map(|m| m.cols()).ok_or_else(|| invalid("no sample targets"))?;
        if sample_targets.len() != k || sample_targets.iter().any(|m| m.shape() != (nodes, channels)) {
            return Err(dim_mismatch(format!("need {k} sample targets of {nodes} x {channels}")));
        }
        let n_fine = fine_x.len() * fine_y.len();
        if fine_targets.len() != interp_times.len() || fine_targets.iter().any(|m| m.shape() != (n_fine, channels)) {
            return Err(dim_mismatch(format!(
                "need {} fine targets of {n_fine} x {channels}",
                interp_times.len()
            )));
        }
        let ts = time_system(frame_times, r_time)?;
        let p_time = Arc::new(ts.selection_matrix());
        let e_time = Arc::new(ts.evaluation_matrix(interp_times, 0)?);
        let time: Arc<dyn LinearSolver> = ts.factorization().clone();
        let (hx, hy) = (space.basis_x(), space.basis_y());
        let (space_op, tensor) = match space {
            SpaceFit::Tensor(f) => {
                let mut by = Matrix::zeros(fine_y.len(), hy.dofs());
                for (i, &y) in fine_y.iter().enumerate() {
                    by.row_mut(i).copy_from_slice(&hy.row(y, 0)?);
                }
                let mut bx = Matrix::zeros(fine_x.len(), hx.dofs());
                for (i, &x) in fine_x.iter().enumerate() {
                    bx.row_mut(i).copy_from_slice(&hx.row(x, 0)?);
                }
                let op = SpaceOp::Tensor {
                    x: f.x().factorization().clone(),
                    y: f.y().factorization().clone(),
                    by_fine: Arc::new(by),
                    bxt_fine: Arc::new(bx.transpose()),
                    ny: f.y().points().len(),
                    nx: f.x().points().len(),
                };
                (op, true)
            }
            SpaceFit::Scattered(f) => {
                let pts: Vec<(f64, f64)> = fine_y.iter().flat_map(|&y| fine_x.iter().map(move |&x| (x, y))).collect();
                let k_fine = tensor_rows(hx, hy, &pts)?;
                let op = SpaceOp::Scattered { lu: f.dense().clone(), k_fine: Arc::new(k_fine), dy: hy.dofs(), dx: hx.dofs() };
                (op, false)
            }
        };
        let fine_targets = fine_targets
            .iter()
            .map(|m| {
                (0..channels)
                    .map(|c| {
                        let col = m.col_vec(c);
                        let t = if tensor {
                            Matrix::from_vec(fine_y.len(), fine_x.len(), col)
                        } else {
                            Matrix::from_vec(n_fine, 1, col)
                        };
                        t.map(Arc::new)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let width = nodes * channels;
        let select = (0..interp_times.len())
            .map(|j| (0..channels).map(|c| Arc::new((0..nodes).map(|n| j * width + n * channels + c).collect())).collect())
            .collect();
        Ok(Self {
            nodes,
            channels,
            time,
            p_time,
            e_time,
            space: space_op,
            sample_targets: sample_targets.into_iter().map(Arc::new).collect(),
            fine_targets,
            select,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn steps(&self) -> usize {
        self.sample_targets.len()
    }

    pub fn interp_frames(&self) -> usize {
        self.fine_targets.len()
    }

    /// `L_s` only; records no OSC nodes.
    pub fn sample_loss_on_tape(&self, tape: &mut Tape, frames: &[Var]) -> Result<Var> {
        if frames.len() != self.steps() + 1 {
            return Err(dim_mismatch(format!("{} frames for {} steps", frames.len(), self.steps())));
        }
        let mut acc: Option<Var> = None;
        for (f, t) in frames[1..].iter().zip(&self.sample_targets) {
            let e = tape.squared_error(*f, t.clone())?;
            acc = Some(match acc {
                Some(a) => tape.add(a, e)?,
                None => e,
            });
        }
        Ok(acc.expect("at least one step"))
    }

    /// `L_i` only.
    pub fn interp_loss_on_tape(&self, tape: &mut Tape, frames: &[Var]) -> Result<Var> {
        if frames.len() != self.steps() + 1 {
            return Err(dim_mismatch(format!("{} frames for {} steps", frames.len(), self.steps())));
        }
        let width = self.nodes * self.channels;
        let rows = frames.iter().map(|&f| tape.reshape(f, 1, width)).collect::<Result<Vec<_>>>()?;
        let y = tape.concat_rows(&rows)?;
        let rhs = tape.matmul_const_left(self.p_time.clone(), y)?;
        let a = tape.solve(self.time.clone(), rhs)?;
        let u = tape.matmul_const_left(self.e_time.clone(), a)?;
        let mut acc: Option<Var> = None;
        for (j, targets) in self.fine_targets.iter().enumerate() {
            for (c, target) in targets.iter().enumerate() {
                let idx = self.select[j][c].clone();
                let pred = match &self.space {
                    SpaceOp::Tensor { x, y, by_fine, bxt_fine, ny, nx } => {
                        let v = tape.select(u, idx, *ny, *nx)?;
                        let vt = tape.transpose(v);
                        let cxt = tape.solve(x.clone(), vt)?;
                        let cx = tape.transpose(cxt);
                        let coeffs = tape.solve(y.clone(), cx)?;
                        let left = tape.matmul_const_left(by_fine.clone(), coeffs)?;
                        tape.matmul_const_right(left, bxt_fine.clone())?
                    }
                    SpaceOp::Scattered { lu, k_fine, .. } => {
                        let v = tape.select(u, idx, self.nodes, 1)?;
                        let coeffs = tape.solve(lu.clone(), v)?;
                        tape.matmul_const_left(k_fine.clone(), coeffs)?
                    }
                };
                let e = tape.squared_error(pred, target.clone())?;
                acc = Some(match acc {
                    Some(a) => tape.add(a, e)?,
                    None => e,
                });
            }
        }
        acc.ok_or_else(|| invalid("no interpolation frames"))
    }

    pub fn loss_on_tape(&self, tape: &mut Tape, frames: &[Var]) -> Result<LossVars> {
        let sample = self.sample_loss_on_tape(tape, frames)?;
        let interp = self.interp_loss_on_tape(tape, frames)?;
        let total = tape.add(sample, interp)?;
        Ok(LossVars { total, sample, interp })
    }

    /// Loss of a fixed predicted trajectory (`K + 1` frames of `nodes x channels`).
    pub fn evaluate(&self, frames: &[Matrix]) -> Result<LossValues> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = frames.iter().map(|f| tape.constant(f.clone())).collect();
        let l = self.loss_on_tape(&mut tape, &vars)?;
        Ok(LossValues { total: tape.scalar(l.total), sample: tape.scalar(l.sample), interp: tape.scalar(l.interp) })
    }

    /// The coefficient count of the spatial fit (for diagnostics).
    pub fn space_dofs(&self) -> usize {
        match &self.space {
            SpaceOp::Tensor { by_fine, bxt_fine, .. } => by_fine.cols() * bxt_fine.rows(),
            SpaceOp::Scattered { dy, dx, .. } => dy * dx,
        }
    }
}

fn tensor_rows(hx: &HermiteBasis1D, hy: &HermiteBasis1D, pts: &[(f64, f64)]) -> Result<Matrix> {
    let (dx, dy) = (hx.dofs(), hy.dofs());
    let mut out = Matrix::zeros(pts.len(), dx * dy);
    for (k, &p) in pts.iter().enumerate() {
        let one = tensor_collocation_row(hx, hy, p)?;
        out.row_mut(k).copy_from_slice(&one);
    }
    Ok(out)
}

fn tensor_collocation_row(hx: &HermiteBasis1D, hy: &HermiteBasis1D, (x, y): (f64, f64)) -> Result<Vec<f64>> {
    let rx = hx.row(x, 0)?;
    let ry = hy.row(y, 0)?;
    let mut out = Vec::with_capacity(rx.len() * ry.len());
    for wy in &ry {
        out.extend(rx.iter().map(|wx| wy * wx));
    }
    Ok(out)
}

/// `(L, L_s, L_i)` of predicted frames against a prepared context.
pub fn composite_loss(pred: &[Matrix], ctx: &LossContext) -> Result<LossValues> {
    ctx.evaluate(pred)
}
