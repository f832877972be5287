//! Space-oriented OSC on tensor-product partitions with cubic Hermite bases.
//!
//! A 1D Hermite interpolation system on `N` cells has the `2(N + 1)` unknowns
//! `(v_i, s_i)` (value and slope at each breakpoint) and the rows
//! `{u(x_0), two collocation rows per cell, u(x_N)}`. Rows are in sample order,
//! so the right-hand side is the sample vector itself. Surfaces are fitted
//! dimension by dimension: along x for every collocation row, then along y on
//! the resulting value and x-slope coefficients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::abd::{factorize, AbdFactorization, AbdMatrix, BlockStructure};
use crate::basis::{HermiteBasis1D, PartitionGrid};
use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::linalg::{gemm, DenseLu, Matrix};
use crate::osc1d::{time_breakpoints, time_system, InterpSystem};
use crate::trajectory::Trajectory;

/// Only cubic Hermite pieces are supported in 2D.
pub const SPACE_ORDER: usize = 3;

fn hermite_structure(cells: usize) -> Result<BlockStructure> {
    if cells == 1 {
        return BlockStructure::dense(4);
    }
    let mut rows = vec![2; cells];
    rows[0] = 3;
    rows[cells - 1] += 1;
    BlockStructure::new(rows, vec![4; cells], vec![2; cells - 1])
}

/// Gauss collocation coordinates (plus both ends) for a cubic partition.
pub fn gauss_coords(breakpoints: &[f64]) -> Result<Vec<f64>> {
    Ok(PartitionGrid::new(breakpoints.to_vec(), SPACE_ORDER)?.sample_points())
}

/// Factored 1D Hermite interpolation system for fixed sample points.
#[derive(Clone, Debug)]
pub struct HermiteInterp1D {
    basis: HermiteBasis1D,
    points: Vec<f64>,
    matrix: AbdMatrix,
    fac: Arc<AbdFactorization>,
}

impl HermiteInterp1D {
    pub fn new(breakpoints: Vec<f64>, points: Vec<f64>) -> Result<Self> {
        let basis = HermiteBasis1D::new(breakpoints)?;
        let n = basis.cells();
        if points.len() != 2 * n + 2 {
            return Err(Error::Layout(format!(
                "{} points for {n} cells: need 2N+2 = {}",
                points.len(),
                2 * n + 2
            )));
        }
        let bp = basis.breakpoints();
        let tol = 1e-12 * (bp[n] - bp[0]);
        if (points[0] - bp[0]).abs() > tol || (points[2 * n + 1] - bp[n]).abs() > tol {
            return Err(Error::Layout("boundary lines missing: first/last points must be the domain ends".into()));
        }
        let mut m = AbdMatrix::zeros(hermite_structure(n)?);
        for (row, &x) in points.iter().enumerate() {
            let cell = if row == 0 { 0 } else if row == 2 * n + 1 { n - 1 } else { (row - 1) / 2 };
            if x < bp[cell] - tol || x > bp[cell + 1] + tol {
                return Err(Error::Layout(format!(
                    "point {x} does not lie in cell {cell} = [{}, {}]",
                    bp[cell],
                    bp[cell + 1]
                )));
            }
            for (k, v) in basis.cell_row(cell, x, 0).iter().enumerate() {
                m.set(row, 2 * cell + k, *v)?;
            }
        }
        let fac = factorize(&m)?;
        Ok(Self { basis, points, matrix: m, fac: Arc::new(fac) })
    }

    pub fn gauss(breakpoints: Vec<f64>) -> Result<Self> {
        let pts = gauss_coords(&breakpoints)?;
        Self::new(breakpoints, pts)
    }

    pub fn basis(&self) -> &HermiteBasis1D {
        &self.basis
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.basis.dofs()
    }

    pub fn matrix(&self) -> &AbdMatrix {
        &self.matrix
    }

    pub fn factorization(&self) -> &Arc<AbdFactorization> {
        &self.fac
    }

    pub fn solve(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.fac.solve(values)
    }

    /// `points x dofs` matrix of basis values (derivative `deriv`).
    pub fn evaluation_matrix(&self, points: &[f64], deriv: usize) -> Result<Matrix> {
        let mut e = Matrix::zeros(points.len(), self.dim());
        for (i, &x) in points.iter().enumerate() {
            let c = self.basis.locate(x)?;
            for (k, v) in self.basis.cell_row(c, x, deriv).iter().enumerate() {
                e.set(i, 2 * c + k, *v);
            }
        }
        Ok(e)
    }
}

/// Values on a tensor grid of collocation points, with the partition they belong to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollocationField {
    bx: Vec<f64>,
    by: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `ys.len() x xs.len()`.
    values: Matrix,
}

impl CollocationField {
    pub fn new(bx: Vec<f64>, by: Vec<f64>, xs: Vec<f64>, ys: Vec<f64>, values: Matrix) -> Result<Self> {
        if values.shape() != (ys.len(), xs.len()) {
            return Err(dim_mismatch(format!(
                "values {:?} for a {}x{} point grid",
                values.shape(),
                ys.len(),
                xs.len()
            )));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("collocation coordinates must be strictly increasing"));
        }
        if values.data().iter().any(|v| !v.is_finite()) {
            return Err(invalid("field values must be finite"));
        }
        Ok(Self { bx, by, xs, ys, values })
    }

    /// Gauss layout on the given partitions; `values` is `ny x nx`.
    pub fn gauss(bx: Vec<f64>, by: Vec<f64>, values: Matrix) -> Result<Self> {
        let xs = gauss_coords(&bx)?;
        let ys = gauss_coords(&by)?;
        Self::new(bx, by, xs, ys, values)
    }

    /// Partition inferred from the points: two interior points per cell,
    /// breakpoints halfway between consecutive pairs.
    pub fn from_points(xs: Vec<f64>, ys: Vec<f64>, values: Matrix) -> Result<Self> {
        let bx = time_breakpoints(&xs, SPACE_ORDER)?;
        let by = time_breakpoints(&ys, SPACE_ORDER)?;
        Self::new(bx, by, xs, ys, values)
    }

    /// Gauss layout sampled from a function.
    pub fn sample(bx: Vec<f64>, by: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = gauss_coords(&bx)?;
        let ys = gauss_coords(&by)?;
        let mut v = Matrix::zeros(ys.len(), xs.len());
        for (i, &y) in ys.iter().enumerate() {
            for (j, &x) in xs.iter().enumerate() {
                v.set(i, j, f(x, y));
            }
        }
        Self::new(bx, by, xs, ys, v)
    }

    pub fn bx(&self) -> &[f64] {
        &self.bx
    }

    pub fn by(&self) -> &[f64] {
        &self.by
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn with_values(&self, values: Matrix) -> Result<Self> {
        Self::new(self.bx.clone(), self.by.clone(), self.xs.clone(), self.ys.clone(), values)
    }
}

/// Tensor-product cubic Hermite surface. `coeffs[(2j + a, 2i + b)]` multiplies
/// `Y_{j,a}(y) X_{i,b}(x)` where `a, b` select value (0) or slope (1) functions,
/// so `(2j, 2i)` is the value at `(x_i, y_j)`, `(2j, 2i+1)` its x-partial,
/// `(2j+1, 2i)` its y-partial and `(2j+1, 2i+1)` the cross partial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineSolution2D {
    hx: HermiteBasis1D,
    hy: HermiteBasis1D,
    coeffs: Matrix,
}

impl SplineSolution2D {
    pub fn new(hx: HermiteBasis1D, hy: HermiteBasis1D, coeffs: Matrix) -> Result<Self> {
        if coeffs.shape() != (hy.dofs(), hx.dofs()) {
            return Err(dim_mismatch("coefficient shape disagrees with the bases"));
        }
        Ok(Self { hx, hy, coeffs })
    }

    pub fn basis_x(&self) -> &HermiteBasis1D {
        &self.hx
    }

    pub fn basis_y(&self) -> &HermiteBasis1D {
        &self.hy
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    /// Value or first partial (`dx`, `dy` each 0 or 1).
    pub fn evaluate(&self, x: f64, y: f64, dx: usize, dy: usize) -> Result<f64> {
        let cx = self.hx.locate(x)?;
        let cy = self.hy.locate(y)?;
        Ok(self.eval_cells(cx, cy, x, y, dx, dy))
    }

    /// Evaluates the piece on cell `(cx, cy)` (usable for one-sided limits).
    pub fn eval_cells(&self, cx: usize, cy: usize, x: f64, y: f64, dx: usize, dy: usize) -> f64 {
        let rx = self.hx.cell_row(cx, x, dx);
        let ry = self.hy.cell_row(cy, y, dy);
        let mut acc = 0.0;
        for (a, wy) in ry.iter().enumerate() {
            let row = self.coeffs.row(2 * cy + a);
            let s: f64 = rx.iter().enumerate().map(|(b, wx)| wx * row[2 * cx + b]).sum();
            acc += wy * s;
        }
        acc
    }

    /// Largest one-sided jump of value and first partials across interior
    /// breakpoint lines, sampled at `samples` points along each line.
    pub fn continuity_defect(&self, samples: usize) -> f64 {
        let bx = self.hx.breakpoints();
        let by = self.hy.breakpoints();
        let mut worst = 0.0f64;
        let along = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * (k as f64 + 0.5) / samples as f64;
        for i in 1..bx.len() - 1 {
            for k in 0..samples {
                let y = along(by[0], by[by.len() - 1], k);
                let cy = self.hy.locate(y).unwrap();
                for (dx, dy) in [(0, 0), (1, 0), (0, 1)] {
                    let l = self.eval_cells(i - 1, cy, bx[i], y, dx, dy);
                    let r = self.eval_cells(i, cy, bx[i], y, dx, dy);
                    worst = worst.max((l - r).abs());
                }
            }
        }
        for j in 1..by.len() - 1 {
            for k in 0..samples {
                let x = along(bx[0], bx[bx.len() - 1], k);
                let cx = self.hx.locate(x).unwrap();
                for (dx, dy) in [(0, 0), (1, 0), (0, 1)] {
                    let l = self.eval_cells(cx, j - 1, x, by[j], dx, dy);
                    let r = self.eval_cells(cx, j, x, by[j], dx, dy);
                    worst = worst.max((l - r).abs());
                }
            }
        }
        worst
    }
}

/// Reusable dimension-by-dimension fitter for a fixed point layout.
#[derive(Clone, Debug)]
pub struct SurfaceFitter {
    x: HermiteInterp1D,
    y: HermiteInterp1D,
}

impl SurfaceFitter {
    pub fn new(bx: Vec<f64>, by: Vec<f64>, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Ok(Self { x: HermiteInterp1D::new(bx, xs)?, y: HermiteInterp1D::new(by, ys)? })
    }

    pub fn for_field(field: &CollocationField) -> Result<Self> {
        Self::new(field.bx.clone(), field.by.clone(), field.xs.clone(), field.ys.clone())
    }

    pub fn x(&self) -> &HermiteInterp1D {
        &self.x
    }

    pub fn y(&self) -> &HermiteInterp1D {
        &self.y
    }

    /// Points in `[y][x]` order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.y.points.iter().flat_map(|&y| self.x.points.iter().map(move |&x| (x, y))).collect()
    }

    /// Fits an `ny x nx` value matrix.
    pub fn fit(&self, values: &Matrix) -> Result<SplineSolution2D> {
        let (ny, nx) = (self.y.points.len(), self.x.points.len());
        if values.shape() != (ny, nx) {
            return Err(dim_mismatch(format!("values {:?} for a {ny}x{nx} layout", values.shape())));
        }
        // along x for every row: (dx x ny)
        let cx_t = self.x.fac.solve_matrix(&values.transpose())?;
        // along y for every x-dof: (dy x dx)
        let coeffs = self.y.fac.solve_matrix(&cx_t.transpose())?;
        SplineSolution2D::new(self.x.basis.clone(), self.y.basis.clone(), coeffs)
    }
}

pub fn fit_surface(field: &CollocationField) -> Result<SplineSolution2D> {
    SurfaceFitter::for_field(field)?.fit(&field.values)
}

pub fn evaluate_surface(s: &SplineSolution2D, x: f64, y: f64, deriv: (usize, usize)) -> Result<f64> {
    s.evaluate(x, y, deriv.0, deriv.1)
}

/// Fit through values at arbitrary (non-tensor) points, one per degree of
/// freedom, by a dense solve of the tensor-basis collocation matrix.
#[derive(Clone, Debug)]
pub struct ScatteredFitter {
    hx: HermiteBasis1D,
    hy: HermiteBasis1D,
    points: Vec<(f64, f64)>,
    matrix: Matrix,
    lu: Arc<DenseLu>,
}

impl ScatteredFitter {
    pub fn new(bx: Vec<f64>, by: Vec<f64>, points: &[(f64, f64)]) -> Result<Self> {
        let hx = HermiteBasis1D::new(bx)?;
        let hy = HermiteBasis1D::new(by)?;
        let a = tensor_collocation_matrix(&hx, &hy, points)?;
        let lu = DenseLu::factorize(&a)?;
        Ok(Self { hx, hy, points: points.to_vec(), matrix: a, lu: Arc::new(lu) })
    }

    pub fn dense(&self) -> &Arc<DenseLu> {
        &self.lu
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Exact 1-norm condition number, from the explicit inverse.
    pub fn condition_number(&self) -> Result<f64> {
        let n = self.matrix.rows();
        let norm = |cols: &mut dyn Iterator<Item = f64>| cols.fold(0.0f64, f64::max);
        let a1 = norm(&mut (0..n).map(|j| (0..n).map(|i| self.matrix.get(i, j).abs()).sum::<f64>()));
        let mut inv1 = 0.0f64;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.lu.solve(&e)?;
            e[j] = 0.0;
            inv1 = inv1.max(col.iter().map(|v| v.abs()).sum());
        }
        Ok(a1 * inv1)
    }

    pub fn fit(&self, values: &[f64]) -> Result<SplineSolution2D> {
        let c = self.lu.solve(values)?;
        SplineSolution2D::new(self.hx.clone(), self.hy.clone(), Matrix::from_vec(self.hy.dofs(), self.hx.dofs(), c)?)
    }
}

/// Rows `kron(Y(y_k), X(x_k))` over the flattened `(y-dof, x-dof)` coefficients.
pub fn tensor_collocation_matrix(hx: &HermiteBasis1D, hy: &HermiteBasis1D, points: &[(f64, f64)]) -> Result<Matrix> {
    let (dx, dy) = (hx.dofs(), hy.dofs());
    if points.len() != dx * dy {
        return Err(Error::Layout(format!("{} points for {} surface coefficients", points.len(), dx * dy)));
    }
    let mut a = Matrix::zeros(points.len(), dx * dy);
    for (k, &(x, y)) in points.iter().enumerate() {
        let cx = hx.locate(x)?;
        let cy = hy.locate(y)?;
        let rx = hx.cell_row(cx, x, 0);
        let ry = hy.cell_row(cy, y, 0);
        for (p, wy) in ry.iter().enumerate() {
            for (q, wx) in rx.iter().enumerate() {
                a.set(k, (2 * cy + p) * dx + 2 * cx + q, wy * wx);
            }
        }
    }
    Ok(a)
}

/// Space-oriented fitter for one fixed point layout.
#[derive(Clone, Debug)]
pub enum SpaceFit {
    /// Tensor layout, values ordered `[y][x]`.
    Tensor(SurfaceFitter),
    /// Arbitrary points, values in point order.
    Scattered(ScatteredFitter),
}

impl SpaceFit {
    pub fn n_points(&self) -> usize {
        match self {
            SpaceFit::Tensor(f) => f.x.points.len() * f.y.points.len(),
            SpaceFit::Scattered(f) => f.points.len(),
        }
    }

    pub fn basis_x(&self) -> &HermiteBasis1D {
        match self {
            SpaceFit::Tensor(f) => &f.x.basis,
            SpaceFit::Scattered(f) => &f.hx,
        }
    }

    pub fn basis_y(&self) -> &HermiteBasis1D {
        match self {
            SpaceFit::Tensor(f) => &f.y.basis,
            SpaceFit::Scattered(f) => &f.hy,
        }
    }

    /// Sample points in value order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        match self {
            SpaceFit::Tensor(f) => f.points(),
            SpaceFit::Scattered(f) => f.points.clone(),
        }
    }

    pub fn fit_flat(&self, values: &[f64]) -> Result<SplineSolution2D> {
        match self {
            SpaceFit::Tensor(f) => f.fit(&Matrix::from_vec(f.y.points.len(), f.x.points.len(), values.to_vec())?),
            SpaceFit::Scattered(f) => f.fit(values),
        }
    }
}

/// Time-oriented fits at every spatial point plus on-demand space-oriented fits.
#[derive(Clone, Debug)]
pub struct SpaceTimeSurrogate {
    time: InterpSystem,
    space: SpaceFit,
    channels: usize,
    /// Time-spline coefficients: `time dofs x (points * channels)`.
    coeffs: Matrix,
}

pub fn fit_spacetime(traj: &Trajectory, r_time: usize, r_space: usize) -> Result<SpaceTimeSurrogate> {
    if r_space != SPACE_ORDER {
        return Err(invalid(format!("space order {r_space} unsupported: the Hermite path is cubic (3)")));
    }
    let bx = time_breakpoints(traj.xs(), SPACE_ORDER)?;
    let by = time_breakpoints(traj.ys(), SPACE_ORDER)?;
    let space = SurfaceFitter::new(bx, by, traj.xs().to_vec(), traj.ys().to_vec())?;
    let y = Matrix::from_vec(traj.n_times(), traj.frame_len(), traj.data().to_vec())?;
    SpaceTimeSurrogate::new(traj.times(), SpaceFit::Tensor(space), traj.channels(), &y, r_time)
}

impl SpaceTimeSurrogate {
    /// `frames` is `times x (points * channels)`, each row ordered `[point][channel]`.
    pub fn new(times: &[f64], space: SpaceFit, channels: usize, frames: &Matrix, r_time: usize) -> Result<Self> {
        if channels == 0 || frames.shape() != (times.len(), space.n_points() * channels) {
            return Err(dim_mismatch(format!(
                "frames {:?} for {} times, {} points, {channels} channels",
                frames.shape(),
                times.len(),
                space.n_points()
            )));
        }
        let time = time_system(times, r_time)?;
        let mut rhs = Matrix::zeros(time.dim(), frames.cols());
        gemm(&time.selection_matrix(), false, frames, false, &mut rhs, 0.0);
        let coeffs = time.factorization().solve_matrix(&rhs)?;
        Ok(Self { time, space, channels, coeffs })
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.time.grid().lo(), self.time.grid().hi())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn space(&self) -> &SpaceFit {
        &self.space
    }

    /// Frame `[point][c]` of the time splines (or their `deriv`-th time
    /// derivative) at time `t`.
    pub fn frame_at(&self, t: f64, deriv: usize) -> Result<Vec<f64>> {
        let e = self.time.evaluation_matrix(&[t], deriv)?;
        Ok(e.matmul(&self.coeffs)?.into_vec())
    }

    /// One channel of [`Self::frame_at`], in point order.
    pub fn values_at(&self, t: f64, deriv: usize, channel: usize) -> Result<Vec<f64>> {
        if channel >= self.channels {
            return Err(invalid(format!("channel {channel} of {}", self.channels)));
        }
        let f = self.frame_at(t, deriv)?;
        Ok(f.iter().skip(channel).step_by(self.channels).copied().collect())
    }

    /// Tensor layouts only.
    pub fn field_at(&self, t: f64, deriv: usize, channel: usize) -> Result<CollocationField> {
        let SpaceFit::Tensor(fit) = &self.space else {
            return Err(Error::Layout("collocation fields need a tensor point layout".into()));
        };
        let (ny, nx) = (fit.y.points.len(), fit.x.points.len());
        let v = Matrix::from_vec(ny, nx, self.values_at(t, deriv, channel)?)?;
        CollocationField::new(
            fit.x.basis.breakpoints().to_vec(),
            fit.y.basis.breakpoints().to_vec(),
            fit.x.points.clone(),
            fit.y.points.clone(),
            v,
        )
    }

    pub fn surface_at(&self, t: f64, channel: usize) -> Result<SplineSolution2D> {
        self.space.fit_flat(&self.values_at(t, 0, channel)?)
    }

    /// Surface of `∂û/∂t` at time `t`.
    pub fn time_derivative_surface(&self, t: f64, channel: usize) -> Result<SplineSolution2D> {
        self.space.fit_flat(&self.values_at(t, 1, channel)?)
    }

    pub fn query(&self, x: f64, y: f64, t: f64, channel: usize) -> Result<f64> {
        self.surface_at(t, channel)?.evaluate(x, y, 0, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn dof_bookkeeping() {
        // N = 2: 2N+2 = 6 dofs per axis, 36 unknowns and 36 points,
        // of which (N(r-1))^2 = 16 are interior.
        let f = CollocationField::sample(unit(2), unit(2), |x, y| x * y).unwrap();
        assert_eq!(f.xs().len(), 6);
        let interior = (f.xs().len() - 2) * (f.ys().len() - 2);
        assert_eq!(interior, 16);
    }

    #[test]
    fn bilinear_reproduction() {
        let f = CollocationField::sample(unit(3), vec![0.0, 0.2, 0.7, 1.0], |x, y| x * y).unwrap();
        let s = fit_surface(&f).unwrap();
        for &(x, y) in &[(0.1, 0.9), (0.5, 0.5), (0.33, 0.71), (1.0, 0.0)] {
            assert_abs_diff_eq!(s.evaluate(x, y, 0, 0).unwrap(), x * y, epsilon = 1e-13);
            assert_abs_diff_eq!(s.evaluate(x, y, 1, 0).unwrap(), y, epsilon = 1e-12);
            assert_abs_diff_eq!(s.evaluate(x, y, 0, 1).unwrap(), x, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_field() {
        let f = CollocationField::sample(unit(2), unit(4), |_, _| -3.5).unwrap();
        let s = fit_surface(&f).unwrap();
        assert_abs_diff_eq!(s.evaluate(0.4, 0.8, 0, 0).unwrap(), -3.5, epsilon = 1e-13);
        assert_abs_diff_eq!(s.evaluate(0.4, 0.8, 1, 0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.evaluate(0.4, 0.8, 0, 1).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn scattered_matches_tensor_fit_on_tensor_points() {
        let f = CollocationField::sample(unit(2), unit(3), |x, y| (3.0 * x).sin() + x * y * y).unwrap();
        let s = fit_surface(&f).unwrap();
        let pts: Vec<(f64, f64)> = f.ys().iter().flat_map(|&y| f.xs().iter().map(move |&x| (x, y))).collect();
        let sf = ScatteredFitter::new(unit(2), unit(3), &pts).unwrap();
        let s2 = sf.fit(f.values().data()).unwrap();
        for (a, b) in s.coeffs().data().iter().zip(s2.coeffs().data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn layout_errors() {
        let v = Matrix::zeros(5, 5);
        assert!(CollocationField::from_points(unit(4), unit(4), v).is_err());
        assert!(HermiteInterp1D::new(unit(2), vec![0.1, 0.2, 0.3, 0.6, 0.8, 1.0]).is_err());
    }

    #[test]
    fn spacetime_constant() {
        let xs = gauss_coords(&unit(2)).unwrap();
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let n = xs.len() * xs.len();
        let traj = Trajectory::new(times, xs.clone(), xs, 1, vec![0.75; 4 * n]).unwrap();
        let st = fit_spacetime(&traj, 3, 3).unwrap();
        assert_abs_diff_eq!(st.query(0.3, 0.6, 1.7, 0).unwrap(), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(st.time_derivative_surface(1.5, 0).unwrap().evaluate(0.2, 0.2, 0, 0).unwrap(), 0.0, epsilon = 1e-12);
    }
}
