//! One-dimensional orthogonal spline collocation.
//!
//! The unknowns are `r + 1` monomial coefficients per cell, ordered cell by
//! cell. Rows are ordered: left boundary, the collocation rows of cell 0, then
//! for every later cell the two C¹ matching rows at its left breakpoint
//! followed by its own collocation rows, and finally the right boundary. With
//! that ordering the system is almost block diagonal:
//!
//! ```text
//! block 0      : {bc_left, colloc(0)}                 cols [0, r+1)
//! block i >= 1 : {C0(i-1,i), C1(i-1,i), colloc(i)}    cols [(i-1)(r+1), (i+1)(r+1))
//! last block   : additionally bc_right
//! ```

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abd::{factorize, AbdFactorization, AbdMatrix, BlockStructure};
use crate::basis::{monomial_eval, PartitionGrid};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;

/// How the per-cell polynomial is parameterized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellBasis {
    /// `Σ a_{i,j} s^j` with `s = (x - x_i) / h_i`; well conditioned.
    #[default]
    Local,
    /// `Σ a_{i,j} x^j` in the global coordinate.
    Global,
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `c2 u'' + c1 u' + c0 u = f` with `u(lo) = b1`, `u(hi) = b2`.
#[derive(Clone)]
pub struct OdeSpec {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub rhs: ScalarFn,
    pub bc: (f64, f64),
}

impl fmt::Debug for OdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSpec")
            .field("c0", &self.c0)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("bc", &self.bc)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum Osc1dMode {
    Ode(OdeSpec),
    /// Sample abscissae (first and last at the domain ends) and values.
    Interp { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct Osc1dProblem {
    pub grid: PartitionGrid,
    pub mode: Osc1dMode,
    pub basis: CellBasis,
}

impl Osc1dProblem {
    pub fn ode(grid: PartitionGrid, spec: OdeSpec) -> Self {
        Self { grid, mode: Osc1dMode::Ode(spec), basis: CellBasis::Local }
    }

    pub fn interp(grid: PartitionGrid, times: Vec<f64>, values: Vec<f64>) -> Self {
        Self { grid, mode: Osc1dMode::Interp { times, values }, basis: CellBasis::Local }
    }

    pub fn with_basis(mut self, basis: CellBasis) -> Self {
        self.basis = basis;
        self
    }
}

/// Solved C¹ piecewise polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineSolution1D {
    breakpoints: Vec<f64>,
    order: usize,
    basis: CellBasis,
    coeffs: Vec<Vec<f64>>,
    condition: f64,
}

impl SplineSolution1D {
    fn from_flat(breakpoints: Vec<f64>, order: usize, basis: CellBasis, flat: &[f64], condition: f64) -> Self {
        let coeffs = flat.chunks(order + 1).map(<[f64]>::to_vec).collect();
        Self { breakpoints, order, basis, coeffs, condition }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn basis(&self) -> CellBasis {
        self.basis
    }

    /// Coefficients per cell in the solution's own basis.
    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// 1-norm condition estimate of the collocation matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn evaluate(&self, t: f64, deriv: usize) -> Result<f64> {
        let c = crate::basis::locate(&self.breakpoints, t)?;
        Ok(self.eval_cell(c, t, deriv))
    }

    /// Evaluates the polynomial piece of `cell` at `t` (which may lie outside the cell).
    pub fn eval_cell(&self, cell: usize, t: f64, deriv: usize) -> f64 {
        match self.basis {
            CellBasis::Global => monomial_eval(&self.coeffs[cell], t, deriv),
            CellBasis::Local => {
                let a = self.breakpoints[cell];
                let h = self.breakpoints[cell + 1] - a;
                monomial_eval(&self.coeffs[cell], (t - a) / h, deriv) / h.powi(deriv as i32)
            }
        }
    }

    /// Coefficients per cell of `Σ c_j x^j` in the global coordinate.
    pub fn global_coeffs(&self) -> Vec<Vec<f64>> {
        match self.basis {
            CellBasis::Global => self.coeffs.clone(),
            CellBasis::Local => self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let x0 = self.breakpoints[i];
                    let h = self.breakpoints[i + 1] - x0;
                    let mut out = vec![0.0; a.len()];
                    for (j, &aj) in a.iter().enumerate() {
                        let scale = aj / h.powi(j as i32);
                        let mut binom = 1.0;
                        for k in 0..=j {
                            out[k] += scale * binom * (-x0).powi((j - k) as i32);
                            binom = binom * (j - k) as f64 / (k + 1) as f64;
                        }
                    }
                    out
                })
                .collect(),
        }
    }

    /// Largest jump of value and first derivative over interior breakpoints.
    pub fn continuity_defect(&self) -> (f64, f64) {
        let mut jumps = (0.0f64, 0.0f64);
        for c in 1..self.coeffs.len() {
            let x = self.breakpoints[c];
            jumps.0 = jumps.0.max((self.eval_cell(c - 1, x, 0) - self.eval_cell(c, x, 0)).abs());
            jumps.1 = jumps.1.max((self.eval_cell(c - 1, x, 1) - self.eval_cell(c, x, 1)).abs());
        }
        jumps
    }
}

/// Row of the cell's basis functions (derivative `deriv`) at `x`.
fn cell_row(basis: CellBasis, bp: &[f64], cell: usize, r: usize, x: f64, deriv: usize) -> Vec<f64> {
    match basis {
        CellBasis::Global => crate::basis::monomial_row(r + 1, x, deriv),
        CellBasis::Local => {
            let a = bp[cell];
            let h = bp[cell + 1] - a;
            let mut row = crate::basis::monomial_row(r + 1, (x - a) / h, deriv);
            let s = h.powi(deriv as i32);
            row.iter_mut().for_each(|v| *v /= s);
            row
        }
    }
}

pub fn block_structure(cells: usize, r: usize) -> Result<BlockStructure> {
    let w = r + 1;
    if cells == 1 {
        return BlockStructure::dense(w);
    }
    let mut rows = vec![r];
    let mut cols = vec![w];
    for _ in 1..cells {
        rows.push(r + 1);
        cols.push(2 * w);
    }
    *rows.last_mut().unwrap() += 1;
    BlockStructure::new(rows, cols, vec![w; cells - 1])
}

/// Where each row's right-hand side comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
enum RowSource {
    /// Sample `k` (interp) or boundary value.
    Sample(usize),
    Zero,
    Rhs(f64),
}

struct Assembly {
    matrix: AbdMatrix,
    sources: Vec<RowSource>,
}

/// `points[i]` are the collocation abscissae of cell `i`.
fn assemble(
    bp: &[f64],
    r: usize,
    basis: CellBasis,
    points: &[Vec<f64>],
    colloc_row: &dyn Fn(usize, f64) -> (Vec<f64>, RowSource),
    bc: (RowSource, RowSource),
) -> Result<Assembly> {
    let n_cells = bp.len() - 1;
    let w = r + 1;
    let structure = block_structure(n_cells, r)?;
    let mut m = AbdMatrix::zeros(structure);
    let mut sources = Vec::with_capacity(n_cells * w);
    let mut row = 0;
    let put = |m: &mut AbdMatrix, row: usize, col0: usize, vals: &[f64]| -> Result<()> {
        for (j, v) in vals.iter().enumerate() {
            m.set(row, col0 + j, *v)?;
        }
        Ok(())
    };
    put(&mut m, row, 0, &cell_row(basis, bp, 0, r, bp[0], 0))?;
    sources.push(bc.0);
    row += 1;
    for c in 0..n_cells {
        if c > 0 {
            let x = bp[c];
            let scale = match basis {
                CellBasis::Local => bp[c] - bp[c - 1],
                CellBasis::Global => 1.0,
            };
            for d in 0..2 {
                let s = if d == 0 { 1.0 } else { scale };
                let left: Vec<f64> = cell_row(basis, bp, c - 1, r, x, d).iter().map(|v| v * s).collect();
                let right: Vec<f64> = cell_row(basis, bp, c, r, x, d).iter().map(|v| -v * s).collect();
                put(&mut m, row, (c - 1) * w, &left)?;
                put(&mut m, row, c * w, &right)?;
                sources.push(RowSource::Zero);
                row += 1;
            }
        }
        for &x in &points[c] {
            let (vals, src) = colloc_row(c, x);
            put(&mut m, row, c * w, &vals)?;
            sources.push(src);
            row += 1;
        }
    }
    put(&mut m, row, (n_cells - 1) * w, &cell_row(basis, bp, n_cells - 1, r, bp[n_cells], 0))?;
    sources.push(bc.1);
    Ok(Assembly { matrix: m, sources })
}

fn rhs_from(sources: &[RowSource], samples: &[f64]) -> Vec<f64> {
    sources
        .iter()
        .map(|s| match *s {
            RowSource::Sample(k) => samples[k],
            RowSource::Zero => 0.0,
            RowSource::Rhs(v) => v,
        })
        .collect()
}

/// Splits the interior samples `times[1..K]` into groups of `r - 1` per cell,
/// checking each lies in its cell.
fn interp_points(grid_bp: &[f64], r: usize, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n_cells = grid_bp.len() - 1;
    let want = n_cells * (r - 1) + 2;
    if times.len() != want {
        return Err(Error::Layout(format!(
            "{} samples for {n_cells} cells of order {r}: need N(r-1)+2 = {want}",
            times.len()
        )));
    }
    let (lo, hi) = (grid_bp[0], grid_bp[n_cells]);
    let tol = 1e-12 * (hi - lo);
    if (times[0] - lo).abs() > tol || (times[want - 1] - hi).abs() > tol {
        return Err(Error::Layout(format!(
            "first/last samples ({}, {}) must sit on the domain ends ({lo}, {hi})",
            times[0],
            times[want - 1]
        )));
    }
    let mut out = Vec::with_capacity(n_cells);
    for c in 0..n_cells {
        let pts = times[1 + c * (r - 1)..1 + (c + 1) * (r - 1)].to_vec();
        for &t in &pts {
            if t < grid_bp[c] - tol || t > grid_bp[c + 1] + tol {
                return Err(Error::Layout(format!(
                    "sample {t} does not lie in cell {c} = [{}, {}]",
                    grid_bp[c],
                    grid_bp[c + 1]
                )));
            }
        }
        out.push(pts);
    }
    Ok(out)
}

/// Assembles the square collocation system `A a = f`.
pub fn build_system(p: &Osc1dProblem) -> Result<(AbdMatrix, Vec<f64>)> {
    let bp = p.grid.breakpoints();
    let r = p.grid.order();
    match &p.mode {
        Osc1dMode::Ode(spec) => {
            let pts: Vec<Vec<f64>> = (0..p.grid.cells())
                .map(|c| p.grid.colloc_offsets().iter().map(|o| bp[c] + o * p.grid.width(c)).collect())
                .collect();
            let op = |c: usize, x: f64| {
                let r0 = cell_row(p.basis, bp, c, r, x, 0);
                let r1 = cell_row(p.basis, bp, c, r, x, 1);
                let r2 = cell_row(p.basis, bp, c, r, x, 2);
                let row = (0..=r).map(|j| spec.c0 * r0[j] + spec.c1 * r1[j] + spec.c2 * r2[j]).collect();
                (row, RowSource::Rhs((spec.rhs)(x)))
            };
            let a = assemble(bp, r, p.basis, &pts, &op, (RowSource::Rhs(spec.bc.0), RowSource::Rhs(spec.bc.1)))?;
            let f = rhs_from(&a.sources, &[]);
            Ok((a.matrix, f))
        }
        Osc1dMode::Interp { times, values } => {
            if values.len() != times.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} values for {} sample times",
                    values.len(),
                    times.len()
                )));
            }
            let sys = InterpSystem::with_basis(p.grid.clone(), times, p.basis)?;
            let f = sys.rhs(values)?;
            Ok((sys.matrix, f))
        }
    }
}

fn singular_in_cells(e: Error) -> Error {
    match e {
        Error::Singular(msg) => Error::Singular(format!(
            "{msg} (block i of the collocation system holds the rows of cell i)"
        )),
        other => other,
    }
}

pub fn solve_osc1d(p: &Osc1dProblem) -> Result<SplineSolution1D> {
    let (m, f) = build_system(p)?;
    let fac = factorize(&m).map_err(singular_in_cells)?;
    let a = fac.solve(&f)?;
    Ok(SplineSolution1D::from_flat(
        p.grid.breakpoints().to_vec(),
        p.grid.order(),
        p.basis,
        &a,
        fac.condition_estimate(),
    ))
}

/// Factored interpolation system for a fixed set of sample abscissae; reused
/// across channels and exposed to the autodiff tape.
#[derive(Clone, Debug)]
pub struct InterpSystem {
    grid: PartitionGrid,
    basis: CellBasis,
    times: Vec<f64>,
    matrix: AbdMatrix,
    sources: Vec<RowSource>,
    fac: Arc<AbdFactorization>,
    condition: f64,
}

impl InterpSystem {
    pub fn new(grid: PartitionGrid, times: &[f64]) -> Result<Self> {
        Self::with_basis(grid, times, CellBasis::Local)
    }

    pub fn with_basis(grid: PartitionGrid, times: &[f64], basis: CellBasis) -> Result<Self> {
        let bp = grid.breakpoints().to_vec();
        let r = grid.order();
        let pts = interp_points(&bp, r, times)?;
        let op = |c: usize, x: f64| (cell_row(basis, &bp, c, r, x, 0), RowSource::Zero);
        let mut a = assemble(&bp, r, basis, &pts, &op, (RowSource::Sample(0), RowSource::Sample(times.len() - 1)))?;
        // collocation rows take samples 1..K in order, skipping the C1 rows
        let mut next = 1;
        let mut row = 1;
        for c in 0..grid.cells() {
            if c > 0 {
                row += 2;
            }
            for _ in 0..r - 1 {
                a.sources[row] = RowSource::Sample(next);
                next += 1;
                row += 1;
            }
        }
        debug_assert_eq!(next, times.len() - 1);
        let fac = factorize(&a.matrix).map_err(singular_in_cells)?;
        let condition = fac.condition_estimate();
        Ok(Self {
            grid,
            basis,
            times: times.to_vec(),
            matrix: a.matrix,
            sources: a.sources,
            fac: Arc::new(fac),
            condition,
        })
    }

    pub fn grid(&self) -> &PartitionGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &AbdMatrix {
        &self.matrix
    }

    pub fn factorization(&self) -> &Arc<AbdFactorization> {
        &self.fac
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn rhs(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.times.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for {} abscissae",
                samples.len(),
                self.times.len()
            )));
        }
        Ok(rhs_from(&self.sources, samples))
    }

    /// 0/1 matrix `P` (system dim × samples) with `rhs = P · samples`.
    pub fn selection_matrix(&self) -> Matrix {
        let mut p = Matrix::zeros(self.dim(), self.times.len());
        for (i, s) in self.sources.iter().enumerate() {
            if let RowSource::Sample(k) = s {
                p.set(i, *k, 1.0);
            }
        }
        p
    }

    /// Matrix `E` (points × system dim) with `E a` = derivative `deriv` at `points`.
    pub fn evaluation_matrix(&self, points: &[f64], deriv: usize) -> Result<Matrix> {
        let r = self.grid.order();
        let bp = self.grid.breakpoints();
        let mut e = Matrix::zeros(points.len(), self.dim());
        for (i, &x) in points.iter().enumerate() {
            let c = self.grid.locate(x)?;
            for (j, v) in cell_row(self.basis, bp, c, r, x, deriv).into_iter().enumerate() {
                e.set(i, c * (r + 1) + j, v);
            }
        }
        Ok(e)
    }

    pub fn solve(&self, samples: &[f64]) -> Result<SplineSolution1D> {
        let mut f = self.rhs(samples)?;
        self.fac.solve_in_place(&mut f);
        Ok(SplineSolution1D::from_flat(
            self.grid.breakpoints().to_vec(),
            self.grid.order(),
            self.basis,
            &f,
            self.condition,
        ))
    }
}

/// Breakpoints for sample times grouped `r - 1` interior samples per cell:
/// the outer samples, plus midpoints between consecutive groups.
pub fn time_breakpoints(times: &[f64], r: usize) -> Result<Vec<f64>> {
    if r < 2 {
        return Err(invalid(format!("order r = {r} must be at least 2")));
    }
    if times.len() < 3 || (times.len() - 2) % (r - 1) != 0 {
        let lens: Vec<String> = (1..=4).map(|c| (c * (r - 1) + 2).to_string()).collect();
        return Err(Error::Layout(format!(
            "{} time samples cannot be split into groups of r-1 = {} interior samples; valid lengths are {}, ...",
            times.len(),
            r - 1,
            lens.join(", ")
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("time samples must be finite and strictly increasing"));
    }
    let k = times.len() - 1;
    let g = r - 1;
    let n_cells = (times.len() - 2) / g;
    let mut bp = vec![times[0]];
    for c in 1..n_cells {
        let last = times[c * g];
        let first = times[c * g + 1];
        bp.push(0.5 * (last + first));
    }
    bp.push(times[k]);
    Ok(bp)
}

/// Time-oriented fit: one interpolating spline per channel (columns of `values`).
pub fn fit_time_series(times: &[f64], values: &Matrix, r: usize) -> Result<Vec<SplineSolution1D>> {
    if values.rows() != times.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} value rows for {} times",
            values.rows(),
            times.len()
        )));
    }
    let sys = time_system(times, r)?;
    (0..values.cols()).into_par_iter().map(|ch| sys.solve(&values.col_vec(ch))).collect()
}

/// The factored system shared by every channel of a time fit.
pub fn time_system(times: &[f64], r: usize) -> Result<InterpSystem> {
    let bp = time_breakpoints(times, r)?;
    let grid = PartitionGrid::new(bp, r)?;
    InterpSystem::new(grid, times)
}

/// `u + u' = sin 2πx + 2π cos 2πx`, `u(0) = u(1) = 0`; exact solution `sin 2πx`.
pub fn sine_ode_problem(cells: usize, r: usize) -> Result<Osc1dProblem> {
    use std::f64::consts::PI;
    let grid = PartitionGrid::uniform(0.0, 1.0, cells, r)?;
    let spec = OdeSpec {
        c0: 1.0,
        c1: 1.0,
        c2: 0.0,
        rhs: Arc::new(|x| (2.0 * PI * x).sin() + 2.0 * PI * (2.0 * PI * x).cos()),
        bc: (0.0, 0.0),
    };
    Ok(Osc1dProblem::ode(grid, spec))
}

/// Coefficients of the degree-`r` polynomial used by [`poly_ode_problem`].
pub fn poly_exact_coeffs(r: usize) -> Vec<f64> {
    (0..=r).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } / (j + 1) as f64).collect()
}

/// `u'' + u' + u = f` whose exact solution is a degree-`r` polynomial.
pub fn poly_ode_problem(cells: usize, r: usize) -> Result<Osc1dProblem> {
    let grid = PartitionGrid::uniform(0.0, 1.0, cells, r)?;
    let c = poly_exact_coeffs(r);
    let cf = c.clone();
    let spec = OdeSpec {
        c0: 1.0,
        c1: 1.0,
        c2: 1.0,
        rhs: Arc::new(move |x| monomial_eval(&cf, x, 0) + monomial_eval(&cf, x, 1) + monomial_eval(&cf, x, 2)),
        bc: (monomial_eval(&c, 0.0, 0), monomial_eval(&c, 1.0, 0)),
    };
    Ok(Osc1dProblem::ode(grid, spec))
}
