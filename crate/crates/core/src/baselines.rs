//! Reference interpolators (nearest, linear, natural cubic spline and a local
//! Catmull-Rom cubic) in 1D and on tensor grids, and the error comparison
//! against OSC on the analytic test functions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::PartitionGrid;
use crate::datagen::AnalyticField;
use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::linalg::Matrix;
use crate::osc1d::InterpSystem;
use crate::osc2d::{CollocationField, SurfaceFitter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Nearest,
    Linear,
    /// Natural cubic spline (bicubic on tensor grids).
    Cubic,
    /// Local cubic with centred-difference slopes (Catmull-Rom style).
    CubicLocal,
    Osc,
}

impl Method {
    pub const BASELINES: [Method; 4] = [Method::Nearest, Method::Linear, Method::Cubic, Method::CubicLocal];
    pub const ALL: [Method; 5] = [Method::Nearest, Method::Linear, Method::Cubic, Method::CubicLocal, Method::Osc];

    pub fn label(self) -> &'static str {
        match self {
            Method::Nearest => "nearest",
            Method::Linear => "linear",
            Method::Cubic => "cubic",
            Method::CubicLocal => "cubic-local",
            Method::Osc => "osc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn check_samples(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(dim_mismatch(format!("{} abscissae, {} values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(invalid("need at least two samples"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("sample abscissae must be strictly increasing"));
    }
    Ok(())
}

/// Interval index for `q`, erroring outside the sample hull.
fn segment(xs: &[f64], q: f64) -> Result<usize> {
    crate::basis::locate(xs, q)
}

pub fn interp_nearest(xs: &[f64], ys: &[f64], queries: &[f64]) -> Result<Vec<f64>> {
    interp1d(Method::Nearest, xs, ys, queries)
}

pub fn interp_linear(xs: &[f64], ys: &[f64], queries: &[f64]) -> Result<Vec<f64>> {
    interp1d(Method::Linear, xs, ys, queries)
}

pub fn interp_cubic(xs: &[f64], ys: &[f64], queries: &[f64]) -> Result<Vec<f64>> {
    interp1d(Method::Cubic, xs, ys, queries)
}

/// Second derivatives of the natural cubic spline (Thomas algorithm).
fn natural_second_derivs(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    let mut upper = vec![0.0; k];
    for i in 1..n - 1 {
        let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    for i in 1..k {
        let lower = xs[i + 1] - xs[i];
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
    m
}

fn local_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (ys[b] - ys[a]) / (xs[b] - xs[a])
        })
        .collect()
}

pub fn interp1d(method: Method, xs: &[f64], ys: &[f64], queries: &[f64]) -> Result<Vec<f64>> {
    check_samples(xs, ys)?;
    let m2 = if method == Method::Cubic { natural_second_derivs(xs, ys) } else { vec![] };
    let sl = if method == Method::CubicLocal { local_slopes(xs, ys) } else { vec![] };
    queries
        .iter()
        .map(|&q| {
            let i = segment(xs, q)?;
            let (x0, x1) = (xs[i], xs[i + 1]);
            let h = x1 - x0;
            let t = ((q - x0) / h).clamp(0.0, 1.0);
            Ok(match method {
                Method::Nearest => {
                    if t < 0.5 {
                        ys[i]
                    } else {
                        ys[i + 1]
                    }
                }
                Method::Linear => ys[i] * (1.0 - t) + ys[i + 1] * t,
                Method::Cubic => {
                    let (a, b) = (1.0 - t, t);
                    a * ys[i] + b * ys[i + 1] + ((a * a * a - a) * m2[i] + (b * b * b - b) * m2[i + 1]) * h * h / 6.0
                }
                Method::CubicLocal => {
                    let (t2, t3) = (t * t, t * t * t);
                    (2.0 * t3 - 3.0 * t2 + 1.0) * ys[i]
                        + (t3 - 2.0 * t2 + t) * h * sl[i]
                        + (-2.0 * t3 + 3.0 * t2) * ys[i + 1]
                        + (t3 - t2) * h * sl[i + 1]
                }
                Method::Osc => return Err(invalid("OSC is not a sample-based baseline")),
            })
        })
        .collect()
}

/// Tensor-grid interpolation: `values` is `ys.len() x xs.len()`; the result
/// is `qy.len() x qx.len()`. Applied along x, then along y.
pub fn interp2d_grid(method: Method, xs: &[f64], ys: &[f64], values: &Matrix, qx: &[f64], qy: &[f64]) -> Result<Matrix> {
    if values.shape() != (ys.len(), xs.len()) {
        return Err(dim_mismatch(format!("values {:?} for a {}x{} grid", values.shape(), ys.len(), xs.len())));
    }
    let mut along_x = Matrix::zeros(ys.len(), qx.len());
    for i in 0..ys.len() {
        let r = interp1d(method, xs, values.row(i), qx)?;
        along_x.row_mut(i).copy_from_slice(&r);
    }
    let mut out = Matrix::zeros(qy.len(), qx.len());
    for j in 0..qx.len() {
        let col = along_x.col_vec(j);
        for (i, v) in interp1d(method, ys, &col, qy)?.into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Interpolates at scattered points `(x, y)`.
pub fn interp2d_points(method: Method, xs: &[f64], ys: &[f64], values: &Matrix, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|&(x, y)| Ok(interp2d_grid(method, xs, ys, values, &[x], &[y])?.get(0, 0)))
        .collect()
}

/// OSC orders used for the comparison: degree-4 pieces in 1D (exact on the
/// quartic), cubic Hermite in 2D (exact on the biquadratic).
pub const OSC_ORDER_1D: usize = 4;
pub const OSC_ORDER_2D: usize = 3;

/// Resolution of one comparison: `cells` partition cells per axis.
/// OSC samples the `cells (r-1) + 2` collocation points per axis; the
/// baselines sample the `cells + 1` breakpoints of the same partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: Method,
    /// Samples per axis the method saw.
    pub samples: usize,
    /// Mean squared error over the evaluation grid.
    pub mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub problem: String,
    pub cells: usize,
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn error(&self, m: Method) -> f64 {
        self.rows.iter().find(|r| r.method == m).map_or(f64::NAN, |r| r.mse)
    }

    /// `osc <= cubic <= linear <= nearest`.
    pub fn ranking_holds(&self) -> bool {
        let e = |m| self.error(m);
        e(Method::Osc) <= e(Method::Cubic) && e(Method::Cubic) <= e(Method::Linear) && e(Method::Linear) <= e(Method::Nearest)
    }

    pub fn osc_samples(&self) -> usize {
        self.rows.iter().find(|r| r.method == Method::Osc).map_or(0, |r| r.samples)
    }

    pub fn csv_header() -> &'static str {
        "problem,cells,method,samples_per_axis,mse"
    }

    pub fn to_csv_rows(&self) -> String {
        self.rows
            .iter()
            .map(|r| format!("{},{},{},{},{:.6e}\n", self.problem, self.cells, r.method, r.samples, r.mse))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::csv_header(), self.to_csv_rows())
    }
}

const EVAL_1D: usize = 1001;
const EVAL_2D: usize = 101;

pub fn compare_methods(problem: &str, cells: usize) -> Result<ErrorTable> {
    let field = AnalyticField::by_name(problem)?;
    compare_field(&field, cells)
}

pub fn compare_field(field: &AnalyticField, cells: usize) -> Result<ErrorTable> {
    if cells == 0 {
        return Err(invalid("need at least one cell"));
    }
    let breaks: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    let mut rows = Vec::with_capacity(5);
    match field.dims {
        1 => {
            let eval: Vec<f64> = (0..EVAL_1D).map(|i| i as f64 / (EVAL_1D - 1) as f64).collect();
            let exact: Vec<f64> = eval.iter().map(|&x| field.eval(x, 0.0)).collect();
            let mse = |v: &[f64]| v.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / exact.len() as f64;
            let ys: Vec<f64> = breaks.iter().map(|&x| field.eval(x, 0.0)).collect();
            for m in Method::BASELINES {
                rows.push(ErrorRow { method: m, samples: breaks.len(), mse: mse(&interp1d(m, &breaks, &ys, &eval)?) });
            }
            let grid = PartitionGrid::new(breaks.clone(), OSC_ORDER_1D)?;
            let pts = grid.sample_points();
            let sys = InterpSystem::new(grid, &pts)?;
            let vals: Vec<f64> = pts.iter().map(|&x| field.eval(x, 0.0)).collect();
            let s = sys.solve(&vals)?;
            let approx: Vec<f64> = eval.iter().map(|&x| s.evaluate(x, 0)).collect::<Result<_>>()?;
            rows.push(ErrorRow { method: Method::Osc, samples: pts.len(), mse: mse(&approx) });
        }
        2 => {
            let eval: Vec<f64> = (0..EVAL_2D).map(|i| i as f64 / (EVAL_2D - 1) as f64).collect();
            let mut exact = Matrix::zeros(EVAL_2D, EVAL_2D);
            for (i, &y) in eval.iter().enumerate() {
                for (j, &x) in eval.iter().enumerate() {
                    exact.set(i, j, field.eval(x, y));
                }
            }
            let mse = |v: &Matrix| {
                v.data().iter().zip(exact.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / exact.data().len() as f64
            };
            let mut samples = Matrix::zeros(breaks.len(), breaks.len());
            for (i, &y) in breaks.iter().enumerate() {
                for (j, &x) in breaks.iter().enumerate() {
                    samples.set(i, j, field.eval(x, y));
                }
            }
            for m in Method::BASELINES {
                let v = interp2d_grid(m, &breaks, &breaks, &samples, &eval, &eval)?;
                rows.push(ErrorRow { method: m, samples: breaks.len(), mse: mse(&v) });
            }
            let cf = CollocationField::sample(breaks.clone(), breaks.clone(), |x, y| field.eval(x, y))?;
            let s = SurfaceFitter::for_field(&cf)?.fit(cf.values())?;
            let mut approx = Matrix::zeros(EVAL_2D, EVAL_2D);
            for (i, &y) in eval.iter().enumerate() {
                for (j, &x) in eval.iter().enumerate() {
                    approx.set(i, j, s.evaluate(x, y, 0, 0)?);
                }
            }
            rows.push(ErrorRow { method: Method::Osc, samples: cf.xs().len(), mse: mse(&approx) });
        }
        d => return Err(Error::InvalidInput(format!("{d}-dimensional field"))),
    }
    Ok(ErrorTable { problem: field.name.to_string(), cells, rows })
}

/// Cell counts whose OSC sample count per axis lies in `[8, 64]`.
pub fn sweep_cells(dims: usize) -> Vec<usize> {
    let per_cell = if dims == 1 { OSC_ORDER_1D - 1 } else { OSC_ORDER_2D - 1 };
    (1..=64).filter(|n| (8..=64).contains(&(n * per_cell + 2))).collect()
}

pub fn sweep(problem: &str) -> Result<Vec<ErrorTable>> {
    let field = AnalyticField::by_name(problem)?;
    sweep_cells(field.dims).into_iter().map(|n| compare_field(&field, n)).collect()
}

/// The table whose OSC error is closest to `target` in log scale.
pub fn closest_to(tables: &[ErrorTable], target: f64) -> Option<&ErrorTable> {
    let dist = |t: &ErrorTable| (t.error(Method::Osc).max(1e-300).ln() - target.ln()).abs();
    tables.iter().min_by(|a, b| dist(a).total_cmp(&dist(b)))
}

/// Published OSC squared errors for the four analytic problems.
pub const REFERENCE_OSC_MSE: [(&str, f64); 4] =
    [("1d-linear", 3.4e-31), ("1d-nonlinear", 4.19e-8), ("2d-linear", 1.7e-32), ("2d-nonlinear", 3.45e-5)];

pub fn reference_osc_mse(problem: &str) -> Option<f64> {
    REFERENCE_OSC_MSE.iter().find(|(n, _)| *n == problem).map(|(_, v)| *v)
}

/// The sweep entry whose OSC error is closest to the published one.
pub fn best_resolution(problem: &str) -> Result<ErrorTable> {
    let target = reference_osc_mse(problem).ok_or_else(|| Error::UnknownProblem(problem.to_string()))?;
    let tables = sweep(problem)?;
    closest_to(&tables, target).cloned().ok_or_else(|| invalid("empty sweep"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_reproduces_linear_data() {
        let xs = [0.0, 0.3, 0.5, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let q = [0.0, 0.1, 0.45, 0.99, 1.0];
        for (m, tol) in [(Method::Linear, 1e-15), (Method::Cubic, 1e-14), (Method::CubicLocal, 1e-14)] {
            for (a, x) in interp1d(m, &xs, &ys, &q).unwrap().iter().zip(q) {
                assert!((a - (2.0 * x - 1.0)).abs() < tol, "{m}");
            }
        }
    }

    #[test]
    fn samples_are_reproduced() {
        let xs = [0.0, 0.2, 0.5, 0.6, 1.0];
        let ys = [1.0, -2.0, 0.5, 3.0, 0.0];
        for m in Method::BASELINES {
            assert_eq!(interp1d(m, &xs, &ys, &xs).unwrap(), ys.to_vec(), "{m}");
        }
    }

    #[test]
    fn natural_spline_matches_hand_solution() {
        // three points: M1 = 6 * (slope diff) / (2 (h0 + h1))
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 0.0];
        let m = natural_second_derivs(&xs, &ys);
        assert_eq!(m, vec![0.0, -3.0, 0.0]);
        let v = interp_cubic(&xs, &ys, &[0.5]).unwrap()[0];
        assert!((v - 0.6875).abs() < 1e-15);
    }

    #[test]
    fn out_of_hull() {
        assert!(matches!(interp_linear(&[0.0, 1.0], &[0.0, 1.0], &[1.5]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn constant_field_has_zero_error() {
        let f = AnalyticField::custom("constant", 2, |_, _| 1.25);
        let t = compare_field(&f, 4).unwrap();
        assert_eq!(t.rows.len(), 5);
        for r in &t.rows {
            assert!(r.mse < 1e-28, "{:?}", r);
        }
        let f1 = AnalyticField::custom("constant", 1, |_, _| 1.25);
        assert!(compare_field(&f1, 4).unwrap().rows.iter().all(|r| r.mse < 1e-28));
    }

    #[test]
    fn unknown_problem() {
        assert!(matches!(compare_methods("3d-linear", 4), Err(Error::UnknownProblem(_))));
    }
}
