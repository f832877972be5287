//! Partition grids, Gauss–Legendre collocation offsets, monomial and cubic
//! Hermite basis evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Roots of the degree-`k` Legendre polynomial mapped to `[0, 1]`, ascending.
pub fn gauss_legendre_offsets(k: usize) -> Result<Vec<f64>> {
    if !(1..=6).contains(&k) {
        return Err(invalid(format!("Gauss-Legendre order {k} unsupported (1..=6)")));
    }
    let mut roots = vec![0.0; k];
    for i in 0..k {
        // Chebyshev-like initial guess, then Newton on P_k.
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(k, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        roots[i] = x;
    }
    // Exact symmetry about the midpoint.
    for i in 0..k / 2 {
        let m = 0.5 * (roots[k - 1 - i] - roots[i]);
        roots[i] = -m;
        roots[k - 1 - i] = m;
    }
    if k % 2 == 1 {
        roots[k / 2] = 0.0;
    }
    Ok(roots.into_iter().map(|x| 0.5 * (x + 1.0)).collect())
}

/// `(P_k(x), P_k'(x))` by the three-term recurrence.
fn legendre(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return (1.0, 0.0);
    }
    for n in 2..=k {
        let nf = n as f64;
        let p2 = ((2.0 * nf - 1.0) * x * p1 - (nf - 1.0) * p0) / nf;
        p0 = p1;
        p1 = p2;
    }
    let dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Value (or derivative of order `deriv`) of `Σ c_j x^j`.
pub fn monomial_eval(coeffs: &[f64], x: f64, deriv: usize) -> f64 {
    let mut acc = 0.0;
    for j in (deriv..coeffs.len()).rev() {
        acc = acc * x + coeffs[j] * falling(j, deriv);
    }
    acc
}

/// Row of `d^deriv/dx^deriv x^j` for `j = 0..len`.
pub fn monomial_row(len: usize, x: f64, deriv: usize) -> Vec<f64> {
    (0..len)
        .map(|j| if j < deriv { 0.0 } else { falling(j, deriv) * x.powi((j - deriv) as i32) })
        .collect()
}

fn falling(j: usize, d: usize) -> f64 {
    (0..d).map(|i| (j - i) as f64).product()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionGrid {
    breakpoints: Vec<f64>,
    order: usize,
    colloc_offsets: Vec<f64>,
}

impl PartitionGrid {
    /// Grid with Gauss–Legendre collocation offsets.
    pub fn new(breakpoints: Vec<f64>, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(invalid(format!("order r = {order} must be at least 2")));
        }
        let offsets = gauss_legendre_offsets(order - 1)?;
        Self::with_offsets(breakpoints, order, offsets)
    }

    pub fn with_offsets(breakpoints: Vec<f64>, order: usize, colloc_offsets: Vec<f64>) -> Result<Self> {
        if order < 2 {
            return Err(invalid(format!("order r = {order} must be at least 2")));
        }
        if breakpoints.len() < 2 {
            return Err(invalid("need at least two breakpoints"));
        }
        if breakpoints.iter().any(|v| !v.is_finite()) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("breakpoints must be finite and strictly increasing"));
        }
        if colloc_offsets.len() != order - 1 {
            return Err(invalid(format!(
                "{} collocation offsets for order {order} (need {})",
                colloc_offsets.len(),
                order - 1
            )));
        }
        if colloc_offsets.iter().any(|&o| o <= 0.0 || o >= 1.0) || colloc_offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("collocation offsets must be strictly increasing inside (0, 1)"));
        }
        Ok(Self { breakpoints, order, colloc_offsets })
    }

    pub fn uniform(lo: f64, hi: f64, cells: usize, order: usize) -> Result<Self> {
        if cells == 0 || hi <= lo {
            return Err(invalid(format!("bad uniform partition [{lo}, {hi}] with {cells} cells")));
        }
        let h = (hi - lo) / cells as f64;
        let mut bp: Vec<f64> = (0..=cells).map(|i| lo + h * i as f64).collect();
        bp[cells] = hi;
        Self::new(bp, order)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn colloc_offsets(&self) -> &[f64] {
        &self.colloc_offsets
    }

    pub fn cells(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn lo(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn hi(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.breakpoints[cell + 1] - self.breakpoints[cell]
    }

    pub fn min_width(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// The N(r−1) interior collocation abscissae, cell by cell.
    pub fn collocation_points(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cells() * self.colloc_offsets.len());
        for c in 0..self.cells() {
            let (a, h) = (self.breakpoints[c], self.width(c));
            out.extend(self.colloc_offsets.iter().map(|o| a + o * h));
        }
        out
    }

    /// Collocation abscissae with both domain endpoints prepended/appended.
    pub fn sample_points(&self) -> Vec<f64> {
        let mut out = vec![self.lo()];
        out.extend(self.collocation_points());
        out.push(self.hi());
        out
    }

    /// Cell containing `x`. Interior breakpoints belong to the cell on their right;
    /// points within `1e-12` widths outside the domain are snapped in.
    pub fn locate(&self, x: f64) -> Result<usize> {
        locate(&self.breakpoints, x)
    }
}

pub(crate) fn locate(bp: &[f64], x: f64) -> Result<usize> {
    let (lo, hi) = (bp[0], bp[bp.len() - 1]);
    let tol = 1e-12 * (hi - lo);
    if !(x >= lo - tol && x <= hi + tol) {
        return Err(Error::OutOfDomain { value: x, lo, hi });
    }
    let n = bp.len() - 1;
    let idx = bp.partition_point(|&b| b <= x);
    Ok(idx.saturating_sub(1).min(n - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HermiteKind {
    Value,
    Slope,
}

/// Cubic Hermite cardinal basis on a 1D partition: a value function `H_i` and
/// a slope function `G_i` per breakpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteBasis1D {
    breakpoints: Vec<f64>,
}

impl HermiteBasis1D {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("Hermite basis needs at least two strictly increasing breakpoints"));
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Number of degrees of freedom, `2 (N + 1)`.
    pub fn dofs(&self) -> usize {
        2 * self.breakpoints.len()
    }

    pub fn cells(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn locate(&self, x: f64) -> Result<usize> {
        locate(&self.breakpoints, x)
    }

    /// Values of the four basis functions alive on `cell`, ordered
    /// `(H_c, G_c, H_{c+1}, G_{c+1})`, which are dofs `2c .. 2c + 4`.
    pub fn cell_row(&self, cell: usize, x: f64, deriv: usize) -> [f64; 4] {
        let a = self.breakpoints[cell];
        let h = self.breakpoints[cell + 1] - a;
        let t = (x - a) / h;
        match deriv {
            0 => {
                let (t2, t3) = (t * t, t * t * t);
                [
                    2.0 * t3 - 3.0 * t2 + 1.0,
                    h * (t3 - 2.0 * t2 + t),
                    -2.0 * t3 + 3.0 * t2,
                    h * (t3 - t2),
                ]
            }
            1 => {
                let t2 = t * t;
                [
                    (6.0 * t2 - 6.0 * t) / h,
                    3.0 * t2 - 4.0 * t + 1.0,
                    (-6.0 * t2 + 6.0 * t) / h,
                    3.0 * t2 - 2.0 * t,
                ]
            }
            2 => [
                (12.0 * t - 6.0) / (h * h),
                (6.0 * t - 4.0) / h,
                (-12.0 * t + 6.0) / (h * h),
                (6.0 * t - 2.0) / h,
            ],
            _ => [0.0; 4],
        }
    }

    /// Full row over all `2(N+1)` dofs (interleaved value, slope per node).
    pub fn row(&self, x: f64, deriv: usize) -> Result<Vec<f64>> {
        let c = self.locate(x)?;
        let mut out = vec![0.0; self.dofs()];
        out[2 * c..2 * c + 4].copy_from_slice(&self.cell_row(c, x, deriv));
        Ok(out)
    }

    pub fn eval(&self, node: usize, kind: HermiteKind, x: f64, deriv: usize) -> Result<f64> {
        if node >= self.breakpoints.len() {
            return Err(invalid(format!("node {node} outside 0..{}", self.breakpoints.len())));
        }
        let c = self.locate(x)?;
        let local = match node {
            n if n == c => 0,
            n if n == c + 1 => 2,
            _ => return Ok(0.0),
        };
        let k = match kind {
            HermiteKind::Value => 0,
            HermiteKind::Slope => 1,
        };
        Ok(self.cell_row(c, x, deriv)[local + k])
    }

    /// Evaluates `Σ coeffs[d] · basis_d(x)` for interleaved coefficients.
    pub fn eval_expansion(&self, coeffs: &[f64], x: f64, deriv: usize) -> Result<f64> {
        let c = self.locate(x)?;
        let r = self.cell_row(c, x, deriv);
        Ok((0..4).map(|k| r[k] * coeffs[2 * c + k]).sum())
    }
}
