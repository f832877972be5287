//! Almost-block-diagonal (ABD) systems.
//!
//! An ABD matrix is a staircase of dense row blocks. Block `i` covers rows
//! `[row_start(i), row_start(i) + rows[i])` and columns
//! `[col_start(i), col_start(i) + cols[i])`; consecutive blocks share
//! `overlap[i]` columns and no column is shared by more than two blocks.
//!
//! The factorization alternates two kinds of elimination inside each block:
//!
//! * row elimination with row pivoting over the block's exclusive columns
//!   (columns no later block touches), so row interchanges stay inside the
//!   block;
//! * column elimination with column pivoting for the rows that are left over,
//!   restricted to the columns shared with the next block, so column
//!   interchanges only mix columns both blocks already cover.
//!
//! Neither step creates fill outside the block footprints. The result is
//! `L_ops · A · R_ops = M` where `L_ops` collects the row interchanges and row
//! multipliers, `R_ops` the column interchanges and column multipliers, and `M`
//! is solvable by one forward sweep over the column-eliminated pivots followed
//! by one backward sweep over the row-eliminated pivots. Work is
//! `O(n · w²)` for maximum block width `w`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::linalg::Matrix;

/// Pivots smaller than this fraction of the largest entry are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockStructure {
    rows: Vec<usize>,
    cols: Vec<usize>,
    overlap: Vec<usize>,
    row_start: Vec<usize>,
    col_start: Vec<usize>,
    n: usize,
}

impl BlockStructure {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>, overlap: Vec<usize>) -> Result<Self> {
        let nb = rows.len();
        if nb == 0 {
            return Err(invalid("block structure needs at least one block"));
        }
        if cols.len() != nb || overlap.len() + 1 != nb {
            return Err(dim_mismatch(format!(
                "{nb} row counts, {} column counts, {} overlaps",
                cols.len(),
                overlap.len()
            )));
        }
        if rows.iter().chain(&cols).any(|&v| v == 0) {
            return Err(invalid("block rows and columns must be positive"));
        }
        let mut row_start = Vec::with_capacity(nb);
        let mut col_start = Vec::with_capacity(nb);
        let (mut r, mut c) = (0, 0);
        for i in 0..nb {
            row_start.push(r);
            col_start.push(c);
            r += rows[i];
            if i + 1 < nb {
                let ov = overlap[i];
                if ov > cols[i].min(cols[i + 1]) {
                    return Err(invalid(format!(
                        "overlap {ov} between blocks {i} and {} exceeds a block width",
                        i + 1
                    )));
                }
                c += cols[i] - ov;
            }
        }
        let n = col_start[nb - 1] + cols[nb - 1];
        for i in 0..nb {
            let end = col_start[i] + cols[i];
            if i + 2 < nb && end > col_start[i + 2] {
                return Err(invalid(format!(
                    "block {i} overlaps block {} (only consecutive blocks may share columns)",
                    i + 2
                )));
            }
            if i + 1 < nb && col_start[i + 1] + cols[i + 1] < end {
                return Err(invalid(format!("block {} ends before block {i}", i + 1)));
            }
        }
        if r != n {
            return Err(dim_mismatch(format!("{r} rows but {n} columns: system is not square")));
        }
        Ok(Self { rows, cols, overlap, row_start, col_start, n })
    }

    /// A single dense `n x n` block.
    pub fn dense(n: usize) -> Result<Self> {
        Self::new(vec![n], vec![n], vec![])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn block_count(&self) -> usize {
        self.rows.len()
    }

    pub fn rows_per_block(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols_per_block(&self) -> &[usize] {
        &self.cols
    }

    pub fn overlap_cols(&self) -> &[usize] {
        &self.overlap
    }

    pub fn row_start(&self, b: usize) -> usize {
        self.row_start[b]
    }

    pub fn col_start(&self, b: usize) -> usize {
        self.col_start[b]
    }

    pub fn col_end(&self, b: usize) -> usize {
        self.col_start[b] + self.cols[b]
    }

    pub fn max_block_width(&self) -> usize {
        self.cols.iter().copied().max().unwrap_or(0)
    }

    fn block_of_row(&self, row: usize) -> usize {
        self.row_start.partition_point(|&s| s <= row) - 1
    }

    /// Blocks whose footprint contains column `j` (at most two).
    fn blocks_of_col(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let last = self.col_start.partition_point(|&s| s <= j);
        let first = last.saturating_sub(2);
        (first..last).filter(move |&b| j < self.col_end(b))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbdMatrix {
    structure: BlockStructure,
    blocks: Vec<Vec<f64>>,
}

impl AbdMatrix {
    /// Takes ownership of one row-major dense panel per block.
    pub fn assemble(structure: BlockStructure, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != structure.block_count() {
            return Err(dim_mismatch(format!(
                "{} blocks given for a structure with {}",
                blocks.len(),
                structure.block_count()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            let want = structure.rows[i] * structure.cols[i];
            if b.len() != want {
                return Err(dim_mismatch(format!(
                    "block {i} has {} entries, expected {}x{}",
                    b.len(),
                    structure.rows[i],
                    structure.cols[i]
                )));
            }
        }
        Ok(Self { structure, blocks })
    }

    /// All-zero panels for the given structure, to be filled with [`AbdMatrix::set`].
    pub fn zeros(structure: BlockStructure) -> Self {
        let blocks = (0..structure.block_count())
            .map(|i| vec![0.0; structure.rows[i] * structure.cols[i]])
            .collect();
        Self { structure, blocks }
    }

    pub fn identity(n: usize) -> Result<Self> {
        let s = BlockStructure::new(vec![1; n], vec![1; n], vec![0; n.saturating_sub(1)])?;
        Ok(Self { structure: s, blocks: vec![vec![1.0]; n] })
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.structure.n
    }

    pub fn block(&self, b: usize) -> &[f64] {
        &self.blocks[b]
    }

    /// Sets entry `(i, j)`; `j` must lie in the footprint of the block owning row `i`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        let s = &self.structure;
        if i >= s.n {
            return Err(dim_mismatch(format!("row {i} outside {}", s.n)));
        }
        let b = s.block_of_row(i);
        if j < s.col_start[b] || j >= s.col_end(b) {
            return Err(dim_mismatch(format!(
                "column {j} outside footprint [{}, {}) of block {b}",
                s.col_start[b],
                s.col_end(b)
            )));
        }
        let nc = s.cols[b];
        self.blocks[b][(i - s.row_start[b]) * nc + (j - s.col_start[b])] = v;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let s = &self.structure;
        let b = s.block_of_row(i);
        if j < s.col_start[b] || j >= s.col_end(b) {
            return 0.0;
        }
        self.blocks[b][(i - s.row_start[b]) * s.cols[b] + (j - s.col_start[b])]
    }

    pub fn to_dense(&self) -> Matrix {
        let s = &self.structure;
        let mut m = Matrix::zeros(s.n, s.n);
        for b in 0..s.block_count() {
            let nc = s.cols[b];
            for r in 0..s.rows[b] {
                for c in 0..nc {
                    m.set(s.row_start[b] + r, s.col_start[b] + c, self.blocks[b][r * nc + c]);
                }
            }
        }
        m
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = &self.structure;
        if x.len() != s.n {
            return Err(dim_mismatch(format!("vector length {} vs {}", x.len(), s.n)));
        }
        let mut y = vec![0.0; s.n];
        for b in 0..s.block_count() {
            let (nc, c0) = (s.cols[b], s.col_start[b]);
            for r in 0..s.rows[b] {
                let row = &self.blocks[b][r * nc..(r + 1) * nc];
                y[s.row_start[b] + r] = row.iter().zip(&x[c0..c0 + nc]).map(|(a, v)| a * v).sum();
            }
        }
        Ok(y)
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = &self.structure;
        if x.len() != s.n {
            return Err(dim_mismatch(format!("vector length {} vs {}", x.len(), s.n)));
        }
        let mut y = vec![0.0; s.n];
        for b in 0..s.block_count() {
            let (nc, c0) = (s.cols[b], s.col_start[b]);
            for r in 0..s.rows[b] {
                let xr = x[s.row_start[b] + r];
                for c in 0..nc {
                    y[c0 + c] += self.blocks[b][r * nc + c] * xr;
                }
            }
        }
        Ok(y)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn norm_one(&self) -> f64 {
        let s = &self.structure;
        let mut colsum = vec![0.0; s.n];
        for b in 0..s.block_count() {
            let (nc, c0) = (s.cols[b], s.col_start[b]);
            for r in 0..s.rows[b] {
                for c in 0..nc {
                    colsum[c0 + c] += self.blocks[b][r * nc + c].abs();
                }
            }
        }
        colsum.into_iter().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StepKind {
    Row,
    Col,
}

#[derive(Clone, Copy, Debug)]
struct PivotStep {
    kind: StepKind,
    block: usize,
    /// Physical (global) row holding the pivot.
    row: usize,
    /// Global pivot column.
    col: usize,
    /// Row swapped with `row` (row steps) or column swapped with `col` (column steps).
    swapped: usize,
}

/// Factored form of an [`AbdMatrix`]; immutable and `Send + Sync`.
#[derive(Clone, Debug)]
pub struct AbdFactorization {
    structure: BlockStructure,
    panels: Vec<Vec<f64>>,
    steps: Vec<PivotStep>,
    col_kind: Vec<StepKind>,
    row_kind: Vec<StepKind>,
    row_pivot: Vec<usize>,
    norm_one: f64,
}

pub fn factorize(m: &AbdMatrix) -> Result<AbdFactorization> {
    let s = m.structure.clone();
    let n = s.n;
    let nb = s.block_count();
    let scale = m.max_abs();
    if scale == 0.0 {
        return Err(Error::Singular("matrix is identically zero".into()));
    }
    let tol = PIVOT_TOLERANCE * scale;
    let mut panels = m.blocks.clone();
    let mut steps = Vec::with_capacity(n);
    let mut col_kind = vec![StepKind::Row; n];
    let mut row_kind = vec![StepKind::Row; n];
    let mut row_pivot = vec![usize::MAX; n];
    let mut p = 0usize;

    for b in 0..nb {
        let (r0, nr) = (s.row_start[b], s.rows[b]);
        let (c0, nc) = (s.col_start[b], s.cols[b]);
        let excl_end = if b + 1 < nb { s.col_start[b + 1] } else { n };
        if p < c0 || p > excl_end {
            return Err(Error::Singular(format!(
                "block {b}: pivot column {p} left the block footprint"
            )));
        }
        // Columns [c0, shared_end) were pivoted by the previous block's column steps.
        let shared_end = p - c0;
        let n_row = excl_end - p;
        if n_row > nr {
            return Err(Error::Singular(format!(
                "block {b} has {nr} rows for {n_row} exclusive columns"
            )));
        }

        for q in 0..n_row {
            let lc = p - c0;
            let panel = &mut panels[b];
            let mut best = q;
            let mut best_val = 0.0;
            for r in q..nr {
                let v = panel[r * nc + lc].abs();
                if v > best_val {
                    best_val = v;
                    best = r;
                }
            }
            if best_val <= tol {
                return Err(Error::Singular(format!(
                    "block {b}: no row pivot for column {p} (max {best_val:e})"
                )));
            }
            if best != q {
                for c in (0..shared_end).chain(lc..nc) {
                    panel.swap(q * nc + c, best * nc + c);
                }
            }
            let piv = panel[q * nc + lc];
            for r in q + 1..nr {
                let mult = panel[r * nc + lc] / piv;
                panel[r * nc + lc] = mult;
                if mult != 0.0 {
                    for c in (0..shared_end).chain(lc + 1..nc) {
                        panel[r * nc + c] -= mult * panel[q * nc + c];
                    }
                }
            }
            steps.push(PivotStep { kind: StepKind::Row, block: b, row: r0 + q, col: p, swapped: r0 + best });
            row_pivot[r0 + q] = p;
            p += 1;
        }

        let remaining = nr - n_row;
        for k in 0..remaining {
            let q = n_row + k;
            let lc = p - c0;
            if lc >= nc {
                return Err(Error::Singular(format!(
                    "block {b}: row {} has no columns left to pivot on",
                    r0 + q
                )));
            }
            let (best, best_val) = {
                let panel = &panels[b];
                let mut best = lc;
                let mut best_val = 0.0;
                for c in lc..nc {
                    let v = panel[q * nc + c].abs();
                    if v > best_val {
                        best_val = v;
                        best = c;
                    }
                }
                (best, best_val)
            };
            if best_val <= tol {
                return Err(Error::Singular(format!(
                    "block {b}: no column pivot for row {} (max {best_val:e})",
                    r0 + q
                )));
            }
            // Rows n_row..q already carry column multipliers and are skipped.
            let live_rows = |nr: usize| (0..n_row).chain(q..nr);
            if best != lc {
                let panel = &mut panels[b];
                for r in live_rows(nr) {
                    panel.swap(r * nc + lc, r * nc + best);
                }
                if b + 1 < nb {
                    let (c0n, ncn) = (s.col_start[b + 1], s.cols[b + 1]);
                    let (a, bb) = (c0 + lc - c0n, c0 + best - c0n);
                    let next = &mut panels[b + 1];
                    for r in 0..s.rows[b + 1] {
                        next.swap(r * ncn + a, r * ncn + bb);
                    }
                }
            }
            let piv = panels[b][q * nc + lc];
            for c in lc + 1..nc {
                let mult = panels[b][q * nc + c] / piv;
                panels[b][q * nc + c] = mult;
                if mult == 0.0 {
                    continue;
                }
                let panel = &mut panels[b];
                for r in (0..n_row).chain(q + 1..nr) {
                    panel[r * nc + c] -= mult * panel[r * nc + lc];
                }
                if b + 1 < nb {
                    let (c0n, ncn) = (s.col_start[b + 1], s.cols[b + 1]);
                    let (lp, lt) = (c0 + lc - c0n, c0 + c - c0n);
                    let next = &mut panels[b + 1];
                    for r in 0..s.rows[b + 1] {
                        next[r * ncn + lt] -= mult * next[r * ncn + lp];
                    }
                }
            }
            steps.push(PivotStep { kind: StepKind::Col, block: b, row: r0 + q, col: p, swapped: c0 + best });
            col_kind[p] = StepKind::Col;
            row_kind[r0 + q] = StepKind::Col;
            row_pivot[r0 + q] = p;
            p += 1;
        }
    }
    debug_assert_eq!(p, n);
    Ok(AbdFactorization {
        structure: s,
        panels,
        steps,
        col_kind,
        row_kind,
        row_pivot,
        norm_one: m.norm_one(),
    })
}

impl AbdFactorization {
    pub fn dim(&self) -> usize {
        self.structure.n
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// Number of row interchanges and column interchanges actually performed.
    pub fn interchange_counts(&self) -> (usize, usize) {
        let rows = self
            .steps
            .iter()
            .filter(|st| st.kind == StepKind::Row && st.swapped != st.row)
            .count();
        let cols = self
            .steps
            .iter()
            .filter(|st| st.kind == StepKind::Col && st.swapped != st.col)
            .count();
        (rows, cols)
    }

    #[inline]
    fn row_slice(&self, b: usize, row: usize) -> &[f64] {
        let s = &self.structure;
        let nc = s.cols[b];
        let lr = row - s.row_start[b];
        &self.panels[b][lr * nc..(lr + 1) * nc]
    }

    /// Whether the stored value at `(row, col)` is a multiplier rather than an entry of `M`.
    #[inline]
    fn is_multiplier_slot(&self, row: usize, col: usize) -> bool {
        let piv = self.row_pivot[row];
        (self.col_kind[col] == StepKind::Row && col < piv)
            || (self.row_kind[row] == StepKind::Col && col > piv)
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.structure.n {
            return Err(dim_mismatch(format!(
                "vector length {} for a system of dimension {}",
                v.len(),
                self.structure.n
            )));
        }
        Ok(())
    }

    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let mut g = f.to_vec();
        self.solve_in_place(&mut g);
        Ok(g)
    }

    /// Solves in place; `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let s = &self.structure;
        let n = s.n;
        debug_assert_eq!(x.len(), n);

        // g = L_ops f
        for st in self.steps.iter().filter(|st| st.kind == StepKind::Row) {
            x.swap(st.row, st.swapped);
            let b = st.block;
            let (r0, nc, c0) = (s.row_start[b], s.cols[b], s.col_start[b]);
            let lc = st.col - c0;
            let gq = x[st.row];
            if gq != 0.0 {
                let panel = &self.panels[b];
                for r in st.row - r0 + 1..s.rows[b] {
                    x[r0 + r] -= panel[r * nc + lc] * gq;
                }
            }
        }

        // M z = g
        let mut z = vec![0.0; n];
        for st in self.steps.iter().filter(|st| st.kind == StepKind::Col) {
            let c0 = s.col_start[st.block];
            let row = self.row_slice(st.block, st.row);
            let mut acc = x[st.row];
            for (c, &a) in row.iter().enumerate().take(st.col - c0) {
                if self.col_kind[c0 + c] == StepKind::Col {
                    acc -= a * z[c0 + c];
                }
            }
            z[st.col] = acc / row[st.col - c0];
        }
        for st in self.steps.iter().rev().filter(|st| st.kind == StepKind::Row) {
            let c0 = s.col_start[st.block];
            let row = self.row_slice(st.block, st.row);
            let mut acc = x[st.row];
            for (c, &a) in row.iter().enumerate() {
                let j = c0 + c;
                if j == st.col || (j < st.col && self.col_kind[j] == StepKind::Row) {
                    continue;
                }
                acc -= a * z[j];
            }
            z[st.col] = acc / row[st.col - c0];
        }

        // x = R_ops z
        for st in self.steps.iter().rev().filter(|st| st.kind == StepKind::Col) {
            let c0 = s.col_start[st.block];
            let row = self.row_slice(st.block, st.row);
            let lc = st.col - c0;
            let acc: f64 = row[lc + 1..].iter().enumerate().map(|(k, m)| m * z[st.col + 1 + k]).sum();
            z[st.col] -= acc;
            z.swap(st.col, st.swapped);
        }
        x.copy_from_slice(&z);
    }

    /// Solves `Aᵀ y = g`.
    pub fn solve_transpose(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.check_len(g)?;
        let mut v = g.to_vec();
        self.solve_transpose_in_place(&mut v);
        Ok(v)
    }

    pub fn solve_transpose_in_place(&self, v: &mut [f64]) {
        let s = &self.structure;
        let n = s.n;
        debug_assert_eq!(v.len(), n);

        // h = R_opsᵀ g
        for st in self.steps.iter().filter(|st| st.kind == StepKind::Col) {
            v.swap(st.col, st.swapped);
            let c0 = s.col_start[st.block];
            let row = self.row_slice(st.block, st.row);
            let lc = st.col - c0;
            let vp = v[st.col];
            if vp != 0.0 {
                for (k, m) in row[lc + 1..].iter().enumerate() {
                    v[st.col + 1 + k] -= m * vp;
                }
            }
        }

        // Mᵀ w = h, w indexed by physical rows.
        let mut w = vec![0.0; n];
        let column_dot = |w: &[f64], j: usize, skip_row: usize| -> f64 {
            let mut acc = 0.0;
            for b in s.blocks_of_col(j) {
                let (r0, nc, c0) = (s.row_start[b], s.cols[b], s.col_start[b]);
                let panel = &self.panels[b];
                for r in 0..s.rows[b] {
                    let row = r0 + r;
                    if row == skip_row || self.is_multiplier_slot(row, j) {
                        continue;
                    }
                    acc += panel[r * nc + (j - c0)] * w[row];
                }
            }
            acc
        };
        for st in self.steps.iter().filter(|st| st.kind == StepKind::Row) {
            let diag = self.row_slice(st.block, st.row)[st.col - s.col_start[st.block]];
            w[st.row] = (v[st.col] - column_dot(&w, st.col, st.row)) / diag;
        }
        for st in self.steps.iter().rev().filter(|st| st.kind == StepKind::Col) {
            let diag = self.row_slice(st.block, st.row)[st.col - s.col_start[st.block]];
            w[st.row] = (v[st.col] - column_dot(&w, st.col, st.row)) / diag;
        }

        // y = L_opsᵀ w
        for st in self.steps.iter().rev().filter(|st| st.kind == StepKind::Row) {
            let b = st.block;
            let (r0, nc, c0) = (s.row_start[b], s.cols[b], s.col_start[b]);
            let lc = st.col - c0;
            let panel = &self.panels[b];
            let acc: f64 = (st.row - r0 + 1..s.rows[b]).map(|r| panel[r * nc + lc] * w[r0 + r]).sum();
            w[st.row] -= acc;
            w.swap(st.row, st.swapped);
        }
        v.copy_from_slice(&w);
    }

    /// Solves for every column of `rhs` (shape `n x k`).
    pub fn solve_matrix(&self, rhs: &Matrix) -> Result<Matrix> {
        self.solve_columns(rhs, false)
    }

    pub fn solve_transpose_matrix(&self, rhs: &Matrix) -> Result<Matrix> {
        self.solve_columns(rhs, true)
    }

    fn solve_columns(&self, rhs: &Matrix, transpose: bool) -> Result<Matrix> {
        let n = self.structure.n;
        if rhs.rows() != n {
            return Err(dim_mismatch(format!("rhs has {} rows, system {n}", rhs.rows())));
        }
        let mut out = Matrix::zeros(n, rhs.cols());
        let mut col = vec![0.0; n];
        for j in 0..rhs.cols() {
            for i in 0..n {
                col[i] = rhs.get(i, j);
            }
            if transpose {
                self.solve_transpose_in_place(&mut col);
            } else {
                self.solve_in_place(&mut col);
            }
            for i in 0..n {
                out.set(i, j, col[i]);
            }
        }
        Ok(out)
    }

    /// Estimate of the 1-norm condition number (Hager's method).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.structure.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x).expect("length checked");
            est = y.iter().map(|v| v.abs()).sum();
            let sign: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&sign).expect("length checked");
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[jmax] = 1.0;
        }
        est * self.norm_one
    }
}

/// Structure with blocks of `width` columns, `width / 2` overlap and
/// `width / 2` rows each; the last block absorbs the remainder.
pub fn staircase_structure(n: usize, width: usize) -> Result<BlockStructure> {
    if width < 2 || width > n {
        return Err(invalid(format!("block width {width} incompatible with n = {n}")));
    }
    let overlap = width / 2;
    let step = width - overlap;
    let nb = ((n - overlap) / step).max(1);
    if nb == 1 {
        return BlockStructure::dense(n);
    }
    let last_start = (nb - 1) * step;
    let mut rows = vec![step; nb];
    let mut cols = vec![width; nb];
    rows[nb - 1] = n - last_start;
    cols[nb - 1] = n - last_start;
    BlockStructure::new(rows, cols, vec![overlap; nb - 1])
}

/// Random ABD matrix with uniform entries in [-1, 1] plus `diag_shift` on the diagonal.
pub fn random_abd(structure: BlockStructure, diag_shift: f64, rng: &mut impl Rng) -> AbdMatrix {
    let mut m = AbdMatrix::zeros(structure);
    let s = m.structure.clone();
    for b in 0..s.block_count() {
        let (nc, c0, r0) = (s.cols[b], s.col_start[b], s.row_start[b]);
        for r in 0..s.rows[b] {
            for c in 0..nc {
                let mut v = rng.gen_range(-1.0..1.0);
                if r0 + r == c0 + c {
                    v += diag_shift.copysign(v);
                }
                m.blocks[b][r * nc + c] = v;
            }
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockWidth {
    /// `width = round(sqrt(n))` rounded to even.
    Sqrt,
    Fixed(usize),
}

impl BlockWidth {
    pub fn for_size(self, n: usize) -> usize {
        match self {
            BlockWidth::Sqrt => {
                let w = (n as f64).sqrt().round() as usize;
                (w + w % 2).max(2)
            }
            BlockWidth::Fixed(w) => w,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub time_factorize_s: f64,
    pub time_solve_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log(factorize + solve time) against log n.
    pub exponent: Option<f64>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,time_factorize_s,time_solve_s\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.9e},{:.9e}\n", r.n, r.time_factorize_s, r.time_solve_s));
        }
        out
    }
}

/// Times factorize + solve on random systems of each size and fits the
/// log-log slope. Each timing is the minimum over enough repetitions to fill
/// `min_seconds`.
pub fn benchmark_scaling(
    sizes: &[usize],
    width: BlockWidth,
    min_seconds: f64,
    seed: u64,
) -> Result<ScalingReport> {
    if sizes.is_empty() {
        return Err(invalid("no sizes given"));
    }
    if sizes.iter().any(|&n| n < 64) {
        return Err(invalid("benchmark sizes must be at least 64"));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("benchmark sizes must be strictly increasing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let structure = staircase_structure(n, width.for_size(n))?;
        let m = random_abd(structure, 2.0, &mut rng);
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (mut best_fac, mut best_sol) = (f64::INFINITY, f64::INFINITY);
        let start = Instant::now();
        let mut reps = 0;
        while reps < 3 || start.elapsed().as_secs_f64() < min_seconds {
            let t0 = Instant::now();
            let fac = factorize(&m)?;
            let t1 = Instant::now();
            let x = fac.solve(&f)?;
            let t2 = Instant::now();
            std::hint::black_box(&x);
            best_fac = best_fac.min((t1 - t0).as_secs_f64());
            best_sol = best_sol.min((t2 - t1).as_secs_f64());
            reps += 1;
        }
        rows.push(ScalingRow { n, time_factorize_s: best_fac, time_solve_s: best_sol });
    }
    let exponent = (rows.len() >= 2).then(|| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| ((r.n as f64).ln(), (r.time_factorize_s + r.time_solve_s).ln()))
            .collect();
        log_log_slope(&pts)
    });
    Ok(ScalingReport { rows, exponent })
}

fn log_log_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &AbdMatrix, x: &[f64], f: &[f64]) -> f64 {
        let ax = m.apply(x).unwrap();
        let r: f64 = ax.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nf: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        r / nf.max(f64::MIN_POSITIVE)
    }

    #[test]
    fn one_by_one_identity() {
        let s = BlockStructure::dense(1).unwrap();
        let m = AbdMatrix::assemble(s, vec![vec![1.0]]).unwrap();
        assert_eq!(m.to_dense().data(), &[1.0]);
        let fac = factorize(&m).unwrap();
        assert_eq!(fac.solve(&[3.5]).unwrap(), vec![3.5]);
    }

    #[test]
    fn identity_solves_are_trivial() {
        let m = AbdMatrix::identity(7).unwrap();
        let fac = factorize(&m).unwrap();
        let f: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        assert_eq!(fac.solve(&f).unwrap(), f);
        assert_eq!(fac.solve_transpose(&f).unwrap(), f);
        assert_eq!(fac.interchange_counts(), (0, 0));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_abd(staircase_structure(40, 8).unwrap(), 2.0, &mut rng);
        let fac = factorize(&m).unwrap();
        assert!(fac.solve(&[0.0; 40]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn assemble_rejects_bad_shapes() {
        let s = BlockStructure::new(vec![2, 4], vec![3, 6], vec![3]).unwrap();
        let err = AbdMatrix::assemble(s.clone(), vec![vec![0.0; 6], vec![0.0; 23]]);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let err = AbdMatrix::assemble(s, vec![vec![0.0; 6]]);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn structure_invariants() {
        assert!(BlockStructure::new(vec![2, 2], vec![3, 3], vec![1]).is_err()); // 4 rows vs 5 cols
        assert!(BlockStructure::new(vec![2, 3], vec![3, 3], vec![4]).is_err());
        assert!(BlockStructure::new(vec![], vec![], vec![]).is_err());
        // block 0 would overlap block 2
        assert!(BlockStructure::new(vec![1, 1, 2], vec![3, 1, 2], vec![1, 0]).is_err());
        let s = BlockStructure::new(vec![2, 1, 2], vec![3, 3, 2], vec![1, 2]).unwrap();
        assert_eq!(s.dim(), 5);
        assert_eq!(s.col_start(2), 3);
    }

    #[test]
    fn zero_blocks_give_zero_dense_and_singular_factorization() {
        let s = staircase_structure(12, 4).unwrap();
        let m = AbdMatrix::zeros(s);
        assert_eq!(m.to_dense().max_abs(), 0.0);
        assert!(matches!(factorize(&m), Err(Error::Singular(_))));
    }

    #[test]
    fn singular_column_is_reported() {
        // second column identically zero
        let s = BlockStructure::dense(3).unwrap();
        let m = AbdMatrix::assemble(s, vec![vec![1.0, 0.0, 2.0, 3.0, 0.0, 1.0, 1.0, 0.0, 5.0]]).unwrap();
        assert!(matches!(factorize(&m), Err(Error::Singular(_))));
    }

    #[test]
    fn random_systems_have_small_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, w) in [(10, 4), (33, 6), (64, 8), (101, 10)] {
            let m = random_abd(staircase_structure(n, w).unwrap(), 1.0, &mut rng);
            let fac = factorize(&m).unwrap();
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = fac.solve(&f).unwrap();
            assert!(residual(&m, &x, &f) < 1e-12, "n={n}");
            let y = fac.solve_transpose(&f).unwrap();
            let aty = m.apply_transpose(&y).unwrap();
            let r: f64 = aty.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(r < 1e-12, "transpose n={n}: {r}");
        }
    }

    #[test]
    fn full_overlap_layout_solves() {
        // First block shares every column with the second.
        let s = BlockStructure::new(vec![2, 4], vec![3, 6], vec![3]).unwrap();
        let m = AbdMatrix::assemble(
            s,
            vec![
                vec![1.0, 0.0, 0.0, 1.0, 1.5, 1.25],
                vec![1.0, 0.5, 0.25, -1.0, -0.5, -0.25, 0.0, 1.0, 1.0, 0.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0,
                     1.75, 2.0625, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            ],
        )
        .unwrap();
        let fac = factorize(&m).unwrap();
        let f = [0.1, 0.7, 0.0, 0.0, -0.3, 0.2];
        let x = fac.solve(&f).unwrap();
        assert!(residual(&m, &x, &f) < 1e-13);
    }

    #[test]
    fn scaling_single_size_has_no_fit() {
        let rep = benchmark_scaling(&[64], BlockWidth::Sqrt, 0.0, 0).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.exponent.is_none());
        assert!(rep.to_csv().starts_with("n,time_factorize_s,time_solve_s\n64,"));
    }

    #[test]
    fn scaling_rejects_bad_sizes() {
        assert!(benchmark_scaling(&[32, 128], BlockWidth::Sqrt, 0.0, 0).is_err());
        assert!(benchmark_scaling(&[128, 128], BlockWidth::Sqrt, 0.0, 0).is_err());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|n| (n.ln(), 3.0 * n.ln() + 0.5)).collect();
        assert!((log_log_slope(&pts) - 3.0).abs() < 1e-12);
    }
}
