//! Compressed-row sparse matrices and the direct solve.

use crate::error::{Error, Result};

mod umfpack;

/// Relative residual `‖Ax - b‖ / ‖b‖` every solve must reach.
pub const SOLVE_TOL: f64 = 1e-10;

const MAX_REFINEMENT: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicates are summed. Entries are ordered by a stable sort, so the
    /// summation order, and therefore the result, is deterministic.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `Σ w_k A_k`; all terms must share the shape.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> SparseMatrix {
        let (n_rows, n_cols) = (terms[0].1.n_rows, terms[0].1.n_cols);
        let mut t = Vec::with_capacity(terms.iter().map(|(_, m)| m.nnz()).sum());
        for &(w, m) in terms {
            assert_eq!((m.n_rows, m.n_cols), (n_rows, n_cols));
            if w != 0.0 {
                t.extend(m.triplets().into_iter().map(|(r, c, v)| (r, c, w * v)));
            }
        }
        SparseMatrix::from_triplets(n_rows, n_cols, t)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }
}

/// Assembled operator, right-hand side and the first global index of each
/// element's block.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub offsets: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Final relative residual.
    pub residual: f64,
    pub refinement_steps: usize,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Sparse LU (UMFPACK, threshold partial pivoting) followed by up to
/// three steps of iterative refinement.
pub fn solve(system: &LinearSystem) -> Result<SolveReport> {
    let a = &system.matrix;
    let b = &system.rhs;
    let n = a.n_rows();
    if a.n_cols() != n || b.len() != n {
        return Err(Error::Solver(format!(
            "shape mismatch: {}x{} matrix, rhs of length {}",
            a.n_rows(),
            a.n_cols(),
            b.len()
        )));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(SolveReport { x: vec![0.0; n], residual: 0.0, refinement_steps: 0 });
    }
    let fail = |e: String| Error::Solver(format!("LU failed ({n} unknowns, {} nonzeros): {e}", a.nnz()));
    let lu = umfpack::Factors::new(n, &a.row_ptr, &a.col_idx, &a.values).map_err(fail)?;
    let mut x = lu.solve(b).map_err(fail)?;
    let mut rel = norm2(&residual(a, &x, b)) / bnorm;
    let mut steps = 0;
    while steps < MAX_REFINEMENT && rel > 1e-14 && rel.is_finite() {
        let dx = lu.solve(&residual(a, &x, b)).map_err(fail)?;
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let relc = norm2(&residual(a, &candidate, b)) / bnorm;
        steps += 1;
        if !(relc < rel) {
            break;
        }
        x = candidate;
        rel = relc;
    }
    if !(rel <= SOLVE_TOL) {
        return Err(Error::Solver(format!(
            "relative residual {rel:.3e} exceeds {SOLVE_TOL:e} after {steps} refinement steps \
             ({n} unknowns, {} nonzeros, reciprocal condition estimate {:.3e})",
            a.nnz(),
            lu.rcond
        )));
    }
    Ok(SolveReport { x, residual: rel, refinement_steps: steps })
}
