//! Compressed sparse row matrices and the two solves needed per step.
//!
//! Direct solves go through faer's sparse Cholesky / LU (built without its
//! thread pool, so results are bit-identical across runs). A Jacobi-
//! preconditioned conjugate gradient is available as an independent route.

use std::time::{Duration, Instant};

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Square CSR matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    pub fn new(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
        symmetric: bool,
    ) -> Result<Self> {
        if row_ptr.len() != n + 1
            || row_ptr[0] != 0
            || row_ptr[n] != col_idx.len()
            || values.len() != col_idx.len()
        {
            return Err(Error::InvalidInput("inconsistent CSR arrays".into()));
        }
        for r in 0..n {
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if row_ptr[r] > row_ptr[r + 1]
                || cols.windows(2).any(|w| w[0] >= w[1])
                || cols.iter().any(|&c| c >= n)
            {
                return Err(Error::InvalidInput(format!(
                    "row {r} has unsorted or out-of-range columns"
                )));
            }
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric,
        })
    }

    /// Sums duplicate entries.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, f64)],
        symmetric: bool,
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        if let Some(&(i, j, _)) = sorted.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::InvalidInput(format!(
                "triplet ({i}, {j}) outside {n}x{n}"
            )));
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix::new(n, row_ptr, col_idx, values, symmetric)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric_flag(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let s = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[s.clone()], &self.values[s])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    /// `a·self + b·other` for matrices sharing one sparsity pattern.
    pub fn linear_combination(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::InvalidInput(
                "matrices do not share a sparsity pattern".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(SparseMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
            symmetric: self.symmetric && other.symmetric,
        })
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for r in 0..self.n {
            counts[r + 1] += counts[r];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                col_idx[next[c]] = r;
                values[next[c]] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Column-major copy for faer. CSR of `M` is CSC of `Mᵀ`, so the
    /// transpose's arrays are exactly the CSC arrays of `M`.
    fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t = if self.symmetric {
            self.clone()
        } else {
            self.transpose()
        };
        let symbolic =
            SymbolicSparseColMat::new_checked(self.n, self.n, t.row_ptr, None, t.col_idx);
        SparseColMat::new(symbolic, t.values)
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub relative_residual: f64,
    /// Refinement sweeps for direct solves, iterations for CG.
    pub iterations: usize,
    pub wall_time: Duration,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(m: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mx = m.matvec(x);
    b.iter().zip(mx).map(|(bi, mi)| bi - mi).collect()
}

fn check_dims(m: &SparseMatrix, b: &[f64]) -> Result<()> {
    if b.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: b.len(),
        });
    }
    Ok(())
}

fn zero_rhs(n: usize, start: Instant) -> SolveReport {
    SolveReport {
        solution: vec![0.0; n],
        relative_residual: 0.0,
        iterations: 0,
        wall_time: start.elapsed(),
    }
}

const MAX_REFINEMENT: usize = 4;

// Factor once, then apply a few steps of iterative refinement until the
// residual meets `tol`.
fn direct_solve<F>(
    m: &SparseMatrix,
    b: &[f64],
    tol: f64,
    start: Instant,
    apply: F,
) -> Result<SolveReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let bnorm = norm(b);
    let mut x = apply(b);
    let mut r = residual(m, &x, b);
    let mut rel = norm(&r) / bnorm;
    let mut sweeps = 0;
    while !(rel <= tol) && sweeps < MAX_REFINEMENT {
        let dx = apply(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let rc = residual(m, &candidate, b);
        let rel_c = norm(&rc) / bnorm;
        sweeps += 1;
        if !(rel_c < rel) {
            break;
        }
        x = candidate;
        r = rc;
        rel = rel_c;
    }
    if !rel.is_finite() {
        return Err(Error::Solver("non-finite solution".into()));
    }
    if rel > tol {
        return Err(Error::ResidualTooLarge { residual: rel, tol });
    }
    Ok(SolveReport {
        solution: x,
        relative_residual: rel,
        iterations: sweeps,
        wall_time: start.elapsed(),
    })
}

fn to_vec(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

fn to_mat(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Sparse Cholesky solve of a symmetric positive definite system.
pub fn solve_spd(m: &SparseMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
    let start = Instant::now();
    check_dims(m, b)?;
    if norm(b) == 0.0 {
        return Ok(zero_rhs(m.dim(), start));
    }
    let mut sym = m.clone();
    sym.symmetric = true;
    let fm = sym.to_faer();
    let llt = fm.sp_cholesky(Side::Lower).map_err(|e| {
        Error::Solver(format!(
            "Cholesky factorization failed (matrix not SPD?): {e:?}"
        ))
    })?;
    direct_solve(m, b, tol, start, |rhs| to_vec(&llt.solve(to_mat(rhs))))
}

/// Sparse LU solve with partial pivoting.
pub fn solve_general(m: &SparseMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
    let start = Instant::now();
    check_dims(m, b)?;
    if norm(b) == 0.0 {
        return Ok(zero_rhs(m.dim(), start));
    }
    let fm = m.to_faer();
    let lu = fm
        .sp_lu()
        .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
    direct_solve(m, b, tol, start, |rhs| to_vec(&lu.solve(to_mat(rhs))))
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.
pub fn solve_pcg(m: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<SolveReport> {
    let start = Instant::now();
    check_dims(m, b)?;
    let n = m.dim();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(zero_rhs(n, start));
    }
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Solver(format!(
            "non-positive diagonal at row {i}; matrix not SPD"
        )));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        let ap = m.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Solver(format!(
                "CG breakdown: pᵀMp = {pap:e} (matrix indefinite?)"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) / bnorm <= 0.1 * tol {
            let rel = norm(&residual(m, &x, b)) / bnorm;
            if rel <= tol {
                return Ok(SolveReport {
                    solution: x,
                    relative_residual: rel,
                    iterations: it,
                    wall_time: start.elapsed(),
                });
            }
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&residual(m, &x, b)) / bnorm;
    Err(Error::ResidualTooLarge { residual: rel, tol })
}

/// Which route the study uses for its solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    /// Jacobi-PCG for symmetric systems; nonsymmetric ones still use LU.
    Iterative,
}

impl SolverKind {
    pub fn solve(self, m: &SparseMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
        match (self, m.is_symmetric_flag()) {
            (SolverKind::Direct, true) => solve_spd(m, b, tol),
            (SolverKind::Iterative, true) => solve_pcg(m, b, tol, 20 * m.dim() + 1000),
            (_, false) => solve_general(m, b, tol),
        }
    }
}
