//! Direct sparse LU solves backed by faer.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Par};

use super::sparse::{CsrMatrix, SparseSystem};
use crate::error::SolverError;

pub const RESIDUAL_TOL: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;
/// Largest system for which a singular factorization is re-run densely to
/// report the offending pivot.
const DENSE_DIAGNOSIS_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    /// ‖Ax − b‖₂ / ‖b‖₂ (absolute when b = 0).
    pub residual: f64,
}

/// Column-compressed copy of a CSR matrix.
struct Csc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csc {
    fn from_csr(a: &CsrMatrix) -> Self {
        let t = a.transpose();
        Csc {
            n: a.n_rows,
            col_ptr: t.row_ptr,
            row_idx: t.col_idx,
            values: t.values,
        }
    }

    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }
}

fn force_sequential() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Sparse LU solver that keeps the symbolic analysis of the last pattern.
///
/// Numeric factors are recomputed on every call.
#[derive(Default)]
pub struct LuSolver {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

impl std::fmt::Debug for LuSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuSolver")
            .field("cached_pattern", &self.cached.as_ref().map(|c| c.1.len()))
            .finish()
    }
}

impl LuSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, system: &SparseSystem) -> Result<Solution, SolverError> {
        force_sequential();
        let a = &system.matrix;
        let b = &system.rhs;
        let n = b.len();
        if a.n_rows != a.n_cols || a.n_rows != n {
            return Err(SolverError::Dimension {
                rows: a.n_rows,
                cols: a.n_cols,
                rhs: n,
            });
        }
        if n == 0 {
            return Ok(Solution { x: Vec::new(), residual: 0.0 });
        }
        if let Some(k) = a.values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::Backend(format!("matrix entry {k} is not finite")));
        }

        let csc = Csc::from_csr(a);
        let reuse = matches!(&self.cached, Some((p, r, _)) if *p == csc.col_ptr && *r == csc.row_idx);
        if !reuse {
            let symbolic = SymbolicLu::try_new(csc.symbolic()).map_err(|e| SolverError::Backend(format!("{e:?}")))?;
            self.cached = Some((csc.col_ptr.clone(), csc.row_idx.clone(), symbolic));
        }
        let symbolic = self.cached.as_ref().unwrap().2.clone();

        let mat = SparseColMatRef::new(csc.symbolic(), &csc.values);
        let lu = match catch_unwind(AssertUnwindSafe(|| Lu::try_new_with_symbolic(symbolic, mat))) {
            Ok(Ok(lu)) => lu,
            Ok(Err(LuError::SymbolicSingular { index })) => return Err(SolverError::SingularPivot { index }),
            Ok(Err(LuError::Generic(e))) => return Err(SolverError::Backend(format!("{e:?}"))),
            // The simplicial kernel aborts on an exactly zero pivot.
            Err(_) => return Err(diagnose_singular(a)),
        };

        let solve = |rhs: &[f64]| {
            let mut x = rhs.to_vec();
            lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));
            x
        };

        let b_norm = norm2(b);
        let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
        let mut x = solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(diagnose_singular(a));
        }
        let mut r = residual(a, &x, b);
        let mut rel = norm2(&r) / scale;
        for _ in 0..REFINEMENT_STEPS {
            if rel <= 1e-15 {
                break;
            }
            let dx = solve(&r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let cr = residual(a, &cand, b);
            let crel = norm2(&cr) / scale;
            if !(crel < rel) {
                break;
            }
            x = cand;
            r = cr;
            rel = crel;
        }
        if !rel.is_finite() {
            return Err(SolverError::NonFinite);
        }
        if rel > RESIDUAL_TOL {
            return Err(SolverError::Residual {
                residual: rel,
                tolerance: RESIDUAL_TOL,
            });
        }
        Ok(Solution { x, residual: rel })
    }
}

/// One-shot direct solve.
pub fn solve_sparse(system: &SparseSystem) -> Result<Solution, SolverError> {
    LuSolver::new().solve(system)
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    a.matvec_acc(x, -1.0, &mut r);
    r
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diagnose_singular(a: &CsrMatrix) -> SolverError {
    if a.n_rows <= DENSE_DIAGNOSIS_LIMIT {
        match dense_lu_solve(&a.to_dense(), &vec![0.0; a.n_rows]) {
            Err(e) => e,
            Ok(_) => SolverError::NonFinite,
        }
    } else {
        SolverError::Backend("factorization hit a zero pivot".into())
    }
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_lu_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    let tiny = scale * n as f64 * f64::EPSILON;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        if !(m[p][k].abs() > tiny) {
            return Err(SolverError::SingularPivot { index: k });
        }
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    Ok(x)
}
