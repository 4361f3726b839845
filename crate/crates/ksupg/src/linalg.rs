//! Sparse linear algebra kernels: BiCGSTAB and block expansion of scalar
//! finite-element matrices to multi-component systems.

use crate::{CsrMatrix, Error, Result};

/// Outcome of an iterative linear solve.
#[derive(Debug, Clone)]
pub struct LinearSolveResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual ‖b − A x‖₂ / ‖b‖₂.
    pub residual: f64,
    pub converged: bool,
    /// A rho- or omega-breakdown occurred after the single allowed restart.
    pub breakdown: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// BiCGSTAB without preconditioning.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<LinearSolveResult> {
    bicgstab_with(a, b, x0, tol, maxit, false)
}

/// BiCGSTAB, optionally with Jacobi (diagonal) right preconditioning.
///
/// On a rho- or omega-breakdown (|value| < 1e-30) the iteration restarts
/// once from the current iterate with a fresh shadow residual; a second
/// breakdown returns the best iterate with the `breakdown` flag set.
pub fn bicgstab_with(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    maxit: usize,
    jacobi: bool,
) -> Result<LinearSolveResult> {
    let n = a.n_rows;
    if a.n_cols != n {
        return Err(Error::DimensionMismatch(format!(
            "bicgstab: matrix is {}x{}",
            a.n_rows, a.n_cols
        )));
    }
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "bicgstab: n = {n}, |b| = {}, |x0| = {}",
            b.len(),
            x0.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bicgstab: tol = {tol}")));
    }
    let inv_diag: Option<Vec<f64>> = if jacobi {
        let d = a.diagonal();
        if d.iter().any(|&v| v == 0.0) {
            return Err(Error::SingularMatrix("zero diagonal entry".into()));
        }
        Some(d.iter().map(|&v| 1.0 / v).collect())
    } else {
        None
    };
    let precond = |v: &[f64], out: &mut Vec<f64>| {
        out.clear();
        match &inv_diag {
            Some(d) => out.extend(v.iter().zip(d).map(|(x, di)| x * di)),
            None => out.extend_from_slice(v),
        }
    };

    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.spmv_into(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = norm2(&r) / bnorm;
    if res <= tol {
        return Ok(LinearSolveResult {
            solution: x,
            iterations: 0,
            residual: res,
            converged: true,
            breakdown: false,
        });
    }

    const EPS: f64 = 1e-30;
    let mut r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega: f64 = 1.0;
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut restarted = false;
    let mut iterations = 0;

    while iterations < maxit {
        iterations += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < EPS || omega.abs() < EPS {
            if restarted {
                return Ok(LinearSolveResult {
                    solution: x,
                    iterations,
                    residual: res,
                    converged: false,
                    breakdown: true,
                });
            }
            // restart from the current iterate
            restarted = true;
            a.spmv_into(&x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut phat);
        a.spmv_into(&phat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            a.spmv_into(&x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            res = norm2(&r) / bnorm;
            if res <= tol {
                return Ok(LinearSolveResult {
                    solution: x,
                    iterations,
                    residual: res,
                    converged: true,
                    breakdown: false,
                });
            }
        }
        precond(&s, &mut shat);
        a.spmv_into(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r) / bnorm;
        if res <= tol {
            return Ok(LinearSolveResult {
                solution: x,
                iterations,
                residual: res,
                converged: true,
                breakdown: false,
            });
        }
    }
    Ok(LinearSolveResult {
        solution: x,
        iterations,
        residual: res,
        converged: false,
        breakdown: false,
    })
}

/// Expand a scalar n x n finite-element matrix to an (m n) x (m n) system.
///
/// Entry (i, j) of the scalar matrix becomes the m x m block
/// `A(i,j) * B_j`, with the coefficient matrix frozen at the column node j
/// (Picard linearization: nodal coefficient matrices multiply nodal
/// unknowns). `blocks[j]` is row-major m x m; identity blocks when omitted,
/// which yields the Kronecker product A ⊗ I_m.
pub fn block_expand(
    a_scalar: &CsrMatrix,
    m: usize,
    blocks: Option<&[Vec<f64>]>,
) -> Result<CsrMatrix> {
    if a_scalar.n_rows != a_scalar.n_cols {
        return Err(Error::DimensionMismatch(format!(
            "block_expand: matrix is {}x{}",
            a_scalar.n_rows, a_scalar.n_cols
        )));
    }
    let n = a_scalar.n_rows;
    if m == 0 {
        return Err(Error::InvalidArgument("block_expand: m = 0".into()));
    }
    if let Some(bl) = blocks {
        if bl.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "block_expand: {} blocks for {} nodes",
                bl.len(),
                n
            )));
        }
        if bl.iter().any(|b| b.len() != m * m) {
            return Err(Error::DimensionMismatch(format!(
                "block_expand: block size != {m}x{m}"
            )));
        }
    }
    if m == 1 && blocks.is_none() {
        return Ok(a_scalar.clone());
    }
    let mut triplets = Vec::with_capacity(a_scalar.nnz() * m * m);
    for i in 0..n {
        for k in a_scalar.row_ptr[i]..a_scalar.row_ptr[i + 1] {
            let j = a_scalar.col_idx[k];
            let aij = a_scalar.values[k];
            match blocks {
                None => {
                    for c in 0..m {
                        triplets.push((i * m + c, j * m + c, aij));
                    }
                }
                Some(bl) => {
                    let b = &bl[j];
                    for r in 0..m {
                        for c in 0..m {
                            let v = aij * b[r * m + c];
                            if v != 0.0 {
                                triplets.push((i * m + r, j * m + c, v));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n * m, n * m, &triplets))
}
