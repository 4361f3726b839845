//! Spectral stability of the explicit scheme on 2D linear advection, plus
//! matrix diagnostics (sparsity, bandwidth, condition number).
//!
//! The amplification matrix is constructed directly from the explicit update
//! actually used by the stepper (with the linear-advection closure), so the
//! stability threshold it reports is the threshold of the real scheme.

use crate::fem::{assemble_with_plan, assembly_plan, MatrixSelector};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};
use libm::erf;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest matrix order handled on the dense path.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub dt_values: Vec<f64>,
    pub spectral_radii: Vec<f64>,
    pub dt_critical: f64,
}

#[derive(Debug, Clone)]
pub struct MatrixDiagnostics {
    pub nnz: usize,
    pub half_bandwidth: usize,
    pub condition_number_l2: Option<f64>,
    pub symmetric: bool,
}

/// Amplification matrix of the explicit scheme for linear advection
/// u_t + c1 u_x + c2 u_y = 0: realizes U^{n+1} = A U^n.
///
/// Rows of inflow boundary nodes (outward normal opposing the advection
/// direction) are identity rows, matching the strong Dirichlet imposition
/// in the stepper. Dense path only (n <= DENSE_LIMIT).
pub fn amplification_matrix(
    mesh: &Mesh,
    c1: f64,
    c2: f64,
    beta: f64,
    dt: f64,
) -> Result<DMatrix<f64>> {
    let n = mesh.n_nodes();
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimit(n, DENSE_LIMIT));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta}")));
    }
    let plan = assembly_plan(mesh);
    let mass = assemble_with_plan(mesh, MatrixSelector::Mass, &plan)?;
    let cx = assemble_with_plan(mesh, MatrixSelector::Cx, &plan)?;
    let cy = assemble_with_plan(mesh, MatrixSelector::Cy, &plan)?;
    let dxh = assemble_with_plan(mesh, MatrixSelector::DxH, &plan)?;
    let dxyh = assemble_with_plan(mesh, MatrixSelector::DxyH, &plan)?;
    let dyxh = assemble_with_plan(mesh, MatrixSelector::DyxH, &plan)?;
    let dyh = assemble_with_plan(mesh, MatrixSelector::DyH, &plan)?;

    // upwind weights of the linear-advection closure
    let sb = beta.sqrt();
    let (s1, s2) = (c1 * sb, c2 * sb);
    let sqrt_pi_beta = (std::f64::consts::PI * beta).sqrt();
    let bhat1 = (-s1 * s1).exp() / sqrt_pi_beta;
    let bhat2 = (-s2 * s2).exp() / sqrt_pi_beta;
    let wx = c1 * erf(s1) + bhat1;
    let wxy = c2 * erf(s1);
    let wyx = c1 * erf(s2);
    let wy = c2 * erf(s2) + bhat2;

    let mut m_d = mass.to_dense();
    let mut k_d = DMatrix::<f64>::zeros(n, n);
    let mut add = |mat: &CsrMatrix, w: f64| {
        for r in 0..n {
            for k in mat.row_ptr[r]..mat.row_ptr[r + 1] {
                k_d[(r, mat.col_idx[k])] += w * mat.values[k];
            }
        }
    };
    add(&cx, c1);
    add(&cy, c2);
    add(&dxh, wx);
    add(&dxyh, wxy);
    add(&dyxh, wyx);
    add(&dyh, wy);

    // inflow rows: boundary nodes whose outward normal opposes (c1, c2)
    let mut outflow: Vec<usize> = Vec::new();
    for bset in &mesh.boundaries {
        for (k, &node) in bset.nodes.iter().enumerate() {
            let nm = bset.normals.get(k).copied().unwrap_or([0.0, 0.0]);
            if nm[0] * c1 + nm[1] * c2 < 0.0 {
                for j in 0..n {
                    m_d[(node, j)] = 0.0;
                    k_d[(node, j)] = 0.0;
                }
                m_d[(node, node)] = 1.0;
            } else {
                outflow.push(node);
            }
        }
    }

    let b = &m_d - dt * &k_d;
    let lu = m_d.lu();
    let mut amp = lu
        .solve(&b)
        .ok_or_else(|| Error::SingularMatrix("mass matrix LU solve failed".into()))?;

    // outflow rows copy their most-upwind neighbor, mirroring the stepper's
    // first-order extrapolation (applied after the mass solve, so it
    // overwrites inflow rows at shared corners just as the stepper does)
    let adjacency = &mass; // element connectivity via the mass pattern
    for &node in &outflow {
        let (xn, yn) = (mesh.nodes[node].x, mesh.nodes[node].y);
        let mut donor = None;
        let mut best = f64::INFINITY;
        for k in adjacency.row_ptr[node]..adjacency.row_ptr[node + 1] {
            let j = adjacency.col_idx[k];
            if j == node {
                continue;
            }
            let (dx, dy) = (mesh.nodes[j].x - xn, mesh.nodes[j].y - yn);
            let len = (dx * dx + dy * dy).sqrt().max(1e-300);
            let upwind = (dx * c1 + dy * c2) / len;
            if upwind < best {
                best = upwind;
                donor = Some(j);
            }
        }
        if let Some(d) = donor {
            for j in 0..n {
                amp[(node, j)] = 0.0;
            }
            amp[(node, d)] = 1.0;
        }
    }
    Ok(amp)
}

/// Spectral radius by power iteration on a matrix action. Every few steps the
/// dominant eigenvalue (real or complex pair) is extracted from a two-term
/// companion fit z = alpha*y + beta*x over consecutive iterates, which also
/// converges for rotating complex pairs; `converged` is false if maxit was
/// exhausted first.
pub fn spectral_radius_action(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    tol: f64,
    maxit: usize,
) -> (f64, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = |v: &[f64]| v.iter().map(|e| e * e).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let nx = norm(&x).max(f64::MIN_POSITIVE);
    x.iter_mut().for_each(|e| *e /= nx);
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut prev_est = f64::INFINITY;
    let mut it = 0;
    while it < maxit {
        // a few plain normalized power steps to enrich the dominant subspace
        for _ in 0..4 {
            apply(&x, &mut y);
            let g = norm(&y);
            if g < 1e-300 {
                return (0.0, true);
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / g;
            }
            it += 1;
        }
        apply(&x, &mut y);
        apply(&y, &mut z);
        it += 2;
        // least squares for z = alpha*y + beta*x; the companion polynomial
        // lambda^2 - alpha*lambda - beta carries the dominant pair
        let (yy, yx, zy, zx) = (dot(&y, &y), dot(&y, &x), dot(&z, &y), dot(&z, &x));
        let det = yy - yx * yx; // x is unit
        let est = if det.abs() <= 1e-14 * yy.max(1.0) {
            // iterate already an eigenvector direction: growth is the radius
            norm(&y)
        } else {
            let alpha = (zy - yx * zx) / det;
            let beta = (yy * zx - yx * zy) / det;
            let disc = alpha * alpha + 4.0 * beta;
            if disc >= 0.0 {
                let r = disc.sqrt();
                (0.5 * (alpha + r)).abs().max((0.5 * (alpha - r)).abs())
            } else {
                // conjugate pair: |lambda|^2 equals the root product -beta
                (-beta).sqrt()
            }
        };
        if est.is_finite() && (est - prev_est).abs() <= tol * est.abs().max(1e-300) {
            return (est, true);
        }
        prev_est = est;
    }
    (prev_est, false)
}

pub fn spectral_radius(a: &DMatrix<f64>, tol: f64, maxit: usize) -> (f64, bool) {
    let n = a.nrows();
    spectral_radius_action(
        n,
        |x, y| {
            let xv = nalgebra::DVector::from_column_slice(x);
            let yv = a * xv;
            y.copy_from_slice(yv.as_slice());
        },
        tol,
        maxit,
    )
}

/// Spectral radius of the amplification matrix at one time step.
pub fn amplification_radius(mesh: &Mesh, c1: f64, c2: f64, beta: f64, dt: f64) -> Result<f64> {
    let a = amplification_matrix(mesh, c1, c2, beta, dt)?;
    Ok(spectral_radius(&a, 1e-8, 8000).0)
}

/// Bisect for the time step where the spectral radius crosses 1.
pub fn find_critical_dt(
    mesh: &Mesh,
    c1: f64,
    c2: f64,
    beta: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi > lo && tol > 0.0) {
        return Err(Error::BadBracket(format!("bracket ({lo}, {hi}), tol {tol}")));
    }
    let rho_lo = amplification_radius(mesh, c1, c2, beta, lo)?;
    let rho_hi = amplification_radius(mesh, c1, c2, beta, hi)?;
    if rho_lo > 1.0 + 1e-6 || rho_hi <= 1.0 + 1e-6 {
        return Err(Error::BadBracket(format!(
            "rho({lo}) = {rho_lo}, rho({hi}) = {rho_hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let rho = amplification_radius(mesh, c1, c2, beta, mid)?;
        if rho <= 1.0 + 1e-6 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sweep dt values, record spectral radii, and locate the stability
/// threshold within the sweep range.
pub fn stability_sweep(
    mesh: &Mesh,
    c1: f64,
    c2: f64,
    beta: f64,
    dt_lo: f64,
    dt_hi: f64,
    steps: usize,
) -> Result<StabilityReport> {
    if steps < 2 || !(dt_hi > dt_lo) {
        return Err(Error::InvalidArgument(format!(
            "sweep {dt_lo}:{dt_hi}:{steps}"
        )));
    }
    let mut dt_values = Vec::with_capacity(steps);
    let mut spectral_radii = Vec::with_capacity(steps);
    for k in 0..steps {
        let dt = dt_lo + (dt_hi - dt_lo) * k as f64 / (steps - 1) as f64;
        dt_values.push(dt);
        spectral_radii.push(amplification_radius(mesh, c1, c2, beta, dt)?);
    }
    // bracket from the sweep itself
    let mut dt_critical = f64::NAN;
    for k in 1..steps {
        if spectral_radii[k - 1] <= 1.0 + 1e-6 && spectral_radii[k] > 1.0 + 1e-6 {
            dt_critical = find_critical_dt(
                mesh,
                c1,
                c2,
                beta,
                (dt_values[k - 1], dt_values[k]),
                (dt_hi - dt_lo) * 1e-3,
            )?;
            break;
        }
    }
    Ok(StabilityReport {
        dt_values,
        spectral_radii,
        dt_critical,
    })
}

/// Write the `dt, spectral_radius` table.
pub fn write_stability_csv(report: &StabilityReport, path: &std::path::Path) -> Result<()> {
    let mut text = String::from("dt,spectral_radius\n");
    for (dt, rho) in report.dt_values.iter().zip(&report.spectral_radii) {
        text.push_str(&format!("{dt:.16e},{rho:.16e}\n"));
    }
    crate::cases::write_atomic(path, &text)
}

fn condition_sparse(a: &CsrMatrix) -> Result<f64> {
    // sigma_max^2: power iteration on A^T A as an operator
    let n = a.n_rows;
    let at = a.transpose();
    let mut tmp = vec![0.0; n];
    let mut gram = |x: &[f64], y: &mut [f64]| {
        a.spmv_into(x, &mut tmp);
        at.spmv_into(&tmp, y);
    };
    let (smax2, _) = spectral_radius_action(n, &mut gram, 1e-9, 20000);

    // sigma_min^2: inverse power iteration on (A^T A)^{-1}; each application
    // is a pair of preconditioned BiCGSTAB solves, A^T z = x then A y = z
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = |v: &[f64]| v.iter().map(|e| e * e).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|e| *e /= nx);
    let mut warm_z = vec![0.0; n];
    let mut warm_y = vec![0.0; n];
    let mut mu = 0.0;
    let mut mu_prev = f64::INFINITY;
    for _ in 0..40 {
        let rz = crate::linalg::bicgstab_with(&at, &x, &warm_z, 1e-10, 100 * n, true)?;
        let ry = crate::linalg::bicgstab_with(a, &rz.solution, &warm_y, 1e-10, 100 * n, true)?;
        warm_z = rz.solution;
        let y = ry.solution;
        let g = norm(&y);
        if g < 1e-300 {
            return Err(Error::SingularMatrix("inverse iteration diverged".into()));
        }
        mu = g;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / g;
        }
        warm_y = y;
        if (mu - mu_prev).abs() <= 1e-6 * mu {
            break;
        }
        mu_prev = mu;
    }
    let smin2 = 1.0 / mu;
    if smin2 <= 0.0 || !smin2.is_finite() {
        return Err(Error::SingularMatrix("sigma_min estimate underflowed".into()));
    }
    Ok((smax2 / smin2).sqrt())
}

/// Sparsity, bandwidth, symmetry, and (optionally) the L2 condition number
/// (dense SVD up to DENSE_LIMIT, otherwise singular-value power iterations).
pub fn matrix_diagnostics(a: &CsrMatrix, compute_condition: bool) -> Result<MatrixDiagnostics> {
    let nnz = a.nnz();
    let half_bandwidth = a.half_bandwidth();
    let mut symmetric = a.n_rows == a.n_cols;
    if symmetric {
        'outer: for r in 0..a.n_rows {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[k];
                if (a.values[k] - a.get(c, r)).abs() > 1e-12 * a.values[k].abs().max(1.0) {
                    symmetric = false;
                    break 'outer;
                }
            }
        }
    }
    let condition_number_l2 = if compute_condition {
        if a.n_rows != a.n_cols {
            return Err(Error::DimensionMismatch(
                "condition number needs a square matrix".into(),
            ));
        }
        Some(if a.n_rows <= DENSE_LIMIT {
            let svd = a.to_dense().svd(false, false);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smin <= smax * 1e-300 {
                return Err(Error::SingularMatrix("zero singular value".into()));
            }
            smax / smin
        } else {
            condition_sparse(a)?
        })
    } else {
        None
    };
    Ok(MatrixDiagnostics {
        nnz,
        half_bandwidth,
        condition_number_l2,
        symmetric,
    })
}
