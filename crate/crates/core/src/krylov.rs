//! Matrix-free restarted GMRES with modified Gram-Schmidt Arnoldi,
//! Givens-rotation least squares and optional left preconditioning.

use thiserror::Error;

use crate::field::{dot, norm2};

#[derive(Debug, Error)]
pub enum KrylovError {
    #[error("operator produced a non-finite value at iteration {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: operator {op} vs vector {vec}")]
    Dim { op: usize, vec: usize },
}

/// Matrix-free linear operator on flat vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Dense matrix operator, mostly for tests and small problems.
pub struct DenseOp(pub Vec<Vec<f64>>);

impl LinearOperator for DenseOp {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, row) in self.0.iter().enumerate() {
            y[i] = dot(row, x);
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOptions {
    pub tol: f64,
    /// None: no restart (full Krylov basis)
    pub restart: Option<usize>,
    /// cap on the total number of inner iterations
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restart: None,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GmresStats {
    pub iterations: usize,
    /// operator applications, including the initial residual
    pub applications: usize,
    /// relative residual after each iteration (preconditioned when a
    /// preconditioner is supplied)
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// stopped early by the monitor callback
    pub monitor_stop: bool,
}

/// Solve A x = b by GMRES. With a preconditioner M the left-preconditioned
/// system M⁻¹A x = M⁻¹b is solved and residuals are preconditioned ones.
///
/// `monitor` is called after every iteration with (iteration, relative
/// residual, reconstruct) where `reconstruct()` assembles the current
/// iterate; returning `true` stops the iteration (used by drivers that
/// monitor solution-error reduction rather than the residual).
pub fn gmres<A: LinearOperator + ?Sized, M: LinearOperator + ?Sized>(
    a: &A,
    m: Option<&M>,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
    mut monitor: impl FnMut(usize, f64, &mut dyn FnMut() -> Vec<f64>) -> bool,
) -> Result<(Vec<f64>, GmresStats), KrylovError> {
    let n = a.dim();
    if b.len() != n || x0.len() != n {
        return Err(KrylovError::Dim { op: n, vec: b.len() });
    }
    let mut stats = GmresStats::default();
    let mut x = x0.to_vec();
    let mut work = vec![0.0; n];

    let precond = |v: &mut Vec<f64>, work: &mut Vec<f64>| {
        if let Some(mm) = m {
            mm.apply(v, work);
            std::mem::swap(v, work);
        }
    };

    // reference norm: preconditioned rhs, or the initial residual when b = 0
    let mut bnorm = {
        let mut pb = b.to_vec();
        precond(&mut pb, &mut work);
        norm2(&pb)
    };

    let restart = opts.restart.unwrap_or(opts.max_iter).max(1);
    let mut done = false;

    'outer: while !done {
        // r0 = M⁻¹ (b - A x)
        a.apply(&x, &mut work);
        stats.applications += 1;
        let mut r: Vec<f64> = b.iter().zip(&work).map(|(bi, ai)| bi - ai).collect();
        precond(&mut r, &mut work);
        let beta = norm2(&r);
        if !beta.is_finite() {
            return Err(KrylovError::NonFinite(stats.iterations));
        }
        if bnorm == 0.0 {
            bnorm = beta;
        }
        if bnorm == 0.0 || beta / bnorm <= opts.tol {
            stats.converged = true;
            break;
        }

        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns after Givens, plus rotation pairs and rhs g
        let mut hcols: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![beta];

        for k in 0..restart {
            if stats.iterations >= opts.max_iter {
                break 'outer;
            }
            let mut w = vec![0.0; n];
            a.apply(&basis[k], &mut w);
            stats.applications += 1;
            precond(&mut w, &mut work);

            // modified Gram-Schmidt
            let mut h = vec![0.0; k + 2];
            for (j, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                h[j] = hij;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hij * vi;
                }
            }
            // one reorthogonalization pass when orthogonality degrades
            let wn = norm2(&w);
            let ortho_err = basis
                .iter()
                .map(|v| dot(v, &w).abs())
                .fold(0.0_f64, f64::max);
            if wn > 0.0 && ortho_err > 1e-8 * wn {
                for (j, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[j] += c;
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let hk1 = norm2(&w);
            h[k + 1] = hk1;
            if !hk1.is_finite() || h.iter().any(|v| !v.is_finite()) {
                return Err(KrylovError::NonFinite(stats.iterations));
            }

            // apply previous rotations to the new column
            for (j, &(c, s)) in cs.iter().enumerate() {
                let t = c * h[j] + s * h[j + 1];
                h[j + 1] = -s * h[j] + c * h[j + 1];
                h[j] = t;
            }
            // new rotation annihilating h[k+1]
            let (c, s) = {
                let (p, q) = (h[k], h[k + 1]);
                let r = (p * p + q * q).sqrt();
                if r == 0.0 {
                    (1.0, 0.0)
                } else {
                    (p / r, q / r)
                }
            };
            let hkk = c * h[k] + s * h[k + 1];
            h[k] = hkk;
            h[k + 1] = 0.0;
            g.push(-s * g[k]);
            g[k] *= c;
            cs.push((c, s));
            hcols.push(h);

            stats.iterations += 1;
            let rel = g[k + 1].abs() / bnorm;
            stats.residuals.push(rel);

            let happy = hk1 <= 1e-14 * bnorm.max(1.0);
            if !happy {
                basis.push(w.iter().map(|v| v / hk1).collect());
            }

            // iterate reconstruction on demand: back-substitute y, x = x0 + V y
            let mut reconstruct = || -> Vec<f64> {
                let kk = hcols.len();
                let mut y = vec![0.0; kk];
                for i in (0..kk).rev() {
                    let mut s = g[i];
                    for (j, yj) in y.iter().enumerate().take(kk).skip(i + 1) {
                        s -= hcols[j][i] * yj;
                    }
                    y[i] = s / hcols[i][i];
                }
                let mut xk = x.clone();
                for (j, yj) in y.iter().enumerate() {
                    for (xi, vi) in xk.iter_mut().zip(&basis[j]) {
                        *xi += yj * vi;
                    }
                }
                xk
            };

            if monitor(stats.iterations, rel, &mut reconstruct) {
                x = reconstruct();
                stats.monitor_stop = true;
                stats.converged = true;
                break 'outer;
            }
            if rel <= opts.tol || happy {
                x = reconstruct();
                stats.converged = true;
                break 'outer;
            }
            if k + 1 == restart {
                x = reconstruct();
                if stats.iterations >= opts.max_iter {
                    break 'outer;
                }
                continue 'outer;
            }
        }
        done = true;
    }

    Ok((x, stats))
}

/// GMRES without a preconditioner or monitor.
pub fn gmres_plain<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
) -> Result<(Vec<f64>, GmresStats), KrylovError> {
    gmres::<A, DenseOp>(a, None, b, x0, opts, |_, _, _| false)
}
