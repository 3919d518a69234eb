use crate::error::{Error, Result};
use crate::linalg::SymmetricOperator;
use crate::vecops::{axpy, dot, norm};

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Stop when `‖r‖ ≤ rel_tol · ‖b‖`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator. `diag` is the operator's diagonal.
pub fn conjugate_gradient(
    op: &dyn SymmetricOperator,
    diag: Option<&[f64]>,
    b: &[f64],
    opts: CgOptions,
) -> Result<Vec<f64>> {
    let n = op.dim();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let precond = |r: &[f64], z: &mut [f64]| match diag {
        Some(d) => {
            for i in 0..n {
                z[i] = r[i] / d[i];
            }
        }
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..opts.max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure(format!(
                "operator is not positive definite (pᵀAp = {pap})"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if norm(&r) <= opts.rel_tol * bnorm {
            return Ok(x);
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure(format!(
        "conjugate gradients did not reach {} in {} iterations",
        opts.rel_tol, opts.max_iter
    )))
}
