//! Sparse matrices, symmetric operators and the iterative solvers used by
//! the spectral module.

mod cg;
mod lanczos;
mod sparse;

use std::sync::Mutex;

pub use cg::{conjugate_gradient, CgOptions};
pub use lanczos::{dense_eigenpairs, largest_eigenpairs, EigenPairs, LanczosOptions};
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};

/// A real symmetric linear map `y = A x`.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec(x, y);
    }
}

/// `α A + β I`.
pub struct Affine<'a> {
    pub op: &'a dyn SymmetricOperator,
    pub alpha: f64,
    pub beta: f64,
}

impl SymmetricOperator for Affine<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.alpha * *yi + self.beta * xi;
        }
    }
}

/// `(A + σ I)⁻¹` for a positive semidefinite `A`, applied by conjugate
/// gradients. Solver failures are recorded and surfaced by [`ShiftInvert::check`].
pub struct ShiftInvert<'a> {
    a: &'a CsrMatrix,
    sigma: f64,
    diag: Vec<f64>,
    opts: CgOptions,
    failure: Mutex<Option<Error>>,
}

impl<'a> ShiftInvert<'a> {
    pub fn new(a: &'a CsrMatrix, sigma: f64, opts: CgOptions) -> Self {
        let diag = a.diagonal().iter().map(|d| d + sigma).collect();
        ShiftInvert {
            a,
            sigma,
            diag,
            opts,
            failure: Mutex::new(None),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn check(&self) -> Result<()> {
        match self.failure.lock().unwrap().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl SymmetricOperator for ShiftInvert<'_> {
    fn dim(&self) -> usize {
        self.a.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let shifted = Affine {
            op: self.a,
            alpha: 1.0,
            beta: self.sigma,
        };
        match conjugate_gradient(&shifted, Some(&self.diag), x, self.opts) {
            Ok(sol) => y.copy_from_slice(&sol),
            Err(e) => {
                y.fill(0.0);
                self.failure.lock().unwrap().get_or_insert(e);
            }
        }
    }
}

/// The `k` smallest eigenvalues of `A`, ascending.
pub fn smallest_eigenpairs(a: &dyn SymmetricOperator, k: usize, opts: LanczosOptions) -> Result<EigenPairs> {
    let neg = Affine {
        op: a,
        alpha: -1.0,
        beta: 0.0,
    };
    let mut pairs = largest_eigenpairs(&neg, k, opts)?;
    pairs.values.iter_mut().for_each(|v| *v = -*v);
    Ok(pairs)
}
