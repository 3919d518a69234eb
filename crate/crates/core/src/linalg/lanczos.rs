//! Block thick-restart Lanczos for the largest eigenvalues of a symmetric
//! operator.
//!
//! The basis is kept fully orthogonal (classical Gram–Schmidt, applied
//! twice), and the projected matrix `Vᵀ A V` is accumulated directly from
//! the orthogonalization coefficients. On restart the best Ritz vectors and
//! the trailing residual block are kept. Starting from a block of `b`
//! random vectors lets eigenvalues of multiplicity up to `b` appear with
//! their full multiplicity, which a single-vector Krylov space cannot do.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SymmetricOperator;
use crate::vecops::{axpy, dot, norm};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Converged when every wanted residual `‖A y − θ y‖` is below
    /// `tol · max(1, |θ_max|)`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Columns kept before a restart; `None` picks `max(3k, k + 40)`.
    pub basis_size: Option<usize>,
    pub block_size: usize,
    pub seed: u64,
    /// Operators of at most this dimension are diagonalized densely.
    pub dense_below: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            max_restarts: 2000,
            basis_size: None,
            block_size: 4,
            seed: 0x5eed,
            dense_below: 160,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Descending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
}

/// Dense symmetric eigendecomposition, values descending.
pub fn dense_eigenpairs(a: &DMatrix<f64>, k: usize) -> EigenPairs {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    order.truncate(k);
    EigenPairs {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
        residuals: vec![0.0; order.len()],
        restarts: 0,
    }
}

fn densify(op: &dyn SymmetricOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    // symmetrize away rounding in the operator application
    let t = m.transpose();
    (m + t) * 0.5
}

/// Orthogonalizes `w` against `basis` twice; returns the accumulated coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, v) in coeffs.iter_mut().zip(basis) {
            let h = dot(v, w);
            axpy(-h, v, w);
            *c += h;
        }
    }
    coeffs
}

fn random_unit_orthogonal(basis: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        orthogonalize(basis, &mut v);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

/// The `k` largest eigenpairs of `op`.
pub fn largest_eigenpairs(op: &dyn SymmetricOperator, k: usize, opts: LanczosOptions) -> Result<EigenPairs> {
    let n = op.dim();
    let k = k.min(n);
    if k == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
            restarts: 0,
        });
    }
    let b = opts.block_size.max(1);
    let m = opts.basis_size.unwrap_or((3 * k).max(k + 40)).max(k + b);
    if n <= opts.dense_below.max(m + 2 * b) {
        return Ok(dense_eigenpairs(&densify(op), k));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + b);
    for _ in 0..b {
        let v = random_unit_orthogonal(&basis, n, &mut rng);
        basis.push(v);
    }
    // projected matrix over the first m basis vectors and coupling rows for the trailing block
    let mut h = DMatrix::<f64>::zeros(m + b, m);
    let mut processed = 0usize;
    let mut w = vec![0.0; n];
    let mut scale = 0.0_f64;

    for restart in 0..opts.max_restarts {
        for j in processed..m {
            op.apply(&basis[j], &mut w);
            let coeffs = orthogonalize(&basis, &mut w);
            for (i, c) in coeffs.iter().enumerate() {
                if i <= j {
                    h[(i, j)] = *c;
                    h[(j, i)] = *c;
                } else {
                    h[(i, j)] = *c;
                }
            }
            let beta = norm(&w);
            scale = scale.max(coeffs.iter().fold(beta, |a, c| a.max(c.abs())));
            let next = if beta > 1e-12 * scale.max(1e-300) {
                let r = basis.len();
                h[(r, j)] = beta;
                w.iter().map(|x| x / beta).collect()
            } else {
                random_unit_orthogonal(&basis, n, &mut rng)
            };
            basis.push(next);
        }

        let hm = h.view((0, 0), (m, m)).into_owned();
        let coupling = h.view((m, 0), (b, m)).into_owned();
        let eig = SymmetricEigen::new(hm);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let theta_max = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let residual = |i: usize| (&coupling * eig.eigenvectors.column(i)).norm();
        let threshold = opts.tol * theta_max.max(1.0);
        let converged = order[..k].iter().all(|&i| residual(i) <= threshold);

        let keep = if converged { k } else { (k + (m - k) / 2).min(m - 1).max(k) };
        let ritz: Vec<Vec<f64>> = order[..keep]
            .iter()
            .map(|&i| {
                let s = eig.eigenvectors.column(i);
                let mut y = vec![0.0; n];
                for (l, v) in basis[..m].iter().enumerate() {
                    axpy(s[l], v, &mut y);
                }
                y
            })
            .collect();

        if converged {
            return Ok(EigenPairs {
                values: order[..k].iter().map(|&i| eig.eigenvalues[i]).collect(),
                residuals: order[..k].iter().map(|&i| residual(i)).collect(),
                vectors: ritz,
                restarts: restart,
            });
        }

        let tail: Vec<Vec<f64>> = basis.drain(m..).collect();
        basis = ritz;
        basis.extend(tail);
        h.fill(0.0);
        for (slot, &i) in order[..keep].iter().enumerate() {
            h[(slot, slot)] = eig.eigenvalues[i];
        }
        processed = keep;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
    })
}
