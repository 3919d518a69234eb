//! Doubly stochastic matrices as a polytope in the coordinates of their
//! upper-left `(N−1)×(N−1)` block.
//!
//! The last row and column are determined by the unit margins, so the
//! equality constraints disappear and each positivity constraint
//! `a_ij > 0` becomes a linear form in the block entries.

use crate::error::{Error, Result};
use crate::geometry::{AffineEmbedding, DirectionFamily, Polytope};

/// The 2×2-minor move `F = δ_{i₁j₁} − δ_{i₁j₂} − δ_{i₂j₁} + δ_{i₂j₂}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffMove {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    /// Full `N×N` matrix, row-major.
    pub matrix: Vec<f64>,
    /// Restriction to the upper-left block.
    pub intrinsic: Vec<f64>,
}

impl BirkhoffMove {
    pub fn new(n: usize, rows: (usize, usize), cols: (usize, usize)) -> Self {
        let mut matrix = vec![0.0; n * n];
        matrix[rows.0 * n + cols.0] += 1.0;
        matrix[rows.0 * n + cols.1] -= 1.0;
        matrix[rows.1 * n + cols.0] -= 1.0;
        matrix[rows.1 * n + cols.1] += 1.0;
        let k = n - 1;
        let mut intrinsic = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                intrinsic[i * k + j] = matrix[i * n + j];
            }
        }
        BirkhoffMove {
            rows,
            cols,
            matrix,
            intrinsic,
        }
    }
}

/// One move per unordered row pair and unordered column pair; the other
/// orderings only flip the sign.
pub fn birkhoff_moves(n: usize) -> Vec<BirkhoffMove> {
    let mut out = Vec::with_capacity((n * (n - 1) / 2).pow(2));
    for i1 in 0..n {
        for i2 in i1 + 1..n {
            for j1 in 0..n {
                for j2 in j1 + 1..n {
                    out.push(BirkhoffMove::new(n, (i1, i2), (j1, j2)));
                }
            }
        }
    }
    out
}

/// The open Birkhoff polytope with its embedding into `N×N` matrices, and
/// the family of all minor moves.
pub fn birkhoff(n: usize) -> Result<(Polytope, DirectionFamily)> {
    if n < 2 {
        return Err(Error::BadSize(n));
    }
    let k = n - 1;
    let dim = k * k;
    let idx = |i: usize, j: usize| i * k + j;
    let mut matrix = vec![vec![0.0; dim]; n * n];
    let mut offset = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let row = &mut matrix[i * n + j];
            match (i < k, j < k) {
                (true, true) => row[idx(i, j)] = 1.0,
                // a_{iN} = 1 − Σ_j a_ij
                (true, false) => {
                    for c in 0..k {
                        row[idx(i, c)] = -1.0;
                    }
                    offset[i * n + j] = 1.0;
                }
                (false, true) => {
                    for r in 0..k {
                        row[idx(r, j)] = -1.0;
                    }
                    offset[i * n + j] = 1.0;
                }
                // a_NN = Σ_block − (N − 2)
                (false, false) => {
                    for v in row.iter_mut() {
                        *v = 1.0;
                    }
                    offset[i * n + j] = -(n as f64 - 2.0);
                }
            }
        }
    }
    let forms = matrix.clone();
    let offsets: Vec<f64> = offset.iter().map(|c| -c).collect();
    let polytope = Polytope::new(forms, offsets)?.with_embedding(AffineEmbedding { matrix, offset })?;
    let family = DirectionFamily::discrete(birkhoff_moves(n).into_iter().map(|m| m.intrinsic).collect())?;
    Ok((polytope, family))
}

/// Intrinsic coordinates of the matrix with all entries `1/N`.
pub fn birkhoff_center(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; (n - 1) * (n - 1)]
}
