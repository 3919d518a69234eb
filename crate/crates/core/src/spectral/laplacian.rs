use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::geometry::{DirectionFamily, Polytope};
use crate::linalg::CsrMatrix;
use crate::spectral::Grid;
use crate::vecops::norm;

/// Stiffness matrix of the limit Dirichlet form over grid cells.
///
/// The mass matrix is `cell_volume · I`, so generalized eigenvalues are the
/// eigenvalues of `stiffness / cell_volume`.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    pub stiffness: CsrMatrix,
    pub cell_volume: f64,
}

impl LaplacianMatrix {
    pub fn len(&self) -> usize {
        self.stiffness.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `A / s^d`, the operator whose spectrum is the generalized one.
    pub fn normalized(&self) -> CsrMatrix {
        let n = self.len();
        let rows = (0..n)
            .map(|i| self.stiffness.row(i).map(|(j, v)| (j, v / self.cell_volume)).collect())
            .collect();
        CsrMatrix::from_sorted_rows(n, rows)
    }

    /// `E(u) = uᵀ A u`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let mut au = vec![0.0; u.len()];
        self.stiffness.mul_vec(u, &mut au);
        u.iter().zip(&au).map(|(a, b)| a * b).sum()
    }
}

/// Lattice step nearest to `s · e/|e|`.
pub fn snapped_offset(e: &[f64]) -> Vec<i64> {
    let n = norm(e);
    e.iter().map(|x| (x / n).round() as i64).collect()
}

/// Assembles `E(u) = (1/6) Σ_j w_j ∫ |∂_{e_j} u|²` with one forward
/// difference per cell and direction, along the lattice step nearest to
/// `e_j`. Differences that would leave the kept cells are dropped, which is
/// the variational Neumann condition.
pub fn assemble_laplacian(p: &Polytope, family: &DirectionFamily, grid: &Grid) -> Result<LaplacianMatrix> {
    assemble_laplacian_with(p, family, grid, Execution::default())
}

pub fn assemble_laplacian_with(
    p: &Polytope,
    family: &DirectionFamily,
    grid: &Grid,
    exec: Execution,
) -> Result<LaplacianMatrix> {
    if family.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: family.dim(),
        });
    }
    let s = grid.cell_size();
    let vol = grid.cell_volume();
    // merge directions that snap to the same lattice step (up to sign)
    let mut stencil: Vec<(Vec<i64>, f64)> = Vec::new();
    for (e, w) in family.weighted()?.iter() {
        let mut off = snapped_offset(e);
        if let Some(first) = off.iter().find(|&&o| o != 0) {
            if *first < 0 {
                off.iter_mut().for_each(|o| *o = -*o);
            }
        }
        let step2 = off.iter().map(|&o| (o * o) as f64).sum::<f64>() * s * s;
        let k = w * norm(e).powi(2) * vol / (6.0 * step2);
        match stencil.iter_mut().find(|(o, _)| *o == off) {
            Some(entry) => entry.1 += k,
            None => stencil.push((off, k)),
        }
    }
    let n = grid.len();
    let neg: Vec<Vec<i64>> = stencil.iter().map(|(o, _)| o.iter().map(|x| -x).collect()).collect();
    let rows = map_range(exec, n, |i| {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut diag = 0.0;
        for ((off, k), back) in stencil.iter().zip(&neg) {
            for o in [off, back] {
                if let Some(j) = grid.neighbor(i, o) {
                    row.push((j, -k));
                    diag += k;
                }
            }
        }
        row.push((i, diag));
        row.sort_unstable_by_key(|e| e.0);
        row
    });
    if let Some(cell) = rows.iter().position(|r| r.len() == 1) {
        if n > 1 {
            return Err(Error::DisconnectedStencil { cell });
        }
    }
    Ok(LaplacianMatrix {
        stiffness: CsrMatrix::from_sorted_rows(n, rows),
        cell_volume: vol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{canonical_family, unit_square};

    #[test]
    fn constants_are_in_the_kernel() {
        let p = unit_square();
        let g = Grid::new(&p, 0.1).unwrap();
        let l = assemble_laplacian(&p, &canonical_family(2), &g).unwrap();
        let mut y = vec![0.0; g.len()];
        l.stiffness.mul_vec(&vec![1.0; g.len()], &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-14));
        assert!(l.stiffness.max_asymmetry() == 0.0);
    }

    #[test]
    fn snapping() {
        assert_eq!(snapped_offset(&[0.9, 0.1]), vec![1, 0]);
        assert_eq!(snapped_offset(&[1.0, 1.0]), vec![1, 1]);
        assert_eq!(snapped_offset(&[-0.2, 3.0]), vec![0, 1]);
    }

    #[test]
    fn linear_energy() {
        // E(x₁) = (1/12) ∫ 1 over the cells that have a right neighbour
        let p = unit_square();
        let g = Grid::new(&p, 0.1).unwrap();
        let l = assemble_laplacian(&p, &canonical_family(2), &g).unwrap();
        let u: Vec<f64> = g.centers().map(|c| c[0]).collect();
        assert!((l.energy(&u) - 0.9 / 12.0).abs() < 1e-12);
    }
}
