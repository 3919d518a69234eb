use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::spectral::{Grid, MetropolisMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minorization {
    /// Smallest number of steps with a uniform local lower bound.
    pub n: usize,
    /// `h^d · min [Mᴺ]_{xy} / s^d` over pairs with `|x − y| < c₂ h`.
    pub c1: f64,
}

/// Lattice offsets strictly within distance `radius`.
fn offsets_within(dim: usize, cell_size: f64, radius: f64) -> Vec<Vec<i64>> {
    let r = (radius / cell_size).ceil() as i64;
    let mut out = Vec::new();
    let mut cur = vec![-r; dim];
    loop {
        let d2: f64 = cur.iter().map(|&o| (o as f64 * cell_size).powi(2)).sum();
        if d2.sqrt() < radius {
            out.push(cur.clone());
        }
        let mut k = 0;
        loop {
            if k == dim {
                return out;
            }
            cur[k] += 1;
            if cur[k] <= r {
                break;
            }
            cur[k] = -r;
            k += 1;
        }
    }
}

/// For each `N = 1..=n_max`, the minimum of `[Mᴺ]_{xy}` over close pairs.
fn local_minima(m: &MetropolisMatrix, grid: &Grid, c2: f64, n_max: usize) -> Result<Vec<f64>> {
    let radius = c2 * m.h;
    if radius <= grid.cell_size() {
        return Err(Error::InvalidArgument(format!(
            "c₂h = {radius} does not reach past the cell size {}",
            grid.cell_size()
        )));
    }
    let offsets = offsets_within(grid.dim(), grid.cell_size(), radius);
    let n = grid.len();
    let per_cell = map_range(Execution::default(), n, |x| {
        let near: Vec<usize> = offsets.iter().filter_map(|o| grid.neighbor(x, o)).collect();
        let mut row = vec![0.0; n];
        let mut next = vec![0.0; n];
        row[x] = 1.0;
        let mut mins = Vec::with_capacity(n_max);
        for _ in 0..n_max {
            // M is symmetric, so the row of Mᴺ is Mᴺ e_x
            m.matrix.mul_vec(&row, &mut next);
            std::mem::swap(&mut row, &mut next);
            mins.push(near.iter().map(|&y| row[y]).fold(f64::INFINITY, f64::min));
        }
        mins
    });
    Ok((0..n_max)
        .map(|k| per_cell.iter().map(|m| m[k]).fold(f64::INFINITY, f64::min))
        .collect())
}

fn scale(m: &MetropolisMatrix, grid: &Grid) -> f64 {
    (m.h / grid.cell_size()).powi(grid.dim() as i32)
}

/// Searches `N = 1..=n_max` for the first power of the matrix that is
/// bounded below on every pair of cells closer than `c₂ h`.
pub fn minorization_check(m: &MetropolisMatrix, grid: &Grid, c2: f64, n_max: usize) -> Result<Minorization> {
    let mins = local_minima(m, grid, c2, n_max)?;
    match mins.iter().position(|&v| v > 0.0) {
        Some(k) => Ok(Minorization {
            n: k + 1,
            c1: mins[k] * scale(m, grid),
        }),
        None => Err(Error::MinorizationNotFound { n_max }),
    }
}

/// `c₁` at a fixed `N`; zero when no bound holds.
pub fn minorization_constant(m: &MetropolisMatrix, grid: &Grid, c2: f64, n: usize) -> Result<f64> {
    let mins = local_minima(m, grid, c2, n)?;
    Ok(mins[n - 1] * scale(m, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_in_a_disc() {
        let o = offsets_within(2, 1.0, 1.5);
        assert_eq!(o.len(), 9);
        let o = offsets_within(2, 1.0, 1.0);
        assert_eq!(o.len(), 1);
    }
}
