use crate::error::{Error, Result};
use crate::geometry::Polytope;

pub const DEFAULT_CELL_CAP: usize = 200_000;

/// Regular lattice of cubes over the bounding box; a cell is kept when its
/// center lies in the open polytope.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    cell_size: f64,
    origin: Vec<f64>,
    shape: Vec<usize>,
    centers: Vec<f64>,
    /// Lattice index of each kept cell.
    lattice: Vec<usize>,
    /// Kept-cell index per lattice site, `u32::MAX` when dropped.
    lookup: Vec<u32>,
}

const DROPPED: u32 = u32::MAX;

impl Grid {
    pub fn new(p: &Polytope, cell_size: f64) -> Result<Self> {
        Self::with_cap(p, cell_size, DEFAULT_CELL_CAP)
    }

    pub fn with_cap(p: &Polytope, cell_size: f64, cap: usize) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("cell size must be positive, got {cell_size}")));
        }
        let bbox = p.bounding_box();
        let dim = p.dim();
        let origin = bbox.lower.to_vec();
        let shape: Vec<usize> = (0..dim)
            .map(|k| (((bbox.upper[k] - bbox.lower[k]) / cell_size) - 1e-9).ceil().max(1.0) as usize)
            .collect();
        let sites = shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        // the kept cells are a fraction of the lattice; refuse hopeless lattices early
        let sites = match sites {
            Some(n) if n <= cap.saturating_mul(64).max(1 << 20) => n,
            other => {
                return Err(Error::TooManyCells {
                    count: other.unwrap_or(usize::MAX),
                    cap,
                })
            }
        };
        let mut grid = Grid {
            dim,
            cell_size,
            origin,
            shape,
            centers: Vec::new(),
            lattice: Vec::new(),
            lookup: vec![DROPPED; sites],
        };
        let mut c = vec![0.0; dim];
        for site in 0..sites {
            grid.site_center(site, &mut c);
            if p.contains(&c) {
                if grid.lattice.len() >= cap {
                    return Err(Error::TooManyCells {
                        count: grid.lattice.len() + 1,
                        cap,
                    });
                }
                grid.lookup[site] = grid.lattice.len() as u32;
                grid.lattice.push(site);
                grid.centers.extend_from_slice(&c);
            }
        }
        if grid.lattice.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no cell center of size {cell_size} lies inside the polytope"
            )));
        }
        Ok(grid)
    }

    fn site_center(&self, mut site: usize, out: &mut [f64]) {
        for k in (0..self.dim).rev() {
            let i = site % self.shape[k];
            site /= self.shape[k];
            out[k] = self.origin[k] + (i as f64 + 0.5) * self.cell_size;
        }
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.powi(self.dim as i32)
    }

    /// Total volume of the kept cells.
    pub fn volume(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn center(&self, cell: usize) -> &[f64] {
        &self.centers[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn centers(&self) -> impl Iterator<Item = &[f64]> {
        self.centers.chunks_exact(self.dim)
    }

    /// Integer lattice coordinates of a kept cell.
    pub fn coords(&self, cell: usize) -> Vec<usize> {
        let mut site = self.lattice[cell];
        let mut out = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            out[k] = site % self.shape[k];
            site /= self.shape[k];
        }
        out
    }

    fn site_of_coords(&self, coords: &[i64]) -> Option<usize> {
        let mut site = 0usize;
        for k in 0..self.dim {
            let i = coords[k];
            if i < 0 || i as usize >= self.shape[k] {
                return None;
            }
            site = site * self.shape[k] + i as usize;
        }
        Some(site)
    }

    fn kept(&self, site: usize) -> Option<usize> {
        match self.lookup[site] {
            DROPPED => None,
            c => Some(c as usize),
        }
    }

    /// Kept cell at the given lattice coordinates.
    pub fn cell_at(&self, coords: &[i64]) -> Option<usize> {
        self.site_of_coords(coords).and_then(|s| self.kept(s))
    }

    /// Kept cell whose cube contains `x`.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut site = 0usize;
        for k in 0..self.dim {
            let f = ((x[k] - self.origin[k]) / self.cell_size).floor();
            if !(f >= 0.0 && (f as usize) < self.shape[k]) {
                return None;
            }
            site = site * self.shape[k] + f as usize;
        }
        self.kept(site)
    }

    /// Kept cell with the center nearest to `x`, searched over growing
    /// lattice shells around the cube containing `x` (at most `max_shell`).
    pub fn nearest_cell(&self, x: &[f64], max_shell: usize) -> Option<usize> {
        let base: Vec<i64> = (0..self.dim)
            .map(|k| ((x[k] - self.origin[k]) / self.cell_size).floor() as i64)
            .collect();
        if let Some(c) = self.cell_at(&base) {
            return Some(c);
        }
        let mut best: Option<(f64, usize)> = None;
        let mut cur = vec![0i64; self.dim];
        for r in 1..=max_shell as i64 {
            // visit the shell at Chebyshev radius r
            cur.iter_mut().for_each(|o| *o = -r);
            'shell: loop {
                if cur.iter().any(|o| o.abs() == r) {
                    let site: Vec<i64> = base.iter().zip(&cur).map(|(b, o)| b + o).collect();
                    if let Some(c) = self.cell_at(&site) {
                        let d2: f64 = self.center(c).iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
                        if best.map_or(true, |(bd, bc)| d2 < bd || (d2 == bd && c < bc)) {
                            best = Some((d2, c));
                        }
                    }
                }
                let mut k = 0;
                loop {
                    if k == self.dim {
                        break 'shell;
                    }
                    cur[k] += 1;
                    if cur[k] <= r {
                        break;
                    }
                    cur[k] = -r;
                    k += 1;
                }
            }
            // anything in a later shell is at least r·s away
            if let Some((d2, c)) = best {
                if d2.sqrt() <= r as f64 * self.cell_size {
                    return Some(c);
                }
            }
        }
        best.map(|b| b.1)
    }

    /// Kept cell displaced from `cell` by an integer lattice offset.
    pub fn neighbor(&self, cell: usize, offset: &[i64]) -> Option<usize> {
        let c: Vec<i64> = self
            .coords(cell)
            .iter()
            .zip(offset)
            .map(|(&a, &o)| a as i64 + o)
            .collect();
        self.cell_at(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{triangle, unit_square};

    #[test]
    fn square_quarter_cells() {
        let g = Grid::new(&unit_square(), 0.25).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.center(0), &[0.125, 0.125]);
        assert_eq!(g.center(15), &[0.875, 0.875]);
        assert_eq!(g.cell_of(&[0.3, 0.9]), Some(7));
        assert_eq!(g.cell_of(&[1.2, 0.5]), None);
        assert_eq!(g.neighbor(5, &[1, -1]), Some(8));
        assert!((g.volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_matches_membership_loop() {
        let p = triangle();
        let g = Grid::new(&p, 0.5).unwrap();
        let r3 = 3f64.sqrt();
        let mut count = 0;
        for i in 0..4 {
            for j in 0..4 {
                let (x, y) = (-0.75 + 0.5 * i as f64, 0.25 + 0.5 * j as f64);
                if y > 0.0 && r3 * x - y > -r3 && -r3 * x - y > -r3 {
                    count += 1;
                }
            }
        }
        assert_eq!(g.len(), count);
        assert!(g.centers().all(|c| p.contains(c)));
    }

    #[test]
    fn cap_is_enforced() {
        let r = Grid::with_cap(&unit_square(), 0.01, 5000);
        assert!(matches!(r, Err(Error::TooManyCells { cap: 5000, .. })));
    }
}
