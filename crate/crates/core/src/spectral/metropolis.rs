use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::geometry::{DirectionFamily, Polytope};
use crate::linalg::CsrMatrix;
use crate::spectral::Grid;

/// The Metropolis operator restricted to grid cells.
///
/// Symmetric and row-stochastic; the diagonal carries both the rejection
/// mass and the proposals that land back in the same cell.
#[derive(Debug, Clone)]
pub struct MetropolisMatrix {
    pub matrix: CsrMatrix,
    pub h: f64,
    pub cell_size: f64,
    /// Holding probability at each cell center, from exact chords.
    pub rejection: Vec<f64>,
    /// Largest `|P_ij − P_ji|` before symmetrization.
    pub raw_asymmetry: f64,
}

impl MetropolisMatrix {
    pub fn len(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const NEAREST_SHELLS: usize = 8;

pub fn check_resolution(cell_size: f64, h: f64) -> Result<()> {
    let limit = h / 4.0;
    if cell_size > limit * (1.0 + 1e-12) {
        return Err(Error::ResolutionTooCoarse { cell_size, limit });
    }
    Ok(())
}

/// One unsymmetrized row: `(target cell, mass)` sorted by cell, plus the
/// chord rejection at the center.
fn assemble_row(p: &Polytope, dirs: &[(Vec<f64>, f64)], h: f64, grid: &Grid, cell: usize) -> (Vec<(usize, f64)>, f64) {
    let x = grid.center(cell);
    let d = grid.dim();
    let s = grid.cell_size();
    let mut entries: Vec<(usize, f64)> = Vec::new();
    let mut rejection = 0.0;
    let mut breaks: Vec<f64> = Vec::new();
    let mut y = vec![0.0; d];
    for (e, w) in dirs {
        let chord = p.chord_interval(x, e, h);
        rejection += w * (1.0 - chord.acceptance());
        if chord.is_empty() {
            continue;
        }
        // split the chord where the segment crosses a lattice plane
        breaks.clear();
        breaks.push(chord.lo);
        breaks.push(chord.hi);
        for k in 0..d {
            let rate = h * e[k];
            if rate.abs() < 1e-15 {
                continue;
            }
            let a = (x[k] + rate * chord.lo - grid.origin()[k]) / s;
            let b = (x[k] + rate * chord.hi - grid.origin()[k]) / s;
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            let mut m = a.ceil();
            while m <= b {
                let t = (grid.origin()[k] + m * s - x[k]) / rate;
                if t > chord.lo && t < chord.hi {
                    breaks.push(t);
                }
                m += 1.0;
            }
        }
        breaks.sort_by(f64::total_cmp);
        for pair in breaks.windows(2) {
            let len = pair[1] - pair[0];
            if len <= 0.0 {
                continue;
            }
            let mid = 0.5 * (pair[0] + pair[1]);
            for k in 0..d {
                y[k] = x[k] + h * mid * e[k];
            }
            let mass = w * len / 2.0;
            // a cube whose center is outside goes to the nearest kept cell
            let j = grid.nearest_cell(&y, NEAREST_SHELLS).unwrap_or(cell);
            entries.push((j, mass));
        }
    }
    let total_moved: f64 = entries.iter().map(|e| e.1).sum();
    entries.push((cell, (1.0 - total_moved).max(0.0)));
    entries.sort_unstable_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (j, v) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => merged.push((j, v)),
        }
    }
    (merged, rejection)
}

/// Discretizes the Metropolis operator at scale `h` on `grid`.
pub fn assemble_metropolis(p: &Polytope, family: &DirectionFamily, h: f64, grid: &Grid) -> Result<MetropolisMatrix> {
    assemble_metropolis_with(p, family, h, grid, Execution::default())
}

pub fn assemble_metropolis_with(
    p: &Polytope,
    family: &DirectionFamily,
    h: f64,
    grid: &Grid,
    exec: Execution,
) -> Result<MetropolisMatrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }
    if family.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: family.dim(),
        });
    }
    check_resolution(grid.cell_size(), h)?;
    let weighted = family.weighted()?;
    let dirs: Vec<(Vec<f64>, f64)> = weighted.iter().map(|(e, w)| (e.to_vec(), w)).collect();
    let n = grid.len();
    let rows = map_range(exec, n, |i| assemble_row(p, &dirs, h, grid, i));
    let rejection: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let raw = CsrMatrix::from_sorted_rows(n, rows.into_iter().map(|r| r.0).collect());
    let raw_t = raw.transpose();

    let sym_rows: Vec<Vec<(usize, f64)>> = map_range(exec, n, |i| {
        let mut out: Vec<(usize, f64)> = Vec::new();
        let (mut a, mut b) = (raw.row(i).peekable(), raw_t.row(i).peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(&(ja, va)), Some(&(jb, vb))) => {
                    if ja == jb {
                        a.next();
                        b.next();
                        (ja, 0.5 * (va + vb))
                    } else if ja < jb {
                        a.next();
                        (ja, 0.5 * va)
                    } else {
                        b.next();
                        (jb, 0.5 * vb)
                    }
                }
                (Some(&(ja, va)), None) => {
                    a.next();
                    (ja, 0.5 * va)
                }
                (None, Some(&(jb, vb))) => {
                    b.next();
                    (jb, 0.5 * vb)
                }
                (None, None) => break,
            };
            out.push(next);
        }
        let off: f64 = out.iter().filter(|e| e.0 != i).map(|e| e.1).sum();
        for e in out.iter_mut() {
            if e.0 == i {
                e.1 = 1.0 - off;
            }
        }
        out
    });
    let raw_asymmetry = (0..n)
        .flat_map(|i| raw.row(i).map(move |(j, v)| (i, j, v)))
        .map(|(i, j, v)| (v - raw_t.get(i, j)).abs())
        .fold(0.0, f64::max);
    Ok(MetropolisMatrix {
        matrix: CsrMatrix::from_sorted_rows(n, sym_rows),
        h,
        cell_size: grid.cell_size(),
        rejection,
        raw_asymmetry,
    })
}

/// `⟨(I − Mᵏ) u, u⟩` with cell-volume weights.
pub fn iterated_form(m: &MetropolisMatrix, u: &[f64], k: usize, cell_volume: f64) -> f64 {
    let mut v = u.to_vec();
    let mut w = vec![0.0; u.len()];
    for _ in 0..k {
        m.matrix.mul_vec(&v, &mut w);
        std::mem::swap(&mut v, &mut w);
    }
    cell_volume * u.iter().zip(&v).map(|(a, b)| a * (a - b)).sum::<f64>()
}
