use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::geometry::{DirectionFamily, Polytope};
use crate::linalg::{conjugate_gradient, Affine, CgOptions};
use crate::quadrature::gauss_legendre;
use crate::spectral::{assemble_laplacian, assemble_metropolis, Grid};

/// Tensor rule for the bilinear form: midpoint over cells of size
/// `cell_size`, Gauss–Legendre with `nodes` points along each chord.
#[derive(Debug, Clone, Copy)]
pub struct BhQuadrature {
    pub cell_size: f64,
    pub nodes: usize,
}

/// `B_h(u, v) = Σ_j w_j (1/4h) ∫∫_{x, x+te_j ∈ Ω, |t|<h} (u(x) − u(x+te_j))(v(x) − v(x+te_j)) dx dt`.
pub fn dirichlet_form_bh(
    p: &Polytope,
    family: &DirectionFamily,
    h: f64,
    u: &(dyn Fn(&[f64]) -> f64 + Sync),
    v: &(dyn Fn(&[f64]) -> f64 + Sync),
    quad: BhQuadrature,
) -> Result<f64> {
    let grid = Grid::new(p, quad.cell_size)?;
    let dirs = family.weighted()?;
    let rule = gauss_legendre(quad.nodes.max(1));
    let d = p.dim();
    let per_cell = map_range(Execution::default(), grid.len(), |i| {
        let x = grid.center(i);
        let (ux, vx) = (u(x), v(x));
        let mut y = vec![0.0; d];
        let mut acc = 0.0;
        for (e, w) in dirs.iter() {
            let c = p.chord_interval(x, e, h);
            if c.is_empty() {
                continue;
            }
            // the integrand is smooth in t, but split at 0 where it vanishes
            let mut part = 0.0;
            for (a, b) in [(c.lo, c.hi.min(0.0)), (c.lo.max(0.0), c.hi)] {
                if b <= a {
                    continue;
                }
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                for (node, weight) in rule.0.iter().zip(&rule.1) {
                    let tau = mid + half * node;
                    for k in 0..d {
                        y[k] = x[k] + h * tau * e[k];
                    }
                    part += half * weight * (ux - u(&y)) * (vx - v(&y));
                }
            }
            // dt = h dτ cancels the 1/h
            acc += w * part / 4.0;
        }
        acc
    });
    Ok(grid.cell_volume() * per_cell.iter().sum::<f64>())
}

#[derive(Debug, Clone)]
pub struct ResolventComparison {
    /// `‖f_h − f‖` with cell-volume weights.
    pub error: f64,
    /// Solution of `((I − M_h)/h² − z) f_h = g`.
    pub discrete: Vec<f64>,
    /// Solution of `(A/s^d − z) f = g`.
    pub limit: Vec<f64>,
}

/// Compares the two resolvents applied to `g` on the same grid.
pub fn resolvent_error(
    p: &Polytope,
    family: &DirectionFamily,
    z: f64,
    g: &dyn Fn(&[f64]) -> f64,
    h: f64,
    grid: &Grid,
) -> Result<ResolventComparison> {
    if !(z < 0.0) {
        return Err(Error::InvalidArgument(format!("z must be negative real, got {z}")));
    }
    let rhs: Vec<f64> = grid.centers().map(g).collect();
    let opts = CgOptions {
        rel_tol: 1e-12,
        max_iter: 50_000,
    };

    let m = assemble_metropolis(p, family, h, grid)?;
    let inv_h2 = 1.0 / (h * h);
    let op_h = Affine {
        op: &m.matrix,
        alpha: -inv_h2,
        beta: inv_h2 - z,
    };
    let diag_h: Vec<f64> = m.matrix.diagonal().iter().map(|mii| (1.0 - mii) * inv_h2 - z).collect();
    let discrete = conjugate_gradient(&op_h, Some(&diag_h), &rhs, opts)?;

    let l = assemble_laplacian(p, family, grid)?.normalized();
    let op_l = Affine {
        op: &l,
        alpha: 1.0,
        beta: -z,
    };
    let diag_l: Vec<f64> = l.diagonal().iter().map(|a| a - z).collect();
    let limit = conjugate_gradient(&op_l, Some(&diag_l), &rhs, opts)?;

    let vol = grid.cell_volume();
    let error = (vol * discrete.iter().zip(&limit).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt();
    Ok(ResolventComparison {
        error,
        discrete,
        limit,
    })
}
