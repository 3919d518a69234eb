//! Grid discretization of the Metropolis operator and of its limit
//! Laplacian, with the spectral checks built on them.

mod forms;
mod grid;
mod laplacian;
mod metropolis;
mod minorization;

pub use forms::{dirichlet_form_bh, resolvent_error, BhQuadrature, ResolventComparison};
pub use grid::{Grid, DEFAULT_CELL_CAP};
pub use laplacian::{assemble_laplacian, assemble_laplacian_with, snapped_offset, LaplacianMatrix};
pub use metropolis::{
    assemble_metropolis, assemble_metropolis_with, check_resolution, iterated_form, MetropolisMatrix,
};
pub use minorization::{minorization_check, minorization_constant, Minorization};

use crate::error::{Error, Result};
use crate::geometry::DirectionFamily;
use crate::linalg::{
    dense_eigenpairs, largest_eigenpairs, smallest_eigenpairs, CgOptions, CsrMatrix, LanczosOptions, ShiftInvert,
};

/// Relative tolerance for grouping eigenvalues into multiplicity clusters.
pub const CLUSTER_REL_TOL: f64 = 1e-3;
const CLUSTER_ABS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct EigenSolver {
    /// Matrices with at most this many rows are diagonalized densely.
    pub dense_limit: usize,
    pub lanczos: LanczosOptions,
}

impl Default for EigenSolver {
    fn default() -> Self {
        EigenSolver {
            dense_limit: 1024,
            lanczos: LanczosOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    pub center: f64,
    pub multiplicity: usize,
    /// Index of the first member in the sorted list.
    pub first: usize,
}

/// Groups a sorted list into runs whose neighbours differ by at most
/// `rel_tol · max(|a|, |b|)` (plus a small absolute floor).
pub fn cluster_values(sorted: &[f64], rel_tol: f64) -> (Vec<Cluster>, Vec<usize>) {
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut ids = Vec::with_capacity(sorted.len());
    for (i, &v) in sorted.iter().enumerate() {
        let joins = i > 0 && {
            let prev = sorted[i - 1];
            (v - prev).abs() <= rel_tol * v.abs().max(prev.abs()) + CLUSTER_ABS_TOL
        };
        if !joins {
            clusters.push(Cluster {
                center: 0.0,
                multiplicity: 0,
                first: i,
            });
        }
        let c = clusters.last_mut().unwrap();
        c.center += v;
        c.multiplicity += 1;
        ids.push(clusters.len() - 1);
    }
    for c in &mut clusters {
        c.center /= c.multiplicity as f64;
    }
    (clusters, ids)
}

/// Top of the spectrum of a discretized Metropolis operator.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub h: f64,
    pub dim: usize,
    /// Largest eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Smallest eigenvalue; `1 + bottom` is the empirical δ₀.
    pub bottom: f64,
    /// `1 − λ₂`.
    pub gap: f64,
    /// `(1 − λ_k)/h²`.
    pub rescaled: Vec<f64>,
    /// Clusters of the rescaled values.
    pub clusters: Vec<Cluster>,
    pub cluster_ids: Vec<usize>,
}

impl SpectralReport {
    pub fn delta0(&self) -> f64 {
        1.0 + self.bottom
    }

    /// Clusters of rescaled values strictly below `r`.
    pub fn clusters_below(&self, r: f64) -> Vec<Cluster> {
        self.clusters.iter().copied().filter(|c| c.center < r).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "eigenvalue", "rescaled", "cluster"])?;
        for (i, ((l, r), c)) in self
            .eigenvalues
            .iter()
            .zip(&self.rescaled)
            .zip(&self.cluster_ids)
            .enumerate()
        {
            w.write_record([i.to_string(), l.to_string(), r.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn report_from(h: f64, dim: usize, eigenvalues: Vec<f64>, bottom: f64) -> SpectralReport {
    let rescaled: Vec<f64> = eigenvalues.iter().map(|l| (1.0 - l) / (h * h)).collect();
    let (clusters, cluster_ids) = cluster_values(&rescaled, CLUSTER_REL_TOL);
    let gap = match eigenvalues.get(1) {
        Some(l2) => 1.0 - l2,
        None => f64::NAN,
    };
    SpectralReport {
        h,
        dim,
        eigenvalues,
        bottom,
        gap,
        rescaled,
        clusters,
        cluster_ids,
    }
}

/// Top-`k` and bottom eigenvalues of the symmetric operator matrix.
pub fn spectrum(m: &MetropolisMatrix, k: usize) -> Result<SpectralReport> {
    spectrum_with(m, k, EigenSolver::default())
}

pub fn spectrum_with(m: &MetropolisMatrix, k: usize, solver: EigenSolver) -> Result<SpectralReport> {
    let n = m.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("asked for {k} eigenvalues of a {n}-cell matrix")));
    }
    if n <= solver.dense_limit {
        let all = dense_eigenpairs(&m.matrix.to_dense(), n);
        let bottom = *all.values.last().unwrap();
        return Ok(report_from(m.h, n, all.values[..k].to_vec(), bottom));
    }
    let top = largest_eigenpairs(&m.matrix, k, solver.lanczos)?;
    let low = smallest_eigenpairs(
        &m.matrix,
        1,
        LanczosOptions {
            tol: 1e-6,
            ..solver.lanczos
        },
    )?;
    Ok(report_from(m.h, n, top.values, low.values[0]))
}

/// Number of eigenvalues in `[1 − h²λ, 1]`, with multiplicity.
///
/// Fails when every computed eigenvalue lies in the window but the matrix
/// has more, since the count would then be a lower bound only.
pub fn weyl_count(report: &SpectralReport, lambda: f64) -> Result<usize> {
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("λ must be nonnegative, got {lambda}")));
    }
    let cut = 1.0 - report.h * report.h * lambda - 1e-12;
    let count = report.eigenvalues.iter().filter(|&&l| l >= cut).count();
    if count == report.eigenvalues.len() && count < report.dim {
        return Err(Error::SpectrumTruncated { computed: count });
    }
    Ok(count)
}

/// Low end of the generalized problem `A v = ν s^d v`.
#[derive(Debug, Clone)]
pub struct NeumannSpectrum {
    /// Ascending.
    pub values: Vec<f64>,
    /// `(ν_j, m_j)` in order.
    pub clusters: Vec<Cluster>,
    pub cluster_ids: Vec<usize>,
}

impl NeumannSpectrum {
    /// `ν₁`, the first nonzero cluster.
    pub fn nu1(&self) -> Option<f64> {
        self.clusters.get(1).map(|c| c.center)
    }
}

/// The `k` smallest eigenvalues of the assembled Laplacian.
pub fn neumann_spectrum(l: &LaplacianMatrix, k: usize) -> Result<NeumannSpectrum> {
    neumann_spectrum_with(l, k, EigenSolver::default())
}

pub fn neumann_spectrum_with(l: &LaplacianMatrix, k: usize, solver: EigenSolver) -> Result<NeumannSpectrum> {
    let n = l.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("asked for {k} eigenvalues of a {n}-cell matrix")));
    }
    let a: CsrMatrix = l.normalized();
    let mut values = if n <= solver.dense_limit {
        let mut v = dense_eigenpairs(&(-a.to_dense()), k).values;
        v.iter_mut().for_each(|x| *x = -*x);
        v
    } else {
        let sigma = 1.0;
        let si = ShiftInvert::new(&a, sigma, CgOptions::default());
        let mu = largest_eigenpairs(&si, k, solver.lanczos)?;
        si.check()?;
        mu.values.iter().map(|m| 1.0 / m - sigma).collect()
    };
    // round-off can push the kernel slightly negative
    for v in &mut values {
        if v.abs() < 1e-9 {
            *v = v.abs();
        }
    }
    let (clusters, cluster_ids) = cluster_values(&values, CLUSTER_REL_TOL);
    Ok(NeumannSpectrum {
        values,
        clusters,
        cluster_ids,
    })
}

/// `[1/C, C]` bounds on `ν₁(E)/ν₁(E₀)`: `d` times the extreme eigenvalues
/// of the weighted second moment `Σ w_j e_j e_jᵀ`.
pub fn form_equivalence_bounds(family: &DirectionFamily) -> Result<(f64, f64)> {
    let q = family.weighted()?.second_moment();
    let d = q.nrows() as f64;
    let eig = nalgebra::SymmetricEigen::new(q);
    let lo = eig.eigenvalues.min() * d;
    let hi = eig.eigenvalues.max() * d;
    Ok((lo, hi))
}
