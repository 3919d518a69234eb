use serde::Serialize;

use crate::chain::replica_states;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{DirectionFamily, Polytope};
use crate::spectral::{Grid, MetropolisMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TvMode {
    Exact,
    Empirical,
}

impl TvMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TvMode::Exact => "exact",
            TvMode::Empirical => "empirical",
        }
    }
}

/// `log TV_n ≈ log C − r n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub constant: f64,
    pub window: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct TvCurve {
    pub mode: TvMode,
    /// `(n, TV_n)` with `n` increasing.
    pub points: Vec<(usize, f64)>,
    pub start: Vec<f64>,
    pub fit: Option<RateFit>,
    /// Multinomial noise scale `2√(bins/replicas)` for empirical curves.
    pub noise_scale: Option<f64>,
}

impl TvCurve {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn at(&self, n: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == n).map(|p| p.1)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "tv", "mode"])?;
        for (n, tv) in &self.points {
            w.write_record([n.to_string(), tv.to_string(), self.mode.as_str().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Histogram bins: the kept cells of a coarse grid. Points whose cube is
/// dropped go to the nearest kept bin.
#[derive(Debug, Clone)]
pub struct Bins {
    pub grid: Grid,
}

impl Bins {
    pub fn new(grid: Grid) -> Self {
        Bins { grid }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn bin_of(&self, x: &[f64]) -> Option<usize> {
        self.grid.nearest_cell(x, 8)
    }

    /// Uniform bin probabilities from cell-center membership.
    pub fn target(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }

    /// Bin of each cell of a finer grid, by its center.
    pub fn assign(&self, fine: &Grid) -> Result<Vec<usize>> {
        fine.centers()
            .map(|c| {
                self.bin_of(c)
                    .ok_or_else(|| Error::InvalidArgument("a fine cell has no bin".into()))
            })
            .collect()
    }
}

fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `TV_n = ½ Σ_cells |[Mⁿ]_{start,·} − 1/#cells|` for `n = 0..=n_max`.
pub fn tv_exact(m: &MetropolisMatrix, start_cell: usize, n_max: usize) -> Result<TvCurve> {
    let n = m.len();
    if start_cell >= n {
        return Err(Error::InvalidArgument(format!("start cell {start_cell} out of {n}")));
    }
    let uniform = vec![1.0 / n as f64; n];
    let mut row = vec![0.0; n];
    row[start_cell] = 1.0;
    let mut next = vec![0.0; n];
    let mut points = Vec::with_capacity(n_max + 1);
    for step in 0..=n_max {
        points.push((step, half_l1(&row, &uniform)));
        if step < n_max {
            // symmetric, so the row of Mⁿ⁺¹ is M applied to the row of Mⁿ
            m.matrix.mul_vec(&row, &mut next);
            std::mem::swap(&mut row, &mut next);
        }
    }
    Ok(TvCurve {
        mode: TvMode::Exact,
        points,
        start: vec![start_cell as f64],
        fit: None,
        noise_scale: None,
    })
}

/// Exact curve aggregated onto histogram bins, comparable with
/// [`tv_empirical`] on the same bins.
pub fn tv_exact_binned(
    m: &MetropolisMatrix,
    fine: &Grid,
    bins: &Bins,
    start_cell: usize,
    n_list: &[usize],
) -> Result<TvCurve> {
    let n = m.len();
    if start_cell >= n || fine.len() != n {
        return Err(Error::InvalidArgument("start cell or grid does not match the matrix".into()));
    }
    let assign = bins.assign(fine)?;
    // bin targets from the fine cells they hold, so both sides see one Ω
    let mut target = vec![0.0; bins.len()];
    for &b in &assign {
        target[b] += 1.0 / n as f64;
    }
    let mut row = vec![0.0; n];
    row[start_cell] = 1.0;
    let mut next = vec![0.0; n];
    let mut done = 0usize;
    let mut points = Vec::with_capacity(n_list.len());
    for &target_n in n_list {
        if target_n < done {
            return Err(Error::InvalidArgument("step list must be sorted".into()));
        }
        while done < target_n {
            m.matrix.mul_vec(&row, &mut next);
            std::mem::swap(&mut row, &mut next);
            done += 1;
        }
        let mut binned = vec![0.0; bins.len()];
        for (c, &b) in assign.iter().enumerate() {
            binned[b] += row[c];
        }
        points.push((target_n, half_l1(&binned, &target)));
    }
    Ok(TvCurve {
        mode: TvMode::Exact,
        points,
        start: fine.center(start_cell).to_vec(),
        fit: None,
        noise_scale: None,
    })
}

/// Histogram estimate of the distance to uniform after each `n` in
/// `n_list`, from `replicas` independent chains started at `x0`.
///
/// The supremum runs over unions of bins only, so the estimate is biased
/// low against the true distance (and biased up by sampling noise near 0).
#[allow(clippy::too_many_arguments)]
pub fn tv_empirical(
    p: &Polytope,
    family: &DirectionFamily,
    h: f64,
    x0: &[f64],
    n_list: &[usize],
    replicas: usize,
    bins: &Bins,
    seed: u64,
    exec: Execution,
) -> Result<TvCurve> {
    if replicas < 20 * bins.len() {
        return Err(Error::TooFewReplicas {
            replicas,
            bins: bins.len(),
        });
    }
    let checkpoints: Vec<u64> = n_list.iter().map(|&n| n as u64).collect();
    let states = replica_states(p, family, h, x0, &checkpoints, replicas, seed, exec)?;
    let target = bins.target();
    let mut points = Vec::with_capacity(n_list.len());
    for (&n, at_n) in n_list.iter().zip(&states) {
        let mut hist = vec![0.0; bins.len()];
        for x in at_n {
            let b = bins
                .bin_of(x)
                .ok_or_else(|| Error::InvalidArgument("a chain state has no bin".into()))?;
            hist[b] += 1.0 / replicas as f64;
        }
        points.push((n, half_l1(&hist, &target)));
    }
    Ok(TvCurve {
        mode: TvMode::Empirical,
        points,
        start: x0.to_vec(),
        fit: None,
        noise_scale: Some(2.0 * (bins.len() as f64 / replicas as f64).sqrt()),
    })
}

/// Default start of the fit window: past `max(10, 1/g)` steps.
pub fn transient_steps(gap: f64) -> usize {
    let inv = if gap > 0.0 { (1.0 / gap).ceil() } else { f64::INFINITY };
    inv.max(10.0).min(usize::MAX as f64) as usize
}

/// Least squares fit of `log TV_n = log C − r n` over `window` (inclusive).
pub fn fit_rate(curve: &TvCurve, window: (usize, usize)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|(n, _)| *n >= window.0 && *n <= window.1)
        .map(|&(n, tv)| (n as f64, tv))
        .collect();
    if pts.len() < 2 {
        return Err(Error::WindowDegenerate(format!(
            "{} points in [{}, {}]",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if let Some((n, tv)) = pts.iter().find(|p| !(p.1 > 1e-12)) {
        return Err(Error::WindowDegenerate(format!("TV_{n} = {tv} is not above 1e-12")));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        rate: -slope,
        constant: (my - slope * mx).exp(),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{canonical_family, unit_square};
    use crate::spectral::assemble_metropolis;

    #[test]
    fn synthetic_rate() {
        let curve = TvCurve {
            mode: TvMode::Exact,
            points: (0..100).map(|n| (n, 0.8 * (-0.05 * n as f64).exp())).collect(),
            start: vec![],
            fit: None,
            noise_scale: None,
        };
        let f = fit_rate(&curve, (0, 99)).unwrap();
        assert!((f.rate - 0.05).abs() < 1e-9);
        assert!((f.constant - 0.8).abs() < 1e-9);
        assert!(matches!(fit_rate(&curve, (5, 5)), Err(Error::WindowDegenerate(_))));
    }

    #[test]
    fn exact_curve_basics() {
        let p = unit_square();
        let g = Grid::new(&p, 0.05).unwrap();
        let m = assemble_metropolis(&p, &canonical_family(2), 0.2, &g).unwrap();
        let c = tv_exact(&m, 0, 1500).unwrap();
        let v = c.values();
        assert!((v[0] - (1.0 - 1.0 / 400.0)).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(*v.last().unwrap() < 1e-10);
    }

    #[test]
    fn too_few_replicas() {
        let p = unit_square();
        let bins = Bins::new(Grid::new(&p, 0.25).unwrap());
        let r = tv_empirical(&p, &canonical_family(2), 0.2, &[0.5, 0.5], &[0], 100, &bins, 1, Execution::Sequential);
        assert!(matches!(r, Err(Error::TooFewReplicas { replicas: 100, bins: 16 })));
    }

    #[test]
    fn empirical_start_is_a_point_mass() {
        let p = unit_square();
        let bins = Bins::new(Grid::new(&p, 0.25).unwrap());
        let c = tv_empirical(&p, &canonical_family(2), 0.2, &[0.4, 0.6], &[0], 400, &bins, 1, Execution::default())
            .unwrap();
        assert!((c.points[0].1 - (1.0 - 1.0 / 16.0)).abs() < 1e-12);
    }
}
