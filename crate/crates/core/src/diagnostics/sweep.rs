use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{DirectionFamily, Polytope};
use crate::spectral::{assemble_metropolis, spectrum, Grid};

/// Grid spacing as a fraction of `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionRule {
    pub divisor: f64,
}

impl Default for ResolutionRule {
    fn default() -> Self {
        ResolutionRule { divisor: 8.0 }
    }
}

impl ResolutionRule {
    pub fn cell_size(&self, h: f64) -> f64 {
        h / self.divisor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub h: f64,
    pub cells: usize,
    pub gap: f64,
    pub gap_over_h2: f64,
    pub nu1_reference: Option<f64>,
}

impl SweepRow {
    /// `|g/h² − ν₁| / ν₁` when a reference is known.
    pub fn relative_error(&self) -> Option<f64> {
        self.nu1_reference.map(|nu| (self.gap_over_h2 - nu).abs() / nu)
    }
}

/// Gap of the discretized operator along a decreasing list of `h`.
pub fn gap_sweep(
    p: &Polytope,
    family: &DirectionFamily,
    h_list: &[f64],
    rule: ResolutionRule,
    nu1_reference: Option<f64>,
) -> Result<Vec<SweepRow>> {
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("h list must be strictly decreasing".into()));
    }
    h_list
        .iter()
        .map(|&h| {
            let grid = Grid::new(p, rule.cell_size(h))?;
            let m = assemble_metropolis(p, family, h, &grid)?;
            let r = spectrum(&m, 2)?;
            Ok(SweepRow {
                h,
                cells: grid.len(),
                gap: r.gap,
                gap_over_h2: r.gap / (h * h),
                nu1_reference,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "gap", "gap_over_h2", "nu1_reference"])?;
    for r in rows {
        w.write_record([
            r.h.to_string(),
            r.gap.to_string(),
            r.gap_over_h2.to_string(),
            r.nu1_reference.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Gap at a fixed `h` over several grid spacings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub h: f64,
    /// `(cell size, gap)`, coarsest first.
    pub gaps: Vec<(f64, f64)>,
}

impl Refinement {
    /// Coarsest gap over finest gap.
    pub fn shrink_factor(&self) -> f64 {
        self.gaps[0].1 / self.gaps[self.gaps.len() - 1].1
    }

    /// Largest relative change against the coarsest gap.
    pub fn relative_change(&self) -> f64 {
        let g0 = self.gaps[0].1;
        self.gaps.iter().map(|g| (g.1 - g0).abs() / g0).fold(0.0, f64::max)
    }
}

pub fn refinement_sensitivity(p: &Polytope, family: &DirectionFamily, h: f64, divisors: &[f64]) -> Result<Refinement> {
    if divisors.is_empty() {
        return Err(Error::InvalidArgument("no grid divisors".into()));
    }
    let gaps = divisors
        .iter()
        .map(|&d| {
            let s = h / d;
            let grid = Grid::new(p, s)?;
            let m = assemble_metropolis(p, family, h, &grid)?;
            Ok((s, spectrum(&m, 2)?.gap))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Refinement { h, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{canonical_family, unit_square};

    #[test]
    fn sweep_needs_decreasing_h() {
        let r = gap_sweep(&unit_square(), &canonical_family(2), &[0.1, 0.2], ResolutionRule::default(), None);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_sweep_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "h,gap,gap_over_h2,nu1_reference\n");
    }
}
