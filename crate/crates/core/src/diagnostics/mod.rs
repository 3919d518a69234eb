//! Total-variation decay curves, rate fits and gap sweeps.

mod sweep;
mod tv;

pub use sweep::{gap_sweep, refinement_sensitivity, write_sweep_csv, Refinement, ResolutionRule, SweepRow};
pub use tv::{
    fit_rate, transient_steps, tv_empirical, tv_exact, tv_exact_binned, Bins, RateFit, TvCurve, TvMode,
};
