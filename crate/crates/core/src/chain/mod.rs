//! The local Metropolis chain.
//!
//! One step picks a direction `e` from the family, draws `u` uniformly on
//! `[-h, h]`, and moves to `x + u e` if that point is inside the polytope;
//! otherwise it stays put. Holding at `x` happens with probability
//! [`rejection_mass`].

mod birkhoff;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use birkhoff::{birkhoff, birkhoff_center, birkhoff_moves, BirkhoffMove};

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::geometry::{sample_continuous, DirectionFamily, Polytope};

pub type ChainRng = ChaCha8Rng;

/// Generator for chain number `stream` under a run seed. Distinct streams
/// never share state, so replicas can run on any thread.
pub fn chain_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub h: f64,
    pub seed: u64,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default)]
    pub burn_in: usize,
}

fn one() -> usize {
    1
}

impl ChainConfig {
    pub fn new(h: f64, seed: u64) -> Self {
        ChainConfig {
            h,
            seed,
            thinning: 1,
            burn_in: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidArgument(format!("step scale h must be positive, got {}", self.h)));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidArgument("thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a single transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: Vec<f64>,
    pub accepted: bool,
    pub direction: Vec<f64>,
}

/// In-place chain state; avoids per-step allocation.
#[derive(Debug, Clone)]
pub struct Walker<'a> {
    polytope: &'a Polytope,
    family: &'a DirectionFamily,
    h: f64,
    state: Vec<f64>,
    proposal: Vec<f64>,
    direction: Vec<f64>,
}

impl<'a> Walker<'a> {
    pub fn new(polytope: &'a Polytope, family: &'a DirectionFamily, h: f64, start: &[f64]) -> Result<Self> {
        let d = polytope.dim();
        if start.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: start.len(),
            });
        }
        if family.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: family.dim(),
            });
        }
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("step scale h must be positive, got {h}")));
        }
        if !polytope.contains(start) {
            return Err(Error::InvalidStart);
        }
        Ok(Walker {
            polytope,
            family,
            h,
            state: start.to_vec(),
            proposal: vec![0.0; d],
            direction: vec![0.0; d],
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Direction used by the most recent step.
    pub fn last_direction(&self) -> &[f64] {
        &self.direction
    }

    /// Advances one step; returns whether the proposal was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        match self.family {
            DirectionFamily::Discrete(v) => {
                let j = rng.gen_range(0..v.len());
                self.direction.copy_from_slice(&v[j]);
            }
            DirectionFamily::Continuous(c) => sample_continuous(c, rng, &mut self.direction)?,
        }
        let u: f64 = rng.gen_range(-self.h..=self.h);
        for ((p, x), e) in self.proposal.iter_mut().zip(&self.state).zip(&self.direction) {
            *p = x + u * e;
        }
        if self.polytope.contains(&self.proposal) {
            std::mem::swap(&mut self.state, &mut self.proposal);
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// One Metropolis transition from `x`.
pub fn metropolis_step<R: Rng + ?Sized>(
    polytope: &Polytope,
    family: &DirectionFamily,
    h: f64,
    x: &[f64],
    rng: &mut R,
) -> Result<Step> {
    let mut w = Walker::new(polytope, family, h, x)?;
    let accepted = w.step(rng)?;
    Ok(Step {
        state: w.state,
        accepted,
        direction: w.direction,
    })
}

/// Holding probability `m_h(x) = 1 − Σ_j w_j |chord_j| / 2`.
///
/// Continuous families use their sphere quadrature.
pub fn rejection_mass(polytope: &Polytope, family: &DirectionFamily, h: f64, x: &[f64]) -> Result<f64> {
    let dirs = family.weighted()?;
    let accept: f64 = dirs
        .iter()
        .map(|(e, w)| w * polytope.chord_interval(x, e, h).acceptance())
        .sum();
    Ok((1.0 - accept).max(0.0))
}

/// Recorded states of one chain. The start point is kept apart from the
/// per-step records.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub start: Vec<f64>,
    /// Row-major, `dim` values per record.
    points: Vec<f64>,
    pub steps: Vec<u64>,
    pub accepted: Vec<bool>,
    pub acceptances: u64,
    pub n_steps: u64,
}

impl Trajectory {
    /// Number of records after the start point.
    pub fn num_records(&self) -> usize {
        self.steps.len()
    }

    pub fn record(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn records(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dim)
    }

    /// Start point followed by every record.
    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.start.as_slice()).chain(self.records())
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            self.acceptances as f64 / self.n_steps as f64
        }
    }

    /// Coordinate means over the records (the start point when there are none).
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        let n = self.num_records();
        if n == 0 {
            return self.start.clone();
        }
        for r in self.records() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter().map(|v| v / n as f64).collect()
    }

    /// CSV with header `step,x1,…,xd,accepted`; one row per record.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        header.push("accepted".into());
        w.write_record(&header)?;
        for (i, r) in self.records().enumerate() {
            let mut row = Vec::with_capacity(self.dim + 2);
            row.push(self.steps[i].to_string());
            row.extend(r.iter().map(|v| v.to_string()));
            row.push(u8::from(self.accepted[i]).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `n` steps from `start`. States after `burn_in` steps are recorded
/// every `thinning` steps. Identical inputs give identical trajectories.
pub fn run_chain(
    polytope: &Polytope,
    family: &DirectionFamily,
    config: &ChainConfig,
    start: &[f64],
    n: u64,
) -> Result<Trajectory> {
    run_chain_on_stream(polytope, family, config, start, n, 0)
}

pub fn run_chain_on_stream(
    polytope: &Polytope,
    family: &DirectionFamily,
    config: &ChainConfig,
    start: &[f64],
    n: u64,
    stream: u64,
) -> Result<Trajectory> {
    config.validate()?;
    let mut walker = Walker::new(polytope, family, config.h, start)?;
    let mut rng = chain_rng(config.seed, stream);
    let d = polytope.dim();
    let burn = config.burn_in as u64;
    let thin = config.thinning as u64;
    let expected = n.saturating_sub(burn) / thin;
    let mut traj = Trajectory {
        dim: d,
        start: start.to_vec(),
        points: Vec::with_capacity(expected as usize * d),
        steps: Vec::with_capacity(expected as usize),
        accepted: Vec::with_capacity(expected as usize),
        acceptances: 0,
        n_steps: n,
    };
    for k in 1..=n {
        let acc = walker.step(&mut rng)?;
        traj.acceptances += u64::from(acc);
        if k > burn && (k - burn) % thin == 0 {
            traj.points.extend_from_slice(walker.state());
            traj.steps.push(k);
            traj.accepted.push(acc);
        }
    }
    Ok(traj)
}

/// Runs `replicas` independent chains from a common start and reports the
/// state of each after every step count in `checkpoints` (sorted ascending).
///
/// Replica `r` uses stream `r` of the seed, so results do not depend on
/// the execution mode.
pub fn replica_states(
    polytope: &Polytope,
    family: &DirectionFamily,
    h: f64,
    start: &[f64],
    checkpoints: &[u64],
    replicas: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("checkpoints must be sorted".into()));
    }
    Walker::new(polytope, family, h, start)?;
    let per_replica = map_range(exec, replicas, |r| -> Result<Vec<Vec<f64>>> {
        let mut walker = Walker::new(polytope, family, h, start)?;
        let mut rng = chain_rng(seed, r as u64);
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut done = 0u64;
        for &c in checkpoints {
            while done < c {
                walker.step(&mut rng)?;
                done += 1;
            }
            out.push(walker.state().to_vec());
        }
        Ok(out)
    });
    // transpose to [checkpoint][replica]
    let mut by_checkpoint = vec![Vec::with_capacity(replicas); checkpoints.len()];
    for states in per_replica {
        for (slot, s) in by_checkpoint.iter_mut().zip(states?) {
            slot.push(s);
        }
    }
    Ok(by_checkpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn rejection_mass_examples() {
        let sq = builtin::unit_square();
        let e0 = builtin::canonical_family(2);
        assert_eq!(rejection_mass(&sq, &e0, 0.3, &[0.5, 0.5]).unwrap(), 0.0);
        let m = rejection_mass(&sq, &e0, 0.5, &[0.2, 0.5]).unwrap();
        assert!((m - 0.15).abs() < 1e-12);
        let m = rejection_mass(&sq, &e0, 0.5, &[0.1, 0.1]).unwrap();
        assert!((m - 0.4).abs() < 1e-12);
    }

    #[test]
    fn interior_steps_always_accept() {
        let sq = builtin::unit_square();
        let e0 = builtin::canonical_family(2);
        let mut rng = chain_rng(3, 0);
        for _ in 0..1000 {
            let s = metropolis_step(&sq, &e0, 0.3, &[0.5, 0.5], &mut rng).unwrap();
            assert!(s.accepted);
            assert!(sq.contains(&s.state));
        }
    }

    #[test]
    fn rejects_bad_start() {
        let sq = builtin::unit_square();
        let e0 = builtin::canonical_family(2);
        let mut rng = chain_rng(3, 0);
        assert!(matches!(
            metropolis_step(&sq, &e0, 0.3, &[1.0, 0.5], &mut rng),
            Err(Error::InvalidStart)
        ));
    }

    #[test]
    fn zero_steps_keep_only_the_start() {
        let sq = builtin::unit_square();
        let e0 = builtin::canonical_family(2);
        let t = run_chain(&sq, &e0, &ChainConfig::new(0.2, 1), &[0.3, 0.3], 0).unwrap();
        assert_eq!(t.states().collect::<Vec<_>>(), vec![&[0.3, 0.3][..]]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,x1,x2,accepted\n");
    }

    #[test]
    fn burn_in_and_thinning() {
        let sq = builtin::unit_square();
        let e0 = builtin::canonical_family(2);
        let cfg = ChainConfig {
            h: 0.2,
            seed: 5,
            thinning: 3,
            burn_in: 10,
        };
        let t = run_chain(&sq, &e0, &cfg, &[0.3, 0.3], 40).unwrap();
        assert_eq!(t.steps, vec![13, 16, 19, 22, 25, 28, 31, 34, 37, 40]);
        assert!(t.acceptances <= t.n_steps);
    }

    #[test]
    fn replica_states_are_execution_independent() {
        let sq = builtin::unit_square();
        let e0 = builtin::canonical_family(2);
        let a = replica_states(&sq, &e0, 0.2, &[0.3, 0.3], &[0, 5, 20], 50, 9, Execution::Sequential).unwrap();
        let b = replica_states(&sq, &e0, 0.2, &[0.3, 0.3], &[0, 5, 20], 50, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a[0].iter().all(|s| s == &[0.3, 0.3]));
    }
}
