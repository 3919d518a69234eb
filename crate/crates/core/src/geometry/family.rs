use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::vecops::norm;

/// Probability density on the unit sphere `S^{d-1}` with respect to surface measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereDensity {
    Uniform,
    /// Planar only: `ρ(φ) = (1 + cos²φ) / (3π)`.
    CosSquared,
}

impl SphereDensity {
    pub fn eval(&self, e: &[f64]) -> f64 {
        match self {
            SphereDensity::Uniform => 1.0 / sphere_area(e.len()),
            SphereDensity::CosSquared => {
                let c = e[0] / norm(e);
                (1.0 + c * c) / (3.0 * PI)
            }
        }
    }

    pub fn supremum(&self, dim: usize) -> f64 {
        match self {
            SphereDensity::Uniform => 1.0 / sphere_area(dim),
            SphereDensity::CosSquared => 2.0 / (3.0 * PI),
        }
    }

    fn supports_dim(&self, dim: usize) -> bool {
        match self {
            SphereDensity::Uniform => dim >= 1,
            SphereDensity::CosSquared => dim == 2,
        }
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousFamily {
    pub dim: usize,
    pub density: SphereDensity,
    /// Declared upper bound on the density, used as the rejection envelope.
    pub density_bound: f64,
    pub quadrature_nodes: usize,
    /// Vectors in the support of the density, used for the face-wise escape check.
    pub witnesses: Vec<Vec<f64>>,
}

/// The set of move directions.
#[derive(Debug, Clone)]
pub enum DirectionFamily {
    /// `{e_1, …, e_p}` chosen uniformly.
    Discrete(Vec<Vec<f64>>),
    /// `e ~ ρ dσ` on the sphere.
    Continuous(ContinuousFamily),
}

/// Finitely many directions with probability weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDirections {
    pub vectors: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl WeightedDirections {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.vectors
            .iter()
            .map(Vec::as_slice)
            .zip(self.weights.iter().copied())
    }

    /// `Σ_j w_j e_j e_jᵀ`
    pub fn second_moment(&self) -> nalgebra::DMatrix<f64> {
        let d = self.vectors[0].len();
        let mut q = nalgebra::DMatrix::zeros(d, d);
        for (e, w) in self.iter() {
            for a in 0..d {
                for b in 0..d {
                    q[(a, b)] += w * e[a] * e[b];
                }
            }
        }
        q
    }
}

impl DirectionFamily {
    pub fn discrete(vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidFamily("a discrete family needs at least one vector".into()));
        }
        let d = vectors[0].len();
        for v in &vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            if norm(v) == 0.0 {
                return Err(Error::ZeroDirection);
            }
        }
        Ok(DirectionFamily::Discrete(vectors))
    }

    /// Validates the density normalization and the witness set.
    pub fn continuous(
        dim: usize,
        density: SphereDensity,
        density_bound: Option<f64>,
        quadrature_nodes: usize,
        witnesses: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !density.supports_dim(dim) {
            return Err(Error::InvalidFamily(format!("{density:?} is not defined in dimension {dim}")));
        }
        if quadrature_nodes < 2 {
            return Err(Error::InvalidFamily("need at least two quadrature nodes".into()));
        }
        for w in &witnesses {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: w.len(),
                });
            }
            if norm(w) == 0.0 {
                return Err(Error::ZeroDirection);
            }
            if !(density.eval(w) > 0.0) {
                return Err(Error::InvalidFamily(format!("witness {w:?} is outside the density support")));
            }
        }
        let fam = ContinuousFamily {
            dim,
            density,
            density_bound: density_bound.unwrap_or_else(|| density.supremum(dim)),
            quadrature_nodes,
            witnesses,
        };
        let total = raw_sphere_quadrature(&fam)?.weights.iter().sum::<f64>();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidFamily(format!(
                "density integrates to {total} over the sphere"
            )));
        }
        Ok(DirectionFamily::Continuous(fam))
    }

    pub fn dim(&self) -> usize {
        match self {
            DirectionFamily::Discrete(v) => v[0].len(),
            DirectionFamily::Continuous(c) => c.dim,
        }
    }

    /// Vectors used for span and escape-direction checks.
    pub fn check_vectors(&self) -> &[Vec<f64>] {
        match self {
            DirectionFamily::Discrete(v) => v,
            DirectionFamily::Continuous(c) => &c.witnesses,
        }
    }

    /// Uniform weights for a discrete family; a normalized sphere
    /// quadrature for a continuous one.
    pub fn weighted(&self) -> Result<WeightedDirections> {
        match self {
            DirectionFamily::Discrete(v) => {
                let w = 1.0 / v.len() as f64;
                Ok(WeightedDirections {
                    vectors: v.clone(),
                    weights: vec![w; v.len()],
                })
            }
            DirectionFamily::Continuous(c) => {
                let mut q = raw_sphere_quadrature(c)?;
                let total: f64 = q.weights.iter().sum();
                for w in &mut q.weights {
                    *w /= total;
                }
                // zero-density nodes carry no mass
                let keep: Vec<usize> = (0..q.len()).filter(|&i| q.weights[i] > 0.0).collect();
                Ok(WeightedDirections {
                    vectors: keep.iter().map(|&i| q.vectors[i].clone()).collect(),
                    weights: keep.iter().map(|&i| q.weights[i]).collect(),
                })
            }
        }
    }

    /// Draws one direction: a uniform index for a discrete family, a
    /// density sample for a continuous one.
    pub fn draw<'a, R: Rng + ?Sized>(&'a self, rng: &mut R) -> Result<Direction<'a>> {
        match self {
            DirectionFamily::Discrete(v) => {
                let index = rng.gen_range(0..v.len());
                Ok(Direction::Listed {
                    index,
                    vector: &v[index],
                })
            }
            DirectionFamily::Continuous(c) => {
                let mut e = vec![0.0; c.dim];
                sample_continuous(c, rng, &mut e)?;
                Ok(Direction::Sampled(e))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Direction<'a> {
    Listed { index: usize, vector: &'a [f64] },
    Sampled(Vec<f64>),
}

impl Direction<'_> {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            Direction::Listed { vector, .. } => vector,
            Direction::Sampled(v) => v,
        }
    }
}

pub(crate) fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 1e-300 {
            for v in out.iter_mut() {
                *v /= n;
            }
            return;
        }
    }
}

/// Rejection sampling against the uniform law with the declared bound as envelope.
pub(crate) fn sample_continuous<R: Rng + ?Sized>(
    c: &ContinuousFamily,
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    if c.density == SphereDensity::Uniform {
        uniform_on_sphere(rng, out);
        return Ok(());
    }
    loop {
        uniform_on_sphere(rng, out);
        let rho = c.density.eval(out);
        if rho > c.density_bound * (1.0 + 1e-12) {
            return Err(Error::SamplerBoundViolated {
                observed: rho,
                bound: c.density_bound,
            });
        }
        if rng.gen::<f64>() * c.density_bound < rho {
            return Ok(());
        }
    }
}

/// Unnormalized quadrature: weights are `ρ(node) · dσ(node)`.
fn raw_sphere_quadrature(c: &ContinuousFamily) -> Result<WeightedDirections> {
    let q = c.quadrature_nodes;
    let (vectors, area): (Vec<Vec<f64>>, Vec<f64>) = match c.dim {
        1 => (vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0]),
        2 => (0..q)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / q as f64;
                (vec![phi.cos(), phi.sin()], 2.0 * PI / q as f64)
            })
            .unzip(),
        3 => {
            // Gauss–Legendre in cos θ times an equispaced rule in φ.
            let n_theta = ((q as f64 / 2.0).sqrt().round() as usize).max(1);
            let n_phi = 2 * n_theta;
            let (z, wz) = gauss_legendre(n_theta);
            let mut vecs = Vec::with_capacity(n_theta * n_phi);
            let mut areas = Vec::with_capacity(n_theta * n_phi);
            for (zi, wi) in z.iter().zip(&wz) {
                let r = (1.0 - zi * zi).sqrt();
                for k in 0..n_phi {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                    vecs.push(vec![r * phi.cos(), r * phi.sin(), *zi]);
                    areas.push(wi * 2.0 * PI / n_phi as f64);
                }
            }
            (vecs, areas)
        }
        d => {
            return Err(Error::InvalidFamily(format!(
                "sphere quadrature is available for d <= 3, got {d}"
            )))
        }
    };
    let weights = vectors
        .iter()
        .zip(&area)
        .map(|(v, a)| c.density.eval(v) * a)
        .collect();
    Ok(WeightedDirections { vectors, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_families() {
        assert!(DirectionFamily::discrete(vec![]).is_err());
        assert!(matches!(
            DirectionFamily::discrete(vec![vec![0.0, 0.0]]),
            Err(Error::ZeroDirection)
        ));
        assert!(DirectionFamily::continuous(3, SphereDensity::CosSquared, None, 64, vec![]).is_err());
        assert!(DirectionFamily::continuous(5, SphereDensity::Uniform, None, 64, vec![]).is_err());
    }

    #[test]
    fn quadratures_are_normalized() {
        for (d, dens) in [
            (2, SphereDensity::Uniform),
            (2, SphereDensity::CosSquared),
            (3, SphereDensity::Uniform),
        ] {
            let f = DirectionFamily::continuous(d, dens, None, 64, vec![]).unwrap();
            let w = f.weighted().unwrap();
            assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_second_moment_is_isotropic() {
        for d in [2, 3] {
            let f = DirectionFamily::continuous(d, SphereDensity::Uniform, None, 64, vec![]).unwrap();
            let q = f.weighted().unwrap().second_moment();
            for a in 0..d {
                for b in 0..d {
                    let want = if a == b { 1.0 / d as f64 } else { 0.0 };
                    assert!((q[(a, b)] - want).abs() < 1e-12, "d={d} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn bound_violation_is_reported() {
        let f = DirectionFamily::continuous(2, SphereDensity::CosSquared, Some(0.1), 64, vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut saw = false;
        for _ in 0..1000 {
            if let Err(Error::SamplerBoundViolated { .. }) = f.draw(&mut rng) {
                saw = true;
                break;
            }
        }
        assert!(saw);
    }
}
