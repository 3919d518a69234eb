//! Ready-made polytopes and direction families.

use crate::geometry::{DirectionFamily, Polytope, SphereDensity};

/// `(0, 1)²`, facets ordered `x₁ > 0, x₂ > 0, x₁ < 1, x₂ < 1`.
pub fn unit_square() -> Polytope {
    cube(2)
}

/// `(0, 1)^d`; facet `i` is `x_i > 0` and facet `d + i` is `x_i < 1`.
pub fn cube(d: usize) -> Polytope {
    let mut forms = Vec::with_capacity(2 * d);
    let mut offsets = Vec::with_capacity(2 * d);
    for i in 0..d {
        let mut f = vec![0.0; d];
        f[i] = 1.0;
        forms.push(f);
        offsets.push(0.0);
    }
    for i in 0..d {
        let mut f = vec![0.0; d];
        f[i] = -1.0;
        forms.push(f);
        offsets.push(-1.0);
    }
    Polytope::new(forms, offsets).expect("unit cube is a valid polytope")
}

pub const TRIANGLE_A: [f64; 2] = [0.0, 1.732_050_807_568_877_2];
pub const TRIANGLE_B: [f64; 2] = [-1.0, 0.0];
pub const TRIANGLE_C: [f64; 2] = [1.0, 0.0];

/// Equilateral triangle with vertices `A = (0, √3)`, `B = (−1, 0)`, `C = (1, 0)`.
///
/// Facets are ordered `BC, AB, AC`, so vertex `A` has active set `{1, 2}`,
/// `B` has `{0, 1}` and `C` has `{0, 2}`.
pub fn triangle() -> Polytope {
    let s3 = 3f64.sqrt();
    Polytope::new(
        vec![vec![0.0, 1.0], vec![s3, -1.0], vec![-s3, -1.0]],
        vec![0.0, -s3, -s3],
    )
    .expect("triangle is a valid polytope")
}

/// Names the vertex of [`triangle`] with the given active set.
pub fn triangle_vertex_name(active: &[usize]) -> Option<&'static str> {
    match active {
        [1, 2] => Some("A"),
        [0, 1] => Some("B"),
        [0, 2] => Some("C"),
        _ => None,
    }
}

/// Standard basis of `R^d`.
pub fn canonical_family(d: usize) -> DirectionFamily {
    let vecs = (0..d)
        .map(|i| {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            v
        })
        .collect();
    DirectionFamily::Discrete(vecs)
}

/// Planar unit vectors at the given polar angles (degrees).
pub fn angle_family(degrees: &[f64]) -> DirectionFamily {
    DirectionFamily::Discrete(
        degrees
            .iter()
            .map(|a| {
                let r = a.to_radians();
                vec![r.cos(), r.sin()]
            })
            .collect(),
    )
}

/// Uniform law on `S^{d-1}` with the standard basis as witness set.
pub fn uniform_sphere(d: usize, quadrature_nodes: usize) -> DirectionFamily {
    let witnesses = match canonical_family(d) {
        DirectionFamily::Discrete(v) => v,
        DirectionFamily::Continuous(_) => unreachable!(),
    };
    DirectionFamily::continuous(d, SphereDensity::Uniform, None, quadrature_nodes, witnesses)
        .expect("uniform sphere family is valid")
}
