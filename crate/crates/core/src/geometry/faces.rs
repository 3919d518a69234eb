//! Face enumeration and the weakly-incoming test.
//!
//! The activity count is constant on the relative interior of a face, so
//! the escape condition only needs to be decided once per face. At a face
//! with active set `I`, a signed direction `θe` lowers the activity count
//! along a short segment iff `⟨θe, ν_i⟩ ≥ 0` for every `i ∈ I` with at least
//! one strict inequality: strictly incoming facets release, parallel ones
//! stay tight, and any strictly outgoing facet pushes the point off the
//! closure.

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::geometry::{DirectionFamily, Polytope};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::vecops::{dot, norm};

const SUBSET_LIMIT: u128 = 1_000_000;
/// A face is nonempty when its max-margin program beats this.
pub const FACE_MARGIN_TOL: f64 = 1e-8;
/// Tolerance on normalized inner products in the escape test.
pub const DIRECTION_TOL: f64 = 1e-9;

/// Relatively open face with exactly the facets in `active` tight.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub active: Vec<usize>,
    /// Point in the relative interior of the face.
    pub witness: Vec<f64>,
    /// Distance from the witness to the nearest inactive facet.
    pub margin: f64,
}

impl Face {
    pub fn codim(&self) -> usize {
        self.active.len()
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All nonempty faces of codimension `1..=max_codim`, ordered by codimension
/// and then lexicographically by active set.
pub fn enumerate_faces(p: &Polytope, max_codim: usize) -> Result<Vec<Face>> {
    enumerate_faces_with(p, max_codim, Execution::default())
}

pub fn enumerate_faces_with(p: &Polytope, max_codim: usize, exec: Execution) -> Result<Vec<Face>> {
    let m = p.num_facets();
    let max_codim = max_codim.min(m);
    let count: u128 = (1..=max_codim).map(|k| binomial(m, k)).sum();
    if count > SUBSET_LIMIT {
        return Err(Error::TooManySubsets {
            count,
            limit: SUBSET_LIMIT,
        });
    }
    let mut subsets = Vec::new();
    for k in 1..=max_codim {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            subsets.push(idx.clone());
            // next k-combination in lexicographic order
            let mut i = k;
            while i > 0 && idx[i - 1] == m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    let results = map_range(exec, subsets.len(), |i| face_program(p, &subsets[i]));
    let mut faces = Vec::new();
    for (subset, r) in subsets.into_iter().zip(results) {
        if let Some((witness, margin)) = r? {
            faces.push(Face {
                active: subset,
                witness,
                margin,
            });
        }
    }
    Ok(faces)
}

/// Maximizes the margin `ε` to the inactive facets while holding the active
/// ones tight; the face is nonempty iff the optimum exceeds the tolerance.
fn face_program(p: &Polytope, active: &[usize]) -> Result<Option<(Vec<f64>, f64)>> {
    let d = p.dim();
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    let mut lp = LinearProgram::maximize(c);
    for j in 0..p.num_facets() {
        let f = &p.forms()[j];
        let scale = norm(f);
        let mut row: Vec<f64> = f.iter().map(|v| v / scale).collect();
        let rhs = p.offsets()[j] / scale;
        if active.contains(&j) {
            row.push(0.0);
            lp.constrain(row, Relation::Eq, rhs);
        } else {
            row.push(-1.0);
            lp.constrain(row, Relation::Ge, rhs);
        }
    }
    let bb = p.bounding_box();
    for i in 0..d {
        let mut row = vec![0.0; d + 1];
        row[i] = 1.0;
        lp.constrain(row.clone(), Relation::Ge, bb.lower[i]);
        lp.constrain(row, Relation::Le, bb.upper[i]);
    }
    let mut cap = vec![0.0; d + 1];
    cap[d] = 1.0;
    lp.constrain(cap, Relation::Le, p.diameter().max(1.0));
    match lp.solve() {
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::LpFailure(format!("face program for {active:?} is unbounded"))),
        LpOutcome::Optimal { x, value } => {
            if value > FACE_MARGIN_TOL {
                Ok(Some((x[..d].to_vec(), value)))
            } else {
                Ok(None)
            }
        }
    }
}

/// A signed family vector that escapes a face.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeDirection {
    pub face: usize,
    /// Index into the family's check vectors.
    pub direction: usize,
    pub sign: f64,
}

#[derive(Debug, Clone)]
pub struct WeakIncomingReport {
    pub weakly_incoming: bool,
    pub faces: Vec<Face>,
    /// One escape direction per face that has one.
    pub escapes: Vec<EscapeDirection>,
    /// Indices into `faces` with no escape direction.
    pub failing: Vec<usize>,
}

impl WeakIncomingReport {
    /// First failing face in enumeration order.
    pub fn witness(&self) -> Option<&Face> {
        self.failing.first().map(|&i| &self.faces[i])
    }

    pub fn failing_faces(&self) -> impl Iterator<Item = &Face> {
        self.failing.iter().map(|&i| &self.faces[i])
    }
}

/// Finds `θe` with `⟨θe, ν_i⟩ ≥ 0` on the whole active set and `> 0` somewhere.
pub fn escape_direction(p: &Polytope, active: &[usize], vectors: &[Vec<f64>]) -> Option<(usize, f64)> {
    for (j, e) in vectors.iter().enumerate() {
        let en = norm(e);
        let inner: Vec<f64> = active.iter().map(|&i| dot(e, p.normal(i)) / en).collect();
        for sign in [1.0, -1.0] {
            let ok = inner.iter().all(|v| sign * v >= -DIRECTION_TOL)
                && inner.iter().any(|v| sign * v > DIRECTION_TOL);
            if ok {
                return Some((j, sign));
            }
        }
    }
    None
}

/// Decides whether every boundary point has an escape direction in the family.
///
/// Continuous families are checked through their declared witness vectors.
pub fn is_weakly_incoming(p: &Polytope, family: &DirectionFamily) -> Result<WeakIncomingReport> {
    if family.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: family.dim(),
        });
    }
    let vectors = family.check_vectors();
    if vectors.is_empty() {
        return Err(Error::InvalidFamily(
            "continuous family declares no witness vectors".into(),
        ));
    }
    let faces = enumerate_faces(p, p.num_facets())?;
    let mut escapes = Vec::new();
    let mut failing = Vec::new();
    for (fi, face) in faces.iter().enumerate() {
        match escape_direction(p, &face.active, vectors) {
            Some((direction, sign)) => escapes.push(EscapeDirection {
                face: fi,
                direction,
                sign,
            }),
            None => failing.push(fi),
        }
    }
    Ok(WeakIncomingReport {
        weakly_incoming: failing.is_empty(),
        faces,
        escapes,
        failing,
    })
}

/// True iff the vectors span `R^dim`, by singular values of the stacked matrix.
pub fn span_check(vectors: &[Vec<f64>], dim: usize) -> bool {
    if vectors.len() < dim || dim == 0 {
        return false;
    }
    let m = nalgebra::DMatrix::from_fn(vectors.len(), dim, |i, j| vectors[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = smax * 1e-10 * vectors.len().max(dim) as f64;
    sv.iter().filter(|&&s| s > tol).count() == dim
}
