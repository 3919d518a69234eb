use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::vecops::{dot, norm};

/// Affine map `x ↦ matrix · x + offset` from the polytope's own coordinates
/// into a larger ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineEmbedding {
    /// Row-major, `ambient_dim` rows of length `dim`.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineEmbedding {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, c)| dot(row, x) + c)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

/// Number of facets active at a point: `Count(0)` inside, `Outside` off the closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Activity {
    Count(usize),
    Outside,
}

/// Open bounded polytope `{x : ℓ_j(x) > b_j for all j}`.
///
/// All coordinates are the polytope's own (intrinsic) coordinates; when an
/// [`AffineEmbedding`] is attached, [`Polytope::embed`] maps points into the
/// ambient space.
#[derive(Debug, Clone)]
pub struct Polytope {
    forms: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    normals: Vec<Vec<f64>>,
    witness: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    embedding: Option<AffineEmbedding>,
}

impl Polytope {
    /// Builds the polytope and certifies it is nonempty and bounded.
    pub fn new(forms: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let m = forms.len();
        if m == 0 {
            return Err(Error::Unbounded);
        }
        if offsets.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: offsets.len(),
            });
        }
        let d = forms[0].len();
        if d == 0 {
            return Err(Error::InvalidArgument("zero-dimensional forms".into()));
        }
        for (index, f) in forms.iter().enumerate() {
            if f.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: f.len(),
                });
            }
            if f.iter().all(|&c| c == 0.0) {
                return Err(Error::DegenerateForm { index });
            }
        }
        let normals: Vec<Vec<f64>> = forms
            .iter()
            .map(|f| {
                let n = norm(f);
                f.iter().map(|c| c / n).collect()
            })
            .collect();

        let witness = chebyshev_center(&forms, &offsets, &normals)?;

        // A bounded polytope in R^d needs at least d + 1 facets.
        if m <= d {
            return Err(Error::Unbounded);
        }
        let mut lower = vec![0.0; d];
        let mut upper = vec![0.0; d];
        for i in 0..d {
            for (sign, slot) in [(1.0, &mut upper[i]), (-1.0, &mut lower[i])] {
                let mut c = vec![0.0; d];
                c[i] = sign;
                let mut lp = LinearProgram::maximize(c);
                for (f, b) in forms.iter().zip(&offsets) {
                    lp.constrain(f.clone(), Relation::Ge, *b);
                }
                match lp.solve() {
                    LpOutcome::Optimal { value, .. } => *slot = sign * value,
                    LpOutcome::Unbounded => return Err(Error::Unbounded),
                    LpOutcome::Infeasible => return Err(Error::EmptyPolytope),
                }
            }
        }

        Ok(Polytope {
            forms,
            offsets,
            normals,
            witness,
            lower,
            upper,
            embedding: None,
        })
    }

    pub fn with_embedding(mut self, embedding: AffineEmbedding) -> Result<Self> {
        if embedding.matrix.iter().any(|r| r.len() != self.dim())
            || embedding.matrix.len() != embedding.offset.len()
        {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: embedding.matrix.first().map_or(0, Vec::len),
            });
        }
        self.embedding = Some(embedding);
        Ok(self)
    }

    /// Intrinsic dimension (the number of free coordinates).
    pub fn dim(&self) -> usize {
        self.forms[0].len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.embedding
            .as_ref()
            .map_or(self.dim(), |e| e.matrix.len())
    }

    pub fn num_facets(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[Vec<f64>] {
        &self.forms
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Unit inward normal of facet `k`.
    pub fn normal(&self, k: usize) -> &[f64] {
        &self.normals[k]
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    /// Certified interior point (the center of a largest inscribed ball).
    pub fn interior_point(&self) -> &[f64] {
        &self.witness
    }

    pub fn bounding_box(&self) -> BoundingBox<'_> {
        BoundingBox {
            lower: &self.lower,
            upper: &self.upper,
        }
    }

    pub fn embedding(&self) -> Option<&AffineEmbedding> {
        self.embedding.as_ref()
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        match &self.embedding {
            Some(e) => e.apply(x),
            None => x.to_vec(),
        }
    }

    /// Diagonal length of the bounding box.
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    /// `ℓ_j(x) − b_j`
    #[inline]
    pub fn slack(&self, j: usize, x: &[f64]) -> f64 {
        dot(&self.forms[j], x) - self.offsets[j]
    }

    /// Strict membership in the open polytope.
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.forms.len()).all(|j| self.slack(j, x) > 0.0)
    }

    /// Default tolerance for deciding that a point sits on a facet.
    pub fn geometric_tol(&self, x: &[f64]) -> f64 {
        let b = self.offsets.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        1e-9 * (1.0 + b + norm(x))
    }

    pub fn activity_count(&self, x: &[f64], tol: f64) -> Activity {
        let mut count = 0;
        for j in 0..self.forms.len() {
            let s = self.slack(j, x);
            if s < -tol {
                return Activity::Outside;
            }
            if s.abs() <= tol {
                count += 1;
            }
        }
        Activity::Count(count)
    }

    /// Facets active at `x` within `tol`, or `None` if `x` is off the closure.
    pub fn active_set(&self, x: &[f64], tol: f64) -> Option<Vec<usize>> {
        let mut active = Vec::new();
        for j in 0..self.forms.len() {
            let s = self.slack(j, x);
            if s < -tol {
                return None;
            }
            if s.abs() <= tol {
                active.push(j);
            }
        }
        Some(active)
    }

    pub fn classify_direction(&self, u: &[f64], k: usize, tol: f64) -> Result<DirectionClass> {
        let un = norm(u);
        if un == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let inner = dot(u, &self.normals[k]);
        let kind = if inner > tol * un {
            DirectionKind::StrictlyIncoming
        } else if inner < -tol * un {
            DirectionKind::StrictlyOutgoing
        } else {
            DirectionKind::Parallel
        };
        Ok(DirectionClass { kind, inner })
    }

    /// The set of `t ∈ [-1, 1]` with `x + h t e` in the open polytope.
    ///
    /// The set is an intersection of open half-lines with `[-1, 1]`, hence a
    /// single interval.
    pub fn chord_interval(&self, x: &[f64], e: &[f64], h: f64) -> Chord {
        let mut lo = -1.0;
        let mut hi = 1.0;
        let mut lo_open = false;
        let mut hi_open = false;
        for j in 0..self.forms.len() {
            let rate = h * dot(&self.forms[j], e);
            let gap = self.offsets[j] - dot(&self.forms[j], x);
            if rate > 0.0 {
                let t = gap / rate;
                if t >= lo {
                    lo = t;
                    lo_open = true;
                }
            } else if rate < 0.0 {
                let t = gap / rate;
                if t <= hi {
                    hi = t;
                    hi_open = true;
                }
            } else if gap >= 0.0 {
                return Chord::EMPTY;
            }
        }
        if hi <= lo {
            return Chord::EMPTY;
        }
        Chord {
            lo,
            hi,
            lo_open,
            hi_open,
        }
    }
}

/// Center and radius of the largest ball inside, capped at radius 1.
fn chebyshev_center(forms: &[Vec<f64>], offsets: &[f64], normals: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = forms[0].len();
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    let mut lp = LinearProgram::maximize(c);
    for ((f, b), n) in forms.iter().zip(offsets).zip(normals) {
        let scale = norm(f);
        let mut row: Vec<f64> = n.clone();
        row.push(-1.0);
        lp.constrain(row, Relation::Ge, b / scale);
    }
    let mut cap = vec![0.0; d + 1];
    cap[d] = 1.0;
    lp.constrain(cap, Relation::Le, 1.0);
    match lp.solve() {
        LpOutcome::Optimal { x, value } if value > 1e-12 => {
            let w = x[..d].to_vec();
            if forms
                .iter()
                .zip(offsets)
                .all(|(f, b)| dot(f, &w) - b > 0.0)
            {
                Ok(w)
            } else {
                Err(Error::EmptyPolytope)
            }
        }
        LpOutcome::Optimal { .. } | LpOutcome::Infeasible => Err(Error::EmptyPolytope),
        LpOutcome::Unbounded => Err(Error::LpFailure("interior-point program unbounded".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionKind {
    StrictlyIncoming,
    Parallel,
    StrictlyOutgoing,
}

/// Position of a vector relative to a facet hyperplane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionClass {
    pub kind: DirectionKind,
    /// `⟨u, ν_k⟩`
    pub inner: f64,
}

impl DirectionClass {
    /// Incoming in the wide sense: strictly incoming or parallel.
    pub fn is_incoming(&self) -> bool {
        self.kind != DirectionKind::StrictlyOutgoing
    }
}

/// Sub-interval of `[-1, 1]`; endpoints strictly inside come from a facet
/// and are open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Chord {
    pub const EMPTY: Chord = Chord {
        lo: 0.0,
        hi: 0.0,
        lo_open: true,
        hi_open: true,
    };

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.length() == 0.0
    }

    /// `K_{j,h} 1 (x)`, the acceptance probability along this direction.
    pub fn acceptance(&self) -> f64 {
        0.5 * self.length()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn unit_square_witness_and_box() {
        let sq = builtin::unit_square();
        let w = sq.interior_point();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
        let bb = sq.bounding_box();
        assert_eq!(bb.lower, &[0.0, 0.0]);
        assert_eq!(bb.upper, &[1.0, 1.0]);
    }

    #[test]
    fn rejects_unbounded_empty_and_degenerate() {
        assert!(matches!(
            Polytope::new(vec![vec![1.0, 0.0]], vec![0.0]),
            Err(Error::Unbounded)
        ));
        assert!(matches!(
            Polytope::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 1.0]),
            Err(Error::EmptyPolytope)
        ));
        // a wedge: bounded in neither coordinate
        assert!(matches!(
            Polytope::new(
                vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
                vec![0.0, 0.0, 0.0]
            ),
            Err(Error::Unbounded)
        ));
        assert!(matches!(
            Polytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 3]),
            Err(Error::DegenerateForm { index: 0 })
        ));
    }

    #[test]
    fn membership_is_strict() {
        let sq = builtin::unit_square();
        assert!(sq.contains(&[0.5, 0.5]));
        assert!(!sq.contains(&[0.0, 0.5]));
        assert!(!sq.contains(&[-0.1, 0.5]));
    }

    #[test]
    fn activity_counts() {
        let sq = builtin::unit_square();
        assert_eq!(sq.activity_count(&[0.5, 0.5], 1e-9), Activity::Count(0));
        assert_eq!(sq.activity_count(&[0.0, 0.0], 1e-9), Activity::Count(2));
        assert_eq!(sq.activity_count(&[-0.1, 0.5], 1e-9), Activity::Outside);
        assert!(Activity::Count(2) < Activity::Outside);
    }

    #[test]
    fn direction_classes() {
        let sq = builtin::unit_square();
        // facet 0 is x1 > 0 with inward normal (1, 0)
        let c = |u: &[f64]| sq.classify_direction(u, 0, 1e-9).unwrap().kind;
        assert_eq!(c(&[1.0, 0.0]), DirectionKind::StrictlyIncoming);
        assert_eq!(c(&[0.0, 1.0]), DirectionKind::Parallel);
        assert_eq!(c(&[-1.0, 0.0]), DirectionKind::StrictlyOutgoing);
        assert!(matches!(
            sq.classify_direction(&[0.0, 0.0], 0, 1e-9),
            Err(Error::ZeroDirection)
        ));
    }

    #[test]
    fn chord_examples() {
        let sq = builtin::unit_square();
        let c = sq.chord_interval(&[0.2, 0.5], &[1.0, 0.0], 0.5);
        assert!((c.lo + 0.4).abs() < 1e-12 && c.hi == 1.0);
        assert!(c.lo_open && !c.hi_open);
        assert!((c.length() - 1.4).abs() < 1e-12);
        assert!((c.acceptance() - 0.7).abs() < 1e-12);

        let c = sq.chord_interval(&[0.5, 0.5], &[1.0, 0.0], 0.3);
        assert_eq!((c.lo, c.hi), (-1.0, 1.0));
        assert_eq!(c.acceptance(), 1.0);

        let c = sq.chord_interval(&[0.0, 0.5], &[-1.0, 0.0], 0.1);
        assert_eq!(c.lo, -1.0);
        assert!(c.hi.abs() < 1e-15 && c.hi_open);
        assert!((c.acceptance() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chord_off_closure_is_empty() {
        let sq = builtin::unit_square();
        let c = sq.chord_interval(&[-1.0, 0.5], &[1.0, 0.0], 0.5);
        assert!(c.is_empty());
        let c = sq.chord_interval(&[0.5, 1.5], &[1.0, 0.0], 0.5);
        assert!(c.is_empty());
    }
}
