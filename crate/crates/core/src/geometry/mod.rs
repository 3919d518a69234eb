//! Polytopes, direction families, and the geometric ergodicity condition.

mod faces;
mod family;
mod polytope;

pub use faces::{
    enumerate_faces, enumerate_faces_with, escape_direction, is_weakly_incoming, span_check,
    EscapeDirection, Face, WeakIncomingReport, DIRECTION_TOL, FACE_MARGIN_TOL,
};
pub use family::{
    sphere_area, ContinuousFamily, Direction, DirectionFamily, SphereDensity, WeightedDirections,
};
pub(crate) use family::sample_continuous;
pub use polytope::{
    Activity, AffineEmbedding, BoundingBox, Chord, DirectionClass, DirectionKind, Polytope,
};
