//! Borel sets and signed measures with exact finite representations.

pub mod borel;
pub mod signed;

pub use borel::{distance_to_set, svc_set, BorelSetRepr, Interval, SvcSet};
pub use signed::{integrate, jordan_hahn, AcPart, JordanHahn, SignedMeasureRepr};
