//! Boundary-integral tools for matrix functional calculi on smooth planar
//! domains.

pub mod acceptance;
pub mod calculus;
pub mod cauchy;
pub mod contour;
pub mod dlayer;
pub mod extremal;
pub mod geometry;
pub mod linalg;
pub mod mapping;
pub mod optimize;
pub mod random;
pub mod report;
pub mod smoothing;
pub mod tolerances;
