//! Topological fingerprints of 2D images.
//!
//! Each color channel of an image induces a sublevel filtration of binary
//! images. Cubical persistent homology summarizes how connected components
//! (dimension 0) and holes (dimension 1) appear and disappear along it, and
//! sampling the resulting Betti functions on a fixed threshold grid gives a
//! fixed-length integer feature vector. A gradient-boosted tree classifier
//! with gain-based feature selection consumes those vectors.

pub mod filtration;
pub mod image_io;
pub mod mlkit;
pub mod persistence;
pub mod pipeline;
pub mod synthetic;
pub mod vectorize;
pub mod verification;
