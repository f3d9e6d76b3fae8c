//! Convex hulls of quadratically constrained sets through nonnegative
//! aggregations of the defining constraints.

pub mod error;
pub mod linalg;
pub mod qform;
pub mod certificates;
pub mod engine;
pub mod fm;
pub mod hhc;
pub mod oracle;
pub mod special;
pub mod symlin;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use qform::{AggregationWeights, HomogenizedForm, QuadraticFunction, QuadraticSystem, SphereStructure};
pub use symlin::{Inertia, Tolerances};
