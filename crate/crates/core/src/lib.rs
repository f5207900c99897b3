//! Segment-aware test case prioritization for UI regression suites.
//!
//! Test cases are described by the UI objects they touch (XPath, tag and the
//! page segment enclosing the object). Orderings are searched with NSGA-II or
//! AGE-MOEA over four APFD-style coverage objectives: segments, sibling
//! objects, object types and objects. Baseline prioritizers, fault-detection
//! metrics and a seeded benchmark harness are included for comparison.

pub mod baselines;
pub mod bench;
pub mod bitset;
pub mod coverage;
pub mod fitness;
pub mod metrics;
pub mod moea;
pub mod ordering;
pub mod prioritizer;
pub mod rng;
pub mod scalar;
pub mod xpath;

pub use coverage::{CoverageIndex, EntityKind, TestCase, TestObject, TestSuite};
pub use ordering::Ordering;
pub use scalar::Scalar;

/// Fitness vector over `f64`, the default precision.
pub type Fitness = fitness::FitnessVector<f64>;
/// Fitness vector over `f32`.
pub type Fitness32 = fitness::FitnessVector<f32>;
pub type Individual = moea::Individual<f64>;
pub type ParetoFront = moea::ParetoFront<f64>;
pub type Individual32 = moea::Individual<f32>;
pub type ParetoFront32 = moea::ParetoFront<f32>;
