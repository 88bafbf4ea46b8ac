//! Sliced optimal transport dataset distance.
//!
//! Each labeled data point `(x, y)` is mapped to a scalar by combining a
//! random feature projection of `x` with scaled moments of the projected
//! class-conditional distribution of `y`. The distance between two labeled
//! datasets is the Monte Carlo average, over random projections, of the
//! closed-form one-dimensional Wasserstein distance between the projected
//! values.
//!
//! ```
//! use sotdd::{sotdd, Dataset, SotddConfig};
//!
//! let a = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], vec![0, 0, 1, 1], 1, "a").unwrap();
//! let b = Dataset::new(vec![0.5, 1.5, 2.5, 3.5], vec![0, 1, 1, 1], 1, "b").unwrap();
//! let cfg = SotddConfig { num_projections: 200, seed: 7, ..Default::default() };
//! let est = sotdd(&a, &b, &cfg).unwrap();
//! assert!(est.value > 0.0);
//! assert_eq!(sotdd(&a, &a, &cfg).unwrap().value, 0.0);
//! ```
//!
//! Desk-scale reference distances (exact OT, exact and Gaussian OTDD,
//! sliced Wasserstein) live in [`baselines`].

pub mod baselines;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod harness;
pub mod io;
pub mod numeric;
pub mod projection;
pub mod sampling;
pub mod stats;
pub mod wasserstein1d;

pub use dataset::{build_class_index, ClassIndex, ClassView, Dataset};
pub use engine::{
    error_decay_profile, per_projection_pp, project_dataset, sotdd, sotdd_from_sketches, DecayPoint, DistanceEstimate,
    ProjectionSketch, ProjectorChoice, SotddConfig,
};
pub use error::{Error, Result};
pub use harness::{Baseline, CorrelateSummary};
pub use projection::{FeatureProjector, ProjectorKind};
pub use sampling::{MomentOrderLaw, ProjectionParams, SeedSchedule};
