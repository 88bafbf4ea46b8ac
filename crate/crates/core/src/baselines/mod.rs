//! Reference distances used to validate and calibrate the sliced estimator.

pub mod exact;
pub mod gaussian;
pub mod otdd;
pub mod sliced;

pub use exact::{exact_ot, CostMatrix, OtSolution, TransportPlan};
pub use gaussian::{bures_wasserstein, label_distance_gaussian, GaussianSummary};
pub use otdd::{feature_wasserstein, label_distance_exact, otdd, LabelMode};
pub use sliced::sliced_wasserstein;
