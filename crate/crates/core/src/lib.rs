mod ostree;

pub mod applications;
pub mod balanced;
pub mod error;
pub mod estimators;
pub mod oracle;
pub mod orientation;
pub mod rng;

pub use balanced::{Balanced, PhaseCounters, Rejection};
pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, MultiLevel, Tracking, UpdateBatch, Verdict};
pub use orientation::{EdgeKey, EdgeUid, OrientationStore, VertexId};

/// Estimator types over `f64`.
pub type Config = EstimatorConfig<f64>;
pub type Estimator = MultiLevel<f64>;
