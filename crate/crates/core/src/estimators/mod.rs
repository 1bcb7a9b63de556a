//! Coreness, density and arboricity estimators built on balanced orientations.

mod coreness;
mod density;
mod ladder;

pub use coreness::{CorenessFixed, CorenessRegime};
pub use density::{DensityFixed, DensityRegime, ExposedOrientation, Verdict};
pub use ladder::{DensityEstimate, EstimateReport, MetricsRecord, MultiLevel, Tracking};

use std::collections::BTreeSet;

use num_traits::Float;

use crate::balanced::{PhaseCounters, Rejection};
use crate::error::{Error, Result};
use crate::orientation::{EdgeKey, VertexId};

/// Desk-scale default for the threshold constant; see the README for the
/// accuracy/runtime trade-off.
pub const DEFAULT_C_B: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig<T> {
    pub epsilon: T,
    /// Accuracy used inside each fixed-H structure.
    pub inner_epsilon: T,
    pub c_b: T,
    pub n: usize,
    pub seed: u64,
    /// Overrides the number of ladder levels above level 0.
    pub max_level: Option<usize>,
}

impl<T: Float> EstimatorConfig<T> {
    pub fn new(n: usize, epsilon: T) -> Result<Self> {
        let cfg = EstimatorConfig {
            epsilon,
            inner_epsilon: epsilon,
            c_b: cast(DEFAULT_C_B),
            n,
            seed: 0,
            max_level: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_c_b(mut self, c_b: T) -> Self {
        self.c_b = c_b;
        self
    }

    pub fn with_inner_epsilon(mut self, e: T) -> Self {
        self.inner_epsilon = e;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_level(mut self, level: usize) -> Self {
        self.max_level = Some(level);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let half: T = cast(0.5);
        if !(self.epsilon > T::zero() && self.epsilon <= half) {
            return Err(Error::Parameter("epsilon must lie in (0, 0.5]".into()));
        }
        if !(self.inner_epsilon > T::zero() && self.inner_epsilon <= half) {
            return Err(Error::Parameter("inner epsilon must lie in (0, 0.5]".into()));
        }
        if !(self.c_b > T::zero()) || !self.c_b.is_finite() {
            return Err(Error::Parameter("c_B must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::Parameter("vertex universe must be non-empty".into()));
        }
        Ok(())
    }

    pub fn ln_n(&self) -> T {
        cast::<T>(self.n as f64).ln()
    }

    /// The regime threshold `ceil(c_B ln n / eps^2)`, at least 1.
    pub fn b(&self) -> usize {
        let raw = (self.c_b * self.ln_n() / (self.epsilon * self.epsilon)).ceil();
        to_usize(raw).max(1)
    }

    /// Highest ladder index `L = ceil(log_{1+eps} n)` unless overridden.
    pub fn top_level(&self) -> usize {
        self.max_level.unwrap_or_else(|| {
            if self.n <= 1 {
                0
            } else {
                to_usize((self.ln_n() / self.epsilon.ln_1p()).ceil())
            }
        })
    }
}

/// A batch of undirected edge updates, applied atomically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UpdateBatch {
    Insert(Vec<(VertexId, VertexId)>),
    Delete(Vec<(VertexId, VertexId)>),
}

impl UpdateBatch {
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        match self {
            UpdateBatch::Insert(e) | UpdateBatch::Delete(e) => e,
        }
    }

    pub fn is_insert(&self) -> bool {
        matches!(self, UpdateBatch::Insert(_))
    }

    pub fn len(&self) -> usize {
        self.edges().len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges().is_empty()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Coreness,
    Density,
}

/// Counters of one balanced instance for the last batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceMetrics {
    pub level: usize,
    pub role: Role,
    pub bucket: Option<usize>,
    pub cap: usize,
    pub counters: PhaseCounters,
}

impl InstanceMetrics {
    /// Whether the counters respect the combinatorial ceilings.
    pub fn within_bounds(&self) -> bool {
        let c = &self.counters;
        c.bundle_iterations <= crate::balanced::bundle_iteration_bound(self.cap)
            && c.pushed_bundles <= self.cap
            && c.max_phases() <= crate::balanced::phase_ceiling(self.cap)
            && c.repeat_flips == 0
    }
}

pub(crate) fn cast<T: Float>(x: f64) -> T {
    T::from(x).expect("representable constant")
}

pub(crate) fn to_usize<T: Float>(x: T) -> usize {
    x.to_usize().unwrap_or(usize::MAX)
}

/// Splits a batch into valid edges (normalized `lo < hi`) and rejections.
pub(crate) fn screen(
    n: usize,
    edges: &[(VertexId, VertexId)],
    insert: bool,
    is_live: impl Fn(VertexId, VertexId) -> bool,
) -> (Vec<(VertexId, VertexId)>, Vec<Rejection>) {
    let mut seen = BTreeSet::new();
    let mut ok = Vec::new();
    let mut rejected = Vec::new();
    for &(u, v) in edges {
        let key = EdgeKey::new(u, v, 0);
        let err = if u >= n || v >= n {
            Some(Error::VertexOutOfRange { vertex: u.max(v), n })
        } else if u == v {
            Some(Error::SelfLoop(u))
        } else if !seen.insert((key.lo, key.hi)) {
            Some(if insert {
                Error::DuplicateEdge(key)
            } else {
                Error::MissingEdge(key)
            })
        } else {
            match (insert, is_live(key.lo, key.hi)) {
                (true, true) => Some(Error::DuplicateEdge(key)),
                (false, false) => Some(Error::MissingEdge(key)),
                _ => None,
            }
        };
        match err {
            Some(error) => rejected.push(Rejection { u, v, error }),
            None => ok.push((key.lo, key.hi)),
        }
    }
    (ok, rejected)
}
