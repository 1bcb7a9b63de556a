//! Consumers of a low out-degree orientation: maximal matching, explicit
//! palette coloring and implicit pseudoforest coloring.

mod explicit;
mod implicit;
mod matching;

pub use explicit::ExplicitColoring;
pub use implicit::{linial_field, ImplicitColoring, PseudoforestView, IMPLICIT_BETA};
pub use matching::Matching;

use crate::balanced::Rejection;
use crate::error::{Error, Result};
use crate::estimators::{DensityFixed, EstimatorConfig, ExposedOrientation, InstanceMetrics, UpdateBatch, Verdict};
use crate::orientation::ChangeLog;

/// `H = 1.1 * rho_max`.
pub const H_OVER_RHO_MAX: f64 = 1.1;

/// Suggested estimator epsilon for application instances.
pub const APP_EPSILON: f64 = 0.05;

/// What one application batch cost.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AppMetrics {
    pub instances: Vec<InstanceMetrics>,
    pub rejected: Vec<Rejection>,
    /// Orientation changes reported for the batch.
    pub log_size: usize,
    /// Repair or recolor rounds.
    pub rounds: usize,
    /// Vertices touched by the application's own update.
    pub touched: usize,
}

/// A density test at `H = 1.1 * rho_max` whose low side is the orientation
/// every application reads.
#[derive(Clone, Debug)]
pub struct LowOutDegree {
    inner: DensityFixed<f64>,
    rho_max: f64,
}

pub(crate) struct Applied {
    pub log: ChangeLog,
    pub rejected: Vec<Rejection>,
    pub instances: Vec<InstanceMetrics>,
    pub verdict: Verdict,
}

impl LowOutDegree {
    pub fn new(cfg: &EstimatorConfig<f64>, rho_max: f64) -> Result<Self> {
        if !(rho_max.is_finite() && rho_max > 0.0) {
            return Err(Error::Parameter(format!("rho_max must be positive, got {rho_max}")));
        }
        Ok(LowOutDegree {
            inner: DensityFixed::new(cfg, H_OVER_RHO_MAX * rho_max, 0)?,
            rho_max,
        })
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn orientation(&self) -> &ExposedOrientation {
        self.inner.exposed()
    }

    pub fn density(&self) -> &DensityFixed<f64> {
        &self.inner
    }

    pub fn verdict(&self) -> Verdict {
        self.inner.verdict()
    }

    pub(crate) fn apply(&mut self, batch: &UpdateBatch) -> Result<Applied> {
        let (rejected, instances) = match batch {
            UpdateBatch::Insert(e) => self.inner.insert_batch(e)?,
            UpdateBatch::Delete(e) => self.inner.delete_batch(e)?,
        };
        Ok(Applied {
            log: self.inner.drain_exposed_log(),
            rejected,
            instances,
            verdict: self.inner.verdict(),
        })
    }

    pub(crate) fn contract(&self, verdict: Verdict) -> Result<()> {
        match verdict {
            Verdict::Low => Ok(()),
            Verdict::High => Err(Error::DensityContract { rho_max: self.rho_max }),
        }
    }
}

pub(crate) fn log_size(log: &ChangeLog) -> usize {
    log.inserted.len() + log.deleted.len() + log.reversed.len()
}
