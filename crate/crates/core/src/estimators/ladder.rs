//! Geometric ladder of fixed-H estimators, `H_i = (1 + eps)^i`.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::Float;
use rayon::prelude::*;

use super::{
    cast, screen, CorenessFixed, DensityFixed, EstimatorConfig, InstanceMetrics, UpdateBatch, Verdict,
};
use crate::balanced::{Balanced, PhaseCounters, Rejection};
use crate::error::{Error, Result};
use crate::orientation::VertexId;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Tracking {
    Coreness,
    Density,
    Both,
}

impl Tracking {
    fn coreness(self) -> bool {
        matches!(self, Tracking::Coreness | Tracking::Both)
    }

    fn density(self) -> bool {
        matches!(self, Tracking::Density | Tracking::Both)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate<T> {
    pub rho: T,
    pub lambda: T,
    /// Index of the first level with a low verdict.
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport<T> {
    pub coreness: BTreeMap<VertexId, T>,
    pub density: Option<DensityEstimate<T>>,
    pub verdicts: Vec<Verdict>,
}

/// Counters of one batch across all instances of the ladder.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsRecord {
    pub instances: Vec<InstanceMetrics>,
    pub rejected: Vec<Rejection>,
}

impl MetricsRecord {
    pub fn aggregate(&self) -> PhaseCounters {
        let mut agg = PhaseCounters::default();
        for m in &self.instances {
            agg.merge(&m.counters);
        }
        agg
    }

    pub fn within_bounds(&self) -> bool {
        self.instances.iter().all(|m| m.within_bounds())
    }
}

#[derive(Clone, Debug)]
pub struct MultiLevel<T> {
    cfg: EstimatorConfig<T>,
    tracking: Tracking,
    hs: Vec<T>,
    core: Vec<CorenessFixed<T>>,
    dens: Vec<DensityFixed<T>>,
    live: HashSet<(VertexId, VertexId)>,
    degree: HashMap<VertexId, usize>,
}

impl<T: Float + Send + Sync> MultiLevel<T> {
    pub fn new(cfg: EstimatorConfig<T>, tracking: Tracking) -> Result<Self> {
        cfg.validate()?;
        let top = cfg.top_level();
        let base = T::one() + cfg.epsilon;
        let hs: Vec<T> = (0..=top).map(|i| base.powi(i as i32)).collect();
        let mut core = Vec::new();
        let mut dens = Vec::new();
        for (i, &h) in hs.iter().enumerate() {
            if tracking.coreness() {
                core.push(CorenessFixed::new(&cfg, h, i)?);
            }
            if tracking.density() {
                dens.push(DensityFixed::new(&cfg, h, i)?);
            }
        }
        Ok(MultiLevel {
            cfg,
            tracking,
            hs,
            core,
            dens,
            live: HashSet::new(),
            degree: HashMap::new(),
        })
    }

    pub fn config(&self) -> &EstimatorConfig<T> {
        &self.cfg
    }

    pub fn tracking(&self) -> Tracking {
        self.tracking
    }

    pub fn level_h(&self) -> &[T] {
        &self.hs
    }

    pub fn coreness_levels(&self) -> &[CorenessFixed<T>] {
        &self.core
    }

    pub fn density_levels(&self) -> &[DensityFixed<T>] {
        &self.dens
    }

    #[doc(hidden)]
    pub fn coreness_levels_mut(&mut self) -> &mut [CorenessFixed<T>] {
        &mut self.core
    }

    pub fn edge_count(&self) -> usize {
        self.live.len()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.degree.get(&v).copied().unwrap_or(0)
    }

    /// Current live edges, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut e: Vec<_> = self.live.iter().copied().collect();
        e.sort_unstable();
        e
    }

    /// Every balanced instance in the ladder with a short description.
    pub fn instances(&self) -> Vec<(String, &Balanced)> {
        let mut out = Vec::new();
        for (i, c) in self.core.iter().enumerate() {
            out.push((format!("coreness level {i}"), c.inner()));
        }
        for (i, d) in self.dens.iter().enumerate() {
            for (b, inst) in d.instances() {
                let name = match b {
                    Some(b) => format!("density level {i} bucket {b}"),
                    None => format!("density level {i}"),
                };
                out.push((name, inst));
            }
        }
        out
    }

    /// Routes one batch to every level.
    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<MetricsRecord> {
        let insert = batch.is_insert();
        let (ok, rejected) = screen(self.cfg.n, batch.edges(), insert, |u, v| {
            self.live.contains(&(u, v))
        });
        for &(u, v) in &ok {
            if insert {
                self.live.insert((u, v));
                *self.degree.entry(u).or_default() += 1;
                *self.degree.entry(v).or_default() += 1;
            } else {
                self.live.remove(&(u, v));
                for w in [u, v] {
                    let d = self.degree.get_mut(&w).expect("degree of live endpoint");
                    *d -= 1;
                    if *d == 0 {
                        self.degree.remove(&w);
                    }
                }
            }
        }
        let core: Vec<InstanceMetrics> = self
            .core
            .par_iter_mut()
            .map(|c| {
                if insert {
                    c.insert_batch(&ok).map(|(_, m)| m)
                } else {
                    c.delete_batch(&ok).map(|(_, m)| m)
                }
            })
            .collect::<Result<_>>()?;
        let dens: Vec<Vec<InstanceMetrics>> = self
            .dens
            .par_iter_mut()
            .map(|d| {
                if insert {
                    d.insert_batch(&ok).map(|(_, m)| m)
                } else {
                    d.delete_batch(&ok).map(|(_, m)| m)
                }
            })
            .collect::<Result<_>>()?;
        let mut instances = core;
        instances.extend(dens.into_iter().flatten());
        Ok(MetricsRecord { instances, rejected })
    }

    /// `(1 + eps)^k` for the first level `k` whose estimate falls below its
    /// `H`; 0 for isolated vertices and 1 when `k = 0`.
    pub fn coreness(&self, v: VertexId) -> T {
        if self.degree(v) == 0 || self.core.is_empty() {
            return T::zero();
        }
        for (k, c) in self.core.iter().enumerate() {
            if c.estimate(v) < c.h() {
                return if k == 0 { T::one() } else { c.h() };
            }
        }
        // Above the ladder: report the top rung.
        self.core.last().map(|c| c.h()).unwrap_or_else(T::zero)
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.dens.iter().map(|d| d.verdict()).collect()
    }

    pub fn low_level(&self) -> Result<usize> {
        self.dens
            .iter()
            .position(|d| d.verdict() == Verdict::Low)
            .ok_or(Error::LadderExhausted)
    }

    pub fn density(&self) -> Result<DensityEstimate<T>> {
        let level = self.low_level()?;
        let rho = self.dens[level].h();
        Ok(DensityEstimate {
            rho,
            lambda: rho * cast(2.0),
            level,
        })
    }

    /// The low out-degree orientation exposed by the first low level.
    pub fn orientation(&self) -> Result<&DensityFixed<T>> {
        Ok(&self.dens[self.low_level()?])
    }

    pub fn report(&self, vertices: impl IntoIterator<Item = VertexId>) -> EstimateReport<T> {
        EstimateReport {
            coreness: vertices.into_iter().map(|v| (v, self.coreness(v))).collect(),
            density: if self.tracking.density() {
                self.density().ok()
            } else {
                None
            },
            verdicts: self.verdicts(),
        }
    }
}
