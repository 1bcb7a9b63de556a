//! Coreness estimate for a single guess `H`.

use std::collections::HashMap;

use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{cast, screen, to_usize, EstimatorConfig, InstanceMetrics, Role};
use crate::balanced::{Balanced, Rejection};
use crate::error::Result;
use crate::orientation::VertexId;
use crate::rng::{stream, Purpose};

#[derive(Clone, Debug, PartialEq)]
pub enum CorenessRegime {
    /// Every edge is stored `k` times.
    Duplicate { k: usize },
    /// Each edge is kept with probability `p`.
    Sample { p: f64 },
}

#[derive(Clone, Debug)]
pub struct CorenessFixed<T> {
    h: T,
    b: usize,
    level: usize,
    n: usize,
    regime: CorenessRegime,
    inner: Balanced,
    /// Sampling decision of every live edge (sampling regime only).
    membership: HashMap<(VertexId, VertexId), bool>,
    rng: ChaCha8Rng,
}

impl<T: Float> CorenessFixed<T> {
    pub fn new(cfg: &EstimatorConfig<T>, h: T, level: usize) -> Result<Self> {
        cfg.validate()?;
        let b = cfg.b();
        let bt: T = cast(b as f64);
        let (regime, inner) = if h <= bt {
            let k = to_usize((bt / h).ceil()).max(1);
            let kt: T = cast(k as f64);
            let cap = to_usize(((T::one() + cfg.inner_epsilon) * h * kt).ceil()).max(1);
            (CorenessRegime::Duplicate { k }, Balanced::with_cap(cfg.n, cap, k)?)
        } else {
            let p = (bt / h).to_f64().expect("finite");
            (CorenessRegime::Sample { p }, Balanced::new(cfg.n, b, 1)?)
        };
        Ok(CorenessFixed {
            h,
            b,
            level,
            n: cfg.n,
            regime,
            inner,
            membership: HashMap::new(),
            rng: stream(cfg.seed, level as u64, Purpose::Sample),
        })
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn regime(&self) -> &CorenessRegime {
        &self.regime
    }

    pub fn inner(&self) -> &Balanced {
        &self.inner
    }

    #[doc(hidden)]
    pub fn inner_mut(&mut self) -> &mut Balanced {
        &mut self.inner
    }

    fn is_live(&self, u: VertexId, v: VertexId) -> bool {
        match self.regime {
            CorenessRegime::Duplicate { .. } => self.inner.is_live(u, v),
            CorenessRegime::Sample { .. } => self.membership.contains_key(&(u, v)),
        }
    }

    /// Edges of the sampled graph (sampling regime) or of the input graph.
    pub fn sampled_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut e: Vec<(VertexId, VertexId)> = self
            .inner
            .store()
            .edges()
            .iter()
            .filter(|e| e.copy == 0)
            .map(|e| (e.tail.min(e.head), e.tail.max(e.head)))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn insert_batch(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(Vec<Rejection>, InstanceMetrics)> {
        let (ok, rejected) = screen(self.n, edges, true, |u, v| self.is_live(u, v));
        let chosen = match self.regime {
            CorenessRegime::Duplicate { .. } => ok,
            CorenessRegime::Sample { p } => {
                let mut chosen = Vec::new();
                for e in ok {
                    let keep = self.rng.gen_bool(p);
                    self.membership.insert(e, keep);
                    if keep {
                        chosen.push(e);
                    }
                }
                chosen
            }
        };
        let inner_rej = self.inner.insert_batch(&chosen)?;
        debug_assert!(inner_rej.is_empty());
        self.inner.drain_change_log();
        Ok((rejected, self.metrics()))
    }

    pub fn delete_batch(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(Vec<Rejection>, InstanceMetrics)> {
        let (ok, rejected) = screen(self.n, edges, false, |u, v| self.is_live(u, v));
        let chosen = match self.regime {
            CorenessRegime::Duplicate { .. } => ok,
            CorenessRegime::Sample { .. } => ok
                .into_iter()
                .filter(|e| self.membership.remove(e).expect("screened live edge"))
                .collect(),
        };
        let inner_rej = self.inner.delete_batch(&chosen)?;
        debug_assert!(inner_rej.is_empty());
        self.inner.drain_change_log();
        Ok((rejected, self.metrics()))
    }

    fn metrics(&self) -> InstanceMetrics {
        InstanceMetrics {
            level: self.level,
            role: Role::Coreness,
            bucket: None,
            cap: self.inner.cap(),
            counters: self.inner.counters().clone(),
        }
    }

    /// The fixed-H estimate `f(v)`.
    pub fn estimate(&self, v: VertexId) -> T {
        let d: T = cast(self.inner.out_degree(v) as f64);
        match self.regime {
            CorenessRegime::Duplicate { k } => d / cast(k as f64),
            CorenessRegime::Sample { .. } => self.h / cast(self.b as f64) * d,
        }
    }
}
