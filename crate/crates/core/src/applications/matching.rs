//! Maximal matching over a low out-degree orientation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{log_size, AppMetrics, LowOutDegree};
use crate::error::Result;
use crate::estimators::{EstimatorConfig, UpdateBatch};
use crate::orientation::{ChangeLog, VertexId};

#[derive(Clone, Debug)]
pub struct Matching {
    orient: LowOutDegree,
    mate: HashMap<VertexId, VertexId>,
    /// Unmatched in-neighbors of each vertex.
    incoming: HashMap<VertexId, BTreeSet<VertexId>>,
}

impl Matching {
    pub fn new(cfg: &EstimatorConfig<f64>, rho_max: f64) -> Result<Self> {
        Ok(Matching {
            orient: LowOutDegree::new(cfg, rho_max)?,
            mate: HashMap::new(),
            incoming: HashMap::new(),
        })
    }

    pub fn orientation(&self) -> &LowOutDegree {
        &self.orient
    }

    pub fn mate(&self, v: VertexId) -> Option<VertexId> {
        self.mate.get(&v).copied()
    }

    pub fn is_used(&self, v: VertexId) -> bool {
        self.mate.contains_key(&v)
    }

    /// Matched edges as `(lo, hi)`, sorted.
    pub fn matched_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut e: Vec<_> = self.mate.iter().filter(|(a, b)| a < b).map(|(&a, &b)| (a, b)).collect();
        e.sort_unstable();
        e
    }

    pub fn size(&self) -> usize {
        self.mate.len() / 2
    }

    /// Unmatched in-neighbors of `v` under the current orientation.
    pub fn incoming_unmatched(&self, v: VertexId) -> Vec<VertexId> {
        self.incoming.get(&v).map_or_else(Vec::new, |s| s.iter().copied().collect())
    }

    /// Applies the batch, then repairs until no free vertex has a free
    /// neighbor. A high density verdict is reported after the repair.
    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<AppMetrics> {
        let applied = self.orient.apply(batch)?;
        self.sync_incoming(&applied.log);
        let mut seeds = BTreeSet::new();
        match batch {
            UpdateBatch::Insert(_) => {
                for e in applied.log.inserted.values() {
                    seeds.insert(e.tail);
                    seeds.insert(e.head);
                }
            }
            UpdateBatch::Delete(_) => {
                for key in &applied.log.deleted {
                    if self.mate.get(&key.lo) == Some(&key.hi) {
                        self.unmatch(key.lo);
                        seeds.insert(key.lo);
                        seeds.insert(key.hi);
                    }
                }
            }
        }
        let touched = seeds.len();
        let rounds = self.repair(seeds);
        self.orient.contract(applied.verdict)?;
        Ok(AppMetrics {
            log_size: log_size(&applied.log),
            instances: applied.instances,
            rejected: applied.rejected,
            rounds,
            touched,
        })
    }

    fn sync_incoming(&mut self, log: &ChangeLog) {
        let keys = log
            .deleted
            .iter()
            .chain(log.reversed.keys())
            .chain(log.inserted.keys());
        for key in keys {
            let (lo, hi) = (key.lo, key.hi);
            self.drop_incoming(lo, hi);
            self.drop_incoming(hi, lo);
            if let Some(t) = self.orient.orientation().tail(lo, hi) {
                let head = if t == lo { hi } else { lo };
                if !self.is_used(t) {
                    self.incoming.entry(head).or_default().insert(t);
                }
            }
        }
    }

    fn drop_incoming(&mut self, at: VertexId, who: VertexId) {
        if let Some(s) = self.incoming.get_mut(&at) {
            s.remove(&who);
            if s.is_empty() {
                self.incoming.remove(&at);
            }
        }
    }

    fn set_used(&mut self, v: VertexId, used: bool) {
        for (_, w) in self.orient.orientation().out_edges(v) {
            if used {
                self.drop_incoming(w, v);
            } else {
                self.incoming.entry(w).or_default().insert(v);
            }
        }
    }

    fn do_match(&mut self, a: VertexId, b: VertexId) {
        self.mate.insert(a, b);
        self.mate.insert(b, a);
        self.set_used(a, true);
        self.set_used(b, true);
    }

    fn unmatch(&mut self, a: VertexId) {
        if let Some(b) = self.mate.remove(&a) {
            self.mate.remove(&b);
            self.set_used(a, false);
            self.set_used(b, false);
        }
    }

    fn free_neighbor(&self, v: VertexId) -> Option<VertexId> {
        let out = self
            .orient
            .orientation()
            .out_edges(v)
            .into_iter()
            .map(|(_, w)| w)
            .filter(|w| !self.is_used(*w))
            .min();
        let inc = self.incoming.get(&v).and_then(|s| s.iter().next().copied());
        match (out, inc) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Propose/accept rounds. Every free seed proposes to its smallest free
    /// neighbor; every target accepts its smallest proposer; accepted pairs
    /// are matched in key order while both ends are still free.
    fn repair(&mut self, mut seeds: BTreeSet<VertexId>) -> usize {
        let mut rounds = 0;
        loop {
            let mut offers: BTreeMap<VertexId, VertexId> = BTreeMap::new();
            let mut next = BTreeSet::new();
            for &v in &seeds {
                if self.is_used(v) {
                    continue;
                }
                if let Some(w) = self.free_neighbor(v) {
                    next.insert(v);
                    let best = offers.entry(w).or_insert(v);
                    *best = (*best).min(v);
                }
            }
            if offers.is_empty() {
                return rounds;
            }
            rounds += 1;
            let mut pairs: Vec<(VertexId, VertexId)> =
                offers.into_iter().map(|(w, v)| (v.min(w), v.max(w))).collect();
            pairs.sort_unstable();
            for (a, b) in pairs {
                if !self.is_used(a) && !self.is_used(b) {
                    self.do_match(a, b);
                }
            }
            seeds = next;
        }
    }

    /// Full scan: validity, maximality and the incoming index.
    pub fn check(&self) -> std::result::Result<(), String> {
        for (&a, &b) in &self.mate {
            if self.mate.get(&b) != Some(&a) {
                return Err(format!("mate map not symmetric at {a}"));
            }
            if a == b {
                return Err(format!("vertex {a} matched to itself"));
            }
            if self.orient.orientation().tail(a, b).is_none() {
                return Err(format!("matched edge ({a}, {b}) is not live"));
            }
        }
        let mut expected: HashMap<VertexId, BTreeSet<VertexId>> = HashMap::new();
        for (t, h) in self.orient.orientation().edges() {
            if !self.is_used(t) && !self.is_used(h) {
                return Err(format!("edge ({t}, {h}) has both endpoints free"));
            }
            if !self.is_used(t) {
                expected.entry(h).or_default().insert(t);
            }
        }
        if expected != self.incoming {
            return Err("incoming index out of sync with orientation".into());
        }
        Ok(())
    }
}
