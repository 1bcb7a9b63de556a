//! Density test for a single guess `H`, with a low out-degree orientation on
//! the low side.

use std::collections::{BTreeMap, HashMap};

use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{cast, screen, to_usize, EstimatorConfig, InstanceMetrics, Role};
use crate::balanced::{Balanced, Rejection};
use crate::error::Result;
use crate::orientation::{ChangeLog, DirectedEdge, EdgeKey, EdgeUid, VertexId};
use crate::rng::{stream, Purpose};

#[derive(Clone, Debug, PartialEq)]
pub enum DensityRegime {
    /// One instance over `k` copies of every edge (`k` odd).
    Duplicate { k: usize },
    /// `t` instances, each holding a random share of the edges.
    Buckets { t: usize, h_rounded: usize },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Density is at most about `H`; the exposed orientation is low.
    Low,
    /// Density is at least about `H`.
    High,
}

/// A plain orientation of user edges with a change log. Each edge keeps the
/// index it was given on insertion; out-edges are listed in index order.
#[derive(Clone, Debug, Default)]
pub struct ExposedOrientation {
    tail_of: HashMap<(VertexId, VertexId), (VertexId, u64)>,
    out: HashMap<VertexId, BTreeMap<u64, VertexId>>,
    log: ChangeLog,
}

impl ExposedOrientation {
    pub fn tail(&self, u: VertexId, v: VertexId) -> Option<VertexId> {
        self.tail_of.get(&(u.min(v), u.max(v))).map(|&(t, _)| t)
    }

    /// `(index, head)` pairs of `v`'s out-edges, by increasing index.
    pub fn out_edges(&self, v: VertexId) -> Vec<(u64, VertexId)> {
        self.out
            .get(&v)
            .map_or_else(Vec::new, |m| m.iter().map(|(&i, &h)| (i, h)).collect())
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out.get(&v).map_or(0, |m| m.len())
    }

    /// Head of `v`'s `j`-th out-edge (1-based, index order).
    pub fn kth_out(&self, v: VertexId, j: usize) -> Option<VertexId> {
        if j == 0 {
            return None;
        }
        self.out.get(&v).and_then(|m| m.values().nth(j - 1).copied())
    }

    /// Vertices with at least one out-edge.
    pub fn tails(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.out.keys().copied()
    }

    pub fn max_out_degree(&self) -> usize {
        self.out.values().map(|m| m.len()).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.tail_of.len()
    }

    /// All edges as `(tail, head)`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut e: Vec<(VertexId, VertexId)> = self
            .tail_of
            .iter()
            .map(|(&(a, b), &(t, _))| if t == a { (a, b) } else { (b, a) })
            .collect();
        e.sort_unstable();
        e
    }

    pub fn drain_change_log(&mut self) -> ChangeLog {
        std::mem::take(&mut self.log)
    }

    fn set(&mut self, lo: VertexId, hi: VertexId, tail: VertexId, index: u64) {
        let head = if tail == lo { hi } else { lo };
        let key = EdgeKey::new(lo, hi, 0);
        match self.tail_of.insert((lo, hi), (tail, index)) {
            Some((old, _)) if old == tail => return,
            Some((old, _)) => {
                let m = self.out.get_mut(&old).expect("out map");
                m.remove(&index);
                if m.is_empty() {
                    self.out.remove(&old);
                }
                let mut delta = ChangeLog::default();
                delta.reversed.insert(
                    key,
                    crate::orientation::Reversal {
                        from_tail: old,
                        to_tail: tail,
                    },
                );
                self.log.absorb(delta);
            }
            None => {
                let mut delta = ChangeLog::default();
                delta.inserted.insert(
                    key,
                    DirectedEdge {
                        tail,
                        head,
                        copy: 0,
                        uid: EdgeUid(index),
                    },
                );
                self.log.absorb(delta);
            }
        }
        self.out.entry(tail).or_default().insert(index, head);
    }

    #[cfg(test)]
    pub(crate) fn set_for_test(&mut self, tail: VertexId, head: VertexId, index: u64) {
        self.set(tail.min(head), tail.max(head), tail, index);
    }

    fn remove(&mut self, lo: VertexId, hi: VertexId) {
        if let Some((tail, index)) = self.tail_of.remove(&(lo, hi)) {
            let m = self.out.get_mut(&tail).expect("out map");
            m.remove(&index);
            if m.is_empty() {
                self.out.remove(&tail);
            }
            let mut delta = ChangeLog::default();
            delta.deleted.insert(EdgeKey::new(lo, hi, 0));
            self.log.absorb(delta);
        }
    }
}

#[derive(Clone, Debug)]
pub struct DensityFixed<T> {
    h: T,
    b: usize,
    level: usize,
    n: usize,
    regime: DensityRegime,
    dup: Option<Balanced>,
    buckets: HashMap<usize, Balanced>,
    assign: HashMap<(VertexId, VertexId), usize>,
    /// Copies oriented from the lower-id to the higher-id endpoint.
    majority: HashMap<(VertexId, VertexId), usize>,
    index: HashMap<(VertexId, VertexId), u64>,
    next_index: u64,
    exposed: ExposedOrientation,
    rng: ChaCha8Rng,
}

impl<T: Float> DensityFixed<T> {
    pub fn new(cfg: &EstimatorConfig<T>, h: T, level: usize) -> Result<Self> {
        cfg.validate()?;
        let b = cfg.b();
        let bt: T = cast(b as f64);
        let e = cfg.inner_epsilon;
        let (regime, dup) = if h < bt / cfg.epsilon {
            let mut k = to_usize((bt / (e * h)).ceil()).max(1);
            if k % 2 == 0 {
                k += 1;
            }
            let cap = to_usize((h * cast(k as f64)).ceil()).max(1);
            (DensityRegime::Duplicate { k }, Some(Balanced::with_cap(cfg.n, cap, k)?))
        } else {
            let t = to_usize((h / bt).ceil()).max(1);
            (DensityRegime::Buckets { t, h_rounded: t * b }, None)
        };
        Ok(DensityFixed {
            h,
            b,
            level,
            n: cfg.n,
            regime,
            dup,
            buckets: HashMap::new(),
            assign: HashMap::new(),
            majority: HashMap::new(),
            index: HashMap::new(),
            next_index: 0,
            exposed: ExposedOrientation::default(),
            rng: stream(cfg.seed, level as u64, Purpose::Bucket),
        })
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn regime(&self) -> &DensityRegime {
        &self.regime
    }

    pub fn exposed(&self) -> &ExposedOrientation {
        &self.exposed
    }

    pub fn drain_exposed_log(&mut self) -> ChangeLog {
        self.exposed.drain_change_log()
    }

    /// Copies of `(u, v)` oriented toward the higher-id endpoint.
    pub fn majority_count(&self, u: VertexId, v: VertexId) -> Option<usize> {
        self.majority.get(&(u.min(v), u.max(v))).copied()
    }

    /// Every balanced instance that has been created, with its bucket index.
    pub fn instances(&self) -> Vec<(Option<usize>, &Balanced)> {
        match &self.dup {
            Some(d) => vec![(None, d)],
            None => {
                let mut v: Vec<(Option<usize>, &Balanced)> =
                    self.buckets.iter().map(|(&i, b)| (Some(i), b)).collect();
                v.sort_by_key(|(i, _)| *i);
                v
            }
        }
    }

    #[doc(hidden)]
    pub fn duplicate_instance_mut(&mut self) -> Option<&mut Balanced> {
        self.dup.as_mut()
    }

    /// Edge sets held by each bucket (bucket regime), for inspection.
    pub fn bucket_edges(&self) -> BTreeMap<usize, Vec<(VertexId, VertexId)>> {
        let mut m: BTreeMap<usize, Vec<(VertexId, VertexId)>> = BTreeMap::new();
        for (&e, &i) in &self.assign {
            m.entry(i).or_default().push(e);
        }
        for v in m.values_mut() {
            v.sort_unstable();
        }
        m
    }

    fn is_live(&self, u: VertexId, v: VertexId) -> bool {
        self.index.contains_key(&(u, v))
    }

    pub fn verdict(&self) -> Verdict {
        let low = match (&self.regime, &self.dup) {
            (DensityRegime::Duplicate { k }, Some(d)) => {
                let top: T = cast(d.store().max_stored_outdeg() as f64);
                top < self.h * cast(*k as f64)
            }
            _ => self
                .buckets
                .values()
                .all(|b| b.store().max_stored_outdeg() < self.b),
        };
        if low {
            Verdict::Low
        } else {
            Verdict::High
        }
    }

    pub fn insert_batch(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(Vec<Rejection>, Vec<InstanceMetrics>)> {
        let (ok, rejected) = screen(self.n, edges, true, |u, v| self.is_live(u, v));
        for &e in &ok {
            self.index.insert(e, self.next_index);
            self.next_index += 1;
        }
        let metrics = self.route(&ok, true)?;
        Ok((rejected, metrics))
    }

    pub fn delete_batch(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(Vec<Rejection>, Vec<InstanceMetrics>)> {
        let (ok, rejected) = screen(self.n, edges, false, |u, v| self.is_live(u, v));
        let metrics = self.route(&ok, false)?;
        for e in &ok {
            self.index.remove(e);
        }
        Ok((rejected, metrics))
    }

    fn metrics(&self, bucket: Option<usize>, b: &Balanced) -> InstanceMetrics {
        InstanceMetrics {
            level: self.level,
            role: Role::Density,
            bucket,
            cap: b.cap(),
            counters: b.counters().clone(),
        }
    }

    fn route(&mut self, ok: &[(VertexId, VertexId)], insert: bool) -> Result<Vec<InstanceMetrics>> {
        if let Some(mut d) = self.dup.take() {
            let res = if insert { d.insert_batch(ok) } else { d.delete_batch(ok) };
            let log = d.drain_change_log();
            let metrics = self.metrics(None, &d);
            self.dup = Some(d);
            res?;
            self.absorb_duplicate_log(log);
            return Ok(vec![metrics]);
        }
        let DensityRegime::Buckets { t, .. } = self.regime else {
            unreachable!("bucket regime without buckets")
        };
        let mut groups: BTreeMap<usize, Vec<(VertexId, VertexId)>> = BTreeMap::new();
        for &e in ok {
            let i = if insert {
                let i = self.rng.gen_range(0..t);
                self.assign.insert(e, i);
                i
            } else {
                self.assign.remove(&e).expect("screened live edge")
            };
            groups.entry(i).or_default().push(e);
        }
        let mut metrics = Vec::with_capacity(groups.len());
        for (i, group) in groups {
            let mut bucket = match self.buckets.remove(&i) {
                Some(b) => b,
                None => Balanced::new(self.n, self.b, 1)?,
            };
            let res = if insert {
                bucket.insert_batch(&group)
            } else {
                bucket.delete_batch(&group)
            };
            let log = bucket.drain_change_log();
            metrics.push(self.metrics(Some(i), &bucket));
            self.buckets.insert(i, bucket);
            res?;
            for key in &log.deleted {
                self.exposed.remove(key.lo, key.hi);
            }
            for (key, r) in &log.reversed {
                let idx = self.index[&(key.lo, key.hi)];
                self.exposed.set(key.lo, key.hi, r.to_tail, idx);
            }
            for (key, e) in &log.inserted {
                let idx = self.index[&(key.lo, key.hi)];
                self.exposed.set(key.lo, key.hi, e.tail, idx);
            }
        }
        Ok(metrics)
    }

    fn absorb_duplicate_log(&mut self, log: ChangeLog) {
        let DensityRegime::Duplicate { k } = self.regime else {
            return;
        };
        let mut touched: BTreeMap<(VertexId, VertexId), ()> = BTreeMap::new();
        for key in &log.deleted {
            if self.majority.remove(&(key.lo, key.hi)).is_some() {
                self.exposed.remove(key.lo, key.hi);
            }
        }
        for (key, r) in &log.reversed {
            let c = self.majority.get_mut(&(key.lo, key.hi)).expect("live edge");
            if r.to_tail == key.lo {
                *c += 1;
            } else {
                *c -= 1;
            }
            touched.insert((key.lo, key.hi), ());
        }
        for (key, e) in &log.inserted {
            let c = self.majority.entry((key.lo, key.hi)).or_insert(0);
            if e.tail == key.lo {
                *c += 1;
            }
            touched.insert((key.lo, key.hi), ());
        }
        for (lo, hi) in touched.into_keys() {
            let Some(&c) = self.majority.get(&(lo, hi)) else {
                continue;
            };
            let tail = if 2 * c > k { lo } else { hi };
            let idx = self.index[&(lo, hi)];
            self.exposed.set(lo, hi, tail, idx);
        }
    }
}
