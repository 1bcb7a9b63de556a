//! Batch-dynamic balanced orientation.
//!
//! Insertions are handled by a token-dropping game: a bundle of new edges is
//! oriented out of its lower-degree endpoints, each tail receives a token,
//! and tokens move down the out-degree levels by reversing edges until they
//! come to rest. Deletions run the mirror-image token-pushing game, where a
//! token at a vertex that lost an out-edge climbs to an in-neighbour one level
//! higher.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::orientation::{
    ChangeLog, DirectedEdge, EdgeKey, EdgeUid, Label, NewEdge, OrientationStore,
    StructureReport, VertexId,
};

/// Work and round counters for the most recent batch.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhaseCounters {
    pub phases_per_bundle: Vec<usize>,
    pub bundle_iterations: usize,
    pub pushed_bundles: usize,
    pub flips: u64,
    pub elementary_ops: u64,
    /// Edges flipped more than once inside a single bundle; always 0.
    pub repeat_flips: u64,
}

impl PhaseCounters {
    pub fn max_phases(&self) -> usize {
        self.phases_per_bundle.iter().copied().max().unwrap_or(0)
    }

    /// Folds another batch's counters into an aggregate.
    pub fn merge(&mut self, other: &PhaseCounters) {
        self.phases_per_bundle
            .extend_from_slice(&other.phases_per_bundle);
        self.bundle_iterations = self.bundle_iterations.max(other.bundle_iterations);
        self.pushed_bundles = self.pushed_bundles.max(other.pushed_bundles);
        self.flips += other.flips;
        self.elementary_ops += other.elementary_ops;
        self.repeat_flips += other.repeat_flips;
    }
}

/// A user edge refused by a batch, with the reason.
#[derive(Clone, Debug, PartialEq)]
pub struct Rejection {
    pub u: VertexId,
    pub v: VertexId,
    pub error: Error,
}

/// Maximum number of extract-and-insert rounds for one insertion batch.
pub fn bundle_iteration_bound(cap: usize) -> usize {
    2 * (cap + 1) * (cap + 1) + 3
}

/// Empirical ceiling on phases of one token game.
pub const PHASE_CEILING_ALPHA: usize = 8;

pub fn phase_ceiling(cap: usize) -> usize {
    PHASE_CEILING_ALPHA * cap * cap * cap
}

#[derive(Clone, Debug)]
pub struct Balanced {
    store: OrientationStore,
    h: usize,
    k: usize,
    cap: usize,
    counters: PhaseCounters,
    skip_fix: bool,
}

impl Balanced {
    /// An empty instance keeping a `h * k`-balanced orientation, where each
    /// user edge is stored as `k` parallel copies.
    pub fn new(n: usize, h: usize, k: usize) -> Result<Self> {
        if h == 0 || k == 0 {
            return Err(Error::Parameter(format!("H and K must be positive (H={h}, K={k})")));
        }
        Self::with_cap(n, h * k, k).map(|mut b| {
            b.h = h;
            b
        })
    }

    /// Like [`Balanced::new`] but with an explicit balance cap.
    pub fn with_cap(n: usize, cap: usize, k: usize) -> Result<Self> {
        if cap == 0 || k == 0 {
            return Err(Error::Parameter(format!("cap and K must be positive (cap={cap}, K={k})")));
        }
        Ok(Balanced {
            store: OrientationStore::new(n, cap)?,
            h: cap.div_ceil(k),
            k,
            cap,
            counters: PhaseCounters::default(),
            skip_fix: false,
        })
    }

    pub fn universe(&self) -> usize {
        self.store.universe()
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn counters(&self) -> &PhaseCounters {
        &self.counters
    }

    pub fn store(&self) -> &OrientationStore {
        &self.store
    }

    #[doc(hidden)]
    pub fn store_mut(&mut self) -> &mut OrientationStore {
        &mut self.store
    }

    /// Makes the next insertion batch skip the out-degree correction of one
    /// token holder. Fault injection for verifier tests.
    #[doc(hidden)]
    pub fn debug_skip_next_fix(&mut self) {
        self.skip_fix = true;
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.store.stored_outdeg(v)
    }

    pub fn out_edges(&self, v: VertexId) -> Vec<DirectedEdge> {
        self.store.out_edges(v)
    }

    /// Number of live user edges (copies counted once).
    pub fn edge_count(&self) -> usize {
        self.store.edge_count() / self.k
    }

    pub fn is_live(&self, u: VertexId, v: VertexId) -> bool {
        self.store.uid_of(&EdgeKey::new(u, v, 0)).is_some()
    }

    pub fn drain_change_log(&mut self) -> ChangeLog {
        self.store.drain_change_log()
    }

    pub fn check_structure(&self) -> StructureReport {
        self.store.check_structure()
    }

    /// Full scan of the balance condition on stored out-degrees.
    pub fn verify_h_balanced(&self) -> bool {
        self.balance_violations().is_empty()
    }

    pub fn balance_violations(&self) -> Vec<DirectedEdge> {
        let cap = self.cap;
        self.store
            .edges()
            .into_iter()
            .filter(|e| {
                self.store.stored_outdeg(e.tail).min(cap)
                    > self.store.stored_outdeg(e.head).min(cap) + 1
            })
            .collect()
    }

    /// Vertices whose stored out-degree disagrees with the out-list length.
    pub fn stale_outdegrees(&self) -> Vec<VertexId> {
        self.store
            .touched_vertices()
            .filter(|&v| self.store.stored_outdeg(v) != self.store.out_len(v))
            .collect()
    }

    fn validate(
        &self,
        edges: &[(VertexId, VertexId)],
        want_live: bool,
        rejected: &mut Vec<Rejection>,
    ) -> Vec<(VertexId, VertexId)> {
        let n = self.store.universe();
        let mut seen = BTreeSet::new();
        let mut ok = Vec::new();
        for &(u, v) in edges {
            let err = if u >= n || v >= n {
                Some(Error::VertexOutOfRange { vertex: u.max(v), n })
            } else if u == v {
                Some(Error::SelfLoop(u))
            } else {
                let key = EdgeKey::new(u, v, 0);
                let live = self.store.uid_of(&key).is_some();
                if !seen.insert((key.lo, key.hi)) {
                    Some(if want_live {
                        Error::MissingEdge(key)
                    } else {
                        Error::DuplicateEdge(key)
                    })
                } else if live && !want_live {
                    Some(Error::DuplicateEdge(key))
                } else if !live && want_live {
                    Some(Error::MissingEdge(key))
                } else {
                    None
                }
            };
            match err {
                Some(error) => rejected.push(Rejection { u, v, error }),
                None => ok.push((u.min(v), u.max(v))),
            }
        }
        ok
    }

    /// Splits pending edge copies into a token bundle and the rest. Each
    /// edge proposes to its endpoint with smaller stored out-degree (ties to
    /// the smaller id); each vertex accepts its earliest proposal and becomes
    /// the tail of that edge.
    pub fn extract_token_bundle(&self, pending: &[EdgeKey]) -> (Vec<NewEdge>, Vec<EdgeKey>) {
        let mut chosen: BTreeMap<VertexId, usize> = BTreeMap::new();
        for (i, key) in pending.iter().enumerate() {
            let (a, b) = (key.lo, key.hi);
            let target = if self.store.stored_outdeg(b) < self.store.stored_outdeg(a) {
                b
            } else {
                a
            };
            chosen.entry(target).or_insert(i);
        }
        let mut taken = vec![false; pending.len()];
        let mut bundle = Vec::with_capacity(chosen.len());
        for (&tail, &i) in &chosen {
            taken[i] = true;
            let key = pending[i];
            let head = if key.lo == tail { key.hi } else { key.lo };
            bundle.push(NewEdge::new(tail, head, key.copy));
        }
        let rest = pending
            .iter()
            .zip(taken)
            .filter(|(_, t)| !t)
            .map(|(k, _)| *k)
            .collect();
        (bundle, rest)
    }

    pub fn insert_batch(&mut self, edges: &[(VertexId, VertexId)]) -> Result<Vec<Rejection>> {
        self.counters = PhaseCounters::default();
        let ops_start = self.store.ops();
        let mut rejected = Vec::new();
        let accepted = self.validate(edges, false, &mut rejected);
        let mut pending: Vec<EdgeKey> = accepted
            .iter()
            .flat_map(|&(u, v)| (0..self.k as u32).map(move |c| EdgeKey::new(u, v, c)))
            .collect();
        let mut direct = Vec::new();
        let cap = self.cap;
        loop {
            let (high, low): (Vec<EdgeKey>, Vec<EdgeKey>) = pending.into_iter().partition(|e| {
                self.store.stored_outdeg(e.lo).min(self.store.stored_outdeg(e.hi)) >= cap
            });
            direct.extend(high);
            if low.is_empty() {
                break;
            }
            self.counters.bundle_iterations += 1;
            let (bundle, rest) = self.extract_token_bundle(&low);
            self.insert_bundle(&bundle)?;
            pending = rest;
        }
        if !direct.is_empty() {
            let ins: Vec<NewEdge> = direct
                .iter()
                .map(|k| NewEdge::new(k.lo, k.hi, k.copy))
                .collect();
            self.store.apply_edge_updates(&ins, &[])?;
            let tails: BTreeSet<VertexId> = direct.iter().map(|k| k.lo).collect();
            let tails: Vec<VertexId> = tails.into_iter().collect();
            self.store.fix_outdegrees(&tails);
        }
        self.counters.elementary_ops = self.store.ops() - ops_start;
        Ok(rejected)
    }

    /// Adds one token bundle and runs the token-dropping game until no token
    /// moves. Returns the number of phases.
    pub fn insert_bundle(&mut self, bundle: &[NewEdge]) -> Result<usize> {
        let mut tails = BTreeSet::new();
        for e in bundle {
            if !tails.insert(e.tail) {
                return Err(Error::BundleContract(format!("tail {} repeats", e.tail)));
            }
            if self.store.stored_outdeg(e.tail) > self.store.stored_outdeg(e.head) {
                return Err(Error::BundleContract(format!(
                    "tail {} has larger out-degree than head {}",
                    e.tail, e.head
                )));
            }
        }
        let bundle: Vec<NewEdge> = bundle.iter().map(|e| NewEdge { label: 0, ..*e }).collect();
        self.store.apply_edge_updates(&bundle, &[])?;
        let cap = self.cap;
        let mut holders: BTreeSet<VertexId> = tails;
        let tokens = holders.len();
        let mut flipped: FxHashSet<EdgeUid> = FxHashSet::default();
        let mut phases = 0usize;
        loop {
            phases += 1;
            let active: Vec<VertexId> = holders
                .iter()
                .copied()
                .filter(|&v| self.store.stored_outdeg(v) < cap)
                .collect();
            let mut proposals: BTreeMap<VertexId, (VertexId, EdgeUid)> = BTreeMap::new();
            for &v in &active {
                let dv = self.store.stored_outdeg(v);
                if dv == 0 {
                    continue;
                }
                for uid in self.store.out_prefix(v, cap + 1) {
                    let w = self.store.edge(uid).expect("live").head;
                    if !holders.contains(&w) && self.store.stored_outdeg(w) + 1 == dv {
                        proposals.entry(w).or_insert((v, uid));
                        break;
                    }
                }
            }
            if proposals.is_empty() {
                break;
            }
            let mut flips = Vec::with_capacity(proposals.len());
            for (&w, &(v, uid)) in &proposals {
                holders.remove(&v);
                holders.insert(w);
                if !flipped.insert(uid) {
                    self.counters.repeat_flips += 1;
                }
                flips.push((uid, 0));
            }
            self.counters.flips += flips.len() as u64;
            self.store.reverse_edges(&flips)?;
            debug_assert_eq!(holders.len(), tokens);
        }
        let mut finals: Vec<VertexId> = holders.into_iter().collect();
        if self.skip_fix && !finals.is_empty() {
            self.skip_fix = false;
            finals.remove(0);
        }
        self.store.fix_outdegrees(&finals);
        self.counters.phases_per_bundle.push(phases);
        Ok(phases)
    }

    pub fn delete_batch(&mut self, edges: &[(VertexId, VertexId)]) -> Result<Vec<Rejection>> {
        self.counters = PhaseCounters::default();
        let ops_start = self.store.ops();
        let mut rejected = Vec::new();
        let accepted = self.validate(edges, true, &mut rejected);
        let cap = self.cap;
        let mut by_tail: BTreeMap<VertexId, Vec<(EdgeUid, EdgeKey)>> = BTreeMap::new();
        for &(u, v) in &accepted {
            for c in 0..self.k as u32 {
                let key = EdgeKey::new(u, v, c);
                let uid = self.store.uid_of(&key).ok_or(Error::MissingEdge(key))?;
                let tail = self.store.edge(uid).expect("live").tail;
                by_tail.entry(tail).or_default().push((uid, key));
            }
        }
        let mut stripped = Vec::new();
        let mut rest = Vec::new();
        let mut tokens: BTreeMap<VertexId, usize> = BTreeMap::new();
        let mut new_stored = Vec::new();
        for (&tail, list) in by_tail.iter_mut() {
            list.sort_unstable();
            let d = self.store.stored_outdeg(tail);
            let strip = if d > cap { (d - cap).min(list.len()) } else { 0 };
            stripped.extend(list[..strip].iter().map(|&(_, k)| k));
            if strip > 0 {
                new_stored.push((tail, d - strip));
            }
            let left = list.len() - strip;
            if left > 0 {
                rest.extend(list[strip..].iter().map(|&(_, k)| k));
                tokens.insert(tail, left);
            }
        }
        if !stripped.is_empty() {
            self.store.apply_edge_updates(&[], &stripped)?;
            for (v, d) in new_stored {
                self.store.set_stored_outdeg(v, d);
            }
        }
        if !rest.is_empty() {
            self.store.apply_edge_updates(&[], &rest)?;
        }
        let rounds = tokens.values().copied().max().unwrap_or(0);
        self.counters.pushed_bundles = rounds;
        for j in 1..=rounds {
            let bundle: Vec<VertexId> = tokens
                .iter()
                .filter(|&(_, &t)| t >= j)
                .map(|(&v, _)| v)
                .collect();
            self.push_bundle(&bundle)?;
        }
        self.counters.elementary_ops = self.store.ops() - ops_start;
        Ok(rejected)
    }

    /// Sends a token across `w -> v`. A vertex stored above the cap absorbs
    /// tokens while its level would survive losing them; otherwise `w`
    /// becomes occupied and its ranked out-edges are relabelled.
    fn deliver(
        &mut self,
        w: VertexId,
        uid: EdgeUid,
        holders: &mut BTreeSet<VertexId>,
        absorbed: &mut BTreeMap<VertexId, usize>,
        flipped: &mut BTreeSet<EdgeUid>,
        labeled: &mut FxHashMap<EdgeUid, Label>,
    ) -> Result<()> {
        let cap = self.cap;
        if !flipped.insert(uid) {
            self.counters.repeat_flips += 1;
        }
        let mut relabel = vec![(uid, 1)];
        let taken = absorbed.get(&w).copied().unwrap_or(0);
        if self.store.stored_outdeg(w) > cap + taken {
            *absorbed.entry(w).or_default() += 1;
        } else {
            holders.insert(w);
            for e in self.store.out_prefix(w, cap) {
                if !flipped.contains(&e) && labeled.get(&e) != Some(&1) {
                    relabel.push((e, 1));
                }
            }
        }
        self.store.set_labels(&relabel)?;
        for (e, l) in relabel {
            labeled.insert(e, l);
        }
        Ok(())
    }

    /// Runs the token-pushing game for one bundle of distinct vertices, each
    /// holding one token. Returns the number of phases.
    pub fn push_bundle(&mut self, bundle: &[VertexId]) -> Result<usize> {
        let cap = self.cap;
        let mut holders: BTreeSet<VertexId> = BTreeSet::new();
        for &v in bundle {
            if !holders.insert(v) {
                return Err(Error::BundleContract(format!("vertex {v} repeats")));
            }
            if self.store.stored_outdeg(v) == 0 {
                return Err(Error::BundleContract(format!("vertex {v} has no out-degree to give up")));
            }
        }
        let tokens = holders.len();
        // Non-zero labels currently written, keyed by edge.
        let mut labeled: FxHashMap<EdgeUid, Label> = FxHashMap::default();
        let mut flipped: BTreeSet<EdgeUid> = BTreeSet::new();
        // Tokens taken by vertices whose level survives losing them.
        let mut absorbed: BTreeMap<VertexId, usize> = BTreeMap::new();
        let mut phases = 0usize;
        loop {
            phases += 1;
            let active: BTreeSet<VertexId> = holders
                .iter()
                .copied()
                .filter(|&v| self.store.stored_outdeg(v) < cap)
                .collect();
            let mut want: FxHashMap<EdgeUid, Label> = FxHashMap::default();
            for &v in &holders {
                let label = 2 * Label::from(active.contains(&v)) + 1;
                for uid in self.store.out_prefix(v, cap) {
                    if !flipped.contains(&uid) {
                        want.insert(uid, label);
                    }
                }
            }
            let mut writes: Vec<(EdgeUid, Label)> = Vec::new();
            for (&uid, &old) in &labeled {
                if flipped.contains(&uid) {
                    continue;
                }
                let new = want.get(&uid).copied().unwrap_or(0);
                if new != old {
                    writes.push((uid, new));
                }
            }
            for (&uid, &new) in &want {
                if !labeled.contains_key(&uid) {
                    writes.push((uid, new));
                }
            }
            writes.sort_unstable();
            self.store.set_labels(&writes)?;
            for &(uid, l) in &writes {
                if l == 0 {
                    labeled.remove(&uid);
                } else {
                    labeled.insert(uid, l);
                }
            }

            let mut moved = false;
            let mut waiting: BTreeSet<VertexId> = active.clone();
            for i in 1..=cap as u32 {
                let round: Vec<VertexId> = waiting.iter().copied().collect();
                for v in round {
                    let Some(entry) = self.store.bucket_top_level(v, i, 0) else {
                        continue;
                    };
                    if self.store.level(entry.tail) != self.store.level(v) + 1 {
                        continue;
                    }
                    waiting.remove(&v);
                    holders.remove(&v);
                    self.deliver(entry.tail, entry.uid, &mut holders, &mut absorbed, &mut flipped, &mut labeled)?;
                    moved = true;
                }
            }
            let edge_rank = cap as u32 + 1;
            for v in waiting {
                if self.store.stored_outdeg(v) + 1 != cap {
                    continue;
                }
                let Some(entry) = self
                    .store
                    .bucket_first_open(v, edge_rank, 0, |w| holders.contains(&w))
                else {
                    continue;
                };
                holders.remove(&v);
                self.deliver(entry.tail, entry.uid, &mut holders, &mut absorbed, &mut flipped, &mut labeled)?;
                moved = true;
            }
            debug_assert_eq!(
                holders.len() + absorbed.values().sum::<usize>(),
                tokens,
                "token conservation"
            );
            if !moved {
                break;
            }
        }
        let resets: Vec<(EdgeUid, Label)> = labeled
            .keys()
            .filter(|uid| !flipped.contains(uid))
            .map(|&uid| (uid, 0))
            .collect();
        self.store.set_labels(&resets)?;
        let flips: Vec<(EdgeUid, Label)> = flipped.iter().map(|&uid| (uid, 0)).collect();
        self.counters.flips += flips.len() as u64;
        self.store.reverse_edges(&flips)?;
        let mut drop: BTreeMap<VertexId, usize> = absorbed;
        for v in holders {
            *drop.entry(v).or_default() += 1;
        }
        for (v, c) in drop {
            let d = self.store.stored_outdeg(v);
            debug_assert!(d >= c);
            self.store.set_stored_outdeg(v, d - c);
        }
        self.counters.phases_per_bundle.push(phases);
        Ok(phases)
    }
}
