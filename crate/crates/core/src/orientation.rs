//! Storage for a directed orientation of a (multi)graph.
//!
//! Each vertex keeps its outgoing edges in an order-statistics set ordered by
//! edge id, so the rank of an edge (its 1-based position among its tail's
//! out-edges) is available in logarithmic time. Incoming edges are kept in a
//! single ordered index per head vertex, keyed by
//! `(truncated rank, label, level of tail, tail, id)`. A contiguous range of
//! that index is one `(truncated rank, label)` bucket, sorted by the capped
//! out-degree of the tail.
//!
//! The stored out-degree of a vertex is what the maintenance algorithms
//! believe it to be; it can lag the real out-list length while a batch is in
//! flight. Bulk updates never touch it. `fix_outdegrees` and
//! `set_stored_outdeg` bring it back in line and re-key the incoming index
//! when the capped value changes.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::ostree::OrderStatSet;

pub type VertexId = usize;
pub type Label = u8;

pub const MAX_LABEL: Label = 3;

/// Globally unique, insertion-ordered edge identifier.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeUid(pub u64);

/// Orientation-independent identity of an edge copy.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub lo: VertexId,
    pub hi: VertexId,
    pub copy: u32,
}

impl EdgeKey {
    pub fn new(u: VertexId, v: VertexId, copy: u32) -> Self {
        EdgeKey {
            lo: u.min(v),
            hi: u.max(v),
            copy,
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.copy == 0 {
            write!(f, "({}, {})", self.lo, self.hi)
        } else {
            write!(f, "({}, {})#{}", self.lo, self.hi, self.copy)
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub tail: VertexId,
    pub head: VertexId,
    pub copy: u32,
    pub uid: EdgeUid,
}

impl DirectedEdge {
    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(self.tail, self.head, self.copy)
    }
}

/// An edge to be inserted with a given orientation and label.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct NewEdge {
    pub tail: VertexId,
    pub head: VertexId,
    pub copy: u32,
    pub label: Label,
}

impl NewEdge {
    pub fn new(tail: VertexId, head: VertexId, copy: u32) -> Self {
        NewEdge {
            tail,
            head,
            copy,
            label: 0,
        }
    }
}

/// Entry of the incoming-edge index of a head vertex.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InKey {
    pub tr: u32,
    pub label: Label,
    pub level: u32,
    pub tail: VertexId,
    pub uid: EdgeUid,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Reversal {
    pub from_tail: VertexId,
    pub to_tail: VertexId,
}

/// Net orientation changes since the last drain.
///
/// Replaying `deleted`, then `reversed`, then `inserted` against the
/// orientation at the previous drain reproduces the current orientation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChangeLog {
    pub reversed: BTreeMap<EdgeKey, Reversal>,
    pub inserted: BTreeMap<EdgeKey, DirectedEdge>,
    pub deleted: BTreeSet<EdgeKey>,
}

impl ChangeLog {
    pub fn is_empty(&self) -> bool {
        self.reversed.is_empty() && self.inserted.is_empty() && self.deleted.is_empty()
    }

    fn record_insert(&mut self, e: DirectedEdge) {
        self.inserted.insert(e.key(), e);
    }

    fn record_delete(&mut self, key: EdgeKey) {
        if self.inserted.remove(&key).is_some() {
            return;
        }
        self.reversed.remove(&key);
        self.deleted.insert(key);
    }

    fn record_reverse(&mut self, key: EdgeKey, from_tail: VertexId, to_tail: VertexId) {
        if let Some(e) = self.inserted.get_mut(&key) {
            e.head = e.tail;
            e.tail = to_tail;
            return;
        }
        match self.reversed.get(&key).copied() {
            Some(r) if r.from_tail == to_tail => {
                self.reversed.remove(&key);
            }
            Some(r) => {
                self.reversed.insert(
                    key,
                    Reversal {
                        from_tail: r.from_tail,
                        to_tail,
                    },
                );
            }
            None => {
                self.reversed.insert(key, Reversal { from_tail, to_tail });
            }
        }
    }

    /// Folds `other` (which happened after `self`) into `self`.
    pub fn absorb(&mut self, other: ChangeLog) {
        for key in other.deleted {
            self.record_delete(key);
        }
        for (key, r) in other.reversed {
            self.record_reverse(key, r.from_tail, r.to_tail);
        }
        for (_, e) in other.inserted {
            self.record_insert(e);
        }
    }

    /// Applies the log to a snapshot mapping each edge to its tail.
    pub fn replay(&self, snapshot: &mut BTreeMap<EdgeKey, VertexId>) {
        for key in &self.deleted {
            snapshot.remove(key);
        }
        for (key, r) in &self.reversed {
            snapshot.insert(*key, r.to_tail);
        }
        for (key, e) in &self.inserted {
            snapshot.insert(*key, e.tail);
        }
    }
}

/// A broken storage invariant found by [`OrientationStore::check_structure`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// An out-list holds an edge whose recorded tail differs.
    OutListMismatch { vertex: VertexId, uid: EdgeUid },
    /// The cached truncated rank disagrees with the out-list position.
    TruncatedRank { uid: EdgeUid, cached: u32, actual: u32 },
    /// The edge's expected incoming-index entry is missing.
    MissingIncoming { uid: EdgeUid, expected: InKey },
    /// An incoming-index entry does not describe a live edge exactly.
    StrayIncoming { head: VertexId, entry: InKey },
    /// A label other than 0 outside a deletion phase.
    NonDefaultLabel { uid: EdgeUid, label: Label },
    /// Entry counts of out-lists or incoming indexes disagree with the edge set.
    CountMismatch { what: &'static str, expected: usize, found: usize },
}

impl Violation {
    pub fn uid(&self) -> Option<EdgeUid> {
        match self {
            Violation::OutListMismatch { uid, .. }
            | Violation::TruncatedRank { uid, .. }
            | Violation::MissingIncoming { uid, .. }
            | Violation::NonDefaultLabel { uid, .. } => Some(*uid),
            Violation::StrayIncoming { entry, .. } => Some(entry.uid),
            Violation::CountMismatch { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructureReport {
    pub violations: Vec<Violation>,
}

impl StructureReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug)]
struct EdgeRecord {
    tail: VertexId,
    head: VertexId,
    copy: u32,
    label: Label,
    /// 0 while the edge is not in its head's incoming index.
    tr: u32,
    level: u32,
}

#[derive(Clone, Debug, Default)]
struct VertexSlot {
    out: OrderStatSet<EdgeUid>,
    stored_outdeg: usize,
    incoming: BTreeSet<InKey>,
}

#[derive(Clone, Debug)]
pub struct OrientationStore {
    n: usize,
    cap: usize,
    vertices: FxHashMap<VertexId, VertexSlot>,
    edges: FxHashMap<EdgeUid, EdgeRecord>,
    by_key: FxHashMap<EdgeKey, EdgeUid>,
    next_uid: u64,
    log: ChangeLog,
    ops: u64,
    /// Number of vertices at each positive stored out-degree.
    degree_counts: BTreeMap<usize, usize>,
}

impl OrientationStore {
    pub fn new(n: usize, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Parameter("cap H must be positive".into()));
        }
        Ok(OrientationStore {
            n,
            cap,
            vertices: FxHashMap::default(),
            edges: FxHashMap::default(),
            by_key: FxHashMap::default(),
            next_uid: 0,
            log: ChangeLog::default(),
            ops: 0,
            degree_counts: BTreeMap::new(),
        })
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Elementary tree operations performed so far (work proxy).
    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn ensure_vertex(&mut self, v: VertexId) -> Result<()> {
        self.check_vertex(v)?;
        self.slot_mut(v);
        Ok(())
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v >= self.n {
            Err(Error::VertexOutOfRange {
                vertex: v,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    fn slot_mut(&mut self, v: VertexId) -> &mut VertexSlot {
        self.vertices.entry(v).or_default()
    }

    /// Vertices that have been touched since construction.
    pub fn touched_vertices(&self) -> impl Iterator<Item = VertexId> {
        let mut v: Vec<VertexId> = self.vertices.keys().copied().collect();
        v.sort_unstable();
        v.into_iter()
    }

    pub fn is_initialized(&self, v: VertexId) -> bool {
        self.vertices.contains_key(&v)
    }

    pub fn stored_outdeg(&self, v: VertexId) -> usize {
        self.vertices.get(&v).map_or(0, |s| s.stored_outdeg)
    }

    pub fn max_stored_outdeg(&self) -> usize {
        self.degree_counts.keys().next_back().copied().unwrap_or(0)
    }

    pub fn level(&self, v: VertexId) -> usize {
        self.stored_outdeg(v).min(self.cap)
    }

    pub fn out_len(&self, v: VertexId) -> usize {
        self.vertices.get(&v).map_or(0, |s| s.out.len())
    }

    pub fn out_uids(&self, v: VertexId) -> Vec<EdgeUid> {
        self.vertices.get(&v).map_or_else(Vec::new, |s| s.out.to_vec())
    }

    /// The first `k` out-edges of `v` in rank order.
    pub fn out_prefix(&mut self, v: VertexId, k: usize) -> Vec<EdgeUid> {
        let p = self
            .vertices
            .get(&v)
            .map_or_else(Vec::new, |s| s.out.prefix(k));
        self.ops += p.len() as u64 + 1;
        p
    }

    /// The out-edge of `v` at 1-based position `k`.
    pub fn kth_out(&self, v: VertexId, k: usize) -> Option<EdgeUid> {
        self.vertices.get(&v).and_then(|s| s.out.kth(k))
    }

    pub fn out_edges(&self, v: VertexId) -> Vec<DirectedEdge> {
        self.out_uids(v)
            .into_iter()
            .map(|uid| self.edge(uid).expect("out-list edge is live"))
            .collect()
    }

    pub fn edge(&self, uid: EdgeUid) -> Option<DirectedEdge> {
        self.edges.get(&uid).map(|r| DirectedEdge {
            tail: r.tail,
            head: r.head,
            copy: r.copy,
            uid,
        })
    }

    pub fn uid_of(&self, key: &EdgeKey) -> Option<EdgeUid> {
        self.by_key.get(key).copied()
    }

    pub fn label(&self, uid: EdgeUid) -> Option<Label> {
        self.edges.get(&uid).map(|r| r.label)
    }

    /// All live edges in id order.
    pub fn edges(&self) -> Vec<DirectedEdge> {
        let mut uids: Vec<EdgeUid> = self.edges.keys().copied().collect();
        uids.sort_unstable();
        uids.into_iter().filter_map(|u| self.edge(u)).collect()
    }

    pub fn rank_of(&self, uid: EdgeUid) -> Result<usize> {
        let rec = self.edges.get(&uid).ok_or(Error::MissingUid(uid))?;
        let slot = self.vertices.get(&rec.tail).ok_or(Error::MissingUid(uid))?;
        slot.out.rank(&uid).ok_or(Error::MissingUid(uid))
    }

    pub fn truncated_rank(&self, uid: EdgeUid) -> Result<usize> {
        Ok(self.rank_of(uid)?.min(self.cap + 1))
    }

    /// Entries of bucket `(tr, label)` of `v`'s incoming index, in key order.
    pub fn bucket(&self, v: VertexId, tr: u32, label: Label) -> Vec<InKey> {
        match self.vertices.get(&v) {
            None => Vec::new(),
            Some(s) => s.incoming.range(bucket_range(tr, label)).copied().collect(),
        }
    }

    /// The smallest entry of bucket `(tr, label)`.
    pub fn bucket_first(&mut self, v: VertexId, tr: u32, label: Label) -> Option<InKey> {
        self.ops += 1;
        self.vertices
            .get(&v)
            .and_then(|s| s.incoming.range(bucket_range(tr, label)).next().copied())
    }

    /// Among the entries of bucket `(tr, label)` with the highest tail level,
    /// the one with the smallest `(tail, id)`.
    pub fn bucket_top_level(&mut self, v: VertexId, tr: u32, label: Label) -> Option<InKey> {
        self.ops += 2;
        let s = self.vertices.get(&v)?;
        let last = s.incoming.range(bucket_range(tr, label)).next_back()?;
        let lo = InKey {
            tr,
            label,
            level: last.level,
            tail: 0,
            uid: EdgeUid(0),
        };
        s.incoming.range(lo..).next().copied()
    }

    /// The smallest entry of bucket `(tr, label)` whose tail is not
    /// `blocked`. Entries of one tail are contiguous, so each blocked tail is
    /// skipped in one step.
    pub fn bucket_first_open(
        &mut self,
        v: VertexId,
        tr: u32,
        label: Label,
        blocked: impl Fn(VertexId) -> bool,
    ) -> Option<InKey> {
        let s = self.vertices.get(&v)?;
        let end = *bucket_range(tr, label).end();
        let mut from = *bucket_range(tr, label).start();
        loop {
            self.ops += 1;
            let e = *s.incoming.range(from..=end).next()?;
            if !blocked(e.tail) {
                return Some(e);
            }
            from = InKey {
                tail: e.tail + 1,
                uid: EdgeUid(0),
                ..e
            };
        }
    }

    fn level_key(&self, tail: VertexId) -> u32 {
        self.level(tail) as u32
    }

    fn in_key(uid: EdgeUid, rec: &EdgeRecord) -> InKey {
        InKey {
            tr: rec.tr,
            label: rec.label,
            level: rec.level,
            tail: rec.tail,
            uid,
        }
    }

    fn unindex(&mut self, uid: EdgeUid) {
        let rec = self.edges.get_mut(&uid).expect("live edge");
        if rec.tr == 0 {
            return;
        }
        let key = Self::in_key(uid, rec);
        let head = rec.head;
        rec.tr = 0;
        let removed = self
            .vertices
            .get_mut(&head)
            .map_or(false, |s| s.incoming.remove(&key));
        debug_assert!(removed, "incoming entry for {uid:?} missing");
        self.ops += 1;
    }

    fn index(&mut self, uid: EdgeUid, tr: u32) {
        let tail = self.edges[&uid].tail;
        let level = self.level_key(tail);
        let rec = self.edges.get_mut(&uid).expect("live edge");
        debug_assert_eq!(rec.tr, 0);
        rec.tr = tr;
        rec.level = level;
        let key = Self::in_key(uid, rec);
        let head = rec.head;
        self.slot_mut(head).incoming.insert(key);
        self.ops += 1;
    }

    /// Core bulk primitive: removes `removed` from their tails' out-lists and
    /// incoming indexes, inserts `added` (uid, record) pairs, then recomputes
    /// truncated ranks of the first `cap + 1` edges of every affected tail
    /// before and after the change.
    fn restructure(&mut self, removed: &[EdgeUid], added: Vec<(EdgeUid, EdgeRecord)>) {
        let limit = self.cap + 1;
        let mut tails: BTreeSet<VertexId> = BTreeSet::new();
        for uid in removed {
            tails.insert(self.edges[uid].tail);
        }
        for (_, rec) in &added {
            tails.insert(rec.tail);
        }
        let mut before: Vec<EdgeUid> = Vec::new();
        for &t in &tails {
            before.extend(self.out_prefix(t, limit));
        }
        for &uid in removed {
            self.unindex(uid);
            let rec = self.edges.remove(&uid).expect("live edge");
            let gone = self.slot_mut(rec.tail).out.remove(&uid);
            debug_assert!(gone);
            self.ops += 1;
        }
        let mut fresh: Vec<EdgeUid> = Vec::with_capacity(added.len());
        for (uid, mut rec) in added {
            rec.tr = 0;
            let tail = rec.tail;
            self.slot_mut(rec.head);
            self.edges.insert(uid, rec);
            self.slot_mut(tail).out.insert(uid);
            self.ops += 1;
            fresh.push(uid);
        }
        // Position in the new prefix is the rank; everything else that is
        // still live sits at rank > limit.
        let mut want: FxHashMap<EdgeUid, u32> = FxHashMap::default();
        for &t in &tails {
            for (i, uid) in self.out_prefix(t, limit).into_iter().enumerate() {
                want.insert(uid, (i + 1) as u32);
            }
        }
        let limit = limit as u32;
        let mut touched: Vec<(EdgeUid, u32)> = before
            .into_iter()
            .chain(fresh)
            .filter(|u| self.edges.contains_key(u))
            .map(|u| (u, want.get(&u).copied().unwrap_or(limit)))
            .collect();
        touched.extend(want.iter().map(|(&u, &tr)| (u, tr)));
        touched.sort_unstable();
        touched.dedup();
        for (uid, tr) in touched {
            self.ops += 1;
            if self.edges[&uid].tr != tr {
                self.unindex(uid);
                self.index(uid, tr);
            }
        }
    }

    /// Inserts and deletes edge copies in one bulk step. Stored out-degrees
    /// are not modified.
    pub fn apply_edge_updates(
        &mut self,
        insertions: &[NewEdge],
        deletions: &[EdgeKey],
    ) -> Result<Vec<DirectedEdge>> {
        let mut seen = BTreeSet::new();
        for key in deletions {
            if !self.by_key.contains_key(key) || !seen.insert(*key) {
                return Err(Error::MissingEdge(*key));
            }
        }
        let mut fresh = BTreeSet::new();
        for e in insertions {
            self.check_vertex(e.tail)?;
            self.check_vertex(e.head)?;
            if e.tail == e.head {
                return Err(Error::SelfLoop(e.tail));
            }
            if e.label > MAX_LABEL {
                return Err(Error::LabelOutOfRange(e.label));
            }
            let key = EdgeKey::new(e.tail, e.head, e.copy);
            if (self.by_key.contains_key(&key) && !seen.contains(&key)) || !fresh.insert(key) {
                return Err(Error::DuplicateEdge(key));
            }
        }
        let removed: Vec<EdgeUid> = deletions.iter().map(|k| self.by_key[k]).collect();
        for key in deletions {
            self.by_key.remove(key);
            self.log.record_delete(*key);
        }
        let mut created = Vec::with_capacity(insertions.len());
        let mut added = Vec::with_capacity(insertions.len());
        for e in insertions {
            let uid = EdgeUid(self.next_uid);
            self.next_uid += 1;
            let de = DirectedEdge {
                tail: e.tail,
                head: e.head,
                copy: e.copy,
                uid,
            };
            self.by_key.insert(de.key(), uid);
            self.log.record_insert(de);
            created.push(de);
            added.push((
                uid,
                EdgeRecord {
                    tail: e.tail,
                    head: e.head,
                    copy: e.copy,
                    label: e.label,
                    tr: 0,
                    level: 0,
                },
            ));
        }
        self.restructure(&removed, added);
        Ok(created)
    }

    /// Reverses every listed edge and assigns it the paired label. Stored
    /// out-degrees are not modified.
    pub fn reverse_edges(&mut self, edges: &[(EdgeUid, Label)]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &(uid, label) in edges {
            if !self.edges.contains_key(&uid) || !seen.insert(uid) {
                return Err(Error::MissingUid(uid));
            }
            if label > MAX_LABEL {
                return Err(Error::LabelOutOfRange(label));
            }
        }
        if edges.is_empty() {
            return Ok(());
        }
        let removed: Vec<EdgeUid> = edges.iter().map(|&(u, _)| u).collect();
        let mut added = Vec::with_capacity(edges.len());
        for &(uid, label) in edges {
            let rec = &self.edges[&uid];
            let key = EdgeKey::new(rec.tail, rec.head, rec.copy);
            self.log.record_reverse(key, rec.tail, rec.head);
            added.push((
                uid,
                EdgeRecord {
                    tail: rec.head,
                    head: rec.tail,
                    copy: rec.copy,
                    label,
                    tr: 0,
                    level: 0,
                },
            ));
        }
        self.restructure(&removed, added);
        Ok(())
    }

    /// Changes labels in place; ranks are unaffected.
    pub fn set_labels(&mut self, labels: &[(EdgeUid, Label)]) -> Result<()> {
        for &(uid, label) in labels {
            if label > MAX_LABEL {
                return Err(Error::LabelOutOfRange(label));
            }
            let rec = self.edges.get(&uid).ok_or(Error::MissingUid(uid))?;
            if rec.label == label {
                continue;
            }
            let tr = rec.tr;
            self.unindex(uid);
            self.edges.get_mut(&uid).expect("live edge").label = label;
            self.index(uid, tr);
        }
        Ok(())
    }

    /// Sets `stored_outdeg(v) := |out(v)|` and re-keys `v`'s out-edges.
    pub fn fix_outdegrees(&mut self, vertices: &[VertexId]) {
        for &v in vertices {
            let len = self.out_len(v);
            self.set_stored_outdeg(v, len);
        }
    }

    /// Overwrites the stored out-degree of `v`, re-keying its out-edges in the
    /// incoming indexes when the capped value changes.
    pub fn set_stored_outdeg(&mut self, v: VertexId, value: usize) {
        let slot = self.slot_mut(v);
        let old = slot.stored_outdeg;
        slot.stored_outdeg = value;
        self.ops += 1;
        if old != value {
            if old > 0 {
                let c = self.degree_counts.get_mut(&old).expect("counted degree");
                *c -= 1;
                if *c == 0 {
                    self.degree_counts.remove(&old);
                }
            }
            if value > 0 {
                *self.degree_counts.entry(value).or_default() += 1;
            }
        }
        if old.min(self.cap) == value.min(self.cap) {
            return;
        }
        for uid in self.out_uids(v) {
            let tr = self.edges[&uid].tr;
            if tr == 0 {
                continue;
            }
            self.unindex(uid);
            self.index(uid, tr);
        }
    }

    pub fn drain_change_log(&mut self) -> ChangeLog {
        std::mem::take(&mut self.log)
    }

    /// Verifies every storage invariant with a full scan.
    pub fn check_structure(&self) -> StructureReport {
        let mut violations = Vec::new();
        let limit = (self.cap + 1) as u32;
        let mut out_total = 0usize;
        let mut in_total = 0usize;
        for v in self.touched_vertices() {
            let slot = &self.vertices[&v];
            for (i, uid) in slot.out.to_vec().into_iter().enumerate() {
                out_total += 1;
                let Some(rec) = self.edges.get(&uid) else {
                    violations.push(Violation::OutListMismatch { vertex: v, uid });
                    continue;
                };
                if rec.tail != v {
                    violations.push(Violation::OutListMismatch { vertex: v, uid });
                    continue;
                }
                let actual = ((i + 1) as u32).min(limit);
                if rec.tr != actual {
                    violations.push(Violation::TruncatedRank {
                        uid,
                        cached: rec.tr,
                        actual,
                    });
                }
                if rec.label != 0 {
                    violations.push(Violation::NonDefaultLabel {
                        uid,
                        label: rec.label,
                    });
                }
                let expected = InKey {
                    tr: actual,
                    label: rec.label,
                    level: self.level_key(v),
                    tail: v,
                    uid,
                };
                let present = self
                    .vertices
                    .get(&rec.head)
                    .map_or(false, |s| s.incoming.contains(&expected));
                if !present {
                    violations.push(Violation::MissingIncoming { uid, expected });
                }
            }
            for entry in &slot.incoming {
                in_total += 1;
                let ok = self.edges.get(&entry.uid).map_or(false, |rec| {
                    rec.head == v
                        && rec.tail == entry.tail
                        && rec.label == entry.label
                        && entry.level == self.level_key(rec.tail)
                        && self.vertices[&rec.tail].out.rank(&entry.uid).map(|r| (r as u32).min(limit))
                            == Some(entry.tr)
                });
                if !ok {
                    violations.push(Violation::StrayIncoming {
                        head: v,
                        entry: *entry,
                    });
                }
            }
        }
        if out_total != self.edges.len() {
            violations.push(Violation::CountMismatch {
                what: "out-lists",
                expected: self.edges.len(),
                found: out_total,
            });
        }
        if in_total != self.edges.len() {
            violations.push(Violation::CountMismatch {
                what: "incoming indexes",
                expected: self.edges.len(),
                found: in_total,
            });
        }
        if self.by_key.len() != self.edges.len() {
            violations.push(Violation::CountMismatch {
                what: "edge keys",
                expected: self.edges.len(),
                found: self.by_key.len(),
            });
        }
        StructureReport { violations }
    }

    /// Rewrites the level stored in one incoming-index entry without touching
    /// anything else. Fault injection for verifier tests.
    #[doc(hidden)]
    pub fn debug_corrupt_level(&mut self, uid: EdgeUid, level: u32) {
        let rec = self.edges.get(&uid).expect("live edge").clone();
        let key = Self::in_key(uid, &rec);
        let slot = self.vertices.get_mut(&rec.head).expect("head slot");
        slot.incoming.remove(&key);
        slot.incoming.insert(InKey { level, ..key });
    }
}

fn bucket_range(tr: u32, label: Label) -> std::ops::RangeInclusive<InKey> {
    InKey {
        tr,
        label,
        level: 0,
        tail: 0,
        uid: EdgeUid(0),
    }..=InKey {
        tr,
        label,
        level: u32::MAX,
        tail: VertexId::MAX,
        uid: EdgeUid(u64::MAX),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(n: usize, cap: usize) -> OrientationStore {
        OrientationStore::new(n, cap).unwrap()
    }

    #[test]
    fn ensure_vertex_is_lazy_and_bounded() {
        let mut s = store(4, 2);
        assert!(!s.is_initialized(0));
        s.ensure_vertex(0).unwrap();
        s.ensure_vertex(0).unwrap();
        assert!(s.is_initialized(0));
        assert_eq!(s.out_len(0), 0);
        assert_eq!(s.stored_outdeg(0), 0);
        assert_eq!(
            s.ensure_vertex(4),
            Err(Error::VertexOutOfRange { vertex: 4, n: 4 })
        );
    }

    #[test]
    fn ranks_follow_insertion_order() {
        let mut s = store(6, 2);
        let es = s
            .apply_edge_updates(
                &[NewEdge::new(0, 1, 0), NewEdge::new(0, 2, 0), NewEdge::new(0, 3, 0)],
                &[],
            )
            .unwrap();
        assert_eq!(s.rank_of(es[1].uid).unwrap(), 2);
        let mut s2 = store(6, 2);
        let one = s2.apply_edge_updates(&[NewEdge::new(4, 5, 0)], &[]).unwrap();
        assert_eq!(s2.rank_of(one[0].uid).unwrap(), 1);
        let more = s
            .apply_edge_updates(&[NewEdge::new(0, 4, 0), NewEdge::new(0, 5, 0)], &[])
            .unwrap();
        assert_eq!(s.rank_of(more[1].uid).unwrap(), 5);
        assert_eq!(s.truncated_rank(more[1].uid).unwrap(), 3);
    }

    #[test]
    fn insert_places_edge_in_first_bucket() {
        let mut s = store(3, 2);
        let e = s.apply_edge_updates(&[NewEdge::new(0, 1, 0)], &[]).unwrap()[0];
        let b = s.bucket(1, 1, 0);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].uid, e.uid);
        assert!(s.check_structure().is_ok());
    }

    #[test]
    fn deleting_only_out_edge_empties_list() {
        let mut s = store(3, 2);
        s.apply_edge_updates(&[NewEdge::new(0, 1, 0)], &[]).unwrap();
        s.apply_edge_updates(&[], &[EdgeKey::new(0, 1, 0)]).unwrap();
        assert_eq!(s.out_len(0), 0);
        assert!(s.bucket(1, 1, 0).is_empty());
        assert!(s.check_structure().is_ok());
    }

    #[test]
    fn update_errors() {
        let mut s = store(3, 2);
        s.apply_edge_updates(&[NewEdge::new(0, 1, 0)], &[]).unwrap();
        assert_eq!(
            s.apply_edge_updates(&[NewEdge::new(1, 0, 0)], &[]),
            Err(Error::DuplicateEdge(EdgeKey::new(0, 1, 0)))
        );
        assert_eq!(
            s.apply_edge_updates(&[], &[EdgeKey::new(1, 2, 0)]),
            Err(Error::MissingEdge(EdgeKey::new(1, 2, 0)))
        );
        assert_eq!(
            s.apply_edge_updates(&[NewEdge::new(2, 2, 0)], &[]),
            Err(Error::SelfLoop(2))
        );
        let bad = NewEdge {
            label: 4,
            ..NewEdge::new(1, 2, 0)
        };
        assert_eq!(s.apply_edge_updates(&[bad], &[]), Err(Error::LabelOutOfRange(4)));
        assert!(s.check_structure().is_ok());
        assert_eq!(s.edge_count(), 1);
    }

    #[test]
    fn single_reversal_leaves_stored_degree() {
        let mut s = store(2, 3);
        let e = s.apply_edge_updates(&[NewEdge::new(0, 1, 0)], &[]).unwrap()[0];
        s.fix_outdegrees(&[0]);
        s.drain_change_log();
        s.reverse_edges(&[(e.uid, 0)]).unwrap();
        assert_eq!(s.out_len(0), 0);
        assert_eq!(s.out_edges(1), vec![DirectedEdge { tail: 1, head: 0, copy: 0, uid: e.uid }]);
        assert_eq!(s.stored_outdeg(0), 1);
        assert_eq!(s.stored_outdeg(1), 0);
        let log = s.drain_change_log();
        assert_eq!(log.reversed.len(), 1);
        s.reverse_edges(&[]).unwrap();
        assert!(s.drain_change_log().is_empty());
    }

    #[test]
    fn reversal_shifts_truncated_rank() {
        let mut s = store(3, 1);
        let es = s
            .apply_edge_updates(&[NewEdge::new(0, 1, 0), NewEdge::new(0, 2, 0)], &[])
            .unwrap();
        assert_eq!(s.truncated_rank(es[1].uid).unwrap(), 2);
        assert_eq!(s.bucket(2, 2, 0).len(), 1);
        s.reverse_edges(&[(es[0].uid, 0)]).unwrap();
        assert_eq!(s.truncated_rank(es[1].uid).unwrap(), 1);
        assert_eq!(s.bucket(2, 2, 0).len(), 0);
        assert_eq!(s.bucket(2, 1, 0).len(), 1);
        assert!(s.check_structure().is_ok());
    }

    #[test]
    fn fix_outdegrees_rekeys_buckets() {
        let mut s = store(6, 10);
        let ins: Vec<NewEdge> = (1..=4).map(|h| NewEdge::new(0, h, 0)).collect();
        s.apply_edge_updates(&ins, &[]).unwrap();
        s.set_stored_outdeg(0, 3);
        s.fix_outdegrees(&[0]);
        assert_eq!(s.stored_outdeg(0), 4);
        assert_eq!(s.bucket(1, 1, 0)[0].level, 4);
        assert!(s.check_structure().is_ok());
        s.fix_outdegrees(&[0]);
        assert!(s.check_structure().is_ok());
    }

    #[test]
    fn large_outdegree_keeps_capped_key() {
        let cap = 3;
        let mut s = store(12, cap);
        let ins: Vec<NewEdge> = (1..=cap + 5).map(|h| NewEdge::new(0, h, 0)).collect();
        s.apply_edge_updates(&ins, &[]).unwrap();
        s.fix_outdegrees(&[0]);
        let keys_before: Vec<InKey> = (1..=cap + 5).flat_map(|h| s.bucket(h, cap as u32 + 1, 0)).collect();
        s.apply_edge_updates(&[], &[EdgeKey::new(0, cap + 4, 0), EdgeKey::new(0, cap + 5, 0)])
            .unwrap();
        s.fix_outdegrees(&[0]);
        assert_eq!(s.stored_outdeg(0), cap + 3);
        let keys_after: Vec<InKey> = (1..=cap + 3).flat_map(|h| s.bucket(h, cap as u32 + 1, 0)).collect();
        assert_eq!(keys_after, keys_before[..keys_after.len()].to_vec());
        assert!(s.check_structure().is_ok());
    }

    #[test]
    fn corrupted_key_is_reported() {
        let mut s = store(4, 2);
        let es = s
            .apply_edge_updates(&[NewEdge::new(0, 1, 0), NewEdge::new(2, 1, 0)], &[])
            .unwrap();
        assert!(s.check_structure().is_ok());
        s.debug_corrupt_level(es[1].uid, 2);
        let report = s.check_structure();
        assert!(!report.is_ok());
        assert!(report.violations.iter().all(|v| v.uid() == Some(es[1].uid)));
    }

    #[test]
    fn change_log_replays_to_current_orientation() {
        let mut s = store(5, 2);
        let es = s
            .apply_edge_updates(&[NewEdge::new(0, 1, 0), NewEdge::new(1, 2, 0), NewEdge::new(2, 3, 0)], &[])
            .unwrap();
        let mut snap: BTreeMap<EdgeKey, VertexId> = BTreeMap::new();
        s.drain_change_log().replay(&mut snap);
        s.reverse_edges(&[(es[0].uid, 0)]).unwrap();
        s.apply_edge_updates(&[NewEdge::new(3, 4, 0)], &[EdgeKey::new(1, 2, 0)])
            .unwrap();
        let new = s.uid_of(&EdgeKey::new(3, 4, 0)).unwrap();
        s.reverse_edges(&[(new, 0), (es[0].uid, 0)]).unwrap();
        s.drain_change_log().replay(&mut snap);
        let current: BTreeMap<EdgeKey, VertexId> =
            s.edges().into_iter().map(|e| (e.key(), e.tail)).collect();
        assert_eq!(snap, current);
    }
}
