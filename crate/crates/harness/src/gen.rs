//! Deterministic workload generators.

use std::collections::{HashSet, VecDeque};

use batchcore::estimators::UpdateBatch;
use batchcore::VertexId;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::stream::UpdateStream;
use crate::HarnessError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    /// Uniform random edges, optionally with delete batches in between.
    GnmRandom,
    /// Sparse random background plus a planted `k`-clique.
    CliquePlant,
    /// Fresh edges in, oldest edges out, live set capped at `window`.
    SlidingWindow,
    /// Out-degree staircases whose tops are repeatedly joined and split.
    AdversarialStair,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub n: usize,
    /// Target live edge count (background edges for clique-plant).
    pub m: usize,
    /// Clique size or staircase height.
    pub k: usize,
    pub batches: usize,
    /// Batch size for sliding-window.
    pub batch_size: usize,
    pub window: usize,
    /// Share of an insert batch removed by the following delete batch.
    pub churn: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: 16,
            m: 40,
            k: 4,
            batches: 10,
            batch_size: 8,
            window: 64,
            churn: 0.0,
            seed: 0,
        }
    }
}

fn param(msg: impl Into<String>) -> HarnessError {
    HarnessError::Core(batchcore::Error::Parameter(msg.into()))
}

fn max_pairs(n: usize) -> usize {
    n.saturating_sub(1) * n / 2
}

/// Live-set bookkeeping shared by the generators.
struct Live {
    set: HashSet<(VertexId, VertexId)>,
    list: Vec<(VertexId, VertexId)>,
}

impl Live {
    fn new() -> Self {
        Live {
            set: HashSet::new(),
            list: Vec::new(),
        }
    }

    fn add(&mut self, e: (VertexId, VertexId)) -> bool {
        let e = (e.0.min(e.1), e.0.max(e.1));
        if e.0 == e.1 || !self.set.insert(e) {
            return false;
        }
        self.list.push(e);
        true
    }

    fn remove(&mut self, e: (VertexId, VertexId)) {
        self.set.remove(&e);
        self.list.retain(|x| *x != e);
    }

    fn fresh(&mut self, rng: &mut ChaCha8Rng, n: usize, avoid: &HashSet<(VertexId, VertexId)>) -> Option<(VertexId, VertexId)> {
        if self.set.len() + avoid.len() >= max_pairs(n) {
            return None;
        }
        loop {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let e = (u.min(v), u.max(v));
            if u != v && !avoid.contains(&e) && self.add(e) {
                return Some(e);
            }
        }
    }
}

pub fn generate(kind: GenKind, p: &GenParams) -> Result<UpdateStream, HarnessError> {
    if p.n < 2 {
        return Err(param("need at least two vertices"));
    }
    if p.m > max_pairs(p.n) {
        return Err(param(format!("m = {} exceeds n(n-1)/2 = {}", p.m, max_pairs(p.n))));
    }
    if !(0.0..=1.0).contains(&p.churn) {
        return Err(param("churn must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let batches = match kind {
        GenKind::GnmRandom => gnm(p, &mut rng),
        GenKind::CliquePlant => clique_plant(p, &mut rng)?,
        GenKind::SlidingWindow => sliding(p, &mut rng)?,
        GenKind::AdversarialStair => stair(p)?,
    };
    let mut s = UpdateStream::new(p.n);
    s.max_batch = batches.iter().map(|b| b.len()).max();
    for b in batches.iter().filter(|b| !b.is_empty()) {
        s.push(b);
    }
    Ok(s)
}

fn gnm(p: &GenParams, rng: &mut ChaCha8Rng) -> Vec<UpdateBatch> {
    let batches = p.batches.max(1);
    let ins_batches = if p.churn > 0.0 { batches.div_ceil(2) } else { batches };
    let per = p.m.div_ceil(ins_batches).max(1);
    let kill = (p.churn * per as f64).ceil() as usize;
    let mut live = Live::new();
    let none = HashSet::new();
    let mut out = Vec::new();
    for b in 0..batches {
        if p.churn > 0.0 && b % 2 == 1 {
            let mut gone: Vec<_> = live.list.choose_multiple(rng, kill.min(live.list.len())).copied().collect();
            gone.sort_unstable();
            for &e in &gone {
                live.remove(e);
            }
            out.push(UpdateBatch::Delete(gone));
        } else {
            let want = per.min(p.m.saturating_sub(live.list.len()));
            let fresh: Vec<_> = (0..want).filter_map(|_| live.fresh(rng, p.n, &none)).collect();
            out.push(UpdateBatch::Insert(fresh));
        }
    }
    out
}

fn clique_plant(p: &GenParams, rng: &mut ChaCha8Rng) -> Result<Vec<UpdateBatch>, HarnessError> {
    if p.k > p.n || p.k < 2 {
        return Err(param(format!("clique size {} must lie in 2..={}", p.k, p.n)));
    }
    let mut members: Vec<VertexId> = (0..p.n).collect();
    members.shuffle(rng);
    members.truncate(p.k);
    members.sort_unstable();
    let mut clique = HashSet::new();
    let mut clique_edges = Vec::new();
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            clique.insert((a, b));
            clique_edges.push((a, b));
        }
    }
    if p.m + clique.len() > max_pairs(p.n) {
        return Err(param("background plus clique exceeds n(n-1)/2"));
    }
    let mut live = Live::new();
    let mut edges: Vec<(VertexId, VertexId)> =
        (0..p.m).filter_map(|_| live.fresh(rng, p.n, &clique)).collect();
    edges.extend(clique_edges);
    edges.shuffle(rng);
    let batches = p.batches.max(1);
    let per = edges.len().div_ceil(batches).max(1);
    Ok(edges.chunks(per).map(|c| UpdateBatch::Insert(c.to_vec())).collect())
}

fn sliding(p: &GenParams, rng: &mut ChaCha8Rng) -> Result<Vec<UpdateBatch>, HarnessError> {
    if p.window == 0 || p.batch_size == 0 {
        return Err(param("window and batch size must be positive"));
    }
    if p.window + p.batch_size > max_pairs(p.n) {
        return Err(param("window plus batch size exceeds n(n-1)/2"));
    }
    let mut live = Live::new();
    let mut order: VecDeque<(VertexId, VertexId)> = VecDeque::new();
    let none = HashSet::new();
    let mut out = Vec::new();
    while out.len() < p.batches.max(1) {
        let fresh: Vec<_> = (0..p.batch_size).filter_map(|_| live.fresh(rng, p.n, &none)).collect();
        order.extend(fresh.iter().copied());
        out.push(UpdateBatch::Insert(fresh));
        if order.len() > p.window && out.len() < p.batches {
            let mut old = Vec::new();
            while order.len() > p.window {
                let e = order.pop_front().unwrap();
                live.remove(e);
                old.push(e);
            }
            out.push(UpdateBatch::Delete(old));
        }
    }
    Ok(out)
}

/// Staircase `i` has a spine `s_0 .. s_h` where `s_j` owns `j - 1` private
/// leaves plus the spine edge to `s_{j-1}`, so out-degrees rise by one per
/// step. Tops are then paired, unpaired and re-paired, one batch each.
fn stair(p: &GenParams) -> Result<Vec<UpdateBatch>, HarnessError> {
    let h = p.k.max(2);
    let per_stair = (h + 1) + (1..=h).map(|j| j - 1).sum::<usize>();
    let stairs = p.n / per_stair;
    if stairs < 2 {
        return Err(param(format!("need n >= {} for two staircases of height {h}", 2 * per_stair)));
    }
    let mut build = Vec::new();
    let mut tops = Vec::new();
    for s in 0..stairs {
        let base = s * per_stair;
        let spine: Vec<VertexId> = (0..=h).map(|j| base + j).collect();
        let mut leaf = base + h + 1;
        for j in 1..=h {
            build.push((spine[j], spine[j - 1]));
            for _ in 0..j - 1 {
                build.push((spine[j], leaf));
                leaf += 1;
            }
        }
        tops.push(spine[h]);
    }
    let mut out = vec![UpdateBatch::Insert(build)];
    let pairs: Vec<Vec<(VertexId, VertexId)>> = (0..2)
        .map(|shift| {
            (0..stairs / 2)
                .map(|i| {
                    let a = tops[(2 * i + shift) % stairs];
                    let b = tops[(2 * i + 1 + shift) % stairs];
                    (a.min(b), a.max(b))
                })
                .collect::<HashSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();
    let mut round = 0;
    while out.len() < p.batches.max(1) {
        let mut m = pairs[round % 2].clone();
        m.sort_unstable();
        out.push(UpdateBatch::Insert(m.clone()));
        if out.len() < p.batches {
            out.push(UpdateBatch::Delete(m));
        }
        round += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnm_is_deterministic_and_simple() {
        let p = GenParams {
            n: 16,
            m: 40,
            batches: 10,
            seed: 7,
            ..Default::default()
        };
        let a = generate(GenKind::GnmRandom, &p).unwrap().serialize();
        let b = generate(GenKind::GnmRandom, &p).unwrap().serialize();
        assert_eq!(a, b);
        let s = UpdateStream::parse(&a).unwrap();
        let total: usize = s.batches().iter().map(|b| b.len()).sum();
        assert_eq!(total, 40);
    }

    #[test]
    fn infeasible_m_rejected() {
        let p = GenParams {
            n: 5,
            m: 11,
            ..Default::default()
        };
        assert!(generate(GenKind::GnmRandom, &p).is_err());
    }

    #[test]
    fn sliding_window_caps_live_edges() {
        let p = GenParams {
            n: 30,
            window: 20,
            batch_size: 7,
            batches: 12,
            seed: 1,
            ..Default::default()
        };
        let s = generate(GenKind::SlidingWindow, &p).unwrap();
        let mut live = HashSet::new();
        for b in s.batches() {
            for &(u, v) in b.edges() {
                if b.is_insert() {
                    assert!(live.insert((u, v)));
                } else {
                    assert!(live.remove(&(u, v)));
                }
            }
            if !b.is_insert() {
                assert!(live.len() <= 20);
            }
        }
    }

    #[test]
    fn stair_pairs_tops() {
        let p = GenParams {
            n: 40,
            k: 4,
            batches: 5,
            ..Default::default()
        };
        let s = generate(GenKind::AdversarialStair, &p).unwrap();
        let b = s.batches();
        assert_eq!(b.len(), 5);
        assert!(b[1].is_insert() && !b[2].is_insert());
        assert_eq!(b[1].edges(), b[2].edges());
    }
}
