//! Implicit coloring answered per query from the orientation of the first
//! low ladder level.
//!
//! The out-edges of each vertex, in index order, split the graph into
//! pseudoforests `F_1..F_d` (a vertex's `j`-th out-edge lies in `F_j`).
//! Each `F_j` gets a local 3-coloring by Cole-Vishkin bit reduction along
//! the successor chain, the `d` digits form a base-3 color, and two rounds
//! of Linial's polynomial reduction over out-neighborhoods shrink the
//! palette.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, ExposedOrientation, MetricsRecord, MultiLevel, Tracking, UpdateBatch};
use crate::orientation::VertexId;

/// Recorded constant for the palette ceiling `beta * rho^2`.
pub const IMPLICIT_BETA: f64 = 8000.0;

/// Largest number of pseudoforests whose base-3 digits fit in a `u128`.
const MAX_FORESTS: usize = 80;

/// The pseudoforest decomposition of one orientation.
#[derive(Clone, Copy, Debug)]
pub struct PseudoforestView<'a> {
    orient: &'a ExposedOrientation,
    forests: usize,
    n: usize,
}

impl<'a> PseudoforestView<'a> {
    /// `floor((2 + eps) * h)` forests, or the largest out-degree if that is
    /// bigger, so the forests always cover every edge.
    pub fn new(orient: &'a ExposedOrientation, h: f64, eps: f64, n: usize) -> Result<Self> {
        let forests = (((2.0 + eps) * h).floor() as usize).max(orient.max_out_degree());
        if forests > MAX_FORESTS {
            return Err(Error::Parameter(format!(
                "{forests} pseudoforests exceed the supported {MAX_FORESTS}"
            )));
        }
        Ok(PseudoforestView { orient, forests, n })
    }

    pub fn forests(&self) -> usize {
        self.forests
    }

    pub fn orientation(&self) -> &ExposedOrientation {
        self.orient
    }

    /// Head of `v`'s out-edge in `F_j` (1-based).
    pub fn successor(&self, v: VertexId, j: usize) -> Option<VertexId> {
        self.orient.kth_out(v, j)
    }

    /// Edges of `F_j` as `(tail, head)`, sorted.
    pub fn forest_edges(&self, j: usize) -> Vec<(VertexId, VertexId)> {
        let mut e: Vec<_> = self
            .orient
            .tails()
            .filter_map(|v| self.successor(v, j).map(|w| (v, w)))
            .collect();
        e.sort_unstable();
        e
    }

    fn bits(x: u64) -> u32 {
        (64 - x.leading_zeros()).max(1)
    }

    /// Cole-Vishkin rounds needed to reach 6 colors from ids in `0..n`.
    pub fn cv_rounds(&self) -> usize {
        let mut k = self.n.max(2) as u64;
        let mut r = 0;
        while k > 6 {
            k = 2 * Self::bits(k - 1) as u64;
            r += 1;
        }
        r
    }

    /// 3-coloring of `F_j` at `v`, from `v`'s successor chain only.
    pub fn forest_color(&self, v: VertexId, j: usize) -> u8 {
        let rounds = self.cv_rounds();
        let len = rounds + 8;
        let mut chain = vec![v];
        let mut next: Vec<Option<usize>> = Vec::new();
        let mut pos: HashMap<VertexId, usize> = HashMap::from([(v, 0)]);
        while chain.len() < len {
            let cur = *chain.last().unwrap();
            match self.successor(cur, j) {
                None => break,
                Some(w) => {
                    if let Some(&k) = pos.get(&w) {
                        next.push(Some(k));
                        break;
                    }
                    pos.insert(w, chain.len());
                    next.push(Some(chain.len()));
                    chain.push(w);
                }
            }
        }
        // The last vertex is a root when the chain ended or was truncated.
        next.resize(chain.len(), None);

        let mut c: Vec<u64> = chain.iter().map(|&x| x as u64).collect();
        for _ in 0..rounds {
            c = (0..c.len())
                .map(|i| match next[i] {
                    Some(k) => {
                        let b = (c[i] ^ c[k]).trailing_zeros() as u64;
                        2 * b + (c[i] >> b & 1)
                    }
                    None => c[i] & 1,
                })
                .collect();
        }
        for top in [5u64, 4, 3] {
            let old = c.clone();
            let shifted: Vec<u64> = (0..c.len())
                .map(|i| match next[i] {
                    Some(k) => old[k],
                    None => u64::from(old[i] == 0),
                })
                .collect();
            c = (0..c.len())
                .map(|i| {
                    if shifted[i] != top {
                        return shifted[i];
                    }
                    let succ = next[i].map(|k| shifted[k]);
                    (0..3).find(|&x| Some(x) != succ && x != old[i]).expect("three colors")
                })
                .collect();
        }
        debug_assert!(c[0] < 3);
        c[0] as u8
    }

    /// All forest colors of `v` read as a base-3 number, least significant
    /// digit for `F_1`.
    pub fn base_color(&self, v: VertexId) -> u128 {
        (1..=self.forests)
            .rev()
            .fold(0u128, |acc, j| acc * 3 + self.forest_color(v, j) as u128)
    }
}

fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Field size and polynomial degree for reducing a `k`-coloring of a graph
/// with out-degree at most `d`: degree `D = ceil(log_d k)` and the smallest
/// prime `q >= 4 d D + 1`. The result has fewer than `q^2` colors.
pub fn linial_field(d: usize, k: u128) -> (u64, u32) {
    let d = d.max(2) as u128;
    let mut deg = 1u32;
    let mut pow = d;
    while pow < k {
        pow = pow.saturating_mul(d);
        deg += 1;
    }
    let mut q = 4 * d as u64 * deg as u64 + 1;
    while !is_prime(q) {
        q += 1;
    }
    (q, deg)
}

fn poly_eval(color: u128, q: u64, deg: u32, x: u64) -> u64 {
    let q128 = q as u128;
    let mut digits = Vec::with_capacity(deg as usize + 1);
    let mut c = color;
    for _ in 0..=deg {
        digits.push((c % q128) as u64);
        c /= q128;
    }
    debug_assert_eq!(c, 0, "color does not fit the field");
    digits.iter().rev().fold(0u64, |acc, &a| (acc * x + a) % q)
}

/// One Linial step at `v` against its out-neighbors' colors.
fn linial_step(own: u128, outs: &[u128], q: u64, deg: u32) -> u128 {
    for x in 0..q {
        let y = poly_eval(own, q, deg, x);
        if outs.iter().all(|&o| poly_eval(o, q, deg, x) != y) {
            return x as u128 * q as u128 + y as u128;
        }
    }
    unreachable!("field larger than the number of blocked points")
}

/// Ladder plus query-time coloring.
#[derive(Clone, Debug)]
pub struct ImplicitColoring {
    ladder: MultiLevel<f64>,
}

impl ImplicitColoring {
    pub fn new(cfg: EstimatorConfig<f64>) -> Result<Self> {
        Ok(ImplicitColoring {
            ladder: MultiLevel::new(cfg, Tracking::Density)?,
        })
    }

    pub fn ladder(&self) -> &MultiLevel<f64> {
        &self.ladder
    }

    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<MetricsRecord> {
        self.ladder.apply_batch(batch)
    }

    /// Pseudoforests of the first low level.
    pub fn view(&self) -> Result<PseudoforestView<'_>> {
        let level = self.ladder.orientation()?;
        PseudoforestView::new(level.exposed(), level.h(), self.ladder.config().epsilon, self.ladder.config().n)
    }

    /// `(stage-one field, stage-two field)` for the current view.
    pub fn fields(&self) -> Result<((u64, u32), (u64, u32))> {
        let view = self.view()?;
        Ok(Self::fields_for(view.forests()))
    }

    fn fields_for(forests: usize) -> ((u64, u32), (u64, u32)) {
        let k0 = 3u128.pow(forests as u32);
        let f1 = linial_field(forests, k0);
        let f2 = linial_field(forests, f1.0 as u128 * f1.0 as u128);
        (f1, f2)
    }

    /// Upper end of the color range, `q2^2`.
    pub fn universe(&self) -> Result<u128> {
        let (_, (q2, _)) = self.fields()?;
        Ok(q2 as u128 * q2 as u128)
    }

    /// Colors of the queried vertices. Only radius-2 out-neighborhoods are
    /// read; answers are identical between updates.
    pub fn query(&self, vs: &[VertexId]) -> Result<BTreeMap<VertexId, u128>> {
        let view = self.view()?;
        let ((q1, d1), (q2, d2)) = Self::fields_for(view.forests());
        let o = view.orientation();
        let mut base: HashMap<VertexId, u128> = HashMap::new();
        let mut mid: HashMap<VertexId, u128> = HashMap::new();
        let base_of = |v: VertexId, base: &mut HashMap<VertexId, u128>| {
            *base.entry(v).or_insert_with(|| view.base_color(v))
        };
        let mut out = BTreeMap::new();
        for &v in vs {
            let stage1 = |u: VertexId, base: &mut HashMap<VertexId, u128>, mid: &mut HashMap<VertexId, u128>| {
                if let Some(&c) = mid.get(&u) {
                    return c;
                }
                let own = base_of(u, base);
                let outs: Vec<u128> = o.out_edges(u).into_iter().map(|(_, w)| base_of(w, base)).collect();
                let c = linial_step(own, &outs, q1, d1);
                mid.insert(u, c);
                c
            };
            let own = stage1(v, &mut base, &mut mid);
            let outs: Vec<u128> = o
                .out_edges(v)
                .into_iter()
                .map(|(_, w)| stage1(w, &mut base, &mut mid))
                .collect();
            out.insert(v, linial_step(own, &outs, q2, d2));
        }
        Ok(out)
    }
}
