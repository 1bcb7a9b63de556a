//! Exact reference computations for small graphs, and empirical checks of
//! the sampling concentration bounds.

use std::collections::HashSet;

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orientation::VertexId;
use crate::rng::{stream, Purpose};

/// Largest universe accepted by the exhaustive subset oracles.
pub const SUBSET_LIMIT: usize = 24;

/// Simple undirected graph on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticGraph {
    n: usize,
    edges: Vec<(VertexId, VertexId)>,
    adj: Vec<Vec<VertexId>>,
}

impl StaticGraph {
    /// Endpoints are normalized to `(lo, hi)` and the list is sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(crate::orientation::EdgeKey::new(u, v, 0)));
            }
            list.push(e);
            adj[u].push(v);
            adj[v].push(u);
        }
        list.sort_unstable();
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(StaticGraph { n, edges: list, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    /// Same graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[VertexId]) -> Result<Self> {
        StaticGraph::new(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }
}

/// Min-degree peeling order with each vertex's degree at removal time.
/// Ties go to the smaller id.
pub fn peeling_order(g: &StaticGraph) -> Vec<(VertexId, usize)> {
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let maxd = deg.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<std::collections::BTreeSet<VertexId>> = vec![Default::default(); maxd + 1];
    for v in 0..n {
        buckets[deg[v]].insert(v);
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut lo = 0;
    for _ in 0..n {
        while buckets[lo].is_empty() {
            lo += 1;
        }
        let v = *buckets[lo].iter().next().unwrap();
        buckets[lo].remove(&v);
        removed[v] = true;
        order.push((v, deg[v]));
        for &w in g.neighbors(v) {
            if !removed[w] {
                buckets[deg[w]].remove(&w);
                deg[w] -= 1;
                buckets[deg[w]].insert(w);
                lo = lo.min(deg[w]);
            }
        }
    }
    order
}

/// Coreness of every vertex, indexed by id.
pub fn exact_coreness(g: &StaticGraph) -> Vec<usize> {
    let mut core = vec![0; g.n()];
    let mut running = 0;
    for (v, d) in peeling_order(g) {
        running = running.max(d);
        core[v] = running;
    }
    core
}

/// Coreness from the definition: the largest `k` such that `v` survives in
/// the `k`-core, found by iterated deletion of vertices of degree `< k`.
pub fn coreness_by_cores(g: &StaticGraph) -> Vec<usize> {
    let n = g.n();
    let mut core = vec![0; n];
    let mut k = 1;
    loop {
        let mut alive = vec![true; n];
        let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
        let mut stack: Vec<VertexId> = (0..n).filter(|&v| deg[v] < k).collect();
        for &v in &stack {
            alive[v] = false;
        }
        while let Some(v) = stack.pop() {
            for &w in g.neighbors(v) {
                if alive[w] {
                    deg[w] -= 1;
                    if deg[w] < k {
                        alive[w] = false;
                        stack.push(w);
                    }
                }
            }
        }
        if !alive.iter().any(|&a| a) {
            return core;
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
        k += 1;
    }
}

fn masks(g: &StaticGraph) -> Result<Vec<u32>> {
    if g.n() > SUBSET_LIMIT {
        return Err(Error::SizeLimit {
            n: g.n(),
            limit: SUBSET_LIMIT,
        });
    }
    let mut adj = vec![0u32; g.n()];
    for &(u, v) in g.edges() {
        adj[u] |= 1 << v;
        adj[v] |= 1 << u;
    }
    Ok(adj)
}

/// Best `(edges, size)` pairs found in one Gray-code sweep.
#[derive(Copy, Clone, Debug)]
struct Sweep {
    density: (u64, u64),
    arboricity: u64,
}

impl Sweep {
    fn empty() -> Self {
        Sweep {
            density: (0, 1),
            arboricity: 0,
        }
    }

    fn see(&mut self, e: u64, s: u64) {
        if s == 0 {
            return;
        }
        if e * self.density.1 > self.density.0 * s {
            self.density = (e, s);
        }
        if s >= 2 {
            self.arboricity = self.arboricity.max(e.div_ceil(s - 1));
        }
    }

    fn join(mut self, o: Sweep) -> Sweep {
        self.see(o.density.0, o.density.1);
        self.arboricity = self.arboricity.max(o.arboricity);
        self
    }
}

/// Visits every subset. The top bits are fixed per parallel chunk and the
/// low bits walk a Gray code so each step adds or drops one vertex.
fn sweep(adj: &[u32]) -> Sweep {
    let n = adj.len();
    let low = n.min(14);
    let high = n - low;
    (0u32..1 << high)
        .into_par_iter()
        .map(|hi| {
            let base = hi << low;
            let mut set = base;
            let mut e: u64 = 0;
            for v in low..n {
                if set >> v & 1 == 1 {
                    e += (adj[v] & set).count_ones() as u64;
                }
            }
            e /= 2;
            let mut s = set.count_ones() as u64;
            let mut best = Sweep::empty();
            best.see(e, s);
            for i in 1u32..1 << low {
                let v = i.trailing_zeros();
                let bit = 1u32 << v;
                let nb = (adj[v as usize] & set).count_ones() as u64;
                if set & bit == 0 {
                    set |= bit;
                    e += nb;
                    s += 1;
                } else {
                    set &= !bit;
                    e -= nb;
                    s -= 1;
                }
                best.see(e, s);
            }
            best
        })
        .reduce(Sweep::empty, Sweep::join)
}

/// `max |E[S]| / |S|` over nonempty `S`, exactly. Zero for edgeless graphs.
pub fn exact_density(g: &StaticGraph) -> Result<Ratio<u64>> {
    let adj = masks(g)?;
    if g.m() == 0 {
        return Ok(Ratio::from_integer(0));
    }
    let d = sweep(&adj).density;
    Ok(Ratio::new(d.0, d.1))
}

/// `max ceil(|E[S]| / (|S| - 1))` over `|S| >= 2`.
pub fn exact_arboricity(g: &StaticGraph) -> Result<u64> {
    let adj = masks(g)?;
    Ok(sweep(&adj).arboricity)
}

/// Density and arboricity from a single sweep.
pub fn exact_density_arboricity(g: &StaticGraph) -> Result<(Ratio<u64>, u64)> {
    let adj = masks(g)?;
    let s = sweep(&adj);
    let rho = if g.m() == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(s.density.0, s.density.1)
    };
    Ok((rho, s.arboricity))
}

/// Keeps each edge independently with probability `p`.
pub fn sample_edges(g: &StaticGraph, p: f64, seed: u64) -> Result<StaticGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("sampling probability {p} outside [0, 1]")));
    }
    let mut rng = stream(seed, 0, Purpose::Oracle);
    let kept: Vec<_> = g
        .edges()
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(p))
        .collect();
    StaticGraph::new(g.n(), kept)
}

/// Which sampled-graph bound a trial is checked against.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConcentrationBound {
    /// Sampled coreness is not much above `p` times the original.
    CorenessUpper,
    /// Sampled coreness is not much below `p` times the original.
    CorenessLower,
    Arboricity,
    Density,
}

impl ConcentrationBound {
    pub const ALL: [ConcentrationBound; 4] = [
        ConcentrationBound::CorenessUpper,
        ConcentrationBound::CorenessLower,
        ConcentrationBound::Arboricity,
        ConcentrationBound::Density,
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub trials: usize,
    /// Additive slack `c' ln(n) / eps` allowed on every inequality.
    pub slack: f64,
    /// `(bound, trials passed)`.
    pub passed: Vec<(ConcentrationBound, usize)>,
    /// Largest slack actually used per bound, over all trials.
    pub worst_slack_used: Vec<(ConcentrationBound, f64)>,
}

impl ConcentrationReport {
    pub fn pass_fraction(&self, b: ConcentrationBound) -> f64 {
        let hit = self.passed.iter().find(|(x, _)| *x == b).map(|x| x.1).unwrap_or(0);
        if self.trials == 0 {
            1.0
        } else {
            hit as f64 / self.trials as f64
        }
    }
}

/// Samples `trials` subgraphs and checks each two-sided bound with the
/// additive slack `c_prime * ln(n) / eps`. Trials run in parallel.
pub fn concentration_check(
    g: &StaticGraph,
    p: f64,
    eps: f64,
    trials: usize,
    seed: u64,
    c_prime: f64,
) -> Result<ConcentrationReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("epsilon {eps} outside (0, 1)")));
    }
    let n = g.n().max(2);
    let slack = c_prime * (n as f64).ln() / eps;
    let core = exact_coreness(g);
    let (rho, lam) = exact_density_arboricity(g)?;
    let rho = *rho.numer() as f64 / *rho.denom() as f64;
    let lam = lam as f64;
    let used: Vec<[f64; 4]> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[f64; 4]> {
            let gp = sample_edges(g, p, stream(seed, t as u64, Purpose::Oracle).gen())?;
            let cp = exact_coreness(&gp);
            let (rp, lp) = exact_density_arboricity(&gp)?;
            let rp = *rp.numer() as f64 / *rp.denom() as f64;
            let lp = lp as f64;
            let mut up = 0f64;
            let mut down = 0f64;
            for v in 0..g.n() {
                let k = core[v] as f64;
                up = up.max(cp[v] as f64 - (1.0 + eps) * p * k);
                down = down.max((1.0 - eps) * p * k - cp[v] as f64);
            }
            let two_sided = |x: f64, base: f64| {
                (x - (1.0 + eps) * p * base).max((1.0 - eps) * p * base - x).max(0.0)
            };
            Ok([up.max(0.0), down.max(0.0), two_sided(lp, lam), two_sided(rp, rho)])
        })
        .collect::<Result<_>>()?;
    let mut passed = Vec::new();
    let mut worst = Vec::new();
    for (i, b) in ConcentrationBound::ALL.into_iter().enumerate() {
        passed.push((b, used.iter().filter(|u| u[i] <= slack).count()));
        worst.push((b, used.iter().map(|u| u[i]).fold(0.0, f64::max)));
    }
    Ok(ConcentrationReport {
        trials,
        slack,
        passed,
        worst_slack_used: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clique(k: usize) -> Vec<(usize, usize)> {
        (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect()
    }

    #[test]
    fn coreness_examples() {
        let k4 = StaticGraph::new(4, clique(4)).unwrap();
        assert_eq!(exact_coreness(&k4), vec![3; 4]);
        let path = StaticGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(exact_coreness(&path), vec![1; 3]);
        let g = StaticGraph::new(5, [(1, 2), (2, 3), (1, 3), (1, 4)]).unwrap();
        assert_eq!(exact_coreness(&g), vec![0, 2, 2, 2, 1]);
    }

    #[test]
    fn density_examples() {
        let k4 = StaticGraph::new(4, clique(4)).unwrap();
        assert_eq!(exact_density(&k4).unwrap(), Ratio::new(3, 2));
        let tri = StaticGraph::new(3, clique(3)).unwrap();
        assert_eq!(exact_density(&tri).unwrap(), Ratio::from_integer(1));
        let padded = StaticGraph::new(7, clique(4)).unwrap();
        assert_eq!(exact_density(&padded).unwrap(), Ratio::new(3, 2));
    }

    #[test]
    fn arboricity_examples() {
        let k4 = StaticGraph::new(4, clique(4)).unwrap();
        assert_eq!(exact_arboricity(&k4).unwrap(), 2);
        let tree = StaticGraph::new(7, (1..7).map(|v| ((v - 1) / 2, v))).unwrap();
        assert_eq!(exact_arboricity(&tree).unwrap(), 1);
        let tri = StaticGraph::new(3, clique(3)).unwrap();
        assert_eq!(exact_arboricity(&tri).unwrap(), 2);
    }

    #[test]
    fn size_limit_and_bad_graphs() {
        let g = StaticGraph::new(25, [(0, 1)]).unwrap();
        assert_eq!(exact_density(&g), Err(Error::SizeLimit { n: 25, limit: 24 }));
        assert!(matches!(StaticGraph::new(3, [(1, 1)]), Err(Error::SelfLoop(1))));
        assert!(StaticGraph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(StaticGraph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn sampling_extremes() {
        let g = StaticGraph::new(10, clique(10)).unwrap();
        assert_eq!(sample_edges(&g, 1.0, 3).unwrap(), g);
        assert_eq!(sample_edges(&g, 0.0, 3).unwrap().m(), 0);
        assert!(sample_edges(&g, 1.5, 3).is_err());
    }

    #[test]
    fn sampling_half_concentrates() {
        // 1000 edges on 46 vertices (1035 possible; drop 35).
        let edges: Vec<_> = clique(46).into_iter().take(1000).collect();
        let g = StaticGraph::new(46, edges).unwrap();
        let tol = 5.0 * 250f64.sqrt();
        let good = (0..200)
            .filter(|&s| ((sample_edges(&g, 0.5, s).unwrap().m() as f64) - 500.0).abs() <= tol)
            .count();
        assert!(good >= 198, "{good}");
    }

    #[test]
    fn concentration_trivial_cases() {
        let g = StaticGraph::new(8, clique(8)).unwrap();
        let r = concentration_check(&g, 1.0, 0.3, 5, 1, 3.0).unwrap();
        for b in ConcentrationBound::ALL {
            assert_eq!(r.pass_fraction(b), 1.0);
        }
        assert!(r.worst_slack_used.iter().all(|w| w.1 == 0.0));
        let e = StaticGraph::new(8, []).unwrap();
        let r = concentration_check(&e, 0.5, 0.3, 5, 1, 3.0).unwrap();
        assert!(r.worst_slack_used.iter().all(|w| w.1 == 0.0));
    }

    fn small_graph() -> impl Strategy<Value = StaticGraph> {
        (2usize..11).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let all = clique(n);
                StaticGraph::new(n, all.into_iter().zip(bits).filter(|x| x.1).map(|x| x.0)).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn peeling_matches_core_definition(g in small_graph(), rot in 0usize..11) {
            let core = exact_coreness(&g);
            prop_assert_eq!(&core, &coreness_by_cores(&g));
            let n = g.n();
            let perm: Vec<usize> = (0..n).map(|v| (v + rot) % n).collect();
            let h = g.relabel(&perm).unwrap();
            let ch = exact_coreness(&h);
            for v in 0..n {
                prop_assert_eq!(core[v], ch[perm[v]]);
            }
        }

        #[test]
        fn density_arboricity_sandwich(g in small_graph()) {
            let (rho, lam) = exact_density_arboricity(&g).unwrap();
            prop_assert!(rho <= Ratio::from_integer(lam));
            prop_assert!(Ratio::from_integer(lam) <= rho * 2);
        }
    }
}
