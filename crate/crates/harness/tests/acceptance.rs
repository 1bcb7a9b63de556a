//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers as arguments to run
//! a subset, e.g. `cargo test -p batchcore-harness --test acceptance -- 5 6`.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use batchcore::applications::{ExplicitColoring, ImplicitColoring, Matching, IMPLICIT_BETA};
use batchcore::balanced::{bundle_iteration_bound, phase_ceiling, Balanced, PhaseCounters};
use batchcore::estimators::{MetricsRecord, UpdateBatch};
use batchcore::oracle::{
    concentration_check, exact_coreness, exact_density, exact_density_arboricity, ConcentrationBound,
    StaticGraph,
};
use batchcore::{Config, Error, Estimator, Tracking};
use batchcore_harness::run::{bench, implicit_check};
use batchcore_harness::{generate, GenKind, GenParams, RunConfig, UpdateStream};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Interval widening for the randomized guarantees.
const WIDEN: f64 = 1.25;
/// Required in-interval share for coreness triples.
const CORE_SHARE: f64 = 0.99;
/// Required in-interval share for density instances.
const DENSITY_SHARE: f64 = 0.95;
/// Required pass fraction per concentration bound.
const CONCENTRATION_SHARE: f64 = 0.95;
/// Threshold constant for the coreness workload.
const CORE_C_B: f64 = 0.02;
/// Threshold constant for the density workload.
const DENSITY_C_B: f64 = 0.05;
/// Single-edge work envelope: `ops <= OPS_ENVELOPE_C * (L + 1) * B^3`.
const OPS_ENVELOPE_C: u64 = 16;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Counter ceilings folded over every batch the suite runs.
#[derive(Default)]
struct Ceilings {
    insert_batches: usize,
    iteration_breaks: usize,
    worst_iteration_share: f64,
    delete_batches: usize,
    push_breaks: usize,
    worst_push_share: f64,
    bundles: usize,
    phase_breaks: usize,
    worst_phase_share: f64,
    repeat_flips: u64,
}

impl Ceilings {
    fn absorb(&mut self, cap: usize, c: &PhaseCounters, insert: bool) {
        if insert {
            self.insert_batches += 1;
            let bound = bundle_iteration_bound(cap);
            self.iteration_breaks += usize::from(c.bundle_iterations > bound);
            self.worst_iteration_share = self.worst_iteration_share.max(c.bundle_iterations as f64 / bound as f64);
        } else {
            self.delete_batches += 1;
            self.push_breaks += usize::from(c.pushed_bundles > cap);
            self.worst_push_share = self.worst_push_share.max(c.pushed_bundles as f64 / cap as f64);
        }
        let ceiling = phase_ceiling(cap);
        self.bundles += c.phases_per_bundle.len();
        self.phase_breaks += c.phases_per_bundle.iter().filter(|&&p| p > ceiling).count();
        self.worst_phase_share = self.worst_phase_share.max(c.max_phases() as f64 / ceiling as f64);
        self.repeat_flips += c.repeat_flips;
    }

    fn absorb_record(&mut self, r: &MetricsRecord, insert: bool) {
        for m in &r.instances {
            self.absorb(m.cap, &m.counters, insert);
        }
    }
}

/// Lower-bound checks on individual balanced instances.
#[derive(Default)]
struct LowerBound {
    checked: usize,
    breaks: Vec<String>,
}

impl LowerBound {
    /// The instance orients `k` copies of a simple graph; its largest
    /// out-degree must reach `k` times that graph's density.
    fn check(&mut self, name: &str, b: &Balanced) {
        let n = b.universe();
        let mut mult: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for e in b.store().edges() {
            *mult.entry((e.tail.min(e.head), e.tail.max(e.head))).or_default() += 1;
        }
        let Some(&k) = mult.values().next() else {
            return;
        };
        self.checked += 1;
        if mult.values().any(|&x| x != k) {
            self.breaks.push(format!("{name}: non-uniform copy counts"));
            return;
        }
        let g = StaticGraph::new(n, mult.keys().copied()).unwrap();
        let rho = exact_density(&g).unwrap();
        let top = (0..n).map(|v| b.out_degree(v)).max().unwrap_or(0) as u64;
        if top * rho.denom() < k as u64 * rho.numer() {
            self.breaks.push(format!("{name}: max out-degree {top} below {k} x {rho}"));
        }
    }
}

fn clique(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect()
}

fn density_f64(g: &StaticGraph) -> f64 {
    let r = exact_density(g).unwrap();
    *r.numer() as f64 / *r.denom() as f64
}

fn cfg(n: usize, eps: f64, c_b: f64, seed: u64) -> Config {
    Config::new(n, eps).unwrap().with_c_b(c_b).with_seed(seed)
}

// 1
fn balancedness(ceil: &mut Ceilings) -> Outcome {
    let n = 256;
    let (mut sequences, mut batches, mut checks) = (0, 0, 0);
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        for j in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 1000 + j);
            let h = [1, 2, 3, 4, 8, 16][rng.gen_range(0..6)];
            let k = rng.gen_range(1..=2);
            let mut b = Balanced::new(n, h, k).unwrap();
            let mut live: Vec<(usize, usize)> = Vec::new();
            let mut set = BTreeSet::new();
            for step in 0..8 {
                let size = rng.gen_range(1..=128);
                let mut ins = Vec::new();
                while ins.len() < size {
                    let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    if u != v && set.insert((u.min(v), u.max(v))) {
                        ins.push((u, v));
                    }
                }
                let del: Vec<(usize, usize)> = if step > 0 {
                    let take = rng.gen_range(1..=size.min(live.len()));
                    live.shuffle(&mut rng);
                    live.split_off(live.len() - take)
                } else {
                    Vec::new()
                };
                for kind in [true, false] {
                    let batch = if kind { &ins } else { &del };
                    if batch.is_empty() {
                        continue;
                    }
                    let rejected = if kind { b.insert_batch(batch) } else { b.delete_batch(batch) }.unwrap();
                    batches += 1;
                    ceil.absorb(b.cap(), b.counters(), kind);
                    checks += 1;
                    let ok = rejected.is_empty()
                        && b.verify_h_balanced()
                        && b.check_structure().is_ok()
                        && b.stale_outdegrees().is_empty();
                    if !ok {
                        failures.push(format!("seed {seed} seq {j} step {step}"));
                    }
                }
                for &(u, v) in &del {
                    set.remove(&(u.min(v), u.max(v)));
                }
                live.extend(ins.iter().map(|&(u, v)| (u.min(v), u.max(v))));
            }
            sequences += 1;
        }
    }
    outcome(
        failures.is_empty(),
        format!("{sequences} sequences, {batches} batches, {checks} checks, failures {:?}", failures.iter().take(3).collect::<Vec<_>>()),
    )
}

// 5
fn coreness(ceil: &mut Ceilings) -> Outcome {
    let eps = 0.1;
    let (mut total, mut strict, mut wide) = (0usize, 0usize, 0usize);
    let mut other = Vec::new();
    for seed in 0..10u64 {
        let p = GenParams {
            n: 200,
            m: 2000,
            batches: 50,
            churn: 0.2,
            seed,
            ..Default::default()
        };
        let s = generate(GenKind::GnmRandom, &p).unwrap();
        let mut ml = Estimator::new(cfg(200, eps, CORE_C_B, seed), Tracking::Coreness).unwrap();
        for b in s.batches() {
            let r = ml.apply_batch(&b).unwrap();
            ceil.absorb_record(&r, b.is_insert());
            if !r.rejected.is_empty() {
                other.push(format!("seed {seed}: rejections"));
            }
            for (name, inst) in ml.instances() {
                if !inst.verify_h_balanced() || !inst.check_structure().is_ok() {
                    other.push(format!("seed {seed}: {name} unbalanced"));
                }
            }
            let g = StaticGraph::new(200, ml.edges()).unwrap();
            for (v, &c) in exact_coreness(&g).iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let est = ml.coreness(v);
                let (lo, hi) = ((0.5 - eps) * c as f64, (2.0 + eps) * c as f64);
                total += 1;
                strict += usize::from(est >= lo && est <= hi);
                wide += usize::from(est >= lo / WIDEN && est <= hi * WIDEN);
            }
        }
    }
    let share = strict as f64 / total as f64;
    outcome(
        share >= CORE_SHARE && wide == total && other.is_empty(),
        format!("{strict}/{total} triples in interval ({:.4}), {wide}/{total} widened, c_B {CORE_C_B}, other {:?}", share, other.first()),
    )
}

/// The small exact corpus shared by criteria 6, 7 and 8.
struct DensityCase {
    rho: f64,
    lambda: f64,
    est_rho: f64,
    est_lambda: f64,
    max_out: usize,
}

fn density_corpus(ceil: &mut Ceilings, lower: &mut LowerBound) -> Vec<DensityCase> {
    let eps = 0.1;
    let mut out = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(6..=16);
        let m = rng.gen_range(n..=n * (n - 1) / 2);
        let mut all = clique(n);
        all.shuffle(&mut rng);
        all.truncate(m);
        let mut ml = Estimator::new(cfg(n, eps, DENSITY_C_B, seed), Tracking::Density).unwrap();
        for ch in all.chunks(7) {
            let r = ml.apply_batch(&UpdateBatch::Insert(ch.to_vec())).unwrap();
            ceil.absorb_record(&r, true);
        }
        for (name, inst) in ml.instances() {
            lower.check(&format!("graph {seed} {name}"), inst);
        }
        let g = StaticGraph::new(n, all).unwrap();
        let (rho, lam) = exact_density_arboricity(&g).unwrap();
        let d = ml.density().unwrap();
        out.push(DensityCase {
            rho: *rho.numer() as f64 / *rho.denom() as f64,
            lambda: lam as f64,
            est_rho: d.rho,
            est_lambda: d.lambda,
            max_out: ml.orientation().unwrap().exposed().max_out_degree(),
        });
    }
    out
}

// 6
fn density(cases: &[DensityCase]) -> Outcome {
    let eps = 0.1;
    let n = cases.len();
    let rho_in = cases
        .iter()
        .filter(|c| c.est_rho >= (1.0 - eps) * c.rho && c.est_rho <= (1.0 + eps) * c.rho)
        .count();
    let rho_wide = cases
        .iter()
        .filter(|c| c.est_rho >= (1.0 - eps) * c.rho / WIDEN && c.est_rho <= (1.0 + eps) * c.rho * WIDEN)
        .count();
    let lam_in = cases
        .iter()
        .filter(|c| c.est_lambda >= (1.0 - eps) * c.lambda && c.est_lambda <= (2.0 + eps) * c.lambda)
        .count();
    let lam_wide = cases
        .iter()
        .filter(|c| c.est_lambda >= (1.0 - eps) * c.lambda / WIDEN && c.est_lambda <= (2.0 + eps) * c.lambda * WIDEN)
        .count();
    let mut k4 = Estimator::new(cfg(4, eps, DENSITY_C_B, 0), Tracking::Density).unwrap();
    k4.apply_batch(&UpdateBatch::Insert(clique(4))).unwrap();
    let k4 = k4.density().unwrap().rho;
    let share = |x: usize| x as f64 / n as f64;
    let pass = share(rho_in) >= DENSITY_SHARE
        && rho_wide == n
        && share(lam_in) >= DENSITY_SHARE
        && lam_wide == n
        && (1.35..=1.65).contains(&k4);
    outcome(
        pass,
        format!("rho {rho_in}/{n} ({rho_wide} widened), lambda {lam_in}/{n} ({lam_wide} widened), K4 rho {k4:.4}, c_B {DENSITY_C_B}"),
    )
}

// 7
fn orientation(cases: &[DensityCase]) -> Outcome {
    let eps = 0.1;
    let ok = cases.iter().filter(|c| c.max_out as f64 <= (2.0 + eps) * c.rho * WIDEN).count();
    let worst = cases.iter().map(|c| c.max_out as f64 / c.rho).fold(0.0, f64::max);
    outcome(
        ok == cases.len(),
        format!("{ok}/{} instances, worst out-degree/rho {worst:.3}", cases.len()),
    )
}

// 8
fn lower_bound(lower: &mut LowerBound, ceil: &mut Ceilings) -> Outcome {
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let n = [20, 22, 24, 24][seed as usize];
        for h in [1, 2, 4] {
            let mut b = Balanced::new(n, h, 1).unwrap();
            let mut live: Vec<(usize, usize)> = Vec::new();
            let mut pool = clique(n);
            pool.shuffle(&mut rng);
            for step in 0..6 {
                let ins: Vec<_> = pool.drain(..pool.len().min(15)).collect();
                b.insert_batch(&ins).unwrap();
                ceil.absorb(b.cap(), b.counters(), true);
                live.extend(ins);
                lower.check(&format!("n {n} h {h} step {step} ins"), &b);
                if step % 2 == 1 {
                    live.shuffle(&mut rng);
                    let del = live.split_off(live.len() - 6);
                    b.delete_batch(&del).unwrap();
                    ceil.absorb(b.cap(), b.counters(), false);
                    pool.extend(del);
                    lower.check(&format!("n {n} h {h} step {step} del"), &b);
                }
            }
        }
    }
    outcome(
        lower.breaks.is_empty(),
        format!("{} orientations checked, breaks {:?}", lower.checked, lower.breaks.iter().take(3).collect::<Vec<_>>()),
    )
}

// 9
fn concentration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let gnp: Vec<_> = clique(16).into_iter().filter(|_| rng.gen_bool(0.5)).collect();
    let graphs = [("K16", StaticGraph::new(16, clique(16)).unwrap()), ("G(16,0.5)", StaticGraph::new(16, gnp).unwrap())];
    let mut worst: BTreeMap<ConcentrationBound, f64> = BTreeMap::new();
    for (gi, (_, g)) in graphs.iter().enumerate() {
        for (pi, p) in [0.3, 0.5, 0.8].into_iter().enumerate() {
            let r = concentration_check(g, p, 0.3, 50, (gi * 10 + pi) as u64, 3.0).unwrap();
            for b in ConcentrationBound::ALL {
                let w = worst.entry(b).or_insert(1.0);
                *w = w.min(r.pass_fraction(b));
            }
        }
    }
    outcome(
        worst.values().all(|&f| f >= CONCENTRATION_SHARE),
        format!("minimum pass fraction per bound {worst:?}"),
    )
}

/// Randomized streams for the applications with a density bound each.
fn app_corpus() -> Vec<(UpdateStream, f64)> {
    let mut out = Vec::new();
    for seed in 0..10u64 {
        let (kind, p) = if seed % 2 == 0 {
            (
                GenKind::GnmRandom,
                GenParams {
                    n: 64,
                    m: 160,
                    batches: 12,
                    churn: 0.3,
                    seed,
                    ..Default::default()
                },
            )
        } else {
            (
                GenKind::SlidingWindow,
                GenParams {
                    n: 64,
                    window: 120,
                    batch_size: 24,
                    batches: 12,
                    seed,
                    ..Default::default()
                },
            )
        };
        let s = generate(kind, &p).unwrap();
        // Degeneracy bounds density from above on every prefix.
        let mut live = BTreeSet::new();
        let mut degeneracy = 1;
        for b in s.batches() {
            for &(u, v) in b.edges() {
                let e = (u.min(v), u.max(v));
                if b.is_insert() {
                    live.insert(e);
                } else {
                    live.remove(&e);
                }
            }
            let g = StaticGraph::new(s.n, live.iter().copied()).unwrap();
            degeneracy = degeneracy.max(exact_coreness(&g).into_iter().max().unwrap_or(0));
        }
        out.push((s, degeneracy as f64));
    }
    out
}

// 10
fn matching(corpus: &[(UpdateStream, f64)]) -> Outcome {
    let mut batches = 0;
    let mut failures = Vec::new();
    for (i, (s, rho_max)) in corpus.iter().enumerate() {
        let mut m = Matching::new(&cfg(s.n, 0.1, DENSITY_C_B, i as u64), *rho_max).unwrap();
        for b in s.batches() {
            batches += 1;
            if let Err(e) = m.apply_batch(&b) {
                failures.push(format!("stream {i}: {e}"));
                break;
            }
            if let Err(e) = m.check() {
                failures.push(format!("stream {i}: {e}"));
            }
        }
    }
    let mut star = Matching::new(&cfg(10, 0.1, DENSITY_C_B, 0), 1.0).unwrap();
    star.apply_batch(&UpdateBatch::Insert((1..10).map(|v| (0, v)).collect())).unwrap();
    let star_ok = star.size() == 1 && star.check().is_ok();
    outcome(
        failures.is_empty() && star_ok,
        format!("{batches} batches on {} streams, star matched {}, failures {:?}", corpus.len(), star.size(), failures.first()),
    )
}

// 11
fn explicit(corpus: &[(UpdateStream, f64)]) -> Outcome {
    let (mut batches, mut exhausted) = (0, 0);
    let mut failures = Vec::new();
    let mut largest = (0u32, 0u32);
    for (i, (s, rho_max)) in corpus.iter().enumerate() {
        let mut c = ExplicitColoring::new(&cfg(s.n, 0.1, DENSITY_C_B, i as u64), *rho_max).unwrap();
        let bound = (300.0 * rho_max * (s.n as f64).ln()).ceil() as u32;
        if c.universe() > bound {
            failures.push(format!("stream {i}: universe {} above {bound}", c.universe()));
        }
        largest = largest.max((c.universe(), bound));
        for b in s.batches() {
            batches += 1;
            match c.apply_batch(&b) {
                Err(Error::PaletteExhausted(_)) => {
                    exhausted += 1;
                    break;
                }
                Err(e) => {
                    failures.push(format!("stream {i}: {e}"));
                    break;
                }
                Ok(_) => {}
            }
            if let Err(e) = c.check() {
                failures.push(format!("stream {i}: {e}"));
            }
        }
    }
    outcome(
        failures.is_empty() && exhausted == 0,
        format!(
            "{batches} batches, palette exhaustions {exhausted}, largest universe {} (bound {}), failures {:?}",
            largest.0,
            largest.1,
            failures.first()
        ),
    )
}

// 12
fn implicit(lower: &mut LowerBound) -> Outcome {
    let (mut batches, mut worst) = (0, 0.0f64);
    let mut failures = Vec::new();
    for seed in 0..5u64 {
        let p = GenParams {
            n: 20,
            m: 60,
            batches: 8,
            churn: 0.3,
            seed,
            ..Default::default()
        };
        let s = generate(GenKind::GnmRandom, &p).unwrap();
        let mut c = ImplicitColoring::new(cfg(20, 0.1, DENSITY_C_B, seed)).unwrap();
        for b in s.batches() {
            batches += 1;
            c.apply_batch(&b).unwrap();
            let mut v = Vec::new();
            let used = match implicit_check(&c, &mut v) {
                Ok(x) => x,
                Err(e) => {
                    failures.push(format!("seed {seed}: {e}"));
                    break;
                }
            };
            failures.extend(v.into_iter().map(|x| format!("seed {seed}: {x}")));
            let g = StaticGraph::new(20, c.ladder().edges()).unwrap();
            if g.m() > 0 {
                let rho = density_f64(&g);
                let share = used as f64 / (IMPLICIT_BETA * rho * rho);
                worst = worst.max(share);
                if share > 1.0 {
                    failures.push(format!("seed {seed}: {used} colors for rho {rho}"));
                }
            }
        }
        for (name, inst) in c.ladder().instances() {
            lower.check(&format!("implicit {seed} {name}"), inst);
        }
    }
    outcome(
        failures.is_empty(),
        format!("{batches} batches, beta {IMPLICIT_BETA}, worst colors/(beta rho^2) {worst:.2e}, failures {:?}", failures.first()),
    )
}

// 13
fn single_edge_envelope() -> Outcome {
    let n = 64;
    let eps = 0.1;
    let c = cfg(n, eps, DENSITY_C_B, 0);
    let envelope = OPS_ENVELOPE_C * (c.top_level() as u64 + 1) * (c.b() as u64).pow(3);
    let mut means = Vec::new();
    let mut worst = 0u64;
    let mut report_ok = true;
    for m in [100, 400, 1600] {
        let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
        let mut all = clique(n);
        all.shuffle(&mut rng);
        let (base, spare) = all.split_at(m);
        let mut s = UpdateStream::new(n);
        for ch in base.chunks(128) {
            s.push(&UpdateBatch::Insert(ch.to_vec()));
        }
        let warm = s.blocks.len();
        for &e in &spare[..15] {
            s.push(&UpdateBatch::Insert(vec![e]));
            s.push(&UpdateBatch::Delete(vec![e]));
        }
        let rc = RunConfig {
            c_b: Some(DENSITY_C_B),
            ..Default::default()
        };
        let mut buf = Vec::new();
        bench(&s, &rc, &mut buf).unwrap();
        let recs: Vec<serde_json::Value> = std::str::from_utf8(&buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        let per: Vec<&serde_json::Value> = recs.iter().filter(|r| r["record"] == "bench").collect();
        report_ok &= per.len() == s.blocks.len();
        let ops: Vec<u64> = per[warm..].iter().map(|r| r["metrics"]["ops"].as_u64().unwrap()).collect();
        let summary = recs.last().unwrap();
        let all_max = per.iter().map(|r| r["metrics"]["ops"].as_u64().unwrap()).max().unwrap();
        report_ok &= summary["max"]["ops"].as_u64() == Some(all_max);
        worst = worst.max(*ops.iter().max().unwrap());
        means.push((m, ops.iter().sum::<u64>() / ops.len() as u64));
    }
    outcome(
        worst <= envelope && report_ok,
        format!("worst single-edge ops {worst}, envelope {envelope} = {OPS_ENVELOPE_C}(L+1)B^3, mean ops by m {means:?}, per-batch reporting {report_ok}"),
    )
}

fn main() -> ExitCode {
    let wanted: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |i: usize| wanted.is_empty() || wanted.contains(&i);
    let mut ceil = Ceilings::default();
    let mut lower = LowerBound::default();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let timed = |i: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome, results: &mut Vec<(usize, &str, Outcome, f64)>| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {i:>2} {} {name}: {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((i, name, o, secs));
    };
    let counters_needed = [2, 3, 4].iter().any(|&i| want(i));
    if want(1) || counters_needed {
        timed(1, "balancedness invariant", &mut || balancedness(&mut ceil), &mut results);
    }
    if want(5) || counters_needed {
        timed(5, "coreness approximation", &mut || coreness(&mut ceil), &mut results);
    }
    let mut cases = Vec::new();
    if [6, 7, 8].iter().any(|&i| want(i)) || counters_needed {
        let t = Instant::now();
        cases = density_corpus(&mut ceil, &mut lower);
        println!("density corpus built in {:.1}s", t.elapsed().as_secs_f64());
        if want(6) {
            timed(6, "density approximation", &mut || density(&cases), &mut results);
        }
        if want(7) {
            timed(7, "orientation bound", &mut || orientation(&cases), &mut results);
        }
    }
    if want(12) || want(8) {
        timed(12, "implicit coloring", &mut || implicit(&mut lower), &mut results);
    }
    if want(8) {
        timed(8, "exact lower bound", &mut || lower_bound(&mut lower, &mut ceil), &mut results);
    }
    if counters_needed {
        let c = &ceil;
        timed(
            2,
            "bundle-extraction ceiling",
            &mut || outcome(c.iteration_breaks == 0, format!("{} insert batch instances, breaks {}, worst share of 2(cap+1)^2+3 {:.3}", c.insert_batches, c.iteration_breaks, c.worst_iteration_share)),
            &mut results,
        );
        timed(
            3,
            "deletion bundle ceiling",
            &mut || outcome(c.push_breaks == 0, format!("{} delete batch instances, breaks {}, worst share of cap {:.3}", c.delete_batches, c.push_breaks, c.worst_push_share)),
            &mut results,
        );
        timed(
            4,
            "phase ceiling",
            &mut || {
                outcome(
                    c.phase_breaks == 0 && c.repeat_flips == 0,
                    format!("{} bundles, breaks {}, worst share of 8 cap^3 {:.2e}, repeat flips {}", c.bundles, c.phase_breaks, c.worst_phase_share, c.repeat_flips),
                )
            },
            &mut results,
        );
    }
    if want(9) {
        timed(9, "concentration suite", &mut concentration, &mut results);
    }
    if want(10) || want(11) {
        let corpus = app_corpus();
        if want(10) {
            timed(10, "matching", &mut || matching(&corpus), &mut results);
        }
        if want(11) {
            timed(11, "explicit coloring", &mut || explicit(&corpus), &mut results);
        }
    }
    if want(13) {
        timed(13, "single-edge work envelope", &mut single_edge_envelope, &mut results);
    }
    drop(cases);
    results.retain(|r| want(r.0));
    results.sort_by_key(|r| r.0);
    println!("---");
    for (i, name, o, _) in &results {
        println!("criterion {i:>2} {} {name}", if o.pass { "PASS" } else { "FAIL" });
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
