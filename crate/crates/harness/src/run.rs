//! Drivers behind the `run`, `verify`, `bench` and `app` subcommands.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use batchcore::applications::{ExplicitColoring, ImplicitColoring, Matching};
use batchcore::estimators::{UpdateBatch, Verdict};
use batchcore::oracle::{exact_coreness, exact_density_arboricity, StaticGraph, SUBSET_LIMIT};
use batchcore::{Config, Estimator, Tracking};

use crate::report::{
    emit, AppRecord, BatchRecord, BenchRecord, Header, MetricsSummary, OracleDelta, Record, SummaryRecord,
};
use crate::stream::UpdateStream;
use crate::HarnessError;

/// Interval widening allowed for the randomized guarantees.
pub const WIDEN: f64 = 1.25;

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleMode {
    Off,
    /// Peeling coreness only.
    Peel,
    /// Peeling plus exhaustive density and arboricity.
    Exact,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AppKind {
    None,
    Matching,
    ExplicitColor,
    ImplicitColor,
}

impl AppKind {
    fn name(self) -> &'static str {
        match self {
            AppKind::None => "none",
            AppKind::Matching => "matching",
            AppKind::ExplicitColor => "explicit-color",
            AppKind::ImplicitColor => "implicit-color",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub epsilon: f64,
    pub c_b: Option<f64>,
    pub inner_epsilon: Option<f64>,
    pub seed: u64,
    pub max_level: Option<usize>,
    pub oracle: OracleMode,
    pub tracking: Tracking,
    pub rho_max: f64,
    pub app: AppKind,
    /// How many evenly spaced vertices get their coreness reported.
    pub sample: usize,
    /// Skip one out-degree correction before this batch (verifier self-test).
    pub inject_fault: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            epsilon: 0.1,
            c_b: None,
            inner_epsilon: None,
            seed: 0,
            max_level: None,
            oracle: OracleMode::Off,
            tracking: Tracking::Both,
            rho_max: 4.0,
            app: AppKind::None,
            sample: 8,
            inject_fault: None,
        }
    }
}

impl RunConfig {
    pub fn estimator_config(&self, n: usize) -> Result<Config, HarnessError> {
        let mut cfg = Config::new(n, self.epsilon)?.with_seed(self.seed);
        if let Some(c) = self.c_b {
            cfg = cfg.with_c_b(c);
        }
        if let Some(e) = self.inner_epsilon {
            cfg = cfg.with_inner_epsilon(e);
        }
        if let Some(l) = self.max_level {
            cfg = cfg.with_max_level(l);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn header(&self, mode: &str, s: &UpdateStream, cfg: &Config, batches: usize) -> Record {
        Record::Header(Header {
            mode: mode.into(),
            n: s.n,
            batches,
            epsilon: cfg.epsilon,
            c_b: cfg.c_b,
            seed: cfg.seed,
            levels: cfg.top_level() + 1,
            b: cfg.b(),
        })
    }
}

/// Outcome of a driver: violations with their batch index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub batches: usize,
    pub violations: Vec<(usize, String)>,
    pub max: Option<MetricsSummary>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn emit(&self, out: &mut dyn Write, max_wall_ns: Option<u128>) -> Result<(), HarnessError> {
        emit(
            out,
            &Record::Summary(SummaryRecord {
                batches: self.batches,
                passed: self.passed(),
                violations: self.violations.clone(),
                max: self.max.clone(),
                max_wall_ns,
            }),
        )?;
        Ok(())
    }
}

fn kind(b: &UpdateBatch) -> String {
    if b.is_insert() { "ins" } else { "del" }.into()
}

fn verdict_string(v: &[Verdict]) -> String {
    v.iter().map(|v| if *v == Verdict::Low { 'L' } else { 'H' }).collect()
}

fn sample_vertices(n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    let mut v: Vec<usize> = (0..k).map(|i| i * n / k).collect();
    v.dedup();
    v
}

/// Balance, structure and counter checks on every instance of the ladder.
pub fn invariant_violations(ml: &Estimator, metrics: &batchcore::estimators::MetricsRecord) -> Vec<String> {
    let mut out = Vec::new();
    for (name, inst) in ml.instances() {
        let bad = inst.balance_violations();
        if !bad.is_empty() {
            out.push(format!("{name}: {} edges break the balance condition", bad.len()));
        }
        let st = inst.check_structure();
        if !st.is_ok() {
            out.push(format!("{name}: structure: {:?}", st.violations[0]));
        }
        let stale = inst.stale_outdegrees();
        if !stale.is_empty() {
            out.push(format!("{name}: stale out-degree at vertex {}", stale[0]));
        }
    }
    for m in &metrics.instances {
        if !m.within_bounds() {
            out.push(format!(
                "level {} {:?} cap {}: counters exceed ceilings: {:?}",
                m.level, m.role, m.cap, m.counters
            ));
        }
    }
    out
}

/// Compares the estimator with the oracle. Coreness intervals are checked
/// strictly and widened; only the widened ones become violations.
pub fn oracle_delta(ml: &Estimator, mode: OracleMode, violations: &mut Vec<String>) -> Result<Option<OracleDelta>, HarnessError> {
    if mode == OracleMode::Off {
        return Ok(None);
    }
    let eps = ml.config().epsilon;
    let n = ml.config().n;
    let g = StaticGraph::new(n, ml.edges())?;
    let mut d = OracleDelta::default();
    if ml.tracking() != Tracking::Density {
        let core = exact_coreness(&g);
        d.max_core = core.iter().copied().max().unwrap_or(0);
        for (v, &c) in core.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let est = ml.coreness(v);
            let (lo, hi) = ((0.5 - eps) * c as f64, (2.0 + eps) * c as f64);
            d.core_checked += 1;
            d.core_within += usize::from(est >= lo && est <= hi);
            if est >= lo / WIDEN && est <= hi * WIDEN {
                d.core_within_widened += 1;
            } else {
                violations.push(format!("coreness of {v}: estimate {est} vs exact {c}"));
            }
        }
    }
    if mode == OracleMode::Exact && ml.tracking() != Tracking::Coreness {
        let (rho, lam) = exact_density_arboricity(&g)?;
        let rho = *rho.numer() as f64 / *rho.denom() as f64;
        d.rho = Some(rho);
        d.lambda = Some(lam);
        match ml.density() {
            Err(e) => violations.push(format!("density: {e}")),
            Ok(est) => {
                // Every level reports at least H_0 = 1, so bounds below 1 are floored.
                let (r_hi, l_hi) = (rho.max(1.0), (lam as f64).max(1.0));
                if rho > 0.0 {
                    d.rho_ratio = Some(est.rho / rho);
                }
                if est.rho < (1.0 - eps) * rho / WIDEN || est.rho > (1.0 + eps) * r_hi * WIDEN {
                    violations.push(format!("density estimate {} vs exact {rho}", est.rho));
                }
                let lam = lam as f64;
                if est.lambda < (1.0 - eps) * lam / WIDEN || est.lambda > (2.0 + eps) * l_hi * WIDEN {
                    violations.push(format!("arboricity estimate {} vs exact {lam}", est.lambda));
                }
                let o = ml.orientation()?.exposed();
                let top = o.max_out_degree();
                d.max_out_degree = Some(top);
                if top as f64 > (2.0 + eps) * r_hi * WIDEN {
                    violations.push(format!("orientation out-degree {top} vs density {rho}"));
                }
                if (top as f64) < rho {
                    violations.push(format!("orientation out-degree {top} below density {rho}"));
                }
            }
        }
    }
    Ok(Some(d))
}

fn check_size(n: usize, cfg: &RunConfig) -> Result<(), HarnessError> {
    if cfg.oracle == OracleMode::Exact && n > SUBSET_LIMIT {
        return Err(batchcore::Error::SizeLimit { n, limit: SUBSET_LIMIT }.into());
    }
    Ok(())
}

fn ladder_pass(
    mode: &str,
    s: &UpdateStream,
    rc: &RunConfig,
    out: &mut dyn Write,
    checks: bool,
) -> Result<Summary, HarnessError> {
    if checks {
        check_size(s.n, rc)?;
    }
    let cfg = rc.estimator_config(s.n)?;
    let batches = s.batches();
    emit(out, &rc.header(mode, s, &cfg, batches.len()))?;
    let mut ml = Estimator::new(cfg, rc.tracking)?;
    let sample = sample_vertices(s.n, rc.sample);
    let mut summary = Summary::default();
    for (index, b) in batches.iter().enumerate() {
        if rc.inject_fault == Some(index) {
            for lvl in ml.coreness_levels_mut() {
                lvl.inner_mut().debug_skip_next_fix();
            }
        }
        let rec = ml.apply_batch(b)?;
        let mut violations = Vec::new();
        let oracle = if checks {
            violations.extend(invariant_violations(&ml, &rec));
            oracle_delta(&ml, rc.oracle, &mut violations)?
        } else {
            None
        };
        let dens = ml.density().ok();
        let r = BatchRecord {
            index,
            kind: kind(b),
            size: b.len(),
            rejected: rec.rejected.len(),
            edges: ml.edge_count(),
            verdicts: verdict_string(&ml.verdicts()),
            rho: dens.as_ref().map(|d| d.rho),
            lambda: dens.as_ref().map(|d| d.lambda),
            core_sample: if rc.tracking == Tracking::Density {
                Vec::new()
            } else {
                sample.iter().map(|&v| (v, ml.coreness(v))).collect()
            },
            metrics: MetricsSummary::from_record(&rec),
            oracle,
            violations: violations.clone(),
        };
        emit(out, &Record::Batch(r))?;
        summary.violations.extend(violations.into_iter().map(|v| (index, v)));
        summary.batches += 1;
    }
    Ok(summary)
}

/// Feeds every batch to the ladder and reports estimates.
pub fn run(s: &UpdateStream, rc: &RunConfig, out: &mut dyn Write) -> Result<Summary, HarnessError> {
    let summary = ladder_pass("run", s, rc, out, false)?;
    summary.emit(out, None)?;
    Ok(summary)
}

/// Like [`run`], plus invariant and oracle checks after every batch.
pub fn verify(s: &UpdateStream, rc: &RunConfig, out: &mut dyn Write) -> Result<Summary, HarnessError> {
    let summary = ladder_pass("verify", s, rc, out, true)?;
    summary.emit(out, None)?;
    Ok(summary)
}

/// Per-batch wall time and counters, then per-field maxima.
pub fn bench(s: &UpdateStream, rc: &RunConfig, out: &mut dyn Write) -> Result<Summary, HarnessError> {
    let cfg = rc.estimator_config(s.n)?;
    let batches = s.batches();
    emit(out, &rc.header("bench", s, &cfg, batches.len()))?;
    let mut ml = Estimator::new(cfg, rc.tracking)?;
    let mut max = MetricsSummary::default();
    let mut max_wall = 0u128;
    for (index, b) in batches.iter().enumerate() {
        let t = Instant::now();
        let rec = ml.apply_batch(b)?;
        let wall_ns = t.elapsed().as_nanos();
        let metrics = MetricsSummary::from_record(&rec);
        max.max_with(&metrics);
        max_wall = max_wall.max(wall_ns);
        emit(
            out,
            &Record::Bench(BenchRecord {
                index,
                kind: kind(b),
                size: b.len(),
                wall_ns,
                metrics,
            }),
        )?;
    }
    let summary = Summary {
        batches: batches.len(),
        violations: Vec::new(),
        max: Some(max),
    };
    summary.emit(out, (!batches.is_empty()).then_some(max_wall))?;
    Ok(summary)
}

enum App {
    Matching(Matching),
    Explicit(ExplicitColoring),
    Implicit(ImplicitColoring),
}

/// Runs one application over the stream, checking it after every batch.
pub fn app(s: &UpdateStream, rc: &RunConfig, out: &mut dyn Write) -> Result<Summary, HarnessError> {
    let cfg = rc.estimator_config(s.n)?;
    let batches = s.batches();
    emit(out, &rc.header(rc.app.name(), s, &cfg, batches.len()))?;
    let mut app = match rc.app {
        AppKind::None => return Err(HarnessError::Usage("no application selected".into())),
        AppKind::Matching => App::Matching(Matching::new(&cfg, rc.rho_max)?),
        AppKind::ExplicitColor => App::Explicit(ExplicitColoring::new(&cfg, rc.rho_max)?),
        AppKind::ImplicitColor => App::Implicit(ImplicitColoring::new(cfg.clone())?),
    };
    let mut summary = Summary::default();
    for (index, b) in batches.iter().enumerate() {
        let mut violations = Vec::new();
        let mut r = AppRecord {
            index,
            kind: kind(b),
            size: b.len(),
            app: rc.app.name().into(),
            rejected: 0,
            value: 0,
            log_size: 0,
            rounds: 0,
            touched: 0,
            metrics: MetricsSummary::default(),
            violations: Vec::new(),
        };
        let step = match &mut app {
            App::Matching(m) => m.apply_batch(b).map(|am| {
                if let Err(e) = m.check() {
                    violations.push(e);
                }
                (am, m.size())
            }),
            App::Explicit(c) => c.apply_batch(b).map(|(_, am)| {
                if let Err(e) = c.check() {
                    violations.push(e);
                }
                let used: BTreeSet<u32> = (0..s.n).filter_map(|v| c.color(v)).collect();
                (am, used.len())
            }),
            App::Implicit(c) => c.apply_batch(b).and_then(|rec| {
                let used = implicit_check(c, &mut violations)?;
                Ok((
                    batchcore::applications::AppMetrics {
                        instances: rec.instances,
                        rejected: rec.rejected,
                        ..Default::default()
                    },
                    used,
                ))
            }),
        };
        let stop = match step {
            Ok((am, value)) => {
                r.rejected = am.rejected.len();
                r.value = value;
                r.log_size = am.log_size;
                r.rounds = am.rounds;
                r.touched = am.touched;
                r.metrics = MetricsSummary::of(&am.instances);
                false
            }
            Err(e) => {
                violations.push(e.to_string());
                true
            }
        };
        r.violations = violations.clone();
        emit(out, &Record::App(r))?;
        summary.violations.extend(violations.into_iter().map(|v| (index, v)));
        summary.batches += 1;
        if stop {
            break;
        }
    }
    summary.emit(out, None)?;
    Ok(summary)
}

/// Queries every non-isolated vertex twice; checks adjacency and stability.
/// Returns the number of distinct colors.
pub fn implicit_check(c: &ImplicitColoring, violations: &mut Vec<String>) -> batchcore::Result<usize> {
    let ml = c.ladder();
    let vs: Vec<usize> = (0..ml.config().n).filter(|&v| ml.degree(v) > 0).collect();
    let colors = c.query(&vs)?;
    if c.query(&vs)? != colors {
        violations.push("implicit colors changed between identical queries".into());
    }
    for (u, v) in ml.edges() {
        if colors[&u] == colors[&v] {
            violations.push(format!("edge ({u}, {v}) is monochromatic"));
        }
    }
    Ok(colors.values().collect::<BTreeSet<_>>().len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(text: &str) -> UpdateStream {
        UpdateStream::parse(text).unwrap()
    }

    fn lines(buf: &[u8]) -> Vec<serde_json::Value> {
        std::str::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn empty_stream_is_header_and_summary() {
        let mut buf = Vec::new();
        run(&stream("n 4\n"), &RunConfig::default(), &mut buf).unwrap();
        let recs = lines(&buf);
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0]["record"], "header");
        assert_eq!(recs[1]["record"], "summary");
    }

    #[test]
    fn k4_density_in_report() {
        let mut buf = Vec::new();
        let s = stream("n 4\n#batch ins\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
        run(&s, &RunConfig::default(), &mut buf).unwrap();
        let rho = lines(&buf)[1]["rho"].as_f64().unwrap();
        assert!((1.35..=1.65).contains(&rho), "{rho}");
    }

    #[test]
    fn exact_oracle_refuses_large_graphs() {
        let rc = RunConfig {
            oracle: OracleMode::Exact,
            ..Default::default()
        };
        let e = verify(&stream("n 30\n"), &rc, &mut Vec::new()).unwrap_err();
        assert!(matches!(e, HarnessError::Core(batchcore::Error::SizeLimit { .. })));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn sample_vertices_spread() {
        assert_eq!(sample_vertices(16, 4), vec![0, 4, 8, 12]);
        assert_eq!(sample_vertices(3, 8), vec![0, 1, 2]);
    }
}
