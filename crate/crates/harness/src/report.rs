//! JSON-lines report records. Every line is one self-contained object with a
//! `record` tag.

use std::io::Write;

use batchcore::estimators::{InstanceMetrics, MetricsRecord};
use serde::Serialize;

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header(Header),
    Batch(BatchRecord),
    App(AppRecord),
    Bench(BenchRecord),
    Summary(SummaryRecord),
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Header {
    pub mode: String,
    pub n: usize,
    pub batches: usize,
    pub epsilon: f64,
    pub c_b: f64,
    pub seed: u64,
    pub levels: usize,
    pub b: usize,
}

/// Counters of one batch folded over all instances.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct MetricsSummary {
    pub instances: usize,
    pub max_bundle_iterations: usize,
    pub max_pushed_bundles: usize,
    pub max_phases: usize,
    pub flips: u64,
    pub ops: u64,
    pub repeat_flips: u64,
    /// Instances whose counters exceed their ceilings.
    pub out_of_bounds: usize,
}

impl MetricsSummary {
    pub fn of(instances: &[InstanceMetrics]) -> Self {
        let mut s = MetricsSummary {
            instances: instances.len(),
            ..Default::default()
        };
        for m in instances {
            let c = &m.counters;
            s.max_bundle_iterations = s.max_bundle_iterations.max(c.bundle_iterations);
            s.max_pushed_bundles = s.max_pushed_bundles.max(c.pushed_bundles);
            s.max_phases = s.max_phases.max(c.max_phases());
            s.flips += c.flips;
            s.ops += c.elementary_ops;
            s.repeat_flips += c.repeat_flips;
            s.out_of_bounds += usize::from(!m.within_bounds());
        }
        s
    }

    pub fn from_record(r: &MetricsRecord) -> Self {
        Self::of(&r.instances)
    }

    /// Per-field maximum, used for bench aggregates.
    pub fn max_with(&mut self, o: &MetricsSummary) {
        self.instances = self.instances.max(o.instances);
        self.max_bundle_iterations = self.max_bundle_iterations.max(o.max_bundle_iterations);
        self.max_pushed_bundles = self.max_pushed_bundles.max(o.max_pushed_bundles);
        self.max_phases = self.max_phases.max(o.max_phases);
        self.flips = self.flips.max(o.flips);
        self.ops = self.ops.max(o.ops);
        self.repeat_flips = self.repeat_flips.max(o.repeat_flips);
        self.out_of_bounds = self.out_of_bounds.max(o.out_of_bounds);
    }
}

/// Estimator output against the oracle for one batch.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct OracleDelta {
    /// Vertices of positive degree compared.
    pub core_checked: usize,
    pub core_within: usize,
    pub core_within_widened: usize,
    pub max_core: usize,
    pub rho: Option<f64>,
    pub lambda: Option<u64>,
    pub rho_ratio: Option<f64>,
    pub max_out_degree: Option<usize>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BatchRecord {
    pub index: usize,
    pub kind: String,
    pub size: usize,
    pub rejected: usize,
    pub edges: usize,
    /// One character per density level, `L` or `H`.
    pub verdicts: String,
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub core_sample: Vec<(usize, f64)>,
    pub metrics: MetricsSummary,
    pub oracle: Option<OracleDelta>,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AppRecord {
    pub index: usize,
    pub kind: String,
    pub size: usize,
    pub app: String,
    pub rejected: usize,
    /// Matched edges, or distinct colors in use.
    pub value: usize,
    pub log_size: usize,
    pub rounds: usize,
    pub touched: usize,
    pub metrics: MetricsSummary,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchRecord {
    pub index: usize,
    pub kind: String,
    pub size: usize,
    pub wall_ns: u128,
    pub metrics: MetricsSummary,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SummaryRecord {
    pub batches: usize,
    pub passed: bool,
    pub violations: Vec<(usize, String)>,
    /// Per-field maxima over batches (bench only).
    pub max: Option<MetricsSummary>,
    pub max_wall_ns: Option<u128>,
}

pub fn emit(out: &mut dyn Write, r: &Record) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, r)?;
    out.write_all(b"\n")
}
