//! Explicit coloring from fixed random palettes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rayon::prelude::*;

use super::{log_size, AppMetrics, LowOutDegree};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, UpdateBatch};
use crate::orientation::VertexId;
use crate::rng::{stream, Purpose};

/// Multiplier in the color universe `C = ceil(300 * rho_max * ln n)`.
pub const UNIVERSE_FACTOR: f64 = 300.0;

#[derive(Clone, Debug)]
pub struct ExplicitColoring {
    orient: LowOutDegree,
    universe: u32,
    include_p: f64,
    seed: u64,
    palettes: HashMap<VertexId, Vec<u32>>,
    chosen: HashMap<VertexId, u32>,
}

impl ExplicitColoring {
    pub fn new(cfg: &EstimatorConfig<f64>, rho_max: f64) -> Result<Self> {
        let orient = LowOutDegree::new(cfg, rho_max)?;
        let ln_n = (cfg.n.max(2) as f64).ln();
        let universe = (UNIVERSE_FACTOR * rho_max * ln_n).ceil().max(1.0) as u32;
        Ok(ExplicitColoring {
            orient,
            universe,
            include_p: (1.0 / (2.0 * rho_max)).min(1.0),
            seed: cfg.seed,
            palettes: HashMap::new(),
            chosen: HashMap::new(),
        })
    }

    pub fn orientation(&self) -> &LowOutDegree {
        &self.orient
    }

    /// Size `C` of the color universe; colors are `1..=C`.
    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn palette(&self, v: VertexId) -> Option<&[u32]> {
        self.palettes.get(&v).map(|p| p.as_slice())
    }

    pub fn color(&self, v: VertexId) -> Option<u32> {
        self.chosen.get(&v).copied()
    }

    pub fn palette_count(&self) -> usize {
        self.palettes.len()
    }

    /// Draws `v`'s palette the first time it is seen; never redrawn.
    fn ensure_palette(&mut self, v: VertexId) {
        if self.palettes.contains_key(&v) {
            return;
        }
        let mut rng = stream(self.seed, v as u64, Purpose::Palette);
        let p = self.include_p;
        let pal: Vec<u32> = (1..=self.universe).filter(|_| rng.gen_bool(p)).collect();
        self.palettes.insert(v, pal);
    }

    fn pick(&self, v: VertexId) -> Result<u32> {
        let pal = &self.palettes[&v];
        let mut blocked = BTreeSet::new();
        for (_, w) in self.orient.orientation().out_edges(v) {
            if let Some(p) = self.palettes.get(&w) {
                blocked.extend(p.iter().copied());
            }
        }
        pal.iter()
            .copied()
            .find(|c| !blocked.contains(c))
            .ok_or(Error::PaletteExhausted(v))
    }

    /// Applies the batch and recolors every vertex whose out-neighborhood
    /// changed. Returns the new colors of recolored vertices.
    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<(BTreeMap<VertexId, u32>, AppMetrics)> {
        let applied = self.orient.apply(batch)?;
        let mut dirty = BTreeSet::new();
        for e in applied.log.inserted.values() {
            dirty.insert(e.tail);
            dirty.insert(e.head);
        }
        for (_, r) in &applied.log.reversed {
            dirty.insert(r.from_tail);
            dirty.insert(r.to_tail);
        }
        for key in &applied.log.deleted {
            dirty.insert(key.lo);
            dirty.insert(key.hi);
        }
        for &v in &dirty {
            self.ensure_palette(v);
        }
        let picks: Vec<(VertexId, Result<u32>)> = dirty.par_iter().map(|&v| (v, self.pick(v))).collect();
        let mut changed = BTreeMap::new();
        for (v, c) in picks {
            let c = c?;
            if self.chosen.insert(v, c) != Some(c) {
                changed.insert(v, c);
            }
        }
        self.orient.contract(applied.verdict)?;
        Ok((
            changed,
            AppMetrics {
                log_size: log_size(&applied.log),
                instances: applied.instances,
                rejected: applied.rejected,
                rounds: 1,
                touched: dirty.len(),
            },
        ))
    }

    /// Every live edge has distinct colors drawn from the endpoints'
    /// palettes, inside the universe.
    pub fn check(&self) -> std::result::Result<(), String> {
        for (&v, &c) in &self.chosen {
            if c == 0 || c > self.universe {
                return Err(format!("color {c} of {v} outside 1..={}", self.universe));
            }
            if self.palettes[&v].binary_search(&c).is_err() {
                return Err(format!("color {c} of {v} not in its palette"));
            }
        }
        for (t, h) in self.orient.orientation().edges() {
            match (self.color(t), self.color(h)) {
                (Some(a), Some(b)) if a != b => {}
                (a, b) => return Err(format!("edge ({t}, {h}) colored {a:?} / {b:?}")),
            }
        }
        Ok(())
    }
}
