//! Text update streams.
//!
//! ```text
//! n 16 max_batch 4
//! #batch ins
//! 0 1
//! 2 3
//! #batch del
//! 0 1
//! #batch mixed
//! + 4 5
//! - 2 3
//! ```
//!
//! The `max_batch` field is optional. Mixed blocks are split into an insert
//! batch followed by a delete batch when fed to an estimator.

use std::fmt::Write as _;

use batchcore::estimators::UpdateBatch;
use batchcore::VertexId;

use crate::HarnessError;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Ins,
    Del,
    Mixed,
}

impl BlockKind {
    fn tag(self) -> &'static str {
        match self {
            BlockKind::Ins => "ins",
            BlockKind::Del => "del",
            BlockKind::Mixed => "mixed",
        }
    }
}

/// One record; `insert` is implied by the block kind unless mixed.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub insert: bool,
    pub u: VertexId,
    pub v: VertexId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub records: Vec<Record>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateStream {
    pub n: usize,
    pub max_batch: Option<usize>,
    pub blocks: Vec<Block>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        line,
        msg: msg.into(),
    }
}

fn vertex(tok: &str, line: usize) -> Result<VertexId, HarnessError> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("expected a vertex id, found {tok:?}")))
}

impl UpdateStream {
    pub fn new(n: usize) -> Self {
        UpdateStream {
            n,
            max_batch: None,
            blocks: Vec::new(),
        }
    }

    pub fn push(&mut self, batch: &UpdateBatch) {
        let insert = batch.is_insert();
        self.blocks.push(Block {
            kind: if insert { BlockKind::Ins } else { BlockKind::Del },
            records: batch.edges().iter().map(|&(u, v)| Record { insert, u, v }).collect(),
        });
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (no, head) = lines.next().ok_or_else(|| parse_err(1, "empty stream"))?;
        let toks: Vec<&str> = head.split_whitespace().collect();
        let (n, max_batch) = match toks.as_slice() {
            ["n", n] => (vertex(n, no)?, None),
            ["n", n, "max_batch", b] => (vertex(n, no)?, Some(vertex(b, no)?)),
            _ => return Err(parse_err(no, "header must be `n <int>` or `n <int> max_batch <int>`")),
        };
        let mut blocks: Vec<Block> = Vec::new();
        for (no, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks[0] == "#batch" {
                let kind = match toks.get(1..) {
                    Some(["ins"]) => BlockKind::Ins,
                    Some(["del"]) => BlockKind::Del,
                    Some(["mixed"]) => BlockKind::Mixed,
                    _ => return Err(parse_err(no, "batch delimiter must be `#batch ins|del|mixed`")),
                };
                blocks.push(Block {
                    kind,
                    records: Vec::new(),
                });
                continue;
            }
            let block = blocks
                .last_mut()
                .ok_or_else(|| parse_err(no, "edge line before the first `#batch`"))?;
            let rec = match (block.kind, toks.as_slice()) {
                (BlockKind::Ins, [u, v]) => Record {
                    insert: true,
                    u: vertex(u, no)?,
                    v: vertex(v, no)?,
                },
                (BlockKind::Del, [u, v]) => Record {
                    insert: false,
                    u: vertex(u, no)?,
                    v: vertex(v, no)?,
                },
                (BlockKind::Mixed, [sign @ ("+" | "-"), u, v]) => Record {
                    insert: *sign == "+",
                    u: vertex(u, no)?,
                    v: vertex(v, no)?,
                },
                (BlockKind::Mixed, _) => {
                    return Err(parse_err(no, format!("expected `+ u v` or `- u v`, found {line:?}")))
                }
                _ => return Err(parse_err(no, format!("expected `u v`, found {line:?}"))),
            };
            for x in [rec.u, rec.v] {
                if x >= n {
                    return Err(parse_err(no, format!("vertex {x} outside 0..{n}")));
                }
            }
            block.records.push(rec);
            if let Some(b) = max_batch {
                if block.records.len() > b {
                    return Err(parse_err(no, format!("batch exceeds declared max_batch {b}")));
                }
            }
        }
        Ok(UpdateStream { n, max_batch, blocks })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        match self.max_batch {
            Some(b) => writeln!(out, "n {} max_batch {b}", self.n),
            None => writeln!(out, "n {}", self.n),
        }
        .unwrap();
        for block in &self.blocks {
            writeln!(out, "#batch {}", block.kind.tag()).unwrap();
            for r in &block.records {
                if block.kind == BlockKind::Mixed {
                    let sign = if r.insert { '+' } else { '-' };
                    writeln!(out, "{sign} {} {}", r.u, r.v).unwrap();
                } else {
                    writeln!(out, "{} {}", r.u, r.v).unwrap();
                }
            }
        }
        out
    }

    /// Uniform batches in order; mixed blocks become inserts then deletes.
    pub fn batches(&self) -> Vec<UpdateBatch> {
        let mut out = Vec::new();
        for block in &self.blocks {
            let pick = |ins: bool| -> Vec<(VertexId, VertexId)> {
                block.records.iter().filter(|r| r.insert == ins).map(|r| (r.u, r.v)).collect()
            };
            match block.kind {
                BlockKind::Ins => out.push(UpdateBatch::Insert(pick(true))),
                BlockKind::Del => out.push(UpdateBatch::Delete(pick(false))),
                BlockKind::Mixed => {
                    let ins = pick(true);
                    let del = pick(false);
                    if !ins.is_empty() {
                        out.push(UpdateBatch::Insert(ins));
                    }
                    if !del.is_empty() {
                        out.push(UpdateBatch::Delete(del));
                    }
                }
            }
        }
        out
    }
}
