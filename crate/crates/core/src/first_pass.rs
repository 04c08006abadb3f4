//! Desk-scale first coding pass.
//!
//! Each block of the current frame is matched at integer-pixel accuracy
//! against the previous frame only. The per-block results are folded into
//! [`FrameFirstPassStats`], which carry the three per-frame terms the
//! stillness metrics are built from.
//!
//! Motion vectors point from the current block to its prediction in the
//! reference: block `(x, y)` is predicted by the reference block at
//! `(x + dx, y + dy)`. Content that moved right by 2 px between the
//! reference and the current frame therefore yields `dx = -2`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::video_io::FramePlane;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("frame dimensions differ: {cur_w}x{cur_h} vs reference {ref_w}x{ref_h}")]
    DimensionMismatch {
        cur_w: usize,
        cur_h: usize,
        ref_w: usize,
        ref_h: usize,
    },
    #[error("block size {0} not supported (expected 8, 16 or 32)")]
    BlockSize(usize),
    #[error("search range must be at least 1")]
    SearchRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    pub fn is_zero(self) -> bool {
        self == Self::ZERO
    }

    fn l1(self) -> u32 {
        self.dx.unsigned_abs() + self.dy.unsigned_abs()
    }
}

impl fmt::Display for MotionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.dx, self.dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    #[default]
    Exhaustive,
    Diamond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub block_size: usize,
    pub search_range: i32,
    pub search_kind: SearchKind,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            block_size: 16,
            search_range: 8,
            search_kind: SearchKind::Exhaustive,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !matches!(self.block_size, 8 | 16 | 32) {
            return Err(AnalysisError::BlockSize(self.block_size));
        }
        if self.search_range < 1 {
            return Err(AnalysisError::SearchRange);
        }
        Ok(())
    }
}

/// Top-left corner of a block, in block-grid units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockOrigin {
    pub col: usize,
    pub row: usize,
}

/// Outcome of matching one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMatch {
    pub mv: MotionVector,
    pub best_sse: u64,
    pub zero_mv_sse: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStats {
    pub block_col: usize,
    pub block_row: usize,
    pub best_mv: MotionVector,
    pub best_sse: u64,
    pub zero_mv_sse: u64,
    pub intra_proxy_sse: u64,
    pub is_inter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFirstPassStats {
    pub frame_index: usize,
    pub pcnt_zero_motion: f64,
    pub frame_sse: u64,
    pub zero_mv_sse_stdev: f64,
    pub block_count: usize,
    pub inter_count: usize,
}

/// Ordering key for candidates: lower SSE, then shorter vector, then
/// smaller `dy`, then smaller `dx`.
#[inline]
fn candidate_key(sse: u64, mv: MotionVector) -> (u64, u32, i32, i32) {
    (sse, mv.l1(), mv.dy, mv.dx)
}

#[inline]
fn block_sse(
    cur: &FramePlane,
    reference: &FramePlane,
    x0: usize,
    y0: usize,
    rx: usize,
    ry: usize,
    size: usize,
) -> u64 {
    let mut sse = 0u64;
    for row in 0..size {
        let a = &cur.row(y0 + row)[x0..x0 + size];
        let b = &reference.row(ry + row)[rx..rx + size];
        sse += a
            .iter()
            .zip(b)
            .map(|(&p, &q)| {
                let d = i32::from(p) - i32::from(q);
                (d * d) as u64
            })
            .sum::<u64>();
    }
    sse
}

struct Searcher<'a> {
    cur: &'a FramePlane,
    reference: &'a FramePlane,
    x0: usize,
    y0: usize,
    size: usize,
    range: i32,
}

impl Searcher<'_> {
    /// SSE at `mv`, or `None` when the candidate leaves the search window
    /// or the reference frame.
    fn eval(&self, mv: MotionVector) -> Option<u64> {
        if mv.dx.abs() > self.range || mv.dy.abs() > self.range {
            return None;
        }
        let rx = self.x0 as i64 + i64::from(mv.dx);
        let ry = self.y0 as i64 + i64::from(mv.dy);
        if rx < 0
            || ry < 0
            || rx as usize + self.size > self.reference.width()
            || ry as usize + self.size > self.reference.height()
        {
            return None;
        }
        Some(block_sse(
            self.cur,
            self.reference,
            self.x0,
            self.y0,
            rx as usize,
            ry as usize,
            self.size,
        ))
    }

    fn exhaustive(&self, zero_sse: u64) -> (MotionVector, u64) {
        let mut best = (MotionVector::ZERO, zero_sse);
        for dy in -self.range..=self.range {
            for dx in -self.range..=self.range {
                let mv = MotionVector::new(dx, dy);
                if let Some(sse) = self.eval(mv) {
                    if candidate_key(sse, mv) < candidate_key(best.1, best.0) {
                        best = (mv, sse);
                    }
                }
            }
        }
        best
    }

    /// Large-diamond descent followed by small-diamond refinement, both
    /// starting from the zero vector.
    fn diamond(&self, zero_sse: u64) -> (MotionVector, u64) {
        const LARGE: [(i32, i32); 8] = [
            (0, -2),
            (-1, -1),
            (1, -1),
            (-2, 0),
            (2, 0),
            (-1, 1),
            (1, 1),
            (0, 2),
        ];
        const SMALL: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

        let mut best = (MotionVector::ZERO, zero_sse);
        for pattern in [&LARGE[..], &SMALL[..]] {
            loop {
                let center = best.0;
                for &(ox, oy) in pattern {
                    let mv = MotionVector::new(center.dx + ox, center.dy + oy);
                    if let Some(sse) = self.eval(mv) {
                        if candidate_key(sse, mv) < candidate_key(best.1, best.0) {
                            best = (mv, sse);
                        }
                    }
                }
                if best.0 == center {
                    break;
                }
            }
        }
        best
    }
}

/// Integer-pixel motion search for one block of `cur` against `reference`.
///
/// Both planes must already be padded to the block grid; the block itself
/// must lie inside them. Candidates whose reference window falls outside
/// the plane are skipped. The zero vector is always a candidate, so
/// `best_sse <= zero_mv_sse`.
pub fn block_search(
    cur: &FramePlane,
    reference: &FramePlane,
    origin: BlockOrigin,
    cfg: &SearchConfig,
) -> BlockMatch {
    let size = cfg.block_size;
    let searcher = Searcher {
        cur,
        reference,
        x0: origin.col * size,
        y0: origin.row * size,
        size,
        range: cfg.search_range,
    };
    debug_assert!(searcher.x0 + size <= cur.width() && searcher.y0 + size <= cur.height());
    let zero_mv_sse = searcher
        .eval(MotionVector::ZERO)
        .expect("block lies inside the padded frame");
    let (mv, best_sse) = match cfg.search_kind {
        SearchKind::Exhaustive => searcher.exhaustive(zero_mv_sse),
        SearchKind::Diamond => searcher.diamond(zero_mv_sse),
    };
    BlockMatch {
        mv,
        best_sse,
        zero_mv_sse,
    }
}

/// SSE of a block against its own mean, rounded to the nearest integer
/// level. Stands in for the first-pass intra error.
fn intra_proxy_sse(plane: &FramePlane, x0: usize, y0: usize, size: usize) -> u64 {
    let n = (size * size) as u64;
    let sum: u64 = (y0..y0 + size)
        .map(|y| {
            plane.row(y)[x0..x0 + size]
                .iter()
                .map(|&s| u64::from(s))
                .sum::<u64>()
        })
        .sum();
    let mean = ((sum + n / 2) / n) as i64;
    (y0..y0 + size)
        .map(|y| {
            plane.row(y)[x0..x0 + size]
                .iter()
                .map(|&s| {
                    let d = i64::from(s) - mean;
                    (d * d) as u64
                })
                .sum::<u64>()
        })
        .sum()
}

fn check_geometry(cur: &FramePlane, prev: &FramePlane) -> Result<(), AnalysisError> {
    if cur.same_geometry(prev) {
        Ok(())
    } else {
        Err(AnalysisError::DimensionMismatch {
            cur_w: cur.width(),
            cur_h: cur.height(),
            ref_w: prev.width(),
            ref_h: prev.height(),
        })
    }
}

/// Matches every block of the edge-padded `cur` against `prev`.
pub fn analyze_blocks(
    cur: &FramePlane,
    prev: &FramePlane,
    cfg: &SearchConfig,
) -> Result<Vec<BlockStats>, AnalysisError> {
    cfg.validate()?;
    check_geometry(cur, prev)?;
    let size = cfg.block_size;
    let cur = cur.padded_to_multiple(size);
    let prev = prev.padded_to_multiple(size);
    let (cols, rows) = (cur.width() / size, cur.height() / size);

    let mut blocks = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let m = block_search(&cur, &prev, BlockOrigin { col, row }, cfg);
            let intra = intra_proxy_sse(&cur, col * size, row * size, size);
            blocks.push(BlockStats {
                block_col: col,
                block_row: row,
                best_mv: m.mv,
                best_sse: m.best_sse,
                zero_mv_sse: m.zero_mv_sse,
                intra_proxy_sse: intra,
                is_inter: m.best_sse <= intra,
            });
        }
    }
    Ok(blocks)
}

/// Population standard deviation.
pub(crate) fn population_stdev(values: impl ExactSizeIterator<Item = f64> + Clone) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    var.sqrt()
}

/// Folds per-block results into the per-frame first-pass statistics.
pub fn summarize_blocks(frame_index: usize, blocks: &[BlockStats]) -> FrameFirstPassStats {
    let inter_count = blocks.iter().filter(|b| b.is_inter).count();
    let zero_motion = blocks
        .iter()
        .filter(|b| b.is_inter && b.best_mv.is_zero())
        .count();
    let pcnt_zero_motion = if inter_count == 0 {
        0.0
    } else {
        zero_motion as f64 / inter_count as f64
    };
    FrameFirstPassStats {
        frame_index,
        pcnt_zero_motion,
        frame_sse: blocks.iter().map(|b| b.best_sse).sum(),
        zero_mv_sse_stdev: population_stdev(blocks.iter().map(|b| b.zero_mv_sse as f64)),
        block_count: blocks.len(),
        inter_count,
    }
}

/// Runs the first pass for `cur` predicted from `prev`.
pub fn analyze_frame(
    cur: &FramePlane,
    prev: &FramePlane,
    cfg: &SearchConfig,
    frame_index: usize,
) -> Result<FrameFirstPassStats, AnalysisError> {
    let blocks = analyze_blocks(cur, prev, cfg)?;
    Ok(summarize_blocks(frame_index, &blocks))
}
