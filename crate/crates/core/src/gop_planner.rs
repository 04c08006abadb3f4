//! Golden-frame group segmentation and the adaptive coding-structure plan.
//!
//! A still group is coded with a single layer: the ALTREF first, then every
//! other frame in display order predicting from the nearest past frames,
//! the golden anchor and the ALTREF. Any other group gets a binary pyramid
//! of backward anchors below the ALTREF.
//!
//! Display index 0 of a group is its anchor: the keyframe or the previous
//! group's ALTREF. It is always available as a reference and never
//! scheduled by the group's own plan.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::first_pass::{analyze_frame, AnalysisError, FrameFirstPassStats, SearchConfig};
use crate::stillness::{
    classify_stillness, compute_group_metrics, GfGroupMetrics, GroupRecord, StillnessError,
    StillnessThresholds, Verdict,
};
use crate::video_io::VideoSequence;

pub const MIN_INTERVAL: usize = 4;
pub const MAX_INTERVAL: usize = 16;
pub const DEFAULT_BUFFER_SLOTS: usize = 8;

/// Spans wider than this get an EXTRA_ALTREF at their midpoint instead of
/// a BWDREF.
const EXTRA_ALTREF_MIN_SPAN: usize = 9;
/// Spans this narrow hold at most one frame and are coded as leaves.
const LEAF_SPAN: usize = 2;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("group interval {0} outside [1, {MAX_INTERVAL}]")]
    Interval(usize),
    #[error("target interval {0} outside [{MIN_INTERVAL}, {MAX_INTERVAL}]")]
    TargetInterval(usize),
    #[error("key interval {0} must be at least 2")]
    KeyInterval(usize),
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Stillness(#[from] StillnessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FrameRole {
    Golden,
    Altref,
    ExtraAltref,
    Bwdref,
    Regular,
    Overlay,
}

impl FrameRole {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameRole::Golden => "GOLDEN",
            FrameRole::Altref => "ALTREF",
            FrameRole::ExtraAltref => "EXTRA_ALTREF",
            FrameRole::Bwdref => "BWDREF",
            FrameRole::Regular => "REGULAR",
            FrameRole::Overlay => "OVERLAY",
        }
    }

    pub fn is_backward_anchor(self) -> bool {
        matches!(self, FrameRole::ExtraAltref | FrameRole::Bwdref)
    }
}

impl fmt::Display for FrameRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Named reference slots, in the order they are listed in exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RefSlot {
    Last,
    Last2,
    Last3,
    Golden,
    Bwdref,
    Altref2,
    Altref,
}

impl RefSlot {
    pub const ALL: [RefSlot; 7] = [
        RefSlot::Last,
        RefSlot::Last2,
        RefSlot::Last3,
        RefSlot::Golden,
        RefSlot::Bwdref,
        RefSlot::Altref2,
        RefSlot::Altref,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RefSlot::Last => "LAST",
            RefSlot::Last2 => "LAST2",
            RefSlot::Last3 => "LAST3",
            RefSlot::Golden => "GOLDEN",
            RefSlot::Bwdref => "BWDREF",
            RefSlot::Altref2 => "ALTREF2",
            RefSlot::Altref => "ALTREF",
        }
    }

    /// Slots that must point at an earlier display position.
    pub fn is_forward(self) -> bool {
        matches!(
            self,
            RefSlot::Last | RefSlot::Last2 | RefSlot::Last3 | RefSlot::Golden
        )
    }
}

impl fmt::Display for RefSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    SingleLayer,
    Multilayer,
}

impl Structure {
    pub fn as_str(self) -> &'static str {
        match self {
            Structure::SingleLayer => "single_layer",
            Structure::Multilayer => "multilayer",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub display_index: usize,
    pub encode_order: usize,
    pub role: FrameRole,
    pub layer: u32,
    pub refs: BTreeMap<RefSlot, usize>,
    pub show_existing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GfGroupPlan {
    pub interval: usize,
    pub structure: Structure,
    pub entries: Vec<PlanEntry>,
}

impl GfGroupPlan {
    pub fn count_role(&self, role: FrameRole) -> usize {
        self.entries.iter().filter(|e| e.role == role).count()
    }
}

/// A run of in-group frames; `start` is the absolute display index of the
/// first frame, and `start - 1` is the group's anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpan {
    pub start: usize,
    pub interval: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSegmentation {
    pub keyframes: Vec<usize>,
    pub groups: Vec<GroupSpan>,
}

impl GroupSegmentation {
    pub fn intervals(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.interval).collect()
    }
}

/// Greedy split of `len` frames following one keyframe.
fn split_run(len: usize, target: usize) -> Vec<usize> {
    let mut out = vec![target; len / target];
    let rem = len % target;
    if rem == 0 {
        return out;
    }
    if rem < MIN_INTERVAL && !out.is_empty() {
        let merged = out.pop().unwrap() + rem;
        out.push(merged.div_ceil(2));
        out.push(merged / 2);
    } else {
        out.push(rem);
    }
    out
}

/// Splits `total_frames` into a keyframe anchor followed by GF groups.
///
/// With `key_interval`, a keyframe is forced every `key_interval` frames and
/// each keyframe-delimited run is segmented independently.
pub fn segment_groups(
    total_frames: usize,
    target_interval: usize,
    key_interval: Option<usize>,
) -> Result<GroupSegmentation, PlanError> {
    if !(MIN_INTERVAL..=MAX_INTERVAL).contains(&target_interval) {
        return Err(PlanError::TargetInterval(target_interval));
    }
    if total_frames < 2 {
        return Err(PlanError::TooFewFrames(total_frames));
    }
    let key_interval = match key_interval {
        Some(k) if k < 2 => return Err(PlanError::KeyInterval(k)),
        Some(k) => k,
        None => total_frames,
    };

    let mut seg = GroupSegmentation {
        keyframes: Vec::new(),
        groups: Vec::new(),
    };
    for key in (0..total_frames).step_by(key_interval) {
        seg.keyframes.push(key);
        let run_end = (key + key_interval).min(total_frames);
        let mut start = key + 1;
        for interval in split_run(run_end - start, target_interval) {
            seg.groups.push(GroupSpan { start, interval });
            start += interval;
        }
    }
    Ok(seg)
}

struct PlanBuilder {
    interval: usize,
    backward_slots: bool,
    coded: BTreeSet<usize>,
    entries: Vec<PlanEntry>,
}

impl PlanBuilder {
    fn new(interval: usize, backward_slots: bool) -> Self {
        Self {
            interval,
            backward_slots,
            coded: BTreeSet::from([0]),
            entries: Vec::new(),
        }
    }

    fn refs_for(&self, display: usize) -> BTreeMap<RefSlot, usize> {
        let mut refs = BTreeMap::new();
        let past = self.coded.range(..display).rev();
        for (slot, &d) in [RefSlot::Last, RefSlot::Last2, RefSlot::Last3]
            .into_iter()
            .zip(past)
        {
            refs.insert(slot, d);
        }
        refs.insert(RefSlot::Golden, 0);
        if self.backward_slots {
            let future = self.coded.range(display + 1..);
            for (slot, &d) in [RefSlot::Bwdref, RefSlot::Altref2].into_iter().zip(future) {
                refs.insert(slot, d);
            }
        }
        if self.coded.contains(&self.interval) && self.interval > display {
            refs.insert(RefSlot::Altref, self.interval);
        }
        refs
    }

    fn code(&mut self, display: usize, role: FrameRole, layer: u32) {
        let refs = self.refs_for(display);
        self.entries.push(PlanEntry {
            display_index: display,
            encode_order: self.entries.len(),
            role,
            layer,
            refs,
            show_existing: false,
        });
        self.coded.insert(display);
    }

    fn overlay(&mut self, layer: u32) {
        self.entries.push(PlanEntry {
            display_index: self.interval,
            encode_order: self.entries.len(),
            role: FrameRole::Overlay,
            layer,
            refs: BTreeMap::new(),
            show_existing: true,
        });
    }

    fn finish(self, structure: Structure) -> GfGroupPlan {
        GfGroupPlan {
            interval: self.interval,
            structure,
            entries: self.entries,
        }
    }
}

/// Depth of the pyramid below `(a, b)`, counting the span's own midpoint.
fn pyramid_depth(a: usize, b: usize) -> u32 {
    if b - a <= LEAF_SPAN {
        0
    } else {
        let m = (a + b) / 2;
        1 + pyramid_depth(a, m).max(pyramid_depth(m, b))
    }
}

fn code_span(builder: &mut PlanBuilder, a: usize, b: usize, layer: u32, leaf_layer: u32) {
    if b - a <= LEAF_SPAN {
        for d in a + 1..b {
            builder.code(d, FrameRole::Regular, leaf_layer);
        }
        return;
    }
    let m = (a + b) / 2;
    let role = if b - a >= EXTRA_ALTREF_MIN_SPAN {
        FrameRole::ExtraAltref
    } else {
        FrameRole::Bwdref
    };
    builder.code(m, role, layer);
    code_span(builder, a, m, layer + 1, leaf_layer);
    code_span(builder, m, b, layer + 1, leaf_layer);
}

/// Emits the coding structure for a group of `interval` frames.
pub fn plan_group(interval: usize, verdict: Verdict) -> Result<GfGroupPlan, PlanError> {
    if !(1..=MAX_INTERVAL).contains(&interval) {
        return Err(PlanError::Interval(interval));
    }
    let plan = match verdict {
        Verdict::Still => {
            let mut b = PlanBuilder::new(interval, false);
            b.code(interval, FrameRole::Altref, 1);
            for d in 1..interval {
                b.code(d, FrameRole::Regular, 2);
            }
            b.overlay(1);
            b.finish(Structure::SingleLayer)
        }
        Verdict::NonStill => {
            let mut b = PlanBuilder::new(interval, true);
            b.code(interval, FrameRole::Altref, 1);
            let leaf_layer = 2 + pyramid_depth(0, interval);
            code_span(&mut b, 0, interval, 2, leaf_layer);
            b.overlay(1);
            b.finish(Structure::Multilayer)
        }
    };
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanCheck {
    /// (a) every reference is decoded before it is used
    DecodeOrder,
    /// (b) each display position is coded exactly once
    Coverage,
    /// (c) live references fit in the buffer
    Buffer,
    /// (d) structure-specific role constraints
    Structure,
    /// (e) slots point in their named temporal direction
    SlotDirection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub check: PlanCheck,
    pub encode_order: Option<usize>,
    pub display_index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub max_live_refs: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failed_checks(&self) -> BTreeSet<PlanCheck> {
        self.violations.iter().map(|v| v.check).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "plan valid (max live refs {})", self.max_live_refs);
        }
        for v in &self.violations {
            write!(f, "{:?}", v.check)?;
            if let Some(e) = v.encode_order {
                write!(f, " @encode {e}")?;
            }
            if let Some(d) = v.display_index {
                write!(f, " display {d}")?;
            }
            writeln!(f, ": {}", v.message)?;
        }
        Ok(())
    }
}

/// Checks a plan against the reference-buffer model.
pub fn validate_plan(plan: &GfGroupPlan, buffer_slots: usize) -> ValidationReport {
    let mut violations = Vec::new();
    let mut flag = |check, entry: Option<&PlanEntry>, message: String| {
        violations.push(Violation {
            check,
            encode_order: entry.map(|e| e.encode_order),
            display_index: entry.map(|e| e.display_index),
            message,
        })
    };
    let l = plan.interval;

    // (a) decode-before-reference
    let mut decoded = BTreeSet::from([0usize]);
    for (pos, e) in plan.entries.iter().enumerate() {
        if e.encode_order != pos {
            flag(
                PlanCheck::DecodeOrder,
                Some(e),
                format!("encode_order {} at position {pos}", e.encode_order),
            );
        }
        for (slot, &r) in &e.refs {
            if !decoded.contains(&r) {
                flag(
                    PlanCheck::DecodeOrder,
                    Some(e),
                    format!("{slot} references display {r} before it is decoded"),
                );
            }
        }
        if e.show_existing {
            if !decoded.contains(&e.display_index) {
                flag(
                    PlanCheck::DecodeOrder,
                    Some(e),
                    "shows a frame that has not been decoded".into(),
                );
            }
        } else {
            decoded.insert(e.display_index);
        }
    }

    // (b) coverage
    if !(1..=MAX_INTERVAL).contains(&l) {
        flag(
            PlanCheck::Coverage,
            None,
            format!("interval {l} out of range"),
        );
    }
    let mut seen = BTreeMap::<usize, usize>::new();
    for e in &plan.entries {
        let overlay = e.role == FrameRole::Overlay;
        if overlay != e.show_existing {
            flag(
                PlanCheck::Coverage,
                Some(e),
                "show_existing must be set exactly on OVERLAY entries".into(),
            );
        }
        if overlay {
            continue;
        }
        if e.display_index == 0 || e.display_index > l {
            flag(
                PlanCheck::Coverage,
                Some(e),
                format!("display {} outside 1..={l}", e.display_index),
            );
        }
        *seen.entry(e.display_index).or_default() += 1;
    }
    for d in 1..=l {
        match seen.get(&d).copied().unwrap_or(0) {
            1 => {}
            0 => flag(
                PlanCheck::Coverage,
                None,
                format!("display {d} never coded"),
            ),
            n => flag(
                PlanCheck::Coverage,
                None,
                format!("display {d} coded {n} times"),
            ),
        }
    }

    // (c) buffer occupancy: frames already decoded that some later entry
    // still references or shows
    let mut max_live = 0;
    let mut decoded = BTreeSet::from([0usize]);
    for (pos, e) in plan.entries.iter().enumerate() {
        let needed: BTreeSet<usize> = plan.entries[pos..]
            .iter()
            .flat_map(|later| {
                let shown = later.show_existing.then_some(later.display_index);
                later.refs.values().copied().chain(shown)
            })
            .filter(|d| decoded.contains(d))
            .collect();
        max_live = max_live.max(needed.len());
        if needed.len() > buffer_slots {
            flag(
                PlanCheck::Buffer,
                Some(e),
                format!(
                    "{} live references exceed {buffer_slots} slots",
                    needed.len()
                ),
            );
        }
        if !e.show_existing {
            decoded.insert(e.display_index);
        }
    }

    // (d) structure
    match plan.structure {
        Structure::SingleLayer => {
            for e in &plan.entries {
                if e.role.is_backward_anchor() {
                    flag(
                        PlanCheck::Structure,
                        Some(e),
                        format!("{} in a single-layer plan", e.role),
                    );
                }
                for slot in [RefSlot::Bwdref, RefSlot::Altref2] {
                    if e.refs.contains_key(&slot) {
                        flag(
                            PlanCheck::Structure,
                            Some(e),
                            format!("{slot} used in a single-layer plan"),
                        );
                    }
                }
            }
        }
        Structure::Multilayer => {
            if l >= MIN_INTERVAL && !plan.entries.iter().any(|e| e.role.is_backward_anchor()) {
                flag(
                    PlanCheck::Structure,
                    None,
                    "multilayer plan without BWDREF or EXTRA_ALTREF".into(),
                );
            }
        }
    }

    // (e) slot direction
    for e in &plan.entries {
        for (&slot, &r) in &e.refs {
            let ok = if slot.is_forward() {
                r < e.display_index
            } else {
                r > e.display_index
            };
            if !ok {
                flag(
                    PlanCheck::SlotDirection,
                    Some(e),
                    format!("{slot} -> display {r} points the wrong way"),
                );
            }
        }
    }

    ValidationReport {
        violations,
        max_live_refs: max_live,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub search: SearchConfig,
    pub thresholds: StillnessThresholds,
    pub target_interval: usize,
    pub key_interval: Option<usize>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            thresholds: StillnessThresholds::default(),
            target_interval: MAX_INTERVAL,
            key_interval: None,
        }
    }
}

/// Segments `seq`, runs the first pass over every in-group frame and
/// classifies each group.
///
/// Each frame is predicted from the frame displayed just before it, which
/// for the first frame of a group is the group's anchor.
pub fn analyze_groups(
    seq: &VideoSequence,
    cfg: &PlannerConfig,
) -> Result<Vec<GroupRecord>, PlanError> {
    cfg.search.validate()?;
    cfg.thresholds.validate()?;
    let seg = segment_groups(seq.len(), cfg.target_interval, cfg.key_interval)?;
    let frames = seq.frames();

    let indices: Vec<usize> = seg
        .groups
        .iter()
        .flat_map(|g| g.start..g.start + g.interval)
        .collect();
    let stats: Vec<FrameFirstPassStats> = indices
        .par_iter()
        .map(|&i| analyze_frame(&frames[i], &frames[i - 1], &cfg.search, i))
        .collect::<Result<_, _>>()?;

    let pixels = seq.width() * seq.height();
    let mut offset = 0;
    let mut records = Vec::with_capacity(seg.groups.len());
    for (group_id, g) in seg.groups.iter().enumerate() {
        let metrics = compute_group_metrics(&stats[offset..offset + g.interval], pixels)?;
        offset += g.interval;
        records.push(GroupRecord {
            group_id,
            first_display_index: g.start,
            metrics,
            verdict: classify_stillness(&metrics, &cfg.thresholds),
        });
    }
    Ok(records)
}

/// One planned group, in the shape it is exported as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPlanResult {
    pub group_id: usize,
    pub first_display_index: usize,
    pub verdict: Verdict,
    pub metrics: GfGroupMetrics,
    #[serde(flatten)]
    pub plan: GfGroupPlan,
}

/// Full stillness-adaptive planning of a sequence.
pub fn plan_sequence(
    seq: &VideoSequence,
    cfg: &PlannerConfig,
) -> Result<Vec<GroupPlanResult>, PlanError> {
    analyze_groups(seq, cfg)?
        .into_iter()
        .map(|r| {
            Ok(GroupPlanResult {
                group_id: r.group_id,
                first_display_index: r.first_display_index,
                verdict: r.verdict,
                metrics: r.metrics,
                plan: plan_group(r.metrics.interval, r.verdict)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn displays_in_encode_order(plan: &GfGroupPlan) -> Vec<usize> {
        plan.entries
            .iter()
            .filter(|e| !e.show_existing)
            .map(|e| e.display_index)
            .collect()
    }

    #[test]
    fn segmentation_examples() {
        assert_eq!(
            segment_groups(33, 16, None).unwrap().intervals(),
            vec![16, 16]
        );
        assert_eq!(
            segment_groups(35, 16, None).unwrap().intervals(),
            vec![16, 9, 9]
        );
        assert_eq!(segment_groups(5, 16, None).unwrap().intervals(), vec![4]);
        assert_eq!(segment_groups(3, 16, None).unwrap().intervals(), vec![2]);
        let seg = segment_groups(35, 16, None).unwrap();
        assert_eq!(seg.keyframes, vec![0]);
        assert_eq!(
            seg.groups.iter().map(|g| g.start).collect::<Vec<_>>(),
            vec![1, 17, 26]
        );
    }

    #[test]
    fn segmentation_with_key_interval() {
        let seg = segment_groups(40, 8, Some(20)).unwrap();
        assert_eq!(seg.keyframes, vec![0, 20]);
        // 19 in-group frames per run: 8 + 8 + 3 -> 8, 6, 5
        assert_eq!(seg.intervals(), vec![8, 6, 5, 8, 6, 5]);
        assert_eq!(seg.groups[3].start, 21);
    }

    #[test]
    fn segmentation_errors() {
        assert!(matches!(
            segment_groups(10, 3, None),
            Err(PlanError::TargetInterval(3))
        ));
        assert!(matches!(
            segment_groups(10, 17, None),
            Err(PlanError::TargetInterval(17))
        ));
        assert!(matches!(
            segment_groups(1, 16, None),
            Err(PlanError::TooFewFrames(1))
        ));
        assert!(matches!(
            segment_groups(10, 8, Some(1)),
            Err(PlanError::KeyInterval(1))
        ));
    }

    #[test]
    fn still_plan_shape() {
        let plan = plan_group(16, Verdict::Still).unwrap();
        assert_eq!(plan.entries.len(), 17);
        assert_eq!(plan.structure, Structure::SingleLayer);
        assert_eq!(plan.entries[0].role, FrameRole::Altref);
        assert_eq!(plan.entries[0].display_index, 16);
        assert_eq!(
            displays_in_encode_order(&plan)[1..],
            (1..16).collect::<Vec<_>>()[..]
        );
        assert_eq!(plan.entries[16].role, FrameRole::Overlay);
        assert!(plan.entries[16].show_existing);
        assert_eq!(plan.count_role(FrameRole::Bwdref), 0);
        assert_eq!(plan.count_role(FrameRole::ExtraAltref), 0);

        let e5 = &plan.entries[5];
        assert_eq!(e5.display_index, 5);
        let expected = BTreeMap::from([
            (RefSlot::Last, 4),
            (RefSlot::Last2, 3),
            (RefSlot::Last3, 2),
            (RefSlot::Golden, 0),
            (RefSlot::Altref, 16),
        ]);
        assert_eq!(e5.refs, expected);
        let e1 = &plan.entries[1];
        assert_eq!(
            e1.refs,
            BTreeMap::from([
                (RefSlot::Last, 0),
                (RefSlot::Golden, 0),
                (RefSlot::Altref, 16)
            ])
        );
    }

    #[test]
    fn single_frame_group() {
        for verdict in [Verdict::Still, Verdict::NonStill] {
            let plan = plan_group(1, verdict).unwrap();
            let roles: Vec<_> = plan
                .entries
                .iter()
                .map(|e| (e.display_index, e.role))
                .collect();
            assert_eq!(roles, vec![(1, FrameRole::Altref), (1, FrameRole::Overlay)]);
            assert!(validate_plan(&plan, DEFAULT_BUFFER_SLOTS).passed());
        }
    }

    #[test]
    fn multilayer_pyramid_for_sixteen() {
        let plan = plan_group(16, Verdict::NonStill).unwrap();
        assert_eq!(plan.structure, Structure::Multilayer);
        let by_display: BTreeMap<usize, &PlanEntry> = plan
            .entries
            .iter()
            .filter(|e| !e.show_existing)
            .map(|e| (e.display_index, e))
            .collect();
        let anchors: Vec<(usize, FrameRole, u32)> = by_display
            .values()
            .filter(|e| e.role != FrameRole::Regular)
            .map(|e| (e.display_index, e.role, e.layer))
            .collect();
        assert_eq!(
            anchors,
            vec![
                (2, FrameRole::Bwdref, 4),
                (4, FrameRole::Bwdref, 3),
                (6, FrameRole::Bwdref, 4),
                (8, FrameRole::ExtraAltref, 2),
                (10, FrameRole::Bwdref, 4),
                (12, FrameRole::Bwdref, 3),
                (14, FrameRole::Bwdref, 4),
                (16, FrameRole::Altref, 1),
            ]
        );
        for d in (1..16).step_by(2) {
            assert_eq!(by_display[&d].role, FrameRole::Regular);
            assert_eq!(by_display[&d].layer, 5);
        }
        assert_eq!(
            displays_in_encode_order(&plan),
            vec![16, 8, 4, 2, 1, 3, 6, 5, 7, 12, 10, 9, 11, 14, 13, 15]
        );
        let leaf5 = by_display[&5];
        assert_eq!(
            leaf5.refs,
            BTreeMap::from([
                (RefSlot::Last, 4),
                (RefSlot::Last2, 3),
                (RefSlot::Last3, 2),
                (RefSlot::Golden, 0),
                (RefSlot::Bwdref, 6),
                (RefSlot::Altref2, 8),
                (RefSlot::Altref, 16),
            ])
        );
        let report = validate_plan(&plan, DEFAULT_BUFFER_SLOTS);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn all_emitted_plans_validate() {
        for l in 1..=MAX_INTERVAL {
            for verdict in [Verdict::Still, Verdict::NonStill] {
                let plan = plan_group(l, verdict).unwrap();
                let report = validate_plan(&plan, DEFAULT_BUFFER_SLOTS);
                assert!(report.passed(), "L={l} {verdict}: {report}");
                assert!(report.max_live_refs <= DEFAULT_BUFFER_SLOTS);
            }
        }
    }

    #[test]
    fn interval_range_enforced() {
        assert!(matches!(
            plan_group(0, Verdict::Still),
            Err(PlanError::Interval(0))
        ));
        assert!(matches!(
            plan_group(17, Verdict::NonStill),
            Err(PlanError::Interval(17))
        ));
    }

    #[test]
    fn reference_to_later_anchor_fails_decode_order() {
        let mut plan = plan_group(16, Verdict::NonStill).unwrap();
        // Leaf 1 is coded right after anchor 2; point it at anchor 6 instead,
        // which is coded later.
        let leaf = plan
            .entries
            .iter_mut()
            .find(|e| e.display_index == 1)
            .unwrap();
        leaf.refs.insert(RefSlot::Altref2, 6);
        let report = validate_plan(&plan, DEFAULT_BUFFER_SLOTS);
        assert!(report.failed_checks().contains(&PlanCheck::DecodeOrder));
    }

    #[test]
    fn backward_slot_into_past_fails_direction() {
        let mut plan = plan_group(8, Verdict::NonStill).unwrap();
        let leaf = plan
            .entries
            .iter_mut()
            .find(|e| e.display_index == 5)
            .unwrap();
        leaf.refs.insert(RefSlot::Bwdref, 4);
        let report = validate_plan(&plan, DEFAULT_BUFFER_SLOTS);
        assert_eq!(
            report.failed_checks(),
            BTreeSet::from([PlanCheck::SlotDirection])
        );
    }

    #[test]
    fn duplicate_display_fails_coverage() {
        let mut plan = plan_group(4, Verdict::Still).unwrap();
        plan.entries[2].display_index = 1;
        let report = validate_plan(&plan, DEFAULT_BUFFER_SLOTS);
        assert!(report.failed_checks().contains(&PlanCheck::Coverage));
    }

    #[test]
    fn bwdref_in_single_layer_fails_structure() {
        let mut plan = plan_group(6, Verdict::Still).unwrap();
        plan.entries[3].role = FrameRole::Bwdref;
        let report = validate_plan(&plan, DEFAULT_BUFFER_SLOTS);
        assert!(report.failed_checks().contains(&PlanCheck::Structure));
    }

    #[test]
    fn tiny_buffer_fails() {
        let plan = plan_group(16, Verdict::NonStill).unwrap();
        let report = validate_plan(&plan, 2);
        assert!(report.failed_checks().contains(&PlanCheck::Buffer));
    }

    #[test]
    fn json_field_names() {
        let plan = plan_group(2, Verdict::NonStill).unwrap();
        let v = serde_json::to_value(&plan).unwrap();
        assert_eq!(v["structure"], "multilayer");
        let leaf = &v["entries"][1];
        assert_eq!(leaf["role"], "REGULAR");
        assert_eq!(leaf["refs"]["BWDREF"], 2);
        assert_eq!(leaf["show_existing"], false);
        for key in [
            "display_index",
            "encode_order",
            "role",
            "layer",
            "refs",
            "show_existing",
        ] {
            assert!(leaf.get(key).is_some(), "{key}");
        }
        let back: GfGroupPlan = serde_json::from_value(v).unwrap();
        assert_eq!(back, plan);
    }
}
