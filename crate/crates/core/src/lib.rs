//! Stillness-adaptive golden-frame (GF) group planning.
//!
//! The pipeline mirrors a two-pass encoder's control path:
//!
//! 1. [`first_pass`] matches every 16x16 block against the previous frame at
//!    integer-pixel accuracy and collects per-frame statistics.
//! 2. [`stillness`] folds those statistics into three group metrics and
//!    classifies each group as still or non-still.
//! 3. [`gop_planner`] emits a single-layer coding structure for still groups
//!    and a hierarchical pyramid for everything else.
//!
//! [`quality`] holds the PSNR/SSIM/BD-rate evaluation tools, [`synth`]
//! deterministic test content, and [`video_io`] the Y4M reader and writer.

pub mod cli;
pub mod first_pass;
pub mod gop_planner;
pub mod quality;
pub mod stillness;
pub mod synth;
pub mod video_io;

pub use first_pass::{
    analyze_blocks, analyze_frame, block_search, AnalysisError, BlockMatch, BlockOrigin,
    BlockStats, FrameFirstPassStats, MotionVector, SearchConfig, SearchKind,
};
pub use gop_planner::{
    analyze_groups, plan_group, plan_sequence, segment_groups, validate_plan, FrameRole,
    GfGroupPlan, GroupPlanResult, GroupSegmentation, GroupSpan, PlanCheck, PlanEntry, PlanError,
    PlannerConfig, RefSlot, Structure, ValidationReport, DEFAULT_BUFFER_SLOTS,
};
pub use quality::{
    bd_rate, psnr, sequence_quality, ssim, QualityError, QualityReport, RdCurve, RdPoint,
};
pub use stillness::{
    classify_stillness, compute_group_metrics, dump_group_metrics, dump_histograms, GfGroupMetrics,
    GroupRecord, StillnessError, StillnessThresholds, Verdict,
};
pub use synth::{generate, SynthError, SynthKind, SynthSpec};
pub use video_io::{
    load_raw_yuv, load_y4m, write_y4m, ChromaFormat, FramePlane, FrameRate, VideoError,
    VideoSequence,
};
