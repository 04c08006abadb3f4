//! GF-group stillness metrics, threshold classification and the CSV dumps
//! used to calibrate the thresholds.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::first_pass::FrameFirstPassStats;

#[derive(Debug, Error)]
pub enum StillnessError {
    #[error("no frame statistics for the group")]
    EmptyGroup,
    #[error("pixels per frame must be positive")]
    NoPixels,
    #[error("threshold `{0}` must be positive")]
    Threshold(&'static str),
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The three group-level stillness metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfGroupMetrics {
    /// Number of frames in the group.
    pub interval: usize,
    /// Minimum over the group of the per-frame zero-motion fraction.
    pub zero_motion_accumulator: f64,
    /// Mean over the group of per-pixel motion-compensated SSE.
    pub avg_pixel_error: f64,
    /// Mean over the group of the per-frame spread of zero-vector block SSE.
    pub avg_error_stdev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StillnessThresholds {
    pub zero_motion_min: f64,
    pub pixel_error_max: f64,
    pub error_stdev_max: f64,
}

impl Default for StillnessThresholds {
    fn default() -> Self {
        Self {
            zero_motion_min: 0.9,
            pixel_error_max: 40.0,
            error_stdev_max: 2000.0,
        }
    }
}

impl StillnessThresholds {
    pub fn validate(&self) -> Result<(), StillnessError> {
        let fields = [
            ("zero_motion_min", self.zero_motion_min),
            ("pixel_error_max", self.pixel_error_max),
            ("error_stdev_max", self.error_stdev_max),
        ];
        match fields.iter().find(|(_, v)| v.is_nan() || *v <= 0.0) {
            Some((name, _)) => Err(StillnessError::Threshold(name)),
            None => Ok(()),
        }
    }

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Still,
    NonStill,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Still => "still",
            Verdict::NonStill => "non-still",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "still" => Ok(Verdict::Still),
            "non-still" | "non_still" | "nonstill" => Ok(Verdict::NonStill),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

/// Aggregates the first-pass statistics of one group.
///
/// `pixels_per_frame` is the true (unpadded) luma sample count.
pub fn compute_group_metrics(
    stats: &[FrameFirstPassStats],
    pixels_per_frame: usize,
) -> Result<GfGroupMetrics, StillnessError> {
    if stats.is_empty() {
        return Err(StillnessError::EmptyGroup);
    }
    if pixels_per_frame == 0 {
        return Err(StillnessError::NoPixels);
    }
    let n = stats.len() as f64;
    let pixels = pixels_per_frame as f64;
    let zero_motion_accumulator = stats
        .iter()
        .map(|s| s.pcnt_zero_motion)
        .fold(f64::INFINITY, f64::min);
    let avg_pixel_error = stats
        .iter()
        .map(|s| s.frame_sse as f64 / pixels)
        .sum::<f64>()
        / n;
    let avg_error_stdev = stats.iter().map(|s| s.zero_mv_sse_stdev).sum::<f64>() / n;
    Ok(GfGroupMetrics {
        interval: stats.len(),
        zero_motion_accumulator,
        avg_pixel_error,
        avg_error_stdev,
    })
}

/// Still only when all three criteria hold, each with a strict inequality.
pub fn classify_stillness(m: &GfGroupMetrics, t: &StillnessThresholds) -> Verdict {
    if m.zero_motion_accumulator > t.zero_motion_min
        && m.avg_pixel_error < t.pixel_error_max
        && m.avg_error_stdev < t.error_stdev_max
    {
        Verdict::Still
    } else {
        Verdict::NonStill
    }
}

/// One classified group, as dumped to CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupRecord {
    pub group_id: usize,
    pub first_display_index: usize,
    pub metrics: GfGroupMetrics,
    pub verdict: Verdict,
}

#[derive(Serialize)]
struct GroupRow {
    group_id: usize,
    first_display_index: usize,
    interval: usize,
    zero_motion_accumulator: f64,
    avg_pixel_error: f64,
    avg_error_stdev: f64,
    verdict: &'static str,
}

const GROUP_HEADER: [&str; 7] = [
    "group_id",
    "first_display_index",
    "interval",
    "zero_motion_accumulator",
    "avg_pixel_error",
    "avg_error_stdev",
    "verdict",
];

/// Writes one CSV row per group (header always present).
pub fn dump_group_metrics<W: Write>(groups: &[GroupRecord], sink: W) -> Result<(), StillnessError> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(sink);
    wtr.write_record(GROUP_HEADER)?;
    for g in groups {
        wtr.serialize(GroupRow {
            group_id: g.group_id,
            first_display_index: g.first_display_index,
            interval: g.metrics.interval,
            zero_motion_accumulator: g.metrics.zero_motion_accumulator,
            avg_pixel_error: g.metrics.avg_pixel_error,
            avg_error_stdev: g.metrics.avg_error_stdev,
            verdict: g.verdict.as_str(),
        })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Fixed-width histogram over `[min, max]` of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn build(values: &[f64], bins: usize) -> Result<Self, StillnessError> {
        if bins == 0 {
            return Err(StillnessError::NoBins);
        }
        let mut counts = vec![0; bins];
        if values.is_empty() {
            return Ok(Self {
                min: 0.0,
                max: 0.0,
                counts,
            });
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (max - min) / bins as f64;
        for &v in values {
            let bin = if width > 0.0 {
                (((v - min) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[bin] += 1;
        }
        Ok(Self { min, max, counts })
    }

    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let width = (self.max - self.min) / self.counts.len() as f64;
        let lower = self.min + width * bin as f64;
        let upper = if bin + 1 == self.counts.len() {
            self.max
        } else {
            self.min + width * (bin + 1) as f64
        };
        (lower, upper)
    }
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    metric: &'a str,
    bin: usize,
    lower: f64,
    upper: f64,
    count: usize,
}

/// Histograms of the three metrics, one CSV row per (metric, bin).
pub fn dump_histograms<W: Write>(
    groups: &[GroupRecord],
    bins: usize,
    sink: W,
) -> Result<(), StillnessError> {
    type Getter = fn(&GfGroupMetrics) -> f64;
    let columns: [(&str, Getter); 3] = [
        ("zero_motion_accumulator", |m| m.zero_motion_accumulator),
        ("avg_pixel_error", |m| m.avg_pixel_error),
        ("avg_error_stdev", |m| m.avg_error_stdev),
    ];
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(sink);
    wtr.write_record(["metric", "bin", "lower", "upper", "count"])?;
    for (name, get) in columns {
        let values: Vec<f64> = groups.iter().map(|g| get(&g.metrics)).collect();
        let hist = Histogram::build(&values, bins)?;
        for (bin, &count) in hist.counts.iter().enumerate() {
            let (lower, upper) = hist.bin_edges(bin);
            wtr.serialize(HistogramRow {
                metric: name,
                bin,
                lower,
                upper,
                count,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}
