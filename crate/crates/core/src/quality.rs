//! Objective quality metrics and Bjøntegaard delta rate.

use std::io::Read;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::video_io::{FramePlane, VideoSequence};

/// Reported PSNR for identical frames.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const PEAK: f64 = 255.0;

pub const MIN_RD_POINTS: usize = 4;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("frame {0}x{1} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")]
    TooSmall(usize, usize),
    #[error("frame counts differ: {0} vs {1}")]
    FrameCount(usize, usize),
    #[error("RD curve needs at least {MIN_RD_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("RD point {0} has non-positive or non-finite bitrate")]
    Bitrate(usize),
    #[error("RD point {0} has non-finite quality")]
    QualityValue(usize),
    #[error("RD point {0} breaks monotonicity (bitrate must increase, quality must not decrease)")]
    NonMonotonic(usize),
    #[error("RD curve repeats a quality value; rate is not a function of quality")]
    DegenerateQuality,
    #[error("quality ranges do not overlap")]
    NoOverlap,
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn check_dims(a: &FramePlane, b: &FramePlane) -> Result<(), QualityError> {
    if a.same_geometry(b) {
        Ok(())
    } else {
        Err(QualityError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ))
    }
}

/// Luma PSNR in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &FramePlane, b: &FramePlane) -> Result<f64, QualityError> {
    check_dims(a, b)?;
    let sse: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(PSNR_CAP_DB);
    }
    let mse = sse as f64 / a.pixel_count() as f64;
    Ok((10.0 * (PEAK * PEAK / mse).log10()).min(PSNR_CAP_DB))
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let x = i as f64 - c;
        *t = (-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Valid-region separable filtering; output is `(w - 10) x (h - 10)`.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * horiz[(y + k) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM over every 11x11 Gaussian window lying fully inside the frame.
pub fn ssim(a: &FramePlane, b: &FramePlane) -> Result<f64, QualityError> {
    check_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(QualityError::TooSmall(w, h));
    }
    let taps = gaussian_taps();
    let fa: Vec<f64> = a.samples().iter().map(|&v| f64::from(v)).collect();
    let fb: Vec<f64> = b.samples().iter().map(|&v| f64::from(v)).collect();
    let square = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let cross: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();

    let mu_a = filter_valid(&fa, w, h, &taps);
    let mu_b = filter_valid(&fb, w, h, &taps);
    let e_aa = filter_valid(&square(&fa), w, h, &taps);
    let e_bb = filter_valid(&square(&fb), w, h, &taps);
    let e_ab = filter_valid(&cross, w, h, &taps);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        total += num / den;
    }
    Ok(total / mu_a.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub psnr: Vec<f64>,
    pub ssim: Vec<f64>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-frame PSNR/SSIM and their arithmetic means.
pub fn sequence_quality(
    reference: &VideoSequence,
    distorted: &VideoSequence,
) -> Result<QualityReport, QualityError> {
    if reference.len() != distorted.len() {
        return Err(QualityError::FrameCount(reference.len(), distorted.len()));
    }
    let per_frame: Vec<(f64, f64)> = reference
        .frames()
        .par_iter()
        .zip(distorted.frames())
        .map(|(a, b)| Ok((psnr(a, b)?, ssim(a, b)?)))
        .collect::<Result<_, QualityError>>()?;
    let (psnr, ssim): (Vec<f64>, Vec<f64>) = per_frame.into_iter().unzip();
    Ok(QualityReport {
        mean_psnr: mean(&psnr),
        mean_ssim: mean(&ssim),
        psnr,
        ssim,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    /// kbps
    pub bitrate: f64,
    /// PSNR in dB or an SSIM score
    pub quality: f64,
}

impl RdPoint {
    pub const fn new(bitrate: f64, quality: f64) -> Self {
        Self { bitrate, quality }
    }
}

/// At least four points, strictly increasing in bitrate and non-decreasing
/// in quality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(points: Vec<RdPoint>) -> Result<Self, QualityError> {
        if points.len() < MIN_RD_POINTS {
            return Err(QualityError::TooFewPoints(points.len()));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.bitrate.is_finite() && p.bitrate > 0.0) {
                return Err(QualityError::Bitrate(i));
            }
            if !p.quality.is_finite() {
                return Err(QualityError::QualityValue(i));
            }
        }
        if let Some(i) = points
            .windows(2)
            .position(|w| w[1].bitrate <= w[0].bitrate || w[1].quality < w[0].quality)
        {
            return Err(QualityError::NonMonotonic(i + 1));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    fn quality_range(&self) -> (f64, f64) {
        (
            self.points[0].quality,
            self.points[self.points.len() - 1].quality,
        )
    }

    /// Reads `bitrate_kbps,quality` rows; a leading header row is skipped.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, QualityError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut points = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 2 {
                return Err(QualityError::Parse {
                    line,
                    message: format!("expected 2 fields, got {}", record.len()),
                });
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(bitrate), Ok(quality)) => points.push(RdPoint { bitrate, quality }),
                _ if i == 0 => {} // header
                _ => {
                    return Err(QualityError::Parse {
                        line,
                        message: format!("non-numeric row `{},{}`", &record[0], &record[1]),
                    })
                }
            }
        }
        Self::new(points)
    }
}

/// Cubic fit of log10(rate) against quality, stored in a normalized
/// variable `t = (q - center) / scale` for conditioning.
struct LogRateFit {
    coeffs: [f64; 4],
    center: f64,
    scale: f64,
}

impl LogRateFit {
    fn new(curve: &RdCurve) -> Result<Self, QualityError> {
        let pts = curve.points();
        if pts.windows(2).any(|w| w[0].quality == w[1].quality) {
            return Err(QualityError::DegenerateQuality);
        }
        let (lo, hi) = curve.quality_range();
        let center = 0.5 * (lo + hi);
        let scale = 0.5 * (hi - lo);
        let n = pts.len();
        let design = DMatrix::from_fn(n, 4, |r, c| {
            ((pts[r].quality - center) / scale).powi(c as i32)
        });
        let target = DVector::from_iterator(n, pts.iter().map(|p| p.bitrate.log10()));
        let solution = design
            .svd(true, true)
            .solve(&target, 1e-12)
            .map_err(|_| QualityError::DegenerateQuality)?;
        Ok(Self {
            coeffs: [solution[0], solution[1], solution[2], solution[3]],
            center,
            scale,
        })
    }

    /// Integral of the fitted log-rate over `[q0, q1]` in quality units.
    fn integral(&self, q0: f64, q1: f64) -> f64 {
        let anti = |q: f64| {
            let t = (q - self.center) / self.scale;
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * t.powi(k as i32 + 1) / (k + 1) as f64)
                .sum::<f64>()
        };
        self.scale * (anti(q1) - anti(q0))
    }
}

/// Bjøntegaard delta rate of `test` against `base`, in percent.
///
/// Negative values mean `test` needs less bitrate for the same quality.
pub fn bd_rate(base: &RdCurve, test: &RdCurve) -> Result<f64, QualityError> {
    let fit_base = LogRateFit::new(base)?;
    let fit_test = LogRateFit::new(test)?;
    let (b_lo, b_hi) = base.quality_range();
    let (t_lo, t_hi) = test.quality_range();
    let lo = b_lo.max(t_lo);
    let hi = b_hi.min(t_hi);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(QualityError::NoOverlap);
    }
    let avg_diff = (fit_test.integral(lo, hi) - fit_base.integral(lo, hi)) / (hi - lo);
    Ok((10f64.powf(avg_diff) - 1.0) * 100.0)
}
