//! Deterministic synthetic sequences for tests and threshold calibration.
//!
//! Every sample is a pure function of the seed, the frame index and the
//! pixel coordinates, computed with integer arithmetic (plus IEEE-exact
//! `f64` basics for motion offsets), so output is bit-identical across
//! platforms and independent of thread scheduling.
//!
//! Randomness comes from `splitmix64` applied to a mix of the seed and the
//! coordinates. The base texture is value noise: random lattice values,
//! bilinearly interpolated, summed over cell sizes 32, 16, 8 and 4 with a
//! per-pixel octave on top.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::video_io::{FramePlane, FrameRate, VideoError, VideoSequence};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("frame_count must be at least 2, got {0}")]
    FrameCount(usize),
    #[error("amplitude must be finite and non-negative, got {0}")]
    Amplitude(f64),
    #[error(transparent)]
    Video(#[from] VideoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// One textured frame repeated.
    Static,
    /// Static texture plus i.i.d. noise with standard deviation `amplitude`.
    StaticNoise,
    /// Texture translated right by `amplitude` px per frame.
    Pan,
    /// Texture magnified about the center by `amplitude` percent per frame.
    Zoom,
    /// Static texture that switches to an unrelated one halfway through.
    Cut,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::Static => "static",
            SynthKind::StaticNoise => "static_noise",
            SynthKind::Pan => "pan",
            SynthKind::Zoom => "zoom",
            SynthKind::Cut => "cut",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "static" => SynthKind::Static,
            "static_noise" | "static-noise" => SynthKind::StaticNoise,
            "pan" => SynthKind::Pan,
            "zoom" => SynthKind::Zoom,
            "cut" => SynthKind::Cut,
            other => return Err(format!("unknown synth kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub amplitude: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, width: usize, height: usize, frame_count: usize) -> Self {
        Self {
            kind,
            width,
            height,
            frame_count,
            amplitude: 0.0,
            seed: 0,
        }
    }

    pub fn amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn hash4(seed: u64, a: i64, b: i64, c: u64) -> u64 {
    splitmix64(seed ^ splitmix64((a as u64) ^ splitmix64((b as u64) ^ splitmix64(c))))
}

/// (cell size, weight) per octave; cell 1 is per-pixel detail.
const OCTAVES: [(i64, i64); 5] = [(32, 8), (16, 6), (8, 4), (4, 3), (1, 2)];
const OCTAVE_WEIGHT_SUM: i64 = 8 + 6 + 4 + 3 + 2;

fn lattice(seed: u64, octave: u64, i: i64, j: i64) -> i64 {
    (hash4(seed, i, j, octave) & 0xFF) as i64
}

/// Value-noise texture, defined on the whole integer plane.
pub fn texture(seed: u64, x: i64, y: i64) -> u8 {
    let mut acc = 0i64;
    for (octave, &(cell, weight)) in OCTAVES.iter().enumerate() {
        let octave = octave as u64;
        let (i, fx) = (x.div_euclid(cell), x.rem_euclid(cell));
        let (j, fy) = (y.div_euclid(cell), y.rem_euclid(cell));
        let v00 = lattice(seed, octave, i, j);
        let v10 = lattice(seed, octave, i + 1, j);
        let v01 = lattice(seed, octave, i, j + 1);
        let v11 = lattice(seed, octave, i + 1, j + 1);
        let top = v00 * (cell - fx) + v10 * fx;
        let bottom = v01 * (cell - fx) + v11 * fx;
        let v = top * (cell - fy) + bottom * fy;
        // v / cell^2 is in [0, 255]
        acc += weight * v / (cell * cell);
    }
    (acc / OCTAVE_WEIGHT_SUM) as u8
}

/// Integer noise with roughly Gaussian shape (Irwin-Hall of 12 uniforms).
fn noise(seed: u64, frame: usize, x: usize, y: usize, sigma: f64) -> i64 {
    let h0 = hash4(seed ^ 0x5EED_0015E, x as i64, y as i64, frame as u64);
    let h1 = hash4(
        seed ^ 0x5EED_0015E,
        x as i64,
        y as i64,
        (frame as u64) | 1 << 63,
    );
    let sum: u64 = (0..4)
        .map(|k| (h0 >> (16 * k)) & 0xFFFF)
        .chain((0..4).map(|k| (h1 >> (16 * k)) & 0xFFFF))
        .chain((0..4).map(|k| (splitmix64(h0 ^ h1) >> (16 * k)) & 0xFFFF))
        .sum();
    let unit = (sum as f64 - 6.0 * 65536.0) / 65536.0;
    (unit * sigma).round() as i64
}

fn render(spec: &SynthSpec, frame: usize) -> Result<FramePlane, VideoError> {
    let (w, h, seed, amp) = (spec.width, spec.height, spec.seed, spec.amplitude);
    match spec.kind {
        SynthKind::Static => FramePlane::from_fn(w, h, |x, y| texture(seed, x as i64, y as i64)),
        SynthKind::StaticNoise => FramePlane::from_fn(w, h, |x, y| {
            let base = i64::from(texture(seed, x as i64, y as i64));
            (base + noise(seed, frame, x, y, amp)).clamp(0, 255) as u8
        }),
        SynthKind::Pan => {
            let offset = (amp * frame as f64).floor() as i64;
            FramePlane::from_fn(w, h, |x, y| texture(seed, x as i64 - offset, y as i64))
        }
        SynthKind::Zoom => {
            let step = 1.0 + amp / 100.0;
            let scale = (0..frame).fold(1.0f64, |s, _| s * step);
            let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
            FramePlane::from_fn(w, h, |x, y| {
                let sx = (cx + (x as f64 + 0.5 - cx) / scale - 0.5).round() as i64;
                let sy = (cy + (y as f64 + 0.5 - cy) / scale - 0.5).round() as i64;
                texture(seed, sx, sy)
            })
        }
        SynthKind::Cut => {
            let seed = if frame < spec.frame_count / 2 {
                seed
            } else {
                splitmix64(seed ^ 0xC0FF_EE00_C0FF_EE00)
            };
            FramePlane::from_fn(w, h, |x, y| texture(seed, x as i64, y as i64))
        }
    }
}

/// Renders the sequence described by `spec`.
pub fn generate(spec: &SynthSpec) -> Result<VideoSequence, SynthError> {
    if spec.frame_count < 2 {
        return Err(SynthError::FrameCount(spec.frame_count));
    }
    if !(spec.amplitude.is_finite() && spec.amplitude >= 0.0) {
        return Err(SynthError::Amplitude(spec.amplitude));
    }
    // Geometry check before fanning out.
    FramePlane::new(spec.width, spec.height, vec![0; spec.width * spec.height])?;
    let frames = (0..spec.frame_count)
        .into_par_iter()
        .map(|f| render(spec, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VideoSequence::new(
        frames,
        FrameRate::default(),
        format!("synth:{}", spec.kind),
    )?)
}
