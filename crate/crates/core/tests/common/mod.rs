//! Independent reference implementations used as test oracles.

#![allow(dead_code, clippy::needless_range_loop)]

use gfgroup_core::{FramePlane, MotionVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn random_plane(rng: &mut StdRng, w: usize, h: usize) -> FramePlane {
    let samples = (0..w * h).map(|_| rng.gen::<u8>()).collect();
    FramePlane::new(w, h, samples).unwrap()
}

/// A plane that is smooth enough for motion search to have a unique
/// answer but random everywhere.
pub fn random_textured(rng: &mut StdRng, w: usize, h: usize) -> FramePlane {
    let base: Vec<u8> = (0..w * h).map(|_| rng.gen::<u8>()).collect();
    FramePlane::from_fn(w, h, |x, y| {
        let a = base[y * w + x] as u32;
        let b = base[y * w + (x + 1) % w] as u32;
        ((a + b) / 2) as u8
    })
    .unwrap()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Scans every candidate in the window, collects them, and picks the
/// minimum under (sse, |dx|+|dy|, dy, dx).
pub fn brute_force_block(
    cur: &FramePlane,
    reference: &FramePlane,
    col: usize,
    row: usize,
    size: usize,
    range: i32,
) -> (MotionVector, u64) {
    let (x0, y0) = ((col * size) as i64, (row * size) as i64);
    let mut candidates = Vec::new();
    for dy in -range..=range {
        for dx in -range..=range {
            let (rx, ry) = (x0 + dx as i64, y0 + dy as i64);
            if rx < 0
                || ry < 0
                || rx + size as i64 > reference.width() as i64
                || ry + size as i64 > reference.height() as i64
            {
                continue;
            }
            let mut sse: i64 = 0;
            for j in 0..size as i64 {
                for i in 0..size as i64 {
                    let c =
                        cur.samples()[((y0 + j) as usize) * cur.width() + (x0 + i) as usize] as i64;
                    let r = reference.samples()
                        [((ry + j) as usize) * reference.width() + (rx + i) as usize]
                        as i64;
                    sse += (c - r).pow(2);
                }
            }
            candidates.push((sse as u64, dx.abs() + dy.abs(), dy, dx));
        }
    }
    candidates.sort();
    let (sse, _, dy, dx) = candidates[0];
    (MotionVector::new(dx, dy), sse)
}

/// SSIM evaluated window by window with an explicit 2-D Gaussian.
pub fn ssim_oracle(a: &FramePlane, b: &FramePlane) -> f64 {
    let mut kernel = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (j, row) in kernel.iter_mut().enumerate() {
        for (i, k) in row.iter_mut().enumerate() {
            let (x, y) = (i as f64 - 5.0, j as f64 - 5.0);
            *k = (-(x * x + y * y) / (2.0 * 1.5 * 1.5)).exp();
            total += *k;
        }
    }
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let (w, h) = (a.width(), a.height());
    let mut sum = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut ma, mut mb) = (0.0, 0.0);
            for j in 0..11 {
                for i in 0..11 {
                    let k = kernel[j][i] / total;
                    ma += k * a.get(x0 + i, y0 + j) as f64;
                    mb += k * b.get(x0 + i, y0 + j) as f64;
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..11 {
                for i in 0..11 {
                    let k = kernel[j][i] / total;
                    let da = a.get(x0 + i, y0 + j) as f64 - ma;
                    let db = b.get(x0 + i, y0 + j) as f64 - mb;
                    va += k * da * da;
                    vb += k * db * db;
                    cov += k * da * db;
                }
            }
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// PSNR by direct summation.
pub fn psnr_oracle(a: &FramePlane, b: &FramePlane) -> f64 {
    let mut sse = 0.0f64;
    for (x, y) in a.samples().iter().zip(b.samples()) {
        sse += (*x as f64 - *y as f64).powi(2);
    }
    if sse == 0.0 {
        return 100.0;
    }
    let mse = sse / a.samples().len() as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}
