//! 28x28 to 16x16 preprocessing: moment deskew, bilinear resample, soft threshold.

use serde::{Deserialize, Serialize};

use crate::mnist::{IMAGE_PIXELS, IMAGE_SIDE};

pub const SIDE: usize = 16;
pub const PIXELS: usize = SIDE * SIDE;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sample16 {
    pub pixels: [u8; PIXELS],
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub deskew: bool,
    /// Subtracted from every resampled pixel before clamping.
    pub floor: u8,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            deskew: true,
            floor: 32,
        }
    }
}

/// Bilinear sample of a row-major square image; outside reads as 0.
fn bilinear(img: &[f32], side: usize, r: f32, c: f32) -> f32 {
    let (r0, c0) = (r.floor(), c.floor());
    let (fr, fc) = (r - r0, c - c0);
    let at = |rr: f32, cc: f32| {
        if rr < 0.0 || cc < 0.0 || rr >= side as f32 || cc >= side as f32 {
            0.0
        } else {
            img[rr as usize * side + cc as usize]
        }
    };
    at(r0, c0) * (1.0 - fr) * (1.0 - fc)
        + at(r0, c0 + 1.0) * (1.0 - fr) * fc
        + at(r0 + 1.0, c0) * fr * (1.0 - fc)
        + at(r0 + 1.0, c0 + 1.0) * fr * fc
}

pub type Moments = ((f32, f32), (f32, f32, f32));

/// Centroid (row, col) and the (row-row, row-col, col-col) central moments.
pub fn moments(img: &[f32], side: usize) -> Option<Moments> {
    let mut m = 0.0f64;
    let (mut sr, mut sc) = (0.0f64, 0.0f64);
    for (i, &v) in img.iter().enumerate() {
        let (r, c) = ((i / side) as f64, (i % side) as f64);
        m += v as f64;
        sr += v as f64 * r;
        sc += v as f64 * c;
    }
    if m <= 0.0 {
        return None;
    }
    let (cr, cc) = (sr / m, sc / m);
    let (mut rr, mut rc, mut ccv) = (0.0f64, 0.0f64, 0.0f64);
    for (i, &v) in img.iter().enumerate() {
        let (dr, dc) = ((i / side) as f64 - cr, (i % side) as f64 - cc);
        rr += v as f64 * dr * dr;
        rc += v as f64 * dr * dc;
        ccv += v as f64 * dc * dc;
    }
    Some((
        (cr as f32, cc as f32),
        ((rr / m) as f32, (rc / m) as f32, (ccv / m) as f32),
    ))
}

/// Shears rows horizontally so the row/column covariance vanishes, and
/// moves the centroid to the image center.
pub fn deskew(img: &[f32]) -> Vec<f32> {
    let Some(((cr, cc), (rr, rc, _))) = moments(img, IMAGE_SIDE) else {
        return img.to_vec();
    };
    let alpha = if rr > 1e-6 { rc / rr } else { 0.0 };
    let center = (IMAGE_SIDE - 1) as f32 / 2.0;
    (0..IMAGE_PIXELS)
        .map(|i| {
            let (r, c) = ((i / IMAGE_SIDE) as f32, (i % IMAGE_SIDE) as f32);
            let src_r = r - center + cr;
            let src_c = c - center + cc + alpha * (r - center);
            bilinear(img, IMAGE_SIDE, src_r, src_c)
        })
        .collect()
}

pub fn resample(img: &[f32], from: usize, to: usize) -> Vec<f32> {
    let scale = from as f32 / to as f32;
    (0..to * to)
        .map(|i| {
            let r = (i / to) as f32 * scale + (scale - 1.0) / 2.0;
            let c = (i % to) as f32 * scale + (scale - 1.0) / 2.0;
            bilinear(img, from, r, c)
        })
        .collect()
}

pub fn preprocess(raw: &[u8; IMAGE_PIXELS], label: u8, cfg: &PreprocessConfig) -> Sample16 {
    let img: Vec<f32> = raw.iter().map(|&v| v as f32).collect();
    let img = if cfg.deskew { deskew(&img) } else { img };
    let small = resample(&img, IMAGE_SIDE, SIDE);
    let mut pixels = [0u8; PIXELS];
    for (p, v) in pixels.iter_mut().zip(small) {
        *p = (v.round() - cfg.floor as f32).clamp(0.0, 255.0) as u8;
    }
    Sample16 { pixels, label }
}
