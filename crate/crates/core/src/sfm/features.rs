//! Minimal corner detector and patch matcher.
//!
//! Harris corners (Sobel gradients, 5x5 box structure tensor) selected
//! greedily by response with a non-maximum suppression radius, matched by
//! zero-mean normalized cross-correlation of square patches. A match must be
//! mutual-best and pass a distance ratio test on `1 - ncc`.

use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::Correspondence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub harris_k: f64,
    pub max_corners: usize,
    pub nms_radius: usize,
    /// Side of the square NCC patch (odd).
    pub patch_size: usize,
    /// Keep a match when `1 - best < ratio * (1 - second_best)`.
    pub ratio: f64,
    pub min_ncc: f64,
    /// Corners weaker than this fraction of the strongest response are ignored.
    pub min_response_frac: f64,
    /// Optional bound on the pixel displacement between matched corners.
    pub max_displacement: Option<f64>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            harris_k: 0.04,
            max_corners: 500,
            nms_radius: 5,
            patch_size: 11,
            ratio: 0.9,
            min_ncc: 0.7,
            min_response_frac: 0.01,
            max_displacement: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub x: usize,
    pub y: usize,
    pub response: f64,
}

const TENSOR_RADIUS: usize = 2;

pub fn harris_corners(img: &GrayImage, cfg: &MatchConfig) -> Vec<Corner> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let margin = (cfg.patch_size / 2).max(TENSOR_RADIUS + 1);
    if w <= 2 * margin || h <= 2 * margin {
        return Vec::new();
    }
    let at = |x: usize, y: usize| img.get_pixel(x as u32, y as u32).0[0] as f64;
    let mut ixx = vec![0.0; w * h];
    let mut iyy = vec![0.0; w * h];
    let mut ixy = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y * w + x;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }
    let mut candidates = Vec::new();
    let mut max_r: f64 = 0.0;
    for y in margin..h - margin {
        for x in margin..w - margin {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for yy in y - TENSOR_RADIUS..=y + TENSOR_RADIUS {
                for xx in x - TENSOR_RADIUS..=x + TENSOR_RADIUS {
                    let i = yy * w + xx;
                    a += ixx[i];
                    b += iyy[i];
                    c += ixy[i];
                }
            }
            let r = a * b - c * c - cfg.harris_k * (a + b) * (a + b);
            if r > 0.0 {
                max_r = max_r.max(r);
                candidates.push(Corner { x, y, response: r });
            }
        }
    }
    let floor = cfg.min_response_frac * max_r;
    candidates.retain(|c| c.response >= floor);
    // strongest first; raster order breaks ties
    candidates.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then((a.y, a.x).cmp(&(b.y, b.x)))
    });
    let r2 = (cfg.nms_radius * cfg.nms_radius) as isize;
    let mut kept: Vec<Corner> = Vec::new();
    for c in candidates {
        if kept.len() >= cfg.max_corners {
            break;
        }
        let suppressed = kept.iter().any(|k| {
            let dx = k.x as isize - c.x as isize;
            let dy = k.y as isize - c.y as isize;
            dx * dx + dy * dy <= r2
        });
        if !suppressed {
            kept.push(c);
        }
    }
    kept
}

/// Zero-mean, unit-norm patch; `None` for flat patches.
fn patch(img: &GrayImage, c: &Corner, size: usize) -> Option<Vec<f64>> {
    let r = size / 2;
    let mut v = Vec::with_capacity(size * size);
    for y in c.y - r..=c.y + r {
        for x in c.x - r..=c.x + r {
            v.push(img.get_pixel(x as u32, y as u32).0[0] as f64);
        }
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|p| *p -= mean);
    let norm = v.iter().map(|p| p * p).sum::<f64>().sqrt();
    if norm < 1e-9 {
        return None;
    }
    v.iter_mut().for_each(|p| *p /= norm);
    Some(v)
}

/// Detects corners in both images and returns mutual-best NCC matches, in frame-A corner order.
pub fn detect_and_match(
    img_a: &GrayImage,
    img_b: &GrayImage,
    cfg: &MatchConfig,
) -> Vec<Correspondence> {
    let ca = harris_corners(img_a, cfg);
    let cb = harris_corners(img_b, cfg);
    let pa: Vec<Option<Vec<f64>>> = ca.iter().map(|c| patch(img_a, c, cfg.patch_size)).collect();
    let pb: Vec<Option<Vec<f64>>> = cb.iter().map(|c| patch(img_b, c, cfg.patch_size)).collect();

    let allowed = |a: &Corner, b: &Corner| {
        cfg.max_displacement.is_none_or(|m| {
            let (dx, dy) = (a.x as f64 - b.x as f64, a.y as f64 - b.y as f64);
            dx.hypot(dy) <= m
        })
    };
    let mut scores = vec![f64::NEG_INFINITY; ca.len() * cb.len()];
    for (i, a) in pa.iter().enumerate() {
        let Some(a) = a else { continue };
        for (j, b) in pb.iter().enumerate() {
            let Some(b) = b else { continue };
            if allowed(&ca[i], &cb[j]) {
                scores[i * cb.len() + j] = a.iter().zip(b).map(|(x, y)| x * y).sum();
            }
        }
    }
    let nb = cb.len();
    let best_in_row = |i: usize| -> Option<(usize, f64, f64)> {
        let row = &scores[i * nb..(i + 1) * nb];
        let mut best: Option<(usize, f64)> = None;
        let mut second = f64::NEG_INFINITY;
        for (j, &s) in row.iter().enumerate() {
            if s == f64::NEG_INFINITY {
                continue;
            }
            match best {
                Some((_, bs)) if s <= bs => second = second.max(s),
                _ => {
                    if let Some((_, bs)) = best {
                        second = second.max(bs);
                    }
                    best = Some((j, s));
                }
            }
        }
        best.map(|(j, s)| (j, s, second))
    };
    let best_in_col = |j: usize| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..ca.len() {
            let s = scores[i * nb + j];
            if s != f64::NEG_INFINITY && best.is_none_or(|(_, bs)| s > bs) {
                best = Some((i, s));
            }
        }
        best.map(|(i, _)| i)
    };

    let mut out = Vec::new();
    for (i, a) in ca.iter().enumerate() {
        let Some((j, s, second)) = best_in_row(i) else {
            continue;
        };
        if s < cfg.min_ncc || best_in_col(j) != Some(i) {
            continue;
        }
        if second > f64::NEG_INFINITY && (1.0 - s) >= cfg.ratio * (1.0 - second) {
            continue;
        }
        let b = &cb[j];
        out.push(Correspondence {
            u1: a.x as f64,
            v1: a.y as f64,
            u2: b.x as f64,
            v2: b.y as f64,
            score: Some(s),
        });
    }
    out
}
