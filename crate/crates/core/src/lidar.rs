//! B-beam LiDAR simulated by reading evenly spaced rows of a dense depth map.
//!
//! Row `i` of `B` is `floor((i + 0.5) * H / B)`, so a single beam reads the
//! center row. The row set for `B` beams is generally not a subset of the set
//! for `2B` beams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DepthRange, MapKind, RasterMap};
use crate::refpoint::{PointSource, ReferencePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub n_beams: usize,
    /// `None` keeps every valid pixel of a beam row.
    pub max_points_per_row: Option<usize>,
    pub depth_range: DepthRange,
    pub seed: u64,
}

impl BeamConfig {
    pub fn new(n_beams: usize) -> Self {
        Self {
            n_beams,
            max_points_per_row: None,
            depth_range: DepthRange::OUTDOOR,
            seed: 0,
        }
    }
}

/// Selected row indices, strictly increasing when `n_beams <= height`.
pub fn beam_rows(height: usize, n_beams: usize) -> Vec<usize> {
    // floor((i + 0.5) H / B) in exact integer arithmetic
    (0..n_beams)
        .map(|i| (2 * i + 1) * height / (2 * n_beams))
        .collect()
}

pub fn simulate_beams(gt: &RasterMap, cfg: &BeamConfig) -> Result<Vec<ReferencePoint>> {
    if gt.kind() != MapKind::MetricDepth {
        return Err(Error::InvalidInput(format!(
            "expected metric depth, got {:?}",
            gt.kind()
        )));
    }
    if cfg.n_beams == 0 || cfg.n_beams > gt.height() {
        return Err(Error::InvalidConfig(format!(
            "n_beams must be in [1, {}], got {}",
            gt.height(),
            cfg.n_beams
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::new();
    let mut any_valid = false;
    for row in beam_rows(gt.height(), cfg.n_beams) {
        let mut hits: Vec<(usize, f64)> = (0..gt.width())
            .filter_map(|x| gt.get(x, row).map(|z| (x, z)))
            .inspect(|_| any_valid = true)
            .filter(|&(_, z)| cfg.depth_range.contains(z))
            .collect();
        if let Some(k) = cfg.max_points_per_row {
            if hits.len() > k {
                let mut keep = rand::seq::index::sample(&mut rng, hits.len(), k).into_vec();
                keep.sort_unstable();
                hits = keep.into_iter().map(|i| hits[i]).collect();
            }
        }
        for (x, z) in hits {
            points.push(ReferencePoint::new(
                x as f64,
                row as f64,
                z,
                PointSource::LidarSim,
            )?);
        }
    }
    if !any_valid {
        return Err(Error::NoValidPoints);
    }
    Ok(points)
}
