use rayon::prelude::*;

use super::census::CensusImage;
use crate::error::{Error, Result};

/// Per-pixel, per-disparity matching costs, laid out as `(y * width + x) * n_disp + d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostVolume {
    pub width: usize,
    pub height: usize,
    pub n_disp: usize,
    pub costs: Vec<u32>,
}

impl CostVolume {
    pub fn new(width: usize, height: usize, n_disp: usize, costs: Vec<u32>) -> Result<Self> {
        if costs.len() != width * height * n_disp {
            return Err(Error::InvalidInput(format!(
                "cost volume {width}x{height}x{n_disp} needs {} entries, got {}",
                width * height * n_disp,
                costs.len()
            )));
        }
        Ok(Self {
            width,
            height,
            n_disp,
            costs,
        })
    }

    pub fn cost(&self, x: usize, y: usize, d: usize) -> u32 {
        self.costs[(y * self.width + x) * self.n_disp + d]
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u32] {
        let i = (y * self.width + x) * self.n_disp;
        &self.costs[i..i + self.n_disp]
    }

    pub fn max_cost(&self) -> u32 {
        self.costs.iter().copied().max().unwrap_or(0)
    }

    /// Re-indexes a left-referenced volume by right-image pixel:
    /// `C_R(x, y, d) = C(x + d, y, d)`, with `oob` where `x + d` leaves the image.
    pub fn right_view(&self, oob: u32) -> CostVolume {
        let (w, nd) = (self.width, self.n_disp);
        let mut costs = vec![oob; self.costs.len()];
        for y in 0..self.height {
            for x in 0..w {
                for d in 0..nd.min(w - x) {
                    costs[(y * w + x) * nd + d] = self.cost(x + d, y, d);
                }
            }
        }
        CostVolume { costs, ..*self }
    }
}

/// Hamming distance between the left descriptor at `x` and the right one at `x - d`.
///
/// Shifts that leave the right image cost the descriptor length.
pub fn matching_cost(
    left: &CensusImage,
    right: &CensusImage,
    max_disp: usize,
) -> Result<CostVolume> {
    if left.width != right.width || left.height != right.height || left.window != right.window {
        return Err(Error::InvalidInput(
            "census images differ in size or window".into(),
        ));
    }
    if max_disp < 1 {
        return Err(Error::InvalidConfig("max_disparity must be >= 1".into()));
    }
    let (w, h, nd) = (left.width, left.height, max_disp);
    let oob = left.n_bits();
    let mut costs = vec![0u32; w * h * nd];
    costs
        .par_chunks_mut(w * nd)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let l = left.at(x, y);
                for d in 0..nd {
                    row[x * nd + d] = if d <= x {
                        (l ^ right.at(x - d, y)).count_ones()
                    } else {
                        oob
                    };
                }
            }
        });
    CostVolume::new(w, h, nd, costs)
}
