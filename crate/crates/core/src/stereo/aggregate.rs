//! Semi-global path aggregation.
//!
//! Along a path direction `r`, with `p - r` the previous pixel on the path:
//!
//! ```text
//! L(p, d) = C(p, d) + min(L(p-r, d), L(p-r, d±1) + P1, min_k L(p-r, k) + P2) - min_k L(p-r, k)
//! ```
//!
//! The first pixel of each path takes `L = C`. Aggregated costs are summed
//! over all requested directions and bounded by `n_paths * (C_max + P2)`.

use super::cost::CostVolume;

/// Path step `(dx, dy)`.
pub type Direction = (i32, i32);

pub const PATHS_HORIZONTAL: [Direction; 2] = [(1, 0), (-1, 0)];
pub const PATHS4: [Direction; 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
pub const PATHS8: [Direction; 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
];

/// Sums the path costs of every direction in `dirs`.
pub fn aggregate_paths(cv: &CostVolume, p1: u32, p2: u32, dirs: &[Direction]) -> CostVolume {
    let mut sum = vec![0u32; cv.costs.len()];
    for &dir in dirs {
        accumulate_direction(cv, p1, p2, dir, &mut sum);
    }
    CostVolume {
        width: cv.width,
        height: cv.height,
        n_disp: cv.n_disp,
        costs: sum,
    }
}

fn accumulate_direction(cv: &CostVolume, p1: u32, p2: u32, (dx, dy): Direction, out: &mut [u32]) {
    let (w, h, nd) = (cv.width, cv.height, cv.n_disp);
    if w == 0 || h == 0 || nd == 0 {
        return;
    }
    let rows: Vec<usize> = if dy >= 0 {
        (0..h).collect()
    } else {
        (0..h).rev().collect()
    };
    let cols: Vec<usize> = if dx >= 0 {
        (0..w).collect()
    } else {
        (0..w).rev().collect()
    };

    let mut prev = vec![0u32; w * nd];
    let mut prev_min = vec![0u32; w];
    let mut cur = vec![0u32; w * nd];
    let mut cur_min = vec![0u32; w];
    let mut step = vec![0u32; nd];

    for (ri, &y) in rows.iter().enumerate() {
        for &x in &cols {
            let px = x as i64 - dx as i64;
            let has_pred = px >= 0 && (px as usize) < w && (dy == 0 || ri > 0);
            let c = cv.pixel(x, y);
            let mut m = u32::MAX;
            if has_pred {
                let px = px as usize;
                let (lp, minp) = if dy == 0 {
                    (&cur[px * nd..(px + 1) * nd], cur_min[px])
                } else {
                    (&prev[px * nd..(px + 1) * nd], prev_min[px])
                };
                for d in 0..nd {
                    let mut best = lp[d];
                    if d > 0 {
                        best = best.min(lp[d - 1] + p1);
                    }
                    if d + 1 < nd {
                        best = best.min(lp[d + 1] + p1);
                    }
                    best = best.min(minp + p2);
                    step[d] = c[d] + best - minp;
                }
                for d in 0..nd {
                    cur[x * nd + d] = step[d];
                    m = m.min(step[d]);
                }
            } else {
                for d in 0..nd {
                    cur[x * nd + d] = c[d];
                    m = m.min(c[d]);
                }
            }
            cur_min[x] = m;
            let base = (y * w + x) * nd;
            for d in 0..nd {
                out[base + d] += cur[x * nd + d];
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut prev_min, &mut cur_min);
    }
}
