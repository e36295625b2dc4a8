//! Dense scalar maps with a validity mask, and bilinear sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Unitless disparity, correct up to an unknown positive scale and offset.
    AffineDisparity,
    /// Meters; valid values are strictly positive.
    MetricDepth,
    /// 1/m; valid values are non-negative.
    MetricInverseDepth,
    /// Stereo disparity in pixels; valid values are non-negative.
    PixelDisparity,
}

impl MapKind {
    fn admits(self, x: f64) -> bool {
        x.is_finite()
            && match self {
                MapKind::AffineDisparity => true,
                MapKind::MetricDepth => x > 0.0,
                MapKind::MetricInverseDepth | MapKind::PixelDisparity => x >= 0.0,
            }
    }
}

/// Row-major `height x width` grid. Index `(x, y)` maps to `y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterMap {
    width: usize,
    height: usize,
    kind: MapKind,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl RasterMap {
    pub fn new(
        width: usize,
        height: usize,
        kind: MapKind,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if values.len() != n || valid.len() != n {
            return Err(Error::InvalidInput(format!(
                "raster {width}x{height} needs {n} values and mask entries, got {} and {}",
                values.len(),
                valid.len()
            )));
        }
        if let Some(i) = (0..n).find(|&i| valid[i] && !kind.admits(values[i])) {
            return Err(Error::InvalidInput(format!(
                "pixel ({}, {}) holds {} which is not a valid {:?} value",
                i % width.max(1),
                i / width.max(1),
                values[i],
                kind
            )));
        }
        Ok(Self {
            width,
            height,
            kind,
            values,
            valid,
        })
    }

    /// Validity inferred from the values: admissible values for `kind` are valid.
    pub fn from_values(
        width: usize,
        height: usize,
        kind: MapKind,
        values: Vec<f64>,
    ) -> Result<Self> {
        let valid = values.iter().map(|&x| kind.admits(x)).collect();
        Self::new(width, height, kind, values, valid)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        kind: MapKind,
        mut f: impl FnMut(usize, usize) -> Option<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        let mut valid = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                match f(x, y) {
                    Some(v) => {
                        values.push(v);
                        valid.push(true);
                    }
                    None => {
                        values.push(0.0);
                        valid.push(false);
                    }
                }
            }
        }
        Self::new(width, height, kind, values, valid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.valid[i].then(|| self.values[i])
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Iterates `(x, y, value)` over valid pixels in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        self.values
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .map(move |(i, (&v, _))| (i % w, i / w, v))
    }

    /// Same geometry, new kind and values. `f` returning `None` invalidates the pixel.
    pub fn map_valid(&self, kind: MapKind, mut f: impl FnMut(f64) -> Option<f64>) -> Result<Self> {
        let mut values = vec![0.0; self.len()];
        let mut valid = vec![false; self.len()];
        for i in 0..self.len() {
            if self.valid[i] {
                if let Some(v) = f(self.values[i]) {
                    values[i] = v;
                    valid[i] = true;
                }
            }
        }
        Self::new(self.width, self.height, kind, values, valid)
    }

    pub fn same_shape(&self, other: &RasterMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Bilinear interpolation at a continuous pixel location.
    ///
    /// Returns `Ok(None)` when any grid node carrying non-zero weight is
    /// invalid. At integer coordinates only the node itself carries weight,
    /// so the grid value is returned exactly.
    pub fn bilinear_sample(&self, u: f64, v: f64) -> Result<Option<f64>> {
        let in_bounds = self.width > 0
            && self.height > 0
            && u >= 0.0
            && v >= 0.0
            && u <= (self.width - 1) as f64
            && v <= (self.height - 1) as f64;
        if !in_bounds {
            return Err(Error::OutOfBounds {
                u,
                v,
                width: self.width,
                height: self.height,
            });
        }
        let x0 = u.floor() as usize;
        let y0 = v.floor() as usize;
        let fx = u - x0 as f64;
        let fy = v - y0 as f64;
        let mut acc = 0.0;
        for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
            if wy == 0.0 {
                continue;
            }
            for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                if wx == 0.0 {
                    continue;
                }
                match self.get(x0 + dx, y0 + dy) {
                    Some(val) => acc += val * wx * wy,
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(acc))
    }
}

/// Closed depth interval in meters, used for caps, evaluation ranges and beam filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub min_m: f64,
    pub max_m: f64,
}

impl DepthRange {
    pub fn new(min_m: f64, max_m: f64) -> Result<Self> {
        if !(min_m > 0.0 && max_m > min_m && max_m.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "depth range needs 0 < min < max, got [{min_m}, {max_m}]"
            )));
        }
        Ok(Self { min_m, max_m })
    }

    /// 0.1 m to 80 m.
    pub const OUTDOOR: DepthRange = DepthRange {
        min_m: 0.1,
        max_m: 80.0,
    };

    /// 0.1 m to 10 m.
    pub const INDOOR: DepthRange = DepthRange {
        min_m: 0.1,
        max_m: 10.0,
    };

    pub fn contains(&self, depth: f64) -> bool {
        depth >= self.min_m && depth <= self.max_m
    }
}

pub fn bilinear_sample(map: &RasterMap, u: f64, v: f64) -> Result<Option<f64>> {
    map.bilinear_sample(u, v)
}
