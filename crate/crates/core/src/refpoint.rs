use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    LidarSim,
    Stereo,
    Sfm,
    External,
}

impl fmt::Display for PointSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointSource::LidarSim => "lidar_sim",
            PointSource::Stereo => "stereo",
            PointSource::Sfm => "sfm",
            PointSource::External => "external",
        })
    }
}

impl FromStr for PointSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lidar_sim" => Ok(PointSource::LidarSim),
            "stereo" => Ok(PointSource::Stereo),
            "sfm" => Ok(PointSource::Sfm),
            "external" => Ok(PointSource::External),
            other => Err(Error::InvalidInput(format!(
                "unknown point source {other:?}"
            ))),
        }
    }
}

/// A sparse metric anchor at a continuous pixel location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
    pub source: PointSource,
    pub weight: f64,
}

impl ReferencePoint {
    pub fn new(u: f64, v: f64, depth: f64, source: PointSource) -> Result<Self> {
        Self::weighted(u, v, depth, source, 1.0)
    }

    pub fn weighted(u: f64, v: f64, depth: f64, source: PointSource, weight: f64) -> Result<Self> {
        if !(u.is_finite() && v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite pixel ({u}, {v})")));
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "reference depth must be positive, got {depth}"
            )));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight must be non-negative, got {weight}"
            )));
        }
        Ok(Self {
            u,
            v,
            depth,
            source,
            weight,
        })
    }

    pub fn inverse_depth(&self) -> f64 {
        1.0 / self.depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ReferencePoint::new(1.0, 2.0, 0.0, PointSource::Sfm).is_err());
        assert!(ReferencePoint::weighted(1.0, 2.0, 1.0, PointSource::Sfm, -1.0).is_err());
        let p = ReferencePoint::new(1.0, 2.0, 4.0, PointSource::Stereo).unwrap();
        assert_eq!(p.weight, 1.0);
        assert_eq!(p.inverse_depth(), 0.25);
    }

    #[test]
    fn source_names() {
        for s in [
            PointSource::LidarSim,
            PointSource::Stereo,
            PointSource::Sfm,
            PointSource::External,
        ] {
            assert_eq!(s.to_string().parse::<PointSource>().unwrap(), s);
        }
        assert!("lidar".parse::<PointSource>().is_err());
    }
}
