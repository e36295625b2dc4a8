//! Depth evaluation: threshold accuracies and error statistics over a validity mask.
//!
//! The mask keeps pixels where both maps are valid and the ground truth lies
//! strictly inside the configured depth range, intersected with an optional
//! crop. Dataset figures are the unweighted mean of per-image figures.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DepthRange, RasterMap};
use crate::rescale::{r_squared, AffineScale, SamplePair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crop {
    None,
    /// The usual KITTI Eigen-split crop.
    Eigen,
    /// Fractions of the height/width removed from each side.
    Custom {
        top: f64,
        bottom: f64,
        left: f64,
        right: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Predictions are already metric and used as-is.
    NoneMetric,
    /// Multiply predictions by `median(gt) / median(pred)` over the mask. Diagnostic only.
    MedianScaling,
}

/// Named evaluation presets. Ranges follow common practice (80 m outdoor with
/// the Eigen crop, 10 m indoor); `Custom` takes its values from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Indoor,
    Outdoor,
    Custom,
}

impl Profile {
    /// Depth cap applied to rescaled maps.
    pub fn depth_cap(self) -> DepthRange {
        match self {
            Profile::Indoor => DepthRange::INDOOR,
            Profile::Outdoor | Profile::Custom => DepthRange::OUTDOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub depth_range: DepthRange,
    pub crop: Crop,
    pub alignment: Alignment,
}

impl EvalConfig {
    pub fn new(depth_range: DepthRange) -> Self {
        Self {
            depth_range,
            crop: Crop::None,
            alignment: Alignment::NoneMetric,
        }
    }

    /// 80 m cap with the Eigen crop.
    pub fn outdoor() -> Self {
        Self {
            crop: Crop::Eigen,
            ..Self::new(DepthRange::OUTDOOR)
        }
    }

    /// 10 m cap, no crop.
    pub fn indoor() -> Self {
        Self::new(DepthRange::INDOOR)
    }

    pub fn validate(&self) -> Result<()> {
        DepthRange::new(self.depth_range.min_m, self.depth_range.max_m)?;
        if let Crop::Custom {
            top,
            bottom,
            left,
            right,
        } = self.crop
        {
            for f in [top, bottom, left, right] {
                if !(0.0..0.5).contains(&f) {
                    return Err(Error::InvalidConfig(format!(
                        "crop fraction {f} outside [0, 0.5)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Half-open `(rows, cols)` window kept by the crop.
    pub fn crop_window(
        &self,
        width: usize,
        height: usize,
    ) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (h, w) = (height as f64, width as f64);
        let at = |f: f64, n: f64| (f * n).floor() as usize;
        match self.crop {
            Crop::None => (0..height, 0..width),
            Crop::Eigen => (
                at(0.332_432_4, h)..at(0.913_513_51, h),
                at(0.035_947_7, w)..at(0.964_052_29, w),
            ),
            Crop::Custom {
                top,
                bottom,
                left,
                right,
            } => (
                at(top, h)..height - at(bottom, h),
                at(left, w)..width - at(right, w),
            ),
        }
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self::outdoor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub abs_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub log10: f64,
    pub n_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEval {
    pub name: String,
    #[serde(flatten)]
    pub metrics: DepthMetrics,
    pub scale: Option<AffineScale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub metrics: DepthMetrics,
    pub per_image: Vec<ImageEval>,
}

impl EvalReport {
    /// Averages the per-image metrics with equal weight; `n_pixels` is the total.
    pub fn from_images(per_image: Vec<ImageEval>) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::EmptyMask);
        }
        let n = per_image.len() as f64;
        let mean =
            |f: fn(&DepthMetrics) -> f64| per_image.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
        let metrics = DepthMetrics {
            delta1: mean(|m| m.delta1),
            delta2: mean(|m| m.delta2),
            delta3: mean(|m| m.delta3),
            abs_rel: mean(|m| m.abs_rel),
            rmse: mean(|m| m.rmse),
            rmse_log: mean(|m| m.rmse_log),
            log10: mean(|m| m.log10),
            n_pixels: per_image.iter().map(|r| r.metrics.n_pixels).sum(),
        };
        Ok(Self { metrics, per_image })
    }
}

/// Pixel indices (row-major) that enter the evaluation.
pub fn eval_mask(pred: &RasterMap, gt: &RasterMap, cfg: &EvalConfig) -> Result<Vec<usize>> {
    if !pred.same_shape(gt) {
        return Err(Error::InvalidInput(format!(
            "prediction is {}x{}, ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    cfg.validate()?;
    let (rows, cols) = cfg.crop_window(gt.width(), gt.height());
    let range = cfg.depth_range;
    let mut idx = Vec::new();
    for y in rows {
        for x in cols.clone() {
            if let (Some(_), Some(g)) = (pred.get(x, y), gt.get(x, y)) {
                if g > range.min_m && g < range.max_m {
                    idx.push(y * gt.width() + x);
                }
            }
        }
    }
    if idx.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(idx)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Metrics over paired depth samples; all values must be positive.
pub fn metrics_from_samples(pred: &[f64], gt: &[f64]) -> Result<DepthMetrics> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidInput("sample lists differ in length".into()));
    }
    if pred.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (mut d1, mut d2, mut d3) = (0usize, 0usize, 0usize);
    let (mut abs_rel, mut sq, mut sq_log, mut l10) = (0.0, 0.0, 0.0, 0.0);
    for (&p, &g) in pred.iter().zip(gt) {
        let ratio = (p / g).max(g / p);
        d1 += (ratio < 1.25) as usize;
        d2 += (ratio < 1.25f64.powi(2)) as usize;
        d3 += (ratio < 1.25f64.powi(3)) as usize;
        abs_rel += (p - g).abs() / g;
        sq += (p - g) * (p - g);
        let dl = p.ln() - g.ln();
        sq_log += dl * dl;
        l10 += (p.log10() - g.log10()).abs();
    }
    let n = pred.len() as f64;
    Ok(DepthMetrics {
        delta1: d1 as f64 / n,
        delta2: d2 as f64 / n,
        delta3: d3 as f64 / n,
        abs_rel: abs_rel / n,
        rmse: (sq / n).sqrt(),
        rmse_log: (sq_log / n).sqrt(),
        log10: l10 / n,
        n_pixels: pred.len(),
    })
}

pub fn evaluate_image(pred: &RasterMap, gt: &RasterMap, cfg: &EvalConfig) -> Result<DepthMetrics> {
    let mask = eval_mask(pred, gt, cfg)?;
    let gv: Vec<f64> = mask.iter().map(|&i| gt.values()[i]).collect();
    let mut pv: Vec<f64> = mask.iter().map(|&i| pred.values()[i]).collect();
    if cfg.alignment == Alignment::MedianScaling {
        let s = median(gv.clone()) / median(pv.clone());
        pv.iter_mut().for_each(|p| *p *= s);
    }
    metrics_from_samples(&pv, &gv)
}

/// Evaluates named `(pred, gt)` pairs in order and averages per image.
pub fn evaluate_dataset<'a>(
    records: impl IntoIterator<Item = (&'a str, &'a RasterMap, &'a RasterMap)>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let per_image = records
        .into_iter()
        .map(|(name, pred, gt)| {
            Ok(ImageEval {
                name: name.to_string(),
                metrics: evaluate_image(pred, gt, cfg)?,
                scale: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_images(per_image)
}

/// Coefficient of determination of the pairs around the fitted line; `None` when undefined.
pub fn r_squared_report(pairs: &[SamplePair], scale: &AffineScale) -> Option<f64> {
    r_squared(pairs, scale.alpha, scale.beta)
}

/// Aligned text table, one row per labelled metric set.
pub fn render_table(rows: &[(&str, &DepthMetrics)]) -> String {
    let label_w = rows
        .iter()
        .map(|(l, _)| l.chars().count())
        .max()
        .unwrap_or(0)
        .max(7);
    let heads = ["d1", "d2", "d3", "AbsRel", "RMSE", "RMSE_log", "log10"];
    let mut out = format!("{:<label_w$}", "variant");
    for h in heads {
        let _ = write!(out, " {h:>9}");
    }
    out.push('\n');
    for (label, m) in rows {
        let _ = write!(out, "{label:<label_w$}");
        for v in [
            m.delta1, m.delta2, m.delta3, m.abs_rel, m.rmse, m.rmse_log, m.log10,
        ] {
            let _ = write!(out, " {v:>9.3}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::MapKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn depth(w: usize, h: usize, v: Vec<f64>) -> RasterMap {
        RasterMap::from_values(w, h, MapKind::MetricDepth, v).unwrap()
    }

    fn all_pixels() -> EvalConfig {
        EvalConfig::new(DepthRange::new(1e-3, 1e3).unwrap())
    }

    #[test]
    fn perfect_prediction() {
        let gt = depth(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let m = evaluate_image(&gt, &gt, &all_pixels()).unwrap();
        assert_eq!((m.delta1, m.delta2, m.delta3), (1.0, 1.0, 1.0));
        assert_eq!(
            (m.abs_rel, m.rmse, m.rmse_log, m.log10),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(m.n_pixels, 6);
    }

    #[test]
    fn threshold_boundary_is_strict() {
        let gt = depth(2, 2, vec![1.0, 2.0, 4.0, 8.0]);
        let pred = gt
            .map_valid(MapKind::MetricDepth, |g| Some(1.25 * g))
            .unwrap();
        let m = evaluate_image(&pred, &gt, &all_pixels()).unwrap();
        assert_eq!(m.delta1, 0.0);
        assert_eq!(m.delta2, 1.0);
        assert_relative_eq!(m.abs_rel, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn two_pixel_example() {
        let m = evaluate_image(
            &depth(2, 1, vec![2.2, 3.0]),
            &depth(2, 1, vec![2.0, 4.0]),
            &all_pixels(),
        )
        .unwrap();
        // |0.2|/2 = 0.1, |1|/4 = 0.25
        assert_relative_eq!(m.abs_rel, 0.175, epsilon = 1e-15);
        assert_relative_eq!(m.rmse, 0.52f64.sqrt(), epsilon = 1e-15);
        assert!((m.rmse - 0.7211).abs() < 1e-4);
    }

    #[test]
    fn mask_respects_validity_range_and_crop() {
        let gt = depth(4, 1, vec![0.0, 5.0, 90.0, 10.0]);
        let pred = depth(4, 1, vec![1.0, 0.0, 1.0, 10.0]);
        let cfg = EvalConfig::new(DepthRange::OUTDOOR);
        assert_eq!(eval_mask(&pred, &gt, &cfg).unwrap(), vec![3]);
        let cropped = EvalConfig {
            crop: Crop::Custom {
                top: 0.0,
                bottom: 0.0,
                left: 0.0,
                right: 0.25,
            },
            ..cfg
        };
        assert!(matches!(
            eval_mask(&pred, &gt, &cropped),
            Err(Error::EmptyMask)
        ));
        // exclusive range bounds
        let edge = depth(2, 1, vec![0.1, 80.0]);
        assert!(matches!(
            eval_mask(&edge, &edge, &cfg),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn eigen_crop_on_kitti_size() {
        let (rows, cols) = EvalConfig::outdoor().crop_window(1242, 375);
        assert_eq!((rows.start, rows.end), (124, 342));
        assert_eq!((cols.start, cols.end), (44, 1197));
    }

    #[test]
    fn invalid_crop_rejected() {
        let cfg = EvalConfig {
            crop: Crop::Custom {
                top: 0.5,
                bottom: 0.0,
                left: 0.0,
                right: 0.0,
            },
            ..EvalConfig::indoor()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn median_scaling_removes_global_scale() {
        let gt = depth(3, 1, vec![1.0, 2.0, 3.0]);
        let pred = depth(3, 1, vec![3.0, 6.0, 9.0]);
        let cfg = EvalConfig {
            alignment: Alignment::MedianScaling,
            ..all_pixels()
        };
        let m = evaluate_image(&pred, &gt, &cfg).unwrap();
        assert_eq!(m.delta1, 1.0);
        assert!(m.abs_rel < 1e-15);
    }

    #[test]
    fn dataset_mean_is_per_image() {
        let gt_a = depth(1, 1, vec![1.0]);
        let gt_b = depth(3, 1, vec![1.0, 1.0, 1.0]);
        let pred_a = depth(1, 1, vec![2.0]);
        let rep =
            evaluate_dataset([("a", &pred_a, &gt_a), ("b", &gt_b, &gt_b)], &all_pixels()).unwrap();
        // pooled would give 0.75 and 0.25
        assert_eq!(rep.metrics.delta1, 0.5);
        assert_eq!(rep.metrics.abs_rel, 0.5);
        assert_eq!(rep.metrics.n_pixels, 4);
        assert_eq!(rep.per_image[1].name, "b");
    }

    #[test]
    fn r_squared_cases() {
        let line: Vec<SamplePair> = (0..10)
            .map(|i| SamplePair::new(i as f64, 0.5 * i as f64 + 0.1))
            .collect();
        assert_relative_eq!(
            r_squared_report(&line, &AffineScale::fixed(0.5, 0.1)).unwrap(),
            1.0
        );
        let flat: Vec<SamplePair> = (0..10).map(|i| SamplePair::new(i as f64, 0.3)).collect();
        assert_eq!(r_squared_report(&flat, &AffineScale::fixed(0.0, 0.3)), None);
    }

    #[test]
    fn report_json_is_flat() {
        let gt = depth(1, 1, vec![2.0]);
        let rep = evaluate_dataset([("x", &gt, &gt)], &all_pixels()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["delta1"], 1.0);
        assert_eq!(v["per_image"][0]["name"], "x");
        assert!(v["per_image"][0]["scale"].is_null());
    }

    #[test]
    fn table_columns_align() {
        let m = metrics_from_samples(&[1.0, 2.0], &[1.1, 2.0]).unwrap();
        let t = render_table(&[("ransac", &m), ("fixed_mean", &m)]);
        let widths: Vec<usize> = t.lines().map(str::len).collect();
        assert_eq!(widths.len(), 3);
        assert!(widths.iter().all(|&w| w == widths[0]));
    }

    fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..64).prop_flat_map(|n| {
            (
                prop::collection::vec(0.05f64..100.0, n),
                prop::collection::vec(0.05f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn deltas_nest((p, g) in pair_strategy()) {
            let m = metrics_from_samples(&p, &g).unwrap();
            prop_assert!(m.delta1 <= m.delta2 && m.delta2 <= m.delta3);
            prop_assert!((0.0..=1.0).contains(&m.delta1) && m.delta3 <= 1.0);
        }

        #[test]
        fn order_invariant((p, g) in pair_strategy(), rot in 0usize..64) {
            let k = rot % p.len();
            let (mut p2, mut g2) = (p.clone(), g.clone());
            p2.rotate_left(k);
            g2.rotate_left(k);
            let (a, b) = (metrics_from_samples(&p, &g).unwrap(), metrics_from_samples(&p2, &g2).unwrap());
            prop_assert_eq!(a.delta1, b.delta1);
            prop_assert!((a.abs_rel - b.abs_rel).abs() < 1e-12 * (1.0 + a.abs_rel));
            prop_assert!((a.rmse - b.rmse).abs() < 1e-12 * (1.0 + a.rmse));
            prop_assert!((a.log10 - b.log10).abs() < 1e-12 * (1.0 + a.log10));
        }

        #[test]
        fn rmse_zero_iff_equal((p, g) in pair_strategy()) {
            let m = metrics_from_samples(&p, &g).unwrap();
            prop_assert!(m.rmse >= 0.0);
            prop_assert_eq!(m.rmse == 0.0, p == g);
            prop_assert_eq!(metrics_from_samples(&g, &g).unwrap().rmse, 0.0);
        }
    }
}
