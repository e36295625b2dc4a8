//! Affine rescaling of disparity maps in inverse-depth space.
//!
//! A disparity map `d` that is correct up to an unknown affine transform is
//! related to metric inverse depth `g = 1 / depth` by `g = alpha * d + beta`.
//! Reference points with known metric depth give `(d, g)` pairs; a line is
//! fitted through them (plain least squares or 2-point RANSAC) and inverted
//! per pixel to produce a metric depth map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DepthRange, MapKind, RasterMap};
use crate::refpoint::ReferencePoint;

/// One observation of the affine relation: sampled disparity against metric inverse depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePair {
    pub d: f64,
    pub g: f64,
    pub weight: f64,
}

impl SamplePair {
    pub fn new(d: f64, g: f64) -> Self {
        Self { d, g, weight: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleFlag {
    /// The fitted line had `alpha <= 0`.
    NonPhysicalFit,
    /// `alpha`/`beta` were replaced by the scale-only fallback (`beta = 0`).
    ScaleOnlyFallback,
    /// Parameters are a fixed mean rather than a per-image fit.
    FixedMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineScale {
    pub alpha: f64,
    pub beta: f64,
    pub inlier_count: usize,
    pub total_count: usize,
    /// `None` when the inverse depths of the fitted set have zero variance.
    pub r_squared: Option<f64>,
    pub residual_rms: f64,
    pub flags: Vec<ScaleFlag>,
}

impl AffineScale {
    /// Bare parameters without fit diagnostics.
    pub fn fixed(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            inlier_count: 0,
            total_count: 0,
            r_squared: None,
            residual_rms: 0.0,
            flags: vec![ScaleFlag::FixedMean],
        }
    }

    pub fn predict_inverse_depth(&self, d: f64) -> f64 {
        self.alpha * d + self.beta
    }

    pub fn is_physical(&self) -> bool {
        self.alpha > 0.0 && !self.flags.contains(&ScaleFlag::NonPhysicalFit)
    }

    pub fn has_flag(&self, flag: ScaleFlag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InlierThreshold {
    /// Fixed residual bound in 1/m.
    Absolute(f64),
    /// Residual bound as a fraction of the median inverse depth of the pairs.
    RelativeToMedianG(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub max_iterations: usize,
    pub threshold: InlierThreshold,
    pub seed: u64,
    pub refit_on_inliers: bool,
    /// Replace a fit with `alpha <= 0` by the scale-only fallback.
    pub fallback_on_nonphysical: bool,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            threshold: InlierThreshold::RelativeToMedianG(0.05),
            seed: 0,
            refit_on_inliers: true,
            fallback_on_nonphysical: true,
        }
    }
}

impl RansacConfig {
    pub const MIN_SAMPLE: usize = 2;

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        let t = match self.threshold {
            InlierThreshold::Absolute(t) | InlierThreshold::RelativeToMedianG(t) => t,
        };
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "inlier threshold must be > 0, got {t}"
            )));
        }
        Ok(())
    }
}

/// Samples the disparity map at every reference point and pairs it with the point's inverse depth.
///
/// Points whose bilinear sample is invalid are dropped.
pub fn build_pairs(disparity: &RasterMap, refs: &[ReferencePoint]) -> Result<Vec<SamplePair>> {
    if disparity.kind() != MapKind::AffineDisparity {
        return Err(Error::InvalidInput(format!(
            "expected an affine disparity map, got {:?}",
            disparity.kind()
        )));
    }
    let mut pairs = Vec::with_capacity(refs.len());
    for r in refs {
        if let Some(d) = disparity.bilinear_sample(r.u, r.v)? {
            pairs.push(SamplePair {
                d,
                g: r.inverse_depth(),
                weight: r.weight,
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    Ok(pairs)
}

struct LineFit {
    alpha: f64,
    beta: f64,
}

fn weighted_line<'a>(pairs: impl Iterator<Item = &'a SamplePair> + Clone) -> Result<LineFit> {
    let (mut sw, mut sd, mut sg, mut n) = (0.0, 0.0, 0.0, 0usize);
    let mut first_d = None;
    let mut distinct = false;
    for p in pairs.clone() {
        sw += p.weight;
        sd += p.weight * p.d;
        sg += p.weight * p.g;
        n += 1;
        match first_d {
            None => first_d = Some(p.d),
            Some(d0) => distinct |= p.d != d0,
        }
    }
    if n < 2 {
        return Err(Error::DegenerateFit(format!(
            "{n} pair(s), at least 2 required"
        )));
    }
    if !distinct {
        return Err(Error::DegenerateFit("all disparities are identical".into()));
    }
    if !(sw > 0.0) {
        return Err(Error::DegenerateFit("total weight is zero".into()));
    }
    let (md, mg) = (sd / sw, sg / sw);
    let (mut sdd, mut sdg) = (0.0, 0.0);
    for p in pairs {
        let dd = p.d - md;
        sdd += p.weight * dd * dd;
        sdg += p.weight * dd * (p.g - mg);
    }
    if !(sdd > 0.0) {
        return Err(Error::DegenerateFit(
            "weighted disparity variance is zero".into(),
        ));
    }
    let alpha = sdg / sdd;
    Ok(LineFit {
        alpha,
        beta: mg - alpha * md,
    })
}

/// Weighted coefficient of determination and residual RMS of `g ~ alpha d + beta`.
fn fit_stats<'a>(
    pairs: impl Iterator<Item = &'a SamplePair> + Clone,
    alpha: f64,
    beta: f64,
) -> (Option<f64>, f64) {
    let (mut sw, mut sg) = (0.0, 0.0);
    for p in pairs.clone() {
        sw += p.weight;
        sg += p.weight * p.g;
    }
    if !(sw > 0.0) {
        return (None, 0.0);
    }
    let mg = sg / sw;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for p in pairs {
        let r = p.g - (alpha * p.d + beta);
        ss_res += p.weight * r * r;
        ss_tot += p.weight * (p.g - mg) * (p.g - mg);
    }
    // constant g up to rounding of the mean counts as zero variance
    let r2 = (ss_tot > sw * (1e-12 * mg).powi(2)).then(|| 1.0 - ss_res / ss_tot);
    (r2, (ss_res / sw).sqrt())
}

/// `1 - SS_res / SS_tot` of the pairs around the given line; `None` when `SS_tot = 0`.
pub fn r_squared(pairs: &[SamplePair], alpha: f64, beta: f64) -> Option<f64> {
    fit_stats(pairs.iter(), alpha, beta).0
}

fn weighted_median(mut items: Vec<(f64, f64)>) -> Option<f64> {
    items.retain(|(v, w)| v.is_finite() && *w > 0.0);
    if items.is_empty() {
        return None;
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = items.iter().map(|(_, w)| w).sum::<f64>() / 2.0;
    let mut acc = 0.0;
    for (v, w) in &items {
        acc += w;
        if acc >= half {
            return Some(*v);
        }
    }
    items.last().map(|(v, _)| *v)
}

/// Scale-only fit: `beta = 0`, `alpha` the weighted median of `g / d` over pairs with `d > 0`.
pub fn fit_scale_only(pairs: &[SamplePair]) -> Option<f64> {
    weighted_median(
        pairs
            .iter()
            .filter(|p| p.d > 0.0)
            .map(|p| (p.g / p.d, p.weight))
            .collect(),
    )
}

fn finish(
    used: &[SamplePair],
    line: LineFit,
    inlier_count: usize,
    total_count: usize,
    fallback: bool,
) -> AffineScale {
    let mut flags = Vec::new();
    let (mut alpha, mut beta) = (line.alpha, line.beta);
    if !(alpha > 0.0) {
        flags.push(ScaleFlag::NonPhysicalFit);
        if fallback {
            if let Some(a) = fit_scale_only(used).filter(|a| *a > 0.0) {
                alpha = a;
                beta = 0.0;
                flags.push(ScaleFlag::ScaleOnlyFallback);
            }
        }
    }
    let (r_squared, residual_rms) = fit_stats(used.iter(), alpha, beta);
    AffineScale {
        alpha,
        beta,
        inlier_count,
        total_count,
        r_squared,
        residual_rms,
        flags,
    }
}

/// Closed-form weighted least squares of `g` on `d` over all pairs.
///
/// A fit with `alpha <= 0` is returned as-is, carrying [`ScaleFlag::NonPhysicalFit`].
pub fn fit_affine_lsq(pairs: &[SamplePair]) -> Result<AffineScale> {
    let line = weighted_line(pairs.iter())?;
    Ok(finish(pairs, line, pairs.len(), pairs.len(), false))
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn inlier_threshold(pairs: &[SamplePair], mode: InlierThreshold) -> f64 {
    match mode {
        InlierThreshold::Absolute(t) => t,
        InlierThreshold::RelativeToMedianG(f) => f * median(pairs.iter().map(|p| p.g)),
    }
}

/// 2-point RANSAC line fit.
///
/// Each iteration draws two distinct pairs, fits the exact line through them
/// and counts pairs with `|g - (alpha d + beta)| <= tau`. The hypothesis with
/// the largest consensus wins; ties go to the lower inlier residual RMS, then
/// to the earlier iteration. The result is deterministic for a given seed.
pub fn fit_affine_ransac(pairs: &[SamplePair], cfg: &RansacConfig) -> Result<AffineScale> {
    cfg.validate()?;
    let n = pairs.len();
    if n < RansacConfig::MIN_SAMPLE {
        return Err(Error::DegenerateFit(format!(
            "{n} pair(s), at least 2 required"
        )));
    }
    if pairs.iter().all(|p| p.d == pairs[0].d) {
        return Err(Error::DegenerateFit("all disparities are identical".into()));
    }
    let tau = inlier_threshold(pairs, cfg.threshold);
    if !(tau > 0.0) {
        return Err(Error::DegenerateFit(format!(
            "inlier threshold {tau} is not positive"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // (count, inlier rms, alpha, beta)
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for _ in 0..cfg.max_iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (&pairs[i], &pairs[j]);
        if a.d == b.d {
            continue;
        }
        let alpha = (b.g - a.g) / (b.d - a.d);
        let beta = a.g - alpha * a.d;
        let (mut count, mut ss) = (0usize, 0.0);
        for p in pairs {
            let r = p.g - (alpha * p.d + beta);
            if r.abs() <= tau {
                count += 1;
                ss += r * r;
            }
        }
        let rms = if count > 0 {
            (ss / count as f64).sqrt()
        } else {
            f64::INFINITY
        };
        let better = match best {
            None => true,
            Some((bc, brms, _, _)) => count > bc || (count == bc && rms < brms),
        };
        if better {
            best = Some((count, rms, alpha, beta));
        }
    }

    let (count, _, alpha, beta) =
        best.ok_or_else(|| Error::DegenerateFit("every RANSAC draw was degenerate".into()))?;
    if count < RansacConfig::MIN_SAMPLE {
        return Err(Error::AllOutliers(count));
    }
    let inliers: Vec<SamplePair> = pairs
        .iter()
        .filter(|p| (p.g - (alpha * p.d + beta)).abs() <= tau)
        .copied()
        .collect();
    let line = if cfg.refit_on_inliers {
        weighted_line(inliers.iter()).unwrap_or(LineFit { alpha, beta })
    } else {
        LineFit { alpha, beta }
    };
    Ok(finish(
        &inliers,
        line,
        count,
        n,
        cfg.fallback_on_nonphysical,
    ))
}

/// Inverts `g = alpha d + beta` per pixel into a metric depth map, clamped to `cap`.
///
/// Inverse depths at or below `1 / cap.max_m` (including negative ones) map
/// to `cap.max_m`; at or above `1 / cap.min_m` they map to `cap.min_m`.
pub fn apply_scale(disparity: &RasterMap, scale: &AffineScale, cap: DepthRange) -> RasterMap {
    let (g_far, g_near) = (1.0 / cap.max_m, 1.0 / cap.min_m);
    disparity
        .map_valid(MapKind::MetricDepth, |d| {
            let g = scale.alpha * d + scale.beta;
            Some(if g <= g_far {
                cap.max_m
            } else if g >= g_near {
                cap.min_m
            } else {
                1.0 / g
            })
        })
        .expect("capped depths are positive")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleConfig {
    pub ransac: RansacConfig,
    /// `false` replaces RANSAC by a least-squares fit on every pair.
    pub use_ransac: bool,
    pub depth_cap: DepthRange,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self {
            ransac: RansacConfig::default(),
            use_ransac: true,
            depth_cap: DepthRange::OUTDOOR,
        }
    }
}

/// Estimates the scale from the pairs, honouring `cfg.use_ransac`.
pub fn fit_pairs(pairs: &[SamplePair], cfg: &RescaleConfig) -> Result<AffineScale> {
    if cfg.use_ransac {
        fit_affine_ransac(pairs, &cfg.ransac)
    } else {
        let fit = fit_affine_lsq(pairs)?;
        if fit.alpha > 0.0 || !cfg.ransac.fallback_on_nonphysical {
            return Ok(fit);
        }
        let line = weighted_line(pairs.iter())?;
        Ok(finish(pairs, line, pairs.len(), pairs.len(), true))
    }
}

/// Pairs, fits and applies: the full per-image rescaling.
pub fn rescale_image(
    disparity: &RasterMap,
    refs: &[ReferencePoint],
    cfg: &RescaleConfig,
) -> Result<(RasterMap, AffineScale)> {
    let pairs = build_pairs(disparity, refs)?;
    let scale = fit_pairs(&pairs, cfg)?;
    Ok((apply_scale(disparity, &scale, cfg.depth_cap), scale))
}

/// Arithmetic mean of `alpha` and `beta` over fits with `alpha > 0`.
pub fn mean_scale(scales: &[AffineScale]) -> Result<AffineScale> {
    let usable: Vec<&AffineScale> = scales
        .iter()
        .filter(|s| s.alpha > 0.0 && s.alpha.is_finite() && s.beta.is_finite())
        .collect();
    if usable.is_empty() {
        return Err(Error::DegenerateFit("no valid scale to average".into()));
    }
    let n = usable.len() as f64;
    let mut out = AffineScale::fixed(
        usable.iter().map(|s| s.alpha).sum::<f64>() / n,
        usable.iter().map(|s| s.beta).sum::<f64>() / n,
    );
    out.inlier_count = usable.iter().map(|s| s.inlier_count).sum();
    out.total_count = usable.iter().map(|s| s.total_count).sum();
    out.residual_rms = usable.iter().map(|s| s.residual_rms).sum::<f64>() / n;
    Ok(out)
}

/// Applies one fixed scale regardless of the image content.
pub fn fixed_rescale(disparity: &RasterMap, fixed: &AffineScale, cap: DepthRange) -> RasterMap {
    apply_scale(disparity, fixed, cap)
}
