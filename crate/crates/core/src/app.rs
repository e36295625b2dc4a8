//! Batch pipelines over a dataset manifest, one function per subcommand.
//!
//! Records are processed on a worker pool and collected in manifest order, so
//! outputs do not depend on the number of threads. A failing record is
//! reported and skipped; it never aborts the rest of the run.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{error, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::io::{self, DatasetManifest, ManifestRecord};
use crate::lidar::{simulate_beams, BeamConfig};
use crate::metrics::{evaluate_image, render_table, DepthMetrics, EvalReport, ImageEval, Profile};
use crate::raster::{DepthRange, MapKind, RasterMap};
use crate::refpoint::ReferencePoint;
use crate::rescale::{
    apply_scale, build_pairs, fit_pairs, mean_scale, AffineScale, RansacConfig, RescaleConfig,
};
use crate::sfm::{
    detect_and_match, gate_pair, sfm_refpoints, triangulate, GateConfig, MatchConfig,
    TriangulationConfig,
};
use crate::stereo::{compute_disparity, stereo_refpoints, SgmConfig, StereoRig};
use crate::synth;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    /// Usage or configuration error; nothing was processed.
    ConfigError = 1,
    /// Some records failed.
    PartialFailure = 2,
    /// Every record failed.
    TotalFailure = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn from_counts(ok: usize, total: usize) -> Self {
        if ok == total {
            ExitStatus::Success
        } else if ok == 0 {
            ExitStatus::TotalFailure
        } else {
            ExitStatus::PartialFailure
        }
    }
}

/// Source of metric reference points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provider {
    /// Simulated LiDAR with the given number of beams.
    Lidar(usize),
    Stereo,
    Sfm,
    /// Reference points read from the record's `refpoints` file.
    External,
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provider::Lidar(b) => write!(f, "lidar:{b}"),
            Provider::Stereo => f.write_str("stereo"),
            Provider::Sfm => f.write_str("sfm"),
            Provider::External => f.write_str("external"),
        }
    }
}

impl FromStr for Provider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stereo" => Ok(Provider::Stereo),
            "sfm" => Ok(Provider::Sfm),
            "external" => Ok(Provider::External),
            _ => {
                let beams = s
                    .strip_prefix("lidar:")
                    .and_then(|b| b.parse::<usize>().ok())
                    .filter(|&b| b > 0)
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "unknown provider {s:?}; use lidar:B, stereo, sfm or external"
                        ))
                    })?;
                Ok(Provider::Lidar(beams))
            }
        }
    }
}

/// Everything a subcommand needs besides the manifest contents.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub provider: Provider,
    pub out_dir: PathBuf,
    /// Base seed; each record derives its own from this and its position.
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub ransac: RansacConfig,
    pub use_ransac: bool,
    /// Skip fitting and apply these parameters to every image.
    pub fixed_scale: Option<(f64, f64)>,
    /// Overrides the manifest's profile.
    pub profile: Option<Profile>,
    /// Also write 16-bit PNG depth next to the PFM.
    pub write_png: bool,
    pub beam_max_points_per_row: Option<usize>,
    pub sgm: SgmConfig,
    /// Keep every n-th valid stereo pixel as a reference point.
    pub stereo_stride: usize,
    pub gate: GateConfig,
    pub triangulation: TriangulationConfig,
    pub matcher: MatchConfig,
}

impl RunConfig {
    pub fn new(
        manifest: impl Into<PathBuf>,
        provider: Provider,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            manifest: manifest.into(),
            provider,
            out_dir: out_dir.into(),
            seed: 0,
            jobs: 0,
            ransac: RansacConfig::default(),
            use_ransac: true,
            fixed_scale: None,
            profile: None,
            write_png: false,
            beam_max_points_per_row: None,
            sgm: SgmConfig::default(),
            stereo_stride: 4,
            gate: GateConfig::default(),
            triangulation: TriangulationConfig::default(),
            matcher: MatchConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ransac.validate()?;
        self.sgm.validate()?;
        if self.stereo_stride == 0 {
            return Err(Error::InvalidConfig("stereo stride must be >= 1".into()));
        }
        if let Some((a, b)) = self.fixed_scale {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidConfig("fixed scale must be finite".into()));
            }
        }
        Ok(())
    }

    fn record_seed(&self, index: usize) -> u64 {
        self.seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

/// Fields a record must carry for a run.
#[derive(Debug, Clone, Copy, Default)]
struct Needs {
    disparity: bool,
    gt: bool,
    provider: Option<Provider>,
}

fn missing_fields(rec: &ManifestRecord, needs: Needs) -> Vec<&'static str> {
    let mut miss = Vec::new();
    let mut need = |ok: bool, name: &'static str| {
        if !ok {
            miss.push(name);
        }
    };
    need(!needs.disparity || rec.disparity.is_some(), "disparity");
    need(!needs.gt || rec.gt_depth.is_some(), "gt_depth");
    match needs.provider {
        None => {}
        Some(Provider::Lidar(_)) => need(rec.gt_depth.is_some(), "gt_depth"),
        Some(Provider::Stereo) => {
            need(rec.left_image.is_some(), "left_image");
            need(rec.right_image.is_some(), "right_image");
            need(rec.intrinsics.is_some(), "intrinsics");
            need(rec.baseline_m.is_some(), "baseline_m");
        }
        Some(Provider::Sfm) => {
            need(rec.pose_path.is_some(), "pose_path");
            need(rec.intrinsics.is_some(), "intrinsics");
            need(
                rec.matches.is_some() || (rec.left_image.is_some() && rec.prev_image.is_some()),
                "matches (or left_image and prev_image)",
            );
        }
        Some(Provider::External) => need(rec.refpoints.is_some(), "refpoints"),
    }
    miss.dedup();
    miss
}

fn load_checked(
    cfg: &RunConfig,
    needs: impl Fn(&ManifestRecord) -> Needs,
) -> Result<DatasetManifest> {
    cfg.validate()?;
    let manifest = io::load_manifest(&cfg.manifest)?;
    let problems: Vec<String> = manifest
        .records
        .iter()
        .filter_map(|r| {
            let miss = missing_fields(r, needs(r));
            (!miss.is_empty()).then(|| format!("record {}: missing {}", r.name, miss.join(", ")))
        })
        .collect();
    if !problems.is_empty() {
        return Err(Error::Manifest(problems.join("; ")));
    }
    manifest.eval_config(cfg.profile)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::Io {
        path: cfg.out_dir.clone(),
        source: e,
    })?;
    Ok(manifest)
}

fn depth_cap(manifest: &DatasetManifest, cfg: &RunConfig) -> DepthRange {
    let profile = cfg.profile.unwrap_or(manifest.profile);
    match profile {
        Profile::Custom => manifest
            .custom_eval
            .map_or(DepthRange::OUTDOOR, |e| e.depth_range),
        p => p.depth_cap(),
    }
}

fn intrinsics(rec: &ManifestRecord) -> Result<CameraIntrinsics> {
    rec.intrinsics
        .ok_or_else(|| Error::Manifest(format!("record {}: missing intrinsics", rec.name)))
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Manifest(format!("missing {what}")))
}

/// Reference points for one record from the configured provider.
pub fn provider_refpoints(
    rec: &ManifestRecord,
    provider: Provider,
    cfg: &RunConfig,
    range: DepthRange,
    seed: u64,
) -> Result<Vec<ReferencePoint>> {
    match provider {
        Provider::Lidar(n_beams) => {
            let gt = io::load_depth(required(&rec.gt_depth, "gt_depth")?)?;
            let beams = BeamConfig {
                n_beams,
                max_points_per_row: cfg.beam_max_points_per_row,
                depth_range: range,
                seed,
            };
            simulate_beams(&gt, &beams)
        }
        Provider::Stereo => {
            let disp = stereo_disparity(rec, cfg)?;
            let rig = StereoRig::new(intrinsics(rec)?, rec.baseline_m.unwrap_or(0.0))?;
            stereo_refpoints(&disp, &rig, cfg.stereo_stride, cfg.sgm.min_disparity_px)
        }
        Provider::Sfm => {
            let k = intrinsics(rec)?;
            let poses = io::load_poses(required(&rec.pose_path, "pose_path")?)?;
            let [a, b] = rec.pose_frames;
            let rel = io::relative_pose(&poses, a, b)?;
            if !gate_pair(&rel, &cfg.gate) {
                return Err(Error::InvalidInput(format!(
                    "frame pair ({a}, {b}) rejected by the pose gate: {:.3} m, {:.2} deg",
                    rel.translation_norm_m(),
                    rel.rotation_angle_deg()
                )));
            }
            let matches = match &rec.matches {
                Some(p) => io::load_matches(p)?,
                None => {
                    let src = io::load_gray(required(&rec.prev_image, "prev_image")?)?;
                    let dst = io::load_gray(required(&rec.left_image, "left_image")?)?;
                    detect_and_match(&src, &dst, &cfg.matcher)
                }
            };
            let pts = triangulate(&matches, &k, &rel, &cfg.triangulation)?;
            let xyz: Vec<_> = pts.iter().map(|p| p.point).collect();
            sfm_refpoints(&xyz, &k)
        }
        Provider::External => io::load_refpoints(required(&rec.refpoints, "refpoints")?),
    }
}

fn stereo_disparity(rec: &ManifestRecord, cfg: &RunConfig) -> Result<RasterMap> {
    let left = io::load_gray(required(&rec.left_image, "left_image")?)?;
    let right = io::load_gray(required(&rec.right_image, "right_image")?)?;
    compute_disparity(&left, &right, &cfg.sgm)
}

fn rescale_config(cfg: &RunConfig, cap: DepthRange, seed: u64) -> RescaleConfig {
    RescaleConfig {
        ransac: RansacConfig { seed, ..cfg.ransac },
        use_ransac: cfg.use_ransac,
        depth_cap: cap,
    }
}

/// Disparity, reference points and fit for one record, without writing anything.
fn rescale_record(
    rec: &ManifestRecord,
    cfg: &RunConfig,
    cap: DepthRange,
    seed: u64,
) -> Result<(RasterMap, AffineScale)> {
    let disp = io::load_float_map(
        required(&rec.disparity, "disparity")?,
        MapKind::AffineDisparity,
    )?;
    if let Some((a, b)) = cfg.fixed_scale {
        let s = AffineScale::fixed(a, b);
        return Ok((apply_scale(&disp, &s, cap), s));
    }
    let refs = provider_refpoints(rec, cfg.provider, cfg, cap, seed)?;
    let pairs = build_pairs(&disp, &refs)?;
    let scale = fit_pairs(&pairs, &rescale_config(cfg, cap, seed))?;
    if !scale.is_physical() {
        warn!("{}: non-physical fit (alpha = {})", rec.name, scale.alpha);
    }
    Ok((apply_scale(&disp, &scale, cap), scale))
}

fn run_records<T: Send>(
    cfg: &RunConfig,
    records: &[ManifestRecord],
    f: impl Fn(usize, &ManifestRecord) -> Result<T> + Sync,
) -> Result<Vec<Result<T>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let out = pool.install(|| {
        records
            .par_iter()
            .enumerate()
            .map(|(i, r)| {
                let res = f(i, r);
                match &res {
                    Ok(_) => info!("{}: ok", r.name),
                    Err(e) => error!("{}: {e}", r.name),
                }
                res
            })
            .collect()
    });
    Ok(out)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Serialize)]
struct RecordSummary<'a, T: Serialize> {
    name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'a str,
    provider: String,
    succeeded: usize,
    failed: usize,
    records: Vec<RecordSummary<'a, T>>,
}

/// Writes `<command>_summary.json` and returns the exit status.
fn finish<T: Serialize>(
    cfg: &RunConfig,
    command: &str,
    records: &[ManifestRecord],
    results: Vec<Result<T>>,
) -> Result<ExitStatus> {
    let ok = results.iter().filter(|r| r.is_ok()).count();
    let summary = Summary {
        command,
        provider: cfg.provider.to_string(),
        succeeded: ok,
        failed: results.len() - ok,
        records: records
            .iter()
            .zip(results)
            .map(|(rec, r)| match r {
                Ok(v) => RecordSummary {
                    name: &rec.name,
                    result: Some(v),
                    error: None,
                },
                Err(e) => RecordSummary {
                    name: &rec.name,
                    result: None,
                    error: Some(strip_dirs(&e.to_string(), cfg)),
                },
            })
            .collect(),
    };
    write_json(
        &cfg.out_dir.join(format!("{command}_summary.json")),
        &summary,
    )?;
    Ok(ExitStatus::from_counts(ok, records.len()))
}

/// Keeps summaries free of machine-specific directories.
fn strip_dirs(msg: &str, cfg: &RunConfig) -> String {
    let mut s = msg.to_string();
    for dir in [cfg.manifest.parent(), Some(cfg.out_dir.as_path())]
        .into_iter()
        .flatten()
    {
        let d = dir.display().to_string();
        if !d.is_empty() {
            s = s.replace(&format!("{d}/"), "");
        }
    }
    s
}

fn status_or_config_error(r: Result<ExitStatus>) -> ExitStatus {
    r.unwrap_or_else(|e| {
        error!("{e}");
        eprintln!("error: {e}");
        ExitStatus::ConfigError
    })
}

/// Writes metric depth (PFM, optionally PNG16) and the fitted scale per record.
pub fn cmd_rescale(cfg: &RunConfig) -> ExitStatus {
    status_or_config_error(rescale_inner(cfg))
}

fn rescale_inner(cfg: &RunConfig) -> Result<ExitStatus> {
    let provider = cfg.fixed_scale.is_none().then_some(cfg.provider);
    let manifest = load_checked(cfg, |_| Needs {
        disparity: true,
        provider,
        ..Default::default()
    })?;
    let cap = depth_cap(&manifest, cfg);
    let results = run_records(cfg, &manifest.records, |i, rec| {
        let (depth, scale) = rescale_record(rec, cfg, cap, cfg.record_seed(i))?;
        io::save_pfm(&depth, &cfg.out_dir.join(format!("{}_depth.pfm", rec.name)))?;
        if cfg.write_png {
            io::save_depth_png16(
                &depth,
                &cfg.out_dir.join(format!("{}_depth.png", rec.name)),
                256.0,
            )?;
        }
        write_json(
            &cfg.out_dir.join(format!("{}_scale.json", rec.name)),
            &scale,
        )?;
        Ok(scale)
    })?;
    finish(cfg, "rescale", &manifest.records, results)
}

/// Evaluates `pred_depth` where a record has one, otherwise the rescaled disparity.
pub fn cmd_eval(cfg: &RunConfig) -> ExitStatus {
    status_or_config_error(eval_inner(cfg))
}

fn eval_inner(cfg: &RunConfig) -> Result<ExitStatus> {
    let fixed = cfg.fixed_scale.is_some();
    let manifest = load_checked(cfg, |r| {
        let own = r.pred_depth.is_some();
        Needs {
            disparity: !own,
            gt: true,
            provider: (!own && !fixed).then_some(cfg.provider),
        }
    })?;
    let eval = manifest.eval_config(cfg.profile)?;
    let cap = depth_cap(&manifest, cfg);
    let results = run_records(cfg, &manifest.records, |i, rec| {
        let gt = io::load_depth(required(&rec.gt_depth, "gt_depth")?)?;
        let (pred, scale) = match &rec.pred_depth {
            Some(p) => (io::load_depth(p)?, None),
            None => {
                let (d, s) = rescale_record(rec, cfg, cap, cfg.record_seed(i))?;
                (d, Some(s))
            }
        };
        Ok(ImageEval {
            name: rec.name.clone(),
            metrics: evaluate_image(&pred, &gt, &eval)?,
            scale,
        })
    })?;
    let evals: Vec<ImageEval> = results
        .iter()
        .filter_map(|r| r.as_ref().ok().cloned())
        .collect();
    if let Ok(report) = EvalReport::from_images(evals) {
        write_json(&cfg.out_dir.join("eval_report.json"), &report)?;
        let table = render_table(&[(&cfg.provider.to_string(), &report.metrics)]);
        write_text(&cfg.out_dir.join("eval_table.txt"), &table)?;
        print!("{table}");
    }
    let results: Vec<Result<DepthMetrics>> =
        results.into_iter().map(|r| r.map(|e| e.metrics)).collect();
    finish(cfg, "eval", &manifest.records, results)
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub report: EvalReport,
}

/// Compares per-image RANSAC, per-image least squares and one fixed mean scale.
pub fn cmd_ablate(cfg: &RunConfig) -> ExitStatus {
    status_or_config_error(ablate_inner(cfg))
}

struct AblationInput {
    disp: RasterMap,
    gt: RasterMap,
    ransac: AffineScale,
    lsq: AffineScale,
}

fn ablate_inner(cfg: &RunConfig) -> Result<ExitStatus> {
    let manifest = load_checked(cfg, |_| Needs {
        disparity: true,
        gt: true,
        provider: Some(cfg.provider),
    })?;
    let eval = manifest.eval_config(cfg.profile)?;
    let cap = depth_cap(&manifest, cfg);
    let inputs = run_records(cfg, &manifest.records, |i, rec| {
        let seed = cfg.record_seed(i);
        let disp = io::load_float_map(
            required(&rec.disparity, "disparity")?,
            MapKind::AffineDisparity,
        )?;
        let gt = io::load_depth(required(&rec.gt_depth, "gt_depth")?)?;
        let refs = provider_refpoints(rec, cfg.provider, cfg, cap, seed)?;
        let pairs = build_pairs(&disp, &refs)?;
        let rc = rescale_config(cfg, cap, seed);
        let ransac = fit_pairs(
            &pairs,
            &RescaleConfig {
                use_ransac: true,
                ..rc
            },
        )?;
        let lsq = fit_pairs(
            &pairs,
            &RescaleConfig {
                use_ransac: false,
                ..rc
            },
        )?;
        Ok(AblationInput {
            disp,
            gt,
            ransac,
            lsq,
        })
    })?;

    let ok: Vec<(&ManifestRecord, &AblationInput)> = manifest
        .records
        .iter()
        .zip(&inputs)
        .filter_map(|(r, i)| i.as_ref().ok().map(|i| (r, i)))
        .collect();
    let mut rows = Vec::new();
    if !ok.is_empty() {
        let fixed = match cfg.fixed_scale {
            Some((a, b)) => AffineScale::fixed(a, b),
            None => mean_scale(&ok.iter().map(|(_, i)| i.ransac.clone()).collect::<Vec<_>>())?,
        };
        let variants: [(&str, &dyn Fn(&AblationInput) -> AffineScale); 3] = [
            ("ransac", &|i| i.ransac.clone()),
            ("least_squares", &|i| i.lsq.clone()),
            ("fixed_mean", &|_| fixed.clone()),
        ];
        for (name, pick) in variants {
            let per_image = ok
                .iter()
                .map(|(rec, inp)| {
                    let scale = pick(inp);
                    let depth = apply_scale(&inp.disp, &scale, cap);
                    Ok(ImageEval {
                        name: rec.name.clone(),
                        metrics: evaluate_image(&depth, &inp.gt, &eval)?,
                        scale: Some(scale),
                    })
                })
                .collect::<Result<Vec<_>>>();
            match per_image.and_then(EvalReport::from_images) {
                Ok(report) => rows.push(AblationRow {
                    variant: name.to_string(),
                    report,
                }),
                Err(e) => warn!("variant {name}: {e}"),
            }
        }
        write_json(&cfg.out_dir.join("ablation.json"), &rows)?;
        let table_rows: Vec<(&str, &DepthMetrics)> = rows
            .iter()
            .map(|r| (r.variant.as_str(), &r.report.metrics))
            .collect();
        let table = render_table(&table_rows);
        write_text(&cfg.out_dir.join("ablation_table.txt"), &table)?;
        print!("{table}");
    }
    let results: Vec<Result<()>> = inputs.into_iter().map(|r| r.map(|_| ())).collect();
    finish(cfg, "ablate", &manifest.records, results)
}

#[derive(Serialize)]
struct ProviderResult {
    n_points: usize,
}

fn provider_only(cfg: &RunConfig, command: &str, provider: Provider) -> Result<ExitStatus> {
    let manifest = load_checked(cfg, |_| Needs {
        provider: Some(provider),
        ..Default::default()
    })?;
    let cap = depth_cap(&manifest, cfg);
    let results = run_records(cfg, &manifest.records, |i, rec| {
        if provider == Provider::Stereo {
            let disp = stereo_disparity(rec, cfg)?;
            io::save_pfm(
                &disp,
                &cfg.out_dir.join(format!("{}_disparity.pfm", rec.name)),
            )?;
        }
        let refs = provider_refpoints(rec, provider, cfg, cap, cfg.record_seed(i))?;
        io::save_refpoints(
            &refs,
            &cfg.out_dir.join(format!("{}_refpoints.txt", rec.name)),
        )?;
        Ok(ProviderResult {
            n_points: refs.len(),
        })
    })?;
    finish(cfg, command, &manifest.records, results)
}

/// Simulated LiDAR reference points per record.
pub fn cmd_simulate(cfg: &RunConfig) -> ExitStatus {
    let provider = match cfg.provider {
        Provider::Lidar(_) => cfg.provider,
        _ => Provider::Lidar(16),
    };
    status_or_config_error(provider_only(cfg, "simulate", provider))
}

/// Stereo disparity and stereo reference points per record.
pub fn cmd_sgm(cfg: &RunConfig) -> ExitStatus {
    status_or_config_error(provider_only(cfg, "sgm", Provider::Stereo))
}

/// Triangulated reference points per record.
pub fn cmd_triangulate(cfg: &RunConfig) -> ExitStatus {
    status_or_config_error(provider_only(cfg, "triangulate", Provider::Sfm))
}

/// Parameters of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub out_dir: PathBuf,
    pub n_images: usize,
    pub width: usize,
    pub height: usize,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Relative Gaussian noise on the disparity.
    pub disparity_noise: f64,
    pub baseline_m: f64,
    /// Outlier fraction of the external reference points.
    pub outlier_fraction: f64,
    pub n_matches: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            n_images: 3,
            width: 160,
            height: 64,
            alpha_range: (0.5, 5.0),
            beta_range: (0.0, 0.2),
            disparity_noise: 0.0,
            baseline_m: 0.54,
            outlier_fraction: 0.2,
            n_matches: 400,
            seed: 0,
        }
    }
}

#[derive(Serialize)]
struct SynthTruth {
    name: String,
    alpha0: f64,
    beta0: f64,
}

/// Generates a complete dataset (ground truth, disparity, stereo pair, poses,
/// matches, external reference points) plus its `manifest.toml`.
pub fn cmd_synth(cfg: &SynthConfig) -> ExitStatus {
    status_or_config_error(synth_inner(cfg).map(|_| ExitStatus::Success))
}

pub fn synth_inner(cfg: &SynthConfig) -> Result<PathBuf> {
    if cfg.n_images == 0 {
        return Err(Error::InvalidConfig("n_images must be >= 1".into()));
    }
    let (a0, a1) = cfg.alpha_range;
    let (b0, b1) = cfg.beta_range;
    if !(a0 > 0.0 && a1 >= a0 && b1 >= b0) {
        return Err(Error::InvalidConfig(
            "need 0 < alpha_min <= alpha_max and beta_min <= beta_max".into(),
        ));
    }
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let k = synth::scene_intrinsics(cfg.width, cfg.height);
    io::save_intrinsics(&k, &dir.join("intrinsics.txt"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = rand_distr::Normal::new(0.0, cfg.disparity_noise.max(0.0))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut manifest = String::from(
        "# generated by `depth-rescale synth`\nprofile = \"outdoor\"\nintrinsics = \"intrinsics.txt\"\n",
    );
    manifest.push_str(&format!("baseline_m = {}\n", cfg.baseline_m));
    let mut truth = Vec::new();
    for i in 0..cfg.n_images {
        let name = format!("scene_{i:03}");
        let scene_seed: u64 = rng.random();
        let scene = synth::road_scene(&synth::SceneConfig {
            width: cfg.width,
            height: cfg.height,
            seed: scene_seed,
            ..Default::default()
        })?;
        let alpha0 = if a1 > a0 {
            rng.random_range(a0..a1)
        } else {
            a0
        };
        let beta0 = if b1 > b0 {
            rng.random_range(b0..b1)
        } else {
            b0
        };
        let mut disp = synth::affine_disparity(&scene.depth, alpha0, beta0)?;
        if cfg.disparity_noise > 0.0 {
            disp = disp.map_valid(MapKind::AffineDisparity, |d| {
                Some(d * (1.0 + rand_distr::Distribution::sample(&noise, &mut rng)))
            })?;
        }
        let (left, right, _) = synth::render_stereo(&scene.depth, &k, cfg.baseline_m, scene_seed)?;
        // camera drives forward from frame 0 (source) to frame 1 (target)
        let rel = synth::forward_motion(2.0, 0.3, 1.0);
        let target_to_source = rel.inverse();
        let matches: Vec<_> = synth::synthesize_matches(
            &scene.depth,
            &k,
            &target_to_source,
            &synth::MatchSynthesis {
                n_points: cfg.n_matches,
                seed: scene_seed ^ 1,
                ..Default::default()
            },
        )
        .into_iter()
        .map(|m| crate::sfm::Correspondence::new(m.u2, m.v2, m.u1, m.v1))
        .collect();
        let lidar = simulate_beams(&scene.depth, &BeamConfig::new(16.min(cfg.height)))?;
        let (refs, _) = synth::corrupt_refpoints(
            &lidar,
            &synth::Corruption {
                outlier_fraction: cfg.outlier_fraction,
                outlier_depth: synth::OutlierDepth::LogUniform,
                g_noise: 0.01,
                range: DepthRange::OUTDOOR,
            },
            &mut rng,
        );

        io::save_depth_png16(&scene.depth, &dir.join(format!("{name}_gt.png")), 256.0)?;
        io::save_pfm(&disp, &dir.join(format!("{name}_disp.pfm")))?;
        let img_err = |path: PathBuf| move |source| Error::Image { path, source };
        let lp = dir.join(format!("{name}_left.png"));
        left.save(&lp).map_err(img_err(lp.clone()))?;
        let rp = dir.join(format!("{name}_right.png"));
        right.save(&rp).map_err(img_err(rp.clone()))?;
        io::save_poses(
            &[crate::camera::RigidPose::identity(), rel.inverse()],
            &dir.join(format!("{name}_poses.txt")),
        )?;
        io::save_matches(&matches, &dir.join(format!("{name}_matches.txt")))?;
        io::save_refpoints(&refs, &dir.join(format!("{name}_refs.txt")))?;

        manifest.push_str(&format!(
            "\n[[record]]\nname = \"{name}\"\ndisparity = \"{name}_disp.pfm\"\ngt_depth = \"{name}_gt.png\"\n\
             left_image = \"{name}_left.png\"\nright_image = \"{name}_right.png\"\n\
             pose_path = \"{name}_poses.txt\"\npose_frames = [0, 1]\nmatches = \"{name}_matches.txt\"\n\
             refpoints = \"{name}_refs.txt\"\n"
        ));
        truth.push(SynthTruth {
            name,
            alpha0,
            beta0,
        });
    }
    let manifest_path = dir.join("manifest.toml");
    write_text(&manifest_path, &manifest)?;
    write_json(&dir.join("truth.json"), &truth)?;
    info!("wrote {} scenes to {}", cfg.n_images, dir.display());
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn provider_parsing() {
        assert_eq!("lidar:16".parse::<Provider>().unwrap(), Provider::Lidar(16));
        assert_eq!("sfm".parse::<Provider>().unwrap(), Provider::Sfm);
        assert!("lidar:0".parse::<Provider>().is_err());
        assert!("lidar".parse::<Provider>().is_err());
        assert!("radar".parse::<Provider>().is_err());
        assert_eq!(Provider::Lidar(4).to_string(), "lidar:4");
    }

    #[test]
    fn exit_status_counts() {
        assert_eq!(ExitStatus::from_counts(3, 3), ExitStatus::Success);
        assert_eq!(ExitStatus::from_counts(1, 3), ExitStatus::PartialFailure);
        assert_eq!(ExitStatus::from_counts(0, 3), ExitStatus::TotalFailure);
        assert_eq!(ExitStatus::ConfigError.code(), 1);
    }

    #[test]
    fn synth_then_rescale_every_provider() {
        let dir = tempdir().unwrap();
        let data = dir.path().join("data");
        let manifest = synth_inner(&SynthConfig {
            n_images: 2,
            ..SynthConfig::new(&data)
        })
        .unwrap();
        for provider in [
            Provider::Lidar(16),
            Provider::External,
            Provider::Sfm,
            Provider::Stereo,
        ] {
            let out = dir
                .path()
                .join(format!("out_{}", provider.to_string().replace(':', "_")));
            let mut cfg = RunConfig::new(&manifest, provider, &out);
            cfg.sgm.max_disparity = 48;
            assert_eq!(cmd_rescale(&cfg), ExitStatus::Success, "{provider}");
            for name in ["scene_000", "scene_001"] {
                assert!(out.join(format!("{name}_depth.pfm")).is_file());
                let s: AffineScale = serde_json::from_str(
                    &fs::read_to_string(out.join(format!("{name}_scale.json"))).unwrap(),
                )
                .unwrap();
                assert!(s.alpha > 0.0, "{provider}: {s:?}");
            }
        }
    }

    #[test]
    fn sfm_without_pose_is_rejected_upfront() {
        let dir = tempdir().unwrap();
        fs::write(dir.path().join("d.pfm"), b"").unwrap();
        fs::write(dir.path().join("m.txt"), b"").unwrap();
        let mp = dir.path().join("m.toml");
        fs::write(
            &mp,
            "[[record]]\nname = \"a\"\ndisparity = \"d.pfm\"\nmatches = \"m.txt\"\n\
             intrinsics = { fx = 1.0, fy = 1.0, cx = 1.0, cy = 1.0, width = 4, height = 4 }\n",
        )
        .unwrap();
        let out = dir.path().join("out");
        assert_eq!(
            cmd_rescale(&RunConfig::new(&mp, Provider::Sfm, &out)),
            ExitStatus::ConfigError
        );
        assert!(!out.join("rescale_summary.json").exists());
    }

    #[test]
    fn partial_failure_is_isolated() {
        let dir = tempdir().unwrap();
        let data = dir.path().join("data");
        let manifest = synth_inner(&SynthConfig {
            n_images: 2,
            ..SynthConfig::new(&data)
        })
        .unwrap();
        // corrupt one disparity file
        fs::write(data.join("scene_001_disp.pfm"), b"Pf\n160 64\n-1\n").unwrap();
        let out = dir.path().join("out");
        let cfg = RunConfig::new(&manifest, Provider::Lidar(8), &out);
        assert_eq!(cmd_rescale(&cfg), ExitStatus::PartialFailure);
        assert!(out.join("scene_000_depth.pfm").is_file());
        let summary = fs::read_to_string(out.join("rescale_summary.json")).unwrap();
        assert!(summary.contains("truncated at byte offset"));
        assert!(!summary.contains(&*data.display().to_string()));
    }
}
