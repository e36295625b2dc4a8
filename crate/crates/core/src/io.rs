//! File formats: depth/disparity rasters, calibration, poses, matches,
//! reference points and dataset manifests.
//!
//! Invalid pixels are stored as raw `0` in 16-bit PNG and as NaN in float
//! formats (PFM, NPY).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use crate::camera::{CameraIntrinsics, RigidPose};
use crate::error::{Error, Result};
use crate::metrics::{Alignment, Crop, EvalConfig, Profile};
use crate::raster::{DepthRange, MapKind, RasterMap};
use crate::refpoint::{PointSource, ReferencePoint};
use crate::sfm::Correspondence;

/// KITTI stores depth as `meters * 256`.
pub const PNG16_DEFAULT_DIVISOR: f64 = 256.0;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn unsupported(path: &Path, reason: impl Into<String>) -> Error {
    Error::UnsupportedFormat {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn truncated(path: &Path, offset: usize, reason: impl Into<String>) -> Error {
    Error::Truncated {
        path: path.to_path_buf(),
        offset: offset as u64,
        reason: reason.into(),
    }
}

// ---------------------------------------------------------------- PNG16

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Walks the chunk structure so truncation is reported with a byte offset
/// rather than as an opaque decoder error.
fn check_png_chunks(path: &Path, bytes: &[u8]) -> Result<()> {
    if bytes.len() < PNG_SIGNATURE.len() {
        return Err(truncated(path, bytes.len(), "incomplete PNG signature"));
    }
    if bytes[..8] != PNG_SIGNATURE {
        return Err(unsupported(path, "not a PNG file"));
    }
    let mut off = 8;
    loop {
        if off + 8 > bytes.len() {
            return Err(truncated(path, off, "missing chunk header"));
        }
        let len = u32::from_be_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
        let kind = String::from_utf8_lossy(&bytes[off + 4..off + 8]).into_owned();
        let end = off + 12 + len;
        if end > bytes.len() {
            return Err(truncated(
                path,
                off,
                format!(
                    "{kind} chunk needs {} bytes, {} remain",
                    12 + len,
                    bytes.len() - off
                ),
            ));
        }
        if kind == "IEND" {
            return Ok(());
        }
        off = end;
    }
}

/// 16-bit grayscale PNG, `depth = raw / divisor`; raw 0 is invalid.
pub fn load_depth_png16(path: &Path, divisor: f64) -> Result<RasterMap> {
    if !(divisor > 0.0 && divisor.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "PNG divisor must be positive, got {divisor}"
        )));
    }
    let bytes = read(path)?;
    check_png_chunks(path, &bytes)?;
    let img =
        image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|source| {
            Error::Image {
                path: path.to_path_buf(),
                source,
            }
        })?;
    let img = match img {
        image::DynamicImage::ImageLuma16(b) => b,
        other => {
            return Err(unsupported(
                path,
                format!("expected 16-bit grayscale, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    RasterMap::from_fn(w, h, MapKind::MetricDepth, |x, y| {
        let raw = img.get_pixel(x as u32, y as u32).0[0];
        (raw != 0).then(|| raw as f64 / divisor)
    })
}

/// Writes `round(depth * divisor)` clamped to `1..=65535`; invalid pixels become 0.
pub fn save_depth_png16(map: &RasterMap, path: &Path, divisor: f64) -> Result<()> {
    if map.kind() != MapKind::MetricDepth {
        return Err(Error::InvalidInput(format!(
            "PNG16 holds metric depth, got {:?}",
            map.kind()
        )));
    }
    let (w, h) = (map.width() as u32, map.height() as u32);
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(w, h, |x, y| {
        let raw = map.get(x as usize, y as usize).map_or(0, |z| {
            (z * divisor).round().clamp(1.0, u16::MAX as f64) as u16
        });
        Luma([raw])
    });
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

// ---------------------------------------------------------------- PFM

/// Reads a single-channel PFM. Rows are stored bottom-up; a negative scale
/// means little-endian. Non-finite or inadmissible values are invalid.
pub fn load_pfm(path: &Path, kind: MapKind) -> Result<RasterMap> {
    let bytes = read(path)?;
    // header: three newline-terminated lines
    let mut lines = Vec::with_capacity(3);
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            lines.push(String::from_utf8_lossy(&bytes[start..i]).trim().to_string());
            start = i + 1;
            if lines.len() == 3 {
                break;
            }
        }
    }
    if lines.first().is_some_and(|m| m == "PF") {
        return Err(unsupported(path, "three-channel PFM (PF) is not supported"));
    }
    if lines.first().is_some_and(|m| m != "Pf") {
        return Err(unsupported(path, "missing Pf magic"));
    }
    if lines.len() < 3 {
        return Err(truncated(path, bytes.len(), "incomplete PFM header"));
    }
    let dims: Vec<usize> = lines[1]
        .split_whitespace()
        .filter_map(|t| t.parse().ok())
        .collect();
    let [w, h] = dims[..] else {
        return Err(unsupported(
            path,
            format!("bad PFM dimensions line {:?}", lines[1]),
        ));
    };
    let scale: f64 = lines[2]
        .parse()
        .map_err(|_| unsupported(path, format!("bad PFM scale {:?}", lines[2])))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(unsupported(path, "PFM scale must be non-zero"));
    }
    let little = scale < 0.0;
    let need = w * h * 4;
    let data = &bytes[start..];
    if data.len() < need {
        return Err(truncated(
            path,
            bytes.len(),
            format!(
                "expected {need} bytes of pixel data after the header, found {}",
                data.len()
            ),
        ));
    }
    RasterMap::from_fn(w, h, kind, |x, y| {
        let i = ((h - 1 - y) * w + x) * 4;
        let raw: [u8; 4] = data[i..i + 4].try_into().unwrap();
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        } as f64;
        admissible(kind, v).then_some(v)
    })
}

fn admissible(kind: MapKind, v: f64) -> bool {
    RasterMap::from_values(1, 1, kind, vec![v]).is_ok_and(|m| m.valid_count() == 1)
}

/// Little-endian PFM; invalid pixels are written as NaN.
pub fn save_pfm(map: &RasterMap, path: &Path) -> Result<()> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("Pf\n{w} {h}\n-1\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            let v = map.get(x, y).map_or(f32::NAN, |v| v as f32);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    write(path, &out)
}

// ---------------------------------------------------------------- NPY

const NPY_MAGIC: &[u8] = b"\x93NUMPY";

fn npy_header_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let at = header.find(&format!("'{key}'"))? + key.len() + 2;
    let rest = header[at..].trim_start().strip_prefix(':')?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')')? + 1
    } else {
        rest.find([',', '}']).unwrap_or(rest.len())
    };
    Some(rest[..end].trim())
}

/// Version 1.0 `.npy` holding a C-order 2-D little-endian `f32` array.
pub fn load_npy_f32(path: &Path, kind: MapKind) -> Result<RasterMap> {
    let bytes = read(path)?;
    if bytes.len() < 10 {
        return Err(truncated(path, bytes.len(), "incomplete NPY preamble"));
    }
    if &bytes[..6] != NPY_MAGIC {
        return Err(unsupported(path, "missing NPY magic"));
    }
    if (bytes[6], bytes[7]) != (1, 0) {
        return Err(unsupported(
            path,
            format!("NPY version {}.{}, only 1.0 is read", bytes[6], bytes[7]),
        ));
    }
    let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    if bytes.len() < 10 + hlen {
        return Err(truncated(
            path,
            bytes.len(),
            format!("header declares {hlen} bytes"),
        ));
    }
    let header = std::str::from_utf8(&bytes[10..10 + hlen])
        .map_err(|_| unsupported(path, "non-ASCII NPY header"))?;
    let descr = npy_header_value(header, "descr").unwrap_or_default();
    if descr.trim_matches(['\'', '"']) != "<f4" {
        return Err(unsupported(path, format!("dtype {descr}, expected '<f4'")));
    }
    if npy_header_value(header, "fortran_order") != Some("False") {
        return Err(unsupported(path, "only C-order arrays are read"));
    }
    let shape = npy_header_value(header, "shape").unwrap_or_default();
    let dims: Vec<usize> = shape
        .trim_matches(['(', ')'])
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| unsupported(path, format!("bad shape {shape}")))
        })
        .collect::<Result<_>>()?;
    let [h, w] = dims[..] else {
        return Err(unsupported(
            path,
            format!("expected a 2-D array, shape is {shape}"),
        ));
    };
    let data = &bytes[10 + hlen..];
    let need = w * h * 4;
    if data.len() < need {
        return Err(truncated(
            path,
            bytes.len(),
            format!("expected {need} bytes of array data, found {}", data.len()),
        ));
    }
    RasterMap::from_fn(w, h, kind, |x, y| {
        let i = (y * w + x) * 4;
        let v = f32::from_le_bytes(data[i..i + 4].try_into().unwrap()) as f64;
        admissible(kind, v).then_some(v)
    })
}

pub fn save_npy_f32(map: &RasterMap, path: &Path) -> Result<()> {
    let (w, h) = (map.width(), map.height());
    let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': ({h}, {w}), }}");
    // total preamble length is a multiple of 64, header ends in '\n'
    let pad = 64 - (10 + header.len() + 1) % 64;
    header.push_str(&" ".repeat(pad % 64));
    header.push('\n');
    let mut out = Vec::with_capacity(10 + header.len() + w * h * 4);
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for y in 0..h {
        for x in 0..w {
            out.extend_from_slice(&map.get(x, y).map_or(f32::NAN, |v| v as f32).to_le_bytes());
        }
    }
    write(path, &out)
}

/// Picks the float loader from the extension (`.pfm` or `.npy`).
pub fn load_float_map(path: &Path, kind: MapKind) -> Result<RasterMap> {
    match extension(path).as_str() {
        "pfm" => load_pfm(path, kind),
        "npy" => load_npy_f32(path, kind),
        other => Err(unsupported(
            path,
            format!("unknown float map extension {other:?}"),
        )),
    }
}

/// Metric depth from `.png` (16-bit, divisor 256), `.pfm` or `.npy`.
pub fn load_depth(path: &Path) -> Result<RasterMap> {
    match extension(path).as_str() {
        "png" => load_depth_png16(path, PNG16_DEFAULT_DIVISOR),
        _ => load_float_map(path, MapKind::MetricDepth),
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase()
}

/// 8-bit grayscale view of any image file (RGB is converted with Rec. 601 weights).
pub fn load_gray(path: &Path) -> Result<image::GrayImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => crate::stereo::to_luma(&other.to_rgb8()),
    })
}

// ---------------------------------------------------------------- text formats

/// Non-empty, non-comment lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_f64s(path: &Path, line: usize, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("not a number: {t:?}")))
        })
        .collect()
}

/// `key: value` lines for `fx`, `fy`, `cx`, `cy` and `size: W H`.
pub fn load_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    parse_intrinsics(path, &read_text(path)?)
}

fn parse_intrinsics(path: &Path, text: &str) -> Result<CameraIntrinsics> {
    let (mut fx, mut fy, mut cx, mut cy, mut size) = (None, None, None, None, None);
    for (ln, line) in records(text) {
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(path, ln, "expected `key: value`"))?;
        let nums = parse_f64s(path, ln, value)?;
        let slot = match key.trim() {
            "fx" => &mut fx,
            "fy" => &mut fy,
            "cx" => &mut cx,
            "cy" => &mut cy,
            "size" => {
                let [w, h] = nums[..] else {
                    return Err(Error::parse(path, ln, "size needs `W H`"));
                };
                if w.fract() != 0.0 || h.fract() != 0.0 || w < 1.0 || h < 1.0 {
                    return Err(Error::parse(path, ln, "size must be positive integers"));
                }
                size = Some((w as usize, h as usize));
                continue;
            }
            other => return Err(Error::parse(path, ln, format!("unknown key {other:?}"))),
        };
        let [v] = nums[..] else {
            return Err(Error::parse(path, ln, "expected one number"));
        };
        *slot = Some(v);
    }
    let missing = |k: &str| Error::parse(path, 0, format!("missing key {k}"));
    let (w, h) = size.ok_or_else(|| missing("size"))?;
    CameraIntrinsics::new(
        fx.ok_or_else(|| missing("fx"))?,
        fy.ok_or_else(|| missing("fy"))?,
        cx.ok_or_else(|| missing("cx"))?,
        cy.ok_or_else(|| missing("cy"))?,
        w,
        h,
    )
}

pub fn save_intrinsics(k: &CameraIntrinsics, path: &Path) -> Result<()> {
    let text = format!(
        "fx: {}\nfy: {}\ncx: {}\ncy: {}\nsize: {} {}\n",
        k.fx, k.fy, k.cx, k.cy, k.width, k.height
    );
    write(path, text.as_bytes())
}

/// One camera-to-world pose per line: 12 numbers (3x4 row-major) or 16 (4x4
/// with the homogeneous row `0 0 0 1`). Rotations that are orthonormal only
/// to the printed precision are projected back onto SO(3).
pub fn load_poses(path: &Path) -> Result<Vec<RigidPose>> {
    let text = read_text(path)?;
    let mut poses = Vec::new();
    for (ln, line) in records(&text) {
        let v = parse_f64s(path, ln, line)?;
        match v.len() {
            12 => {}
            16 if v[12..] == [0.0, 0.0, 0.0, 1.0] => {}
            16 => {
                return Err(Error::parse(
                    path,
                    ln,
                    "last row of a 4x4 pose must be 0 0 0 1",
                ))
            }
            n => {
                return Err(Error::parse(
                    path,
                    ln,
                    format!("expected 12 or 16 numbers, found {n}"),
                ))
            }
        }
        let r = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let t = Vector3::new(v[3], v[7], v[11]);
        let pose = RigidPose::new(r, t)
            .or_else(|_| RigidPose::new_orthonormalized(r, t))
            .map_err(|e| Error::parse(path, ln, e.to_string()))?;
        poses.push(pose);
    }
    Ok(poses)
}

pub fn save_poses(poses: &[RigidPose], path: &Path) -> Result<()> {
    let mut text = String::new();
    for p in poses {
        let row: Vec<String> = p.to_rows().iter().map(f64::to_string).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    write(path, text.as_bytes())
}

/// Pose mapping frame `a` camera coordinates to frame `b` camera coordinates.
pub fn relative_pose(poses: &[RigidPose], a: usize, b: usize) -> Result<RigidPose> {
    let get = |i: usize| {
        poses.get(i).ok_or_else(|| {
            Error::InvalidInput(format!("pose index {i} out of {} poses", poses.len()))
        })
    };
    Ok(get(b)?.inverse().compose(get(a)?))
}

/// `u1 v1 u2 v2 [score]` per line.
pub fn load_matches(path: &Path) -> Result<Vec<Correspondence>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (ln, line) in records(&text) {
        let v = parse_f64s(path, ln, line)?;
        let score = match v.len() {
            4 => None,
            5 => Some(v[4]),
            n => {
                return Err(Error::parse(
                    path,
                    ln,
                    format!("expected 4 or 5 numbers, found {n}"),
                ))
            }
        };
        let c = Correspondence {
            score,
            ..Correspondence::new(v[0], v[1], v[2], v[3])
        };
        if !c.is_finite() {
            return Err(Error::parse(path, ln, "non-finite coordinate"));
        }
        out.push(c);
    }
    Ok(out)
}

pub fn save_matches(matches: &[Correspondence], path: &Path) -> Result<()> {
    let mut text = String::new();
    for m in matches {
        match m.score {
            Some(s) => text.push_str(&format!("{} {} {} {} {}\n", m.u1, m.v1, m.u2, m.v2, s)),
            None => text.push_str(&format!("{} {} {} {}\n", m.u1, m.v1, m.u2, m.v2)),
        }
    }
    write(path, text.as_bytes())
}

/// `u v depth source weight` per line; floats use shortest round-trip formatting.
pub fn save_refpoints(points: &[ReferencePoint], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for p in points {
        writeln!(f, "{} {} {} {} {}", p.u, p.v, p.depth, p.source, p.weight)
            .map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn load_refpoints(path: &Path) -> Result<Vec<ReferencePoint>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (ln, line) in records(&text) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        let [u, v, depth, source, weight] = tok[..] else {
            return Err(Error::parse(
                path,
                ln,
                format!("expected 5 fields, found {}", tok.len()),
            ));
        };
        let nums = parse_f64s(path, ln, &format!("{u} {v} {depth} {weight}"))?;
        let source: PointSource = source
            .parse()
            .map_err(|e: Error| Error::parse(path, ln, e.to_string()))?;
        let p = ReferencePoint::weighted(nums[0], nums[1], nums[2], source, nums[3])
            .map_err(|e| Error::parse(path, ln, e.to_string()))?;
        out.push(p);
    }
    Ok(out)
}

// ---------------------------------------------------------------- manifest

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum IntrinsicsSpec {
    Inline(CameraIntrinsics),
    Path(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomProfile {
    min_depth_m: f64,
    max_depth_m: f64,
    #[serde(default = "no_crop")]
    crop: Crop,
    #[serde(default = "no_alignment")]
    alignment: Alignment,
}

fn no_crop() -> Crop {
    Crop::None
}

fn no_alignment() -> Alignment {
    Alignment::NoneMetric
}

fn default_frames() -> [usize; 2] {
    [0, 1]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    name: String,
    disparity: Option<PathBuf>,
    gt_depth: Option<PathBuf>,
    pred_depth: Option<PathBuf>,
    left_image: Option<PathBuf>,
    right_image: Option<PathBuf>,
    prev_image: Option<PathBuf>,
    pose_path: Option<PathBuf>,
    #[serde(default = "default_frames")]
    pose_frames: [usize; 2],
    matches: Option<PathBuf>,
    refpoints: Option<PathBuf>,
    intrinsics: Option<IntrinsicsSpec>,
    baseline_m: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    profile: Option<Profile>,
    custom: Option<CustomProfile>,
    intrinsics: Option<IntrinsicsSpec>,
    baseline_m: Option<f64>,
    #[serde(default)]
    record: Vec<RawRecord>,
}

/// One image of a dataset. Paths are absolute or relative to the working
/// directory once loaded; intrinsics are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub name: String,
    pub disparity: Option<PathBuf>,
    pub gt_depth: Option<PathBuf>,
    /// Externally produced metric depth, evaluated as-is.
    pub pred_depth: Option<PathBuf>,
    pub left_image: Option<PathBuf>,
    pub right_image: Option<PathBuf>,
    /// Earlier view (frame A) matched against `left_image` (frame B) when no `matches` file is given.
    pub prev_image: Option<PathBuf>,
    pub pose_path: Option<PathBuf>,
    /// Pose-file indices `[source, target]`: the earlier view A and the frame B whose disparity is rescaled.
    pub pose_frames: [usize; 2],
    pub matches: Option<PathBuf>,
    pub refpoints: Option<PathBuf>,
    pub intrinsics: Option<CameraIntrinsics>,
    pub baseline_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub profile: Profile,
    /// Evaluation settings of the `custom` profile, when given.
    pub custom_eval: Option<EvalConfig>,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    /// Evaluation settings for `profile`, defaulting to the manifest's own.
    pub fn eval_config(&self, profile: Option<Profile>) -> Result<EvalConfig> {
        match profile.unwrap_or(self.profile) {
            Profile::Indoor => Ok(EvalConfig::indoor()),
            Profile::Outdoor => Ok(EvalConfig::outdoor()),
            Profile::Custom => self
                .custom_eval
                .ok_or_else(|| Error::Manifest("profile `custom` needs a [custom] section".into())),
        }
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Parses a TOML manifest, resolves relative paths against its directory and
/// checks that every referenced file exists.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = read_text(path)?;
    let raw: RawManifest =
        toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: PathBuf| -> Result<PathBuf> {
        let full = if p.is_absolute() { p } else { base.join(p) };
        if !full.is_file() {
            return Err(Error::Manifest(format!(
                "referenced file {} does not exist",
                full.display()
            )));
        }
        Ok(full)
    };
    let opt = |p: Option<PathBuf>| p.map(resolve).transpose();
    let intrinsics = |spec: Option<IntrinsicsSpec>| -> Result<Option<CameraIntrinsics>> {
        match spec {
            None => Ok(None),
            Some(IntrinsicsSpec::Inline(k)) => {
                k.validate()?;
                Ok(Some(k))
            }
            Some(IntrinsicsSpec::Path(p)) => Ok(Some(load_intrinsics(&resolve(p)?)?)),
        }
    };

    let global_k = intrinsics(raw.intrinsics)?;
    let custom_eval = raw
        .custom
        .map(|c| {
            let cfg = EvalConfig {
                depth_range: DepthRange::new(c.min_depth_m, c.max_depth_m)?,
                crop: c.crop,
                alignment: c.alignment,
            };
            cfg.validate().map(|_| cfg)
        })
        .transpose()?;
    let mut records = Vec::with_capacity(raw.record.len());
    for r in raw.record {
        if !valid_name(&r.name) {
            return Err(Error::Manifest(format!(
                "record name {:?} must be non-empty and use only [A-Za-z0-9_.-]",
                r.name
            )));
        }
        if records.iter().any(|o: &ManifestRecord| o.name == r.name) {
            return Err(Error::Manifest(format!(
                "duplicate record name {:?}",
                r.name
            )));
        }
        let baseline_m = r.baseline_m.or(raw.baseline_m);
        if baseline_m.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::Manifest(format!(
                "record {}: baseline must be positive",
                r.name
            )));
        }
        records.push(ManifestRecord {
            disparity: opt(r.disparity)?,
            gt_depth: opt(r.gt_depth)?,
            pred_depth: opt(r.pred_depth)?,
            left_image: opt(r.left_image)?,
            right_image: opt(r.right_image)?,
            prev_image: opt(r.prev_image)?,
            pose_path: opt(r.pose_path)?,
            pose_frames: r.pose_frames,
            matches: opt(r.matches)?,
            refpoints: opt(r.refpoints)?,
            intrinsics: intrinsics(r.intrinsics)?.or(global_k),
            baseline_m,
            name: r.name,
        });
    }
    if records.is_empty() {
        return Err(Error::Manifest(format!(
            "{} lists no [[record]]",
            path.display()
        )));
    }
    Ok(DatasetManifest {
        profile: raw.profile.unwrap_or(Profile::Outdoor),
        custom_eval,
        records,
    })
}
