//! File formats checked against hand-assembled bytes.

use std::io::Write;

use depth_rescale::io;
use depth_rescale::{Error, MapKind};

fn write(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::File::create(&p).unwrap().write_all(bytes).unwrap();
    p
}

#[test]
fn big_endian_pfm_is_flipped_bottom_up() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = b"Pf\n2 2\n1.0\n".to_vec();
    // stored bottom row first
    for v in [3.0f32, 4.0, 1.0, 2.0] {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    let map = io::load_pfm(&write(&dir, "be.pfm", &bytes), MapKind::AffineDisparity).unwrap();
    assert_eq!(map.values(), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn pfm_nan_and_inf_are_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = b"Pf\n3 1\n-1\n".to_vec();
    for v in [f32::NAN, 0.5, f32::INFINITY] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let map = io::load_pfm(&write(&dir, "nan.pfm", &bytes), MapKind::AffineDisparity).unwrap();
    assert_eq!(map.valid_mask(), &[false, true, false]);
}

#[test]
fn color_pfm_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "rgb.pfm", b"PF\n1 1\n-1\n\0\0\0\0\0\0\0\0\0\0\0\0");
    assert!(matches!(
        io::load_pfm(&p, MapKind::AffineDisparity),
        Err(Error::UnsupportedFormat { .. })
    ));
}

#[test]
fn npy_header_written_by_hand() {
    let dir = tempfile::tempdir().unwrap();
    let dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }";
    let mut header = dict.to_string();
    while !(10 + header.len() + 1).is_multiple_of(64) {
        header.push(' ');
    }
    header.push('\n');
    let mut bytes = b"\x93NUMPY\x01\x00".to_vec();
    bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
    bytes.extend_from_slice(header.as_bytes());
    for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let map = io::load_npy_f32(&write(&dir, "a.npy", &bytes), MapKind::AffineDisparity).unwrap();
    assert_eq!((map.width(), map.height()), (3, 2));
    assert_eq!(map.get(2, 1), Some(6.0));

    let at = bytes.windows(3).position(|w| w == b"<f4").unwrap();
    bytes[at] = b'>';
    let p = write(&dir, "b.npy", &bytes);
    assert!(matches!(
        io::load_npy_f32(&p, MapKind::AffineDisparity),
        Err(Error::UnsupportedFormat { .. })
    ));
}

#[test]
fn truncated_png_reports_an_offset() {
    let dir = tempfile::tempdir().unwrap();
    let map = depth_rescale::RasterMap::from_fn(8, 8, MapKind::MetricDepth, |x, y| {
        Some(1.0 + (x * y) as f64)
    })
    .unwrap();
    let full = dir.path().join("full.png");
    io::save_depth_png16(&map, &full, io::PNG16_DEFAULT_DIVISOR).unwrap();
    let bytes = std::fs::read(&full).unwrap();
    let cut = write(&dir, "cut.png", &bytes[..bytes.len() - 20]);
    match io::load_depth_png16(&cut, io::PNG16_DEFAULT_DIVISOR) {
        Err(Error::Truncated { offset, .. }) => assert!(offset as usize <= bytes.len() - 20),
        other => panic!("expected truncation, got {other:?}"),
    }
}

#[test]
fn png16_divisor_and_zero_holes() {
    let dir = tempfile::tempdir().unwrap();
    let img =
        image::ImageBuffer::<image::Luma<u16>, _>::from_raw(3, 1, vec![0u16, 256, 5120]).unwrap();
    let p = dir.path().join("d.png");
    img.save(&p).unwrap();
    let map = io::load_depth_png16(&p, 256.0).unwrap();
    assert_eq!(map.get(0, 0), None);
    assert_eq!(map.get(1, 0), Some(1.0));
    assert_eq!(map.get(2, 0), Some(20.0));
}

#[test]
fn text_formats_tolerate_comments() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        &dir,
        "m.txt",
        b"# u1 v1 u2 v2 [score]\n1 2 3 4\n\n5 6 7 8 0.9\n",
    );
    let matches = io::load_matches(&m).unwrap();
    assert_eq!(matches.len(), 2);
    assert_eq!(matches[1].u2, 7.0);

    let poses = write(
        &dir,
        "p.txt",
        b"1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 2 0 1 0 0 0 0 1 0 0 0 0 1\n",
    );
    let rel = io::relative_pose(&io::load_poses(&poses).unwrap(), 0, 1).unwrap();
    // camera 1 sits 2 m along x; a point at the origin of camera 0 is at x = -2 in camera 1
    assert_eq!(rel.translation().x, -2.0);
}
