//! Round trips through every on-disk format the pipeline reads or writes.
//!
//! ```bash
//! cargo run --example file_formats
//! ```

use depth_rescale::io;
use depth_rescale::sfm::Correspondence;
use depth_rescale::synth::{forward_motion, road_scene, SceneConfig};
use depth_rescale::{MapKind, PointSource, ReferencePoint, RigidPose};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let p = |name: &str| dir.path().join(name);
    let scene = road_scene(&SceneConfig {
        hole_fraction: 0.1,
        ..Default::default()
    })?;

    // 16-bit PNG stores depth * 256; zero marks missing pixels
    io::save_depth_png16(&scene.depth, &p("gt.png"), io::PNG16_DEFAULT_DIVISOR)?;
    let png = io::load_depth_png16(&p("gt.png"), io::PNG16_DEFAULT_DIVISOR)?;
    let worst = scene
        .depth
        .iter_valid()
        .map(|(x, y, z)| (png.get(x, y).unwrap() - z).abs())
        .fold(0.0, f64::max);
    println!(
        "png16: {} valid px, max quantisation error {worst:.4} m",
        png.valid_count()
    );

    io::save_pfm(&scene.depth, &p("gt.pfm"))?;
    io::save_npy_f32(&scene.depth, &p("gt.npy"))?;
    let pfm = io::load_float_map(&p("gt.pfm"), MapKind::MetricDepth)?;
    let npy = io::load_float_map(&p("gt.npy"), MapKind::MetricDepth)?;
    println!("pfm == npy: {}", pfm == npy);

    io::save_intrinsics(&scene.intrinsics, &p("intrinsics.txt"))?;
    println!(
        "intrinsics: {:?}",
        io::load_intrinsics(&p("intrinsics.txt"))?
    );

    let poses = [
        RigidPose::identity(),
        forward_motion(2.0, 0.0, 2.0).inverse(),
    ];
    io::save_poses(&poses, &p("poses.txt"))?;
    let rel = io::relative_pose(&io::load_poses(&p("poses.txt"))?, 0, 1)?;
    println!(
        "relative pose: {:.2} m, {:.2} deg",
        rel.translation_norm_m(),
        rel.rotation_angle_deg()
    );

    io::save_matches(
        &[Correspondence::new(10.0, 20.0, 11.5, 20.25)],
        &p("matches.txt"),
    )?;
    io::save_refpoints(
        &[ReferencePoint::new(4.0, 30.0, 12.5, PointSource::LidarSim)?],
        &p("refs.txt"),
    )?;
    for name in ["matches.txt", "refs.txt", "intrinsics.txt"] {
        println!(
            "--- {name}\n{}",
            std::fs::read_to_string(p(name))
                .unwrap_or_default()
                .trim_end()
        );
    }
    Ok(())
}
