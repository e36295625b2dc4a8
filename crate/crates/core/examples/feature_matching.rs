//! Corner detection and NCC matching between two views of a rendered scene.
//!
//! ```bash
//! cargo run --release --example feature_matching
//! ```

use depth_rescale::sfm::{detect_and_match, harris_corners, MatchConfig};
use depth_rescale::synth::{render_stereo, road_scene, SceneConfig};

fn main() -> depth_rescale::Result<()> {
    let scene = road_scene(&SceneConfig {
        width: 256,
        height: 96,
        seed: 2,
        ..Default::default()
    })?;
    let (left, right, disp) = render_stereo(&scene.depth, &scene.intrinsics, 0.3, 2)?;
    let cfg = MatchConfig::default();
    println!(
        "{} corners in the left view",
        harris_corners(&left, &cfg).len()
    );

    let matches = detect_and_match(&left, &right, &cfg);
    let good = matches
        .iter()
        .filter(|m| {
            let d = disp.get(m.u1 as usize, m.v1 as usize).unwrap_or(f64::NAN);
            (m.u1 - m.u2 - d).abs() <= 1.0 && (m.v1 - m.v2).abs() <= 1.0
        })
        .count();
    println!(
        "{} mutual matches, {good} agree with the rendered disparity to 1 px",
        matches.len()
    );
    Ok(())
}
