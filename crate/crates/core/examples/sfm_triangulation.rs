//! Two-view triangulation with a known pose, gated on translation, as reference points.
//!
//! ```bash
//! cargo run --example sfm_triangulation
//! ```

use depth_rescale::metrics::{evaluate_image, EvalConfig};
use depth_rescale::sfm::{gate_pair, sfm_refpoints, triangulate, GateConfig, TriangulationConfig};
use depth_rescale::synth::{
    affine_disparity, forward_motion, road_scene, synthesize_matches, MatchSynthesis, SceneConfig,
};
use depth_rescale::{rescale_image, DepthRange, RescaleConfig};

fn main() -> depth_rescale::Result<()> {
    let scene = road_scene(&SceneConfig {
        width: 320,
        height: 96,
        seed: 9,
        ..Default::default()
    })?;
    let k = scene.intrinsics;

    // frame A is the earlier view; the target frame B sits 2 m further down the road
    let rel = forward_motion(2.0, 0.3, 1.0);
    println!(
        "translation {:.2} m, passes KITTI gate: {}",
        rel.translation_norm_m(),
        gate_pair(&rel, &GateConfig::kitti())
    );

    // matches are sampled in frame A, whose depth map is the scene
    let to_a = rel.inverse();
    let matches = synthesize_matches(
        &scene.depth,
        &k,
        &to_a,
        &MatchSynthesis {
            pixel_noise: 0.3,
            moving_fraction: 0.1,
            seed: 1,
            ..Default::default()
        },
    );
    // swap roles so (u1, v1) is in the earlier frame and (u2, v2) in the target
    let matches: Vec<_> = matches
        .iter()
        .map(|m| depth_rescale::sfm::Correspondence::new(m.u2, m.v2, m.u1, m.v1))
        .collect();

    let pts = triangulate(&matches, &k, &rel, &TriangulationConfig::default())?;
    println!(
        "{} matches -> {} triangulated points",
        matches.len(),
        pts.len()
    );

    let refs = sfm_refpoints(&pts.iter().map(|p| p.point).collect::<Vec<_>>(), &k)?;
    let disparity = affine_disparity(&scene.depth, 1.2, 0.02)?;
    let (depth, scale) = rescale_image(&disparity, &refs, &RescaleConfig::default())?;
    let m = evaluate_image(&depth, &scene.depth, &EvalConfig::new(DepthRange::OUTDOOR))?;
    println!(
        "alpha {:.4} beta {:.4}; delta1 {:.3}, AbsRel {:.3}",
        scale.alpha, scale.beta, m.delta1, m.abs_rel
    );
    Ok(())
}
