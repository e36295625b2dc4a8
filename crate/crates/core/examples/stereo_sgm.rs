//! Stereo as the reference source: semi-global matching on a rendered pair.
//!
//! ```bash
//! cargo run --release --example stereo_sgm
//! ```

use depth_rescale::metrics::{evaluate_image, EvalConfig};
use depth_rescale::stereo::{compute_disparity, stereo_refpoints, SgmConfig, StereoRig};
use depth_rescale::synth::{affine_disparity, render_stereo, road_scene, SceneConfig};
use depth_rescale::{rescale_image, DepthRange, RescaleConfig};

fn main() -> depth_rescale::Result<()> {
    let scene = road_scene(&SceneConfig {
        width: 256,
        height: 96,
        seed: 5,
        ..Default::default()
    })?;
    let baseline = 0.54;
    let (left, right, true_disp) = render_stereo(&scene.depth, &scene.intrinsics, baseline, 5)?;

    let cfg = SgmConfig {
        max_disparity: 64,
        ..Default::default()
    };
    let disp = compute_disparity(&left, &right, &cfg)?;
    let exact = disp
        .iter_valid()
        .filter(|&(x, y, d)| true_disp.get(x, y).is_some_and(|t| (t - d).abs() <= 1.0))
        .count();
    println!(
        "SGM kept {} of {} px after the LR check; {exact} within 1 px of the truth",
        disp.valid_count(),
        disp.len()
    );

    let rig = StereoRig::new(scene.intrinsics, baseline)?;
    let refs = stereo_refpoints(&disp, &rig, 4, cfg.min_disparity_px)?;
    let mono = affine_disparity(&scene.depth, 3.0, 0.1)?;
    let (depth, scale) = rescale_image(&mono, &refs, &RescaleConfig::default())?;
    let m = evaluate_image(&depth, &scene.depth, &EvalConfig::new(DepthRange::OUTDOOR))?;
    println!(
        "{} stereo references -> alpha {:.4} beta {:.4}; delta1 {:.3}, AbsRel {:.3}",
        refs.len(),
        scale.alpha,
        scale.beta,
        m.delta1,
        m.abs_rel
    );
    Ok(())
}
