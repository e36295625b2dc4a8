//! Recover metric depth from an affine disparity map with simulated 16-beam LiDAR.
//!
//! ```bash
//! cargo run --example rescale_synthetic
//! ```

use depth_rescale::lidar::{simulate_beams, BeamConfig};
use depth_rescale::metrics::{evaluate_image, EvalConfig};
use depth_rescale::synth::{affine_disparity, road_scene, SceneConfig};
use depth_rescale::{rescale_image, DepthRange, RescaleConfig};

fn main() -> depth_rescale::Result<()> {
    let scene = road_scene(&SceneConfig {
        width: 320,
        height: 96,
        seed: 7,
        ..Default::default()
    })?;
    let (alpha0, beta0) = (2.5, 0.08);
    let disparity = affine_disparity(&scene.depth, alpha0, beta0)?;

    let refs = simulate_beams(&scene.depth, &BeamConfig::new(16))?;
    println!("{} LiDAR returns on {} beams", refs.len(), 16);

    let (depth, scale) = rescale_image(&disparity, &refs, &RescaleConfig::default())?;
    println!(
        "fitted alpha {:.6} (true {alpha0}), beta {:.6} (true {beta0}), {}/{} inliers, R^2 {:?}",
        scale.alpha, scale.beta, scale.inlier_count, scale.total_count, scale.r_squared
    );

    let m = evaluate_image(&depth, &scene.depth, &EvalConfig::new(DepthRange::OUTDOOR))?;
    println!(
        "delta1 {:.4}  AbsRel {:.2e}  RMSE {:.2e} m over {} px",
        m.delta1, m.abs_rel, m.rmse, m.n_pixels
    );
    Ok(())
}
