//! Why the fit is robust: LiDAR references polluted with junk depths.
//!
//! ```bash
//! cargo run --example ransac_vs_lsq
//! ```

use depth_rescale::lidar::{simulate_beams, BeamConfig};
use depth_rescale::metrics::{evaluate_image, EvalConfig};
use depth_rescale::rescale::fit_pairs;
use depth_rescale::synth::{
    affine_disparity, corrupt_refpoints, road_scene, Corruption, OutlierDepth, SceneConfig,
};
use depth_rescale::{apply_scale, build_pairs, DepthRange, RescaleConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> depth_rescale::Result<()> {
    let scene = road_scene(&SceneConfig {
        seed: 3,
        ..Default::default()
    })?;
    let disparity = affine_disparity(&scene.depth, 1.7, 0.05)?;
    let clean = simulate_beams(&scene.depth, &BeamConfig::new(16))?;
    let eval = EvalConfig::new(DepthRange::OUTDOOR);
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    println!(
        "{:>8} {:>10} {:>10} {:>10} {:>10}",
        "outliers", "alpha", "d1 ransac", "alpha", "d1 lsq"
    );
    for frac in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let corruption = Corruption {
            outlier_fraction: frac,
            outlier_depth: OutlierDepth::LogUniform,
            g_noise: 0.01,
            range: DepthRange::OUTDOOR,
        };
        let (refs, _) = corrupt_refpoints(&clean, &corruption, &mut rng);
        let pairs = build_pairs(&disparity, &refs)?;
        let cfg = RescaleConfig::default();
        let robust = fit_pairs(&pairs, &cfg)?;
        let plain = fit_pairs(
            &pairs,
            &RescaleConfig {
                use_ransac: false,
                ..cfg
            },
        )?;
        let d1 = |s| {
            evaluate_image(
                &apply_scale(&disparity, s, cfg.depth_cap),
                &scene.depth,
                &eval,
            )
            .map(|m| m.delta1)
        };
        println!(
            "{:>7.0}% {:>10.4} {:>10.3} {:>10.4} {:>10.3}",
            100.0 * frac,
            robust.alpha,
            d1(&robust)?,
            plain.alpha,
            d1(&plain)?
        );
    }
    Ok(())
}
