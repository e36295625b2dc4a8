//! Per-image fits against one averaged scale when the network's scale drifts.
//!
//! ```bash
//! cargo run --example fixed_vs_dynamic
//! ```

use depth_rescale::lidar::{simulate_beams, BeamConfig};
use depth_rescale::metrics::{evaluate_dataset, render_table, EvalConfig};
use depth_rescale::rescale::{fit_pairs, mean_scale};
use depth_rescale::synth::{affine_disparity, road_scene, SceneConfig};
use depth_rescale::{apply_scale, build_pairs, AffineScale, RescaleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> depth_rescale::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = RescaleConfig::default();
    let mut frames = Vec::new();
    for seed in 0..20 {
        let gt = road_scene(&SceneConfig {
            seed,
            ..Default::default()
        })?
        .depth;
        let alpha = 2.0 * (1.0 + rng.random_range(-0.2..0.2));
        let beta = 0.1 * (1.0 + rng.random_range(-0.2..0.2));
        let disp = affine_disparity(&gt, alpha, beta)?;
        let refs = simulate_beams(&gt, &BeamConfig::new(16))?;
        let fit = fit_pairs(&build_pairs(&disp, &refs)?, &cfg)?;
        frames.push((format!("f{seed:02}"), gt, disp, fit));
    }
    let fixed = mean_scale(&frames.iter().map(|f| f.3.clone()).collect::<Vec<_>>())?;
    println!("mean scale alpha {:.3} beta {:.3}", fixed.alpha, fixed.beta);

    let run = |pick: &dyn Fn(&AffineScale) -> AffineScale| {
        let preds: Vec<_> = frames
            .iter()
            .map(|f| apply_scale(&f.2, &pick(&f.3), cfg.depth_cap))
            .collect();
        evaluate_dataset(
            frames
                .iter()
                .zip(&preds)
                .map(|(f, p)| (f.0.as_str(), p, &f.1)),
            &EvalConfig::outdoor(),
        )
    };
    let dynamic = run(&|s| s.clone())?;
    let fixed = run(&|_| fixed.clone())?;
    print!(
        "{}",
        render_table(&[("dynamic", &dynamic.metrics), ("fixed", &fixed.metrics)])
    );
    Ok(())
}
