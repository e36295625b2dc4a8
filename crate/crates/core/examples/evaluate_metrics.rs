//! Dataset evaluation: per-image metrics, dataset means, and the text table.
//!
//! ```bash
//! cargo run --example evaluate_metrics
//! ```

use depth_rescale::metrics::{evaluate_dataset, render_table, Alignment, Crop, EvalConfig};
use depth_rescale::synth::{road_scene, SceneConfig};
use depth_rescale::{DepthRange, MapKind, RasterMap};

fn main() -> depth_rescale::Result<()> {
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    for seed in 0..4 {
        let gt = road_scene(&SceneConfig {
            seed,
            hole_fraction: 0.3,
            ..Default::default()
        })?
        .depth;
        // a prediction that is 5% too far plus a little structured error
        let pred = RasterMap::from_fn(gt.width(), gt.height(), MapKind::MetricDepth, |x, y| {
            gt.get(x, y).map(|z| 1.05 * z + 0.02 * ((x + y) % 7) as f64)
        })?;
        gts.push(gt);
        preds.push(pred);
    }
    let names: Vec<String> = (0..gts.len()).map(|i| format!("img{i}")).collect();
    let items = || {
        names
            .iter()
            .zip(&preds)
            .zip(&gts)
            .map(|((n, p), g)| (n.as_str(), p, g))
    };

    let plain = evaluate_dataset(items(), &EvalConfig::outdoor())?;
    let median = evaluate_dataset(
        items(),
        &EvalConfig {
            alignment: Alignment::MedianScaling,
            ..EvalConfig::outdoor()
        },
    )?;
    let nocrop = evaluate_dataset(
        items(),
        &EvalConfig {
            crop: Crop::None,
            ..EvalConfig::new(DepthRange::OUTDOOR)
        },
    )?;
    for img in &plain.per_image {
        println!(
            "{}: delta1 {:.3} over {} px",
            img.name, img.metrics.delta1, img.metrics.n_pixels
        );
    }
    println!();
    print!(
        "{}",
        render_table(&[
            ("metric", &plain.metrics),
            ("median", &median.metrics),
            ("no-crop", &nocrop.metrics)
        ])
    );
    Ok(())
}
