//! The batch pipeline behind the binary: generate a dataset, then rescale and evaluate it.
//!
//! ```bash
//! cargo run --release --example batch_pipeline
//! ```

use depth_rescale::app::{cmd_eval, cmd_rescale, synth_inner, Provider, RunConfig, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let manifest = synth_inner(&SynthConfig::new(dir.path().join("data")))?;
    println!("manifest: {}", manifest.display());

    for provider in [
        Provider::Lidar(16),
        Provider::Stereo,
        Provider::Sfm,
        Provider::External,
    ] {
        let out = dir
            .path()
            .join(format!("out_{}", provider.to_string().replace(':', "")));
        let mut cfg = RunConfig::new(&manifest, provider, &out);
        cfg.sgm.max_disparity = 64;
        let status = cmd_rescale(&cfg);
        let eval = cmd_eval(&cfg);
        // eval prints its table; results also land in eval_report.json
        println!("[{provider}] rescale {status:?}, eval {eval:?}\n");
    }
    Ok(())
}
