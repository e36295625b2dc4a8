use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use depth_rescale::app::{self, ExitStatus, Provider, RunConfig, SynthConfig};
use depth_rescale::metrics::Profile;
use depth_rescale::InlierThreshold;

#[derive(Parser)]
#[command(
    name = "depth-rescale",
    version,
    about = "Metric depth from affine-invariant disparity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit and apply a per-image scale, writing metric depth maps.
    Rescale(RunArgs),
    /// Evaluate rescaled (or externally predicted) depth against ground truth.
    Eval(RunArgs),
    /// Compare per-image RANSAC, per-image least squares and a fixed mean scale.
    Ablate(RunArgs),
    /// Write simulated LiDAR reference points.
    Simulate(RunArgs),
    /// Write stereo disparity and stereo reference points.
    Sgm(RunArgs),
    /// Write triangulated reference points.
    Triangulate(RunArgs),
    /// Generate a synthetic dataset with a manifest.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// lidar:B, stereo, sfm or external
    #[arg(long, default_value = "lidar:16")]
    provider: String,
    /// Beam count; overrides the count in `--provider lidar:B`.
    #[arg(long)]
    beams: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    ransac_iters: usize,
    /// Inlier threshold as a fraction of the median reference inverse depth.
    #[arg(long, default_value_t = 0.05)]
    inlier_frac: f64,
    /// Evaluation profile; defaults to the manifest's.
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Plain least squares instead of RANSAC.
    #[arg(long)]
    no_ransac: bool,
    /// Apply `alpha,beta` to every image instead of fitting.
    #[arg(long, value_parser = parse_pair)]
    fixed_scale: Option<(f64, f64)>,
    /// Also write 16-bit PNG depth.
    #[arg(long)]
    png: bool,
    /// SGM disparity search range.
    #[arg(long, default_value_t = 128)]
    max_disparity: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "synth")]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    images: usize,
    #[arg(long, default_value_t = 160)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outlier fraction of the external reference points.
    #[arg(long, default_value_t = 0.2)]
    outlier_frac: f64,
    /// Relative Gaussian noise on the disparity.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected alpha,beta")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn run_config(a: RunArgs) -> Result<RunConfig, String> {
    let mut provider: Provider = a.provider.parse().map_err(|e| format!("{e}"))?;
    if let Some(b) = a.beams {
        if b == 0 {
            return Err("--beams must be >= 1".into());
        }
        if let Provider::Lidar(_) = provider {
            provider = Provider::Lidar(b);
        }
    }
    let mut cfg = RunConfig::new(a.manifest, provider, a.out);
    cfg.seed = a.seed;
    cfg.jobs = a.jobs;
    cfg.ransac.max_iterations = a.ransac_iters;
    cfg.ransac.threshold = InlierThreshold::RelativeToMedianG(a.inlier_frac);
    cfg.use_ransac = !a.no_ransac;
    cfg.fixed_scale = a.fixed_scale;
    cfg.profile = a.profile;
    cfg.write_png = a.png;
    cfg.sgm.max_disparity = a.max_disparity;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RESCALE_LOG", "warn")).init();
    // clap's own usage-error code (2) would read as a partial failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() {
                ExitStatus::ConfigError.code()
            } else {
                0
            };
            return ExitCode::from(code as u8);
        }
    };
    let run = |a: RunArgs, f: fn(&RunConfig) -> ExitStatus| match run_config(a) {
        Ok(cfg) => f(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::ConfigError
        }
    };
    let status = match cli.command {
        Command::Rescale(a) => run(a, app::cmd_rescale),
        Command::Eval(a) => run(a, app::cmd_eval),
        Command::Ablate(a) => run(a, app::cmd_ablate),
        Command::Simulate(a) => run(a, app::cmd_simulate),
        Command::Sgm(a) => run(a, app::cmd_sgm),
        Command::Triangulate(a) => run(a, app::cmd_triangulate),
        Command::Synth(a) => app::cmd_synth(&SynthConfig {
            n_images: a.images,
            width: a.width,
            height: a.height,
            seed: a.seed,
            outlier_fraction: a.outlier_frac,
            disparity_noise: a.noise,
            ..SynthConfig::new(a.out)
        }),
    };
    ExitCode::from(status.code() as u8)
}
