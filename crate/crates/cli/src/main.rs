//! Command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pullback::geometry::VolumeMode;
use pullback_cli::commands::{parse_point, render_csv, run_geometry, GeometryRequest, PointSet};
use pullback_cli::config::{ExperimentConfig, Task};
use pullback_cli::error::{CliError, CliResult};
use pullback_cli::experiments::{mnist_dir, run_experiment};
use pullback_cli::output::output_root;
use pullback_cli::render::{RenderOptions, RenderStyle};

#[derive(Parser)]
#[command(
    name = "pullback",
    version,
    about = "Input-space geometry of trained networks and kernels"
)]
struct Cli {
    /// Output root; defaults to $PULLBACK_OUTPUT_ROOT, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML file layered over the task defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value` override, applied last; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Clone)]
struct GeometryArgs {
    /// Saved network (`model_e*.pbnn` from a training run).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Run directory under the output root.
    #[arg(long, default_value = "geometry")]
    name: String,
    #[arg(long, value_parser = ["full_rank", "pseudo"], default_value = "pseudo")]
    mode: String,
    /// Skip the Ricci channel.
    #[arg(long)]
    no_ricci: bool,
    #[arg(long)]
    no_render: bool,
    /// Symmetric display clip for Ricci; 0 disables it.
    #[arg(long, default_value_t = 100.0)]
    ricci_clip: f64,
    /// IDX directory for `mnist-test:I` points.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train on xor, sinusoid or mnist and evaluate every snapshot.
    Train {
        #[arg(long, default_value = "sinusoid")]
        task: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Geometry of a saved 2-D network on a square grid.
    Geometry {
        #[command(flatten)]
        common: GeometryArgs,
        #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 40)]
        n: usize,
    },
    /// Geometry along the segment between two inputs.
    Slice {
        #[command(flatten)]
        common: GeometryArgs,
        /// Comma-separated coordinates or `mnist-test:I`.
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Geometry over the triangle spanned by three inputs.
    Plane {
        #[command(flatten)]
        common: GeometryArgs,
        /// Three anchors, each comma-separated coordinates or `mnist-test:I`.
        #[arg(long, num_args = 3, allow_hyphen_values = true)]
        anchors: Vec<String>,
        #[arg(long, default_value_t = 20)]
        resolution: usize,
    },
    /// Finite-width geometry of random networks against the infinite-width closed forms.
    NngpCompare {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// The χ factor and the Bayesian volume ratio after one training example.
    Chi {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Magnification of the conformally transformed RBF kernel.
    AmariWu {
        /// Bandwidth τ² of the conformal factor; required.
        #[arg(long)]
        tau2: Option<f64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Render one channel of a field CSV to PNG.
    Render {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "log_sqrt_det_g")]
        channel: String,
        #[arg(long, value_parser = ["grid", "line", "ternary"], default_value = "grid")]
        style: String,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        clip: Option<f64>,
        #[arg(long, default_value = "viridis")]
        colormap: String,
        #[arg(long, default_value_t = 400)]
        width: u32,
        #[arg(long, default_value_t = 400)]
        height: u32,
    },
    /// Print the fully resolved config for a task.
    ShowConfig {
        #[arg(long)]
        task: Option<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn resolve(args: &ConfigArgs, task: Option<Task>) -> CliResult<ExperimentConfig> {
    ExperimentConfig::resolve(args.config.as_deref(), &args.set, task)
}

fn experiment(args: &ConfigArgs, task: Option<Task>, root: &Path) -> CliResult<()> {
    let cfg = resolve(args, task)?;
    let manifest = run_experiment(&cfg, root)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&manifest.summary).expect("summary serializes")
    );
    println!(
        "wrote {} files to {}",
        manifest.files.len() + 1,
        root.join(&cfg.output_dir).display()
    );
    Ok(())
}

fn geometry(common: &GeometryArgs, points: PointSet, root: &Path) -> CliResult<()> {
    let req = GeometryRequest {
        checkpoint: common.checkpoint.clone(),
        points,
        mode: if common.mode == "full_rank" {
            VolumeMode::FullRank
        } else {
            VolumeMode::Pseudo
        },
        ricci: !common.no_ricci,
        render: (!common.no_render).then(RenderOptions::default),
        ricci_clip: (common.ricci_clip > 0.0).then_some(common.ricci_clip),
    };
    let dir = root.join(&common.name);
    let m = run_geometry(&req, &dir)?;
    println!("wrote {} files to {}", m.files.len() + 1, dir.display());
    Ok(())
}

fn point_dir(common: &GeometryArgs) -> PathBuf {
    common.mnist_dir.clone().unwrap_or_else(|| {
        let cfg = ExperimentConfig::defaults(Task::Mnist);
        mnist_dir(&cfg)
    })
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let root = cli.out.unwrap_or_else(output_root);
    match cli.command {
        Command::Run { cfg } => experiment(&cfg, None, &root),
        Command::Train { task, cfg } => {
            let task: Task = task.parse()?;
            if !task.trains() {
                return Err(CliError::config(format!("task: {task} is not a training task")));
            }
            experiment(&cfg, Some(task), &root)
        }
        Command::NngpCompare { cfg } => experiment(&cfg, Some(Task::NngpConvergence), &root),
        Command::Chi { cfg } => experiment(&cfg, Some(Task::BayesChi), &root),
        Command::AmariWu { tau2, mut cfg } => {
            if let Some(t) = tau2 {
                cfg.set.insert(0, format!("amari_wu.tau2={t:e}"));
            }
            experiment(&cfg, Some(Task::AmariWu), &root)
        }
        Command::Geometry { common, lo, hi, n } => geometry(&common, PointSet::Grid { lo, hi, n }, &root),
        Command::Slice {
            common,
            from,
            to,
            points,
        } => {
            let dir = point_dir(&common);
            let (from, to) = (parse_point(&from, &dir)?, parse_point(&to, &dir)?);
            geometry(&common, PointSet::Slice { from, to, points }, &root)
        }
        Command::Plane {
            common,
            anchors,
            resolution,
        } => {
            let dir = point_dir(&common);
            let a: Vec<Vec<f64>> = anchors.iter().map(|s| parse_point(s, &dir)).collect::<CliResult<_>>()?;
            let anchors: [Vec<f64>; 3] = a
                .try_into()
                .map_err(|_| CliError::config("anchors: need exactly three"))?;
            geometry(&common, PointSet::Plane { anchors, resolution }, &root)
        }
        Command::Render {
            csv,
            channel,
            style,
            output,
            clip,
            colormap,
            width,
            height,
        } => {
            let style: RenderStyle = style.parse()?;
            let opts = RenderOptions {
                colormap,
                clip,
                width,
                height,
            };
            let legend = render_csv(&csv, &channel, style, &opts, &output)?;
            println!("{}: colour range [{}, {}]", output.display(), legend.lo, legend.hi);
            Ok(())
        }
        Command::ShowConfig { task, cfg } => {
            let task = task.map(|t| t.parse()).transpose()?;
            print!("{}", resolve(&cfg, task.or(Some(Task::Sinusoid)))?.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
