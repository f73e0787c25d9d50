//! `ocrl`: command-line front end for the benchmark engine.

use std::fs;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ocrl_core::dataset::{generate_dataset, DatasetSpec};
use ocrl_core::harness::{evaluate, ood_sweep, protocol, AgentSpec, HarnessError, CSV_HEADER};
use ocrl_core::metrics::{fg_ari, mse};
use ocrl_core::params::{apply_shift, ShiftSpec, TaskKind, TaskParams};
use ocrl_core::render::{rasterize_scene, rasterize_segmentation, LabelGrid, RgbImage, OBS_RESOLUTION};
use ocrl_core::sampler::sample_scene;

#[derive(Parser)]
#[command(name = "ocrl", version, about = "Object-centric RL benchmark engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an agent for N consecutive seeds and report the success rate.
    Eval(EvalArgs),
    /// Evaluate an agent across distribution shifts.
    OodSweep(SweepArgs),
    /// Write the pretraining image dataset.
    GenDataset(DatasetArgs),
    /// Render one scene to PNG.
    Render(RenderArgs),
    /// Serve the JSON-lines environment protocol.
    Serve(ServeArgs),
    /// Score images or label maps.
    #[command(subcommand)]
    Metric(MetricCommand),
}

#[derive(Args)]
struct TaskArgs {
    /// Task name (object_goal, object_interaction, object_comparison,
    /// property_comparison, pretraining).
    #[arg(long, required_unless_present = "config")]
    task: Option<TaskKind>,
    /// Parameter file (key = value lines); replaces the task defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl TaskArgs {
    fn params(&self) -> Result<TaskParams> {
        let params = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                TaskParams::from_config_str(&text)?
            }
            None => TaskParams::defaults(self.task.expect("clap enforces --task")),
        };
        if let (Some(task), true) = (self.task, self.config.is_some()) {
            if task != params.kind {
                bail!("--task {task} disagrees with config kind {}", params.kind);
            }
        }
        params.validate()?;
        Ok(params)
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AgentKind {
    Oracle,
    Random,
    External,
}

#[derive(Args)]
struct AgentArgs {
    #[arg(long, value_enum)]
    agent: AgentKind,
    /// Random-policy stream offset.
    #[arg(long, default_value_t = 0)]
    agent_seed: u64,
    /// Command line of the external agent process (with --agent external).
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    agent_cmd: Vec<String>,
}

impl AgentArgs {
    fn spec(&self) -> Result<AgentSpec> {
        Ok(match self.agent {
            AgentKind::Oracle => AgentSpec::Oracle,
            AgentKind::Random => AgentSpec::Random { agent_seed: self.agent_seed },
            AgentKind::External => {
                if self.agent_cmd.is_empty() {
                    bail!("--agent external needs --agent-cmd");
                }
                AgentSpec::External { command: self.agent_cmd.clone() }
            }
        })
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    agent: AgentArgs,
    #[arg(long)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distribution shift, e.g. count:5, colors:2, shapes:1, stress.
    #[arg(long)]
    shift: Option<ShiftSpec>,
    /// Results CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    agent: AgentArgs,
    #[arg(long)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated shifts; defaults to every color level for the task.
    #[arg(long, value_delimiter = ',')]
    shifts: Option<Vec<ShiftSpec>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    train: usize,
    #[arg(long)]
    val: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    masks: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = OBS_RESOLUTION)]
    resolution: usize,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    shift: Option<ShiftSpec>,
    #[arg(long, default_value_t = OBS_RESOLUTION)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the segmentation label map (8-bit grayscale PNG).
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ServeArgs {
    /// Listen on 127.0.0.1:PORT, one session per connection.
    #[arg(long)]
    port: Option<u16>,
    /// Run a single session over stdin/stdout.
    #[arg(long)]
    stdio: bool,
}

#[derive(Subcommand)]
enum MetricCommand {
    /// Foreground adjusted Rand index of two label PNGs.
    FgAri {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Mean squared error of two RGB PNGs on the 0..255 scale.
    Mse {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn shifted(params: TaskParams, shift: Option<ShiftSpec>) -> Result<TaskParams> {
    Ok(match shift {
        Some(s) => apply_shift(&params, s)?,
        None => params,
    })
}

fn read(path: &PathBuf) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &PathBuf, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(args) => {
            let params = shifted(args.task.params()?, args.shift)?;
            let agent = args.agent.spec()?;
            let eval = match evaluate(&params, &agent, args.episodes, args.seed) {
                Err(HarnessError::Aborted { seed, completed, source }) => {
                    eprintln!("{} episodes completed before the failure", completed.len());
                    bail!("episode seed {seed}: {source}");
                }
                other => other?,
            };
            let s = &eval.summary;
            let csv = format!("{CSV_HEADER}\n{}\n", s.csv_row());
            print!("{csv}");
            if let Some(f) = s.unsolvable_fraction {
                println!("unsolvable_fraction,{f:.6}");
            }
            if let Some(out) = &args.out {
                write(out, csv)?;
            }
        }
        Command::OodSweep(args) => {
            let base = args.task.params()?;
            let shifts = args.shifts.unwrap_or_else(|| {
                let levels = if base.kind.is_comparison() { 0..=2 } else { 0..=3 };
                levels.map(ShiftSpec::UnseenColors).collect()
            });
            let report = ood_sweep(&base, &shifts, &args.agent.spec()?, args.episodes, args.seed)?;
            print!("{}", report.to_table());
            if let Some(out) = &args.out {
                write(out, report.to_csv())?;
            }
        }
        Command::GenDataset(args) => {
            let spec = DatasetSpec {
                n_train: args.train,
                n_val: args.val,
                resolution: args.resolution,
                emit_masks: args.masks,
                base_seed: args.seed,
                ..DatasetSpec::default()
            };
            let manifest = generate_dataset(&spec, &args.out)?;
            println!("{}", serde_json::to_string_pretty(&manifest)?);
        }
        Command::Render(args) => {
            let params = shifted(args.task.params()?, args.shift)?;
            let scene = sample_scene(&params, args.seed)?;
            write(&args.out, rasterize_scene(&scene, args.resolution)?.to_png()?)?;
            if let Some(mask) = &args.mask {
                write(mask, rasterize_segmentation(&scene, args.resolution)?.to_png()?)?;
            }
        }
        Command::Serve(args) => match args.port {
            Some(port) => {
                let listener = TcpListener::bind(("127.0.0.1", port))
                    .with_context(|| format!("binding port {port}"))?;
                eprintln!("listening on {}", listener.local_addr()?);
                protocol::serve_tcp(listener)?;
            }
            None => protocol::serve_stdio()?,
        },
        Command::Metric(MetricCommand::FgAri { pred, truth }) => {
            let pred = LabelGrid::from_png(&read(&pred)?)?;
            let truth = LabelGrid::from_png(&read(&truth)?)?;
            println!("{:.6}", fg_ari(&pred, &truth)?);
        }
        Command::Metric(MetricCommand::Mse { a, b }) => {
            let a = RgbImage::from_png(&read(&a)?)?;
            let b = RgbImage::from_png(&read(&b)?)?;
            println!("{:.6}", mse(&a, &b)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
