//! Command-line front end: `train`, `eval`, `render-depth` and `plot`.

pub mod plot;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use deeprotor::config::{ArenaSource, RunConfig, SEED_ENV_VAR};
use deeprotor::metrics::{format_row, METRICS_HEADER};
use deeprotor::rl::{evaluate, train, METRICS_FILE};
use deeprotor::sensor::{render_depth, write_pgm, CameraPose};

pub const EVAL_METRICS_FILE: &str = "eval_metrics.csv";

#[derive(Debug, Parser)]
#[command(name = "deeprotor", version, about = "Depth-camera quadcopter navigation with deep Q-learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an agent and log per-episode metrics.
    Train(TrainArgs),
    /// Run greedy episodes with a saved checkpoint.
    Eval(EvalArgs),
    /// Render one depth image to a PGM file.
    RenderDepth(RenderArgs),
    /// Draw SVG charts from a metrics CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides both the config seed and the environment variable.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Defaults to the arena the model was trained on.
    #[arg(long)]
    arena: Option<String>,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    arena: String,
    /// `x,y,z,yaw` with yaw in degrees; `start` uses the arena start pose.
    #[arg(long, allow_hyphen_values = true)]
    pose: String,
    #[arg(long)]
    out: PathBuf,
    /// Camera and vehicle settings; defaults apply without it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    window: usize,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV_VAR).ok();
    match dispatch(cli.command, env_seed.as_deref()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(command: Command, env_seed: Option<&str>) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a, env_seed),
        Command::Eval(a) => cmd_eval(a),
        Command::RenderDepth(a) => cmd_render(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn cmd_train(a: TrainArgs, env_seed: Option<&str>) -> Result<()> {
    let mut cfg = RunConfig::from_file(&a.config)?;
    cfg.apply_seed_override(a.seed, env_seed)?;
    if let Some(out) = a.out {
        cfg.out = Some(out);
    }
    let out = cfg.out.clone().ok_or_else(|| anyhow!("no output directory: pass --out or set `out` in the config"))?;
    let report = train(&cfg, &out, a.resume.as_deref())?;
    let [goal, collision, deviation, away, limit] = report.terminal_counts;
    println!(
        "trained {} episodes (through episode {}) in {:.1}s",
        report.episodes_run,
        report.final_episode,
        report.wall_time.as_secs_f64()
    );
    println!("terminals: goal {goal}, collision {collision}, deviation {deviation}, away {away}, step_limit {limit}");
    if let Some(best) = report.best_moving_avg_reward {
        println!("best moving-average reward: {best:.4}");
    }
    println!("metrics: {}", out.join(METRICS_FILE).display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let bytes = fs::read(&a.model).with_context(|| format!("cannot read {}", a.model.display()))?;
    let arena = a.arena.as_deref().map(str::parse::<ArenaSource>).transpose().map_err(|e| anyhow!(e))?;
    let report = evaluate(&bytes, arena, a.episodes, a.seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let path = a.out.join(EVAL_METRICS_FILE);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
    writeln!(w, "{METRICS_HEADER}")?;
    for row in &report.rows {
        writeln!(w, "{}", format_row(row))?;
    }
    w.flush()?;
    let goals = report.rows.iter().filter(|r| r.terminal == deeprotor::env::Terminal::Goal).count();
    println!("evaluated {} episodes: {goals} reached the goal", report.rows.len());
    println!("metrics: {}", path.display());
    Ok(())
}

fn parse_pose(text: &str, start: Option<CameraPose>) -> Result<CameraPose> {
    if text == "start" {
        return start.ok_or_else(|| anyhow!("no start pose available"));
    }
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| anyhow!("bad pose component `{p}`")))
        .collect::<Result<_>>()?;
    let [x, y, z, yaw] = parts[..] else {
        bail!("pose must be x,y,z,yaw (got {} values)", parts.len());
    };
    if parts.iter().any(|v| !v.is_finite()) {
        bail!("pose components must be finite");
    }
    Ok(CameraPose { x, y, z, yaw })
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    cfg.arena = a.arena.parse::<ArenaSource>().map_err(|e| anyhow!(e))?;
    let arenas = cfg.load_arenas()?;
    let arena = &arenas[0];
    let start = CameraPose { x: arena.start.x, y: arena.start.y, z: cfg.env.vehicle.altitude, yaw: arena.start.yaw };
    let pose = parse_pose(&a.pose, Some(start))?;
    let camera = &cfg.env.camera;
    let img = render_depth(arena, pose, camera);
    write_pgm_file(&a.out, &img, camera.max_range)?;
    println!("wrote {}x{} depth image to {}", img.width, img.height, a.out.display());
    Ok(())
}

fn write_pgm_file(path: &Path, img: &deeprotor::sensor::DepthImage, max_range: f64) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    write_pgm(&mut w, img, max_range)?;
    w.flush()?;
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    if a.window == 0 {
        bail!("--window must be positive");
    }
    for p in plot::emit_plots(&a.metrics, &a.out, a.window)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_parsing() {
        let p = parse_pose("1,-2.5,3,90", None).unwrap();
        assert_eq!((p.x, p.y, p.z, p.yaw), (1.0, -2.5, 3.0, 90.0));
        assert!(parse_pose("1,2,3", None).is_err());
        assert!(parse_pose("1,2,x,4", None).is_err());
        assert!(parse_pose("start", None).is_err());
    }
}
