use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use curiophys::actor::ActionSet;
use curiophys::harness::{self, Mode, RunConfig, ROLLOUT_HORIZONS};

#[derive(Parser)]
#[command(name = "curiophys", version, about = "Curiosity-driven physics exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bandit loop: the scene is reset after every interaction.
    Stationary(RunArgs),
    /// Sequential loop: the scene is reset only when a body leaves the arena.
    Nonstationary(RunArgs),
    /// One-frame prediction errors for single pushes.
    EvalOneFrame(EvalArgs),
    /// One-frame prediction errors with several objects pushed at once.
    EvalGeneralize(EvalArgs),
    /// Multi-frame rollout errors on a seeded collision suite.
    EvalRollout(EvalArgs),
    /// Finite-difference gradient checks of every network.
    Gradcheck(CommonArgs),
    /// Print a scene layout as JSON.
    SceneDump(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scene layout (3, 6 or 8 objects).
    #[arg(long)]
    scene: Option<usize>,
    /// Action set size (27, 75 or 9).
    #[arg(long)]
    actions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (or file for scene-dump).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    max_interactions: Option<usize>,
    /// Stop once coverage reaches this fraction.
    #[arg(long)]
    halt_coverage: Option<f64>,
    /// Reward upper bound U; omit for the configured value.
    #[arg(long)]
    upper_bound: Option<f64>,
    /// Reward = min(phi(loss), 1), with no upper bound.
    #[arg(long, conflicts_with = "upper_bound")]
    unbounded: bool,
    /// Use a constant loss instead of the predictor's.
    #[arg(long)]
    stub_loss: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint directory written by a run.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Number of cases (defaults: 1000 one-frame, 100 generalization, 51 rollout).
    #[arg(long)]
    cases: Option<usize>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Stationary(a) => run(a, Mode::Stationary),
        Command::Nonstationary(a) => run(a, Mode::Nonstationary),
        Command::EvalOneFrame(a) => eval(a, EvalKind::OneFrame),
        Command::EvalGeneralize(a) => eval(a, EvalKind::Generalize),
        Command::EvalRollout(a) => eval(a, EvalKind::Rollout),
        Command::Gradcheck(a) => gradcheck(a),
        Command::SceneDump(a) => scene_dump(a),
    }
}

fn base_config(c: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.scene {
        cfg.scene = s;
    }
    if let Some(a) = c.actions {
        cfg.actions = ActionSet::from_count(a)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(a: RunArgs, mode: Mode) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    cfg.mode = mode;
    if a.common.actions.is_none() && a.common.config.is_none() && mode == Mode::Nonstationary {
        cfg.actions = ActionSet::Planar9;
    }
    if let Some(m) = a.max_interactions {
        cfg.max_interactions = m;
    }
    if let Some(h) = a.halt_coverage {
        cfg.halt_coverage = h;
    }
    if a.upper_bound.is_some() {
        cfg.motivator.upper_bound = a.upper_bound;
    }
    if a.unbounded {
        cfg.motivator.upper_bound = None;
    }
    if a.stub_loss.is_some() {
        cfg.stub_loss = a.stub_loss;
    }
    let out = a.common.out.clone().or(cfg.out_dir.clone()).unwrap_or_else(|| {
        let tag = if mode == Mode::Stationary { "stationary" } else { "nonstationary" };
        PathBuf::from(format!("runs/{tag}-{}obj-{}act-seed{}", cfg.scene, cfg.actions.len(), cfg.seed))
    });
    cfg.out_dir = Some(out.clone());
    cfg.validate()?;
    let outcome = harness::Agent::new(cfg)?.run()?;
    let summary = harness::write_run(&out, &outcome)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    log::info!("outputs written to {}", out.display());
    Ok(())
}

enum EvalKind {
    OneFrame,
    Generalize,
    Rollout,
}

fn eval(a: EvalArgs, kind: EvalKind) -> Result<()> {
    let models = harness::load_models(&a.checkpoint)
        .with_context(|| format!("loading checkpoint {}", a.checkpoint.display()))?;
    let scene = a.common.scene.unwrap_or(models.scene);
    let actions = match a.common.actions {
        Some(n) => ActionSet::from_count(n)?,
        None => models.actions,
    };
    let seed = a.common.seed.unwrap_or(0);
    let spec = harness::make_scene(scene)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_force = RunConfig::default().max_force;
    let out = a.common.out.clone();
    match kind {
        EvalKind::OneFrame | EvalKind::Generalize => {
            let report = if matches!(kind, EvalKind::OneFrame) {
                harness::eval_one_frame(&models.net, &spec, actions, max_force, a.cases.unwrap_or(1000), &mut rng)?
            } else {
                harness::eval_generalization(&models.net, &spec, actions, max_force, a.cases.unwrap_or(100), &mut rng)?
            };
            if let Some(dir) = &out {
                std::fs::create_dir_all(dir)?;
                harness::write_csv(dir.join("cases.csv"), &report.cases)?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "cases": report.cases.len(),
                    "position_error": report.position_error,
                    "velocity_error": report.velocity_error,
                })
            );
        }
        EvalKind::Rollout => {
            let horizon = *ROLLOUT_HORIZONS.last().expect("non-empty");
            let suite = harness::collision_suite(&spec, actions, max_force, a.cases.unwrap_or(51), horizon, &mut rng)?;
            let errors = harness::eval_rollout(&models.net, &spec, &suite, &ROLLOUT_HORIZONS)?;
            if let Some(dir) = &out {
                std::fs::create_dir_all(dir)?;
                harness::write_csv(dir.join("rollout.csv"), &errors)?;
            }
            println!("{}", serde_json::to_string_pretty(&errors)?);
        }
    }
    Ok(())
}

fn gradcheck(a: CommonArgs) -> Result<()> {
    let seed = a.seed.unwrap_or(0);
    let mut failed = false;
    for check in harness::gradient_checks(seed, 200)? {
        let ok = check.passed(1e-4);
        failed |= !ok;
        println!(
            "{:<22} checked {:>4}  relative error {:.3e}  {}",
            check.network,
            check.checked,
            check.relative_error,
            if ok { "ok" } else { "FAILED" }
        );
    }
    if failed {
        bail!("gradient check failed");
    }
    Ok(())
}

fn scene_dump(a: CommonArgs) -> Result<()> {
    let cfg = base_config(&a)?;
    let spec = harness::make_scene(cfg.scene)?;
    let text = spec.to_json()?;
    match &a.out {
        Some(p) => write_file(p, &text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}
