use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::run::RunOutcome;
use crate::actor::{q_head_sizes, ActionSet, QActor};
use crate::nn::{checkpoint, Mlp};
use crate::predictor::GraphPhysicsNet;
use crate::{Error, Result};

/// Averages over the final interactions of a run.
const SUMMARY_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub final_coverage: f64,
    pub interactions: usize,
    pub halted_at: Option<usize>,
    pub visited_triples: usize,
    pub longest_repeat: usize,
    pub resets: usize,
    /// Means over the last (up to) 100 interactions.
    pub mean_position_error: f64,
    pub mean_velocity_error: f64,
    pub mean_predictor_loss: f64,
    pub reward_reading: String,
    pub config: RunConfig,
}

impl Summary {
    pub fn of(outcome: &RunOutcome) -> Self {
        let m = &outcome.metrics;
        let tail = &m[m.len().saturating_sub(SUMMARY_WINDOW)..];
        let mean = |f: fn(&super::run::MetricsRow) -> f64| {
            if tail.is_empty() {
                0.0
            } else {
                tail.iter().map(f).sum::<f64>() / tail.len() as f64
            }
        };
        let config = outcome.agent.config.clone();
        Self {
            final_coverage: m.last().map_or(0.0, |r| r.coverage),
            interactions: m.len(),
            halted_at: outcome.halted_at,
            visited_triples: outcome.agent.coverage.visited(),
            longest_repeat: outcome.longest_repeat,
            resets: outcome.interactions.iter().filter(|r| r.reset).count(),
            mean_position_error: mean(|r| r.position_error),
            mean_velocity_error: mean(|r| r.velocity_error),
            mean_predictor_loss: mean(|r| r.predictor_loss),
            reward_reading: reward_reading(&config),
            config,
        }
    }
}

/// How the reward bound was interpreted, for run metadata.
pub fn reward_reading(config: &RunConfig) -> String {
    match (config.stub_loss, config.motivator.upper_bound) {
        (Some(c), _) => format!("constant stub loss {c}"),
        (None, Some(u)) => format!("reward = min(phi(loss) / {u}, 1)"),
        (None, None) => "unbounded: reward = min(phi(loss), 1)".into(),
    }
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `metrics.csv`, `interactions.csv`, `coverage.csv`, `summary.json`
/// and `checkpoint/` into `dir`.
pub fn write_run(dir: impl AsRef<Path>, outcome: &RunOutcome) -> Result<Summary> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_csv(dir.join("metrics.csv"), &outcome.metrics)?;
    write_csv(dir.join("interactions.csv"), &outcome.interactions)?;

    #[derive(Serialize)]
    struct CoverageRow {
        t: usize,
        coverage: f64,
    }
    let coverage: Vec<CoverageRow> =
        outcome.metrics.iter().map(|r| CoverageRow { t: r.t, coverage: r.coverage }).collect();
    write_csv(dir.join("coverage.csv"), &coverage)?;

    let summary = Summary::of(outcome);
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    save_models(dir.join("checkpoint"), &outcome.agent.config, outcome.agent.interactions() as u64, &outcome.agent.predictor.net, &outcome.agent.actor)?;
    Ok(summary)
}

pub fn save_models(
    dir: impl AsRef<Path>,
    config: &RunConfig,
    step: u64,
    net: &GraphPhysicsNet,
    actor: &QActor,
) -> Result<()> {
    let metadata = json!({
        "scene": config.scene,
        "actions": config.actions.len(),
        "reward_reading": reward_reading(config),
        "config": config,
    });
    checkpoint::save(
        dir,
        config.seed,
        step,
        metadata,
        &[
            ("encoder", &net.encoder),
            ("pos_decoder", &net.pos_decoder),
            ("vel_decoder", &net.vel_decoder),
            ("q_head", &actor.head),
        ],
    )?;
    Ok(())
}

/// Networks restored from a checkpoint written by [`save_models`].
pub struct LoadedModels {
    pub net: GraphPhysicsNet,
    pub q_head: Option<Mlp>,
    pub scene: usize,
    pub actions: ActionSet,
    pub manifest: checkpoint::Manifest,
}

pub fn load_models(dir: impl AsRef<Path>) -> Result<LoadedModels> {
    let (manifest, nets) = checkpoint::load(dir)?;
    let take = |name: &str| nets.iter().find(|(n, _)| n == name).map(|(_, m)| m.clone());
    let missing = |name: &str| Error::Format(format!("checkpoint has no {name} network"));
    let net = GraphPhysicsNet {
        encoder: take("encoder").ok_or_else(|| missing("encoder"))?,
        pos_decoder: take("pos_decoder").ok_or_else(|| missing("pos_decoder"))?,
        vel_decoder: take("vel_decoder").ok_or_else(|| missing("vel_decoder"))?,
    };
    let q_head = take("q_head");
    let scene = manifest.metadata["scene"].as_u64().unwrap_or(3) as usize;
    let actions = ActionSet::from_count(manifest.metadata["actions"].as_u64().unwrap_or(27) as usize)?;
    if let Some(h) = &q_head {
        if h.sizes() != q_head_sizes(actions) {
            return Err(Error::Format("Q head does not match the recorded action set".into()));
        }
    }
    Ok(LoadedModels { net, q_head, scene, actions, manifest })
}
