use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Mode, RunConfig};
use super::coverage::CoverageMatrix;
use super::scenes::{make_bounded_scene, make_scene};
use crate::actor::{motivate, select_action, QActor};
use crate::physics::{Vec3, World};
use crate::predictor::{prediction_loss, scene_features, DeltaPredictor, GraphPhysicsNet, ObjectDelta, Predictor};
use crate::replay::{ActorBuffer, Experience, PredictionBuffer, Transition};
use crate::Result;

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub t: usize,
    pub coverage: f64,
    /// Mean Euclidean position error over focus and relation objects (m).
    pub position_error: f64,
    /// Mean Euclidean velocity error over focus and relation objects (m/s).
    pub velocity_error: f64,
    pub predictor_loss: f64,
    pub reward: f64,
}

/// One line of `interactions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionRecord {
    pub t: usize,
    pub focus: usize,
    pub relation: usize,
    pub action: usize,
    pub loss: f64,
    pub reward: f64,
    pub target: f64,
    pub coverage: f64,
    /// True when the scene was restored to its initial layout afterwards.
    pub reset: bool,
}

/// Agent, world and buffers of one run.
pub struct Agent {
    pub config: RunConfig,
    pub world: World,
    pub predictor: Predictor,
    pub actor: QActor,
    pub actor_buffer: ActorBuffer,
    pub prediction_buffer: PredictionBuffer,
    pub coverage: CoverageMatrix,
    policy_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    t: usize,
}

/// Result of a finished run.
pub struct RunOutcome {
    pub metrics: Vec<MetricsRow>,
    pub interactions: Vec<InteractionRecord>,
    /// First interaction count at which coverage reached `halt_coverage`.
    pub halted_at: Option<usize>,
    /// Longest run of identical consecutive triples.
    pub longest_repeat: usize,
    pub agent: Agent,
}

impl Agent {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let spec = match config.mode {
            Mode::Stationary => make_scene(config.scene)?,
            Mode::Nonstationary => make_bounded_scene(config.scene, config.bounds_half_extent)?,
        };
        let world = World::new(spec)?;
        let mut init_rng = stream(config.seed, 0);
        let net = GraphPhysicsNet::new(&mut init_rng);
        let actor = QActor::new(config.actions, config.actor, &mut init_rng);
        let n = world.len();
        Ok(Self {
            predictor: Predictor::new(net, config.predictor),
            actor,
            actor_buffer: ActorBuffer::new(config.buffers.actor_capacity, n),
            prediction_buffer: PredictionBuffer::new(config.buffers.prediction_capacity),
            coverage: CoverageMatrix::new(n, config.actions),
            policy_rng: stream(config.seed, 1),
            replay_rng: stream(config.seed, 2),
            world,
            config,
            t: 0,
        })
    }

    pub fn interactions(&self) -> usize {
        self.t
    }

    /// Observe, act for one frame, learn from the outcome.
    pub fn interact(&mut self) -> Result<(InteractionRecord, MetricsRow)> {
        let features = scene_features(&self.world);
        let q = self.actor.q_tensor(&self.predictor.net.encoder, &features)?;
        let choice = select_action(&q, &mut self.policy_rng);
        self.world.apply_action(choice.focus, choice.action.direction, self.config.max_force)?;
        let force = choice.action.direction * self.config.max_force;
        let delta = self.world.step_frame();
        let truth = |k: usize| ObjectDelta { dpos: delta.dpos[k], dvel: delta.dvel[k] };
        let transition = Transition {
            features: features.clone(),
            choice,
            force,
            focus_truth: truth(choice.focus),
            relation_truth: truth(choice.relation),
        };

        let (loss, position_error, velocity_error) = self.assess(&transition)?;
        let reward = motivate(loss, &self.config.motivator)?;

        let reset = match self.config.mode {
            Mode::Stationary => true,
            Mode::Nonstationary => self.world.out_of_bounds()?,
        };
        if reset {
            self.world.reset();
        }
        let next = (!reset).then(|| scene_features(&self.world));
        let experience = Experience { features, choice, reward, next };
        let target = self.actor.targets(&self.predictor.net.encoder, &[&experience])?[0];

        self.actor_buffer.push(experience)?;
        self.prediction_buffer.push(transition);
        self.train()?;
        self.coverage.mark(&choice);
        self.t += 1;

        let coverage = self.coverage.coverage();
        let record = InteractionRecord {
            t: self.t,
            focus: choice.focus,
            relation: choice.relation,
            action: choice.action.index,
            loss,
            reward,
            target,
            coverage,
            reset,
        };
        let row = MetricsRow { t: self.t, coverage, position_error, velocity_error, predictor_loss: loss, reward };
        Ok((record, row))
    }

    /// Loss used for the reward, plus the predictor's current errors on the
    /// focus and relation objects.
    fn assess(&self, t: &Transition) -> Result<(f64, f64, f64)> {
        let mut forces = vec![Vec3::ZERO; t.features.len()];
        forces[t.choice.focus] = t.force;
        let pred = self.predictor.net.predict(&t.features, &forces, &[t.choice.focus, t.choice.relation])?;
        let truths = [t.focus_truth, t.relation_truth];
        let pos = pred.iter().zip(&truths).map(|(p, q)| (p.dpos - q.dpos).norm()).sum::<f64>() / 2.0;
        let vel = pred.iter().zip(&truths).map(|(p, q)| (p.dvel - q.dvel).norm()).sum::<f64>() / 2.0;
        let loss = match self.config.stub_loss {
            Some(c) => c,
            None => prediction_loss(&pred[0], &pred[1], &t.focus_truth, &t.relation_truth),
        };
        Ok((loss, pos, vel))
    }

    fn train(&mut self) -> Result<()> {
        let b = self.config.buffers;
        let batch = self.actor_buffer.sample(b.actor_batch, &mut self.replay_rng)?;
        self.actor.train(&self.predictor.net.encoder, &batch)?;
        if self.config.stub_loss.is_none() {
            let batch = self.prediction_buffer.sample(b.prediction_batch, &mut self.replay_rng)?;
            self.predictor.train(&batch)?;
        }
        Ok(())
    }

    /// Interacts until coverage reaches `halt_coverage` or the interaction
    /// budget is spent.
    pub fn run(mut self) -> Result<RunOutcome> {
        let mut metrics = Vec::new();
        let mut interactions = Vec::new();
        let mut halted_at = None;
        let mut longest_repeat = 0;
        let mut repeat = 0;
        let mut previous = None;
        while self.t < self.config.max_interactions {
            let (record, row) = self.interact()?;
            let choice = (record.focus, record.relation, record.action);
            repeat = if previous == Some(choice) { repeat + 1 } else { 1 };
            longest_repeat = longest_repeat.max(repeat);
            previous = Some(choice);
            if self.t % 500 == 0 {
                log::info!(
                    "t={} coverage={:.3} visited={} loss={:.4e} reward={:.4e}",
                    self.t,
                    record.coverage,
                    self.coverage.visited(),
                    record.loss,
                    record.reward
                );
            }
            let done = record.coverage >= self.config.halt_coverage;
            interactions.push(record);
            metrics.push(row);
            if done {
                halted_at = Some(self.t);
                break;
            }
        }
        Ok(RunOutcome { metrics, interactions, halted_at, longest_repeat, agent: self })
    }
}

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run_stationary(mut config: RunConfig) -> Result<RunOutcome> {
    config.mode = Mode::Stationary;
    Agent::new(config)?.run()
}

pub fn run_nonstationary(mut config: RunConfig) -> Result<RunOutcome> {
    config.mode = Mode::Nonstationary;
    Agent::new(config)?.run()
}
