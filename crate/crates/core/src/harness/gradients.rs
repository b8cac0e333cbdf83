use rand::Rng;

use super::run::stream;
use super::scenes::make_scene;
use crate::actor::{q_head_sizes, ActionSet, ActorConfig, Normalization, QActor, TripleChoice};
use crate::nn::gradcheck::{finite_difference, relative_error, sample_indices, GradCheck};
use crate::nn::{Mlp, MlpGrads};
use crate::physics::{Vec3, World};
use crate::predictor::{loss_and_grads, scene_features, GraphPhysicsNet, ObjectDelta, ObjectFeatures};
use crate::replay::{Experience, Transition};
use crate::Result;

const STEP: f64 = 1e-5;

fn compare<M>(
    name: &str,
    model: &mut M,
    analytic: &MlpGrads,
    count: usize,
    rng: &mut impl Rng,
    param: impl FnMut(&mut M, usize) -> &mut f64,
    loss: impl FnMut(&M) -> f64,
) -> GradCheck {
    let flat = analytic.flat();
    let idx = sample_indices(flat.len(), count, rng);
    let fd = finite_difference(model, &idx, STEP, param, loss);
    let picked: Vec<f64> = idx.iter().map(|&k| flat[k]).collect();
    GradCheck { network: name.to_string(), checked: idx.len(), relative_error: relative_error(&picked, &fd) }
}

/// Moving, displaced copy of the 3-object layout.
fn jittered(rng: &mut impl Rng) -> Result<Vec<ObjectFeatures>> {
    let mut world = World::new(make_scene(3)?)?;
    for b in world.bodies_mut() {
        b.position += Vec3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(0.0..0.05));
        b.velocity = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0));
    }
    Ok(scene_features(&world))
}

/// Compares analytic gradients of every network against central finite
/// differences on random data, sampling `count` coordinates per network.
pub fn gradient_checks(seed: u64, count: usize) -> Result<Vec<GradCheck>> {
    let mut rng = stream(seed, 7);
    let mut net = GraphPhysicsNet::new(&mut rng);
    let mut transitions = Vec::new();
    for _ in 0..4 {
        let features = jittered(&mut rng)?;
        let focus = rng.gen_range(0..3);
        let relation = (focus + rng.gen_range(1..3)) % 3;
        let action = ActionSet::Cube27.action(rng.gen_range(0..27))?;
        let mut delta = || ObjectDelta {
            dpos: Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)),
            dvel: Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
        };
        transitions.push(Transition {
            features,
            choice: TripleChoice { focus, relation, action },
            force: action.direction * 400.0,
            focus_truth: delta(),
            relation_truth: delta(),
        });
    }
    let batch: Vec<&Transition> = transitions.iter().collect();
    let (_, grads) = loss_and_grads(&net, &batch)?;
    let loss = |n: &GraphPhysicsNet| loss_and_grads(n, &batch).map(|r| r.0).unwrap_or(f64::NAN);
    let mut out = vec![
        compare("encoder", &mut net, &grads.encoder, count, &mut rng, |n, k| n.encoder.param_mut(k), loss),
        compare("pos_decoder", &mut net, &grads.pos_decoder, count, &mut rng, |n, k| n.pos_decoder.param_mut(k), loss),
        compare("vel_decoder", &mut net, &grads.vel_decoder, count, &mut rng, |n, k| n.vel_decoder.param_mut(k), loss),
    ];

    for set in [ActionSet::Cube27, ActionSet::Fine75, ActionSet::Planar9] {
        for norm in [Normalization::Global, Normalization::PerSlot] {
            let cfg = ActorConfig { normalization: norm, ..ActorConfig::default() };
            let actor = QActor::with_head(Mlp::new(&q_head_sizes(set), &mut rng), set, cfg);
            let mut experiences = Vec::new();
            for k in 0..4 {
                let features = jittered(&mut rng)?;
                let focus = rng.gen_range(0..3);
                let relation = (focus + rng.gen_range(1..3)) % 3;
                let next = (k % 2 == 0).then(|| jittered(&mut rng)).transpose()?;
                experiences.push(Experience {
                    features,
                    choice: TripleChoice { focus, relation, action: set.action(rng.gen_range(0..set.len()))? },
                    reward: rng.gen_range(0.0..1.0),
                    next,
                });
            }
            let batch: Vec<&Experience> = experiences.iter().collect();
            // targets bootstrap from the head itself but are held fixed, as in training
            let targets = actor.targets(&net.encoder, &batch)?;
            let (_, grads) = actor.loss_and_grads(&net.encoder, &batch)?;
            let encoder = &net.encoder;
            let loss = |head: &Mlp| {
                let probe = QActor::with_head(head.clone(), set, cfg);
                batch
                    .iter()
                    .zip(&targets)
                    .map(|(e, y)| {
                        let q = probe.q_tensor(encoder, &e.features).expect("valid snapshot");
                        (q.normalized_at(&e.choice) - y).powi(2)
                    })
                    .sum::<f64>()
                    / batch.len() as f64
            };
            let mut head = actor.head.clone();
            let name = format!("q_head_{}_{}", set.len(), if norm == Normalization::Global { "global" } else { "per_slot" });
            out.push(compare(&name, &mut head, &grads, count, &mut rng, |h, k| h.param_mut(k), loss));
        }
    }
    Ok(out)
}
