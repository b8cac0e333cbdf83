use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::actor::{ActionSet, TripleChoice};
use crate::nn::gradcheck::{finite_difference, relative_error, sample_indices};
use crate::nn::{AdamConfig, Mlp};
use crate::physics::{SceneSpec, SphereBody, World};
use crate::replay::Transition;

fn feat(x: f64, y: f64, vx: f64, r: f64, m: f64) -> ObjectFeatures {
    ObjectFeatures::new(Vec3::new(x, y, 0.0), Vec3::new(vx, 0.0, 0.0), r, m)
}

fn three() -> Vec<ObjectFeatures> {
    vec![feat(0.0, 0.0, 0.0, 0.05, 1.0), feat(0.15, 0.0, 0.5, 0.075, 0.75), feat(0.0, 0.2, -1.0, 0.05, 0.5)]
}

fn random_net(seed: u64) -> GraphPhysicsNet {
    GraphPhysicsNet::new(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn triangle() -> World {
    World::new(SceneSpec::new(vec![
        SphereBody::resting(0.15, 0.0, 0.05, 1.0),
        SphereBody::resting(-0.075, 0.13, 0.075, 0.75),
        SphereBody::resting(-0.075, -0.13, 0.05, 0.5),
    ]))
    .unwrap()
}

/// Pushes `focus` with action `a` for one frame from rest and records the outcome.
fn observe(world: &mut World, focus: usize, relation: usize, a: usize) -> Transition {
    world.reset();
    let action = ActionSet::Cube27.action(a).unwrap();
    let features = scene_features(world);
    world.apply_action(focus, action.direction, 400.0).unwrap();
    let delta = world.step_frame();
    let truth = |k: usize| ObjectDelta { dpos: delta.dpos[k], dvel: delta.dvel[k] };
    Transition {
        features,
        choice: TripleChoice { focus, relation, action },
        force: action.direction * 400.0,
        focus_truth: truth(focus),
        relation_truth: truth(relation),
    }
}

#[test]
fn zero_encoder_gives_zero_relations() {
    let net = GraphPhysicsNet::zeros();
    let f = three();
    assert_eq!(net.encode_relation(&f[0], &f[1]), RelationVector::zeros());
    let obs = net.build_observation(&f).unwrap();
    for (o, d) in obs.objects.iter().zip(&f) {
        assert_eq!(o.state.features, *d);
        assert_eq!(o.state.aggregate, RelationVector::zeros());
    }
}

#[test]
fn two_objects_have_one_relation_each() {
    let net = random_net(1);
    let f = &three()[..2];
    let obs = net.build_observation(f).unwrap();
    assert_eq!(obs.len(), 2);
    for (i, o) in obs.objects.iter().enumerate() {
        assert_eq!(o.relations.len(), 1);
        assert_eq!(o.relations.partners, vec![1 - i]);
        assert_eq!(o.state.aggregate, o.relations.rows[0]);
        assert_eq!(o.relations.rows[0], net.encode_relation(&f[i], &f[1 - i]));
    }
}

#[test]
fn three_objects_have_six_directed_relations() {
    let net = random_net(2);
    let f = three();
    let obs = net.build_observation(&f).unwrap();
    assert_eq!(obs.objects.iter().map(|o| o.relations.len()).sum::<usize>(), 6);
    assert_eq!(obs.objects[1].relations.partners, vec![0, 2]);
    for o in &obs.objects {
        assert_eq!(o.relations.aggregate(), o.state.aggregate);
    }
    // relations are directional
    assert_ne!(net.encode_relation(&f[0], &f[1]), net.encode_relation(&f[1], &f[0]));
}

#[test]
fn observation_needs_two_objects() {
    let net = GraphPhysicsNet::zeros();
    assert!(net.build_observation(&three()[..1]).is_err());
    assert!(net.predict_all(&three()[..1]).is_err());
}

#[test]
fn relation_slots_round_trip() {
    for i in 0..5 {
        for slot in 0..4 {
            let j = slot_partner(i, slot);
            assert_ne!(i, j);
            assert_eq!(relation_slot(i, j), slot);
        }
    }
}

#[test]
fn encoder_golden_vector() {
    let net = random_net(2024);
    let f = three();
    let r = net.encode_relation(&f[0], &f[1]);
    let head: Vec<f64> = r.0[..4].to_vec();
    let golden = [0.23522677310693793, -0.5115840362394324, 0.43312253415660323, 0.46263730002209];
    for (a, b) in head.iter().zip(golden) {
        assert!((a - b).abs() < 1e-12, "{head:?}");
    }
}

#[test]
fn zero_decoders_predict_nothing() {
    let mut net = random_net(3);
    net.pos_decoder = Mlp::zeros(&DECODER_SIZES);
    net.vel_decoder = Mlp::zeros(&DECODER_SIZES);
    let obs = net.build_observation(&three()).unwrap();
    let o = &obs.objects[0];
    assert_eq!(net.predict_delta(&o.state, &o.relations).unwrap(), ObjectDelta::ZERO);
}

#[test]
fn prediction_is_additive_over_rows() {
    let net = random_net(4);
    let obs = net.build_observation(&three()).unwrap();
    let o = &obs.objects[2];
    let single = RelationMatrix { partners: vec![0], rows: vec![o.relations.rows[0].clone()] };
    let double = RelationMatrix { partners: vec![0, 0], rows: vec![o.relations.rows[0].clone(); 2] };
    let a = net.predict_delta(&o.state, &single).unwrap();
    let b = net.predict_delta(&o.state, &double).unwrap();
    assert!((b.dpos - a.dpos * 2.0).norm() < 1e-12);
    assert!((b.dvel - a.dvel * 2.0).norm() < 1e-12);

    let rest = RelationMatrix { partners: vec![1], rows: vec![o.relations.rows[1].clone()] };
    let c = net.predict_delta(&o.state, &rest).unwrap();
    let full = net.predict_delta(&o.state, &o.relations).unwrap();
    assert!((full.dpos - a.dpos - c.dpos).norm() < 1e-12);
    assert!((full.dvel - a.dvel - c.dvel).norm() < 1e-12);
}

#[test]
fn batched_prediction_matches_observation_path() {
    let net = random_net(5);
    let f = three();
    let obs = net.build_observation(&f).unwrap();
    let batched = net.predict_all(&f).unwrap();
    for (o, b) in obs.objects.iter().zip(&batched) {
        let d = net.predict_delta(&o.state, &o.relations).unwrap();
        assert!((d.dpos - b.dpos).norm() < 1e-12);
        assert!((d.dvel - b.dvel).norm() < 1e-12);
    }
}

#[test]
fn loss_examples() {
    let d = ObjectDelta { dpos: Vec3::new(0.1, -0.2, 0.3), dvel: Vec3::new(1.0, 2.0, -3.0) };
    assert_eq!(prediction_loss(&d, &d, &d, &d), 0.0);
    let truth = ObjectDelta { dpos: Vec3::new(0.003, 0.0, 0.0), dvel: Vec3::ZERO };
    let loss = prediction_loss(&ObjectDelta::ZERO, &ObjectDelta::ZERO, &truth, &ObjectDelta::ZERO);
    assert!((loss - 3e-6).abs() < 1e-18);
}

/// Written from the definition with plain arrays.
fn oracle_loss(p: [[f64; 6]; 2], t: [[f64; 6]; 2]) -> f64 {
    let mut total = 0.0;
    for k in 0..2 {
        for half in [0..3, 3..6] {
            let mut sq = 0.0;
            for c in half {
                sq += (p[k][c] - t[k][c]) * (p[k][c] - t[k][c]);
            }
            total += sq / 3.0;
        }
    }
    total
}

#[test]
fn loss_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let mut arr = || -> [[f64; 6]; 2] { [(); 2].map(|_| [(); 6].map(|_| rng.gen_range(-5.0..5.0))) };
        let (p, t) = (arr(), arr());
        let delta = |a: &[f64; 6]| ObjectDelta { dpos: Vec3::from_slice(&a[..3]), dvel: Vec3::from_slice(&a[3..]) };
        let ours = prediction_loss(&delta(&p[0]), &delta(&p[1]), &delta(&t[0]), &delta(&t[1]));
        assert!((ours - oracle_loss(p, t)).abs() < 1e-12 * ours.max(1.0));
    }
}

#[test]
fn batch_loss_matches_per_transition_loss() {
    let net = random_net(7);
    let mut w = triangle();
    let ts = [observe(&mut w, 0, 1, 26), observe(&mut w, 2, 0, 3), observe(&mut w, 0, 1, 26)];
    let refs: Vec<&Transition> = ts.iter().collect();
    let (loss, _) = loss_and_grads(&net, &refs).unwrap();
    let mean = ts.iter().map(|t| transition_loss(&net, t).unwrap()).sum::<f64>() / 3.0;
    assert!((loss - mean).abs() < 1e-12 * mean);
}

#[test]
fn shared_focus_groups_match_separate_gradients() {
    let net = random_net(11);
    let mut w = triangle();
    let ts = [observe(&mut w, 0, 1, 26), observe(&mut w, 0, 2, 26), observe(&mut w, 1, 0, 26), observe(&mut w, 0, 1, 26)];
    let refs: Vec<&Transition> = ts.iter().collect();
    let (loss, grads) = loss_and_grads(&net, &refs).unwrap();
    let mut mean_loss = 0.0;
    let mut sums = [grads.encoder.flat(), grads.pos_decoder.flat(), grads.vel_decoder.flat()].map(|v| vec![0.0; v.len()]);
    for t in &ts {
        let (l, g) = loss_and_grads(&net, &[t]).unwrap();
        mean_loss += l / 4.0;
        for (sum, part) in sums.iter_mut().zip([g.encoder.flat(), g.pos_decoder.flat(), g.vel_decoder.flat()]) {
            sum.iter_mut().zip(part).for_each(|(s, p)| *s += p / 4.0);
        }
    }
    assert!((loss - mean_loss).abs() < 1e-12 * mean_loss);
    for (sum, batched) in sums.iter().zip([grads.encoder.flat(), grads.pos_decoder.flat(), grads.vel_decoder.flat()]) {
        assert!(relative_error(&batched, sum) < 1e-10);
    }
}

#[test]
fn end_to_end_gradient_matches_finite_differences() {
    let mut net = random_net(8);
    let mut w = triangle();
    let ts = [observe(&mut w, 0, 1, 26), observe(&mut w, 1, 2, 10), observe(&mut w, 2, 0, 5)];
    let refs: Vec<&Transition> = ts.iter().collect();
    let (_, grads) = loss_and_grads(&net, &refs).unwrap();
    let loss = |n: &GraphPhysicsNet| loss_and_grads(n, &refs).unwrap().0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let idx = sample_indices(net.encoder.num_params(), 300, &mut rng);
    let fd = finite_difference(&mut net, &idx, 1e-5, |n, k| n.encoder.param_mut(k), loss);
    let flat = grads.encoder.flat();
    let analytic: Vec<f64> = idx.iter().map(|&k| flat[k]).collect();
    assert!(analytic.iter().any(|g| *g != 0.0));
    let err = relative_error(&analytic, &fd);
    assert!(err < 1e-4, "encoder relative error {err}");

    for which in 0..2 {
        let n_params = if which == 0 { net.pos_decoder.num_params() } else { net.vel_decoder.num_params() };
        let idx = sample_indices(n_params, 300, &mut rng);
        let fd = finite_difference(
            &mut net,
            &idx,
            1e-5,
            |n, k| if which == 0 { n.pos_decoder.param_mut(k) } else { n.vel_decoder.param_mut(k) },
            loss,
        );
        let flat = if which == 0 { grads.pos_decoder.flat() } else { grads.vel_decoder.flat() };
        let analytic: Vec<f64> = idx.iter().map(|&k| flat[k]).collect();
        let err = relative_error(&analytic, &fd);
        assert!(err < 1e-4, "decoder {which} relative error {err}");
    }
}

#[test]
fn translation_leaves_features_and_predictions_unchanged() {
    let net = random_net(10);
    let layout = |shift: Vec3| {
        let spec = SceneSpec::new(vec![
            SphereBody::resting(0.25 + shift.x, shift.y, 0.0625, 1.0),
            SphereBody::resting(-0.125 + shift.x, 0.25 + shift.y, 0.0625, 0.5),
            SphereBody::resting(-0.125 + shift.x, -0.25 + shift.y, 0.0625, 0.25),
        ]);
        let mut w = World::new(spec).unwrap();
        let moves = [Vec3::new(0.03125, -0.015625, 0.0078125), Vec3::new(-0.0625, 0.0, 0.125), Vec3::ZERO];
        for (k, (b, m)) in w.bodies_mut().iter_mut().zip(moves).enumerate() {
            b.position += m;
            b.velocity = Vec3::new(0.5 * k as f64, -1.25, 0.75);
        }
        scene_features(&w)
    };
    let base = layout(Vec3::ZERO);
    let moved = layout(Vec3::new(0.5, -0.75, 0.0));
    assert_eq!(base, moved);
    assert_eq!(net.predict_all(&base).unwrap(), net.predict_all(&moved).unwrap());
}

#[test]
fn zero_gradient_batch_leaves_parameters_unchanged() {
    let mut w = triangle();
    let mut t = observe(&mut w, 0, 1, 26);
    // a zero network predicts exactly the force kick and nothing else
    t.focus_truth = ObjectDelta { dpos: Vec3::ZERO, dvel: t.force * (crate::physics::FRAME_DT / 1.0) };
    t.relation_truth = ObjectDelta::ZERO;
    let mut p = Predictor::new(GraphPhysicsNet::zeros(), PredictorConfig::default());
    let loss = p.train(&[&t]).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(p.net, GraphPhysicsNet::zeros());
}

#[test]
fn overfits_one_transition() {
    let mut w = triangle();
    let t = observe(&mut w, 0, 1, 26);
    let mut p = Predictor::new(random_net(11), PredictorConfig { adam: AdamConfig::with_lr(1e-4) });
    let mut last = f64::INFINITY;
    for step in 0..20_000 {
        last = p.train(&[&t]).unwrap();
        if last < 1e-6 {
            eprintln!("converged after {step} steps");
            break;
        }
    }
    assert!(last < 1e-6, "loss {last}");
}

#[test]
fn loss_falls_on_a_small_buffer() {
    let mut w = triangle();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let buffer: Vec<Transition> = (0..100)
        .map(|_| {
            let focus = rng.gen_range(0..3);
            let relation = (focus + rng.gen_range(1..3)) % 3;
            observe(&mut w, focus, relation, rng.gen_range(0..27))
        })
        .collect();
    let mut p = Predictor::new(random_net(13), PredictorConfig::default());
    let mut losses = Vec::new();
    for _ in 0..1000 {
        let batch: Vec<&Transition> = (0..32).map(|_| &buffer[rng.gen_range(0..100)]).collect();
        losses.push(p.train(&batch).unwrap());
    }
    let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let windows: Vec<f64> = losses.chunks(200).map(avg).collect();
    for pair in windows.windows(2) {
        assert!(pair[1] < pair[0], "{windows:?}");
    }
}

#[test]
fn rollout_basics() {
    let net = random_net(14);
    let f = three();
    let forces = [Vec3::new(400.0, 0.0, 0.0), Vec3::ZERO, Vec3::ZERO];
    assert!(rollout(&net, &f, &forces, 0).is_err());

    let one = rollout(&net, &f, &forces, 1).unwrap();
    let deltas = net.predict(&f, &forces, &[0, 1, 2]).unwrap();
    let expected: Vec<_> = f.iter().zip(&deltas).map(|(x, d)| x.advanced(d)).collect();
    assert_eq!(one, vec![expected]);

    let still = rollout(&ZeroPredictor, &f, &forces, 10).unwrap();
    assert_eq!(still.len(), 10);
    assert!(still.iter().all(|frame| *frame == f));

    // forces act only on the first frame
    let long = rollout(&net, &f, &forces, 3).unwrap();
    let second = net.predict(&long[0], &[], &[0, 1, 2]).unwrap();
    let expected: Vec<_> = long[0].iter().zip(&second).map(|(x, d)| x.advanced(d)).collect();
    assert_eq!(long[1], expected);
}
