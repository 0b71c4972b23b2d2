//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::Rng;

use erl_quadruped::cem::{
    self, cem_rl_generation, cem_update, elite_weights, evaluate_policy, CemConfig, CemState,
};
use erl_quadruped::env::{
    self, contact_forces, make_terrain, Environment, Normalizers, QuadrupedEnv, RobotConfig,
    RobotState, SlidingMass, SlidingMassConfig, TerrainKind,
};
use erl_quadruped::harness::{self, cli, summarize, Algorithm, RunConfig};
use erl_quadruped::net::{init_network, Activation, LayerSpec, NetworkSpec, ParamVector};
use erl_quadruped::replay::{ReplayBuffer, Transition};
use erl_quadruped::rl::{
    bootstrap_targets, exploration_action, next_q_values, random_action, smoothed_target_actions,
    td3_critic_target, ActorCritic, DdpgLearner, RlHyperparams,
};
use erl_quadruped::seed::{derive, rng, stream};

fn verdict(n: u32, pass: bool, detail: &str) {
    println!(
        "criterion {n}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn check(n: u32, pass: bool, detail: String) {
    verdict(n, pass, &detail);
    assert!(pass, "criterion {n} failed: {detail}");
}

// ---------------------------------------------------------------- 1

fn random_small_net(r: &mut impl Rng) -> ParamVector {
    loop {
        let n_in = r.random_range(1..=4);
        let hidden: Vec<usize> = (0..r.random_range(1..=2))
            .map(|_| r.random_range(1..=5))
            .collect();
        let n_out = r.random_range(1..=3);
        let mut sizes = vec![n_in];
        sizes.extend(&hidden);
        sizes.push(n_out);
        let critic_like = r.random_bool(0.5);
        let layers: Vec<LayerSpec> = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let last = i + 2 == sizes.len();
                let act = if last {
                    if critic_like {
                        Activation::Linear
                    } else {
                        Activation::ScaledTanh { bound: 0.7 }
                    }
                } else {
                    match r.random_range(0..3) {
                        0 => Activation::Tanh,
                        1 => Activation::Linear,
                        _ => Activation::ScaledTanh { bound: 1.5 },
                    }
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect();
        let spec = NetworkSpec::new(layers).unwrap();
        if spec.param_count() > 64 {
            continue;
        }
        let values = (0..spec.param_count())
            .map(|_| r.random_range(-1.2..1.2))
            .collect();
        return ParamVector::unflatten(&spec, values).unwrap();
    }
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-10 {
        diff
    } else {
        diff / scale
    }
}

#[test]
fn criterion_1_gradient_oracle() {
    let start = Instant::now();
    let mut r = rng(101);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let net = random_small_net(&mut r);
        let x: Vec<f64> = (0..net.spec().input_size())
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        let w: Vec<f64> = (0..net.spec().output_size())
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        let loss = |p: &ParamVector, x: &[f64]| {
            p.forward(x)
                .unwrap()
                .iter()
                .zip(&w)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        let (g_param, g_input) = net.backward(&x, &w).unwrap();

        let mut fd_param = Vec::with_capacity(net.len());
        for i in 0..net.len() {
            let mut plus = net.clone();
            plus.values_mut()[i] += h;
            let mut minus = net.clone();
            minus.values_mut()[i] -= h;
            fd_param.push((loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h));
        }
        let mut fd_input = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            fd_input.push((loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h));
        }
        worst = worst
            .max(relative_error(&g_param, &fd_param))
            .max(relative_error(&g_input, &fd_input));
    }
    let elapsed = start.elapsed();
    check(
        1,
        worst < 1e-4 && elapsed < Duration::from_secs(10),
        format!("worst relative error {worst:.2e} over 100 nets in {elapsed:.2?}"),
    );
}

// ---------------------------------------------------------------- 2

/// Independent evaluation of the locomotion reward from raw quantities.
#[allow(clippy::too_many_arguments)]
fn reward_oracle(
    vx: f64,
    ts: f64,
    tmax: f64,
    dz: f64,
    dy: f64,
    roll: f64,
    pitch: f64,
    q: &[f64],
    q_prev: &[f64],
) -> f64 {
    let mut joint = 0.0;
    for i in 0..q.len() {
        joint += (q[i].abs() - q_prev[i].abs()).abs();
    }
    75.0 * vx + 25.0 * ts / tmax
        - 10.0 * dz.abs()
        - 5.0 * dy.abs()
        - 5.0 * roll.abs()
        - 5.0 * pitch.abs()
        - 0.05 * joint
}

fn plain_state() -> RobotState {
    let reference = Vector3::new(0.0, 0.0, 0.22);
    RobotState {
        torso_position: reference,
        torso_orientation: Vector3::zeros(),
        linear_velocity: Vector3::zeros(),
        angular_velocity: Vector3::zeros(),
        joint_angles: [0.0; 8],
        joint_velocities: [0.0; 8],
        previous_joint_angles: [0.0; 8],
        foot_forces: [[0.0; 3]; 4],
        timestep: 0,
        reference_position: reference,
    }
}

#[test]
fn criterion_2_reward_oracle() {
    let mut cases: Vec<(RobotState, usize, f64)> = Vec::new();

    cases.push((plain_state(), 1000, 0.0));
    let mut s = plain_state();
    s.linear_velocity.x = 0.1;
    s.timestep = 100;
    cases.push((s, 1000, 10.0));
    let mut s = plain_state();
    s.torso_position.z -= 0.05;
    s.torso_orientation.x = 0.1;
    cases.push((s, 1000, -1.0));
    let mut s = plain_state();
    s.joint_angles[3] = 0.2;
    s.previous_joint_angles[3] = -0.2;
    cases.push((s, 1000, 0.0));

    let mut r = rng(202);
    while cases.len() < 20 {
        let mut s = plain_state();
        s.linear_velocity = Vector3::new(
            r.random_range(-1.0..2.0),
            r.random_range(-0.5..0.5),
            r.random_range(-0.5..0.5),
        );
        s.torso_position += Vector3::new(
            r.random_range(0.0..3.0),
            r.random_range(-0.2..0.2),
            r.random_range(-0.1..0.1),
        );
        s.torso_orientation = Vector3::new(
            r.random_range(-0.5..0.5),
            r.random_range(-0.5..0.5),
            r.random_range(-3.0..3.0),
        );
        for i in 0..8 {
            s.joint_angles[i] = r.random_range(-1.5..1.5);
            s.previous_joint_angles[i] = r.random_range(-1.5..1.5);
        }
        let t_max = r.random_range(50..2000);
        s.timestep = r.random_range(0..=t_max);
        let d = s.torso_position - s.reference_position;
        let expected = reward_oracle(
            s.linear_velocity.x,
            s.timestep as f64,
            t_max as f64,
            d.z,
            d.y,
            s.torso_orientation.x,
            s.torso_orientation.y,
            &s.joint_angles,
            &s.previous_joint_angles,
        );
        cases.push((s, t_max, expected));
    }
    let worst_case = cases
        .iter()
        .map(|(s, t, e)| (env::compute_reward(s, *t) - e).abs())
        .fold(0.0, f64::max);

    let t_max = 300;
    let terrain = make_terrain(TerrainKind::Flat, 0, 0.0, 0.25).unwrap();
    let mut sim = QuadrupedEnv::new(
        terrain,
        RobotConfig::default(),
        Normalizers::default(),
        t_max,
    )
    .unwrap();
    let mut steps = 0;
    let mut episode = 0;
    let mut worst_decomp: f64 = 0.0;
    sim.reset(0).unwrap();
    while steps < 10_000 {
        let a = random_action(8, 0.7, derive(5, stream::WARMUP_ACTION, steps as u64));
        let result = sim.step_full(&a).unwrap().clone();
        let s = sim.state().unwrap();
        let d = s.torso_position - s.reference_position;
        let oracle = reward_oracle(
            s.linear_velocity.x,
            s.timestep as f64,
            t_max as f64,
            d.z,
            d.y,
            s.torso_orientation.x,
            s.torso_orientation.y,
            &s.joint_angles,
            &s.previous_joint_angles,
        );
        let terms = result.terms;
        let pieces = [
            (terms.forward, 75.0 * s.linear_velocity.x),
            (terms.survival, 25.0 * s.timestep as f64 / t_max as f64),
            (terms.height, -10.0 * d.z.abs()),
            (terms.lateral, -5.0 * d.y.abs()),
            (terms.roll, -5.0 * s.torso_orientation.x.abs()),
            (terms.pitch, -5.0 * s.torso_orientation.y.abs()),
        ];
        for (got, want) in pieces {
            worst_decomp = worst_decomp.max((got - want).abs());
        }
        worst_decomp = worst_decomp
            .max((terms.as_array().iter().sum::<f64>() - result.reward).abs())
            .max((oracle - result.reward).abs());
        steps += 1;
        if result.done {
            episode += 1;
            sim.reset(episode).unwrap();
        }
    }
    check(
        2,
        worst_case <= 1e-12 && worst_decomp <= 1e-12,
        format!(
            "20 hand states max error {worst_case:.1e}; decomposition max error {worst_decomp:.1e} over {steps} steps ({episode} resets)"
        ),
    );
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_3_td3_target_properties() {
    let mut r = rng(303);
    let (obs, act) = (3, 2);
    let actor_spec = NetworkSpec::actor(obs, act, &[6], 0.7).unwrap();
    let critic_spec = NetworkSpec::critic(obs, act, &[6]).unwrap();
    let mut violations = 0;
    let mut done_mismatch = 0;
    let mut done_items = 0;
    for b in 0..1000u64 {
        let target_actor = init_network(&actor_spec, derive(b, stream::ACTOR_INIT, 0)).unwrap();
        let c1 = init_network(&critic_spec, derive(b, stream::CRITIC_INIT, 0)).unwrap();
        let c2 = init_network(&critic_spec, derive(b, stream::CRITIC_INIT, 1)).unwrap();
        let hp = RlHyperparams {
            gamma: r.random_range(0.0..0.999),
            ..RlHyperparams::default()
        };
        let items: Vec<Transition> = (0..r.random_range(1..16))
            .map(|_| Transition {
                observation: (0..obs).map(|_| r.random_range(-1.0..1.0)).collect(),
                action: (0..act).map(|_| r.random_range(-0.7..0.7)).collect(),
                reward: r.random_range(-50.0..50.0),
                next_observation: (0..obs).map(|_| r.random_range(-1.0..1.0)).collect(),
                done: r.random_bool(0.3),
            })
            .collect();
        let batch: Vec<&Transition> = items.iter().collect();
        let seed = r.random::<u64>();
        let y = td3_critic_target(&batch, &target_actor, [&c1, &c2], &hp, seed).unwrap();
        let next_actions = smoothed_target_actions(&batch, &target_actor, &hp, seed).unwrap();
        for critic in [&c1, &c2] {
            let single = bootstrap_targets(
                &batch,
                &next_q_values(&batch, &next_actions, critic).unwrap(),
                hp.gamma,
            );
            violations += y.iter().zip(&single).filter(|(a, b)| a > b).count();
        }
        for (t, yi) in items.iter().zip(&y) {
            if t.done {
                done_items += 1;
                done_mismatch += (*yi != t.reward) as usize;
            }
        }
    }
    check(
        3,
        violations == 0 && done_mismatch == 0,
        format!("1000 batches: {violations} min-backup violations, {done_mismatch}/{done_items} terminal targets differ from reward"),
    );
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_4_cem_oracle() {
    let start = Instant::now();
    let eps = 1e-3;
    let state = CemState::new(vec![0.0], 1.0, eps, 4, 2).unwrap();
    let samples = vec![vec![-1.0], vec![4.0], vec![2.0], vec![0.5]];
    let fitness = [0.0, 3.0, 5.0, 1.0];
    let next = cem_update(&state, &samples, &fitness).unwrap();
    let w = elite_weights(2);
    let weights_ok = (w[0] - 0.7304).abs() < 1e-3 && (w[1] - 0.2696).abs() < 1e-3;
    let hand_ok =
        (next.mean[0] - 2.539).abs() < 1e-3 && (next.variance[0] - (7.235 + eps)).abs() < 1e-3;

    let mut r = rng(404);
    let base_state = CemState::new(vec![0.3, -0.2], 0.5, eps, 8, 4).unwrap();
    let pop: Vec<Vec<f64>> = (0..8)
        .map(|_| vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)])
        .collect();
    let fit: Vec<f64> = (0..8).map(|i| (i as f64 * 1.37).sin() * 10.0).collect();
    let reference = cem_update(&base_state, &pop, &fit).unwrap();
    let mut perm_worst: f64 = 0.0;
    for _ in 0..100 {
        let mut idx: Vec<usize> = (0..8).collect();
        idx.shuffle(&mut r);
        let p: Vec<Vec<f64>> = idx.iter().map(|&i| pop[i].clone()).collect();
        let f: Vec<f64> = idx.iter().map(|&i| fit[i]).collect();
        let shuffled = cem_update(&base_state, &p, &f).unwrap();
        for d in 0..2 {
            perm_worst = perm_worst
                .max((shuffled.mean[d] - reference.mean[d]).abs())
                .max((shuffled.variance[d] - reference.variance[d]).abs());
        }
    }

    let sphere = CemState::new(vec![1.0; 5], 1.0, 1e-8, 32, 16).unwrap();
    let out =
        cem::cem_solve_toy(|z| -z.iter().map(|x| x * x).sum::<f64>(), sphere, 60, 2024).unwrap();
    let norm = out.state.mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    let elapsed = start.elapsed();
    check(
        4,
        weights_ok && hand_ok && perm_worst < 1e-12 && norm < 1e-2 && elapsed < Duration::from_secs(30),
        format!(
            "mu' = {:.4}, var' = {:.4}; permutation drift {perm_worst:.1e}; sphere |mu| = {norm:.2e} after 60 generations; {elapsed:.2?}",
            next.mean[0], next.variance[0]
        ),
    );
}

// ---------------------------------------------------------------- 5

fn tiny_config(algorithm: Algorithm, seed: u64) -> RunConfig {
    let mut c = RunConfig {
        algorithm,
        seed,
        budget: 3,
        ..Default::default()
    };
    c.env.t_max = 100;
    c.train.warmup_steps = 50;
    c.rl.batch_size = 32;
    c.cem.population_size = 4;
    c.cem.elite_count = 2;
    c
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn criterion_5_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    for algorithm in [
        Algorithm::Ddpg,
        Algorithm::Td3,
        Algorithm::CemDdpg,
        Algorithm::CemTd3,
    ] {
        let cfg = tiny_config(algorithm, 42);
        let a = dir.path().join(format!("{algorithm}_a"));
        let b = dir.path().join(format!("{algorithm}_b"));
        harness::train(&cfg, &a).unwrap();
        harness::train(&cfg, &b).unwrap();
        for file in [
            "metrics.csv",
            "final_checkpoint.json",
            "best_checkpoint.json",
        ] {
            if read(&a.join(file)) != read(&b.join(file)) {
                mismatches.push(format!("{algorithm}/{file}"));
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        5,
        mismatches.is_empty() && elapsed < Duration::from_secs(300),
        format!("4 algorithms x 2 runs, differing artifacts: {mismatches:?}; {elapsed:.2?}"),
    );
}

// ---------------------------------------------------------------- 6

#[test]
fn criterion_6_physics_sanity() {
    let cfg = RobotConfig::default();
    let stand = cfg.stand_height();
    let terrain = make_terrain(TerrainKind::Flat, 0, 0.0, 0.25).unwrap();
    let mut sim = QuadrupedEnv::new(terrain, cfg.clone(), Normalizers::default(), 1000).unwrap();
    sim.reset(6).unwrap();
    let nominal = cfg.nominal_joints().to_vec();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut negative_normals = 0;
    let mut survived = 0;
    loop {
        let result = sim.step_full(&nominal).unwrap().clone();
        let s = sim.state().unwrap();
        lo = lo.min(s.torso_position.z);
        hi = hi.max(s.torso_position.z);
        negative_normals += s.foot_forces.iter().filter(|f| f[2] < 0.0).count();
        survived += 1;
        if result.done {
            break;
        }
    }
    let height_ok = lo >= 0.95 * stand && hi <= 1.05 * stand;

    let rough = make_terrain(TerrainKind::Rough, 9, 0.03, 0.25).unwrap();
    let mut r = rng(606);
    let mut cone_violations = 0;
    let mut contacts = 0;
    while contacts < 100_000 {
        let pos: [Vector3<f64>; 4] = std::array::from_fn(|_| {
            Vector3::new(
                r.random_range(-1.0..30.0),
                r.random_range(-2.0..2.0),
                r.random_range(-0.06..0.02),
            )
        });
        let vel: [Vector3<f64>; 4] = std::array::from_fn(|_| {
            Vector3::new(
                r.random_range(-4.0..4.0),
                r.random_range(-4.0..4.0),
                r.random_range(-4.0..4.0),
            )
        });
        for f in contact_forces(&pos, &vel, &rough, &cfg) {
            if f[2] > 0.0 {
                contacts += 1;
            }
            if f[2] < 0.0 || f[0].hypot(f[1]) > cfg.friction_coefficient * f[2] * (1.0 + 1e-12) {
                cone_violations += 1;
            }
        }
    }
    check(
        6,
        survived == 1000 && height_ok && negative_normals == 0 && cone_violations == 0,
        format!(
            "survived {survived}/1000 steps, height in [{:.4}, {:.4}] vs stand {stand:.4} (+-5%); {negative_normals} negative normals; {cone_violations} cone violations in {contacts} contacts",
            lo, hi
        ),
    );
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_7_learning_sanity() {
    let mass = SlidingMassConfig::default();
    let optimal = SlidingMass::new(mass).optimal_return();
    let goal = 0.8 * optimal;
    let seed = 7;

    let start = Instant::now();
    let hp = RlHyperparams {
        batch_size: 64,
        ..RlHyperparams::default()
    };
    let mut learner = DdpgLearner::new(2, 1, &[32, 32], hp.clone(), seed).unwrap();
    let mut buffer = ReplayBuffer::new(100_000, 2, 1).unwrap();
    let mut sim = SlidingMass::new(mass);
    let warmup = 500;
    let mut total = 0u64;
    let mut ddpg_hit = None;
    let mut ddpg_best = f64::NEG_INFINITY;
    for episode in 0..200u64 {
        let mut obs = sim.reset(episode).unwrap();
        loop {
            let action = if total < warmup {
                random_action(
                    1,
                    hp.action_bound,
                    derive(seed, stream::WARMUP_ACTION, total),
                )
            } else {
                let s = derive(seed, stream::EXPLORATION, total);
                exploration_action(
                    learner.actor(),
                    &obs,
                    hp.exploration_sigma,
                    hp.action_bound,
                    s,
                )
                .unwrap()
            };
            let step = sim.step(&action).unwrap();
            total += 1;
            buffer
                .push(Transition {
                    observation: obs,
                    action,
                    reward: step.reward,
                    next_observation: step.observation.clone(),
                    done: step.terminal,
                })
                .unwrap();
            if total > warmup {
                learner
                    .train_step(&buffer, derive(seed, stream::TRAIN_STEP, total))
                    .unwrap();
            }
            if step.done {
                break;
            }
            obs = step.observation;
        }
        if (episode + 1) % 10 == 0 {
            let ret = evaluate_policy(learner.actor(), &mut SlidingMass::new(mass), 0)
                .unwrap()
                .episode_return;
            ddpg_best = ddpg_best.max(ret);
            if ret >= goal {
                ddpg_hit = Some(episode + 1);
                break;
            }
        }
    }
    let ddpg_time = start.elapsed();

    let start = Instant::now();
    let spec = NetworkSpec::actor(2, 1, &[32, 32], 0.7).unwrap();
    let init = init_network(&spec, derive(seed, stream::ACTOR_INIT, 0)).unwrap();
    let initial_return = evaluate_policy(&init, &mut SlidingMass::new(mass), 0)
        .unwrap()
        .episode_return;
    let config = CemConfig {
        grad_steps: Some(0),
        sigma_init: 1e-2,
        noise_init: 1e-2,
        ..CemConfig::default()
    };
    let mut state = config.initial_state(init.values().to_vec()).unwrap();
    let mut cem_buffer = ReplayBuffer::new(1_000_000, 2, 1).unwrap();
    let factory = |_s: u64| -> erl_quadruped::Result<Box<dyn Environment>> {
        Ok(Box::new(SlidingMass::new(mass)))
    };
    let mut cem_hit = None;
    let mut cem_best = f64::NEG_INFINITY;
    for g in 0..100u64 {
        let out = cem_rl_generation(
            &state,
            None,
            &spec,
            &factory,
            &mut cem_buffer,
            &config,
            0,
            derive(seed, stream::GENERATION, g),
        )
        .unwrap();
        state = out.state;
        let mean = ParamVector::unflatten(&spec, state.mean.clone()).unwrap();
        let ret = evaluate_policy(&mean, &mut SlidingMass::new(mass), 0)
            .unwrap()
            .episode_return;
        cem_best = cem_best.max(ret);
        if ret >= goal {
            cem_hit = Some(g + 1);
            break;
        }
    }
    let cem_time = start.elapsed();
    check(
        7,
        ddpg_hit.is_some()
            && cem_hit.is_some()
            && initial_return < goal
            && ddpg_time < Duration::from_secs(600)
            && cem_time < Duration::from_secs(600),
        format!(
            "optimal {optimal:.1}, goal {goal:.1}, untrained actor {initial_return:.1}; DDPG reached it at episode {ddpg_hit:?} (best {ddpg_best:.1}, {ddpg_time:.2?}); CEM at generation {cem_hit:?} (best {cem_best:.1}, {cem_time:.2?})"
        ),
    );
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_8_protocol_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(Algorithm::Td3, 8);
    cfg.budget = 1;
    cfg.env.t_max = 50;
    let run_dir = dir.path().join("run");
    harness::train(&cfg, &run_dir).unwrap();
    let ckpt_path = run_dir.join("final_checkpoint.json");
    let csv_path = dir.path().join("eval.csv");
    let code = cli::run([
        "erlq",
        "eval",
        "--checkpoint",
        ckpt_path.to_str().unwrap(),
        "--seed",
        "77",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<f64> = lines[1]
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    let trials = &row[4..];

    let ckpt = harness::load_checkpoint(&ckpt_path).unwrap();
    let independent: Vec<f64> = (0..10u64)
        .map(|i| {
            let terrain = make_terrain(TerrainKind::Flat, 77 + i, 0.0, cfg.env.cell_size).unwrap();
            let mut sim =
                QuadrupedEnv::new(terrain, cfg.robot.clone(), cfg.normalizers, cfg.env.t_max)
                    .unwrap();
            evaluate_policy(&ckpt.actor, &mut sim, 77 + i)
                .unwrap()
                .episode_return
        })
        .collect();
    let ten_trials = header.len() == 15 && header[14] == "trial_10" && trials.len() == 10;
    let noise_free = trials == independent.as_slice();

    let out = dir.path().join("transfer");
    let code_t = cli::run([
        "erlq",
        "transfer",
        "--checkpoint",
        ckpt_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let table = std::fs::read_to_string(out.join("transfer.md")).unwrap();
    let columns: Vec<String> = table
        .lines()
        .next()
        .unwrap()
        .split('|')
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    let columns_ok = columns == ["Terrain", "Mean", "Std. Dev.", "Median", "Best"];

    let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let stats_ok = s.mean == 2.5
        && s.median == 2.5
        && s.best == 4.0
        && s.std == (5.0f64 / 3.0).sqrt()
        && (s.std - 1.2910).abs() < 5e-5;
    check(
        8,
        code == 0 && code_t == 0 && ten_trials && noise_free && columns_ok && stats_ok,
        format!(
            "eval exit {code}, {} trials by default, noise-free match {noise_free}; transfer exit {code_t}, columns {columns:?}; summarize [1,2,3,4] = ({}, {:.4}, {}, {})",
            trials.len(),
            s.mean,
            s.std,
            s.median,
            s.best
        ),
    );
}

// ---------------------------------------------------------------- 9

/// Medium budget: 30 CEM-TD3 generations of 6 individuals against TD3 with
/// the same number of training episodes (180), T_max 200, 10 rough trials.
fn ordering_config(algorithm: Algorithm, seed: u64) -> RunConfig {
    let mut c = RunConfig {
        algorithm,
        seed,
        ..Default::default()
    };
    c.env.t_max = 200;
    c.train.hidden = vec![32, 32];
    c.train.warmup_steps = 1000;
    c.rl.batch_size = 64;
    c.cem.population_size = 6;
    c.cem.elite_count = 3;
    c.cem.grad_step_cap = 200;
    c.budget = if algorithm.is_cem() { 30 } else { 30 * 6 };
    c
}

#[test]
fn criterion_9_qualitative_ordering() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..3u64 {
        let mut rough_means = Vec::new();
        for algorithm in [Algorithm::CemTd3, Algorithm::Td3] {
            let cfg = ordering_config(algorithm, seed);
            let out =
                harness::train(&cfg, &dir.path().join(format!("{algorithm}_{seed}"))).unwrap();
            let report =
                harness::evaluate(&out.final_checkpoint, TerrainKind::Rough, 10, 1000, None)
                    .unwrap();
            rough_means.push(report.mean);
        }
        if rough_means[0] > rough_means[1] {
            wins += 1;
        }
        lines.push(format!(
            "seed {seed}: CEM-TD3 {:.1} vs TD3 {:.1}",
            rough_means[0], rough_means[1]
        ));
    }
    let pass = wins >= 2;
    println!(
        "criterion 9: {} - CEM-TD3 ahead on rough terrain for {wins}/3 seeds ({}); {:.1?}",
        if pass { "PASS" } else { "SOFT-FAIL" },
        lines.join("; "),
        start.elapsed()
    );
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_end_to_end() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.cfg");
    std::fs::write(
        &config,
        "budget = 2\nenv.t_max = 60\ntrain.warmup_steps = 30\nrl.batch_size = 16\ntrain.hidden = [16, 16]\n",
    )
    .unwrap();
    let run = dir.path().join("run");
    let p = |x: &Path| x.to_str().unwrap().to_string();
    let train_code = cli::run([
        "erlq",
        "train",
        "--algo",
        "td3",
        "--config",
        &p(&config),
        "--seed",
        "10",
        "--out",
        &p(&run),
    ]);
    let ckpt = run.join("final_checkpoint.json");
    let transfer_code = cli::run(["erlq", "transfer", "--checkpoint", &p(&ckpt), "--seed", "3"]);
    let svg = dir.path().join("curve.svg");
    let plot_code = cli::run([
        "erlq",
        "plot",
        "--metrics",
        &p(&run.join("metrics.csv")),
        "--out",
        &p(&svg),
    ]);

    let report = std::fs::read_to_string(run.join("transfer.csv")).unwrap_or_default();
    let rows: Vec<&str> = report.lines().collect();
    let two_reports =
        rows.len() == 3 && rows[1].starts_with("flat,") && rows[2].starts_with("rough,");
    let svg_ok = std::fs::read_to_string(&svg)
        .map(|s| s.starts_with("<svg"))
        .unwrap_or(false);
    let elapsed = start.elapsed();
    check(
        10,
        train_code == 0
            && transfer_code == 0
            && plot_code == 0
            && ckpt.exists()
            && two_reports
            && svg_ok
            && elapsed < Duration::from_secs(120),
        format!(
            "exit codes train {train_code} / transfer {transfer_code} / plot {plot_code}; checkpoint {}, two reports {two_reports}, svg {svg_ok}; {elapsed:.2?}",
            ckpt.exists()
        ),
    );
}
