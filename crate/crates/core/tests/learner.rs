use rewardforge_core::dsl::compile;
use rewardforge_core::envs::{EnvId, EnvModel};
use rewardforge_core::learner::{evaluate_policy, train, LearnerConfig, TrainingFault};
use rewardforge_core::rng::SeedRng;

#[test]
fn random_policy_rarely_solves_mountaincar() {
    let mut env = EnvModel::new(EnvId::MountainCar);
    let mut rng = SeedRng::new(2024);
    let mut successes = 0;
    for seed in 0..100 {
        env.reset(seed);
        loop {
            let step = env.step(rng.below(3) as u32).unwrap();
            if step.terminated || step.truncated {
                successes += usize::from(EnvId::MountainCar.is_success(step.cause, env.steps()));
                break;
            }
        }
    }
    assert!(successes as f64 / 100.0 <= 0.05);
}

#[test]
fn division_by_cart_position_faults_or_completes() {
    let reward = compile("return 1.0/cart_position;", &EnvId::CartPole.observation_spec()).unwrap();
    let config = LearnerConfig { training_episodes: 50, seed: 8, ..LearnerConfig::default() };
    let (_, report) = train(EnvId::CartPole, &reward, &config).unwrap();
    match report.fault {
        None => assert_eq!(report.completed_episodes(), 50),
        Some(TrainingFault::RewardFault { step_index, .. }) => assert!(step_index < report.total_steps),
        Some(other) => panic!("unexpected fault {other:?}"),
    }
}

#[test]
fn training_report_is_byte_identical_across_runs() {
    let reward = compile("return 1.0 - abs(pole_angle)/0.2095;", &EnvId::CartPole.observation_spec()).unwrap();
    let config = LearnerConfig { training_episodes: 100, total_step_budget: Some(5000), seed: 77, ..LearnerConfig::default() };
    let a = train(EnvId::CartPole, &reward, &config).unwrap().1;
    let b = train(EnvId::CartPole, &reward, &config).unwrap().1;
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

/// Shaped reward, 600 episodes, seeds 1..=10: the greedy success rate
/// averages at least 0.6.
#[test]
fn shaped_reward_learns_cartpole() {
    let reward = compile(
        "return 1.0 - abs(pole_angle)/0.2095 - 0.5*(abs(cart_position)/2.4);",
        &EnvId::CartPole.observation_spec(),
    )
    .unwrap();
    let mut total = 0.0;
    for seed in 1..=10 {
        let config = LearnerConfig { training_episodes: 600, seed, ..LearnerConfig::default() };
        let (policy, report) = train(EnvId::CartPole, &reward, &config).unwrap();
        assert!(report.fault.is_none());
        let eval = evaluate_policy(EnvId::CartPole, &policy, Some(&reward), config.eval_episodes, seed + 1_000_000, config.r_max);
        println!("seed {seed}: success rate {:.2}", eval.success_rate);
        total += eval.success_rate;
    }
    let mean = total / 10.0;
    println!("mean success rate {mean:.3}");
    assert!(mean >= 0.6, "mean success rate {mean}");
}
